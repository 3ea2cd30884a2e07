//! Max-shifted accumulation of `Σ exp(z_i)` for complex exponents.
//!
//! Mixture reductions routinely combine terms whose log-magnitudes span
//! hundreds of nats, so nothing is ever exponentiated without first
//! subtracting the running maximum real part.

use num_complex::Complex64;

/// Represents `exp(shift) * acc`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSum {
    shift: f64,
    acc: Complex64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::ZERO
    }
}

impl LogSum {
    pub const ZERO: LogSum = LogSum {
        shift: f64::NEG_INFINITY,
        acc: Complex64 { re: 0.0, im: 0.0 },
    };

    pub fn push(&mut self, z: Complex64) {
        if z.re == f64::NEG_INFINITY {
            return;
        }
        if z.re > self.shift {
            if self.shift.is_finite() {
                self.acc *= (self.shift - z.re).exp();
            }
            self.shift = z.re;
        }
        self.acc += Complex64::new(0.0, z.im).exp() * (z.re - self.shift).exp();
    }

    pub fn merge(self, other: LogSum) -> LogSum {
        if other.shift == f64::NEG_INFINITY {
            return self;
        }
        if self.shift == f64::NEG_INFINITY {
            return other;
        }
        let (hi, lo) = if self.shift >= other.shift { (self, other) } else { (other, self) };
        LogSum {
            shift: hi.shift,
            acc: hi.acc + lo.acc * (lo.shift - hi.shift).exp(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.shift == f64::NEG_INFINITY || self.acc == Complex64::new(0.0, 0.0)
    }

    /// Magnitude of the accumulator relative to its shift; tiny values signal cancellation.
    pub fn relative_magnitude(&self) -> f64 {
        self.acc.norm()
    }

    /// Principal log of the total.
    pub fn ln(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(f64::NEG_INFINITY, 0.0);
        }
        self.acc.ln() + self.shift
    }

    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.acc * self.shift.exp()
    }

    /// `self / den`, computed without leaving log space for the shared scale.
    pub fn ratio(&self, den: &LogSum) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        self.acc / den.acc * (self.shift - den.shift).exp()
    }
}

/// Deterministic pairwise reduction: the tree shape depends only on `items.len()`.
pub fn tree_reduce<T: Copy>(items: &[T], zero: T, merge: impl Fn(T, T) -> T + Copy) -> T {
    match items.len() {
        0 => zero,
        1 => items[0],
        n => {
            let (l, r) = items.split_at(n / 2);
            merge(tree_reduce(l, zero, merge), tree_reduce(r, zero, merge))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_across_wide_exponent_range() {
        let mut s = LogSum::ZERO;
        s.push(Complex64::new(-800.0, 0.0));
        s.push(Complex64::new(-800.0 + 2f64.ln(), 0.0));
        let l = s.ln();
        assert!((l.re - (-800.0 + 3f64.ln())).abs() < 1e-12);
        assert!(l.im.abs() < 1e-15);
    }

    #[test]
    fn phases_cancel() {
        let mut s = LogSum::ZERO;
        s.push(Complex64::new(5.0, 0.0));
        s.push(Complex64::new(5.0, std::f64::consts::PI));
        assert!(s.relative_magnitude() < 1e-15);
    }

    #[test]
    fn merge_matches_sequential_push() {
        let zs: Vec<Complex64> = (0..40)
            .map(|k| Complex64::new(-(k as f64) * 3.7 + 20.0 * ((k * 7) % 5) as f64, k as f64 * 0.3))
            .collect();
        let mut seq = LogSum::ZERO;
        zs.iter().for_each(|&z| seq.push(z));
        let parts: Vec<LogSum> = zs
            .chunks(7)
            .map(|c| {
                let mut s = LogSum::ZERO;
                c.iter().for_each(|&z| s.push(z));
                s
            })
            .collect();
        let tree = tree_reduce(&parts, LogSum::ZERO, LogSum::merge);
        let (a, b) = (seq.ln(), tree.ln());
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert!(LogSum::ZERO.is_zero());
        assert_eq!(LogSum::ZERO.value(), Complex64::new(0.0, 0.0));
    }
}
