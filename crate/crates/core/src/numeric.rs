//! Small numeric helpers shared by the operator and energy code.

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of floats.
pub fn csum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Compensated dot product.
pub fn cdot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    csum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm2(a: &[f64]) -> f64 {
    cdot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `|x|^e` with the convention `0^e = 0` for every exponent.
///
/// Callers only use this where the accompanying factor also vanishes, so the
/// convention matches the limit of the product.
#[inline]
pub fn abs_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e)
    }
}

/// `|x|^(e-2) x`, the derivative of `|x|^e / e`; continuous for `e > 1`.
#[inline]
pub fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e - 1.0)
    }
}

/// Relative discrepancy between two evaluations of the same quantity, scaled
/// by `scale` (typically the sum of absolute magnitudes of the terms involved).
pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return 0.0;
    }
    let denom = scale.max(a.abs()).max(b.abs());
    if denom == 0.0 {
        f64::INFINITY
    } else {
        diff / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(csum(xs), 2.0);
    }

    #[test]
    fn pow_conventions() {
        assert_eq!(abs_pow(0.0, -0.5), 0.0);
        assert_eq!(abs_pow(-2.0, 2.0), 4.0);
        assert_eq!(signed_pow(-2.0, 3.0), -4.0);
        assert_eq!(signed_pow(0.0, 1.5), 0.0);
    }

    #[test]
    fn rel_err_zero_when_equal() {
        assert_eq!(rel_err(0.0, 0.0, 0.0), 0.0);
        assert!((rel_err(1.0, 1.1, 0.0) - 0.1 / 1.1).abs() < 1e-15);
    }
}
