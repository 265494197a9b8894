use crate::scalar::Scalar;

/// `ln n!` by table lookup, with a Stirling-series fallback past the table.
#[derive(Debug, Clone)]
pub struct LogFactorial<F> {
    table: Vec<F>,
}

impl<F: Scalar> LogFactorial<F> {
    /// Table covering `0..=max`.
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0f64;
        table.push(F::zero());
        for n in 1..=max {
            acc += (n as f64).ln();
            table.push(F::of(acc));
        }
        Self { table }
    }

    pub fn capacity(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn ln_fact(&self, n: u64) -> F {
        match self.table.get(n as usize) {
            Some(&v) => v,
            None => F::of(ln_gamma_stirling(n as f64 + 1.0)),
        }
    }

    /// `ln (2m)!!` with `(2m)!! = 2^m m!`. `x` must be even.
    #[inline]
    pub fn ln_double_fact_even(&self, x: u64) -> F {
        debug_assert!(x % 2 == 0, "double factorial of odd argument {x}");
        let m = x / 2;
        F::of(m as f64) * F::LN_2() + self.ln_fact(m)
    }

    /// `ln C(n, k)`.
    pub fn ln_binomial(&self, n: u64, k: u64) -> F {
        debug_assert!(k <= n);
        self.ln_fact(n) - self.ln_fact(k) - self.ln_fact(n - k)
    }

    /// `ln multiset(n, m) = ln C(n + m - 1, m)`, the number of histograms of
    /// `m` samples over `n` bins.
    pub fn ln_multiset(&self, n: u64, m: u64) -> F {
        if m == 0 {
            return F::zero();
        }
        if n == 0 {
            return F::neg_infinity();
        }
        self.ln_binomial(n + m - 1, m)
    }
}

/// `ln Gamma(z)` for `z >= 10` via the asymptotic series.
fn ln_gamma_stirling(z: f64) -> f64 {
    debug_assert!(z >= 10.0);
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        let t = LogFactorial::<f64>::new(10);
        assert_eq!(t.ln_fact(0), 0.0);
        assert_eq!(t.ln_fact(1), 0.0);
        assert!((t.ln_fact(5) - 120f64.ln()).abs() < 1e-12);
        assert!((t.ln_double_fact_even(4) - 8f64.ln()).abs() < 1e-12);
        assert!((t.ln_multiset(3, 1) - 3f64.ln()).abs() < 1e-12);
        assert_eq!(t.ln_multiset(0, 0), 0.0);
    }

    #[test]
    fn stirling_fallback_matches_table() {
        let big = LogFactorial::<f64>::new(5000);
        let small = LogFactorial::<f64>::new(20);
        for n in [21u64, 50, 100, 1000, 4999] {
            let rel = (big.ln_fact(n) - small.ln_fact(n)).abs() / big.ln_fact(n);
            assert!(rel < 1e-13, "n={n} rel={rel}");
        }
    }
}
