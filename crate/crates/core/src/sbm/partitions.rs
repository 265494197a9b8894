//! Restricted integer partitions `q(m, n)`: the number of partitions of `m`
//! into at most `n` parts, via `q(m, n) = q(m, n - 1) + q(m - n, n)`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::scalar::Scalar;

/// Exact memoised table of `q(m, n)` for `m <= max_m`, `n <= max_n`.
#[derive(Debug, Clone)]
pub struct PartitionCountTable {
    max_m: usize,
    max_n: usize,
    // column-major: values[n * (max_m + 1) + m]
    values: Vec<BigUint>,
}

impl PartitionCountTable {
    pub fn new(max_m: usize, max_n: usize) -> Self {
        let stride = max_m + 1;
        let mut values = vec![BigUint::zero(); stride * (max_n + 1)];
        values[0] = BigUint::one();
        for n in 1..=max_n {
            for m in 0..=max_m {
                let mut v = values[(n - 1) * stride + m].clone();
                if m >= n {
                    v += &values[n * stride + m - n];
                }
                values[n * stride + m] = v;
            }
        }
        Self {
            max_m,
            max_n,
            values,
        }
    }

    /// Panics outside the tabulated range.
    pub fn get(&self, m: usize, n: usize) -> &BigUint {
        assert!(m <= self.max_m && n <= self.max_n, "q({m}, {n}) outside table");
        &self.values[n * (self.max_m + 1) + m]
    }
}

/// Exact `q(m, n)`.
pub fn count_partitions(m: usize, n: usize) -> BigUint {
    let n = n.min(m);
    // single rolling column over n
    let mut col = vec![BigUint::zero(); m + 1];
    col[0] = BigUint::one();
    for part in 1..=n {
        for j in part..=m {
            let add = col[j - part].clone();
            col[j] += add;
        }
    }
    if n == 0 && m > 0 {
        BigUint::zero()
    } else {
        col[m].clone()
    }
}

/// Natural log of an exact count.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln q(m, n)` for `m <= max_m`, computed exactly and stored as logs.
///
/// Uses `q(m, n) = q(m, m)` for `n > m`, so the table is only as wide as
/// `min(max_n, max_m)`.
#[derive(Debug, Clone)]
pub struct LogPartitionTable<F> {
    max_m: usize,
    width: usize,
    // row-major: values[m * (width + 1) + n]
    values: Vec<F>,
}

impl<F: Scalar> LogPartitionTable<F> {
    pub fn new(max_m: usize, max_n: usize) -> Self {
        let width = max_n.min(max_m);
        let stride = width + 1;
        let mut values = vec![F::neg_infinity(); (max_m + 1) * stride];
        let mut col = vec![BigUint::zero(); max_m + 1];
        col[0] = BigUint::one();
        values[0] = F::zero();
        for n in 1..=width {
            for m in n..=max_m {
                let add = col[m - n].clone();
                col[m] += add;
            }
            for (m, q) in col.iter().enumerate() {
                values[m * stride + n] = F::of(ln_biguint(q));
            }
        }
        Self {
            max_m,
            width,
            values,
        }
    }

    pub fn max_m(&self) -> usize {
        self.max_m
    }

    /// `ln q(m, n)`; `-inf` when `q = 0`. Panics if `m > max_m`.
    #[inline]
    pub fn ln_q(&self, m: u64, n: usize) -> F {
        let m = m as usize;
        let n = n.min(m);
        assert!(
            m <= self.max_m && n <= self.width,
            "ln q({m}, {n}) outside table"
        );
        self.values[m * (self.width + 1) + n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(count_partitions(4, 2), BigUint::from(3u32));
        assert_eq!(count_partitions(5, 5), BigUint::from(7u32));
        assert_eq!(count_partitions(0, 0), BigUint::one());
        assert_eq!(count_partitions(3, 0), BigUint::zero());
        for m in 0..20 {
            assert_eq!(count_partitions(m, 1), BigUint::one());
        }
        // p(100)
        assert_eq!(
            count_partitions(100, 100),
            BigUint::parse_bytes(b"190569292", 10).unwrap()
        );
    }

    #[test]
    fn table_matches_free_function() {
        let t = PartitionCountTable::new(25, 25);
        for m in 0..=25 {
            for n in 0..=25 {
                assert_eq!(t.get(m, n), &count_partitions(m, n), "q({m},{n})");
            }
        }
    }

    #[test]
    fn log_table_matches_exact() {
        let t = LogPartitionTable::<f64>::new(60, 10);
        for m in 0..=60 {
            for n in (0..=15).filter(|&n| n.min(m) <= 10) {
                let exact = ln_biguint(&count_partitions(m, n));
                let got = t.ln_q(m as u64, n);
                if exact.is_infinite() {
                    assert!(got.is_infinite() && got < 0.0, "q({m},{n})");
                } else {
                    assert!((got - exact).abs() < 1e-12, "q({m},{n}): {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn ln_of_large_counts() {
        let p = count_partitions(1000, 1000);
        // p(1000) = 24061467864032622473692149727991 ~ 2.406e31
        let expected = 24061467864032622473692149727991f64.ln();
        assert!((ln_biguint(&p) - expected).abs() < 1e-12);
    }
}
