//! Deterministic summation: Neumaier-compensated running sums and pairwise
//! (balanced-tree) reduction.

use num_complex::Complex64;

/// Running sum with Kahan–Babuška–Neumaier compensation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

const PAIRWISE_BLOCK: usize = 8;

/// Balanced-tree sum; the result depends only on the slice contents and order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(0.0, |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |a, &b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1_000_000 {
            s.add(1e-16);
        }
        assert!((s.value() - (1.0 + 1e-10)).abs() < 1e-22);
    }

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
        let zs: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x, -x)).collect();
        assert_eq!(pairwise_sum_complex(&zs), Complex64::new(500500.0, -500500.0));
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
