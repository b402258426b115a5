//! In-place radix-2 FFT.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Precomputed roots and bit reversal for a power-of-two length.
#[derive(Debug, Clone, PartialEq)]
pub struct FftPlan {
    n: usize,
    /// `roots[m] = exp(2 pi i m / n)` for `m < n`.
    roots: Vec<Complex64>,
    rev: Vec<u32>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Domain(alloc::format!("FFT length {n} is not a power of two >= 2")));
        }
        let roots = (0..n)
            .map(|m| {
                let (s, c) = libm::sincos(2.0 * PI * m as f64 / n as f64);
                Complex64::new(c, s)
            })
            .collect();
        let bits = n.trailing_zeros();
        let rev = (0..n as u32).map(|i| i.reverse_bits() >> (32 - bits)).collect();
        Ok(Self { n, roots, rev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `exp(2 pi i m / n)`, `m` taken modulo `n`.
    #[inline]
    pub fn root(&self, m: usize) -> Complex64 {
        self.roots[m & (self.n - 1)]
    }

    /// `X_k = sum_j x_j exp(-2 pi i j k / n)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// `x_j = (1 / n) sum_k X_k exp(2 pi i j k / n)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        assert_eq!(data.len(), self.n, "FFT length mismatch");
        for i in 0..self.n {
            let j = self.rev[i] as usize;
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let w = self.roots[k * stride];
                    let w = if forward { w.conj() } else { w };
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let n = 64;
        let x: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(libm::sin(j as f64 * 0.37), libm::cos(j as f64 * 1.3) - 0.2))
            .collect();
        let plan = FftPlan::new(n).unwrap();
        let mut y = x.clone();
        plan.forward(&mut y);
        for (a, b) in y.iter().zip(naive(&x)) {
            assert!((a - b).norm() < 1e-12);
        }
        plan.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(FftPlan::new(12).is_err());
        assert!(FftPlan::new(1).is_err());
        let p = FftPlan::new(2).unwrap();
        let mut v = vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        p.forward(&mut v);
        assert_eq!(v, vec![Complex64::new(3.0, 0.0), Complex64::new(-1.0, 0.0)]);
    }
}
