//! Periodic phase-space grid on `[-L, L)` and sampled fields.
//!
//! Nodes `x_j = -L + j dx`, `dx = 2L / N`; frequencies `xi_m = pi k / L` with
//! `k = m` for `m < N/2` and `k = m - N` otherwise. Spectra are stored in the
//! physical convention `u_hat_m = sum_j u_j exp(-i x_j xi_m)`, so that
//! `dx * u_hat` approximates the continuous transform.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::FftPlan;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SymbolGrid2D {
    half_length: f64,
    plan: Arc<FftPlan>,
}

impl PartialEq for SymbolGrid2D {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.n() == other.n()
    }
}

impl SymbolGrid2D {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::Resolution("half-length must be positive".into()));
        }
        let plan = FftPlan::new(n).map_err(|_| Error::Resolution(alloc::format!("N = {n} must be a power of two")))?;
        Ok(Self { half_length, plan: Arc::new(plan) })
    }

    /// Smallest power-of-two grid on `[-L, L)` whose largest frequency is at
    /// least `oversampling * 2 n_target`.
    pub fn for_packet(half_length: f64, n_target: f64, oversampling: f64) -> Result<Self> {
        if !(n_target > 0.0 && oversampling >= 1.0) {
            return Err(Error::Resolution("target frequency and oversampling must be positive".into()));
        }
        let need = oversampling * 2.0 * n_target;
        let mut n = 2usize;
        while PI * (n / 2) as f64 / half_length < need {
            n *= 2;
            if n > 1 << 26 {
                return Err(Error::Resource(alloc::format!("grid for frequency {need} exceeds 2^26 nodes")));
            }
        }
        Self::new(half_length, n)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.plan.len()
    }

    #[inline]
    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n() as f64
    }

    #[inline]
    pub fn dxi(&self) -> f64 {
        PI / self.half_length
    }

    /// Largest representable `|xi|`.
    pub fn xi_max(&self) -> f64 {
        self.dxi() * (self.n() / 2) as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + self.dx() * j as f64
    }

    #[inline]
    pub fn freq_index(&self, m: usize) -> i64 {
        let n = self.n();
        if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    }

    #[inline]
    pub fn xi(&self, m: usize) -> f64 {
        self.dxi() * self.freq_index(m) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.x(j)).collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n()).map(|m| self.xi(m)).collect()
    }

    pub fn plan(&self) -> &FftPlan {
        &self.plan
    }

    /// `exp(i x_j xi_m)`, exact up to the root table.
    #[inline]
    pub fn phase(&self, j: usize, m: usize) -> Complex64 {
        let r = self.plan.root(j.wrapping_mul(m));
        if m & 1 == 1 {
            -r
        } else {
            r
        }
    }

    /// Physical spectrum of nodal values.
    pub fn spectrum(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut s = values.to_vec();
        self.plan.forward(&mut s);
        for (m, v) in s.iter_mut().enumerate() {
            if m & 1 == 1 {
                *v = -*v;
            }
        }
        s
    }

    /// Nodal values of a physical spectrum.
    pub fn values(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(m, s)| if m & 1 == 1 { -*s } else { *s })
            .collect();
        self.plan.inverse(&mut v);
        v
    }

    /// Node indices `j` with `x_j` in `[lo, hi]`, clipped to the grid.
    pub fn x_range(&self, lo: f64, hi: f64) -> core::ops::Range<usize> {
        let a = libm::ceil((lo + self.half_length) / self.dx()).max(0.0);
        let b = libm::floor((hi + self.half_length) / self.dx()).min(self.n() as f64 - 1.0);
        if b < a {
            0..0
        } else {
            a as usize..b as usize + 1
        }
    }

    /// Storage indices `m` with `xi_m` in `[lo, hi]`, in increasing `xi`.
    pub fn xi_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        let half = (self.n() / 2) as f64;
        let a = libm::ceil(lo / self.dxi()).max(-half);
        let b = libm::floor(hi / self.dxi()).min(half - 1.0);
        if b < a {
            return Vec::new();
        }
        let n = self.n() as i64;
        (a as i64..=b as i64).map(|k| k.rem_euclid(n) as usize).collect()
    }

    /// `sqrt(dx sum |u_j|^2)`.
    pub fn l2_norm(&self, values: &[Complex64]) -> f64 {
        libm::sqrt(self.dx() * values.iter().map(|v| v.norm_sqr()).sum::<f64>())
    }
}

/// A field sampled at time `t`, held in both representations.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<Complex64>,
    pub spectrum: Vec<Complex64>,
}

impl FieldState {
    pub fn from_values(grid: &SymbolGrid2D, values: Vec<Complex64>, t: f64) -> Result<Self> {
        check_len(grid, values.len())?;
        let spectrum = grid.spectrum(&values);
        Ok(Self { t, values, spectrum })
    }

    pub fn from_spectrum(grid: &SymbolGrid2D, spectrum: Vec<Complex64>, t: f64) -> Result<Self> {
        check_len(grid, spectrum.len())?;
        let values = grid.values(&spectrum);
        Ok(Self { t, values, spectrum })
    }

    pub fn from_fn<F: FnMut(f64) -> Complex64>(grid: &SymbolGrid2D, mut f: F, t: f64) -> Result<Self> {
        let v = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Self::from_values(grid, v, t)
    }

    pub fn norm(&self, grid: &SymbolGrid2D) -> f64 {
        grid.l2_norm(&self.values)
    }

    /// Share of spectral energy with `|xi| > (1 - fraction) xi_max`.
    pub fn high_frequency_share(&self, grid: &SymbolGrid2D, fraction: f64) -> f64 {
        let cut = (1.0 - fraction) * grid.xi_max();
        let mut hi = 0.0;
        let mut all = 0.0;
        for (m, v) in self.spectrum.iter().enumerate() {
            let e = v.norm_sqr();
            all += e;
            if grid.xi(m).abs() > cut {
                hi += e;
            }
        }
        if all == 0.0 {
            0.0
        } else {
            libm::sqrt(hi / all)
        }
    }

    /// Fraction of `|u|^2` mass with `|x| > (1 - margin) L`.
    pub fn boundary_share(&self, grid: &SymbolGrid2D, margin: f64) -> f64 {
        let cut = (1.0 - margin) * grid.half_length();
        let mut edge = 0.0;
        let mut all = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let e = v.norm_sqr();
            all += e;
            if grid.x(j).abs() > cut {
                edge += e;
            }
        }
        if all == 0.0 {
            0.0
        } else {
            edge / all
        }
    }
}

fn check_len(grid: &SymbolGrid2D, len: usize) -> Result<()> {
    if len != grid.n() {
        return Err(Error::Domain(alloc::format!("field has {len} samples, grid has {}", grid.n())));
    }
    Ok(())
}
