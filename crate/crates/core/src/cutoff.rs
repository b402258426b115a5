//! The plateau cutoff `h` and the packet profile `psi`.
//!
//! `h(y) = 1` for `|y| <= 1/4`, `h(y) = 0` for `|y| >= 1/2`, and on the band
//! `h(y) = G(2 - 4|y|)` with `G(u) = g(u) / (g(u) + g(1 - u))`,
//! `g(u) = exp(-1/u)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::grid::SymbolGrid2D;
use crate::quadrature::simpson;
use crate::{Error, Result};

/// Beyond this `1/u` the factor `exp(-1/u)` is flushed to zero.
const FLUSH: f64 = 1500.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCutoff {
    d_max: usize,
    /// `g^(k)(u) = P_k(1/u) g(u)`; `polys[k]` holds the coefficients of `P_k`.
    polys: Vec<Vec<f64>>,
    binom: Vec<Vec<f64>>,
}

/// Builds `h` with derivative evaluators up to `d_max`.
pub fn build_cutoff(d_max: usize) -> SmoothCutoff {
    SmoothCutoff::new(d_max)
}

impl SmoothCutoff {
    pub fn new(d_max: usize) -> Self {
        let d_max = d_max.max(1);
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..d_max {
            // P_{k+1}(v) = v^2 (P_k(v) - P_k'(v))
            let pk = &polys[k];
            let mut next = vec![0.0; pk.len() + 2];
            for (i, &c) in pk.iter().enumerate() {
                next[i + 2] += c;
                if i > 0 {
                    next[i + 1] -= c * i as f64;
                }
            }
            polys.push(next);
        }
        let mut binom = vec![vec![1.0]];
        for n in 1..=d_max {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = binom[n - 1][k - 1] + binom[n - 1][k];
            }
            binom.push(row);
        }
        Self { d_max, polys, binom }
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    #[inline]
    pub fn value(&self, y: f64) -> f64 {
        let a = y.abs();
        if a <= 0.25 {
            1.0
        } else if a >= 0.5 {
            0.0
        } else {
            let u = 2.0 - 4.0 * a;
            let g1 = glue(u);
            let g2 = glue(1.0 - u);
            g1 / (g1 + g2)
        }
    }

    pub fn derivative(&self, y: f64, order: usize) -> Result<f64> {
        if order > self.d_max {
            return Err(Error::Order { requested: order, available: self.d_max });
        }
        let mut out = [0.0; 32];
        if order < out.len() {
            self.derivatives_into(y, &mut out[..=order]);
            Ok(out[order])
        } else {
            let mut v = vec![0.0; order + 1];
            self.derivatives_into(y, &mut v);
            Ok(v[order])
        }
    }

    /// Fills `out[k] = h^(k)(y)` for `k < out.len()`; `out.len() <= d_max + 1`.
    pub fn derivatives_into(&self, y: f64, out: &mut [f64]) {
        let kmax = out.len();
        assert!(kmax <= self.d_max + 1, "derivative order above d_max");
        if kmax == 0 {
            return;
        }
        let a = y.abs();
        out.iter_mut().for_each(|v| *v = 0.0);
        if a <= 0.25 {
            out[0] = 1.0;
            return;
        }
        if a >= 0.5 {
            return;
        }
        let u = 2.0 - 4.0 * a;
        let mut gd = [0.0; 32];
        let mut heap;
        let gvals: &mut [f64] = if kmax <= 32 {
            &mut gd[..kmax]
        } else {
            heap = vec![0.0; kmax];
            &mut heap
        };
        self.glue_quotient(u, gvals);
        // h^(k)(y) = (-4 sgn y)^k G^(k)(u)
        let step = if y > 0.0 { -4.0 } else { 4.0 };
        let mut scale = 1.0;
        for k in 0..kmax {
            out[k] = scale * gvals[k];
            scale *= step;
        }
    }

    /// `G^(k)(u)` for `k < out.len()`, `u` in `(0, 1)`.
    fn glue_quotient(&self, u: f64, out: &mut [f64]) {
        let kmax = out.len();
        let mut g1 = vec![0.0; kmax];
        let mut s = vec![0.0; kmax];
        let e1 = glue(u);
        let e2 = glue(1.0 - u);
        let v1 = 1.0 / u;
        let v2 = 1.0 / (1.0 - u);
        let mut sign = 1.0;
        for k in 0..kmax {
            let a = if e1 == 0.0 { 0.0 } else { poly(&self.polys[k], v1) * e1 };
            let b = if e2 == 0.0 { 0.0 } else { sign * poly(&self.polys[k], v2) * e2 };
            g1[k] = a;
            s[k] = a + b;
            sign = -sign;
        }
        for k in 0..kmax {
            let mut acc = g1[k];
            for j in 1..=k {
                acc -= self.binom[k][j] * s[j] * out[k - j];
            }
            out[k] = acc / s[0];
        }
    }

    /// Sampled `sup |h^(k)|` over the transition band.
    pub fn sup_derivative(&self, order: usize) -> Result<f64> {
        if order > self.d_max {
            return Err(Error::Order { requested: order, available: self.d_max });
        }
        let mut buf = vec![0.0; order + 1];
        let mut sup: f64 = if order == 0 { 1.0 } else { 0.0 };
        for i in 0..=4000 {
            let y = 0.25 + 0.25 * i as f64 / 4000.0;
            self.derivatives_into(y, &mut buf);
            sup = sup.max(buf[order].abs());
        }
        Ok(sup)
    }

    /// `int h`, which equals `3/4`.
    pub fn integral(&self) -> f64 {
        0.5 + 2.0 * simpson(|y| self.value(y), 0.25, 0.5, 4096)
    }

    /// `||h||_{L^2}^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        0.5 + 2.0 * simpson(|y| self.value(y) * self.value(y), 0.25, 0.5, 4096)
    }
}

#[inline]
fn glue(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let v = 1.0 / u;
    if v > FLUSH {
        0.0
    } else {
        libm::exp(-v)
    }
}

#[inline]
fn poly(c: &[f64], v: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * v + ci)
}

/// The profile `psi` with `psi_hat(xi) = kappa h(2 xi)`, normalized by
/// `psi(0) = 2`. Fourier convention `f_hat(xi) = int f(x) e^{-i x xi} dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketProfile {
    cutoff: SmoothCutoff,
    kappa: f64,
}

impl PacketProfile {
    pub fn new(cutoff: &SmoothCutoff) -> Self {
        // psi(0) = (kappa / pi) int_0^{1/4} h(2 xi) d xi
        let base = simpson(|xi| cutoff.value(2.0 * xi), 0.0, 0.25, 8192) / PI;
        Self { cutoff: cutoff.clone(), kappa: 2.0 / base }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Radius of the support of `psi_hat`.
    pub fn support_radius(&self) -> f64 {
        0.25
    }

    #[inline]
    pub fn spectrum(&self, xi: f64) -> f64 {
        if xi.abs() >= 0.25 {
            0.0
        } else {
            self.kappa * self.cutoff.value(2.0 * xi)
        }
    }

    /// `psi(x) = (kappa / pi) int_0^{1/4} h(2 xi) cos(x xi) d xi`.
    pub fn value(&self, x: f64) -> f64 {
        let panels = 4096usize.max(libm::ceil(x.abs() * 4.0) as usize);
        self.kappa / PI * simpson(|xi| self.cutoff.value(2.0 * xi) * libm::cos(x * xi), 0.0, 0.25, panels)
    }

    /// `||psi||_{L^2}^2 = (1 / 2 pi) int |psi_hat|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.kappa * self.kappa / PI * simpson(|xi| { let v = self.cutoff.value(2.0 * xi); v * v }, 0.0, 0.25, 8192)
    }
}

/// Builds the profile after checking that the grid resolves `supp psi_hat`.
pub fn build_packet_profile(cutoff: &SmoothCutoff, grid: &SymbolGrid2D) -> Result<PacketProfile> {
    if !(grid.dxi() < 0.125) {
        return Err(Error::Resolution(alloc::format!(
            "frequency spacing {} does not resolve a support of radius 1/4",
            grid.dxi()
        )));
    }
    Ok(PacketProfile::new(cutoff))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        let h = build_cutoff(6);
        assert_eq!(h.value(0.0), 1.0);
        assert_eq!(h.value(0.25), 1.0);
        assert_eq!(h.value(0.5), 0.0);
        assert_eq!(h.value(0.75), 0.0);
        let v = h.value(0.375);
        assert!(v > 0.0 && v < 1.0);
        assert_eq!(h.value(-0.375), v);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn g_derivative_polynomials() {
        let h = build_cutoff(3);
        // P_1 = v^2, P_2 = v^4 - 2 v^3, P_3 = v^6 - 6 v^5 + 6 v^4
        assert_eq!(h.polys[1], vec![0.0, 0.0, 1.0]);
        assert_eq!(h.polys[2], vec![0.0, 0.0, 0.0, -2.0, 1.0]);
        assert_eq!(h.polys[3], vec![0.0, 0.0, 0.0, 0.0, 6.0, -6.0, 1.0]);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = build_cutoff(6);
        let step = 1e-4;
        for order in 1..=5 {
            let sup = h.sup_derivative(order).unwrap();
            let mut worst: f64 = 0.0;
            for i in 1..200 {
                let y = 0.25 + 0.25 * i as f64 / 200.0;
                let exact = h.derivative(y, order).unwrap();
                let f = |z: f64| h.derivative(z, order - 1).unwrap();
                let fd = (8.0 * (f(y + step) - f(y - step)) - (f(y + 2.0 * step) - f(y - 2.0 * step))) / (12.0 * step);
                worst = worst.max((exact - fd).abs() / sup);
            }
            assert!(worst < 1e-6, "order {order}: {worst}");
        }
    }

    #[test]
    fn unit_integral_facts() {
        let h = build_cutoff(2);
        assert!((h.integral() - 0.75).abs() < 1e-12);
        assert!((h.l2_norm_sq() - 0.702_852_626_386_675_7).abs() < 1e-10, "{}", h.l2_norm_sq());
    }

    #[test]
    fn order_error_above_d_max() {
        let h = build_cutoff(2);
        assert!(matches!(h.derivative(0.3, 3), Err(Error::Order { .. })));
    }

    #[test]
    fn profile_normalization() {
        let psi = PacketProfile::new(&build_cutoff(2));
        assert!((psi.value(0.0) - 2.0).abs() < 1e-10);
        assert!((psi.kappa() - 32.0 * PI / 3.0).abs() < 1e-9);
        assert_eq!(psi.spectrum(0.3), 0.0);
        assert_eq!(psi.value(7.5), psi.value(-7.5));
    }
}
