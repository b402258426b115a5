//! Violation seeds and the point-and-radius extraction from a failing
//! decay condition.

use alloc::vec::Vec;

use super::condition::{SearchSpec, TrianglePairs};
use super::CoefficientModel;
use crate::quadrature::{cumulative_simpson, simpson};
use crate::{Error, Result};

/// A point `y` and radius `delta` with
/// `int_0^delta Im a_{p-1} >= M log(1 + delta) + k` on every sampled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationWitness {
    pub y: f64,
    pub delta: f64,
    /// Sampled min of the integral minus the threshold.
    pub margin: f64,
}

/// Bounds of the seed search: `delta` doubles from `delta_start` up to
/// `delta_max`; `y` runs over the window from the center outwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSearch {
    pub delta_start: f64,
    pub delta_max: f64,
    pub search: SearchSpec,
}

impl Default for SeedSearch {
    fn default() -> Self {
        Self { delta_start: 1.0, delta_max: 1024.0, search: SearchSpec::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaOnePoint {
    pub k: u32,
    pub m_target: f64,
    pub x_k: f64,
    pub rho_k: f64,
    pub s_k: f64,
    pub y_k: f64,
    pub delta_k: f64,
    pub tau_star: f64,
    pub t_star: f64,
    /// `(s, F_k(s))` on `[0, delta_k]`.
    pub f_profile: Vec<(f64, f64)>,
    /// Min over pairs of `int_0^{rho_k}` minus `M log(1 + rho_k) + k`.
    pub margin_ii: f64,
    /// Min over pairs and sampled radii of `int_0^rho`, `rho <= rho_k`.
    pub min_partial: f64,
    /// `max_tau p s_k |a_p(tau) - a_p(tau*)|`: how far the shifted point
    /// depends on the pair.
    pub tau_dependence: f64,
}

fn threshold(m: f64, k: u32, delta: f64) -> f64 {
    m * libm::log(1.0 + delta) + k as f64
}

fn min_forward_integral(
    model: &CoefficientModel,
    pairs: &TrianglePairs,
    y: f64,
    delta: f64,
    panels: usize,
) -> (f64, usize) {
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (i, (&(_, t), &speed)) in pairs.pairs.iter().zip(&pairs.speeds).enumerate() {
        let v = simpson(|s| model.im_subprincipal(t, y + speed * s), 0.0, delta, panels);
        if v < best {
            best = v;
            arg = i;
        }
    }
    (best, arg)
}

/// Searches for a seed `(y, delta)`; not-found when the bounds are exhausted.
pub fn find_violation_seed(
    model: &CoefficientModel,
    m_target: f64,
    k: u32,
    seed: &SeedSearch,
) -> Result<ViolationWitness> {
    if !(seed.delta_start > 0.0 && seed.delta_max >= seed.delta_start) {
        return Err(Error::Domain("invalid seed radius bounds".into()));
    }
    let pairs = TrianglePairs::new(model, seed.search.triangle_nodes);
    let ys = seed.search.x_nodes();
    let mut delta = seed.delta_start;
    while delta <= seed.delta_max {
        let panels = seed.search.quad.panels(delta, delta);
        let need = threshold(m_target, k, delta);
        for &y in &ys {
            let (v, _) = min_forward_integral(model, &pairs, y, delta, panels);
            if v >= need {
                return Ok(ViolationWitness { y, delta, margin: v - need });
            }
        }
        delta *= 2.0;
    }
    Err(Error::NotFound)
}

/// Shifts the seed to the minimizer of `F_k` and returns `(x_k, rho_k)`.
pub fn lemma1_extract(
    model: &CoefficientModel,
    m_target: f64,
    k: u32,
    seed: &ViolationWitness,
    search: &SearchSpec,
) -> Result<LemmaOnePoint> {
    let delta = seed.delta;
    if !(delta > 0.0) {
        return Err(Error::SeedInvalid { margin: f64::NAN });
    }
    let pairs = TrianglePairs::new(model, search.triangle_nodes);
    let panels = search.quad.panels(delta, delta);
    let need = threshold(m_target, k, delta);
    let (v, star) = min_forward_integral(model, &pairs, seed.y, delta, panels);
    let tol = 1e-9 * (1.0 + need.abs());
    if v < need - tol {
        return Err(Error::SeedInvalid { margin: v - need });
    }
    let (tau_star, t_star) = pairs.pairs[star];
    let speed = pairs.speeds[star];

    let f = cumulative_simpson(|s| model.im_subprincipal(t_star, seed.y + speed * s), 0.0, delta, panels);
    let h = delta / panels as f64;
    let mut imin = 0;
    for (i, &fv) in f.iter().enumerate() {
        if fv < f[imin] {
            imin = i;
        }
    }
    let s_k = if imin == panels { delta } else { h * imin as f64 };
    let rho_k = delta - s_k;
    if !(rho_k > 0.0) {
        return Err(Error::Degenerate { rho: rho_k });
    }
    let x_k = seed.y + speed * s_k;
    let f_profile = f.iter().enumerate().map(|(i, &fv)| (h * i as f64, fv)).collect();

    // (ii) and (iii) on every sampled pair.
    let rho_panels = search.quad.panels(rho_k, rho_k);
    let need_k = threshold(m_target, k, rho_k);
    let mut margin_ii = f64::INFINITY;
    let mut min_partial = f64::INFINITY;
    for (&(_, t), &sp) in pairs.pairs.iter().zip(&pairs.speeds) {
        let g = cumulative_simpson(|s| model.im_subprincipal(t, x_k + sp * s), 0.0, rho_k, rho_panels);
        margin_ii = margin_ii.min(g[rho_panels] - need_k);
        min_partial = min_partial.min(g.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let tau_dependence = pairs
        .speeds
        .iter()
        .map(|sp| (s_k * (sp - speed)).abs())
        .fold(0.0, f64::max);
    Ok(LemmaOnePoint {
        k,
        m_target,
        x_k,
        rho_k,
        s_k,
        y_k: seed.y,
        delta_k: delta,
        tau_star,
        t_star,
        f_profile,
        margin_ii,
        min_partial,
        tau_dependence,
    })
}

/// Points for consecutive `k`, each seed search starting above the previous
/// radius so the radii increase.
pub fn lemma1_sequence(
    model: &CoefficientModel,
    m_target: f64,
    ks: &[u32],
    seed: &SeedSearch,
) -> Result<Vec<LemmaOnePoint>> {
    let mut out: Vec<LemmaOnePoint> = Vec::with_capacity(ks.len());
    let mut bounds = *seed;
    for &k in ks {
        let w = find_violation_seed(model, m_target, k, &bounds)?;
        let pt = lemma1_extract(model, m_target, k, &w, &bounds.search)?;
        if let Some(prev) = out.last() {
            if pt.rho_k <= prev.rho_k {
                bounds.delta_start = 2.0 * w.delta;
                let w = find_violation_seed(model, m_target, k, &bounds)?;
                let pt = lemma1_extract(model, m_target, k, &w, &bounds.search)?;
                bounds.delta_start = 2.0 * w.delta;
                out.push(pt);
                continue;
            }
        }
        bounds.delta_start = 2.0 * w.delta;
        out.push(pt);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Coefficient, CustomCoefficient, Family, LeadingCoefficient};
    use alloc::sync::Arc;
    use alloc::vec;
    use num_complex::Complex64;

    fn small_search() -> SearchSpec {
        SearchSpec { x_window: 2.0, x_step: 1.0, ..Default::default() }
    }

    #[test]
    fn constant_seed_matches_threshold() {
        let model = Family::ConstantImag { c: 1.0 }.model(2, 1.0, 1.0).unwrap();
        let seed = SeedSearch { search: small_search(), ..Default::default() };
        let w = find_violation_seed(&model, 2.0, 3, &seed).unwrap();
        // 8 >= 2 ln 9 + 3 = 7.394..., while 4 < 2 ln 5 + 3
        assert_eq!(w.delta, 8.0);
        assert_eq!(w.y, 0.0);
        assert!((w.margin - (8.0 - 2.0 * libm::log(9.0) - 3.0)).abs() < 1e-10);
    }

    #[test]
    fn zero_family_has_no_seed() {
        let model = Family::Zero.model(2, 1.0, 1.0).unwrap();
        let seed = SeedSearch { delta_max: 64.0, search: small_search(), ..Default::default() };
        assert_eq!(find_violation_seed(&model, 1.0, 1, &seed), Err(Error::NotFound));
    }

    #[test]
    fn monotone_profile_keeps_seed_point() {
        let model = Family::ConstantImag { c: 1.0 }.model(2, 1.0, 1.0).unwrap();
        let w = ViolationWitness { y: 0.0, delta: 8.0, margin: 0.0 };
        let pt = lemma1_extract(&model, 2.0, 3, &w, &small_search()).unwrap();
        assert_eq!(pt.s_k, 0.0);
        assert_eq!(pt.x_k, 0.0);
        assert_eq!(pt.rho_k, 8.0);
        assert!(pt.margin_ii >= 0.0);
        assert!(pt.min_partial >= 0.0);
    }

    fn bump_model(y: f64) -> CoefficientModel {
        // -1 on [y, y + 2), +2 beyond: F_k has its minimum at s = 1 for p = 2.
        let f = move |_t: f64, x: f64, order: usize| {
            if order > 0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, if x < y + 2.0 { -1.0 } else { 2.0 })
        };
        let c = Coefficient::Custom(CustomCoefficient {
            f: Arc::new(f),
            max_order: 0,
            x_independent: false,
            t_independent: true,
        });
        CoefficientModel::new(2, 1.0, LeadingCoefficient::Constant(1.0), 1.0, vec![Coefficient::Zero, c]).unwrap()
    }

    #[test]
    fn bump_minimizer_is_at_one() {
        let model = bump_model(0.0);
        let w = ViolationWitness { y: 0.0, delta: 8.0, margin: 0.0 };
        let pt = lemma1_extract(&model, 1.0, 1, &w, &small_search()).unwrap();
        assert!((pt.s_k - 1.0).abs() < 1e-12, "{}", pt.s_k);
        assert!((pt.x_k - 2.0).abs() < 1e-12);
        assert!((pt.rho_k - 7.0).abs() < 1e-12);
        assert!(pt.margin_ii >= 0.0);
        assert!(pt.min_partial >= -1e-12);
    }

    #[test]
    fn invalid_seed_is_rejected() {
        let model = Family::ConstantImag { c: 1.0 }.model(2, 1.0, 1.0).unwrap();
        let w = ViolationWitness { y: 0.0, delta: 2.0, margin: 0.0 };
        assert!(matches!(lemma1_extract(&model, 2.0, 3, &w, &small_search()), Err(Error::SeedInvalid { .. })));
    }

    #[test]
    fn sequence_radii_increase() {
        let model = Family::ConstantImag { c: 1.0 }.model(2, 1.0, 1.0).unwrap();
        let seed = SeedSearch { search: small_search(), ..Default::default() };
        let pts = lemma1_sequence(&model, 0.2, &[1, 2, 3, 4], &seed).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].rho_k > w[0].rho_k);
        }
    }
}
