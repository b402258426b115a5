//! Discrete Kohn-Nirenberg quantization on the periodic grid:
//!
//! ```text
//! (op(p) u)(x_j) = (1 / N) sum_m exp(i x_j xi_m) p(t, x_j, xi_m) u_hat_m
//! ```
//!
//! with the composition expansion, its measured remainder, the
//! Calderon-Vaillancourt harness and the oscillatory-product seminorm harness.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::grid::{FieldState, SymbolGrid2D};
use crate::symbols::{check_orders, seminorm, GridSample, SupportBox, SymbolEvaluator};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Top share of the frequency range that must carry no mass.
pub const ALIAS_BAND: f64 = 0.1;
pub const ALIAS_TOLERANCE: f64 = 1e-10;
/// Largest grid materialized as a dense matrix.
pub const DENSE_LIMIT: usize = 512;

/// Rejects fields with spectral mass in the top tenth of the frequency range.
pub fn check_band(u: &FieldState, grid: &SymbolGrid2D) -> Result<()> {
    let share = u.high_frequency_share(grid, ALIAS_BAND);
    if share > ALIAS_TOLERANCE {
        return Err(Error::Aliasing { fraction: share });
    }
    Ok(())
}

/// `op(symbol) u` at time `t`.
pub fn quantize_apply(
    symbol: &dyn SymbolEvaluator,
    t: f64,
    u: &FieldState,
    grid: &SymbolGrid2D,
) -> Result<FieldState> {
    check_band(u, grid)?;
    apply_unchecked(symbol, t, u, grid)
}

/// `op(symbol) u` without the band check.
pub fn apply_unchecked(
    symbol: &dyn SymbolEvaluator,
    t: f64,
    u: &FieldState,
    grid: &SymbolGrid2D,
) -> Result<FieldState> {
    let n = grid.n();
    if u.values.len() != n {
        return Err(Error::Domain("field does not live on this grid".into()));
    }
    if symbol.x_independent() {
        let spec = (0..n).map(|m| symbol.value(t, 0.0, grid.xi(m)) * u.spectrum[m]).collect();
        let mut out = FieldState::from_spectrum(grid, spec, t)?;
        out.t = u.t;
        return Ok(out);
    }
    let (rows, cols) = match symbol.support(t) {
        Some(b) => restrict(grid, &b),
        None => (0..n, (0..n).collect()),
    };
    let cols: Vec<usize> = cols.into_iter().filter(|&m| u.spectrum[m] != ZERO).collect();
    let mut values = vec![ZERO; n];
    let inv_n = 1.0 / n as f64;
    for j in rows {
        let x = grid.x(j);
        let mut acc = ZERO;
        for &m in &cols {
            let p = symbol.value(t, x, grid.xi(m));
            if p != ZERO {
                acc += grid.phase(j, m) * p * u.spectrum[m];
            }
        }
        values[j] = acc * inv_n;
    }
    let mut out = FieldState::from_values(grid, values, u.t)?;
    out.t = u.t;
    Ok(out)
}

pub(crate) fn restrict(grid: &SymbolGrid2D, b: &SupportBox) -> (core::ops::Range<usize>, Vec<usize>) {
    if b.is_empty() {
        return (0..0, Vec::new());
    }
    let rows = if b.x_lo.is_finite() || b.x_hi.is_finite() {
        grid.x_range(b.x_lo, b.x_hi)
    } else {
        0..grid.n()
    };
    (rows, grid.xi_indices(b.xi_lo, b.xi_hi))
}

/// Row-major `N x N` matrix of `op(symbol)` acting on nodal values.
pub fn materialize(symbol: &dyn SymbolEvaluator, t: f64, grid: &SymbolGrid2D) -> Result<Vec<Complex64>> {
    let n = grid.n();
    if n > DENSE_LIMIT {
        return Err(Error::Resource(alloc::format!("dense oracle limited to N <= {DENSE_LIMIT}, got {n}")));
    }
    let inv_n = 1.0 / n as f64;
    let mut m = vec![ZERO; n * n];
    for j in 0..n {
        let x = grid.x(j);
        let row: Vec<Complex64> = (0..n).map(|k| symbol.value(t, x, grid.xi(k)) * grid.phase(j, k)).collect();
        for l in 0..n {
            // exp(i xi_k (x_j - x_l)) = phase(j, k) conj(phase(l, k))
            let mut acc = ZERO;
            for (k, r) in row.iter().enumerate() {
                acc += r * grid.phase(l, k).conj();
            }
            m[j * n + l] = acc * inv_n;
        }
    }
    Ok(m)
}

pub fn mat_mul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

pub fn mat_vec(a: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

/// Truncated composition `sum_{a < nu} (1 / a!) d_xi^a p1 D_x^a p2`,
/// `D_x = -i d_x`.
pub struct Composed<'a> {
    p1: &'a dyn SymbolEvaluator,
    p2: &'a dyn SymbolEvaluator,
    nu: usize,
}

pub fn compose_expansion<'a>(
    p1: &'a dyn SymbolEvaluator,
    p2: &'a dyn SymbolEvaluator,
    nu: usize,
) -> Result<Composed<'a>> {
    if nu == 0 {
        return Err(Error::Domain("expansion order must be at least 1".into()));
    }
    let need = nu - 1;
    let (xi1, _) = p1.max_orders();
    let (_, x2) = p2.max_orders();
    if xi1 < need {
        return Err(Error::Order { requested: need, available: xi1 });
    }
    if x2 < need {
        return Err(Error::Order { requested: need, available: x2 });
    }
    Ok(Composed { p1, p2, nu })
}

impl Composed<'_> {
    pub fn nu(&self) -> usize {
        self.nu
    }
}

impl SymbolEvaluator for Composed<'_> {
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        if dxi > 0 || dx > 0 {
            return Err(Error::Order { requested: dxi.max(dx), available: 0 });
        }
        let mut acc = ZERO;
        let mut fact = 1.0;
        let mut di = Complex64::new(1.0, 0.0);
        for a in 0..self.nu {
            if a > 0 {
                fact *= a as f64;
                di *= Complex64::new(0.0, -1.0);
            }
            let d1 = self.p1.derivative(t, x, xi, a, 0)?;
            if d1 == ZERO {
                continue;
            }
            acc += d1 * self.p2.derivative(t, x, xi, 0, a)? * di / fact;
        }
        Ok(acc)
    }

    fn max_orders(&self) -> (usize, usize) {
        (0, 0)
    }

    fn x_independent(&self) -> bool {
        self.p1.x_independent() && self.p2.x_independent()
    }

    fn support(&self, t: f64) -> Option<SupportBox> {
        match (self.p1.support(t), self.p2.support(t)) {
            (Some(a), Some(b)) => Some(a.intersect(&b)),
            (a, b) => a.or(b),
        }
    }
}

/// `max_u ||op(p1) op(p2) u - op(expansion) u|| / ||u||` over the probes.
pub fn composition_remainder_norm(
    p1: &dyn SymbolEvaluator,
    p2: &dyn SymbolEvaluator,
    nu: usize,
    t: f64,
    probes: &[FieldState],
    grid: &SymbolGrid2D,
) -> Result<f64> {
    let c = compose_expansion(p1, p2, nu)?;
    let mut worst: f64 = 0.0;
    for u in probes {
        let norm = u.norm(grid);
        if norm == 0.0 {
            return Err(Error::Domain("zero probe".into()));
        }
        let inner = quantize_apply(p2, t, u, grid)?;
        let lhs = apply_unchecked(p1, t, &inner, grid)?;
        let rhs = quantize_apply(&c, t, u, grid)?;
        let diff: Vec<Complex64> = lhs.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect();
        worst = worst.max(grid.l2_norm(&diff) / norm);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvReport {
    /// `max_u ||op(p) u|| / ||u||`.
    pub op_norm: f64,
    /// Sampled `|p|^0_{2,2}`.
    pub seminorm: f64,
    pub ratio: f64,
    pub probes: usize,
    pub sample_points: usize,
}

/// Probe lower bound of `||op(p)||` against the sampled `(2, 2)` seminorm.
pub fn cv_bound_harness(
    symbol: &dyn SymbolEvaluator,
    t: f64,
    probes: &[FieldState],
    grid: &SymbolGrid2D,
    sample: &GridSample,
) -> Result<CvReport> {
    let semi = seminorm(symbol, t, 2, 2, sample)?;
    let mut op_norm: f64 = 0.0;
    for u in probes {
        let v = quantize_apply(symbol, t, u, grid)?;
        op_norm = op_norm.max(v.norm(grid) / u.norm(grid));
    }
    if semi.value == 0.0 {
        if op_norm > 0.0 {
            return Err(Error::DegenerateHarness(alloc::format!(
                "seminorm sampled as 0 while the operator norm is {op_norm:.3e}"
            )));
        }
        return Ok(CvReport { op_norm, seminorm: 0.0, ratio: 0.0, probes: probes.len(), sample_points: semi.points });
    }
    Ok(CvReport {
        op_norm,
        seminorm: semi.value,
        ratio: op_norm / semi.value,
        probes: probes.len(),
        sample_points: semi.points,
    })
}

/// The oscillatory product `p_theta(x, xi) = p1(xi + theta D_x) p2(., xi)`
/// for an x-independent `p1`, on the grid in `x` at the given frequencies.
/// Returns `|p_theta|^0_{ell,ell}` sampled over `xi_samples` and all nodes.
pub fn oscillatory_product_seminorm(
    p1: &dyn SymbolEvaluator,
    p2: &dyn SymbolEvaluator,
    theta: f64,
    ell: usize,
    t: f64,
    grid: &SymbolGrid2D,
    xi_samples: &[f64],
) -> Result<f64> {
    if !p1.x_independent() {
        return Err(Error::Misuse("oscillatory product harness needs an x-independent left factor".into()));
    }
    check_orders(p1, ell, 0)?;
    check_orders(p2, ell, ell)?;
    let n = grid.n();
    let mut best: f64 = 0.0;
    for &xi in xi_samples {
        // d_xi^g p_theta = sum_i C(g, i) p1^(i)(xi + theta eta) (d_xi^{g-i} p2)_hat
        let mut p2_hats = Vec::with_capacity(ell + 1);
        for g in 0..=ell {
            let vals: Vec<Complex64> =
                (0..n).map(|j| p2.derivative(t, grid.x(j), xi, g, 0)).collect::<Result<_>>()?;
            p2_hats.push(grid.spectrum(&vals));
        }
        for g in 0..=ell {
            let mut acc = vec![ZERO; n];
            for i in 0..=g {
                let c = crate::symbols::binomial(g, i);
                for m in 0..n {
                    let eta = grid.xi(m);
                    let d1 = p1.derivative(t, 0.0, xi + theta * eta, i, 0)?;
                    acc[m] += d1 * p2_hats[g - i][m] * c;
                }
            }
            for s in 0..=ell {
                let spec: Vec<Complex64> = acc
                    .iter()
                    .enumerate()
                    .map(|(m, v)| v * Complex64::new(0.0, grid.xi(m)).powu(s as u32))
                    .collect();
                let vals = grid.values(&spec);
                for v in vals {
                    best = best.max(v.norm());
                }
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductBoundReport {
    pub product: f64,
    pub left: f64,
    pub right: f64,
    /// `|p_theta|_{ell,ell} / (|p1|_{ell+2,ell+2} |p2|_{ell+2,ell+2})`.
    pub ratio: f64,
}

/// Measures `|p_theta|^0_{ell,ell}` against the `(ell + 2, ell + 2)` seminorms
/// of the factors.
#[allow(clippy::too_many_arguments)]
pub fn product_bound_harness(
    p1: &dyn SymbolEvaluator,
    p2: &dyn SymbolEvaluator,
    theta: f64,
    ell: usize,
    t: f64,
    grid: &SymbolGrid2D,
    xi_samples: &[f64],
    sample: &GridSample,
) -> Result<ProductBoundReport> {
    let product = oscillatory_product_seminorm(p1, p2, theta, ell, t, grid, xi_samples)?;
    let left = seminorm(p1, t, ell + 2, ell + 2, sample)?.value;
    let right = seminorm(p2, t, ell + 2, ell + 2, sample)?.value;
    if left * right == 0.0 {
        return Err(Error::DegenerateHarness("factor seminorm sampled as 0".into()));
    }
    Ok(ProductBoundReport { product, left, right, ratio: product / (left * right) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Coefficient;
    use crate::symbols::{CoefficientSymbol, ConstantSymbol, XiPolynomial};

    fn grid() -> SymbolGrid2D {
        SymbolGrid2D::new(core::f64::consts::PI, 64).unwrap()
    }

    fn smooth(grid: &SymbolGrid2D) -> FieldState {
        FieldState::from_fn(grid, |x| Complex64::new(libm::cos(2.0 * x), libm::sin(x) + 0.5), 0.0).unwrap()
    }

    #[test]
    fn identity_symbol() {
        let g = grid();
        let u = smooth(&g);
        let v = quantize_apply(&ConstantSymbol(Complex64::new(1.0, 0.0)), 0.0, &u, &g).unwrap();
        for (a, b) in v.values.iter().zip(&u.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn xi_eigenfunction() {
        let g = grid();
        let u = FieldState::from_fn(&g, |x| Complex64::from_polar(1.0, 5.0 * x), 0.0).unwrap();
        let v = quantize_apply(&XiPolynomial::monomial(1), 0.0, &u, &g).unwrap();
        for (a, b) in v.values.iter().zip(&u.values) {
            assert!((a - b * 5.0).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_matches_apply() {
        let g = SymbolGrid2D::new(4.0, 32).unwrap();
        let c = Coefficient::Decaying { amplitude: Complex64::new(0.0, 1.0), center: 0.5, exponent: 2.0 };
        let s = CoefficientSymbol(&c);
        let u = FieldState::from_fn(&g, |x| Complex64::new(libm::exp(-x * x), 0.0), 0.0).unwrap();
        let m = materialize(&s, 0.0, &g).unwrap();
        let dense = mat_vec(&m, &u.values);
        let v = apply_unchecked(&s, 0.0, &u, &g).unwrap();
        for (a, b) in dense.iter().zip(&v.values) {
            assert!((a - b).norm() < 1e-12);
        }
        for (j, a) in v.values.iter().enumerate() {
            assert!((a - c.value(0.0, g.x(j)) * u.values[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn aliasing_is_flagged() {
        let g = grid();
        let u = FieldState::from_fn(&g, |x| Complex64::from_polar(1.0, 31.0 * x), 0.0).unwrap();
        assert!(matches!(
            quantize_apply(&ConstantSymbol(Complex64::new(1.0, 0.0)), 0.0, &u, &g),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn expansion_of_xi_against_coefficient() {
        let c = Coefficient::Decaying { amplitude: Complex64::new(1.0, 0.0), center: 0.0, exponent: 2.0 };
        let a = CoefficientSymbol(&c);
        let xi = XiPolynomial::monomial(1);
        let comp = compose_expansion(&xi, &a, 2).unwrap();
        let (x, z) = (0.7, 3.0);
        let expect = c.value(0.0, x) * z + Complex64::new(0.0, -1.0) * c.eval(0.0, x, 1).unwrap();
        assert!((comp.value(0.0, x, z) - expect).norm() < 1e-15);
    }

    #[test]
    fn unit_left_factor_has_no_remainder() {
        let g = grid();
        let c = Coefficient::Decaying { amplitude: Complex64::new(1.0, 0.0), center: 0.0, exponent: 2.0 };
        let a = CoefficientSymbol(&c);
        let one = ConstantSymbol(Complex64::new(1.0, 0.0));
        let u = smooth(&g);
        for nu in 1..=3 {
            let r = composition_remainder_norm(&one, &a, nu, 0.0, core::slice::from_ref(&u), &g).unwrap();
            assert!(r < 1e-13);
        }
    }

    #[test]
    fn cv_identity_ratio_is_one() {
        let g = grid();
        let u = smooth(&g);
        let sample = GridSample::Rect { x_lo: -1.0, x_hi: 1.0, nx: 3, xi_lo: -1.0, xi_hi: 1.0, nxi: 3 };
        let r = cv_bound_harness(&ConstantSymbol(Complex64::new(1.0, 0.0)), 0.0, &[u], &g, &sample).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cv_flags_blind_sample() {
        let g = grid();
        let u = smooth(&g);
        let bump = crate::symbols::FnSymbol::modulated_bump(crate::cutoff::SmoothCutoff::new(4), 6.0);
        let blind = GridSample::Points(alloc::vec![(0.0, 100.0)]);
        let r = cv_bound_harness(&bump, 0.0, core::slice::from_ref(&u), &g, &blind);
        assert!(matches!(r, Err(Error::DegenerateHarness(_))));
        let seen = GridSample::Points(alloc::vec![(0.0, 0.0)]);
        assert!(cv_bound_harness(&bump, 0.0, &[u], &g, &seen).is_ok());
    }
}
