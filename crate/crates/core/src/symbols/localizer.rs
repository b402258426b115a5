//! Localizers transported by the Hamilton flow of `a_p(t) xi^p`:
//!
//! ```text
//! w^{a,b}(t, x, xi) = rho^{1/2} h^(a)(rho (x - x_k - p A_p(t) xi^{p-1})) h^(b)(rho^mu (xi / n - 1))
//! ```
//!
//! with `n = rho^a`, together with the cutoffs `chi_1`, `chi_2` and the
//! support diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{binomial, GridSample, SupportBox, SymbolEvaluator};
use crate::coefficients::{CoefficientModel, LeadingCoefficient};
use crate::cutoff::SmoothCutoff;
use crate::quadrature::simpson;
use crate::{Error, Result};

/// Growth exponents: `n = rho^a`, frequency localization at relative width
/// `rho^{-mu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub a: f64,
    pub mu: f64,
}

impl Exponents {
    /// `mu = p + 3/2` and the largest admissible `a = (p mu - 2) / (p - 1)`:
    /// `(5, 3.5)` for `p = 2`, `(5.75, 4.5)` for `p = 3`.
    pub fn paper_default(p: u32) -> Self {
        let p = p as f64;
        let mu = p + 1.5;
        Self { a: (p * mu - 2.0) / (p - 1.0), mu }
    }

    /// `mu > p + 1` and `mu + 1 < a <= (p mu - 2) / (p - 1)`.
    pub fn admissible(&self, p: u32) -> bool {
        let pf = p as f64;
        self.mu > pf + 1.0 && self.mu + 1.0 < self.a && self.a <= (pf * self.mu - 2.0) / (pf - 1.0) + 1e-12
    }

    /// Smallest order cap `s >= (a (q + p - 2) + mu + 5/2) / (a - mu - 1)`.
    pub fn required_s(&self, p: u32, q: u32) -> usize {
        let num = self.a * (q as f64 + p as f64 - 2.0) + self.mu + 2.5;
        let s = num / (self.a - self.mu - 1.0);
        libm::ceil(s - 1e-12).max(0.0) as usize
    }
}

/// Whether a family runs at exponents satisfying the admissibility
/// constraints or at scale-substituted ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Paper,
    Substituted,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Substituted => "substituted",
        }
    }
}

/// `A_p(t) = int_0^t a_p` on a uniform grid with linear interpolation, node
/// count chosen for interpolation error below `1e-10 T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiderivativeTable {
    t_max: f64,
    h: f64,
    values: Vec<f64>,
}

impl AntiderivativeTable {
    pub fn new(lead: &LeadingCoefficient, t_max: f64) -> Self {
        let probe = 4096;
        let dt = t_max / probe as f64;
        let mut slope: f64 = 0.0;
        for i in 0..probe {
            let t = dt * i as f64;
            slope = slope.max(((lead.eval(t + dt) - lead.eval(t)) / dt).abs());
        }
        let cells = if slope == 0.0 {
            1
        } else {
            let h = libm::sqrt(8.0 * 1e-10 * t_max / (2.0 * slope));
            (libm::ceil(t_max / h) as usize).clamp(1, 4_000_000)
        };
        let h = t_max / cells as f64;
        let mut values = Vec::with_capacity(cells + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            let t0 = h * i as f64;
            acc += simpson(|s| lead.eval(s), t0, t0 + h, 4);
            values.push(acc);
        }
        Self { t_max, h, values }
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    /// Linear interpolation; linear extrapolation outside `[0, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        let cells = self.values.len() - 1;
        let s = t / self.h;
        let i = (libm::floor(s).max(0.0) as usize).min(cells - 1);
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }
}

/// `B_{n,k}(x_1, ..., x_{n-k+1})` for `n, k <= nmax`, with `xs[i] = x_{i+1}`.
pub fn bell_table(xs: &[f64], nmax: usize) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; nmax + 1]; nmax + 1];
    b[0][0] = 1.0;
    for n in 1..=nmax {
        for k in 1..=n {
            let mut acc = 0.0;
            for i in 1..=(n - k + 1) {
                let xi = xs.get(i - 1).copied().unwrap_or(0.0);
                if xi != 0.0 {
                    acc += binomial(n - 1, i - 1) * xi * b[n - i][k - 1];
                }
            }
            b[n][k] = acc;
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportReport {
    /// Largest `|w|` at sample points outside the box.
    pub max_outside: f64,
    pub max_inside: f64,
    pub points: usize,
    pub points_outside: usize,
}

#[derive(Debug, Clone)]
pub struct LocalizerFamily {
    p: u32,
    x_k: f64,
    rho: f64,
    exps: Exponents,
    regime: Regime,
    n: f64,
    s: usize,
    c_p: f64,
    lead: LeadingCoefficient,
    table: AntiderivativeTable,
    cutoff: SmoothCutoff,
    rho_mu: f64,
    sqrt_rho: f64,
}

impl LocalizerFamily {
    /// `Regime::Paper` enforces admissible exponents; `Regime::Substituted`
    /// only requires `a > mu + 1 > 1`, which keeps the weights
    /// `(rho^{mu+1} / n)^{a+b}` below one.
    pub fn new(
        model: &CoefficientModel,
        x_k: f64,
        rho: f64,
        exps: Exponents,
        regime: Regime,
        s: usize,
        cutoff: SmoothCutoff,
    ) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(Error::Domain(alloc::format!("radius {rho} must exceed 1")));
        }
        let p = model.p();
        match regime {
            Regime::Paper if !exps.admissible(p) => {
                return Err(Error::InvalidModel(alloc::format!(
                    "exponents a={}, mu={} violate mu > p+1, mu+1 < a <= (p mu - 2)/(p - 1) for p={p}",
                    exps.a,
                    exps.mu
                )));
            }
            Regime::Substituted if !(exps.mu > 0.0 && exps.a > exps.mu + 1.0) => {
                return Err(Error::InvalidModel(alloc::format!(
                    "substituted exponents need a > mu + 1 > 1, got a={}, mu={}",
                    exps.a,
                    exps.mu
                )));
            }
            _ => {}
        }
        let c_p = (p as f64 * libm::pow(2.0, p as f64 - 1.0) * model.sup_a_p()).max(1.0);
        Ok(Self {
            p,
            x_k,
            rho,
            exps,
            regime,
            n: libm::pow(rho, exps.a),
            s,
            c_p,
            lead: model.lead().clone(),
            table: AntiderivativeTable::new(model.lead(), model.t_max()),
            cutoff,
            rho_mu: libm::pow(rho, exps.mu),
            sqrt_rho: libm::sqrt(rho),
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn x_k(&self) -> f64 {
        self.x_k
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn n(&self) -> f64 {
        self.n
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn c_p(&self) -> f64 {
        self.c_p
    }
    pub fn exponents(&self) -> Exponents {
        self.exps
    }
    pub fn regime(&self) -> Regime {
        self.regime
    }
    pub fn cutoff(&self) -> &SmoothCutoff {
        &self.cutoff
    }
    pub fn rho_mu(&self) -> f64 {
        self.rho_mu
    }

    /// `A_p(t)` from the cached table.
    pub fn big_a(&self, t: f64) -> f64 {
        self.table.eval(t)
    }

    pub fn a_p(&self, t: f64) -> f64 {
        self.lead.eval(t)
    }

    /// Evaluation horizon `t_k = rho / n^{p-1}`.
    pub fn t_k(&self) -> f64 {
        self.rho / libm::pow(self.n, self.p as f64 - 1.0)
    }

    /// Damping weight `rho^{mu+1} / n`.
    pub fn weight(&self) -> f64 {
        libm::pow(self.rho, self.exps.mu + 1.0) / self.n
    }

    #[inline]
    fn xi_pow(&self, xi: f64, k: i32) -> f64 {
        libm::pow(xi, k as f64)
    }

    /// `x_k + p A_p(t) xi^{p-1}`.
    #[inline]
    pub fn center(&self, t: f64, xi: f64) -> f64 {
        self.x_k + self.p as f64 * self.big_a(t) * self.xi_pow(xi, self.p as i32 - 1)
    }

    /// Scaled arguments `(rho (x - center), rho^mu (xi / n - 1))`.
    #[inline]
    pub fn args(&self, t: f64, x: f64, xi: f64) -> (f64, f64) {
        (self.rho * (x - self.center(t, xi)), self.rho_mu * (xi / self.n - 1.0))
    }

    /// `w^{a,b}(t, x, xi)`.
    pub fn localizer_symbol(&self, alpha: usize, beta: usize, t: f64, x: f64, xi: f64) -> Result<f64> {
        self.derivative(alpha, beta, t, x, xi, 0, 0)
    }

    /// `d_xi^dxi d_x^dx w^{a,b}` through Leibniz in `xi` and Faa di Bruno on
    /// the sheared argument.
    #[allow(clippy::too_many_arguments)]
    pub fn derivative(
        &self,
        alpha: usize,
        beta: usize,
        t: f64,
        x: f64,
        xi: f64,
        dxi: usize,
        dx: usize,
    ) -> Result<f64> {
        let d = self.cutoff.d_max();
        let ka = alpha + dx + dxi;
        let kb = beta + dxi;
        if ka > d || kb > d {
            return Err(Error::Order { requested: ka.max(kb), available: d });
        }
        let (y1, y2) = self.args(t, x, xi);
        if y1.abs() >= 0.5 || y2.abs() >= 0.5 {
            return Ok(0.0);
        }
        let mut ha = [0.0; 40];
        let mut hb = [0.0; 40];
        self.cutoff.derivatives_into(y1, &mut ha[..=ka]);
        self.cutoff.derivatives_into(y2, &mut hb[..=kb]);
        let base = alpha + dx;
        let total = if dxi == 0 {
            ha[base] * hb[beta]
        } else {
            let phi = self.phi_derivatives(t, xi, 1.0, dxi);
            let bell = bell_table(&phi, dxi);
            let r = self.rho_mu / self.n;
            let mut acc = 0.0;
            for i in 0..=dxi {
                let fi = if i == 0 {
                    ha[base]
                } else {
                    (1..=i).map(|k| ha[base + k] * bell[i][k]).sum()
                };
                acc += binomial(dxi, i) * fi * libm::pow(r, (dxi - i) as f64) * hb[beta + dxi - i];
            }
            acc
        };
        Ok(self.sqrt_rho * libm::pow(self.rho, dx as f64) * total)
    }

    /// `d^j/dxi^j` of `scale rho (x - x_k - p A_p(t) xi^{p-1})`, `j = 1..=order`.
    fn phi_derivatives(&self, t: f64, xi: f64, scale: f64, order: usize) -> Vec<f64> {
        let pm1 = self.p as usize - 1;
        let c = -scale * self.rho * self.p as f64 * self.big_a(t);
        (1..=order)
            .map(|j| {
                if j > pm1 {
                    return 0.0;
                }
                let mut ff = 1.0;
                for i in 0..j {
                    ff *= (pm1 - i) as f64;
                }
                c * ff * self.xi_pow(xi, (pm1 - j) as i32)
            })
            .collect()
    }

    /// `h^(0..=amax)` at the space argument and `h^(0..=bmax)` at the
    /// frequency argument; false when the point is outside the support.
    #[inline]
    pub fn bank(&self, t: f64, x: f64, xi: f64, ha: &mut [f64], hb: &mut [f64]) -> bool {
        let (y1, y2) = self.args(t, x, xi);
        if y1.abs() >= 0.5 || y2.abs() >= 0.5 {
            return false;
        }
        self.cutoff.derivatives_into(y1, ha);
        self.cutoff.derivatives_into(y2, hb);
        true
    }

    /// `rho^{1/2}`.
    pub fn amplitude(&self) -> f64 {
        self.sqrt_rho
    }

    /// Frequencies where the family can be nonzero.
    pub fn xi_support(&self) -> (f64, f64) {
        let w = 0.5 / self.rho_mu;
        (self.n * (1.0 - w), self.n * (1.0 + w))
    }

    /// Box containing the support at time `t`.
    pub fn support_box(&self, t: f64) -> SupportBox {
        let (lo, hi) = self.xi_support();
        let c1 = self.center(t, lo);
        let c2 = self.center(t, hi);
        let half = 0.5 / self.rho;
        SupportBox { x_lo: c1.min(c2) - half, x_hi: c1.max(c2) + half, xi_lo: lo, xi_hi: hi }
    }

    /// `|x - (x_k + p A_p(t) n^{p-1})| <= c_p / rho`, `|xi / n - 1| <= 1 / (2 rho^mu)`.
    pub fn lemma2_box(&self, t: f64) -> SupportBox {
        let c = self.center(t, self.n);
        let r = self.c_p / self.rho;
        let (lo, hi) = self.xi_support();
        SupportBox { x_lo: c - r, x_hi: c + r, xi_lo: lo, xi_hi: hi }
    }

    pub fn symbol(&self, alpha: usize, beta: usize) -> LocalizerSymbol<'_> {
        LocalizerSymbol { fam: self, alpha, beta }
    }

    /// `chi_1(xi) = h(rho^mu (xi / n - 1) / 3)`.
    pub fn chi1(&self, xi: f64) -> f64 {
        self.cutoff.value(self.rho_mu * (xi / self.n - 1.0) / 3.0)
    }

    /// `chi_2(t, x, xi) = h(rho (x - x_k - p A_p(t) xi^{p-1}) / (4 p c_p))`.
    pub fn chi2(&self, t: f64, x: f64, xi: f64) -> f64 {
        let s = 1.0 / (4.0 * self.p as f64 * self.c_p);
        self.cutoff.value(s * self.rho * (x - self.center(t, xi)))
    }

    pub fn chi1_symbol(&self) -> Chi1Symbol<'_> {
        Chi1Symbol(self)
    }

    pub fn chi2_symbol(&self) -> Chi2Symbol<'_> {
        Chi2Symbol(self)
    }

    /// Sample uniform in the scaled arguments over `[-stretch/2, stretch/2]^2`.
    pub fn phase_space_sample(&self, t: f64, n1: usize, n2: usize, stretch: f64) -> GridSample {
        let mut pts = Vec::with_capacity(n1 * n2);
        for j in 0..n2 {
            let y2 = stretch * (j as f64 / (n2.max(2) - 1) as f64 - 0.5);
            let xi = self.n * (1.0 + y2 / self.rho_mu);
            let c = self.center(t, xi);
            for i in 0..n1 {
                let y1 = stretch * (i as f64 / (n1.max(2) - 1) as f64 - 0.5);
                pts.push((c + y1 / self.rho, xi));
            }
        }
        GridSample::Points(pts)
    }

    /// Tensor sample of the Lemma 2 box enlarged by `expand` in each direction.
    pub fn lemma2_sample(&self, t: f64, nx: usize, nxi: usize, expand: f64) -> GridSample {
        let b = self.lemma2_box(t);
        let (cx, rx) = (0.5 * (b.x_lo + b.x_hi), 0.5 * (b.x_hi - b.x_lo) * expand);
        let (cxi, rxi) = (0.5 * (b.xi_lo + b.xi_hi), 0.5 * (b.xi_hi - b.xi_lo) * expand);
        GridSample::Rect { x_lo: cx - rx, x_hi: cx + rx, nx, xi_lo: cxi - rxi, xi_hi: cxi + rxi, nxi }
    }

    /// Largest `|w^{a,b}|` outside the Lemma 2 box over the sample.
    pub fn support_check(
        &self,
        alpha: usize,
        beta: usize,
        t: f64,
        sample: &GridSample,
    ) -> Result<SupportReport> {
        let bx = self.lemma2_box(t);
        let mut rep = SupportReport { max_outside: 0.0, max_inside: 0.0, points: 0, points_outside: 0 };
        let mut err = None;
        sample.for_each(|x, xi| {
            rep.points += 1;
            let v = match self.localizer_symbol(alpha, beta, t, x, xi) {
                Ok(v) => v.abs(),
                Err(e) => {
                    err = Some(e);
                    return;
                }
            };
            if bx.contains(x, xi) {
                rep.max_inside = rep.max_inside.max(v);
            } else {
                rep.points_outside += 1;
                rep.max_outside = rep.max_outside.max(v);
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(rep),
        }
    }

    /// Sup over the sample of `|(d_t + p a_p(t) xi^{p-1} d_x) w^{0,0}|` with a
    /// centered difference in `t` of step `dt`, divided by the size
    /// `rho^{3/2} p |a_p(t)| |xi|^{p-1} sup |h'|` of either term.
    pub fn transport_residual(&self, t: f64, sample: &GridSample, dt: f64) -> Result<f64> {
        let h1 = self.cutoff.sup_derivative(1)?;
        let p = self.p as f64;
        let mut worst: f64 = 0.0;
        let mut err = None;
        sample.for_each(|x, xi| {
            let r = (|| -> Result<f64> {
                let dtw = (self.localizer_symbol(0, 0, t + dt, x, xi)?
                    - self.localizer_symbol(0, 0, t - dt, x, xi)?)
                    / (2.0 * dt);
                let drift = p * self.a_p(t) * self.xi_pow(xi, self.p as i32 - 1);
                let dxw = self.derivative(0, 0, t, x, xi, 0, 1)?;
                let scale = self.sqrt_rho * self.rho * drift.abs() * h1;
                Ok((dtw + drift * dxw).abs() / scale)
            })();
            match r {
                Ok(v) => worst = worst.max(v),
                Err(e) => err = Some(e),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(worst),
        }
    }

    /// `sup_sample |d_xi^g d_x^s w^{a,b}| / (rho^{1/2+s} (rho^mu / n)^g)`.
    #[allow(clippy::too_many_arguments)]
    pub fn derivative_constant(
        &self,
        alpha: usize,
        beta: usize,
        t: f64,
        gamma: usize,
        sigma: usize,
        sample: &GridSample,
    ) -> Result<f64> {
        let scale = self.sqrt_rho * libm::pow(self.rho, sigma as f64) * libm::pow(self.rho_mu / self.n, gamma as f64);
        let mut worst: f64 = 0.0;
        let mut err = None;
        sample.for_each(|x, xi| match self.derivative(alpha, beta, t, x, xi, gamma, sigma) {
            Ok(v) => worst = worst.max(v.abs()),
            Err(e) => err = Some(e),
        });
        match err {
            Some(e) => Err(e),
            None => Ok(worst / scale),
        }
    }

    /// `d_xi^dxi d_x^dx chi_2`.
    fn chi2_derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<f64> {
        let d = self.cutoff.d_max();
        if dx + dxi > d {
            return Err(Error::Order { requested: dx + dxi, available: d });
        }
        let scale = 1.0 / (4.0 * self.p as f64 * self.c_p);
        let y = scale * self.rho * (x - self.center(t, xi));
        if y.abs() >= 0.5 {
            return Ok(0.0);
        }
        let mut hd = [0.0; 40];
        self.cutoff.derivatives_into(y, &mut hd[..=dx + dxi]);
        let sx = libm::pow(scale * self.rho, dx as f64);
        if dxi == 0 {
            return Ok(sx * hd[dx]);
        }
        let phi = self.phi_derivatives(t, xi, scale, dxi);
        let bell = bell_table(&phi, dxi);
        let v: f64 = (1..=dxi).map(|k| hd[dx + k] * bell[dxi][k]).sum();
        Ok(sx * v)
    }
}

/// `w^{a,b}` as a phase-space symbol.
#[derive(Debug, Clone, Copy)]
pub struct LocalizerSymbol<'a> {
    pub fam: &'a LocalizerFamily,
    pub alpha: usize,
    pub beta: usize,
}

impl SymbolEvaluator for LocalizerSymbol<'_> {
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        Ok(Complex64::new(self.fam.derivative(self.alpha, self.beta, t, x, xi, dxi, dx)?, 0.0))
    }

    fn value(&self, t: f64, x: f64, xi: f64) -> Complex64 {
        let mut ha = [0.0; 40];
        let mut hb = [0.0; 40];
        if !self.fam.bank(t, x, xi, &mut ha[..=self.alpha], &mut hb[..=self.beta]) {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(self.fam.sqrt_rho * ha[self.alpha] * hb[self.beta], 0.0)
    }

    fn max_orders(&self) -> (usize, usize) {
        let d = self.fam.cutoff.d_max();
        (d.saturating_sub(self.alpha.max(self.beta)), d.saturating_sub(self.alpha))
    }

    fn support(&self, t: f64) -> Option<SupportBox> {
        Some(self.fam.support_box(t))
    }
}

/// The frequency cutoff `chi_1`.
#[derive(Debug, Clone, Copy)]
pub struct Chi1Symbol<'a>(pub &'a LocalizerFamily);

impl SymbolEvaluator for Chi1Symbol<'_> {
    fn derivative(&self, _t: f64, _x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        if dx > 0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let f = self.0;
        let r = f.rho_mu / (3.0 * f.n);
        let v = f.cutoff.derivative(r * (xi - f.n), dxi)? * libm::pow(r, dxi as f64);
        Ok(Complex64::new(v, 0.0))
    }

    fn value(&self, _t: f64, _x: f64, xi: f64) -> Complex64 {
        Complex64::new(self.0.chi1(xi), 0.0)
    }

    fn max_orders(&self) -> (usize, usize) {
        (self.0.cutoff.d_max(), usize::MAX)
    }

    fn x_independent(&self) -> bool {
        true
    }
}

/// The space cutoff `chi_2`.
#[derive(Debug, Clone, Copy)]
pub struct Chi2Symbol<'a>(pub &'a LocalizerFamily);

impl SymbolEvaluator for Chi2Symbol<'_> {
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        Ok(Complex64::new(self.0.chi2_derivative(t, x, xi, dxi, dx)?, 0.0))
    }

    fn value(&self, t: f64, x: f64, xi: f64) -> Complex64 {
        Complex64::new(self.0.chi2(t, x, xi), 0.0)
    }

    fn max_orders(&self) -> (usize, usize) {
        let d = self.0.cutoff.d_max();
        (d, d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::Family;

    fn family(rho: f64, exps: Exponents, regime: Regime) -> LocalizerFamily {
        let model = Family::Zero.model(2, 1.0, 1.0).unwrap();
        LocalizerFamily::new(&model, 0.5, rho, exps, regime, 4, SmoothCutoff::new(12)).unwrap()
    }

    #[test]
    fn exponent_defaults_and_order_cap() {
        let e2 = Exponents::paper_default(2);
        assert_eq!((e2.a, e2.mu), (5.0, 3.5));
        assert!(e2.admissible(2));
        let e3 = Exponents::paper_default(3);
        assert_eq!((e3.a, e3.mu), (5.75, 4.5));
        assert!(e3.admissible(3));
        // (5 q + 6) / 0.5
        assert_eq!(e2.required_s(2, 0), 12);
        assert_eq!(e2.required_s(2, 1), 22);
        assert!(!Exponents { a: 2.2, mu: 1.0 }.admissible(2));
    }

    #[test]
    fn bell_polynomials() {
        let x = [2.0, 3.0, 5.0, 7.0];
        let b = bell_table(&x, 4);
        assert_eq!(b[3][2], 3.0 * 2.0 * 3.0);
        assert_eq!(b[4][2], 4.0 * 2.0 * 5.0 + 3.0 * 9.0);
        assert_eq!(b[3][3], 8.0);
        assert_eq!(b[4][1], 7.0);
    }

    #[test]
    fn initial_datum_value() {
        let f = family(2.0, Exponents::paper_default(2), Regime::Paper);
        let v = f.localizer_symbol(0, 0, 0.0, 0.5, f.n()).unwrap();
        assert!((v - libm::sqrt(2.0)).abs() < 1e-15);
        assert_eq!(f.localizer_symbol(2, 1, 0.0, 0.5, f.n() * (1.0 + 1.0 / f.rho_mu())).unwrap(), 0.0);
        assert_eq!(f.localizer_symbol(1, 0, 0.0, 0.5 + 0.1 / f.rho(), f.n()).unwrap(), 0.0);
    }

    #[test]
    fn paper_regime_rejects_substituted_exponents() {
        let model = Family::Zero.model(2, 1.0, 1.0).unwrap();
        let r = LocalizerFamily::new(&model, 0.0, 4.0, Exponents { a: 2.2, mu: 1.0 }, Regime::Paper, 4, SmoothCutoff::new(8));
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = family(3.0, Exponents { a: 2.2, mu: 1.0 }, Regime::Substituted);
        let t = 0.4 * f.t_k();
        let c = f.center(t, f.n());
        for &(alpha, beta) in &[(0usize, 0usize), (1, 0), (0, 2), (1, 1)] {
            for &(y1, y2) in &[(0.3, 0.1), (-0.35, 0.3), (0.1, -0.4)] {
                let xi = f.n() * (1.0 + y2 / f.rho_mu());
                let x = c + y1 / f.rho() + (f.center(t, xi) - c);
                for dxi in 1..=3 {
                    let step = 1e-4 * f.n() / f.rho_mu();
                    let exact = f.derivative(alpha, beta, t, x, xi, dxi, 1).unwrap();
                    let g = |z: f64| f.derivative(alpha, beta, t, x, z, dxi - 1, 1).unwrap();
                    let fd = (8.0 * (g(xi + step) - g(xi - step)) - (g(xi + 2.0 * step) - g(xi - 2.0 * step)))
                        / (12.0 * step);
                    let scale = f.amplitude() * f.rho() * libm::pow(f.rho_mu() / f.n(), dxi as f64);
                    assert!((exact - fd).abs() < 1e-6 * (scale + exact.abs()), "({alpha},{beta}) dxi={dxi}: {exact} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn antiderivative_table_accuracy() {
        let lead = LeadingCoefficient::Sine { base: 1.0, amplitude: 0.5, omega: 3.0 };
        let tab = AntiderivativeTable::new(&lead, 2.0);
        for i in 0..=97 {
            let t = 2.0 * i as f64 / 97.0;
            assert!((tab.eval(t) - lead.antiderivative(t)).abs() < 1e-10 * 2.0);
        }
        let c = AntiderivativeTable::new(&LeadingCoefficient::Constant(-1.5), 1.0);
        assert_eq!(c.nodes(), 2);
        assert_eq!(c.eval(0.25), -0.375);
    }

    #[test]
    fn chi_cutoffs_cover_the_support() {
        let f = family(2.0, Exponents::paper_default(2), Regime::Paper);
        assert_eq!(f.chi1(f.n()), 1.0);
        assert_eq!(f.chi1(4.0 * f.n()), 0.0);
        let t = f.t_k();
        assert_eq!(f.chi2(t, f.center(t, 1.1 * f.n()), 1.1 * f.n()), 1.0);
        let sample = f.phase_space_sample(t, 41, 41, 1.2);
        sample.for_each(|x, xi| {
            let w = f.localizer_symbol(2, 2, t, x, xi).unwrap();
            assert_eq!((1.0 - f.chi1(xi)) * w, 0.0);
            assert_eq!((1.0 - f.chi2(t, x, xi)) * w, 0.0);
        });
    }

    #[test]
    fn support_stays_in_the_lemma_box() {
        let model = Family::Zero.model(2, 1.0, 1.0).unwrap();
        for rho in [4.0, 8.0, 16.0] {
            let f = LocalizerFamily::new(&model, 0.0, rho, Exponents::paper_default(2), Regime::Paper, 4, SmoothCutoff::new(8))
                .unwrap();
            for t in [0.0, 0.5 * f.t_k(), f.t_k()] {
                let sample = f.lemma2_sample(t, 81, 81, 3.0);
                for (a, b) in [(0, 0), (1, 0), (0, 1), (2, 2), (4, 0), (0, 4), (1, 3)] {
                    let r = f.support_check(a, b, t, &sample).unwrap();
                    assert_eq!(r.max_outside, 0.0);
                    assert!(r.points_outside > 0);
                }
            }
        }
    }

    #[test]
    fn transport_residual_is_second_order() {
        let model = Family::Zero.model(2, 1.0, 1.0).unwrap();
        let f = LocalizerFamily::new(&model, 0.3, 4.0, Exponents::paper_default(2), Regime::Paper, 4, SmoothCutoff::new(8))
            .unwrap();
        let t = 0.5 * f.t_k();
        let sample = f.phase_space_sample(t, 41, 41, 0.9);
        let r1 = f.transport_residual(t, &sample, 1e-5 * f.t_k()).unwrap();
        let r2 = f.transport_residual(t, &sample, 5e-6 * f.t_k()).unwrap();
        assert!(r1 < 1e-4, "{r1} {r2}");
        assert!(r2 < 0.3 * r1 || r2 < 1e-10);
    }

    #[test]
    fn derivative_constants_are_stable_in_rho() {
        let model = Family::Zero.model(2, 1.0, 1.0).unwrap();
        let mut all = Vec::new();
        for rho in [4.0, 8.0, 16.0] {
            let f = LocalizerFamily::new(&model, 0.0, rho, Exponents::paper_default(2), Regime::Paper, 4, SmoothCutoff::new(8))
                .unwrap();
            let t = f.t_k();
            let sample = f.phase_space_sample(t, 61, 61, 1.0);
            let mut row = Vec::new();
            for (g, s) in [(0, 0), (1, 0), (0, 1), (1, 1), (2, 2)] {
                row.push(f.derivative_constant(1, 1, t, g, s, &sample).unwrap());
            }
            all.push(row);
        }
        for j in 0..all[0].len() {
            let hi = all.iter().map(|r| r[j]).fold(0.0, f64::max);
            let lo = all.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            assert!(lo > 0.0 && hi / lo <= 2.0, "column {j}: {lo} .. {hi}");
        }
    }
}
