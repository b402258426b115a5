//! The growth pipeline: concentration point, packet, solve, localization,
//! `sigma_k(t)`, the `B_k` bookkeeping, and the growth-class fits across a
//! sweep of radii.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::coefficients::{lemma1_extract, CoefficientModel, Family, LemmaOnePoint, SearchSpec, ViolationWitness};
use crate::cutoff::{build_packet_profile, SmoothCutoff};
use crate::fit::{line_fit, log_log_slope, origin_fit, profile_likelihood_ratio, LineFit};
use crate::grid::{FieldState, SymbolGrid2D};
use crate::psdo::{check_band, restrict};
use crate::quadrature::{simpson, QuadratureSpec};
use crate::solver::{build_wavepacket, solve_cauchy_with, SolverConfig};
use crate::symbols::{Exponents, LocalizerFamily, Regime};
use crate::{Error, Result};

/// Frozen `A_s`: the largest decay rate of `sigma_k` per unit of
/// `(1 + n^{p-1} / rho_k) t` seen for real coefficients on the desk sweep,
/// rounded up.
pub const A_S_FROZEN: f64 = 8.7;

/// Residual floor of the growth-class likelihood ratio.
pub const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub family: Family,
    pub p: u32,
    pub t_max: f64,
    /// Constant leading coefficient.
    pub a_p: f64,
    pub m_target: f64,
    pub ks: Vec<u32>,
    /// Seed radius per `k`; the seed point is `y = 0`.
    pub radii: Vec<f64>,
    pub qs: Vec<u32>,
    /// Exponents driving `n = rho^a` and the localizers of the solves.
    pub exponents: Exponents,
    pub regime: Regime,
    /// Admissible exponents used for the reported order caps.
    pub paper_exponents: Exponents,
    pub s_cap: usize,
    pub half_length: f64,
    pub oversampling: f64,
    /// Largest grid a single solve may allocate.
    pub max_grid: usize,
    pub a_s: f64,
    pub uniform_checkpoints: usize,
    pub geometric_checkpoints: usize,
    pub sampling: Sampling,
    pub solver: SolverConfig,
}

impl ExperimentPlan {
    /// The desk sweep: `p = 2`, `a_2 = 1`, `rho_k` in `{4, 8, 16}` at
    /// `a = 2.2`, `mu = 1`.
    pub fn desk(family: Family) -> Self {
        Self {
            family,
            p: 2,
            t_max: 1.0,
            a_p: 1.0,
            m_target: 0.25,
            ks: vec![0, 1, 2],
            radii: vec![4.0, 8.0, 16.0],
            qs: vec![0, 1, 2],
            exponents: Exponents { a: 2.2, mu: 1.0 },
            regime: Regime::Substituted,
            paper_exponents: Exponents::paper_default(2),
            s_cap: 4,
            half_length: 512.0,
            oversampling: 1.5,
            max_grid: 1 << 22,
            a_s: A_S_FROZEN,
            uniform_checkpoints: 8,
            geometric_checkpoints: 4,
            sampling: Sampling::default(),
            solver: SolverConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPlan(msg));
        if self.p < 2 {
            return bad(alloc::format!("order p={} must be at least 2", self.p));
        }
        if self.ks.is_empty() || self.ks.len() != self.radii.len() {
            return bad("k-list and radii must be nonempty and of equal length".into());
        }
        if self.radii.iter().any(|r| !(*r > 1.0)) || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return bad("radii must exceed 1 and increase".into());
        }
        if self.ks.windows(2).any(|w| w[1] <= w[0]) {
            return bad("k-list must increase".into());
        }
        if self.qs.is_empty() {
            return bad("q-list is empty".into());
        }
        if !self.paper_exponents.admissible(self.p) {
            return bad(alloc::format!(
                "reference exponents a={}, mu={} are not admissible for p={}",
                self.paper_exponents.a,
                self.paper_exponents.mu,
                self.p
            ));
        }
        let e = self.exponents;
        match self.regime {
            Regime::Paper if !e.admissible(self.p) => {
                return bad(alloc::format!("exponents a={}, mu={} are not admissible", e.a, e.mu));
            }
            Regime::Substituted if !(e.mu > 0.0 && e.a > e.mu + 1.0) => {
                return bad(alloc::format!("substituted exponents need a > mu + 1 > 1, got a={}, mu={}", e.a, e.mu));
            }
            _ => {}
        }
        for &rho in &self.radii {
            let t_k = self.t_k(rho);
            if t_k > self.t_max {
                return bad(alloc::format!("horizon t_k={t_k} for rho={rho} exceeds T={}", self.t_max));
            }
        }
        if !(self.t_max > 0.0 && self.a_p != 0.0 && self.half_length > 0.0 && self.oversampling >= 1.0) {
            return bad("T, a_p, L and the oversampling must be positive (oversampling >= 1)".into());
        }
        if !(self.a_s >= 0.0) {
            return bad("A_s must be nonnegative".into());
        }
        if self.uniform_checkpoints == 0 {
            return bad("need at least one uniform checkpoint".into());
        }
        self.solver.validate().map_err(|e| Error::InvalidPlan(alloc::format!("{e}")))
    }

    pub fn n(&self, rho: f64) -> f64 {
        libm::pow(rho, self.exponents.a)
    }

    pub fn t_k(&self, rho: f64) -> f64 {
        rho / libm::pow(self.n(rho), self.p as f64 - 1.0)
    }

    /// Order cap required at the reference exponents for probe `q`.
    pub fn required_s(&self, q: u32) -> usize {
        self.paper_exponents.required_s(self.p, q)
    }

    /// Order cap of the solves: the requirement at the plan exponents for the
    /// largest `q`, truncated at `s_cap`.
    pub fn s_used(&self) -> usize {
        let q = self.qs.iter().copied().max().unwrap_or(0);
        self.exponents.required_s(self.p, q).min(self.s_cap)
    }

    pub fn indices(&self) -> Vec<(usize, usize)> {
        index_set(self.s_used())
    }

    /// `rho^{mu+1} / n`.
    pub fn weight(&self, rho: f64) -> f64 {
        libm::pow(rho, self.exponents.mu + 1.0) / self.n(rho)
    }

    /// Damping of the first discarded order, `weight^{s+1}`.
    pub fn tail_weight(&self, rho: f64) -> f64 {
        libm::pow(self.weight(rho), self.s_used() as f64 + 1.0)
    }

    pub fn model(&self) -> Result<CoefficientModel> {
        self.family.model(self.p, self.t_max, self.a_p)
    }
}

/// `{(a, b) : a + b <= s}` ordered by total order, then by `a` descending.
pub fn index_set(s: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 0..=s {
        for b in 0..=total {
            out.push((total - b, b));
        }
    }
    out
}

/// Uniform times `i t_k / u` plus `t_k (1 - 2^{-j})`, sorted, from 0.
pub fn checkpoint_times(t_k: f64, uniform: usize, geometric: usize) -> Vec<f64> {
    let mut ts = vec![0.0];
    for i in 1..=uniform {
        ts.push(t_k * i as f64 / uniform as f64);
    }
    for j in 1..=geometric {
        ts.push(t_k * (1.0 - libm::pow(2.0, -(j as f64))));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t_k);
    if let Some(last) = ts.last_mut() {
        *last = t_k;
    }
    ts
}

/// Norms of `v^{a,b} = op(w^{a,b}(t)) u` over an index set.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedNorms {
    pub t: f64,
    pub norms: Vec<f64>,
    /// `int x |v^{0,0}|^2 / int |v^{0,0}|^2` when `(0, 0)` is in the set.
    pub center_of_mass: Option<f64>,
}

/// Where the localized fields are sampled for their norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// The grid nodes: the norm of the discrete field.
    Grid,
    /// A uniform mesh over the support box with this many points per unit of
    /// `rho (x - center)`; the derivatives of `h` need about 512 for a
    /// relative error of 1e-5 at order 4.
    Density(f64),
}

impl Default for Sampling {
    fn default() -> Self {
        Self::Density(512.0)
    }
}

/// Applies every localizer of the index set in one sweep over the support box.
pub fn localize_solution(
    fam: &LocalizerFamily,
    u: &FieldState,
    indices: &[(usize, usize)],
    grid: &SymbolGrid2D,
    sampling: Sampling,
) -> Result<LocalizedNorms> {
    check_band(u, grid)?;
    let cutoff = fam.cutoff();
    let d = cutoff.d_max();
    let amax = indices.iter().map(|i| i.0).max().unwrap_or(0);
    let bmax = indices.iter().map(|i| i.1).max().unwrap_or(0);
    if amax > d || bmax > d {
        return Err(Error::Order { requested: amax.max(bmax), available: d });
    }
    let t = u.t;
    let rho = fam.rho();
    let bx = fam.support_box(t);
    let (rows, cols) = restrict(grid, &bx);

    // Frequency factors do not depend on x.
    let mut hb = vec![0.0; bmax + 1];
    let mut xi = Vec::new();
    let mut centers = Vec::new();
    let mut amps = Vec::new();
    let mut hbs = Vec::new();
    for m in cols {
        let c = u.spectrum[m];
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let k = grid.xi(m);
        let center = fam.center(t, k);
        let (_, y2) = fam.args(t, center, k);
        if y2.abs() >= 0.5 {
            continue;
        }
        cutoff.derivatives_into(y2, &mut hb);
        xi.push(k);
        centers.push(center);
        amps.push(c);
        hbs.extend_from_slice(&hb);
    }
    let nb = bmax + 1;
    let increasing = centers.windows(2).all(|w| w[1] >= w[0]);
    let decreasing = centers.windows(2).all(|w| w[1] <= w[0]);
    let half = 0.5 / rho;
    let window = |x: f64| -> core::ops::Range<usize> {
        if increasing {
            let lo = centers.partition_point(|&c| c <= x - half);
            let hi = centers.partition_point(|&c| c < x + half);
            lo..hi.max(lo)
        } else if decreasing {
            let lo = centers.partition_point(|&c| c >= x + half);
            let hi = centers.partition_point(|&c| c > x - half);
            lo..hi.max(lo)
        } else {
            0..centers.len()
        }
    };

    let (xs, step): (Vec<f64>, f64) = match sampling {
        Sampling::Grid => (rows.map(|j| grid.x(j)).collect(), grid.dx()),
        Sampling::Density(density) => {
            if !(density > 0.0) {
                return Err(Error::Domain("sampling density must be positive".into()));
            }
            let h = 1.0 / (rho * density);
            if bx.is_empty() || !(bx.x_hi > bx.x_lo) {
                (Vec::new(), h)
            } else {
                let count = libm::ceil((bx.x_hi - bx.x_lo) / h) as usize + 1;
                ((0..count).map(|i| bx.x_lo + h * i as f64).collect(), h)
            }
        }
    };

    let origin = indices.iter().position(|&i| i == (0, 0));
    let scale = fam.amplitude() / grid.n() as f64;
    let mut ha = vec![0.0; amax + 1];
    let mut acc = vec![Complex64::new(0.0, 0.0); indices.len()];
    let mut sums = vec![0.0; indices.len()];
    let (mut first, mut zeroth) = (0.0, 0.0);
    for &x in &xs {
        acc.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
        for m in window(x) {
            let y1 = rho * (x - centers[m]);
            if y1.abs() >= 0.5 {
                continue;
            }
            cutoff.derivatives_into(y1, &mut ha);
            let z = Complex64::from_polar(1.0, xi[m] * x) * amps[m];
            let hbm = &hbs[m * nb..(m + 1) * nb];
            for (a, &(al, be)) in acc.iter_mut().zip(indices) {
                *a += z * (ha[al] * hbm[be]);
            }
        }
        for (i, a) in acc.iter().enumerate() {
            let e = (a * scale).norm_sqr();
            sums[i] += e;
            if Some(i) == origin {
                first += x * e;
                zeroth += e;
            }
        }
    }
    Ok(LocalizedNorms {
        t,
        norms: sums.iter().map(|s| libm::sqrt(s * step)).collect(),
        center_of_mass: if zeroth > 0.0 { Some(first / zeroth) } else { None },
    })
}

/// `sigma = sum weight^{a+b} ||v^{a,b}||`.
pub fn sigma(norms: &[f64], indices: &[(usize, usize)], weight: f64) -> f64 {
    norms
        .iter()
        .zip(indices)
        .map(|(v, &(a, b))| libm::pow(weight, (a + b) as f64) * v)
        .sum()
}

/// `sigma_k` at every checkpoint of a norm table.
pub fn sigma_series(table: &[LocalizedNorms], indices: &[(usize, usize)], weight: f64) -> Vec<f64> {
    table.iter().map(|r| sigma(&r.norms, indices, weight)).collect()
}

/// `int_0^t B_k` with
/// `B_k = Im a_{p-1}(s, x_k + p A_p(s) n^{p-1}) n^{p-1} - A_s (1 + n^{p-1} / rho_k)`.
pub fn bk_integral(model: &CoefficientModel, fam: &LocalizerFamily, a_s: f64, t: f64) -> Result<f64> {
    let t_k = fam.t_k();
    if !(t >= 0.0 && t <= t_k * (1.0 + 1e-12)) {
        return Err(Error::Domain(alloc::format!("time {t} outside [0, t_k = {t_k}]")));
    }
    let n = fam.n();
    let np = libm::pow(n, fam.p() as f64 - 1.0);
    let path = np * t * model.p() as f64 * model.sup_a_p();
    let panels = QuadratureSpec::default().panels(path, path).max(64);
    let drive = simpson(|s| model.im_subprincipal(s, fam.center(s, n)) * np, 0.0, t, panels);
    Ok(drive - a_s * (1.0 + np / fam.rho()) * t)
}

/// One radius of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRecord {
    pub k: u32,
    pub rho_k: f64,
    pub x_k: f64,
    pub n: f64,
    pub t_k: f64,
    /// Present when the seed `(0, rho)` violates the decay threshold.
    pub lemma_point: Option<LemmaOnePoint>,
    pub indices: Vec<(usize, usize)>,
    pub times: Vec<f64>,
    /// `norms[i][j] = ||v^{indices[j]}(times[i])||`.
    pub norms: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub bk: Vec<f64>,
    pub solution_norms: Vec<f64>,
    pub centers: Vec<Option<f64>>,
    /// `x_k + p A_p(t) n^{p-1}` at each checkpoint.
    pub predicted_centers: Vec<f64>,
    pub weight: f64,
    pub tail_weight: f64,
    pub grid_n: usize,
    pub steps: usize,
    /// Least-squares slope of `ln sigma` in `t`, first checkpoint excluded.
    pub growth_rate: Option<f64>,
}

impl GrowthRecord {
    pub fn sigma0(&self) -> f64 {
        self.sigma[0]
    }

    pub fn sigma_end(&self) -> f64 {
        *self.sigma.last().unwrap_or(&f64::NAN)
    }

    /// `ln(sigma_k(t_k) / sigma_k(0))`.
    pub fn log_growth(&self) -> f64 {
        libm::log(self.sigma_end() / self.sigma0())
    }
}

/// Concentration point for radius index `i`: the extracted point when the
/// seed `(0, rho)` violates the threshold, otherwise `(0, rho)` itself.
pub fn concentration_point(
    plan: &ExperimentPlan,
    model: &CoefficientModel,
    i: usize,
) -> Result<(f64, f64, Option<LemmaOnePoint>)> {
    let rho = plan.radii[i];
    let seed = ViolationWitness { y: 0.0, delta: rho, margin: 0.0 };
    match lemma1_extract(model, plan.m_target, plan.ks[i], &seed, &SearchSpec::default()) {
        Ok(pt) => Ok((pt.x_k, pt.rho_k, Some(pt))),
        Err(Error::SeedInvalid { .. }) | Err(Error::Degenerate { .. }) => Ok((0.0, rho, None)),
        Err(e) => Err(e),
    }
}

/// Localizer family of the solves at a concentration point.
pub fn plan_family(plan: &ExperimentPlan, model: &CoefficientModel, x_k: f64, rho_k: f64) -> Result<LocalizerFamily> {
    let s = plan.s_used();
    LocalizerFamily::new(model, x_k, rho_k, plan.exponents, plan.regime, s, SmoothCutoff::new(s + 2))
}

/// Full pipeline for the `i`-th radius of the plan.
pub fn run_single_k(plan: &ExperimentPlan, model: &CoefficientModel, i: usize) -> Result<GrowthRecord> {
    let (x_k, rho_k, lemma_point) = concentration_point(plan, model, i)?;
    let fam = plan_family(plan, model, x_k, rho_k)?;
    let n = fam.n();
    let grid = SymbolGrid2D::for_packet(plan.half_length, n, plan.oversampling)?;
    if grid.n() > plan.max_grid {
        return Err(Error::Resource(alloc::format!(
            "rho={rho_k} needs {} grid points, above the cap {}",
            grid.n(),
            plan.max_grid
        )));
    }
    let profile = build_packet_profile(fam.cutoff(), &grid)?;
    let g = build_wavepacket(&profile, x_k, n, &grid, plan.solver.guard)?;
    let times = checkpoint_times(fam.t_k(), plan.uniform_checkpoints, plan.geometric_checkpoints);
    let indices = plan.indices();
    let mut table = Vec::with_capacity(times.len());
    let mut solution_norms = Vec::with_capacity(times.len());
    let stats = solve_cauchy_with(model, &g, &times, &grid, &plan.solver, |state| {
        solution_norms.push(state.norm(&grid));
        table.push(localize_solution(&fam, state, &indices, &grid, plan.sampling)?);
        Ok(())
    })?;
    let weight = fam.weight();
    let sigma = sigma_series(&table, &indices, weight);
    let bk = times.iter().map(|&t| bk_integral(model, &fam, plan.a_s, t)).collect::<Result<Vec<_>>>()?;
    let growth_rate = if times.len() > 2 {
        let ys: Vec<f64> = sigma[1..].iter().map(|s| libm::log(*s)).collect();
        Some(line_fit(&times[1..], &ys).slope)
    } else {
        None
    };
    let np = libm::pow(n, fam.p() as f64 - 1.0);
    let predicted_centers = times.iter().map(|&t| x_k + fam.p() as f64 * fam.big_a(t) * np).collect();
    Ok(GrowthRecord {
        k: plan.ks[i],
        rho_k,
        x_k,
        n,
        t_k: fam.t_k(),
        lemma_point,
        indices,
        times,
        centers: table.iter().map(|r| r.center_of_mass).collect(),
        norms: table.into_iter().map(|r| r.norms).collect(),
        sigma,
        bk,
        solution_norms,
        predicted_centers,
        weight,
        tail_weight: plan.tail_weight(rho_k),
        grid_n: grid.n(),
        steps: stats.steps,
        growth_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthClass {
    /// `ln(sigma(t_k) / sigma(0)) ~ lambda rho`
    Exponential,
    /// `ln(sigma(t_k) / sigma(0)) ~ gamma ln(1 + rho)`
    Polynomial,
}

impl GrowthClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Exponential => "exponential",
            Self::Polynomial => "polynomial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthClassFit {
    pub exponential: LineFit,
    pub polynomial: LineFit,
    /// Likelihood ratio of the exponential over the polynomial model.
    pub lr_exponential: f64,
    pub class: GrowthClass,
}

impl GrowthClassFit {
    /// Likelihood ratio in favour of the chosen class.
    pub fn lr_for_class(&self) -> f64 {
        match self.class {
            GrowthClass::Exponential => self.lr_exponential,
            GrowthClass::Polynomial => 1.0 / self.lr_exponential,
        }
    }
}

/// Origin fits of the log-growth against `rho` and `ln(1 + rho)`.
pub fn classify_growth(rho: &[f64], log_growth: &[f64]) -> GrowthClassFit {
    let lp: Vec<f64> = rho.iter().map(|r| libm::log(1.0 + r)).collect();
    let exponential = origin_fit(rho, log_growth);
    let polynomial = origin_fit(&lp, log_growth);
    let lr = profile_likelihood_ratio(exponential.rss, polynomial.rss, rho.len(), RSS_FLOOR);
    let class = if lr >= 1.0 { GrowthClass::Exponential } else { GrowthClass::Polynomial };
    GrowthClassFit { exponential, polynomial, lr_exponential: lr, class }
}

/// Per-probe verdict with threshold `M_q = 1/2 + 2 + a q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QVerdict {
    pub q: u32,
    pub threshold_m: f64,
    /// Largest log-log slope of `sigma_k(t_k)` compatible with the upper
    /// bound: `M_q + 1/2`.
    pub slope_bound: f64,
    pub within_upper_bound: bool,
    /// Secant exponent of `sigma_k(t_k)` against `1 + rho_k` over the last
    /// two radii.
    pub secant_exponent: Option<f64>,
    /// Exponential class whose secant exponent already exceeds `M_q`.
    pub contradiction: bool,
    /// Radius where `lambda rho` overtakes `M_q ln(1 + rho)` for the fitted
    /// exponential rate.
    pub crossover_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomySummary {
    pub family: String,
    pub p: u32,
    pub regime: Regime,
    pub exponents: Exponents,
    pub s_used: usize,
    pub rho: Vec<f64>,
    pub log_sigma0: Vec<f64>,
    pub log_sigma_end: Vec<f64>,
    pub log_growth: Vec<f64>,
    /// `ln sigma_k(t_k)` against `rho_k`.
    pub lower_fit: LineFit,
    /// `ln sigma_k(t_k)` against `ln rho_k`.
    pub upper_slope: Option<f64>,
    pub growth: GrowthClassFit,
    pub q_verdicts: Vec<QVerdict>,
    pub tail_weight_max: f64,
}

/// Smallest `rho > 0` with `lambda rho >= m ln(1 + rho)`, by bisection.
fn crossover(lambda: f64, m: f64) -> Option<f64> {
    if !(lambda > 0.0) {
        return None;
    }
    if lambda >= m {
        return Some(0.0);
    }
    let f = |r: f64| lambda * r - m * libm::log(1.0 + r);
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    let mut lo = hi / 2.0;
    if f(lo) >= 0.0 {
        lo = 0.0;
    }
    // f is convex with f(0) = 0 and f'(0) < 0; keep lo on the negative side.
    if lo == 0.0 {
        lo = 1e-12;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

pub fn summarize(plan: &ExperimentPlan, records: &[GrowthRecord]) -> Result<DichotomySummary> {
    if records.is_empty() {
        return Err(Error::InvalidPlan("no records to summarize".into()));
    }
    let rho: Vec<f64> = records.iter().map(|r| r.rho_k).collect();
    let log_sigma0: Vec<f64> = records.iter().map(|r| libm::log(r.sigma0())).collect();
    let log_sigma_end: Vec<f64> = records.iter().map(|r| libm::log(r.sigma_end())).collect();
    let log_growth: Vec<f64> = records.iter().map(|r| r.log_growth()).collect();
    let lower_fit = line_fit(&rho, &log_sigma_end);
    let sig_end: Vec<f64> = records.iter().map(|r| r.sigma_end()).collect();
    let upper_slope = log_log_slope(&rho, &sig_end);
    let growth = classify_growth(&rho, &log_growth);
    let secant = if records.len() >= 2 {
        let i = records.len() - 1;
        let dl = log_sigma_end[i] - log_sigma_end[i - 1];
        let dr = libm::log((1.0 + rho[i]) / (1.0 + rho[i - 1]));
        Some(dl / dr)
    } else {
        None
    };
    let q_verdicts = plan
        .qs
        .iter()
        .map(|&q| {
            let m = 2.5 + plan.exponents.a * q as f64;
            let slope_bound = m + 0.5;
            QVerdict {
                q,
                threshold_m: m,
                slope_bound,
                within_upper_bound: upper_slope.map(|s| s <= slope_bound).unwrap_or(true),
                secant_exponent: secant,
                contradiction: growth.class == GrowthClass::Exponential && secant.map(|s| s > m).unwrap_or(false),
                crossover_rho: match growth.class {
                    GrowthClass::Exponential => crossover(growth.exponential.slope, m),
                    GrowthClass::Polynomial => None,
                },
            }
        })
        .collect();
    Ok(DichotomySummary {
        family: plan.family.name().into(),
        p: plan.p,
        regime: plan.regime,
        exponents: plan.exponents,
        s_used: plan.s_used(),
        rho,
        log_sigma0,
        log_sigma_end,
        log_growth,
        lower_fit,
        upper_slope,
        growth,
        q_verdicts,
        tail_weight_max: records.iter().map(|r| r.tail_weight).fold(0.0, f64::max),
    })
}

/// Likelihood ratio separating an exponential family from a polynomial one:
/// the smaller of the two ratios in favour of the respective classes, zero
/// when the classes do not split that way.
pub fn class_separation(violating: &DichotomySummary, decaying: &DichotomySummary) -> f64 {
    if violating.growth.class != GrowthClass::Exponential || decaying.growth.class != GrowthClass::Polynomial {
        return 0.0;
    }
    violating.growth.lr_for_class().min(decaying.growth.lr_for_class())
}

/// Records in order of `k`, stopping at the first failure; the summary is
/// present when at least one record completed.
#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyOutcome {
    pub records: Vec<GrowthRecord>,
    pub summary: Option<DichotomySummary>,
    pub error: Option<Error>,
}

/// Sequential sweep over the plan's radii.
pub fn run_dichotomy_experiment(plan: &ExperimentPlan) -> Result<DichotomyOutcome> {
    plan.validate()?;
    let model = plan.model()?;
    let mut records = Vec::with_capacity(plan.radii.len());
    let mut error = None;
    for i in 0..plan.radii.len() {
        match run_single_k(plan, &model, i) {
            Ok(r) => records.push(r),
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    Ok(assemble(plan, records, error))
}

/// Summary of the completed records plus the first failure.
pub fn assemble(plan: &ExperimentPlan, records: Vec<GrowthRecord>, error: Option<Error>) -> DichotomyOutcome {
    let summary = if records.is_empty() { None } else { summarize(plan, &records).ok() };
    DichotomyOutcome { records, summary, error }
}

/// `max_t max(0, -ln(sigma(t) / sigma(0))) / ((1 + n^{p-1} / rho) t)` over
/// real-coefficient records: the decay `B_k` must absorb.
pub fn measure_a_s(records: &[GrowthRecord], p: u32) -> f64 {
    let mut out: f64 = 0.0;
    for r in records {
        let np = libm::pow(r.n, p as f64 - 1.0);
        for (t, s) in r.times.iter().zip(&r.sigma).skip(1) {
            let drop = -libm::log(s / r.sigma0());
            if drop > 0.0 {
                out = out.max(drop / ((1.0 + np / r.rho_k) * t));
            }
        }
    }
    out
}
