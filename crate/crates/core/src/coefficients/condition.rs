//! Trajectory integrals and the windowed check of the decay condition.

use alloc::vec;
use alloc::vec::Vec;

use super::CoefficientModel;
use crate::fit::{line_fit, log_log_slope};
use crate::quadrature::{simpson, QuadratureSpec};
use crate::{Error, Result};

/// `int_{lo}^{hi} Im a_{p-1}(t, x + p a_p(tau) theta) d theta`.
pub fn trajectory_integral(
    model: &CoefficientModel,
    x: f64,
    t: f64,
    tau: f64,
    rho_lo: f64,
    rho_hi: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_pair(model, tau, t)?;
    if !(rho_lo <= rho_hi) {
        return Err(Error::Domain(alloc::format!("empty interval [{rho_lo}, {rho_hi}]")));
    }
    let speed = model.p() as f64 * model.a_p(tau);
    let scale = rho_lo.abs().max(rho_hi.abs());
    let panels = quad.panels(rho_hi - rho_lo, scale);
    Ok(simpson(|th| model.im_subprincipal(t, x + speed * th), rho_lo, rho_hi, panels))
}

/// Which half of the split condition an integral belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `int_0^rho`
    A,
    /// `int_{-rho}^0`
    B,
}

pub fn side_integral(
    model: &CoefficientModel,
    side: Side,
    x: f64,
    t: f64,
    tau: f64,
    rho: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    match side {
        Side::A => trajectory_integral(model, x, t, tau, 0.0, rho, quad),
        Side::B => trajectory_integral(model, x, t, tau, -rho, 0.0, quad),
    }
}

pub(crate) fn check_pair(model: &CoefficientModel, tau: f64, t: f64) -> Result<()> {
    if !(tau >= 0.0 && tau <= t && t <= model.t_max()) {
        return Err(Error::Domain(alloc::format!(
            "need 0 <= tau <= t <= T, got tau={tau}, t={t}, T={}",
            model.t_max()
        )));
    }
    Ok(())
}

/// The sampled triangle `0 <= tau <= t <= T`, reduced to the distinct
/// integrands it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct TrianglePairs {
    /// `(tau, t)` representatives, one per distinct integrand, in the order
    /// `tau` outer, `t` inner.
    pub pairs: Vec<(f64, f64)>,
    /// `p a_p(tau)` for each representative.
    pub speeds: Vec<f64>,
    /// Number of sampled pairs before reduction.
    pub sampled: usize,
}

impl TrianglePairs {
    pub fn new(model: &CoefficientModel, nodes: usize) -> Self {
        let nodes = nodes.max(2);
        let t_indep = model.subprincipal().is_t_independent();
        let p = model.p() as f64;
        let mut pairs = Vec::new();
        let mut keys: Vec<(u64, u64)> = Vec::new();
        let mut speeds = Vec::new();
        let mut sampled = 0;
        for i in 0..nodes {
            let tau = model.t_max() * i as f64 / (nodes - 1) as f64;
            let speed = p * model.a_p(tau);
            for j in i..nodes {
                let t = model.t_max() * j as f64 / (nodes - 1) as f64;
                sampled += 1;
                let key = (speed.to_bits(), if t_indep { 0 } else { t.to_bits() });
                if !keys.contains(&key) {
                    keys.push(key);
                    pairs.push((tau, t));
                    speeds.push(speed);
                }
            }
        }
        Self { pairs, speeds, sampled }
    }
}

/// Search controls for the condition check and the seed search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    /// Half-width `X` of the x-window.
    pub x_window: f64,
    pub x_step: f64,
    /// Nodes per axis of the `(tau, t)` triangle.
    pub triangle_nodes: usize,
    pub quad: QuadratureSpec,
    /// Repeat the min with `2 n - 1` triangle nodes and report the change.
    pub refine_triangle: bool,
    /// Log-log growth exponent at which the condition counts as violated.
    pub growth_threshold: f64,
    /// Relative tolerance of the `X` versus `X / 2` comparison.
    pub window_tolerance: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            x_window: 100.0,
            x_step: 0.25,
            triangle_nodes: 33,
            quad: QuadratureSpec::default(),
            refine_triangle: true,
            growth_threshold: 0.5,
            window_tolerance: 1e-6,
        }
    }
}

impl SearchSpec {
    pub(crate) fn x_nodes(&self) -> Vec<f64> {
        let n = libm::floor(self.x_window / self.x_step + 1e-9) as i64;
        let mut xs = Vec::with_capacity(2 * n as usize + 1);
        xs.push(0.0);
        for i in 1..=n {
            xs.push(i as f64 * self.x_step);
            xs.push(-(i as f64) * self.x_step);
        }
        xs
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_window > 0.0 && self.x_step > 0.0) {
            return Err(Error::Domain("x-window and x-step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Violated => "violated",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub rho_grid: Vec<f64>,
    pub sup_integrals: Vec<f64>,
    /// Window point realizing each sup.
    pub argmax_x: Vec<f64>,
    /// Same sup restricted to `|x| <= X / 2`.
    pub half_window_integrals: Vec<f64>,
    pub fitted_m: f64,
    /// Intercept shifted up to the envelope, so the fitted bound dominates
    /// every sample.
    pub fitted_n: f64,
    /// Plain least-squares intercept.
    pub fitted_n_ls: f64,
    /// Log-log slope of the positive sup values against `rho`.
    pub growth_exponent: Option<f64>,
    pub window_sensitive: bool,
    /// Largest change of the per-rho values under triangle refinement.
    pub refinement_delta: Option<f64>,
    pub verdict: Verdict,
}

impl ConditionReport {
    pub fn bound_value(&self, rho: f64) -> f64 {
        self.fitted_m * libm::log(1.0 + rho) + self.fitted_n
    }
}

/// Integration nodes on `[0, rho_max]` whose spacing on `[rho_{i-1}, rho_i]`
/// obeys the rule for `rho_i`; returns the nodes and the index of each radius.
fn radial_nodes(rho_grid: &[f64], quad: &QuadratureSpec) -> (Vec<f64>, Vec<usize>) {
    let mut nodes = vec![0.0];
    let mut marks = Vec::with_capacity(rho_grid.len());
    let mut lo = 0.0;
    for &rho in rho_grid {
        let panels = quad.panels(rho - lo, rho).max(1);
        let h = (rho - lo) / panels as f64;
        for i in 1..panels {
            nodes.push(lo + h * i as f64);
        }
        nodes.push(rho);
        marks.push(nodes.len() - 1);
        lo = rho;
    }
    (nodes, marks)
}

/// Cumulative Simpson values of `f` on the given nodes, read at `marks`.
fn cumulative_at<F: FnMut(f64) -> f64>(mut f: F, nodes: &[f64], marks: &[usize], out: &mut [f64]) {
    let mut acc = 0.0;
    let mut left = f(nodes[0]);
    let mut m = 0;
    for i in 1..nodes.len() {
        let (s0, s1) = (nodes[i - 1], nodes[i]);
        let right = f(s1);
        acc += (s1 - s0) / 6.0 * (left + 4.0 * f(0.5 * (s0 + s1)) + right);
        left = right;
        while m < marks.len() && marks[m] == i {
            out[m] = acc;
            m += 1;
        }
    }
}

/// Per-rho `min` over the triangle of `int_{-rho}^{rho}` at the point `x`.
fn min_over_pairs(
    model: &CoefficientModel,
    x: f64,
    pairs: &TrianglePairs,
    nodes: &[f64],
    marks: &[usize],
    out: &mut [f64],
) {
    let mut pos = vec![0.0; marks.len()];
    let mut neg = vec![0.0; marks.len()];
    out.iter_mut().for_each(|v| *v = f64::INFINITY);
    for (&(_, t), &speed) in pairs.pairs.iter().zip(&pairs.speeds) {
        cumulative_at(|s| model.im_subprincipal(t, x + speed * s), nodes, marks, &mut pos);
        cumulative_at(|s| model.im_subprincipal(t, x - speed * s), nodes, marks, &mut neg);
        for i in 0..out.len() {
            out[i] = out[i].min(pos[i] + neg[i]);
        }
    }
}

/// Windowed approximation of `sup_x min_{tau <= t} int_{-rho}^{rho} ...`
/// for each radius, with the least-squares `(M, N)` fit and a verdict.
pub fn check_condition(
    model: &CoefficientModel,
    rho_grid: &[f64],
    search: &SearchSpec,
) -> Result<ConditionReport> {
    if rho_grid.is_empty() {
        return Err(Error::Domain("empty radius grid".into()));
    }
    if rho_grid[0] <= 0.0 || rho_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("radius grid must be positive and increasing".into()));
    }
    search.validate()?;
    let pairs = TrianglePairs::new(model, search.triangle_nodes);
    let (nodes, marks) = radial_nodes(rho_grid, &search.quad);
    let n = rho_grid.len();
    let xs = search.x_nodes();

    let mut sup = vec![f64::NEG_INFINITY; n];
    let mut argmax = vec![0.0; n];
    let mut half = vec![f64::NEG_INFINITY; n];
    let mut row = vec![0.0; n];
    for &x in &xs {
        min_over_pairs(model, x, &pairs, &nodes, &marks, &mut row);
        for i in 0..n {
            if row[i] > sup[i] {
                sup[i] = row[i];
                argmax[i] = x;
            }
            if x.abs() <= 0.5 * search.x_window && row[i] > half[i] {
                half[i] = row[i];
            }
        }
    }

    let refinement_delta = if search.refine_triangle {
        let fine = TrianglePairs::new(model, 2 * search.triangle_nodes - 1);
        let mut delta: f64 = 0.0;
        let mut fine_row = vec![0.0; n];
        let mut seen: Vec<u64> = Vec::new();
        for &x in &argmax {
            if seen.contains(&x.to_bits()) {
                continue;
            }
            seen.push(x.to_bits());
            min_over_pairs(model, x, &pairs, &nodes, &marks, &mut row);
            min_over_pairs(model, x, &fine, &nodes, &marks, &mut fine_row);
            for i in 0..n {
                delta = delta.max((row[i] - fine_row[i]).abs());
            }
        }
        Some(delta)
    } else {
        None
    };

    let logs: Vec<f64> = rho_grid.iter().map(|r| libm::log(1.0 + r)).collect();
    let fit = line_fit(&logs, &sup);
    let excess = logs
        .iter()
        .zip(&sup)
        .map(|(l, s)| s - fit.eval(*l))
        .fold(0.0, f64::max);
    let fitted_n = fit.intercept + excess;
    let growth_exponent = log_log_slope(rho_grid, &sup);
    let window_sensitive = sup
        .iter()
        .zip(&half)
        .any(|(a, b)| (a - b).abs() > search.window_tolerance * (1.0 + a.abs()));
    let verdict = match growth_exponent {
        Some(g) if g >= search.growth_threshold => Verdict::Violated,
        _ if window_sensitive => Verdict::Inconclusive,
        _ => Verdict::Holds,
    };
    Ok(ConditionReport {
        rho_grid: rho_grid.to_vec(),
        sup_integrals: sup,
        argmax_x: argmax,
        half_window_integrals: half,
        fitted_m: fit.slope,
        fitted_n,
        fitted_n_ls: fit.intercept,
        growth_exponent,
        window_sensitive,
        refinement_delta,
        verdict,
    })
}
