//! The operator data `a_p(t)`, `a_j(t, x)` and the decay-condition machinery.

mod condition;
mod lemma;

pub use condition::{
    check_condition, side_integral, trajectory_integral, ConditionReport, SearchSpec, Side,
    TrianglePairs, Verdict,
};
pub use lemma::{
    find_violation_seed, lemma1_extract, lemma1_sequence, LemmaOnePoint, SeedSearch, ViolationWitness,
};

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::quadrature::simpson;
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Real leading coefficient `a_p(t)`.
#[derive(Clone)]
pub enum LeadingCoefficient {
    Constant(f64),
    /// `base + amplitude * sin(omega * t)`
    Sine { base: f64, amplitude: f64, omega: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for LeadingCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Sine { base, amplitude, omega } => {
                write!(f, "Sine {{ base: {base}, amplitude: {amplitude}, omega: {omega} }}")
            }
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl LeadingCoefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Sine { base, amplitude, omega } => base + amplitude * libm::sin(omega * t),
            Self::Custom(f) => f(t),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_)) || matches!(self, Self::Sine { amplitude, .. } if *amplitude == 0.0)
    }

    /// `int_0^t a_p` by Simpson; exact for the constant case.
    pub fn antiderivative(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => c * t,
            Self::Sine { base, amplitude, omega } if *omega != 0.0 => {
                base * t + amplitude * (1.0 - libm::cos(omega * t)) / omega
            }
            _ => simpson(|s| self.eval(s), 0.0, t, 256),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            Self::Constant(c) => Self::Constant(-c),
            Self::Sine { base, amplitude, omega } => {
                Self::Sine { base: -base, amplitude: -amplitude, omega: *omega }
            }
            Self::Custom(f) => {
                let f = f.clone();
                Self::Custom(Arc::new(move |t| -f(t)))
            }
        }
    }
}

/// Closure-backed coefficient: `f(t, x, order)` returns `d^order/dx^order a(t, x)`.
#[derive(Clone)]
pub struct CustomCoefficient {
    pub f: Arc<dyn Fn(f64, f64, usize) -> Complex64 + Send + Sync>,
    pub max_order: usize,
    pub x_independent: bool,
    pub t_independent: bool,
}

/// Tabulated coefficient on a uniform x-grid, linearly interpolated and held
/// constant outside the table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableCoefficient {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<Complex64>,
}

impl TableCoefficient {
    fn eval(&self, x: f64, order: usize) -> Complex64 {
        let n = self.values.len();
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        if n == 1 {
            return if order == 0 { self.values[0] } else { Complex64::new(0.0, 0.0) };
        }
        let s = (x - self.x0) / self.dx;
        if s <= 0.0 || s >= (n - 1) as f64 {
            let v = if s <= 0.0 { self.values[0] } else { self.values[n - 1] };
            return if order == 0 { v } else { Complex64::new(0.0, 0.0) };
        }
        let i = libm::floor(s) as usize;
        let w = s - i as f64;
        match order {
            0 => self.values[i] * (1.0 - w) + self.values[i + 1] * w,
            1 => (self.values[i + 1] - self.values[i]) / self.dx,
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// A lower-order coefficient `a_j(t, x)` with x-derivative access.
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    Constant(Complex64),
    /// `amplitude * <x - center>^(-exponent)`, `<z> = sqrt(1 + z^2)`.
    Decaying { amplitude: Complex64, center: f64, exponent: f64 },
    /// `amplitude * a_p(t) / <x>`, the Levi-type coefficient.
    Levi { amplitude: Complex64, lead: LeadingCoefficient },
    Table(TableCoefficient),
    Sum(Vec<Coefficient>),
    Custom(CustomCoefficient),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Decaying { amplitude, center, exponent } => write!(
                f,
                "Decaying {{ amplitude: {amplitude}, center: {center}, exponent: {exponent} }}"
            ),
            Self::Levi { amplitude, lead } => write!(f, "Levi {{ amplitude: {amplitude}, lead: {lead:?} }}"),
            Self::Table(t) => write!(f, "Table({} nodes)", t.values.len()),
            Self::Sum(terms) => f.debug_list().entries(terms).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Coefficient {
    /// `d^order/dx^order a(t, x)`.
    pub fn eval(&self, t: f64, x: f64, order: usize) -> Result<Complex64> {
        if order > self.max_order() {
            return Err(Error::Order { requested: order, available: self.max_order() });
        }
        Ok(self.eval_unchecked(t, x, order))
    }

    /// Value at derivative order 0.
    #[inline]
    pub fn value(&self, t: f64, x: f64) -> Complex64 {
        self.eval_unchecked(t, x, 0)
    }

    fn eval_unchecked(&self, t: f64, x: f64, order: usize) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Self::Zero => zero,
            Self::Constant(c) => {
                if order == 0 {
                    *c
                } else {
                    zero
                }
            }
            Self::Decaying { amplitude, center, exponent } => {
                amplitude * japanese_power_derivative(x - center, -exponent, order)
            }
            Self::Levi { amplitude, lead } => {
                amplitude * lead.eval(t) * japanese_power_derivative(x, -1.0, order)
            }
            Self::Table(tab) => tab.eval(x, order),
            Self::Sum(terms) => terms.iter().map(|c| c.eval_unchecked(t, x, order)).sum(),
            Self::Custom(c) => (c.f)(t, x, order),
        }
    }

    /// Highest x-derivative order available.
    pub fn max_order(&self) -> usize {
        match self {
            Self::Zero | Self::Constant(_) | Self::Decaying { .. } | Self::Levi { .. } => usize::MAX,
            Self::Table(_) => 1,
            Self::Sum(terms) => terms.iter().map(Self::max_order).min().unwrap_or(usize::MAX),
            Self::Custom(c) => c.max_order,
        }
    }

    pub fn is_x_independent(&self) -> bool {
        match self {
            Self::Zero | Self::Constant(_) => true,
            Self::Decaying { amplitude, .. } | Self::Levi { amplitude, .. } => amplitude.norm() == 0.0,
            Self::Table(t) => t.values.windows(2).all(|w| w[0] == w[1]),
            Self::Sum(terms) => terms.iter().all(Self::is_x_independent),
            Self::Custom(c) => c.x_independent,
        }
    }

    pub fn is_t_independent(&self) -> bool {
        match self {
            Self::Levi { amplitude, lead } => amplitude.norm() == 0.0 || lead.is_constant(),
            Self::Sum(terms) => terms.iter().all(Self::is_t_independent),
            Self::Custom(c) => c.t_independent,
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Constant(c) => c.norm() == 0.0,
            Self::Sum(terms) => terms.iter().all(Self::is_zero),
            _ => false,
        }
    }

    /// The x-independent part, absorbed by an integrating factor.
    pub fn x_independent_part(&self, t: f64) -> Complex64 {
        match self {
            Self::Constant(c) => *c,
            Self::Sum(terms) => terms.iter().map(|c| c.x_independent_part(t)).sum(),
            Self::Custom(c) if c.x_independent => (c.f)(t, 0.0, 0),
            Self::Table(_) if self.is_x_independent() => self.value(t, 0.0),
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// `d^order/dz^order <z>^r` through a Taylor-jet power recurrence.
fn japanese_power_derivative(z: f64, r: f64, order: usize) -> Complex64 {
    let g0 = 1.0 + z * z;
    if order == 0 {
        return Complex64::new(libm::pow(g0, r / 2.0), 0.0);
    }
    // g(z + e) = g0 + 2 z e + e^2; f = g^(r/2).
    let g = [g0, 2.0 * z, 1.0];
    let e = r / 2.0;
    let mut f = vec![0.0; order + 1];
    f[0] = libm::pow(g0, e);
    for k in 1..=order {
        let mut acc = 0.0;
        for j in 1..=k.min(2) {
            acc += ((e + 1.0) * j as f64 - k as f64) * g[j] * f[k - j];
        }
        f[k] = acc / (k as f64 * g0);
    }
    let mut fact = 1.0;
    for k in 2..=order {
        fact *= k as f64;
    }
    Complex64::new(f[order] * fact, 0.0)
}

/// Named coefficient families: every family puts its data in `Im a_{p-1}`
/// and leaves the remaining lower-order coefficients at zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zero,
    /// `a_{p-1} = i c`
    ConstantImag { c: f64 },
    /// `a_{p-1} = i amplitude <x - center>^(-exponent)`
    DecayingImag { amplitude: f64, exponent: f64, center: f64 },
    /// `a_{p-1} = i constant a_p(t) / <x>`
    Levi { constant: f64 },
    /// Tabulated `Im a_{p-1}` on a uniform grid.
    CustomTable { x0: f64, dx: f64, values: Vec<f64> },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::ConstantImag { .. } => "constant_imag",
            Self::DecayingImag { .. } => "decaying_imag",
            Self::Levi { .. } => "levi_family",
            Self::CustomTable { .. } => "custom_table",
        }
    }

    pub fn subprincipal(&self, lead: &LeadingCoefficient) -> Coefficient {
        match self {
            Self::Zero => Coefficient::Zero,
            Self::ConstantImag { c } => Coefficient::Constant(I * *c),
            Self::DecayingImag { amplitude, exponent, center } => Coefficient::Decaying {
                amplitude: I * *amplitude,
                center: *center,
                exponent: *exponent,
            },
            Self::Levi { constant } => Coefficient::Levi { amplitude: I * *constant, lead: lead.clone() },
            Self::CustomTable { x0, dx, values } => Coefficient::Table(TableCoefficient {
                x0: *x0,
                dx: *dx,
                values: values.iter().map(|v| I * *v).collect(),
            }),
        }
    }

    /// Builds the model with `a_p` constant.
    pub fn model(&self, p: u32, t_max: f64, a_p: f64) -> Result<CoefficientModel> {
        let lead = LeadingCoefficient::Constant(a_p);
        self.model_with_lead(p, t_max, lead, a_p.abs())
    }

    pub fn model_with_lead(
        &self,
        p: u32,
        t_max: f64,
        lead: LeadingCoefficient,
        m: f64,
    ) -> Result<CoefficientModel> {
        let mut lower = vec![Coefficient::Zero; p as usize];
        if p >= 1 {
            lower[p as usize - 1] = self.subprincipal(&lead);
        }
        CoefficientModel::new(p, t_max, lead, m, lower)
    }
}

/// Sampling window for the `B^infinity` certificates.
const SUP_WINDOW: f64 = 200.0;
const SUP_NODES_X: usize = 4001;
const SUP_NODES_T: usize = 9;
const SUP_ORDERS: usize = 4;

/// The operator `D_t + a_p(t) D_x^p + sum_j a_j(t, x) D_x^j` on `[0, T]`.
#[derive(Clone, Debug)]
pub struct CoefficientModel {
    p: u32,
    t_max: f64,
    lead: LeadingCoefficient,
    m: f64,
    lower: Vec<Coefficient>,
    deriv_sup: Vec<Vec<f64>>,
}

impl CoefficientModel {
    /// Validates `|a_p| >= m` on a sample of `[0, T]` and tabulates sampled
    /// sup bounds of `|d^b a_j|` for `b` up to the available order (max 4).
    pub fn new(
        p: u32,
        t_max: f64,
        lead: LeadingCoefficient,
        m: f64,
        lower: Vec<Coefficient>,
    ) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidModel("evolution order p must be at least 2".to_string()));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidModel("time horizon must be positive".to_string()));
        }
        if !(m > 0.0) {
            return Err(Error::InvalidModel("lower bound m must be positive".to_string()));
        }
        if lower.len() != p as usize {
            return Err(Error::InvalidModel(alloc::format!(
                "expected {} lower-order coefficients, got {}",
                p,
                lower.len()
            )));
        }
        for i in 0..=1024 {
            let t = t_max * i as f64 / 1024.0;
            let v = lead.eval(t);
            if !(v.abs() >= m) {
                return Err(Error::InvalidModel(alloc::format!(
                    "|a_p({t})| = {} is below m = {m}",
                    v.abs()
                )));
            }
        }
        let deriv_sup = lower
            .iter()
            .map(|c| {
                let orders = c.max_order().min(SUP_ORDERS);
                (0..=orders).map(|b| sampled_sup(c, t_max, b)).collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        for (j, sups) in deriv_sup.iter().enumerate() {
            if sups.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidModel(alloc::format!("a_{j} is not bounded on the sample")));
            }
        }
        Ok(Self { p, t_max, lead, m, lower, deriv_sup })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn lead(&self) -> &LeadingCoefficient {
        &self.lead
    }

    pub fn a_p(&self, t: f64) -> f64 {
        self.lead.eval(t)
    }

    /// `A_p(t) = int_0^t a_p`.
    pub fn big_a_p(&self, t: f64) -> f64 {
        self.lead.antiderivative(t)
    }

    pub fn lower(&self, j: usize) -> &Coefficient {
        &self.lower[j]
    }

    pub fn lower_all(&self) -> &[Coefficient] {
        &self.lower
    }

    pub fn subprincipal(&self) -> &Coefficient {
        &self.lower[self.p as usize - 1]
    }

    /// `Im a_{p-1}(t, x)`.
    #[inline]
    pub fn im_subprincipal(&self, t: f64, x: f64) -> f64 {
        self.subprincipal().value(t, x).im
    }

    /// Sampled `sup |d^b a_j|`; `deriv_sup()[j][b]`.
    pub fn deriv_sup(&self) -> &[Vec<f64>] {
        &self.deriv_sup
    }

    /// Common x-derivative order available from every coefficient.
    pub fn d_max(&self) -> usize {
        self.lower.iter().map(Coefficient::max_order).min().unwrap_or(usize::MAX)
    }

    /// Fails with an order error if the coefficients cannot supply `order`
    /// x-derivatives.
    pub fn require_order(&self, order: usize) -> Result<()> {
        let d = self.d_max();
        if order > d {
            return Err(Error::Order { requested: order, available: d });
        }
        Ok(())
    }

    /// `sup |a_p|` sampled on `[0, T]`.
    pub fn sup_a_p(&self) -> f64 {
        (0..=1024)
            .map(|i| self.lead.eval(self.t_max * i as f64 / 1024.0).abs())
            .fold(0.0, f64::max)
    }

    /// Checks `|d^b a_j| <= bound[j][b]` on the certificate sample.
    pub fn verify_bounds(&self, bounds: &[Vec<f64>]) -> Result<()> {
        for (j, (have, claimed)) in self.deriv_sup.iter().zip(bounds).enumerate() {
            for (b, (h, c)) in have.iter().zip(claimed).enumerate() {
                if h > c {
                    return Err(Error::InvalidModel(alloc::format!(
                        "|d^{b} a_{j}| reaches {h:.6e} above the declared bound {c:.6e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The same model with `a_p` replaced by `-a_p`; turns the `(B)` side
    /// of the split condition into the `(A)` side.
    pub fn with_negated_lead(&self) -> Self {
        Self { lead: self.lead.negated(), ..self.clone() }
    }

    /// All coefficients of order below `p` are x-independent.
    pub fn is_x_independent(&self) -> bool {
        self.lower.iter().all(Coefficient::is_x_independent)
    }

    pub fn description(&self) -> String {
        alloc::format!("p={} T={} a_p={:?} m={}", self.p, self.t_max, self.lead, self.m)
    }
}

fn sampled_sup(c: &Coefficient, t_max: f64, order: usize) -> f64 {
    let mut sup: f64 = 0.0;
    let nt = if c.is_t_independent() { 1 } else { SUP_NODES_T };
    for it in 0..nt {
        let t = if nt == 1 { 0.0 } else { t_max * it as f64 / (nt - 1) as f64 };
        if c.is_x_independent() {
            sup = sup.max(c.eval_unchecked(t, 0.0, order).norm());
            continue;
        }
        for ix in 0..SUP_NODES_X {
            let x = -SUP_WINDOW + 2.0 * SUP_WINDOW * ix as f64 / (SUP_NODES_X - 1) as f64;
            let v = c.eval_unchecked(t, x, order).norm();
            if !v.is_finite() {
                return f64::INFINITY;
            }
            sup = sup.max(v);
        }
    }
    sup
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(c: &Coefficient, x: f64, order: usize) -> f64 {
        let h = 1e-4;
        (c.eval(0.0, x + h, order - 1).unwrap().re - c.eval(0.0, x - h, order - 1).unwrap().re) / (2.0 * h)
    }

    #[test]
    fn decaying_derivatives_match_finite_differences() {
        let c = Coefficient::Decaying { amplitude: Complex64::new(1.0, 0.0), center: 0.3, exponent: 2.0 };
        for &x in &[-2.0, -0.4, 0.0, 0.7, 3.0] {
            for order in 1..=4 {
                let exact = c.eval(0.0, x, order).unwrap().re;
                assert!((exact - fd(&c, x, order)).abs() < 1e-6 * (1.0 + exact.abs()), "x={x} order={order}");
            }
        }
        // 1/(1+x^2) at 0: f'' = -2
        let c0 = Coefficient::Decaying { amplitude: Complex64::new(1.0, 0.0), center: 0.0, exponent: 2.0 };
        assert!((c0.eval(0.0, 0.0, 2).unwrap().re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn model_rejects_small_leading_coefficient() {
        let lead = LeadingCoefficient::Sine { base: 0.2, amplitude: 1.0, omega: 4.0 };
        let err = Family::Zero.model_with_lead(2, 1.0, lead, 0.25).unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn model_requires_p_lower_coefficients() {
        let err = CoefficientModel::new(3, 1.0, LeadingCoefficient::Constant(1.0), 1.0, vec![Coefficient::Zero])
            .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn certificates_bound_the_samples() {
        let model = Family::DecayingImag { amplitude: 1.0, exponent: 2.0, center: 0.0 }.model(2, 1.0, 1.0).unwrap();
        let sup = &model.deriv_sup()[1];
        assert!((sup[0] - 1.0).abs() < 1e-12);
        assert!(model.verify_bounds(&[vec![0.0; 5], vec![1.0, 1.0, 2.0, 5.0, 24.0]]).is_ok());
        assert!(model.verify_bounds(&[vec![0.0; 5], vec![0.5; 5]]).is_err());
        assert!(model.require_order(12).is_ok());
    }

    #[test]
    fn table_coefficient_interpolates_and_orders() {
        let t = Family::CustomTable { x0: 0.0, dx: 1.0, values: vec![0.0, 1.0, 3.0] };
        let c = t.subprincipal(&LeadingCoefficient::Constant(1.0));
        assert!((c.value(0.0, 1.5).im - 2.0).abs() < 1e-15);
        assert!((c.eval(0.0, 1.5, 1).unwrap().im - 2.0).abs() < 1e-15);
        assert!(matches!(c.eval(0.0, 1.5, 2), Err(Error::Order { .. })));
        assert_eq!(c.value(0.0, 10.0).im, 3.0);
    }

    #[test]
    fn levi_coefficient_follows_leading_term() {
        let lead = LeadingCoefficient::Sine { base: 2.0, amplitude: 0.5, omega: 1.0 };
        let c = Family::Levi { constant: 0.3 }.subprincipal(&lead);
        let t = 0.7;
        let v = c.value(t, 2.0).im;
        assert!((v - 0.3 * lead.eval(t) / libm::sqrt(5.0)).abs() < 1e-14);
        assert!(!c.is_t_independent());
    }

    #[test]
    fn antiderivative_of_sine_lead() {
        let lead = LeadingCoefficient::Sine { base: 1.0, amplitude: 0.5, omega: 2.0 };
        let quad = simpson(|s| lead.eval(s), 0.0, 0.8, 400);
        assert!((lead.antiderivative(0.8) - quad).abs() < 1e-12);
    }
}
