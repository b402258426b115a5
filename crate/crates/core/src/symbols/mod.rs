//! Phase-space symbols `p(t, x, xi)`: the evaluator interface, elementary
//! symbols, sampled seminorms and the localizer family.

mod localizer;

pub use localizer::{
    bell_table, AntiderivativeTable, Chi1Symbol, Chi2Symbol, Exponents, LocalizerFamily,
    LocalizerSymbol, Regime, SupportReport,
};

use alloc::sync::Arc;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::coefficients::Coefficient;
use crate::cutoff::SmoothCutoff;
use crate::{Error, Result};

/// Closed box `[x_lo, x_hi] x [xi_lo, xi_hi]` outside which a symbol vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub xi_lo: f64,
    pub xi_hi: f64,
}

impl SupportBox {
    pub fn contains(&self, x: f64, xi: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi && xi >= self.xi_lo && xi <= self.xi_hi
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            x_lo: self.x_lo.max(other.x_lo),
            x_hi: self.x_hi.min(other.x_hi),
            xi_lo: self.xi_lo.max(other.xi_lo),
            xi_hi: self.xi_hi.min(other.xi_hi),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x_lo > self.x_hi || self.xi_lo > self.xi_hi
    }
}

/// A symbol with mixed derivative access.
pub trait SymbolEvaluator: Sync {
    /// `d_xi^dxi d_x^dx p(t, x, xi)`.
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64>;

    fn value(&self, t: f64, x: f64, xi: f64) -> Complex64 {
        self.derivative(t, x, xi, 0, 0).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }

    /// Highest available `(xi, x)` derivative orders.
    fn max_orders(&self) -> (usize, usize) {
        (usize::MAX, usize::MAX)
    }

    fn x_independent(&self) -> bool {
        false
    }

    /// A box containing the support at time `t`, when known.
    fn support(&self, _t: f64) -> Option<SupportBox> {
        None
    }
}

pub(crate) fn check_orders(s: &dyn SymbolEvaluator, dxi: usize, dx: usize) -> Result<()> {
    let (mxi, mx) = s.max_orders();
    if dxi > mxi {
        return Err(Error::Order { requested: dxi, available: mxi });
    }
    if dx > mx {
        return Err(Error::Order { requested: dx, available: mx });
    }
    Ok(())
}

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSymbol(pub Complex64);

impl SymbolEvaluator for ConstantSymbol {
    fn derivative(&self, _t: f64, _x: f64, _xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        Ok(if dxi == 0 && dx == 0 { self.0 } else { ZERO })
    }

    fn x_independent(&self) -> bool {
        true
    }
}

/// `sum_k c_k xi^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiPolynomial(pub Vec<Complex64>);

impl XiPolynomial {
    pub fn monomial(degree: usize) -> Self {
        let mut c = alloc::vec![ZERO; degree + 1];
        c[degree] = Complex64::new(1.0, 0.0);
        Self(c)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }
}

impl SymbolEvaluator for XiPolynomial {
    fn derivative(&self, _t: f64, _x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        if dx > 0 {
            return Ok(ZERO);
        }
        let mut acc = ZERO;
        for k in (dxi..self.0.len()).rev() {
            let mut f = 1.0;
            for i in 0..dxi {
                f *= (k - i) as f64;
            }
            acc = acc * xi + self.0[k] * f;
        }
        Ok(acc)
    }

    fn x_independent(&self) -> bool {
        true
    }
}

/// The multiplication symbol `a(t, x)` of a coefficient.
#[derive(Debug, Clone)]
pub struct CoefficientSymbol<'a>(pub &'a Coefficient);

impl SymbolEvaluator for CoefficientSymbol<'_> {
    fn derivative(&self, t: f64, x: f64, _xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        if dxi > 0 {
            return Ok(ZERO);
        }
        self.0.eval(t, x, dx)
    }

    fn max_orders(&self) -> (usize, usize) {
        (usize::MAX, self.0.max_order())
    }

    fn x_independent(&self) -> bool {
        self.0.is_x_independent()
    }

    fn value(&self, t: f64, x: f64, _xi: f64) -> Complex64 {
        self.0.value(t, x)
    }
}

pub type SymbolFn = dyn Fn(f64, f64, f64, usize, usize) -> Complex64 + Send + Sync;

/// Closure-backed symbol; the closure receives `(t, x, xi, dxi, dx)`.
#[derive(Clone)]
pub struct FnSymbol {
    pub f: Arc<SymbolFn>,
    pub max_xi: usize,
    pub max_x: usize,
    pub x_independent: bool,
    pub support: Option<SupportBox>,
}

impl FnSymbol {
    /// `e^{i x} h(xi / width)`: an oscillating-in-x, compactly supported in
    /// xi symbol built from the cutoff.
    pub fn modulated_bump(cutoff: SmoothCutoff, width: f64) -> Self {
        let d = cutoff.d_max();
        let f = move |_t: f64, x: f64, xi: f64, dxi: usize, dx: usize| {
            let hx = Complex64::new(0.0, 1.0).powu(dx as u32) * Complex64::from_polar(1.0, x);
            let hb = cutoff.derivative(xi / width, dxi).unwrap_or(0.0) / libm::pow(width, dxi as f64);
            hx * hb
        };
        Self {
            f: Arc::new(f),
            max_xi: d,
            max_x: usize::MAX,
            x_independent: false,
            support: Some(SupportBox {
                x_lo: f64::NEG_INFINITY,
                x_hi: f64::INFINITY,
                xi_lo: -0.5 * width,
                xi_hi: 0.5 * width,
            }),
        }
    }
}

impl SymbolEvaluator for FnSymbol {
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        check_orders(self, dxi, dx)?;
        Ok((self.f)(t, x, xi, dxi, dx))
    }

    fn max_orders(&self) -> (usize, usize) {
        (self.max_xi, self.max_x)
    }

    fn x_independent(&self) -> bool {
        self.x_independent
    }

    fn support(&self, _t: f64) -> Option<SupportBox> {
        self.support
    }
}

/// `1 - p`.
pub struct OneMinus<'a>(pub &'a dyn SymbolEvaluator);

impl SymbolEvaluator for OneMinus<'_> {
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        let d = self.0.derivative(t, x, xi, dxi, dx)?;
        Ok(if dxi == 0 && dx == 0 { Complex64::new(1.0, 0.0) - d } else { -d })
    }

    fn max_orders(&self) -> (usize, usize) {
        self.0.max_orders()
    }

    fn x_independent(&self) -> bool {
        self.0.x_independent()
    }
}

/// Pointwise product `p q`, with Leibniz derivatives.
pub struct ProductSymbol<'a>(pub &'a dyn SymbolEvaluator, pub &'a dyn SymbolEvaluator);

impl SymbolEvaluator for ProductSymbol<'_> {
    fn derivative(&self, t: f64, x: f64, xi: f64, dxi: usize, dx: usize) -> Result<Complex64> {
        check_orders(self, dxi, dx)?;
        let mut acc = ZERO;
        for i in 0..=dxi {
            for j in 0..=dx {
                let c = binomial(dxi, i) * binomial(dx, j);
                acc += self.0.derivative(t, x, xi, i, j)? * self.1.derivative(t, x, xi, dxi - i, dx - j)? * c;
            }
        }
        Ok(acc)
    }

    fn value(&self, t: f64, x: f64, xi: f64) -> Complex64 {
        self.0.value(t, x, xi) * self.1.value(t, x, xi)
    }

    fn max_orders(&self) -> (usize, usize) {
        let (a, b) = self.0.max_orders();
        let (c, d) = self.1.max_orders();
        (a.min(c), b.min(d))
    }

    fn x_independent(&self) -> bool {
        self.0.x_independent() && self.1.x_independent()
    }

    fn support(&self, t: f64) -> Option<SupportBox> {
        match (self.0.support(t), self.1.support(t)) {
            (Some(a), Some(b)) => Some(a.intersect(&b)),
            (a, b) => a.or(b),
        }
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Sample points in phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSample {
    /// Tensor grid, endpoints included.
    Rect { x_lo: f64, x_hi: f64, nx: usize, xi_lo: f64, xi_hi: f64, nxi: usize },
    Points(Vec<(f64, f64)>),
}

impl GridSample {
    pub fn len(&self) -> usize {
        match self {
            Self::Rect { nx, nxi, .. } => nx * nxi,
            Self::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn for_each<F: FnMut(f64, f64)>(&self, mut f: F) {
        match self {
            Self::Rect { x_lo, x_hi, nx, xi_lo, xi_hi, nxi } => {
                for i in 0..*nx {
                    let x = lerp(*x_lo, *x_hi, i, *nx);
                    for j in 0..*nxi {
                        f(x, lerp(*xi_lo, *xi_hi, j, *nxi));
                    }
                }
            }
            Self::Points(p) => p.iter().for_each(|&(x, xi)| f(x, xi)),
        }
    }
}

fn lerp(a: f64, b: f64, i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.5 * (a + b)
    } else {
        a + (b - a) * i as f64 / (n - 1) as f64
    }
}

/// Sampled seminorm: a lower bound of the true sup, with the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormReport {
    pub value: f64,
    pub points: usize,
    /// `(xi order, x order)` attaining the max.
    pub argmax_orders: (usize, usize),
}

/// `max_{g <= ell, s <= ellp} sup_sample |d_xi^g d_x^s p(t, ., .)|`.
pub fn seminorm(
    symbol: &dyn SymbolEvaluator,
    t: f64,
    ell: usize,
    ellp: usize,
    sample: &GridSample,
) -> Result<SeminormReport> {
    check_orders(symbol, ell, ellp)?;
    let mut best = 0.0;
    let mut arg = (0, 0);
    let mut err = None;
    sample.for_each(|x, xi| {
        for g in 0..=ell {
            for s in 0..=ellp {
                match symbol.derivative(t, x, xi, g, s) {
                    Ok(v) => {
                        let a = v.norm();
                        if a > best {
                            best = a;
                            arg = (g, s);
                        }
                    }
                    Err(e) => err = Some(e),
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(SeminormReport { value: best, points: sample.len(), argmax_orders: arg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_seminorm_is_its_modulus() {
        let s = ConstantSymbol(Complex64::new(1.0, 0.0));
        let sample = GridSample::Rect { x_lo: -1.0, x_hi: 1.0, nx: 5, xi_lo: -3.0, xi_hi: 3.0, nxi: 7 };
        let r = seminorm(&s, 0.0, 3, 3, &sample).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.points, 35);
    }

    #[test]
    fn polynomial_derivatives() {
        let p = XiPolynomial(alloc::vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]);
        assert_eq!(p.derivative(0.0, 0.0, 2.0, 0, 0).unwrap().re, 17.0);
        assert_eq!(p.derivative(0.0, 0.0, 2.0, 1, 0).unwrap().re, 14.0);
        assert_eq!(p.derivative(0.0, 0.0, 2.0, 2, 0).unwrap().re, 6.0);
        assert_eq!(p.derivative(0.0, 0.0, 2.0, 3, 0).unwrap().re, 0.0);
    }

    #[test]
    fn product_leibniz_matches_expansion() {
        let a = XiPolynomial::monomial(2);
        let b = FnSymbol::modulated_bump(SmoothCutoff::new(6), 4.0);
        let pr = ProductSymbol(&a, &b);
        let (x, xi) = (0.3, 1.4);
        let d = pr.derivative(0.0, x, xi, 1, 1).unwrap();
        let expect = a.derivative(0.0, x, xi, 1, 0).unwrap() * b.derivative(0.0, x, xi, 0, 1).unwrap()
            + a.value(0.0, x, xi) * b.derivative(0.0, x, xi, 1, 1).unwrap();
        assert!((d - expect).norm() < 1e-13);
    }

    #[test]
    fn order_errors_propagate() {
        let b = FnSymbol::modulated_bump(SmoothCutoff::new(2), 1.0);
        let sample = GridSample::Points(alloc::vec![(0.0, 0.0)]);
        assert!(matches!(seminorm(&b, 0.0, 3, 0, &sample), Err(Error::Order { .. })));
    }
}
