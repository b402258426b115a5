//! Composite Simpson quadrature.
//!
//! All integrals are panel based: a panel `[s_i, s_{i+1}]` is integrated with
//! the three-point rule using its midpoint, so cumulative values are available
//! at every panel boundary.

use alloc::vec::Vec;

/// Node-spacing rule for composite Simpson.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute cap on the panel width.
    pub max_spacing: f64,
    /// Panel width is also capped by `length * relative_spacing`.
    pub relative_spacing: f64,
    pub min_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { max_spacing: 0.01, relative_spacing: 1e-3, min_panels: 8 }
    }
}

impl QuadratureSpec {
    /// Panel count for an interval of the given length; `scale` is the radius
    /// used by the relative cap.
    pub fn panels(&self, length: f64, scale: f64) -> usize {
        let length = length.abs();
        if length == 0.0 {
            return 0;
        }
        let mut h = self.max_spacing;
        let rel = scale.abs() * self.relative_spacing;
        if rel > 0.0 && rel < h {
            h = rel;
        }
        let n = libm::ceil(length / h) as usize;
        n.max(self.min_panels)
    }
}

/// Simpson rule on `[a, b]` with `panels` panels.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    if panels == 0 || a == b {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    let mut left = f(a);
    for i in 0..panels {
        let s0 = a + h * i as f64;
        let s1 = if i + 1 == panels { b } else { a + h * (i + 1) as f64 };
        let mid = f(0.5 * (s0 + s1));
        let right = f(s1);
        acc += (s1 - s0) / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    acc
}

/// Simpson rule using the spacing policy of `spec`.
pub fn simpson_spec<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> f64 {
    let n = spec.panels(b - a, b - a);
    simpson(f, a, b, n)
}

/// Cumulative integral `F(s_i) = int_a^{s_i} f` on the uniform panel
/// boundaries `s_i = a + i (b - a) / panels`, `i = 0..=panels`.
pub fn cumulative_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(panels + 1);
    out.push(0.0);
    if panels == 0 {
        return out;
    }
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    let mut left = f(a);
    for i in 0..panels {
        let s0 = a + h * i as f64;
        let s1 = if i + 1 == panels { b } else { a + h * (i + 1) as f64 };
        let mid = f(0.5 * (s0 + s1));
        let right = f(s1);
        acc += (s1 - s0) / 6.0 * (left + 4.0 * mid + right);
        out.push(acc);
        left = right;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 3);
        let exact = (16.0 / 4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn cumulative_matches_direct() {
        let cum = cumulative_simpson(libm::sin, 0.0, 3.0, 300);
        assert_eq!(cum.len(), 301);
        let direct = simpson(libm::sin, 0.0, 1.5, 150);
        assert!((cum[150] - direct).abs() < 1e-14);
        assert!((cum[300] - (1.0 - libm::cos(3.0))).abs() < 1e-10);
    }

    #[test]
    fn panels_respect_both_caps() {
        let spec = QuadratureSpec::default();
        assert_eq!(spec.panels(10.0, 10.0), 1000);
        assert_eq!(spec.panels(2.0, 1.0), 2000);
        assert_eq!(spec.panels(0.0, 1.0), 0);
    }
}
