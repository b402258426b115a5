//! Least-squares fits used for growth exponents and condition envelopes.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Ordinary least squares `y ~ slope * x + intercept`. Needs two distinct
/// abscissae; with a single point the slope is zero.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.is_empty() {
        return LineFit { slope: 0.0, intercept: 0.0, rss: 0.0 };
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| sq(y - slope * x - intercept)).sum();
    LineFit { slope, intercept, rss }
}

/// Least squares through the origin, `y ~ slope * x`.
pub fn origin_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let rss = xs.iter().zip(ys).map(|(x, y)| sq(y - slope * x)).sum();
    LineFit { slope, intercept: 0.0, rss }
}

/// Slope of `ln y` against `ln x`, using only the points with `x, y > 0`.
/// Returns `None` with fewer than two usable points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (libm::log(*x), libm::log(*y)))
        .unzip();
    if lx.len() < 2 {
        return None;
    }
    Some(line_fit(&lx, &ly).slope)
}

/// Profile Gaussian likelihood ratio of model A over model B for `n` points,
/// `(rss_b / rss_a)^(n / 2)`. Residuals are floored at `floor` so exact fits
/// give a large but finite ratio.
pub fn profile_likelihood_ratio(rss_a: f64, rss_b: f64, n: usize, floor: f64) -> f64 {
    let a = rss_a.max(floor);
    let b = rss_b.max(floor);
    libm::pow(b / a, n as f64 / 2.0)
}

fn sq(x: f64) -> f64 {
    x * x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = line_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!((f.intercept - 1.0).abs() < 1e-14);
        assert!(f.rss < 1e-24);
    }

    #[test]
    fn origin_fit_of_proportional_data() {
        let f = origin_fit(&[4.0, 8.0, 16.0], &[1.0, 2.0, 4.0]);
        assert!((f.slope - 0.25).abs() < 1e-15);
    }

    #[test]
    fn log_log_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * libm::pow(*x, 1.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&xs, &[0.0; 4]), None);
    }

    #[test]
    fn likelihood_ratio_orientation() {
        assert!(profile_likelihood_ratio(0.01, 1.0, 4, 1e-30) > 1e3);
        assert!(profile_likelihood_ratio(1.0, 0.01, 4, 1e-30) < 1e-3);
    }
}
