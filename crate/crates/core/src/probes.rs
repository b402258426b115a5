//! Seeded band-limited probe fields.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{FieldState, SymbolGrid2D};
use crate::{Error, Result};

/// `count` unit-norm fields with random spectra on `|xi| <= band * xi_max`.
pub fn band_limited_probes(grid: &SymbolGrid2D, count: usize, band: f64, seed: u64) -> Result<Vec<FieldState>> {
    let limit = band * grid.xi_max();
    centered_probes(grid, count, 0.0, limit, seed)
}

/// `count` unit-norm fields with random spectra on `|xi - center| <= radius`.
pub fn centered_probes(
    grid: &SymbolGrid2D,
    count: usize,
    center: f64,
    radius: f64,
    seed: u64,
) -> Result<Vec<FieldState>> {
    let modes = grid.xi_indices(center - radius, center + radius);
    if modes.is_empty() {
        return Err(Error::Domain("probe band contains no grid frequency".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut spec = alloc::vec![Complex64::new(0.0, 0.0); grid.n()];
        for &m in &modes {
            spec[m] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let mut f = FieldState::from_spectrum(grid, spec, 0.0)?;
        let norm = f.norm(grid);
        f.values.iter_mut().for_each(|v| *v /= norm);
        f.spectrum.iter_mut().for_each(|v| *v /= norm);
        out.push(f);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_are_deterministic_and_normalized() {
        let g = SymbolGrid2D::new(8.0, 128).unwrap();
        let a = band_limited_probes(&g, 3, 0.5, 7).unwrap();
        let b = band_limited_probes(&g, 3, 0.5, 7).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!((p.norm(&g) - 1.0).abs() < 1e-12);
            assert!(p.high_frequency_share(&g, 0.1) == 0.0);
        }
        let c = band_limited_probes(&g, 1, 0.5, 8).unwrap();
        assert_ne!(a[0], c[0]);
    }
}
