use pevol_core::fft::FftPlan;
use pevol_core::grid::SymbolGrid2D;
use pevol_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

fn random(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn forward_and_inverse_match_rustfft() {
    let mut planner = FftPlanner::<f64>::new();
    for (i, n) in [2usize, 8, 64, 1024, 16384].into_iter().enumerate() {
        let x = random(n, i as u64);
        let plan = FftPlan::new(n).unwrap();
        let mut ours = x.clone();
        plan.forward(&mut ours);
        let mut theirs = x.clone();
        planner.plan_fft_forward(n).process(&mut theirs);
        let scale = (n as f64).sqrt();
        assert!(max_diff(&ours, &theirs) < 1e-12 * scale * (n as f64).log2().max(1.0), "forward n={n}");

        plan.inverse(&mut ours);
        assert!(max_diff(&ours, &x) < 1e-13 * (n as f64).log2().max(1.0), "round trip n={n}");

        let mut back = theirs;
        planner.plan_fft_inverse(n).process(&mut back);
        back.iter_mut().for_each(|v| *v /= n as f64);
        let mut ours_inv = x.clone();
        plan.forward(&mut ours_inv);
        plan.inverse(&mut ours_inv);
        assert!(max_diff(&ours_inv, &back) < 1e-13 * (n as f64).log2().max(1.0), "inverse n={n}");
    }
}

#[test]
fn grid_spectrum_is_the_centred_transform() {
    // With x_j = -L + j dx the physical spectrum is (-1)^m times the DFT.
    let grid = SymbolGrid2D::new(10.0, 256).unwrap();
    let x = random(256, 9);
    let mut theirs = x.clone();
    FftPlanner::<f64>::new().plan_fft_forward(256).process(&mut theirs);
    let ours = grid.spectrum(&x);
    for m in 0..256 {
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        assert!((ours[m] - theirs[m] * sign).norm() < 1e-11);
    }
    assert!(max_diff(&grid.values(&ours), &x) < 1e-13);
}
