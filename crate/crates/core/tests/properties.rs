use pevol_core::coefficients::{side_integral, trajectory_integral, Coefficient, Family, Side};
use pevol_core::cutoff::SmoothCutoff;
use pevol_core::grid::{FieldState, SymbolGrid2D};
use pevol_core::lab::{index_set, sigma};
use pevol_core::probes::band_limited_probes;
use pevol_core::psdo::quantize_apply;
use pevol_core::quadrature::QuadratureSpec;
use pevol_core::symbols::{CoefficientSymbol, XiPolynomial};
use pevol_core::Complex64;
use proptest::prelude::*;

fn decaying() -> pevol_core::coefficients::CoefficientModel {
    Family::DecayingImag { amplitude: 1.0, exponent: 2.0, center: 0.3 }.model(2, 1.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectory_integral_is_additive(x in -20.0..20.0f64, a in -8.0..0.0f64, m in 0.0..1.0f64, b in 0.0..8.0f64) {
        let model = decaying();
        let q = QuadratureSpec::default();
        let mid = a + m * (b - a);
        let whole = trajectory_integral(&model, x, 0.5, 0.2, a, b, &q).unwrap();
        let split = trajectory_integral(&model, x, 0.5, 0.2, a, mid, &q).unwrap()
            + trajectory_integral(&model, x, 0.5, 0.2, mid, b, &q).unwrap();
        prop_assert!((whole - split).abs() < 1e-9);
    }

    #[test]
    fn reversed_lead_gives_the_left_side(x in -20.0..20.0f64, rho in 0.5..30.0f64) {
        let model = decaying();
        let rev = model.with_negated_lead();
        let q = QuadratureSpec::default();
        let left = side_integral(&model, Side::B, x, 0.7, 0.1, rho, &q).unwrap();
        let right = side_integral(&rev, Side::A, x, 0.7, 0.1, rho, &q).unwrap();
        prop_assert!((left - right).abs() < 1e-9);
    }

    #[test]
    fn cutoff_is_even_and_bounded(y in -1.0..1.0f64) {
        let h = SmoothCutoff::new(4);
        let v = h.value(y);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, h.value(-y));
        if y.abs() <= 0.25 {
            prop_assert_eq!(v, 1.0);
        }
        if y.abs() >= 0.5 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn quantization_is_linear(seed in 0u64..1000, c0 in -2.0..2.0f64, c1 in -2.0..2.0f64, s in -2.0..2.0f64) {
        let grid = SymbolGrid2D::new(8.0, 128).unwrap();
        let probes = band_limited_probes(&grid, 2, 0.5, seed).unwrap();
        let (u, w) = (&probes[0], &probes[1]);
        let coef = Coefficient::Decaying { amplitude: Complex64::new(c0, c1), center: 0.5, exponent: 2.0 };
        let a = CoefficientSymbol(&coef);
        let mix: Vec<Complex64> = u.values.iter().zip(&w.values).map(|(p, q)| p + q * s).collect();
        let mixed = FieldState::from_values(&grid, mix, 0.0).unwrap();
        let lhs = quantize_apply(&a, 0.0, &mixed, &grid).unwrap();
        let au = quantize_apply(&a, 0.0, u, &grid).unwrap();
        let aw = quantize_apply(&a, 0.0, w, &grid).unwrap();
        for j in 0..grid.n() {
            prop_assert!((lhs.values[j] - au.values[j] - aw.values[j] * s).norm() < 1e-12);
        }
        let p = XiPolynomial(vec![Complex64::new(c0, 0.0), Complex64::new(0.0, c1)]);
        let q = XiPolynomial(vec![Complex64::new(s, s), Complex64::new(c1, 0.0)]);
        let pq = XiPolynomial(vec![p.0[0] + q.0[0], p.0[1] + q.0[1]]);
        let sum = quantize_apply(&pq, 0.0, u, &grid).unwrap();
        let pu = quantize_apply(&p, 0.0, u, &grid).unwrap();
        let qu = quantize_apply(&q, 0.0, u, &grid).unwrap();
        for j in 0..grid.n() {
            prop_assert!((sum.values[j] - pu.values[j] - qu.values[j]).norm() < 1e-12 * (1.0 + sum.values[j].norm()));
        }
    }

    #[test]
    fn multipliers_act_on_the_spectrum(seed in 0u64..1000, c in -3.0..3.0f64) {
        let grid = SymbolGrid2D::new(8.0, 128).unwrap();
        let u = &band_limited_probes(&grid, 1, 0.5, seed).unwrap()[0];
        let p = XiPolynomial(vec![Complex64::new(1.0, 0.0), Complex64::new(c, 0.0), Complex64::new(0.0, 0.5)]);
        let v = quantize_apply(&p, 0.0, u, &grid).unwrap();
        for m in 0..grid.n() {
            let xi = grid.xi(m);
            let mult = Complex64::new(1.0 + c * xi, 0.5 * xi * xi);
            prop_assert!((v.spectrum[m] - mult * u.spectrum[m]).norm() < 1e-9 * (1.0 + u.spectrum[m].norm()));
        }
    }

    #[test]
    fn parseval_holds_on_probes(seed in 0u64..1000) {
        let grid = SymbolGrid2D::new(16.0, 256).unwrap();
        let u = &band_limited_probes(&grid, 1, 0.8, seed).unwrap()[0];
        let spectral = (u.spectrum.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx() / grid.n() as f64).sqrt();
        prop_assert!((spectral - grid.l2_norm(&u.values)).abs() < 1e-10 * spectral);
    }

    #[test]
    fn sigma_is_monotone_in_the_norms(norms in prop::collection::vec(0.0..10.0f64, 15), bump in 0.0..1.0f64, i in 0usize..15, w in 0.0..1.0f64) {
        let idx = index_set(4);
        let base = sigma(&norms, &idx, w);
        let mut more = norms.clone();
        more[i] += bump;
        prop_assert!(sigma(&more, &idx, w) >= base);
        prop_assert!(base >= norms[0]);
    }
}
