use pevol_core::lab::{run_single_k, ExperimentPlan, GrowthRecord};
use pevol_core::coefficients::Family;
use pevol_lab::artifacts::{emit_plotdata, read_csv, write_record, PlotKind, PlotSource, Stamp};
use pevol_lab::{Command, LabError};

fn record(family: Family, rho: f64) -> (ExperimentPlan, GrowthRecord) {
    let mut plan = ExperimentPlan::desk(family);
    plan.ks = vec![0];
    plan.radii = vec![rho];
    let model = plan.model().unwrap();
    let r = run_single_k(&plan, &model, 0).unwrap();
    (plan, r)
}

#[test]
fn zero_family_does_not_grow() {
    let (_, r) = record(Family::Zero, 4.0);
    let peak = r.sigma.iter().copied().fold(0.0, f64::max);
    assert!(peak <= r.sigma0() * (1.0 + 1e-6), "{:?}", r.sigma);
    for s in &r.solution_norms {
        assert!((s / r.solution_norms[0] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn record_and_plot_files_have_the_documented_columns() {
    let (plan, r) = record(Family::ConstantImag { c: 0.25 }, 4.0);
    let dir = tempfile::tempdir().unwrap();
    let stamp = Stamp::new(Command::Dichotomy, "0".repeat(64), 1);
    let path = write_record(dir.path(), "constant_imag", plan.p, &stamp, &r).unwrap();
    assert_eq!(path.file_name().unwrap(), "constant_imag_2_0.csv");
    let (_, header, rows) = read_csv(&path).unwrap();
    assert_eq!(&header[..6], ["k", "rho_k", "n", "t", "sigma_k", "bk_integral"]);
    assert_eq!(header.len(), 7 + r.indices.len());
    assert_eq!(rows.len(), r.times.len());

    let recs = [r];
    let p = emit_plotdata(dir.path(), "c", &stamp, PlotKind::GrowthCurve, PlotSource::Records(&recs)).unwrap();
    let (_, header, rows) = read_csv(&p).unwrap();
    assert_eq!(header, ["k", "t", "sigma", "log_sigma"]);
    assert_eq!(rows.len(), recs[0].times.len());
    let p = emit_plotdata(dir.path(), "c", &stamp, PlotKind::ExponentFit, PlotSource::Records(&recs)).unwrap();
    assert_eq!(read_csv(&p).unwrap().1, ["rho_k", "log_sigma_end", "fit_value", "residual"]);
    assert!(matches!(
        emit_plotdata(dir.path(), "c", &stamp, PlotKind::GrowthCurve, PlotSource::Records(&[])),
        Err(LabError::Empty)
    ));
}
