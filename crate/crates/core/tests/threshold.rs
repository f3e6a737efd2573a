use critpatch::dist::{FamilyId, ShapeParam};
use critpatch::scaling::ModelExponents;
use critpatch::solver::{FatePolicy, Resolution};
use critpatch::threshold::{
    check_monotone, estimate_alpha_min, estimate_qc, sweep, ScanConfig, ScanStatus, SweepAxis, SweepConfig, SweepFixed,
    SweepTask,
};
use critpatch::Error;

fn exps(mu: f64, nu: f64) -> ModelExponents {
    ModelExponents::new(mu, nu).unwrap()
}

#[test]
fn halving_the_grid_keeps_the_homogeneous_bracket() {
    let e = exps(2.0, 1.0);
    let scan = ScanConfig::for_qc(e, 0.001).unwrap();
    let coarse = Resolution::default();
    let fine = coarse.refined();
    let run = |res: &Resolution| {
        estimate_qc(
            e,
            FamilyId::Homogeneous,
            ShapeParam::zero(),
            &scan,
            res,
            &FatePolicy::default(),
        )
        .unwrap()
    };
    let (a, b) = (run(&coarse), run(&fine));
    assert!(
        (a.lower - b.lower).abs() < scan.step,
        "{:?} vs {:?}",
        (a.lower, a.upper),
        (b.lower, b.upper)
    );
    assert!((a.upper - b.upper).abs() < scan.step);
}

#[test]
fn scan_traces_are_monotone() {
    let scan = ScanConfig::for_alpha(0.01).unwrap();
    let est = estimate_alpha_min(
        exps(4.0, 2.0),
        FamilyId::SymmetricF1,
        2.0,
        &scan,
        &Resolution::default(),
        &FatePolicy::default(),
    )
    .unwrap();
    assert_eq!(est.status, ScanStatus::Bracketed);
    assert!(check_monotone(&est.per_point_fates).is_ok());
    assert_eq!(est.estimate, est.upper);
    assert!(est.upper - est.lower <= scan.step * (1.0 + 1e-9));
}

#[test]
fn refinement_narrows_the_bracket() {
    let e = exps(4.0, 2.0);
    let plain = ScanConfig::new(2.0, 0.05).unwrap();
    let refined = plain.with_refine(1e-4);
    let run = |s: &ScanConfig| {
        estimate_qc(
            e,
            FamilyId::AsymmetricF2,
            ShapeParam::new(100.0).unwrap(),
            s,
            &Resolution::default(),
            &FatePolicy::default(),
        )
        .unwrap()
    };
    let (a, b) = (run(&plain), run(&refined));
    assert!(b.lower >= a.lower && b.upper <= a.upper);
    assert!(b.upper - b.lower <= 1e-4 * (1.0 + 1e-9));
    assert_eq!(b.coarse_bracket, Some((a.lower, a.upper)));
}

#[test]
fn sweep_keeps_order_and_records_failures() {
    let config = SweepConfig {
        axis: SweepAxis::Mu,
        task: SweepTask::Qc,
        fixed: SweepFixed {
            mu: None,
            nu: Some(2.0),
            family: FamilyId::Homogeneous,
            alpha: 0.0,
            q: None,
        },
        // mu = 1 < nu is rejected; the other points still run
        points: vec![1.0, 2.0, 4.0],
        step: 0.01,
        start: None,
        refine: false,
        refine_tol: 1e-4,
        coarsening: 10,
        resolution: Resolution {
            m: 100,
            ..Resolution::default()
        },
        policy: FatePolicy::default(),
    };
    let rows = sweep(&config, 2).unwrap();
    assert_eq!(rows.iter().map(|r| r.point).collect::<Vec<_>>(), [1.0, 2.0, 4.0]);
    assert!(matches!(rows[0].result, Err(Error::UnsupportedRegime { .. })));
    let q2 = rows[1].result.as_ref().unwrap().estimate;
    let q4 = rows[2].result.as_ref().unwrap().estimate;
    assert!((q2 - std::f64::consts::PI.powi(2) / 2.0).abs() < 0.02 * q2);
    assert!((q4 - 4.467).abs() < 0.03 * 4.467);

    let serial = sweep(&config, 1).unwrap();
    for (a, b) in rows.iter().zip(&serial) {
        assert_eq!(
            a.result.as_ref().ok().map(|e| e.estimate),
            b.result.as_ref().ok().map(|e| e.estimate)
        );
    }
}
