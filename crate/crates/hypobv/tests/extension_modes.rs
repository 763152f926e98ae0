//! Cutoff-schedule extension modes: weighted residual bounds for the
//! quotient-condition branch and exact vanishing for the convergent branch.

use hypobv::cauchyext::{
    build_extension, cauchy_recursive, verify_extension, ExtMode, ModeTag, VerifyConfig,
};
use hypobv::polyops::{decompose_t, heat_poly};
use hypobv::rat::rat_int;
use hypobv::symfun::{BumpFun, SymFun};
use hypobv::weights::WeightSeq;

fn gauss() -> SymFun {
    SymFun::gaussian(rat_int(1), vec![rat_int(0)])
}

#[test]
fn gevrey_cutoff_weighted_residual_is_monotone() {
    let profile = decompose_t(&heat_poly()).unwrap();
    let table = cauchy_recursive(&profile, 24);
    let m = WeightSeq::gevrey(2.0, 400);
    for h in [0.5, 1.0, 2.0] {
        let mode = ExtMode::GevreyCutoff {
            weights: m.clone(),
            h,
            b0: 2.0,
            amplitude: None,
            bump: BumpFun::new(1.0, 2.0),
            window_t_min: 2f64.powi(-10),
        };
        let ext = build_extension(&table, &[gauss()], &mode).unwrap();
        assert_eq!(ext.mode_tag(), ModeTag::GevreyCutoff);
        let a = ext.amplitude().unwrap();
        let cfg = VerifyConfig {
            gevrey: Some((m.clone(), h, 2.0)),
            ..Default::default()
        };
        let report = verify_extension(&ext, &cfg);
        assert!(report.traces_exact.iter().all(|&b| b), "traces broken at h = {h}");
        let fit = report.weighted_fit.expect("gevrey fit requested");
        assert!(
            fit.monotone,
            "h = {h}: no monotone weighted profile up to 64 A (A = {a}); profile: {:?}",
            fit.weighted_profile
        );
        assert!(fit.fitted_l <= 64.0 * a + 1e-9, "h = {h}: L = {}", fit.fitted_l);
    }
}

#[test]
fn convergent_branch_residual_vanishes_on_the_inner_window() {
    // p!^(1/b0) asymp M: for the heat operator take M = p!^(1/2)
    let profile = decompose_t(&heat_poly()).unwrap();
    let table = cauchy_recursive(&profile, 24);
    let m = WeightSeq::gevrey(0.5, 400);
    let mode = ExtMode::GevreyCutoff {
        weights: m.clone(),
        h: 1.0,
        b0: 2.0,
        amplitude: None,
        bump: BumpFun::new(1.0, 2.0),
        window_t_min: 2f64.powi(-10),
    };
    let ext = build_extension(&table, &[gauss()], &mode).unwrap();
    assert_eq!(ext.mode_tag(), ModeTag::GevreyConvergent);
    assert!(ext.convergent_branch());
    let report = verify_extension(&ext, &VerifyConfig::default());
    assert!(report.traces_exact[0]);
    let inner = report.inner_window_max.expect("convergent branch");
    assert!(inner < 1e-10, "inner-window residual {inner}");
}

#[test]
fn cutoff_modes_reject_bad_weight_sequences() {
    // gevrey(1.2) fails the quotient condition at exponent 1/2
    let profile = decompose_t(&heat_poly()).unwrap();
    let table = cauchy_recursive(&profile, 12);
    let m = WeightSeq::gevrey(1.2, 400);
    let mode = ExtMode::GevreyCutoff {
        weights: m,
        h: 1.0,
        b0: 0.5,
        amplitude: None,
        bump: BumpFun::new(1.0, 2.0),
        window_t_min: 2f64.powi(-10),
    };
    let result = build_extension(&table, &[gauss()], &mode);
    assert!(matches!(
        result.err(),
        Some(hypobv::cauchyext::ExtError::ConditionViolation(_))
    ));
}
