//! Cross-validation of the two boundary-value evaluators on the reference
//! kernels, plus the t-derivative pairings through the base change.

use hypobv::boundary::{
    bv_direct, bv_stokes, bv_t_derivatives, make_kernel, stokes_check, BvMethod, BvSchedule,
    KernelKind, StokesCfg, TestField, ZeroSolution,
};
use hypobv::polyops::{decompose_t, heat_poly, laplace_poly, MultiIndex, MultiPoly};
use hypobv::rat::rat_int;
use hypobv::symfun::{BumpFun, SymFun};
use num_complex::Complex;

fn gauss() -> SymFun {
    SymFun::gaussian(rat_int(1), vec![rat_int(0)])
}

#[test]
fn heat_kernel_two_routes_agree_on_the_delta() {
    let profile = decompose_t(&heat_poly()).unwrap();
    let f = make_kernel(KernelKind::Heat, &profile).unwrap();
    let phi = gauss();
    let direct = bv_direct(&f, &phi, &BvSchedule::default()).unwrap();
    let stokes = bv_stokes(&f, &phi, 0, &profile, &StokesCfg::default()).unwrap();
    let expected = Complex::new(1.0, 0.0); // phi(0)
    assert!(
        (direct.value_c() - expected).norm() < 1e-4,
        "direct: {:?}",
        direct.value
    );
    assert!(
        (stokes.value_c() - expected).norm() < 1e-4,
        "stokes: {:?}",
        stokes.value
    );
    assert!((direct.value_c() - stokes.value_c()).norm() < 1e-3);
}

#[test]
fn cauchy_kernel_realizes_the_plemelj_jump() {
    let profile = decompose_t(&hypobv::polyops::cauchy_riemann_poly()).unwrap();
    let f = make_kernel(KernelKind::Cauchy, &profile).unwrap();
    let phi = gauss();
    let expected = Complex::new(0.0, -2.0 * std::f64::consts::PI);
    let direct = bv_direct(&f, &phi, &BvSchedule::default()).unwrap();
    assert!(
        (direct.value_c() - expected).norm() < 1e-3,
        "direct: {:?}",
        direct.value
    );
    let stokes = bv_stokes(&f, &phi, 0, &profile, &StokesCfg::default()).unwrap();
    assert!(
        (stokes.value_c() - expected).norm() < 1e-3,
        "stokes: {:?}",
        stokes.value
    );
    assert!((direct.value_c() - stokes.value_c()).norm() < 1e-3);
}

#[test]
fn poisson_kernel_doubles_the_delta() {
    let profile = decompose_t(&laplace_poly()).unwrap();
    let f = make_kernel(KernelKind::Poisson, &profile).unwrap();
    let phi = gauss();
    // bv(f) is the j = 1 component pairing (the shifted family ends at 1)
    let direct = bv_direct(&f, &phi, &BvSchedule::default()).unwrap();
    let stokes = bv_stokes(&f, &phi, 1, &profile, &StokesCfg::default()).unwrap();
    let expected = Complex::new(2.0, 0.0);
    assert!(
        (direct.value_c() - expected).norm() < 1e-4,
        "direct: {:?}",
        direct.value
    );
    assert!(
        (stokes.value_c() - expected).norm() < 1e-4,
        "stokes: {:?}",
        stokes.value
    );
}

#[test]
fn poisson_t_derivative_pairings() {
    let profile = decompose_t(&laplace_poly()).unwrap();
    let f = make_kernel(KernelKind::Poisson, &profile).unwrap();
    let phi = gauss();
    let values = bv_t_derivatives(
        &f,
        &phi,
        &profile,
        BvMethod::Direct,
        &BvSchedule::default(),
        &StokesCfg::default(),
    )
    .unwrap();
    // bv(f) = 2 phi(0); bv(D_t f) = 0 by the even/odd structure
    assert!((values[0] - Complex::new(2.0, 0.0)).norm() < 1e-4, "{values:?}");
    assert!(values[1].norm() < 1e-4, "{values:?}");
}

#[test]
fn zero_jump_for_global_solutions() {
    let profile = decompose_t(&heat_poly()).unwrap();
    let f = ZeroSolution::SmoothHeat;
    let stokes = bv_stokes(
        &f,
        &gauss(),
        0,
        &profile,
        &StokesCfg {
            window: 0.3,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(stokes.value_c().norm() < 1e-6, "{:?}", stokes.value);
}

#[test]
fn bv_is_linear_in_the_datum() {
    let profile = decompose_t(&heat_poly()).unwrap();
    let f = make_kernel(KernelKind::Heat, &profile).unwrap();
    let phi1 = gauss();
    let phi2 = SymFun::hermite_term(
        hypobv::rat::crat_int(1, 0),
        vec![2],
        rat_int(1),
        vec![rat_int(0)],
    );
    let schedule = BvSchedule::default();
    let a = bv_direct(&f, &phi1, &schedule).unwrap().value_c();
    let b = bv_direct(&f, &phi2, &schedule).unwrap().value_c();
    let ab = bv_direct(&f, &phi1.add(&phi2), &schedule).unwrap().value_c();
    assert!((ab - a - b).norm() < 1e-6, "{ab} vs {a} + {b}");
}

#[test]
fn x_derivative_transfers_to_the_datum() {
    // pairing the x-derivative of the kernel equals pairing the kernel
    // against the reflected-sign derivative of the datum
    let profile = decompose_t(&heat_poly()).unwrap();
    let f = make_kernel(KernelKind::Heat, &profile).unwrap();
    let phi = gauss();
    let schedule = BvSchedule::default();
    // D_x f as a field
    let dx = MultiPoly::monomial(2, &[1, 0], hypobv::rat::crat_int(1, 0));
    let g = move |x: f64, t: f64| f.apply_op(&dx, x, t);
    let lhs = hypobv::boundary::bv_direct_of(&g, &phi, &schedule)
        .unwrap()
        .value_c();
    // <D_x T, phi> = <T, -D_x phi>: reflected symbol on the datum side
    let dphi = hypobv::symfun::apply_operator(
        &MultiPoly::monomial(1, &[1], hypobv::rat::crat_int(-1, 0)),
        &phi,
    )
    .unwrap();
    let f2 = make_kernel(KernelKind::Heat, &profile).unwrap();
    let rhs = bv_direct(&f2, &dphi, &schedule).unwrap().value_c();
    assert!((lhs - rhs).norm() < 1e-4, "{lhs} vs {rhs}");
}

#[test]
fn growth_class_and_jump_existence_cohere() {
    // a finite growth class on each reference kernel comes with a convergent
    // jump pairing; the globally smooth field pairs to zero
    let window = (2f64.powi(-9), 0.25);
    for kind in [KernelKind::Heat, KernelKind::Poisson, KernelKind::Cauchy] {
        let f = ZeroSolution::kind(kind);
        let fit = hypobv::boundary::growth_fit(&f, window, None);
        assert!(fit.poly_order <= 2, "{kind:?} class blew up: {fit:?}");
        let r = bv_direct(&f, &gauss(), &BvSchedule::default());
        assert!(r.is_ok(), "{kind:?} jump did not converge");
    }
    let smooth = ZeroSolution::SmoothHeat;
    let fit = hypobv::boundary::growth_fit(&smooth, window, None);
    assert_eq!(fit.poly_order, 0);
    let r = bv_direct(
        &smooth,
        &gauss(),
        &BvSchedule {
            t0: 0.125,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(r.value_c().norm() < 1e-8);
}

#[test]
fn stokes_identity_corpus() {
    let laplace = decompose_t(&laplace_poly()).unwrap();
    // non-solution f = x^2 t: volume term active
    let mut p = MultiPoly::zero(2);
    p.add_term(MultiIndex(vec![2, 1]), hypobv::rat::crat_int(1, 0));
    let field = TestField::Separable {
        phi: gauss(),
        bump: BumpFun::new(0.6, 1.2),
    };
    let r = stokes_check(
        &ZeroSolution::Poly(p),
        &field,
        &laplace,
        0.1,
        1.0,
        (-7.0, 7.0),
        1e-9,
    )
    .unwrap();
    assert!(r.abs_diff < 1e-6, "{r:?}");

    // heat kernel: the volume term vanishes
    let heat = decompose_t(&heat_poly()).unwrap();
    let f = make_kernel(KernelKind::Heat, &heat).unwrap();
    let r = stokes_check(&f, &field, &heat, 0.05, 0.5, (-7.0, 7.0), 1e-9).unwrap();
    assert!(r.abs_diff < 1e-6, "{r:?}");

    // zero field: both sides vanish identically
    let zero_field = TestField::Separable {
        phi: SymFun::zero(1),
        bump: BumpFun::new(0.6, 1.2),
    };
    let r = stokes_check(&f, &zero_field, &heat, 0.05, 0.5, (-7.0, 7.0), 1e-9).unwrap();
    assert!(r.lhs == (0.0, 0.0) && r.rhs == (0.0, 0.0));
}
