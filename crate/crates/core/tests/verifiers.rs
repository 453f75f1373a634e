use std::f64::consts::{FRAC_PI_2, PI};

use rimcomp::expr::Expr;
use rimcomp::kernels::{model_ratio, ComparisonParams};
use rimcomp::manifolds::{
    assume_bounds, build_chart_surface, build_warped_tube, certify_bounds, Fiber, Manifold, Topology,
};
use rimcomp::tube_geometry::GeometrySettings;
use rimcomp::kernels::segment_constant;
use rimcomp::tube_geometry::RadialBand;
use rimcomp::verifiers::{chain_bound, run_suite, CheckName, RigidityKind, Status, SuiteConfig, SuiteReport, Verifier};

fn params(n: usize, k: f64, l: f64) -> ComparisonParams {
    ComparisonParams::new(n, k, l).unwrap()
}

fn warped(fiber: Fiber, w: &str, top: Topology) -> Manifold {
    Manifold::Warped(build_warped_tube(fiber, Expr::parse(w).unwrap(), top).unwrap())
}

fn circle() -> Fiber {
    Fiber::circle(2.0 * PI).unwrap()
}

fn config() -> SuiteConfig {
    SuiteConfig {
        geometry: GeometrySettings {
            boundary_samples: 16,
            ..GeometrySettings::default()
        },
        ..SuiteConfig::default()
    }
}

fn show(suite: &SuiteReport) {
    for r in &suite.reports {
        println!("{:<60} {:>12.3e} {:>10.2e} {:?}", r.name, r.worst_margin, r.tolerance, r.status);
    }
    println!("{:?}", suite.verdict);
}

#[test]
fn euclidean_annulus_battery_passes() {
    let cm = certify_bounds(warped(circle(), "1 + t", Topology::Cylinder { length: 2.0 }), params(2, 0.0, -1.0), 1e-9).unwrap();
    let suite = run_suite(&cm, &config()).unwrap();
    show(&suite);
    assert!(suite.reports.len() >= 10);
    assert!(suite.all_passed());
    assert_eq!(suite.verdict.kind, RigidityKind::None);
}

#[test]
fn annulus_with_wrong_boundary_bound_fails() {
    let m = warped(circle(), "1 + t", Topology::Cylinder { length: 2.0 });
    assert!(certify_bounds(m.clone(), params(2, 0.0, 0.0), 1e-9).is_err());
    let cm = assume_bounds(m, params(2, 0.0, 0.0), 1e-9).unwrap();
    let suite = run_suite(&cm, &config()).unwrap();
    show(&suite);
    let failed: Vec<_> = suite.reports.iter().filter(|r| r.status == Status::Fail).map(|r| r.check).collect();
    assert!(failed.contains(&CheckName::LogJacobian), "{failed:?}");
}

#[test]
fn collar_is_an_equality_case() {
    let cm = certify_bounds(warped(circle(), "exp(-t)", Topology::HalfInfinite { t_max: 40.0 }), params(2, -1.0, 1.0), 1e-9).unwrap();
    let suite = run_suite(&cm, &config()).unwrap();
    show(&suite);
    assert!(suite.all_passed());
    for r in &suite.reports {
        if matches!(r.check, CheckName::LogJacobian | CheckName::RelativeJacobian | CheckName::VolumeComparison | CheckName::HeintzeKarcher | CheckName::VolumeGrowth) {
            assert!(r.worst_margin.abs() <= 1e-6, "{}: {}", r.name, r.worst_margin);
        }
    }
    assert_eq!(suite.verdict.kind, RigidityKind::VolumeGrowthSplitting);
    assert!(suite.verdict.sup_deviation <= 1e-6);
}

#[test]
fn hemisphere_is_a_model_ball() {
    let cm = certify_bounds(
        warped(Fiber::round_sphere(1, 1.0).unwrap(), "cos(t)", Topology::Cap { length: FRAC_PI_2 }),
        params(2, 1.0, 0.0),
        1e-9,
    )
    .unwrap();
    let suite = run_suite(&cm, &config()).unwrap();
    show(&suite);
    assert!(suite.all_passed());
    assert_eq!(suite.verdict.kind, RigidityKind::BallSpaceForm);
}

#[test]
fn wavy_chart_battery() {
    let s = build_chart_surface(Expr::parse("1").unwrap(), Expr::parse("0.2*sin(x)").unwrap(), Expr::parse("2").unwrap(), 2.0 * PI).unwrap();
    let cm = certify_bounds(Manifold::Chart(s), params(2, 0.0, -0.2), 1e-9).unwrap();
    let cfg = SuiteConfig {
        geometry: GeometrySettings {
            boundary_samples: 64,
            grid_nt: 64,
            grid_nx: 192,
            ..GeometrySettings::default()
        },
        ..SuiteConfig::default()
    };
    let suite = run_suite(&cm, &cfg).unwrap();
    show(&suite);
    assert!(suite.all_passed());
}

#[test]
fn chain_bound_converges_monotonically() {
    for p in [params(2, 0.0, -1.0), params(3, -1.0, 0.5), params(2, 1.0, 0.0), params(4, 1.0, -0.3)] {
        let (r, big_r) = (0.25, 0.75);
        let model = model_ratio(&p, r, big_r).unwrap();
        let bounds: Vec<f64> = (4..=12).map(|e| chain_bound(&p, r, big_r, 1 << e).unwrap()).collect();
        for w in bounds.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{p:?}: {bounds:?}");
        }
        assert!(bounds.iter().all(|b| *b >= model * (1.0 - 1e-12)));
        assert!((bounds[8] / model - 1.0).abs() < 0.01, "{p:?}: {} vs {model}", bounds[8]);
    }
}

fn annulus() -> rimcomp::manifolds::CertifiedManifold {
    certify_bounds(warped(circle(), "1 + t", Topology::Cylinder { length: 2.0 }), params(2, 0.0, -1.0), 1e-9).unwrap()
}

fn component(r: &rimcomp::verifiers::CheckReport, name: &str) -> f64 {
    r.components.iter().find(|c| c.name == name).unwrap_or_else(|| panic!("{name} in {:?}", r.components)).margin
}

#[test]
fn flat_cylinder_closed_forms() {
    let cm = certify_bounds(warped(circle(), "1", Topology::Cylinder { length: 2.0 }), params(2, 0.0, 0.0), 1e-9).unwrap();
    let v = Verifier::new(&cm, config()).unwrap();
    let mc = v.check_measure_contraction(0.5, RadialBand::new(0.25, 0.75).unwrap()).unwrap();
    assert!((component(&mc, "lhs") - PI).abs() < 1e-9);
    assert!(mc.worst_margin.abs() < 1e-9);
    // ψ = min(t, 2 - t): ∫|ψ| = 2π and ∫‖∇ψ‖ = 4π.
    let cfg = SuiteConfig { psi_specs: vec!["rho".into()], ..config() };
    let v = Verifier::new(&cm, cfg).unwrap();
    let c1 = segment_constant(&params(2, 0.0, 0.0), 1.0).unwrap();
    let poincare = v.check_poincare().unwrap();
    assert!((poincare.worst_margin - (c1 * 4.0 * PI - 2.0 * PI)).abs() < 1e-8);
    let chain = v.check_annulus_chain(0.5, 0.25, 0.5, 4).unwrap();
    assert_eq!(chain.status, Status::Pass);
}

#[test]
fn annulus_closed_forms() {
    let cm = annulus();
    let cfg = SuiteConfig {
        f_specs: vec!["t".into(), "0".into()],
        iso_bands: Some(vec![(0.2, 0.8), (0.5, 0.5)]),
        ..config()
    };
    let v = Verifier::new(&cm, cfg).unwrap();
    // ∫E_t = 2π(7/24 + 47/24) and ∫t = 28π/3 with D = 1.
    let c1 = segment_constant(&params(2, 0.0, -1.0), 1.0).unwrap();
    let seg = v.check_segment().unwrap();
    assert!((component(&seg, "f = t") - (c1 * 28.0 * PI / 3.0 - 4.5 * PI)).abs() < 1e-7);
    assert_eq!(component(&seg, "f = 0"), 0.0);
    // Inner band: vol = 2π·0.9, ∂ areas 2π(1.2 + 1.8), sup factor 0.9/1.2.
    let iso = v.check_isoperimetric().unwrap();
    assert!((component(&iso, "Lower (0.2, 0.8)") - (6.0 * PI * 0.75 - 1.8 * PI)).abs() < 1e-7);
    assert_eq!(component(&iso, "Lower (0.5, 0.5)"), 0.0);
    let mc = v.check_measure_contraction(0.5, RadialBand::new(0.25, 0.75).unwrap()).unwrap();
    assert!((component(&mc, "lhs") - 2.0 * PI).abs() < 1e-9);
    assert!(mc.worst_margin > 0.0);
    let eig = v.check_eigen_bounds().unwrap();
    assert!(component(&eig, "mu_1_2") >= 1.0 / 9.0);
    assert_eq!(eig.status, Status::Pass);
}

#[test]
fn poincare_rejects_nonvanishing_trial() {
    let cm = annulus();
    let v = Verifier::new(&cm, SuiteConfig { psi_specs: vec!["1 + rho".into()], ..config() }).unwrap();
    assert!(v.check_poincare().is_err());
    let v = Verifier::new(&cm, SuiteConfig { iso_bands: Some(vec![(0.2, 1.5)]), ..config() }).unwrap();
    assert!(v.check_isoperimetric().is_err());
}

#[test]
fn report_status_matches_margin() {
    let cm = assume_bounds(warped(circle(), "1 + t", Topology::Cylinder { length: 2.0 }), params(2, 0.0, 0.0), 1e-9).unwrap();
    let suite = run_suite(&cm, &config()).unwrap();
    for r in &suite.reports {
        if r.status != Status::Skipped {
            assert_eq!(r.status == Status::Pass, r.worst_margin >= -r.tolerance, "{}", r.name);
        }
    }
    let json = serde_json::to_string(&suite).unwrap();
    assert!(json.contains("\"worst_margin\""));
}
