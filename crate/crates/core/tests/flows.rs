mod common;

use common::*;
use cuspflow::curvature::{
    act, angle_assignment, curvature_jacobian, project_quotient, ricci_curvature,
};
use cuspflow::flows::*;
use rand::Rng;
use std::f64::consts::PI;

fn ricci() -> FlowConfig {
    FlowConfig {
        t_max: 200.0,
        ..FlowConfig::default()
    }
}

fn limit(trace: &FlowTrace) -> &[f64] {
    match &trace.classification {
        Classification::Converged { limit } => limit,
        other => panic!("expected convergence, got {other:?}"),
    }
}

#[test]
fn figure_eight_converges_to_regular_angles() {
    let c = figure_eight();
    let mut r = rng(31);
    for _ in 0..5 {
        let l0: Vec<f64> = (0..2).map(|_| r.gen_range(-1.0..1.0)).collect();
        let trace = run(&c, &l0, &ricci()).unwrap();
        let l = limit(&trace);
        assert!(trace.last().t <= 200.0);
        for tet in angle_assignment(&c, l).tets {
            for a in tet.0 {
                assert!((a - PI / 3.0).abs() < 1e-8);
            }
        }
        assert!(sup_norm(&project_quotient(&c, l)) < 1e-8);
    }
}

#[test]
fn energy_never_increases_along_ricci_flow() {
    let c = random_complex(4);
    let trace = run(
        &c,
        &[0.9, -0.4, 0.2],
        &FlowConfig {
            t_max: 20.0,
            ..ricci()
        },
    )
    .unwrap();
    for w in trace.samples.windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs().max(1.0));
    }
}

#[test]
fn rate_matches_linearization() {
    let c = figure_eight();
    let trace = run(&c, &[0.7, -0.3], &ricci()).unwrap();
    let fit = trace.rate.expect("converged traces carry a rate");
    let q = c.gauge().quotient_basis();
    let j = curvature_jacobian(&c, limit(&trace)).unwrap();
    let restricted = -(q.transpose() * j * q);
    let lambda = restricted.symmetric_eigenvalues().min();
    assert!(
        (fit.lambda - lambda).abs() < 0.1 * lambda,
        "{} vs {lambda}",
        fit.lambda
    );
}

#[test]
fn flow_commutes_with_action() {
    let c = double_tet();
    let cfg = FlowConfig {
        t_max: 5.0,
        ..ricci()
    };
    let mut r = rng(32);
    let l0: Vec<f64> = (0..6).map(|_| r.gen_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..c.vertex_count())
        .map(|_| r.gen_range(-1.0..1.0))
        .collect();
    let a = integrate(&c, &l0, &cfg, 5.0).unwrap();
    let b = integrate(&c, &act(&c, &w, &l0).unwrap(), &cfg, 5.0).unwrap();
    for ((_, la), (_, lb)) in a.iter().zip(&b) {
        assert!(sup_dist(&act(&c, &w, la).unwrap(), lb) < 1e-9);
    }
}

#[test]
fn halving_the_step_keeps_the_limit() {
    let c = figure_eight();
    let a = run(&c, &[0.5, 0.9], &ricci()).unwrap();
    let b = run(
        &c,
        &[0.5, 0.9],
        &FlowConfig {
            step: 0.005,
            ..ricci()
        },
    )
    .unwrap();
    let pa = project_quotient(&c, limit(&a));
    let pb = project_quotient(&c, limit(&b));
    assert!(sup_dist(&pa, &pb) < 1e-8);
}

#[test]
fn converged_limit_is_stable() {
    let c = figure_eight();
    let cfg = ricci();
    let trace = run(&c, &[-0.8, 0.6], &cfg).unwrap();
    let l = limit(&trace).to_vec();
    let later = integrate(&c, &l, &cfg, 10.0 * cfg.window).unwrap();
    for (_, x) in later {
        assert!(ricci_curvature(&c, &x).sup_norm() < cfg.tol_converge);
    }
}

#[test]
fn double_tet_diverges() {
    let c = double_tet();
    let trace = run(&c, &[0.0; 6], &FlowConfig::default()).unwrap();
    assert_eq!(trace.classification, Classification::Diverging);
    assert!(sup_norm(&trace.last().l) > 1e3);
    for s in &trace.samples {
        assert!(sup_norm(&s.curvature) >= 1.0);
    }
    assert!(trace.rate.is_none());
}

#[test]
fn short_horizon_is_undetermined() {
    let c = figure_eight();
    let trace = run(
        &c,
        &[0.9, -0.9],
        &FlowConfig {
            t_max: 0.05,
            ..ricci()
        },
    )
    .unwrap();
    assert_eq!(trace.classification, Classification::Undetermined);
}

#[test]
fn adaptive_and_fixed_agree() {
    let c = figure_eight();
    let fixed = run(&c, &[0.3, -0.2], &ricci()).unwrap();
    let adaptive = run(
        &c,
        &[0.3, -0.2],
        &FlowConfig {
            adaptive: true,
            ..ricci()
        },
    )
    .unwrap();
    assert!(adaptive.steps < fixed.steps);
    let pa = project_quotient(&c, limit(&fixed));
    let pb = project_quotient(&c, limit(&adaptive));
    assert!(sup_dist(&pa, &pb) < 1e-9);
}

#[test]
fn nearby_runs_do_not_separate() {
    for c in [figure_eight(), double_tet()] {
        let cfg = FlowConfig {
            t_max: 50.0,
            ..ricci()
        };
        let l0 = vec![0.2; c.edge_count()];
        let report = uniqueness_check(&c, &l0, &cfg, 1e-8, 7).unwrap();
        assert!((report.initial_separation - 1e-8).abs() < 1e-15);
        assert!(report.max_separation <= 2e-8, "{}", report.max_separation);
    }
}

#[test]
fn prescribed_flow_recovers_target_metric() {
    let c = figure_eight();
    let mut r = rng(33);
    for _ in 0..3 {
        let star = random_decorated_metric(&c, &mut r);
        let cfg = FlowConfig {
            kind: FlowKind::Prescribed,
            target_curvature: Some(ricci_curvature(&c, &star).values),
            ..ricci()
        };
        let trace = run(&c, &[0.0, 0.0], &cfg).unwrap();
        let got = project_quotient(&c, limit(&trace));
        assert!(sup_dist(&got, &project_quotient(&c, &star)) < 1e-7);
    }
}

#[test]
fn calabi_flow_decreases_curvature_norm() {
    let c = figure_eight();
    let cfg = FlowConfig {
        kind: FlowKind::Calabi,
        ..ricci()
    };
    let trace = run(&c, &[1.2, 0.9], &cfg).unwrap();
    let norms: Vec<f64> = trace
        .samples
        .iter()
        .map(|s| 0.5 * s.curvature.iter().map(|k| k * k).sum::<f64>())
        .collect();
    for w in norms.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(sup_norm(&project_quotient(&c, limit(&trace))) < 1e-7);
}

#[test]
fn calabi_flow_aborts_outside_decorated_region() {
    let c = figure_eight();
    let cfg = FlowConfig {
        kind: FlowKind::Calabi,
        ..ricci()
    };
    match run(&c, &[2.0, 0.0], &cfg) {
        Err(FlowError::Failed(f)) => {
            assert_eq!(f.reason, FailureReason::LeftDecoratedRegion);
            assert_eq!(f.last_good().l, vec![2.0, 0.0]);
        }
        other => panic!("expected abort, got {other:?}"),
    }
}

#[test]
fn configuration_errors() {
    let c = figure_eight();
    let bad_step = FlowConfig {
        step: 0.0,
        ..ricci()
    };
    assert!(matches!(
        run(&c, &[0.0, 0.0], &bad_step),
        Err(FlowError::InvalidConfig(_))
    ));
    let no_target = FlowConfig {
        kind: FlowKind::Prescribed,
        ..ricci()
    };
    assert!(matches!(
        run(&c, &[0.0, 0.0], &no_target),
        Err(FlowError::InvalidConfig(_))
    ));
    assert!(matches!(
        run(&c, &[0.0], &ricci()),
        Err(FlowError::DimensionMismatch {
            expected: 2,
            actual: 1
        })
    ));
    assert_eq!("calabi".parse::<FlowKind>().unwrap(), FlowKind::Calabi);
    assert!("yamabe".parse::<FlowKind>().is_err());
}

#[test]
fn record_every_thins_the_trace() {
    let c = figure_eight();
    let dense = run(&c, &[0.4, 0.1], &ricci()).unwrap();
    let sparse = run(
        &c,
        &[0.4, 0.1],
        &FlowConfig {
            record_every: 10,
            ..ricci()
        },
    )
    .unwrap();
    assert!(sparse.samples.len() * 5 < dense.samples.len());
    assert_eq!(dense.last().l, sparse.last().l);
}
