use std::f64::consts::PI;

use proptest::prelude::*;
use vqe_natgrad::experiments::{compare_with, holds_near, longest_run_near, preset};
use vqe_natgrad::optimizers::RunOptions;
use vqe_natgrad::*;

const KINDS: [OptimizerKind; 3] = [
    OptimizerKind::Vanilla,
    OptimizerKind::NaturalFS,
    OptimizerKind::Ite,
];

fn close_to(theta: &[f64], target: &[f64], tol: f64) -> bool {
    theta.iter().zip(target).all(|(a, b)| (a - b).abs() < tol)
}

#[test]
fn qubit_a_basins() {
    let p = preset(PresetName::QubitA);
    let report = compare(&p, &KINDS, 0.01).unwrap();
    let v = report.get(OptimizerKind::Vanilla).unwrap();
    assert!(
        close_to(&v.final_theta, &[-PI / 4.0, 0.0], 0.02),
        "{:?}",
        v.final_theta
    );
    for kind in [OptimizerKind::NaturalFS, OptimizerKind::Ite] {
        let r = report.get(kind).unwrap();
        assert!(
            close_to(&r.final_theta, &[PI / 4.0, PI / 2.0], 0.02),
            "{kind}: {:?}",
            r.final_theta
        );
        assert!(report.strictly_faster(kind, OptimizerKind::Vanilla));
    }
    for r in &report.results {
        assert!((r.final_energy + 1.0).abs() < 1e-3);
    }
}

#[test]
fn qubit_b_basins() {
    let p = preset(PresetName::QubitB);
    let report = compare(&p, &KINDS, 0.01).unwrap();
    for kind in [OptimizerKind::Vanilla, OptimizerKind::Ite] {
        let r = report.get(kind).unwrap();
        assert!(
            close_to(&r.final_theta, &[3.0 * PI / 4.0, 0.0], 0.02),
            "{kind}: {:?}",
            r.final_theta
        );
    }
    let n = report.get(OptimizerKind::NaturalFS).unwrap();
    assert!(close_to(&n.final_theta, &[PI / 4.0, PI / 2.0], 0.02));
    assert!(report.strictly_faster(OptimizerKind::NaturalFS, OptimizerKind::Vanilla));
    assert!(report.strictly_faster(OptimizerKind::NaturalFS, OptimizerKind::Ite));
}

#[test]
fn orderings_survive_half_learning_rate() {
    for (name, threshold, kinds) in [
        (PresetName::QubitA, 0.01, &KINDS[..]),
        (PresetName::QubitB, 0.01, &KINDS[..]),
        (PresetName::H2A, 0.01, &KINDS[..2]),
        (PresetName::H2Plateau, 0.05, &KINDS[..2]),
    ] {
        let p = preset(name);
        let opts = RunOptions {
            schedule: LearningRateSchedule::Constant(p.eta / 2.0),
            ..p.run_options()
        };
        let report = compare_with(&p, kinds, threshold, &opts).unwrap();
        assert!(
            report.strictly_faster(OptimizerKind::NaturalFS, OptimizerKind::Vanilla),
            "{name}"
        );
        if name == PresetName::QubitA {
            assert!(report.strictly_faster(OptimizerKind::Ite, OptimizerKind::Vanilla));
        }
        if name == PresetName::QubitB {
            assert!(report.strictly_faster(OptimizerKind::NaturalFS, OptimizerKind::Ite));
        }
    }
}

#[test]
fn vanilla_energy_never_increases() {
    for name in [PresetName::QubitA, PresetName::QubitB, PresetName::H2A] {
        let p = preset(name);
        let t = run(
            &p.problem(),
            OptimizerKind::Vanilla,
            &p.theta0,
            &p.run_options(),
        )
        .unwrap();
        for w in t.steps.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12, "{name} at k={}", w[1].k);
        }
    }
}

#[test]
fn natural_energy_decreases_away_from_singularities() {
    for name in [PresetName::QubitA, PresetName::QubitB] {
        let p = preset(name);
        let t = run(
            &p.problem(),
            OptimizerKind::NaturalFS,
            &p.theta0,
            &p.run_options(),
        )
        .unwrap();
        for w in t.steps.windows(2) {
            if w[0].min_eig_metric > 0.1 {
                assert!(w[1].energy <= w[0].energy + 1e-12, "{name} at k={}", w[1].k);
            }
        }
    }
}

#[test]
fn ite_and_natural_coincide_for_real_ansatz() {
    for name in [PresetName::H2A, PresetName::H2Plateau] {
        let p = preset(name);
        let opts = RunOptions {
            max_steps: 600,
            ..p.run_options()
        };
        let problem = p.problem();
        let a = run(&problem, OptimizerKind::Ite, &p.theta0, &opts).unwrap();
        let f = run(&problem, OptimizerKind::NaturalFS, &p.theta0, &opts).unwrap();
        for (x, y) in a.steps.iter().zip(&f.steps) {
            let d = x
                .theta
                .iter()
                .zip(&y.theta)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(d < 1e-10, "{name} k={} diff {d:e}", x.k);
        }
    }
}

#[test]
fn h2_convergence_and_plateau() {
    let p = preset(PresetName::H2A);
    let report = compare(&p, &KINDS[..2], 0.01).unwrap();
    assert!(report
        .results
        .iter()
        .all(|r| r.steps_to_threshold.is_some()));
    assert!(report.strictly_faster(OptimizerKind::NaturalFS, OptimizerKind::Vanilla));

    let p = preset(PresetName::H2Plateau);
    let report = compare(&p, &KINDS[..2], 0.05).unwrap();
    let vanilla = &report.get(OptimizerKind::Vanilla).unwrap().trajectory;
    let (len, start) = longest_run_near(vanilla, -0.2, 0.05);
    assert!(len >= 50, "{len}");
    // the plateau precedes the descent
    let reached = report
        .get(OptimizerKind::Vanilla)
        .unwrap()
        .steps_to_threshold
        .unwrap();
    assert!(start.unwrap() + len <= reached);
    assert!(report.strictly_faster(OptimizerKind::NaturalFS, OptimizerKind::Vanilla));
}

#[test]
fn toy_vanilla_holds_ground_state() {
    let p = preset(PresetName::Toy);
    let opts = RunOptions {
        max_steps: 2000,
        ..p.run_options()
    };
    let t = run(&p.problem(), OptimizerKind::Vanilla, &p.theta0, &opts).unwrap();
    assert!(holds_near(&t, p.reference_energy, 0.01, 400));
}

#[test]
fn classical_fisher_natural_gradient_runs_on_h2() {
    // F^C is rank-deficient on the qubit problem but usable with the floor.
    let p = preset(PresetName::H2A);
    let opts = RunOptions {
        max_steps: 200,
        ..p.run_options()
    };
    let t = run(
        &p.problem(),
        OptimizerKind::NaturalClassical,
        &p.theta0,
        &opts,
    )
    .unwrap();
    assert_eq!(t.steps.len(), 201);
    assert!(t.steps.iter().all(|s| s.energy.is_finite()));
}

#[test]
fn runs_are_bit_identical() {
    let p = preset(PresetName::H2A);
    let problem = p.problem();
    let a = run(
        &problem,
        OptimizerKind::NaturalFS,
        &p.theta0,
        &p.run_options(),
    )
    .unwrap();
    let b = run(
        &problem,
        OptimizerKind::NaturalFS,
        &p.theta0,
        &p.run_options(),
    )
    .unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn identity_metric_gives_vanilla_direction(g in prop::collection::vec(-10.0f64..10.0, 1..6)) {
        let id = MetricMatrix::identity(g.len());
        for policy in [RegularizationPolicy::EigenFloor(1e-10), RegularizationPolicy::PseudoInverse(1e-9)] {
            let x = solve_regularized(&id, &g, policy).unwrap();
            prop_assert_eq!(&x, &g);
        }
    }

    #[test]
    fn metrics_are_ordered_psd(t1 in -PI..PI, t2 in -PI..PI, t3 in -PI..PI, t4 in -PI..PI) {
        for (c, theta) in [
            (AnsatzCircuit::single_qubit(), vec![t1, t2]),
            (AnsatzCircuit::hardware_efficient_two_qubit(), vec![t1, t2, t3, t4]),
        ] {
            let f = fubini_study_metric(&c, &theta).unwrap();
            let a = ite_matrix(&c, &theta).unwrap();
            prop_assert!(f.eigenvalues()[0] >= -1e-9);
            prop_assert!(psd_order_check(&a, &f, 1e-9).unwrap());
        }
    }

    #[test]
    fn natural_step_from_random_start_is_finite(t1 in 0.05f64..1.5, t2 in -PI..PI) {
        let p = Problem::new(PauliHamiltonian::sigma_x(), AnsatzCircuit::single_qubit()).unwrap();
        let next = step(&p, OptimizerKind::NaturalFS, &[t1, t2], 0.05, RegularizationPolicy::default()).unwrap();
        prop_assert!(next.iter().all(|x| x.is_finite()));
    }
}
