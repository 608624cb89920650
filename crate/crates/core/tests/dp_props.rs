use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbc_core::dp::{
    monte_carlo, reach_avoid_probability, safety_unsafe_probability, DpOperator, GridSpec, Spec, ValueTable,
};
use sbc_core::model::SystemModel;

fn operators(models: &[SystemModel]) -> Vec<DpOperator<'_>> {
    let mut out = Vec::new();
    for m in models {
        let grid = GridSpec::with_nodes(m, 401, 61).unwrap();
        out.push(DpOperator::new(m, grid.clone(), Spec::Safety).unwrap());
        if m.has_region(sbc_core::model::RegionName::G) {
            out.push(DpOperator::new(m, grid, Spec::ReachAvoid).unwrap());
        }
    }
    out
}

fn random_table(rng: &mut ChaCha8Rng, like: &ValueTable) -> ValueTable {
    ValueTable {
        stage: like.stage,
        values: like.values.iter().map(|_| rng.random_range(0.0..1.0)).collect(),
        outside: like.outside,
        target: like.target,
    }
}

#[test]
fn bellman_step_is_monotone() {
    let models = [SystemModel::example1(), SystemModel::example2()];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for op in operators(&models) {
        let base = op.terminal();
        for _ in 0..10 {
            let u = random_table(&mut rng, &base);
            let v = ValueTable {
                values: u.values.iter().map(|&x| x + rng.random_range(0.0..(1.0 - x))).collect(),
                ..u.clone()
            };
            let (su, sv) = (op.step(&u), op.step(&v));
            for i in 0..su.values.len() {
                assert!(
                    su.values[i] <= sv.values[i] + 1e-15,
                    "{} {:?} node {i}",
                    op.model.name,
                    op.spec
                );
            }
        }
    }
}

#[test]
fn bellman_step_is_affine_on_active_nodes() {
    let models = [SystemModel::example1(), SystemModel::example2()];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for op in operators(&models) {
        let base = op.terminal();
        for (rho, eta) in [(0.5, 0.25), (0.3, -0.1), (2.0, 0.0)] {
            let v = random_table(&mut rng, &base);
            let lhs = op.step_unclamped(&v.map(|x| rho * x + eta));
            let rhs = op.step_unclamped(&v).map(|x| rho * x + eta);
            for i in (0..lhs.values.len()).filter(|&i| op.is_active(i)) {
                assert!(
                    (lhs.values[i] - rhs.values[i]).abs() <= 1e-9,
                    "{} {:?} node {i}: {} vs {}",
                    op.model.name,
                    op.spec,
                    lhs.values[i],
                    rhs.values[i]
                );
            }
        }
    }
}

#[test]
fn unsafe_probability_grows_with_horizon() {
    let m = SystemModel::example1();
    let op = DpOperator::new(&m, GridSpec::for_model(&m).unwrap(), Spec::Safety).unwrap();
    let r = op.run_for(50);
    let x0 = [-0.9];
    // Stage 50 − T of a 50-step run is the stage-0 value of a T-step run.
    let mut prev = r.value_at_stage(50, &x0).unwrap();
    for t in 1..=50 {
        let p = r.value_at_stage(50 - t, &x0).unwrap();
        assert!(p >= prev - 1e-12, "T={t}: {p} < {prev}");
        prev = p;
    }
}

#[test]
fn grid_refinement_changes_answers_little() {
    let m = SystemModel::example1();
    let x0 = [-0.9];
    let coarse = GridSpec::for_model(&m).unwrap();
    let fine = GridSpec::with_nodes(&m, 4001, GridSpec::DEFAULT_QUAD_NODES).unwrap();
    let a = safety_unsafe_probability(&m, &coarse, &x0).unwrap();
    let b = safety_unsafe_probability(&m, &fine, &x0).unwrap();
    assert!((a - b).abs() < 2e-3, "safety {a} vs {b}");
    let a = reach_avoid_probability(&m, &coarse, &x0).unwrap();
    let b = reach_avoid_probability(&m, &fine, &x0).unwrap();
    assert!((a - b).abs() < 2e-3, "reach-avoid {a} vs {b}");
}

#[test]
fn dp_agrees_with_monte_carlo() {
    for (m, spec) in [
        (SystemModel::example1(), Spec::Safety),
        (SystemModel::example1(), Spec::ReachAvoid),
        (SystemModel::example2(), Spec::Safety),
    ] {
        let x0 = m.initial_state.clone().unwrap();
        let grid = GridSpec::for_model(&m).unwrap();
        let mc = monte_carlo(&m, &x0, spec, 1_000_000, 7).unwrap();
        let (dp, (lo, hi)) = match spec {
            Spec::Safety => (safety_unsafe_probability(&m, &grid, &x0).unwrap(), mc.complement().1),
            Spec::ReachAvoid => (reach_avoid_probability(&m, &grid, &x0).unwrap(), mc.ci),
        };
        assert!(lo <= dp && dp <= hi, "{} {spec}: dp {dp} outside [{lo}, {hi}]", m.name);
    }
}

#[test]
fn starting_outside_the_safe_set_is_certain_failure() {
    let m = SystemModel::example1();
    let grid = GridSpec::for_model(&m).unwrap();
    assert_eq!(safety_unsafe_probability(&m, &grid, &[1.5]).unwrap(), 1.0);
    assert_eq!(reach_avoid_probability(&m, &grid, &[1.5]).unwrap(), 0.0);
    assert_eq!(reach_avoid_probability(&m, &grid, &[0.0]).unwrap(), 1.0);
}
