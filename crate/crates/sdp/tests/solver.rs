use nalgebra::DMatrix;
use sbc_sdp::{sdpa, Backend, BlockEntry, Constraint, InteriorPoint, SdpProblem, Status};

fn solve(p: &SdpProblem) -> sbc_sdp::Solution {
    InteriorPoint::default().solve(p).unwrap()
}

/// min t  s.t.  t − s = 1,  s ⪰ 0 (1×1 block)
#[test]
fn scalar_lower_bound() {
    let mut p = SdpProblem::new();
    let t = p.add_free();
    let s = p.add_block(1);
    p.c_free[t] = 1.0;
    p.add_constraint(Constraint {
        free: vec![(t, 1.0)],
        entries: vec![BlockEntry::new(s, 0, 0, -1.0)],
        rhs: 1.0,
    });
    let sol = solve(&p);
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.x_free[0] - 1.0).abs() < 1e-7, "{}", sol.x_free[0]);
    assert!((sol.primal_objective - 1.0).abs() < 1e-7);
}

/// Gram matrix for x² + 2x + 1 over the basis {1, x}.
fn gram_feasibility(c0: f64, c1: f64, c2: f64) -> SdpProblem {
    let mut p = SdpProblem::new();
    let q = p.add_block(2);
    for (row, col, rhs) in [(0, 0, c0), (0, 1, c1), (1, 1, c2)] {
        // Off-diagonal stored entries count twice in ⟨A, Q⟩.
        p.add_constraint(Constraint {
            free: vec![],
            entries: vec![BlockEntry::new(q, row, col, 1.0)],
            rhs,
        });
    }
    p
}

#[test]
fn perfect_square_is_sos() {
    let sol = solve(&gram_feasibility(1.0, 2.0, 1.0));
    assert_eq!(sol.status, Status::Optimal);
    let expected = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!((&sol.blocks[0] - expected).amax() < 1e-6, "{}", sol.blocks[0]);
}

#[test]
fn odd_polynomial_is_not_sos() {
    let sol = solve(&gram_feasibility(0.0, 1.0, 0.0));
    assert_eq!(sol.status, Status::PrimalInfeasible);
}

/// Classic 2×2 example: minimize ⟨C, X⟩ with trace(X) = 1 gives λ_min(C).
#[test]
fn min_eigenvalue_by_trace_constraint() {
    let mut p = SdpProblem::new();
    let b = p.add_block(3);
    let c = [[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]];
    for (i, row) in c.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().skip(i) {
            if v != 0.0 {
                p.c_blocks.push(BlockEntry::new(b, i, j, v));
            }
        }
    }
    p.add_constraint(Constraint {
        free: vec![],
        entries: (0..3).map(|i| BlockEntry::new(b, i, i, 1.0)).collect(),
        rhs: 1.0,
    });
    let sol = solve(&p);
    assert_eq!(sol.status, Status::Optimal);
    let lmin = 2.0 - std::f64::consts::SQRT_2;
    assert!((sol.primal_objective - lmin).abs() < 1e-8);
    assert!((sol.dual_objective - lmin).abs() < 1e-8);
}

#[test]
fn unbounded_objective_is_reported() {
    // min t with no constraint tying t down except t − s = 0, s ⪰ 0 … and
    // objective −t: unbounded below.
    let mut p = SdpProblem::new();
    let t = p.add_free();
    let s = p.add_block(1);
    p.c_free[t] = -1.0;
    p.add_constraint(Constraint {
        free: vec![(t, 1.0)],
        entries: vec![BlockEntry::new(s, 0, 0, -1.0)],
        rhs: 0.0,
    });
    let sol = solve(&p);
    assert_eq!(sol.status, Status::DualInfeasible);
}

#[test]
fn sdpa_round_trip_preserves_problem_and_solution() {
    let mut p = gram_feasibility(1.0, 2.0, 1.0);
    let t = p.add_free();
    p.c_free[t] = 0.5;
    p.constraints[0].free.push((t, 1.0));
    p.c_blocks.push(BlockEntry::new(0, 0, 1, 0.25));
    p.normalize();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.dat-s");
    sdpa::write_file(&p, &path).unwrap();
    let back = sdpa::read_file(&path).unwrap();
    assert_eq!(back, p);
}

#[test]
fn unreferenced_free_variables() {
    let mut p = gram_feasibility(1.0, 2.0, 1.0);
    let a = p.add_free();
    let sol = solve(&p);
    assert_eq!(sol.status, Status::Optimal);
    assert_eq!(sol.x_free, vec![0.0]);
    p.c_free[a] = 1.0;
    assert_eq!(solve(&p).status, Status::DualInfeasible);
}
