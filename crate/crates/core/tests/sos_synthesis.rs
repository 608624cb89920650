use nalgebra::DMatrix;
use sbc_core::certificates::{
    check_certificate, induction_envelope_check, BarrierCertificate, CertError, CertificateKind, SamplingConfig,
};
use sbc_core::dp::{DpOperator, GridSpec};
use sbc_core::model::SystemModel;
use sbc_core::poly::{Monomial, Polynomial, VarSpace};
use sbc_core::sos::*;
use sbc_sdp::{sdpa, Backend, InteriorPoint, SdpProblem, Status};

use CertificateKind::{Dsbc, Msbc, Rabc, Ssbc};

fn run(m: &SystemModel, kind: CertificateKind, alpha: f64, degree: u32) -> SynthesisResult {
    synthesize(
        m,
        kind,
        alpha,
        SosOptions::degree(degree),
        &InteriorPoint::default(),
        &SamplingConfig::default(),
    )
    .unwrap()
}

fn valid_bound(r: &SynthesisResult) -> f64 {
    assert!(
        r.valid,
        "{} alpha={} deg={}: {:?} {:?}",
        r.kind, r.alpha, r.degree, r.status, r.diagnostics
    );
    r.objective.unwrap()
}

fn line() -> VarSpace {
    VarSpace::new(1, 0).unwrap()
}

fn solve_feasibility(p: &Polynomial) -> (Status, sbc_sdp::Solution) {
    let prog = SosProgram::feasibility(line(), std::slice::from_ref(p), BasisKind::Monomial, &[]).unwrap();
    let c = compile(&prog).unwrap();
    let sol = InteriorPoint::default().solve(&c.sdp).unwrap();
    (sol.status, sol)
}

#[test]
fn perfect_square_compiles_to_feasible_gram() {
    let p = Polynomial::from_terms(line(), vec![(vec![2], 1.0), (vec![1], 2.0), (vec![0], 1.0)]).unwrap();
    let (status, sol) = solve_feasibility(&p);
    assert_eq!(status, Status::Optimal);
    let q = &sol.blocks[0];
    let want = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert!((q - want).amax() < 1e-6, "{q}");
}

#[test]
fn odd_polynomial_is_infeasible() {
    let p = Polynomial::state(line(), 0).unwrap();
    assert_eq!(solve_feasibility(&p).0, Status::PrimalInfeasible);
}

#[test]
fn degree_six_block_has_four_monomials() {
    let p = Polynomial::from_terms(line(), vec![(vec![6], 1.0), (vec![0], 1.0)]).unwrap();
    for kind in [BasisKind::Monomial, BasisKind::Legendre] {
        let prog = SosProgram::feasibility(line(), std::slice::from_ref(&p), kind, &[(-1.0, 1.0)]).unwrap();
        assert_eq!(
            prog.constraints[0].basis.monomials,
            (0..4).map(|k| Monomial::new(vec![k])).collect::<Vec<_>>()
        );
        let c = compile(&prog).unwrap();
        assert_eq!(c.sdp.block_sizes, vec![4]);
        // Rows cover x^0 .. x^6.
        assert_eq!(c.sdp.num_constraints(), 7);
    }
}

#[test]
fn constant_template_gives_the_vacuous_bound() {
    let r = run(&SystemModel::example1(), Dsbc, 1.0, 0);
    assert!((valid_bound(&r) - 1.0).abs() < 1e-6, "{:?}", r.objective);
}

#[test]
fn zero_certificate_satisfies_the_reach_avoid_conditions() {
    let m = SystemModel::example1();
    let zero = BarrierCertificate::new(Rabc, Polynomial::zero(m.space), 1.06, 0.0, Some(0.0)).unwrap();
    let report = check_certificate(&zero, &m, &SamplingConfig::default()).unwrap();
    assert!(report.passes(1e-12), "{report}");
    assert!(valid_bound(&run(&m, Rabc, 1.06, 2)) >= 0.0);
}

#[test]
fn builders_reject_bad_inputs() {
    let m1 = SystemModel::example1();
    let opts = SosOptions::degree(6);
    assert!(matches!(build_dsbc(&m1, 0.0, opts), Err(CertError::Domain(_))));
    assert!(matches!(build_dsbc(&m1, -1.0, opts), Err(CertError::Domain(_))));
    assert!(matches!(build_msbc(&m1, 0.99, opts), Err(CertError::Domain(_))));
    assert!(matches!(build_ssbc(&m1, 1.002, opts), Err(CertError::Domain(_))));
    let m2 = SystemModel::example2();
    assert!(matches!(
        build_rabc(&m2, 1.06, SosOptions::degree(4)),
        Err(CertError::Config(_))
    ));
}

#[test]
fn programs_have_the_expected_shape() {
    let m = SystemModel::example1();
    for (kind, sos, scalars) in [(Dsbc, 4, 1), (Msbc, 3, 2), (Ssbc, 3, 2), (Rabc, 5, 1)] {
        let alpha = if kind == Rabc { 1.06 } else { 1.0 };
        let p = build(&m, kind, alpha, SosOptions::degree(6)).unwrap();
        assert_eq!((p.constraints.len(), p.scalar_nonneg.len()), (sos, scalars), "{kind}");
        assert_eq!(p.multipliers.len(), sos, "{kind}");
        assert_eq!(p.num_psd_blocks(), 2 * sos + scalars);
        let expect = if kind == Rabc { Sense::Maximize } else { Sense::Minimize };
        assert_eq!(p.sense, expect);
    }
}

#[test]
fn published_examples_are_reproduced() {
    let m1 = SystemModel::example1();
    let m2 = SystemModel::example2();
    let b = valid_bound(&run(&m1, Dsbc, 1.002, 6));
    assert!((b - 0.5891).abs() <= 0.02, "{b}");
    let b = valid_bound(&run(&m2, Dsbc, 1.1, 4));
    assert!((b - 0.9465).abs() <= 0.02, "{b}");
    let b = valid_bound(&run(&m1, Msbc, 1.0, 6));
    assert!((b - 0.5903).abs() <= 0.02, "{b}");
    let b = valid_bound(&run(&m2, Ssbc, 0.96, 4));
    assert!((b - 0.19).abs() <= 0.02, "{b}");
    let b = valid_bound(&run(&m1, Rabc, 1.06, 6));
    assert!((b - 0.3995).abs() <= 0.03, "{b}");
}

/// Values from solving the exported SDPA files with Clarabel.
#[test]
fn internal_solver_matches_external_solver() {
    let m1 = SystemModel::example1();
    let m2 = SystemModel::example2();
    for (m, kind, alpha, degree, external) in [
        (&m1, Dsbc, 1.002, 6, 0.5884467099),
        (&m1, Msbc, 1.0, 6, 0.5880295335),
        (&m2, Dsbc, 0.96, 4, 0.1900108255),
        (&m1, Rabc, 1.06, 6, 0.4026293341),
    ] {
        let b = valid_bound(&run(m, kind, alpha, degree));
        assert!((b - external).abs() <= 1e-4, "{kind} alpha={alpha}: {b} vs {external}");
    }
}

#[test]
fn exported_sdp_round_trips() {
    let m = SystemModel::example1();
    let prog = build_dsbc(&m, 1.002, SosOptions::degree(6)).unwrap();
    let c = compile(&prog).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dsbc.dat-s");
    export_sdp(&c.sdp, &path).unwrap();
    let mut back = sdpa::read_file(&path).unwrap();
    back.normalize();
    let mut orig = c.sdp.clone();
    orig.normalize();
    assert_eq!(back, orig);

    let empty = dir.path().join("empty.dat-s");
    export_sdp(&SdpProblem::new(), &empty).unwrap();
    let e = sdpa::read_file(&empty).unwrap();
    assert!(e.block_sizes.is_empty() && e.constraints.is_empty());
}

#[test]
fn sweep_rows_match_single_solves_and_mark_inapplicable_alphas() {
    let m = SystemModel::example1();
    let backend = InteriorPoint::default();
    let cfg = SamplingConfig::default();
    let t = alpha_sweep(&m, Msbc, &[0.99, 1.002], SosOptions::degree(6), &backend, &cfg);
    assert!(!t.rows[0].applicable());
    let single = run(&m, Msbc, 1.002, 6);
    assert_eq!(t.rows[1].result.as_ref().unwrap().objective, single.objective);
    assert_eq!(t.best, Some((1.002, single.objective.unwrap())));
}

#[test]
fn table_one_sweep_has_its_minimum_near_one() {
    let m = SystemModel::example1();
    let alphas: Vec<f64> = (0..11).map(|k| 0.99 + 0.002 * k as f64).collect();
    let t = alpha_sweep(
        &m,
        Dsbc,
        &alphas,
        SosOptions::degree(6),
        &InteriorPoint::default(),
        &SamplingConfig::default(),
    );
    let (a, _) = t.best.unwrap();
    assert!((0.998..=1.0041).contains(&a), "best alpha {a}");
    for row in &t.rows {
        let r = row.result.as_ref().unwrap();
        assert!(r.valid);
        let g = r.certificate.as_ref().unwrap().gamma();
        if row.alpha > 1.0 + 1e-9 && g.abs() >= 1e-3 {
            assert!(g < 0.0, "alpha={} gamma={g}", row.alpha);
        }
    }
}

#[test]
fn dsbc_is_no_worse_than_the_gamma_constrained_variants() {
    let m1 = SystemModel::example1();
    let m2 = SystemModel::example2();
    for (m, degree, alpha) in [(&m1, 6, 1.0), (&m1, 6, 1.006), (&m2, 4, 0.96), (&m2, 4, 1.02)] {
        let d = valid_bound(&run(m, Dsbc, alpha, degree));
        for kind in [Msbc, Ssbc] {
            if kind.alpha_in_domain(alpha) {
                let o = valid_bound(&run(m, kind, alpha, degree));
                assert!(d <= o + 1e-6, "{} alpha={alpha}: dsbc {d} vs {kind} {o}", m.name);
            }
        }
    }
}

#[test]
fn valid_certificates_respect_the_value_function() {
    let m = SystemModel::example1();
    let grid = GridSpec::for_model(&m).unwrap();
    for (kind, alpha, degree) in [(Dsbc, 1.002, 6), (Dsbc, 0.99, 6), (Msbc, 1.004, 6), (Rabc, 1.06, 6)] {
        let r = run(&m, kind, alpha, degree);
        valid_bound(&r);
        assert!(r.gram_min_eigenvalue.unwrap() >= -VALID_GRAM_TOL);
        assert!(r.residual_norm.unwrap() <= VALID_RESIDUAL_TOL);
        let cert = r.certificate.as_ref().unwrap();
        let dp = DpOperator::new(&m, grid.clone(), kind.spec()).unwrap().run();
        let env = induction_envelope_check(cert, &m, &dp, &SamplingConfig::default()).unwrap();
        assert!(env.gap >= -1e-3, "{kind} alpha={alpha}: {env:?}");
        let truth = dp.value_at(&[-0.9]).unwrap();
        let b = r.objective.unwrap();
        if kind.is_safety() {
            assert!(b >= truth - 1e-3, "{kind} alpha={alpha}: {b} < {truth}");
        } else {
            assert!(b <= truth + 1e-3, "{kind} alpha={alpha}: {b} > {truth}");
        }
    }
}
