use proptest::prelude::*;
use sbc_core::certificates::{
    evaluate_bound, msbc_normalize, BarrierCertificate, BoundAt, BoundBranch, CertificateKind,
};
use sbc_core::model::SystemModel;
use sbc_core::poly::Polynomial;

fn cert(kind: CertificateKind, v: f64, alpha: f64, beta: f64) -> BarrierCertificate {
    let m = SystemModel::example1();
    BarrierCertificate::new(kind, Polynomial::constant(m.space, v), alpha, beta, None).unwrap()
}

proptest! {
    #[test]
    fn msbc_normalization_preserves_the_bound(
        alpha in 1.0f64..1.5,
        beta in 0.0f64..0.9,
        v in 0.0f64..1.0,
        horizon in 1usize..60,
    ) {
        prop_assume!(alpha * beta - alpha + 1.0 < -1e-9);
        let c = cert(CertificateKind::Msbc, v, alpha, beta);
        let before = evaluate_bound(&c, horizon, BoundAt::Point(&[0.0])).unwrap();
        prop_assert_eq!(before.branch, BoundBranch::OneMinusBeta);
        let (a2, b2) = msbc_normalize(alpha, beta).unwrap();
        let c2 = cert(CertificateKind::Msbc, v, a2, b2);
        prop_assert!(c2.gamma().abs() < 1e-12);
        let after = evaluate_bound(&c2, horizon, BoundAt::Point(&[0.0])).unwrap();
        prop_assert!((before.raw - after.raw).abs() <= 1e-12, "{} vs {}", before.raw, after.raw);
    }

    #[test]
    fn eta_is_monotone_in_stage(
        alpha in 0.8f64..1.2,
        beta in -0.2f64..0.2,
        vx in -2.0f64..2.0,
        horizon in 1usize..60,
    ) {
        let c = cert(CertificateKind::Dsbc, 0.0, alpha, beta);
        // η_{t+1} − η_t = −α^{t−T} (v(x)(1−α) + αβ).
        let s = vx * (1.0 - alpha) + alpha * beta;
        let etas: Vec<f64> = (0..=horizon).map(|t| c.eta(vx, t, horizon)).collect();
        let scale = 1.0 + etas.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        for w in etas.windows(2) {
            let d = w[1] - w[0];
            prop_assert!(-s * d >= -1e-12 * scale, "s={} step {}", s, d);
        }
    }
}

#[test]
fn normalization_needs_negative_gamma() {
    assert!(msbc_normalize(1.0, 0.5).is_err());
}
