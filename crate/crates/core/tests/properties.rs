use cvqkd::gaussian::{
    beamsplitter, entangling_cloner_channel, heterodyne_condition, homodyne_condition,
    tmsv_covariance, ChannelParams, CovarianceMatrix, Quadrature,
};
use cvqkd::nla::{
    cov_after_nla, epr_parameter, epr_variance, equivalent_params, equivalent_params_asymmetric,
    g_max, lambda_bound, success_probability, NlaConfig,
};
use cvqkd::protocols::{
    eim_covariance, key_rate, Detection, ProtocolSpec, Reconciliation,
};
use proptest::prelude::*;

fn ch(t: f64, e: f64) -> ChannelParams {
    ChannelParams::new(t, e).unwrap()
}

fn max_diff(a: &CovarianceMatrix, b: &CovarianceMatrix) -> f64 {
    (a.matrix() - b.matrix()).amax()
}

/// A random admissible (lambda, T, eps, g1, g2): gains within g_max, lambda
/// strictly inside the bound, so the equivalent system is physical.
fn admissible() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (0.02f64..0.98, 1e-4f64..0.3, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..0.95).prop_map(
        |(t, e, u1, u2, frac)| {
            let limit = g_max(ch(t, e)).min(4.0);
            let g1 = 1.0 + u1 * (limit - 1.0);
            let g2 = 1.0 + u2 * (limit - 1.0);
            let bound = lambda_bound(ch(t, e), NlaConfig::new(g1, g2).unwrap());
            (frac * bound, t, e, g1, g2)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tmsv_is_pure(v in 1.0f64..50.0) {
        let cov = tmsv_covariance(v).unwrap();
        prop_assert!(cov.entropy().unwrap().abs() < 1e-9);
        for nu in cov.symplectic_eigenvalues().unwrap() {
            prop_assert!((nu - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn channels_preserve_physicality(
        v in 1.0f64..50.0, t1 in 1e-3f64..1.0, t2 in 1e-3f64..1.0,
        e1 in 0.0f64..1.0, e2 in 0.0f64..1.0,
    ) {
        let cov = eim_covariance(v, ch(t1, e1), ch(t2, e2)).unwrap();
        prop_assert!(cov.is_physical());
        let nf = cvqkd::nla::NormalForm::from_covariance(&cov).unwrap();
        prop_assert!((nf.a - (t1 * (v - 1.0 + e1) + 1.0)).abs() < 1e-12 * v);
        prop_assert!((nf.c - (t1 * t2 * (v * v - 1.0)).sqrt()).abs() < 1e-12 * v);
    }

    #[test]
    fn measurements_preserve_physicality(
        v in 1.0f64..50.0, t in 1e-3f64..1.0, e in 0.0f64..1.0, het in any::<bool>(), mode in 0usize..2,
    ) {
        let cov = eim_covariance(v, ch(t, e), ch(t, e)).unwrap();
        let out = if het {
            heterodyne_condition(&cov, mode).unwrap()
        } else {
            homodyne_condition(&cov, mode, Quadrature::X).unwrap()
        };
        prop_assert!(out.is_physical());
    }

    #[test]
    fn admissible_amplification_preserves_physicality((lambda, t, e, g1, g2) in admissible()) {
        let channel = ch(t, e);
        let cov = eim_covariance(epr_variance(lambda), channel, channel).unwrap();
        let out = cov_after_nla(&cov, NlaConfig::new(g1, g2).unwrap()).unwrap();
        prop_assert!(out.is_physical());
    }

    #[test]
    fn beamsplitter_preserves_symplectic_spectrum(
        v1 in 1.0f64..20.0, v2 in 1.0f64..20.0, t in 0.01f64..1.0, e in 0.0f64..0.5,
        tau in 0.0f64..1.0, i in 0usize..4, j in 0usize..4,
    ) {
        prop_assume!(i != j);
        let cov = tmsv_covariance(v1).unwrap().direct_sum(&tmsv_covariance(v2).unwrap());
        let cov = entangling_cloner_channel(&cov, 1, ch(t, e)).unwrap();
        let before = cov.symplectic_eigenvalues().unwrap();
        let after = beamsplitter(&cov, i, j, tau).unwrap().symplectic_eigenvalues().unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() < 1e-8 * x.max(1.0), "{before:?} vs {after:?}");
        }
    }

    #[test]
    fn heterodyne_is_split_then_dual_homodyne(
        v in 1.0f64..30.0, t in 0.01f64..1.0, e in 0.0f64..0.5, mode in 0usize..2,
    ) {
        let cov = eim_covariance(v, ch(t, e), ch(t * 0.7, e)).unwrap();
        let direct = heterodyne_condition(&cov, mode).unwrap();
        // Mix the measured mode with vacuum on a balanced beamsplitter, then
        // homodyne x on one output and p on the other.
        let dilated = beamsplitter(&cov.direct_sum(&CovarianceMatrix::vacuum(1)), mode, 2, 0.5).unwrap();
        let after_x = homodyne_condition(&dilated, mode, Quadrature::X).unwrap();
        let after_p = homodyne_condition(&after_x, 1, Quadrature::P).unwrap();
        prop_assert!(max_diff(&direct, &after_p) < 1e-10);
    }

    #[test]
    fn cloner_is_beamsplitter_with_thermal_ancilla(
        v in 1.0f64..30.0, t in 0.01f64..0.99, e in 0.0f64..1.0,
    ) {
        let cov = tmsv_covariance(v).unwrap();
        let cloned = entangling_cloner_channel(&cov, 1, ch(t, e)).unwrap();
        let w = 1.0 + t * e / (1.0 - t);
        let mixed = beamsplitter(&cov.direct_sum(&CovarianceMatrix::thermal(w).unwrap()), 1, 2, t).unwrap();
        let dilated = mixed.reduced(&[0, 1]).unwrap();
        prop_assert!(max_diff(&cloned, &dilated) < 1e-10);
    }

    #[test]
    fn unit_gain_is_identity(v in 1.0f64..50.0, t in 1e-3f64..1.0, e in 0.0f64..1.0) {
        let cov = eim_covariance(v, ch(t, e), ch(t, e)).unwrap();
        let out = cov_after_nla(&cov, NlaConfig::none()).unwrap();
        prop_assert!(max_diff(&cov, &out) < 1e-10 * v);
        let eq = equivalent_params(epr_parameter(v), ch(t, e), NlaConfig::none());
        prop_assert!((eq.varsigma - epr_parameter(v)).abs() < 1e-14);
        prop_assert!((eq.eta_alice - t).abs() < 1e-14);
        prop_assert!((eq.excess_noise_alice - e).abs() < 1e-14);
    }

    #[test]
    fn equivalent_system_reproduces_amplified_state((lambda, t, e, g1, g2) in admissible()) {
        let channel = ch(t, e);
        let nla = NlaConfig::new(g1, g2).unwrap();
        let eq = equivalent_params(lambda, channel, nla);
        prop_assert!(eq.physical);
        let amplified = cov_after_nla(&eim_covariance(epr_variance(lambda), channel, channel).unwrap(), nla).unwrap();
        let direct = eim_covariance(
            eq.equivalent_variance(),
            ch(eq.eta_alice, eq.excess_noise_alice),
            ch(eq.eta_bob, eq.excess_noise_bob),
        ).unwrap();
        prop_assert!(max_diff(&amplified, &direct) < 1e-8);
    }

    #[test]
    fn asymmetric_equivalent_system_reproduces_amplified_state(
        lambda in 0.0f64..0.6, t1 in 0.05f64..0.95, t2 in 0.05f64..0.95,
        e1 in 1e-4f64..0.1, e2 in 1e-4f64..0.1, u1 in 0.0f64..1.0, u2 in 0.0f64..1.0,
    ) {
        let (a, b) = (ch(t1, e1), ch(t2, e2));
        let g1 = 1.0 + u1 * (g_max(a).min(3.0) - 1.0);
        let g2 = 1.0 + u2 * (g_max(b).min(3.0) - 1.0);
        let nla = NlaConfig::new(g1, g2).unwrap();
        let eq = equivalent_params_asymmetric(lambda, a, b, nla);
        prop_assume!(eq.physical);
        let amplified = cov_after_nla(&eim_covariance(epr_variance(lambda), a, b).unwrap(), nla).unwrap();
        let direct = eim_covariance(
            eq.equivalent_variance(),
            ch(eq.eta_alice, eq.excess_noise_alice),
            ch(eq.eta_bob, eq.excess_noise_bob),
        ).unwrap();
        // Near varsigma = 1 the entries grow large; compare relative to scale.
        prop_assert!(max_diff(&amplified, &direct) < 1e-8 * amplified.matrix().amax().max(1.0));
    }

    #[test]
    fn varsigma_grows_with_gain(
        lambda in 0.01f64..0.9, t in 0.01f64..1.0, e in 0.0f64..0.3, g in 1.0f64..3.0, dg in 1e-3f64..0.5,
    ) {
        let channel = ch(t, e);
        let low = equivalent_params(lambda, channel, NlaConfig::new(g, g).unwrap());
        let high = equivalent_params(lambda, channel, NlaConfig::new(g + dg, g + dg).unwrap());
        prop_assume!(low.varsigma.is_finite() && high.varsigma.is_finite());
        prop_assert!(high.varsigma >= low.varsigma);
    }

    #[test]
    fn success_probability_bounds(g1 in 1.0f64..5.0, g2 in 1.0f64..5.0, na in 1.0f64..50.0, nb in 1.0f64..50.0) {
        let p = success_probability(NlaConfig::new(g1, g2).unwrap(), na, nb);
        for x in [p.p_alice, p.p_bob_given_alice, p.p_total] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!(p.p_total <= p.p_alice.min(p.p_bob_given_alice));
    }

    #[test]
    fn effective_rate_never_exceeds_raw(
        v in 1.0f64..10.0, d in 0.0f64..60.0, g1 in 1.0f64..2.0, g2 in 1.0f64..2.0,
        het_a in any::<bool>(), het_b in any::<bool>(), reverse in any::<bool>(),
    ) {
        let t = 10f64.powf(-0.02 * d);
        let det = |het| if het { Detection::Heterodyne } else { Detection::Homodyne };
        let rec = if reverse { Reconciliation::Reverse } else { Reconciliation::Direct };
        let spec = ProtocolSpec::entanglement_in_middle(v, det(het_a), det(het_b), rec, 0.948)
            .with_channels(ch(t, 0.002), ch(t, 0.002))
            .with_nla(NlaConfig::new(g1, g2).unwrap());
        let r = key_rate(&spec).unwrap();
        prop_assert!(r.key_rate_effective <= r.key_rate_raw);
        prop_assert!(r.key_rate_raw >= 0.0 && r.key_rate_effective.is_finite());
        if !r.physical {
            prop_assert_eq!(r.key_rate_raw, 0.0);
        }
    }
}
