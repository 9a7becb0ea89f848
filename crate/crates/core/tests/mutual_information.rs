//! Sampling check of the closed-form mutual information: draw quadratures
//! from the two-mode state, model heterodyne as an extra unit of vacuum noise
//! on both quadratures, and estimate the information from sample covariances.

use cvqkd::gaussian::ChannelParams;
use cvqkd::nla::NormalForm;
use cvqkd::protocols::{eim_covariance, mutual_information, Detection};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

const SAMPLES: usize = 200_000;

/// Gaussian mutual information (bits) of one correlated quadrature pair.
fn pair_information(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let rho2 = sxy * sxy / (sxx * syy);
    -0.5 * (1.0 - rho2).log2()
}

fn sampled_information(nf: NormalForm, alice: Detection, bob: Detection, seed: u64) -> f64 {
    let gamma = DMatrix::from_fn(4, 4, |r, c| nf.to_matrix()[(r, c)]);
    let l = gamma.cholesky().unwrap().l();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut out = vec![Vec::with_capacity(SAMPLES); 4];
    for _ in 0..SAMPLES {
        let z = DVector::from_fn(4, |_, _| draw());
        let mut q = &l * z;
        if alice == Detection::Heterodyne {
            q[0] += draw();
            q[1] += draw();
        }
        if bob == Detection::Heterodyne {
            q[2] += draw();
            q[3] += draw();
        }
        for k in 0..4 {
            out[k].push(q[k]);
        }
    }
    let x = pair_information(&out[0], &out[2]);
    if alice == Detection::Heterodyne && bob == Detection::Heterodyne {
        x + pair_information(&out[1], &out[3])
    } else {
        x
    }
}

#[test]
fn closed_form_matches_sampling() {
    let states = [
        eim_covariance(1.7, ChannelParams::identity(), ChannelParams::identity()).unwrap(),
        eim_covariance(1.7, ChannelParams::new(0.5, 0.002).unwrap(), ChannelParams::new(0.5, 0.002).unwrap()).unwrap(),
        eim_covariance(4.0, ChannelParams::new(0.8, 0.05).unwrap(), ChannelParams::new(0.3, 0.01).unwrap()).unwrap(),
    ];
    let mut seed = 7;
    for cov in &states {
        let nf = NormalForm::from_covariance(cov).unwrap();
        for alice in [Detection::Homodyne, Detection::Heterodyne] {
            for bob in [Detection::Homodyne, Detection::Heterodyne] {
                seed += 1;
                let exact = mutual_information(nf, alice, bob).unwrap();
                let sampled = sampled_information(nf, alice, bob, seed);
                assert!(
                    (exact - sampled).abs() < 0.01 + 0.01 * exact,
                    "{alice:?}/{bob:?} at {nf:?}: exact {exact}, sampled {sampled}"
                );
            }
        }
    }
}

#[test]
fn heterodyne_homodyne_at_25_km_high_precision() {
    let t = 10f64.powf(-0.5);
    let channel = ChannelParams::new(t, 0.002).unwrap();
    let nf = NormalForm::from_covariance(&eim_covariance(1.7, channel, channel).unwrap()).unwrap();
    let exact = mutual_information(nf, Detection::Heterodyne, Detection::Homodyne).unwrap();

    // x quadratures only: (x_A, x_B) ~ N(0, [[a, c], [c, b]]), Alice adds vacuum.
    let l11 = nf.a.sqrt();
    let l21 = nf.c / l11;
    let l22 = (nf.b - l21 * l21).sqrt();
    let mut rng = StdRng::seed_from_u64(2024);
    let n = 10_000_000;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let vac: f64 = StandardNormal.sample(&mut rng);
        let x = l11 * z1 + vac;
        let y = l21 * z1 + l22 * z2;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let sampled = -0.5 * (1.0 - sxy * sxy / (sxx * syy)).log2();
    assert!((exact - sampled).abs() < 1e-3, "exact {exact}, sampled {sampled}");
}
