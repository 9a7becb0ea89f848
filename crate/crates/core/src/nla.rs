//! Noiseless linear amplification of two-mode Gaussian states.
//!
//! An ideal amplifier `g^n` acts on the Husimi matrix `Gamma = (gamma + I)^-1`
//! as `A -> g1^2 (A - 1/2) + 1/2`, `B -> g2^2 (B - 1/2) + 1/2`,
//! `C -> g1 g2 C`. Alternatively, a successful amplification of an EPR state
//! behind two entangling-cloner channels is indistinguishable from a different
//! EPR state behind different channels, with no amplifier at all; that
//! equivalent system is what [`equivalent_params`] computes. The two routes
//! must agree, which is the main self-check of this module.
//!
//! The equivalent-system formulas are printed for symmetric channels. The
//! per-side form used here for unequal channels is exact as well, since the
//! amplifier and channel acting on different modes commute, so each side
//! contributes its own squeezing factor.

use nalgebra::{Matrix4, DMatrix};

use crate::error::{check_finite, Error, Result};
use crate::gaussian::{ChannelParams, CovarianceMatrix};

/// Block-structure tolerance when reading `A`, `B`, `C` off a 4x4 matrix.
pub const NORMAL_FORM_TOLERANCE: f64 = 1e-9;

/// Slack on the `eta <= 1` test so that `g = g_max` itself counts as physical.
const ETA_SLACK: f64 = 1e-12;

/// Gains of the amplifiers on Alice's and Bob's side. A gain of one means
/// the amplifier is absent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlaConfig {
    g1: f64,
    g2: f64,
}

impl NlaConfig {
    pub fn new(g1: f64, g2: f64) -> Result<Self> {
        for (name, g) in [("g1", g1), ("g2", g2)] {
            check_finite(name, g)?;
            if g < 1.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value: g,
                    reason: "amplifier gain must be at least one",
                });
            }
        }
        Ok(Self { g1, g2 })
    }

    pub fn none() -> Self {
        Self { g1: 1.0, g2: 1.0 }
    }

    pub fn alice(&self) -> f64 {
        self.g1
    }

    pub fn bob(&self) -> f64 {
        self.g2
    }

    pub fn is_identity(&self) -> bool {
        self.g1 == 1.0 && self.g2 == 1.0
    }

    /// The same configuration with Bob's amplifier removed.
    pub fn alice_only(&self) -> Self {
        Self {
            g1: self.g1,
            g2: 1.0,
        }
    }
}

impl Default for NlaConfig {
    fn default() -> Self {
        Self::none()
    }
}

/// Parameters `(a, b, c)` of `[[a I, c Z], [c Z, b I]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl NormalForm {
    /// Reads `(a, b, c)` from a 4x4 matrix, rejecting anything that is not in
    /// normal form to within `1e-9` (scaled by the largest entry).
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(Error::Shape {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let a = 0.5 * (m[(0, 0)] + m[(1, 1)]);
        let b = 0.5 * (m[(2, 2)] + m[(3, 3)]);
        let c = 0.5 * (m[(0, 2)] - m[(1, 3)]);
        let reference = CovarianceMatrix::normal_form(a, b, c);
        let deviation = (m - reference.matrix()).amax();
        if deviation > NORMAL_FORM_TOLERANCE * m.amax().max(1.0) {
            return Err(Error::NotNormalForm { deviation });
        }
        Ok(Self { a, b, c })
    }

    pub fn from_covariance(cov: &CovarianceMatrix) -> Result<Self> {
        Self::from_matrix(cov.matrix())
    }

    pub fn to_matrix(self) -> Matrix4<f64> {
        let (a, b, c) = (self.a, self.b, self.c);
        #[rustfmt::skip]
        let m = Matrix4::new(
            a,   0.0, c,   0.0,
            0.0, a,   0.0, -c,
            c,   0.0, b,   0.0,
            0.0, -c,  0.0, b,
        );
        m
    }
}

fn to_dmatrix(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |r, c| m[(r, c)])
}

fn to_matrix4(m: &DMatrix<f64>) -> Matrix4<f64> {
    Matrix4::from_fn(|r, c| m[(r, c)])
}

/// `Gamma = (gamma + I)^-1` for a two-mode covariance matrix.
pub fn husimi_gamma(cov: &CovarianceMatrix) -> Result<Matrix4<f64>> {
    if cov.n_modes() != 2 {
        return Err(Error::Shape {
            rows: cov.matrix().nrows(),
            cols: cov.matrix().ncols(),
        });
    }
    let shifted = to_matrix4(cov.matrix()) + Matrix4::identity();
    shifted
        .try_inverse()
        .ok_or(Error::Singular("gamma + I"))
}

/// Amplifier action on a Husimi matrix in normal form.
pub fn apply_nla_gamma(gamma: &Matrix4<f64>, nla: NlaConfig) -> Result<Matrix4<f64>> {
    let nf = NormalForm::from_matrix(&to_dmatrix(gamma))?;
    let (g1, g2) = (nla.alice(), nla.bob());
    Ok(NormalForm {
        a: g1 * g1 * (nf.a - 0.5) + 0.5,
        b: g2 * g2 * (nf.b - 0.5) + 0.5,
        c: g1 * g2 * nf.c,
    }
    .to_matrix())
}

/// Covariance matrix conditioned on both amplifiers succeeding,
/// `(Gamma_NLA)^-1 - I`.
///
/// Fails with [`Error::UnphysicalAmplification`] when the amplified Husimi
/// matrix stops being positive definite or the result is not a valid state.
pub fn cov_after_nla(cov: &CovarianceMatrix, nla: NlaConfig) -> Result<CovarianceMatrix> {
    NormalForm::from_covariance(cov)?;
    let amplified = apply_nla_gamma(&husimi_gamma(cov)?, nla)?;
    let unphysical = Error::UnphysicalAmplification {
        g1: nla.alice(),
        g2: nla.bob(),
    };
    if amplified.cholesky().is_none() {
        return Err(unphysical);
    }
    let inverse = amplified
        .try_inverse()
        .ok_or(Error::Singular("amplified Husimi matrix"))?;
    let out = CovarianceMatrix::new(to_dmatrix(&(inverse - Matrix4::identity())))?;
    if !out.is_physical() {
        return Err(unphysical);
    }
    Ok(out)
}

/// EPR parameter `lambda` of a two-mode squeezed vacuum of variance `v`,
/// from `v = (1 + lambda^2) / (1 - lambda^2)`.
pub fn epr_parameter(v: f64) -> f64 {
    ((v - 1.0) / (v + 1.0)).sqrt()
}

/// Inverse of [`epr_parameter`].
pub fn epr_variance(lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    (1.0 + l2) / (1.0 - l2)
}

/// No-amplifier system reproducing the amplified covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalentSystem {
    /// Equivalent EPR parameter.
    pub varsigma: f64,
    pub eta_alice: f64,
    pub excess_noise_alice: f64,
    pub eta_bob: f64,
    pub excess_noise_bob: f64,
    /// All of `0 <= varsigma < 1`, `0 <= eta <= 1`, `eps^g >= 0` hold.
    pub physical: bool,
    /// Channels differed between the sides, so the per-side form was used.
    pub generalized: bool,
}

impl EquivalentSystem {
    /// Variance `V' = (1 + varsigma^2) / (1 - varsigma^2)` of the equivalent EPR source.
    pub fn equivalent_variance(&self) -> f64 {
        epr_variance(self.varsigma)
    }
}

struct SideFactors {
    squeezing_ratio: f64,
    eta: f64,
    excess_noise: f64,
}

fn side_factors(g: f64, channel: ChannelParams) -> SideFactors {
    let u = g * g - 1.0;
    let t = channel.transmittance();
    let e = channel.excess_noise();
    let squeezing_ratio = (u * (e - 2.0) * t - 2.0) / (u * e * t - 2.0);
    let eta = 4.0 * t * (u + 1.0) / (t * u * (u * (e - 2.0) * e * t - 4.0 * (e - 1.0)) + 4.0);
    let excess_noise = e - 0.5 * u * (e - 2.0) * e * t;
    SideFactors {
        squeezing_ratio,
        eta,
        excess_noise,
    }
}

/// Equivalent system for identical channels on both arms.
pub fn equivalent_params(lambda: f64, channel: ChannelParams, nla: NlaConfig) -> EquivalentSystem {
    equivalent_params_asymmetric(lambda, channel, channel, nla)
}

/// Equivalent system with each side's amplifier using its own channel.
pub fn equivalent_params_asymmetric(
    lambda: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
    nla: NlaConfig,
) -> EquivalentSystem {
    let alice = side_factors(nla.alice(), channel_alice);
    let bob = side_factors(nla.bob(), channel_bob);
    let radicand = alice.squeezing_ratio * bob.squeezing_ratio;
    let varsigma = if radicand >= 0.0 {
        lambda * radicand.sqrt()
    } else {
        f64::NAN
    };
    let eta_ok = |eta: f64| (0.0..=1.0 + ETA_SLACK).contains(&eta);
    let physical = (0.0..1.0).contains(&varsigma)
        && eta_ok(alice.eta)
        && eta_ok(bob.eta)
        && alice.excess_noise >= 0.0
        && bob.excess_noise >= 0.0;
    EquivalentSystem {
        varsigma,
        eta_alice: alice.eta,
        excess_noise_alice: alice.excess_noise,
        eta_bob: bob.eta,
        excess_noise_bob: bob.excess_noise,
        physical,
        generalized: channel_alice != channel_bob,
    }
}

fn lambda_bound_factor(g: f64, channel: ChannelParams) -> f64 {
    let u = g * g - 1.0;
    let t = channel.transmittance();
    let e = channel.excess_noise();
    let ratio = (u * e * t - 2.0) / (u * (e - 2.0) * t - 2.0);
    if ratio < 0.0 {
        0.0
    } else {
        ratio.sqrt()
    }
}

/// Largest EPR parameter for which the equivalent `varsigma` stays below one.
/// Returns 0 when a radicand is negative, i.e. no EPR parameter is admissible.
pub fn lambda_bound(channel: ChannelParams, nla: NlaConfig) -> f64 {
    lambda_bound_asymmetric(channel, channel, nla)
}

pub fn lambda_bound_asymmetric(
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
    nla: NlaConfig,
) -> f64 {
    lambda_bound_factor(nla.alice(), channel_alice) * lambda_bound_factor(nla.bob(), channel_bob)
}

/// Largest gain for which the equivalent channel is still passive
/// (`eta <= 1`). Infinite when `eps = 0` or `eps >= 2`, where no finite
/// limit exists.
pub fn g_max(channel: ChannelParams) -> f64 {
    let t = channel.transmittance();
    let e = channel.excess_noise();
    if e <= 0.0 || e >= 2.0 {
        return f64::INFINITY;
    }
    let s = e * (t * (e - 2.0) + 2.0);
    ((s - 2.0 * s.sqrt()) / (t * e * (e - 2.0))).sqrt()
}

/// Amplifier success probabilities from the `P = g^(-2N)` estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProbability {
    pub p_alice: f64,
    pub p_bob_given_alice: f64,
    pub p_total: f64,
}

impl SuccessProbability {
    pub fn certain() -> Self {
        Self {
            p_alice: 1.0,
            p_bob_given_alice: 1.0,
            p_total: 1.0,
        }
    }
}

/// `P_A = g1^(-2 N_A)`, `P_B|A = g2^(-2 N_B|A)` and their product.
pub fn success_probability(nla: NlaConfig, n_alice: f64, n_bob_given_alice: f64) -> SuccessProbability {
    let p_alice = nla.alice().powf(-2.0 * n_alice);
    let p_bob_given_alice = nla.bob().powf(-2.0 * n_bob_given_alice);
    SuccessProbability {
        p_alice,
        p_bob_given_alice,
        p_total: p_alice * p_bob_given_alice,
    }
}
