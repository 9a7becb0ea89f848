//! States, information quantities and key rates for the two protocols.
//!
//! *Entanglement in the middle*: an untrusted source emits a two-mode squeezed
//! vacuum whose arms reach Alice and Bob through independent entangling-cloner
//! channels.
//!
//! *Untrusted relay*: Alice and Bob each keep one arm of their own EPR state
//! and send the other to a relay, which mixes the two on a balanced
//! beamsplitter, homodynes `x` of one output and `p` of the other, and
//! broadcasts the results. Both parties feed the outcomes forward as
//! displacements and then heterodyne their kept modes.
//!
//! Eve is assumed to hold the purification of the two-mode state Alice and Bob
//! measure, so `S(E) = S(AB)` and, after the reference side's measurement,
//! `S(E|x) = S(other side|x)`.

use nalgebra::DMatrix;

use crate::error::{check_finite, Error, Result};
use crate::gaussian::{
    beamsplitter, entangling_cloner_channel, heterodyne_condition, homodyne_condition,
    tmsv_covariance, ChannelParams, CovarianceMatrix, Quadrature,
};
use crate::nla::{
    cov_after_nla, epr_parameter, equivalent_params_asymmetric, success_probability,
    EquivalentSystem, NlaConfig, NormalForm, SuccessProbability,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Detection {
    Homodyne,
    Heterodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reconciliation {
    /// Alice's data is the reference.
    Direct,
    /// Bob's data is the reference.
    Reverse,
}

impl Reconciliation {
    fn reference_mode(self) -> usize {
        match self {
            Reconciliation::Direct => 0,
            Reconciliation::Reverse => 1,
        }
    }
}

/// How the relay feedforward gains are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelayGains {
    /// `g = sqrt((V^2 - 1) / (2 T (V + eps) + 2 (1 - T)))` per side.
    ClosedForm,
    /// Gains minimizing each party's displaced `x` variance,
    /// `Cov(x_kept, x_C) / Var(x_C)` up to sign. The displaced state then
    /// equals the state conditioned on the relay outcomes.
    ConditionalMean,
    Fixed { alice: f64, bob: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    EntanglementInMiddle {
        variance: f64,
    },
    UntrustedRelay {
        variance_alice: f64,
        variance_bob: f64,
        gains: RelayGains,
    },
}

/// Everything needed to evaluate one key rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub protocol: Protocol,
    pub detection_alice: Detection,
    pub detection_bob: Detection,
    pub reconciliation: Reconciliation,
    /// Reconciliation efficiency in `[0, 1]`.
    pub beta: f64,
    pub channel_alice: ChannelParams,
    pub channel_bob: ChannelParams,
    pub nla: NlaConfig,
}

impl ProtocolSpec {
    /// Entanglement in the middle with lossless channels and no amplifiers.
    pub fn entanglement_in_middle(
        variance: f64,
        detection_alice: Detection,
        detection_bob: Detection,
        reconciliation: Reconciliation,
        beta: f64,
    ) -> Self {
        Self {
            protocol: Protocol::EntanglementInMiddle { variance },
            detection_alice,
            detection_bob,
            reconciliation,
            beta,
            channel_alice: ChannelParams::identity(),
            channel_bob: ChannelParams::identity(),
            nla: NlaConfig::none(),
        }
    }

    /// Untrusted relay; both sides heterodyne.
    pub fn untrusted_relay(
        variance_alice: f64,
        variance_bob: f64,
        reconciliation: Reconciliation,
        beta: f64,
        gains: RelayGains,
    ) -> Self {
        Self {
            protocol: Protocol::UntrustedRelay {
                variance_alice,
                variance_bob,
                gains,
            },
            detection_alice: Detection::Heterodyne,
            detection_bob: Detection::Heterodyne,
            reconciliation,
            beta,
            channel_alice: ChannelParams::identity(),
            channel_bob: ChannelParams::identity(),
            nla: NlaConfig::none(),
        }
    }

    pub fn with_channels(mut self, alice: ChannelParams, bob: ChannelParams) -> Self {
        self.channel_alice = alice;
        self.channel_bob = bob;
        self
    }

    pub fn with_nla(mut self, nla: NlaConfig) -> Self {
        self.nla = nla;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("beta", self.beta)?;
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                reason: "reconciliation efficiency must lie in [0, 1]",
            });
        }
        let check_variance = |name, v: f64| -> Result<()> {
            check_finite(name, v)?;
            if v < 1.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "source variance must be at least one",
                });
            }
            Ok(())
        };
        match self.protocol {
            Protocol::EntanglementInMiddle { variance } => check_variance("variance", variance)?,
            Protocol::UntrustedRelay {
                variance_alice,
                variance_bob,
                gains,
            } => {
                check_variance("variance_alice", variance_alice)?;
                check_variance("variance_bob", variance_bob)?;
                if self.detection_alice != Detection::Heterodyne
                    || self.detection_bob != Detection::Heterodyne
                {
                    return Err(Error::InvalidParameter {
                        name: "detection",
                        value: f64::NAN,
                        reason: "the relay protocol uses heterodyne detection on both sides",
                    });
                }
                if let RelayGains::Fixed { alice, bob } = gains {
                    check_finite("relay_gain_alice", alice)?;
                    check_finite("relay_gain_bob", bob)?;
                }
            }
        }
        Ok(())
    }
}

/// State shared by Alice and Bob in the entanglement-in-the-middle protocol
/// (modes `A2`, `B2`): normal form with `a = T1(V-1+eps1)+1`,
/// `b = T2(V-1+eps2)+1`, `c = sqrt(T1 T2 (V^2-1))`.
pub fn eim_covariance(
    variance: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
) -> Result<CovarianceMatrix> {
    let cov = tmsv_covariance(variance)?;
    let cov = entangling_cloner_channel(&cov, 0, channel_alice)?;
    entangling_cloner_channel(&cov, 1, channel_bob)
}

/// Relay input after the balanced beamsplitter, in mode order
/// `(A2, C, D, B2)` with `x_C = (x_A1' - x_B1')/sqrt2` and
/// `p_D = (p_A1' + p_B1')/sqrt2`.
pub fn relay_pre_measurement(
    variance_alice: f64,
    variance_bob: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
) -> Result<CovarianceMatrix> {
    // (A2, A1) and (B1, B2) side by side.
    let cov = tmsv_covariance(variance_alice)?.direct_sum(&tmsv_covariance(variance_bob)?);
    let cov = entangling_cloner_channel(&cov, 1, channel_alice)?;
    let cov = entangling_cloner_channel(&cov, 2, channel_bob)?;
    // Mode 2 first: mode 1 becomes (A1 - B1)/sqrt2, mode 2 becomes (A1 + B1)/sqrt2.
    beamsplitter(&cov, 2, 1, 0.5)
}

// Quadrature indices in the (A2, C, D, B2) ordering.
const X_A2: usize = 0;
const P_A2: usize = 1;
const X_C: usize = 2;
const P_D: usize = 5;
const X_B2: usize = 6;
const P_B2: usize = 7;

/// State of `(A3, B3)` after both parties displace by the relay outcomes:
/// `x_A3 = x_A2 - gA x_C`, `p_A3 = p_A2 + gA p_D`,
/// `x_B3 = x_B2 + gB x_C`, `p_B3 = p_B2 + gB p_D`.
pub fn relay_covariance(
    variance_alice: f64,
    variance_bob: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
    gain_alice: f64,
    gain_bob: f64,
) -> Result<CovarianceMatrix> {
    check_finite("relay_gain_alice", gain_alice)?;
    check_finite("relay_gain_bob", gain_bob)?;
    let pre = relay_pre_measurement(variance_alice, variance_bob, channel_alice, channel_bob)?;
    let mut feedforward = DMatrix::<f64>::zeros(4, 8);
    feedforward[(0, X_A2)] = 1.0;
    feedforward[(0, X_C)] = -gain_alice;
    feedforward[(1, P_A2)] = 1.0;
    feedforward[(1, P_D)] = gain_alice;
    feedforward[(2, X_B2)] = 1.0;
    feedforward[(2, X_C)] = gain_bob;
    feedforward[(3, P_B2)] = 1.0;
    feedforward[(3, P_D)] = gain_bob;
    pre.congruence(&feedforward)
}

/// State of `(A2, B2)` conditioned on the relay's `x_C` and `p_D` outcomes.
pub fn relay_conditional_covariance(
    variance_alice: f64,
    variance_bob: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
) -> Result<CovarianceMatrix> {
    let pre = relay_pre_measurement(variance_alice, variance_bob, channel_alice, channel_bob)?;
    let after_c = homodyne_condition(&pre, 1, Quadrature::X)?;
    // D is now mode 1 of (A2, D, B2).
    homodyne_condition(&after_c, 1, Quadrature::P)
}

/// Feedforward gains `g = sqrt((V^2 - 1) / (2 T (V + eps) + 2 (1 - T)))`,
/// each side with its own source variance and channel.
pub fn default_relay_gains(
    variance_alice: f64,
    variance_bob: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
) -> (f64, f64) {
    let gain = |v: f64, ch: ChannelParams| {
        let t = ch.transmittance();
        let denom = 2.0 * t * (v + ch.excess_noise()) + 2.0 * (1.0 - t);
        ((v * v - 1.0) / denom).sqrt()
    };
    (
        gain(variance_alice, channel_alice),
        gain(variance_bob, channel_bob),
    )
}

/// Gains minimizing `Var(x_A3)` and `Var(x_B3)`.
pub fn conditional_mean_relay_gains(
    variance_alice: f64,
    variance_bob: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
) -> Result<(f64, f64)> {
    let pre = relay_pre_measurement(variance_alice, variance_bob, channel_alice, channel_bob)?;
    let var_c = pre.get(X_C, X_C);
    Ok((
        pre.get(X_A2, X_C) / var_c,
        -pre.get(X_B2, X_C) / var_c,
    ))
}

/// Resolves a gain rule into numbers for the given source and channels.
pub fn resolve_relay_gains(
    rule: RelayGains,
    variance_alice: f64,
    variance_bob: f64,
    channel_alice: ChannelParams,
    channel_bob: ChannelParams,
) -> Result<(f64, f64)> {
    match rule {
        RelayGains::ClosedForm => Ok(default_relay_gains(
            variance_alice,
            variance_bob,
            channel_alice,
            channel_bob,
        )),
        RelayGains::ConditionalMean => {
            conditional_mean_relay_gains(variance_alice, variance_bob, channel_alice, channel_bob)
        }
        RelayGains::Fixed { alice, bob } => Ok((alice, bob)),
    }
}

fn positive_ratio(num: f64, den: f64) -> Result<f64> {
    if den <= 0.0 || num <= 0.0 {
        return Err(Error::Unphysical {
            min_eigenvalue: den.min(num),
        });
    }
    Ok(num / den)
}

/// Classical mutual information between Alice's and Bob's outcomes, in bits
/// per (sifted) use.
pub fn mutual_information(nf: NormalForm, alice: Detection, bob: Detection) -> Result<f64> {
    let NormalForm { a, b, c } = nf;
    let c2 = c * c;
    use Detection::*;
    let bits = match (alice, bob) {
        (Homodyne, Homodyne) => 0.5 * positive_ratio(a, a - c2 / b)?.log2(),
        (Heterodyne, Homodyne) => 0.5 * positive_ratio(b, b - c2 / (a + 1.0))?.log2(),
        (Homodyne, Heterodyne) => 0.5 * positive_ratio(a, a - c2 / (b + 1.0))?.log2(),
        (Heterodyne, Heterodyne) => {
            positive_ratio(a + 1.0, a + 1.0 - c2 / (b + 1.0))?.log2()
        }
    };
    Ok(bits)
}

/// Holevo bound with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoBound {
    /// `max(0, S(AB) - S(rest | reference measurement))`, bits.
    pub bits: f64,
    /// Symplectic eigenvalues of the two-mode state.
    pub global: Vec<f64>,
    /// Symplectic eigenvalue of the conditioned one-mode state.
    pub conditional: f64,
}

/// Eve's Holevo information on the reference side's data.
pub fn holevo_bound(
    cov: &CovarianceMatrix,
    reference_detection: Detection,
    direction: Reconciliation,
) -> Result<HolevoBound> {
    if cov.n_modes() != 2 {
        return Err(Error::Shape {
            rows: cov.matrix().nrows(),
            cols: cov.matrix().ncols(),
        });
    }
    let mode = direction.reference_mode();
    let conditioned = match reference_detection {
        Detection::Homodyne => homodyne_condition(cov, mode, Quadrature::X)?,
        Detection::Heterodyne => heterodyne_condition(cov, mode)?,
    };
    let global = cov.symplectic_eigenvalues()?;
    let conditional = conditioned.symplectic_eigenvalues()?[0];
    let chi = cov.entropy()? - conditioned.entropy()?;
    Ok(HolevoBound {
        bits: chi.max(0.0),
        global,
        conditional,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyRateResult {
    /// `I(A:B)`, bits.
    pub mutual_info: f64,
    /// `chi(A:E)` for direct or `chi(B:E)` for reverse reconciliation, bits.
    pub holevo: f64,
    /// `max(0, beta I - chi)` per successful use; zero when unphysical.
    pub key_rate_raw: f64,
    pub success: SuccessProbability,
    pub p_total: f64,
    /// `p_total * key_rate_raw`, bits per protocol use.
    pub key_rate_effective: f64,
    pub physical: bool,
    /// Symplectic eigenvalues of the measured two-mode state (`lambda_1`, `lambda_2`).
    pub global_eigenvalues: Vec<f64>,
    /// `lambda_3` (direct) or `lambda_4` (reverse).
    pub conditional_eigenvalue: Option<f64>,
    /// Equivalent no-amplifier system, for the entanglement-in-the-middle protocol with amplifiers.
    pub equivalent: Option<EquivalentSystem>,
    /// Displacement gains actually used by the relay.
    pub relay_gains: Option<(f64, f64)>,
}

impl KeyRateResult {
    fn no_key(
        success: SuccessProbability,
        equivalent: Option<EquivalentSystem>,
        relay_gains: Option<(f64, f64)>,
    ) -> Self {
        Self {
            mutual_info: 0.0,
            holevo: 0.0,
            key_rate_raw: 0.0,
            p_total: success.p_total,
            success,
            key_rate_effective: 0.0,
            physical: false,
            global_eigenvalues: Vec::new(),
            conditional_eigenvalue: None,
            equivalent,
            relay_gains,
        }
    }
}

/// Two-mode state measured by Alice and Bob before amplification, plus the
/// relay gains used to build it.
pub fn shared_state(spec: &ProtocolSpec) -> Result<(CovarianceMatrix, Option<(f64, f64)>)> {
    match spec.protocol {
        Protocol::EntanglementInMiddle { variance } => Ok((
            eim_covariance(variance, spec.channel_alice, spec.channel_bob)?,
            None,
        )),
        Protocol::UntrustedRelay {
            variance_alice,
            variance_bob,
            gains,
        } => {
            let (ga, gb) = resolve_relay_gains(
                gains,
                variance_alice,
                variance_bob,
                spec.channel_alice,
                spec.channel_bob,
            )?;
            let cov = relay_covariance(
                variance_alice,
                variance_bob,
                spec.channel_alice,
                spec.channel_bob,
                ga,
                gb,
            )?;
            Ok((cov, Some((ga, gb))))
        }
    }
}

/// Amplifier success probability for a pre-amplification state.
///
/// `N_A` is Alice's marginal quadrature variance; `N_B|A` is Bob's marginal
/// variance once Alice's amplifier alone has succeeded. For the
/// entanglement-in-the-middle state these are `T(V-1+eps)+1` and
/// `T(V'-1+eps)+1`.
pub fn amplifier_success(cov: &CovarianceMatrix, nla: NlaConfig) -> Result<SuccessProbability> {
    if nla.is_identity() {
        return Ok(SuccessProbability::certain());
    }
    let n_alice = cov.get(0, 0);
    let n_bob = if nla.alice() == 1.0 {
        cov.get(2, 2)
    } else {
        cov_after_nla(cov, nla.alice_only())?.get(2, 2)
    };
    Ok(success_probability(nla, n_alice, n_bob))
}

/// Asymptotic key rate. Physics failures (unphysical amplification,
/// degenerate conditioning) yield a zero-rate result with `physical = false`;
/// only an invalid `spec` is an error.
pub fn key_rate(spec: &ProtocolSpec) -> Result<KeyRateResult> {
    spec.validate()?;
    let (cov, relay_gains) = shared_state(spec)?;
    let mut equivalent = None;
    let mut physical = cov.is_physical();

    if let Protocol::EntanglementInMiddle { variance } = spec.protocol {
        if !spec.nla.is_identity() {
            let eq = equivalent_params_asymmetric(
                epr_parameter(variance),
                spec.channel_alice,
                spec.channel_bob,
                spec.nla,
            );
            physical &= eq.physical;
            equivalent = Some(eq);
        }
    }

    let success = amplifier_success(&cov, spec.nla).unwrap_or(SuccessProbability {
        p_alice: 0.0,
        p_bob_given_alice: 0.0,
        p_total: 0.0,
    });
    if !physical {
        return Ok(KeyRateResult::no_key(success, equivalent, relay_gains));
    }
    let state = if spec.nla.is_identity() {
        Ok(cov)
    } else {
        cov_after_nla(&cov, spec.nla)
    };
    let evaluated = state.and_then(|state| {
        let nf = NormalForm::from_covariance(&state)?;
        let mi = mutual_information(nf, spec.detection_alice, spec.detection_bob)?;
        let reference = match spec.reconciliation {
            Reconciliation::Direct => spec.detection_alice,
            Reconciliation::Reverse => spec.detection_bob,
        };
        let chi = holevo_bound(&state, reference, spec.reconciliation)?;
        Ok((mi, chi))
    });
    let (mi, chi) = match evaluated {
        Ok(v) => v,
        Err(_) => return Ok(KeyRateResult::no_key(success, equivalent, relay_gains)),
    };
    let raw = (spec.beta * mi - chi.bits).max(0.0);
    Ok(KeyRateResult {
        mutual_info: mi,
        holevo: chi.bits,
        key_rate_raw: raw,
        p_total: success.p_total,
        success,
        key_rate_effective: success.p_total * raw,
        physical: true,
        global_eigenvalues: chi.global,
        conditional_eigenvalue: Some(chi.conditional),
        equivalent,
        relay_gains,
    })
}
