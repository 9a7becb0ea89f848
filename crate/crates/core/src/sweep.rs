//! Distance sweeps, maximal-distance search, gain optimization and CSV output.
//!
//! Distances map onto channels as follows. Entanglement in the middle: `d`
//! is the length of *each* arm, so both channels get `T(d)`. Untrusted relay:
//! `d` is the total Alice-Bob length, split as `L_AC = split * d` and
//! `L_BC = d - L_AC`. Excess noise is taken from the template's channels and
//! kept at every distance, including zero length.

use std::io::Write;

use crate::error::{check_finite, Error, Result};
use crate::gaussian::ChannelParams;
use crate::nla::{g_max, NlaConfig};
use crate::protocols::{key_rate, Protocol, ProtocolSpec};

pub const DEFAULT_LOSS_DB_PER_KM: f64 = 0.2;
pub const DEFAULT_TOLERANCE_KM: f64 = 0.05;
pub const DEFAULT_SCAN_STEP_KM: f64 = 1.0;
pub const DEFAULT_SCAN_MAX_KM: f64 = 200.0;

pub const CSV_HEADER: [&str; 10] = [
    "curve",
    "g_alice",
    "g_bob",
    "distance_km",
    "l_alice_km",
    "l_bob_km",
    "key_rate_raw",
    "key_rate_effective",
    "p_total",
    "physical",
];

/// `T = 10^(-a d / 10)`.
pub fn distance_to_transmittance(distance_km: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * distance_km / 10.0)
}

fn check_loss(loss_db_per_km: f64) -> Result<()> {
    check_finite("loss_db_per_km", loss_db_per_km)?;
    if loss_db_per_km <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "loss_db_per_km",
            value: loss_db_per_km,
            reason: "loss coefficient must be positive",
        });
    }
    Ok(())
}

fn check_distance(name: &'static str, d: f64) -> Result<()> {
    check_finite(name, d)?;
    if d < 0.0 {
        return Err(Error::InvalidParameter {
            name,
            value: d,
            reason: "distance must be nonnegative",
        });
    }
    Ok(())
}

/// Distances to evaluate, in ascending order, with the fiber loss coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceGrid {
    points: Vec<f64>,
    loss_db_per_km: f64,
}

impl DistanceGrid {
    /// `start, start + step, ...` up to and including `stop` (within rounding).
    pub fn new(start_km: f64, stop_km: f64, step_km: f64, loss_db_per_km: f64) -> Result<Self> {
        check_distance("start_km", start_km)?;
        check_distance("stop_km", stop_km)?;
        check_finite("step_km", step_km)?;
        check_loss(loss_db_per_km)?;
        if stop_km < start_km {
            return Err(Error::InvalidParameter {
                name: "stop_km",
                value: stop_km,
                reason: "grid stop must not precede start",
            });
        }
        if step_km <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "step_km",
                value: step_km,
                reason: "grid step must be positive",
            });
        }
        let n = ((stop_km - start_km) / step_km + 1e-9).floor() as usize;
        let points = (0..=n).map(|i| start_km + i as f64 * step_km).collect();
        Ok(Self {
            points,
            loss_db_per_km,
        })
    }

    /// Explicit distances; sorted ascending. An empty list is allowed.
    pub fn from_points(mut points: Vec<f64>, loss_db_per_km: f64) -> Result<Self> {
        check_loss(loss_db_per_km)?;
        for &d in &points {
            check_distance("distance_km", d)?;
        }
        points.sort_by(f64::total_cmp);
        Ok(Self {
            points,
            loss_db_per_km,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn loss_db_per_km(&self) -> f64 {
        self.loss_db_per_km
    }
}

/// A protocol whose channel transmittances are filled in per distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepTemplate {
    pub spec: ProtocolSpec,
    /// Fraction of the relay link on Alice's side, `L_AC / L_AB`. Ignored for
    /// entanglement in the middle.
    pub relay_split: f64,
}

impl SweepTemplate {
    pub fn new(spec: ProtocolSpec) -> Self {
        Self {
            spec,
            relay_split: 0.5,
        }
    }

    pub fn with_relay_split(mut self, split: f64) -> Self {
        self.relay_split = split;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        check_finite("relay_split", self.relay_split)?;
        if !(0.0..=1.0).contains(&self.relay_split) {
            return Err(Error::InvalidParameter {
                name: "relay_split",
                value: self.relay_split,
                reason: "relay split must lie in [0, 1]",
            });
        }
        Ok(())
    }

    /// Arm lengths `(L_alice, L_bob)` for a sweep distance.
    pub fn arm_lengths(&self, distance_km: f64) -> (f64, f64) {
        match self.spec.protocol {
            Protocol::EntanglementInMiddle { .. } => (distance_km, distance_km),
            Protocol::UntrustedRelay { .. } => {
                let l_alice = self.relay_split * distance_km;
                (l_alice, distance_km - l_alice)
            }
        }
    }

    /// The template with channels set for `distance_km`.
    pub fn spec_at(&self, distance_km: f64, loss_db_per_km: f64) -> Result<ProtocolSpec> {
        let (l_alice, l_bob) = self.arm_lengths(distance_km);
        let channel = |l: f64, template: ChannelParams| {
            ChannelParams::new(
                distance_to_transmittance(l, loss_db_per_km),
                template.excess_noise(),
            )
        };
        Ok(self.spec.with_channels(
            channel(l_alice, self.spec.channel_alice)?,
            channel(l_bob, self.spec.channel_bob)?,
        ))
    }

    fn effective_rate(&self, distance_km: f64, loss_db_per_km: f64, nla: NlaConfig) -> Result<f64> {
        let spec = self.spec_at(distance_km, loss_db_per_km)?.with_nla(nla);
        Ok(key_rate(&spec)?.key_rate_effective)
    }
}

/// One named amplifier setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub nla: NlaConfig,
}

impl Curve {
    pub fn new(label: impl Into<String>, nla: NlaConfig) -> Self {
        Self {
            label: label.into(),
            nla,
        }
    }
}

/// No amplifier, Alice only, Bob only, both, all at gain `g`.
pub fn standard_curves(g: f64) -> Result<Vec<Curve>> {
    Ok(vec![
        Curve::new("none", NlaConfig::none()),
        Curve::new("alice", NlaConfig::new(g, 1.0)?),
        Curve::new("bob", NlaConfig::new(1.0, g)?),
        Curve::new("both", NlaConfig::new(g, g)?),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub curve: String,
    pub g_alice: f64,
    pub g_bob: f64,
    pub distance_km: f64,
    pub l_alice_km: f64,
    pub l_bob_km: f64,
    pub key_rate_raw: f64,
    pub key_rate_effective: f64,
    pub p_total: f64,
    pub physical: bool,
}

/// One row per grid point, using the template's own amplifier setting.
pub fn sweep(template: &SweepTemplate, grid: &DistanceGrid) -> Result<Vec<SweepRow>> {
    sweep_curves(template, &[Curve::new("main", template.spec.nla)], grid)
}

/// Rows grouped by curve, each group ordered by distance.
pub fn sweep_curves(
    template: &SweepTemplate,
    curves: &[Curve],
    grid: &DistanceGrid,
) -> Result<Vec<SweepRow>> {
    template.validate()?;
    let mut rows = Vec::with_capacity(curves.len() * grid.points.len());
    for curve in curves {
        for &d in &grid.points {
            let spec = template.spec_at(d, grid.loss_db_per_km)?.with_nla(curve.nla);
            let r = key_rate(&spec)?;
            let (l_alice, l_bob) = template.arm_lengths(d);
            rows.push(SweepRow {
                curve: curve.label.clone(),
                g_alice: curve.nla.alice(),
                g_bob: curve.nla.bob(),
                distance_km: d,
                l_alice_km: l_alice,
                l_bob_km: l_bob,
                key_rate_raw: r.key_rate_raw,
                key_rate_effective: r.key_rate_effective,
                p_total: r.p_total,
                physical: r.physical,
            });
        }
    }
    Ok(rows)
}

fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// CSV with [`CSV_HEADER`], numbers to 9 significant digits, `physical` as 1/0.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record([
            row.curve.clone(),
            fmt_float(row.g_alice),
            fmt_float(row.g_bob),
            fmt_float(row.distance_km),
            fmt_float(row.l_alice_km),
            fmt_float(row.l_bob_km),
            fmt_float(row.key_rate_raw),
            fmt_float(row.key_rate_effective),
            fmt_float(row.p_total),
            if row.physical { "1" } else { "0" }.to_string(),
        ])?;
    }
    writer.flush()
}

/// Search settings for [`max_distance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub loss_db_per_km: f64,
    pub tolerance_km: f64,
    pub scan_step_km: f64,
    pub scan_max_km: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            loss_db_per_km: DEFAULT_LOSS_DB_PER_KM,
            tolerance_km: DEFAULT_TOLERANCE_KM,
            scan_step_km: DEFAULT_SCAN_STEP_KM,
            scan_max_km: DEFAULT_SCAN_MAX_KM,
        }
    }
}

impl SearchOptions {
    fn validate(&self) -> Result<()> {
        check_loss(self.loss_db_per_km)?;
        for (name, v) in [
            ("tolerance_km", self.tolerance_km),
            ("scan_step_km", self.scan_step_km),
            ("scan_max_km", self.scan_max_km),
        ] {
            check_finite(name, v)?;
            if v <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDistance {
    /// Largest distance known to give a positive effective rate; 0 when none was found.
    pub distance_km: f64,
    /// Final bisection bracket `(positive side, nonpositive side)`.
    pub bracket_km: (f64, f64),
    /// Effective rates at the bracket ends.
    pub bracket_rates: (f64, f64),
    /// Some scanned distance gave a positive rate.
    pub found: bool,
    /// The rate was still positive at the end of the scan range.
    pub truncated: bool,
}

/// Largest distance with a positive effective key rate.
///
/// Scans `0, step, 2 step, ...` up to the scan limit, takes the last
/// positive-to-nonpositive transition, and bisects it down to the tolerance.
/// The rate need not be monotone in distance (amplifiers may be unphysical
/// at short range), hence the last transition rather than the first.
pub fn max_distance(template: &SweepTemplate, options: SearchOptions) -> Result<MaxDistance> {
    template.validate()?;
    options.validate()?;
    let a = options.loss_db_per_km;
    let nla = template.spec.nla;
    let rate = |d: f64| template.effective_rate(d, a, nla);

    let n = (options.scan_max_km / options.scan_step_km + 1e-9).floor() as usize;
    let mut last_positive: Option<(f64, f64)> = None;
    let mut after_last: Option<(f64, f64)> = None;
    for i in 0..=n {
        let d = (i as f64 * options.scan_step_km).min(options.scan_max_km);
        let k = rate(d)?;
        if k > 0.0 {
            last_positive = Some((d, k));
            after_last = None;
        } else if last_positive.is_some() && after_last.is_none() {
            after_last = Some((d, k));
        }
    }

    let Some((mut lo, mut k_lo)) = last_positive else {
        return Ok(MaxDistance {
            distance_km: 0.0,
            bracket_km: (0.0, 0.0),
            bracket_rates: (0.0, 0.0),
            found: false,
            truncated: false,
        });
    };
    let Some((mut hi, mut k_hi)) = after_last else {
        return Ok(MaxDistance {
            distance_km: lo,
            bracket_km: (lo, lo),
            bracket_rates: (k_lo, k_lo),
            found: true,
            truncated: true,
        });
    };
    while hi - lo > options.tolerance_km {
        let mid = 0.5 * (lo + hi);
        let k = rate(mid)?;
        if k > 0.0 {
            lo = mid;
            k_lo = k;
        } else {
            hi = mid;
            k_hi = k;
        }
    }
    Ok(MaxDistance {
        distance_km: lo,
        bracket_km: (lo, hi),
        bracket_rates: (k_lo, k_hi),
        found: true,
        truncated: false,
    })
}

/// Grid settings for [`optimize_gain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSearch {
    pub step: f64,
    /// Upper limit used when `g_max` is infinite or larger.
    pub cap: f64,
}

impl Default for GainSearch {
    fn default() -> Self {
        Self { step: 0.05, cap: 4.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainOptimum {
    pub g_alice: f64,
    pub g_bob: f64,
    pub key_rate_effective: f64,
    /// Largest gain searched on each side.
    pub g_limit_alice: f64,
    pub g_limit_bob: f64,
    pub evaluations: usize,
}

fn gain_grid(limit: f64, step: f64) -> Vec<f64> {
    let n = ((limit - 1.0) / step + 1e-9).floor().max(0.0) as usize;
    (0..=n).map(|i| 1.0 + i as f64 * step).collect()
}

/// Exhaustive search over `g1, g2` in `{1, 1 + step, ...}` maximizing the
/// effective rate at a fixed distance. For entanglement in the middle each
/// side is limited to its channel's `g_max`; ties keep the smaller gains.
pub fn optimize_gain(
    template: &SweepTemplate,
    distance_km: f64,
    loss_db_per_km: f64,
    search: GainSearch,
) -> Result<GainOptimum> {
    template.validate()?;
    check_distance("distance_km", distance_km)?;
    check_loss(loss_db_per_km)?;
    check_finite("gain_step", search.step)?;
    check_finite("gain_cap", search.cap)?;
    if search.step <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "gain_step",
            value: search.step,
            reason: "gain step must be positive",
        });
    }
    if search.cap < 1.0 {
        return Err(Error::InvalidParameter {
            name: "gain_cap",
            value: search.cap,
            reason: "gain cap must be at least one",
        });
    }
    let spec = template.spec_at(distance_km, loss_db_per_km)?;
    let (limit_alice, limit_bob) = match spec.protocol {
        Protocol::EntanglementInMiddle { .. } => (
            g_max(spec.channel_alice).min(search.cap),
            g_max(spec.channel_bob).min(search.cap),
        ),
        Protocol::UntrustedRelay { .. } => (search.cap, search.cap),
    };
    let mut best = GainOptimum {
        g_alice: 1.0,
        g_bob: 1.0,
        key_rate_effective: f64::NEG_INFINITY,
        g_limit_alice: limit_alice,
        g_limit_bob: limit_bob,
        evaluations: 0,
    };
    for &g1 in &gain_grid(limit_alice, search.step) {
        for &g2 in &gain_grid(limit_bob, search.step) {
            let k = key_rate(&spec.with_nla(NlaConfig::new(g1, g2)?))?.key_rate_effective;
            best.evaluations += 1;
            if k > best.key_rate_effective {
                best.g_alice = g1;
                best.g_bob = g2;
                best.key_rate_effective = k;
            }
        }
    }
    Ok(best)
}
