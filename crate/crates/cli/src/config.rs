//! Line-oriented `key = value` run configuration.

use std::fmt::Write as _;
use std::str::FromStr;

use cvqkd::gaussian::ChannelParams;
use cvqkd::nla::NlaConfig;
use cvqkd::protocols::{Detection, Protocol, ProtocolSpec, Reconciliation, RelayGains};
use cvqkd::sweep::{
    standard_curves, Curve, DistanceGrid, GainSearch, SearchOptions, SweepTemplate,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Eim,
    Relay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainRule {
    ClosedForm,
    ConditionalMean,
    Fixed,
}

/// Everything a command needs. Unset optional keys fall back to the shared
/// value (`variance`, `excess_noise`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    /// Unset: homodyne for entanglement in the middle, heterodyne for the relay.
    pub detection_alice: Option<Detection>,
    pub detection_bob: Option<Detection>,
    pub reconciliation: Reconciliation,
    pub variance: f64,
    pub variance_alice: Option<f64>,
    pub variance_bob: Option<f64>,
    pub beta: f64,
    pub excess_noise: f64,
    pub excess_noise_alice: Option<f64>,
    pub excess_noise_bob: Option<f64>,
    pub loss_db_per_km: f64,
    pub distance_km: f64,
    pub relay_split: f64,
    pub gain_alice: f64,
    pub gain_bob: f64,
    /// When set, sweeps and distance searches cover the four standard curves.
    pub curve_gain: Option<f64>,
    pub relay_gain_rule: GainRule,
    pub relay_gain_alice: Option<f64>,
    pub relay_gain_bob: Option<f64>,
    pub start_km: f64,
    pub stop_km: f64,
    pub step_km: f64,
    /// Explicit grid; overrides the range when present.
    pub distances_km: Option<Vec<f64>>,
    pub tolerance_km: f64,
    pub scan_step_km: f64,
    pub scan_max_km: f64,
    pub gain_step: f64,
    pub gain_cap: f64,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolKind::Eim,
            detection_alice: None,
            detection_bob: None,
            reconciliation: Reconciliation::Direct,
            variance: 1.7,
            variance_alice: None,
            variance_bob: None,
            beta: 0.948,
            excess_noise: 0.002,
            excess_noise_alice: None,
            excess_noise_bob: None,
            loss_db_per_km: 0.2,
            distance_km: 25.0,
            relay_split: 0.5,
            gain_alice: 1.0,
            gain_bob: 1.0,
            curve_gain: None,
            relay_gain_rule: GainRule::ClosedForm,
            relay_gain_alice: None,
            relay_gain_bob: None,
            start_km: 0.0,
            stop_km: 40.0,
            step_km: 0.5,
            distances_km: None,
            tolerance_km: 0.05,
            scan_step_km: 1.0,
            scan_max_km: 200.0,
            gain_step: 0.05,
            gain_cap: 4.0,
            output: None,
        }
    }
}

fn config_error(line: usize, message: impl Into<String>) -> CliError {
    CliError::Config {
        line: Some(line),
        message: message.into(),
    }
}

fn parse_number<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| config_error(line, format!("`{key}` expects a number, got `{value}`")))
}

fn parse_detection(line: usize, key: &str, value: &str) -> Result<Detection, CliError> {
    match value {
        "homodyne" | "hom" => Ok(Detection::Homodyne),
        "heterodyne" | "het" => Ok(Detection::Heterodyne),
        _ => Err(config_error(line, format!("`{key}` expects homodyne or heterodyne, got `{value}`"))),
    }
}

fn parse_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| parse_number(line, key, item.trim()))
        .collect()
}

fn detection_name(d: Detection) -> &'static str {
    match d {
        Detection::Homodyne => "homodyne",
        Detection::Heterodyne => "heterodyne",
    }
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::default().apply(text)
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply(mut self, text: &str) -> Result<Self, CliError> {
        let mut seen = std::collections::HashSet::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(config_error(line, format!("expected `key = value`, got `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(config_error(line, format!("duplicate key `{key}`")));
            }
            self.set(line, key, value)?;
        }
        Ok(self)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), CliError> {
        let num = |v: &str| parse_number::<f64>(line, key, v);
        match key {
            "protocol" => {
                self.protocol = match value {
                    "eim" | "entanglement-in-middle" => ProtocolKind::Eim,
                    "relay" | "untrusted-relay" => ProtocolKind::Relay,
                    _ => return Err(config_error(line, format!("unknown protocol `{value}`"))),
                }
            }
            "detection_alice" => self.detection_alice = Some(parse_detection(line, key, value)?),
            "detection_bob" => self.detection_bob = Some(parse_detection(line, key, value)?),
            "reconciliation" => {
                self.reconciliation = match value {
                    "direct" | "dr" => Reconciliation::Direct,
                    "reverse" | "rr" => Reconciliation::Reverse,
                    _ => return Err(config_error(line, format!("unknown reconciliation `{value}`"))),
                }
            }
            "variance" => self.variance = num(value)?,
            "variance_alice" => self.variance_alice = Some(num(value)?),
            "variance_bob" => self.variance_bob = Some(num(value)?),
            "beta" => self.beta = num(value)?,
            "excess_noise" => self.excess_noise = num(value)?,
            "excess_noise_alice" => self.excess_noise_alice = Some(num(value)?),
            "excess_noise_bob" => self.excess_noise_bob = Some(num(value)?),
            "loss_db_per_km" => self.loss_db_per_km = num(value)?,
            "distance_km" => self.distance_km = num(value)?,
            "relay_split" => self.relay_split = num(value)?,
            "gain_alice" => self.gain_alice = num(value)?,
            "gain_bob" => self.gain_bob = num(value)?,
            "curve_gain" => self.curve_gain = Some(num(value)?),
            "relay_gain_rule" => {
                self.relay_gain_rule = match value {
                    "closed-form" => GainRule::ClosedForm,
                    "conditional-mean" => GainRule::ConditionalMean,
                    "fixed" => GainRule::Fixed,
                    _ => return Err(config_error(line, format!("unknown relay gain rule `{value}`"))),
                }
            }
            "relay_gain_alice" => self.relay_gain_alice = Some(num(value)?),
            "relay_gain_bob" => self.relay_gain_bob = Some(num(value)?),
            "start_km" => self.start_km = num(value)?,
            "stop_km" => self.stop_km = num(value)?,
            "step_km" => self.step_km = num(value)?,
            "distances_km" => self.distances_km = Some(parse_list(line, key, value)?),
            "tolerance_km" => self.tolerance_km = num(value)?,
            "scan_step_km" => self.scan_step_km = num(value)?,
            "scan_max_km" => self.scan_max_km = num(value)?,
            "gain_step" => self.gain_step = num(value)?,
            "gain_cap" => self.gain_cap = num(value)?,
            "output" => self.output = Some(value.to_string()),
            _ => return Err(config_error(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(s, "{key} = {value}");
        };
        put(
            "protocol",
            match self.protocol {
                ProtocolKind::Eim => "eim",
                ProtocolKind::Relay => "relay",
            }
            .into(),
        );
        if let Some(d) = self.detection_alice {
            put("detection_alice", detection_name(d).into());
        }
        if let Some(d) = self.detection_bob {
            put("detection_bob", detection_name(d).into());
        }
        put(
            "reconciliation",
            match self.reconciliation {
                Reconciliation::Direct => "direct",
                Reconciliation::Reverse => "reverse",
            }
            .into(),
        );
        put("variance", self.variance.to_string());
        if let Some(v) = self.variance_alice {
            put("variance_alice", v.to_string());
        }
        if let Some(v) = self.variance_bob {
            put("variance_bob", v.to_string());
        }
        put("beta", self.beta.to_string());
        put("excess_noise", self.excess_noise.to_string());
        if let Some(v) = self.excess_noise_alice {
            put("excess_noise_alice", v.to_string());
        }
        if let Some(v) = self.excess_noise_bob {
            put("excess_noise_bob", v.to_string());
        }
        put("loss_db_per_km", self.loss_db_per_km.to_string());
        put("distance_km", self.distance_km.to_string());
        put("relay_split", self.relay_split.to_string());
        put("gain_alice", self.gain_alice.to_string());
        put("gain_bob", self.gain_bob.to_string());
        if let Some(g) = self.curve_gain {
            put("curve_gain", g.to_string());
        }
        put(
            "relay_gain_rule",
            match self.relay_gain_rule {
                GainRule::ClosedForm => "closed-form",
                GainRule::ConditionalMean => "conditional-mean",
                GainRule::Fixed => "fixed",
            }
            .into(),
        );
        if let Some(g) = self.relay_gain_alice {
            put("relay_gain_alice", g.to_string());
        }
        if let Some(g) = self.relay_gain_bob {
            put("relay_gain_bob", g.to_string());
        }
        put("start_km", self.start_km.to_string());
        put("stop_km", self.stop_km.to_string());
        put("step_km", self.step_km.to_string());
        if let Some(points) = &self.distances_km {
            let list: Vec<String> = points.iter().map(f64::to_string).collect();
            put("distances_km", list.join(", "));
        }
        put("tolerance_km", self.tolerance_km.to_string());
        put("scan_step_km", self.scan_step_km.to_string());
        put("scan_max_km", self.scan_max_km.to_string());
        put("gain_step", self.gain_step.to_string());
        put("gain_cap", self.gain_cap.to_string());
        if let Some(path) = &self.output {
            put("output", path.clone());
        }
        s
    }

    pub fn relay_gains(&self) -> Result<RelayGains, CliError> {
        match self.relay_gain_rule {
            GainRule::ClosedForm => Ok(RelayGains::ClosedForm),
            GainRule::ConditionalMean => Ok(RelayGains::ConditionalMean),
            GainRule::Fixed => match (self.relay_gain_alice, self.relay_gain_bob) {
                (Some(alice), Some(bob)) => Ok(RelayGains::Fixed { alice, bob }),
                _ => Err(CliError::Config {
                    line: None,
                    message: "relay_gain_rule = fixed needs relay_gain_alice and relay_gain_bob".into(),
                }),
            },
        }
    }

    pub fn nla(&self) -> Result<NlaConfig, CliError> {
        Ok(NlaConfig::new(self.gain_alice, self.gain_bob)?)
    }

    /// Protocol with channels for `distance_km` and the configured amplifiers.
    pub fn spec(&self) -> Result<ProtocolSpec, CliError> {
        let template = self.template()?;
        let spec = template
            .spec_at(self.distance_km, self.loss_db_per_km)?
            .with_nla(self.nla()?);
        spec.validate()?;
        Ok(spec)
    }

    /// Protocol template whose transmittances are filled in per distance.
    pub fn template(&self) -> Result<SweepTemplate, CliError> {
        let default_detection = match self.protocol {
            ProtocolKind::Eim => Detection::Homodyne,
            ProtocolKind::Relay => Detection::Heterodyne,
        };
        let protocol = match self.protocol {
            ProtocolKind::Eim => Protocol::EntanglementInMiddle {
                variance: self.variance,
            },
            ProtocolKind::Relay => Protocol::UntrustedRelay {
                variance_alice: self.variance_alice.unwrap_or(self.variance),
                variance_bob: self.variance_bob.unwrap_or(self.variance),
                gains: self.relay_gains()?,
            },
        };
        let spec = ProtocolSpec {
            protocol,
            detection_alice: self.detection_alice.unwrap_or(default_detection),
            detection_bob: self.detection_bob.unwrap_or(default_detection),
            reconciliation: self.reconciliation,
            beta: self.beta,
            channel_alice: ChannelParams::new(1.0, self.excess_noise_alice.unwrap_or(self.excess_noise))?,
            channel_bob: ChannelParams::new(1.0, self.excess_noise_bob.unwrap_or(self.excess_noise))?,
            nla: self.nla()?,
        };
        let template = SweepTemplate::new(spec).with_relay_split(self.relay_split);
        template.validate()?;
        Ok(template)
    }

    pub fn grid(&self) -> Result<DistanceGrid, CliError> {
        Ok(match &self.distances_km {
            Some(points) => DistanceGrid::from_points(points.clone(), self.loss_db_per_km)?,
            None => DistanceGrid::new(self.start_km, self.stop_km, self.step_km, self.loss_db_per_km)?,
        })
    }

    /// The four standard curves if `curve_gain` is set, else the configured gains alone.
    pub fn curves(&self) -> Result<Vec<Curve>, CliError> {
        Ok(match self.curve_gain {
            Some(g) => standard_curves(g)?,
            None => vec![Curve::new("main", self.nla()?)],
        })
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            loss_db_per_km: self.loss_db_per_km,
            tolerance_km: self.tolerance_km,
            scan_step_km: self.scan_step_km,
            scan_max_km: self.scan_max_km,
        }
    }

    pub fn gain_search(&self) -> GainSearch {
        GainSearch {
            step: self.gain_step,
            cap: self.gain_cap,
        }
    }
}
