//! Bundled configurations for the key-rate figures.

use crate::config::RunConfig;
use crate::CliError;

pub const FIGURES: [&str; 6] = [
    "fig4-left",
    "fig4-right",
    "fig5-left",
    "fig5-right",
    "fig7-a",
    "fig7-b",
];

const EIM_COMMON: &str = "\
protocol = eim
reconciliation = direct
variance = 1.7
beta = 0.948
excess_noise = 0.002
loss_db_per_km = 0.2
curve_gain = 1.4
start_km = 0
stop_km = 40
step_km = 0.5
";

const RELAY_COMMON: &str = "\
protocol = relay
reconciliation = direct
variance = 1.7
beta = 0.948
excess_noise = 0.002
loss_db_per_km = 0.2
relay_gain_rule = closed-form
curve_gain = 1.8
";

/// Config text for a named figure.
pub fn preset_text(name: &str) -> Option<String> {
    let specific = match name {
        "fig4-left" => "detection_alice = homodyne\ndetection_bob = homodyne\n",
        "fig4-right" => "detection_alice = heterodyne\ndetection_bob = homodyne\n",
        "fig5-left" => "detection_alice = homodyne\ndetection_bob = heterodyne\n",
        "fig5-right" => "detection_alice = heterodyne\ndetection_bob = heterodyne\n",
        "fig7-a" => "relay_split = 0.5\nstart_km = 0\nstop_km = 8\nstep_km = 0.1\n",
        // Alice sits at the relay: unit transmittance, excess noise kept.
        "fig7-b" => "relay_split = 0\nstart_km = 0\nstop_km = 40\nstep_km = 0.5\n",
        _ => return None,
    };
    let common = if name.starts_with("fig7") { RELAY_COMMON } else { EIM_COMMON };
    Some(format!("{common}{specific}"))
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    let text = preset_text(name).ok_or_else(|| CliError::Config {
        line: None,
        message: format!("unknown figure `{name}`; expected one of {}", FIGURES.join(", ")),
    })?;
    RunConfig::parse(&text)
}
