//! Flat `key = value` configuration files and `THERMAL_HBT_*` overrides.
//!
//! Keys are the field names of [`ApparatusConfig`]. Missing keys keep their
//! defaults; unknown keys are rejected. `#` starts a comment.

use std::fmt::Write as _;

use thermal_hbt_core::apparatus::{validate, ApparatusConfig, Illumination, Lineshape};

use crate::error::ConfigFileError;

/// Prefix of environment variables that override configuration keys.
pub const ENV_PREFIX: &str = "THERMAL_HBT_";

/// Environment variables read by the command line itself, not config keys.
pub const CLI_ENV: &[&str] = &["CONFIG", "SEED", "OUT", "ENSEMBLE", "EXPERIMENT", "WORKERS"];

trait Value: Sized {
    fn parse(s: &str) -> Option<Self>;
    fn render(&self) -> String;
}

impl Value for f64 {
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        format!("{self:e}")
    }
}

impl Value for usize {
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for bool {
    fn parse(s: &str) -> Option<Self> {
        s.parse().ok()
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Value for Illumination {
    fn parse(s: &str) -> Option<Self> {
        matches!(s, "top-hat" | "tophat").then_some(Illumination::TopHat)
    }
    fn render(&self) -> String {
        "top-hat".into()
    }
}

impl Value for Lineshape {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "lorentzian" => Some(Lineshape::Lorentzian),
            "gaussian" => Some(Lineshape::Gaussian),
            _ => None,
        }
    }
    fn render(&self) -> String {
        match self {
            Lineshape::Lorentzian => "lorentzian".into(),
            Lineshape::Gaussian => "gaussian".into(),
        }
    }
}

macro_rules! keys {
    ($($field:ident),* $(,)?) => {
        /// Every recognised configuration key, in file order.
        pub const KEYS: &[&str] = &[$(stringify!($field)),*];

        /// `Ok(false)` for an unknown key, `Err(())` for an unparsable value.
        fn set(config: &mut ApparatusConfig, key: &str, value: &str) -> Result<bool, ()> {
            match key {
                $(stringify!($field) => config.$field = Value::parse(value).ok_or(())?,)*
                _ => return Ok(false),
            }
            Ok(true)
        }

        fn entries(config: &ApparatusConfig) -> Vec<(&'static str, String)> {
            vec![$((stringify!($field), config.$field.render())),*]
        }
    };
}

keys!(
    wavelength,
    groove_width,
    groove_spacing,
    num_slits,
    illum_diameter,
    propagation_distance,
    detector_aperture,
    coherence_time,
    timing_resolution,
    coincidence_window_near,
    coincidence_window_far,
    incidence_angle,
    mean_rate_d1,
    mean_rate_d2,
    illumination,
    lineshape,
    emitter_density,
    aperture_points,
    fresnel_phase,
    batches,
    trace_step,
    bin_width,
    tau_min,
    tau_max,
    tac_dead_time,
    acquisition_time,
    acquisition_segments,
    event_x1,
    event_x2,
);

fn assign(config: &mut ApparatusConfig, key: &str, value: &str, origin: &str) -> Result<(), ConfigFileError> {
    match set(config, key, value) {
        Ok(true) => Ok(()),
        Ok(false) => Err(ConfigFileError::UnknownKey {
            key: key.to_string(),
            origin: origin.to_string(),
        }),
        Err(()) => Err(ConfigFileError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            origin: origin.to_string(),
        }),
    }
}

/// Applies the assignments in `text` on top of `base`.
pub fn parse_into(base: ApparatusConfig, text: &str) -> Result<ApparatusConfig, ConfigFileError> {
    let mut config = base;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = format!("line {}", n + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigFileError::Syntax { origin: origin.clone() })?;
        assign(&mut config, key.trim(), value.trim(), &origin)?;
    }
    Ok(config)
}

/// Applies `THERMAL_HBT_<KEY>` variables, key upper-cased. Variables naming
/// command-line options are skipped.
pub fn apply_env<I>(base: ApparatusConfig, vars: I) -> Result<ApparatusConfig, ConfigFileError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut config = base;
    let mut vars: Vec<_> = vars
        .into_iter()
        .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|s| (s.to_string(), v)))
        .filter(|(k, _)| !CLI_ENV.contains(&k.as_str()))
        .collect();
    vars.sort();
    for (suffix, value) in vars {
        let origin = format!("{ENV_PREFIX}{suffix}");
        assign(&mut config, &suffix.to_ascii_lowercase(), value.trim(), &origin)?;
    }
    Ok(config)
}

/// Defaults, then the file (if any), then the environment; validated.
pub fn load<I>(file_text: Option<&str>, env: I) -> Result<ApparatusConfig, ConfigFileError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut config = ApparatusConfig::default();
    if let Some(text) = file_text {
        config = parse_into(config, text)?;
    }
    config = apply_env(config, env)?;
    validate(config).map_err(ConfigFileError::Invalid)
}

/// Every key with its value; parses back to the same config.
pub fn render(config: &ApparatusConfig) -> String {
    let mut out = String::new();
    for (k, v) in entries(config) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}
