//! Settings resolution: command-line flags win over the TOML config file,
//! which wins over built-in defaults. `SEGFORGE_SEED` supplies the seed when
//! neither flags nor the file do.

use std::path::Path;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use segforge_core::protocol::CoordMode;
use segforge_core::reward::RewardWeights;
use segforge_core::synth::{ParadigmChoice, SynthParams};
use segforge_core::trajectory::GROUP_KEYS;

pub const SEED_ENV: &str = "SEGFORGE_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub synth: Option<SynthParams>,
    pub reward: Option<RewardWeights>,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub backend: Option<String>,
    pub policy: Option<String>,
    pub max_turns: Option<usize>,
    pub coord_mode: Option<String>,
    pub epsilon: Option<f64>,
    pub group_key: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Seed precedence: flag, config file, environment, 0.
pub fn resolve_seed(flag: Option<u64>, file: &FileConfig) -> Result<u64> {
    if let Some(s) = flag.or(file.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer")),
        Err(_) => Ok(0),
    }
}

pub fn resolve_jobs(flag: Option<usize>, file: &FileConfig) -> usize {
    flag.or(file.jobs).unwrap_or(1).max(1)
}

pub fn resolve_timeout(flag: Option<u64>, file: &FileConfig, default: Duration) -> Duration {
    flag.or(file.timeout_ms).map(Duration::from_millis).unwrap_or(default)
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct SynthFlags {
    /// box, click, both or hybrid.
    #[arg(long)]
    pub paradigm: Option<ParadigmChoice>,
    /// Minimum IoU gain for a corrective click to be kept.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub max_clicks: Option<usize>,
    /// Resampling attempts per refinement step.
    #[arg(long)]
    pub retries: Option<usize>,
    #[arg(long)]
    pub filter_iou: Option<f64>,
    /// Half-width of the uniform box-corner jitter, in pixels.
    #[arg(long)]
    pub box_jitter: Option<u32>,
    /// Standard deviation of click jitter, in pixels.
    #[arg(long)]
    pub click_sigma: Option<f64>,
}

impl SynthFlags {
    pub fn resolve(&self, file: &FileConfig) -> Result<SynthParams> {
        let mut p = file.synth.unwrap_or_default();
        if let Some(v) = self.paradigm {
            p.paradigm = v;
        }
        if let Some(v) = self.tau {
            p.tau = v;
        }
        if let Some(v) = self.max_clicks {
            p.max_clicks = v;
        }
        if let Some(v) = self.retries {
            p.max_retries = v;
        }
        if let Some(v) = self.filter_iou {
            p.filter_min_iou = v;
        }
        if let Some(v) = self.box_jitter {
            p.box_jitter_halfwidth = v;
        }
        if let Some(v) = self.click_sigma {
            p.click_jitter_sigma = v;
        }
        p.validate()?;
        Ok(p)
    }
}

pub fn resolve_weights(file: &FileConfig) -> Result<RewardWeights> {
    let w = file.reward.unwrap_or_default();
    w.validate()?;
    Ok(w)
}

pub fn resolve_group_key(flag: Option<&str>, file: &FileConfig) -> Result<Option<String>> {
    let key = flag.map(str::to_owned).or_else(|| file.run.group_key.clone());
    if let Some(k) = &key {
        if !GROUP_KEYS.contains(&k.as_str()) {
            bail!("unknown group key {k:?} (expected one of {})", GROUP_KEYS.join(", "));
        }
    }
    Ok(key)
}

pub fn parse_coord_mode(s: &str) -> Result<CoordMode> {
    match s {
        "normalized" => Ok(CoordMode::Normalized),
        "pixel" => Ok(CoordMode::Pixel),
        other => bail!("unknown coordinate mode {other:?} (expected normalized or pixel)"),
    }
}

/// Splits a `cmd:<argv>` spec into its argument vector.
pub fn command_argv(spec: &str) -> Option<Result<Vec<String>>> {
    let rest = spec.strip_prefix("cmd:")?;
    Some(match shlex::split(rest) {
        Some(argv) if !argv.is_empty() => Ok(argv),
        _ => Err(anyhow::anyhow!("cannot split command line {rest:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("seed = 4\n[synth]\ntau = 0.1\nparadigm = \"both\"\n").unwrap();
        let flags = SynthFlags { tau: Some(0.2), ..Default::default() };
        let p = flags.resolve(&file).unwrap();
        assert_eq!(p.tau, 0.2);
        assert_eq!(p.paradigm, ParadigmChoice::Both);
        assert_eq!(p.max_clicks, 5);
        assert_eq!(resolve_seed(Some(9), &file).unwrap(), 9);
        assert_eq!(resolve_seed(None, &file).unwrap(), 4);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[synth]\ntaux = 1.0\n").is_err());
        assert!(toml::from_str::<FileConfig>("[reward]\nlambda1 = 0.3\n").unwrap().reward.unwrap().lambda1 == 0.3);
    }

    #[test]
    fn invalid_values_rejected() {
        let flags = SynthFlags { tau: Some(1.5), ..Default::default() };
        assert!(flags.resolve(&FileConfig::default()).is_err());
        assert!(resolve_group_key(Some("colour"), &FileConfig::default()).is_err());
    }

    #[test]
    fn command_specs() {
        assert_eq!(command_argv("cmd:echo 'a b' c").unwrap().unwrap(), ["echo", "a b", "c"]);
        assert!(command_argv("oracle").is_none());
        assert!(command_argv("cmd:").unwrap().is_err());
    }
}
