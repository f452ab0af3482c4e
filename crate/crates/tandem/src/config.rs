//! Run configuration: every tunable with its default, parsed from flat
//! `key = value` text and validated exhaustively. The effective config
//! is embedded in every report so experiments are self-describing.

use std::collections::BTreeMap;
use std::time::Duration;

use crate::engine::{EngineConfig, Mode};
use crate::error::{Error, Result};
use crate::scale::ScaleParams;
use crate::tracker::TrackerParams;
use crate::verifier::DetectionConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Filter regularizer.
    pub lambda: f64,
    /// Filter learning rate.
    pub eta: f64,
    /// Verification interval `V`.
    pub interval: usize,
    pub v_min: usize,
    /// Verification pass threshold.
    pub tau1: f64,
    /// Detection acceptance threshold.
    pub tau2: f64,
    /// Initial search-region scale.
    pub beta: f64,
    pub beta_max: f64,
    pub beta_step: f64,
    pub cell_size: usize,
    pub pca_dims: usize,
    pub sigma_factor: f64,
    pub padding: f64,
    /// Parabolic sub-cell peak refinement.
    pub refine: bool,
    pub num_scales: usize,
    pub scale_step: f64,
    pub scale_sigma: f64,
    /// Detection lattice step in pixels; `None` adapts to the box.
    pub stride: Option<f64>,
    pub candidate_scales: Vec<f64>,
    /// Side of the verifier's canonical template, in pixels.
    pub verifier_template: usize,
    /// Simulated verifier latency in frames (deterministic mode).
    pub latency: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Injected verifier compute delay in milliseconds.
    pub verifier_delay_ms: u64,
    /// Run the bare tracker with no verification.
    pub no_verifier: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            eta: 0.025,
            interval: 10,
            v_min: 1,
            tau1: 1.0,
            tau2: 1.6,
            beta: 1.5,
            beta_max: 4.0,
            beta_step: 0.5,
            cell_size: 4,
            pca_dims: 5,
            sigma_factor: 1.0 / 16.0,
            padding: 2.0,
            refine: false,
            num_scales: 17,
            scale_step: 1.02,
            scale_sigma: 1.0,
            stride: None,
            candidate_scales: vec![0.95, 1.0, 1.05],
            verifier_template: 32,
            latency: 2,
            mode: Mode::Deterministic,
            seed: 0,
            verifier_delay_ms: 0,
            no_verifier: false,
        }
    }
}

impl RunConfig {
    /// Parses `key = value` text over the defaults. Unknown keys and
    /// malformed or invariant-breaking values are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", i + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::InvalidConfig(format!("key {k}: bad value {v:?}"));
        match key {
            "lambda" => self.lambda = value.parse().map_err(|_| bad(key, value))?,
            "eta" => self.eta = value.parse().map_err(|_| bad(key, value))?,
            "interval" => self.interval = value.parse().map_err(|_| bad(key, value))?,
            "v_min" => self.v_min = value.parse().map_err(|_| bad(key, value))?,
            "tau1" => self.tau1 = value.parse().map_err(|_| bad(key, value))?,
            "tau2" => self.tau2 = value.parse().map_err(|_| bad(key, value))?,
            "beta" => self.beta = value.parse().map_err(|_| bad(key, value))?,
            "beta_max" => self.beta_max = value.parse().map_err(|_| bad(key, value))?,
            "beta_step" => self.beta_step = value.parse().map_err(|_| bad(key, value))?,
            "cell_size" => self.cell_size = value.parse().map_err(|_| bad(key, value))?,
            "pca_dims" => self.pca_dims = value.parse().map_err(|_| bad(key, value))?,
            "sigma_factor" => self.sigma_factor = value.parse().map_err(|_| bad(key, value))?,
            "padding" => self.padding = value.parse().map_err(|_| bad(key, value))?,
            "refine" => self.refine = value.parse().map_err(|_| bad(key, value))?,
            "num_scales" => self.num_scales = value.parse().map_err(|_| bad(key, value))?,
            "scale_step" => self.scale_step = value.parse().map_err(|_| bad(key, value))?,
            "scale_sigma" => self.scale_sigma = value.parse().map_err(|_| bad(key, value))?,
            "stride" => {
                self.stride = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad(key, value))?)
                }
            }
            "candidate_scales" => {
                let scales: std::result::Result<Vec<f64>, _> =
                    value.split(',').map(|s| s.trim().parse()).collect();
                self.candidate_scales = scales.map_err(|_| bad(key, value))?;
            }
            "verifier_template" => {
                self.verifier_template = value.parse().map_err(|_| bad(key, value))?
            }
            "latency" => self.latency = value.parse().map_err(|_| bad(key, value))?,
            "mode" => {
                self.mode = match value {
                    "deterministic" => Mode::Deterministic,
                    "parallel" => Mode::Parallel,
                    _ => return Err(bad(key, value)),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value))?,
            "verifier_delay_ms" => {
                self.verifier_delay_ms = value.parse().map_err(|_| bad(key, value))?
            }
            "no_verifier" => self.no_verifier = value.parse().map_err(|_| bad(key, value))?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other}"))),
        }
        Ok(())
    }

    /// Checks every field against its module's invariant.
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::InvalidConfig("lambda must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidConfig("eta must be in [0, 1]".into()));
        }
        if self.cell_size == 0 {
            return Err(Error::InvalidConfig("cell_size must be positive".into()));
        }
        if self.pca_dims == 0 || self.pca_dims > 10 {
            return Err(Error::InvalidConfig(
                "pca_dims must be in 1..=10 (1 intensity + 9 orientation channels)".into(),
            ));
        }
        if self.sigma_factor <= 0.0 {
            return Err(Error::InvalidConfig("sigma_factor must be positive".into()));
        }
        if self.padding < 1.0 {
            return Err(Error::InvalidConfig("padding must be at least 1".into()));
        }
        if self.verifier_template < self.cell_size {
            return Err(Error::InvalidConfig(
                "verifier_template must cover at least one cell".into(),
            ));
        }
        self.engine_config().validate()?;
        self.detection_config().validate()?;
        // Scale invariants are re-checked at model construction; fail fast here.
        if self.num_scales == 0 || self.num_scales % 2 == 0 {
            return Err(Error::InvalidConfig("num_scales must be odd".into()));
        }
        if self.scale_step <= 1.0 {
            return Err(Error::InvalidConfig("scale_step must exceed 1".into()));
        }
        if self.scale_sigma <= 0.0 {
            return Err(Error::InvalidConfig("scale_sigma must be positive".into()));
        }
        Ok(())
    }

    /// The effective config as sorted text, reparseable by [`parse`].
    ///
    /// [`parse`]: RunConfig::parse
    pub fn dump(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Key/value view of every field, for reports.
    pub fn pairs(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            map.insert(k.to_string(), v);
        };
        put("lambda", self.lambda.to_string());
        put("eta", self.eta.to_string());
        put("interval", self.interval.to_string());
        put("v_min", self.v_min.to_string());
        put("tau1", self.tau1.to_string());
        put("tau2", self.tau2.to_string());
        put("beta", self.beta.to_string());
        put("beta_max", self.beta_max.to_string());
        put("beta_step", self.beta_step.to_string());
        put("cell_size", self.cell_size.to_string());
        put("pca_dims", self.pca_dims.to_string());
        put("sigma_factor", self.sigma_factor.to_string());
        put("padding", self.padding.to_string());
        put("refine", self.refine.to_string());
        put("num_scales", self.num_scales.to_string());
        put("scale_step", self.scale_step.to_string());
        put("scale_sigma", self.scale_sigma.to_string());
        put(
            "stride",
            self.stride.map_or("auto".into(), |s| s.to_string()),
        );
        put(
            "candidate_scales",
            self.candidate_scales
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("verifier_template", self.verifier_template.to_string());
        put("latency", self.latency.to_string());
        put("mode", self.mode.to_string());
        put("seed", self.seed.to_string());
        put("verifier_delay_ms", self.verifier_delay_ms.to_string());
        put("no_verifier", self.no_verifier.to_string());
        map
    }

    pub fn tracker_params(&self) -> TrackerParams {
        TrackerParams {
            lambda: self.lambda,
            eta: self.eta,
            cell_size: self.cell_size,
            pca_dims: self.pca_dims,
            sigma_factor: self.sigma_factor,
            padding: self.padding,
            subcell_refine: self.refine,
            scale: ScaleParams {
                num_scales: self.num_scales,
                scale_step: self.scale_step,
                sigma: self.scale_sigma,
                lambda: self.lambda,
                eta: self.eta,
                cell_size: self.cell_size,
            },
        }
    }

    pub fn detection_config(&self) -> DetectionConfig {
        DetectionConfig {
            tau1: self.tau1,
            tau2: self.tau2,
            beta: self.beta,
            beta_initial: self.beta,
            beta_max: self.beta_max,
            beta_step: self.beta_step,
            stride: self.stride,
            candidate_scales: self.candidate_scales.clone(),
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            v_default: self.interval,
            v_min: self.v_min,
            mode: self.mode,
            latency_frames: self.latency,
            verifier_delay: Duration::from_millis(self.verifier_delay_ms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn dump_parse_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.interval = 5;
        cfg.mode = Mode::Parallel;
        cfg.stride = Some(3.0);
        cfg.candidate_scales = vec![0.9, 1.0];
        let text = cfg.dump();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back.pairs(), cfg.pairs());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::parse("nonsense = 1\n").is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(RunConfig::parse("eta = 1.5\n").is_err());
        assert!(RunConfig::parse("tau1 = 2.0\ntau2 = 1.0\n").is_err());
        assert!(RunConfig::parse("num_scales = 16\n").is_err());
        assert!(RunConfig::parse("interval = 0\n").is_err());
        assert!(RunConfig::parse("beta = 0.5\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = RunConfig::parse("# tuning\n\ninterval = 7 # every 7 frames\n").unwrap();
        assert_eq!(cfg.interval, 7);
    }
}
