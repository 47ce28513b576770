//! One flat `key=value` configuration surface for every tunable.

use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::field::FieldConfig;
use crate::fit::{PullConfig, SdfSource};
use crate::harness::PerturbConfig;
use crate::pipeline::DecomposeConfig;
use crate::refine::RefineConfig;
use crate::render::{FillRule, RenderOptions};

/// Renderer settings; image size is taken from each input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    /// Subsamples per axis for output renders and metrics.
    pub supersample: usize,
    /// Subsamples per axis for the scoring renders inside refinement.
    pub inner_supersample: usize,
    pub flatten_tol: f64,
    pub fill_rule: FillRule,
}

impl Default for RenderSettings {
    fn default() -> Self {
        let base = RenderOptions::new(1, 1);
        RenderSettings { supersample: base.supersample, inner_supersample: 2, flatten_tol: base.flatten_tol, fill_rule: base.fill_rule }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub field: FieldConfig,
    pub pull: PullConfig,
    pub refine: RefineConfig,
    pub perturb: PerturbConfig,
    pub decompose: DecomposeConfig,
    pub render: RenderSettings,
    /// Binarization threshold on gray values.
    pub eta: f64,
    pub crop_size: usize,
    pub pad: usize,
    /// Global color refinement sweeps.
    pub color_iters: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            field: FieldConfig::default(),
            pull: PullConfig::default(),
            refine: RefineConfig::default(),
            perturb: PerturbConfig::default(),
            decompose: DecomposeConfig::default(),
            render: RenderSettings::default(),
            eta: 0.5,
            crop_size: 128,
            pad: 8,
            color_iters: 2,
        }
    }
}

pub fn default_config() -> PipelineConfig {
    PipelineConfig::default()
}

fn fill_rule_name(r: FillRule) -> &'static str {
    match r {
        FillRule::EvenOdd => "evenodd",
        FillRule::NonZero => "nonzero",
    }
}

macro_rules! keys {
    ($($key:literal => $($field:ident).+ : $kind:ident),* $(,)?) => {
        const KEYS: &[&str] = &[$($key),*];

        fn get_value(c: &PipelineConfig, key: &str) -> Option<String> {
            match key {
                $($key => Some(keys!(@show $kind, c.$($field).+)),)*
                _ => None,
            }
        }

        fn set_value(c: &mut PipelineConfig, key: &str, v: &str) -> std::result::Result<(), String> {
            match key {
                $($key => { c.$($field).+ = keys!(@parse $kind, v); Ok(()) })*
                _ => Err(String::new()),
            }
        }
    };
    (@show float, $e:expr) => { format!("{}", $e) };
    (@show uint, $e:expr) => { format!("{}", $e) };
    (@show bool, $e:expr) => { format!("{}", $e) };
    (@show sdf, $e:expr) => { $e.name().to_string() };
    (@show rule, $e:expr) => { fill_rule_name($e).to_string() };
    (@parse float, $v:expr) => { $v.parse::<f64>().map_err(|e| e.to_string())? };
    (@parse uint, $v:expr) => { $v.parse().map_err(|e: std::num::ParseIntError| e.to_string())? };
    (@parse bool, $v:expr) => { $v.parse::<bool>().map_err(|e| e.to_string())? };
    (@parse sdf, $v:expr) => { SdfSource::parse($v).ok_or_else(|| format!("unknown sdf source '{}'", $v))? };
    (@parse rule, $v:expr) => {
        match $v {
            "evenodd" => FillRule::EvenOdd,
            "nonzero" => FillRule::NonZero,
            other => return Err(format!("unknown fill rule '{other}'")),
        }
    };
}

keys! {
    "eta" => eta: float,
    "crop_size" => crop_size: uint,
    "pad" => pad: uint,
    "color_iters" => color_iters: uint,
    "field.sigma_a" => field.sigma_a: float,
    "field.sigma_gamma" => field.sigma_gamma: float,
    "field.lambda_gamma" => field.lambda_gamma: float,
    "field.tau_a" => field.tau_a: float,
    "field.nms_radius" => field.nms_radius: uint,
    "field.contour_offset" => field.contour_offset: float,
    "field.tangent_window" => field.tangent_window: float,
    "field.proposal.min_sep" => field.proposal.min_sep: float,
    "field.proposal.curvature_window" => field.proposal.curvature_window: float,
    "field.proposal.corner_angle" => field.proposal.corner_angle: float,
    "field.proposal.min_turn" => field.proposal.min_turn: float,
    "field.proposal.fit_tol" => field.proposal.fit_tol: float,
    "field.proposal.max_anchors" => field.proposal.max_anchors: uint,
    "pull.lambda_h" => pull.lambda_h: float,
    "pull.lambda_l" => pull.lambda_l: float,
    "pull.lambda_t" => pull.lambda_t: float,
    "pull.lambda_p" => pull.lambda_p: float,
    "pull.lambda_s" => pull.lambda_s: float,
    "pull.lambda_sep" => pull.lambda_sep: float,
    "pull.k_samples" => pull.k_samples: uint,
    "pull.steps" => pull.steps: uint,
    "pull.step_size" => pull.step_size: float,
    "pull.error_threshold" => pull.error_threshold: float,
    "pull.sdf_source" => pull.sdf_source: sdf,
    "refine.delta" => refine.delta: float,
    "refine.tau_f" => refine.tau_f: float,
    "refine.max_rounds" => refine.max_rounds: uint,
    "refine.alpha" => refine.alpha: float,
    "refine.lambda_plus" => refine.lambda_plus: float,
    "refine.lambda_minus" => refine.lambda_minus: float,
    "refine.lambda_f" => refine.lambda_f: float,
    "refine.tau_soft" => refine.tau_soft: float,
    "refine.smooth_sigma" => refine.smooth_sigma: float,
    "refine.steps" => refine.steps: uint,
    "refine.step_size" => refine.step_size: float,
    "refine.eps_abs" => refine.eps_abs: float,
    "refine.eps_rel" => refine.eps_rel: float,
    "refine.densify" => refine.densify: bool,
    "perturb.jitter_amp_min" => perturb.jitter_amp_min: float,
    "perturb.jitter_amp_max" => perturb.jitter_amp_max: float,
    "perturb.jitter_sigma" => perturb.jitter_sigma: float,
    "perturb.chip_prob" => perturb.chip_prob: float,
    "perturb.bump_prob" => perturb.bump_prob: float,
    "perturb.iou_min" => perturb.iou_min: float,
    "perturb.area_ratio_min" => perturb.area_ratio_min: float,
    "perturb.area_ratio_max" => perturb.area_ratio_max: float,
    "perturb.max_resamples" => perturb.max_resamples: uint,
    "perturb.seed" => perturb.seed: uint,
    "decompose.max_colors" => decompose.max_colors: uint,
    "decompose.min_area" => decompose.min_area: uint,
    "render.supersample" => render.supersample: uint,
    "render.inner_supersample" => render.inner_supersample: uint,
    "render.flatten_tol" => render.flatten_tol: float,
    "render.fill_rule" => render.fill_rule: rule,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.pull.validate()?;
        self.refine.validate()?;
        self.perturb.validate()?;
        self.decompose.validate()?;
        self.render_options(1, 1).validate()?;
        if self.render.inner_supersample == 0 {
            return Err(invalid("render.inner_supersample must be >= 1"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(invalid("eta must lie in (0, 1)"));
        }
        if self.crop_size < 32 || self.crop_size <= 2 * self.pad {
            return Err(invalid("crop_size must be >= 32 and exceed twice the padding"));
        }
        Ok(())
    }

    /// Output renderer options for a `width` x `height` canvas.
    pub fn render_options(&self, width: usize, height: usize) -> RenderOptions {
        RenderOptions {
            fill_rule: self.render.fill_rule,
            supersample: self.render.supersample,
            flatten_tol: self.render.flatten_tol,
            ..RenderOptions::new(width, height)
        }
    }

    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    pub fn get(&self, key: &str) -> Option<String> {
        get_value(self, key)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        set_value(self, key, value).map_err(|msg| invalid(format!("{key}: {msg}")))
    }

    /// Every key, one `key=value` line each, in a fixed order.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k}={}\n", get_value(self, k).unwrap_or_default())).collect()
    }

    /// Defaults overridden by the lines of `text`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse { line: i + 1, msg: format!("expected key=value, got '{line}'") });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::UnknownKey(k.to_string()));
            }
            set_value(&mut c, k, v).map_err(|msg| Error::Parse { line: i + 1, msg: format!("{k}: {msg}") })?;
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    PipelineConfig::from_text(&std::fs::read_to_string(path)?)
}

pub fn save_config(c: &PipelineConfig, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, c.to_text())?)
}

/// File name of the effective-config echo written next to outputs.
pub const EFFECTIVE_CONFIG: &str = "effective.cfg";
