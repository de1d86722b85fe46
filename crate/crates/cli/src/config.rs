//! Scenario files: TOML ingestion and validation.
//!
//! Parsing is strict: unknown keys are rejected, and every validation error
//! carries the dotted path of the offending key.

use std::fmt;
use std::path::Path;

use polarsim_core::dynamics::IntegratorConfig;
use polarsim_core::model::{BaselineParams, FourGroupParams, ModelParams, SymmetricParams};
use polarsim_core::shock::ShockEvent;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A rejected configuration, with the dotted path of the key at fault.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    FourGroup,
}

/// Parameter table. Either the symmetric form (`alpha`, `gamma`, `mu`, plus
/// `delta`, `rho` for the four-group model) or the full form with per-camp
/// rates; the two may not be mixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub alpha_l: Option<f64>,
    pub alpha_r: Option<f64>,
    pub mu_l: Option<f64>,
    pub mu_r: Option<f64>,
    pub gamma_rl: Option<f64>,
    pub gamma_lr: Option<f64>,
    pub delta_l: Option<f64>,
    pub delta_r: Option<f64>,
    pub rho: Option<f64>,
}

const SYMMETRIC_KEYS: [&str; 4] = ["alpha", "gamma", "mu", "delta"];
const FULL_KEYS: [&str; 8] = [
    "alpha_l", "alpha_r", "mu_l", "mu_r", "gamma_rl", "gamma_lr", "delta_l", "delta_r",
];

impl ParamsSpec {
    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "alpha" => &mut self.alpha,
            "gamma" => &mut self.gamma,
            "mu" => &mut self.mu,
            "delta" => &mut self.delta,
            "alpha_l" => &mut self.alpha_l,
            "alpha_r" => &mut self.alpha_r,
            "mu_l" => &mut self.mu_l,
            "mu_r" => &mut self.mu_r,
            "gamma_rl" => &mut self.gamma_rl,
            "gamma_lr" => &mut self.gamma_lr,
            "delta_l" => &mut self.delta_l,
            "delta_r" => &mut self.delta_r,
            "rho" => &mut self.rho,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(name).and_then(|v| *v)
    }

    /// Overwrites a parameter that is already present. Returns `false` when
    /// the name is unknown or unset in this form.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match self.slot(name) {
            Some(slot @ Some(_)) => {
                *slot = Some(value);
                true
            }
            _ => false,
        }
    }

    pub fn is_symmetric_form(&self) -> bool {
        SYMMETRIC_KEYS[..3].iter().any(|k| self.get(k).is_some())
    }

    /// Resolves the table into core parameters for `model`.
    pub fn resolve(&self, model: ModelKind, path: &str) -> Result<ModelParams, ConfigError> {
        let sym = SYMMETRIC_KEYS.iter().find(|k| self.get(k).is_some());
        let full = FULL_KEYS.iter().find(|k| self.get(k).is_some());
        if let (Some(_), Some(f)) = (sym, full) {
            return Err(ConfigError::new(
                format!("{path}.{f}"),
                "symmetric and full parameter forms cannot be mixed",
            ));
        }
        let need = |name: &str| -> Result<f64, ConfigError> {
            let key = format!("{path}.{name}");
            match self.get(name) {
                None => Err(ConfigError::new(key, "missing parameter")),
                Some(v) if v.is_finite() && v > 0.0 => Ok(v),
                Some(v) => Err(ConfigError::new(key, format!("must be > 0, got {v}"))),
            }
        };
        let refuse = |names: &[&str]| -> Result<(), ConfigError> {
            match names.iter().find(|k| self.get(k).is_some()) {
                Some(k) => Err(ConfigError::new(
                    format!("{path}.{k}"),
                    "disengagement rates only apply to the four_group model",
                )),
                None => Ok(()),
            }
        };
        let core = |e: polarsim_core::Error| ConfigError::new(path, e.to_string());
        if self.is_symmetric_form() || sym.is_some() {
            let (alpha, gamma, mu) = (need("alpha")?, need("gamma")?, need("mu")?);
            let p = SymmetricParams::new(alpha, gamma, mu).map_err(core)?;
            match model {
                ModelKind::Baseline => {
                    refuse(&["delta", "rho"])?;
                    Ok(ModelParams::Baseline(p.baseline()))
                }
                ModelKind::FourGroup => {
                    let p = p.with_disengagement(need("delta")?, need("rho")?).map_err(core)?;
                    Ok(ModelParams::FourGroup(p.four_group().map_err(core)?))
                }
            }
        } else {
            let base = BaselineParams::new(
                need("alpha_l")?,
                need("alpha_r")?,
                need("mu_l")?,
                need("mu_r")?,
                need("gamma_rl")?,
                need("gamma_lr")?,
            )
            .map_err(core)?;
            match model {
                ModelKind::Baseline => {
                    refuse(&["delta_l", "delta_r", "rho"])?;
                    Ok(ModelParams::Baseline(base))
                }
                ModelKind::FourGroup => {
                    let q =
                        FourGroupParams::new(base, need("delta_l")?, need("delta_r")?, need("rho")?).map_err(core)?;
                    Ok(ModelParams::FourGroup(q))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub label: String,
    pub params: ParamsSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub l: f64,
    pub r: f64,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    pub time: f64,
    /// Fraction of centrists that disengage.
    pub delta: Option<f64>,
    /// Raw amplitude `s`, `delta = 1 - exp(-s)`.
    pub raw_s: Option<f64>,
    /// Symmetric structural shift of `beta`.
    pub dbeta: Option<f64>,
    /// Full replacement parameter set after the shock.
    pub replace: Option<ParamsSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Analytic equilibria and Perron root over a parameter grid.
    Equilibrium,
    /// `Phi(shock_delta)` curves.
    Phi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: String,
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaircaseSpec {
    /// Continue each post-shock segment this long to measure settled floors.
    pub settle_horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub scale: Option<usize>,
}

/// Raw scenario file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelKind,
    pub params: Option<ParamsSpec>,
    #[serde(default)]
    pub variants: Vec<VariantSpec>,
    #[serde(default)]
    pub initial: Vec<InitialSpec>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub shocks: Vec<ShockSpec>,
    pub sweep: Option<SweepSpec>,
    pub staircase: Option<StaircaseSpec>,
    /// Background disengagement added to `A` in reported output only.
    pub a_background: Option<f64>,
    pub verify: Option<VerifySpec>,
}

/// One named parameter set of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variant {
    pub label: String,
    pub spec: ParamsSpec,
    pub params: ModelParams,
    /// Key path of the table the variant came from.
    #[serde(skip)]
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub kind: SweepKind,
    pub axes: Vec<Axis>,
}

/// Validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub variants: Vec<Variant>,
    /// `(L, R, A)`; `A` is 0 for the baseline model.
    pub initial: Vec<[f64; 3]>,
    pub integrator: IntegratorConfig,
    pub shocks: Vec<ShockEvent>,
    pub sweep: Option<Sweep>,
    pub settle_horizon: Option<f64>,
    pub a_background: Option<f64>,
    pub verify: VerifySpec,
}

/// Shock amplitude name used as the `Phi` sweep axis.
pub const SHOCK_AXIS: &str = "shock_delta";

/// Parses TOML text into the raw config, reporting the key path on failure.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::new("<document>", e.message().to_string()))?;
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<document>".into() } else { path };
        ConfigError::new(path, e.into_inner().to_string())
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    parse_config(&text)?.validate()
}

fn finite(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("{v} is not finite")))
    }
}

fn axis_values(i: usize, a: &AxisSpec) -> Result<Vec<f64>, ConfigError> {
    let path = format!("sweep.axes[{i}]");
    match (&a.values, a.start, a.stop, a.step) {
        (Some(v), None, None, None) => {
            if v.is_empty() {
                return Err(ConfigError::new(format!("{path}.values"), "empty value list"));
            }
            for (j, x) in v.iter().enumerate() {
                finite(&format!("{path}.values[{j}]"), *x)?;
            }
            Ok(v.clone())
        }
        (None, Some(start), Some(stop), Some(step)) => {
            finite(&format!("{path}.start"), start)?;
            finite(&format!("{path}.stop"), stop)?;
            if !(step.is_finite() && step > 0.0) || stop < start {
                return Err(ConfigError::new(
                    format!("{path}.step"),
                    "need step > 0 and stop >= start",
                ));
            }
            // grid points as start + i step, so stop is hit without drift
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| start + k as f64 * step).collect())
        }
        _ => Err(ConfigError::new(
            path,
            "give either `values` or all of `start`, `stop`, `step`",
        )),
    }
}

impl ScenarioConfig {
    pub fn validate(self) -> Result<Scenario, ConfigError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(ConfigError::new(
                "name",
                "must be non-empty and use only ASCII letters, digits, `_` or `-`",
            ));
        }

        let mut variants = Vec::new();
        match (&self.params, self.variants.is_empty()) {
            (Some(p), true) => variants.push(Variant {
                label: self.name.clone(),
                spec: *p,
                params: p.resolve(self.model, "params")?,
                path: "params".into(),
            }),
            (None, false) => {
                for (i, v) in self.variants.iter().enumerate() {
                    let path = format!("variants[{i}].params");
                    if variants.iter().any(|w: &Variant| w.label == v.label) {
                        return Err(ConfigError::new(
                            format!("variants[{i}].label"),
                            format!("duplicate label `{}`", v.label),
                        ));
                    }
                    variants.push(Variant {
                        label: v.label.clone(),
                        spec: v.params,
                        params: v.params.resolve(self.model, &path)?,
                        path,
                    });
                }
            }
            (Some(_), false) => {
                return Err(ConfigError::new(
                    "variants",
                    "give either `params` or `variants`, not both",
                ))
            }
            (None, true) => return Err(ConfigError::new("params", "missing parameter table")),
        }

        let mut initial = Vec::new();
        for (i, s) in self.initial.iter().enumerate() {
            let path = format!("initial[{i}]");
            let a = s.a.unwrap_or(0.0);
            if self.model == ModelKind::Baseline && s.a.is_some() {
                return Err(ConfigError::new(
                    format!("{path}.a"),
                    "the baseline model has no disengaged group",
                ));
            }
            for (key, v) in [("l", s.l), ("r", s.r), ("a", a)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ConfigError::new(
                        format!("{path}.{key}"),
                        format!("must be >= 0, got {v}"),
                    ));
                }
            }
            if s.l + s.r + a > 1.0 {
                return Err(ConfigError::new(path, "shares exceed 1"));
            }
            initial.push([s.l, s.r, a]);
        }

        self.integrator
            .validate()
            .map_err(|e| ConfigError::new("integrator", e.to_string()))?;

        let mut shocks = Vec::new();
        if !self.shocks.is_empty() && self.model == ModelKind::Baseline {
            return Err(ConfigError::new("shocks", "shocks need the four_group model"));
        }
        for (i, sh) in self.shocks.iter().enumerate() {
            let path = format!("shocks[{i}]");
            let err = |key: &str, e: polarsim_core::Error| ConfigError::new(format!("{path}.{key}"), e.to_string());
            if !(sh.time >= 0.0 && sh.time <= self.integrator.t_end) {
                return Err(ConfigError::new(
                    format!("{path}.time"),
                    format!("{} lies outside [0, t_end = {}]", sh.time, self.integrator.t_end),
                ));
            }
            if shocks.last().is_some_and(|p: &ShockEvent| sh.time <= p.time) {
                return Err(ConfigError::new(format!("{path}.time"), "shock times must increase"));
            }
            let mut ev = match (sh.delta, sh.raw_s) {
                (Some(d), None) => ShockEvent::impulse(sh.time, d).map_err(|e| err("delta", e))?,
                (None, Some(s)) => ShockEvent::from_raw(sh.time, s).map_err(|e| err("raw_s", e))?,
                _ => return Err(ConfigError::new(path, "give exactly one of `delta` or `raw_s`")),
            };
            match (sh.dbeta, &sh.replace) {
                (Some(_), Some(_)) => return Err(ConfigError::new(path, "`dbeta` and `replace` are exclusive")),
                (Some(d), None) => {
                    if let Some(v) = variants.iter().find(|v| !v.params.base().is_symmetric()) {
                        return Err(ConfigError::new(
                            format!("{path}.dbeta"),
                            format!("`dbeta` needs symmetric parameters (variant `{}`)", v.label),
                        ));
                    }
                    ev = ev.with_dbeta(d).map_err(|e| err("dbeta", e))?;
                }
                (None, Some(r)) => {
                    let ModelParams::FourGroup(q) = r.resolve(ModelKind::FourGroup, &format!("{path}.replace"))? else {
                        unreachable!("four_group resolution yields four-group parameters")
                    };
                    ev = ev.with_replacement(q);
                }
                (None, None) => {}
            }
            shocks.push(ev);
        }

        let sweep = match &self.sweep {
            None => None,
            Some(s) => {
                if s.axes.is_empty() {
                    return Err(ConfigError::new("sweep.axes", "at least one axis is required"));
                }
                let mut axes = Vec::new();
                for (i, a) in s.axes.iter().enumerate() {
                    let path = format!("sweep.axes[{i}].name");
                    if axes.iter().any(|b: &Axis| b.name == a.name) {
                        return Err(ConfigError::new(path, format!("axis `{}` repeated", a.name)));
                    }
                    let values = axis_values(i, a)?;
                    match s.kind {
                        SweepKind::Phi => {
                            if a.name != SHOCK_AXIS || s.axes.len() != 1 {
                                return Err(ConfigError::new(
                                    path,
                                    format!("a phi sweep takes the single axis `{SHOCK_AXIS}`"),
                                ));
                            }
                            if self.model != ModelKind::FourGroup {
                                return Err(ConfigError::new("model", "a phi sweep needs four_group"));
                            }
                            if let Some(j) = values.iter().position(|x| !(0.0..=1.0).contains(x)) {
                                return Err(ConfigError::new(
                                    format!("sweep.axes[{i}]"),
                                    format!("value {} outside [0, 1]", values[j]),
                                ));
                            }
                        }
                        SweepKind::Equilibrium => {
                            for v in &variants {
                                if v.spec.get(&a.name).is_none() {
                                    return Err(ConfigError::new(
                                        path,
                                        format!("`{}` is not a parameter of variant `{}`", a.name, v.label),
                                    ));
                                }
                                for x in &values {
                                    let mut spec = v.spec;
                                    spec.set(&a.name, *x);
                                    spec.resolve(self.model, &v.path)
                                        .map_err(|e| ConfigError::new(format!("sweep.axes[{i}]"), e.to_string()))?;
                                }
                            }
                        }
                    }
                    axes.push(Axis {
                        name: a.name.clone(),
                        values,
                    });
                }
                Some(Sweep { kind: s.kind, axes })
            }
        };

        let settle_horizon = self.staircase.and_then(|s| s.settle_horizon);
        if let Some(h) = settle_horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::new("staircase.settle_horizon", "must be > 0"));
            }
        }
        if let Some(a) = self.a_background {
            if !(0.0..=1.0).contains(&a) {
                return Err(ConfigError::new("a_background", format!("{a} is outside [0, 1]")));
            }
        }

        Ok(Scenario {
            name: self.name,
            model: self.model,
            variants,
            initial,
            integrator: self.integrator,
            shocks,
            sweep,
            settle_horizon,
            a_background: self.a_background,
            verify: self.verify.unwrap_or_default(),
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Baseline => "baseline",
            ModelKind::FourGroup => "four_group",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "demo"
model = "baseline"
[params]
alpha = 0.25
gamma = 0.15
mu = 0.20
[[initial]]
l = 0.06
r = 0.04
"#;

    #[test]
    fn minimal_config_resolves() {
        let s = parse_config(MINIMAL).unwrap().validate().unwrap();
        assert_eq!(s.variants.len(), 1);
        assert!(s.variants[0].params.base().is_symmetric());
        assert_eq!(s.initial, vec![[0.06, 0.04, 0.0]]);
        assert_eq!(s.integrator, IntegratorConfig::default());
    }

    #[test]
    fn negative_rate_names_the_key() {
        let text = MINIMAL.replace("mu = 0.20", "mu = -0.20");
        let err = parse_config(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.path, "params.mu");
    }

    #[test]
    fn unknown_key_names_the_path() {
        let text = MINIMAL.replace("gamma = 0.15", "gama = 0.15");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.path, "params.gama");
        let text = format!("{MINIMAL}\n[integrator]\nrel_tol = 1e-9\nt_ned = 5.0\n");
        assert_eq!(parse_config(&text).unwrap_err().path, "integrator.t_ned");
    }

    #[test]
    fn mixed_forms_are_rejected() {
        let text = MINIMAL.replace("mu = 0.20", "mu = 0.20\nmu_l = 0.3");
        let err = parse_config(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.path, "params.mu_l");
    }

    #[test]
    fn range_axis_hits_the_stop() {
        let a = AxisSpec {
            name: "gamma".into(),
            values: None,
            start: Some(0.01),
            stop: Some(0.5),
            step: Some(0.01),
        };
        let v = axis_values(0, &a).unwrap();
        assert_eq!(v.len(), 50);
        assert!((v[49] - 0.5).abs() < 1e-12);
    }
}
