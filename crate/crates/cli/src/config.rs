//! Run configuration: a TOML document with one table per block.

use std::fmt;
use std::path::Path;

use plasma_shock::bvp::BvpOptions;
use plasma_shock::jump::RestPointSearch;
use plasma_shock::profile::{ProfileMethod, ProfileOptions, ShootingSpec};
use plasma_shock::state::EosSpec;
use plasma_shock::twofluid::{Collision, SpeciesSpec};
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub upstream: Option<UpstreamConfig>,
    pub species: Option<SpeciesConfig>,
    #[serde(default)]
    pub dissipation: DissipationConfig,
    #[serde(default)]
    pub eos: EosConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    pub sweep: Option<SweepConfig>,
    /// Scalar viscous Burgers problem instead of a plasma upstream state.
    pub burgers: Option<BurgersConfig>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UpstreamConfig {
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    #[serde(default)]
    pub w: f64,
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub b2: f64,
    #[serde(default)]
    pub b3: f64,
    pub t: f64,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub shock_speed: f64,
    #[serde(default)]
    pub e1: f64,
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    #[serde(default = "one")]
    pub mu_e: f64,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpeciesConfig {
    pub m_e: f64,
    pub m_i: f64,
    #[serde(default = "one")]
    pub e_charge: f64,
    pub collision: Collision,
}

impl SpeciesConfig {
    pub fn spec(&self) -> SpeciesSpec {
        SpeciesSpec { m_e: self.m_e, m_i: self.m_i, e_charge: self.e_charge, collision: self.collision }
    }
}

/// A coefficient given either as a number or as `"derived"` from the
/// species block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Value(f64),
    Derived,
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Coefficient;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"derived\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Coefficient, E> {
                Ok(Coefficient::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Coefficient, E> {
                Ok(Coefficient::Value(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Coefficient, E> {
                Ok(Coefficient::Value(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Coefficient, E> {
                match v {
                    "derived" => Ok(Coefficient::Derived),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DissipationConfig {
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub mu_visc: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "unit_coefficient")]
    pub beta: Coefficient,
    #[serde(default = "unit_coefficient")]
    pub sigma: Coefficient,
    #[serde(default = "zero_coefficient")]
    pub chi: Coefficient,
    #[serde(default)]
    pub a_r: f64,
    #[serde(default)]
    pub d_r: f64,
}

impl Default for DissipationConfig {
    fn default() -> Self {
        Self {
            eta: 1.0,
            mu_visc: 1.0,
            kappa: 1.0,
            beta: unit_coefficient(),
            sigma: unit_coefficient(),
            chi: zero_coefficient(),
            a_r: 0.0,
            d_r: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum EosKind {
    #[default]
    IdealGas,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EosConfig {
    #[serde(default)]
    pub kind: EosKind,
    #[serde(default = "one")]
    pub r_gas: f64,
    #[serde(default = "five_thirds")]
    pub gamma: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        Self { kind: EosKind::IdealGas, r_gas: 1.0, gamma: 5.0 / 3.0 }
    }
}

impl EosConfig {
    pub fn spec(&self) -> EosSpec {
        match self.kind {
            EosKind::IdealGas => EosSpec::ideal_gas(self.r_gas, self.gamma),
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub seed: u64,
    pub starts: usize,
    pub max_iter: usize,
    pub method: ProfileMethod,
    pub launch_offset: f64,
    pub eps_up: f64,
    pub eps_down: f64,
    pub match_radius: f64,
    pub linear_radius: f64,
    pub max_span: Option<f64>,
    pub collocation_tol: f64,
    pub collocation_max_nodes: usize,
    pub restpoint_tol: f64,
    pub residual_samples: usize,
    pub residual_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = ProfileOptions::default();
        let s = ShootingSpec::default();
        let b = BvpOptions::default();
        Self {
            seed: p.seed,
            starts: p.starts,
            max_iter: p.max_iter,
            method: p.method,
            launch_offset: s.launch_offset,
            eps_up: s.eps_up,
            eps_down: s.eps_down,
            match_radius: s.match_radius,
            linear_radius: s.linear_radius,
            max_span: s.max_span,
            collocation_tol: b.tol,
            collocation_max_nodes: b.max_nodes,
            restpoint_tol: RestPointSearch::default().tol,
            residual_samples: 80_001,
            residual_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn profile_options(&self) -> ProfileOptions {
        let mut o = ProfileOptions { starts: self.starts, seed: self.seed, max_iter: self.max_iter, method: self.method, ..Default::default() };
        o.shooting.launch_offset = self.launch_offset;
        o.shooting.eps_up = self.eps_up;
        o.shooting.eps_down = self.eps_down;
        o.shooting.match_radius = self.match_radius;
        o.shooting.linear_radius = self.linear_radius;
        o.shooting.max_span = self.max_span;
        o.collocation.tol = self.collocation_tol;
        o.collocation.max_nodes = self.collocation_max_nodes;
        o
    }

    pub fn search(&self) -> RestPointSearch {
        RestPointSearch { tol: self.restpoint_tol, ..Default::default() }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    /// Prepended to every output file name.
    pub prefix: String,
    /// Rows of the profile table on a uniform grid; the native samples when absent.
    pub samples: Option<usize>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into(), prefix: String::new(), samples: None }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Germain,
    Parameter,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eta,
    MuVisc,
    Kappa,
    Sigma,
    Beta,
    Chi,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    /// Dissipation multipliers of a Germain sweep, strictly decreasing.
    #[serde(default)]
    pub multipliers: Vec<f64>,
    pub parameter: Option<SweepParameter>,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BurgersConfig {
    pub u_left: f64,
    pub u_right: f64,
    pub viscosity: f64,
}

fn one() -> f64 {
    1.0
}

fn five_thirds() -> f64 {
    5.0 / 3.0
}

fn unit_coefficient() -> Coefficient {
    Coefficient::Value(1.0)
}

fn zero_coefficient() -> Coefficient {
    Coefficient::Value(0.0)
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("`{field}`: {}", reason.into()))
}

impl RunConfig {
    pub fn from_path(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// Parses a document, applying `KEY=VAL` overrides (dotted keys, TOML
    /// values) before validation.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        let cfg: RunConfig = doc.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    // negated comparisons so that NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.upstream, &self.burgers) {
            (None, None) => return Err(CliError::Config("one of [upstream] or [burgers] is required".into())),
            (Some(_), Some(_)) => return Err(CliError::Config("[upstream] and [burgers] are mutually exclusive".into())),
            _ => {}
        }
        let d = &self.dissipation;
        for (name, c) in [("dissipation.beta", d.beta), ("dissipation.sigma", d.sigma), ("dissipation.chi", d.chi)] {
            if c == Coefficient::Derived && self.species.is_none() {
                return Err(invalid(name, "\"derived\" needs a [species] block"));
            }
        }
        if let Some(u) = &self.upstream {
            if !(u.t > 0.0) {
                return Err(invalid("upstream.t", "temperature must be positive"));
            }
            if !(u.rho > 0.0) {
                return Err(invalid("upstream.rho", "density must be positive"));
            }
            if !(u.u > u.shock_speed) {
                return Err(invalid("upstream.u", "flow must enter the shock (u > shock_speed)"));
            }
        }
        if let Some(b) = &self.burgers {
            if !(b.viscosity > 0.0) {
                return Err(invalid("burgers.viscosity", "must be positive"));
            }
            if !(b.u_left.is_finite() && b.u_right.is_finite()) {
                return Err(invalid("burgers.u_left", "states must be finite"));
            }
        }
        if self.eos.r_gas <= 0.0 || !self.eos.r_gas.is_finite() {
            return Err(invalid("eos.r_gas", "must be positive"));
        }
        if !(self.eos.gamma > 1.0) {
            return Err(invalid("eos.gamma", "adiabatic exponent must exceed 1"));
        }
        let s = &self.solver;
        for (name, v) in [
            ("solver.launch_offset", s.launch_offset),
            ("solver.eps_up", s.eps_up),
            ("solver.eps_down", s.eps_down),
            ("solver.match_radius", s.match_radius),
            ("solver.linear_radius", s.linear_radius),
            ("solver.collocation_tol", s.collocation_tol),
            ("solver.restpoint_tol", s.restpoint_tol),
            ("solver.residual_tol", s.residual_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if s.starts == 0 {
            return Err(invalid("solver.starts", "must be at least 1"));
        }
        if let Some(n) = self.outputs.samples {
            if n < 2 {
                return Err(invalid("outputs.samples", "need at least 2 rows"));
            }
        }
        if let Some(sw) = &self.sweep {
            match sw.kind {
                SweepKind::Germain => {
                    if sw.multipliers.is_empty() {
                        return Err(invalid("sweep.multipliers", "a Germain sweep needs multipliers"));
                    }
                    if sw.multipliers.iter().any(|t| !(*t > 0.0)) || sw.multipliers.windows(2).any(|w| !(w[1] < w[0])) {
                        return Err(invalid("sweep.multipliers", "must be positive and strictly decreasing"));
                    }
                }
                SweepKind::Parameter => {
                    if sw.parameter.is_none() {
                        return Err(invalid("sweep.parameter", "a parameter sweep names its coefficient"));
                    }
                    if sw.values.is_empty() || sw.values.iter().any(|v| !v.is_finite()) {
                        return Err(invalid("sweep.values", "need finite values"));
                    }
                    if self.burgers.is_some() {
                        return Err(invalid("sweep.kind", "parameter sweeps need a plasma upstream"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not KEY=VAL")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| CliError::Config(format!("empty override key in `{item}`")))?;
    let mut table = doc;
    for p in parts {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAS: &str = "[upstream]\nu = 2.0\nt = 0.6\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_toml(GAS, &[]).unwrap();
        assert_eq!(c.dissipation.eta, 1.0);
        assert_eq!(c.dissipation.chi, Coefficient::Value(0.0));
        assert_eq!(c.eos.gamma, 5.0 / 3.0);
        assert_eq!(c.solver, SolverConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml("[upstream]\nu = 2.0\nt = 0.6\nmach = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("mach"), "{err}");
        let err = RunConfig::from_toml("[upstream]\nu = 2.0\nt = 0.6\n[extra]\n", &[]).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn derived_coefficients_need_species() {
        let err = RunConfig::from_toml(&format!("{GAS}[dissipation]\nsigma = \"derived\"\n"), &[]).unwrap_err();
        assert!(err.to_string().contains("dissipation.sigma"), "{err}");
        let ok = format!("{GAS}[species]\nm_e = 1.0\nm_i = 100.0\ncollision = {{ frequency = 2.0 }}\n[dissipation]\nsigma = \"derived\"\n");
        assert_eq!(RunConfig::from_toml(&ok, &[]).unwrap().dissipation.sigma, Coefficient::Derived);
        let bad = format!("{GAS}[dissipation]\nsigma = \"auto\"\n");
        assert!(RunConfig::from_toml(&bad, &[]).is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let c = RunConfig::from_toml(GAS, &["solver.match_radius=2e-5".into(), "outputs.dir = \"x\"".into(), "dissipation.kappa=3".into()]).unwrap();
        assert_eq!(c.solver.match_radius, 2e-5);
        assert_eq!(c.outputs.dir, "x");
        assert_eq!(c.dissipation.kappa, 3.0);
        assert!(RunConfig::from_toml(GAS, &["solver.nonsense=1".into()]).is_err());
        assert!(RunConfig::from_toml(GAS, &["novalue".into()]).is_err());
    }

    #[test]
    fn burgers_and_upstream_are_exclusive() {
        let both = format!("{GAS}[burgers]\nu_left = 1.0\nu_right = -1.0\nviscosity = 0.5\n");
        assert!(RunConfig::from_toml(&both, &[]).is_err());
        assert!(RunConfig::from_toml("[solver]\nseed = 1\n", &[]).is_err());
    }
}
