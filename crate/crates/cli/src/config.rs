//! Experiment configuration: JSON schema, defaults and validation.

use serde::{Deserialize, Serialize};
use superadiabatic::theta::{ModelSpec, SingularityData, ThetaModel};
use superadiabatic::{Error, Result};

/// Configs shipped with the binary, addressable by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("polepair", include_str!("../configs/polepair.json")),
    ("polepair_remainder", include_str!("../configs/polepair_remainder.json")),
    ("landau_zener", include_str!("../configs/landau_zener.json")),
    ("darboux_sqrt", include_str!("../configs/darboux_sqrt.json")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Double,
    Extended,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ladder {
    Values(Vec<f64>),
    /// `eps = 1/k` for each listed `k`.
    Reciprocals {
        reciprocals: Vec<f64>,
    },
    /// `eps = t_c/k` for each listed `k`.
    CriticalFractions {
        t_c_over: Vec<f64>,
    },
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder::Values(Vec::new())
    }
}

impl Ladder {
    pub fn values(&self, t_c: Option<f64>) -> Result<Vec<f64>> {
        Ok(match self {
            Ladder::Values(v) => v.clone(),
            Ladder::Reciprocals { reciprocals } => reciprocals.iter().map(|k| 1.0 / k).collect(),
            Ladder::CriticalFractions { t_c_over } => {
                let t_c = t_c.ok_or_else(|| Error::config("t_c_over needs a model with singularity data"))?;
                t_c_over.iter().map(|k| t_c / k).collect()
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TGrid {
    Points(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl TGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            TGrid::Points(v) => v.clone(),
            TGrid::Range { start, stop, points } => superadiabatic::norms::grid((*start, *stop), *points),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Orders {
    /// Fixed superadiabatic order; the optimal order is used when absent.
    pub n: Option<usize>,
    /// Largest index for the recursion bounds.
    pub n_max: usize,
}

impl Default for Orders {
    fn default() -> Self {
        Orders { n: None, n_max: 30 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    pub max_spread: f64,
    pub band: f64,
    pub prefactor_rel: f64,
}

impl Default for CouplingSection {
    fn default() -> Self {
        CouplingSection { max_spread: 3.0, band: 0.05, prefactor_rel: 0.03 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub tau: Option<f64>,
    pub interval: Option<[f64; 2]>,
    pub grid_points: usize,
    pub norm_order_cap: usize,
    pub lemma_n_max: usize,
    pub m: f64,
    pub residual_tol: Option<f64>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection { tau: None, interval: None, grid_points: 9, norm_order_cap: 60, lemma_n_max: 200, m: 42.0, residual_tol: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DarbouxFunction {
    /// `(1 - z)^exponent` at the origin.
    Power { exponent: f64 },
    /// `theta'` of the configured model, expanded at `t_r`.
    Model,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DarbouxSection {
    pub function: DarbouxFunction,
    pub n_min: usize,
    pub n_max: usize,
    pub exact_tol: f64,
    pub ne_range: [f64; 2],
    pub slope_tol: f64,
}

impl Default for DarbouxSection {
    fn default() -> Self {
        DarbouxSection { function: DarbouxFunction::Power { exponent: -1.0 }, n_min: 10, n_max: 80, exact_tol: 1e-13, ne_range: [0.05, 20.0], slope_tol: 0.3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSpec {
    Lab,
    Adiabatic,
    Optimal,
    Order(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub frame: FrameSpec,
    pub tolerance: f64,
    pub margin: f64,
    pub grid_points: usize,
    /// Compare the final probability with `4 sin^2(pi gamma / 2) exp(-2 t_c / eps)`.
    pub check_probability: bool,
    pub probability_rel: f64,
    pub fit_rel: f64,
    pub ripple_max: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            frame: FrameSpec::Optimal,
            tolerance: 1e-12,
            margin: 8.0,
            grid_points: 801,
            check_probability: false,
            probability_rel: 0.03,
            fit_rel: 0.05,
            ripple_max: 0.15,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub alpha: f64,
    pub tau: Option<f64>,
    pub interval: Option<[f64; 2]>,
    pub order_cap: usize,
    pub grid_points: usize,
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection { alpha: 1.0, tau: None, interval: None, order_cap: 60, grid_points: 9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub epsilons: Ladder,
    #[serde(default)]
    pub t_grid: Option<TGrid>,
    #[serde(default)]
    pub orders: Orders,
    #[serde(default)]
    pub precision: Option<Precision>,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub darboux: DarbouxSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub norms: NormsSection,
}

/// Raw text of a config given as a path or a bundled name.
pub fn load_text(arg: &str) -> Result<String> {
    let path = std::path::Path::new(arg);
    if path.exists() {
        return std::fs::read_to_string(path).map_err(|e| Error::config(format!("{arg}: {e}")));
    }
    BUNDLED.iter().find(|(name, _)| *name == arg).map(|(_, text)| text.to_string()).ok_or_else(|| {
        let names: Vec<_> = BUNDLED.iter().map(|(n, _)| *n).collect();
        Error::config(format!("no config file '{arg}' and no bundled config of that name (bundled: {})", names.join(", ")))
    })
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn interval(name: &str, v: Option<[f64; 2]>) -> Result<()> {
    match v {
        Some([a, b]) if !(a.is_finite() && b.is_finite() && a <= b) => Err(Error::config(format!("{name} must satisfy a <= b"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Schema checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::config("name must be a non-empty identifier ([A-Za-z0-9_-])"));
        }
        let raw = match &self.epsilons {
            Ladder::Values(v) => v.clone(),
            Ladder::Reciprocals { reciprocals: v } | Ladder::CriticalFractions { t_c_over: v } => v.clone(),
        };
        for e in raw {
            positive("epsilon ladder entry", e)?;
        }
        if let Some(g) = &self.t_grid {
            let v = g.values();
            if v.is_empty() || v.iter().any(|t| !t.is_finite()) {
                return Err(Error::config("t_grid must hold finite values"));
            }
            if let TGrid::Range { start, stop, points } = g {
                if *points == 0 || start > stop {
                    return Err(Error::config("t_grid range needs start <= stop and points >= 1"));
                }
            }
        }
        if self.orders.n_max == 0 {
            return Err(Error::config("orders.n_max must be at least 1"));
        }
        let c = &self.coupling;
        positive("coupling.max_spread", c.max_spread)?;
        positive("coupling.band", c.band)?;
        positive("coupling.prefactor_rel", c.prefactor_rel)?;
        let b = &self.bounds;
        if let Some(t) = b.tau {
            positive("bounds.tau", t)?;
        }
        interval("bounds.interval", b.interval)?;
        positive("bounds.m", b.m)?;
        if b.grid_points == 0 || b.norm_order_cap == 0 || b.lemma_n_max < 4 {
            return Err(Error::config("bounds needs grid_points >= 1, norm_order_cap >= 1, lemma_n_max >= 4"));
        }
        let d = &self.darboux;
        if d.n_min == 0 || d.n_min > d.n_max {
            return Err(Error::config("darboux needs 1 <= n_min <= n_max"));
        }
        if let DarbouxFunction::Power { exponent } = d.function {
            if !exponent.is_finite() || (exponent >= 0.0 && exponent == exponent.round()) {
                return Err(Error::config("darboux power exponent must not be a non-negative integer"));
            }
        }
        let s = &self.simulate;
        positive("simulate.margin", s.margin)?;
        if !(s.tolerance >= 1e-13 && s.tolerance < 1.0) {
            return Err(Error::config("simulate.tolerance must lie in [1e-13, 1)"));
        }
        if s.grid_points < 16 {
            return Err(Error::config("simulate.grid_points must be at least 16"));
        }
        let n = &self.norms;
        positive("norms.alpha", n.alpha)?;
        if let Some(t) = n.tau {
            positive("norms.tau", t)?;
        }
        interval("norms.interval", n.interval)?;
        if n.grid_points == 0 {
            return Err(Error::config("norms.grid_points must be at least 1"));
        }
        if let Some(m) = &self.model {
            m.build()?;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ThetaModel> {
        self.model.as_ref().ok_or_else(|| Error::config("this command needs a model section"))?.build()
    }

    pub fn ladder(&self, data: Option<&SingularityData>) -> Result<Vec<f64>> {
        let v = self.epsilons.values(data.map(|d| d.t_c))?;
        if v.is_empty() {
            return Err(Error::config("empty epsilon ladder"));
        }
        Ok(v)
    }

    /// The configured time grid, or `t_r` alone.
    pub fn times(&self, data: Option<&SingularityData>) -> Vec<f64> {
        match (&self.t_grid, data) {
            (Some(g), _) => g.values(),
            (None, Some(d)) => vec![d.t_r],
            (None, None) => vec![0.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        for (name, text) in BUNDLED {
            let c = ExperimentConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&c.name, name);
        }
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(ExperimentConfig::parse(r#"{"name": "a", "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"name": "a", "epsilons": [0.1, -0.1]}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"name": "a", "simulate": {"tolerance": 1e-15}}"#).is_err());
        let c = ExperimentConfig::parse(r#"{"name": "a", "epsilons": {"reciprocals": [4, 8]}}"#).unwrap();
        assert_eq!(c.ladder(None).unwrap(), vec![0.25, 0.125]);
        let c = ExperimentConfig::parse(r#"{"name": "a", "epsilons": {"t_c_over": [2]}}"#).unwrap();
        assert!(c.ladder(None).is_err());
        let c = ExperimentConfig::parse(r#"{"name": "a"}"#).unwrap();
        assert!(matches!(c.ladder(None), Err(Error::Config(_))));
    }
}
