//! JSON configuration schema. Unknown keys are rejected everywhere.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use twophase::model::{ModelParams, State, Variant};
use twophase::wft::SimConfig;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub constraint: Option<ConstraintSection>,
    #[serde(default)]
    pub problem: Option<ProblemSection>,
    #[serde(default)]
    pub analysis: Option<AnalysisSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub variant: String,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "V_f")]
    pub v_f: f64,
    #[serde(rename = "V_c")]
    pub v_c: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub w_minus: f64,
    pub w_plus: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    #[serde(rename = "F")]
    pub f: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(default)]
    pub riemann: Option<RiemannSection>,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannSection {
    pub u_l: [f64; 2],
    pub u_r: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub initial: Vec<BlockSection>,
    pub t_end: f64,
    #[serde(default)]
    pub delta_v: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSection {
    pub x_lo: f64,
    pub x_hi: f64,
    pub state: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub suites: Vec<String>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_samples() -> usize {
    1000
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub cadence: Option<f64>,
    #[serde(default)]
    pub profile_points: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn build_model(&self) -> Result<ModelParams> {
        let m = &self.model;
        let variant = match m.variant.as_str() {
            "pta" => {
                let a = m.a.context("model.a is required for variant \"pta\"")?;
                let sigma = m.sigma.context("model.sigma is required for variant \"pta\"")?;
                if m.gamma.is_some() {
                    bail!("model.gamma is not a \"pta\" parameter");
                }
                Variant::PTa { a, sigma }
            }
            "ptp" => {
                let gamma = m.gamma.context("model.gamma is required for variant \"ptp\"")?;
                if m.a.is_some() || m.sigma.is_some() {
                    bail!("model.a / model.sigma are not \"ptp\" parameters");
                }
                Variant::PTp { gamma }
            }
            other => bail!("unknown model.variant {other:?} (expected \"pta\" or \"ptp\")"),
        };
        Ok(ModelParams::new(variant, m.v_f, m.v_c, m.r, m.w_minus, m.w_plus)?)
    }

    pub fn riemann_data(&self) -> Result<(State, State)> {
        let r = self
            .problem
            .as_ref()
            .and_then(|p| p.riemann.as_ref())
            .context("config has no problem.riemann section")?;
        Ok((State::new(r.u_l[0], r.u_l[1]), State::new(r.u_r[0], r.u_r[1])))
    }

    pub fn sim_config(&self, p: &ModelParams, delta_v_override: Option<f64>) -> Result<SimConfig> {
        let s = self
            .problem
            .as_ref()
            .and_then(|p| p.simulation.as_ref())
            .context("config has no problem.simulation section")?;
        let initial = s
            .initial
            .iter()
            .map(|b| (b.x_lo, b.x_hi, State::new(b.state[0], b.state[1])))
            .collect();
        // default rarefaction resolution: 1e-3 of the free speed
        let delta_v = delta_v_override
            .or(s.delta_v)
            .unwrap_or(1e-3 * p.v_free());
        let mut cfg = SimConfig::new(initial, self.constraint.as_ref().map(|c| c.f), s.t_end, delta_v);
        if let Some(out) = &self.output {
            if let Some(c) = out.cadence {
                cfg.cadence = c;
            }
            if let Some(n) = out.profile_points {
                cfg.profile_points = n;
            }
        }
        Ok(cfg)
    }
}
