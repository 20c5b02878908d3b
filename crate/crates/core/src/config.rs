//! JSON scenario configuration.
//!
//! Matrices are written row-major as `[re, im]` pairs. See
//! `docs/scenario.schema.json` for the full schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::Scenario;
use crate::error::{Error, Result};
use crate::operator::Operator;
use crate::presets::{self, ChainParams};
use crate::scalar::{cx, Real};
use crate::spectral::{DEFAULT_CLUSTER_TOL, HERMITIAN_TOL};
use crate::states::{gibbs, DensityMatrix};

/// A named preset or an explicit row-major matrix of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    Preset(String),
    Matrix(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub dim: usize,
    /// Presets: `ladder` (`diag(0, 1, ..., d−1)`), `zero`.
    pub hamiltonian: MatrixSpec,
    /// Presets: `ground`, `maximally_mixed`, `gibbs` (thermal at `beta`).
    pub initial_state: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReservoirConfig {
    Chain {
        n: usize,
        #[serde(default = "default_chain_coupling")]
        coupling: f64,
        #[serde(default = "default_chain_field")]
        field: f64,
        #[serde(default)]
        disorder: f64,
        #[serde(default)]
        seed: u64,
    },
    Explicit {
        dim: usize,
        hamiltonian: Vec<[f64; 2]>,
        /// Reservoir factor of the `edge_hopping` coupling preset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edge: Option<Vec<[f64; 2]>>,
    },
}

fn default_chain_coupling() -> f64 {
    ChainParams::default().coupling
}

fn default_chain_field() -> f64 {
    ChainParams::default().field
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// Presets: `edge_hopping` (system hopping ⊗ reservoir edge operator).
    pub v: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
}

fn default_cluster_tol() -> f64 {
    DEFAULT_CLUSTER_TOL
}

fn default_quad_tol() -> f64 {
    crate::quadrature::DEFAULT_QUAD_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { cluster_tol: default_cluster_tol(), quad_tol: default_quad_tol() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub reservoir: ReservoirConfig,
    pub coupling: CouplingConfig,
    pub beta: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Loaded<R: Real> {
    pub config: ScenarioConfig,
    pub scenario: Scenario<R>,
    pub warnings: Vec<String>,
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.into(), message: message.into() }
}

fn matrix_from_pairs<R: Real>(field: &str, dim: usize, pairs: &[[f64; 2]]) -> Result<Operator<R>> {
    if pairs.len() != dim * dim {
        return Err(field_err(field, format!("expected {} entries for a {}×{} matrix, got {}", dim * dim, dim, dim, pairs.len())));
    }
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(field_err(field, "matrix entries must be finite"));
    }
    let entries: Vec<_> = pairs.iter().map(|p| cx(R::lit(p[0]), R::lit(p[1]))).collect();
    Operator::from_row_major(&entries).map_err(|e| field_err(field, e.to_string()))
}

fn pairs_from_matrix(a: &Operator<f64>) -> Vec<[f64; 2]> {
    a.row_major().iter().map(|z| [z.re, z.im]).collect()
}

fn hermitian<R: Real>(field: &str, a: Operator<R>) -> Result<Operator<R>> {
    a.ensure_hermitian(R::tol(HERMITIAN_TOL)).map_err(|e| match e {
        Error::NotHermitian { asymmetry, tolerance } => {
            field_err(field, format!("not Hermitian: asymmetry ‖A − A*‖ = {:e} exceeds {:e}", asymmetry, tolerance))
        }
        other => field_err(field, other.to_string()),
    })?;
    Ok(a)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            field_err(&field, e.inner().to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces the reservoir seed, if the reservoir is seeded.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let ReservoirConfig::Chain { seed, .. } = &mut self.reservoir {
            *seed = new_seed;
        }
        self
    }

    /// Validates and builds the scenario.
    pub fn build<R: Real>(&self) -> Result<Loaded<R>> {
        let mut warnings = Vec::new();
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(field_err("beta", format!("must be positive and finite, got {}", self.beta)));
        }
        let t = self.tolerances;
        if !(t.cluster_tol > 0.0) || !t.cluster_tol.is_finite() {
            return Err(field_err("tolerances.cluster_tol", "must be positive"));
        }
        if !(t.quad_tol > 0.0) || !t.quad_tol.is_finite() {
            return Err(field_err("tolerances.quad_tol", "must be positive"));
        }
        let beta = R::lit(self.beta);
        let ds = self.system.dim;
        if ds == 0 {
            return Err(field_err("system.dim", "must be at least 1"));
        }
        let h_s = match &self.system.hamiltonian {
            MatrixSpec::Preset(p) if p == "ladder" => presets::ladder(ds),
            MatrixSpec::Preset(p) if p == "zero" => Operator::zeros(ds),
            MatrixSpec::Preset(p) => return Err(field_err("system.hamiltonian.preset", format!("unknown preset `{}`", p))),
            MatrixSpec::Matrix(m) => hermitian("system.hamiltonian", matrix_from_pairs("system.hamiltonian", ds, m)?)?,
        };
        let rho_s = match &self.system.initial_state {
            MatrixSpec::Preset(p) if p == "ground" => presets::ground_state(ds),
            MatrixSpec::Preset(p) if p == "maximally_mixed" => DensityMatrix::maximally_mixed(ds),
            MatrixSpec::Preset(p) if p == "gibbs" => gibbs(&h_s, beta)?,
            MatrixSpec::Preset(p) => return Err(field_err("system.initial_state.preset", format!("unknown preset `{}`", p))),
            MatrixSpec::Matrix(m) => {
                let op = hermitian("system.initial_state", matrix_from_pairs("system.initial_state", ds, m)?)?;
                DensityMatrix::new(op).map_err(|e| field_err("system.initial_state", e.to_string()))?
            }
        };
        let (h_r, edge) = match &self.reservoir {
            ReservoirConfig::Chain { n, coupling, field, disorder, seed } => {
                let p = ChainParams { n: *n, coupling: *coupling, field: *field, disorder: *disorder, seed: *seed };
                let c = presets::build_chain_reservoir::<R>(&p).map_err(|e| field_err("reservoir.n", e.to_string()))?;
                (c.h_r, Some(c.edge))
            }
            ReservoirConfig::Explicit { dim, hamiltonian, edge } => {
                if *dim == 0 {
                    return Err(field_err("reservoir.dim", "must be at least 1"));
                }
                let h = hermitian("reservoir.hamiltonian", matrix_from_pairs("reservoir.hamiltonian", *dim, hamiltonian)?)?;
                let e = match edge {
                    Some(m) => Some(hermitian("reservoir.edge", matrix_from_pairs("reservoir.edge", *dim, m)?)?),
                    None => None,
                };
                (h, e)
            }
        };
        let dr = h_r.dim();
        let v = match &self.coupling.v {
            MatrixSpec::Preset(p) if p == "edge_hopping" => {
                let edge = edge.ok_or_else(|| field_err("coupling.v.preset", "`edge_hopping` needs a reservoir edge operator"))?;
                presets::hopping::<R>(ds).tensor(&edge)
            }
            MatrixSpec::Preset(p) => return Err(field_err("coupling.v.preset", format!("unknown preset `{}`", p))),
            MatrixSpec::Matrix(m) => hermitian("coupling.v", matrix_from_pairs("coupling.v", ds * dr, m)?)?,
        };
        let lambda = match self.coupling.lambda {
            Some(l) if l.is_finite() => l,
            Some(l) => return Err(field_err("coupling.lambda", format!("must be finite, got {}", l))),
            None => {
                warnings.push("coupling.lambda missing; using 0 (uncoupled baseline)".to_string());
                0.0
            }
        };
        let scenario = Scenario::new(h_s, h_r, v, R::lit(lambda), beta, rho_s).map_err(|e| field_err("<scenario>", e.to_string()))?;
        Ok(Loaded { config: self.clone(), scenario, warnings })
    }

    /// Explicit-matrix configuration that rebuilds `scn` exactly.
    pub fn from_scenario(scn: &Scenario<f64>, tolerances: Tolerances) -> Self {
        ScenarioConfig {
            system: SystemConfig {
                dim: scn.dim_s(),
                hamiltonian: MatrixSpec::Matrix(pairs_from_matrix(scn.h_s())),
                initial_state: MatrixSpec::Matrix(pairs_from_matrix(scn.rho_s().op())),
            },
            reservoir: ReservoirConfig::Explicit { dim: scn.dim_r(), hamiltonian: pairs_from_matrix(scn.h_r()), edge: None },
            coupling: CouplingConfig { v: MatrixSpec::Matrix(pairs_from_matrix(scn.v())), lambda: Some(scn.lambda()) },
            beta: scn.beta(),
            tolerances,
        }
    }

    /// The canonical qubit ⊗ qubit configuration.
    pub fn qubit_pair(lambda: f64) -> Self {
        ScenarioConfig {
            system: SystemConfig {
                dim: 2,
                hamiltonian: MatrixSpec::Preset("ladder".into()),
                initial_state: MatrixSpec::Preset("ground".into()),
            },
            reservoir: ReservoirConfig::Chain { n: 1, coupling: default_chain_coupling(), field: default_chain_field(), disorder: 0.0, seed: 0 },
            coupling: CouplingConfig { v: MatrixSpec::Preset("edge_hopping".into()), lambda: Some(lambda) },
            beta: 1.0,
            tolerances: Tolerances::default(),
        }
    }
}

/// Reads, parses and validates a configuration file.
pub fn parse_config<R: Real>(path: &Path) -> Result<Loaded<R>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
    ScenarioConfig::from_json(&text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {"dim": 2, "hamiltonian": {"preset": "ladder"}, "initial_state": {"preset": "ground"}},
        "reservoir": {"preset": "chain", "n": 1},
        "coupling": {"v": {"preset": "edge_hopping"}, "lambda": 0.2},
        "beta": 1.0
    }"#;

    #[test]
    fn minimal_config() {
        let l = ScenarioConfig::from_json(MINIMAL).unwrap().build::<f64>().unwrap();
        assert_eq!(l.scenario.dim(), 4);
        assert!(l.warnings.is_empty());
        assert_eq!(l.config.tolerances, Tolerances { cluster_tol: 1e-9, quad_tol: 1e-8 });
    }

    #[test]
    fn missing_lambda_warns() {
        let text = MINIMAL.replace(r#", "lambda": 0.2"#, "");
        let l = ScenarioConfig::from_json(&text).unwrap().build::<f64>().unwrap();
        assert_eq!(l.scenario.lambda(), 0.0);
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn field_level_errors() {
        let text = MINIMAL.replace(r#""beta": 1.0"#, r#""beta": "hot""#);
        match ScenarioConfig::from_json(&text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "beta"),
            other => panic!("{:?}", other),
        }
        let text = MINIMAL.replace(r#"{"preset": "edge_hopping"}"#, r#"{"matrix": [[1,0],[0,0],[0,0],[1,0]]}"#);
        match ScenarioConfig::from_json(&text).unwrap().build::<f64>() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "coupling.v"),
            other => panic!("{:?}", other.map(|_| ())),
        }
        let text = MINIMAL.replace(r#"{"preset": "ground"}"#, r#"{"matrix": [[1.1,0],[0,0],[0,0],[0,0]]}"#);
        match ScenarioConfig::from_json(&text).unwrap().build::<f64>() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "system.initial_state"),
            other => panic!("{:?}", other.map(|_| ())),
        }
        let text = MINIMAL.replace(r#"{"preset": "ladder"}"#, r#"{"matrix": [[0,0],[1,0],[0,0],[1,0]]}"#);
        match ScenarioConfig::from_json(&text).unwrap().build::<f64>() {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "system.hamiltonian");
                assert!(message.contains("asymmetry"));
            }
            other => panic!("{:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let scn = presets::random_scenario::<f64>(2, 3, 0.37, 1.3, 5).unwrap();
        let cfg = ScenarioConfig::from_scenario(&scn, Tolerances::default());
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap().build::<f64>().unwrap().scenario;
        for (a, b) in [(scn.h_s(), back.h_s()), (scn.h_r(), back.h_r()), (scn.v(), back.v()), (scn.rho_s().op(), back.rho_s().op())] {
            assert!(a.matrix().iter().zip(b.matrix().iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
        assert_eq!(scn.lambda().to_bits(), back.lambda().to_bits());
    }
}
