//! The model document: a JSON file with a fixed field order and every real
//! written with 17 significant digits, so that reading and re-writing a
//! document reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use biarch_core::{Axis, BiaaModel, FitConfig, Matrix, StochasticMatrix};
use serde_json::{Map, Value};

use crate::error::{IoError, Result};

pub const SCHEMA_VERSION: &str = "biarch-model/1";

/// Stored factors may deviate from exact stochasticity by rounding only.
const FACTOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMode {
    Biaa,
    Aa,
    GrandMean,
}

impl FitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FitMode::Biaa => "biaa",
            FitMode::Aa => "aa",
            FitMode::GrandMean => "grand-mean",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "biaa" => Some(FitMode::Biaa),
            "aa" => Some(FitMode::Aa),
            "grand-mean" => Some(FitMode::GrandMean),
            _ => None,
        }
    }
}

/// Column means and population standard deviations removed before fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub mode: FitMode,
    pub config: FitConfig,
    pub standardization: Option<Standardization>,
    pub model: BiaaModel,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| real(x)).collect();
    format!("[{}]", items.join(", "))
}

fn counts(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(usize::to_string).collect();
    format!("[{}]", items.join(", "))
}

fn matrix(m: &Matrix) -> String {
    let rows: Vec<String> = m.row_iter().map(|r| format!("    {}", reals(r))).collect();
    format!("[\n{}\n  ]", rows.join(",\n"))
}

impl ModelDocument {
    pub fn to_json(&self) -> String {
        let cfg = &self.config;
        let m = &self.model;
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"schema_version\": \"{SCHEMA_VERSION}\",");
        let _ = writeln!(s, "  \"mode\": \"{}\",", self.mode.as_str());
        s.push_str("  \"config\": {\n");
        let _ = writeln!(s, "    \"k\": {},", cfg.k);
        let _ = writeln!(s, "    \"c\": {},", cfg.c);
        let _ = writeln!(s, "    \"penalty_c\": {},", real(cfg.penalty_c));
        let _ = writeln!(s, "    \"max_iter\": {},", cfg.max_iter);
        let _ = writeln!(s, "    \"rel_tol\": {},", real(cfg.rel_tol));
        let _ = writeln!(s, "    \"n_restarts\": {},", cfg.n_restarts);
        let _ = writeln!(s, "    \"seed\": {}", cfg.seed);
        s.push_str("  },\n");
        match &self.standardization {
            None => s.push_str("  \"standardization\": null,\n"),
            Some(st) => {
                s.push_str("  \"standardization\": {\n");
                let _ = writeln!(s, "    \"means\": {},", reals(&st.means));
                let _ = writeln!(s, "    \"stds\": {}", reals(&st.stds));
                s.push_str("  },\n");
            }
        }
        let _ = writeln!(s, "  \"rss\": {},", real(m.rss));
        let _ = writeln!(s, "  \"iterations\": {},", m.iterations);
        let _ = writeln!(s, "  \"converged\": {},", m.converged);
        let _ = writeln!(s, "  \"restart\": {},", m.restart);
        let _ = writeln!(s, "  \"rss_trace\": {},", reals(&m.rss_trace));
        let _ = writeln!(s, "  \"collapse_iterations\": {},", counts(&m.collapse_iterations));
        let _ = writeln!(s, "  \"alpha\": {},", matrix(m.alpha.values()));
        let _ = writeln!(s, "  \"beta\": {},", matrix(m.beta.values()));
        let _ = writeln!(s, "  \"theta\": {},", matrix(m.theta.values()));
        let _ = writeln!(s, "  \"gamma\": {},", matrix(m.gamma.values()));
        let _ = writeln!(s, "  \"z\": {}", matrix(&m.z));
        s.push_str("}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| IoError::doc(e.to_string()))?;
        let obj = root
            .as_object()
            .ok_or_else(|| IoError::doc("top level is not an object"))?;
        let version = obj.get("schema_version").and_then(Value::as_str).unwrap_or("");
        if version != SCHEMA_VERSION {
            return Err(IoError::SchemaVersionMismatch {
                found: version.to_owned(),
                expected: SCHEMA_VERSION,
            });
        }
        let mode = FitMode::parse(get_str(obj, "mode")?)
            .ok_or_else(|| IoError::doc("unknown mode"))?;

        let c = get(obj, "config")?
            .as_object()
            .ok_or_else(|| IoError::doc("config is not an object"))?;
        let config = FitConfig {
            k: get_count(c, "k")?,
            c: get_count(c, "c")?,
            penalty_c: get_real(c, "penalty_c")?,
            max_iter: get_count(c, "max_iter")?,
            rel_tol: get_real(c, "rel_tol")?,
            n_restarts: get_count(c, "n_restarts")?,
            seed: get(c, "seed")?
                .as_u64()
                .ok_or_else(|| IoError::doc("seed is not an unsigned integer"))?,
        };

        let standardization = match get(obj, "standardization")? {
            Value::Null => None,
            Value::Object(st) => Some(Standardization {
                means: real_array(get(st, "means")?, "means")?,
                stds: real_array(get(st, "stds")?, "stds")?,
            }),
            _ => return Err(IoError::doc("standardization is neither null nor an object")),
        };

        let z = get_matrix(obj, "z")?;
        let alpha = get_matrix(obj, "alpha")?;
        let beta = get_matrix(obj, "beta")?;
        let theta = get_matrix(obj, "theta")?;
        let gamma = get_matrix(obj, "gamma")?;
        let (k, cc) = z.shape();
        let (n, m) = (alpha.rows(), gamma.cols());
        let shapes = [
            ("alpha", alpha.shape(), (n, k)),
            ("beta", beta.shape(), (k, n)),
            ("theta", theta.shape(), (m, cc)),
            ("gamma", gamma.shape(), (cc, m)),
        ];
        for (name, found, expected) in shapes {
            if found != expected {
                return Err(IoError::doc(format!(
                    "{name} is {}x{}, expected {}x{}",
                    found.0, found.1, expected.0, expected.1
                )));
            }
        }
        let stochastic = |m: Matrix, axis, name: &str| {
            StochasticMatrix::from_exact(m, axis, FACTOR_TOL)
                .map_err(|e| IoError::doc(format!("{name}: {e}")))
        };
        let model = BiaaModel {
            alpha: stochastic(alpha, Axis::Rows, "alpha")?,
            beta: stochastic(beta, Axis::Rows, "beta")?,
            theta: stochastic(theta, Axis::Columns, "theta")?,
            gamma: stochastic(gamma, Axis::Columns, "gamma")?,
            z,
            rss: get_real(obj, "rss")?,
            iterations: get_count(obj, "iterations")?,
            rss_trace: real_array(get(obj, "rss_trace")?, "rss_trace")?,
            converged: get(obj, "converged")?
                .as_bool()
                .ok_or_else(|| IoError::doc("converged is not a boolean"))?,
            collapse_iterations: get(obj, "collapse_iterations")?
                .as_array()
                .ok_or_else(|| IoError::doc("collapse_iterations is not an array"))?
                .iter()
                .map(|v| as_count(v, "collapse_iterations"))
                .collect::<Result<_>>()?,
            restart: get_count(obj, "restart")?,
        };
        Ok(ModelDocument {
            mode,
            config,
            standardization,
            model,
        })
    }
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| IoError::doc(format!("missing field {key:?}")))
}

fn get_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
    get(obj, key)?
        .as_str()
        .ok_or_else(|| IoError::doc(format!("{key} is not a string")))
}

fn as_real(v: &Value, key: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| IoError::doc(format!("{key} holds a non-number")))
}

fn as_count(v: &Value, key: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| IoError::doc(format!("{key} holds a non-count")))
}

fn get_real(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    as_real(get(obj, key)?, key)
}

fn get_count(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    as_count(get(obj, key)?, key)
}

fn real_array(v: &Value, key: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| IoError::doc(format!("{key} is not an array")))?
        .iter()
        .map(|x| as_real(x, key))
        .collect()
}

fn get_matrix(obj: &Map<String, Value>, key: &str) -> Result<Matrix> {
    let rows = get(obj, key)?
        .as_array()
        .ok_or_else(|| IoError::doc(format!("{key} is not an array of rows")))?
        .iter()
        .map(|r| real_array(r, key))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(IoError::doc(format!("{key} is empty")));
    }
    Matrix::from_rows(&rows).map_err(|e| IoError::doc(format!("{key}: {e}")))
}

pub fn write_model(doc: &ModelDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, doc.to_json()).map_err(|e| IoError::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    ModelDocument::from_json(&text)
}
