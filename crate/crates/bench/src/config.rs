//! Default hyperparameter grids, stored as TOML.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{BenchError, Result};

const BUILTIN: &str = include_str!("../../../configs/default_grids.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub max_iter: usize,
    pub tol: f64,
    /// Method name → parameter name → candidate values.
    pub methods: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

fn number(v: &toml::Value, key: &str) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(BenchError::Config(format!("{key}: expected a number"))),
    }
}

impl GridConfig {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("shipped grid file is valid")
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        let mut cfg = Self { max_iter: 50, tol: 1e-7, methods: BTreeMap::new() };
        for (section, value) in table {
            let toml::Value::Table(entries) = value else {
                return Err(BenchError::Config(format!("{section}: expected a table")));
            };
            if section == "solver" {
                for (k, v) in &entries {
                    match k.as_str() {
                        "max_iter" => cfg.max_iter = number(v, k)? as usize,
                        "tol" => cfg.tol = number(v, k)?,
                        _ => return Err(BenchError::Config(format!("solver.{k}: unknown key"))),
                    }
                }
                continue;
            }
            let mut grids = BTreeMap::new();
            for (k, v) in &entries {
                let values = match v {
                    toml::Value::Array(items) => items.iter().map(|x| number(x, k)).collect::<Result<Vec<_>>>()?,
                    other => vec![number(other, k)?],
                };
                if values.is_empty() {
                    return Err(BenchError::Config(format!("{section}.{k}: empty grid")));
                }
                grids.insert(k.clone(), values);
            }
            cfg.methods.insert(section, grids);
        }
        Ok(cfg)
    }

    pub fn grids(&self, method: &str) -> Result<Vec<(String, Vec<f64>)>> {
        self.methods
            .get(method)
            .map(|g| g.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
            .ok_or_else(|| BenchError::Config(format!("no grid for method {method}")))
    }
}
