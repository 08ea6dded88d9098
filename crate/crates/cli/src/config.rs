use std::fs;
use std::path::{Path, PathBuf};

use qdho::{gibbs_coefficients, Coefficients, Constants, Params, Spec, Temperature};
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bath {
    /// Thermal bath with coefficients fixed by the temperature.
    Gibbs,
    /// No environment: friction and diffusion are switched off.
    Closed,
}

/// One run, as read from a flat TOML file. Every key is optional and falls
/// back to the reference scenario.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mass: f64,
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
    pub temperature: Option<f64>,
    pub coth_epsilon: Option<f64>,
    pub hbar: f64,
    pub boltzmann: f64,
    pub bath: Bath,

    pub delta: f64,
    pub r: f64,
    pub q0: f64,
    pub p0: f64,

    pub t_final: f64,
    pub samples: usize,
    pub oracle: bool,
    pub oracle_n: Option<usize>,
    pub out: PathBuf,

    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            omega: 1.0,
            lambda: 0.2,
            mu: 0.1,
            temperature: None,
            coth_epsilon: None,
            hbar: 1.0,
            boltzmann: 1.0,
            bath: Bath::Gibbs,
            delta: 2.0,
            r: 0.0,
            q0: 1.0,
            p0: 0.0,
            t_final: 10.0,
            samples: 200,
            oracle: false,
            oracle_n: None,
            out: PathBuf::from("out"),
            grid_min: -5.0,
            grid_max: 5.0,
            grid_points: 101,
        }
    }
}

const DEFAULT_COTH_EPSILON: f64 = 2.0;

pub fn read_table(path: Option<&Path>) -> Result<Table, CliError> {
    match path {
        None => Ok(Table::new()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Io(p.to_path_buf(), e))?;
            text.parse::<Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Apply a `key=value` override. The value is read as a TOML literal when
/// possible and as a bare string otherwise.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("expected KEY=VALUE, got `{assignment}`")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    set(table, key, value);
    Ok(())
}

pub fn set(table: &mut Table, key: &str, value: Value) {
    // the two temperature keys are alternatives
    match key {
        "temperature" => {
            table.remove("coth_epsilon");
        }
        "coth_epsilon" => {
            table.remove("temperature");
        }
        _ => {}
    }
    table.insert(key.to_string(), value);
}

impl RunConfig {
    pub fn from_table(table: Table) -> Result<Self, CliError> {
        table
            .try_into()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn temperature(&self) -> Result<Temperature<f64>, CliError> {
        match (self.temperature, self.coth_epsilon) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "set either `temperature` or `coth_epsilon`, not both".into(),
            )),
            (Some(t), None) => Ok(Temperature::Absolute(t)),
            (None, Some(c)) => Ok(Temperature::CothEpsilon(c)),
            (None, None) => Ok(Temperature::CothEpsilon(DEFAULT_COTH_EPSILON)),
        }
    }

    pub fn params(&self) -> Result<Params, CliError> {
        let (lambda, mu) = match self.bath {
            Bath::Gibbs => (self.lambda, self.mu),
            Bath::Closed => (0.0, 0.0),
        };
        let constants = Constants::new(self.hbar, self.boltzmann)?;
        Ok(Params::new(
            self.mass,
            self.omega,
            lambda,
            mu,
            self.temperature()?,
            constants,
        )?)
    }

    pub fn coefficients(&self, params: &Params) -> Result<Coefficients, CliError> {
        match self.bath {
            Bath::Gibbs => Ok(gibbs_coefficients(params)?),
            Bath::Closed => Ok(Coefficients::zero()),
        }
    }

    pub fn spec(&self) -> Result<Spec, CliError> {
        Ok(Spec::new(self.delta, self.r, self.q0, self.p0)?)
    }

    /// Everything a run needs, validated before any integration starts.
    pub fn model(&self) -> Result<(Params, Coefficients, Spec), CliError> {
        let params = self.params()?;
        let coeffs = self.coefficients(&params)?;
        let spec = self.spec()?;
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(CliError::Config("t_final must be positive".into()));
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        Ok((params, coeffs, spec))
    }
}
