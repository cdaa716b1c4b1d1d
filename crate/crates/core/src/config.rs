//! TOML scenario files.
//!
//! ```toml
//! name = "boson_nu_half"
//! statistics = "boson"          # or "fermion"
//! sites = 8
//! chemical_potential = -0.1     # optional, adds mu * N
//! hermiticity = "symmetrize"    # or "strict"
//!
//! [filling]                     # optional, needed by the FQHS checks
//! p = 1
//! q = 2
//!
//! [pseudopotential]             # F(k) keyed by the integer 2k
//! "0" = 1.0
//! "2" = "1.0"                   # decimal strings are accepted
//! "3" = [0.5, -0.25]            # [re, im]
//!
//! [[terms]]
//! order = 1
//! entries = [{ create = [1], annihilate = [2], coefficient = [0.0, 1.0] }]
//!
//! [run]
//! n = [3, 5]                    # inclusive particle-number range
//! checks = ["relation_I", "relation_II", "thm_main"]
//!
//! [solver]                      # any field of SolverOptions
//! dense_max_dim = 2000
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{FillingSpec, Statistics};
use crate::relations::RelationId;
use crate::second_quantization::{
    HamiltonianSpec, Hermiticity, MBodyTerm, PseudopotentialSpec, TermEntry,
};
use crate::spectra::SolverOptions;
use crate::{Error, Result, C64};

/// A real number given as a TOML number or a decimal string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Text(String),
}

impl Real {
    pub fn value(&self) -> Result<f64> {
        let v = match self {
            Real::Number(v) => *v,
            Real::Text(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{s:?} is not a decimal number")))?,
        };
        if !v.is_finite() {
            return Err(Error::Config(format!("non-finite value {v}")));
        }
        Ok(v)
    }
}

/// A coefficient: a real, or `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(Real),
    Complex([Real; 2]),
}

impl Coefficient {
    pub fn value(&self) -> Result<C64> {
        match self {
            Coefficient::Real(r) => Ok(C64::new(r.value()?, 0.0)),
            Coefficient::Complex([re, im]) => Ok(C64::new(re.value()?, im.value()?)),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Real(Real::Number(v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryConfig {
    pub create: Vec<usize>,
    pub annihilate: Vec<usize>,
    pub coefficient: Coefficient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub order: usize,
    #[serde(default)]
    pub entries: Vec<EntryConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FillingConfig {
    pub p: usize,
    pub q: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Inclusive particle-number range `[n_min, n_max]`.
    pub n: Option<[usize; 2]>,
    pub checks: Option<Vec<String>>,
}

/// The raw file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub statistics: Statistics,
    pub sites: usize,
    #[serde(default)]
    pub chemical_potential: Option<Real>,
    #[serde(default)]
    pub hermiticity: Hermiticity,
    #[serde(default)]
    pub filling: Option<FillingConfig>,
    #[serde(default)]
    pub pseudopotential: Option<BTreeMap<String, Coefficient>>,
    #[serde(default)]
    pub terms: Vec<TermConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub spec: HamiltonianSpec,
    pub filling: Option<FillingSpec>,
    pub n_range: Option<[usize; 2]>,
    pub checks: Option<Vec<RelationId>>,
    pub solver: SolverOptions,
    pub config: ScenarioConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn pseudopotential_spec(&self) -> Result<Option<PseudopotentialSpec>> {
        let Some(table) = &self.pseudopotential else {
            return Ok(None);
        };
        let mut coefficients = BTreeMap::new();
        for (key, c) in table {
            let two_k: u32 = key.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "pseudopotential key {key:?} must be the integer 2k"
                ))
            })?;
            coefficients.insert(two_k, c.value()?);
        }
        PseudopotentialSpec::new(self.sites, self.statistics, coefficients)
            .map(Some)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianSpec> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let entries = t
                    .entries
                    .iter()
                    .map(|e| {
                        Ok(TermEntry::new(
                            e.create.clone(),
                            e.annihilate.clone(),
                            e.coefficient.value()?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                MBodyTerm::new(t.order, entries)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut spec = HamiltonianSpec {
            sites: self.sites,
            statistics: self.statistics,
            terms,
            pseudopotential: self.pseudopotential_spec()?,
            chemical_potential: None,
            hermiticity: self.hermiticity,
        };
        if let Some(mu) = &self.chemical_potential {
            spec = spec.with_chemical_potential(mu.value()?);
        }
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let spec = self.hamiltonian()?;
        let filling = self
            .filling
            .map(|f| FillingSpec::new(f.p, f.q, self.sites))
            .transpose()
            .map_err(|e| Error::Config(e.to_string()))?;
        let checks = self
            .run
            .checks
            .as_ref()
            .map(|names| {
                names
                    .iter()
                    .map(|n| {
                        RelationId::parse(n)
                            .ok_or_else(|| Error::Config(format!("unknown check {n:?}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        if let Some(checks) = &checks {
            if filling.is_none() {
                if let Some(c) = checks.iter().find(|c| c.needs_filling()) {
                    return Err(Error::Config(format!("check {c} needs a [filling] table")));
                }
            }
            if checks.contains(&RelationId::Weerasinghe) && spec.pseudopotential.is_none() {
                return Err(Error::Config(
                    "check weerasinghe needs a [pseudopotential] table".into(),
                ));
            }
        }
        if let Some([lo, hi]) = self.run.n {
            if lo > hi {
                return Err(Error::Config(format!(
                    "empty particle-number range [{lo}, {hi}]"
                )));
            }
        }
        self.solver
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "scenario".into()),
            spec,
            filling,
            n_range: self.run.n,
            checks,
            solver: self.solver.clone(),
            config: self.clone(),
        })
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        ScenarioConfig::from_toml_str(text)?.scenario()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}
