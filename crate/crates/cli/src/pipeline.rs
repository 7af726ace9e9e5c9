//! Turns a configuration into jet fields at the requested resolutions.

use crate::config::{BoundarySpec, CaseConfig, CaseSpec};
use crate::CliError;
use harmap_core::functionals::CaseInfo;
use harmap_core::grid::JetField;
use harmap_core::solver::{jet_field, solve};
use harmap_core::{AnalyticFamily, BoundaryData, DiscreteMap, DomainSpec, Exec, TensorGrid};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub enum Source {
    Analytic(AnalyticFamily),
    Solver {
        domain: DomainSpec,
        boundary: BoundarySpec,
        tol: f64,
        max_iter: usize,
        base_dir: PathBuf,
    },
}

#[derive(Debug, Clone)]
pub struct Case {
    pub info: CaseInfo,
    pub source: Source,
}

pub fn analytic_family(
    family: &str,
    params: &BTreeMap<String, f64>,
    domain: Option<DomainSpec>,
    ambient_dim: Option<usize>,
) -> Result<AnalyticFamily, CliError> {
    let mut fam = AnalyticFamily::by_name(family, params)?;
    if let Some(d) = domain {
        fam = fam.with_domain(d)?;
    }
    if let Some(n) = ambient_dim {
        fam = fam.with_ambient_dim(n)?;
    }
    Ok(fam)
}

impl Case {
    /// `base_dir` resolves relative paths inside the config.
    pub fn from_config(cfg: &CaseConfig, base_dir: &Path) -> Result<Self, CliError> {
        Self::from_spec(&cfg.case, base_dir)
    }

    pub fn from_spec(spec: &CaseSpec, base_dir: &Path) -> Result<Self, CliError> {
        match spec {
            CaseSpec::Analytic {
                family,
                params,
                domain,
                ambient_dim,
            } => {
                let fam = analytic_family(family, params, *domain, *ambient_dim)?;
                let info = CaseInfo {
                    name: fam.name().to_string(),
                    source: "analytic".into(),
                    params: fam.family.params(),
                    harmonic_asserted: fam.meta.is_harmonic,
                    conformal: fam.meta.is_conformal,
                    minimal_image: fam.meta.is_minimal_image,
                    degree_one: fam.meta.degree_one,
                };
                Ok(Case {
                    info,
                    source: Source::Analytic(fam),
                })
            }
            CaseSpec::Solver {
                domain,
                boundary,
                tol,
                max_iter,
            } => {
                domain
                    .validate()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let (name, params) = match boundary {
                    BoundarySpec::Trace { family, params, .. } => {
                        let fam = analytic_family(family, params, None, None)?;
                        (format!("solver:{}", fam.name()), fam.family.params())
                    }
                    BoundarySpec::Constant { .. } => ("solver:constant".into(), BTreeMap::new()),
                    BoundarySpec::Table { .. } => ("solver:table".into(), BTreeMap::new()),
                };
                Ok(Case {
                    info: CaseInfo {
                        name,
                        source: "solver".into(),
                        params,
                        // confirmed per resolution by the solver residual
                        harmonic_asserted: true,
                        conformal: None,
                        minimal_image: None,
                        degree_one: true,
                    },
                    source: Source::Solver {
                        domain: *domain,
                        boundary: boundary.clone(),
                        tol: *tol,
                        max_iter: *max_iter,
                        base_dir: base_dir.to_path_buf(),
                    },
                })
            }
        }
    }

    pub fn boundary_data(&self, grid: &TensorGrid) -> Result<BoundaryData, CliError> {
        let Source::Solver {
            domain,
            boundary,
            base_dir,
            ..
        } = &self.source
        else {
            return Err(CliError::Config("case has no boundary data".into()));
        };
        let data = match boundary {
            BoundarySpec::Trace {
                family,
                params,
                ambient_dim,
            } => {
                let mut fam = AnalyticFamily::by_name(family, params)?;
                fam.domain = *domain;
                if let Some(n) = ambient_dim {
                    fam = fam.with_ambient_dim(*n)?;
                }
                BoundaryData::from_family(grid, &fam)?
            }
            BoundarySpec::Constant { value } => BoundaryData::constant(grid, value)?,
            BoundarySpec::Table { values, path } => {
                let rows = match (values, path) {
                    (Some(v), None) => v.clone(),
                    (None, Some(p)) => read_table(&base_dir.join(p))?,
                    _ => {
                        return Err(CliError::Config(
                            "table boundary needs exactly one of `values` or `path`".into(),
                        ))
                    }
                };
                BoundaryData::from_table(grid, rows)?
            }
        };
        Ok(data)
    }

    pub fn solve(&self, resolution: usize, exec: Exec) -> Result<DiscreteMap, CliError> {
        let Source::Solver {
            domain,
            tol,
            max_iter,
            ..
        } = &self.source
        else {
            return Err(CliError::Config("`solve` needs a solver case".into()));
        };
        let grid = TensorGrid::new(domain, resolution);
        let data = self.boundary_data(&grid)?;
        Ok(solve(domain, resolution, &data, *tol, *max_iter, exec)?)
    }

    pub fn field(&self, resolution: usize, exec: Exec) -> Result<JetField, CliError> {
        match &self.source {
            Source::Analytic(fam) => Ok(fam.sample_grid(resolution, exec)?),
            Source::Solver { .. } => Ok(jet_field(&self.solve(resolution, exec)?, exec)),
        }
    }

    pub fn analytic(&self) -> Option<&AnalyticFamily> {
        match &self.source {
            Source::Analytic(f) => Some(f),
            Source::Solver { .. } => None,
        }
    }
}

fn read_table(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(n, l)| {
            l.split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        CliError::Config(format!("{}:{}: bad number `{s}`", path.display(), n + 1))
                    })
                })
                .collect()
        })
        .collect()
}
