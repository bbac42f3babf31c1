//! Scenario configuration files (TOML).

use std::path::{Path, PathBuf};

use conformal_forms::fields::{random_lowfreq_form, FormField, TrigForm, TrigPolynomial};
use conformal_forms::grid::TorusGrid;
use conformal_forms::io::{load, Field};
use conformal_forms::solver::OPERATORS;
use conformal_forms::verification::MetricSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    /// Grid points per axis; one entry applies to every axis.
    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default = "flat")]
    pub metric: MetricSpec,
    #[serde(default)]
    pub k: usize,
    pub ell: Option<usize>,
    #[serde(default = "default_operator")]
    pub operator: String,
    pub input: Option<InputSpec>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tolerance: ToleranceSpec,
}

fn flat() -> MetricSpec {
    MetricSpec::Flat
}

fn default_operator() -> String {
    "Lk".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InputSpec {
    Random {
        seed: u64,
        #[serde(default = "one")]
        max_mode: usize,
    },
    File {
        path: PathBuf,
    },
    /// One trigonometric polynomial per component, in lexicographic multi-index order.
    Expression {
        components: Vec<TrigPolynomial>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    /// Overrides every identity tolerance in `verify`.
    pub identity: Option<f64>,
    /// Bound on the relative finite-difference discrepancy in `curvature --fd-check`.
    pub fd: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.normalize()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(InputSpec::File { path: p }) = &mut cfg.input {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(cfg)
    }

    fn normalize(&mut self) -> Result<(), String> {
        if self.n != 4 && self.n != 6 {
            return Err(format!("n must be 4 or 6, got {}", self.n));
        }
        match self.sizes.len() {
            0 => self.sizes = vec![if self.n == 4 { 16 } else { 8 }; self.n],
            1 => self.sizes = vec![self.sizes[0]; self.n],
            l if l == self.n => {}
            l => return Err(format!("sizes has {l} entries for n = {}", self.n)),
        }
        if let MetricSpec::Conformal { phi } = &self.metric {
            if phi.terms.iter().any(|t| t.mode.len() != self.n) {
                return Err(format!("every phi mode vector must have {} entries", self.n));
            }
        }
        if let Some(InputSpec::Expression { components }) = &self.input {
            if components.iter().flat_map(|c| &c.terms).any(|t| t.mode.len() != self.n) {
                return Err(format!("every input mode vector must have {} entries", self.n));
            }
        }
        Ok(())
    }

    /// Invariants needed by `compute`.
    pub fn validate_operator(&self) -> Result<(), String> {
        if !OPERATORS.contains(&self.operator.as_str()) {
            return Err(format!("unknown operator {}; expected one of {OPERATORS:?}", self.operator));
        }
        let half = self.n / 2;
        if self.k >= half {
            return Err(format!("k = {} out of range 0..={} at n = {}", self.k, half - 1, self.n));
        }
        if self.operator == "Dpk" && self.k == half - 1 {
            return Err(format!("Dpk is not defined at k = n/2-1 = {}", self.k));
        }
        if self.operator == "Lk_ell" {
            let ell = self.ell.ok_or("operator Lk_ell needs ell")?;
            if ell < 1 || ell > half - self.k {
                return Err(format!("ell = {ell} out of range 1..={} for k = {}", half - self.k, self.k));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TorusGrid, String> {
        TorusGrid::new(&self.sizes).map_err(|e| e.to_string())
    }

    pub fn input_form(&self, grid: &TorusGrid, seed: Option<u64>) -> Result<FormField, String> {
        let degree = self.k;
        let spec = self.input.clone().unwrap_or(InputSpec::Random { seed: 0, max_mode: 1 });
        let w = match spec {
            InputSpec::Random { seed: s, max_mode } => {
                random_lowfreq_form(grid, degree, max_mode, seed.unwrap_or(s)).map_err(|e| e.to_string())?
            }
            InputSpec::File { path } => match load(&path).map_err(|e| format!("{}: {e}", path.display()))? {
                Field::Form(w) => w,
                Field::Scalar(f) => FormField::from_scalar(&f),
                Field::Tensor(_) => return Err(format!("{}: expected a form, found a tensor", path.display())),
            },
            InputSpec::Expression { components } => {
                TrigForm { n: self.n, degree, comps: components.clone() }.sample_checked(grid).map_err(|e| e.to_string())?
            }
        };
        if w.degree != degree {
            return Err(format!("input has degree {}, operator {} at k = {} needs {degree}", w.degree, self.operator, self.k));
        }
        if w.grid.sizes() != grid.sizes() {
            return Err(format!("input grid {:?} differs from configured grid {:?}", w.grid.sizes(), grid.sizes()));
        }
        Ok(w)
    }
}
