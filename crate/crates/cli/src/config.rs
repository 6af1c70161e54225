//! Scenario files.
//!
//! A scenario is a TOML document. Every table rejects unknown keys. Field
//! expressions are lists of terms `{ amp, wave = "cos" | "sin" | "const",
//! kx, ky, kt }`, each meaning `amp · wave(2π(kx x + ky y + kt t))`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use symtorus::fixtures::{shear_hamiltonian, ClosedFormExpr, FieldExpr, PathExpr, Term};
use symtorus::hodge::{harmonic_basis, transport_basis};
use symtorus::verify::{VerifyConfig, WeierstrassConfig};
use symtorus::{GridSpec, HarmonicBasis, MetricSpec, NormContext, OptConfig, PathAnsatz};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Output directory; the command line flag and then the environment
    /// take over when absent.
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub metric: MetricConfig,
    pub basis: BasisConfig,
    /// Closed 1-forms `a dx + b dy + du`.
    pub forms: BTreeMap<String, ClosedFormExpr>,
    /// Symplectic generator paths `(a, b) + X_h`.
    pub paths: BTreeMap<String, PathExpr>,
    pub weierstrass: WeierstrassConfig,
    pub hofer: HoferConfig,
    pub verify: VerifySection,
    /// Overrides keyed `<check>.<residual>`.
    pub thresholds: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_x: usize,
    pub n_y: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_x: 64, n_y: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub n_t: usize,
    pub substeps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { n_t: 65, substeps: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MetricConfig {
    Flat {},
    /// Pointwise coefficients; missing entries default to the flat metric.
    Fields {
        #[serde(default = "one")]
        g11: FieldExpr,
        #[serde(default)]
        g12: FieldExpr,
        #[serde(default = "one")]
        g22: FieldExpr,
        #[serde(default)]
        tag: Option<String>,
    },
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig::Flat {}
    }
}

fn one() -> FieldExpr {
    FieldExpr::constant(1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    /// Harmonic parts of `dx` and `dy` for the configured metric.
    #[default]
    Canonical,
    /// The flat basis `{dx, dy}` carried to the configured metric.
    Transported,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub kind: BasisKind,
    /// Per-element rescaling `{c₁h₁, c₂h₂}`.
    pub scale: [f64; 2],
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            kind: BasisKind::Canonical,
            scale: [1.0, 1.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoferConfig {
    pub n_harm_t: usize,
    pub n_harm_xy: usize,
    pub opt: OptConfig,
}

impl Default for HoferConfig {
    fn default() -> Self {
        Self {
            n_harm_t: 1,
            n_harm_xy: 1,
            opt: OptConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub samples: usize,
    pub prop2_samples: usize,
    pub prop2_cutoffs: Vec<usize>,
}

impl Default for VerifySection {
    fn default() -> Self {
        let v = VerifyConfig::default();
        Self {
            samples: v.samples,
            prop2_samples: v.prop2_samples,
            prop2_cutoffs: v.prop2_cutoffs,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut forms = BTreeMap::new();
        forms.insert(
            "three_dx".to_string(),
            ClosedFormExpr {
                a: FieldExpr::constant(3.0),
                u: FieldExpr::new(vec![Term::sin(1.0, 1, 0)]),
                ..ClosedFormExpr::default()
            },
        );
        let mut paths = BTreeMap::new();
        paths.insert(
            "norm_fixture".to_string(),
            PathExpr {
                a: FieldExpr::constant(3.0),
                h: FieldExpr::new(vec![Term::sin(1.0 / (2.0 * std::f64::consts::PI), 1, 0)]),
                ..PathExpr::default()
            },
        );
        paths.insert("translation_a".to_string(), PathExpr::translation(0.3, 0.0));
        paths.insert("translation_b".to_string(), PathExpr::translation(0.1, 0.0));
        paths.insert("shear".to_string(), PathExpr::hamiltonian(shear_hamiltonian()));
        Self {
            seed: VerifyConfig::default().seed,
            output_dir: None,
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            metric: MetricConfig::default(),
            basis: BasisConfig::default(),
            forms,
            paths,
            weierstrass: WeierstrassConfig::default(),
            hofer: HoferConfig::default(),
            verify: VerifySection::default(),
            thresholds: BTreeMap::new(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked without running a computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.grid_spec()?;
        if self.time.n_t < 2 || self.time.substeps == 0 {
            return Err(invalid("time: need n_t ≥ 2 and substeps ≥ 1"));
        }
        for (name, f) in &self.forms {
            for e in [&f.a, &f.b, &f.u] {
                e.check_grid(grid).map_err(|e| invalid(format!("forms.{name}: {e}")))?;
            }
            f.form(grid, 0.0).map_err(|e| invalid(format!("forms.{name}: {e}")))?;
        }
        for (name, p) in &self.paths {
            for e in [&p.a, &p.b, &p.h] {
                e.check_grid(grid).map_err(|e| invalid(format!("paths.{name}: {e}")))?;
            }
            p.field(grid, 0.0).map_err(|e| invalid(format!("paths.{name}: {e}")))?;
        }
        self.metric_spec()?;
        if !self.basis.scale.iter().all(|c| c.is_finite() && *c != 0.0) {
            return Err(invalid("basis.scale entries must be finite and nonzero"));
        }
        for key in self.thresholds.keys() {
            let check = key.split('.').next().unwrap_or_default();
            if !symtorus::verify::CHECK_NAMES.contains(&check) || !key.contains('.') {
                return Err(invalid(format!("thresholds: {key:?} is not <check>.<residual>")));
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(self.grid.n_x, self.grid.n_y).map_err(|e| invalid(format!("grid: {e}")))
    }

    pub fn metric_spec(&self) -> Result<MetricSpec, CliError> {
        let grid = self.grid_spec()?;
        match &self.metric {
            MetricConfig::Flat {} => Ok(MetricSpec::flat(grid)),
            MetricConfig::Fields { g11, g12, g22, tag } => {
                let field = |e: &FieldExpr, what: &str| {
                    e.check_grid(grid)
                        .and_then(|_| e.scalar(grid, 0.0))
                        .map_err(|err| invalid(format!("metric.{what}: {err}")))
                };
                let tag = tag.clone().unwrap_or_else(|| "fields".to_string());
                MetricSpec::with_tag(field(g11, "g11")?, field(g12, "g12")?, field(g22, "g22")?, tag)
                    .map_err(|e| invalid(format!("metric: {e}")))
            }
        }
    }

    /// Basis for the configured metric; solver failures are numerical errors.
    pub fn basis(&self) -> Result<HarmonicBasis, CliError> {
        let metric = self.metric_spec()?;
        let basis = match self.basis.kind {
            BasisKind::Canonical => harmonic_basis(&metric)?,
            BasisKind::Transported => transport_basis(&harmonic_basis(&MetricSpec::flat(metric.grid()))?, &metric)?,
        };
        let [c1, c2] = self.basis.scale;
        if (c1, c2) == (1.0, 1.0) {
            Ok(basis)
        } else {
            Ok(basis.rescaled(c1, c2)?)
        }
    }

    pub fn norm_context(&self) -> Result<NormContext, CliError> {
        Ok(NormContext::new(self.basis()?))
    }

    pub fn form(&self, name: &str) -> Result<&ClosedFormExpr, CliError> {
        self.forms
            .get(name)
            .ok_or_else(|| invalid(format!("no form named {name:?} (have {:?})", self.forms.keys().collect::<Vec<_>>())))
    }

    pub fn path(&self, name: &str) -> Result<&PathExpr, CliError> {
        self.paths
            .get(name)
            .ok_or_else(|| invalid(format!("no path named {name:?} (have {:?})", self.paths.keys().collect::<Vec<_>>())))
    }

    pub fn ansatz(&self) -> PathAnsatz {
        PathAnsatz::new(self.hofer.n_harm_t, self.hofer.n_harm_xy)
    }

    /// The ladder parameters, checked against the grid.
    pub fn weierstrass(&self) -> Result<&WeierstrassConfig, CliError> {
        self.weierstrass
            .validate(self.grid_spec()?)
            .map_err(|e| invalid(format!("weierstrass: {e}")))?;
        Ok(&self.weierstrass)
    }

    pub fn verify_config(&self) -> Result<VerifyConfig, CliError> {
        if self.grid.n_x != self.grid.n_y {
            return Err(invalid("verify runs on square grids only"));
        }
        self.weierstrass()?;
        Ok(VerifyConfig {
            n: self.grid.n_x,
            n_t: self.time.n_t,
            substeps: self.time.substeps,
            seed: self.seed,
            samples: self.verify.samples,
            prop2_samples: self.verify.prop2_samples,
            prop2_cutoffs: self.verify.prop2_cutoffs.clone(),
            weierstrass: self.weierstrass.clone(),
            thresholds: self.thresholds.clone(),
        })
    }
}
