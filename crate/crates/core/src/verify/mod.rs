//! Numerical checks of the structural statements behind the norm: metric
//! independence, the contraction bound, the composition and pullback
//! identities, Hamiltonicity of commutators, non-invariance, and the
//! boundedness estimates along a Cauchy ladder.
//!
//! Every check returns a [`CheckReport`]. A report passes exactly when each
//! residual is finite and at most its threshold.

mod cauchy;
mod identities;
mod lemma;
mod theorem1;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{self, random_closed_form, random_hamiltonian, random_path, shear_path, ClosedFormExpr, FieldExpr, PathExpr};
use crate::grid::{GridSpec, ScalarField};
use crate::hodge::MetricSpec;
use crate::isotopy::Isotopy;
use crate::metrics::NormContext;

pub use cauchy::{cauchy_demo, cauchy_report, check_prop6_bounds, weierstrass_ladder, CauchyDemoReport, LadderRow, WeierstrassConfig};
pub use identities::{check_prop1, check_prop3, check_prop4, check_prop5, Prop3Fixture, Prop5Fixture};
pub use lemma::{check_commutator, check_main_lemma_k, check_noninvariance};
pub use theorem1::{check_prop2, check_theorem1, contraction_ladder, contraction_ratio, estimate_contraction_constant, witness_ratio};

/// Curl tolerance for generators obtained by pushforward or composition.
pub const DERIVED_CLOSED_TOL: f64 = 1e-3;

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub residuals: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    pub pass: bool,
    pub fixtures: String,
    pub seed: u64,
    /// Reported quantities that are not asserted.
    #[serde(default)]
    pub info: BTreeMap<String, f64>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, fixtures: impl Into<String>, seed: u64) -> Self {
        Self {
            name: name.into(),
            residuals: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            pass: true,
            fixtures: fixtures.into(),
            seed,
            info: BTreeMap::new(),
        }
    }

    /// Records `residual ≤ threshold` under `key`.
    pub fn assert_le(&mut self, key: impl Into<String>, residual: f64, threshold: f64) {
        let key = key.into();
        self.residuals.insert(key.clone(), residual);
        self.thresholds.insert(key, threshold);
        self.recompute();
    }

    pub fn info(&mut self, key: impl Into<String>, value: f64) {
        self.info.insert(key.into(), value);
    }

    /// Copies the entries of `other` under `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: &CheckReport) {
        for (k, v) in &other.residuals {
            self.residuals.insert(format!("{prefix}.{k}"), *v);
        }
        for (k, v) in &other.thresholds {
            self.thresholds.insert(format!("{prefix}.{k}"), *v);
        }
        for (k, v) in &other.info {
            self.info.insert(format!("{prefix}.{k}"), *v);
        }
        self.recompute();
    }

    /// Replaces thresholds named `<check>.<key>` in `overrides`.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<String, f64>) {
        for (k, v) in overrides {
            if let Some(rest) = k.strip_prefix(&format!("{}.", self.name)) {
                if let Some(t) = self.thresholds.get_mut(rest) {
                    *t = *v;
                }
            }
        }
        self.recompute();
    }

    /// Names of the residuals above their thresholds.
    pub fn failures(&self) -> Vec<String> {
        self.residuals
            .iter()
            .filter(|(k, r)| !within(**r, self.thresholds.get(*k).copied()))
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn recompute(&mut self) {
        self.pass = self
            .residuals
            .iter()
            .all(|(k, r)| within(*r, self.thresholds.get(k).copied()));
    }
}

fn within(r: f64, t: Option<f64>) -> bool {
    matches!(t, Some(t) if r.is_finite() && r <= t)
}

/// Resolution, sampling and seeds for the whole suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub n: usize,
    pub n_t: usize,
    pub substeps: usize,
    pub seed: u64,
    pub samples: usize,
    pub prop2_samples: usize,
    pub prop2_cutoffs: Vec<usize>,
    pub weierstrass: WeierstrassConfig,
    /// Threshold overrides keyed `<check>.<residual>`.
    pub thresholds: BTreeMap<String, f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 64,
            n_t: 65,
            substeps: 4,
            seed: 20_240_617,
            samples: 100,
            prop2_samples: 1000,
            prop2_cutoffs: vec![1, 2, 4, 8],
            weierstrass: WeierstrassConfig::default(),
            thresholds: BTreeMap::new(),
        }
    }
}

impl VerifyConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::square(self.n)
    }

    /// Half the resolution in space and time.
    pub fn coarse(&self) -> Result<(GridSpec, usize)> {
        if self.n % 4 != 0 || self.n_t < 5 || (self.n_t - 1) % 2 != 0 {
            return Err(Error::InvalidArgument(
                "refinement studies need n divisible by 4 and odd n_t ≥ 5".into(),
            ));
        }
        Ok((GridSpec::square(self.n / 2)?, (self.n_t - 1) / 2 + 1))
    }
}

/// Names of the checks run by [`verify_all`], in order.
pub const CHECK_NAMES: [&str; 10] = [
    "theorem1",
    "prop1",
    "prop2",
    "prop3",
    "prop4",
    "prop5",
    "main_lemma_k",
    "commutator",
    "noninvariance",
    "prop6",
];

/// `diag(1 + 0.3 cos 2πy, 1)`.
pub fn wavy_metric(grid: GridSpec) -> Result<MetricSpec> {
    let g11 = ScalarField::from_fn(grid, |_, y| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * y).cos());
    MetricSpec::with_tag(g11, ScalarField::zeros(grid), ScalarField::constant(grid, 1.0), "diag(1+0.3cos2πy,1)")
}

fn sub_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt)
}

/// Random fixtures for the identity checks, drawn once per seed so the
/// coarse and fine runs see the same expressions.
struct Draws {
    paths: Vec<PathExpr>,
    hams: Vec<FieldExpr>,
    forms: Vec<ClosedFormExpr>,
}

impl Draws {
    fn new(seed: u64) -> Self {
        let mut r = fixtures::rng(sub_seed(seed, 1));
        let paths = (0..4).map(|_| random_path(&mut r, 2, 0.2, true, true)).collect();
        let hams = (0..4).map(|_| random_hamiltonian(&mut r, 2, 0.2, true)).collect();
        let forms = (0..2).map(|_| random_closed_form(&mut r, 2, 0.2, true)).collect();
        Self { paths, hams, forms }
    }
}

fn y_translation() -> PathExpr {
    PathExpr::translation(0.0, 0.3)
}

/// Runs one named check.
pub fn run_check(name: &str, cfg: &VerifyConfig) -> Result<CheckReport> {
    let grid = cfg.grid()?;
    let ctx = NormContext::flat(grid)?;
    let draws = Draws::new(cfg.seed);
    let (n_t, sub) = (cfg.n_t, cfg.substeps);
    let mut report = match name {
        "theorem1" => check_theorem1(&MetricSpec::flat(grid), &wavy_metric(grid)?, cfg.samples, cfg.seed)?,
        "prop2" => {
            let mut rep = CheckReport::new("prop2", "", cfg.seed);
            let ladders = [ctx.basis().h1().clone(), ctx.basis().h2().clone()]
                .iter()
                .map(|h| contraction_ladder(h, &cfg.prop2_cutoffs, cfg.samples, cfg.seed, &ctx))
                .collect::<Result<Vec<_>>>()?;
            let e0 = estimate_contraction_constant(ctx.basis().h1(), 0, cfg.samples, cfg.seed, &ctx)?;
            rep.assert_le("constants_E_minus_1", (e0 - 1.0).abs(), 1e-12);
            let mut fixtures = vec!["constants".to_string()];
            for (q, &n_cut) in cfg.prop2_cutoffs.iter().enumerate() {
                let e = ladders[0][q].1.max(ladders[1][q].1);
                rep.info(format!("E_N{n_cut}"), e);
                let w = witness_ratio(grid, n_cut, &ctx)?;
                rep.assert_le(format!("witness_rel_err_N{n_cut}"), (w / (std::f64::consts::PI * n_cut as f64) - 1.0).abs(), 0.02);
                if q > 0 {
                    let prev = ladders[0][q - 1].1.max(ladders[1][q - 1].1);
                    rep.assert_le(format!("monotone_N{n_cut}"), prev - e, 0.0);
                }
                let sub_rep = check_prop2(e, n_cut, cfg.prop2_samples, sub_seed(cfg.seed, 2 + q as u64), &ctx)?;
                rep.absorb(&format!("N{n_cut}"), &sub_rep);
                fixtures.push(format!("band-limited N={n_cut}"));
            }
            rep.fixtures = fixtures.join("; ");
            rep
        }
        "prop1" => {
            let mut rep = CheckReport::new("prop1", "", cfg.seed);
            let zero = FieldExpr::zero().series(grid, n_t)?;
            let shear = fixtures::shear_hamiltonian().series(grid, n_t)?;
            rep.absorb("shear_vs_zero", &check_prop1(&shear, &zero, sub, &ctx)?);
            for q in 0..2 {
                let h = draws.hams[2 * q].series(grid, n_t)?;
                let hp = draws.hams[2 * q + 1].series(grid, n_t)?;
                rep.absorb(&format!("random{q}"), &check_prop1(&h, &hp, sub, &ctx)?);
            }
            rep.fixtures = "shear vs 0; two random Hamiltonian pairs".into();
            rep
        }
        "prop3" => refine(cfg, "prop3", "random", |g, nt| {
            let c = NormContext::flat(g)?;
            check_prop3(&prop3_fixtures(g, nt, sub, &draws)?, &c)
        })?,
        "prop4" => refine(cfg, "prop4", "random.forward", |g, nt| {
            let c = NormContext::flat(g)?;
            let tr = y_translation().isotopy(g, nt, sub)?;
            let pairs = vec![
                ("translation".to_string(), tr.clone(), PathExpr::translation(0.2, -0.1).isotopy(g, nt, sub)?),
                ("ytranslation_shear".to_string(), tr, shear_path().isotopy(g, nt, sub)?),
                ("random".to_string(), draws.paths[0].isotopy(g, nt, sub)?, draws.paths[1].isotopy(g, nt, sub)?),
            ];
            check_prop4(&pairs, &c)
        })?,
        "prop5" => refine(cfg, "prop5", "random", |g, nt| {
            let dy = ClosedFormExpr {
                b: FieldExpr::constant(1.0),
                ..ClosedFormExpr::default()
            };
            let fx = vec![
                Prop5Fixture::new("shear_dy", shear_path().isotopy(g, nt, sub)?, dy.series(g, nt)?),
                Prop5Fixture::new("random", draws.paths[2].isotopy(g, nt, sub)?, draws.forms[0].series(g, nt)?),
            ];
            check_prop5(&fx)
        })?,
        "main_lemma_k" => {
            let mut rep = CheckReport::new("main_lemma_k", "", cfg.seed);
            let pairs = [
                ("translation_shear", y_translation(), shear_path()),
                ("random0", draws.paths[0].clone(), draws.paths[1].clone()),
                ("random1", draws.paths[2].clone(), draws.paths[3].clone()),
            ];
            for (name, p, q) in pairs {
                let sub_rep = check_main_lemma_k(&p.isotopy(grid, n_t, sub)?, &q.isotopy(grid, n_t, sub)?, &ctx)?;
                rep.absorb(name, &sub_rep);
            }
            rep.fixtures = "y-translation × shear; two random pairs".into();
            rep
        }
        "commutator" => {
            let mut rep = CheckReport::new("commutator", "", cfg.seed);
            let t1 = PathExpr::translation(0.3, 0.0).isotopy(grid, n_t, sub)?;
            let t2 = y_translation().isotopy(grid, n_t, sub)?;
            let mut commuting = check_commutator(&t1, &t2, &ctx)?;
            for t in commuting.thresholds.values_mut() {
                *t = 1e-8;
            }
            commuting.recompute();
            rep.absorb("translations", &commuting);
            let sh = shear_path().isotopy(grid, n_t, sub)?;
            rep.absorb("ytranslation_shear", &check_commutator(&t2, &sh, &ctx)?);
            let (p, q) = (draws.paths[0].isotopy(grid, n_t, sub)?, draws.paths[3].isotopy(grid, n_t, sub)?);
            rep.absorb("random", &check_commutator(&p, &q, &ctx)?);
            rep.fixtures = "two translations; y-translation × shear; random pair".into();
            rep
        }
        "noninvariance" => check_noninvariance(&ctx, cfg.seed)?,
        "prop6" => {
            let mut rep = CheckReport::new("prop6", "", cfg.seed);
            let plain = WeierstrassConfig {
                translation: None,
                ..cfg.weierstrass.clone()
            };
            let shifted = WeierstrassConfig {
                translation: Some(cfg.weierstrass.translation.unwrap_or([0.3, 0.0])),
                ..cfg.weierstrass.clone()
            };
            rep.absorb("weierstrass", &check_prop6_bounds(&weierstrass_ladder(&plain, grid, n_t, sub)?, &ctx)?);
            rep.absorb("translated", &check_prop6_bounds(&weierstrass_ladder(&shifted, grid, n_t, sub)?, &ctx)?);
            rep.fixtures = format!("Weierstrass ladder a={}, b={}, levels={}, with and without translation", plain.a, plain.b, plain.n_levels);
            rep
        }
        other => return Err(Error::InvalidArgument(format!("unknown check {other:?}"))),
    };
    report.name = name.to_string();
    report.seed = cfg.seed;
    report.apply_overrides(&cfg.thresholds);
    Ok(report)
}

fn prop3_fixtures(grid: GridSpec, n_t: usize, substeps: usize, draws: &Draws) -> Result<Vec<Prop3Fixture>> {
    let mut r = fixtures::rng(sub_seed(0, 3));
    let theta = draws.forms[1].form(grid, 0.0)?;
    let x = random_path(&mut r, 2, 0.2, true, false).field(grid, 0.0)?;
    let shear = shear_path().isotopy(grid, n_t, substeps)?;
    let random = draws.paths[1].isotopy(grid, n_t, substeps)?;
    let quarter = (n_t - 1) / 4;
    Ok(vec![
        Prop3Fixture::new("identity", Isotopy::identity(grid, 2)?.endpoint(), theta.clone(), x.clone()),
        Prop3Fixture::new("translation", PathExpr::translation(0.3, 0.1).isotopy(grid, 2, 1)?.endpoint(), theta.clone(), x.clone()),
        Prop3Fixture::new("shear_quarter", shear.map(quarter), theta.clone(), x.clone()),
        Prop3Fixture::new("random", random.endpoint(), theta, x),
    ])
}

/// Runs `f` at the configured and at half resolution. The report is the
/// fine one, plus `refine_ratio`, the fine/coarse ratio of residual `key`.
fn refine(
    cfg: &VerifyConfig,
    name: &str,
    key: &str,
    f: impl Fn(GridSpec, usize) -> Result<CheckReport>,
) -> Result<CheckReport> {
    let fine = f(cfg.grid()?, cfg.n_t)?;
    let (cg, cnt) = cfg.coarse()?;
    let coarse = f(cg, cnt)?;
    let mut rep = CheckReport::new(name, fine.fixtures.clone(), cfg.seed);
    rep.absorb("fine", &fine);
    let (rf, rc) = match (fine.residuals.get(key), coarse.residuals.get(key)) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::InvalidArgument(format!("{name}: no residual {key}"))),
    };
    rep.info(format!("coarse.{key}"), rc);
    let limit = if name == "prop5" { 0.25 } else { 0.5 };
    rep.assert_le("refine_ratio", rf / rc, limit);
    rep.fixtures = format!("{}; refinement on {key}", fine.fixtures);
    Ok(rep)
}

/// Runs every check. Checks run on separate threads; the result order
/// follows [`CHECK_NAMES`].
pub fn verify_all(cfg: &VerifyConfig) -> Result<Vec<CheckReport>> {
    std::thread::scope(|s| {
        let handles: Vec<_> = CHECK_NAMES.iter().map(|name| s.spawn(move || run_check(name, cfg))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::InvalidArgument("check panicked".into()))))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_tracks_thresholds() {
        let mut r = CheckReport::new("x", "f", 1);
        assert!(r.pass);
        r.assert_le("a", 0.5, 1.0);
        assert!(r.pass);
        r.assert_le("b", 2.0, 1.0);
        assert!(!r.pass);
        assert_eq!(r.failures(), vec!["b".to_string()]);
        let mut over = BTreeMap::new();
        over.insert("x.b".to_string(), 3.0);
        r.apply_overrides(&over);
        assert!(r.pass);
        r.assert_le("c", f64::NAN, 1.0);
        assert!(!r.pass);
    }

    #[test]
    fn absorb_prefixes_keys() {
        let mut inner = CheckReport::new("i", "", 0);
        inner.assert_le("r", 1.0, 2.0);
        inner.info("e", 4.0);
        let mut outer = CheckReport::new("o", "", 0);
        outer.absorb("p", &inner);
        assert_eq!(outer.residuals["p.r"], 1.0);
        assert_eq!(outer.info["p.e"], 4.0);
        assert!(outer.pass);
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let c = VerifyConfig::default();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<VerifyConfig>(&s).unwrap(), c);
        assert!(serde_json::from_str::<VerifyConfig>(r#"{"bogus": 1}"#).is_err());
        let (g, nt) = c.coarse().unwrap();
        assert_eq!((g.n_x(), nt), (32, 33));
    }

    #[test]
    fn unknown_check_is_an_error() {
        assert!(run_check("nope", &VerifyConfig::default()).is_err());
    }
}
