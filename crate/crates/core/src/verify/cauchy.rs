//! The Weierstrass ladder `Hⁿ(y) = Σ_{k≤n} aᵏ cos(2πbᵏy)/(2πbᵏ)`: a
//! sequence of shear isotopies that is Cauchy for `d_symp` and converges in
//! C⁰ to a map with a nowhere-differentiable displacement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{CheckReport, DERIVED_CLOSED_TOL};
use crate::error::{Error, Result};
use crate::fixtures::{FieldExpr, PathExpr, Term};
use crate::grid::{omega_contract, time_integral, GridSpec, TimeSeries};
use crate::isotopy::{c0_map_distance, inverse_isotopy, DisplacementField, Isotopy, MapPair};
use crate::metrics::{d0, distance, isotopy_length, NormContext, TimeMode};

const TAU: f64 = 2.0 * PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeierstrassConfig {
    pub a: f64,
    pub b: u32,
    pub n_levels: usize,
    /// Constant translation added to every level.
    pub translation: Option<[f64; 2]>,
}

impl Default for WeierstrassConfig {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 4,
            n_levels: 3,
            translation: None,
        }
    }
}

impl WeierstrassConfig {
    pub fn validate(&self, grid: GridSpec) -> Result<()> {
        if !(self.a > 0.0 && self.a < 1.0) || self.b < 2 || self.a * self.b as f64 <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "need 0 < a < 1, b ≥ 2 and ab > 1 (a = {}, b = {})",
                self.a, self.b
            )));
        }
        if self.n_levels == 0 {
            return Err(Error::InvalidArgument("n_levels must be at least 1".into()));
        }
        let top = (self.b as usize).checked_pow(self.n_levels as u32 - 1).unwrap_or(usize::MAX);
        let limit = grid.n_y() / 4;
        if top > limit {
            return Err(Error::NyquistExceeded { frequency: top, limit });
        }
        Ok(())
    }

    fn shift(&self) -> [f64; 2] {
        self.translation.unwrap_or([0.0, 0.0])
    }

    /// `Hⁿ` for level `n ≥ 0`.
    pub fn hamiltonian(&self, n: usize) -> FieldExpr {
        FieldExpr::new(
            (0..=n)
                .map(|k| {
                    let bk = (self.b as i64).pow(k as u32);
                    Term::cos(self.a.powi(k as i32) / (TAU * bk as f64), 0, bk)
                })
                .collect(),
        )
    }

    pub fn path(&self, n: usize) -> PathExpr {
        let [tx, ty] = self.shift();
        PathExpr {
            a: FieldExpr::constant(tx),
            b: FieldExpr::constant(ty),
            h: self.hamiltonian(n),
        }
    }

    /// `∫₀ᵗ f(y + t_y s) ds` for `f(y) = −Σ_{k≤n} aᵏ sin(2πbᵏy)`.
    fn drift(&self, n: usize, y: f64, t: f64) -> f64 {
        let ty = self.shift()[1];
        (0..=n)
            .map(|k| {
                let ak = self.a.powi(k as i32);
                let w = TAU * (self.b as f64).powi(k as i32);
                if ty.abs() < 1e-14 {
                    -ak * (w * y).sin() * t
                } else {
                    ak * ((w * (y + ty * t)).cos() - (w * y).cos()) / (w * ty)
                }
            })
            .sum()
    }

    /// Closed-form time-`t` map of level `n`, with its inverse.
    pub fn exact_map(&self, grid: GridSpec, n: usize, t: f64) -> Result<MapPair> {
        let [tx, ty] = self.shift();
        let fwd = DisplacementField::from_fn(grid, |_, y| (tx * t + self.drift(n, y, t), ty * t))?;
        let inv = DisplacementField::from_fn(grid, |_, y| {
            let y0 = y - ty * t;
            (-tx * t - self.drift(n, y0, t), -ty * t)
        })?;
        MapPair::from_parts(fwd, inv)
    }
}

/// Integrated isotopies for levels `0..n_levels`.
pub fn weierstrass_ladder(cfg: &WeierstrassConfig, grid: GridSpec, n_t: usize, substeps: usize) -> Result<Vec<Isotopy>> {
    cfg.validate(grid)?;
    (0..cfg.n_levels).map(|n| cfg.path(n).isotopy(grid, n_t, substeps)).collect()
}

/// One entry of the pairwise distance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: usize,
    pub m: usize,
    pub d_symp: f64,
    pub c0: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyDemoReport {
    pub a: f64,
    pub b: u32,
    pub n_levels: usize,
    pub translation: [f64; 2],
    /// `d_symp(Φⁿ, Φⁿ⁺¹)`.
    pub increments: Vec<f64>,
    /// Ratios of consecutive increments.
    pub increment_ratios: Vec<f64>,
    /// `sup_t d̄(φⁿ_t, φ_t)` against the closed-form top-level flow.
    pub to_last: Vec<f64>,
    /// `∫ λ(t) dt` for each level.
    pub integrated_harmonic: Vec<[f64; 2]>,
    /// Max second difference (over `h²`) of the time-1 displacement.
    pub roughness: Vec<f64>,
    pub roughness_growth: Vec<f64>,
    /// All pairs `n < m`.
    pub rows: Vec<LadderRow>,
}

impl CauchyDemoReport {
    /// CSV of the pairwise table.
    pub fn ladder_csv(&self) -> String {
        let mut s = String::from("n,m,d_symp,c0,D\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:e},{:e},{:e}\n", r.n, r.m, r.d_symp, r.c0, r.d));
        }
        s
    }
}

fn roughness(d: &DisplacementField) -> f64 {
    let g = d.grid();
    let (nx, ny) = (g.n_x(), g.n_y());
    let h2 = g.h_y() * g.h_y();
    let mut worst = 0.0_f64;
    for comp in [d.d_x(), d.d_y()] {
        for j in 0..ny {
            let (jm, jp) = ((j + ny - 1) % ny, (j + 1) % ny);
            for i in 0..nx {
                let v = comp[jp * nx + i] - 2.0 * comp[j * nx + i] + comp[jm * nx + i];
                worst = worst.max(v.abs() / h2);
            }
        }
    }
    worst
}

/// Builds the ladder and reports distances, C⁰ convergence, harmonic data
/// and roughness.
pub fn cauchy_demo(
    cfg: &WeierstrassConfig,
    grid: GridSpec,
    n_t: usize,
    substeps: usize,
    ctx: &NormContext,
) -> Result<CauchyDemoReport> {
    let ladder = weierstrass_ladder(cfg, grid, n_t, substeps)?;
    cauchy_report(cfg, &ladder, ctx)
}

/// Report for an already integrated ladder.
pub fn cauchy_report(cfg: &WeierstrassConfig, ladder: &[Isotopy], ctx: &NormContext) -> Result<CauchyDemoReport> {
    let relaxed = ctx.clone().with_closed_tol(DERIVED_CLOSED_TOL.max(ctx.closed_tol()));
    let grid = ctx.grid();
    let top = ladder.len().saturating_sub(1);
    let mut rows = Vec::new();
    for n in 0..ladder.len() {
        for m in n + 1..ladder.len() {
            let r = distance(&ladder[n], &ladder[m], &relaxed, TimeMode::L1)?;
            rows.push(LadderRow {
                n,
                m,
                d_symp: r.total,
                c0: r.c0,
                d: r.d,
            });
        }
    }
    let increments: Vec<f64> = rows.iter().filter(|r| r.m == r.n + 1).map(|r| r.d_symp).collect();
    let increment_ratios = increments.windows(2).map(|w| w[1] / w[0]).collect();
    let mut to_last = Vec::with_capacity(ladder.len());
    let mut integrated_harmonic = Vec::with_capacity(ladder.len());
    let mut rough = Vec::with_capacity(ladder.len());
    for iso in ladder {
        let mut worst = 0.0_f64;
        for i in 0..iso.n_t() {
            let t = iso.flow().time(i);
            worst = worst.max(c0_map_distance(&iso.map(i), &cfg.exact_map(grid, top, t)?)?);
        }
        to_last.push(worst);
        let coeffs: Vec<[f64; 2]> = iso
            .generator()
            .iter()
            .map(|x| ctx.basis().coefficients(&omega_contract(x)))
            .collect();
        let integ = |q: usize| -> Result<f64> {
            Ok(time_integral(&TimeSeries::new(coeffs.iter().map(|c| c[q]).collect())?))
        };
        integrated_harmonic.push([integ(0)?, integ(1)?]);
        rough.push(roughness(iso.flow().last()));
    }
    let roughness_growth = rough.windows(2).map(|w| w[1] / w[0]).collect();
    Ok(CauchyDemoReport {
        a: cfg.a,
        b: cfg.b,
        n_levels: cfg.n_levels,
        translation: cfg.shift(),
        increments,
        increment_ratios,
        to_last,
        integrated_harmonic,
        roughness: rough,
        roughness_growth,
        rows,
    })
}

/// `D(A, B)` with both inverses supplied.
fn sym_d(a: &Isotopy, a_inv: &Isotopy, b: &Isotopy, b_inv: &Isotopy, ctx: &NormContext) -> Result<f64> {
    Ok((d0(a, b, ctx, TimeMode::L1)? + d0(a_inv, b_inv, ctx, TimeMode::L1)?) / 2.0)
}

/// `l((Φⁿ)⁻¹) ≤ D((Φⁿ)⁻¹, Φ^{n₀}) + l(Φ^{n₀})` and
/// `∫|ℋ^m_t| dt ≤ D(Φᵐ, Φ^{n₀}) + ∫|ℋ^{n₀}_t| dt` over all rungs.
pub fn check_prop6_bounds(ladder: &[Isotopy], ctx: &NormContext) -> Result<CheckReport> {
    let relaxed = ctx.clone().with_closed_tol(DERIVED_CLOSED_TOL.max(ctx.closed_tol()));
    let inverses = ladder.iter().map(inverse_isotopy).collect::<Result<Vec<_>>>()?;
    let len = ladder.iter().map(|p| isotopy_length(p, &relaxed)).collect::<Result<Vec<_>>>()?;
    let len_inv = inverses.iter().map(|p| isotopy_length(p, &relaxed)).collect::<Result<Vec<_>>>()?;
    let coeffs: Vec<Vec<[f64; 2]>> = ladder
        .iter()
        .map(|p| p.generator().iter().map(|x| ctx.basis().coefficients(&omega_contract(x))).collect())
        .collect();
    let harm_int = |f: &dyn Fn(usize) -> f64, n_t: usize| -> Result<f64> {
        Ok(time_integral(&TimeSeries::new((0..n_t).map(f).collect())?))
    };
    let n_t = ladder.first().map_or(2, Isotopy::n_t);
    let harm = (0..ladder.len())
        .map(|m| harm_int(&|i| coeffs[m][i][0].abs() + coeffs[m][i][1].abs(), n_t))
        .collect::<Result<Vec<_>>>()?;

    let (mut ex1, mut ex2, mut ex3, mut variant) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for n in 0..ladder.len() {
        for n0 in 0..ladder.len() {
            let d_lit = sym_d(&inverses[n], &ladder[n], &ladder[n0], &inverses[n0], &relaxed)?;
            ex1 = ex1.max(len_inv[n] - (d_lit + len[n0]));
            let d_fwd = sym_d(&ladder[n], &inverses[n], &ladder[n0], &inverses[n0], &relaxed)?;
            variant = variant.max(len_inv[n] - (d_fwd + len[n0]));
            ex2 = ex2.max(harm[n] - (d_fwd + harm[n0]));
            let diff = harm_int(
                &|i| (coeffs[n][i][0] - coeffs[n0][i][0]).abs() + (coeffs[n][i][1] - coeffs[n0][i][1]).abs(),
                n_t,
            )?;
            ex3 = ex3.max(harm[n] - (diff + harm[n0]));
        }
    }
    let mut rep = CheckReport::new("prop6", format!("ladder of {} isotopies", ladder.len()), 0);
    rep.assert_le("inverse_length_bound", ex1, 1e-6);
    rep.assert_le("harmonic_bound", ex2, 1e-6);
    rep.assert_le("harmonic_triangle", ex3, 1e-6);
    rep.info("sup_inverse_length", len_inv.iter().copied().fold(0.0, f64::max));
    rep.info("sup_harmonic_integral", harm.iter().copied().fold(0.0, f64::max));
    rep.info("forward_distance_variant_excess", variant);
    Ok(rep)
}
