//! Closed-form field expressions and seeded, band-limited random fixtures.
//!
//! A [`FieldExpr`] is a finite sum of terms `amp · w(2π(kx·x + ky·y + kt·t))`
//! with `w ∈ {cos, sin, 1}`. It is the vocabulary used for metrics, forms,
//! Hamiltonians and generator paths in configs and tests.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{d_scalar, hamiltonian_vector_field, GridSpec, OneForm, ScalarField, TimeSeries, VectorField};
use crate::isotopy::{integrate_flow, GeneratorPath, Isotopy};

const TAU: f64 = 2.0 * PI;

/// Deterministic generator used by every seeded fixture.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    #[default]
    Cos,
    Sin,
    Const,
}

/// One term `amp · w(2π(kx·x + ky·y + kt·t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub amp: f64,
    #[serde(default)]
    pub wave: Wave,
    #[serde(default)]
    pub kx: i64,
    #[serde(default)]
    pub ky: i64,
    #[serde(default)]
    pub kt: i64,
}

impl Term {
    pub fn cos(amp: f64, kx: i64, ky: i64) -> Self {
        Self { amp, wave: Wave::Cos, kx, ky, kt: 0 }
    }

    pub fn sin(amp: f64, kx: i64, ky: i64) -> Self {
        Self { amp, wave: Wave::Sin, kx, ky, kt: 0 }
    }

    pub fn constant(amp: f64) -> Self {
        Self { amp, wave: Wave::Const, kx: 0, ky: 0, kt: 0 }
    }

    pub fn with_kt(mut self, kt: i64) -> Self {
        self.kt = kt;
        self
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        let arg = TAU * (self.kx as f64 * x + self.ky as f64 * y + self.kt as f64 * t);
        match self.wave {
            Wave::Cos => self.amp * arg.cos(),
            Wave::Sin => self.amp * arg.sin(),
            Wave::Const => self.amp,
        }
    }

    fn spatial(&self) -> bool {
        self.wave != Wave::Const && (self.kx != 0 || self.ky != 0)
    }
}

/// A finite trigonometric sum in `(x, y, t)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldExpr {
    pub terms: Vec<Term>,
}

impl FieldExpr {
    pub fn new(terms: Vec<Term>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![Term::constant(c)])
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(x, y, t)).sum()
    }

    /// Largest `max(|kx|, |ky|)` among the terms.
    pub fn max_frequency(&self) -> usize {
        self.terms
            .iter()
            .filter(|t| t.wave != Wave::Const)
            .map(|t| t.kx.unsigned_abs().max(t.ky.unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// True if no term depends on `x` or `y`.
    pub fn is_spatially_constant(&self) -> bool {
        !self.terms.iter().any(Term::spatial)
    }

    /// Fails if a term sits at or above the Nyquist frequency of `grid`.
    pub fn check_grid(&self, grid: GridSpec) -> Result<()> {
        let limit = grid.n_x().min(grid.n_y()) / 2 - 1;
        let f = self.max_frequency();
        if f > limit {
            return Err(Error::NyquistExceeded { frequency: f, limit });
        }
        if self.terms.iter().any(|t| !t.amp.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(())
    }

    pub fn scalar(&self, grid: GridSpec, t: f64) -> Result<ScalarField> {
        self.check_grid(grid)?;
        Ok(ScalarField::from_fn(grid, |x, y| self.eval(x, y, t)))
    }

    pub fn series(&self, grid: GridSpec, n_t: usize) -> Result<TimeSeries<ScalarField>> {
        self.check_grid(grid)?;
        TimeSeries::from_fn(n_t, |t| ScalarField::from_fn(grid, |x, y| self.eval(x, y, t)))
    }

    /// Value of a spatially constant expression at time `t`.
    pub fn at_time(&self, t: f64) -> f64 {
        self.eval(0.0, 0.0, t)
    }
}

fn ensure_constant(e: &FieldExpr, what: &str) -> Result<()> {
    if e.is_spatially_constant() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must not depend on x or y")))
    }
}

/// The closed 1-form `a dx + b dy + du`, with `a`, `b` constant in space.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormExpr {
    #[serde(default)]
    pub a: FieldExpr,
    #[serde(default)]
    pub b: FieldExpr,
    #[serde(default)]
    pub u: FieldExpr,
}

impl ClosedFormExpr {
    pub fn form(&self, grid: GridSpec, t: f64) -> Result<OneForm> {
        ensure_constant(&self.a, "harmonic coefficient a")?;
        ensure_constant(&self.b, "harmonic coefficient b")?;
        let du = d_scalar(&self.u.scalar(grid, t)?);
        Ok(du.axpy(1.0, &OneForm::constant(grid, self.a.at_time(t), self.b.at_time(t))))
    }

    pub fn series(&self, grid: GridSpec, n_t: usize) -> Result<TimeSeries<OneForm>> {
        TimeSeries::try_from_fn(n_t, |t| self.form(grid, t))
    }
}

/// The symplectic field `(a, b) + X_h`, with `a`, `b` constant in space.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathExpr {
    #[serde(default)]
    pub a: FieldExpr,
    #[serde(default)]
    pub b: FieldExpr,
    #[serde(default)]
    pub h: FieldExpr,
}

impl PathExpr {
    pub fn translation(a: f64, b: f64) -> Self {
        Self {
            a: FieldExpr::constant(a),
            b: FieldExpr::constant(b),
            h: FieldExpr::zero(),
        }
    }

    pub fn hamiltonian(h: FieldExpr) -> Self {
        Self {
            h,
            ..Self::default()
        }
    }

    pub fn field(&self, grid: GridSpec, t: f64) -> Result<VectorField> {
        ensure_constant(&self.a, "translation component a")?;
        ensure_constant(&self.b, "translation component b")?;
        let xh = hamiltonian_vector_field(&self.h.scalar(grid, t)?);
        Ok(xh.axpy(1.0, &VectorField::constant(grid, self.a.at_time(t), self.b.at_time(t))))
    }

    pub fn generator(&self, grid: GridSpec, n_t: usize) -> Result<GeneratorPath> {
        TimeSeries::try_from_fn(n_t, |t| self.field(grid, t))
    }

    pub fn isotopy(&self, grid: GridSpec, n_t: usize, substeps: usize) -> Result<Isotopy> {
        integrate_flow(&self.generator(grid, n_t)?, substeps)
    }
}

/// `H(y) = cos(2πy)/(2π)`, whose time-1 map is `(x, y) ↦ (x − sin 2πy, y)`.
pub fn shear_hamiltonian() -> FieldExpr {
    FieldExpr::new(vec![Term::cos(1.0 / TAU, 0, 1)])
}

pub fn shear_path() -> PathExpr {
    PathExpr::hamiltonian(shear_hamiltonian())
}

/// Modes `k ≠ 0` with `max(|kx|, |ky|) ≤ n`, one per `±k` pair.
pub fn half_plane_modes(n: usize) -> Vec<(i64, i64)> {
    let n = n as i64;
    let mut out = Vec::new();
    for ky in 0..=n {
        for kx in -n..=n {
            if ky > 0 || kx > 0 {
                out.push((kx, ky));
            }
        }
    }
    out
}

/// Random band-limited Hamiltonian with one to four spatial harmonics of
/// frequency at most `max_k`. Each term may also oscillate once in time
/// when `time_dependent` is set. The sum of `|c|·2π|k|²` over terms is at
/// most `amp`, which caps the strain rate of `X_H` at `2π·amp`.
pub fn random_hamiltonian<R: Rng>(rng: &mut R, max_k: usize, amp: f64, time_dependent: bool) -> FieldExpr {
    let modes = half_plane_modes(max_k.max(1));
    let n_terms = rng.random_range(1..=4usize);
    let weights: Vec<f64> = (0..n_terms).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut terms = Vec::with_capacity(n_terms);
    for w in weights {
        let (kx, ky) = modes[rng.random_range(0..modes.len())];
        let k2 = (kx * kx + ky * ky) as f64;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let c = sign * amp * (w / total) / (TAU * k2);
        let kt = if time_dependent { rng.random_range(0..=1) } else { 0 };
        let term = if rng.random_bool(0.5) { Term::cos(c, kx, ky) } else { Term::sin(c, kx, ky) };
        terms.push(term.with_kt(kt));
    }
    FieldExpr::new(terms)
}

fn random_coefficient<R: Rng>(rng: &mut R, amp: f64, time_dependent: bool) -> FieldExpr {
    let mut e = FieldExpr::constant(rng.random_range(-amp..amp));
    if time_dependent {
        e.terms.push(Term::cos(rng.random_range(-amp..amp) / 2.0, 0, 0).with_kt(1));
    }
    e
}

/// Random generator path `(a(t), b(t)) + X_{H_t}`. The harmonic part is
/// dropped when `harmonic` is false.
pub fn random_path<R: Rng>(rng: &mut R, max_k: usize, amp: f64, harmonic: bool, time_dependent: bool) -> PathExpr {
    let h = random_hamiltonian(rng, max_k, amp, time_dependent);
    if !harmonic {
        return PathExpr::hamiltonian(h);
    }
    PathExpr {
        a: random_coefficient(rng, amp, time_dependent),
        b: random_coefficient(rng, amp, time_dependent),
        h,
    }
}

/// Random closed form `a dx + b dy + du`, `u` band-limited at `max_k`.
pub fn random_closed_form<R: Rng>(rng: &mut R, max_k: usize, amp: f64, time_dependent: bool) -> ClosedFormExpr {
    ClosedFormExpr {
        a: random_coefficient(rng, amp, time_dependent),
        b: random_coefficient(rng, amp, time_dependent),
        u: random_hamiltonian(rng, max_k, amp, time_dependent),
    }
}

/// A time-independent random symplectic field on `grid`.
pub fn random_symplectic_field<R: Rng>(rng: &mut R, grid: GridSpec, max_k: usize, amp: f64) -> Result<VectorField> {
    random_path(rng, max_k, amp, true, false).field(grid, 0.0)
}
