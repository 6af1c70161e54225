//! Upper bounds for the Hofer-like energies `e₀(φ)` and `e(φ)`.
//!
//! Paths are drawn from a finite family of generators
//! `X_t = (b(t) + ∂_y u_t, −a(t) − ∂_x u_t)`, i.e. `i_X ω = a dx + b dy + du`,
//! with `a, b` and the coefficients of `u` expanded in time harmonics and `u`
//! in spatial harmonics. Coordinate descent minimises a cheap surrogate of
//! `length + w · (endpoint error)²`; the reported numbers always come from
//! integrating the winning path on the full grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{hamiltonian_vector_field, osc, GridSpec, OneForm, ScalarField, TimeSeries, VectorField};
use crate::hodge::hodge_decompose;
use crate::interp::PairInterpolant;
use crate::isotopy::{c0_map_distance, hamiltonian_isotopy, integrate_flow, pushforward_with_inverse, GeneratorPath, Isotopy, MapPair};
use crate::metrics::{hofer_length, isotopy_length, norm_series, NormContext};
use crate::spectral;

const TAU: f64 = 2.0 * PI;

/// Curl tolerance for pushed-forward generators in [`concat_upper_bound`].
pub const PUSHED_CLOSED_TOL: f64 = 1e-3;

/// Finite-dimensional family of symplectic generator paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathAnsatz {
    pub n_harm_t: usize,
    pub n_harm_xy: usize,
    params: Vec<f64>,
}

impl PathAnsatz {
    pub fn param_count(n_harm_t: usize, n_harm_xy: usize) -> usize {
        let nt = 2 * n_harm_t + 1;
        let side = 2 * n_harm_xy + 1;
        2 * nt + nt * (side * side - 1)
    }

    /// All parameters zero: the constant identity path.
    pub fn new(n_harm_t: usize, n_harm_xy: usize) -> Self {
        Self {
            n_harm_t,
            n_harm_xy,
            params: vec![0.0; Self::param_count(n_harm_t, n_harm_xy)],
        }
    }

    pub fn with_params(n_harm_t: usize, n_harm_xy: usize, params: Vec<f64>) -> Result<Self> {
        let want = Self::param_count(n_harm_t, n_harm_xy);
        if params.len() != want {
            return Err(Error::ShapeMismatch {
                what: "ansatz parameters",
                expected: want,
                got: params.len(),
            });
        }
        if let Some(index) = params.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "ansatz parameters",
                index,
            });
        }
        Ok(Self {
            n_harm_t,
            n_harm_xy,
            params,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn is_zero(&self) -> bool {
        self.params.iter().all(|&v| v == 0.0)
    }

    fn n_time(&self) -> usize {
        2 * self.n_harm_t + 1
    }

    /// Spatial modes, one of each `±k` pair.
    pub fn modes(&self) -> Vec<(i64, i64)> {
        let n = self.n_harm_xy as i64;
        let mut out = Vec::new();
        for kx in 0..=n {
            for ky in -n..=n {
                if kx > 0 || ky > 0 {
                    out.push((kx, ky));
                }
            }
        }
        out
    }

    fn idx_a(&self, q: usize) -> usize {
        q
    }

    fn idx_b(&self, q: usize) -> usize {
        self.n_time() + q
    }

    fn idx_mode(&self, q: usize, m: usize, sine: bool) -> usize {
        let n_modes = self.params.len() / self.n_time() - 2;
        2 * self.n_time() + q * n_modes + 2 * m + usize::from(sine)
    }

    /// `[1, cos 2πt, sin 2πt, cos 4πt, …]`.
    fn time_basis(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_time());
        out.push(1.0);
        for m in 1..=self.n_harm_t {
            let w = TAU * m as f64 * t;
            out.push(w.cos());
            out.push(w.sin());
        }
        out
    }

    fn is_sine_slot(q: usize) -> bool {
        q > 0 && q % 2 == 0
    }

    /// `a(t), b(t)` and the time-combined mode coefficients `(C_m, S_m)`.
    fn coefficients_at(&self, tb: &[f64]) -> ((f64, f64), Vec<(f64, f64)>) {
        let n_modes = (self.params.len() / self.n_time() - 2) / 2;
        let (mut a, mut b) = (0.0, 0.0);
        let mut cs = vec![(0.0, 0.0); n_modes];
        for (q, &w) in tb.iter().enumerate() {
            a += w * self.params[self.idx_a(q)];
            b += w * self.params[self.idx_b(q)];
            for (m, c) in cs.iter_mut().enumerate() {
                c.0 += w * self.params[self.idx_mode(q, m, false)];
                c.1 += w * self.params[self.idx_mode(q, m, true)];
            }
        }
        ((a, b), cs)
    }

    /// Harmonic coefficients `(a(t), b(t))` of `i_{X_t} ω` in `{dx, dy}`.
    pub fn harmonic_at(&self, t: f64) -> (f64, f64) {
        self.coefficients_at(&self.time_basis(t)).0
    }

    fn check_grid(&self, grid: GridSpec) -> Result<()> {
        let limit = grid.n_x().min(grid.n_y()) / 2 - 1;
        if self.n_harm_xy > limit {
            return Err(Error::NyquistExceeded {
                frequency: self.n_harm_xy,
                limit,
            });
        }
        Ok(())
    }

    /// Mean-zero potential `u_t` on the grid.
    pub fn hamiltonian_at(&self, grid: GridSpec, t: f64) -> Result<ScalarField> {
        self.check_grid(grid)?;
        let (_, cs) = self.coefficients_at(&self.time_basis(t));
        let modes = self.modes();
        Ok(ScalarField::from_fn(grid, |x, y| {
            modes
                .iter()
                .zip(&cs)
                .map(|(&(kx, ky), &(c, s))| {
                    let th = TAU * (kx as f64 * x + ky as f64 * y);
                    (c * th.cos() + s * th.sin()) / (TAU * (kx as f64).hypot(ky as f64))
                })
                .sum()
        }))
    }

    pub fn generator_at(&self, grid: GridSpec, t: f64) -> Result<VectorField> {
        let (a, b) = self.harmonic_at(t);
        let h = hamiltonian_vector_field(&self.hamiltonian_at(grid, t)?);
        Ok(h.axpy(1.0, &VectorField::constant(grid, b, -a)))
    }

    pub fn generator_path(&self, grid: GridSpec, n_t: usize) -> Result<GeneratorPath> {
        TimeSeries::try_from_fn(n_t, |t| self.generator_at(grid, t))
    }

    /// The time-reversed path `t ↦ −X_{1−t}`, which ends at the inverse map.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        let nt = self.n_time();
        for (k, v) in out.params.iter_mut().enumerate() {
            let q = if k < 2 * nt { k % nt } else { ((k - 2 * nt) / (self.params.len() / nt - 2)) % nt };
            if !Self::is_sine_slot(q) {
                *v = -*v;
            }
        }
        out
    }

    /// Spatial-mode coefficients `(c, s)` of a mean-zero field, in ansatz scaling.
    fn project_field(&self, u: &ScalarField) -> Vec<(f64, f64)> {
        let grid = u.grid();
        let spec = spectral::forward(grid, u.values());
        let n = grid.len() as f64;
        self.modes()
            .iter()
            .map(|&(kx, ky)| {
                let i = kx.rem_euclid(grid.n_x() as i64) as usize;
                let j = ky.rem_euclid(grid.n_y() as i64) as usize;
                let z = spec[j * grid.n_x() + i] / n;
                let scale = TAU * (kx as f64).hypot(ky as f64);
                (2.0 * z.re * scale, -2.0 * z.im * scale)
            })
            .collect()
    }

    /// Linearised autonomous path to `target`: the mean displacement becomes
    /// the harmonic part and the rest is fitted by a Hamiltonian field.
    pub fn straight(target: &crate::isotopy::DisplacementField, n_harm_t: usize, n_harm_xy: usize) -> Result<Self> {
        let grid = target.grid();
        let mut out = Self::new(n_harm_t, n_harm_xy);
        out.check_grid(grid)?;
        let dx = ScalarField::new(grid, target.d_x().to_vec())?;
        let dy = ScalarField::new(grid, target.d_y().to_vec())?;
        let (mx, my) = (dx.mean(), dy.mean());
        let sx = spectral::forward(grid, dx.centered().values());
        let sy = spectral::forward(grid, dy.centered().values());
        let mut sh = vec![rustfft::num_complex::Complex64::new(0.0, 0.0); grid.len()];
        for (idx, z) in sh.iter_mut().enumerate() {
            if let Some((kx, ky)) = spectral::resolved(grid, idx) {
                let k2 = kx * kx + ky * ky;
                if k2 > 0.0 {
                    let i = rustfft::num_complex::Complex64::new(0.0, TAU);
                    *z = (-i * ky * sx[idx] + i * kx * sy[idx]) / (TAU * TAU * k2);
                }
            }
        }
        let h = ScalarField::new(grid, spectral::inverse(grid, sh))?;
        let (a_idx, b_idx) = (out.idx_a(0), out.idx_b(0));
        out.params[a_idx] = -my;
        out.params[b_idx] = mx;
        for (m, (c, s)) in out.project_field(&h).into_iter().enumerate() {
            let (ic, is) = (out.idx_mode(0, m, false), out.idx_mode(0, m, true));
            out.params[ic] = c;
            out.params[is] = s;
        }
        Ok(out)
    }

    /// Least-squares projection of a Hamiltonian path onto the family.
    pub fn from_hamiltonian(h: &TimeSeries<ScalarField>, n_harm_t: usize, n_harm_xy: usize) -> Result<Self> {
        let mut out = Self::new(n_harm_t, n_harm_xy);
        out.check_grid(h.first().grid())?;
        let nt = out.n_time();
        let rows: Vec<Vec<f64>> = h.times().map(|t| out.time_basis(t)).collect();
        let per_sample: Vec<Vec<(f64, f64)>> = h.iter().map(|u| out.project_field(&u.centered())).collect();
        // normal equations of the time fit, shared by every coefficient
        let mut gram = vec![vec![0.0; nt]; nt];
        for r in &rows {
            for p in 0..nt {
                for q in 0..nt {
                    gram[p][q] += r[p] * r[q];
                }
            }
        }
        for m in 0..out.modes().len() {
            for sine in [false, true] {
                let mut rhs = vec![0.0; nt];
                for (r, coefs) in rows.iter().zip(&per_sample) {
                    let v = if sine { coefs[m].1 } else { coefs[m].0 };
                    for p in 0..nt {
                        rhs[p] += r[p] * v;
                    }
                }
                let sol = solve_dense(gram.clone(), rhs)?;
                for (q, v) in sol.into_iter().enumerate() {
                    let k = out.idx_mode(q, m, sine);
                    out.params[k] = v;
                }
            }
        }
        Ok(out)
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap_or(c);
        if a[p][c].abs() < 1e-14 {
            return Err(Error::InvalidArgument(
                "too few time samples for the requested time harmonics".into(),
            ));
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// Optimiser and evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptConfig {
    /// Time samples of the evaluated isotopy.
    pub n_t: usize,
    pub substeps: usize,
    pub penalty: f64,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    /// Random restarts in addition to the seeded starts.
    pub restarts: usize,
    pub seed: u64,
    /// Endpoint error below which a length certifies an upper bound.
    pub tolerance: f64,
    pub initial_step: f64,
    pub min_step: f64,
    /// Spread of the random restart perturbations.
    pub perturbation: f64,
    pub tracers_per_axis: usize,
    pub tracer_steps: usize,
    pub surrogate_samples: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            n_t: 65,
            substeps: 4,
            penalty: 1e3,
            max_evals: 2000,
            restarts: 3,
            seed: 0,
            tolerance: 1e-3,
            initial_step: 0.05,
            min_step: 1e-6,
            perturbation: 0.05,
            tracers_per_axis: 6,
            tracer_steps: 48,
            surrogate_samples: 17,
        }
    }
}

/// Outcome of one `e₀` estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Length of the winning path, evaluated on the full grid.
    pub length: f64,
    /// `d̄` between the path's endpoint and the target.
    pub endpoint_error: f64,
    /// `length`, when the endpoint error is below tolerance.
    pub e0_upper: Option<f64>,
    /// Objective evaluations spent by the winning restart.
    pub iterations: usize,
    /// The endpoint reached the target within tolerance.
    pub converged: bool,
    pub objective: f64,
    pub restart: usize,
    /// Best surrogate objective after each sweep of the winning restart.
    pub trace: Vec<f64>,
    pub path: PathAnsatz,
}

/// Cheap stand-in for the objective: length on a coarser node set and fewer
/// time samples, endpoint error on a handful of tracers integrated with the
/// analytic field.
struct Surrogate<'a> {
    shape: &'a PathAnsatz,
    modes: Vec<(i64, i64)>,
    // length part
    sample_basis: Vec<Vec<f64>>,
    sample_dt: f64,
    cos_vals: Vec<Vec<f64>>,
    sin_vals: Vec<Vec<f64>>,
    w1: Vec<f64>,
    w2: Vec<f64>,
    lam1: [f64; 2],
    lam2: [f64; 2],
    // endpoint part
    stage_basis: Vec<Vec<f64>>,
    starts: Vec<(f64, f64)>,
    goals: Vec<(f64, f64)>,
    steps: usize,
    penalty: f64,
}

#[inline]
fn wrap(z: f64) -> f64 {
    z - z.round()
}

impl<'a> Surrogate<'a> {
    fn new(shape: &'a PathAnsatz, target: &MapPair, ctx: &NormContext, cfg: &OptConfig) -> Result<Self> {
        let grid = ctx.grid();
        let modes = shape.modes();
        let stride = if grid.n_x() >= 32 && grid.n_y() >= 32 { 2 } else { 1 };
        let nodes: Vec<usize> = (0..grid.n_y())
            .step_by(stride)
            .flat_map(|j| (0..grid.n_x()).step_by(stride).map(move |i| j * grid.n_x() + i))
            .collect();
        let pts: Vec<(f64, f64)> = nodes.iter().map(|&k| grid.point(k)).collect();
        let mut cos_vals = Vec::with_capacity(modes.len());
        let mut sin_vals = Vec::with_capacity(modes.len());
        for &(kx, ky) in &modes {
            let norm = TAU * (kx as f64).hypot(ky as f64);
            let th: Vec<f64> = pts.iter().map(|&(x, y)| TAU * (kx as f64 * x + ky as f64 * y)).collect();
            cos_vals.push(th.iter().map(|t| t.cos() / norm).collect());
            sin_vals.push(th.iter().map(|t| t.sin() / norm).collect());
        }
        let basis = ctx.basis();
        let s1 = hodge_decompose(&OneForm::constant(grid, 1.0, 0.0), ctx.metric(), basis)?;
        let s2 = hodge_decompose(&OneForm::constant(grid, 0.0, 1.0), ctx.metric(), basis)?;
        let ns = cfg.surrogate_samples.max(2);
        let sample_basis = (0..ns).map(|i| shape.time_basis(i as f64 / (ns - 1) as f64)).collect();
        let steps = cfg.tracer_steps.max(1);
        let stage_basis = (0..=2 * steps).map(|m| shape.time_basis(m as f64 / (2 * steps) as f64)).collect();
        let m = cfg.tracers_per_axis.max(1);
        let ip: PairInterpolant = target.forward().interpolant();
        let mut starts = Vec::new();
        let mut goals = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let p = ((i as f64 + 0.37) / m as f64, (j as f64 + 0.61) / m as f64);
                let (dx, dy) = ip.eval(p.0, p.1);
                starts.push(p);
                goals.push((p.0 + dx, p.1 + dy));
            }
        }
        Ok(Self {
            shape,
            modes,
            sample_basis,
            sample_dt: 1.0 / (ns - 1) as f64,
            cos_vals,
            sin_vals,
            w1: nodes.iter().map(|&k| s1.potential.values()[k]).collect(),
            w2: nodes.iter().map(|&k| s2.potential.values()[k]).collect(),
            lam1: s1.lambda,
            lam2: s2.lambda,
            stage_basis,
            starts,
            goals,
            steps,
            penalty: cfg.penalty,
        })
    }

    fn coefficients(&self, p: &PathAnsatz, tb: &[f64]) -> ((f64, f64), Vec<(f64, f64)>) {
        p.coefficients_at(tb)
    }

    fn length(&self, p: &PathAnsatz) -> f64 {
        let mut vals = Vec::with_capacity(self.sample_basis.len());
        let mut u = vec![0.0; self.w1.len()];
        for tb in &self.sample_basis {
            let ((a, b), cs) = self.coefficients(p, tb);
            for (k, v) in u.iter_mut().enumerate() {
                *v = a * self.w1[k] + b * self.w2[k];
            }
            for (m, &(c, s)) in cs.iter().enumerate() {
                if c != 0.0 {
                    for (v, w) in u.iter_mut().zip(&self.cos_vals[m]) {
                        *v += c * w;
                    }
                }
                if s != 0.0 {
                    for (v, w) in u.iter_mut().zip(&self.sin_vals[m]) {
                        *v += s * w;
                    }
                }
            }
            let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let harm = (a * self.lam1[0] + b * self.lam2[0]).abs() + (a * self.lam1[1] + b * self.lam2[1]).abs();
            vals.push(harm + (hi - lo));
        }
        crate::grid::trapezoid(&vals, self.sample_dt)
    }

    fn velocity(&self, stage: &((f64, f64), Vec<(f64, f64)>), p: (f64, f64)) -> (f64, f64) {
        let ((a, b), cs) = stage;
        let n = self.shape.n_harm_xy;
        let (ex, ey) = ((TAU * p.0).sin_cos(), (TAU * p.1).sin_cos());
        // e^{2πi k x} for k = 0..n and e^{2πi k y} for k = −n..n
        let mut px = Vec::with_capacity(n + 1);
        let mut z = (1.0_f64, 0.0_f64);
        for _ in 0..=n {
            px.push(z);
            z = (z.0 * ex.1 - z.1 * ex.0, z.0 * ex.0 + z.1 * ex.1);
        }
        let mut py = vec![(1.0, 0.0); 2 * n + 1];
        let mut z = (1.0_f64, 0.0_f64);
        for k in 1..=n {
            z = (z.0 * ey.1 - z.1 * ey.0, z.0 * ey.0 + z.1 * ey.1);
            py[n + k] = z;
            py[n - k] = (z.0, -z.1);
        }
        let (mut ux, mut uy) = (0.0, 0.0);
        for (&(kx, ky), &(c, s)) in self.modes.iter().zip(cs) {
            let zx = px[kx as usize];
            let zy = py[(ky + n as i64) as usize];
            let (cos, sin) = (zx.0 * zy.0 - zx.1 * zy.1, zx.0 * zy.1 + zx.1 * zy.0);
            let g = (-c * sin + s * cos) / (kx as f64).hypot(ky as f64);
            ux += g * kx as f64;
            uy += g * ky as f64;
        }
        (b + uy, -a - ux)
    }

    fn endpoint_error(&self, p: &PathAnsatz) -> f64 {
        let stages: Vec<_> = self.stage_basis.iter().map(|tb| self.coefficients(p, tb)).collect();
        let h = 1.0 / self.steps as f64;
        let mut worst = 0.0_f64;
        for (start, goal) in self.starts.iter().zip(&self.goals) {
            let mut q = *start;
            for s in 0..self.steps {
                let (f0, f1, f2) = (&stages[2 * s], &stages[2 * s + 1], &stages[2 * s + 2]);
                let k1 = self.velocity(f0, q);
                let k2 = self.velocity(f1, (q.0 + 0.5 * h * k1.0, q.1 + 0.5 * h * k1.1));
                let k3 = self.velocity(f1, (q.0 + 0.5 * h * k2.0, q.1 + 0.5 * h * k2.1));
                let k4 = self.velocity(f2, (q.0 + h * k3.0, q.1 + h * k3.1));
                q.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                q.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            }
            worst = worst.max(wrap(q.0 - goal.0).hypot(wrap(q.1 - goal.1)));
        }
        worst
    }

    fn objective(&self, p: &PathAnsatz) -> f64 {
        let e = self.endpoint_error(p);
        self.length(p) + self.penalty * e * e
    }
}

struct Descent {
    best: PathAnsatz,
    evals: usize,
    trace: Vec<f64>,
}

fn coordinate_descent(sur: &Surrogate, start: PathAnsatz, cfg: &OptConfig) -> Descent {
    let mut x = start;
    let mut fx = sur.objective(&x);
    let mut evals = 1;
    let mut step = cfg.initial_step;
    let mut trace = vec![fx];
    'outer: while step > cfg.min_step {
        let mut improved = false;
        for i in 0..x.params.len() {
            for dir in [1.0, -1.0] {
                if evals >= cfg.max_evals {
                    break 'outer;
                }
                let mut y = x.clone();
                y.params[i] += dir * step;
                let fy = sur.objective(&y);
                evals += 1;
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                    break;
                }
            }
        }
        trace.push(fx);
        if !improved {
            step *= 0.5;
        }
    }
    trace.push(fx);
    Descent { best: x, evals, trace }
}

/// Integrates a path on the full grid and measures its length and the `d̄`
/// distance of its endpoint from `target`.
pub fn evaluate_path(path: &PathAnsatz, target: &MapPair, ctx: &NormContext, cfg: &OptConfig) -> Result<(Isotopy, f64, f64)> {
    let iso = integrate_flow(&path.generator_path(ctx.grid(), cfg.n_t)?, cfg.substeps)?;
    let length = isotopy_length(&iso, ctx)?;
    let err = c0_map_distance(&iso.endpoint(), target)?;
    Ok((iso, length, err))
}

/// Upper bound for `e₀(target)` over the ansatz family.
///
/// Starts from the linearised straight path, from `ansatz` itself when its
/// parameters are not all zero, and from `cfg.restarts` random perturbations.
/// Every seed and every optimised point is re-evaluated exactly; the feasible
/// candidate with the lowest exact objective wins, ties going to the earlier one.
pub fn estimate_e0(target: &MapPair, ansatz: &PathAnsatz, ctx: &NormContext, cfg: &OptConfig) -> Result<EnergyReport> {
    target.forward().grid().ensure_same(&ctx.grid())?;
    let straight = PathAnsatz::straight(target.forward(), ansatz.n_harm_t, ansatz.n_harm_xy)?;
    let mut seeds = vec![straight];
    if !ansatz.is_zero() {
        seeds.push(ansatz.clone());
    }
    let mut starts: Vec<(PathAnsatz, bool)> = seeds.iter().map(|s| (s.clone(), true)).collect();
    let base = seeds.last().cloned().unwrap_or_else(|| ansatz.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        let mut p = base.clone();
        for v in p.params.iter_mut() {
            *v += cfg.perturbation * rng.random_range(-1.0..1.0);
        }
        starts.push((p, false));
    }

    let sur = Surrogate::new(ansatz, target, ctx, cfg)?;
    let mut best: Option<EnergyReport> = None;
    let mut best_err = f64::INFINITY;
    for (restart, (start, is_seed)) in starts.into_iter().enumerate() {
        let run = coordinate_descent(&sur, start.clone(), cfg);
        let mut candidates = Vec::new();
        if is_seed {
            candidates.push((start, 1usize, vec![run.trace[0]]));
        }
        candidates.push((run.best, run.evals, run.trace));
        for (path, evals, trace) in candidates {
            let (_, length, err) = evaluate_path(&path, target, ctx, cfg)?;
            best_err = best_err.min(err);
            if err >= cfg.tolerance {
                continue;
            }
            let objective = length + cfg.penalty * err * err;
            if best.as_ref().is_none_or(|b| objective < b.objective) {
                best = Some(EnergyReport {
                    length,
                    endpoint_error: err,
                    e0_upper: Some(length),
                    iterations: evals,
                    converged: true,
                    objective,
                    restart,
                    trace,
                    path,
                });
            }
        }
    }
    best.ok_or(Error::NoFeasiblePath {
        best_error: best_err,
        tolerance: cfg.tolerance,
    })
}

/// `(e₀(φ) + e₀(φ⁻¹)) / 2`. The inverse is searched from the reversed seed,
/// so swapping the target for its inverse (and the seed for its reverse)
/// returns the same value.
pub fn estimate_e(target: &MapPair, ansatz: &PathAnsatz, ctx: &NormContext, cfg: &OptConfig) -> Result<f64> {
    Ok(estimate_e_reports(target, ansatz, ctx, cfg)?.0)
}

/// [`estimate_e`] together with the two underlying reports.
pub fn estimate_e_reports(
    target: &MapPair,
    ansatz: &PathAnsatz,
    ctx: &NormContext,
    cfg: &OptConfig,
) -> Result<(f64, EnergyReport, EnergyReport)> {
    let fwd = estimate_e0(target, ansatz, ctx, cfg)?;
    let inv = estimate_e0(&target.inverse(), &ansatz.reversed(), ctx, cfg)?;
    let (a, b) = (fwd.e0_upper.unwrap_or(f64::INFINITY), inv.e0_upper.unwrap_or(f64::INFINITY));
    // a + b and b + a agree exactly, keeping the symmetry bitwise
    Ok(((a + b) / 2.0, fwd, inv))
}

/// Length of the concatenated path for `φ ∘ ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcatBound {
    /// `l(Φ) + ∫ ‖(φ₁)_* ψ̇_s‖ ds`.
    pub length: f64,
    pub endpoint_error: f64,
    /// `φ_report.length + ψ_report.length`.
    pub sum_of_lengths: f64,
    /// `∫ ‖(φ₁)_* ψ̇_s‖ ds − l(Ψ)`.
    pub distortion: f64,
}

/// Runs the path of `phi` and then the path of `psi` left-translated by the
/// endpoint of the first, `s ↦ φ₁ ∘ ψ_s`. Reparametrising to unit time does
/// not change the length, so each leg is measured on its own time grid.
pub fn concat_upper_bound(
    phi: &EnergyReport,
    psi: &EnergyReport,
    composed_target: &MapPair,
    ctx: &NormContext,
    cfg: &OptConfig,
) -> Result<ConcatBound> {
    if !(phi.converged && psi.converged) {
        return Err(Error::InvalidArgument("both reports must certify an endpoint".into()));
    }
    let grid = ctx.grid();
    let first = integrate_flow(&phi.path.generator_path(grid, cfg.n_t)?, cfg.substeps)?;
    let second = integrate_flow(&psi.path.generator_path(grid, cfg.n_t)?, cfg.substeps)?;
    let end = first.endpoint();
    let pushed = second
        .generator()
        .try_map(|x| pushforward_with_inverse(x, end.inverse_field()))?;
    let relaxed = ctx.clone().with_closed_tol(PUSHED_CLOSED_TOL.max(ctx.closed_tol()));
    let first_len = isotopy_length(&first, ctx)?;
    let second_len = crate::grid::time_integral(&norm_series(&pushed, &relaxed)?);
    let composed = end.then_after(&second.endpoint())?;
    let endpoint_error = c0_map_distance(&composed, composed_target)?;
    Ok(ConcatBound {
        length: first_len + second_len,
        endpoint_error,
        sum_of_lengths: phi.length + psi.length,
        distortion: second_len - psi.length,
    })
}

/// `(e_est(φ_H), ∫ osc(H_t) dt)` for the time-1 map of `H`; the search is
/// seeded with the projection of `H` onto the ansatz.
pub fn compare_with_hofer(
    h: &TimeSeries<ScalarField>,
    ansatz: &PathAnsatz,
    ctx: &NormContext,
    cfg: &OptConfig,
) -> Result<(f64, f64)> {
    let iso = hamiltonian_isotopy(h, cfg.substeps)?;
    let seed = PathAnsatz::from_hamiltonian(h, ansatz.n_harm_t, ansatz.n_harm_xy)?;
    let e = estimate_e(&iso.endpoint(), &seed, ctx, cfg)?;
    Ok((e, hofer_length(h)))
}

/// `osc` of the ansatz potential at time `t`, used by tests and reports.
pub fn potential_osc(path: &PathAnsatz, grid: GridSpec, t: f64) -> Result<f64> {
    Ok(osc(&path.hamiltonian_at(grid, t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotopy::DisplacementField;

    fn fast_cfg() -> OptConfig {
        OptConfig {
            n_t: 33,
            max_evals: 300,
            restarts: 1,
            ..OptConfig::default()
        }
    }

    #[test]
    fn parameter_count() {
        assert_eq!(PathAnsatz::param_count(1, 2), 2 * 3 + 3 * 24);
        assert_eq!(PathAnsatz::new(0, 1).params().len(), 2 + 8);
        assert_eq!(PathAnsatz::new(2, 3).modes().len() * 2, 48);
        assert!(PathAnsatz::with_params(1, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn generator_is_symplectic_with_expected_harmonic_part() {
        let g = GridSpec::square(32).unwrap();
        let mut p = PathAnsatz::new(1, 2);
        for (k, v) in p.params.iter_mut().enumerate() {
            *v = 0.01 * ((k * 7919) % 13) as f64 - 0.06;
        }
        let x = p.generator_at(g, 0.3).unwrap();
        let ctx = NormContext::flat(g).unwrap();
        let s = ctx.split(&x).unwrap();
        let (a, b) = p.harmonic_at(0.3);
        assert!((s.lambda[0] - a).abs() < 1e-12 && (s.lambda[1] - b).abs() < 1e-12);
        let u = p.hamiltonian_at(g, 0.3).unwrap();
        assert!((&s.potential - &u).max_abs() < 1e-10);
    }

    #[test]
    fn projection_recovers_parameters() {
        let g = GridSpec::square(32).unwrap();
        let mut p = PathAnsatz::new(1, 2);
        let nt = p.n_time();
        for k in 2 * nt..p.params.len() {
            p.params[k] = 0.02 * ((k * 31) % 7) as f64 - 0.05;
        }
        let h = TimeSeries::try_from_fn(17, |t| p.hamiltonian_at(g, t)).unwrap();
        let q = PathAnsatz::from_hamiltonian(&h, 1, 2).unwrap();
        for (a, b) in p.params().iter().zip(q.params()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reversal_is_an_involution_and_reverses_time() {
        let mut p = PathAnsatz::new(2, 1);
        for (k, v) in p.params.iter_mut().enumerate() {
            *v = k as f64 * 0.01 + 0.005;
        }
        assert_eq!(p.reversed().reversed(), p);
        let g = GridSpec::square(16).unwrap();
        let r = p.reversed();
        let a = p.generator_at(g, 0.2).unwrap();
        let b = r.generator_at(g, 0.8).unwrap();
        assert!((&a + &b).max_abs() < 1e-12);
    }

    #[test]
    fn straight_seed_is_exact_for_translation_and_shear() {
        let g = GridSpec::square(32).unwrap();
        let tr = DisplacementField::translation(g, 0.3, -0.1);
        let p = PathAnsatz::straight(&tr, 1, 2).unwrap();
        let (a, b) = p.harmonic_at(0.5);
        assert!((a - 0.1).abs() < 1e-12 && (b - 0.3).abs() < 1e-12);

        let shear = DisplacementField::from_fn(g, |_, y| (-(TAU * y).sin(), 0.0)).unwrap();
        let p = PathAnsatz::straight(&shear, 1, 2).unwrap();
        let want = ScalarField::from_fn(g, |_, y| (TAU * y).cos() / TAU);
        assert!((&p.hamiltonian_at(g, 0.4).unwrap() - &want).max_abs() < 1e-12);
    }

    #[test]
    fn surrogate_tracks_exact_evaluation() {
        let g = GridSpec::square(32).unwrap();
        let ctx = NormContext::flat(g).unwrap();
        let cfg = fast_cfg();
        let mut p = PathAnsatz::new(1, 1);
        for (k, v) in p.params.iter_mut().enumerate() {
            *v = 0.03 * (((k * 5) % 7) as f64 - 3.0);
        }
        let iso = integrate_flow(&p.generator_path(g, 129).unwrap(), 4).unwrap();
        let target = iso.endpoint();
        let sur = Surrogate::new(&p, &target, &ctx, &cfg).unwrap();
        assert!(sur.endpoint_error(&p) < 1e-4);
        let (_, len, err) = evaluate_path(&p, &target, &ctx, &cfg).unwrap();
        assert!(err < 1e-4);
        assert!((sur.length(&p) - len).abs() < 0.05 * len);
    }

    #[test]
    fn identity_and_translation_bounds() {
        let g = GridSpec::square(32).unwrap();
        let ctx = NormContext::flat(g).unwrap();
        let cfg = fast_cfg();
        let ans = PathAnsatz::new(1, 1);
        let id = estimate_e0(&MapPair::identity(g), &ans, &ctx, &cfg).unwrap();
        assert_eq!((id.length, id.endpoint_error), (0.0, 0.0));

        let tr = MapPair::new(DisplacementField::translation(g, 0.3, 0.0)).unwrap();
        let r = estimate_e0(&tr, &ans, &ctx, &cfg).unwrap();
        assert!(r.e0_upper.unwrap() <= 0.3 + 1e-3);
        assert!(r.endpoint_error < 1e-3);
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let (_, len, err) = evaluate_path(&r.path, &tr, &ctx, &cfg).unwrap();
        assert_eq!((len, err), (r.length, r.endpoint_error));
    }

    #[test]
    fn e_is_symmetric_under_inversion() {
        let g = GridSpec::square(32).unwrap();
        let ctx = NormContext::flat(g).unwrap();
        let cfg = OptConfig {
            max_evals: 60,
            ..fast_cfg()
        };
        let mut ans = PathAnsatz::new(1, 1);
        for (k, v) in ans.params.iter_mut().enumerate() {
            *v = 0.02 * (((k * 3) % 5) as f64 - 2.0);
        }
        let target = integrate_flow(&ans.generator_path(g, 129).unwrap(), 4).unwrap().endpoint();
        let a = estimate_e(&target, &ans, &ctx, &cfg).unwrap();
        let b = estimate_e(&target.inverse(), &ans.reversed(), &ctx, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn concat_with_identity_adds_nothing() {
        let g = GridSpec::square(32).unwrap();
        let ctx = NormContext::flat(g).unwrap();
        let cfg = OptConfig {
            max_evals: 40,
            restarts: 0,
            ..fast_cfg()
        };
        let ans = PathAnsatz::new(0, 1);
        let a = MapPair::new(DisplacementField::translation(g, 0.2, 0.0)).unwrap();
        let b = MapPair::new(DisplacementField::translation(g, 0.1, 0.0)).unwrap();
        let ra = estimate_e0(&a, &ans, &ctx, &cfg).unwrap();
        let rb = estimate_e0(&b, &ans, &ctx, &cfg).unwrap();
        let rid = estimate_e0(&MapPair::identity(g), &ans, &ctx, &cfg).unwrap();
        let c = concat_upper_bound(&ra, &rid, &a, &ctx, &cfg).unwrap();
        assert!((c.length - ra.length).abs() < 1e-6);
        let ab = a.then_after(&b).unwrap();
        let c = concat_upper_bound(&ra, &rb, &ab, &ctx, &cfg).unwrap();
        assert!(c.length <= 0.3 + 1e-3);
        assert!(c.endpoint_error < 1e-3);
    }
}
