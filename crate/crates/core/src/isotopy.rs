//! Symplectic isotopies of the torus: flow integration, generators,
//! composition, inversion, commutators and the C⁰ distance between paths.
//!
//! A map is stored through its periodic displacement `d`, acting as
//! `x ↦ x + d(x)` on the universal cover. An [`Isotopy`] keeps the generator
//! path, the forward flow and the inverse flow side by side, so inverting an
//! isotopy never re-solves anything.

use crate::error::{Error, Result};
use crate::grid::{closedness_defect, hamiltonian_vector_field, omega_contract, GridSpec, OneForm, ScalarField, TimeSeries, VectorField};
use crate::interp::{Interpolant, PairInterpolant};
use crate::spectral;

/// Smallest Jacobian determinant accepted for a map.
pub const JACOBIAN_FLOOR: f64 = 0.05;
/// Curl tolerance for a generator sample to count as symplectic.
pub const SYMPLECTIC_TOL: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

/// Time-sampled family of symplectic vector fields.
pub type GeneratorPath = TimeSeries<VectorField>;

/// Periodic displacement of a map `x ↦ x + d(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    grid: GridSpec,
    d_x: Vec<f64>,
    d_y: Vec<f64>,
}

/// Pointwise Jacobian `I + Dd`.
#[derive(Clone, Debug)]
pub struct Jacobian {
    pub j11: Vec<f64>,
    pub j12: Vec<f64>,
    pub j21: Vec<f64>,
    pub j22: Vec<f64>,
}

impl Jacobian {
    pub fn det(&self, k: usize) -> f64 {
        self.j11[k] * self.j22[k] - self.j12[k] * self.j21[k]
    }

    pub fn min_det(&self) -> f64 {
        (0..self.j11.len()).map(|k| self.det(k)).fold(f64::INFINITY, f64::min)
    }

    /// `max |det − 1|`.
    pub fn area_defect(&self) -> f64 {
        (0..self.j11.len()).map(|k| (self.det(k) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `J(k)⁻¹ v`.
    #[inline]
    fn solve(&self, k: usize, v: (f64, f64)) -> (f64, f64) {
        let det = self.det(k);
        (
            (self.j22[k] * v.0 - self.j12[k] * v.1) / det,
            (-self.j21[k] * v.0 + self.j11[k] * v.1) / det,
        )
    }
}

impl DisplacementField {
    /// Validates shape, finiteness and the Jacobian floor.
    pub fn new(grid: GridSpec, d_x: Vec<f64>, d_y: Vec<f64>) -> Result<Self> {
        for (what, v) in [("d_x", &d_x), ("d_y", &d_y)] {
            if v.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    what,
                    expected: grid.len(),
                    got: v.len(),
                });
            }
            if let Some(index) = v.iter().position(|a| !a.is_finite()) {
                return Err(Error::NonFinite { what, index });
            }
        }
        let d = Self { grid, d_x, d_y };
        d.ensure_floor("displacement field")?;
        Ok(d)
    }

    pub(crate) fn from_vecs(grid: GridSpec, d_x: Vec<f64>, d_y: Vec<f64>) -> Self {
        Self { grid, d_x, d_y }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let (d_x, d_y) = grid.points().map(|(x, y)| f(x, y)).unzip();
        Self::new(grid, d_x, d_y)
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::from_vecs(grid, vec![0.0; grid.len()], vec![0.0; grid.len()])
    }

    pub fn translation(grid: GridSpec, a: f64, b: f64) -> Self {
        Self::from_vecs(grid, vec![a; grid.len()], vec![b; grid.len()])
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn d_x(&self) -> &[f64] {
        &self.d_x
    }

    pub fn d_y(&self) -> &[f64] {
        &self.d_y
    }

    pub fn max_abs(&self) -> f64 {
        self.d_x.iter().chain(&self.d_y).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn jacobian(&self) -> Jacobian {
        let (xx, xy) = spectral::gradient(self.grid, &self.d_x);
        let (yx, yy) = spectral::gradient(self.grid, &self.d_y);
        Jacobian {
            j11: xx.into_iter().map(|v| 1.0 + v).collect(),
            j12: xy,
            j21: yx,
            j22: yy.into_iter().map(|v| 1.0 + v).collect(),
        }
    }

    pub fn ensure_floor(&self, what: &str) -> Result<()> {
        let min = self.jacobian().min_det();
        if !(min > JACOBIAN_FLOOR) {
            return Err(Error::JacobianDegenerate(format!(
                "{what}: Jacobian determinant {min:.3e} below {JACOBIAN_FLOOR}"
            )));
        }
        Ok(())
    }

    pub fn interpolant(&self) -> PairInterpolant {
        PairInterpolant::new(self.grid, &self.d_x, &self.d_y)
    }

    /// Image of one point, on the universal cover.
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (dx, dy) = self.interpolant().eval(p.0, p.1);
        (p.0 + dx, p.1 + dy)
    }
}

/// `φ ∘ ψ`.
pub fn compose(outer: &DisplacementField, inner: &DisplacementField) -> Result<DisplacementField> {
    outer.grid.ensure_same(&inner.grid)?;
    let ip = outer.interpolant();
    let n = outer.grid.len();
    let (mut d_x, mut d_y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, (x, y)) in outer.grid.points().enumerate() {
        let (ex, ey) = (inner.d_x[k], inner.d_y[k]);
        let (fx, fy) = ip.eval(x + ex, y + ey);
        d_x.push(ex + fx);
        d_y.push(ey + fy);
    }
    Ok(DisplacementField::from_vecs(outer.grid, d_x, d_y))
}

#[inline]
fn residual(ip: &PairInterpolant, y: (f64, f64), x: (f64, f64)) -> ((f64, f64), f64) {
    let st = Interpolant::stencil(ip.x.grid(), y.0, y.1);
    let r = (y.0 + ip.x.apply(&st) - x.0, y.1 + ip.y.apply(&st) - x.1);
    (r, r.0.abs().max(r.1.abs()))
}

/// Damped Newton solve of `y + d(y) = x`.
fn invert_point(ip: &PairInterpolant, x: (f64, f64), guess: (f64, f64)) -> Option<(f64, f64)> {
    let grid = ip.x.grid();
    let mut y = guess;
    let (mut r, mut rn) = residual(ip, y, x);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let st = Interpolant::grad_stencil(grid, y.0, y.1);
        let (a, b) = ip.x.apply_grad(&st);
        let (c, d) = ip.y.apply_grad(&st);
        let (j11, j12, j21, j22) = (1.0 + a, b, c, 1.0 + d);
        let det = j11 * j22 - j12 * j21;
        if !(det > 0.0) {
            return None;
        }
        let step = ((j22 * r.0 - j12 * r.1) / det, (-j21 * r.0 + j11 * r.1) / det);
        if converged {
            // one polishing step past the tolerance
            let trial = (y.0 - step.0, y.1 - step.1);
            let (_, tn) = residual(ip, trial, x);
            return Some(if tn <= rn { trial } else { y });
        }
        let mut lam = 1.0;
        loop {
            let trial = (y.0 - lam * step.0, y.1 - lam * step.1);
            let (tr, tn) = residual(ip, trial, x);
            if tn < rn || lam < 1e-4 {
                y = trial;
                r = tr;
                rn = tn;
                break;
            }
            lam *= 0.5;
        }
        if rn < NEWTON_TOL {
            converged = true;
        }
    }
    converged.then_some(y)
}

/// Displacement of `φ⁻¹`.
pub fn invert(phi: &DisplacementField) -> Result<DisplacementField> {
    phi.ensure_floor("map to invert")?;
    let ip = phi.interpolant();
    let n = phi.grid.len();
    let (mut d_x, mut d_y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, x) in phi.grid.points().enumerate() {
        let guess = (x.0 - phi.d_x[k], x.1 - phi.d_y[k]);
        let y = invert_point(&ip, x, guess).ok_or_else(|| {
            Error::JacobianDegenerate(format!("inversion did not converge at node {k}"))
        })?;
        d_x.push(y.0 - x.0);
        d_y.push(y.1 - x.1);
    }
    Ok(DisplacementField::from_vecs(phi.grid, d_x, d_y))
}

/// A map together with its inverse. Swapping the two is exact.
#[derive(Clone, Debug, PartialEq)]
pub struct MapPair {
    forward: DisplacementField,
    inverse: DisplacementField,
}

impl MapPair {
    pub fn new(forward: DisplacementField) -> Result<Self> {
        let inverse = invert(&forward)?;
        Ok(Self { forward, inverse })
    }

    pub fn from_parts(forward: DisplacementField, inverse: DisplacementField) -> Result<Self> {
        forward.grid.ensure_same(&inverse.grid)?;
        Ok(Self { forward, inverse })
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self {
            forward: DisplacementField::identity(grid),
            inverse: DisplacementField::identity(grid),
        }
    }

    pub fn forward(&self) -> &DisplacementField {
        &self.forward
    }

    pub fn inverse_field(&self) -> &DisplacementField {
        &self.inverse
    }

    pub fn inverse(&self) -> MapPair {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// `self ∘ inner`.
    pub fn then_after(&self, inner: &MapPair) -> Result<MapPair> {
        Ok(Self {
            forward: compose(&self.forward, &inner.forward)?,
            inverse: compose(&inner.inverse, &self.inverse)?,
        })
    }
}

/// `[Dψ(x)]⁻¹ X(ψ(x))`, which is `(ψ⁻¹)_* X`. The map being pushed along is the
/// inverse of the field passed here.
pub fn pushforward_with_inverse(x: &VectorField, inverse: &DisplacementField) -> Result<VectorField> {
    x.grid().ensure_same(&inverse.grid)?;
    let grid = x.grid();
    let jac = inverse.jacobian();
    let ip = x.interpolant();
    let n = grid.len();
    let (mut v_x, mut v_y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, (px, py)) in grid.points().enumerate() {
        let w = ip.eval(px + inverse.d_x[k], py + inverse.d_y[k]);
        let (a, b) = jac.solve(k, w);
        v_x.push(a);
        v_y.push(b);
    }
    Ok(VectorField::from_vecs(grid, v_x, v_y))
}

/// `φ_*X = Dφ · X ∘ φ⁻¹`.
pub fn pushforward(x: &VectorField, phi: &DisplacementField) -> Result<VectorField> {
    pushforward_with_inverse(x, &invert(phi)?)
}

/// `(φ*θ)(x) = Dφ(x)ᵀ θ(φ(x))`.
pub fn pullback_oneform(theta: &OneForm, phi: &DisplacementField) -> Result<OneForm> {
    theta.grid().ensure_same(&phi.grid)?;
    let grid = phi.grid;
    let jac = phi.jacobian();
    let ip = theta.interpolant();
    let n = grid.len();
    let (mut cx, mut cy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (k, (px, py)) in grid.points().enumerate() {
        let (a, b) = ip.eval(px + phi.d_x[k], py + phi.d_y[k]);
        cx.push(jac.j11[k] * a + jac.j21[k] * b);
        cy.push(jac.j12[k] * a + jac.j22[k] * b);
    }
    Ok(OneForm::from_vecs(grid, cx, cy))
}

/// `u ∘ φ`.
pub fn compose_scalar(u: &ScalarField, phi: &DisplacementField) -> Result<ScalarField> {
    u.grid().ensure_same(&phi.grid)?;
    let ip = u.interpolant();
    let values = phi
        .grid
        .points()
        .enumerate()
        .map(|(k, (x, y))| ip.eval(x + phi.d_x[k], y + phi.d_y[k]))
        .collect();
    Ok(ScalarField::from_vec(phi.grid, values))
}

/// Rejects generator samples whose contraction with ω is not closed.
pub fn validate_generator(path: &GeneratorPath) -> Result<()> {
    let grid = path.first().grid();
    for x in path.iter() {
        grid.ensure_same(&x.grid())?;
        let defect = closedness_defect(&omega_contract(x));
        if defect > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic {
                defect,
                tolerance: SYMPLECTIC_TOL,
            });
        }
    }
    Ok(())
}

/// A symplectic isotopy sampled on a uniform time grid.
#[derive(Clone, Debug)]
pub struct Isotopy {
    generator: GeneratorPath,
    flow: TimeSeries<DisplacementField>,
    inverse_flow: TimeSeries<DisplacementField>,
    substeps: usize,
    consistency_residual: f64,
}

impl Isotopy {
    pub(crate) fn assemble(
        generator: GeneratorPath,
        flow: TimeSeries<DisplacementField>,
        inverse_flow: TimeSeries<DisplacementField>,
        substeps: usize,
    ) -> Result<Self> {
        generator.ensure_same_times(&flow)?;
        generator.ensure_same_times(&inverse_flow)?;
        let consistency_residual = consistency(&generator, &flow);
        Ok(Self {
            generator,
            flow,
            inverse_flow,
            substeps,
            consistency_residual,
        })
    }

    pub fn identity(grid: GridSpec, n_t: usize) -> Result<Self> {
        let generator = TimeSeries::from_fn(n_t, |_| VectorField::zeros(grid))?;
        let flow = TimeSeries::from_fn(n_t, |_| DisplacementField::identity(grid))?;
        Self::assemble(generator, flow.clone(), flow, 1)
    }

    pub fn generator(&self) -> &GeneratorPath {
        &self.generator
    }

    pub fn flow(&self) -> &TimeSeries<DisplacementField> {
        &self.flow
    }

    pub fn inverse_flow(&self) -> &TimeSeries<DisplacementField> {
        &self.inverse_flow
    }

    pub fn grid(&self) -> GridSpec {
        self.flow.first().grid()
    }

    pub fn n_t(&self) -> usize {
        self.flow.n_t()
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn consistency_residual(&self) -> f64 {
        self.consistency_residual
    }

    /// `0.05 · max speed · Δt`.
    pub fn consistency_bound(&self) -> f64 {
        let speed = self.generator.iter().map(VectorField::max_speed).fold(0.0, f64::max);
        0.05 * speed * self.generator.dt()
    }

    pub fn map(&self, i: usize) -> MapPair {
        MapPair {
            forward: self.flow.get(i).clone(),
            inverse: self.inverse_flow.get(i).clone(),
        }
    }

    pub fn endpoint(&self) -> MapPair {
        self.map(self.n_t() - 1)
    }

    /// Worst `|det Dφ_t − 1|` over all samples.
    pub fn area_defect(&self) -> f64 {
        self.flow.iter().map(|f| f.jacobian().area_defect()).fold(0.0, f64::max)
    }

    pub(crate) fn ensure_compatible(&self, other: &Isotopy) -> Result<()> {
        self.grid().ensure_same(&other.grid())?;
        self.flow.ensure_same_times(&other.flow)
    }
}

/// Lagrange weights on the (up to) four samples around interval `i`, at
/// fraction `s ∈ [0, 1]` of the interval.
fn time_weights(n_t: usize, i: usize, s: f64) -> (usize, Vec<f64>) {
    let m = n_t.min(4);
    let start = (i + 1).saturating_sub(m / 2).min(n_t - m);
    let nodes: Vec<f64> = (0..m).map(|q| (start + q) as f64 - i as f64).collect();
    let w = (0..m)
        .map(|q| {
            (0..m)
                .filter(|&r| r != q)
                .map(|r| (s - nodes[r]) / (nodes[q] - nodes[r]))
                .product()
        })
        .collect();
    (start, w)
}

fn field_at(ips: &[PairInterpolant], i: usize, s: f64) -> PairInterpolant {
    let (start, w) = time_weights(ips.len(), i, s);
    let terms: Vec<(f64, &PairInterpolant)> = w.iter().enumerate().map(|(q, &c)| (c, &ips[start + q])).collect();
    PairInterpolant::combine(&terms)
}

/// Classical RK4 for `dφ/dt = X_t ∘ φ`, with cubic interpolation of the
/// generator between samples.
pub fn integrate_flow(x: &GeneratorPath, substeps: usize) -> Result<Isotopy> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    validate_generator(x)?;
    let grid = x.first().grid();
    let n_t = x.n_t();
    let dt = x.dt();
    let ips: Vec<PairInterpolant> = x.iter().map(VectorField::interpolant).collect();
    let nodes: Vec<(f64, f64)> = grid.points().collect();
    let mut pos = nodes.clone();
    let mut flow = vec![DisplacementField::identity(grid)];
    let h = dt / substeps as f64;
    for i in 0..n_t - 1 {
        let stages: Vec<PairInterpolant> = (0..=2 * substeps)
            .map(|m| field_at(&ips, i, m as f64 / (2 * substeps) as f64))
            .collect();
        for p in pos.iter_mut() {
            for s in 0..substeps {
                let (f0, f1, f2) = (&stages[2 * s], &stages[2 * s + 1], &stages[2 * s + 2]);
                let k1 = f0.eval(p.0, p.1);
                let k2 = f1.eval(p.0 + 0.5 * h * k1.0, p.1 + 0.5 * h * k1.1);
                let k3 = f1.eval(p.0 + 0.5 * h * k2.0, p.1 + 0.5 * h * k2.1);
                let k4 = f2.eval(p.0 + h * k3.0, p.1 + h * k3.1);
                p.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                p.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            }
        }
        let (d_x, d_y) = pos.iter().zip(&nodes).map(|(p, q)| (p.0 - q.0, p.1 - q.1)).unzip();
        let d = DisplacementField::from_vecs(grid, d_x, d_y);
        d.ensure_floor(&format!("flow at t = {:.4}", x.time(i + 1)))?;
        flow.push(d);
    }
    let inverse = flow.iter().map(invert).collect::<Result<Vec<_>>>()?;
    Isotopy::assemble(x.clone(), TimeSeries::new(flow)?, TimeSeries::new(inverse)?, substeps)
}

/// Largest mismatch between the time derivative of the flow (finite
/// differences) and the generator evaluated along the flow.
///
/// Uses the fourth-order central difference where five samples fit, so the
/// measure is dominated by integration error rather than by the stencil.
fn consistency(generator: &GeneratorPath, flow: &TimeSeries<DisplacementField>) -> f64 {
    let n_t = flow.n_t();
    let dt = flow.dt();
    let grid = flow.first().grid();
    let f = flow.samples();
    let stencil: Vec<(usize, Vec<(usize, f64)>)> = if n_t >= 5 {
        (2..n_t - 2)
            .map(|i| {
                let c = 1.0 / (12.0 * dt);
                (i, vec![(i - 2, c), (i - 1, -8.0 * c), (i + 1, 8.0 * c), (i + 2, -c)])
            })
            .collect()
    } else if n_t >= 3 {
        (1..n_t - 1)
            .map(|i| (i, vec![(i - 1, -0.5 / dt), (i + 1, 0.5 / dt)]))
            .collect()
    } else {
        vec![(0, vec![(0, -1.0 / dt), (1, 1.0 / dt)])]
    };
    let mut worst = 0.0_f64;
    for (i, taps) in stencil {
        let ip = generator.get(i).interpolant();
        for (k, (x, y)) in grid.points().enumerate() {
            let (mut vx, mut vy) = (0.0, 0.0);
            for &(q, c) in &taps {
                vx += c * f[q].d_x[k];
                vy += c * f[q].d_y[k];
            }
            let (gx, gy) = ip.eval(x + f[i].d_x[k], y + f[i].d_y[k]);
            let (gx, gy) = if n_t == 2 {
                let ip1 = generator.get(1).interpolant();
                let (hx, hy) = ip1.eval(x + f[1].d_x[k], y + f[1].d_y[k]);
                (0.5 * (gx + hx), 0.5 * (gy + hy))
            } else {
                (gx, gy)
            };
            worst = worst.max((vx - gx).abs()).max((vy - gy).abs());
        }
    }
    worst
}

/// Finite-difference taps for `d/dt` at sample `i`: fourth order when five
/// samples are available, otherwise the best the series allows.
fn derivative_taps(n_t: usize, i: usize, dt: f64) -> Vec<(usize, f64)> {
    let scaled = |c: &[(usize, f64)], denom: f64| c.iter().map(|&(q, w)| (q, w / (denom * dt))).collect();
    if n_t >= 5 {
        let last = n_t - 1;
        match i {
            0 => scaled(&[(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)], 12.0),
            1 => scaled(&[(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)], 12.0),
            _ if i == last => scaled(
                &[(last, 25.0), (last - 1, -48.0), (last - 2, 36.0), (last - 3, -16.0), (last - 4, 3.0)],
                12.0,
            ),
            _ if i == last - 1 => scaled(
                &[(last, 3.0), (last - 1, 10.0), (last - 2, -18.0), (last - 3, 6.0), (last - 4, -1.0)],
                12.0,
            ),
            _ => scaled(&[(i - 2, 1.0), (i - 1, -8.0), (i + 1, 8.0), (i + 2, -1.0)], 12.0),
        }
    } else if n_t >= 3 {
        match i {
            0 => scaled(&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0),
            _ if i == n_t - 1 => scaled(&[(i, 3.0), (i - 1, -4.0), (i - 2, 1.0)], 2.0),
            _ => scaled(&[(i - 1, -1.0), (i + 1, 1.0)], 2.0),
        }
    } else {
        scaled(&[(0, -1.0), (1, 1.0)], 1.0)
    }
}

/// Recovers `φ̇_t = (dφ_t/dt) ∘ φ_t⁻¹` from a sampled flow by finite
/// differences in time.
pub fn generator_from_flow(flow: &TimeSeries<DisplacementField>) -> Result<GeneratorPath> {
    let n_t = flow.n_t();
    let dt = flow.dt();
    let grid = flow.first().grid();
    let f = flow.samples();
    let taps = |i: usize| derivative_taps(n_t, i, dt);
    let mut out = Vec::with_capacity(n_t);
    for i in 0..n_t {
        let (mut vx, mut vy) = (vec![0.0; grid.len()], vec![0.0; grid.len()]);
        for (q, c) in taps(i) {
            for k in 0..grid.len() {
                vx[k] += c * f[q].d_x[k];
                vy[k] += c * f[q].d_y[k];
            }
        }
        let inv = invert(&f[i])?;
        let ip = PairInterpolant::new(grid, &vx, &vy);
        let (gx, gy) = grid
            .points()
            .enumerate()
            .map(|(k, (x, y))| ip.eval(x + inv.d_x[k], y + inv.d_y[k]))
            .unzip();
        out.push(VectorField::from_vecs(grid, gx, gy));
    }
    TimeSeries::new(out)
}

/// `Φ⁻¹ = (φ_t⁻¹)` with generator `−(φ_t⁻¹)_* φ̇_t`.
pub fn inverse_isotopy(phi: &Isotopy) -> Result<Isotopy> {
    let generator = phi
        .generator
        .samples()
        .iter()
        .zip(phi.flow.iter())
        .map(|(x, f)| Ok(pushforward_with_inverse(x, f)?.scale(-1.0)))
        .collect::<Result<Vec<_>>>()?;
    Isotopy::assemble(
        TimeSeries::new(generator)?,
        phi.inverse_flow.clone(),
        phi.flow.clone(),
        phi.substeps,
    )
}

/// `ρ_t = φ_t ∘ ψ_t` with generator `φ̇_t + (φ_t)_* ψ̇_t`.
pub fn compose_isotopies(phi: &Isotopy, psi: &Isotopy) -> Result<Isotopy> {
    phi.ensure_compatible(psi)?;
    let n_t = phi.n_t();
    let (mut gen, mut flow, mut inv) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n_t {
        let f = compose(phi.flow.get(i), psi.flow.get(i))?;
        f.ensure_floor("composed flow")?;
        flow.push(f);
        inv.push(compose(psi.inverse_flow.get(i), phi.inverse_flow.get(i))?);
        let pushed = pushforward_with_inverse(psi.generator.get(i), phi.inverse_flow.get(i))?;
        gen.push(phi.generator.get(i) + &pushed);
    }
    Isotopy::assemble(
        TimeSeries::new(gen)?,
        TimeSeries::new(flow)?,
        TimeSeries::new(inv)?,
        phi.substeps.max(psi.substeps),
    )
}

/// The commutator isotopy together with the four pieces of its generator.
#[derive(Clone, Debug)]
pub struct Commutator {
    pub isotopy: Isotopy,
    /// `φ̇_t`
    pub x: GeneratorPath,
    /// `(φ_t)_* ψ̇_t`
    pub y: GeneratorPath,
    /// `−(φ_t ψ_t φ_t⁻¹)_* φ̇_t`
    pub z: GeneratorPath,
    /// `−(σ_t)_* ψ̇_t`
    pub u: GeneratorPath,
}

/// `σ_t = φ_t ψ_t φ_t⁻¹ ψ_t⁻¹`, built by composing stored flows.
pub fn commutator_isotopy(phi: &Isotopy, psi: &Isotopy) -> Result<Commutator> {
    phi.ensure_compatible(psi)?;
    let n_t = phi.n_t();
    let mut flow = Vec::with_capacity(n_t);
    let mut inv = Vec::with_capacity(n_t);
    let (mut xs, mut ys, mut zs, mut us, mut gen) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 0..n_t {
        let (f, fi) = (phi.flow.get(i), phi.inverse_flow.get(i));
        let (p, pi) = (psi.flow.get(i), psi.inverse_flow.get(i));
        let kappa = compose(&compose(f, p)?, fi)?;
        let kappa_inv = compose(&compose(f, pi)?, fi)?;
        let sigma = compose(&kappa, pi)?;
        let sigma_inv = compose(p, &kappa_inv)?;
        sigma.ensure_floor("commutator flow")?;
        let (phid, psid) = (phi.generator.get(i), psi.generator.get(i));
        let x = phid.clone();
        let y = pushforward_with_inverse(psid, fi)?;
        let z = pushforward_with_inverse(phid, &kappa_inv)?.scale(-1.0);
        let u = pushforward_with_inverse(psid, &sigma_inv)?.scale(-1.0);
        gen.push(x.axpy(1.0, &y).axpy(1.0, &z).axpy(1.0, &u));
        xs.push(x);
        ys.push(y);
        zs.push(z);
        us.push(u);
        flow.push(sigma);
        inv.push(sigma_inv);
    }
    Ok(Commutator {
        isotopy: Isotopy::assemble(
            TimeSeries::new(gen)?,
            TimeSeries::new(flow)?,
            TimeSeries::new(inv)?,
            phi.substeps.max(psi.substeps),
        )?,
        x: TimeSeries::new(xs)?,
        y: TimeSeries::new(ys)?,
        z: TimeSeries::new(zs)?,
        u: TimeSeries::new(us)?,
    })
}

/// Flow of `X_{H_t}` with each `H_t` shifted to grid mean zero.
pub fn hamiltonian_isotopy(h: &TimeSeries<ScalarField>, substeps: usize) -> Result<Isotopy> {
    let generator = h.map(|ht| hamiltonian_vector_field(&ht.centered()));
    integrate_flow(&generator, substeps)
}

#[inline]
fn wrap(z: f64) -> f64 {
    z - z.round()
}

/// `sup_x d₀(φ(x), ψ(x))` over grid nodes, with the flat torus distance.
pub fn map_distance(a: &DisplacementField, b: &DisplacementField) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    Ok((0..a.grid.len())
        .map(|k| wrap(a.d_x[k] - b.d_x[k]).hypot(wrap(a.d_y[k] - b.d_y[k])))
        .fold(0.0, f64::max))
}

/// `d̄(φ, ψ)`: the larger of the forward and inverse sup distances.
pub fn c0_map_distance(a: &MapPair, b: &MapPair) -> Result<f64> {
    Ok(map_distance(&a.forward, &b.forward)?.max(map_distance(&a.inverse, &b.inverse)?))
}

/// `sup_t d̄(φ_t, ψ_t)` for bare flows; inverses are computed numerically.
pub fn c0_distance(f: &TimeSeries<DisplacementField>, g: &TimeSeries<DisplacementField>) -> Result<f64> {
    f.ensure_same_times(g)?;
    let mut worst = 0.0_f64;
    for (a, b) in f.iter().zip(g.iter()) {
        let fwd = map_distance(a, b)?;
        let inv = map_distance(&invert(a)?, &invert(b)?)?;
        worst = worst.max(fwd).max(inv);
    }
    Ok(worst)
}

/// `sup_t d̄(φ_t, ψ_t)` using the inverse flows stored in the isotopies.
pub fn c0_distance_isotopies(phi: &Isotopy, psi: &Isotopy) -> Result<f64> {
    phi.ensure_compatible(psi)?;
    let mut worst = 0.0_f64;
    for i in 0..phi.n_t() {
        worst = worst.max(c0_map_distance(&phi.map(i), &psi.map(i))?);
    }
    Ok(worst)
}
