//! Periodic bicubic Hermite interpolation.
//!
//! Nodal slopes come from spectral differentiation, so the patch reproduces
//! node values exactly and is fourth-order accurate for smooth fields.

use crate::grid::GridSpec;
use crate::spectral;

/// Bicubic Hermite data: per node `[f, h_x f_x, h_y f_y, h_x h_y f_xy]`.
#[derive(Clone, Debug)]
pub struct Interpolant {
    grid: GridSpec,
    nodes: Vec<[f64; 4]>,
}

/// Corner indices and tensor weights for one evaluation point.
#[derive(Clone, Copy, Debug)]
pub struct Stencil {
    corners: [usize; 4],
    w: [[f64; 4]; 4],
}

/// A [`Stencil`] plus the weights of its two partial derivatives.
#[derive(Clone, Copy, Debug)]
pub struct GradStencil {
    base: Stencil,
    dw_s: [[f64; 4]; 4],
    dw_t: [[f64; 4]; 4],
}

impl GradStencil {
    pub fn value(&self) -> &Stencil {
        &self.base
    }
}

#[inline]
fn hermite(s: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let s2 = s * s;
    let s3 = s2 * s;
    // values (P0, P1), slopes (Q0, Q1) and their derivatives
    let p = [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2];
    let q = [s3 - 2.0 * s2 + s, s3 - s2];
    let dp = [6.0 * s2 - 6.0 * s, -6.0 * s2 + 6.0 * s];
    let dq = [3.0 * s2 - 4.0 * s + 1.0, 3.0 * s2 - 2.0 * s];
    (p, q, dp, dq)
}

#[inline]
fn hermite_values(s: f64) -> ([f64; 2], [f64; 2]) {
    let s2 = s * s;
    let s3 = s2 * s;
    ([2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2], [s3 - 2.0 * s2 + s, s3 - s2])
}

#[inline]
fn locate(coord: f64, n: usize) -> (usize, usize, f64) {
    let mut u = coord.rem_euclid(1.0) * n as f64;
    let r = u.round();
    if (u - r).abs() < 1e-12 {
        u = r;
    }
    let mut i0 = u.floor();
    let mut s = u - i0;
    if i0 as usize >= n {
        i0 = 0.0;
        s = 0.0;
    }
    let i0 = i0 as usize;
    (i0, (i0 + 1) % n, s)
}

impl Interpolant {
    pub fn new(grid: GridSpec, values: &[f64]) -> Self {
        let (fx, fy, fxy) = spectral::hermite_data(grid, values);
        let (hx, hy) = (grid.h_x(), grid.h_y());
        let nodes = values
            .iter()
            .enumerate()
            .map(|(k, &f)| [f, fx[k] * hx, fy[k] * hy, fxy[k] * hx * hy])
            .collect();
        Self { grid, nodes }
    }

    /// Weighted sum of interpolants on one grid (Hermite data is linear in the field).
    pub fn combine(terms: &[(f64, &Interpolant)]) -> Self {
        let grid = terms[0].1.grid;
        let mut nodes = vec![[0.0; 4]; grid.len()];
        for &(w, ip) in terms {
            if w == 0.0 {
                continue;
            }
            for (acc, src) in nodes.iter_mut().zip(&ip.nodes) {
                for q in 0..4 {
                    acc[q] += w * src[q];
                }
            }
        }
        Self { grid, nodes }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn stencil(grid: GridSpec, x: f64, y: f64) -> Stencil {
        let (nx, ny) = (grid.n_x(), grid.n_y());
        let (i0, i1, s) = locate(x, nx);
        let (j0, j1, t) = locate(y, ny);
        let (ps, qs) = hermite_values(s);
        let (pt, qt) = hermite_values(t);
        let corners = [j0 * nx + i0, j0 * nx + i1, j1 * nx + i0, j1 * nx + i1];
        let mut w = [[0.0; 4]; 4];
        for (c, (a, b)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            w[c] = [ps[a] * pt[b], qs[a] * pt[b], ps[a] * qt[b], qs[a] * qt[b]];
        }
        Stencil { corners, w }
    }

    pub fn grad_stencil(grid: GridSpec, x: f64, y: f64) -> GradStencil {
        let (nx, ny) = (grid.n_x(), grid.n_y());
        let (i0, i1, s) = locate(x, nx);
        let (j0, j1, t) = locate(y, ny);
        let (ps, qs, dps, dqs) = hermite(s);
        let (pt, qt, dpt, dqt) = hermite(t);
        let corners = [j0 * nx + i0, j0 * nx + i1, j1 * nx + i0, j1 * nx + i1];
        let mut w = [[0.0; 4]; 4];
        let mut dw_s = [[0.0; 4]; 4];
        let mut dw_t = [[0.0; 4]; 4];
        for (c, (a, b)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            w[c] = [ps[a] * pt[b], qs[a] * pt[b], ps[a] * qt[b], qs[a] * qt[b]];
            dw_s[c] = [dps[a] * pt[b], dqs[a] * pt[b], dps[a] * qt[b], dqs[a] * qt[b]];
            dw_t[c] = [ps[a] * dpt[b], qs[a] * dpt[b], ps[a] * dqt[b], qs[a] * dqt[b]];
        }
        GradStencil {
            base: Stencil { corners, w },
            dw_s,
            dw_t,
        }
    }

    #[inline]
    pub fn apply(&self, st: &Stencil) -> f64 {
        let mut acc = 0.0;
        for c in 0..4 {
            let n = &self.nodes[st.corners[c]];
            acc += st.w[c][0] * n[0] + st.w[c][1] * n[1] + st.w[c][2] * n[2] + st.w[c][3] * n[3];
        }
        acc
    }

    /// Gradient of the interpolating patch in torus coordinates.
    #[inline]
    pub fn apply_grad(&self, st: &GradStencil) -> (f64, f64) {
        let (mut gs, mut gt) = (0.0, 0.0);
        for c in 0..4 {
            let n = &self.nodes[st.base.corners[c]];
            for q in 0..4 {
                gs += st.dw_s[c][q] * n[q];
                gt += st.dw_t[c][q] * n[q];
            }
        }
        (gs * self.grid.n_x() as f64, gt * self.grid.n_y() as f64)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.apply(&Self::stencil(self.grid, x, y))
    }

    pub fn eval_grad(&self, x: f64, y: f64) -> (f64, f64) {
        self.apply_grad(&Self::grad_stencil(self.grid, x, y))
    }
}

/// Interpolants for the two components of a vector-valued field.
#[derive(Clone, Debug)]
pub struct PairInterpolant {
    pub x: Interpolant,
    pub y: Interpolant,
}

impl PairInterpolant {
    pub fn new(grid: GridSpec, a: &[f64], b: &[f64]) -> Self {
        Self {
            x: Interpolant::new(grid, a),
            y: Interpolant::new(grid, b),
        }
    }

    pub fn combine(terms: &[(f64, &PairInterpolant)]) -> Self {
        let xs: Vec<_> = terms.iter().map(|(w, p)| (*w, &p.x)).collect();
        let ys: Vec<_> = terms.iter().map(|(w, p)| (*w, &p.y)).collect();
        Self {
            x: Interpolant::combine(&xs),
            y: Interpolant::combine(&ys),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let st = Interpolant::stencil(self.x.grid(), x, y);
        (self.x.apply(&st), self.y.apply(&st))
    }
}
