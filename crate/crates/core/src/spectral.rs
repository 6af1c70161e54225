//! Trigonometric transforms on the periodic grid.
//!
//! Every field is treated as band-limited at the grid Nyquist frequency. Odd
//! derivatives drop the Nyquist modes, so the gradient of any field has no
//! Nyquist content and the discrete curl of a discrete gradient vanishes to
//! round-off.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::GridSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Signed wavenumber of index `i` on an `n`-point periodic axis, `None` at Nyquist.
pub(crate) fn wavenumber(i: usize, n: usize) -> Option<f64> {
    match i.cmp(&(n / 2)) {
        std::cmp::Ordering::Less => Some(i as f64),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(i as f64 - n as f64),
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

fn run(grid: GridSpec, mut buf: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    let (nx, ny) = (grid.n_x(), grid.n_y());
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let (fx, fy) = if inverse {
            (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
        } else {
            (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
        };
        fx.process(&mut buf);
        let mut cols = transpose(&buf, ny, nx);
        fy.process(&mut cols);
        transpose(&cols, nx, ny)
    })
}

/// Forward 2-D transform of row-major real samples (x fastest).
pub(crate) fn forward(grid: GridSpec, values: &[f64]) -> Vec<Complex64> {
    let buf = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    run(grid, buf, false)
}

/// Inverse transform, normalised, keeping the real part.
pub(crate) fn inverse(grid: GridSpec, spec: Vec<Complex64>) -> Vec<f64> {
    let scale = 1.0 / grid.len() as f64;
    run(grid, spec, true)
        .into_iter()
        .map(|c| c.re * scale)
        .collect()
}

/// Multiplies a spectrum by `(2πi kx)^ox (2πi ky)^oy`, zeroing Nyquist modes
/// along any differentiated axis.
fn apply_derivative(grid: GridSpec, spec: &[Complex64], ox: u32, oy: u32) -> Vec<Complex64> {
    let (nx, ny) = (grid.n_x(), grid.n_y());
    let mut out = spec.to_vec();
    for j in 0..ny {
        let ky = wavenumber(j, ny);
        for i in 0..nx {
            let kx = wavenumber(i, nx);
            let idx = j * nx + i;
            let fac_x = match (ox, kx) {
                (0, _) => Complex64::new(1.0, 0.0),
                (_, None) => Complex64::new(0.0, 0.0),
                (o, Some(k)) => Complex64::new(0.0, 2.0 * PI * k).powu(o),
            };
            let fac_y = match (oy, ky) {
                (0, _) => Complex64::new(1.0, 0.0),
                (_, None) => Complex64::new(0.0, 0.0),
                (o, Some(k)) => Complex64::new(0.0, 2.0 * PI * k).powu(o),
            };
            out[idx] *= fac_x * fac_y;
        }
    }
    out
}

pub(crate) fn partial(grid: GridSpec, values: &[f64], ox: u32, oy: u32) -> Vec<f64> {
    let spec = forward(grid, values);
    inverse(grid, apply_derivative(grid, &spec, ox, oy))
}

/// `(∂x f, ∂y f)` from a single forward transform.
pub(crate) fn gradient(grid: GridSpec, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let spec = forward(grid, values);
    (
        inverse(grid, apply_derivative(grid, &spec, 1, 0)),
        inverse(grid, apply_derivative(grid, &spec, 0, 1)),
    )
}

/// `(∂x f, ∂y f, ∂x∂y f)`, the nodal data of a bicubic Hermite patch.
pub(crate) fn hermite_data(grid: GridSpec, values: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let spec = forward(grid, values);
    (
        inverse(grid, apply_derivative(grid, &spec, 1, 0)),
        inverse(grid, apply_derivative(grid, &spec, 0, 1)),
        inverse(grid, apply_derivative(grid, &spec, 1, 1)),
    )
}

/// True when neither index of the mode sits on a Nyquist line.
pub(crate) fn resolved(grid: GridSpec, idx: usize) -> Option<(f64, f64)> {
    let (i, j) = (idx % grid.n_x(), idx / grid.n_x());
    Some((wavenumber(i, grid.n_x())?, wavenumber(j, grid.n_y())?))
}

/// Solves `-Δu = f` (flat Laplacian) for the mean-zero `u`, ignoring the mean
/// and Nyquist content of `f`.
pub(crate) fn inverse_laplacian(grid: GridSpec, values: &[f64]) -> Vec<f64> {
    let mut spec = forward(grid, values);
    for (idx, c) in spec.iter_mut().enumerate() {
        match resolved(grid, idx) {
            Some((kx, ky)) if kx != 0.0 || ky != 0.0 => {
                *c /= 4.0 * PI * PI * (kx * kx + ky * ky);
            }
            _ => *c = Complex64::new(0.0, 0.0),
        }
    }
    inverse(grid, spec)
}

/// Removes Nyquist and mean content, the range of the discrete operators.
pub(crate) fn project_resolved(grid: GridSpec, values: &[f64]) -> Vec<f64> {
    let mut spec = forward(grid, values);
    for (idx, c) in spec.iter_mut().enumerate() {
        match resolved(grid, idx) {
            Some((kx, ky)) if kx != 0.0 || ky != 0.0 => {}
            _ => *c = Complex64::new(0.0, 0.0),
        }
    }
    inverse(grid, spec)
}
