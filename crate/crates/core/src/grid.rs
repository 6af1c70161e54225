//! Scalar fields, 1-forms and vector fields sampled on a periodic grid over
//! the flat torus `[0,1)²`, with spectral calculus and quadrature.
//!
//! Samples are stored row-major with `x` varying fastest: node `(i, j)` sits at
//! `(i/n_x, j/n_y)` and has flat index `j * n_x + i`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{Interpolant, PairInterpolant};
use crate::spectral;

/// Node counts of the periodic grid; the period is 1 in both directions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    n_x: usize,
    n_y: usize,
}

impl GridSpec {
    pub fn new(n_x: usize, n_y: usize) -> Result<Self> {
        if n_x < 8 || n_y < 8 || n_x % 2 != 0 || n_y % 2 != 0 {
            return Err(Error::InvalidGrid { n_x, n_y });
        }
        Ok(Self { n_x, n_y })
    }

    /// The default 64×64 grid.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h_x(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn h_y(&self) -> f64 {
        1.0 / self.n_y as f64
    }

    /// Coordinates of the node with flat index `idx`.
    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let i = idx % self.n_x;
        let j = idx / self.n_x;
        (i as f64 / self.n_x as f64, j as f64 / self.n_y as f64)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.n_x, self.n_y, other.n_x, other.n_y
            )));
        }
        Ok(())
    }
}

fn check_values(grid: &GridSpec, what: &'static str, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch {
            what,
            expected: grid.len(),
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what, index });
    }
    Ok(())
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// A real function on the torus, one value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, "scalar field", &values)?;
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_vec(grid, grid.points().map(|(x, y)| f(x, y)).collect())
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// The same field shifted to grid mean zero.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "scalar fields on different grids");
        Self::from_vec(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(self.grid, &self.values)
    }
}

/// A 1-form `comp_x dx + comp_y dy`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    grid: GridSpec,
    comp_x: Vec<f64>,
    comp_y: Vec<f64>,
}

impl OneForm {
    pub fn new(grid: GridSpec, comp_x: Vec<f64>, comp_y: Vec<f64>) -> Result<Self> {
        check_values(&grid, "1-form dx coefficient", &comp_x)?;
        check_values(&grid, "1-form dy coefficient", &comp_y)?;
        Ok(Self {
            grid,
            comp_x,
            comp_y,
        })
    }

    pub(crate) fn from_vecs(grid: GridSpec, comp_x: Vec<f64>, comp_y: Vec<f64>) -> Self {
        Self {
            grid,
            comp_x,
            comp_y,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (cx, cy) = grid.points().map(|(x, y)| f(x, y)).unzip();
        Self::from_vecs(grid, cx, cy)
    }

    pub fn constant(grid: GridSpec, a: f64, b: f64) -> Self {
        Self::from_vecs(grid, vec![a; grid.len()], vec![b; grid.len()])
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0, 0.0)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn comp_x(&self) -> &[f64] {
        &self.comp_x
    }

    pub fn comp_y(&self) -> &[f64] {
        &self.comp_y
    }

    /// Pointwise pairing with a vector field, `θ(X)`.
    pub fn contract(&self, v: &VectorField) -> ScalarField {
        assert_eq!(self.grid, v.grid());
        ScalarField::from_vec(
            self.grid,
            (0..self.grid.len())
                .map(|k| self.comp_x[k] * v.v_x()[k] + self.comp_y[k] * v.v_y()[k])
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.comp_x).max(max_abs(&self.comp_y))
    }

    /// Grid means of the two coefficients: the periods along the x- and y-cycles.
    pub fn periods(&self) -> (f64, f64) {
        let n = self.grid.len() as f64;
        (
            self.comp_x.iter().sum::<f64>() / n,
            self.comp_y.iter().sum::<f64>() / n,
        )
    }

    pub fn interpolant(&self) -> PairInterpolant {
        PairInterpolant::new(self.grid, &self.comp_x, &self.comp_y)
    }
}

/// A velocity field `(v_x, v_y)` on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    v_x: Vec<f64>,
    v_y: Vec<f64>,
}

impl VectorField {
    pub fn new(grid: GridSpec, v_x: Vec<f64>, v_y: Vec<f64>) -> Result<Self> {
        check_values(&grid, "vector field x component", &v_x)?;
        check_values(&grid, "vector field y component", &v_y)?;
        Ok(Self { grid, v_x, v_y })
    }

    pub(crate) fn from_vecs(grid: GridSpec, v_x: Vec<f64>, v_y: Vec<f64>) -> Self {
        Self { grid, v_x, v_y }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (vx, vy) = grid.points().map(|(x, y)| f(x, y)).unzip();
        Self::from_vecs(grid, vx, vy)
    }

    pub fn constant(grid: GridSpec, a: f64, b: f64) -> Self {
        Self::from_vecs(grid, vec![a; grid.len()], vec![b; grid.len()])
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0, 0.0)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn v_x(&self) -> &[f64] {
        &self.v_x
    }

    pub fn v_y(&self) -> &[f64] {
        &self.v_y
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.v_x).max(max_abs(&self.v_y))
    }

    /// Largest pointwise Euclidean speed.
    pub fn max_speed(&self) -> f64 {
        self.v_x
            .iter()
            .zip(&self.v_y)
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn interpolant(&self) -> PairInterpolant {
        PairInterpolant::new(self.grid, &self.v_x, &self.v_y)
    }
}

macro_rules! linear_ops {
    ($ty:ident, $($f:ident),+) => {
        impl $ty {
            /// `self + c * other`.
            pub fn axpy(&self, c: f64, other: &Self) -> Self {
                assert_eq!(self.grid, other.grid, concat!(stringify!($ty), "s on different grids"));
                Self {
                    grid: self.grid,
                    $($f: self.$f.iter().zip(&other.$f).map(|(a, b)| a + c * b).collect(),)+
                }
            }

            pub fn scale(&self, c: f64) -> Self {
                Self { grid: self.grid, $($f: self.$f.iter().map(|a| c * a).collect(),)+ }
            }
        }

        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: Self) -> $ty {
                self.axpy(1.0, rhs)
            }
        }

        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: Self) -> $ty {
                self.axpy(-1.0, rhs)
            }
        }

        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.scale(-1.0)
            }
        }

        impl Mul<&$ty> for f64 {
            type Output = $ty;
            fn mul(self, rhs: &$ty) -> $ty {
                rhs.scale(self)
            }
        }
    };
}

linear_ops!(ScalarField, values);
linear_ops!(OneForm, comp_x, comp_y);
linear_ops!(VectorField, v_x, v_y);

/// Samples of a family indexed by `t ∈ [0,1]` on the uniform grid `t_i = i/(n_t-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    samples: Vec<T>,
}

impl<T> TimeSeries<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a time series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        Ok(Self { samples })
    }

    /// Samples `f(t_i)` for `i = 0..n_t`.
    pub fn from_fn(n_t: usize, f: impl FnMut(f64) -> T) -> Result<Self> {
        let samples = Self::times_for(n_t).map(f).collect();
        Self::new(samples)
    }

    pub fn try_from_fn(n_t: usize, f: impl FnMut(f64) -> Result<T>) -> Result<Self> {
        let samples = Self::times_for(n_t).map(f).collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    fn times_for(n_t: usize) -> impl Iterator<Item = f64> {
        let denom = n_t.saturating_sub(1).max(1) as f64;
        (0..n_t).map(move |i| i as f64 / denom)
    }

    pub fn n_t(&self) -> usize {
        self.samples.len()
    }

    pub fn dt(&self) -> f64 {
        1.0 / (self.samples.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_t()).map(|i| self.time(i))
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> &T {
        &self.samples[i]
    }

    pub fn first(&self) -> &T {
        &self.samples[0]
    }

    pub fn last(&self) -> &T {
        &self.samples[self.samples.len() - 1]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.samples.iter()
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeSeries<U> {
        TimeSeries {
            samples: self.samples.iter().map(f).collect(),
        }
    }

    pub fn try_map<U>(&self, f: impl FnMut(&T) -> Result<U>) -> Result<TimeSeries<U>> {
        Ok(TimeSeries {
            samples: self.samples.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub(crate) fn ensure_same_times<U>(&self, other: &TimeSeries<U>) -> Result<()> {
        if self.n_t() != other.n_t() {
            return Err(Error::GridMismatch(format!(
                "time grids with {} and {} samples",
                self.n_t(),
                other.n_t()
            )));
        }
        Ok(())
    }
}

/// Spectral gradient `du`.
pub fn d_scalar(u: &ScalarField) -> OneForm {
    let (gx, gy) = spectral::gradient(u.grid, &u.values);
    OneForm::from_vecs(u.grid, gx, gy)
}

/// Max-abs of the spectral curl `∂x θ_y − ∂y θ_x`; zero for closed forms.
pub fn closedness_defect(theta: &OneForm) -> f64 {
    let g = theta.grid;
    let a = spectral::partial(g, &theta.comp_y, 1, 0);
    let b = spectral::partial(g, &theta.comp_x, 0, 1);
    a.iter()
        .zip(&b)
        .fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()))
}

/// `i_X ω` for `ω = dx∧dy`: `v_x dy − v_y dx`.
pub fn omega_contract(x: &VectorField) -> OneForm {
    OneForm::from_vecs(x.grid, x.v_y.iter().map(|v| -v).collect(), x.v_x.clone())
}

/// Inverse of [`omega_contract`]: `v_x = θ_y`, `v_y = −θ_x`.
pub fn omega_contract_inv(theta: &OneForm) -> VectorField {
    VectorField::from_vecs(
        theta.grid,
        theta.comp_y.clone(),
        theta.comp_x.iter().map(|v| -v).collect(),
    )
}

/// Hamiltonian vector field `X_H` with `i(X_H)ω = dH`.
pub fn hamiltonian_vector_field(h: &ScalarField) -> VectorField {
    omega_contract_inv(&d_scalar(h))
}

/// Oscillation `max u − min u` over the grid nodes.
pub fn osc(u: &ScalarField) -> f64 {
    u.max() - u.min()
}

/// Periodic bicubic evaluation of a scalar field at an arbitrary point.
pub fn interpolate(u: &ScalarField, p: (f64, f64)) -> f64 {
    u.interpolant().eval(p.0, p.1)
}

/// Periodic bicubic evaluation of both components of a vector field.
pub fn interpolate_vector(v: &VectorField, p: (f64, f64)) -> (f64, f64) {
    v.interpolant().eval(p.0, p.1)
}

/// Trapezoid rule over the uniform time grid on `[0,1]`.
pub fn time_integral(s: &TimeSeries<f64>) -> f64 {
    trapezoid(s.samples(), s.dt())
}

pub(crate) fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..n - 1].iter().sum();
    dt * (inner + 0.5 * (values[0] + values[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn g64() -> GridSpec {
        GridSpec::square(64).unwrap()
    }

    #[test]
    fn grid_rejects_odd_and_small() {
        assert!(GridSpec::new(7, 8).is_err());
        assert!(GridSpec::new(8, 9).is_err());
        assert!(GridSpec::new(6, 6).is_err());
        assert!(GridSpec::new(8, 10).is_ok());
    }

    #[test]
    fn fields_reject_bad_input() {
        let g = GridSpec::square(8).unwrap();
        assert!(matches!(
            ScalarField::new(g, vec![0.0; 10]),
            Err(Error::ShapeMismatch { .. })
        ));
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(matches!(
            ScalarField::new(g, v),
            Err(Error::NonFinite { index: 5, .. })
        ));
    }

    #[test]
    fn d_of_zero_and_constants_vanish() {
        let g = g64();
        assert_eq!(d_scalar(&ScalarField::zeros(g)).max_abs(), 0.0);
        assert!(d_scalar(&ScalarField::constant(g, 3.7)).max_abs() < 1e-13);
    }

    #[test]
    fn d_of_sine() {
        let g = g64();
        let u = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin() / (2.0 * PI));
        let du = d_scalar(&u);
        let exact = OneForm::from_fn(g, |x, _| ((2.0 * PI * x).cos(), 0.0));
        assert!((&du - &exact).max_abs() < 1e-13);

        let u = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        let exact = OneForm::from_fn(g, |x, y| {
            (
                2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin(),
                2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).cos(),
            )
        });
        assert!((&d_scalar(&u) - &exact).max_abs() < 1e-12);
    }

    #[test]
    fn closedness() {
        let g = g64();
        assert!(closedness_defect(&OneForm::constant(g, 3.0, 0.0)) < 1e-13);
        let u = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() * (2.0 * PI * y).sin());
        assert!(closedness_defect(&d_scalar(&u)) < 1e-12);
        let theta = OneForm::from_fn(g, |x, _| (0.0, (2.0 * PI * x).cos()));
        assert!((closedness_defect(&theta) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn contraction_conventions() {
        let g = GridSpec::square(8).unwrap();
        let a = omega_contract(&VectorField::constant(g, 2.5, 0.0));
        assert_eq!(a, OneForm::constant(g, 0.0, 2.5));
        let b = omega_contract(&VectorField::constant(g, 0.0, 1.5));
        assert_eq!(b, OneForm::constant(g, -1.5, 0.0));
        assert_eq!(
            omega_contract_inv(&OneForm::constant(g, 0.0, 2.0)),
            VectorField::constant(g, 2.0, 0.0)
        );
        assert_eq!(
            omega_contract_inv(&OneForm::constant(g, -1.0, 0.0)),
            VectorField::constant(g, 0.0, 1.0)
        );

        let g = g64();
        let x = VectorField::from_fn(g, |_, y| (-(2.0 * PI * y).sin(), 0.0));
        let h = ScalarField::from_fn(g, |_, y| (2.0 * PI * y).cos() / (2.0 * PI));
        assert!((&omega_contract(&x) - &d_scalar(&h)).max_abs() < 1e-13);
    }

    #[test]
    fn oscillation() {
        let g = g64();
        assert_eq!(osc(&ScalarField::constant(g, 4.0)), 0.0);
        let u = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin() / (2.0 * PI));
        assert!((osc(&u) - 1.0 / PI).abs() < 1e-3);
        let shifted = u.map(|v| v + 12.5);
        assert!((osc(&shifted) - osc(&u)).abs() < 1e-12);
    }

    #[test]
    fn interpolation_at_nodes_and_constants() {
        let g = g64();
        let u = ScalarField::from_fn(g, |x, y| (2.0 * PI * x).sin() + (4.0 * PI * y).cos() * x);
        let ip = u.interpolant();
        for k in [0, 17, 1000, 4095] {
            let (x, y) = g.point(k);
            assert_eq!(ip.eval(x, y), u.values()[k]);
        }
        let c = ScalarField::constant(g, 2.25);
        for p in [(0.123, 0.77), (-3.4, 1.999), (0.5, 0.0)] {
            assert!((interpolate(&c, p) - 2.25).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_converges_third_order_or_better() {
        let err = |n: usize| {
            let g = GridSpec::square(n).unwrap();
            let u = ScalarField::from_fn(g, |x, _| (2.0 * PI * x).sin());
            let x = 0.25 + 1.0 / (2.0 * n as f64);
            (interpolate(&u, (x, 0.0)) - (2.0 * PI * x).sin()).abs()
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        assert!(e64 < 64f64.powi(-3));
        assert!(e16 / e32 >= 7.0, "ratio {}", e16 / e32);
        assert!(e32 / e64 >= 7.0, "ratio {}", e32 / e64);
    }

    #[test]
    fn trapezoid_rule() {
        let c = TimeSeries::from_fn(9, |_| 1.75).unwrap();
        assert!((time_integral(&c) - 1.75).abs() < 1e-15);
        let lin = TimeSeries::from_fn(65, |t| t).unwrap();
        assert_eq!(time_integral(&lin), 0.5);
        let s = TimeSeries::from_fn(65, |t| (PI * t).sin()).unwrap();
        assert!((time_integral(&s) - 2.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn trapezoid_second_order() {
        let err = |n: usize| {
            let s = TimeSeries::from_fn(n, |t| (PI * t).sin()).unwrap();
            (time_integral(&s) - 2.0 / PI).abs()
        };
        for n in [9, 17, 33] {
            assert!(err(n) / err(2 * n - 1) >= 3.5);
        }
    }

    #[test]
    fn time_series_needs_two_samples() {
        assert!(TimeSeries::new(vec![1.0]).is_err());
    }
}
