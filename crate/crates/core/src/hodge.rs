//! Hodge decomposition of closed 1-forms on the torus for flat and variable
//! Riemannian metrics.
//!
//! A closed form `θ` splits as `Σ λᵢ hᵢ + du` where the `hᵢ` are harmonic for
//! the metric. The coefficients `λᵢ` are read off from the periods of `θ`
//! (its integrals along the two fundamental cycles), which do not depend on
//! the metric; only the potential `u` does.

use crate::error::{Error, Result};
use crate::grid::{closedness_defect, d_scalar, osc, GridSpec, OneForm, ScalarField};
use crate::spectral;

/// Closedness threshold applied by [`hodge_decompose`].
pub const CLOSED_TOL: f64 = 1e-8;
/// Relative residual at which the conjugate-gradient solve stops.
pub const CG_REL_TOL: f64 = 1e-10;

/// A Riemannian metric `g11 dx² + 2 g12 dx dy + g22 dy²` sampled on the grid.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    g11: ScalarField,
    g12: ScalarField,
    g22: ScalarField,
    is_flat: bool,
    tag: String,
    sqrt_det: Vec<f64>,
    // √det g · g^{ij}
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
}

impl PartialEq for MetricSpec {
    fn eq(&self, other: &Self) -> bool {
        self.g11 == other.g11 && self.g12 == other.g12 && self.g22 == other.g22
    }
}

impl MetricSpec {
    pub fn flat(grid: GridSpec) -> Self {
        Self::build(
            ScalarField::constant(grid, 1.0),
            ScalarField::zeros(grid),
            ScalarField::constant(grid, 1.0),
            "flat".into(),
        )
    }

    /// Validates pointwise positive definiteness.
    pub fn new(g11: ScalarField, g12: ScalarField, g22: ScalarField) -> Result<Self> {
        Self::with_tag(g11, g12, g22, "custom")
    }

    pub fn with_tag(
        g11: ScalarField,
        g12: ScalarField,
        g22: ScalarField,
        tag: impl Into<String>,
    ) -> Result<Self> {
        g11.grid().ensure_same(&g12.grid())?;
        g11.grid().ensure_same(&g22.grid())?;
        for k in 0..g11.grid().len() {
            let (a, b, c) = (g11.values()[k], g12.values()[k], g22.values()[k]);
            if !(a > 0.0 && a * c - b * b > 0.0) {
                return Err(Error::MetricNotSpd { index: k });
            }
        }
        Ok(Self::build(g11, g12, g22, tag.into()))
    }

    /// `g = e^{2λ} · identity`.
    pub fn conformal(lambda: &ScalarField) -> Result<Self> {
        let f = lambda.map(|l| (2.0 * l).exp());
        Self::with_tag(f.clone(), ScalarField::zeros(f.grid()), f, "conformal")
    }

    fn build(g11: ScalarField, g12: ScalarField, g22: ScalarField, tag: String) -> Self {
        let n = g11.grid().len();
        let mut sqrt_det = Vec::with_capacity(n);
        let (mut a11, mut a12, mut a22) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut is_flat = true;
        for k in 0..n {
            let (a, b, c) = (g11.values()[k], g12.values()[k], g22.values()[k]);
            is_flat &= a == 1.0 && b == 0.0 && c == 1.0;
            let det = a * c - b * b;
            let s = det.sqrt();
            sqrt_det.push(s);
            a11[k] = s * c / det;
            a12[k] = -s * b / det;
            a22[k] = s * a / det;
        }
        Self {
            g11,
            g12,
            g22,
            is_flat,
            tag,
            sqrt_det,
            a11,
            a12,
            a22,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.g11.grid()
    }

    pub fn is_flat(&self) -> bool {
        self.is_flat
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn g11(&self) -> &ScalarField {
        &self.g11
    }

    pub fn g12(&self) -> &ScalarField {
        &self.g12
    }

    pub fn g22(&self) -> &ScalarField {
        &self.g22
    }

    /// Riemannian mean `∫ f dvol_g / ∫ dvol_g`.
    pub fn volume_mean(&self, f: &ScalarField) -> f64 {
        let num: f64 = f.values().iter().zip(&self.sqrt_det).map(|(a, s)| a * s).sum();
        num / self.sqrt_det.iter().sum::<f64>()
    }

    /// `−∂x(√g g^{1j} θ_j) − ∂y(√g g^{2j} θ_j)`, i.e. `√det g · δ_g θ`.
    fn weighted_divergence(&self, tx: &[f64], ty: &[f64]) -> Vec<f64> {
        let grid = self.grid();
        let n = grid.len();
        let (mut fx, mut fy) = (vec![0.0; n], vec![0.0; n]);
        for k in 0..n {
            fx[k] = self.a11[k] * tx[k] + self.a12[k] * ty[k];
            fy[k] = self.a12[k] * tx[k] + self.a22[k] * ty[k];
        }
        let dx = spectral::partial(grid, &fx, 1, 0);
        let dy = spectral::partial(grid, &fy, 0, 1);
        dx.iter().zip(&dy).map(|(a, b)| -(a + b)).collect()
    }

    /// `√det g · δ_g d u`, symmetric and positive semidefinite on the grid.
    fn stiffness(&self, u: &[f64]) -> Vec<f64> {
        let (ux, uy) = spectral::gradient(self.grid(), u);
        self.weighted_divergence(&ux, &uy)
    }
}

/// Codifferential `δ_g θ`, signed so that `δ d` is the positive Laplacian.
pub fn codifferential(theta: &OneForm, g: &MetricSpec) -> Result<ScalarField> {
    theta.grid().ensure_same(&g.grid())?;
    let w = g.weighted_divergence(theta.comp_x(), theta.comp_y());
    Ok(ScalarField::from_vec(
        g.grid(),
        w.iter().zip(&g.sqrt_det).map(|(v, s)| v / s).collect(),
    ))
}

fn check_compatible(rhs: &ScalarField, g: &MetricSpec) -> Result<()> {
    let mean = g.volume_mean(rhs);
    if mean.abs() > 1e-10 * rhs.max_abs().max(1.0) {
        return Err(Error::IncompatibleRhs { mean });
    }
    Ok(())
}

/// Mean-zero solution of `δ_g du = rhs`.
///
/// The flat metric is inverted directly in Fourier space; any other metric
/// goes through [`solve_poisson_cg`].
pub fn solve_poisson(rhs: &ScalarField, g: &MetricSpec) -> Result<ScalarField> {
    rhs.grid().ensure_same(&g.grid())?;
    check_compatible(rhs, g)?;
    if g.is_flat() {
        let u = spectral::inverse_laplacian(g.grid(), rhs.values());
        return Ok(ScalarField::from_vec(g.grid(), u).centered());
    }
    solve_poisson_cg(rhs, g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients on `√g δ_g d u = √g rhs`, preconditioned by the flat
/// inverse Laplacian. Works for any metric, including the flat one.
pub fn solve_poisson_cg(rhs: &ScalarField, g: &MetricSpec) -> Result<ScalarField> {
    rhs.grid().ensure_same(&g.grid())?;
    check_compatible(rhs, g)?;
    let grid = g.grid();
    let n = grid.len();
    let weighted: Vec<f64> = rhs.values().iter().zip(&g.sqrt_det).map(|(r, s)| r * s).collect();
    let b = spectral::project_resolved(grid, &weighted);
    let b_norm = dot(&b, &b).sqrt();
    let mut u = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(ScalarField::from_vec(grid, u));
    }
    let mut r = b;
    let mut z = spectral::inverse_laplacian(grid, &r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let cap = 10 * n;
    let mut rel = 1.0;
    for _ in 0..cap {
        let ap = g.stiffness(&p);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            u[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel < CG_REL_TOL {
            return Ok(ScalarField::from_vec(grid, u).centered());
        }
        z = spectral::inverse_laplacian(grid, &r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NoConvergence {
        iterations: cap,
        residual: rel,
    })
}

/// Where a harmonic basis came from.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Canonical,
    TransportedFrom(String),
    Rescaled(String),
}

/// A basis `{h₁, h₂}` of the harmonic 1-forms of a metric.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    metric: MetricSpec,
    h1: OneForm,
    h2: OneForm,
    provenance: Provenance,
    // column i holds the periods of h_i
    periods: [[f64; 2]; 2],
}

impl HarmonicBasis {
    fn assemble(metric: MetricSpec, h1: OneForm, h2: OneForm, provenance: Provenance) -> Result<Self> {
        let (p1x, p1y) = h1.periods();
        let (p2x, p2y) = h2.periods();
        let det = p1x * p2y - p2x * p1y;
        if det.abs() <= 1e-8 {
            return Err(Error::DegenerateBasis { det });
        }
        Ok(Self {
            metric,
            h1,
            h2,
            provenance,
            periods: [[p1x, p2x], [p1y, p2y]],
        })
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn h1(&self) -> &OneForm {
        &self.h1
    }

    pub fn h2(&self) -> &OneForm {
        &self.h2
    }

    pub fn elements(&self) -> [&OneForm; 2] {
        [&self.h1, &self.h2]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Short identifier used in report tags.
    pub fn id(&self) -> String {
        match &self.provenance {
            Provenance::Canonical => format!("canonical({})", self.metric.tag()),
            Provenance::TransportedFrom(src) => format!("transported({src}->{})", self.metric.tag()),
            Provenance::Rescaled(src) => format!("rescaled({src})"),
        }
    }

    pub fn period_matrix(&self) -> [[f64; 2]; 2] {
        self.periods
    }

    /// `{c₁ h₁, c₂ h₂}`, another basis of the same space.
    pub fn rescaled(&self, c1: f64, c2: f64) -> Result<Self> {
        Self::assemble(
            self.metric.clone(),
            self.h1.scale(c1),
            self.h2.scale(c2),
            Provenance::Rescaled(self.id()),
        )
    }

    /// Coefficients `λ` with `Σ λᵢ [hᵢ] = [θ]` in cohomology.
    pub fn coefficients(&self, theta: &OneForm) -> [f64; 2] {
        let (px, py) = theta.periods();
        let [[a, b], [c, d]] = self.periods;
        let det = a * d - b * c;
        [(d * px - b * py) / det, (a * py - c * px) / det]
    }

    pub fn combination(&self, lambda: [f64; 2]) -> OneForm {
        self.h1.scale(lambda[0]).axpy(lambda[1], &self.h2)
    }

    /// Worst closedness and co-closedness defects over the two elements.
    pub fn defects(&self) -> Result<(f64, f64)> {
        let mut closed = 0.0_f64;
        let mut coclosed = 0.0_f64;
        for h in self.elements() {
            closed = closed.max(closedness_defect(h));
            coclosed = coclosed.max(codifferential(h, &self.metric)?.max_abs());
        }
        Ok((closed, coclosed))
    }
}

/// The g-harmonic representatives of `dx` and `dy`.
pub fn harmonic_basis(g: &MetricSpec) -> Result<HarmonicBasis> {
    let grid = g.grid();
    let dx = OneForm::constant(grid, 1.0, 0.0);
    let dy = OneForm::constant(grid, 0.0, 1.0);
    if g.is_flat() {
        return HarmonicBasis::assemble(g.clone(), dx, dy, Provenance::Canonical);
    }
    let h1 = harmonic_part(&dx, g)?;
    let h2 = harmonic_part(&dy, g)?;
    HarmonicBasis::assemble(g.clone(), h1, h2, Provenance::Canonical)
}

/// `θ − dv` with `δ_g(θ − dv) = 0`.
fn harmonic_part(theta: &OneForm, g: &MetricSpec) -> Result<OneForm> {
    let v = solve_poisson(&codifferential(theta, g)?, g)?;
    Ok(theta.axpy(-1.0, &d_scalar(&v)))
}

/// Carries a basis to another metric by taking the `g′`-harmonic part of each
/// element. The result has the same periods, hence the same coefficients for
/// every closed form.
pub fn transport_basis(basis: &HarmonicBasis, g_new: &MetricSpec) -> Result<HarmonicBasis> {
    basis.metric.grid().ensure_same(&g_new.grid())?;
    let h1 = harmonic_part(&basis.h1, g_new)?;
    let h2 = harmonic_part(&basis.h2, g_new)?;
    HarmonicBasis::assemble(
        g_new.clone(),
        h1,
        h2,
        Provenance::TransportedFrom(basis.id()),
    )
}

/// `θ = Σ λᵢ hᵢ + d(potential)` with a mean-zero potential.
#[derive(Clone, Debug)]
pub struct HodgeSplit {
    pub lambda: [f64; 2],
    pub harmonic: OneForm,
    pub potential: ScalarField,
    /// Max-abs reconstruction error.
    pub residual: f64,
}

impl HodgeSplit {
    pub fn osc(&self) -> f64 {
        osc(&self.potential)
    }
}

/// Hodge split of a closed 1-form; rejects forms whose curl defect exceeds [`CLOSED_TOL`].
pub fn hodge_decompose(theta: &OneForm, g: &MetricSpec, basis: &HarmonicBasis) -> Result<HodgeSplit> {
    hodge_decompose_with_tol(theta, g, basis, CLOSED_TOL)
}

/// As [`hodge_decompose`] with an explicit closedness tolerance. Any co-exact
/// remainder of a nearly closed input is dropped and shows up in `residual`.
pub fn hodge_decompose_with_tol(
    theta: &OneForm,
    g: &MetricSpec,
    basis: &HarmonicBasis,
    closed_tol: f64,
) -> Result<HodgeSplit> {
    theta.grid().ensure_same(&g.grid())?;
    if basis.metric() != g {
        return Err(Error::InvalidArgument(format!(
            "basis {} does not belong to metric {}",
            basis.id(),
            g.tag()
        )));
    }
    let defect = closedness_defect(theta);
    if defect > closed_tol {
        return Err(Error::NotClosed {
            defect,
            tolerance: closed_tol,
        });
    }
    let lambda = basis.coefficients(theta);
    let harmonic = basis.combination(lambda);
    let exact = theta.axpy(-1.0, &harmonic);
    let rhs = codifferential(&exact, g)?;
    // round-off in the weighted mean would otherwise trip the compatibility check
    let rhs = rhs.axpy(-1.0, &ScalarField::constant(g.grid(), g.volume_mean(&rhs)));
    let potential = solve_poisson(&rhs, g)?;
    let residual = exact.axpy(-1.0, &d_scalar(&potential)).max_abs();
    Ok(HodgeSplit {
        lambda,
        harmonic,
        potential,
        residual,
    })
}

/// `|H|_B = |λ₁| + |λ₂|`.
pub fn basis_norm(split: &HodgeSplit) -> f64 {
    split.lambda[0].abs() + split.lambda[1].abs()
}
