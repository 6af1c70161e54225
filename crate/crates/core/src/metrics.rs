//! The norm `|H_X|_B + osc(u_X)` on symplectic vector fields and the lengths
//! and distances built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{closedness_defect, omega_contract, osc, time_integral, GridSpec, ScalarField, TimeSeries, VectorField};
use crate::hodge::{basis_norm, harmonic_basis, hodge_decompose_with_tol, HarmonicBasis, HodgeSplit, MetricSpec};
use crate::isotopy::{c0_distance_isotopies, inverse_isotopy, GeneratorPath, Isotopy, SYMPLECTIC_TOL};

/// Metric and harmonic basis used to evaluate norms.
#[derive(Clone, Debug)]
pub struct NormContext {
    basis: HarmonicBasis,
    closed_tol: f64,
}

impl NormContext {
    pub fn new(basis: HarmonicBasis) -> Self {
        Self {
            basis,
            closed_tol: SYMPLECTIC_TOL,
        }
    }

    /// Flat metric with the basis `{dx, dy}`.
    pub fn flat(grid: GridSpec) -> Result<Self> {
        Self::for_metric(&MetricSpec::flat(grid))
    }

    /// Canonical harmonic basis of `g`.
    pub fn for_metric(g: &MetricSpec) -> Result<Self> {
        Ok(Self::new(harmonic_basis(g)?))
    }

    /// Accept generators whose curl defect is at most `tol`.
    pub fn with_closed_tol(mut self, tol: f64) -> Self {
        self.closed_tol = tol;
        self
    }

    pub fn metric(&self) -> &MetricSpec {
        self.basis.metric()
    }

    pub fn basis(&self) -> &HarmonicBasis {
        &self.basis
    }

    pub fn grid(&self) -> GridSpec {
        self.metric().grid()
    }

    pub fn closed_tol(&self) -> f64 {
        self.closed_tol
    }

    /// Hodge split of `i_X ω`.
    pub fn split(&self, x: &VectorField) -> Result<HodgeSplit> {
        let theta = omega_contract(x);
        let defect = closedness_defect(&theta);
        if defect > self.closed_tol {
            return Err(Error::NotSymplectic {
                defect,
                tolerance: self.closed_tol,
            });
        }
        hodge_decompose_with_tol(&theta, self.metric(), &self.basis, f64::INFINITY)
    }
}

/// `‖X‖ = |H_X|_B + osc(u_X)`.
pub fn symp_norm(x: &VectorField, ctx: &NormContext) -> Result<f64> {
    let s = ctx.split(x)?;
    Ok(basis_norm(&s) + s.osc())
}

/// How a time-dependent quantity is reduced to a number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeMode {
    /// Trapezoid integral over `[0, 1]`.
    L1,
    /// Maximum over the time samples.
    Sup,
}

impl TimeMode {
    pub fn reduce(self, s: &TimeSeries<f64>) -> f64 {
        match self {
            TimeMode::L1 => time_integral(s),
            TimeMode::Sup => s.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// `t ↦ ‖X_t‖` on the sample grid.
pub fn norm_series(path: &GeneratorPath, ctx: &NormContext) -> Result<TimeSeries<f64>> {
    path.try_map(|x| symp_norm(x, ctx))
}

/// `∫ ‖X_t‖ dt` (or its sup) for a bare generator path.
pub fn path_length(path: &GeneratorPath, ctx: &NormContext, mode: TimeMode) -> Result<f64> {
    Ok(mode.reduce(&norm_series(path, ctx)?))
}

/// `l(Φ) = ∫ (|H_t|_B + osc(u_t)) dt`.
pub fn isotopy_length(phi: &Isotopy, ctx: &NormContext) -> Result<f64> {
    path_length(phi.generator(), ctx, TimeMode::L1)
}

/// `D₀`: the time norm of `t ↦ ‖φ̇_t − ψ̇_t‖`.
pub fn d0(phi: &Isotopy, psi: &Isotopy, ctx: &NormContext, mode: TimeMode) -> Result<f64> {
    phi.ensure_compatible(psi)?;
    let diff = TimeSeries::new(
        phi.generator()
            .iter()
            .zip(psi.generator().iter())
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    path_length(&diff, ctx, mode)
}

/// All ingredients of `d_symp = d̄ + D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub d0_fwd: f64,
    pub d0_inv: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub c0: f64,
    pub total: f64,
    pub mode: TimeMode,
    pub metric_tag: String,
    pub basis_id: String,
}

pub fn distance(phi: &Isotopy, psi: &Isotopy, ctx: &NormContext, mode: TimeMode) -> Result<DistanceReport> {
    let d0_fwd = d0(phi, psi, ctx, mode)?;
    let d0_inv = d0(&inverse_isotopy(phi)?, &inverse_isotopy(psi)?, ctx, mode)?;
    let c0 = c0_distance_isotopies(phi, psi)?;
    let d = (d0_fwd + d0_inv) / 2.0;
    Ok(DistanceReport {
        d0_fwd,
        d0_inv,
        d,
        c0,
        total: c0 + d,
        mode,
        metric_tag: ctx.metric().tag().to_string(),
        basis_id: ctx.basis().id(),
    })
}

/// `∫ osc(H_t) dt`.
pub fn hofer_length(h: &TimeSeries<ScalarField>) -> f64 {
    time_integral(&h.map(osc))
}

/// `‖H − H′‖ + d̄(Φ_H, Φ_H′)`, with the isotopies supplied by the caller.
pub fn d_ham(
    h: &TimeSeries<ScalarField>,
    h_prime: &TimeSeries<ScalarField>,
    phi_h: &Isotopy,
    phi_h_prime: &Isotopy,
) -> Result<f64> {
    h.ensure_same_times(h_prime)?;
    let diff = TimeSeries::new(h.iter().zip(h_prime.iter()).map(|(a, b)| a - b).collect())?;
    Ok(hofer_length(&diff) + c0_distance_isotopies(phi_h, phi_h_prime)?)
}
