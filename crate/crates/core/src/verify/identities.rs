//! Generator identities: the norm of `ψ_t⁻¹φ_t`, naturality of contraction
//! under pullback, the composition rule for generators, and the primitive
//! `v_t` of `φ_t*θ_t − θ_t`.

use super::{CheckReport, DERIVED_CLOSED_TOL};
use crate::error::Result;
use crate::grid::{d_scalar, omega_contract, OneForm, ScalarField, TimeSeries, VectorField};
use crate::isotopy::{
    compose_isotopies, compose_scalar, generator_from_flow, hamiltonian_isotopy, inverse_isotopy,
    pullback_oneform, pushforward_with_inverse, GeneratorPath, Isotopy, MapPair,
};
use crate::metrics::{hofer_length, path_length, NormContext, TimeMode};

/// For `Φ = Φ_H`, `Ψ = Φ_H′` and `σ_t = ψ_t⁻¹ φ_t`, compares `l(σ)` with
/// `∫ osc(H_t − H′_t) dt` and checks that `σ̇` has no harmonic part.
pub fn check_prop1(
    h: &TimeSeries<ScalarField>,
    h_prime: &TimeSeries<ScalarField>,
    substeps: usize,
    ctx: &NormContext,
) -> Result<CheckReport> {
    let phi = hamiltonian_isotopy(h, substeps)?;
    let psi = hamiltonian_isotopy(h_prime, substeps)?;
    let sigma = compose_isotopies(&inverse_isotopy(&psi)?, &phi)?;
    let relaxed = ctx.clone().with_closed_tol(DERIVED_CLOSED_TOL);
    let lhs = path_length(sigma.generator(), &relaxed, TimeMode::L1)?;
    let diff = TimeSeries::new(h.iter().zip(h_prime.iter()).map(|(a, b)| a - b).collect())?;
    let rhs = hofer_length(&diff);
    let harmonic = sigma
        .generator()
        .iter()
        .map(|x| {
            let c = ctx.basis().coefficients(&omega_contract(x));
            c[0].abs() + c[1].abs()
        })
        .fold(0.0, f64::max);
    let mut rep = CheckReport::new("prop1", "Hamiltonian pair", 0);
    rep.assert_le("equality", (lhs - rhs).abs(), 5e-3);
    rep.assert_le("sigma_harmonic", harmonic, 1e-6);
    rep.info("lhs", lhs);
    rep.info("rhs", rhs);
    Ok(rep)
}

/// A map, a closed form and a vector field for the pullback identity.
#[derive(Clone, Debug)]
pub struct Prop3Fixture {
    pub name: String,
    pub map: MapPair,
    pub theta: OneForm,
    pub x: VectorField,
}

impl Prop3Fixture {
    pub fn new(name: impl Into<String>, map: MapPair, theta: OneForm, x: VectorField) -> Self {
        Self {
            name: name.into(),
            map,
            theta,
            x,
        }
    }

    /// `‖(φ⁻¹)*[(φ*θ)(X)] − θ(φ_*X)‖_∞`.
    pub fn residual(&self) -> Result<f64> {
        let pulled = pullback_oneform(&self.theta, self.map.forward())?;
        let lhs = compose_scalar(&pulled.contract(&self.x), self.map.inverse_field())?;
        let pushed = pushforward_with_inverse(&self.x, self.map.inverse_field())?;
        let rhs = self.theta.contract(&pushed);
        Ok((&lhs - &rhs).max_abs())
    }
}

pub fn check_prop3(fixtures: &[Prop3Fixture], _ctx: &NormContext) -> Result<CheckReport> {
    let names: Vec<&str> = fixtures.iter().map(|f| f.name.as_str()).collect();
    let mut rep = CheckReport::new("prop3", names.join(", "), 0);
    for f in fixtures {
        rep.assert_le(f.name.clone(), f.residual()?, 1e-3);
    }
    Ok(rep)
}

fn max_diff(a: &GeneratorPath, b: &GeneratorPath) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).max_abs()).fold(0.0, f64::max)
}

/// Compares `ρ̇_t = φ̇_t + (φ_t)_* ψ̇_t` and `−(φ_t⁻¹)_* φ̇_t` with time
/// derivatives of the stored flows of `φ_t ψ_t` and `φ_t⁻¹`.
pub fn check_prop4(pairs: &[(String, Isotopy, Isotopy)], _ctx: &NormContext) -> Result<CheckReport> {
    let names: Vec<&str> = pairs.iter().map(|p| p.0.as_str()).collect();
    let mut rep = CheckReport::new("prop4", names.join(", "), 0);
    for (name, phi, psi) in pairs {
        let rho = compose_isotopies(phi, psi)?;
        let fwd = max_diff(&generator_from_flow(rho.flow())?, rho.generator());
        let inv = inverse_isotopy(phi)?;
        let back = max_diff(&generator_from_flow(phi.inverse_flow())?, inv.generator());
        rep.assert_le(format!("{name}.forward"), fwd, 1e-3);
        rep.assert_le(format!("{name}.inverse"), back, 1e-3);
    }
    Ok(rep)
}

/// An isotopy with a family of closed forms on the same time grid.
#[derive(Clone, Debug)]
pub struct Prop5Fixture {
    pub name: String,
    pub isotopy: Isotopy,
    pub theta: TimeSeries<OneForm>,
}

impl Prop5Fixture {
    pub fn new(name: impl Into<String>, isotopy: Isotopy, theta: TimeSeries<OneForm>) -> Self {
        Self {
            name: name.into(),
            isotopy,
            theta,
        }
    }

    /// `max_t ‖φ_t*θ_t − θ_t − dv_t‖_∞` with `v_t = ∫₀ᵗ θ_t(φ̇_s)∘φ_s ds` by
    /// the trapezoid rule on the sample times.
    pub fn residual(&self) -> Result<f64> {
        let iso = &self.isotopy;
        iso.generator().ensure_same_times(&self.theta)?;
        let dt = iso.generator().dt();
        let mut worst = 0.0_f64;
        for i in 0..iso.n_t() {
            let theta = self.theta.get(i);
            let lhs = &pullback_oneform(theta, iso.flow().get(i))? - theta;
            let mut v = ScalarField::zeros(iso.grid());
            for s in (0..=i).filter(|_| i > 0) {
                let w = if s == 0 || s == i { 0.5 * dt } else { dt };
                let g = compose_scalar(&theta.contract(iso.generator().get(s)), iso.flow().get(s))?;
                v = v.axpy(w, &g);
            }
            worst = worst.max((&lhs - &d_scalar(&v)).max_abs());
        }
        Ok(worst)
    }
}

pub fn check_prop5(fixtures: &[Prop5Fixture]) -> Result<CheckReport> {
    let names: Vec<&str> = fixtures.iter().map(|f| f.name.as_str()).collect();
    let mut rep = CheckReport::new("prop5", names.join(", "), 0);
    for f in fixtures {
        rep.assert_le(f.name.clone(), f.residual()?, 1e-3);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{shear_hamiltonian, shear_path, FieldExpr, PathExpr};
    use crate::grid::GridSpec;

    fn g32() -> GridSpec {
        GridSpec::square(32).unwrap()
    }

    #[test]
    fn prop1_shear_vs_zero_and_self() {
        let g = g32();
        let ctx = NormContext::flat(g).unwrap();
        let h = shear_hamiltonian().series(g, 17).unwrap();
        let zero = FieldExpr::zero().series(g, 17).unwrap();
        let rep = check_prop1(&h, &zero, 4, &ctx).unwrap();
        assert!((rep.info["lhs"] - 1.0 / std::f64::consts::PI).abs() < 5e-3);
        assert!(rep.pass, "{rep:?}");
        let same = check_prop1(&h, &h, 4, &ctx).unwrap();
        assert!(same.info["lhs"] < 1e-8 && same.info["rhs"] < 1e-8);
    }

    #[test]
    fn identity_map_gives_roundoff() {
        let g = g32();
        let tau = 2.0 * std::f64::consts::PI;
        let theta = OneForm::from_fn(g, |x, y| (1.0 + 0.1 * (tau * x).cos(), 0.2 + (tau * y).sin()));
        let x = VectorField::constant(g, 0.3, -0.2);
        let f = Prop3Fixture::new("id", MapPair::identity(g), theta, x);
        assert!(f.residual().unwrap() < 1e-12);
    }

    #[test]
    fn translation_inverse_formula_is_exact() {
        let g = g32();
        let ctx = NormContext::flat(g).unwrap();
        let t = PathExpr::translation(0.2, -0.1).isotopy(g, 17, 1).unwrap();
        let s = PathExpr::translation(0.0, 0.3).isotopy(g, 17, 1).unwrap();
        let rep = check_prop4(&[("tr".into(), t, s)], &ctx).unwrap();
        assert!(rep.residuals["tr.inverse"] < 1e-8);
        assert!(rep.residuals["tr.forward"] < 1e-8);
    }

    #[test]
    fn prop5_on_shear_with_dy_vanishes() {
        let g = g32();
        let iso = shear_path().isotopy(g, 9, 2).unwrap();
        let dy = TimeSeries::from_fn(9, |_| OneForm::constant(g, 0.0, 1.0)).unwrap();
        let r = Prop5Fixture::new("s", iso, dy).residual().unwrap();
        assert!(r < 1e-10);
    }

    #[test]
    fn prop5_translation_with_dx_is_exact() {
        // φ_t = x + at, θ = cos(2πx)dx: v_t = (sin 2π(x+at) − sin 2πx)/(2π)
        let g = g32();
        let iso = PathExpr::translation(0.3, 0.0).isotopy(g, 17, 1).unwrap();
        let theta = TimeSeries::from_fn(17, |_| OneForm::from_fn(g, |x, _| ((2.0 * std::f64::consts::PI * x).cos(), 0.0))).unwrap();
        let r = Prop5Fixture::new("t", iso, theta).residual().unwrap();
        assert!(r < 2e-3, "{r}");
    }
}
