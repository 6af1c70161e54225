//! The product formula `i(ρ̇_t)ω = ℋ^Φ_t + ℋ^Ψ_t + dK`, Hamiltonicity of
//! commutators, and a witness that the norm is not invariant.

use std::f64::consts::PI;

use super::{sub_seed, CheckReport, DERIVED_CLOSED_TOL};
use crate::error::Result;
use crate::fixtures::{self, random_path};
use crate::grid::{d_scalar, omega_contract, GridSpec, ScalarField, VectorField};
use crate::isotopy::{
    commutator_isotopy, compose_isotopies, compose_scalar, inverse_isotopy, pushforward_with_inverse,
    DisplacementField, Isotopy, MapPair,
};
use crate::metrics::{symp_norm, NormContext};

const TAU: f64 = 2.0 * PI;

fn l1(c: [f64; 2]) -> f64 {
    c[0].abs() + c[1].abs()
}

/// Builds `ρ = ΦΨ` and checks, at every sample `t`, that the harmonic
/// coefficients of `i(ρ̇_t)ω` are `λ^Φ + λ^Ψ` and that
/// `i(ρ̇_t)ω − ℋ^Φ_t − ℋ^Ψ_t = dK` with
/// `K = u^Φ_t + u^Ψ_t∘φ_t⁻¹ + ∫₀ᵗ ℋ^Ψ_t(φ̲̇_s)∘φ_s⁻¹ ds`.
pub fn check_main_lemma_k(phi: &Isotopy, psi: &Isotopy, ctx: &NormContext) -> Result<CheckReport> {
    let rho = compose_isotopies(phi, psi)?;
    let under = inverse_isotopy(phi)?;
    let grid = phi.grid();
    let dt = phi.generator().dt();
    let (mut coef, mut resid) = (0.0_f64, 0.0_f64);
    for i in 0..phi.n_t() {
        let sp = ctx.split(phi.generator().get(i))?;
        let sq = ctx.split(psi.generator().get(i))?;
        let theta = omega_contract(rho.generator().get(i));
        let c = ctx.basis().coefficients(&theta);
        coef = coef
            .max((c[0] - sp.lambda[0] - sq.lambda[0]).abs())
            .max((c[1] - sp.lambda[1] - sq.lambda[1]).abs());

        let mut v = ScalarField::zeros(grid);
        for s in (0..=i).filter(|_| i > 0) {
            let w = if s == 0 || s == i { 0.5 * dt } else { dt };
            let g = compose_scalar(&sq.harmonic.contract(under.generator().get(s)), phi.inverse_flow().get(s))?;
            v = v.axpy(w, &g);
        }
        let k = sp
            .potential
            .axpy(1.0, &compose_scalar(&sq.potential, phi.inverse_flow().get(i))?)
            .axpy(1.0, &v);
        let rest = &(&theta - &sp.harmonic) - &sq.harmonic;
        resid = resid.max((&rest - &d_scalar(&k)).max_abs());
    }
    let mut rep = CheckReport::new("main_lemma_k", "isotopy pair", 0);
    rep.assert_le("coefficients", coef, 1e-4);
    rep.assert_le("dK_residual", resid, 5e-3);
    Ok(rep)
}

/// Harmonic coefficients of `i(X+Z)ω`, `i(Y+U)ω` and `i(σ̇)ω` along the
/// commutator `σ_t = φ_t ψ_t φ_t⁻¹ ψ_t⁻¹`.
pub fn check_commutator(phi: &Isotopy, psi: &Isotopy, ctx: &NormContext) -> Result<CheckReport> {
    let c = commutator_isotopy(phi, psi)?;
    let coeff = |v: &VectorField| l1(ctx.basis().coefficients(&omega_contract(v)));
    let (mut xz, mut yu, mut s) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..phi.n_t() {
        xz = xz.max(coeff(&(c.x.get(i) + c.z.get(i))));
        yu = yu.max(coeff(&(c.y.get(i) + c.u.get(i))));
        s = s.max(coeff(c.isotopy.generator().get(i)));
    }
    let mut rep = CheckReport::new("commutator", "isotopy pair", 0);
    rep.assert_le("x_plus_z", xz, 1e-3);
    rep.assert_le("y_plus_u", yu, 1e-3);
    rep.assert_le("sigma", s, 1e-3);
    rep.info("sigma_c0_to_identity", {
        let id = Isotopy::identity(phi.grid(), phi.n_t())?;
        crate::isotopy::c0_distance_isotopies(&c.isotopy, &id)?
    });
    Ok(rep)
}

/// `φ = (x + sin 2πy, y)` pushes `X = (0, 1)` to a field of norm 3, while
/// `‖X‖ = 1`. Translations by whole grid steps leave norms unchanged.
pub fn check_noninvariance(ctx: &NormContext, seed: u64) -> Result<CheckReport> {
    let grid = ctx.grid();
    let relaxed = ctx.clone().with_closed_tol(DERIVED_CLOSED_TOL);
    let phi = MapPair::new(DisplacementField::from_fn(grid, |_, y| ((TAU * y).sin(), 0.0))?)?;
    let x = VectorField::constant(grid, 0.0, 1.0);
    let pushed = pushforward_with_inverse(&x, phi.inverse_field())?;
    let (n_x, n_pushed) = (symp_norm(&x, ctx)?, symp_norm(&pushed, &relaxed)?);

    let shift = grid_shift(grid);
    let tr = MapPair::from_parts(
        DisplacementField::translation(grid, shift.0, shift.1),
        DisplacementField::translation(grid, -shift.0, -shift.1),
    )?;
    let mut r = fixtures::rng(sub_seed(seed, 40));
    let mut tr_resid = 0.0_f64;
    for _ in 0..5 {
        let y = random_path(&mut r, 4, 0.2, true, false).field(grid, 0.0)?;
        let moved = pushforward_with_inverse(&y, tr.inverse_field())?;
        tr_resid = tr_resid.max((symp_norm(&moved, ctx)? - symp_norm(&y, ctx)?).abs());
    }
    let zero = VectorField::zeros(grid);
    let zero_pushed = symp_norm(&pushforward_with_inverse(&zero, phi.inverse_field())?, ctx)?;

    let mut rep = CheckReport::new(
        "noninvariance",
        format!("φ = (x + sin 2πy, y), X = (0, 1); translation by {shift:?} on 5 random fields; X = 0"),
        seed,
    );
    rep.assert_le("pushed_norm_minus_3", (n_pushed - 3.0).abs(), 1e-2);
    rep.assert_le("norm_minus_1", (n_x - 1.0).abs(), 1e-6);
    rep.assert_le("translation", tr_resid, 1e-8);
    rep.assert_le("zero", zero_pushed + symp_norm(&zero, ctx)?, 0.0);
    rep.info("pushed_norm", n_pushed);
    rep.info("ratio", n_pushed / n_x);
    Ok(rep)
}

/// A translation by a whole number of grid steps, close to `(0.3, 0.1)`.
fn grid_shift(grid: GridSpec) -> (f64, f64) {
    ((0.3 / grid.h_x()).round() * grid.h_x(), (0.1 / grid.h_y()).round() * grid.h_y())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{shear_path, PathExpr};

    fn g32() -> GridSpec {
        GridSpec::square(32).unwrap()
    }

    #[test]
    fn identity_second_factor_gives_k_equal_u() {
        let g = g32();
        let ctx = NormContext::flat(g).unwrap();
        let mut r = fixtures::rng(4);
        let phi = random_path(&mut r, 2, 0.2, true, true).isotopy(g, 17, 2).unwrap();
        let rep = check_main_lemma_k(&phi, &Isotopy::identity(g, 17).unwrap(), &ctx).unwrap();
        assert!(rep.residuals["dK_residual"] < 1e-6, "{rep:?}");
    }

    #[test]
    fn translation_times_shear() {
        let g = g32();
        let ctx = NormContext::flat(g).unwrap();
        let t = PathExpr::translation(0.0, 0.3).isotopy(g, 17, 2).unwrap();
        let s = shear_path().isotopy(g, 17, 2).unwrap();
        let rep = check_main_lemma_k(&t, &s, &ctx).unwrap();
        assert!(rep.residuals["coefficients"] < 1e-10);
        assert!(rep.residuals["dK_residual"] < 1e-4, "{rep:?}");
    }

    #[test]
    fn commuting_translations_have_trivial_commutator() {
        let g = g32();
        let ctx = NormContext::flat(g).unwrap();
        let a = PathExpr::translation(0.3, 0.0).isotopy(g, 9, 1).unwrap();
        let b = PathExpr::translation(0.0, 0.3).isotopy(g, 9, 1).unwrap();
        let rep = check_commutator(&a, &b, &ctx).unwrap();
        assert!(rep.residuals.values().all(|&v| v < 1e-8));
        assert!(rep.info["sigma_c0_to_identity"] < 1e-10);
    }

    #[test]
    fn noninvariance_witness() {
        let ctx = NormContext::flat(GridSpec::square(64).unwrap()).unwrap();
        let rep = check_noninvariance(&ctx, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.info["ratio"] - 3.0).abs() < 1e-2);
    }
}
