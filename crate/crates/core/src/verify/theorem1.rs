//! Metric and basis (in)dependence of the norm, and the contraction
//! constant `E` with `sup |H(X)| ≤ E ‖X‖ |H|`.

use rand::Rng;

use super::{sub_seed, CheckReport};
use crate::error::Result;
use crate::fixtures::{self, random_path, FieldExpr, PathExpr, Term};
use crate::grid::{omega_contract, omega_contract_inv, GridSpec, OneForm, VectorField};
use crate::hodge::{harmonic_basis, transport_basis, MetricSpec};
use crate::metrics::{symp_norm, NormContext};

/// Compares `‖X‖_{g,B}` with `‖X‖_{g′,B′}` for the transported basis, and
/// with `‖X‖_{g′,B″}` for an unrelated basis.
pub fn check_theorem1(g: &MetricSpec, g_prime: &MetricSpec, samples: usize, seed: u64) -> Result<CheckReport> {
    let grid = g.grid();
    let basis = harmonic_basis(g)?;
    let paired = transport_basis(&basis, g_prime)?;
    let other = harmonic_basis(g_prime)?.rescaled(2.0, 1.0)?;
    let rescaled_same = basis.rescaled(2.0, 1.0)?;
    let ctx = NormContext::new(basis.clone());
    let ctx_paired = NormContext::new(paired.clone());
    let ctx_other = NormContext::new(other);
    let ctx_rescaled = NormContext::new(rescaled_same);

    let mut r = fixtures::rng(seed);
    let (mut eq, mut eq_sum, mut coef) = (0.0_f64, 0.0, 0.0_f64);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..samples {
        let x = random_path(&mut r, 4, 0.2, true, false).field(grid, 0.0)?;
        let n = symp_norm(&x, &ctx)?;
        let np = symp_norm(&x, &ctx_paired)?;
        eq = eq.max((n - np).abs());
        eq_sum += (n - np).abs();
        let theta = omega_contract(&x);
        let (c, cp) = (basis.coefficients(&theta), paired.coefficients(&theta));
        coef = coef.max((c[0] - cp[0]).abs()).max((c[1] - cp[1]).abs());
        let ratio = n / symp_norm(&x, &ctx_other)?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }

    // harmonic-only fields: B″ = {2h₁, h₂} on the same metric
    let mut excess = 0.0_f64;
    for _ in 0..samples {
        let lambda = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        let x = omega_contract_inv(&basis.combination(lambda));
        let ratio = symp_norm(&x, &ctx_rescaled)? / symp_norm(&x, &ctx)?;
        excess = excess.max(0.5 - ratio).max(ratio - 1.0);
    }

    let mut rep = CheckReport::new(
        "theorem1",
        format!("{samples} random symplectic fields, max frequency 4; metrics {} and {}", g.tag(), g_prime.tag()),
        seed,
    );
    rep.assert_le("paired_equality", eq, 1e-5);
    rep.assert_le("paired_coefficients", coef, 1e-10);
    rep.assert_le("rescaled_ratio_excess", excess, 1e-12);
    rep.assert_le("general_ratio_spread", hi.max(1.0 / lo), 1e3);
    rep.info("paired_equality_mean", eq_sum / samples.max(1) as f64);
    rep.info("general_ratio_min", lo);
    rep.info("general_ratio_max", hi);
    Ok(rep)
}

/// `sup_x |h(V)| / ‖V‖`, or `None` for `V = 0`.
pub fn contraction_ratio(h: &OneForm, v: &VectorField, ctx: &NormContext) -> Result<Option<f64>> {
    let n = symp_norm(v, ctx)?;
    if n == 0.0 {
        return Ok(None);
    }
    Ok(Some(h.contract(v).max_abs() / n))
}

fn family_member<R: Rng>(r: &mut R, grid: GridSpec, cutoff: usize) -> Result<VectorField> {
    if cutoff == 0 {
        return Ok(VectorField::constant(grid, r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    }
    let scale = [0.0, 0.01, 0.1, 1.0][r.random_range(0..4)];
    let a = r.random_range(-1.0..1.0) * scale;
    let b = r.random_range(-1.0..1.0) * scale;
    let mut p = random_path(r, cutoff, 0.2, false, false);
    p.a = FieldExpr::constant(a);
    p.b = FieldExpr::constant(b);
    p.field(grid, 0.0)
}

fn candidates(grid: GridSpec, cutoff: usize) -> Result<Vec<VectorField>> {
    let mut out = vec![
        VectorField::constant(grid, 1.0, 0.0),
        VectorField::constant(grid, 0.0, 1.0),
        VectorField::constant(grid, 1.0, 1.0),
    ];
    if cutoff > 0 {
        let n = cutoff as i64;
        for (kx, ky) in [(0, n), (n, 0), (n, n)] {
            out.push(PathExpr::hamiltonian(FieldExpr::new(vec![Term::sin(0.1, kx, ky)])).field(grid, 0.0)?);
        }
    }
    Ok(out)
}

/// Empirical `E` for `h` over symplectic fields of spatial frequency at most
/// `cutoff` (`0`: constant fields only).
pub fn estimate_contraction_constant(
    h: &OneForm,
    cutoff: usize,
    samples: usize,
    seed: u64,
    ctx: &NormContext,
) -> Result<f64> {
    let grid = ctx.grid();
    let mut best = 0.0_f64;
    for v in candidates(grid, cutoff)? {
        best = best.max(contraction_ratio(h, &v, ctx)?.unwrap_or(0.0));
    }
    let mut r = fixtures::rng(sub_seed(seed, 100 + cutoff as u64));
    for _ in 0..samples {
        let v = family_member(&mut r, grid, cutoff)?;
        best = best.max(contraction_ratio(h, &v, ctx)?.unwrap_or(0.0));
    }
    Ok(best)
}

/// `E(N)` along `cutoffs`, made cumulative since the families are nested.
pub fn contraction_ladder(
    h: &OneForm,
    cutoffs: &[usize],
    samples: usize,
    seed: u64,
    ctx: &NormContext,
) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(cutoffs.len());
    for &n in cutoffs {
        let e = estimate_contraction_constant(h, n, samples, seed, ctx)?;
        let prev = out.last().map_or(0.0, |p| p.1);
        out.push((n, e.max(prev)));
    }
    Ok(out)
}

/// `sup|dx(X_u)| / ‖X_u‖` for `u = 0.1 sin(2πNy)`; the closed form is `πN`.
pub fn witness_ratio(grid: GridSpec, n: usize, ctx: &NormContext) -> Result<f64> {
    let v = PathExpr::hamiltonian(FieldExpr::new(vec![Term::sin(0.1, 0, n as i64)])).field(grid, 0.0)?;
    Ok(contraction_ratio(&OneForm::constant(grid, 1.0, 0.0), &v, ctx)?.unwrap_or(0.0))
}

/// Tests `sup |H(X)| ≤ 1.05 · E ‖X‖ |H|_B` on fresh samples of the family
/// with cutoff `cutoff`, `H` a random combination of the basis.
pub fn check_prop2(e: f64, cutoff: usize, samples: usize, seed: u64, ctx: &NormContext) -> Result<CheckReport> {
    let grid = ctx.grid();
    let mut r = fixtures::rng(seed);
    let (mut violations, mut worst) = (0usize, 0.0_f64);
    for q in 0..samples {
        let x = family_member(&mut r, grid, cutoff)?;
        let c: [f64; 2] = if q == 0 {
            [0.0, 0.0]
        } else {
            [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]
        };
        let h = ctx.basis().combination(c);
        let lhs = h.contract(&x).max_abs();
        let rhs = e * symp_norm(&x, ctx)? * (c[0].abs() + c[1].abs());
        if lhs > 1.05 * rhs {
            violations += 1;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    let mut rep = CheckReport::new(
        "prop2",
        format!("{samples} fresh band-limited fields, cutoff {cutoff}"),
        seed,
    );
    rep.assert_le("violation_fraction", violations as f64 / samples.max(1) as f64, 0.01);
    rep.info("E", e);
    rep.info("violations", violations as f64);
    rep.info("max_ratio_over_E", worst);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::wavy_metric;
    use std::f64::consts::PI;

    #[test]
    fn identical_metrics_give_equality() {
        let g = MetricSpec::flat(GridSpec::square(32).unwrap());
        let rep = check_theorem1(&g, &g, 10, 3).unwrap();
        assert!(rep.residuals["paired_equality"] < 1e-10);
        assert!(rep.pass);
    }

    #[test]
    fn wavy_metric_breaks_paired_equality() {
        // h₂ of the wavy metric is dy − dv with v ≠ 0, so potentials shift
        let grid = GridSpec::square(32).unwrap();
        let rep = check_theorem1(&MetricSpec::flat(grid), &wavy_metric(grid).unwrap(), 10, 3).unwrap();
        assert!(rep.residuals["paired_coefficients"] < 1e-10);
        assert!(rep.residuals["rescaled_ratio_excess"] <= 1e-12);
        assert!(rep.residuals["paired_equality"] > 1e-5);
        assert!(rep.info["general_ratio_min"] > 0.0);
    }

    #[test]
    fn constants_have_unit_constant() {
        let ctx = NormContext::flat(GridSpec::square(16).unwrap()).unwrap();
        let e = estimate_contraction_constant(ctx.basis().h1(), 0, 50, 1, &ctx).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_is_pi_n_and_ladder_monotone() {
        let grid = GridSpec::square(32).unwrap();
        let ctx = NormContext::flat(grid).unwrap();
        for n in [1, 2, 4] {
            assert!((witness_ratio(grid, n, &ctx).unwrap() / (PI * n as f64) - 1.0).abs() < 1e-10);
        }
        let ladder = contraction_ladder(ctx.basis().h1(), &[1, 2, 4], 30, 5, &ctx).unwrap();
        assert!(ladder.windows(2).all(|w| w[1].1 >= w[0].1));
        // Bernstein: E(N) = πN for N ≥ 1
        for (n, e) in ladder {
            assert!(e <= PI * n as f64 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn prop2_holds_on_fresh_samples() {
        let ctx = NormContext::flat(GridSpec::square(32).unwrap()).unwrap();
        let e = estimate_contraction_constant(ctx.basis().h1(), 2, 50, 1, &ctx)
            .unwrap()
            .max(estimate_contraction_constant(ctx.basis().h2(), 2, 50, 1, &ctx).unwrap());
        let rep = check_prop2(e, 2, 200, 9, &ctx).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
