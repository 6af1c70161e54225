use std::f64::consts::TAU;

use proptest::prelude::*;
use symtorus::fixtures::{ClosedFormExpr, FieldExpr, PathExpr, Term, Wave};
use symtorus::grid::{interpolate, time_integral};
use symtorus::hodge::{harmonic_basis, hodge_decompose};
use symtorus::io::{decode, encode};
use symtorus::isotopy::{compose_isotopies, inverse_isotopy};
use symtorus::metrics::{distance, symp_norm};
use symtorus::{GridSpec, MetricSpec, NormContext, ScalarField, TimeMode, TimeSeries, VectorField};

fn grid32() -> GridSpec {
    GridSpec::square(32).unwrap()
}

fn term() -> impl Strategy<Value = Term> {
    (-1.0..1.0f64, -3i64..=3, -3i64..=3, prop::bool::ANY).prop_map(|(amp, kx, ky, sin)| Term {
        amp,
        wave: if sin { Wave::Sin } else { Wave::Cos },
        kx,
        ky,
        kt: 0,
    })
}

fn expr() -> impl Strategy<Value = FieldExpr> {
    prop::collection::vec(term(), 1..4).prop_map(FieldExpr::new)
}

fn sampled_osc(h: &FieldExpr, grid: GridSpec) -> f64 {
    let v: Vec<f64> = grid.points().map(|(x, y)| h.eval(x, y, 0.0)).collect();
    v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
}

fn field(a: f64, b: f64, h: &FieldExpr) -> VectorField {
    PathExpr {
        a: FieldExpr::constant(a),
        b: FieldExpr::constant(b),
        h: h.clone(),
    }
    .field(grid32(), 0.0)
    .unwrap()
}

fn wrapped(d: f64) -> f64 {
    (d - d.round()).abs()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    // i_Xω = −b dx + a dy + dh, so on the flat torus ‖X‖ = |a| + |b| + osc h
    #[test]
    fn flat_norm_is_translation_plus_oscillation(a in -3.0..3.0f64, b in -3.0..3.0f64, h in expr()) {
        let ctx = NormContext::flat(grid32()).unwrap();
        let n = symp_norm(&field(a, b, &h), &ctx).unwrap();
        let want = a.abs() + b.abs() + sampled_osc(&h, grid32());
        prop_assert!((n - want).abs() < 1e-9 * (1.0 + want), "{n} vs {want}");
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive(
        (a1, b1, h1) in (-2.0..2.0f64, -2.0..2.0f64, expr()),
        (a2, b2, h2) in (-2.0..2.0f64, -2.0..2.0f64, expr()),
        c in -4.0..4.0f64,
    ) {
        let ctx = NormContext::flat(grid32()).unwrap();
        let (x, y) = (field(a1, b1, &h1), field(a2, b2, &h2));
        let (nx, ny) = (symp_norm(&x, &ctx).unwrap(), symp_norm(&y, &ctx).unwrap());
        let scaled = symp_norm(&x.scale(c), &ctx).unwrap();
        prop_assert!((scaled - c.abs() * nx).abs() < 1e-9 * (1.0 + scaled));
        prop_assert!(symp_norm(&(&x + &y), &ctx).unwrap() <= nx + ny + 1e-9);
        prop_assert!(nx >= 0.0);
    }

    // the periods of a dx + b dy + du are (a, b) whatever the metric
    #[test]
    fn hodge_coefficients_are_periods(a in -3.0..3.0f64, b in -3.0..3.0f64, u in expr(), eps in 0.0..0.4f64) {
        let grid = grid32();
        let g = MetricSpec::conformal(&ScalarField::from_fn(grid, |_, y| 1.0 + eps * (TAU * y).cos())).unwrap();
        let basis = harmonic_basis(&g).unwrap();
        let theta = ClosedFormExpr { a: FieldExpr::constant(a), b: FieldExpr::constant(b), u }.form(grid, 0.0).unwrap();
        let split = hodge_decompose(&theta, &g, &basis).unwrap();
        prop_assert!((split.lambda[0] - a).abs() < 1e-9 && (split.lambda[1] - b).abs() < 1e-9, "{:?}", split.lambda);
        prop_assert!(split.residual < 1e-8);
        let back = split.harmonic.axpy(1.0, &symtorus::grid::d_scalar(&split.potential));
        prop_assert!((&back - &theta).max_abs() < 1e-8);
    }

    #[test]
    fn rescaled_basis_divides_coefficients(a in -3.0..3.0f64, b in -3.0..3.0f64, c1 in 0.2..5.0f64, c2 in -5.0..-0.2f64) {
        let grid = grid32();
        let g = MetricSpec::flat(grid);
        let basis = harmonic_basis(&g).unwrap().rescaled(c1, c2).unwrap();
        let split = hodge_decompose(&symtorus::OneForm::constant(grid, a, b), &g, &basis).unwrap();
        prop_assert!((split.lambda[0] - a / c1).abs() < 1e-10);
        prop_assert!((split.lambda[1] - b / c2).abs() < 1e-10);
    }

    #[test]
    fn snapshots_round_trip_bitwise(values in prop::collection::vec(-1e6..1e6f64, 80)) {
        let grid = GridSpec::new(8, 10).unwrap();
        let u = ScalarField::new(grid, values).unwrap();
        let bytes = encode(&u).unwrap();
        prop_assert_eq!(decode::<ScalarField>(&bytes).unwrap(), u);
        prop_assert!(decode::<ScalarField>(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn interpolation_is_exact_at_nodes(h in expr(), idx in 0usize..1024) {
        let u = h.scalar(grid32(), 0.0).unwrap();
        let p = grid32().point(idx);
        prop_assert!((interpolate(&u, p) - u.values()[idx]).abs() < 1e-12);
    }

    #[test]
    fn l1_never_exceeds_sup(samples in prop::collection::vec(0.0..10.0f64, 3..20)) {
        let s = TimeSeries::new(samples).unwrap();
        prop_assert!(time_integral(&s) <= TimeMode::Sup.reduce(&s) + 1e-12);
        prop_assert_eq!(TimeMode::L1.reduce(&s), time_integral(&s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn translation_flows_are_exact(a in -1.0..1.0f64, b in -1.0..1.0f64, x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let iso = PathExpr::translation(a, b).isotopy(GridSpec::square(16).unwrap(), 5, 1).unwrap();
        let end = iso.endpoint();
        let (fx, fy) = end.forward().apply((x, y));
        prop_assert!(wrapped(fx - x - a) < 1e-12 && wrapped(fy - y - b) < 1e-12);
        let (ix, iy) = end.inverse_field().apply((fx, fy));
        prop_assert!(wrapped(ix - x) < 1e-12 && wrapped(iy - y) < 1e-12);
    }

    #[test]
    fn distance_is_symmetric_and_vanishes_on_the_diagonal(a in -0.5..0.5f64, b in -0.5..0.5f64, c in -0.5..0.5f64) {
        let grid = GridSpec::square(16).unwrap();
        let ctx = NormContext::flat(grid).unwrap();
        let phi = PathExpr::translation(a, b).isotopy(grid, 5, 1).unwrap();
        let psi = PathExpr::translation(c, 0.0).isotopy(grid, 5, 1).unwrap();
        let d = distance(&phi, &psi, &ctx, TimeMode::L1).unwrap();
        let e = distance(&psi, &phi, &ctx, TimeMode::L1).unwrap();
        prop_assert!((d.total - e.total).abs() < 1e-12);
        prop_assert!(distance(&phi, &phi, &ctx, TimeMode::L1).unwrap().total.abs() < 1e-12);
        // translations: D is |Δa| + |b|, C⁰ is the sup over time of the torus distance
        prop_assert!((d.d - ((a - c).abs() + b.abs())).abs() < 1e-9);
    }

    #[test]
    fn composing_with_the_inverse_gives_the_identity(amp in -0.15..0.15f64, kx in 0i64..=1, ky in 1i64..=2) {
        let grid = grid32();
        let h = FieldExpr::new(vec![Term::cos(amp / TAU, kx, ky)]);
        let phi = PathExpr::hamiltonian(h).isotopy(grid, 9, 2).unwrap();
        let rho = compose_isotopies(&phi, &inverse_isotopy(&phi).unwrap()).unwrap();
        let worst = rho.flow().iter().map(|f| f.max_abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-6, "{worst}");
    }
}
