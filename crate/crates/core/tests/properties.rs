use proptest::prelude::*;

use sfs_core::grid::{Grid, Mask, ScalarField};
use sfs_core::hj::{build_control_set, interp_bilinear, sl_operator_node, OperatorContext};
use sfs_core::reflectance::{brightness, eikonal_rhs, Direction, ModelSpec};
use sfs_core::solver::{kruzkov_forward, kruzkov_inverse};

fn model(kind: u8, param: f64) -> ModelSpec {
    match kind % 3 {
        0 => ModelSpec::Lambertian,
        1 => ModelSpec::oren_nayar(param).unwrap(),
        _ => ModelSpec::phong(param * 0.9, 1.0).unwrap(),
    }
}

fn grid() -> Grid {
    Grid::square(7, 1.0).unwrap()
}

fn context(kind: u8, param: f64, tilt: f64, image: Vec<f64>, mu: f64) -> OperatorContext {
    let g = grid();
    let light = Direction::normalized([tilt, 0.3 * tilt, 1.0]).unwrap().0;
    let viewer = if kind % 3 == 1 {
        light
    } else {
        Direction::VERTICAL
    };
    let image = ScalarField::from_values(&g, image).unwrap();
    let mut ctx = OperatorContext::new(
        model(kind, param),
        light,
        viewer,
        &image,
        mu,
        g.dx(),
        build_control_set(8, 6).unwrap(),
    )
    .unwrap();
    let gx = ScalarField::from_fn(&g, |x, y| 0.7 * x - 0.2 * y);
    let gy = ScalarField::from_fn(&g, |x, y| 0.4 * y + 0.1 * x);
    ctx.set_lag_gradient(gx, gy);
    ctx
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 49)
}

proptest! {
    #[test]
    fn kruzkov_round_trip(u in 0.0..8.0f64, mu in 0.2..2.0f64) {
        let v = kruzkov_forward(u, mu);
        prop_assert!((0.0..1.0 / mu).contains(&v));
        prop_assert!((kruzkov_inverse(v, mu).unwrap() - u).abs() <= 1e-9 * (1.0 + u));
    }

    #[test]
    fn interpolation_is_monotone(w in field(), bump in field(), x in -1.2..1.2f64, y in -1.2..1.2f64) {
        let g = grid();
        let mask = Mask::from_predicate(&g, |_, _| true);
        let lo = ScalarField::from_values(&g, w.clone()).unwrap();
        let hi = ScalarField::from_values(&g, w.iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        prop_assert!(interp_bilinear(&lo, [x, y], &mask, |_, _| 0.0) <= interp_bilinear(&hi, [x, y], &mask, |_, _| 0.0));
    }

    #[test]
    fn operator_is_monotone_and_bounded(
        kind in 0u8..3,
        param in 0.0..0.8f64,
        tilt in 0.0..0.5f64,
        image in prop::collection::vec(0.05..1.0f64, 49),
        w in field(),
        bump in field(),
        mu in 0.5..2.0f64,
    ) {
        let ctx = context(kind, param, tilt, image, mu);
        let top = 1.0 / mu;
        let lo: Vec<f64> = w.iter().map(|v| v * top).collect();
        let hi: Vec<f64> = lo.iter().zip(&bump).map(|(v, b)| (v + b * top).min(top)).collect();
        for j in 1..6 {
            for i in 1..6 {
                let (Ok(a), Ok(b)) = (sl_operator_node(&ctx, &lo, i, j), sl_operator_node(&ctx, &hi, i, j)) else {
                    continue;
                };
                prop_assert!(a.value <= b.value);
                prop_assert!((0.0..=top).contains(&a.value));
            }
        }
    }

    #[test]
    fn eikonal_inverts_brightness(kind in 0u8..3, param in 0.0..0.8f64, r in 0.01..3.0f64, phi in 0.0..std::f64::consts::TAU) {
        let m = model(kind, param);
        let up = Direction::VERTICAL;
        let i = brightness([r * phi.cos(), r * phi.sin()], &m, &up, &up).unwrap();
        prop_assert!((eikonal_rhs(&m, i).unwrap() - r).abs() < 1e-9);
    }
}
