//! Error estimators over the `Inside` nodes of a mask.

use crate::error::{Result, SfsError};
use crate::grid::{Mask, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    /// Discrete L2 error, `sqrt(mean(e^2))`; same value as `err2`.
    pub l2: f64,
    pub linf: f64,
    /// Mean absolute error.
    pub err1: f64,
    /// Root mean square error.
    pub err2: f64,
    pub n: usize,
}

impl ErrorReport {
    pub fn from_errors(errors: impl IntoIterator<Item = f64>) -> Result<ErrorReport> {
        let mut n = 0usize;
        let (mut s1, mut s2, mut max) = (0.0f64, 0.0f64, 0.0f64);
        for e in errors {
            let a = e.abs();
            n += 1;
            s1 += a;
            s2 += a * a;
            max = max.max(a);
        }
        if n == 0 {
            return Err(SfsError::EmptyMask);
        }
        let err1 = s1 / n as f64;
        let err2 = (s2 / n as f64).sqrt();
        // rounding can nudge the means past the max by an ulp
        let err2 = err2.min(max);
        let err1 = err1.min(err2);
        Ok(ErrorReport {
            l2: err2,
            linf: max,
            err1,
            err2,
            n,
        })
    }
}

pub fn surface_errors(
    reference: &ScalarField,
    estimate: &ScalarField,
    mask: &Mask,
) -> Result<ErrorReport> {
    let r = reference.values();
    let e = estimate.values();
    ErrorReport::from_errors(mask.inside_indices().into_iter().map(|k| e[k] - r[k]))
}

/// Image errors; with `quantized`, both images are first rounded to 8-bit
/// levels.
pub fn image_errors(
    reference: &ScalarField,
    estimate: &ScalarField,
    mask: &Mask,
    quantized: bool,
) -> Result<ErrorReport> {
    let r = reference.values();
    let e = estimate.values();
    let level = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round();
    ErrorReport::from_errors(mask.inside_indices().into_iter().map(|k| {
        if quantized {
            (level(e[k]) - level(r[k])) / 255.0
        } else {
            e[k] - r[k]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-15
    }

    #[test]
    fn examples() {
        let r = ErrorReport::from_errors([1.0, -1.0, 1.0]).unwrap();
        assert_eq!((r.err1, r.err2, r.linf), (1.0, 1.0, 1.0));
        let r = ErrorReport::from_errors([3.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(close(r.err1, 0.75) && close(r.err2, 1.5) && close(r.linf, 3.0));
        assert_eq!(r.l2, r.err2);
        assert!(matches!(
            ErrorReport::from_errors([]),
            Err(SfsError::EmptyMask)
        ));
    }

    #[test]
    fn field_errors() {
        let g = Grid::square(5, 1.0).unwrap();
        let m = Mask::from_predicate(&g, |_, _| true);
        let a = ScalarField::filled(&g, 0.3);
        let r = surface_errors(&a, &a, &m).unwrap();
        assert_eq!((r.l2, r.linf, r.n), (0.0, 0.0, 9));
        let one = ScalarField::filled(&g, 1.0);
        let zero = ScalarField::zeros(&g);
        assert_eq!(image_errors(&one, &zero, &m, false).unwrap().linf, 1.0);
        let p = ScalarField::filled(&g, 0.5001);
        let q = ScalarField::filled(&g, 0.5039);
        assert_eq!(image_errors(&p, &q, &m, true).unwrap().linf, 0.0);
        let empty = Mask::from_predicate(&g, |_, _| false);
        assert!(surface_errors(&a, &a, &empty).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn norm_ordering(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let r = ErrorReport::from_errors(v).unwrap();
            prop_assert!(0.0 <= r.err1 && r.err1 <= r.err2 && r.err2 <= r.linf);
        }
    }

    proptest! {
        #[test]
        fn scale_equivariance(
            v in prop::collection::vec(-10f64..10.0, 9),
            w in prop::collection::vec(-10f64..10.0, 9),
            c in -5f64..5.0,
        ) {
            let g = Grid::square(3, 1.0).unwrap();
            let m = Mask::from_labels(&g, vec![crate::grid::Label::Inside; 9]).unwrap();
            let a = ScalarField::from_values(&g, v.clone()).unwrap();
            let b = ScalarField::from_values(&g, w.clone()).unwrap();
            let base = surface_errors(&a, &b, &m).unwrap();
            let scaled = surface_errors(&a.map(|x| c * x), &b.map(|x| c * x), &m).unwrap();
            let tol = 1e-12 * (1.0 + base.linf * c.abs());
            prop_assert!((scaled.err1 - c.abs() * base.err1).abs() < tol);
            prop_assert!((scaled.err2 - c.abs() * base.err2).abs() < tol);
            prop_assert!((scaled.linf - c.abs() * base.linf).abs() < tol);
        }
    }
}
