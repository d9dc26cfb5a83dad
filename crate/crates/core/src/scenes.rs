//! Closed-form benchmark surfaces with their masks.

use crate::error::Result;
use crate::grid::{Grid, Label, Mask, ScalarField};

/// Ground-truth height plus the mask it was generated on.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub height: ScalarField,
    pub mask: Mask,
}

/// Which basin formula to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BasinVariant {
    /// `1 - (1 - (x^2 - y^2))^2`.
    #[default]
    Printed,
    /// `1 - (1 - (x^2 + y^2))^2`.
    Radial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SceneSpec {
    Sphere,
    RidgeTent,
    Basin(BasinVariant),
    /// Wavelengths along x and y; `None` uses the grid spacing.
    Sinusoid {
        wavelength_x: Option<f64>,
        wavelength_y: Option<f64>,
    },
    Vase,
}

impl SceneSpec {
    /// The grid each scene is benchmarked on at resolution `n`.
    pub fn default_grid(&self, n: usize) -> Result<Grid> {
        match self {
            SceneSpec::Basin(_) => Grid::square(n, 1.5),
            _ => Grid::square(n, 1.0),
        }
    }

    pub fn build(&self, grid: &Grid) -> Scene {
        match *self {
            SceneSpec::Sphere => make_sphere(grid),
            SceneSpec::RidgeTent => make_tent(grid),
            SceneSpec::Basin(v) => make_basin(grid, v),
            SceneSpec::Sinusoid {
                wavelength_x,
                wavelength_y,
            } => make_sinusoid(
                grid,
                wavelength_x.unwrap_or(grid.dx()),
                wavelength_y.unwrap_or(grid.dy()),
            ),
            SceneSpec::Vase => make_vase(grid).0,
        }
    }
}

/// Height on `Inside` nodes, zero elsewhere.
fn restrict(grid: &Grid, mask: &Mask, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    let mut out = ScalarField::zeros(grid);
    for k in mask.inside_indices() {
        let (i, j) = grid.coords(k);
        let [x, y] = grid.position(i, j);
        out.values_mut()[k] = f(x, y);
    }
    out
}

/// Sphere radius `min(X, Y)/2 + 2 max(dx, dy)`.
pub fn sphere_radius(grid: &Grid) -> f64 {
    grid.width().min(grid.height()) / 2.0 + 2.0 * grid.dx().max(grid.dy())
}

/// Hemisphere `sqrt(r^2 - x^2 - y^2)` centred on the origin.
pub fn make_sphere(grid: &Grid) -> Scene {
    let r = sphere_radius(grid);
    let mask = Mask::from_predicate(grid, |x, y| x * x + y * y <= r * r);
    let height = restrict(grid, &mask, |x, y| (r * r - x * x - y * y).max(0.0).sqrt());
    Scene { height, mask }
}

/// Ridge tent `min(4X/5 - 2|x|, 2Y/5 - |y|)` on `|x|/X, |y|/Y < 2/5`.
pub fn make_tent(grid: &Grid) -> Scene {
    let (xw, yw) = (grid.width(), grid.height());
    let mask = Mask::from_predicate(grid, |x, y| x.abs() / xw < 0.4 && y.abs() / yw < 0.4);
    let height = restrict(grid, &mask, |x, y| {
        (-2.0 * x.abs() + 0.8 * xw).min(-y.abs() + 0.4 * yw)
    });
    Scene { height, mask }
}

/// Basin on `x^2 + y^2 < 2`. The printed variant dips below zero off the
/// diagonals.
pub fn make_basin(grid: &Grid, variant: BasinVariant) -> Scene {
    let mask = Mask::from_predicate(grid, |x, y| x * x + y * y < 2.0);
    let height = restrict(grid, &mask, |x, y| {
        let q = match variant {
            BasinVariant::Printed => x * x - y * y,
            BasinVariant::Radial => x * x + y * y,
        };
        1.0 - (1.0 - q) * (1.0 - q)
    });
    Scene { height, mask }
}

/// `0.5 + 0.5 sin(pi x / lx) sin(pi y / ly)` over the whole grid.
pub fn make_sinusoid(grid: &Grid, lx: f64, ly: f64) -> Scene {
    use std::f64::consts::PI;
    let mask = Mask::from_predicate(grid, |_, _| true);
    let height = restrict(grid, &mask, |x, y| {
        0.5 + 0.5 * (PI * x / lx).sin() * (PI * y / ly).sin()
    });
    Scene { height, mask }
}

/// Vase profile radius at normalized height `ybar = y / Y`.
pub fn vase_profile(ybar: f64, xw: f64) -> f64 {
    let y = ybar;
    (((((-10.8 * y + 7.2) * y + 6.6) * y - 3.8) * y - 1.375) * y + 0.5) * y * xw + 0.25 * xw
}

/// Solid of rotation `sqrt(P(y/Y)^2 - x^2)`, plus the same formula evaluated
/// on every node for use as a boundary field.
pub fn make_vase(grid: &Grid) -> (Scene, ScalarField) {
    let (xw, yw) = (grid.width(), grid.height());
    let profile = move |y: f64| vase_profile(y / yw, xw);
    let mask = Mask::from_predicate(grid, |x, y| {
        let p = profile(y);
        p * p > x * x
    });
    let surface = move |x: f64, y: f64| {
        let p = profile(y);
        (p * p - x * x).max(0.0).sqrt()
    };
    let height = restrict(grid, &mask, surface);
    let rim = ScalarField::from_fn(grid, surface);
    (Scene { height, mask }, rim)
}

/// Replace the boundary values of `height` by `bc` (used when a scene's own
/// boundary is non-zero).
pub fn with_boundary(height: &ScalarField, mask: &Mask, bc: &ScalarField) -> ScalarField {
    let mut out = height.clone();
    for k in 0..out.values().len() {
        if mask.label_at(k) == Label::Boundary {
            out.values_mut()[k] = bc.values()[k];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_examples() {
        let g = Grid::square(256, 1.0).unwrap();
        let r = sphere_radius(&g);
        assert!((r - (1.0 + 2.0 * 2.0 / 255.0)).abs() < 1e-15);
        assert!((r - 1.015_686).abs() < 1e-6);
        let odd = Grid::square(129, 1.0).unwrap();
        let s = make_sphere(&odd);
        assert!((s.height.get(64, 64) - sphere_radius(&odd)).abs() < 1e-15);
        // rim continuity
        let sur = |x: f64| (r * r - x * x).max(0.0).sqrt();
        assert!(sur(r - 1e-10) < 1e-4);
    }

    #[test]
    fn sphere_mask_has_eightfold_symmetry() {
        let g = Grid::square(64, 1.0).unwrap();
        let s = make_sphere(&g);
        let n = 63;
        for j in 0..64 {
            for i in 0..64 {
                let l = s.mask.label(i, j);
                assert_eq!(l, s.mask.label(n - i, j));
                assert_eq!(l, s.mask.label(i, n - j));
                assert_eq!(l, s.mask.label(j, i));
            }
        }
    }

    #[test]
    fn tent_examples() {
        let g = Grid::square(129, 1.0).unwrap();
        let s = make_tent(&g);
        let g21 = Grid::square(21, 1.0).unwrap();
        let s21 = make_tent(&g21);
        assert!((s.height.get(64, 64) - 0.8).abs() < 1e-15);
        // on the x face: 1.6 - 2 |x|
        let (i, j) = g21.nearest_node(0.5, 0.0);
        let x = g21.position(i, j)[0];
        assert!((s21.height.get(i, j) - (1.6 - 2.0 * x)).abs() < 1e-12);
        assert!((x - 0.5).abs() < 1e-12);
        for k in 0..g.len() {
            assert!(s.height.values()[k] >= 0.0);
        }
    }

    #[test]
    fn basin_examples() {
        let g = Grid::square(151, 1.5).unwrap();
        assert!((g.dx() - 0.02).abs() < 1e-15);
        let s = make_basin(&g, BasinVariant::Printed);
        assert_eq!(s.height.get(75, 75), 0.0);
        let (i, j) = g.nearest_node(1.0, 0.0);
        assert!((s.height.get(i, j) - 1.0).abs() < 1e-12);
        let r = make_basin(&g, BasinVariant::Radial);
        assert_eq!(r.mask, s.mask);
        assert!(r.height.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sinusoid_examples() {
        let g = Grid::square(129, 1.0).unwrap();
        let s = make_sinusoid(&g, 0.25, 0.25);
        assert!(s.height.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!((s.height.get(64, 64) - 0.5).abs() < 1e-15);
        // period 0.5, so four full periods across [-1, 1]: one maximum each
        let row: Vec<f64> = (0..129).map(|i| s.height.get(i, 72)).collect();
        // edge nodes are Boundary and hold 0
        let maxima = (2..127)
            .filter(|&i| row[i] > row[i - 1] && row[i] >= row[i + 1])
            .count();
        assert_eq!(maxima, 4);
    }

    #[test]
    fn vase_profile_values() {
        assert_eq!(vase_profile(0.0, 2.0), 0.5);
        let direct = |y: f64| {
            (-10.8 * y.powi(6) + 7.2 * y.powi(5) + 6.6 * y.powi(4)
                - 3.8 * y.powi(3)
                - 1.375 * y * y
                + 0.5 * y
                + 0.25)
                * 2.0
        };
        for k in -10..=10 {
            let y = k as f64 / 20.0;
            assert!((vase_profile(y, 2.0) - direct(y)).abs() < 1e-14);
        }
        assert!((vase_profile(0.5, 1.0) - 0.15).abs() < 1e-14);
        assert!((vase_profile(-0.5, 1.0) - 0.15).abs() < 1e-14);
    }

    #[test]
    fn vase_symmetry_and_rim() {
        let g = Grid::square(129, 1.0).unwrap();
        let (s, rim) = make_vase(&g);
        assert!((s.height.get(64, 64) - 0.5).abs() < 1e-15);
        for j in 0..129 {
            for i in 0..129 {
                assert_eq!(s.mask.label(i, j), s.mask.label(128 - i, j));
            }
        }
        for k in 0..g.len() {
            match s.mask.label_at(k) {
                Label::Inside => assert_eq!(s.height.values()[k], rim.values()[k]),
                _ => assert_eq!(s.height.values()[k], 0.0),
            }
            assert!(rim.values()[k] >= 0.0);
        }
    }
}
