//! Forward brightness models and the vertical-light eikonal right-hand sides.
//!
//! Gradients are passed as `p = grad u = (u_x, u_y)`. The outward surface
//! normal is `N = (-p, 1) / sqrt(1 + |p|^2)`.

use crate::error::{Result, SfsError};
use crate::grid::{gradient_central, Label, Mask, ScalarField};

/// Tolerance on `|dir| = 1` for [`Direction::new`].
pub const UNIT_TOL: f64 = 1e-12;

/// Light and viewer vectors closer than this count as coincident.
pub const SAME_DIRECTION_TOL: f64 = 1e-9;

/// Guard on `cos(theta_r)` in the Oren-Nayar `tan(beta)` term.
pub const COS_VIEW_MIN: f64 = 1e-9;

/// A unit vector in the upper half space (`z > 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Direction([f64; 3]);

pub type LightSource = Direction;
pub type Viewer = Direction;

impl Direction {
    pub const VERTICAL: Direction = Direction([0.0, 0.0, 1.0]);

    /// Accepts only vectors already of unit length.
    pub fn new(v: [f64; 3]) -> Result<Direction> {
        let n = norm3(v);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(SfsError::InvalidParameter(format!(
                "direction {v:?} has length {n}, expected 1"
            )));
        }
        Direction::checked(v)
    }

    /// Normalizes `v`; also returns its original length.
    pub fn normalized(v: [f64; 3]) -> Result<(Direction, f64)> {
        let n = norm3(v);
        if !(n > 0.0 && n.is_finite()) {
            return Err(SfsError::InvalidParameter(format!(
                "direction {v:?} cannot be normalized"
            )));
        }
        let d = Direction::checked([v[0] / n, v[1] / n, v[2] / n])?;
        Ok((d, n))
    }

    fn checked(v: [f64; 3]) -> Result<Direction> {
        if !(v[2] > 0.0) {
            return Err(SfsError::InvalidParameter(format!(
                "direction {v:?} must point into z > 0"
            )));
        }
        Ok(Direction(v))
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    /// `(x, y)` component.
    pub fn tilde(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        dot3(self.0, other.0)
    }

    pub fn is_vertical(&self) -> bool {
        self.0[0] == 0.0 && self.0[1] == 0.0
    }

    pub fn same_as(&self, other: &Direction) -> bool {
        let d = [
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ];
        norm3(d) <= SAME_DIRECTION_TOL
    }
}

#[inline]
pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Reflectance model and its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    Lambertian,
    /// Roughness `sigma` in radians; `a`, `b` are derived from it.
    OrenNayar {
        sigma: f64,
        a: f64,
        b: f64,
    },
    /// Ambient term is zero and `k_d + k_s = 1`.
    Phong {
        k_d: f64,
        k_s: f64,
        alpha: f64,
    },
}

impl ModelSpec {
    pub fn oren_nayar(sigma: f64) -> Result<ModelSpec> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&sigma) {
            return Err(SfsError::InvalidParameter(format!(
                "Oren-Nayar sigma must lie in [0, pi/2), got {sigma}"
            )));
        }
        let s2 = sigma * sigma;
        let a = 1.0 - 0.5 * s2 / (s2 + 0.33);
        let b = 0.45 * s2 / (s2 + 0.09);
        Ok(ModelSpec::OrenNayar { sigma, a, b })
    }

    pub fn phong(k_s: f64, alpha: f64) -> Result<ModelSpec> {
        if !(0.0..=1.0).contains(&k_s) {
            return Err(SfsError::InvalidParameter(format!(
                "Phong k_s must lie in [0, 1], got {k_s}"
            )));
        }
        if !(1.0..=10.0).contains(&alpha) {
            return Err(SfsError::InvalidParameter(format!(
                "Phong alpha must lie in [1, 10], got {alpha}"
            )));
        }
        Ok(ModelSpec::Phong {
            k_d: 1.0 - k_s,
            k_s,
            alpha,
        })
    }

    /// Largest brightness the model can produce.
    pub fn max_brightness(&self) -> f64 {
        match *self {
            ModelSpec::OrenNayar { a, .. } => a,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Lambertian => "lambertian",
            ModelSpec::OrenNayar { .. } => "oren_nayar",
            ModelSpec::Phong { .. } => "phong",
        }
    }
}

/// The four Oren-Nayar configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnCase {
    /// `theta_i >= theta_r`, azimuths within a quarter turn.
    Case1,
    /// `theta_i < theta_r`, azimuths within a quarter turn.
    Case2,
    /// Azimuth difference in `[pi/2, 3pi/2]`: the `B` term vanishes.
    Case3,
    /// Light and viewer coincide off the vertical.
    Case4,
}

pub fn classify_on_case(
    theta_i: f64,
    theta_r: f64,
    delta_phi: f64,
    same_direction: bool,
) -> OnCase {
    use std::f64::consts::{FRAC_PI_2, PI};
    if same_direction {
        return OnCase::Case4;
    }
    let dphi = delta_phi.rem_euclid(2.0 * PI);
    if (FRAC_PI_2..=1.5 * PI).contains(&dphi) {
        OnCase::Case3
    } else if theta_i >= theta_r {
        OnCase::Case1
    } else {
        OnCase::Case2
    }
}

/// `max(0, cos(phi_r - phi_i))` from the image-plane projections of light and
/// viewer. Zero when either projection vanishes.
pub fn on_azimuth_factor(light: &LightSource, viewer: &Viewer) -> f64 {
    let w = light.tilde();
    let v = viewer.tilde();
    let nw = w[0].hypot(w[1]);
    let nv = v[0].hypot(v[1]);
    if nw < 1e-12 || nv < 1e-12 {
        return 0.0;
    }
    ((w[0] * v[0] + w[1] * v[1]) / (nw * nv)).max(0.0)
}

/// `N . dir` scaled by `sqrt(1 + |p|^2)`.
#[inline]
fn n_dot(p: [f64; 2], dir: &Direction) -> f64 {
    -dir.x() * p[0] - dir.y() * p[1] + dir.z()
}

#[inline]
fn slope_norm(p: [f64; 2]) -> f64 {
    (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()
}

pub fn lambert_brightness(p: [f64; 2], light: &LightSource) -> f64 {
    (n_dot(p, light) / slope_norm(p)).clamp(0.0, 1.0)
}

pub fn oren_nayar_brightness(
    p: [f64; 2],
    light: &LightSource,
    viewer: &Viewer,
    model: &ModelSpec,
) -> Result<f64> {
    let ModelSpec::OrenNayar { a, b, .. } = *model else {
        return Err(SfsError::InvalidParameter(
            "oren_nayar_brightness needs an Oren-Nayar model".into(),
        ));
    };
    let s = slope_norm(p);
    let nw = n_dot(p, light);
    let cos_i = nw / s;
    if cos_i <= 0.0 {
        return Ok(0.0);
    }
    let m = on_azimuth_factor(light, viewer);
    if b == 0.0 || m == 0.0 {
        return Ok((a * cos_i).clamp(0.0, 1.0));
    }
    let nv = n_dot(p, viewer);
    let cos_r = nv / s;
    let s2 = s * s;
    let sin_i = (s2 - nw * nw).max(0.0).sqrt() / s;
    let sin_r = (s2 - nv * nv).max(0.0).sqrt() / s;
    let extra = if cos_i <= cos_r {
        // theta_i >= theta_r: alpha = theta_i, beta = theta_r
        if cos_r <= COS_VIEW_MIN {
            return Err(SfsError::DegenerateView { cos_theta_r: cos_r });
        }
        sin_i * sin_r / cos_r
    } else {
        sin_r * sin_i / cos_i
    };
    Ok((cos_i * (a + b * m * extra)).clamp(0.0, 1.0))
}

/// Phong brightness with the specular lobe cut off where `R . V < 0`.
pub fn phong_brightness(
    p: [f64; 2],
    light: &LightSource,
    viewer: &Viewer,
    model: &ModelSpec,
) -> f64 {
    let ModelSpec::Phong { k_d, k_s, alpha } = *model else {
        return lambert_brightness(p, light);
    };
    let s = slope_norm(p);
    let cos_i = n_dot(p, light) / s;
    if cos_i <= 0.0 {
        return 0.0;
    }
    let specular = if k_s == 0.0 {
        0.0
    } else {
        let n = [-p[0] / s, -p[1] / s, 1.0 / s];
        let w = light.as_array();
        let r = [
            2.0 * cos_i * n[0] - w[0],
            2.0 * cos_i * n[1] - w[1],
            2.0 * cos_i * n[2] - w[2],
        ];
        let rv = dot3(r, viewer.as_array());
        if rv > 0.0 {
            rv.powf(alpha)
        } else {
            0.0
        }
    };
    (k_d * cos_i + k_s * specular).clamp(0.0, 1.0)
}

/// Brightness of a surface patch with gradient `p` under `model`.
pub fn brightness(
    p: [f64; 2],
    model: &ModelSpec,
    light: &LightSource,
    viewer: &Viewer,
) -> Result<f64> {
    match model {
        ModelSpec::Lambertian => Ok(lambert_brightness(p, light)),
        ModelSpec::OrenNayar { .. } => oren_nayar_brightness(p, light, viewer, model),
        ModelSpec::Phong { .. } => Ok(phong_brightness(p, light, viewer, model)),
    }
}

/// Right-hand side `f` of `|grad u| = f` for vertical light and viewer.
///
/// Returns `|grad u|` for the surface slope that renders to `value`. Values
/// above the model maximum (by more than `1e-9`) or non-positive values are
/// rejected.
pub fn eikonal_rhs(model: &ModelSpec, value: f64) -> Result<f64> {
    let max = model.max_brightness();
    if !(value > 0.0) || value > max + 1e-9 {
        return Err(SfsError::BrightnessOutOfRange { value, max });
    }
    let i = value.min(max);
    let f2 = match *model {
        ModelSpec::Lambertian => 1.0 / (i * i) - 1.0,
        ModelSpec::OrenNayar { a, .. } => a * a / (i * i) - 1.0,
        ModelSpec::Phong { k_d, k_s, alpha } => {
            if alpha != 1.0 {
                return Err(SfsError::Unsupported(format!(
                    "Phong eikonal form needs alpha = 1, got {alpha}"
                )));
            }
            if k_s > 0.0 && i < k_d * std::f64::consts::FRAC_1_SQRT_2 {
                // slope beyond 1: the specular lobe is cut off
                k_d * k_d / (i * i) - 1.0
            } else {
                let ip = i + k_s;
                let im = i - k_s;
                let q = k_d * k_d + 8.0 * k_s * k_s + 8.0 * i * k_s;
                (k_d * k_d - 2.0 * ip * im + k_d * q.sqrt()) / (2.0 * ip * ip)
            }
        }
    };
    Ok(f2.max(0.0).sqrt())
}

/// Round to the nearest of 256 gray levels, back in `[0, 1]`.
pub fn quantize8(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

/// Render a height field. `Outside` nodes get the flat-plane brightness.
pub fn render_image(
    height: &ScalarField,
    mask: &Mask,
    model: &ModelSpec,
    light: &LightSource,
    viewer: &Viewer,
    quantize: bool,
) -> Result<ScalarField> {
    let grid = *height.grid();
    let (gx, gy) = gradient_central(height, mask);
    let background = brightness([0.0, 0.0], model, light, viewer)?;
    let mut out = ScalarField::zeros(&grid);
    for k in 0..grid.len() {
        let v = if mask.label_at(k) == Label::Outside {
            background
        } else {
            brightness([gx.values()[k], gy.values()[k]], model, light, viewer)?
        };
        out.values_mut()[k] = if quantize { quantize8(v) } else { v };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn dir(v: [f64; 3]) -> Direction {
        Direction::normalized(v).unwrap().0
    }

    fn random_dir(rng: &mut ChaCha8Rng) -> Direction {
        loop {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.05..1.0),
            ];
            if let Ok((d, _)) = Direction::normalized(v) {
                return d;
            }
        }
    }

    fn random_grad(rng: &mut ChaCha8Rng, max: f64) -> [f64; 2] {
        let r = rng.gen_range(0.0..max);
        let t = rng.gen_range(0.0..std::f64::consts::TAU);
        [r * t.cos(), r * t.sin()]
    }

    #[test]
    fn direction_validation() {
        assert!(Direction::new([0.0, 0.0, 1.0]).is_ok());
        assert!(Direction::new([0.0, 0.0, 2.0]).is_err());
        assert!(Direction::new([1.0, 0.0, 0.0]).is_err());
        let (d, n) = Direction::normalized([0.0168, 1.198, 0.9801]).unwrap();
        assert!((norm3(d.as_array()) - 1.0).abs() < 1e-15);
        assert!((n - 1.548).abs() < 1e-3);
    }

    #[test]
    fn lambert_examples() {
        let v = Direction::VERTICAL;
        assert_eq!(lambert_brightness([0.0, 0.0], &v), 1.0);
        assert!((lambert_brightness([1.0, 0.0], &v) - FRAC_1_SQRT_2).abs() < 1e-15);
        let w = dir([1.0, 0.0, 1.0]);
        assert!((lambert_brightness([0.0, 0.0], &w) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn on_coefficients() {
        let ModelSpec::OrenNayar { a, b, .. } = ModelSpec::oren_nayar(0.4).unwrap() else {
            unreachable!()
        };
        assert!((a - (1.0 - 0.5 * 0.16 / 0.49)).abs() < 1e-15);
        assert!((a - 0.836_734_693_877_551).abs() < 1e-12);
        assert!((b - 0.288).abs() < 1e-15);
        let ModelSpec::OrenNayar { a, b, .. } = ModelSpec::oren_nayar(0.0).unwrap() else {
            unreachable!()
        };
        assert_eq!((a, b), (1.0, 0.0));
        assert!(ModelSpec::oren_nayar(2.0).is_err());
    }

    #[test]
    fn on_examples() {
        let on = ModelSpec::oren_nayar(0.4).unwrap();
        let vert = Direction::VERTICAL;
        let i = oren_nayar_brightness([0.0, 0.0], &vert, &vert, &on).unwrap();
        assert!((i - 0.836_734_693_877_551).abs() < 1e-12);
        let viewer = dir([0.3, -0.2, 1.0]);
        let i = oren_nayar_brightness([1.0, 0.0], &vert, &viewer, &on).unwrap();
        assert!((i - 0.591_660_776_094_866).abs() < 1e-12, "{i}");
    }

    #[test]
    fn on_case4_matches_its_pde() {
        // (I - B) s + A (w.p - w3) + B n_w^2 / s = 0
        let on = ModelSpec::oren_nayar(0.5).unwrap();
        let ModelSpec::OrenNayar { a, b, .. } = on else {
            unreachable!()
        };
        let w = dir([0.3, 0.1, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let p = random_grad(&mut rng, 0.5);
            let i = oren_nayar_brightness(p, &w, &w, &on).unwrap();
            let s = slope_norm(p);
            let nw = n_dot(p, &w);
            if nw <= 0.0 {
                continue;
            }
            let r = (i - b) * s + a * (w.x() * p[0] + w.y() * p[1] - w.z()) + b * nw * nw / s;
            assert!(r.abs() < 1e-12, "residual {r}");
        }
    }

    #[test]
    fn on_case3_is_scaled_lambert() {
        let on = ModelSpec::oren_nayar(0.5).unwrap();
        let a = on.max_brightness();
        let light = dir([1.0, 0.0, 2.0]);
        let viewer = dir([-1.0, 0.2, 2.0]);
        assert_eq!(
            classify_on_case(0.3, 0.3, std::f64::consts::PI, false),
            OnCase::Case3
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let p = random_grad(&mut rng, 3.0);
            let on_i = oren_nayar_brightness(p, &light, &viewer, &on).unwrap();
            let l = (n_dot(p, &light) / slope_norm(p)).max(0.0);
            assert!((on_i - a * l).abs() < 1e-15);
        }
    }

    #[test]
    fn case_classification() {
        assert_eq!(classify_on_case(0.5, 0.2, 0.0, false), OnCase::Case1);
        assert_eq!(classify_on_case(0.2, 0.5, 0.0, false), OnCase::Case2);
        assert_eq!(classify_on_case(0.2, 0.5, 0.0, true), OnCase::Case4);
        assert_eq!(classify_on_case(0.2, 0.5, 1.6, false), OnCase::Case3);
        assert_eq!(classify_on_case(0.2, 0.5, -0.1, false), OnCase::Case2);
    }

    #[test]
    fn phong_examples() {
        let vert = Direction::VERTICAL;
        let ph = ModelSpec::phong(0.3, 1.0).unwrap();
        assert_eq!(phong_brightness([0.0, 0.0], &vert, &vert, &ph), 1.0);
        let ph = ModelSpec::phong(0.4, 1.0).unwrap();
        let i = phong_brightness([1.0, 0.0], &vert, &vert, &ph);
        assert!((i - 0.6 * FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((i - 0.424_264_068_711_928_5).abs() < 1e-12);
    }

    #[test]
    fn reductions_are_exact() {
        let on0 = ModelSpec::oren_nayar(0.0).unwrap();
        let ph0 = ModelSpec::phong(0.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let p = random_grad(&mut rng, 10.0);
            let w = random_dir(&mut rng);
            let v = random_dir(&mut rng);
            let l = lambert_brightness(p, &w);
            assert_eq!(oren_nayar_brightness(p, &w, &v, &on0).unwrap(), l);
            assert_eq!(phong_brightness(p, &w, &v, &ph0), l);
        }
    }

    #[test]
    fn brightness_in_unit_range() {
        let models = [
            ModelSpec::Lambertian,
            ModelSpec::oren_nayar(0.3).unwrap(),
            ModelSpec::oren_nayar(1.5).unwrap(),
            ModelSpec::phong(0.5, 1.0).unwrap(),
            ModelSpec::phong(0.9, 7.0).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let p = random_grad(&mut rng, 10.0);
            let w = random_dir(&mut rng);
            let v = random_dir(&mut rng);
            for m in &models {
                match brightness(p, m, &w, &v) {
                    Ok(i) => assert!((0.0..=1.0).contains(&i)),
                    Err(SfsError::DegenerateView { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn eikonal_examples() {
        assert_eq!(eikonal_rhs(&ModelSpec::Lambertian, 1.0).unwrap(), 0.0);
        assert!((eikonal_rhs(&ModelSpec::Lambertian, 0.5).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        let ph0 = ModelSpec::phong(0.0, 1.0).unwrap();
        assert!((eikonal_rhs(&ph0, 0.5).unwrap() - 3f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            eikonal_rhs(&ModelSpec::Lambertian, 1.1),
            Err(SfsError::BrightnessOutOfRange { .. })
        ));
        assert!(eikonal_rhs(&ModelSpec::Lambertian, 0.0).is_err());
        let on = ModelSpec::oren_nayar(0.4).unwrap();
        assert!(eikonal_rhs(&on, 0.9).is_err());
        assert_eq!(eikonal_rhs(&on, on.max_brightness()).unwrap(), 0.0);
    }

    #[test]
    fn eikonal_round_trip_all_models() {
        let vert = Direction::VERTICAL;
        let models = [
            ModelSpec::Lambertian,
            ModelSpec::oren_nayar(0.1).unwrap(),
            ModelSpec::oren_nayar(0.5).unwrap(),
            ModelSpec::phong(0.1, 1.0).unwrap(),
            ModelSpec::phong(0.5, 1.0).unwrap(),
            ModelSpec::phong(0.9, 1.0).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in &models {
            for _ in 0..1000 {
                let p = random_grad(&mut rng, 5.0);
                let i = brightness(p, m, &vert, &vert).unwrap();
                let f = eikonal_rhs(m, i).unwrap();
                let g = p[0].hypot(p[1]);
                assert!((f - g).abs() < 1e-9 * (1.0 + g), "{m:?} |p|={g} f={f}");
            }
        }
    }

    #[test]
    fn eikonal_decreasing_in_brightness() {
        let models = [
            ModelSpec::Lambertian,
            ModelSpec::oren_nayar(0.3).unwrap(),
            ModelSpec::phong(0.5, 1.0).unwrap(),
        ];
        for m in &models {
            let max = m.max_brightness();
            let mut prev = f64::INFINITY;
            for k in 1..=2000 {
                let i = max * k as f64 / 2000.0;
                let f = eikonal_rhs(m, i).unwrap();
                assert!(f <= prev, "{m:?} at {i}");
                prev = f;
            }
        }
    }

    #[test]
    fn quantize_levels() {
        assert_eq!(quantize8(0.5001), 128.0 / 255.0);
        assert_eq!(quantize8(0.5039), 128.0 / 255.0);
        assert_eq!(quantize8(1.2), 1.0);
    }
}
