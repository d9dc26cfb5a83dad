//! Semi-Lagrangian discretization of the fixed-point problem
//! `mu v = min_a { b(x, a) . grad v + f(x, a, v) }`.
//!
//! All three models share one coefficient shape:
//!
//! ```text
//! b(x, a) = ((c a1 - K w1) / Q, (c a2 - K w2) / Q),   P = c / Q
//! T_i(W)  = min_a { e^{-mu h} I1[W](x_i + h b(x_i, a)) - tau P a3 (1 - mu W_i) } + tau
//! ```
//!
//! with `tau = (1 - e^{-mu h}) / mu` and `I1` bilinear interpolation.

use crate::error::{Result, SfsError};
use crate::grid::{Grid, Label, Mask, ScalarField};
use crate::reflectance::{dot3, on_azimuth_factor, LightSource, ModelSpec, Viewer};

/// Brightness values are clamped into `[BRIGHTNESS_FLOOR, model max]` before
/// the coefficients are formed; pixels brighter than the model allows are read
/// as flat.
pub const BRIGHTNESS_FLOOR: f64 = 1e-3;

/// `|Q|` below this is reported as [`SfsError::DegenerateQ`].
pub const Q_MIN: f64 = 1e-12;

/// Discretization of the unit sphere by zenith and azimuth angles.
///
/// Control `k * n_phi + l` sits at zenith `pi (k + 1/2) / n_theta` and azimuth
/// `2 pi l / n_phi`. Rows `k` and `n_theta - 1 - k` are exact mirror images
/// through the `z = 0` plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSet {
    n_theta: usize,
    n_phi: usize,
    a1: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
}

pub fn build_control_set(n_theta: usize, n_phi: usize) -> Result<ControlSet> {
    if n_theta < 2 || n_phi < 1 {
        return Err(SfsError::InvalidParameter(format!(
            "control set needs n_theta >= 2 and n_phi >= 1, got {n_theta} x {n_phi}"
        )));
    }
    use std::f64::consts::PI;
    let len = n_theta * n_phi;
    let (mut a1, mut a2, mut a3) = (
        Vec::with_capacity(len),
        Vec::with_capacity(len),
        Vec::with_capacity(len),
    );
    for k in 0..n_theta {
        let mirror = n_theta - 1 - k;
        let base = k.min(mirror);
        let theta = PI * (base as f64 + 0.5) / n_theta as f64;
        let (st, ct) = theta.sin_cos();
        let ct = match k.cmp(&mirror) {
            std::cmp::Ordering::Less => ct,
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => -ct,
        };
        for l in 0..n_phi {
            let phi = 2.0 * PI * l as f64 / n_phi as f64;
            let (sp, cp) = phi.sin_cos();
            a1.push(st * cp);
            a2.push(st * sp);
            a3.push(ct);
        }
    }
    Ok(ControlSet {
        n_theta,
        n_phi,
        a1,
        a2,
        a3,
    })
}

impl ControlSet {
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.a3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a3.is_empty()
    }

    pub fn get(&self, k: usize) -> [f64; 3] {
        [self.a1[k], self.a2[k], self.a3[k]]
    }

    pub fn iter(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(|k| self.get(k))
    }

    /// Number of leading controls with `a3 > 0` (the upper hemisphere).
    pub fn upper_len(&self) -> usize {
        self.n_theta.div_ceil(2) * self.n_phi
    }
}

/// Bilinear interpolation of `w` at a physical point.
///
/// Points are clamped to the grid rectangle. `Outside` nodes contribute
/// `bc(i, j)` instead of their stored value.
pub fn interp_bilinear(
    w: &ScalarField,
    point: [f64; 2],
    mask: &Mask,
    bc: impl Fn(usize, usize) -> f64,
) -> f64 {
    let g = *w.grid();
    let value = |i: usize, j: usize| {
        if mask.label(i, j) == Label::Outside {
            bc(i, j)
        } else {
            w.get(i, j)
        }
    };
    let fx = (point[0] - g.x0()) / g.dx();
    let fy = (point[1] - g.y0()) / g.dy();
    interp_index(&g, fx, fy, value)
}

#[inline(always)]
fn interp_index(g: &Grid, fx: f64, fy: f64, value: impl Fn(usize, usize) -> f64) -> f64 {
    let fx = fx.clamp(0.0, (g.nx() - 1) as f64);
    let fy = fy.clamp(0.0, (g.ny() - 1) as f64);
    let i0 = (fx as usize).min(g.nx() - 2);
    let j0 = (fy as usize).min(g.ny() - 2);
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let v00 = value(i0, j0);
    let v10 = value(i0 + 1, j0);
    let v01 = value(i0, j0 + 1);
    let v11 = value(i0 + 1, j0 + 1);
    blend(v00, v10, v01, v11, tx, ty)
}

/// Nonnegative weights only, so the result is monotone in every corner
/// value even after rounding. The final clamp keeps it inside the corner
/// range.
#[inline(always)]
fn blend(v00: f64, v10: f64, v01: f64, v11: f64, tx: f64, ty: f64) -> f64 {
    let sx = 1.0 - tx;
    let sy = 1.0 - ty;
    let r = sx * sy * v00 + tx * sy * v10 + sx * ty * v01 + tx * ty * v11;
    let lo = v00.min(v10).min(v01.min(v11));
    let hi = v00.max(v10).max(v01.max(v11));
    r.clamp(lo, hi)
}

/// Per-node coefficients of the operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeCoefficients {
    pub c: f64,
    pub k: f64,
    pub q: f64,
    /// `P = c / Q`.
    pub p: f64,
    /// Lagged unit normal `(-grad u, 1) / |(-grad u, 1)|`.
    pub d: [f64; 3],
    /// Phong node where the lagged `R . V < 0` switched the lobe off.
    pub clipped: bool,
}

impl NodeCoefficients {
    /// Drift `b(x, a)`.
    pub fn drift(&self, light: &LightSource, a: [f64; 3]) -> [f64; 2] {
        [
            (self.c * a[0] - self.k * light.x()) / self.q,
            (self.c * a[1] - self.k * light.y()) / self.q,
        ]
    }
}

/// Which coefficient family a model/light/viewer combination uses.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Family {
    Lambert,
    /// `c = I`, `K = A`, `Q = A w3`.
    OnFlat {
        a: f64,
    },
    /// `c = I - B + B (d . w)^2`, `K = A`, `Q = A w3`.
    OnCoincident {
        a: f64,
        b: f64,
    },
    Phong {
        k_d: f64,
        k_s: f64,
    },
}

/// Everything the node operator needs besides `W`.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    model: ModelSpec,
    family: Family,
    light: LightSource,
    viewer: Viewer,
    brightness: ScalarField,
    lag: Option<(ScalarField, ScalarField)>,
    mu: f64,
    h: f64,
    tau: f64,
    decay: f64,
    controls: ControlSet,
    hemisphere: bool,
}

impl OperatorContext {
    /// Fails with `Unsupported` for Oren-Nayar with oblique light and viewer
    /// that neither coincide nor face away from each other, and for Phong
    /// with `alpha != 1`.
    pub fn new(
        model: ModelSpec,
        light: LightSource,
        viewer: Viewer,
        brightness: &ScalarField,
        mu: f64,
        h: f64,
        controls: ControlSet,
    ) -> Result<OperatorContext> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(SfsError::InvalidParameter(format!(
                "mu must be > 0, got {mu}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(SfsError::InvalidParameter(format!(
                "h must be > 0, got {h}"
            )));
        }
        let family = match model {
            ModelSpec::Lambertian => Family::Lambert,
            ModelSpec::OrenNayar { a, b, .. } => {
                if b == 0.0 || on_azimuth_factor(&light, &viewer) == 0.0 {
                    Family::OnFlat { a }
                } else if light.same_as(&viewer) {
                    Family::OnCoincident { a, b }
                } else {
                    return Err(SfsError::Unsupported(
                        "Oren-Nayar with distinct oblique light and viewer has no fixed-point form; \
                         use on_pde_residual to check such surfaces"
                            .into(),
                    ));
                }
            }
            ModelSpec::Phong { k_d, k_s, alpha } => {
                if k_s > 0.0 && alpha != 1.0 {
                    return Err(SfsError::Unsupported(format!(
                        "Phong reconstruction needs alpha = 1, got {alpha}"
                    )));
                }
                Family::Phong { k_d, k_s }
            }
        };
        let top = model.max_brightness();
        let brightness = brightness.map(|v| v.clamp(BRIGHTNESS_FLOOR, top));
        let decay = (-mu * h).exp();
        let tau = (1.0 - decay) / mu;
        Ok(OperatorContext {
            model,
            family,
            light,
            viewer,
            brightness,
            lag: None,
            mu,
            h,
            tau,
            decay,
            controls,
            hemisphere: false,
        })
    }

    /// Restrict the minimum to the upper hemisphere `a3 > 0`.
    pub fn with_hemisphere(mut self, on: bool) -> Self {
        self.hemisphere = on;
        self
    }

    /// Set the height gradient the normal `d` is computed from.
    pub fn set_lag_gradient(&mut self, gx: ScalarField, gy: ScalarField) {
        self.lag = Some((gx, gy));
    }

    /// Whether the coefficients depend on the lagged normal at all.
    pub fn uses_lag(&self) -> bool {
        match self.family {
            Family::Lambert | Family::OnFlat { .. } => false,
            Family::OnCoincident { .. } => true,
            Family::Phong { k_s, .. } => k_s > 0.0,
        }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn light(&self) -> &LightSource {
        &self.light
    }

    pub fn viewer(&self) -> &Viewer {
        &self.viewer
    }

    pub fn grid(&self) -> &Grid {
        self.brightness.grid()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `e^{-mu h}`.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn controls(&self) -> &ControlSet {
        &self.controls
    }

    fn lagged_normal(&self, i: usize, j: usize) -> [f64; 3] {
        match &self.lag {
            None => [0.0, 0.0, 1.0],
            Some((gx, gy)) => {
                let (px, py) = (gx.get(i, j), gy.get(i, j));
                let s = (1.0 + px * px + py * py).sqrt();
                [-px / s, -py / s, 1.0 / s]
            }
        }
    }
}

pub fn assemble_coefficients(
    ctx: &OperatorContext,
    i: usize,
    j: usize,
) -> Result<NodeCoefficients> {
    let coef = coefficients_unchecked(ctx, i, j);
    if coef.q.abs() < Q_MIN {
        return Err(SfsError::DegenerateQ { i, j, q: coef.q });
    }
    if coef.p < 0.0 {
        return Err(SfsError::NonpositiveP {
            nodes: vec![(i, j)],
            min_p: coef.p,
        });
    }
    Ok(coef)
}

#[inline]
pub(crate) fn coefficients_unchecked(
    ctx: &OperatorContext,
    i: usize,
    j: usize,
) -> NodeCoefficients {
    let intensity = ctx.brightness.get(i, j);
    let w = ctx.light.as_array();
    let d = ctx.lagged_normal(i, j);
    let mut clipped = false;
    let (c, k, q) = match ctx.family {
        Family::Lambert => (intensity, 1.0, w[2]),
        Family::OnFlat { a } => (intensity, a, a * w[2]),
        Family::OnCoincident { a, b } => {
            let dw = dot3(d, w);
            (intensity - b + b * dw * dw, a, a * w[2])
        }
        Family::Phong { k_d, k_s } => {
            let v = ctx.viewer.as_array();
            let dw = dot3(d, w);
            let r = [
                2.0 * dw * d[0] - w[0],
                2.0 * dw * d[1] - w[1],
                2.0 * dw * d[2] - w[2],
            ];
            if k_s > 0.0 && dot3(r, v) < 0.0 {
                clipped = true;
                (intensity, k_d, k_d * w[2])
            } else {
                let kk = k_d + 2.0 * k_s * dot3(d, v);
                (intensity + k_s * dot3(w, v), kk, kk * w[2])
            }
        }
    };
    NodeCoefficients {
        c,
        k,
        q,
        p: c / q,
        d,
        clipped,
    }
}

/// Result of the node operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeValue {
    pub value: f64,
    /// Index of the minimizing control (lowest index among ties).
    pub argmin: usize,
    /// `a3` of the minimizing control.
    pub a3: f64,
    /// Coefficient `P` at this node.
    pub p: f64,
}

/// Copy of `w` with `Outside` nodes replaced by `bc(i, j)`.
pub fn fill_outside(w: &ScalarField, mask: &Mask, bc: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let g = *w.grid();
    (0..g.len())
        .map(|k| {
            if mask.label_at(k) == Label::Outside {
                let (i, j) = g.coords(k);
                bc(i, j)
            } else {
                w.values()[k]
            }
        })
        .collect()
}

/// `T_i(W)` at node `(i, j)`, projected onto `[0, 1/mu]`.
///
/// Without the lower bound, nodes where `P a3 > 1` (brightness the model
/// cannot produce) drive the iterates to `-inf`.
///
/// `filled` holds `W` on the whole grid with `Outside` nodes already carrying
/// the boundary value (see [`fill_outside`]).
pub fn sl_operator_node(
    ctx: &OperatorContext,
    filled: &[f64],
    i: usize,
    j: usize,
) -> Result<NodeValue> {
    let coef = assemble_coefficients(ctx, i, j)?;
    Ok(apply_node(ctx, &coef, filled, i, j))
}

#[inline]
pub(crate) fn apply_node(
    ctx: &OperatorContext,
    coef: &NodeCoefficients,
    filled: &[f64],
    i: usize,
    j: usize,
) -> NodeValue {
    let g = ctx.grid();
    let nx = g.nx();
    let wi = filled[j * nx + i];
    let running = ctx.tau * coef.p * (1.0 - ctx.mu * wi);
    let n = if ctx.hemisphere || running >= 0.0 {
        // the mirrored lower control has the same foot point and a cost no
        // smaller than its upper twin
        ctx.controls.upper_len()
    } else {
        ctx.controls.len()
    };
    let sx = ctx.h * coef.c / (coef.q * g.dx());
    let sy = ctx.h * coef.c / (coef.q * g.dy());
    let ox = i as f64 - ctx.h * coef.k * ctx.light.x() / (coef.q * g.dx());
    let oy = j as f64 - ctx.h * coef.k * ctx.light.y() / (coef.q * g.dy());
    let xmax = (g.nx() - 1) as f64;
    let ymax = (g.ny() - 1) as f64;
    let (a1, a2, a3) = (
        &ctx.controls.a1[..n],
        &ctx.controls.a2[..n],
        &ctx.controls.a3[..n],
    );
    let ny = g.ny();
    assert_eq!(filled.len(), nx * ny);
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for k in 0..n {
        // max/min also map NaN into range
        let fx = (ox + sx * a1[k]).max(0.0).min(xmax);
        let fy = (oy + sy * a2[k]).max(0.0).min(ymax);
        // SAFETY: fx, fy are finite and within [0, 2^31).
        let i0 = (unsafe { fx.to_int_unchecked::<i32>() } as usize).min(nx - 2);
        let j0 = (unsafe { fy.to_int_unchecked::<i32>() } as usize).min(ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let base = j0 * nx + i0;
        // SAFETY: i0 <= nx - 2 and j0 <= ny - 2, so base + nx + 1 < nx * ny.
        let (v00, v10, v01, v11) = unsafe {
            (
                *filled.get_unchecked(base),
                *filled.get_unchecked(base + 1),
                *filled.get_unchecked(base + nx),
                *filled.get_unchecked(base + nx + 1),
            )
        };
        let sxw = 1.0 - tx;
        let w = (1.0 - ty) * (sxw * v00 + tx * v10) + ty * (sxw * v01 + tx * v11);
        let obj = ctx.decay * w - running * a3[k];
        let lt = obj < best;
        best = if lt { obj } else { best };
        arg = if lt { k } else { arg };
    }
    let value = (best + ctx.tau).max(0.0).min(1.0 / ctx.mu);
    NodeValue {
        value,
        argmin: arg,
        a3: a3[arg],
        p: coef.p,
    }
}

/// Residual of the Oren-Nayar PDE for one case at a surface patch of
/// gradient `p` observed with brightness `i`. Zero when `i` is the exact
/// rendering of `p` under that case.
///
/// Cases 1 and 2 only exist as PDEs here; the fixed-point solver does not
/// handle them.
pub fn on_pde_residual(
    case: crate::reflectance::OnCase,
    p: [f64; 2],
    i: f64,
    model: &ModelSpec,
    light: &LightSource,
    viewer: &Viewer,
) -> Result<f64> {
    use crate::reflectance::OnCase;
    let ModelSpec::OrenNayar { a, b, .. } = *model else {
        return Err(SfsError::InvalidParameter(
            "on_pde_residual needs an Oren-Nayar model".into(),
        ));
    };
    let s = (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
    let nw = -light.x() * p[0] - light.y() * p[1] + light.z();
    let nv = -viewer.x() * p[0] - viewer.y() * p[1] + viewer.z();
    let gw = (s * s - nw * nw).max(0.0).sqrt();
    let gv = (s * s - nv * nv).max(0.0).sqrt();
    let m = on_azimuth_factor(light, viewer);
    let lin = a * (light.x() * p[0] + light.y() * p[1] - light.z());
    Ok(match case {
        OnCase::Case1 => {
            if nv / s <= crate::reflectance::COS_VIEW_MIN {
                return Err(SfsError::DegenerateView {
                    cos_theta_r: nv / s,
                });
            }
            i * s + lin - b * m * gw * gv * nw / (s * nv)
        }
        OnCase::Case2 => i * s * s - a * nw * s - b * m * gw * gv,
        OnCase::Case3 => i * s + lin,
        OnCase::Case4 => (i - b) * s + lin + b * nw * nw / s,
    })
}
