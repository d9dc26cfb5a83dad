//! Kruzkov transform, boundary conditions and the fixed-point driver.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Result, SfsError};
use crate::grid::{gradient_central, Label, Mask, ScalarField};
use crate::hj::{apply_node, build_control_set, coefficients_unchecked, OperatorContext, Q_MIN};
use crate::reflectance::{render_image, LightSource, ModelSpec, Viewer};

/// `v = (1 - e^{-mu u}) / mu`.
pub fn kruzkov_forward(u: f64, mu: f64) -> f64 {
    -(-mu * u).exp_m1() / mu
}

/// `u = -ln(1 - mu v) / mu`, defined for `v < 1/mu`.
pub fn kruzkov_inverse(v: f64, mu: f64) -> Result<f64> {
    if !(mu * v < 1.0) {
        return Err(SfsError::DomainError { v, mu });
    }
    Ok(-(-mu * v).ln_1p() / mu)
}

/// Like [`kruzkov_inverse`] but maps values at or above `1/mu` to the height
/// of `(1 - 1e-12) / mu` (about 27.6 / mu).
pub fn kruzkov_inverse_saturating(v: f64, mu: f64) -> f64 {
    let cap = (1.0 - 1e-12) / mu;
    -(-mu * v.min(cap)).ln_1p() / mu
}

/// Boundary condition on `Boundary` nodes, also read at `Outside` nodes.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    DirichletZero,
    /// Prescribed height `g` on the boundary.
    DirichletField(ScalarField),
    /// `v = 1/mu` on the boundary.
    StateConstraint,
}

/// A node whose height is held fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pinned {
    pub i: usize,
    pub j: usize,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub mu: f64,
    /// Semi-Lagrangian step; `None` means `min(dx, dy)`.
    pub h: Option<f64>,
    pub eta: f64,
    pub max_iter: usize,
    pub bc: BoundaryCondition,
    pub pinned: Vec<Pinned>,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Minimize over the upper hemisphere only.
    pub hemisphere: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 1.0,
            h: None,
            eta: 1e-8,
            max_iter: 100_000,
            bc: BoundaryCondition::DirichletZero,
            pinned: Vec::new(),
            n_theta: 12,
            n_phi: 8,
            hemisphere: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `max |W^{k+1} - W^k|` over the inside nodes, one entry per sweep.
    pub residual_history: Vec<f64>,
    pub wall_time_secs: f64,
    /// `max P a3` at the minimizing controls, one entry per sweep.
    pub max_p_a3: Vec<f64>,
    /// No inside node ever increased from one sweep to the next.
    pub monotone_decrease: bool,
    /// Number of (node, sweep) pairs where the iterate increased.
    pub monotone_violations: usize,
    /// Sweep after which the lagged normal stopped being refreshed, if the
    /// residual stalled (see [`LAG_STALL_SWEEPS`]).
    pub lag_frozen_at: Option<usize>,
    pub termination: Termination,
}

/// With lagged coefficients the iterates can settle into a cycle when the
/// lagged normal hovers over a branch switch. After this many sweeps without
/// a new smallest update, the lag is frozen and the remaining iteration is a
/// plain fixed-point map.
pub const LAG_STALL_SWEEPS: usize = 100;

impl SolveReport {
    pub fn last_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// Partial result of a run that hit `max_iter`.
#[derive(Clone, Debug, PartialEq)]
pub struct Unconverged {
    pub height: ScalarField,
    pub report: SolveReport,
}

/// Kruzkov-space state of a run, exposed for step-by-step inspection.
pub struct FixedPointIteration {
    ctx: OperatorContext,
    mask: Mask,
    inside: Vec<usize>,
    w: Vec<f64>,
    pinned: Vec<(usize, f64)>,
    bc_values: Vec<f64>,
    mu: f64,
    lag_frozen: bool,
}

impl FixedPointIteration {
    pub fn new(
        image: &ScalarField,
        mask: &Mask,
        model: &ModelSpec,
        light: &LightSource,
        viewer: &Viewer,
        config: &SolverConfig,
    ) -> Result<FixedPointIteration> {
        let grid = *image.grid();
        if mask.grid() != &grid {
            return Err(SfsError::InvalidGrid("image and mask grids differ".into()));
        }
        if !(config.eta > 0.0) {
            return Err(SfsError::InvalidParameter(format!(
                "eta must be > 0, got {}",
                config.eta
            )));
        }
        let inside = mask.inside_indices();
        if inside.is_empty() {
            return Err(SfsError::EmptyMask);
        }
        for &k in &inside {
            let v = image.values()[k];
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                let (i, j) = grid.coords(k);
                return Err(SfsError::InvalidParameter(format!(
                    "brightness {v} at node ({i}, {j}) outside [0, 1]"
                )));
            }
        }
        let mu = config.mu;
        let h = config.h.unwrap_or(grid.dx().min(grid.dy()));
        let controls = build_control_set(config.n_theta, config.n_phi)?;
        let ctx = OperatorContext::new(*model, *light, *viewer, image, mu, h, controls)?
            .with_hemisphere(config.hemisphere);

        let bc_values: Vec<f64> = match &config.bc {
            BoundaryCondition::DirichletZero => vec![0.0; grid.len()],
            BoundaryCondition::StateConstraint => vec![1.0 / mu; grid.len()],
            BoundaryCondition::DirichletField(g) => {
                if g.grid() != &grid {
                    return Err(SfsError::InvalidGrid("boundary field grid differs".into()));
                }
                let mut out = vec![0.0; grid.len()];
                for (k, slot) in out.iter_mut().enumerate() {
                    let gv = g.values()[k];
                    if mask.label_at(k) != Label::Inside {
                        if !gv.is_finite() {
                            let (i, j) = grid.coords(k);
                            return Err(SfsError::InvalidParameter(format!(
                                "boundary field not finite at ({i}, {j})"
                            )));
                        }
                        *slot = kruzkov_forward(gv, mu);
                    }
                }
                out
            }
        };
        let mut pinned = Vec::with_capacity(config.pinned.len());
        for p in &config.pinned {
            if p.i >= grid.nx() || p.j >= grid.ny() || !p.height.is_finite() {
                return Err(SfsError::InvalidParameter(format!(
                    "pinned node ({}, {}) with height {} is not usable",
                    p.i, p.j, p.height
                )));
            }
            pinned.push((grid.index(p.i, p.j), kruzkov_forward(p.height, mu)));
        }

        let mut w: Vec<f64> = (0..grid.len())
            .map(|k| {
                if mask.label_at(k) == Label::Inside {
                    1.0 / mu
                } else {
                    bc_values[k]
                }
            })
            .collect();
        for &(k, v) in &pinned {
            w[k] = v;
        }
        Ok(FixedPointIteration {
            ctx,
            mask: mask.clone(),
            inside,
            w,
            pinned,
            bc_values,
            mu,
            lag_frozen: false,
        })
    }

    pub fn context(&self) -> &OperatorContext {
        &self.ctx
    }

    /// Current iterate in Kruzkov variables (`Outside` nodes hold the
    /// boundary value).
    pub fn kruzkov(&self) -> &[f64] {
        &self.w
    }

    pub fn height(&self) -> ScalarField {
        let grid = *self.ctx.grid();
        let values = self
            .w
            .iter()
            .map(|&v| kruzkov_inverse_saturating(v, self.mu))
            .collect();
        ScalarField::from_values(&grid, values).expect("length matches grid")
    }

    /// Stop refreshing the lagged normal; later sweeps reuse the current one.
    pub fn freeze_lag(&mut self) {
        self.lag_frozen = true;
    }

    fn refresh_lag(&mut self) {
        let h = self.height();
        let (gx, gy) = gradient_central(&h, &self.mask);
        self.ctx.set_lag_gradient(gx, gy);
    }

    /// One Jacobi sweep. Returns `(max update, max P a3, increases)`.
    pub fn sweep(&mut self) -> Result<(f64, f64, usize)> {
        if self.ctx.uses_lag() && !self.lag_frozen {
            self.refresh_lag();
        }
        let ctx = &self.ctx;
        let grid = *ctx.grid();
        let w = &self.w;
        let results: Vec<std::result::Result<(f64, f64), (usize, f64, bool)>> = self
            .inside
            .par_iter()
            .with_min_len(256)
            .map(|&k| {
                let (i, j) = grid.coords(k);
                let coef = coefficients_unchecked(ctx, i, j);
                if coef.q.abs() < Q_MIN {
                    return Err((k, coef.q, true));
                }
                if coef.p < 0.0 {
                    return Err((k, coef.p, false));
                }
                let nv = apply_node(ctx, &coef, w, i, j);
                Ok((nv.value, nv.p * nv.a3))
            })
            .collect();

        let mut bad = Vec::new();
        let mut min_p = f64::INFINITY;
        for r in &results {
            if let Err((k, val, is_q)) = *r {
                let (i, j) = grid.coords(k);
                if is_q {
                    return Err(SfsError::DegenerateQ { i, j, q: val });
                }
                bad.push((i, j));
                min_p = min_p.min(val);
            }
        }
        if !bad.is_empty() {
            return Err(SfsError::NonpositiveP { nodes: bad, min_p });
        }

        let mut new_w = self.w.clone();
        let mut max_pa3 = f64::NEG_INFINITY;
        for (&k, r) in self.inside.iter().zip(&results) {
            let (v, pa3) = r.expect("errors handled above");
            new_w[k] = v;
            max_pa3 = max_pa3.max(pa3);
        }
        for &(k, v) in &self.pinned {
            new_w[k] = v;
        }
        let mut delta = 0.0f64;
        let mut increases = 0;
        for &k in &self.inside {
            let d = new_w[k] - self.w[k];
            if d > 0.0 {
                increases += 1;
            }
            delta = delta.max(d.abs());
        }
        self.w = new_w;
        Ok((delta, max_pa3, increases))
    }

    /// Boundary values in Kruzkov variables, per node.
    pub fn boundary_values(&self) -> &[f64] {
        &self.bc_values
    }
}

/// Reconstruct a height field from a brightness image.
///
/// Starts from `W = 1/mu` inside and iterates Jacobi sweeps until the sup-norm
/// update drops to `eta`. Hitting `max_iter` yields
/// [`SfsError::NoConvergence`] carrying the last iterate.
pub fn solve(
    image: &ScalarField,
    mask: &Mask,
    model: &ModelSpec,
    light: &LightSource,
    viewer: &Viewer,
    config: &SolverConfig,
) -> Result<(ScalarField, SolveReport)> {
    solve_with(image, mask, model, light, viewer, config, |_, _| {})
}

/// [`solve`] with a callback invoked after every sweep with the sweep number
/// (from 1) and the current Kruzkov iterate.
pub fn solve_with(
    image: &ScalarField,
    mask: &Mask,
    model: &ModelSpec,
    light: &LightSource,
    viewer: &Viewer,
    config: &SolverConfig,
    mut on_sweep: impl FnMut(usize, &[f64]),
) -> Result<(ScalarField, SolveReport)> {
    let start = Instant::now();
    let mut it = FixedPointIteration::new(image, mask, model, light, viewer, config)?;
    let mut report = SolveReport {
        iterations: 0,
        residual_history: Vec::new(),
        wall_time_secs: 0.0,
        max_p_a3: Vec::new(),
        monotone_decrease: true,
        monotone_violations: 0,
        lag_frozen_at: None,
        termination: Termination::MaxIterations,
    };
    let (mut best, mut stall) = (f64::INFINITY, 0usize);
    while report.iterations < config.max_iter {
        let (delta, pa3, increases) = it.sweep()?;
        report.iterations += 1;
        report.residual_history.push(delta);
        report.max_p_a3.push(pa3);
        report.monotone_violations += increases;
        on_sweep(report.iterations, it.kruzkov());
        if delta <= config.eta {
            report.termination = Termination::Converged;
            break;
        }
        if delta < best {
            (best, stall) = (delta, 0);
        } else {
            stall += 1;
        }
        if stall >= LAG_STALL_SWEEPS && it.ctx.uses_lag() && report.lag_frozen_at.is_none() {
            log::info!("residual stalled at {best:e}; freezing the lagged normal");
            it.freeze_lag();
            report.lag_frozen_at = Some(report.iterations);
        }
    }
    report.monotone_decrease = report.monotone_violations == 0;
    report.wall_time_secs = start.elapsed().as_secs_f64();
    log::debug!(
        "solve: {} iterations, last update {:e}, {:.2}s",
        report.iterations,
        report.last_residual(),
        report.wall_time_secs
    );
    let height = it.height();
    match report.termination {
        Termination::Converged => Ok((height, report)),
        Termination::MaxIterations => Err(SfsError::NoConvergence(Box::new(Unconverged {
            height,
            report,
        }))),
    }
}

/// `|render(height) - image|` per node; zero on `Outside` nodes.
pub fn residual_check(
    height: &ScalarField,
    image: &ScalarField,
    mask: &Mask,
    model: &ModelSpec,
    light: &LightSource,
    viewer: &Viewer,
) -> Result<ScalarField> {
    let rendered = render_image(height, mask, model, light, viewer, false)?;
    let grid = *height.grid();
    let values = (0..grid.len())
        .map(|k| {
            if mask.label_at(k) == Label::Outside {
                0.0
            } else {
                (rendered.values()[k] - image.values()[k]).abs()
            }
        })
        .collect();
    ScalarField::from_values(&grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::reflectance::Direction;

    #[test]
    fn kruzkov_examples() {
        assert_eq!(kruzkov_forward(0.0, 1.0), 0.0);
        assert!((kruzkov_forward(2f64.ln(), 1.0) - 0.5).abs() < 1e-16);
        assert!((kruzkov_inverse(0.5, 1.0).unwrap() - 2f64.ln()).abs() < 1e-16);
        assert!((kruzkov_forward(50.0, 1.0) - 1.0).abs() < 1e-15);
        assert!(matches!(
            kruzkov_inverse(1.0, 1.0),
            Err(SfsError::DomainError { .. })
        ));
        assert!(kruzkov_inverse(0.6, 2.0).is_err());
        assert!(kruzkov_inverse_saturating(1.0, 1.0).is_finite());
    }

    #[test]
    fn kruzkov_round_trip() {
        for mu in [0.1, 1.0, 3.0] {
            for k in 0..100 {
                let u = k as f64 * 0.1;
                // the inverse loses about e^{mu u} ulps
                if mu * u > 10.0 {
                    continue;
                }
                let v = kruzkov_forward(u, mu);
                assert!(v >= 0.0 && v < 1.0 / mu);
                assert!((kruzkov_inverse(v, mu).unwrap() - u).abs() < 1e-10 * (1.0 + u));
            }
        }
    }

    fn disk(n: usize) -> (Grid, Mask) {
        let g = Grid::square(n, 1.0).unwrap();
        let m = Mask::from_predicate(&g, |x, y| x * x + y * y < 0.5);
        (g, m)
    }

    #[test]
    fn flat_bright_image_gives_zero_height() {
        let (g, m) = disk(33);
        let img = ScalarField::filled(&g, 1.0);
        let cfg = SolverConfig::default();
        let v = Direction::VERTICAL;
        let (u, rep) = solve(&img, &m, &ModelSpec::Lambertian, &v, &v, &cfg).unwrap();
        assert_eq!(rep.termination, Termination::Converged);
        assert!(rep.monotone_decrease);
        // The control grid misses a3 = 1. The cheapest path to the rim tilts
        // by theta0 and pays tan(theta0 / 2) per unit length.
        let theta0 = build_control_set(12, 8).unwrap().get(0)[2].acos();
        let bound = (theta0 / 2.0).tan() * 0.5f64.sqrt();
        for k in m.inside_indices() {
            assert!(u.values()[k] >= 0.0);
            assert!(u.values()[k] <= 1.05 * bound, "{} > {bound}", u.values()[k]);
        }
    }

    #[test]
    fn empty_mask_and_bad_image_rejected() {
        let g = Grid::square(9, 1.0).unwrap();
        let m = Mask::from_predicate(&g, |_, _| false);
        let v = Direction::VERTICAL;
        let img = ScalarField::filled(&g, 0.5);
        assert!(matches!(
            solve(
                &img,
                &m,
                &ModelSpec::Lambertian,
                &v,
                &v,
                &SolverConfig::default()
            ),
            Err(SfsError::EmptyMask)
        ));
        let m = Mask::from_predicate(&g, |_, _| true);
        let img = ScalarField::filled(&g, 1.5);
        assert!(solve(
            &img,
            &m,
            &ModelSpec::Lambertian,
            &v,
            &v,
            &SolverConfig::default()
        )
        .is_err());
    }

    #[test]
    fn max_iter_reports_partial_result() {
        let (g, m) = disk(33);
        let img = ScalarField::filled(&g, 0.6);
        let cfg = SolverConfig {
            max_iter: 3,
            ..SolverConfig::default()
        };
        let v = Direction::VERTICAL;
        match solve(&img, &m, &ModelSpec::Lambertian, &v, &v, &cfg) {
            Err(SfsError::NoConvergence(b)) => {
                assert_eq!(b.report.iterations, 3);
                assert_eq!(b.report.residual_history.len(), 3);
                assert_eq!(b.report.termination, Termination::MaxIterations);
                assert_eq!(b.height.grid(), &g);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn boundary_and_pins_are_respected_every_sweep() {
        let (g, m) = disk(25);
        let img = ScalarField::filled(&g, 0.8);
        let field = ScalarField::from_fn(&g, |x, _| 0.1 + 0.05 * x);
        let (pi, pj) = (12, 12);
        let cfg = SolverConfig {
            bc: BoundaryCondition::DirichletField(field.clone()),
            pinned: vec![Pinned {
                i: pi,
                j: pj,
                height: 0.05,
            }],
            eta: 1e-6,
            ..SolverConfig::default()
        };
        let v = Direction::VERTICAL;
        let mut checked = 0;
        let (u, _) = solve_with(&img, &m, &ModelSpec::Lambertian, &v, &v, &cfg, |_, w| {
            for k in 0..g.len() {
                if m.label_at(k) != Label::Inside {
                    assert_eq!(w[k], kruzkov_forward(field.values()[k], 1.0));
                }
            }
            assert_eq!(w[g.index(pi, pj)], kruzkov_forward(0.05, 1.0));
            checked += 1;
        })
        .unwrap();
        assert!(checked > 10);
        assert!((u.get(pi, pj) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let (g, m) = disk(41);
        let img = ScalarField::from_fn(&g, |x, y| 1.0 - 0.3 * (x * x + y * y));
        let v = Direction::VERTICAL;
        let cfg = SolverConfig {
            eta: 1e-6,
            ..SolverConfig::default()
        };
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let three = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let a = one.install(|| solve(&img, &m, &ModelSpec::Lambertian, &v, &v, &cfg).unwrap());
        let b = three.install(|| solve(&img, &m, &ModelSpec::Lambertian, &v, &v, &cfg).unwrap());
        assert_eq!(a.0, b.0);
        assert_eq!(a.1.residual_history, b.1.residual_history);
    }

    #[test]
    fn residual_check_trivial() {
        let g = Grid::square(17, 1.0).unwrap();
        let m = Mask::from_predicate(&g, |_, _| true);
        let v = Direction::VERTICAL;
        let r = residual_check(
            &ScalarField::zeros(&g),
            &ScalarField::filled(&g, 1.0),
            &m,
            &ModelSpec::Lambertian,
            &v,
            &v,
        )
        .unwrap();
        assert!(r.values().iter().all(|&x| x == 0.0));
    }
}
