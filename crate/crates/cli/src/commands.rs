use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sfs_core::bench::run_table;
use sfs_core::config::{BcMode, RunConfig};
use sfs_core::grid::{Grid, Mask, ScalarField};
use sfs_core::io::{dump, export_mesh_obj, pgm};
use sfs_core::metrics::{image_errors, surface_errors, ErrorReport};
use sfs_core::reflectance::render_image;
use sfs_core::scenes::{make_vase, with_boundary, Scene, SceneSpec};
use sfs_core::solver::{solve, BoundaryCondition, SolveReport, SolverConfig, Termination};
use sfs_core::{Result, SfsError};

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Render,
    Reconstruct,
    Evaluate,
    Bench,
}

pub struct Invocation {
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

struct Ctx {
    cfg: RunConfig,
    in_dir: PathBuf,
    out_dir: PathBuf,
}

impl Ctx {
    fn input(&self, p: &Path) -> PathBuf {
        self.in_dir.join(p)
    }

    fn output(&self, p: Option<&PathBuf>, default: &str) -> PathBuf {
        self.out_dir
            .join(p.map(PathBuf::as_path).unwrap_or(Path::new(default)))
    }

    fn optional_output(&self, p: Option<&PathBuf>) -> Option<PathBuf> {
        p.map(|p| self.out_dir.join(p))
    }
}

pub fn run(kind: Kind, inv: &Invocation) -> Result<()> {
    let cfg = RunConfig::load(&inv.config)?;
    let in_dir = inv
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out_dir = inv.out_dir.clone().unwrap_or_else(|| in_dir.clone());
    std::fs::create_dir_all(&out_dir)?;
    if let Some(n) = inv.threads.or(cfg.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SfsError::Config(format!("threads: {e}")))?;
    }
    let ctx = Ctx {
        cfg,
        in_dir,
        out_dir,
    };
    match kind {
        Kind::Render => render(&ctx),
        Kind::Reconstruct => reconstruct(&ctx),
        Kind::Evaluate => evaluate(&ctx),
        Kind::Bench => bench(&ctx),
    }
}

/// The scene plus the surface used for rendering (the vase carries its rim).
fn build_scene(cfg: &RunConfig) -> Result<Option<(Scene, ScalarField)>> {
    let Some(spec) = cfg.scene else {
        return Ok(None);
    };
    let grid = cfg.scene_grid()?;
    Ok(Some(match spec {
        SceneSpec::Vase => {
            let (scene, rim) = make_vase(&grid);
            let surface = with_boundary(&scene.height, &scene.mask, &rim);
            (scene, surface)
        }
        _ => {
            let scene = spec.build(&grid);
            let surface = scene.height.clone();
            (scene, surface)
        }
    }))
}

fn render(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let (scene, surface) =
        build_scene(cfg)?.ok_or_else(|| SfsError::Config("render needs `scene`".into()))?;
    let image = render_image(
        &surface,
        &scene.mask,
        &cfg.model,
        &cfg.light,
        &cfg.viewer,
        cfg.quantize,
    )?;
    pgm::write_image_pgm(&image, ctx.output(cfg.image_out.as_ref(), "image.pgm"))?;
    pgm::write_mask_pgm(&scene.mask, ctx.output(cfg.mask_out.as_ref(), "mask.pgm"))?;
    if let Some(p) = ctx.optional_output(cfg.truth_out.as_ref()) {
        dump::write_height_dump(&scene.height, p)?;
    }
    Ok(())
}

/// Input image, mask and (for scenes) the ground truth.
struct Inputs {
    image: ScalarField,
    mask: Mask,
    scene: Option<(Scene, ScalarField)>,
}

fn load_inputs(ctx: &Ctx) -> Result<Inputs> {
    let cfg = &ctx.cfg;
    let scene = build_scene(cfg)?;
    if let Some(path) = &cfg.input_image {
        let image = pgm::read_image_pgm(ctx.input(path))?;
        let grid = *image.grid();
        let mask = match &cfg.mask_image {
            Some(m) => pgm::read_mask_pgm(ctx.input(m), &grid)?,
            None => match &scene {
                Some((s, _)) if s.mask.grid().len() == grid.len() => {
                    Mask::from_labels(&grid, s.mask.labels().to_vec())?
                }
                _ => Mask::from_predicate(&grid, |_, _| true),
            },
        };
        return Ok(Inputs { image, mask, scene });
    }
    let Some((s, surface)) = &scene else {
        return Err(SfsError::Config("need `input_image` or `scene`".into()));
    };
    let image = render_image(
        surface,
        &s.mask,
        &cfg.model,
        &cfg.light,
        &cfg.viewer,
        cfg.quantize,
    )?;
    Ok(Inputs {
        image,
        mask: s.mask.clone(),
        scene,
    })
}

/// Re-labels `field` onto `grid` (same node counts, spacing taken from `grid`).
fn on_grid(field: ScalarField, grid: &Grid) -> Result<ScalarField> {
    ScalarField::from_values(grid, field.into_values())
}

fn boundary(ctx: &Ctx, inputs: &Inputs) -> Result<BoundaryCondition> {
    Ok(match &ctx.cfg.bc {
        BcMode::Zero => BoundaryCondition::DirichletZero,
        BcMode::StateConstraint => BoundaryCondition::StateConstraint,
        BcMode::Field(p) => BoundaryCondition::DirichletField(on_grid(
            dump::read_height_dump(ctx.input(p))?,
            inputs.image.grid(),
        )?),
        BcMode::Rim => match (&ctx.cfg.scene, &inputs.scene) {
            (Some(SceneSpec::Vase), Some((s, _))) => BoundaryCondition::DirichletField(on_grid(
                make_vase(s.mask.grid()).1,
                inputs.image.grid(),
            )?),
            _ => return Err(SfsError::Config("bc = rim needs scene = vase".into())),
        },
    })
}

fn report_text(r: &SolveReport) -> String {
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let termination = match r.termination {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max_iterations",
    };
    writeln!(s, "iterations = {}", r.iterations).unwrap();
    writeln!(s, "termination = {termination}").unwrap();
    writeln!(s, "last_residual = {:e}", r.last_residual()).unwrap();
    writeln!(s, "wall_time_secs = {}", r.wall_time_secs).unwrap();
    writeln!(s, "monotone_decrease = {}", r.monotone_decrease).unwrap();
    writeln!(s, "monotone_violations = {}", r.monotone_violations).unwrap();
    match r.lag_frozen_at {
        Some(k) => writeln!(s, "lag_frozen_at = {k}").unwrap(),
        None => writeln!(s, "lag_frozen_at = none").unwrap(),
    }
    writeln!(s, "residual_history = {}", list(&r.residual_history)).unwrap();
    writeln!(s, "max_p_a3 = {}", list(&r.max_p_a3)).unwrap();
    s
}

fn reconstruct(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let inputs = load_inputs(ctx)?;
    let solver = SolverConfig {
        bc: boundary(ctx, &inputs)?,
        ..cfg.solver.clone()
    };
    let outcome = solve(
        &inputs.image,
        &inputs.mask,
        &cfg.model,
        &cfg.light,
        &cfg.viewer,
        &solver,
    );
    let (height, report, failure) = match outcome {
        Ok((h, r)) => (h, r, None),
        Err(SfsError::NoConvergence(u)) => {
            let u = *u;
            let failure = SfsError::NoConvergence(Box::new(u.clone()));
            (u.height, u.report, Some(failure))
        }
        Err(e) => return Err(e),
    };
    dump::write_height_dump(&height, ctx.output(cfg.height_out.as_ref(), "height.txt"))?;
    if let Some(p) = ctx.optional_output(cfg.mesh_out.as_ref()) {
        export_mesh_obj(&height, &inputs.mask, p)?;
    }
    std::fs::write(
        ctx.output(cfg.report_out.as_ref(), "report.txt"),
        report_text(&report),
    )?;
    println!(
        "{} after {} iterations, last update {:e}, {:.2}s",
        if failure.is_none() {
            "converged"
        } else {
            "stopped"
        },
        report.iterations,
        report.last_residual(),
        report.wall_time_secs
    );
    failure.map_or(Ok(()), Err)
}

fn errors_text(prefix: &str, e: &ErrorReport) -> String {
    format!(
        "{prefix}_l2 = {:e}\n{prefix}_linf = {:e}\n{prefix}_err1 = {:e}\n{prefix}_err2 = {:e}\n{prefix}_n = {}\n",
        e.l2, e.linf, e.err1, e.err2, e.n
    )
}

fn evaluate(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let inputs = load_inputs(ctx)?;
    let path = cfg
        .height_in
        .as_ref()
        .ok_or_else(|| SfsError::Config("evaluate needs `height_in`".into()))?;
    let grid = *inputs.image.grid();
    let height = on_grid(dump::read_height_dump(ctx.input(path))?, &grid)?;
    let mut text = String::new();
    let truth = match (&cfg.ground_truth, &inputs.scene) {
        (Some(p), _) => Some(dump::read_height_dump(ctx.input(p))?),
        (None, Some((s, _))) => Some(s.height.clone()),
        (None, None) => None,
    };
    if let Some(t) = truth {
        let e = surface_errors(&on_grid(t, &grid)?, &height, &inputs.mask)?;
        println!("surface: L2 {:.4}  Linf {:.4}", e.l2, e.linf);
        text.push_str(&errors_text("surface", &e));
    }
    let rerender = render_image(
        &height,
        &inputs.mask,
        &cfg.model,
        &cfg.light,
        &cfg.viewer,
        true,
    )?;
    let e = image_errors(&inputs.image, &rerender, &inputs.mask, true)?;
    println!("image:   L2 {:.4}  Linf {:.4}", e.l2, e.linf);
    text.push_str(&errors_text("image", &e));
    std::fs::write(ctx.output(cfg.errors_out.as_ref(), "errors.txt"), text)?;
    Ok(())
}

fn bench(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.cfg;
    let table = cfg
        .table
        .ok_or_else(|| SfsError::Config("bench needs `table`".into()))?;
    let set = |k: &str| cfg.is_set(k);
    let user = &cfg.solver;
    let tables = run_table(table, cfg.nx, |c| {
        if set("mu") {
            c.mu = user.mu;
        }
        if set("h") {
            c.h = user.h;
        }
        if set("eta") {
            c.eta = user.eta;
        }
        if set("max_iter") {
            c.max_iter = user.max_iter;
        }
        if set("n_theta") {
            c.n_theta = user.n_theta;
        }
        if set("n_phi") {
            c.n_phi = user.n_phi;
        }
        if set("hemisphere") {
            c.hemisphere = user.hemisphere;
        }
    })?;
    let text: String = tables
        .iter()
        .map(|t| t.to_delimited(cfg.delimiter))
        .collect();
    print!("{text}");
    std::fs::write(ctx.output(cfg.table_out.as_ref(), "table.csv"), text)?;
    Ok(())
}
