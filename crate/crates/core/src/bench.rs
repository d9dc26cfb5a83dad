//! Benchmark experiments: render a scene with one model, reconstruct with
//! another, and collect errors into tables.

use crate::config::BenchTable;
use crate::error::{Result, SfsError};
use crate::grid::{Grid, ScalarField};
use crate::metrics::{image_errors, surface_errors, ErrorReport};
use crate::reflectance::{render_image, Direction, ModelSpec};
use crate::scenes::{make_sphere, make_tent, make_vase, with_boundary, Scene};
use crate::solver::{solve, BoundaryCondition, SolveReport, SolverConfig};

/// SL step used for the sphere table, as a multiple of the grid spacing.
pub const SPHERE_H_FACTOR: f64 = 0.6;
/// Zenith resolution used for the tent tables.
pub const TENT_N_THETA: usize = 48;

/// One render-then-reconstruct run.
#[derive(Clone, Debug)]
pub struct CaseResult {
    pub height: ScalarField,
    pub image: ScalarField,
    pub surface: ErrorReport,
    /// Quantized error between the input image and a re-render of `height`.
    pub image_error: ErrorReport,
    pub report: SolveReport,
}

/// Renders `scene` with `generator` (8-bit), reconstructs with
/// `reconstructor` under vertical light and viewer, and scores the result.
/// A run that hits `max_iter` is scored on its last iterate.
pub fn run_case(
    scene: &Scene,
    rim: Option<&ScalarField>,
    generator: &ModelSpec,
    reconstructor: &ModelSpec,
    config: &SolverConfig,
) -> Result<CaseResult> {
    let up = Direction::VERTICAL;
    let surface_for_render = match rim {
        Some(r) => with_boundary(&scene.height, &scene.mask, r),
        None => scene.height.clone(),
    };
    let image = render_image(&surface_for_render, &scene.mask, generator, &up, &up, true)?;
    let (height, report) = match solve(&image, &scene.mask, reconstructor, &up, &up, config) {
        Ok(r) => r,
        Err(SfsError::NoConvergence(u)) => {
            log::warn!(
                "{} on {}: no convergence",
                reconstructor.name(),
                generator.name()
            );
            (u.height, u.report)
        }
        Err(e) => return Err(e),
    };
    let surface = surface_errors(&scene.height, &height, &scene.mask)?;
    let rerender = render_image(&height, &scene.mask, reconstructor, &up, &up, true)?;
    let image_error = image_errors(&image, &rerender, &scene.mask, true)?;
    Ok(CaseResult {
        height,
        image,
        surface,
        image_error,
        report,
    })
}

pub fn sphere_config(grid: &Grid) -> SolverConfig {
    SolverConfig {
        h: Some(SPHERE_H_FACTOR * grid.dx().min(grid.dy())),
        ..SolverConfig::default()
    }
}

pub fn tent_config() -> SolverConfig {
    SolverConfig {
        n_theta: TENT_N_THETA,
        ..SolverConfig::default()
    }
}

fn on(sigma: f64) -> ModelSpec {
    ModelSpec::oren_nayar(sigma).expect("sigma in range")
}

fn ph(k_s: f64) -> ModelSpec {
    ModelSpec::phong(k_s, 1.0).expect("k_s in range")
}

pub fn sphere_models() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("LAM", ModelSpec::Lambertian),
        ("ON-00", on(0.0)),
        ("ON-04", on(0.4)),
        ("ON-08", on(0.8)),
        ("PH-s00", ph(0.0)),
        ("PH-s04", ph(0.4)),
        ("PH-s08", ph(0.8)),
    ]
}

pub fn tent_on_models() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("LAM", ModelSpec::Lambertian),
        ("ON1", on(0.1)),
        ("ON3", on(0.3)),
        ("ON5", on(0.5)),
    ]
}

pub fn tent_ph_models() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("LAM", ModelSpec::Lambertian),
        ("PH1", ph(0.1)),
        ("PH3", ph(0.3)),
        ("PH5", ph(0.5)),
    ]
}

pub fn vase_models() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("LAM", ModelSpec::Lambertian),
        ("ON-02", on(0.2)),
        ("ON-04", on(0.4)),
        ("PH-s02", ph(0.2)),
        ("PH-s04", ph(0.4)),
    ]
}

/// Cross matrix `errors[r][g]`: surface errors when the image made by model
/// `g` is reconstructed with model `r`.
pub fn cross_matrix(
    scene: &Scene,
    models: &[(&str, ModelSpec)],
    config: &SolverConfig,
) -> Result<Vec<Vec<ErrorReport>>> {
    let mut out = vec![Vec::with_capacity(models.len()); models.len()];
    for (_, generator) in models {
        for (r, (_, reconstructor)) in models.iter().enumerate() {
            out[r].push(run_case(scene, None, generator, reconstructor, config)?.surface);
        }
    }
    Ok(out)
}

/// A delimiter-separated table with a title line.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_delimited(&self, sep: char) -> String {
        let sep = sep.to_string();
        let mut out = format!("# {}\n{}\n", self.title, self.header.join(&sep));
        for r in &self.rows {
            out.push_str(&r.join(&sep));
            out.push('\n');
        }
        out
    }
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

/// Runs one of the benchmark tables at resolution `n`, letting `adjust`
/// override the table's solver settings.
pub fn run_table(
    table: BenchTable,
    n: usize,
    adjust: impl Fn(&mut SolverConfig),
) -> Result<Vec<Table>> {
    let grid = Grid::square(n, 1.0)?;
    match table {
        BenchTable::Sphere => {
            let scene = make_sphere(&grid);
            let mut cfg = sphere_config(&grid);
            adjust(&mut cfg);
            let mut rows = Vec::new();
            for (label, m) in sphere_models() {
                let r = run_case(&scene, None, &m, &m, &cfg)?;
                rows.push(vec![
                    label.to_string(),
                    r.report.iterations.to_string(),
                    f4(r.image_error.l2),
                    f4(r.image_error.linf),
                    f4(r.surface.l2),
                    f4(r.surface.linf),
                ]);
            }
            Ok(vec![Table {
                title: format!("sphere {n}x{n}, vertical light"),
                header: [
                    "model",
                    "iterations",
                    "L2(I)",
                    "Linf(I)",
                    "L2(S)",
                    "Linf(S)",
                ]
                .map(String::from)
                .to_vec(),
                rows,
            }])
        }
        BenchTable::TentOn | BenchTable::TentPh => {
            let scene = make_tent(&grid);
            let models = if table == BenchTable::TentOn {
                tent_on_models()
            } else {
                tent_ph_models()
            };
            let mut cfg = tent_config();
            adjust(&mut cfg);
            let m = cross_matrix(&scene, &models, &cfg)?;
            let mut header = vec!["reconstruction".to_string()];
            header.extend(models.iter().map(|(l, _)| l.to_string()));
            let matrix = |pick: fn(&ErrorReport) -> f64| -> Vec<Vec<String>> {
                models
                    .iter()
                    .zip(&m)
                    .map(|((l, _), row)| {
                        let mut cells = vec![l.to_string()];
                        cells.extend(row.iter().map(|e| f4(pick(e))));
                        cells
                    })
                    .collect()
            };
            let family = if table == BenchTable::TentOn {
                "Oren-Nayar"
            } else {
                "Phong"
            };
            Ok(vec![
                Table {
                    title: format!(
                        "tent {n}x{n}, {family}, L2(S); columns generate, rows reconstruct"
                    ),
                    header: header.clone(),
                    rows: matrix(|e| e.l2),
                },
                Table {
                    title: format!(
                        "tent {n}x{n}, {family}, Linf(S); columns generate, rows reconstruct"
                    ),
                    header,
                    rows: matrix(|e| e.linf),
                },
            ])
        }
        BenchTable::VaseBc => {
            let (scene, rim) = make_vase(&grid);
            let mut rows = Vec::new();
            for (bc_label, bc) in [
                ("zero", BoundaryCondition::DirichletZero),
                ("rim", BoundaryCondition::DirichletField(rim.clone())),
            ] {
                let mut cfg = SolverConfig {
                    bc,
                    ..SolverConfig::default()
                };
                adjust(&mut cfg);
                for (label, m) in vase_models() {
                    let r = run_case(&scene, Some(&rim), &m, &m, &cfg)?;
                    rows.push(vec![
                        label.to_string(),
                        bc_label.to_string(),
                        r.report.iterations.to_string(),
                        f4(r.surface.l2),
                        f4(r.surface.linf),
                    ]);
                }
            }
            Ok(vec![Table {
                title: format!("vase {n}x{n}, vertical light, boundary study"),
                header: ["model", "bc", "iterations", "L2(S)", "Linf(S)"]
                    .map(String::from)
                    .to_vec(),
                rows,
            }])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delimited_layout() {
        let t = Table {
            title: "t".into(),
            header: vec!["a".into(), "b".into()],
            rows: vec![vec!["1".into(), "2".into()]],
        };
        assert_eq!(t.to_delimited(';'), "# t\na;b\n1;2\n");
    }

    #[test]
    fn small_tent_table_shape() {
        let tables = run_table(BenchTable::TentOn, 17, |c| c.n_theta = 8).unwrap();
        assert_eq!(tables.len(), 2);
        for t in &tables {
            assert_eq!(t.header.len(), 5);
            assert_eq!(t.rows.len(), 4);
            assert!(t.rows.iter().all(|r| r.len() == 5));
        }
    }

    #[test]
    fn matched_case_scores_small() {
        let g = Grid::square(33, 1.0).unwrap();
        let scene = make_vase(&g);
        let r = run_case(
            &scene.0,
            Some(&scene.1),
            &ModelSpec::Lambertian,
            &ModelSpec::Lambertian,
            &SolverConfig {
                bc: BoundaryCondition::DirichletField(scene.1.clone()),
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert!(r.surface.l2 < 0.1, "{:?}", r.surface);
        assert!(r.image_error.l2 < 0.1, "{:?}", r.image_error);
    }
}
