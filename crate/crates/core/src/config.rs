//! Run configuration: a flat `key = value` text file.
//!
//! ```text
//! # sphere benchmark
//! scene = sphere
//! nx = 128
//! model = oren_nayar
//! sigma = 0.4
//! light = 0 0 1
//! image_out = sphere.pgm
//! ```
//!
//! `#` starts a comment. Unknown and repeated keys are errors. Vectors are
//! three numbers separated by spaces or commas; pinned nodes are
//! `i,j,height` triples separated by `;`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Result, SfsError};
use crate::grid::Grid;
use crate::reflectance::{Direction, LightSource, ModelSpec, Viewer};
use crate::scenes::{BasinVariant, SceneSpec};
use crate::solver::{Pinned, SolverConfig};

pub const KEYS: &[&str] = &[
    "scene",
    "nx",
    "ny",
    "domain",
    "input_image",
    "mask_image",
    "ground_truth",
    "height_in",
    "model",
    "sigma",
    "k_s",
    "alpha",
    "light",
    "viewer",
    "mu",
    "h",
    "eta",
    "max_iter",
    "bc",
    "bc_field",
    "pinned",
    "n_theta",
    "n_phi",
    "hemisphere",
    "quantize",
    "sinusoid_wavelength",
    "basin_variant",
    "image_out",
    "mask_out",
    "truth_out",
    "height_out",
    "mesh_out",
    "report_out",
    "errors_out",
    "table",
    "table_out",
    "delimiter",
    "threads",
];

/// How boundary heights are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum BcMode {
    Zero,
    /// The scene's own closed-form boundary (the vase rim; zero elsewhere).
    Rim,
    /// A height dump read from `bc_field`.
    Field(PathBuf),
    StateConstraint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchTable {
    Sphere,
    TentOn,
    TentPh,
    VaseBc,
}

impl BenchTable {
    pub fn parse(s: &str) -> Result<BenchTable> {
        Ok(match s {
            "sphere" => BenchTable::Sphere,
            "tent_on" => BenchTable::TentOn,
            "tent_ph" => BenchTable::TentPh,
            "vase_bc" => BenchTable::VaseBc,
            _ => return Err(SfsError::Config(format!("unknown table `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scene: Option<SceneSpec>,
    pub nx: usize,
    pub ny: usize,
    /// `[xmin, xmax, ymin, ymax]`; `None` uses the scene's default square.
    pub domain: Option<[f64; 4]>,
    pub input_image: Option<PathBuf>,
    pub mask_image: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub height_in: Option<PathBuf>,
    pub model: ModelSpec,
    pub light: LightSource,
    /// The light vector as written, before normalization.
    pub light_input: [f64; 3],
    pub viewer: Viewer,
    pub solver: SolverConfig,
    pub bc: BcMode,
    pub quantize: bool,
    pub image_out: Option<PathBuf>,
    pub mask_out: Option<PathBuf>,
    pub truth_out: Option<PathBuf>,
    pub height_out: Option<PathBuf>,
    pub mesh_out: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
    pub errors_out: Option<PathBuf>,
    pub table: Option<BenchTable>,
    pub table_out: Option<PathBuf>,
    pub delimiter: char,
    pub threads: Option<usize>,
    explicit: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: None,
            nx: 256,
            ny: 256,
            domain: None,
            input_image: None,
            mask_image: None,
            ground_truth: None,
            height_in: None,
            model: ModelSpec::Lambertian,
            light: Direction::VERTICAL,
            light_input: [0.0, 0.0, 1.0],
            viewer: Direction::VERTICAL,
            solver: SolverConfig::default(),
            bc: BcMode::Zero,
            quantize: true,
            image_out: None,
            mask_out: None,
            truth_out: None,
            height_out: None,
            mesh_out: None,
            report_out: None,
            errors_out: None,
            table: None,
            table_out: None,
            delimiter: ',',
            threads: None,
            explicit: Vec::new(),
        }
    }
}

fn err(key: &str, msg: impl std::fmt::Display) -> SfsError {
    SfsError::Config(format!("{key}: {msg}"))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| err(key, format!("`{v}`: {e}")))
}

fn numbers(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(err(key, format!("expected true/false, got `{v}`"))),
    }
}

fn direction(key: &str, v: &str) -> Result<(Direction, [f64; 3])> {
    let xs = numbers(key, v)?;
    let [x, y, z] = xs[..] else {
        return Err(err(key, format!("expected 3 components, got {}", xs.len())));
    };
    let (d, norm) = Direction::normalized([x, y, z]).map_err(|e| err(key, e))?;
    if (norm - 1.0).abs() > 1e-6 {
        log::warn!("{key} = ({x}, {y}, {z}) has length {norm}; normalized");
    }
    Ok((d, [x, y, z]))
}

/// Splits the text into `(key, value)` pairs, rejecting unknown and repeated
/// keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(SfsError::Config(format!(
                "line {}: expected `key = value`",
                n + 1
            )));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(SfsError::Config(format!(
                "line {}: unknown key `{k}`",
                n + 1
            )));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(SfsError::Config(format!(
                "line {}: `{k}` given twice",
                n + 1
            )));
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let pairs = parse_pairs(text)?;
        let get = |k: &str| pairs.get(k).map(String::as_str);
        let mut c = RunConfig {
            explicit: pairs.keys().cloned().collect(),
            ..RunConfig::default()
        };

        let basin = match get("basin_variant") {
            None | Some("printed") => BasinVariant::Printed,
            Some("radial") => BasinVariant::Radial,
            Some(v) => {
                return Err(err(
                    "basin_variant",
                    format!("expected printed/radial, got `{v}`"),
                ))
            }
        };
        let wavelength = match get("sinusoid_wavelength") {
            None => (None, None),
            Some(v) => match numbers("sinusoid_wavelength", v)?[..] {
                [l] => (Some(l), Some(l)),
                [lx, ly] => (Some(lx), Some(ly)),
                _ => return Err(err("sinusoid_wavelength", "expected one or two numbers")),
            },
        };
        c.scene = match get("scene") {
            None => None,
            Some("sphere") => Some(SceneSpec::Sphere),
            Some("tent") => Some(SceneSpec::RidgeTent),
            Some("basin") => Some(SceneSpec::Basin(basin)),
            Some("sinusoid") => Some(SceneSpec::Sinusoid {
                wavelength_x: wavelength.0,
                wavelength_y: wavelength.1,
            }),
            Some("vase") => Some(SceneSpec::Vase),
            Some(v) => return Err(err("scene", format!("unknown scene `{v}`"))),
        };

        if let Some(v) = get("nx") {
            c.nx = num("nx", v)?;
            c.ny = c.nx;
        }
        if let Some(v) = get("ny") {
            c.ny = num("ny", v)?;
        }
        if let Some(v) = get("domain") {
            let d = numbers("domain", v)?;
            let [x0, x1, y0, y1] = d[..] else {
                return Err(err("domain", "expected xmin xmax ymin ymax"));
            };
            c.domain = Some([x0, x1, y0, y1]);
        }

        let path = |k: &str| get(k).map(PathBuf::from);
        c.input_image = path("input_image");
        c.mask_image = path("mask_image");
        c.ground_truth = path("ground_truth");
        c.height_in = path("height_in");
        c.image_out = path("image_out");
        c.mask_out = path("mask_out");
        c.truth_out = path("truth_out");
        c.height_out = path("height_out");
        c.mesh_out = path("mesh_out");
        c.report_out = path("report_out");
        c.errors_out = path("errors_out");
        c.table_out = path("table_out");

        let sigma: f64 = get("sigma")
            .map(|v| num("sigma", v))
            .transpose()?
            .unwrap_or(0.0);
        let k_s: f64 = get("k_s")
            .map(|v| num("k_s", v))
            .transpose()?
            .unwrap_or(0.0);
        let alpha: f64 = get("alpha")
            .map(|v| num("alpha", v))
            .transpose()?
            .unwrap_or(1.0);
        c.model = match get("model").unwrap_or("lambertian") {
            "lambertian" => ModelSpec::Lambertian,
            "oren_nayar" => ModelSpec::oren_nayar(sigma).map_err(|e| err("sigma", e))?,
            "phong" => ModelSpec::phong(k_s, alpha).map_err(|e| err("k_s/alpha", e))?,
            v => return Err(err("model", format!("unknown model `{v}`"))),
        };
        if let Some(v) = get("light") {
            (c.light, c.light_input) = direction("light", v)?;
        }
        if let Some(v) = get("viewer") {
            c.viewer = direction("viewer", v)?.0;
        }

        let s = &mut c.solver;
        if let Some(v) = get("mu") {
            s.mu = num("mu", v)?;
            if !(s.mu > 0.0 && s.mu.is_finite()) {
                return Err(err("mu", "must be positive"));
            }
        }
        if let Some(v) = get("h") {
            let h: f64 = num("h", v)?;
            if !(h > 0.0 && h.is_finite()) {
                return Err(err("h", "must be positive"));
            }
            s.h = Some(h);
        }
        if let Some(v) = get("eta") {
            s.eta = num("eta", v)?;
        }
        if let Some(v) = get("max_iter") {
            s.max_iter = num("max_iter", v)?;
        }
        if let Some(v) = get("n_theta") {
            s.n_theta = num("n_theta", v)?;
        }
        if let Some(v) = get("n_phi") {
            s.n_phi = num("n_phi", v)?;
        }
        if let Some(v) = get("hemisphere") {
            s.hemisphere = flag("hemisphere", v)?;
        }
        if let Some(v) = get("pinned") {
            for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let parts: Vec<&str> = item.split(',').map(str::trim).collect();
                let [i, j, height] = parts[..] else {
                    return Err(err("pinned", format!("expected i,j,height, got `{item}`")));
                };
                s.pinned.push(Pinned {
                    i: num("pinned", i)?,
                    j: num("pinned", j)?,
                    height: num("pinned", height)?,
                });
            }
        }

        c.bc = match get("bc").unwrap_or("zero") {
            "zero" => BcMode::Zero,
            "rim" => BcMode::Rim,
            "state" => BcMode::StateConstraint,
            "field" => {
                BcMode::Field(path("bc_field").ok_or_else(|| err("bc", "`field` needs bc_field"))?)
            }
            v => {
                return Err(err(
                    "bc",
                    format!("expected zero/rim/field/state, got `{v}`"),
                ))
            }
        };
        if let Some(v) = get("quantize") {
            c.quantize = flag("quantize", v)?;
        }
        c.table = get("table").map(BenchTable::parse).transpose()?;
        if let Some(v) = get("delimiter") {
            c.delimiter = match v {
                "tab" | "\\t" => '\t',
                _ if v.chars().count() == 1 => v.chars().next().expect("one char"),
                _ => {
                    return Err(err(
                        "delimiter",
                        format!("expected one character, got `{v}`"),
                    ))
                }
            };
        }
        if let Some(v) = get("threads") {
            c.threads = Some(num("threads", v)?);
        }
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            SfsError::Config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        RunConfig::parse(&text)
    }

    /// Whether `key` appeared in the file.
    pub fn is_set(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    /// Grid for scene generation: `nx x ny` over `domain`, or the scene's
    /// default square.
    pub fn scene_grid(&self) -> Result<Grid> {
        match (self.domain, self.scene) {
            (Some([x0, x1, y0, y1]), _) => Grid::from_bounds(self.nx, self.ny, [x0, x1], [y0, y1]),
            (None, Some(scene)) if self.nx == self.ny => scene.default_grid(self.nx),
            (None, _) => Grid::from_bounds(self.nx, self.ny, [-1.0, 1.0], [-1.0, 1.0]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_example() {
        let text = "\
# comment line
scene = basin      # trailing comment
basin_variant = radial
nx = 151
model = oren_nayar
sigma = 0.5
light = 0, 0, 2
eta = 1e-4
pinned = 75,75,0 ; 1,2,0.5
bc = zero
quantize = false
table = tent_on
delimiter = tab
";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.scene, Some(SceneSpec::Basin(BasinVariant::Radial)));
        assert_eq!((c.nx, c.ny), (151, 151));
        assert_eq!(c.model, ModelSpec::oren_nayar(0.5).unwrap());
        assert_eq!(c.light, Direction::VERTICAL);
        assert_eq!(c.light_input, [0.0, 0.0, 2.0]);
        assert_eq!(c.solver.eta, 1e-4);
        assert_eq!(c.solver.pinned.len(), 2);
        assert_eq!(
            c.solver.pinned[1],
            Pinned {
                i: 1,
                j: 2,
                height: 0.5
            }
        );
        assert!(!c.quantize);
        assert_eq!(c.table, Some(BenchTable::TentOn));
        assert_eq!(c.delimiter, '\t');
        assert!(c.is_set("eta") && !c.is_set("mu"));
        let g = c.scene_grid().unwrap();
        assert!((g.dx() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        assert!(matches!(
            RunConfig::parse("colour = red"),
            Err(SfsError::Config(_))
        ));
        assert!(RunConfig::parse("nx = 3\nnx = 4").is_err());
        assert!(RunConfig::parse("nx 3").is_err());
        assert!(RunConfig::parse("model = cook_torrance").is_err());
        assert!(RunConfig::parse("light = 1 0").is_err());
        assert!(RunConfig::parse("light = 0 0 -1").is_err());
        assert!(RunConfig::parse("bc = field").is_err());
        assert!(RunConfig::parse("mu = 0").is_err());
        assert!(RunConfig::parse("model = phong\nk_s = 1.5").is_err());
    }

    #[test]
    fn defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.model, ModelSpec::Lambertian);
        assert_eq!(c.bc, BcMode::Zero);
        assert!(c.quantize);
        assert_eq!(c.solver, SolverConfig::default());
        let c = RunConfig::parse(
            "bc = field\nbc_field = rim.txt\nsinusoid_wavelength = 0.25, 0.5\nscene = sinusoid",
        )
        .unwrap();
        assert_eq!(c.bc, BcMode::Field("rim.txt".into()));
        assert_eq!(
            c.scene,
            Some(SceneSpec::Sinusoid {
                wavelength_x: Some(0.25),
                wavelength_y: Some(0.5)
            })
        );
    }
}
