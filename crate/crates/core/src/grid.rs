//! Rectangular node lattices, inside/outside/boundary masks and scalar fields.
//!
//! Index convention: `i` runs along x (image columns), `j` along y. Node `(i, j)`
//! sits at `(x0 + i dx, y0 + j dy)`, so `j = 0` is the *bottom* row of the
//! domain. Image files store the top row first; the conversion lives in
//! [`crate::io::pgm`].

use crate::error::{Result, SfsError};

/// Upper bound on `nx` and `ny`.
pub const MAX_NODES_PER_AXIS: usize = 1 << 20;

/// A uniform node lattice over an axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    x0: f64,
    y0: f64,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(SfsError::InvalidGrid(format!(
                "need at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        if nx > MAX_NODES_PER_AXIS || ny > MAX_NODES_PER_AXIS {
            return Err(SfsError::InvalidGrid(format!(
                "at most {MAX_NODES_PER_AXIS} nodes per axis, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(SfsError::InvalidGrid(format!(
                "spacing must be positive, got dx={dx}, dy={dy}"
            )));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(SfsError::InvalidGrid("non-finite origin".into()));
        }
        Ok(Grid {
            nx,
            ny,
            dx,
            dy,
            x0,
            y0,
        })
    }

    /// Grid whose corner nodes sit exactly on the rectangle corners.
    pub fn from_bounds(nx: usize, ny: usize, x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(SfsError::InvalidGrid(format!(
                "need at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        let dx = (x[1] - x[0]) / (nx - 1) as f64;
        let dy = (y[1] - y[0]) / (ny - 1) as f64;
        Grid::new(nx, ny, x[0], y[0], dx, dy)
    }

    /// Grid centred on the origin with the given spacing.
    pub fn centered(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(SfsError::InvalidGrid(format!(
                "need at least 2x2 nodes, got {nx}x{ny}"
            )));
        }
        let x0 = -0.5 * (nx - 1) as f64 * dx;
        let y0 = -0.5 * (ny - 1) as f64 * dy;
        Grid::new(nx, ny, x0, y0, dx, dy)
    }

    /// `n x n` nodes on `[-half, half]^2`.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        Grid::from_bounds(n, n, [-half, half], [-half, half])
    }

    /// Default grid for an image without known physical size: square pixels,
    /// the longer side spanning `[-1, 1]`.
    pub fn for_image(width: usize, height: usize) -> Result<Self> {
        let longest = width.max(height);
        if longest < 2 {
            return Err(SfsError::InvalidGrid("image smaller than 2 pixels".into()));
        }
        let d = 2.0 / (longest - 1) as f64;
        Grid::centered(width, height, d, d)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn y0(&self) -> f64 {
        self.y0
    }

    /// Physical extent `X = (nx - 1) dx`.
    pub fn width(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx
    }

    /// Physical extent `Y = (ny - 1) dy`.
    pub fn height(&self) -> f64 {
        (self.ny - 1) as f64 * self.dy
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy]
    }

    /// Node closest to a physical point, clamped into the lattice.
    pub fn nearest_node(&self, x: f64, y: f64) -> (usize, usize) {
        let fi = ((x - self.x0) / self.dx).round();
        let fj = ((y - self.y0) / self.dy).round();
        let i = fi.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fj.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// The four edge-adjacent neighbours that exist.
    pub fn neighbors4(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        let cand = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        cand.into_iter().filter(move |&(a, b)| a < nx && b < ny)
    }

    fn on_edge(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }
}

/// Node classification used by the solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// Unknown of the fixed-point problem.
    Inside,
    /// Carries the boundary condition.
    Boundary,
    /// Background; reads the boundary value when interpolated.
    Outside,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    grid: Grid,
    labels: Vec<Label>,
}

impl Mask {
    /// Classify the grid against an inside predicate on node positions.
    ///
    /// Nodes where the predicate holds become `Inside`, except on the outer
    /// ring of the lattice where they become `Boundary`. Nodes where it fails
    /// become `Boundary` if a 4-neighbour is `Inside`, `Outside` otherwise.
    pub fn from_predicate(grid: &Grid, inside: impl Fn(f64, f64) -> bool) -> Mask {
        let flags: Vec<bool> = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                let [x, y] = grid.position(i, j);
                inside(x, y)
            })
            .collect();
        Mask::classify(grid, &flags)
    }

    /// Same rule as [`Mask::from_predicate`] from precomputed per-node flags
    /// (e.g. a white-on-black mask image).
    pub fn from_inside_flags(grid: &Grid, flags: &[bool]) -> Result<Mask> {
        if flags.len() != grid.len() {
            return Err(SfsError::InvalidGrid(format!(
                "mask has {} entries, grid has {}",
                flags.len(),
                grid.len()
            )));
        }
        Ok(Mask::classify(grid, flags))
    }

    /// Explicit labels, no classification applied.
    pub fn from_labels(grid: &Grid, labels: Vec<Label>) -> Result<Mask> {
        if labels.len() != grid.len() {
            return Err(SfsError::InvalidGrid(format!(
                "mask has {} labels, grid has {}",
                labels.len(),
                grid.len()
            )));
        }
        Ok(Mask {
            grid: *grid,
            labels,
        })
    }

    fn classify(grid: &Grid, flags: &[bool]) -> Mask {
        let inside_at = |i: usize, j: usize| flags[grid.index(i, j)] && !grid.on_edge(i, j);
        let labels = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                if flags[idx] {
                    if grid.on_edge(i, j) {
                        Label::Boundary
                    } else {
                        Label::Inside
                    }
                } else if grid.neighbors4(i, j).any(|(a, b)| inside_at(a, b)) {
                    Label::Boundary
                } else {
                    Label::Outside
                }
            })
            .collect();
        Mask {
            grid: *grid,
            labels,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[self.grid.index(i, j)]
    }

    #[inline]
    pub fn label_at(&self, index: usize) -> Label {
        self.labels[index]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.label(i, j) == Label::Inside
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Flat indices of the `Inside` nodes in ascending order.
    pub fn inside_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == Label::Inside)
            .map(|(k, _)| k)
            .collect()
    }
}

/// One real value per grid node.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn filled(grid: &Grid, value: f64) -> ScalarField {
        ScalarField {
            grid: *grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: &Grid) -> ScalarField {
        ScalarField::filled(grid, 0.0)
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> ScalarField {
        let values = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.coords(idx);
                let [x, y] = grid.position(i, j);
                f(x, y)
            })
            .collect();
        ScalarField {
            grid: *grid,
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.len() {
            return Err(SfsError::InvalidGrid(format!(
                "field has {} values, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(ScalarField {
            grid: *grid,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Finite-difference gradient `(du/dx, du/dy)`.
///
/// Centred differences where both neighbours along an axis exist and are not
/// `Outside`; one-sided where only one does; zero where neither does.
pub fn gradient_central(field: &ScalarField, mask: &Mask) -> (ScalarField, ScalarField) {
    let grid = *field.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let usable = |i: usize, j: usize| mask.label(i, j) != Label::Outside;
    let mut gx = ScalarField::zeros(&grid);
    let mut gy = ScalarField::zeros(&grid);
    for j in 0..ny {
        for i in 0..nx {
            let u = field.get(i, j);
            let left = i > 0 && usable(i - 1, j);
            let right = i + 1 < nx && usable(i + 1, j);
            let dudx = match (left, right) {
                (true, true) => (field.get(i + 1, j) - field.get(i - 1, j)) / (2.0 * grid.dx()),
                (false, true) => (field.get(i + 1, j) - u) / grid.dx(),
                (true, false) => (u - field.get(i - 1, j)) / grid.dx(),
                (false, false) => 0.0,
            };
            let down = j > 0 && usable(i, j - 1);
            let up = j + 1 < ny && usable(i, j + 1);
            let dudy = match (down, up) {
                (true, true) => (field.get(i, j + 1) - field.get(i, j - 1)) / (2.0 * grid.dy()),
                (false, true) => (field.get(i, j + 1) - u) / grid.dy(),
                (true, false) => (u - field.get(i, j - 1)) / grid.dy(),
                (false, false) => 0.0,
            };
            gx.set(i, j, dudx);
            gy.set(i, j, dudy);
        }
    }
    (gx, gy)
}
