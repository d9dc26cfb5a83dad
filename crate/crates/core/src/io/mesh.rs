//! Wavefront OBJ export of a reconstructed height field.

use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::grid::{Mask, ScalarField};

/// One vertex `(x, y, u)` per `Inside` node in index order, two triangles per
/// grid cell whose four corners are `Inside`.
pub fn write_obj(height: &ScalarField, mask: &Mask, out: &mut impl Write) -> Result<()> {
    let g = *height.grid();
    let mut vertex = vec![0usize; g.len()];
    for (n, k) in mask.inside_indices().into_iter().enumerate() {
        let (i, j) = g.coords(k);
        let [x, y] = g.position(i, j);
        writeln!(out, "v {x:e} {y:e} {:e}", height.values()[k])?;
        vertex[k] = n + 1;
    }
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() - 1 {
            let a = g.index(i, j);
            let corners = [a, a + 1, a + g.nx() + 1, a + g.nx()];
            if corners.iter().all(|&k| vertex[k] != 0) {
                let [p, q, r, s] = corners.map(|k| vertex[k]);
                writeln!(out, "f {p} {q} {r}")?;
                writeln!(out, "f {p} {r} {s}")?;
            }
        }
    }
    Ok(())
}

pub fn export_mesh_obj(height: &ScalarField, mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_obj(height, mask, &mut f)?;
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Label};

    fn obj(height: &ScalarField, mask: &Mask) -> String {
        let mut buf = Vec::new();
        write_obj(height, mask, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn flat_square() {
        let g = Grid::square(2, 1.0).unwrap();
        let m = Mask::from_labels(&g, vec![Label::Inside; 4]).unwrap();
        let text = obj(&ScalarField::zeros(&g), &m);
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 2);
        assert!(text.contains("f 1 2 4\nf 1 4 3\n"));
    }

    #[test]
    fn faces_only_touch_inside_nodes() {
        let g = Grid::square(33, 1.0).unwrap();
        let s = crate::scenes::make_sphere(&g);
        let text = obj(&s.height, &s.mask);
        let nv = text.lines().filter(|l| l.starts_with("v ")).count();
        assert_eq!(nv, s.mask.inside_indices().len());
        for l in text.lines().filter(|l| l.starts_with("f ")) {
            for v in l[2..].split(' ') {
                let v: usize = v.parse().unwrap();
                assert!((1..=nv).contains(&v));
            }
        }
    }
}
