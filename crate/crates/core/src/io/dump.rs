//! ASCII height grids: a four-line header (`nx`, `ny`, `dx`, `dy`) followed by
//! one line of values per grid row, top row first.
//!
//! Values are printed in shortest round-trip form, so a dump reads back
//! bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SfsError};
use crate::grid::{Grid, ScalarField};

pub fn format_height_dump(field: &ScalarField) -> String {
    let g = field.grid();
    let mut out = format!("{}\n{}\n{:e}\n{:e}\n", g.nx(), g.ny(), g.dx(), g.dy());
    for j in (0..g.ny()).rev() {
        for i in 0..g.nx() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{:e}", field.get(i, j)).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Parses a dump onto a grid centred on the origin.
pub fn parse_height_dump(text: &str) -> Result<ScalarField> {
    let bad = |m: String| SfsError::Config(format!("height dump: {m}"));
    let mut tokens = text.split_ascii_whitespace();
    let mut next = |what: &str| tokens.next().ok_or_else(|| bad(format!("missing {what}")));
    let nx: usize = next("nx")?.parse().map_err(|e| bad(format!("nx: {e}")))?;
    let ny: usize = next("ny")?.parse().map_err(|e| bad(format!("ny: {e}")))?;
    let dx: f64 = next("dx")?.parse().map_err(|e| bad(format!("dx: {e}")))?;
    let dy: f64 = next("dy")?.parse().map_err(|e| bad(format!("dy: {e}")))?;
    let grid = Grid::centered(nx, ny, dx, dy)?;
    let mut field = ScalarField::zeros(&grid);
    for j in (0..ny).rev() {
        for i in 0..nx {
            let v: f64 = next("value")?
                .parse()
                .map_err(|e| bad(format!("value at ({i}, {j}): {e}")))?;
            field.set(i, j, v);
        }
    }
    if tokens.next().is_some() {
        return Err(bad("trailing data".into()));
    }
    Ok(field)
}

pub fn write_height_dump(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_height_dump(field))?;
    Ok(())
}

pub fn read_height_dump(path: impl AsRef<Path>) -> Result<ScalarField> {
    parse_height_dump(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_row_order() {
        let g = Grid::centered(3, 2, 0.5, 0.25).unwrap();
        let f = ScalarField::from_values(&g, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let text = format_height_dump(&f);
        assert_eq!(text, "3\n2\n5e-1\n2.5e-1\n3e0 4e0 5e0\n0e0 1e0 2e0\n");
        assert_eq!(parse_height_dump(&text).unwrap(), f);
    }

    #[test]
    fn round_trip_is_exact() {
        let g = Grid::square(17, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (3.0 * x).sin() * y.exp() / 7.0);
        let back = parse_height_dump(&format_height_dump(&f)).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid(), f.grid());
    }

    #[test]
    fn rejects_truncated() {
        assert!(parse_height_dump("2\n2\n1\n1\n0 0\n0\n").is_err());
        assert!(parse_height_dump("2\n2\n1\n1\n0 0\n0 0 0\n").is_err());
        assert!(parse_height_dump("2\nx\n1\n1\n").is_err());
    }
}
