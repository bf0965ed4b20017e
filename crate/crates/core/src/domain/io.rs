//! Field serialization.
//!
//! Binary layout: one ASCII header line `dim h nx [ny [nz]]` terminated by
//! `\n`, followed by `nx·ny·nz` little-endian IEEE-754 `f64` values in
//! row-major node order (axis 0 slowest). CSV layout: a header row, then one
//! node per row with the coordinates followed by the value(s). Floats are
//! written with 17 significant digits.

use std::io::{BufRead, Write};

use crate::domain::field::{ScalarField, VectorField};
use crate::domain::grid::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldHeader {
    pub dim: usize,
    pub h: f64,
    pub shape: Vec<usize>,
}

impl FieldHeader {
    pub fn for_grid<T: Real>(grid: &GridSpec<T>) -> Self {
        Self {
            dim: grid.dim(),
            h: grid.h().as_f64(),
            shape: grid.shape().to_vec(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// True when the header describes the node layout of `grid`.
    pub fn matches<T: Real>(&self, grid: &GridSpec<T>) -> bool {
        self.dim == grid.dim()
            && self.shape == grid.shape()
            && (self.h - grid.h().as_f64()).abs() <= 1e-12 * self.h.abs()
    }

    fn line(&self) -> String {
        let mut s = format!("{} {}", self.dim, self.h);
        for n in &self.shape {
            s.push_str(&format!(" {n}"));
        }
        s
    }
}

pub fn write_binary<T: Real, W: Write>(
    field: &ScalarField<T>,
    grid: &GridSpec<T>,
    mut out: W,
) -> Result<()> {
    field.check_shape(grid)?;
    writeln!(out, "{}", FieldHeader::for_grid(grid).line())?;
    for &v in field.values() {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<T: Real, R: BufRead>(mut input: R) -> Result<(FieldHeader, ScalarField<T>)> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let mut tokens = line.split_whitespace();
    let parse_usize = |t: Option<&str>, what: &str| -> Result<usize> {
        t.and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad or missing {what} in header")))
    };
    let dim = parse_usize(tokens.next(), "dim")?;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("dimension {dim} not in 1..=3")));
    }
    let h: f64 = tokens
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad or missing h in header".into()))?;
    let shape = (0..dim)
        .map(|_| parse_usize(tokens.next(), "node count"))
        .collect::<Result<Vec<_>>>()?;
    if tokens.next().is_some() {
        return Err(Error::Format("trailing tokens in header".into()));
    }
    let header = FieldHeader { dim, h, shape };
    let mut values = Vec::with_capacity(header.node_count());
    let mut buf = [0u8; 8];
    for _ in 0..header.node_count() {
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::Format("truncated value block".into()))?;
        values.push(T::lit(f64::from_le_bytes(buf)));
    }
    if input.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after value block".into()));
    }
    Ok((header, ScalarField::new(values)))
}

fn coordinate_header(dim: usize) -> String {
    ["x", "y", "z"][..dim].join(",")
}

fn write_coords<T: Real, W: Write>(out: &mut W, grid: &GridSpec<T>, idx: usize) -> Result<()> {
    let x = grid.coords(idx);
    for (a, xa) in x.iter().take(grid.dim()).enumerate() {
        if a > 0 {
            out.write_all(b",")?;
        }
        out.write_all(format_float(xa.as_f64()).as_bytes())?;
    }
    Ok(())
}

pub fn write_csv<T: Real, W: Write>(
    field: &ScalarField<T>,
    grid: &GridSpec<T>,
    mut out: W,
) -> Result<()> {
    field.check_shape(grid)?;
    writeln!(out, "{},value", coordinate_header(grid.dim()))?;
    for (idx, &v) in field.values().iter().enumerate() {
        write_coords(&mut out, grid, idx)?;
        writeln!(out, ",{}", format_float(v.as_f64()))?;
    }
    Ok(())
}

/// Concatenated trajectory: `step,t,<coords>,u1,u2,u3`.
pub fn write_trajectory_csv<T: Real, W: Write>(
    snapshots: &[VectorField<T>],
    grid: &GridSpec<T>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "step,t,{},u1,u2,u3", coordinate_header(grid.dim()))?;
    for (step, snap) in snapshots.iter().enumerate() {
        snap.check_shape(grid)?;
        let t = format_float(grid.time(step).as_f64());
        for idx in 0..grid.node_count() {
            write!(out, "{step},{t},")?;
            write_coords(&mut out, grid, idx)?;
            for c in snap.components() {
                write!(out, ",{}", format_float(c.values()[idx].as_f64()))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> GridSpec<f64> {
        GridSpec::cube(2, (0.0, 1.0), (0.25, 0.75), 0.25, 0.1).unwrap()
    }

    #[test]
    fn binary_header_layout() {
        let g = grid();
        let f = ScalarField::constant(&g, 2.0);
        let mut buf = Vec::new();
        write_binary(&f, &g, &mut buf).unwrap();
        let header_end = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(&buf[..header_end], b"2 0.25 5 5");
        assert_eq!(buf.len(), header_end + 1 + 25 * 8);
        assert_eq!(&buf[header_end + 1..header_end + 9], &2.0f64.to_le_bytes());
    }

    #[test]
    fn truncated_binary_rejected() {
        let g = grid();
        let mut buf = Vec::new();
        write_binary(&ScalarField::constant(&g, 1.0), &g, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_binary::<f64, _>(&buf[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_rows() {
        let g = GridSpec::cube(1, (0.0, 1.0), (0.25, 0.75), 0.25, 0.1).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0]);
        let mut buf = Vec::new();
        write_csv(&f, &g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,value");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[2], "2.5000000000000000e-1,2.5000000000000000e-1");
    }

    proptest! {
        #[test]
        fn binary_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 25)) {
            let g = grid();
            let f = ScalarField::new(vals);
            let mut buf = Vec::new();
            write_binary(&f, &g, &mut buf).unwrap();
            let (header, back) = read_binary::<f64, _>(&buf[..]).unwrap();
            prop_assert!(header.matches(&g));
            prop_assert_eq!(back, f);
        }
    }
}
