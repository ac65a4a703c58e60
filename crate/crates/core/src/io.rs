//! Text formats: structured-grid ASCII fields, convergence tables and radial profiles.
//!
//! A structured-grid file is a header of `key value...` lines followed by
//! `values` and one number per line in row-major order (last axis fastest).
//! Numbers use the shortest representation that round-trips exactly; nodes
//! outside the domain are written as `NaN`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuchsian::StripField;
use crate::grid::ScalarField;
use crate::radial::RadialProfile;

const MAGIC: &str = "# hyprad structured grid";

#[derive(Clone, Debug, PartialEq)]
pub struct StructuredGrid {
    pub quantity: String,
    pub extents: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub h_trunc: Option<f64>,
    pub values: Vec<f64>,
}

impl StructuredGrid {
    /// The full (unmirrored) grid of a field.
    pub fn from_field(field: &ScalarField) -> Self {
        let grid = field.grid();
        Self {
            quantity: field.quantity().tag().into(),
            extents: grid.full_dims(),
            spacing: vec![grid.spacing(); grid.dim()],
            origin: grid.origin(),
            h_trunc: Some(grid.h_trunc()),
            values: field.unfolded(),
        }
    }

    /// A strip field with axes `(Y_1, ..., Y_{n-1}, T)`.
    pub fn from_strip(strip: &StripField, quantity: &str) -> Self {
        let m = strip.n() - 1;
        let mut extents = vec![strip.ny(); m];
        extents.push(strip.nt() + 1);
        let mut spacing = vec![strip.dy(); m];
        spacing.push(strip.dt());
        Self {
            quantity: quantity.into(),
            extents,
            spacing,
            origin: vec![0.0; m + 1],
            h_trunc: None,
            values: strip.values().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "n {}", self.dim())?;
        writeln!(out, "quantity {}", self.quantity)?;
        writeln!(
            out,
            "extents {}",
            self.extents.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        )?;
        writeln!(out, "spacing {}", join(&self.spacing))?;
        writeln!(out, "origin {}", join(&self.origin))?;
        match self.h_trunc {
            Some(h) => writeln!(out, "h_trunc {h}")?,
            None => writeln!(out, "h_trunc none")?,
        }
        writeln!(out, "values")?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of structured-grid file".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != MAGIC {
            return Err(Error::Parse("missing structured-grid header".into()));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = next()?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::Parse(format!("expected '{key}' line, found '{line}'")));
            }
            Ok(parts.map(str::to_owned).collect())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number '{s}': {e}")));
        let count = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("bad count '{s}': {e}")));
        let n = count(field("n")?.first().ok_or_else(|| Error::Parse("empty n".into()))?)?;
        let quantity = field("quantity")?.join(" ");
        let extents = field("extents")?.iter().map(|s| count(s)).collect::<Result<Vec<_>>>()?;
        let spacing = field("spacing")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let origin = field("origin")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let h = field("h_trunc")?;
        let h_trunc = match h.first().map(String::as_str) {
            Some("none") => None,
            Some(s) => Some(num(s)?),
            None => return Err(Error::Parse("empty h_trunc".into())),
        };
        if extents.len() != n || spacing.len() != n || origin.len() != n {
            return Err(Error::Parse(format!("header axes disagree with n = {n}")));
        }
        field("values")?;
        let total: usize = extents.iter().product();
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            values.push(num(next()?.trim())?);
        }
        Ok(Self {
            quantity,
            extents,
            spacing,
            origin,
            h_trunc,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

/// One row of a refinement table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub h_grid: f64,
    pub h_trunc: f64,
    pub error: f64,
    /// Order against the previous row; empty on the first.
    pub observed_order: Option<f64>,
}

pub fn write_convergence_csv<W: Write>(out: W, rows: &[ConvergenceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_convergence_csv<R: std::io::Read>(input: R) -> Result<Vec<ConvergenceRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialRow {
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

pub fn radial_rows(profile: &RadialProfile) -> Vec<RadialRow> {
    let exponent = -(profile.n as f64 - 2.0) / 2.0;
    profile
        .r
        .iter()
        .zip(&profile.v)
        .zip(profile.w())
        .map(|((&r, &v), w)| RadialRow {
            r,
            u: v.powf(exponent),
            v,
            w,
        })
        .collect()
}

pub fn write_radial_csv<W: Write>(out: W, profile: &RadialProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in radial_rows(profile) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainDescriptor;
    use crate::grid::{MaskedGrid, Quantity};
    use std::sync::Arc;

    #[test]
    fn field_round_trip_is_exact() {
        let dom = DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap();
        let g = Arc::new(MaskedGrid::build(&dom, 17, 0.125, true).unwrap());
        let f = ScalarField::from_fn(g, Quantity::V, |x, _| 1.0 - x.iter().map(|c| c * c).sum::<f64>() / 3.0);
        let file = StructuredGrid::from_field(&f);
        assert_eq!(file.extents, vec![17, 17, 17]);
        let mut buf = Vec::new();
        file.write(&mut buf).unwrap();
        let back = StructuredGrid::read(buf.as_slice()).unwrap();
        assert_eq!(back.quantity, "v");
        assert_eq!(back.h_trunc, Some(0.125));
        assert_eq!(back.values.len(), file.values.len());
        for (a, b) in back.values.iter().zip(&file.values) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let text = format!("{MAGIC}\nn 1\nquantity u\nextents 3\nspacing 1\norigin 0\nh_trunc none\nvalues\n1\n2\n");
        assert!(matches!(StructuredGrid::read(text.as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn convergence_table_round_trip() {
        let rows = vec![
            ConvergenceRow {
                resolution: 17,
                h_grid: 0.125,
                h_trunc: 0.2,
                error: 1.3e-2,
                observed_order: None,
            },
            ConvergenceRow {
                resolution: 33,
                h_grid: 0.0625,
                h_trunc: 0.2,
                error: 3.2e-3,
                observed_order: Some(2.02),
            },
        ];
        let mut buf = Vec::new();
        write_convergence_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("resolution,h_grid,h_trunc,error,observed_order\n"));
        assert_eq!(read_convergence_csv(buf.as_slice()).unwrap(), rows);
    }
}
