//! Plain-text artifacts: nodal fields as CSV grids, PGM rasters and tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{ensure, Error, Result};

/// One grid row per line, `side` comma-separated values, first line is the
/// bottom row `j = 1`.
pub fn format_grid_csv(side: usize, values: &[f64]) -> Result<String> {
    ensure(values.len() == side * side, || {
        format!("{} values do not form a {side}x{side} grid", values.len())
    })?;
    let mut out = String::with_capacity(values.len() * 24);
    for row in values.chunks(side) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_grid_csv(path: &Path, side: usize, values: &[f64]) -> Result<()> {
    fs::write(path, format_grid_csv(side, values)?)?;
    Ok(())
}

/// Reads a square grid written by [`write_grid_csv`] (any float syntax).
pub fn parse_grid_csv(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut side = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {t:?}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        match side {
            None => side = Some(row.len()),
            Some(s) if s != row.len() => {
                return Err(Error::Parse(format!("line {}: {} columns, expected {s}", lineno + 1, row.len())))
            }
            _ => {}
        }
        values.extend(row);
    }
    let side = side.ok_or_else(|| Error::Parse("empty grid file".into()))?;
    if values.len() != side * side {
        return Err(Error::Parse(format!("{} values do not form a {side}x{side} grid", values.len())));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("non-finite grid value {v}")));
    }
    Ok((side, values))
}

pub fn read_grid_csv(path: &Path) -> Result<(usize, Vec<f64>)> {
    parse_grid_csv(&fs::read_to_string(path)?)
}

/// Greyscale raster (plain PGM, 8 bit) with the top image row at `j = side`.
/// Values are mapped linearly, or through `log10 |v|` when `log` is set,
/// onto `0..=255` between their minimum and maximum.
pub fn format_pgm(side: usize, values: &[f64], log: bool) -> Result<String> {
    ensure(values.len() == side * side, || {
        format!("{} values do not form a {side}x{side} raster", values.len())
    })?;
    let mapped: Vec<f64> = if log {
        let floor = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor } else { 1.0 };
        values.iter().map(|v| v.abs().max(floor).log10()).collect()
    } else {
        values.to_vec()
    };
    let lo = mapped.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mapped.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P2\n{side} {side}\n255\n");
    for row in mapped.chunks(side).rev() {
        let line: Vec<String> = row.iter().map(|v| (((v - lo) / span) * 255.0).round().to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, side: usize, values: &[f64], log: bool) -> Result<()> {
    fs::write(path, format_pgm(side, values, log)?)?;
    Ok(())
}

/// CSV table whose last column repeats `tag` on every row.
pub fn format_table_csv(columns: &[String], rows: &[Vec<f64>], tag: &str) -> Result<String> {
    let mut out = columns.join(",");
    out.push_str(",config_hash\n");
    for (i, row) in rows.iter().enumerate() {
        ensure(row.len() == columns.len(), || {
            format!("table row {i} has {} entries for {} columns", row.len(), columns.len())
        })?;
        for v in row {
            write!(out, "{v},").expect("writing to a string");
        }
        out.push_str(tag);
        out.push('\n');
    }
    Ok(out)
}

/// Inserts the line `comment` after the first `after` lines of `text`.
/// Grid CSV, PGM and Matrix Market readers all skip comment lines, so this
/// is how artifacts carry their config hash.
pub fn insert_comment(text: &str, after: usize, comment: &str) -> String {
    let mut out = String::with_capacity(text.len() + comment.len() + 1);
    let mut rest = text;
    for _ in 0..after {
        match rest.find('\n') {
            Some(p) => {
                out.push_str(&rest[..=p]);
                rest = &rest[p + 1..];
            }
            None => {
                out.push_str(rest);
                out.push('\n');
                rest = "";
            }
        }
    }
    out.push_str(comment);
    out.push('\n');
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip() {
        let v: Vec<f64> = (0..9).map(|i| (i as f64).sin() * 1e-7).collect();
        let (side, back) = parse_grid_csv(&format_grid_csv(3, &v).unwrap()).unwrap();
        assert_eq!(side, 3);
        assert_eq!(back, v);
    }

    #[test]
    fn grid_errors() {
        assert!(format_grid_csv(3, &[1.0; 8]).is_err());
        assert!(parse_grid_csv("").is_err());
        assert!(parse_grid_csv("1,2\n3\n").is_err());
        assert!(parse_grid_csv("1,2\n3,x\n").is_err());
        assert!(parse_grid_csv("1,2,3\n4,5,6\n").is_err());
        assert!(parse_grid_csv("1,NaN\n3,4\n").is_err());
    }

    #[test]
    fn pgm_layout() {
        let s = format_pgm(2, &[0.0, 1.0, 2.0, 3.0], false).unwrap();
        assert_eq!(s, "P2\n2 2\n255\n170 255\n0 85\n");
        let l = format_pgm(2, &[1.0, 10.0, 100.0, 0.0], true).unwrap();
        assert!(l.ends_with("255 0\n0 128\n"), "{l}");
        let flat = format_pgm(1, &[5.0], false).unwrap();
        assert!(flat.ends_with("0\n"));
    }

    #[test]
    fn table_tagging() {
        let cols = vec!["k".to_string(), "err".to_string()];
        let t = format_table_csv(&cols, &[vec![1.0, 0.5], vec![2.0, 0.25]], "abc").unwrap();
        assert_eq!(t, "k,err,config_hash\n1,0.5,abc\n2,0.25,abc\n");
        assert!(format_table_csv(&cols, &[vec![1.0]], "abc").is_err());
    }

    #[test]
    fn comments_survive_parsing() {
        let csv = insert_comment(&format_grid_csv(2, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0, "# config_hash ab");
        assert!(csv.starts_with("# config_hash ab\n1e0"));
        assert_eq!(parse_grid_csv(&csv).unwrap().1, vec![1.0, 2.0, 3.0, 4.0]);
        let pgm = insert_comment(&format_pgm(1, &[0.0], false).unwrap(), 1, "# x");
        assert_eq!(pgm, "P2\n# x\n1 1\n255\n0\n");
        assert_eq!(insert_comment("a", 1, "b"), "a\nb\n");
    }
}
