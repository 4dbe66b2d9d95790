//! Two- or three-column (x, y[, yerr]) CSV input.

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct XyData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub yerr: Option<Vec<f64>>,
}

/// Parses CSV text with one header line. Lines starting with '#' and blank
/// lines are skipped; errors report the 1-based line number.
pub fn parse_xy_csv(text: &str) -> Result<XyData> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hrow, header) = lines.next().ok_or(Error::Data {
        row: 1,
        message: "missing header line".into(),
    })?;
    let columns = header.split(',').count();
    if !(2..=3).contains(&columns) {
        return Err(Error::Data {
            row: hrow,
            message: format!("expected 2 or 3 columns (x, y[, yerr]), header has {columns}"),
        });
    }
    let mut data = XyData {
        x: Vec::new(),
        y: Vec::new(),
        yerr: (columns == 3).then(Vec::new),
    };
    for (row, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns {
            return Err(Error::Data {
                row,
                message: format!("expected {columns} fields, found {}", fields.len()),
            });
        }
        let mut vals = [0.0; 3];
        for (k, f) in fields.iter().enumerate() {
            vals[k] = f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Data {
                row,
                message: format!("'{f}' is not a finite number"),
            })?;
        }
        data.x.push(vals[0]);
        data.y.push(vals[1]);
        if let Some(e) = data.yerr.as_mut() {
            if !(vals[2] > 0.0) {
                return Err(Error::Data {
                    row,
                    message: "yerr must be positive".into(),
                });
            }
            e.push(vals[2]);
        }
    }
    Ok(data)
}

pub fn read_xy_csv(path: &Path) -> Result<XyData> {
    parse_xy_csv(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let d = parse_xy_csv("# pumping trace\nt_ns,counts\n0,1.0\n\n1.5,0.5\n").unwrap();
        assert_eq!(d.x, vec![0.0, 1.5]);
        assert_eq!(d.y, vec![1.0, 0.5]);
        assert!(d.yerr.is_none());
        let d = parse_xy_csv("x,y,e\n1,2,0.1\n").unwrap();
        assert_eq!(d.yerr, Some(vec![0.1]));
    }

    #[test]
    fn reports_row_numbers() {
        match parse_xy_csv("x,y\n1,2\n3,abc\n") {
            Err(Error::Data { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        match parse_xy_csv("x,y\n1,2,3\n") {
            Err(Error::Data { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_xy_csv("").is_err());
    }
}
