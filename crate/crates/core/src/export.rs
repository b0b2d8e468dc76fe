//! CSV formatting shared by the curve exporters.

use crate::error::{Error, Result};

/// Integral values print as `k.0`; everything else in scientific notation
/// with 17 significant digits, which round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() && v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v:.16e}")
    }
}

/// A parsed CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let rows = lines
            .map(|l| l.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        if let Some(bad) = rows.iter().find(|r| r.len() != header.len()) {
            return Err(Error::InvalidParameter(format!(
                "CSV row has {} fields, header has {}",
                bad.len(),
                header.len()
            )));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of the named column.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let k = self
            .column(name)
            .ok_or_else(|| Error::InvalidParameter(format!("CSV has no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("column `{name}`: {e}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-7, 2f64.ln(), 1e300, 4.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(4.0), "4.0");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn parse_table() {
        let t = Table::parse("n,H_n\n0,1.5\n1,2.5\n").unwrap();
        assert_eq!(t.numbers("H_n").unwrap(), vec![1.5, 2.5]);
        assert!(t.numbers("x").is_err());
        assert!(Table::parse("a,b\n1\n").is_err());
    }
}
