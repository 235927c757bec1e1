//! Table writers. Numbers use Rust's shortest round-trip formatting, so
//! identical values always produce identical bytes.

use std::fs::File;
use std::path::Path;

use crate::Failure;

/// Placeholder for values that do not apply.
pub const NA: &str = "NA";

pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| NA.into())
}

pub struct Table {
    writer: csv::Writer<File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, Failure> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), Failure>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(1e-7), "1e-7");
        assert_eq!(num(0.001), "0.001");
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(opt(None), "NA");
    }
}
