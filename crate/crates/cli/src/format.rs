//! CSV rendering.

use std::io::Write;

/// Shortest round-trip decimal for magnitudes in `[1e-4, 1e15)`;
/// scientific otherwise.
pub fn number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// Empty field for missing values.
pub fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

/// Comma-separated rows with a fixed header.
pub struct CsvWriter<'a> {
    inner: csv::Writer<&'a mut dyn Write>,
}

impl<'a> CsvWriter<'a> {
    pub fn new(out: &'a mut dyn Write, header: &[&str]) -> csv::Result<Self> {
        let mut inner = csv::WriterBuilder::new().from_writer(out);
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, fields: &[String]) -> csv::Result<()> {
        self.inner.write_record(fields)?;
        self.inner.flush()?;
        Ok(())
    }
}
