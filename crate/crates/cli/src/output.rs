//! CSV tables with locale-independent, round-trippable number formatting.

use std::io;

/// 17 significant digits in scientific notation; parses back to the same bits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, values: impl IntoIterator<Item = f64>) {
        self.rows.push(values.into_iter().map(num).collect());
    }

    pub fn push(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }

    /// Parses CSV produced by [`Table::to_csv`].
    pub fn from_csv(bytes: &[u8]) -> io::Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
        let header = r.headers().map_err(io::Error::other)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(io::Error::other)?.iter().map(String::from).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -0.0, 1.0, 0.1, -1.0 / 3.0, 1e-300, 5e-324, f64::MAX, 123456789.0123456789] {
            let back: f64 = num(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(["t", "x"]);
        t.push_numbers([0.0, 1.0 / 7.0]);
        t.push_numbers([0.1, -2e-17]);
        let back = Table::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("x").unwrap(), vec![1.0 / 7.0, -2e-17]);
        assert!(back.column("y").is_none());
    }
}
