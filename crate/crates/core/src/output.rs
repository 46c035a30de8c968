//! Deterministic CSV output.

use std::fmt::Write as _;

/// Formats a double with 17 significant digits (round-trips exactly).
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        // Keep `-0.0` and `0.0` byte-identical.
        return "0.0000000000000000e0".to_owned();
    }
    format!("{v:.16e}")
}

/// In-memory CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn columns(&self) -> usize {
        self.header.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row of numbers.
    ///
    /// # Panics
    /// If the row width differs from the header.
    pub fn push(&mut self, row: &[f64]) {
        self.push_cells(row.iter().map(|&v| fmt_num(v)).collect());
    }

    /// Appends a row of preformatted cells.
    pub fn push_cells(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "csv row width");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

impl crate::evo::Trajectory {
    /// CSV with columns `t, x_1..x_m`.
    pub fn to_csv(&self) -> String {
        let m = self.states.first().map_or(0, Vec::len);
        let header = std::iter::once("t".to_owned()).chain((1..=m).map(|i| format!("x_{i}")));
        let mut table = CsvTable::new(header);
        for (t, state) in self.times().zip(&self.states) {
            let mut row = Vec::with_capacity(m + 1);
            row.push(t);
            row.extend_from_slice(state);
            table.push(&row);
        }
        table.render()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(-0.0), fmt_num(0.0));
        assert_eq!(fmt_num(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn table_renders() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push(&[1.0, 2.0]);
        t.push_cells(vec!["x".into(), "y".into()]);
        assert_eq!(t.render(), "a,b\n1.0000000000000000e0,2.0000000000000000e0\nx,y\n");
    }

    #[test]
    fn trajectory_csv() {
        let t = crate::evo::Trajectory { dt: 0.5, states: vec![vec![1.0, 0.0], vec![0.5, 0.5]] };
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,x_1,x_2");
        assert!(lines[2].starts_with("5.0000000000000000e-1,"));
    }
}
