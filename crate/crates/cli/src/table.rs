//! Table emission: CSV and JSON with a stable schema and full-precision
//! numeric formatting (17 significant digits) so output files diff cleanly.

use std::io::Write;

#[derive(Debug, Clone)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Float(v) if v.is_finite() => format_float(*v),
            Cell::Float(_) => "null".to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        }
    }
}

/// 17 significant digits; scientific notation keeps columns uniform.
fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.headers.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                writeln!(out, "[")?;
                for (i, row) in self.rows.iter().enumerate() {
                    let fields: Vec<String> = self
                        .headers
                        .iter()
                        .zip(row.iter())
                        .map(|(h, c)| format!("\"{h}\":{}", c.json()))
                        .collect();
                    let comma = if i + 1 < self.rows.len() { "," } else { "" };
                    writeln!(out, "  {{{}}}{comma}", fields.join(","))?;
                }
                writeln!(out, "]")?;
            }
        }
        Ok(())
    }
}
