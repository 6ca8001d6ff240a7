//! Rendering of single results and small tables as text, CSV or JSON.

use serde_json::{Map, Value};

use crate::Format;

#[derive(Debug, Clone)]
pub enum Field {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Num(x) => format!("{x:.16e}"),
            Field::Int(n) => n.to_string(),
            Field::Text(s) => s.clone(),
        }
    }

    fn text(&self) -> String {
        match self {
            Field::Num(x) if *x == 0.0 || (1e-3..1e6).contains(&x.abs()) => format!("{x:.10}"),
            Field::Num(x) => format!("{x:.6e}"),
            Field::Int(n) => n.to_string(),
            Field::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Field::Int(n) => Value::from(*n),
            Field::Text(s) => Value::from(s.as_str()),
        }
    }
}

fn csv_lines(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Ordered key/value result.
#[derive(Debug, Default)]
pub struct Report {
    fields: Vec<(String, Field)>,
}

impl Report {
    pub fn push(&mut self, key: &str, value: Field) {
        self.fields.push((key.to_string(), value));
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                self.fields
                    .iter()
                    .map(|(k, v)| format!("{k:<width$}  {}\n", v.text()))
                    .collect()
            }
            Format::Csv => csv_lines([
                self.fields.iter().map(|(k, _)| k.clone()).collect(),
                self.fields.iter().map(|(_, v)| v.csv()).collect(),
            ]),
            Format::Json => {
                let map: Map<String, Value> = self
                    .fields
                    .iter()
                    .map(|(k, v)| (k.clone(), v.json()))
                    .collect();
                serde_json::to_string_pretty(&map).expect("json") + "\n"
            }
        }
    }
}

/// Column-oriented result.
#[derive(Debug)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, row: Vec<Field>) {
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv | Format::Text => csv_lines(
                std::iter::once(self.header.clone())
                    .chain(self.rows.iter().map(|r| r.iter().map(Field::csv).collect())),
            ),
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        Value::Object(
                            self.header
                                .iter()
                                .cloned()
                                .zip(r.iter().map(Field::json))
                                .collect(),
                        )
                    })
                    .collect();
                serde_json::to_string_pretty(&rows).expect("json") + "\n"
            }
        }
    }
}
