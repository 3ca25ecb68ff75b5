use std::str::FromStr;

use csv::WriterBuilder;
use serde::{Deserialize, Serialize};

use crate::model::{ComparisonTable, TableCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Markdown,
    Csv,
    Plain,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            "plain" | "text" | "txt" => Ok(TableFormat::Plain),
            other => Err(format!(
                "unknown table format `{other}` (expected markdown, csv or plain)"
            )),
        }
    }
}

/// Inserts `,` between groups of three digits of an integer string.
fn group_digits(digits: &str) -> String {
    let (sign, body) = match digits.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", digits),
    };
    let mut out = String::with_capacity(body.len() + body.len() / 3 + 1);
    for (i, c) in body.chars().enumerate() {
        if i > 0 && (body.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    format!("{sign}{out}")
}

fn format_cell(cell: TableCell, format: TableFormat) -> String {
    let raw = format == TableFormat::Csv;
    match cell {
        TableCell::Count(v) if raw => v.to_string(),
        TableCell::Count(v) => group_digits(&v.to_string()),
        TableCell::Quantity(v) if raw => v.to_string(),
        TableCell::Quantity(v) => group_digits(&format!("{v:.0}")),
        TableCell::Real(v) => format!("{v:.3}"),
        TableCell::NotAvailable => "n/a".to_string(),
    }
}

fn cells(table: &ComparisonTable, format: TableFormat) -> (Vec<String>, Vec<Vec<String>>) {
    let header = std::iter::once("Metric".to_string())
        .chain(table.columns.iter().cloned())
        .collect();
    let body = table
        .rows
        .iter()
        .map(|r| {
            std::iter::once(r.metric.label().to_string())
                .chain(r.cells.iter().map(|&c| format_cell(c, format)))
                .collect()
        })
        .collect();
    (header, body)
}

/// Renders a comparison table. Reals are printed with three decimals;
/// counters and byte totals get thousands separators except in CSV.
pub fn render_table(table: &ComparisonTable, format: TableFormat) -> String {
    let (header, body) = cells(table, format);
    match format {
        TableFormat::Csv => {
            let mut w = WriterBuilder::new().from_writer(Vec::new());
            for row in std::iter::once(&header).chain(&body) {
                w.write_record(row).expect("in-memory csv write");
            }
            String::from_utf8(w.into_inner().expect("in-memory csv flush"))
                .expect("csv output is utf-8")
        }
        TableFormat::Markdown => {
            let esc = |s: &str| s.replace('|', "\\|");
            let mut out = String::new();
            let line = |row: &[String]| {
                format!(
                    "| {} |\n",
                    row.iter().map(|c| esc(c)).collect::<Vec<_>>().join(" | ")
                )
            };
            out.push_str(&line(&header));
            out.push_str("| --- |");
            for _ in 1..header.len() {
                out.push_str(" ---: |");
            }
            out.push('\n');
            for row in &body {
                out.push_str(&line(row));
            }
            out
        }
        TableFormat::Plain => {
            let widths: Vec<usize> = (0..header.len())
                .map(|i| {
                    std::iter::once(&header)
                        .chain(&body)
                        .map(|r| r[i].chars().count())
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let mut out = String::new();
            for row in std::iter::once(&header).chain(&body) {
                let mut line = String::new();
                for (i, cell) in row.iter().enumerate() {
                    if i == 0 {
                        line.push_str(&format!("{cell:<w$}", w = widths[0]));
                    } else {
                        line.push_str(&format!("  {cell:>w$}", w = widths[i]));
                    }
                }
                out.push_str(line.trim_end());
                out.push('\n');
            }
            out
        }
    }
}
