//! Tabular rendering of evaluation cells.
//!
//! The markdown layout has two blocks, positive then negative, with one row
//! per bias and one column per subgroup. Within each block every column's
//! maximum is set in bold; tied maxima are all marked.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{EvalCell, EvalError, Label, Metric};
use crate::registry::Bias;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

/// Labels shown in the markdown table, one block each.
pub const BLOCKS: [Label; 2] = [Label::Positive, Label::Negative];

/// Row and column order plus the proportion lookup for a complete grid.
pub struct Grid {
    pub biases: Vec<Bias>,
    pub subgroups: Vec<String>,
    values: HashMap<(Bias, String, Label), f64>,
}

impl Grid {
    pub fn from_cells(cells: &[EvalCell]) -> Result<Self, EvalError> {
        let mut biases = Vec::new();
        let mut subgroups: Vec<String> = Vec::new();
        let mut metrics: HashMap<&str, Metric> = HashMap::new();
        let mut values = HashMap::new();
        for cell in cells {
            if !biases.contains(&cell.bias) {
                biases.push(cell.bias);
            }
            if !subgroups.contains(&cell.subgroup) {
                subgroups.push(cell.subgroup.clone());
            }
            if *metrics.entry(&cell.subgroup).or_insert(cell.metric) != cell.metric {
                return Err(EvalError::MixedMetrics(cell.subgroup.clone()));
            }
            values.insert((cell.bias, cell.subgroup.clone(), cell.label), cell.proportion);
        }

        let mut missing = Vec::new();
        for label in BLOCKS {
            for &bias in &biases {
                for subgroup in &subgroups {
                    if !values.contains_key(&(bias, subgroup.clone(), label)) {
                        missing.push(format!("{bias}/{subgroup}/{label}"));
                    }
                }
            }
        }
        if !missing.is_empty() {
            return Err(EvalError::IncompleteGrid(missing));
        }
        Ok(Grid {
            biases,
            subgroups,
            values,
        })
    }

    pub fn value(&self, bias: Bias, subgroup: &str, label: Label) -> f64 {
        self.values[&(bias, subgroup.to_string(), label)]
    }

    /// Whether a cell holds its column's maximum within the label's block.
    pub fn is_column_max(&self, bias: Bias, subgroup: &str, label: Label) -> bool {
        let v = self.value(bias, subgroup, label);
        self.biases.iter().all(|&b| self.value(b, subgroup, label) <= v)
    }
}

pub fn render_report(cells: &[EvalCell], format: ReportFormat) -> Result<String, EvalError> {
    match format {
        ReportFormat::Csv => Ok(render_csv(cells)),
        ReportFormat::Markdown => render_markdown(cells),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(cells: &[EvalCell]) -> String {
    let mut out = String::from("bias,subgroup,metric,label,proportion,n\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.bias,
            csv_field(&c.subgroup),
            c.metric,
            c.label,
            c.proportion,
            c.n
        );
    }
    out
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn render_markdown(cells: &[EvalCell]) -> Result<String, EvalError> {
    let grid = Grid::from_cells(cells)?;
    let mut out = String::from("| Sentiment | Bias |");
    for s in &grid.subgroups {
        let _ = write!(out, " {} |", md_escape(s));
    }
    out.push_str("\n|---|---|");
    for _ in &grid.subgroups {
        out.push_str("---:|");
    }
    out.push('\n');

    for label in BLOCKS {
        for (row, &bias) in grid.biases.iter().enumerate() {
            let block = if row == 0 { label.to_string() } else { String::new() };
            let _ = write!(out, "| {block} | {} |", bias.display_name());
            for subgroup in &grid.subgroups {
                let v = format!("{:.3}", grid.value(bias, subgroup, label));
                if grid.is_column_max(bias, subgroup, label) {
                    let _ = write!(out, " **{v}** |");
                } else {
                    let _ = write!(out, " {v} |");
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}
