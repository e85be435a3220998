//! Result tables (Markdown for people, JSON for machines) and SVG plots.
//!
//! Markdown rounds to two decimals; the JSON mirror keeps full precision.

mod plot;

pub use plot::plot_curves;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AlgorithmProperties, ScenarioParams, TaskSet};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub highlight: bool,
}

impl Cell {
    fn value(v: f64) -> Self {
        Self {
            value: Some(v),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    /// Header of the label column.
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.1}")
    }
}

fn escape_md(s: &str) -> String {
    s.replace('|', "\\|")
}

impl Table {
    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.title);
        out.push_str(&format!("| {} |", escape_md(&self.corner)));
        for c in &self.columns {
            out.push_str(&format!(" {} |", escape_md(c)));
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.columns.len()));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} |", escape_md(&row.label)));
            for cell in &row.cells {
                let mut text = cell.value.map(fmt2).unwrap_or_default();
                if cell.highlight && !text.is_empty() {
                    text = format!("**{text}**");
                }
                if let Some(r) = cell.rank {
                    text.push_str(&format!(" ({})", fmt_rank(r)));
                }
                out.push_str(&format!(" {text} |"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises") + "\n"
    }
}

/// One row per algorithm with gamma, h and lambda columns, in input order.
pub fn property_table(algorithms: &[AlgorithmProperties]) -> Result<Table> {
    if algorithms.is_empty() {
        return Err(Error::invalid("property table needs at least one algorithm"));
    }
    let mut seen = HashSet::new();
    for a in algorithms {
        if !seen.insert(a.name.as_str()) {
            return Err(Error::invalid(format!("duplicate algorithm `{}`", a.name)));
        }
    }
    Ok(Table {
        title: "Estimated algorithm properties".into(),
        corner: "Approach".into(),
        columns: vec!["γ".into(), "h".into(), "λ".into()],
        rows: algorithms
            .iter()
            .map(|a| Row {
                label: a.name.clone(),
                cells: vec![
                    Cell::value(a.transfer_efficiency),
                    Cell::value(a.experience_retention),
                    Cell::value(a.expertise_translation),
                ],
            })
            .collect(),
    })
}

/// Recovers algorithm properties from a property table's JSON mirror.
pub fn properties_from_table(table: &Table) -> Result<Vec<AlgorithmProperties>> {
    table
        .rows
        .iter()
        .map(|r| match r.cells.as_slice() {
            [Cell { value: Some(g), .. }, Cell { value: Some(h), .. }, Cell { value: Some(l), .. }] => {
                Ok(AlgorithmProperties::new(r.label.clone(), *g, *h, *l))
            }
            _ => Err(Error::Schema(format!("row `{}` is not a property row", r.label))),
        })
        .collect()
}

/// Transfer matrix labelled by task names; row `i` is the trained task. The
/// diagonal is highlighted.
pub fn transfer_table(tasks: &TaskSet, params: &ScenarioParams) -> Table {
    Table {
        title: "Estimated task transfer".into(),
        corner: "Task".into(),
        columns: tasks.names().to_vec(),
        rows: params
            .tasks
            .transfer
            .iter()
            .enumerate()
            .map(|(i, row)| Row {
                label: tasks.name(i).to_string(),
                cells: row
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| Cell {
                        highlight: i == j,
                        ..Cell::value(v)
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn difficulty_table(tasks: &TaskSet, params: &ScenarioParams) -> Table {
    Table {
        title: "Estimated task difficulty".into(),
        corner: "Task".into(),
        columns: tasks.names().to_vec(),
        rows: vec![Row {
            label: "Difficulty".into(),
            cells: params.tasks.difficulty.iter().map(|&d| Cell::value(d)).collect(),
        }],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Gamma,
    H,
    Lambda,
}

impl Property {
    pub fn of(self, a: &AlgorithmProperties) -> f64 {
        match self {
            Property::Gamma => a.transfer_efficiency,
            Property::H => a.experience_retention,
            Property::Lambda => a.expertise_translation,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Property::Gamma => "transfer efficiency (γ)",
            Property::H => "experience retention (h)",
            Property::Lambda => "expertise translation (λ)",
        }
    }
}

impl std::str::FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" | "γ" => Ok(Property::Gamma),
            "h" => Ok(Property::H),
            "lambda" | "λ" => Ok(Property::Lambda),
            other => Err(Error::invalid(format!("unknown property `{other}`"))),
        }
    }
}

/// Ranks in descending order (largest value gets rank 1), ties share the
/// average rank.
pub fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && values[order[end]] == values[order[k]] {
            end += 1;
        }
        // Positions k..end (0-based) share ranks k+1..=end.
        let avg = (k + 1 + end) as f64 / 2.0;
        for &idx in &order[k..end] {
            ranks[idx] = avg;
        }
        k = end;
    }
    ranks
}

/// Spearman correlation: Pearson correlation of the tie-averaged ranks.
/// `None` when fewer than two pairs or either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = descending_ranks(x);
    let ry = descending_ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub left: String,
    pub right: String,
    /// Number of algorithms present in both columns.
    pub shared: usize,
    pub spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub property: Property,
    pub table: Table,
    pub correlations: Vec<RankCorrelation>,
}

impl ComparisonTable {
    pub fn to_markdown(&self) -> String {
        let mut out = self.table.to_markdown();
        if !self.correlations.is_empty() {
            out.push_str("\nSpearman rank correlation:\n\n");
            for c in &self.correlations {
                let rho = c.spearman.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"));
                out.push_str(&format!(
                    "- {} vs {}: {rho} (n = {})\n",
                    c.left, c.right, c.shared
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serialises") + "\n"
    }
}

/// Compares one property across datasets. Rows are algorithms in order of
/// first appearance; an algorithm missing from a dataset gets a blank cell.
/// Each column carries descending ranks, and every column pair gets a
/// Spearman correlation over the algorithms they share.
pub fn comparison_table(datasets: &[(String, ScenarioParams)], property: Property) -> ComparisonTable {
    let mut names: Vec<String> = Vec::new();
    for (_, p) in datasets {
        for a in &p.algorithms {
            if !names.contains(&a.name) {
                names.push(a.name.clone());
            }
        }
    }
    let column: Vec<Vec<Option<f64>>> = datasets
        .iter()
        .map(|(_, p)| {
            names
                .iter()
                .map(|n| p.algorithms.iter().find(|a| &a.name == n).map(|a| property.of(a)))
                .collect()
        })
        .collect();
    let ranks: Vec<Vec<Option<f64>>> = column
        .iter()
        .map(|col| {
            let present: Vec<f64> = col.iter().flatten().copied().collect();
            let mut r = descending_ranks(&present).into_iter();
            col.iter().map(|v| v.and_then(|_| r.next())).collect()
        })
        .collect();
    let rows = names
        .iter()
        .enumerate()
        .map(|(k, name)| Row {
            label: name.clone(),
            cells: (0..datasets.len())
                .map(|c| Cell {
                    value: column[c][k],
                    rank: ranks[c][k],
                    highlight: false,
                })
                .collect(),
        })
        .collect();
    let mut correlations = Vec::new();
    for a in 0..datasets.len() {
        for b in a + 1..datasets.len() {
            let (x, y): (Vec<f64>, Vec<f64>) = column[a]
                .iter()
                .zip(&column[b])
                .filter_map(|(u, v)| Some(((*u)?, (*v)?)))
                .unzip();
            correlations.push(RankCorrelation {
                left: datasets[a].0.clone(),
                right: datasets[b].0.clone(),
                shared: x.len(),
                spearman: spearman(&x, &y),
            });
        }
    }
    ComparisonTable {
        property,
        table: Table {
            title: format!("Estimated {} across datasets", property.label()),
            corner: "Algorithm".into(),
            columns: datasets.iter().map(|(l, _)| l.clone()).collect(),
            rows,
        },
        correlations,
    }
}

/// Markdown report with every table for one fit.
pub fn full_report(tasks: &TaskSet, params: &ScenarioParams) -> Result<String> {
    let mut out = String::new();
    out.push_str(&property_table(&params.algorithms)?.to_markdown());
    out.push('\n');
    out.push_str(&transfer_table(tasks, params).to_markdown());
    out.push('\n');
    out.push_str(&difficulty_table(tasks, params).to_markdown());
    Ok(out)
}
