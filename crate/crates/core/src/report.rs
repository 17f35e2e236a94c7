//! Summary tables over mining reports: the best candidate per group and
//! pass rates per run.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::datamodel::TableId;
use crate::metrics::{render_metric, MetricSet};
use crate::mining::{MiningReport, PassSummary};

/// Placeholder for groups without a passing candidate.
pub const EMPTY_CELL: &str = "—";

pub const BEST_COLUMNS: [&str; 6] = ["accuracy", "sensitivity", "specificity", "ppv", "fp_rate", "f1"];

const TEXT_COLUMNS: [&str; 6] = ["acc", "sens", "spec", "ppv", "fpr", "f1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Experiment,
    Dataset,
}

impl GroupBy {
    fn key(self, id: &TableId) -> String {
        match self {
            GroupBy::Experiment => id.experiment_id.clone(),
            GroupBy::Dataset => id.dataset.to_string(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            GroupBy::Experiment => "experiment",
            GroupBy::Dataset => "dataset",
        }
    }
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "experiment" => Ok(GroupBy::Experiment),
            "dataset" => Ok(GroupBy::Dataset),
            other => Err(format!("unknown grouping {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Text,
    Csv,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format {other:?}")),
        }
    }
}

/// One row of a best-per-group table.
#[derive(Debug, Clone, PartialEq)]
pub struct BestRow {
    pub group: String,
    /// `None` when no candidate in the group passed the filter.
    pub best: Option<(TableId, MetricSet)>,
}

impl BestRow {
    pub fn cells(&self) -> Vec<String> {
        match &self.best {
            Some((_, m)) => m.columns().iter().map(|v| render_metric(*v)).collect(),
            None => vec![EMPTY_CELL.to_string(); 6],
        }
    }
}

impl fmt::Display for BestRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.group, self.cells().join(" "))
    }
}

/// Groups present among all candidates, including failed ones, in sorted
/// order, each with its top-ranked passing candidate.
pub fn best_rows(report: &MiningReport, group_by: GroupBy) -> Vec<BestRow> {
    let groups: BTreeSet<String> = report
        .results
        .iter()
        .map(|r| &r.table_id)
        .chain(report.failures.iter().map(|f| &f.table_id))
        .map(|id| group_by.key(id))
        .collect();
    groups
        .into_iter()
        .map(|group| {
            let best = report
                .ranked()
                .find(|r| group_by.key(&r.table_id) == group)
                .map(|r| (r.table_id.clone(), r.metrics));
            BestRow { group, best }
        })
        .collect()
}

pub fn summarize_best(report: &MiningReport, group_by: GroupBy, format: TableFormat) -> String {
    let rows = best_rows(report, group_by);
    let candidate = |r: &BestRow| r.best.as_ref().map_or(EMPTY_CELL.to_string(), |(id, _)| id.to_string());
    match format {
        TableFormat::Csv => {
            let mut header = vec![group_by.name(), "candidate"];
            header.extend(BEST_COLUMNS);
            write_csv(
                header.iter().map(|s| s.to_string()).collect(),
                rows.iter().map(|r| {
                    let mut line = vec![r.group.clone(), candidate(r)];
                    line.extend(r.cells());
                    line
                }),
            )
        }
        TableFormat::Text => {
            let gw = rows
                .iter()
                .map(|r| r.group.chars().count())
                .chain([group_by.name().len()])
                .max()
                .unwrap_or(0);
            let cw = rows
                .iter()
                .map(|r| candidate(r).chars().count())
                .chain(["candidate".len()])
                .max()
                .unwrap_or(0);
            let line = |g: &str, c: &str, cells: &[String]| {
                let cells: Vec<String> = cells.iter().map(|v| format!("{v:<5}")).collect();
                format!("{g:<gw$}  {c:<cw$}  {}", cells.join(" "))
                    .trim_end()
                    .to_string()
                    + "\n"
            };
            let header: Vec<String> = TEXT_COLUMNS.iter().map(|s| s.to_string()).collect();
            let mut out = line(group_by.name(), "candidate", &header);
            for r in &rows {
                out.push_str(&line(&r.group, &candidate(r), &r.cells()));
            }
            out
        }
    }
}

/// Label for a report in a pass-rate table: its experiment ids joined
/// with `+`, or the placeholder for an empty report.
pub fn report_label(report: &MiningReport) -> String {
    let ids: BTreeSet<&str> = report
        .results
        .iter()
        .map(|r| r.table_id.experiment_id.as_str())
        .chain(report.failures.iter().map(|f| f.table_id.experiment_id.as_str()))
        .collect();
    if ids.is_empty() {
        EMPTY_CELL.to_string()
    } else {
        ids.into_iter().collect::<Vec<_>>().join("+")
    }
}

pub fn pass_rate_table(reports: &[&MiningReport], format: TableFormat) -> String {
    let rows: Vec<(String, PassSummary)> = reports.iter().map(|r| (report_label(r), r.summary)).collect();
    render_pass_rates(&rows, format)
}

/// Pass-rate table from labelled summaries.
pub fn render_pass_rates(rows: &[(String, PassSummary)], format: TableFormat) -> String {
    let cells = |s: &PassSummary| [s.passed.to_string(), s.total.to_string(), s.percent()];
    match format {
        TableFormat::Csv => write_csv(
            ["report", "passed", "total", "rate"].map(String::from).to_vec(),
            rows.iter().map(|(label, s)| {
                let mut line = vec![label.clone()];
                line.extend(cells(s));
                line
            }),
        ),
        TableFormat::Text => {
            let lw = rows
                .iter()
                .map(|(l, _)| l.chars().count())
                .chain(["report".len()])
                .max()
                .unwrap_or(0);
            let mut out = format!("{:<lw$}  {:>6}  {:>6}  {:>6}\n", "report", "passed", "total", "rate");
            for (label, s) in rows {
                let [p, t, r] = cells(s);
                out.push_str(&format!("{label:<lw$}  {p:>6}  {t:>6}  {r:>6}\n"));
            }
            out
        }
    }
}

fn write_csv(header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}
