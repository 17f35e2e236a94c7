//! Reading and writing seven-column score tables.
//!
//! ```text
//! PatientID,Atelectasis,Effusion,Mass,NoFinding,Nodule,Diagnosis
//! ```
//!
//! On input the Diagnosis column holds the raw source value: an LIDC level
//! `0..=3` (0 is Unknown and the row is dropped) or a JSRT `Benign` /
//! `Malignant` string. JSRT files may also carry the harmonized codes `1` /
//! `2`. Written files always carry the harmonized codes and start with a
//! `# harmonized=true` comment. Combined tables additionally record the
//! per-row dataset as a run-length comment such as
//! `# provenance=LIDC*96,JSRT*154`. Any other `#` line is ignored.
//!
//! Issue row numbers count data rows from 1; row 0 is the header.

use std::fmt;

use crate::datamodel::{
    harmonize_jsrt, harmonize_lidc, BinaryLabel, DataError, DatasetTag, Feature, FeatureVector, LabeledRecord,
    Provenance, ScoreTable,
};

pub const HEADER: [&str; 7] = [
    "PatientID",
    "Atelectasis",
    "Effusion",
    "Mass",
    "NoFinding",
    "Nodule",
    "Diagnosis",
];

const HARMONIZED_DIRECTIVE: &str = "harmonized=true";
const PROVENANCE_DIRECTIVE: &str = "provenance=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueKind {
    SchemaError,
    RangeError,
    IllegalDiagnosis,
    ParseError,
    DuplicateId,
    /// An LIDC row with the Unknown diagnosis was dropped. Informational.
    UnknownDiagnosis,
}

impl IssueKind {
    /// Issues that drop nothing or only drop by design never fail a strict
    /// parse on their own.
    pub fn is_informational(self) -> bool {
        matches!(self, IssueKind::UnknownDiagnosis)
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            IssueKind::SchemaError => "SchemaError",
            IssueKind::RangeError => "RangeError",
            IssueKind::IllegalDiagnosis => "IllegalDiagnosis",
            IssueKind::ParseError => "ParseError",
            IssueKind::DuplicateId => "DuplicateId",
            IssueKind::UnknownDiagnosis => "UnknownDiagnosis",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestIssue {
    pub row_number: usize,
    pub kind: IssueKind,
    pub detail: String,
}

impl fmt::Display for IngestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "row {}: {}: {}", self.row_number, self.kind, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("bad header: {0}")]
    Schema(IngestIssue),
    #[error("strict parse failed at {0}")]
    Strict(IngestIssue),
}

impl IngestError {
    pub fn issue(&self) -> &IngestIssue {
        match self {
            IngestError::Schema(issue) | IngestError::Strict(issue) => issue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Stop at the first non-informational issue.
    Strict,
    /// Skip bad rows and report every issue. Duplicate ids are kept.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub table: ScoreTable,
    pub issues: Vec<IngestIssue>,
}

impl ParsedTable {
    /// Issues other than informational ones.
    pub fn problems(&self) -> impl Iterator<Item = &IngestIssue> {
        self.issues.iter().filter(|i| !i.kind.is_informational())
    }
}

struct RowError(IssueKind, String);

impl From<DataError> for RowError {
    fn from(e: DataError) -> Self {
        let kind = match e {
            DataError::IllegalDiagnosis { .. } => IssueKind::IllegalDiagnosis,
            DataError::ScoreOutOfRange { .. } => IssueKind::RangeError,
            DataError::EmptyPatientId => IssueKind::ParseError,
            DataError::IncompatibleTables { .. } => IssueKind::SchemaError,
        };
        RowError(kind, e.to_string())
    }
}

/// Parses a score table. Rows are harmonized according to `source`; for
/// `Combined` input each row's dataset comes from the provenance comment
/// when present, otherwise string diagnoses are read as JSRT and numeric
/// ones as LIDC.
pub fn parse_score_table(
    bytes: &[u8],
    source: DatasetTag,
    experiment_id: &str,
    epoch: u32,
    mode: ParseMode,
) -> Result<ParsedTable, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        IngestError::Schema(IngestIssue {
            row_number: 0,
            kind: IssueKind::ParseError,
            detail: format!("input is not UTF-8: {e}"),
        })
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let provenance_plan = leading_provenance(text);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(|e| {
        IngestError::Schema(IngestIssue {
            row_number: 0,
            kind: IssueKind::SchemaError,
            detail: e.to_string(),
        })
    })?;
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != HEADER {
        return Err(IngestError::Schema(IngestIssue {
            row_number: 0,
            kind: IssueKind::SchemaError,
            detail: format!("expected columns {}, found {}", HEADER.join(","), names.join(",")),
        }));
    }

    let mut table = ScoreTable::new(experiment_id, epoch, source);
    let mut issues = Vec::new();
    let mut seen = std::collections::HashSet::new();

    for (index, row) in reader.records().enumerate() {
        let row_number = index + 1;
        let outcome = match row {
            Ok(row) => {
                let planned = provenance_plan.as_ref().and_then(|p| p.get(index).copied());
                parse_row(&row, source, planned)
            }
            Err(e) => Err(RowError(IssueKind::ParseError, e.to_string())),
        };
        let issue = match outcome {
            Ok(Some(record)) => {
                if !seen.insert(record.patient_id().to_string()) {
                    let issue = IngestIssue {
                        row_number,
                        kind: IssueKind::DuplicateId,
                        detail: format!("patient id {:?} already seen", record.patient_id()),
                    };
                    if mode == ParseMode::Strict {
                        return Err(IngestError::Strict(issue));
                    }
                    issues.push(issue);
                }
                table.records.push(record);
                continue;
            }
            Ok(None) => IngestIssue {
                row_number,
                kind: IssueKind::UnknownDiagnosis,
                detail: "LIDC diagnosis Unknown, row excluded".to_string(),
            },
            Err(RowError(kind, detail)) => IngestIssue {
                row_number,
                kind,
                detail,
            },
        };
        if mode == ParseMode::Strict && !issue.kind.is_informational() {
            return Err(IngestError::Strict(issue));
        }
        issues.push(issue);
    }

    Ok(ParsedTable { table, issues })
}

/// Reads `# provenance=` from the comment block before the header.
fn leading_provenance(text: &str) -> Option<Vec<Provenance>> {
    for line in text.lines() {
        let Some(comment) = line.trim_start().strip_prefix('#') else {
            break;
        };
        if let Some(directive) = comment.trim().strip_prefix(PROVENANCE_DIRECTIVE) {
            return decode_provenance(directive.trim());
        }
    }
    None
}

fn decode_provenance(directive: &str) -> Option<Vec<Provenance>> {
    let mut out = Vec::new();
    if directive.is_empty() {
        return Some(out);
    }
    for run in directive.split(',') {
        let (name, count) = run.split_once('*')?;
        let provenance = match name.trim() {
            "LIDC" => Provenance::Lidc,
            "JSRT" => Provenance::Jsrt,
            _ => return None,
        };
        let count: usize = count.trim().parse().ok()?;
        out.extend(std::iter::repeat_n(provenance, count));
    }
    Some(out)
}

fn encode_provenance(records: &[LabeledRecord]) -> String {
    let mut runs: Vec<(Provenance, usize)> = Vec::new();
    for r in records {
        match runs.last_mut() {
            Some((p, n)) if *p == r.provenance => *n += 1,
            _ => runs.push((r.provenance, 1)),
        }
    }
    runs.iter()
        .map(|(p, n)| format!("{p}*{n}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_row(
    row: &csv::StringRecord,
    source: DatasetTag,
    planned: Option<Provenance>,
) -> Result<Option<LabeledRecord>, RowError> {
    if row.len() != HEADER.len() {
        return Err(RowError(
            IssueKind::SchemaError,
            format!("expected {} fields, found {}", HEADER.len(), row.len()),
        ));
    }
    let patient_id = &row[0];
    if patient_id.is_empty() {
        return Err(RowError(IssueKind::ParseError, "empty PatientID".to_string()));
    }

    let mut scores = [0.0f64; Feature::COUNT];
    for (slot, feature) in scores.iter_mut().zip(Feature::ALL) {
        let raw = row[feature.index() + 1].trim();
        *slot = raw.parse::<f64>().map_err(|_| {
            RowError(
                IssueKind::ParseError,
                format!("{feature} score {raw:?} is not a number"),
            )
        })?;
    }
    let features = FeatureVector::new(scores)?;

    let diagnosis = row[6].trim();
    let numeric = diagnosis.parse::<i64>().ok();
    let provenance = match source {
        DatasetTag::Lidc => Provenance::Lidc,
        DatasetTag::Jsrt => Provenance::Jsrt,
        DatasetTag::Combined => planned.unwrap_or(if numeric.is_some() {
            Provenance::Lidc
        } else {
            Provenance::Jsrt
        }),
    };
    let label = match (provenance, numeric) {
        (Provenance::Lidc, Some(code)) => match harmonize_lidc(code)? {
            Some(label) => label,
            None => return Ok(None),
        },
        (Provenance::Lidc, None) => {
            return Err(RowError(
                IssueKind::IllegalDiagnosis,
                format!("LIDC diagnosis {diagnosis:?} is not a level 0-3"),
            ))
        }
        (Provenance::Jsrt, Some(1)) => BinaryLabel::Benign,
        (Provenance::Jsrt, Some(2)) => BinaryLabel::Malignant,
        (Provenance::Jsrt, _) => harmonize_jsrt(diagnosis)?,
    };
    Ok(Some(LabeledRecord::new(patient_id, features, label, provenance)?))
}

fn needs_quotes(field: &str) -> bool {
    field.starts_with('#') || field.contains([',', '"', '\n', '\r'])
}

fn write_field(out: &mut String, field: &str) {
    if needs_quotes(field) {
        out.push('"');
        out.push_str(&field.replace('"', "\"\""));
        out.push('"');
    } else {
        out.push_str(field);
    }
}

/// Shortest round-trip decimal; exponent form for tiny non-zero values.
fn format_score(score: f64) -> String {
    if score != 0.0 && score.abs() < 1e-6 {
        format!("{score:e}")
    } else {
        score.to_string()
    }
}

/// Writes a harmonized score table with LF line endings. Scores use the
/// shortest decimal that parses back to the same `f64`.
pub fn write_score_table(table: &ScoreTable) -> String {
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(HARMONIZED_DIRECTIVE);
    out.push('\n');
    if table.dataset_tag == DatasetTag::Combined {
        out.push_str("# ");
        out.push_str(PROVENANCE_DIRECTIVE);
        out.push_str(&encode_provenance(&table.records));
        out.push('\n');
    }
    out.push_str(&HEADER.join(","));
    out.push('\n');
    for record in &table.records {
        write_field(&mut out, record.patient_id());
        for &score in record.features.as_array() {
            out.push(',');
            out.push_str(&format_score(score));
        }
        out.push(',');
        out.push_str(&record.label.code().to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER_LINE: &str = "PatientID,Atelectasis,Effusion,Mass,NoFinding,Nodule,Diagnosis\n";

    fn lidc(text: &str, mode: ParseMode) -> Result<ParsedTable, IngestError> {
        parse_score_table(text.as_bytes(), DatasetTag::Lidc, "A", 1, mode)
    }

    #[test]
    fn direct_field_mapping() {
        let parsed = lidc(
            &format!("{HEADER_LINE}P001,0.12,0.55,0.80,0.05,0.33,2\n"),
            ParseMode::Strict,
        )
        .unwrap();
        assert!(parsed.issues.is_empty());
        let r = &parsed.table.records[0];
        assert_eq!(r.patient_id(), "P001");
        assert_eq!(r.features.mass(), 0.80);
        assert_eq!(r.features.atelectasis(), 0.12);
        assert_eq!(r.label, BinaryLabel::Malignant);
        assert_eq!(r.provenance, Provenance::Lidc);
    }

    #[test]
    fn out_of_range_score_reports_row() {
        let text = format!("{HEADER_LINE}P001,0.12,0.55,0.80,0.05,0.33,2\nP002,0.10,0.20,1.20,0.05,0.33,1\n");
        let parsed = lidc(&text, ParseMode::Lenient).unwrap();
        assert_eq!(parsed.table.len(), 1);
        assert_eq!(parsed.issues.len(), 1);
        assert_eq!(parsed.issues[0].row_number, 2);
        assert_eq!(parsed.issues[0].kind, IssueKind::RangeError);

        let err = lidc(&text, ParseMode::Strict).unwrap_err();
        assert_eq!(err.issue().row_number, 2);
        assert_eq!(err.issue().kind, IssueKind::RangeError);
    }

    #[test]
    fn wrong_header_order_is_fatal() {
        let text = "PatientID,Mass,Effusion,Atelectasis,NoFinding,Nodule,Diagnosis\nP1,0.1,0.1,0.1,0.1,0.1,1\n";
        for mode in [ParseMode::Strict, ParseMode::Lenient] {
            let err = lidc(text, mode).unwrap_err();
            assert!(matches!(err, IngestError::Schema(_)));
            assert_eq!(err.issue().row_number, 0);
            assert_eq!(err.issue().kind, IssueKind::SchemaError);
        }
    }

    #[test]
    fn ninety_six_rows() {
        let mut text = HEADER_LINE.to_string();
        for i in 0..96 {
            let code = if i < 31 {
                1
            } else if i < 48 {
                2
            } else {
                3
            };
            text.push_str(&format!("LIDC-{i:04},0.1,0.2,0.3,0.4,0.5,{code}\n"));
        }
        let parsed = lidc(&text, ParseMode::Strict).unwrap();
        assert_eq!(parsed.table.len(), 96);
        assert_eq!(parsed.table.count(BinaryLabel::Benign), 31);
        assert_eq!(parsed.table.count(BinaryLabel::Malignant), 65);
    }

    #[test]
    fn unknown_rows_dropped_but_reported() {
        let text = format!("{HEADER_LINE}P1,0.1,0.1,0.1,0.1,0.1,0\nP2,0.1,0.1,0.1,0.1,0.1,1\n");
        let parsed = lidc(&text, ParseMode::Strict).unwrap();
        assert_eq!(parsed.table.len(), 1);
        assert_eq!(parsed.issues[0].kind, IssueKind::UnknownDiagnosis);
        assert_eq!(parsed.problems().count(), 0);
    }

    #[test]
    fn every_issue_kind_in_lenient_mode() {
        let text = format!(
            "{HEADER_LINE}P1,abc,0.1,0.1,0.1,0.1,1\nP2,0.1,0.1,0.1,0.1,0.1,9\nP3,0.1,0.1\nP4,0.1,0.1,0.1,0.1,0.1,2\nP4,0.2,0.2,0.2,0.2,0.2,1\nP5,0.1,0.1,0.1,NaN,0.1,1\n"
        );
        let parsed = lidc(&text, ParseMode::Lenient).unwrap();
        let kinds: Vec<_> = parsed.issues.iter().map(|i| (i.row_number, i.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (1, IssueKind::ParseError),
                (2, IssueKind::IllegalDiagnosis),
                (3, IssueKind::SchemaError),
                (5, IssueKind::DuplicateId),
                (6, IssueKind::RangeError),
            ]
        );
        // the duplicate is a warning; both P4 rows are kept
        assert_eq!(parsed.table.len(), 2);
    }

    #[test]
    fn strict_duplicate_fails() {
        let text = format!("{HEADER_LINE}P4,0.1,0.1,0.1,0.1,0.1,2\nP4,0.2,0.2,0.2,0.2,0.2,1\n");
        let err = lidc(&text, ParseMode::Strict).unwrap_err();
        assert_eq!(err.issue().kind, IssueKind::DuplicateId);
    }

    #[test]
    fn jsrt_strings_and_codes() {
        let text = format!("{HEADER_LINE}J1,0.1,0.1,0.1,0.1,0.1,Malignant\nJ2,0.1,0.1,0.1,0.1,0.1, benign \nJ3,0.1,0.1,0.1,0.1,0.1,2\nJ4,0.1,0.1,0.1,0.1,0.1,nodule\n");
        let parsed = parse_score_table(text.as_bytes(), DatasetTag::Jsrt, "A", 1, ParseMode::Lenient).unwrap();
        let labels: Vec<_> = parsed.table.records.iter().map(|r| r.label).collect();
        assert_eq!(
            labels,
            [BinaryLabel::Malignant, BinaryLabel::Benign, BinaryLabel::Malignant]
        );
        assert_eq!(parsed.issues[0].kind, IssueKind::IllegalDiagnosis);
        assert!(parsed.table.records.iter().all(|r| r.provenance == Provenance::Jsrt));
    }

    #[test]
    fn crlf_comments_quotes_and_bom() {
        let text = "\u{feff}# exported by scorer\r\nPatientID,Atelectasis,Effusion,Mass,NoFinding,Nodule,Diagnosis\r\n\"P,1\",0.1,0.1,0.1,0.1,0.1,1\r\n# trailing note\r\n";
        let parsed = lidc(text, ParseMode::Strict).unwrap();
        assert_eq!(parsed.table.len(), 1);
        assert_eq!(parsed.table.records[0].patient_id(), "P,1");
    }

    #[test]
    fn combined_without_provenance_guesses_from_diagnosis() {
        let text = format!("{HEADER_LINE}L1,0.1,0.1,0.1,0.1,0.1,3\nJ1,0.1,0.1,0.1,0.1,0.1,Benign\n");
        let parsed = parse_score_table(text.as_bytes(), DatasetTag::Combined, "A", 1, ParseMode::Strict).unwrap();
        let prov: Vec<_> = parsed.table.records.iter().map(|r| r.provenance).collect();
        assert_eq!(prov, [Provenance::Lidc, Provenance::Jsrt]);
    }

    #[test]
    fn empty_table_writes_header_only() {
        let table = ScoreTable::new("A", 1, DatasetTag::Lidc);
        let text = write_score_table(&table);
        assert_eq!(text, format!("# harmonized=true\n{HEADER_LINE}"));
        let parsed = lidc(&text, ParseMode::Strict).unwrap();
        assert_eq!(parsed.table, table);
    }

    #[test]
    fn one_record_round_trip() {
        let fv = FeatureVector::new([0.333333333333, 0.1, 1.0, 0.0, 0.7]).unwrap();
        let mut table = ScoreTable::new("A", 1, DatasetTag::Lidc);
        table
            .records
            .push(LabeledRecord::new("#weird id", fv, BinaryLabel::Benign, Provenance::Lidc).unwrap());
        let text = write_score_table(&table);
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
        let parsed = lidc(&text, ParseMode::Strict).unwrap();
        assert_eq!(parsed.table, table);
        assert_eq!(
            parsed.table.records[0].features.atelectasis().to_bits(),
            0.333333333333f64.to_bits()
        );
    }

    #[test]
    fn combined_round_trip_keeps_provenance() {
        let fv = FeatureVector::new([0.5; 5]).unwrap();
        let mut table = ScoreTable::new("A", 2, DatasetTag::Combined);
        for (i, p) in [Provenance::Lidc, Provenance::Lidc, Provenance::Jsrt, Provenance::Lidc]
            .iter()
            .enumerate()
        {
            table
                .records
                .push(LabeledRecord::new(format!("X{i}"), fv, BinaryLabel::Malignant, *p).unwrap());
        }
        let text = write_score_table(&table);
        assert!(text.contains("# provenance=LIDC*2,JSRT*1,LIDC*1\n"));
        let parsed = parse_score_table(text.as_bytes(), DatasetTag::Combined, "A", 2, ParseMode::Strict).unwrap();
        assert_eq!(parsed.table, table);
    }

    #[test]
    fn non_utf8_is_rejected() {
        let err = parse_score_table(&[0xff, 0xfe, 0x00], DatasetTag::Lidc, "A", 1, ParseMode::Lenient).unwrap_err();
        assert_eq!(err.issue().row_number, 0);
    }
}
