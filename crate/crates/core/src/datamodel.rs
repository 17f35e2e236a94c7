//! Domain types shared by every stage of the pipeline, and the label
//! harmonization rules that map LIDC-IDRI and JSRT diagnoses onto one
//! binary benign/malignant label.
//!
//! LIDC-IDRI patient diagnoses arrive as levels `1..=3`; the metadata also
//! carries an "Unknown" diagnosis, which this crate encodes as level `0`.
//! Unknown records are filtered out at harmonization time rather than
//! treated as errors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("illegal diagnosis {value:?} for {dataset} data")]
    IllegalDiagnosis { dataset: Provenance, value: String },
    #[error("score for {feature} is {value}, expected a finite value in [0, 1]")]
    ScoreOutOfRange { feature: Feature, value: f64 },
    #[error("patient id must not be empty")]
    EmptyPatientId,
    #[error("cannot combine tables ({left}) and ({right}): experiment id and epoch must match")]
    IncompatibleTables { left: String, right: String },
}

/// The five pathology scores in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Feature {
    Atelectasis,
    Effusion,
    Mass,
    NoFinding,
    Nodule,
}

impl Feature {
    pub const COUNT: usize = 5;
    pub const ALL: [Feature; Feature::COUNT] = [
        Feature::Atelectasis,
        Feature::Effusion,
        Feature::Mass,
        Feature::NoFinding,
        Feature::Nodule,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Feature> {
        Feature::ALL.get(index).copied()
    }

    /// Column name used in score-table CSV files.
    pub fn name(self) -> &'static str {
        match self {
            Feature::Atelectasis => "Atelectasis",
            Feature::Effusion => "Effusion",
            Feature::Mass => "Mass",
            Feature::NoFinding => "NoFinding",
            Feature::Nodule => "Nodule",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A validated five-score tuple. Every component is finite and in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector([f64; Feature::COUNT]);

impl FeatureVector {
    pub fn new(scores: [f64; Feature::COUNT]) -> Result<Self, DataError> {
        for (feature, &value) in Feature::ALL.iter().zip(scores.iter()) {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(DataError::ScoreOutOfRange {
                    feature: *feature,
                    value,
                });
            }
        }
        Ok(FeatureVector(scores))
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0[feature.index()]
    }

    pub fn as_array(&self) -> &[f64; Feature::COUNT] {
        &self.0
    }

    pub fn atelectasis(&self) -> f64 {
        self.0[0]
    }

    pub fn effusion(&self) -> f64 {
        self.0[1]
    }

    pub fn mass(&self) -> f64 {
        self.0[2]
    }

    pub fn no_finding(&self) -> f64 {
        self.0[3]
    }

    pub fn nodule(&self) -> f64 {
        self.0[4]
    }
}

/// Binary malignancy label. `Malignant` is the positive class for every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Benign = 1,
    Malignant = 2,
}

impl BinaryLabel {
    /// Harmonized numeric code written to the Diagnosis column.
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_malignant(self) -> bool {
        self == BinaryLabel::Malignant
    }

    pub fn flipped(self) -> BinaryLabel {
        match self {
            BinaryLabel::Benign => BinaryLabel::Malignant,
            BinaryLabel::Malignant => BinaryLabel::Benign,
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryLabel::Benign => f.write_str("Benign"),
            BinaryLabel::Malignant => f.write_str("Malignant"),
        }
    }
}

/// The dataset an individual record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Lidc,
    Jsrt,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Lidc => f.write_str("LIDC"),
            Provenance::Jsrt => f.write_str("JSRT"),
        }
    }
}

/// The dataset a whole score table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatasetTag {
    Lidc,
    Jsrt,
    Combined,
}

impl DatasetTag {
    /// Lowercase token used in file names and CLI flags.
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetTag::Lidc => "lidc",
            DatasetTag::Jsrt => "jsrt",
            DatasetTag::Combined => "combined",
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lidc" | "lidc-idri" => Ok(DatasetTag::Lidc),
            "jsrt" => Ok(DatasetTag::Jsrt),
            "combined" => Ok(DatasetTag::Combined),
            other => Err(format!("unknown dataset {other:?} (expected lidc, jsrt or combined)")),
        }
    }
}

impl From<Provenance> for DatasetTag {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::Lidc => DatasetTag::Lidc,
            Provenance::Jsrt => DatasetTag::Jsrt,
        }
    }
}

/// A raw, source-specific diagnosis before harmonization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawDiagnosis {
    /// LIDC-IDRI patient level diagnosis: 0 = Unknown, 1 = benign,
    /// 2 = primary lung cancer, 3 = metastatic.
    Lidc(u8),
    Jsrt(JsrtDiagnosis),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsrtDiagnosis {
    Benign,
    Malignant,
}

impl RawDiagnosis {
    pub fn lidc(code: i64) -> Result<Self, DataError> {
        match code {
            0..=3 => Ok(RawDiagnosis::Lidc(code as u8)),
            _ => Err(DataError::IllegalDiagnosis {
                dataset: Provenance::Lidc,
                value: code.to_string(),
            }),
        }
    }

    pub fn jsrt(label: &str) -> Result<Self, DataError> {
        match label.trim().to_ascii_lowercase().as_str() {
            "benign" => Ok(RawDiagnosis::Jsrt(JsrtDiagnosis::Benign)),
            "malignant" => Ok(RawDiagnosis::Jsrt(JsrtDiagnosis::Malignant)),
            _ => Err(DataError::IllegalDiagnosis {
                dataset: Provenance::Jsrt,
                value: label.to_string(),
            }),
        }
    }

    pub fn source(&self) -> Provenance {
        match self {
            RawDiagnosis::Lidc(_) => Provenance::Lidc,
            RawDiagnosis::Jsrt(_) => Provenance::Jsrt,
        }
    }

    /// `None` for the LIDC Unknown level.
    pub fn harmonize(&self) -> Option<BinaryLabel> {
        match *self {
            RawDiagnosis::Lidc(0) => None,
            RawDiagnosis::Lidc(1) => Some(BinaryLabel::Benign),
            RawDiagnosis::Lidc(_) => Some(BinaryLabel::Malignant),
            RawDiagnosis::Jsrt(JsrtDiagnosis::Benign) => Some(BinaryLabel::Benign),
            RawDiagnosis::Jsrt(JsrtDiagnosis::Malignant) => Some(BinaryLabel::Malignant),
        }
    }
}

/// Maps an LIDC-IDRI diagnosis level onto the binary label. Levels 2 and 3
/// (primary and metastatic) both become `Malignant`; level 0 (Unknown)
/// yields `None` and the record should be dropped.
pub fn harmonize_lidc(code: i64) -> Result<Option<BinaryLabel>, DataError> {
    RawDiagnosis::lidc(code).map(|raw| raw.harmonize())
}

/// Maps a JSRT diagnosis string (case-insensitive, surrounding whitespace
/// ignored) onto the binary label.
pub fn harmonize_jsrt(label: &str) -> Result<BinaryLabel, DataError> {
    let raw = RawDiagnosis::jsrt(label)?;
    Ok(raw.harmonize().expect("JSRT diagnoses are never unknown"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    patient_id: String,
    pub features: FeatureVector,
    pub label: BinaryLabel,
    pub provenance: Provenance,
}

impl LabeledRecord {
    pub fn new(
        patient_id: impl Into<String>,
        features: FeatureVector,
        label: BinaryLabel,
        provenance: Provenance,
    ) -> Result<Self, DataError> {
        let patient_id = patient_id.into();
        if patient_id.is_empty() {
            return Err(DataError::EmptyPatientId);
        }
        Ok(LabeledRecord {
            patient_id,
            features,
            label,
            provenance,
        })
    }

    pub fn patient_id(&self) -> &str {
        &self.patient_id
    }
}

/// Identity of a score table: which experiment, which training epoch of the
/// upstream model, and which dataset was scored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TableId {
    pub experiment_id: String,
    pub epoch: u32,
    pub dataset: DatasetTag,
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.experiment_id, self.epoch, self.dataset)
    }
}

/// An ordered collection of labeled records scored by one upstream model.
///
/// Record order is the ingestion order. Epochs above 25 are accepted even
/// though the upstream models were only ever trained that far.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub records: Vec<LabeledRecord>,
    pub experiment_id: String,
    pub epoch: u32,
    pub dataset_tag: DatasetTag,
}

impl ScoreTable {
    pub fn new(experiment_id: impl Into<String>, epoch: u32, dataset_tag: DatasetTag) -> Self {
        ScoreTable {
            records: Vec::new(),
            experiment_id: experiment_id.into(),
            epoch,
            dataset_tag,
        }
    }

    pub fn id(&self) -> TableId {
        TableId {
            experiment_id: self.experiment_id.clone(),
            epoch: self.epoch,
            dataset: self.dataset_tag,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, label: BinaryLabel) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }
}

/// Concatenates `a` then `b` into a `Combined` table. Per-record provenance
/// is kept.
pub fn combine_datasets(a: &ScoreTable, b: &ScoreTable) -> Result<ScoreTable, DataError> {
    if a.experiment_id != b.experiment_id || a.epoch != b.epoch {
        return Err(DataError::IncompatibleTables {
            left: a.id().to_string(),
            right: b.id().to_string(),
        });
    }
    let mut records = Vec::with_capacity(a.len() + b.len());
    records.extend(a.records.iter().cloned());
    records.extend(b.records.iter().cloned());
    Ok(ScoreTable {
        records,
        experiment_id: a.experiment_id.clone(),
        epoch: a.epoch,
        dataset_tag: DatasetTag::Combined,
    })
}
