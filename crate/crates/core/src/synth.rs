//! Synthetic class-conditional score tables.
//!
//! Stands in for an upstream classifier so mining can be exercised end to
//! end. Each feature is drawn from a symmetric triangular distribution
//! around its class center, `center + spread * (u1 + u2 - 1)`, then clamped
//! to `[0, 1]`. `separability` scales the distance of both class centers
//! from their midpoint: 0 makes the classes indistinguishable, 1 uses the
//! configured centers.
//!
//! Labels and scores come from independent streams derived from the seed,
//! so an epoch series shares patient ids and labels across epochs while
//! the scores move.

use thiserror::Error;

use crate::datamodel::{BinaryLabel, DatasetTag, Feature, FeatureVector, LabeledRecord, Provenance, ScoreTable};
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    ConfigError(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_records: usize,
    pub malignant_prior: f64,
    pub benign_center: [f64; Feature::COUNT],
    pub malignant_center: [f64; Feature::COUNT],
    pub benign_spread: [f64; Feature::COUNT],
    pub malignant_spread: [f64; Feature::COUNT],
    pub separability: f64,
    pub seed: u64,
    pub experiment_id: String,
    pub dataset: DatasetTag,
}

impl Default for SynthConfig {
    /// 250 combined-dataset records with balanced classes, so that a tree
    /// that cannot separate them stays below a 60% holdout accuracy. Benign
    /// cases score high on NoFinding, malignant ones on Mass and Nodule.
    fn default() -> Self {
        SynthConfig {
            n_records: 250,
            malignant_prior: 0.5,
            //               Atel  Effu  Mass  NoF   Nod
            benign_center: [0.20, 0.20, 0.20, 0.75, 0.25],
            malignant_center: [0.30, 0.35, 0.70, 0.30, 0.65],
            benign_spread: [0.30; Feature::COUNT],
            malignant_spread: [0.30; Feature::COUNT],
            separability: 1.0,
            seed: 7,
            experiment_id: "synth".to_string(),
            dataset: DatasetTag::Combined,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |m: String| Err(SynthError::ConfigError(m));
        if self.n_records < 1 {
            return err("n_records must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.malignant_prior) {
            return err(format!("malignant_prior {} outside [0, 1]", self.malignant_prior));
        }
        for (name, centers) in [
            ("benign_center", &self.benign_center),
            ("malignant_center", &self.malignant_center),
        ] {
            if let Some(c) = centers.iter().find(|c| !(0.0..=1.0).contains(*c)) {
                return err(format!("{name} value {c} outside [0, 1]"));
            }
        }
        for (name, spreads) in [
            ("benign_spread", &self.benign_spread),
            ("malignant_spread", &self.malignant_spread),
        ] {
            if let Some(s) = spreads.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return err(format!("{name} value {s} must be finite and non-negative"));
            }
        }
        if !(self.separability.is_finite() && self.separability >= 0.0) {
            return err(format!(
                "separability {} must be finite and non-negative",
                self.separability
            ));
        }
        Ok(())
    }

    /// Class centers after applying `separability`, clamped to `[0, 1]`.
    pub fn effective_centers(&self) -> ([f64; Feature::COUNT], [f64; Feature::COUNT]) {
        let mut benign = [0.0; Feature::COUNT];
        let mut malignant = [0.0; Feature::COUNT];
        for i in 0..Feature::COUNT {
            let mid = (self.benign_center[i] + self.malignant_center[i]) / 2.0;
            benign[i] = (mid + self.separability * (self.benign_center[i] - mid)).clamp(0.0, 1.0);
            malignant[i] = (mid + self.separability * (self.malignant_center[i] - mid)).clamp(0.0, 1.0);
        }
        (benign, malignant)
    }

    /// Mean absolute gap between the effective class centers.
    pub fn mean_center_gap(&self) -> f64 {
        let (b, m) = self.effective_centers();
        b.iter().zip(&m).map(|(x, y)| (x - y).abs()).sum::<f64>() / Feature::COUNT as f64
    }
}

fn labels(config: &SynthConfig) -> Vec<BinaryLabel> {
    let mut rng = SplitMix64::new(derive_seed(config.seed, b"labels"));
    (0..config.n_records)
        .map(|_| {
            if rng.next_f64() < config.malignant_prior {
                BinaryLabel::Malignant
            } else {
                BinaryLabel::Benign
            }
        })
        .collect()
}

fn provenance(dataset: DatasetTag, index: usize, n: usize) -> Provenance {
    match dataset {
        DatasetTag::Lidc => Provenance::Lidc,
        DatasetTag::Jsrt => Provenance::Jsrt,
        // LIDC then JSRT, in the 96:154 proportion of the real datasets.
        DatasetTag::Combined => {
            if index < (n * 96 + 125) / 250 {
                Provenance::Lidc
            } else {
                Provenance::Jsrt
            }
        }
    }
}

fn generate_stream(config: &SynthConfig, epoch: u32, stream: u64) -> ScoreTable {
    let labels = labels(config);
    let (benign_center, malignant_center) = config.effective_centers();
    let mut rng = SplitMix64::new(derive_seed(config.seed, format!("scores/{stream}").as_bytes()));
    let mut table = ScoreTable::new(config.experiment_id.clone(), epoch, config.dataset);
    for (i, label) in labels.into_iter().enumerate() {
        let (centers, spreads) = match label {
            BinaryLabel::Benign => (&benign_center, &config.benign_spread),
            BinaryLabel::Malignant => (&malignant_center, &config.malignant_spread),
        };
        let mut scores = [0.0; Feature::COUNT];
        for f in 0..Feature::COUNT {
            let noise = rng.next_f64() + rng.next_f64() - 1.0;
            scores[f] = (centers[f] + spreads[f] * noise).clamp(0.0, 1.0);
        }
        let features = FeatureVector::new(scores).expect("clamped scores are in range");
        let record = LabeledRecord::new(
            format!("S{:04}", i + 1),
            features,
            label,
            provenance(config.dataset, i, config.n_records),
        )
        .expect("synthetic ids are non-empty");
        table.records.push(record);
    }
    table
}

/// One synthetic table, tagged epoch 0.
pub fn generate(config: &SynthConfig) -> Result<ScoreTable, SynthError> {
    config.validate()?;
    Ok(generate_stream(config, 0, 0))
}

/// `n_epochs` tables for epochs `1..=n_epochs`, with separability ramping
/// linearly from 0 at epoch 1 to `base.separability` at the last epoch.
/// A single-epoch series uses the full separability.
pub fn epoch_series(base: &SynthConfig, n_epochs: u32) -> Result<Vec<ScoreTable>, SynthError> {
    if n_epochs < 1 {
        return Err(SynthError::ConfigError("n_epochs must be at least 1".into()));
    }
    base.validate()?;
    Ok((1..=n_epochs)
        .map(|epoch| {
            let config = SynthConfig {
                separability: epoch_separability(base.separability, epoch, n_epochs),
                ..base.clone()
            };
            generate_stream(&config, epoch, u64::from(epoch))
        })
        .collect())
}

pub fn epoch_separability(full: f64, epoch: u32, n_epochs: u32) -> f64 {
    if n_epochs <= 1 {
        full
    } else {
        full * f64::from(epoch - 1) / f64::from(n_epochs - 1)
    }
}
