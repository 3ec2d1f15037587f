//! Counterfactual optimization: loss assembly, the phased optimizer,
//! binarization and explanation reports.

mod loss;
mod optimize;
mod report;
mod state;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foldmetrics::FoldError;
use crate::gradkit::GradError;
use crate::predictor::PredictError;
use crate::seqcore::{SeqError, DEFAULT_CHUNK_LEN};

pub use loss::{
    counterfactual_var, l1_term, loss_deletion_necessary, loss_deletion_sufficient,
    loss_from_terms, loss_substitution_conservative, loss_substitution_radical, objective,
    Objective,
};
pub use optimize::{explain_record, optimize};
pub use report::{
    merge_reports, trace_to_csv, ChunkSummary, Edit, ExplanationReport, ExplanationResidue,
    TraceRecord,
};
pub use state::{
    binarize, init_state, Binarized, Perturbation, PerturbationState, DELETION_INIT_LOGIT,
    SUBSTITUTION_INIT_LOGIT,
};

/// Fold-change threshold on the TM-score.
pub const FOLD_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CfError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("record has {len} residues; chunk it to at most {chunk_len} first")]
    TooLong { len: usize, chunk_len: usize },
    #[error("{0}")]
    WrongMode(String),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Grad(#[from] GradError),
    #[error(transparent)]
    Seq(#[from] SeqError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveMode {
    DeletionNecessary,
    DeletionSufficient,
    SubstitutionRadical,
    SubstitutionConservative,
}

impl ObjectiveMode {
    pub const ALL: [ObjectiveMode; 4] = [
        ObjectiveMode::DeletionNecessary,
        ObjectiveMode::DeletionSufficient,
        ObjectiveMode::SubstitutionRadical,
        ObjectiveMode::SubstitutionConservative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveMode::DeletionNecessary => "deletion-necessary",
            ObjectiveMode::DeletionSufficient => "deletion-sufficient",
            ObjectiveMode::SubstitutionRadical => "substitution-radical",
            ObjectiveMode::SubstitutionConservative => "substitution-conservative",
        }
    }

    pub fn is_deletion(self) -> bool {
        matches!(
            self,
            ObjectiveMode::DeletionNecessary | ObjectiveMode::DeletionSufficient
        )
    }

    /// True for the modes that try to change the fold.
    pub fn seeks_fold_change(self) -> bool {
        matches!(
            self,
            ObjectiveMode::DeletionNecessary | ObjectiveMode::SubstitutionRadical
        )
    }

    pub fn default_lambda(self) -> f64 {
        match self {
            ObjectiveMode::DeletionNecessary => 1e-5,
            ObjectiveMode::DeletionSufficient => 2e-3,
            ObjectiveMode::SubstitutionRadical => 1e-2,
            ObjectiveMode::SubstitutionConservative => 1e-4,
        }
    }

    /// Whether a final TM-score satisfies this mode's constraint.
    pub fn is_feasible(self, tm: f64) -> bool {
        if self.seeks_fold_change() {
            tm <= FOLD_THRESHOLD
        } else {
            tm > FOLD_THRESHOLD
        }
    }
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveMode {
    type Err = CfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectiveMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CfError::Config(format!("unknown mode '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub negative_slope: f64,
    pub steps_per_phase: usize,
    pub phases: usize,
    pub lr: f64,
    pub binarize_threshold: f64,
    pub chunk_len: usize,
    pub seed: u64,
}

impl CfConfig {
    pub fn for_mode(mode: ObjectiveMode) -> Self {
        Self {
            alpha: 0.2,
            lambda: mode.default_lambda(),
            negative_slope: 0.1,
            steps_per_phase: 100,
            phases: 3,
            lr: 0.01,
            binarize_threshold: 0.5,
            chunk_len: DEFAULT_CHUNK_LEN,
            seed: 42,
        }
    }

    pub fn total_steps(&self) -> usize {
        self.phases * self.steps_per_phase
    }

    pub fn validate(&self) -> Result<(), CfError> {
        let fail = |msg: &str| Err(CfError::Config(msg.to_string()));
        if !(self.alpha >= 0.0 && self.alpha < 0.5) {
            return fail("alpha must lie in [0, 0.5)");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be finite and non-negative");
        }
        if !(self.negative_slope >= 0.0 && self.negative_slope.is_finite()) {
            return fail("negative_slope must be finite and non-negative");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("lr must be positive");
        }
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return fail("binarize_threshold must lie in (0, 1)");
        }
        if self.phases == 0 {
            return fail("phases must be at least 1");
        }
        if self.chunk_len == 0 {
            return fail("chunk_len must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in ObjectiveMode::ALL {
            assert_eq!(m.name().parse::<ObjectiveMode>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("deletion".parse::<ObjectiveMode>().is_err());
    }

    #[test]
    fn default_lambdas() {
        let got: Vec<f64> = ObjectiveMode::ALL.iter().map(|m| CfConfig::for_mode(*m).lambda).collect();
        assert_eq!(got, vec![1e-5, 2e-3, 1e-2, 1e-4]);
        let c = CfConfig::for_mode(ObjectiveMode::DeletionNecessary);
        assert_eq!((c.alpha, c.negative_slope, c.steps_per_phase, c.phases), (0.2, 0.1, 100, 3));
        assert_eq!((c.lr, c.binarize_threshold, c.chunk_len), (0.01, 0.5, 384));
        assert_eq!(c.total_steps(), 300);
    }

    #[test]
    fn feasibility_boundaries() {
        assert!(ObjectiveMode::DeletionNecessary.is_feasible(0.5));
        assert!(!ObjectiveMode::DeletionSufficient.is_feasible(0.5));
        assert!(ObjectiveMode::SubstitutionConservative.is_feasible(0.500001));
        assert!(!ObjectiveMode::SubstitutionRadical.is_feasible(0.500001));
    }

    #[test]
    fn validation() {
        let ok = CfConfig::for_mode(ObjectiveMode::DeletionNecessary);
        assert!(ok.validate().is_ok());
        for bad in [
            CfConfig { alpha: 0.5, ..ok.clone() },
            CfConfig { alpha: -0.1, ..ok.clone() },
            CfConfig { lambda: f64::NAN, ..ok.clone() },
            CfConfig { phases: 0, ..ok.clone() },
            CfConfig { lr: 0.0, ..ok.clone() },
            CfConfig { chunk_len: 0, ..ok.clone() },
            CfConfig { binarize_threshold: 1.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
        assert!(CfConfig { steps_per_phase: 0, ..ok }.validate().is_ok());
    }
}
