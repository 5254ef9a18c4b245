//! The three average-distance discriminants and their decision rule.
//!
//! All variants share one scoring path: with per-class cross means m_j(z)
//! and cached within-class deviations dev_j,
//!
//! ```text
//! score(z) = [m_2(z) - dev_2 / 2] - [m_1(z) - dev_1 / 2]
//! ```
//!
//! AVG zeroes both deviations; AVG and SAVG use singleton blocks with the
//! identity transform, under which the block dissimilarity is exactly the
//! squared Euclidean distance scaled by 1/D. The decision assigns class 1
//! on a strictly positive score and class 2 otherwise, so an exact zero
//! (flagged as a tie) goes to class 2.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::dissim::{cross_mean_unchecked, within_unchecked, Blocking};
use crate::error::{Error, Result};
use crate::gamma::Gamma;

/// Which discriminant to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "avg")]
    Avg,
    #[serde(rename = "savg")]
    Savg,
    #[serde(rename = "gsavg")]
    Gsavg,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Avg => "avg",
            Variant::Savg => "savg",
            Variant::Gsavg => "gsavg",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" => Ok(Variant::Avg),
            "savg" => Ok(Variant::Savg),
            "gsavg" => Ok(Variant::Gsavg),
            other => Err(Error::InvalidParameter(format!(
                "unknown variant {other:?}; expected avg, savg, or gsavg"
            ))),
        }
    }
}

/// The outcome of classifying one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    /// Discriminant value; positive favors class 1.
    pub score: f64,
    pub label: ClassId,
    /// True only when the score is exactly zero.
    pub tie: bool,
}

/// A fitted classifier. Immutable once built; classification never mutates
/// the model, so it can be shared across threads.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    variant: Variant,
    gamma: Gamma,
    blocking: Blocking,
    class1: Array2<f64>,
    class2: Array2<f64>,
    dev1: f64,
    dev2: f64,
    train_fingerprint: String,
    label_names: [String; 2],
}

/// Fit a model. `blocking` and `gamma` are required for `Gsavg` and ignored
/// for the other variants (which use singleton blocks with the identity
/// transform).
pub fn fit(
    train: &Dataset,
    variant: Variant,
    blocking: Option<Blocking>,
    gamma: Option<Gamma>,
) -> Result<TrainedModel> {
    let (n1, n2) = train.class_counts();
    for (class, size) in [(1u8, n1), (2u8, n2)] {
        if size < 2 {
            return Err(Error::ClassTooSmall {
                class,
                size,
                min: 2,
            });
        }
    }
    let (blocking, gamma) = match variant {
        Variant::Gsavg => {
            let b = blocking
                .ok_or_else(|| Error::InvalidParameter("gsavg requires a blocking".into()))?;
            let g =
                gamma.ok_or_else(|| Error::InvalidParameter("gsavg requires a gamma".into()))?;
            (b, g)
        }
        _ => (Blocking::singletons(train.dim()), Gamma::Identity),
    };
    if blocking.dim() != train.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            got: blocking.dim(),
        });
    }
    let class1 = train.class_matrix(ClassId::One);
    let class2 = train.class_matrix(ClassId::Two);
    let (dev1, dev2) = if variant == Variant::Avg {
        (0.0, 0.0)
    } else {
        (
            within_unchecked(&class1.view(), &blocking, gamma),
            within_unchecked(&class2.view(), &blocking, gamma),
        )
    };
    Ok(TrainedModel {
        variant,
        gamma,
        blocking,
        class1,
        class2,
        dev1,
        dev2,
        train_fingerprint: train.fingerprint(),
        label_names: train.label_names().clone(),
    })
}

impl TrainedModel {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn gamma(&self) -> Gamma {
        self.gamma
    }

    pub fn blocking(&self) -> &Blocking {
        &self.blocking
    }

    /// Cached within-class deviations (dev1, dev2).
    pub fn deviations(&self) -> (f64, f64) {
        (self.dev1, self.dev2)
    }

    pub fn train_fingerprint(&self) -> &str {
        &self.train_fingerprint
    }

    pub fn label_names(&self) -> &[String; 2] {
        &self.label_names
    }

    pub fn dim(&self) -> usize {
        self.blocking.dim()
    }

    fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        for &x in z {
            if x.is_nan() {
                return Err(Error::NanInput);
            }
            if x.is_infinite() {
                return Err(Error::NonFiniteInput);
            }
        }
        Ok(())
    }

    fn score_unchecked(&self, z: &[f64]) -> f64 {
        let t1 = cross_mean_unchecked(z, &self.class1.view(), &self.blocking, self.gamma)
            - self.dev1 / 2.0;
        let t2 = cross_mean_unchecked(z, &self.class2.view(), &self.blocking, self.gamma)
            - self.dev2 / 2.0;
        t2 - t1
    }

    /// Discriminant value at `z`; positive favors class 1.
    pub fn discriminant(&self, z: ArrayView1<'_, f64>) -> Result<f64> {
        let z = z
            .to_slice()
            .ok_or_else(|| Error::InvalidParameter("non-contiguous input vector".into()))?;
        self.check_point(z)?;
        Ok(self.score_unchecked(z))
    }

    pub fn classify(&self, z: ArrayView1<'_, f64>) -> Result<Decision> {
        let score = self.discriminant(z)?;
        Ok(decide(score))
    }

    /// Fraction of test rows whose predicted label differs from the truth.
    pub fn misclassification_rate(&self, test: &Dataset) -> Result<f64> {
        if test.n() == 0 {
            return Err(Error::EmptySamples);
        }
        if test.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: test.dim(),
            });
        }
        let feats = test.features();
        let mut errors = 0usize;
        for (i, &truth) in test.labels().iter().enumerate() {
            let row = feats.row(i);
            let z = row.to_slice().expect("row-major features");
            let d = decide(self.score_unchecked(z));
            if d.label != truth {
                errors += 1;
            }
        }
        Ok(errors as f64 / test.n() as f64)
    }

    pub fn to_artifact(&self) -> ModelArtifact {
        ModelArtifact {
            variant: self.variant,
            gamma: self.gamma,
            blocks: self.blocking.to_one_based(),
            dev1: self.dev1,
            dev2: self.dev2,
            train_fingerprint: self.train_fingerprint.clone(),
        }
    }

    /// Rebuild a model from a saved artifact plus the original training
    /// data. The data's fingerprint must match the one recorded at fit
    /// time; cached deviations are taken from the artifact.
    pub fn from_artifact(artifact: &ModelArtifact, train: &Dataset) -> Result<TrainedModel> {
        if train.fingerprint() != artifact.train_fingerprint {
            return Err(Error::FingerprintMismatch);
        }
        let blocking = Blocking::from_one_based(artifact.blocks.clone(), train.dim())?;
        Ok(TrainedModel {
            variant: artifact.variant,
            gamma: artifact.gamma,
            blocking,
            class1: train.class_matrix(ClassId::One),
            class2: train.class_matrix(ClassId::Two),
            dev1: artifact.dev1,
            dev2: artifact.dev2,
            train_fingerprint: artifact.train_fingerprint.clone(),
            label_names: train.label_names().clone(),
        })
    }
}

pub(crate) fn decide(score: f64) -> Decision {
    Decision {
        score,
        label: if score > 0.0 {
            ClassId::One
        } else {
            ClassId::Two
        },
        tie: score == 0.0,
    }
}

/// Serializable model file: hyperparameters, cached deviations, and a
/// fingerprint of the training data (1-based block lists on disk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub variant: Variant,
    pub gamma: Gamma,
    pub blocks: Vec<Vec<usize>>,
    pub dev1: f64,
    pub dev2: f64,
    pub train_fingerprint: String,
}
