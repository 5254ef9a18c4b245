//! Deterministic data generators for the three benchmark constructions,
//! each with its oracle blocking.
//!
//! All draws come from ChaCha8 streams: the generator is seeded with the
//! config seed and uses one stream per class (stream id 1 or 2), so the two
//! classes' samples are independent and the output is bit-reproducible for
//! a fixed seed. Normal variates use Box-Muller over the stream's uniforms;
//! Cauchy variates use the inverse CDF `tan(pi * (u - 1/2))`.

use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::dissim::Blocking;
use crate::error::{Error, Result};

/// Which construction to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example {
    /// Gaussian classes that differ only in which half of the coordinates
    /// has variance 1 versus 1/2.
    #[serde(rename = "1")]
    One,
    /// Standard-normal coordinates with sign-coupled pairs: within each
    /// 4-tuple, class 1 couples the 3rd and 4th coordinates, class 2 the
    /// 1st and 2nd. All one-dimensional marginals are N(0, 1).
    #[serde(rename = "2")]
    Two,
    /// Same coupling pattern over standard Cauchy coordinates.
    #[serde(rename = "3")]
    Three,
}

impl Example {
    pub fn id(self) -> u8 {
        match self {
            Example::One => 1,
            Example::Two => 2,
            Example::Three => 3,
        }
    }
}

impl std::fmt::Display for Example {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(Example::One),
            "2" => Ok(Example::Two),
            "3" => Ok(Example::Three),
            other => Err(Error::InvalidParameter(format!(
                "unknown example {other:?}; expected 1, 2, or 3"
            ))),
        }
    }
}

/// Generator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub example: Example,
    pub n_per_class: usize,
    pub dim: usize,
    pub seed: u64,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 4 {
            return Err(Error::InvalidParameter(format!(
                "dimension {} too small, need at least 4",
                self.dim
            )));
        }
        if self.n_per_class < 2 {
            return Err(Error::InvalidParameter(format!(
                "{} observations per class, need at least 2",
                self.n_per_class
            )));
        }
        Ok(())
    }
}

/// Box-Muller standard normals over a uniform stream, keeping the spare of
/// each generated pair.
struct NormalSource<R: RngCore> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> NormalSource<R> {
    fn new(rng: R) -> Self {
        NormalSource { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = 1.0 - self.rng.random::<f64>(); // (0, 1]
        let u2: f64 = self.rng.random::<f64>(); // [0, 1)
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn cauchy<R: RngCore>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    (std::f64::consts::PI * (u - 0.5)).tan()
}

fn class_rng(seed: u64, class: ClassId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class.as_u8() as u64);
    rng
}

fn sign(u: f64) -> f64 {
    if u < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Apply the sign coupling of one class, in place, over every complete
/// 4-tuple of a row. Class 1 couples offsets (2, 3); class 2 offsets
/// (0, 1). Trailing coordinates of an incomplete 4-tuple stay uncoupled.
fn couple_row(row: &mut [f64], class: ClassId) {
    let offset = match class {
        ClassId::One => 2,
        ClassId::Two => 0,
    };
    let tuples = row.len() / 4;
    for k in 0..tuples {
        let i = 4 * k + offset;
        let (a, b) = (row[i], row[i + 1]);
        row[i] = sign(b) * a;
        row[i + 1] = sign(a) * b;
    }
}

fn assemble(cfg: &SimConfig, rows: Vec<f64>) -> Result<Dataset> {
    let n = 2 * cfg.n_per_class;
    let features = Array2::from_shape_vec((n, cfg.dim), rows)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let labels = (0..n)
        .map(|i| {
            if i < cfg.n_per_class {
                ClassId::One
            } else {
                ClassId::Two
            }
        })
        .collect();
    Dataset::new(features, labels)
}

/// Gaussian scale-swap construction. Class 1 has variance 1 on the first
/// floor(D/2) coordinates and 1/2 on the rest; class 2 has variance 1/2 on
/// the first D - floor(D/2) coordinates and 1 on the rest. The oracle
/// blocking is consecutive pairs.
pub fn gen_example1(cfg: &SimConfig) -> Result<(Dataset, Blocking)> {
    cfg.validate()?;
    let d = cfg.dim;
    let half = d / 2;
    let sd_for = |class: ClassId, coord: usize| -> f64 {
        let unit_variance = match class {
            ClassId::One => coord < half,
            ClassId::Two => coord >= d - half,
        };
        if unit_variance {
            1.0
        } else {
            std::f64::consts::FRAC_1_SQRT_2
        }
    };
    let mut rows = Vec::with_capacity(2 * cfg.n_per_class * d);
    for class in [ClassId::One, ClassId::Two] {
        let mut src = NormalSource::new(class_rng(cfg.seed, class));
        for _ in 0..cfg.n_per_class {
            for coord in 0..d {
                rows.push(src.next() * sd_for(class, coord));
            }
        }
    }
    Ok((assemble(cfg, rows)?, Blocking::consecutive_pairs(d)))
}

/// Sign-coupled standard normals. Oracle blocking: consecutive pairs.
pub fn gen_example2(cfg: &SimConfig) -> Result<(Dataset, Blocking)> {
    cfg.validate()?;
    gen_coupled(cfg, |src| src.next())
}

/// Sign-coupled standard Cauchy draws. Oracle blocking: consecutive pairs.
pub fn gen_example3(cfg: &SimConfig) -> Result<(Dataset, Blocking)> {
    cfg.validate()?;
    gen_coupled(cfg, |src| cauchy(&mut src.rng))
}

fn gen_coupled(
    cfg: &SimConfig,
    mut draw: impl FnMut(&mut NormalSource<ChaCha8Rng>) -> f64,
) -> Result<(Dataset, Blocking)> {
    let d = cfg.dim;
    let mut rows = Vec::with_capacity(2 * cfg.n_per_class * d);
    for class in [ClassId::One, ClassId::Two] {
        let mut src = NormalSource::new(class_rng(cfg.seed, class));
        let mut row = vec![0.0; d];
        for _ in 0..cfg.n_per_class {
            for x in row.iter_mut() {
                *x = draw(&mut src);
            }
            couple_row(&mut row, class);
            rows.extend_from_slice(&row);
        }
    }
    Ok((assemble(cfg, rows)?, Blocking::consecutive_pairs(d)))
}

/// Dispatch on the configured example.
pub fn generate(cfg: &SimConfig) -> Result<(Dataset, Blocking)> {
    match cfg.example {
        Example::One => gen_example1(cfg),
        Example::Two => gen_example2(cfg),
        Example::Three => gen_example3(cfg),
    }
}
