//! Monte Carlo sampling from a joint and plug-in information estimates.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::InfoTerm;
use crate::error::{validation, Result};
use crate::prob::{Dim, JointTensor, Var};

/// Draws per independently seeded RNG stream.
const BLOCK: usize = 1 << 16;

/// `n` i.i.d. draws from a joint, stored as flat cell indices.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    dims: Vec<Dim>,
    seed: u64,
    cells: Vec<u32>,
}

impl SampleBatch {
    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    /// Cell counts of the batch.
    pub fn counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.dims.iter().map(|d| d.size).product()];
        for &i in &self.cells {
            c[i as usize] += 1;
        }
        c
    }

    /// Empirical joint over the same axes as the sampled one.
    pub fn empirical(&self) -> Result<JointTensor> {
        JointTensor::from_counts(self.dims.clone(), &self.counts())
    }
}

/// Samples `n` cells of `joint`. Block `b` of `BLOCK` draws uses stream `b` of
/// a ChaCha generator keyed by `seed`, so results do not depend on threading.
pub fn sample_joint(joint: &JointTensor, n: usize, seed: u64) -> Result<SampleBatch> {
    if n == 0 {
        return validation("sample size must be positive");
    }
    if joint.mass().len() > u32::MAX as usize {
        return validation("joint has too many cells to sample");
    }
    let mut cdf = Vec::with_capacity(joint.mass().len());
    let mut acc = 0.0;
    for &m in joint.mass() {
        acc += m;
        cdf.push(acc);
    }
    let total = acc;
    let last = joint.mass().iter().rposition(|&m| m > 0.0).unwrap_or(0);

    let blocks = n.div_ceil(BLOCK);
    let cells: Vec<u32> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BLOCK.min(n - b * BLOCK);
            let cdf = &cdf;
            (0..len).map(move |_| {
                let u = rng.random::<f64>() * total;
                cdf.partition_point(|&c| c <= u).min(last) as u32
            })
        })
        .collect();
    Ok(SampleBatch { dims: joint.dims().to_vec(), seed, cells })
}

/// Plug-in estimate of `I(g1; g2 | cond)` from a sample.
pub fn plugin_cmi(batch: &SampleBatch, g1: &[Var], g2: &[Var], cond: &[Var]) -> Result<f64> {
    batch.empirical()?.conditional_mi(g1, g2, cond)
}

/// Exact and estimated value of one information term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub quantity: String,
    pub exact: f64,
    pub estimate: f64,
    pub abs_err: f64,
    pub n: usize,
    pub seed: u64,
}

/// Compares every term against its plug-in estimate from one shared sample.
pub fn validate_terms(joint: &JointTensor, terms: &[InfoTerm], n: usize, seed: u64) -> Result<Vec<ValidationRow>> {
    let batch = sample_joint(joint, n, seed)?;
    let emp = batch.empirical()?;
    terms
        .iter()
        .map(|t| {
            let exact = t.eval(joint)?;
            let estimate = t.eval(&emp)?;
            Ok(ValidationRow { quantity: t.name.clone(), exact, estimate, abs_err: (exact - estimate).abs(), n, seed })
        })
        .collect()
}

pub const VALIDATION_HEADER: &str = "quantity,exact,estimate,abs_err,n,seed";

pub fn write_validation_csv(w: &mut impl Write, rows: &[ValidationRow], comment: &str) -> std::io::Result<()> {
    for line in comment.lines() {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{VALIDATION_HEADER}")?;
    for r in rows {
        // quantity names contain commas
        writeln!(w, "\"{}\",{},{},{},{},{}", r.quantity, r.exact, r.estimate, r.abs_err, r.n, r.seed)?;
    }
    Ok(())
}
