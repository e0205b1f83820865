//! Exact finite-probability arithmetic.
//!
//! Everything here is measured in bits. A [`JointTensor`] is a dense,
//! row-major probability mass over a product of small labelled alphabets
//! (the last dimension varies fastest). Information quantities are computed
//! from entropies of marginals of one consistent joint, so zero-mass cells
//! never produce `log 0` terms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Tolerance on total probability mass.
pub const MASS_TOL: f64 = 1e-12;

/// Variable labels of the system model, plus `L` for less-noisy test auxiliaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    U,
    V,
    A,
    /// Encoder measurement of the hidden source.
    Xt,
    X,
    Y,
    Z,
    L,
}

impl Var {
    pub const ALL: [Var; 8] = [Var::U, Var::V, Var::A, Var::Xt, Var::X, Var::Y, Var::Z, Var::L];

    #[inline]
    pub fn bit(self) -> u16 {
        1 << (self as u16)
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::U => "U",
            Var::V => "V",
            Var::A => "A",
            Var::Xt => "Xt",
            Var::X => "X",
            Var::Y => "Y",
            Var::Z => "Z",
            Var::L => "L",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A labelled axis of a tensor or channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dim {
    pub var: Var,
    pub size: usize,
}

impl Dim {
    pub const fn new(var: Var, size: usize) -> Self {
        Dim { var, size }
    }
}

/// Number of joint symbols over `dims`.
pub fn product_size(dims: &[Dim]) -> usize {
    dims.iter().map(|d| d.size).product()
}

/// Decodes a row-major flat index into per-dimension symbols.
pub fn decode_index(dims: &[Dim], mut index: usize, out: &mut [usize]) {
    for (k, d) in dims.iter().enumerate().rev() {
        out[k] = index % d.size;
        index /= d.size;
    }
}

/// A set of variable labels without duplicates, in caller order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarGroup {
    vars: Vec<Var>,
    mask: u16,
}

impl VarGroup {
    pub fn new(vars: &[Var]) -> Result<Self> {
        let mut mask = 0u16;
        for v in vars {
            if mask & v.bit() != 0 {
                return validation(format!("variable {v} listed twice in group"));
            }
            mask |= v.bit();
        }
        Ok(VarGroup { vars: vars.to_vec(), mask })
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn mask(&self) -> u16 {
        self.mask
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

/// A validated probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDist {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FiniteDist {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        FiniteDist::new(p)
    }
}

impl From<FiniteDist> for Vec<f64> {
    fn from(d: FiniteDist) -> Self {
        d.probs
    }
}

impl FiniteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_mass(&probs)?;
        Ok(FiniteDist { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return validation("empty alphabet");
        }
        FiniteDist::new(vec![1.0 / size as f64; size])
    }

    pub fn bernoulli(p_one: f64) -> Result<Self> {
        FiniteDist::new(vec![1.0 - p_one, p_one])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_mass(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return validation("empty probability vector");
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return validation(format!("entry {i} is not a nonnegative finite probability: {p}"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return validation(format!("probabilities sum to {total}, expected 1"));
    }
    Ok(())
}

/// Shannon entropy of raw masses in bits, with `0 log 0 = 0`.
#[inline]
pub fn entropy_bits(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Shannon entropy of a validated distribution, in bits.
pub fn entropy(dist: &FiniteDist) -> f64 {
    entropy_bits(&dist.probs).max(0.0)
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

/// Dense joint probability mass over labelled finite alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTensor {
    dims: Vec<Dim>,
    mass: Vec<f64>,
}

impl JointTensor {
    pub fn new(dims: Vec<Dim>, mass: Vec<f64>) -> Result<Self> {
        check_dims(&dims)?;
        if product_size(&dims) != mass.len() {
            return validation(format!("mass has {} cells but dimensions imply {}", mass.len(), product_size(&dims)));
        }
        check_mass(&mass)?;
        Ok(JointTensor { dims, mass })
    }

    /// Builds a tensor from a cell function evaluated on decoded symbols.
    pub fn from_fn(dims: Vec<Dim>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_dims(&dims)?;
        let n = product_size(&dims);
        let mut syms = vec![0usize; dims.len()];
        let mut mass = Vec::with_capacity(n);
        for i in 0..n {
            decode_index(&dims, i, &mut syms);
            mass.push(f(&syms));
        }
        JointTensor::new(dims, mass)
    }

    /// Empirical distribution of integer counts.
    pub fn from_counts(dims: Vec<Dim>, counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return validation("no counts");
        }
        let t = total as f64;
        JointTensor::new(dims, counts.iter().map(|&c| c as f64 / t).collect())
    }

    /// A single variable distributed according to `dist`.
    pub fn single(var: Var, dist: &FiniteDist) -> Self {
        JointTensor { dims: vec![Dim::new(var, dist.len())], mass: dist.probs.clone() }
    }

    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.dims.iter().map(|d| d.var)
    }

    pub fn var_mask(&self) -> u16 {
        self.dims.iter().fold(0, |m, d| m | d.var.bit())
    }

    pub fn position(&self, var: Var) -> Option<usize> {
        self.dims.iter().position(|d| d.var == var)
    }

    pub fn size_of(&self, var: Var) -> Option<usize> {
        self.position(var).map(|k| self.dims[k].size)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    fn positions(&self, vars: &[Var]) -> Result<Vec<usize>> {
        vars.iter()
            .map(|&v| self.position(v).ok_or_else(|| crate::Error::Validation(format!("unknown variable {v}"))))
            .collect()
    }

    /// Sums `self.mass` into the joint alphabet of the dimensions at `keep`
    /// (given as positions, in output order).
    fn marginal_masses(&self, keep: &[usize]) -> Vec<f64> {
        let n = self.dims.len();
        let mut out_stride = [0usize; Var::ALL.len()];
        let mut size = 1usize;
        for &k in keep.iter().rev() {
            out_stride[k] = size;
            size *= self.dims[k].size;
        }
        let mut out = vec![0.0; size];
        let mut idx = [0usize; Var::ALL.len()];
        let mut m = 0usize;
        for &p in &self.mass {
            out[m] += p;
            for d in (0..n).rev() {
                idx[d] += 1;
                m += out_stride[d];
                if idx[d] < self.dims[d].size {
                    break;
                }
                m -= out_stride[d] * self.dims[d].size;
                idx[d] = 0;
            }
        }
        out
    }

    /// Marginal over `keep`, with axes in the order given by `keep`.
    pub fn marginalize(&self, keep: &[Var]) -> Result<JointTensor> {
        VarGroup::new(keep)?;
        let pos = self.positions(keep)?;
        let dims = pos.iter().map(|&k| self.dims[k]).collect();
        Ok(JointTensor { dims, mass: self.marginal_masses(&pos) })
    }

    /// Marginal of a single variable as a distribution.
    pub fn marginal_dist(&self, var: Var) -> Result<FiniteDist> {
        let m = self.marginalize(&[var])?;
        Ok(FiniteDist { probs: m.mass })
    }

    /// Entropy of the marginal over the variables in `mask`, in bits.
    pub fn entropy_of_mask(&self, mask: u16) -> Result<f64> {
        if mask & !self.var_mask() != 0 {
            let missing: Vec<_> =
                Var::ALL.iter().filter(|v| mask & v.bit() != 0 && self.position(**v).is_none()).collect();
            return validation(format!("unknown variable(s) {missing:?}"));
        }
        if mask == 0 {
            return Ok(0.0);
        }
        let keep: Vec<usize> =
            self.dims.iter().enumerate().filter(|(_, d)| mask & d.var.bit() != 0).map(|(k, _)| k).collect();
        if keep.len() == self.dims.len() {
            return Ok(entropy_bits(&self.mass));
        }
        Ok(entropy_bits(&self.marginal_masses(&keep)))
    }

    pub fn entropy_of(&self, vars: &[Var]) -> Result<f64> {
        self.entropy_of_mask(VarGroup::new(vars)?.mask())
    }

    /// `I(g1; g2 | cond)` in bits without clamping; may be a few ulps below zero.
    pub fn conditional_mi_raw(&self, g1: &[Var], g2: &[Var], cond: &[Var]) -> Result<f64> {
        let (a, b, c) = disjoint_masks(g1, g2, cond)?;
        cmi_from(|m| self.entropy_of_mask(m), a, b, c)
    }

    /// `I(g1; g2 | cond)` in bits, clamped at zero.
    pub fn conditional_mi(&self, g1: &[Var], g2: &[Var], cond: &[Var]) -> Result<f64> {
        Ok(self.conditional_mi_raw(g1, g2, cond)?.max(0.0))
    }

    pub fn mutual_information(&self, g1: &[Var], g2: &[Var]) -> Result<f64> {
        self.conditional_mi(g1, g2, &[])
    }

    /// Returns the same distribution with axes reordered to `order`.
    pub fn permute(&self, order: &[Var]) -> Result<JointTensor> {
        if order.len() != self.dims.len() {
            return validation("permutation must list every variable exactly once");
        }
        self.marginalize(order)
    }

    /// Appends the outputs of `channel` as new axes:
    /// `P'(cell, out) = P(cell) W(out | inputs(cell))`.
    pub fn extend(&self, channel: &crate::channel::CondChannel) -> Result<JointTensor> {
        let outs = channel.outputs();
        for o in outs {
            if self.position(o.var).is_some() {
                return validation(format!("variable {} already present in joint", o.var));
            }
        }
        let n = self.dims.len();
        let mut row_stride = vec![0usize; n];
        let mut stride = 1usize;
        for inp in channel.inputs().iter().rev() {
            let k = self
                .position(inp.var)
                .ok_or_else(|| crate::Error::Validation(format!("channel input {} missing from joint", inp.var)))?;
            if self.dims[k].size != inp.size {
                return validation(format!(
                    "alphabet of {} is {} in joint but {} in channel",
                    inp.var, self.dims[k].size, inp.size
                ));
            }
            row_stride[k] = stride;
            stride *= inp.size;
        }
        let out_size = channel.output_size();
        let rows = channel.rows();
        let mut mass = Vec::with_capacity(self.mass.len() * out_size);
        let mut idx = vec![0usize; n];
        let mut r = 0usize;
        for &p in &self.mass {
            let row = &rows[r * out_size..(r + 1) * out_size];
            mass.extend(row.iter().map(|w| p * w));
            for d in (0..n).rev() {
                idx[d] += 1;
                r += row_stride[d];
                if idx[d] < self.dims[d].size {
                    break;
                }
                r -= row_stride[d] * self.dims[d].size;
                idx[d] = 0;
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(outs);
        JointTensor::new(dims, mass)
    }
}

fn check_dims(dims: &[Dim]) -> Result<()> {
    let mut mask = 0u16;
    for d in dims {
        if d.size == 0 {
            return validation(format!("variable {} has an empty alphabet", d.var));
        }
        if mask & d.var.bit() != 0 {
            return validation(format!("variable {} appears twice", d.var));
        }
        mask |= d.var.bit();
    }
    Ok(())
}

/// Validates three pairwise-disjoint groups and returns their masks.
pub fn disjoint_masks(g1: &[Var], g2: &[Var], cond: &[Var]) -> Result<(u16, u16, u16)> {
    let a = VarGroup::new(g1)?.mask();
    let b = VarGroup::new(g2)?.mask();
    let c = VarGroup::new(cond)?.mask();
    if a & b != 0 || a & c != 0 || b & c != 0 {
        return validation("variable groups of a conditional mutual information must be disjoint");
    }
    if a == 0 || b == 0 {
        return validation("mutual information needs two nonempty groups");
    }
    Ok((a, b, c))
}

/// `H(a,c) + H(b,c) - H(a,b,c) - H(c)` for any entropy oracle over masks.
pub(crate) fn cmi_from(mut h: impl FnMut(u16) -> Result<f64>, a: u16, b: u16, c: u16) -> Result<f64> {
    Ok(h(a | c)? + h(b | c)? - h(a | b | c)? - h(c)?)
}

/// Memoised marginal entropies of one joint, keyed by variable mask.
///
/// Bound evaluation asks for many overlapping marginals; each is computed once.
pub struct EntropyCache<'a> {
    joint: &'a JointTensor,
    memo: Vec<f64>,
}

impl<'a> EntropyCache<'a> {
    pub fn new(joint: &'a JointTensor) -> Self {
        EntropyCache { joint, memo: vec![f64::NAN; 1 << Var::ALL.len()] }
    }

    pub fn joint(&self) -> &JointTensor {
        self.joint
    }

    pub fn entropy(&mut self, mask: u16) -> Result<f64> {
        let slot = &mut self.memo[mask as usize];
        if slot.is_nan() {
            *slot = self.joint.entropy_of_mask(mask)?;
        }
        Ok(*slot)
    }

    /// Unclamped `I(g1; g2 | cond)`.
    pub fn cmi(&mut self, g1: &[Var], g2: &[Var], cond: &[Var]) -> Result<f64> {
        let (a, b, c) = disjoint_masks(g1, g2, cond)?;
        cmi_from(|m| self.entropy(m), a, b, c)
    }
}
