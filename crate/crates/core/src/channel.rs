//! Conditional channels between labelled variables, binary symmetric channel
//! algebra and action costs.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::prob::{decode_index, product_size, Dim, JointTensor, Var, MASS_TOL};

/// A stochastic map from the joint alphabet of `inputs` to the joint alphabet
/// of `outputs`. Rows are indexed row-major over the inputs, columns row-major
/// over the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct CondChannel {
    inputs: Vec<Dim>,
    outputs: Vec<Dim>,
    rows: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    inputs: Vec<Dim>,
    outputs: Vec<Dim>,
    rows: Vec<f64>,
}

impl TryFrom<RawChannel> for CondChannel {
    type Error = Error;

    fn try_from(r: RawChannel) -> Result<Self> {
        CondChannel::new(r.inputs, r.outputs, r.rows)
    }
}

impl CondChannel {
    pub fn new(inputs: Vec<Dim>, outputs: Vec<Dim>, rows: Vec<f64>) -> Result<Self> {
        if outputs.is_empty() {
            return validation("channel needs at least one output variable");
        }
        let mut mask = 0u16;
        for d in inputs.iter().chain(&outputs) {
            if d.size == 0 {
                return validation(format!("variable {} has an empty alphabet", d.var));
            }
            if mask & d.var.bit() != 0 {
                return validation(format!("variable {} appears twice in channel", d.var));
            }
            mask |= d.var.bit();
        }
        let n_in = product_size(&inputs);
        let n_out = product_size(&outputs);
        if rows.len() != n_in * n_out {
            return validation(format!("channel matrix has {} entries, expected {}", rows.len(), n_in * n_out));
        }
        for (r, row) in rows.chunks(n_out).enumerate() {
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return validation(format!("row {r} has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > MASS_TOL {
                return validation(format!("row {r} sums to {s}"));
            }
        }
        Ok(CondChannel { inputs, outputs, rows })
    }

    /// Builds a channel from `f(input_symbols, output_symbols)`.
    pub fn from_fn(inputs: Vec<Dim>, outputs: Vec<Dim>, mut f: impl FnMut(&[usize], &[usize]) -> f64) -> Result<Self> {
        let n_in = product_size(&inputs);
        let n_out = product_size(&outputs);
        let mut isym = vec![0usize; inputs.len()];
        let mut osym = vec![0usize; outputs.len()];
        let mut rows = Vec::with_capacity(n_in * n_out);
        for i in 0..n_in {
            decode_index(&inputs, i, &mut isym);
            for o in 0..n_out {
                decode_index(&outputs, o, &mut osym);
                rows.push(f(&isym, &osym));
            }
        }
        CondChannel::new(inputs, outputs, rows)
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(from: Var, to: Var, p: f64) -> Result<Self> {
        check_unit("crossover", p)?;
        CondChannel::new(vec![Dim::new(from, 2)], vec![Dim::new(to, 2)], vec![1.0 - p, p, p, 1.0 - p])
    }

    /// Binary-input binary-output channel with `P(0|0) = zero_given_zero` and
    /// `P(0|1) = zero_given_one`.
    pub fn binary(from: Var, to: Var, zero_given_zero: f64, zero_given_one: f64) -> Result<Self> {
        check_unit("P(0|0)", zero_given_zero)?;
        check_unit("P(0|1)", zero_given_one)?;
        CondChannel::new(
            vec![Dim::new(from, 2)],
            vec![Dim::new(to, 2)],
            vec![zero_given_zero, 1.0 - zero_given_zero, zero_given_one, 1.0 - zero_given_one],
        )
    }

    pub fn identity(from: Var, to: Var, size: usize) -> Result<Self> {
        CondChannel::from_fn(vec![Dim::new(from, size)], vec![Dim::new(to, size)], |i, o| {
            f64::from(u8::from(i[0] == o[0]))
        })
    }

    /// Channel whose output is `symbol` regardless of the input.
    pub fn constant(inputs: Vec<Dim>, output: Dim, symbol: usize) -> Result<Self> {
        if symbol >= output.size {
            return validation(format!("symbol {symbol} outside alphabet of {}", output.var));
        }
        CondChannel::from_fn(inputs, vec![output], |_, o| f64::from(u8::from(o[0] == symbol)))
    }

    /// Conditional law `P(outputs | inputs)` read off a joint. Rows whose
    /// conditioning event has zero mass are filled uniformly; the returned
    /// vector holds the input marginal so callers can tell them apart.
    pub fn from_joint(joint: &JointTensor, inputs: &[Var], outputs: &[Var]) -> Result<(Self, Vec<f64>)> {
        let mut all = inputs.to_vec();
        all.extend_from_slice(outputs);
        let m = joint.marginalize(&all)?;
        let in_dims: Vec<Dim> = m.dims()[..inputs.len()].to_vec();
        let out_dims: Vec<Dim> = m.dims()[inputs.len()..].to_vec();
        if out_dims.is_empty() {
            return validation("channel needs at least one output variable");
        }
        let n_out = product_size(&out_dims);
        let mut rows = Vec::with_capacity(m.mass().len());
        let mut marginal = Vec::with_capacity(product_size(&in_dims));
        for block in m.mass().chunks(n_out) {
            let s: f64 = block.iter().sum();
            marginal.push(s);
            if s > 0.0 {
                rows.extend(block.iter().map(|p| p / s));
            } else {
                rows.extend(std::iter::repeat_n(1.0 / n_out as f64, n_out));
            }
        }
        // renormalise rounding so the rows pass validation
        for row in rows.chunks_mut(n_out) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= s);
        }
        Ok((CondChannel::new(in_dims, out_dims, rows)?, marginal))
    }

    pub fn inputs(&self) -> &[Dim] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Dim] {
        &self.outputs
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn input_size(&self) -> usize {
        product_size(&self.inputs)
    }

    pub fn output_size(&self) -> usize {
        product_size(&self.outputs)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.output_size();
        &self.rows[r * n..(r + 1) * n]
    }

    /// `W(out | in)` by flat indices.
    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input * self.output_size() + output]
    }

    /// Largest entrywise difference to `other`, or `None` when shapes or labels differ.
    pub fn max_abs_diff(&self, other: &CondChannel) -> Option<f64> {
        if self.inputs != other.inputs || self.outputs != other.outputs {
            return None;
        }
        Some(self.rows.iter().zip(&other.rows).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Composition `second ∘ first`: feeds the outputs of `first` into `second`.
    pub fn cascade(first: &CondChannel, second: &CondChannel) -> Result<CondChannel> {
        if first.outputs.len() != second.inputs.len() {
            return validation("cascade: second channel's inputs must be the first channel's outputs");
        }
        // position in `first.outputs` of each of `second.inputs`
        let mut map = Vec::with_capacity(second.inputs.len());
        for d in &second.inputs {
            match first.outputs.iter().position(|o| o.var == d.var) {
                Some(k) if first.outputs[k].size == d.size => map.push(k),
                Some(_) => return validation(format!("cascade: alphabet of {} differs between channels", d.var)),
                None => return validation(format!("cascade: {} is not an output of the first channel", d.var)),
            }
        }
        let n_mid = first.output_size();
        let n_out = second.output_size();
        let mut mid_sym = vec![0usize; first.outputs.len()];
        let mut second_row = Vec::with_capacity(n_mid);
        for m in 0..n_mid {
            decode_index(&first.outputs, m, &mut mid_sym);
            let r = second.inputs.iter().zip(&map).fold(0usize, |acc, (d, &k)| acc * d.size + mid_sym[k]);
            second_row.push(r);
        }
        let n_in = first.input_size();
        let mut rows = vec![0.0; n_in * n_out];
        for i in 0..n_in {
            for (m, &r) in second_row.iter().enumerate() {
                let w = first.prob(i, m);
                if w == 0.0 {
                    continue;
                }
                for o in 0..n_out {
                    rows[i * n_out + o] += w * second.prob(r, o);
                }
            }
        }
        for row in rows.chunks_mut(n_out) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|w| *w /= s);
        }
        CondChannel::new(first.inputs.clone(), second.outputs.clone(), rows)
    }
}

fn check_unit(what: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return validation(format!("{what} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

/// Crossover of `BSC(p)` followed by `BSC(q)`: `(1 - 2q) p + q`.
pub fn star(p: f64, q: f64) -> Result<f64> {
    check_unit("crossover p", p)?;
    check_unit("crossover q", q)?;
    Ok((1.0 - 2.0 * q) * p + q)
}

/// Solves `star(p, q) = target` for `p`.
pub fn solve_star(target: f64, q: f64) -> Result<f64> {
    check_unit("target crossover", target)?;
    check_unit("crossover q", q)?;
    let denom = 1.0 - 2.0 * q;
    if denom == 0.0 {
        return domain("solve_star: q = 0.5 makes the cascade independent of p");
    }
    let p = (target - q) / denom;
    const SLACK: f64 = 1e-15;
    if !(-SLACK..=1.0 + SLACK).contains(&p) {
        return domain(format!("solve_star: target {target} is unreachable through BSC({q})"));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Nonnegative per-action costs, indexed by action symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CostFunction {
    costs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for CostFunction {
    type Error = Error;

    fn try_from(c: Vec<f64>) -> Result<Self> {
        CostFunction::new(c)
    }
}

impl From<CostFunction> for Vec<f64> {
    fn from(c: CostFunction) -> Self {
        c.costs
    }
}

impl CostFunction {
    pub fn new(costs: Vec<f64>) -> Result<Self> {
        if costs.is_empty() {
            return validation("cost function over an empty action alphabet");
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return validation(format!("action costs must be finite and nonnegative, got {c}"));
        }
        Ok(CostFunction { costs })
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.costs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.costs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Cost rule of the binary example: `Γ(0) = (q01 + q11) / (q00 + q01 + q10 + q11)`
/// and `Γ(1) = 1 - Γ(0)`, where `q_{x̃a}` is the decoder crossover given `(x̃, a)`.
pub fn default_action_costs(q00: f64, q01: f64, q10: f64, q11: f64) -> Result<CostFunction> {
    for (name, q) in [("q00", q00), ("q01", q01), ("q10", q10), ("q11", q11)] {
        if !q.is_finite() || q < 0.0 {
            return Err(Error::Validation(format!("{name} must be a nonnegative number, got {q}")));
        }
    }
    let total = q01 + q11 + q10 + q00;
    if total == 0.0 {
        return domain("action costs undefined when every crossover is zero");
    }
    let g0 = (q01 + q11) / total;
    CostFunction::new(vec![g0, 1.0 - g0])
}
