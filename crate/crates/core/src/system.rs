//! The seven-variable system model and the binary example instance.
//!
//! A joint is assembled from the factorization
//! `P_X P_{X~|X} P_{A|X~} P_{YZ|X X~ A} P_{V|X~ A} P_{U|V}` and always uses the
//! axis order [`JOINT_ORDER`].

use serde::{Deserialize, Serialize};

use crate::channel::{default_action_costs, solve_star, CondChannel, CostFunction};
use crate::error::{validation, Result};
use crate::prob::{Dim, FiniteDist, JointTensor, Var};

/// Axis order of every joint produced by [`build_joint`].
pub const JOINT_ORDER: [Var; 7] = [Var::U, Var::V, Var::A, Var::Xt, Var::X, Var::Y, Var::Z];

/// Default eavesdropper cascade crossover of the binary example.
pub const DEFAULT_Z_TARGET: f64 = 0.150;

/// Factors of the system model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFactors {
    pub source: FiniteDist,
    /// `X -> X~`
    pub enc_meas: CondChannel,
    /// `X~ -> A`
    pub action: CondChannel,
    /// `(X, X~, A) -> (Y, Z)`, in any input order.
    pub meas: CondChannel,
    /// `(X~, A) -> V`
    pub aux_v: CondChannel,
    /// `V -> U`
    pub aux_u: CondChannel,
}

fn vars_of(dims: &[Dim]) -> Vec<Var> {
    let mut v: Vec<Var> = dims.iter().map(|d| d.var).collect();
    v.sort();
    v
}

fn expect_shape(name: &str, ch: &CondChannel, inputs: &[Var], outputs: &[Var]) -> Result<()> {
    let mut want_in = inputs.to_vec();
    want_in.sort();
    let mut want_out = outputs.to_vec();
    want_out.sort();
    if vars_of(ch.inputs()) != want_in || vars_of(ch.outputs()) != want_out {
        return validation(format!(
            "{name} must map {inputs:?} to {outputs:?}, found {:?} -> {:?}",
            ch.inputs().iter().map(|d| d.var).collect::<Vec<_>>(),
            ch.outputs().iter().map(|d| d.var).collect::<Vec<_>>()
        ));
    }
    Ok(())
}

impl SystemFactors {
    pub fn validate(&self) -> Result<()> {
        expect_shape("enc_meas", &self.enc_meas, &[Var::X], &[Var::Xt])?;
        expect_shape("action", &self.action, &[Var::Xt], &[Var::A])?;
        expect_shape("meas", &self.meas, &[Var::X, Var::Xt, Var::A], &[Var::Y, Var::Z])?;
        expect_shape("aux_v", &self.aux_v, &[Var::Xt, Var::A], &[Var::V])?;
        expect_shape("aux_u", &self.aux_u, &[Var::V], &[Var::U])?;
        Ok(())
    }
}

/// Composes all factors into the joint over [`JOINT_ORDER`].
pub fn build_joint(factors: &SystemFactors) -> Result<JointTensor> {
    factors.validate()?;
    JointTensor::single(Var::X, &factors.source)
        .extend(&factors.enc_meas)?
        .extend(&factors.action)?
        .extend(&factors.meas)?
        .extend(&factors.aux_v)?
        .extend(&factors.aux_u)?
        .permute(&JOINT_ORDER)
}

/// Expected action cost `Σ_a P_A(a) Γ(a)`.
pub fn expected_cost(joint: &JointTensor, costs: &CostFunction) -> Result<f64> {
    let pa = joint.marginal_dist(Var::A)?;
    if pa.len() != costs.len() {
        return validation(format!("cost function covers {} actions but A has {} symbols", costs.len(), pa.len()));
    }
    let c: f64 = pa.probs().iter().zip(costs.costs()).map(|(p, g)| p * g).sum();
    Ok(c.clamp(costs.min(), costs.max()))
}

/// Decoder crossovers `q_{x̃a}` of the binary example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crossovers {
    pub q00: f64,
    pub q01: f64,
    pub q10: f64,
    pub q11: f64,
}

impl Crossovers {
    /// `q_{x̃a}`
    pub fn get(&self, xt: usize, a: usize) -> f64 {
        match (xt, a) {
            (0, 0) => self.q00,
            (0, _) => self.q01,
            (_, 0) => self.q10,
            _ => self.q11,
        }
    }
}

/// How the eavesdropper's extra noise `P_{Z|Y} = BSC(p_eve)` is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Eavesdropper {
    /// `p_eve` solves `p_eve * q11 = z_target`.
    ZTarget(f64),
    PEve(f64),
}

impl Default for Eavesdropper {
    fn default() -> Self {
        Eavesdropper::ZTarget(DEFAULT_Z_TARGET)
    }
}

/// The binary hidden-source example with action-selected BSC measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryExampleConfig {
    pub p_enc: f64,
    pub q: Crossovers,
    #[serde(default)]
    pub eavesdropper: Eavesdropper,
    /// `P(A = 0 | X~ = 0)`
    pub alpha0: f64,
    /// `P(A = 0 | X~ = 1)`
    pub alpha1: f64,
    /// Crossover of `P_{V|X~, A=0}`.
    pub p0: f64,
    /// Crossover of `P_{V|X~, A=1}`.
    pub p1: f64,
    /// Explicit `[Γ(0), Γ(1)]`; the crossover-weighted rule is used when absent.
    #[serde(default)]
    pub costs: Option<Vec<f64>>,
    /// Treat violations of the reliability ordering of `q` as errors.
    #[serde(default)]
    pub strict: bool,
}

impl BinaryExampleConfig {
    /// Channel parameters of the worked example; the auxiliary and action
    /// parameters are placeholders meant to be swept.
    pub fn reference() -> Self {
        BinaryExampleConfig {
            p_enc: 0.05,
            q: Crossovers { q00: 0.010, q01: 0.050, q10: 0.030, q11: 0.060 },
            eavesdropper: Eavesdropper::default(),
            alpha0: 0.5,
            alpha1: 0.5,
            p0: 0.1,
            p1: 0.1,
            costs: None,
            strict: false,
        }
    }

    pub fn with_aux(&self, alpha0: f64, alpha1: f64, p0: f64, p1: f64) -> Self {
        BinaryExampleConfig { alpha0, alpha1, p0, p1, ..self.clone() }
    }

    /// Crossover of `P_{Z|Y}`.
    pub fn p_eve(&self) -> Result<f64> {
        match self.eavesdropper {
            Eavesdropper::ZTarget(t) => solve_star(t, self.q.q11),
            Eavesdropper::PEve(p) => {
                check_prob("p_eve", p)?;
                Ok(p)
            }
        }
    }

    pub fn cost_function(&self) -> Result<CostFunction> {
        match &self.costs {
            Some(c) if c.len() != 2 => validation(format!("costs must list 2 entries, got {}", c.len())),
            Some(c) => CostFunction::new(c.clone()),
            None => default_action_costs(self.q.q00, self.q.q01, self.q.q10, self.q.q11),
        }
    }

    /// Pairs of crossovers that break "A = 0 and X~ = 0 select the more reliable channel".
    pub fn reliability_violations(&self) -> Vec<String> {
        let q = &self.q;
        let mut out = Vec::new();
        for (lo, hi, lo_name, hi_name) in [
            (q.q00, q.q01, "q00", "q01"),
            (q.q10, q.q11, "q10", "q11"),
            (q.q00, q.q10, "q00", "q10"),
            (q.q01, q.q11, "q01", "q11"),
        ] {
            if lo >= hi {
                out.push(format!("expected {lo_name} < {hi_name}, got {lo} >= {hi}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("p_enc", self.p_enc)?;
        for (name, v) in [("q00", self.q.q00), ("q01", self.q.q01), ("q10", self.q.q10), ("q11", self.q.q11)] {
            check_prob(name, v)?;
        }
        check_prob("alpha0", self.alpha0)?;
        check_prob("alpha1", self.alpha1)?;
        check_prob("p0", self.p0)?;
        check_prob("p1", self.p1)?;
        if let Eavesdropper::ZTarget(t) = self.eavesdropper {
            check_prob("z_target", t)?;
        }
        self.cost_function()?;
        if self.strict {
            if let Some(v) = self.reliability_violations().first() {
                return validation(format!("strict reliability ordering: {v}"));
            }
        }
        Ok(())
    }
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return validation(format!("{name} must lie in [0, 1], got {v}"));
    }
    Ok(())
}

/// Factors of the binary example: uniform `X`, `X~ = BSC(p_enc)(X)`, binary
/// action channel, `Y = BSC(q_{x̃a})(X)`, `Z = BSC(p_eve)(Y)`,
/// `V = BSC(p_a)(X~)` given `A = a`, constant `U`.
pub fn build_binary_example(cfg: &BinaryExampleConfig) -> Result<SystemFactors> {
    cfg.validate()?;
    let p_eve = cfg.p_eve()?;
    let q = cfg.q;
    let bin = |v| Dim::new(v, 2);
    let flip = |p: f64, same: bool| if same { 1.0 - p } else { p };

    let meas =
        CondChannel::from_fn(vec![bin(Var::X), bin(Var::Xt), bin(Var::A)], vec![bin(Var::Y), bin(Var::Z)], |i, o| {
            let (x, xt, a) = (i[0], i[1], i[2]);
            let (y, z) = (o[0], o[1]);
            flip(q.get(xt, a), y == x) * flip(p_eve, z == y)
        })?;
    let pa = [cfg.p0, cfg.p1];
    let aux_v =
        CondChannel::from_fn(vec![bin(Var::Xt), bin(Var::A)], vec![bin(Var::V)], |i, o| flip(pa[i[1]], o[0] == i[0]))?;

    Ok(SystemFactors {
        source: FiniteDist::uniform(2)?,
        enc_meas: CondChannel::bsc(Var::X, Var::Xt, cfg.p_enc)?,
        action: CondChannel::binary(Var::Xt, Var::A, cfg.alpha0, cfg.alpha1)?,
        meas,
        aux_v,
        aux_u: CondChannel::constant(vec![bin(Var::V)], Dim::new(Var::U, 1), 0)?,
    })
}

/// Builds the joint of a binary example configuration.
pub fn binary_example_joint(cfg: &BinaryExampleConfig) -> Result<JointTensor> {
    build_joint(&build_binary_example(cfg)?)
}
