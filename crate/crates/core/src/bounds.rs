//! Inner and outer bounds on the key-leakage-storage-cost region.
//!
//! Each evaluator takes one joint (one choice of auxiliaries and action
//! channel) and reports the extremal tuple it certifies: the largest key rate
//! and the smallest leakage and storage rates, together with the expected
//! action cost. All rates are in bits per source symbol.

use serde::{Deserialize, Serialize};

use crate::channel::CostFunction;
use crate::error::{Error, Result};
use crate::prob::{EntropyCache, JointTensor, Var};
use crate::system::{expected_cost, JOINT_ORDER};

use Var::{Xt, A, U, V, X, Y, Z};

/// Largest conditional MI tolerated on the Markov chains of the factorization.
pub const MARKOV_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    /// Generated secret.
    Gs,
    /// Chosen secret.
    Cs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inner,
    Outer,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::Gs => "gs",
            Model::Cs => "cs",
        }
    }
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Inner => "inner",
            Side::Outer => "outer",
        }
    }
}

/// The three candidate privacy-leakage lower bounds of the inner bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageTerms {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl LeakageTerms {
    pub fn max(&self) -> f64 {
        self.l1.max(self.l2).max(self.l3)
    }
}

/// Parameters of the binary example that produced a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub p0: f64,
    pub p1: f64,
}

/// An evaluated `(R_s, R_l, R_w, C)` tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    /// Largest key rate, clamped at zero.
    pub r_s: f64,
    /// The unclamped key-rate expression; negative when the eavesdropper is stronger.
    pub r_s_raw: f64,
    /// Smallest privacy-leakage rate.
    pub r_l: f64,
    /// Smallest storage rate, clamped at zero.
    pub r_w: f64,
    /// The unclamped storage expression.
    pub r_w_raw: f64,
    pub cost: f64,
    pub model: Model,
    pub side: Side,
    pub leakage: LeakageTerms,
    pub params: Option<AuxParams>,
}

fn require_system_joint(joint: &JointTensor) -> Result<()> {
    for v in JOINT_ORDER {
        if joint.position(v).is_none() {
            return Err(Error::Validation(format!("joint is missing variable {v}")));
        }
    }
    Ok(())
}

/// Shared evaluation state: one entropy cache per joint.
struct Evaluator<'a> {
    cache: EntropyCache<'a>,
}

impl<'a> Evaluator<'a> {
    fn new(joint: &'a JointTensor) -> Result<Self> {
        require_system_joint(joint)?;
        Ok(Evaluator { cache: EntropyCache::new(joint) })
    }

    fn i(&mut self, g1: &[Var], g2: &[Var], cond: &[Var]) -> Result<f64> {
        self.cache.cmi(g1, g2, cond)
    }

    fn check_markov(&mut self) -> Result<()> {
        let u_chain = self.i(&[U], &[Xt, X, Y, Z], &[V, A])?;
        let yz_chain = self.i(&[Y, Z], &[U, V], &[X, Xt, A])?;
        let worst = u_chain.max(yz_chain);
        if worst > MARKOV_TOL {
            return Err(Error::Model(format!(
                "joint does not follow the system factorization: I(U;X~,X,Y,Z|V,A) = {u_chain:.3e}, \
                 I(Y,Z;U,V|X,X~,A) = {yz_chain:.3e}"
            )));
        }
        Ok(())
    }

    fn key_rate(&mut self) -> Result<f64> {
        Ok(self.i(&[V], &[Y], &[A, U])? - self.i(&[V], &[Z], &[A, U])?)
    }

    fn leakage(&mut self) -> Result<LeakageTerms> {
        let shared = self.i(&[X], &[A, V, Y], &[])?;
        let l1 = self.i(&[V, X], &[Z], &[A])? + shared - self.i(&[V, X], &[Y], &[A])?;
        let l2 = self.i(&[V, X], &[Z], &[A, U])? + shared - self.i(&[V, X], &[Y], &[A, U])?;
        let l3 = self.i(&[X], &[A, U, Z], &[])?;
        Ok(LeakageTerms { l1, l2, l3 })
    }

    fn outer_leakage(&mut self) -> Result<f64> {
        Ok(self.i(&[X], &[A, V, Y], &[])? - self.i(&[X], &[Y], &[A])?
            + self.i(&[X], &[Z], &[A])?
            + self.i(&[U], &[Y], &[A])?
            - self.i(&[U], &[Z], &[A])?)
    }

    fn gs_storage(&mut self) -> Result<f64> {
        Ok(self.i(&[Xt], &[A], &[])? + self.i(&[V], &[Xt], &[A, Y])?)
    }

    fn cs_storage(&mut self) -> Result<f64> {
        Ok(self.i(&[Xt], &[A, V], &[])? - self.i(&[U], &[Y], &[A])? - self.i(&[V], &[Z], &[A, U])?)
    }

    fn point(&mut self, costs: &CostFunction, model: Model, side: Side) -> Result<RatePoint> {
        self.check_markov()?;
        let r_s_raw = self.key_rate()?;
        let leakage = self.leakage()?;
        let r_l = match side {
            Side::Inner => leakage.max(),
            Side::Outer => self.outer_leakage()?,
        };
        let r_w = match model {
            Model::Gs => self.gs_storage()?,
            Model::Cs => self.cs_storage()?,
        };
        Ok(RatePoint {
            r_s: r_s_raw.max(0.0),
            r_s_raw,
            r_l: r_l.max(0.0),
            r_w: r_w.max(0.0),
            r_w_raw: r_w,
            cost: expected_cost(self.cache.joint(), costs)?,
            model,
            side,
            leakage,
            params: None,
        })
    }
}

/// `l1 = I(V,X;Z|A) + I(X;A,V,Y) - I(V,X;Y|A)`,
/// `l2 = I(V,X;Z|A,U) + I(X;A,V,Y) - I(V,X;Y|A,U)`, `l3 = I(X;A,U,Z)`.
pub fn leakage_terms(joint: &JointTensor) -> Result<LeakageTerms> {
    Evaluator::new(joint)?.leakage()
}

/// Dispatches to the evaluator for `(model, side)`.
pub fn evaluate(joint: &JointTensor, costs: &CostFunction, model: Model, side: Side) -> Result<RatePoint> {
    Evaluator::new(joint)?.point(costs, model, side)
}

/// Generated-secret inner bound:
/// `R_s <= I(V;Y|A,U) - I(V;Z|A,U)`, `R_l >= max(l1, l2, l3)`,
/// `R_w >= I(X~;A) + I(V;X~|A,Y)`.
pub fn gs_inner(joint: &JointTensor, costs: &CostFunction) -> Result<RatePoint> {
    evaluate(joint, costs, Model::Gs, Side::Inner)
}

/// Chosen-secret inner bound; storage `R_w >= I(X~;A,V) - I(U;Y|A) - I(V;Z|A,U)`.
pub fn cs_inner(joint: &JointTensor, costs: &CostFunction) -> Result<RatePoint> {
    evaluate(joint, costs, Model::Cs, Side::Inner)
}

/// Generated-secret outer bound for channels satisfying both less-noisy
/// conditions; leakage
/// `R_l >= I(X;A,V,Y) - I(X;Y|A) + I(X;Z|A) + I(U;Y|A) - I(U;Z|A)`.
pub fn gs_outer(joint: &JointTensor, costs: &CostFunction) -> Result<RatePoint> {
    evaluate(joint, costs, Model::Gs, Side::Outer)
}

/// Chosen-secret outer bound.
pub fn cs_outer(joint: &JointTensor, costs: &CostFunction) -> Result<RatePoint> {
    evaluate(joint, costs, Model::Cs, Side::Outer)
}

/// Sufficient auxiliary alphabet sizes `(|U|, |V|)` of the outer bound.
pub fn cardinality_limits(action_size: usize, xt_size: usize) -> (usize, usize) {
    let base = action_size * xt_size;
    (base + 3, (base + 3) * (base + 2))
}

/// A named information term `I(g1; g2 | cond)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoTerm {
    pub name: String,
    pub g1: Vec<Var>,
    pub g2: Vec<Var>,
    pub cond: Vec<Var>,
}

impl InfoTerm {
    fn new(g1: &[Var], g2: &[Var], cond: &[Var]) -> Self {
        let list = |g: &[Var]| g.iter().map(|v| v.name()).collect::<Vec<_>>().join(",");
        let name = if cond.is_empty() {
            format!("I({};{})", list(g1), list(g2))
        } else {
            format!("I({};{}|{})", list(g1), list(g2), list(cond))
        };
        InfoTerm { name, g1: g1.to_vec(), g2: g2.to_vec(), cond: cond.to_vec() }
    }

    pub fn eval(&self, joint: &JointTensor) -> Result<f64> {
        joint.conditional_mi(&self.g1, &self.g2, &self.cond)
    }
}

/// Every mutual-information term entering the generated-secret inner bound.
/// Terms conditioned on `U` are omitted when `U` is constant in `joint`,
/// since they then coincide with their unconditioned counterparts.
pub fn gs_inner_terms(joint: &JointTensor) -> Vec<InfoTerm> {
    let u_const = joint.size_of(U).is_none_or(|s| s == 1);
    let mut t = vec![
        InfoTerm::new(&[V], &[Y], &[A, U]),
        InfoTerm::new(&[V], &[Z], &[A, U]),
        InfoTerm::new(&[V, X], &[Z], &[A]),
        InfoTerm::new(&[X], &[A, V, Y], &[]),
        InfoTerm::new(&[V, X], &[Y], &[A]),
    ];
    if !u_const {
        t.push(InfoTerm::new(&[V, X], &[Z], &[A, U]));
        t.push(InfoTerm::new(&[V, X], &[Y], &[A, U]));
    }
    t.push(InfoTerm::new(&[X], &[A, U, Z], &[]));
    t.push(InfoTerm::new(&[Xt], &[A], &[]));
    t.push(InfoTerm::new(&[V], &[Xt], &[A, Y]));
    if u_const {
        for term in &mut t {
            term.g2.retain(|v| *v != U);
            term.cond.retain(|v| *v != U);
            *term = InfoTerm::new(&term.g1, &term.g2, &term.cond);
        }
    }
    t
}
