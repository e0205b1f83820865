//! Channel-ordering checks: physical degradedness of the eavesdropper channel
//! and a search for violations of the conditionally less-noisy orderings the
//! outer bounds assume.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::CondChannel;
use crate::error::{validation, Result};
use crate::prob::{Dim, JointTensor, Var};

/// Largest reconstruction error accepted for a degradedness certificate.
pub const CERT_TOL: f64 = 1e-9;
/// A less-noisy gap below this is reported as a violation.
pub const VIOLATION_TOL: f64 = -1e-9;

/// Evidence that `(A, X~, X) - Y - Z` is a Markov chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradednessCertificate {
    /// `P_{Z|Y}`
    pub witness: CondChannel,
    /// Max absolute error of `Σ_y P(y|a,x̃,x) W(z|y)` against `P(z|a,x̃,x)`.
    pub residual: f64,
}

/// Finds a channel `Y -> Z` reproducing the joint's `Z` channel from its `Y`
/// channel, conditioned on `(A, X~, X)`. Conditions of zero mass are skipped.
pub fn check_degraded(joint: &JointTensor) -> Result<Option<DegradednessCertificate>> {
    let ny = joint.size_of(Var::Y).ok_or_else(|| crate::Error::Validation("joint has no Y".into()))?;
    let nz = joint.size_of(Var::Z).ok_or_else(|| crate::Error::Validation("joint has no Z".into()))?;
    let cond = [Var::A, Var::Xt, Var::X];
    let (py, pc) = CondChannel::from_joint(joint, &cond, &[Var::Y])?;
    let (pz, _) = CondChannel::from_joint(joint, &cond, &[Var::Z])?;
    let live: Vec<usize> = (0..pc.len()).filter(|&c| pc[c] > 0.0).collect();

    let m = DMatrix::from_fn(live.len(), ny, |r, y| py.prob(live[r], y));
    let t = DMatrix::from_fn(live.len(), nz, |r, z| pz.prob(live[r], z));

    let mut w = match m.clone().svd(true, true).solve(&t, 1e-13) {
        Ok(w) => w,
        Err(_) => DMatrix::from_element(ny, nz, 1.0 / nz as f64),
    };
    project_rows(&mut w);
    let mut residual = max_residual(&m, &w, &t);
    if residual > CERT_TOL {
        w = fista_stochastic_ls(&m, &t, w);
        residual = max_residual(&m, &w, &t);
    }
    if residual > CERT_TOL {
        return Ok(None);
    }
    let rows = (0..ny).flat_map(|y| (0..nz).map(move |z| (y, z))).map(|(y, z)| w[(y, z)]).collect();
    let witness = CondChannel::new(vec![Dim::new(Var::Y, ny)], vec![Dim::new(Var::Z, nz)], rows)?;
    Ok(Some(DegradednessCertificate { witness, residual }))
}

fn max_residual(m: &DMatrix<f64>, w: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    (m * w - t).abs().max()
}

/// Euclidean projection of every row onto the probability simplex, then an
/// exact renormalisation so rows sum to one to machine precision.
fn project_rows(w: &mut DMatrix<f64>) {
    let mut row = vec![0.0; w.ncols()];
    for r in 0..w.nrows() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = w[(r, c)];
        }
        project_simplex(&mut row);
        for (c, v) in row.iter().enumerate() {
            w[(r, c)] = *v;
        }
    }
}

/// Projection onto `{x >= 0, Σx = 1}` by the sort-and-threshold rule.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cum += uk;
        let t = (cum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let n = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / n);
    }
}

/// Accelerated projected gradient for `min ||M W - T||²` over row-stochastic `W`.
fn fista_stochastic_ls(m: &DMatrix<f64>, t: &DMatrix<f64>, start: DMatrix<f64>) -> DMatrix<f64> {
    let mtm = m.transpose() * m;
    let mtt = m.transpose() * t;
    let lip = mtm.symmetric_eigenvalues().max().max(1e-300);
    let objective = |w: &DMatrix<f64>| (m * w - t).norm_squared();
    let mut w = start.clone();
    let mut y = start;
    let mut step_t = 1.0f64;
    let mut f_prev = objective(&w);
    for it in 0..50_000 {
        let grad = &mtm * &y - &mtt;
        let mut next = &y - grad / lip;
        project_rows(&mut next);
        let f_next = objective(&next);
        if f_next > f_prev {
            // restart momentum
            y = w.clone();
            step_t = 1.0;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * step_t * step_t).sqrt()) / 2.0;
        y = &next + (&next - &w) * ((step_t - 1.0) / t_next);
        w = next;
        step_t = t_next;
        f_prev = f_next;
        if it % 64 == 0 && max_residual(m, &w, t) < 1e-13 {
            break;
        }
    }
    w
}

/// Which conditionally less-noisy statement to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClnDirection {
    /// `X` is less noisy than `Z` given `(A, Y)`; `L - (A, X~, Y) - (X, Z)`.
    XGeZ,
    /// `Z` is less noisy than `Y` given `(A, X)`; `L - (A, X~, X) - (Z, Y)`.
    ZGeY,
}

struct Roles {
    /// Variables `L` may depend on: `(A, X~, other)`.
    parents: [Var; 3],
    /// Conditioning pair `(A, other)`.
    shared: [Var; 2],
    first: Var,
    second: Var,
}

impl ClnDirection {
    fn roles(self) -> Roles {
        match self {
            ClnDirection::XGeZ => {
                Roles { parents: [Var::A, Var::Xt, Var::Y], shared: [Var::A, Var::Y], first: Var::X, second: Var::Z }
            }
            ClnDirection::ZGeY => {
                Roles { parents: [Var::A, Var::Xt, Var::X], shared: [Var::A, Var::X], first: Var::Z, second: Var::Y }
            }
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ClnDirection::XGeZ => "X>=Z|A,Y",
            ClnDirection::ZGeY => "Z>=Y|A,X",
        }
    }
}

/// An auxiliary `L` and its less-noisy gap
/// `I(L; first | shared) - I(L; second | shared)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClnWitness {
    pub l_channel: CondChannel,
    pub gap: f64,
    pub direction: ClnDirection,
}

impl ClnWitness {
    pub fn is_violation(&self) -> bool {
        self.gap < VIOLATION_TOL
    }

    /// Recomputes the gap on the joint extended by the witness channel.
    pub fn reevaluate(&self, joint: &JointTensor) -> Result<f64> {
        let r = self.direction.roles();
        let ext = joint.extend(&self.l_channel)?;
        Ok(ext.conditional_mi_raw(&[Var::L], &[r.first], &r.shared)?
            - ext.conditional_mi_raw(&[Var::L], &[r.second], &r.shared)?)
    }
}

/// Search settings for [`cln_falsify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClnSearch {
    pub direction: ClnDirection,
    pub restarts: usize,
    /// Alphabet size of `L`; defaults to the number of parent symbols.
    pub l_size: Option<usize>,
    pub seed: u64,
    pub max_iters: usize,
}

impl ClnSearch {
    pub fn new(direction: ClnDirection) -> Self {
        ClnSearch { direction, restarts: 50, l_size: None, seed: 0, max_iters: 400 }
    }
}

/// The gap objective on a fixed joint, with its gradient.
///
/// With `B` the shared pair, `gap = H(L|second,B) - H(L|first,B)`.
struct GapProblem {
    n_parent: usize,
    n_l: usize,
    n_shared: usize,
    n_first: usize,
    n_second: usize,
    /// shared index of each parent symbol
    shared_of: Vec<usize>,
    /// `P(c, f)`, row-major
    p_cf: Vec<f64>,
    /// `P(c, s)`, row-major
    p_cs: Vec<f64>,
}

impl GapProblem {
    fn new(joint: &JointTensor, roles: &Roles, n_l: usize) -> Result<Self> {
        let sizes: Vec<usize> = roles
            .parents
            .iter()
            .chain([&roles.first, &roles.second])
            .map(|&v| joint.size_of(v).ok_or_else(|| crate::Error::Validation(format!("joint has no {v}"))))
            .collect::<Result<_>>()?;
        let (na, nxt, no, nf, ns) = (sizes[0], sizes[1], sizes[2], sizes[3], sizes[4]);
        let m =
            joint.marginalize(&[roles.parents[0], roles.parents[1], roles.parents[2], roles.first, roles.second])?;
        let n_parent = na * nxt * no;
        let mut p_cf = vec![0.0; n_parent * nf];
        let mut p_cs = vec![0.0; n_parent * ns];
        for c in 0..n_parent {
            for f in 0..nf {
                for s in 0..ns {
                    let p = m.mass()[(c * nf + f) * ns + s];
                    p_cf[c * nf + f] += p;
                    p_cs[c * ns + s] += p;
                }
            }
        }
        let shared_of = (0..n_parent).map(|c| (c / (nxt * no)) * no + c % no).collect();
        Ok(GapProblem { n_parent, n_l, n_shared: na * no, n_first: nf, n_second: ns, shared_of, p_cf, p_cs })
    }

    /// `Q(b, k, l) = Σ_{c ∈ b} P(c, k) W(c, l)` for `k` over an observed variable.
    fn mix(&self, p_ck: &[f64], nk: usize, w: &[f64]) -> Vec<f64> {
        let nl = self.n_l;
        let mut q = vec![0.0; self.n_shared * nk * nl];
        for c in 0..self.n_parent {
            let b = self.shared_of[c];
            for k in 0..nk {
                let p = p_ck[c * nk + k];
                if p == 0.0 {
                    continue;
                }
                let dst = &mut q[(b * nk + k) * nl..(b * nk + k + 1) * nl];
                for (d, wl) in dst.iter_mut().zip(&w[c * nl..(c + 1) * nl]) {
                    *d += p * wl;
                }
            }
        }
        q
    }

    /// `H(L | K, B)` from `Q(b, k, l)`.
    fn cond_entropy(&self, q: &[f64]) -> f64 {
        let mut h = 0.0;
        for block in q.chunks(self.n_l) {
            let tot: f64 = block.iter().sum();
            if tot <= 0.0 {
                continue;
            }
            for &v in block {
                if v > 0.0 {
                    h -= v * (v / tot).log2();
                }
            }
        }
        h
    }

    fn gap(&self, w: &[f64]) -> f64 {
        let q_first = self.mix(&self.p_cf, self.n_first, w);
        let q_second = self.mix(&self.p_cs, self.n_second, w);
        self.cond_entropy(&q_second) - self.cond_entropy(&q_first)
    }

    /// `∂gap/∂W(c,l) = -Σ_s P(c,s) log P(l|s,b) + Σ_f P(c,f) log P(l|f,b)`.
    fn gradient(&self, w: &[f64], grad: &mut [f64]) {
        let nl = self.n_l;
        let log_cond = |q: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; q.len()];
            for (block, dst) in q.chunks(nl).zip(out.chunks_mut(nl)) {
                let tot: f64 = block.iter().sum();
                for (v, d) in block.iter().zip(dst.iter_mut()) {
                    *d = if tot > 0.0 { (v.max(1e-300) / tot).log2() } else { 0.0 };
                }
            }
            out
        };
        let lf = log_cond(&self.mix(&self.p_cf, self.n_first, w));
        let ls = log_cond(&self.mix(&self.p_cs, self.n_second, w));
        grad.iter_mut().for_each(|g| *g = 0.0);
        for c in 0..self.n_parent {
            let b = self.shared_of[c];
            let g = &mut grad[c * nl..(c + 1) * nl];
            for s in 0..self.n_second {
                let p = self.p_cs[c * self.n_second + s];
                if p == 0.0 {
                    continue;
                }
                let row = &ls[(b * self.n_second + s) * nl..(b * self.n_second + s + 1) * nl];
                g.iter_mut().zip(row).for_each(|(gi, lv)| *gi -= p * lv);
            }
            for f in 0..self.n_first {
                let p = self.p_cf[c * self.n_first + f];
                if p == 0.0 {
                    continue;
                }
                let row = &lf[(b * self.n_first + f) * nl..(b * self.n_first + f + 1) * nl];
                g.iter_mut().zip(row).for_each(|(gi, lv)| *gi += p * lv);
            }
        }
    }

    fn project(&self, w: &mut [f64]) {
        for row in w.chunks_mut(self.n_l) {
            project_simplex(row);
        }
    }

    /// Projected gradient descent with backtracking from `w`.
    fn descend(&self, mut w: Vec<f64>, max_iters: usize) -> (Vec<f64>, f64) {
        let mut f = self.gap(&w);
        let mut grad = vec![0.0; w.len()];
        let mut step = 1.0;
        for _ in 0..max_iters {
            self.gradient(&w, &mut grad);
            let mut accepted = None;
            while step > 1e-12 {
                let mut cand: Vec<f64> = w.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
                self.project(&mut cand);
                let (mut lin, mut sq) = (0.0, 0.0);
                for ((c, x), g) in cand.iter().zip(&w).zip(&grad) {
                    lin += g * (c - x);
                    sq += (c - x) * (c - x);
                }
                let fc = self.gap(&cand);
                if fc <= f + lin + sq / (2.0 * step) + 1e-15 {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((cand, fc)) => {
                    let improvement = f - fc;
                    w = cand;
                    f = fc;
                    step = (step * 2.0).min(1e3);
                    if improvement < 1e-14 {
                        break;
                    }
                }
                None => break,
            }
        }
        (w, f)
    }
}

/// Runs the multistart search and returns the best auxiliary found, whether
/// or not it violates the ordering.
pub fn cln_search(joint: &JointTensor, search: &ClnSearch) -> Result<ClnWitness> {
    if search.restarts == 0 {
        return validation("cln search needs at least one restart");
    }
    let roles = search.direction.roles();
    let parent_dims: Vec<Dim> = roles
        .parents
        .iter()
        .map(|&v| {
            joint
                .size_of(v)
                .map(|s| Dim::new(v, s))
                .ok_or_else(|| crate::Error::Validation(format!("joint has no {v}")))
        })
        .collect::<Result<_>>()?;
    let n_parent: usize = parent_dims.iter().map(|d| d.size).product();
    let n_l = search.l_size.unwrap_or(n_parent);
    if n_l < 2 {
        return validation(format!("alphabet of L must have at least 2 symbols, got {n_l}"));
    }
    let problem = GapProblem::new(joint, &roles, n_l)?;

    let (best_w, best_gap) = (0..search.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
            rng.set_stream(r as u64);
            let mut w = Vec::with_capacity(n_parent * n_l);
            for _ in 0..n_parent {
                let row: Vec<f64> = (0..n_l).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                let s: f64 = row.iter().sum();
                w.extend(row.iter().map(|x| x / s));
            }
            let (w, g) = problem.descend(w, search.max_iters);
            (r, w, g)
        })
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .map(|(_, w, g)| (w, g))
        .expect("at least one restart");

    let l_channel = CondChannel::new(parent_dims, vec![Dim::new(Var::L, n_l)], best_w)?;
    Ok(ClnWitness { l_channel, gap: best_gap, direction: search.direction })
}

/// Heuristic falsifier: returns an auxiliary whose gap is below
/// [`VIOLATION_TOL`], or `None`. `None` does not prove the ordering holds.
pub fn cln_falsify(joint: &JointTensor, search: &ClnSearch) -> Result<Option<ClnWitness>> {
    let best = cln_search(joint, search)?;
    Ok(best.is_violation().then_some(best))
}
