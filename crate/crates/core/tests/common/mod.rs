//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use keyregion::channel::CondChannel;
use keyregion::prob::{Dim, FiniteDist, JointTensor, Var};
use keyregion::system::SystemFactors;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use keyregion::prob::Var::{Xt, A, U, V, X, Y, Z};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Flat Dirichlet draw; with `sparse`, each entry is zeroed with probability 1/4.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<f64> {
    loop {
        let mut w: Vec<f64> = (0..n)
            .map(|_| if sparse && rng.random::<f64>() < 0.25 { 0.0 } else { -(1.0 - rng.random::<f64>()).ln() })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            w.iter_mut().for_each(|x| *x /= s);
            // absorb rounding into the largest entry
            let err = 1.0 - w.iter().sum::<f64>();
            let k = (0..n).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
            w[k] += err;
            return w;
        }
    }
}

pub fn dims(spec: &[(Var, usize)]) -> Vec<Dim> {
    spec.iter().map(|&(v, n)| Dim::new(v, n)).collect()
}

pub fn channel(rng: &mut ChaCha8Rng, inputs: &[(Var, usize)], outputs: &[(Var, usize)]) -> CondChannel {
    let n_in: usize = inputs.iter().map(|d| d.1).product();
    let n_out: usize = outputs.iter().map(|d| d.1).product();
    let rows = (0..n_in).flat_map(|_| simplex(rng, n_out, true)).collect();
    CondChannel::new(dims(inputs), dims(outputs), rows).unwrap()
}

pub fn dist(rng: &mut ChaCha8Rng, n: usize) -> FiniteDist {
    FiniteDist::new(simplex(rng, n, false)).unwrap()
}

/// Random joint over `vars` with alphabet sizes in `1..=3`.
pub fn joint(rng: &mut ChaCha8Rng, vars: &[Var]) -> JointTensor {
    let d: Vec<Dim> = vars.iter().map(|&v| Dim::new(v, rng.random_range(1..=3))).collect();
    let n = d.iter().map(|d| d.size).product();
    JointTensor::new(d, simplex(rng, n, true)).unwrap()
}

/// Random partition of `vars` into three nonempty groups and a condition.
pub fn partition(rng: &mut ChaCha8Rng, vars: &[Var]) -> (Vec<Var>, Vec<Var>, Vec<Var>, Vec<Var>) {
    let mut v = vars.to_vec();
    v.shuffle(rng);
    let c_len = rng.random_range(0..=v.len() - 3);
    let c = v.split_off(v.len() - c_len);
    (vec![v[0]], vec![v[1]], v[2..].to_vec(), c)
}

/// Random binary system with general (non-symmetric) factors and binary `U`.
pub fn binary_factors(rng: &mut ChaCha8Rng) -> SystemFactors {
    SystemFactors {
        source: dist(rng, 2),
        enc_meas: channel(rng, &[(X, 2)], &[(Xt, 2)]),
        action: channel(rng, &[(Xt, 2)], &[(A, 2)]),
        meas: channel(rng, &[(X, 2), (Xt, 2), (A, 2)], &[(Y, 2), (Z, 2)]),
        aux_v: channel(rng, &[(Xt, 2), (A, 2)], &[(V, 2)]),
        aux_u: channel(rng, &[(V, 2)], &[(U, 2)]),
    }
}

/// Measurement `(Y, Z)` depends on `(X, A)` only.
pub fn separate_factors(rng: &mut ChaCha8Rng) -> SystemFactors {
    let mut f = binary_factors(rng);
    let base = channel(rng, &[(X, 2), (A, 2)], &[(Y, 2), (Z, 2)]);
    f.meas = CondChannel::from_fn(dims(&[(X, 2), (Xt, 2), (A, 2)]), dims(&[(Y, 2), (Z, 2)]), |i, o| {
        base.prob(i[0] * 2 + i[2], o[0] * 2 + o[1])
    })
    .unwrap();
    f
}

/// `Z` a garbled `Y`: `(A, X~, X) - Y - Z`.
pub fn degraded_factors(rng: &mut ChaCha8Rng) -> SystemFactors {
    let mut f = binary_factors(rng);
    let py = channel(rng, &[(X, 2), (Xt, 2), (A, 2)], &[(Y, 2)]);
    let pz = channel(rng, &[(Y, 2)], &[(Z, 2)]);
    f.meas = CondChannel::from_fn(dims(&[(X, 2), (Xt, 2), (A, 2)]), dims(&[(Y, 2), (Z, 2)]), |i, o| {
        py.prob(i[0] * 4 + i[1] * 2 + i[2], o[0]) * pz.prob(o[0], o[1])
    })
    .unwrap();
    f
}

/// `Z`, `U` and `A` constant.
pub fn collapsed_factors(rng: &mut ChaCha8Rng) -> SystemFactors {
    SystemFactors {
        source: dist(rng, 2),
        enc_meas: channel(rng, &[(X, 2)], &[(Xt, 2)]),
        action: channel(rng, &[(Xt, 2)], &[(A, 1)]),
        meas: channel(rng, &[(X, 2), (Xt, 2), (A, 1)], &[(Y, 2), (Z, 1)]),
        aux_v: channel(rng, &[(Xt, 2), (A, 1)], &[(V, 2)]),
        aux_u: channel(rng, &[(V, 2)], &[(U, 1)]),
    }
}

/// `X` constant, `Y` constant, `Z = X~` uniform.
pub fn counterexample_factors() -> SystemFactors {
    let one = |v| Dim::new(v, 1);
    let two = |v| Dim::new(v, 2);
    SystemFactors {
        source: FiniteDist::new(vec![1.0]).unwrap(),
        enc_meas: CondChannel::new(vec![one(X)], vec![two(Xt)], vec![0.5, 0.5]).unwrap(),
        action: CondChannel::constant(vec![two(Xt)], one(A), 0).unwrap(),
        meas: CondChannel::from_fn(vec![one(X), two(Xt), one(A)], vec![one(Y), two(Z)], |i, o| {
            if o[1] == i[1] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap(),
        aux_v: CondChannel::constant(vec![two(Xt), one(A)], one(V), 0).unwrap(),
        aux_u: CondChannel::constant(vec![one(V)], one(U), 0).unwrap(),
    }
}

/// Mutual information between the row and column index of a dense table, in
/// bits, computed without the library.
pub fn table_mi(p: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..p[0].len()).map(|j| p.iter().map(|r| r[j]).sum()).collect();
    let mut mi = 0.0;
    for (i, r) in p.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            if v > 0.0 {
                mi += v * (v / (rows[i] * cols[j])).log2();
            }
        }
    }
    mi
}
