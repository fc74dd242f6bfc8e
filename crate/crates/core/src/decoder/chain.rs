use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Lookup;
use crate::error::{Error, Result};
use crate::tables::SecondOrderModel;

use super::{emission_of, DecodeConfig, Space};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Emission {
    pub prob: f64,
    /// Multiply the log emission by `lambda`.
    pub weighted: bool,
}

impl Emission {
    fn uniform(prob: f64) -> Self {
        Self { prob, weighted: false }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Scorer {
    space: Space,
    lambda: f64,
}

impl Scorer {
    pub fn new(space: Space, lambda: f64) -> Self {
        Self { space, lambda }
    }

    #[inline]
    fn dead(&self) -> f64 {
        match self.space {
            Space::Probability => 0.0,
            Space::Log => f64::NEG_INFINITY,
        }
    }

    #[inline]
    fn alive(&self, score: f64) -> bool {
        score > self.dead()
    }

    #[inline]
    fn emission_term(&self, e: Emission) -> f64 {
        let ln = libm::log(e.prob);
        if e.weighted {
            self.lambda * ln
        } else {
            ln
        }
    }

    #[inline]
    fn start(&self, pi: f64, e: Emission) -> f64 {
        match self.space {
            Space::Probability => pi * e.prob,
            Space::Log => libm::log(pi) + self.emission_term(e),
        }
    }

    #[inline]
    fn step(&self, score: f64, trans: f64) -> f64 {
        match self.space {
            Space::Probability => score * trans,
            Space::Log => score + libm::log(trans),
        }
    }

    #[inline]
    fn emit(&self, score: f64, e: Emission) -> f64 {
        match self.space {
            Space::Probability => score * e.prob,
            Space::Log => score + self.emission_term(e),
        }
    }

    fn any_alive(&self, scores: &[f64]) -> bool {
        scores.iter().any(|&s| self.alive(s))
    }
}

/// A first-order chain with position-dependent tables.
pub(crate) trait Chain {
    fn n_states(&self) -> usize;
    fn len(&self) -> usize;
    fn start(&self, j: usize) -> f64;
    /// Transition into position `t >= 1`.
    fn transition(&self, t: usize, i: usize, j: usize) -> f64;
    fn emission(&self, t: usize, j: usize) -> Emission;
}

pub(crate) struct Path {
    pub states: Vec<usize>,
    pub score: f64,
    pub used_fallback: bool,
}

/// Best predecessor under strict `>`, so the smallest index wins ties.
#[inline]
fn best_predecessor(sc: &Scorer, n: usize, mut score_of: impl FnMut(usize) -> f64) -> (f64, usize) {
    let (mut best, mut arg) = (sc.dead(), 0);
    for i in 0..n {
        let s = score_of(i);
        if s > best {
            best = s;
            arg = i;
        }
    }
    (best, arg)
}

fn argmax(scores: &[f64]) -> usize {
    let mut arg = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[arg] {
            arg = i;
        }
    }
    arg
}

pub(crate) fn run_chain<C: Chain>(c: &C, sc: Scorer, fallback: bool, uniform: f64) -> Result<Path> {
    let (n, len) = (c.n_states(), c.len());
    let mut used_fallback = false;
    let mut delta: Vec<f64> = (0..n).map(|j| sc.start(c.start(j), c.emission(0, j))).collect();
    if !sc.any_alive(&delta) {
        if !fallback {
            return Err(Error::Undecodable { position: 0 });
        }
        used_fallback = true;
        for (j, d) in delta.iter_mut().enumerate() {
            *d = sc.start(c.start(j), Emission::uniform(uniform));
        }
    }

    let mut back = vec![0usize; n * len];
    let mut best = vec![0.0; n];
    let mut next = vec![0.0; n];
    for t in 1..len {
        for j in 0..n {
            let (b, arg) = best_predecessor(&sc, n, |i| sc.step(delta[i], c.transition(t, i, j)));
            best[j] = b;
            back[t * n + j] = arg;
            next[j] = sc.emit(b, c.emission(t, j));
        }
        if !sc.any_alive(&next) {
            if !fallback {
                return Err(Error::Undecodable { position: t });
            }
            used_fallback = true;
            let u = Emission::uniform(uniform);
            for j in 0..n {
                next[j] = sc.emit(best[j], u);
            }
            if !sc.any_alive(&next) {
                let flat = 1.0 / n as f64;
                for j in 0..n {
                    let (b, arg) = best_predecessor(&sc, n, |i| sc.step(delta[i], flat));
                    back[t * n + j] = arg;
                    next[j] = sc.emit(b, u);
                }
            }
        }
        core::mem::swap(&mut delta, &mut next);
    }

    let last = argmax(&delta);
    let mut states = vec![0; len];
    states[len - 1] = last;
    for t in (1..len).rev() {
        states[t - 1] = back[t * n + states[t]];
    }
    Ok(Path { states, score: delta[last], used_fallback })
}

/// Second-order Viterbi; lattice cell `(i, j)` holds the best path whose last
/// two states are `i, j`.
pub(crate) fn run_pairs(
    m: &SecondOrderModel,
    obs: &[Lookup],
    sc: Scorer,
    cfg: &DecodeConfig,
    uniform: f64,
) -> Result<Path> {
    let (n, len) = (m.n_states(), obs.len());
    let oov_weight = cfg.lambda_on_oov;
    let u = Emission::uniform(uniform);
    let mut used_fallback = false;

    let mut first: Vec<f64> = (0..n)
        .map(|j| {
            let e = emission_of(&m.emit1, &m.prefix_emit1, j, obs[0], 0, oov_weight);
            sc.start(m.pi.prob(0, j), e)
        })
        .collect();
    if !sc.any_alive(&first) {
        if !cfg.fallback {
            return Err(Error::Undecodable { position: 0 });
        }
        used_fallback = true;
        for (j, d) in first.iter_mut().enumerate() {
            *d = sc.start(m.pi.prob(0, j), u);
        }
    }
    if len == 1 {
        let last = argmax(&first);
        return Ok(Path { states: vec![last], score: first[last], used_fallback });
    }

    // position 1: bigram transition into pair (i, j)
    let mut delta = vec![0.0; n * n];
    let mut stepped = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let s = sc.step(first[i], m.trans2.prob(i, j));
            stepped[i * n + j] = s;
            let e = emission_of(&m.emit2, &m.prefix_emit2, i * n + j, obs[1], 1, oov_weight);
            delta[i * n + j] = sc.emit(s, e);
        }
    }
    if !sc.any_alive(&delta) {
        if !cfg.fallback {
            return Err(Error::Undecodable { position: 1 });
        }
        used_fallback = true;
        for (d, &s) in delta.iter_mut().zip(&stepped) {
            *d = sc.emit(s, u);
        }
        if !sc.any_alive(&delta) {
            let flat = 1.0 / n as f64;
            for i in 0..n {
                for j in 0..n {
                    delta[i * n + j] = sc.emit(sc.step(first[i], flat), u);
                }
            }
        }
    }

    // back[t][(j, k)] = state at t - 2
    let mut back = vec![0usize; len * n * n];
    let mut next = vec![0.0; n * n];
    for t in 2..len {
        for j in 0..n {
            for k in 0..n {
                let (b, arg) = best_predecessor(&sc, n, |i| {
                    sc.step(delta[i * n + j], m.trans3.prob(i * n + j, k))
                });
                back[(t * n + j) * n + k] = arg;
                stepped[j * n + k] = b;
                let e = emission_of(&m.emit2, &m.prefix_emit2, j * n + k, obs[t], t, oov_weight);
                next[j * n + k] = sc.emit(b, e);
            }
        }
        if !sc.any_alive(&next) {
            if !cfg.fallback {
                return Err(Error::Undecodable { position: t });
            }
            used_fallback = true;
            for (d, &s) in next.iter_mut().zip(&stepped) {
                *d = sc.emit(s, u);
            }
            if !sc.any_alive(&next) {
                let flat = 1.0 / n as f64;
                for j in 0..n {
                    for k in 0..n {
                        let (b, arg) =
                            best_predecessor(&sc, n, |i| sc.step(delta[i * n + j], flat));
                        back[(t * n + j) * n + k] = arg;
                        next[j * n + k] = sc.emit(b, u);
                    }
                }
            }
        }
        core::mem::swap(&mut delta, &mut next);
    }

    // last state first, then the one before it
    let (mut bj, mut bk) = (0, 0);
    for k in 0..n {
        for j in 0..n {
            if delta[j * n + k] > delta[bj * n + bk] {
                bj = j;
                bk = k;
            }
        }
    }
    let mut states = vec![0; len];
    states[len - 1] = bk;
    states[len - 2] = bj;
    for t in (2..len).rev() {
        states[t - 2] = back[(t * n + states[t - 1]) * n + states[t]];
    }
    Ok(Path { states, score: delta[bj * n + bk], used_fallback })
}
