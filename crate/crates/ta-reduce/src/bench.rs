//! Tabakov-Vardi style random tree automata and a benchmark harness that
//! measures how far each reduction method shrinks them.
//!
//! The generator fixes all alphabet symbols at rank 2 plus a single leaf
//! symbol. Transition density `td` and acceptance density `ad` control how
//! many distinct transitions and leaf rules each automaton receives. All
//! sampling is driven by a portable seeded stream, so a given parameter set
//! reproduces the same automaton on every platform.

use crate::reduce::{reduce, Method, ReduceError};
use crate::ta::{Alphabet, Rule, TreeAutomaton};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::time::Instant;
use thiserror::Error;

/// Parameters of the random model.
///
/// Each of the `s` rank-2 symbols receives `round(n * td)` distinct
/// transitions and the single leaf symbol receives `round(n * ad)` distinct
/// leaf rules, rounding half-up. `roots` initial states are drawn without
/// replacement; the model itself leaves the initial-state convention open,
/// so one root is the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvParams {
    /// Number of states, excluding the built-in acceptance state.
    pub n: usize,
    /// Number of rank-2 symbols.
    pub s: usize,
    /// Transition density, a nonnegative real.
    pub td: f64,
    /// Acceptance density in `[0, 1]`.
    pub ad: f64,
    /// Stream seed; equal seeds reproduce the automaton exactly.
    pub seed: u64,
    /// Number of initial states drawn, between 1 and `n`.
    pub roots: usize,
}

impl TvParams {
    /// Parameters with a single initial state.
    pub fn new(n: usize, s: usize, td: f64, ad: f64, seed: u64) -> TvParams {
        TvParams {
            n,
            s,
            td,
            ad,
            seed,
            roots: 1,
        }
    }

    /// Checks ranges and the distinct-transition capacity.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.n == 0 {
            return Err(BenchError::InvalidParams("n must be at least 1"));
        }
        if self.s == 0 {
            return Err(BenchError::InvalidParams("s must be at least 1"));
        }
        if !self.td.is_finite() || self.td < 0.0 {
            return Err(BenchError::InvalidParams(
                "td must be a finite nonnegative number",
            ));
        }
        if !self.ad.is_finite() || !(0.0..=1.0).contains(&self.ad) {
            return Err(BenchError::InvalidParams("ad must lie in [0, 1]"));
        }
        if self.roots == 0 || self.roots > self.n {
            return Err(BenchError::InvalidParams("roots must lie in 1..=n"));
        }
        let cap = (self.n as u128).pow(3);
        if cap > u64::MAX as u128 {
            return Err(BenchError::InvalidParams("n is too large to enumerate"));
        }
        let per_symbol = round_half_up(self.n as f64 * self.td);
        if per_symbol as u128 > cap {
            return Err(BenchError::Capacity {
                what: "transitions per symbol",
                needed: per_symbol,
                available: cap as u64,
            });
        }
        let leaves = round_half_up(self.n as f64 * self.ad);
        if leaves > self.n as u64 {
            return Err(BenchError::Capacity {
                what: "leaf rules",
                needed: leaves,
                available: self.n as u64,
            });
        }
        Ok(())
    }
}

/// Generation or benchmark configuration failure.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("capacity exceeded: {needed} {what} requested, {available} available")]
    Capacity {
        what: &'static str,
        needed: u64,
        available: u64,
    },
    #[error("bad grid {0:?}: expected td=START:END:STEP with step > 0 and end >= start")]
    BadGrid(String),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

/// SplitMix64 output function; mixes a counter into a well-spread word.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

/// Seed for one sample's private stream, derived from the experiment seed
/// and the sample's position in the run.
pub fn stream_seed(seed: u64, grid_idx: u64, sample_idx: u64) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    h = mix64(h ^ mix64(grid_idx.wrapping_add(GOLDEN.wrapping_mul(2))));
    mix64(h ^ mix64(sample_idx.wrapping_add(GOLDEN.wrapping_mul(3))))
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(GOLDEN);
        chunk.copy_from_slice(&mix64(state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Draws `m` distinct values from `0..cap` (Floyd's sampling algorithm).
fn sample_distinct(rng: &mut ChaCha8Rng, cap: u64, m: u64) -> BTreeSet<u64> {
    debug_assert!(m <= cap);
    let mut chosen = BTreeSet::new();
    for j in (cap - m)..cap {
        let pick = rng.gen_range(0..=j);
        if !chosen.insert(pick) {
            chosen.insert(j);
        }
    }
    chosen
}

/// Generates a random automaton; equal parameters give byte-identical
/// output. Rank-2 symbols are named `f0, f1, ...` and the leaf symbol `e`.
pub fn generate(p: &TvParams) -> Result<TreeAutomaton, BenchError> {
    p.validate()?;
    let n = p.n as u64;
    let mut rng = rng_for(p.seed);
    let mut alphabet = Alphabet::new();
    let leaf = alphabet.add("e", 0).expect("fresh symbol name");
    let mut binary = Vec::with_capacity(p.s);
    for i in 0..p.s {
        binary.push(alphabet.add(&format!("f{i}"), 2).expect("fresh symbol name"));
    }
    let state_names: Vec<String> = (0..p.n).map(|q| format!("q{q}")).collect();
    let psi = p.n;

    let mut rules = Vec::new();
    let leaves = round_half_up(p.n as f64 * p.ad);
    for q in sample_distinct(&mut rng, n, leaves) {
        rules.push(Rule {
            source: q as usize,
            symbol: leaf,
            targets: vec![psi],
        });
    }
    let per_symbol = round_half_up(p.n as f64 * p.td);
    for &symbol in &binary {
        for code in sample_distinct(&mut rng, n * n * n, per_symbol) {
            rules.push(Rule {
                source: (code / (n * n)) as usize,
                symbol,
                targets: vec![((code / n) % n) as usize, (code % n) as usize],
            });
        }
    }
    let initials: Vec<usize> = sample_distinct(&mut rng, n, p.roots as u64)
        .into_iter()
        .map(|q| q as usize)
        .collect();

    let comment = format!(
        "n={} s={} td={} ad={} seed={} roots={}",
        p.n, p.s, p.td, p.ad, p.seed, p.roots
    );
    Ok(
        TreeAutomaton::from_parts("tv", alphabet, state_names, initials, rules, vec![comment])
            .expect("generated parts satisfy the structural invariants"),
    )
}

/// An inclusive arithmetic sweep over the transition density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl TdGrid {
    /// Parses `td=START:END:STEP`.
    pub fn parse(text: &str) -> Result<TdGrid, BenchError> {
        let bad = || BenchError::BadGrid(text.to_string());
        let body = text.strip_prefix("td=").ok_or_else(bad)?;
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut values = [0.0f64; 3];
        for (slot, part) in values.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| bad())?;
        }
        let [start, end, step] = values;
        if !start.is_finite() || !end.is_finite() || !step.is_finite() {
            return Err(bad());
        }
        if start < 0.0 || end < start || step <= 0.0 {
            return Err(bad());
        }
        Ok(TdGrid { start, end, step })
    }

    /// A one-point grid.
    pub fn single(td: f64) -> TdGrid {
        TdGrid {
            start: td,
            end: td,
            step: 1.0,
        }
    }

    /// The swept density values, start first.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// A full benchmark run: a density sweep, repeated samples per point, and
/// the methods to compare on every sample.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Model parameters; the `td` field is replaced by each grid point and
    /// the `seed` field seeds the whole run.
    pub base: TvParams,
    pub grid: TdGrid,
    pub methods: Vec<Method>,
    pub samples: usize,
}

/// Mean outcome of one method at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub td: f64,
    pub method: String,
    pub mean_states: f64,
    pub mean_transitions: f64,
    pub mean_ms: f64,
    pub samples: usize,
}

/// Runs the sweep. Samples within a grid point run on parallel workers;
/// aggregation is a fixed-order sum, so results do not depend on the
/// worker count. Everything except `mean_ms` is deterministic in
/// `(config, seed)`.
pub fn experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRow>, BenchError> {
    if config.samples == 0 {
        return Err(BenchError::InvalidParams("samples must be at least 1"));
    }
    if config.methods.is_empty() {
        return Err(BenchError::InvalidParams("at least one method is required"));
    }
    let mut rows = Vec::new();
    for (grid_idx, td) in config.grid.points().into_iter().enumerate() {
        let per_sample: Vec<Vec<(usize, usize, f64)>> = (0..config.samples)
            .into_par_iter()
            .map(|sample_idx| {
                let params = TvParams {
                    td,
                    seed: stream_seed(config.base.seed, grid_idx as u64, sample_idx as u64),
                    ..config.base
                };
                let automaton = generate(&params)?;
                let mut outcomes = Vec::with_capacity(config.methods.len());
                for &method in &config.methods {
                    let start = Instant::now();
                    let reduced = reduce(&automaton, method)?;
                    let millis = start.elapsed().as_secs_f64() * 1e3;
                    let stats = reduced.stats();
                    outcomes.push((stats.states, stats.transitions, millis));
                }
                Ok(outcomes)
            })
            .collect::<Result<_, BenchError>>()?;
        for (m_idx, method) in config.methods.iter().enumerate() {
            let mut states = 0.0;
            let mut transitions = 0.0;
            let mut ms = 0.0;
            for sample in &per_sample {
                let (s, t, m) = sample[m_idx];
                states += s as f64;
                transitions += t as f64;
                ms += m;
            }
            let k = config.samples as f64;
            rows.push(ExperimentRow {
                td,
                method: method.token(),
                mean_states: states / k,
                mean_transitions: transitions / k,
                mean_ms: ms / k,
                samples: config.samples,
            });
        }
    }
    Ok(rows)
}

/// Renders rows as CSV with a fixed header and fixed numeric formatting.
pub fn write_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("td,method,mean_states,mean_transitions,mean_ms,samples\n");
    for r in rows {
        out.push_str(&format!(
            "{:.2},{},{:.4},{:.4},{:.3},{}\n",
            r.td, r.method, r.mean_states, r.mean_transitions, r.mean_ms, r.samples
        ));
    }
    out
}
