//! Measured defects, constants and rank certificates of a coarse space.
//!
//! Every scan either walks all tuples or draws seeded random ones; which of
//! the two happened is recorded in the returned [`Coverage`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{ensure_within, Error, Result};
use crate::median::identities::{salt, Coverage};
use crate::median::ops::{interval, iterated_median};
use crate::median::{majority, TernaryOp};
use crate::scalar::Scalar;
use crate::space::CoarseSpace;
use crate::terms::{free_median_algebra, FreeMedianAlgebra, FreeOptions};

/// Spaces up to this size get an exhaustive corner search.
pub const CORNER_EXHAUSTIVE_LIMIT: usize = 400;

/// Largest cube completed by [`complete_cube`].
pub const CUBE_LEG_LIMIT: usize = 4;

/// Largest arity of the iterated-median defects.
pub const ITERATED_LIMIT: usize = 4;

/// How much of a tuple space to scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScanBudget {
    /// A scan of arity `r` over `N` points is exhaustive when
    /// `N^r ≤ exhaustive_points^4`.
    pub exhaustive_points: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ScanBudget {
    fn default() -> Self {
        ScanBudget {
            exhaustive_points: 150,
            samples: 200_000,
            seed: 0,
        }
    }
}

impl ScanBudget {
    pub fn with_seed(seed: u64) -> Self {
        ScanBudget {
            seed,
            ..Self::default()
        }
    }

    pub fn is_exhaustive(&self, n: usize, arity: u32) -> bool {
        (n as u128).saturating_pow(arity) <= (self.exhaustive_points as u128).saturating_pow(4)
    }

    fn rng(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt(name))
    }

    fn sampled(&self) -> Coverage {
        Coverage::Sampled {
            tuples: self.samples as u64,
            seed: self.seed,
        }
    }
}

/// A maximum over a tuple scan with the first tuple attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Measured<S> {
    pub value: S,
    pub witness: Option<Vec<usize>>,
    pub coverage: Coverage,
}

impl<S: Scalar> Measured<S> {
    /// JSON with witness points written as labels.
    pub fn to_json(&self, space: &CoarseSpace<S>) -> Value {
        json!({
            "value": self.value.to_json(),
            "witness": self.witness.as_ref().map(|w| labels_json(space, w)),
            "coverage": self.coverage,
        })
    }
}

pub fn labels_json<S: Scalar>(space: &CoarseSpace<S>, points: &[usize]) -> Value {
    Value::Array(points.iter().map(|&p| json!(space.label(p).to_string())).collect())
}

/// Maximum of `f` over all `n^arity` tuples in lexicographic order, or over
/// seeded samples; strict improvements only, so the witness is the first
/// maximizer.
fn scan_max<S: Scalar>(
    n: usize,
    arity: usize,
    budget: &ScanBudget,
    name: &str,
    mut f: impl FnMut(&[usize]) -> S,
) -> Measured<S> {
    let mut best = S::zero();
    let mut witness = None;
    let mut tuple = vec![0usize; arity];
    let mut consider = |t: &[usize], best: &mut S, witness: &mut Option<Vec<usize>>| {
        let v = f(t);
        if v > *best {
            *best = v;
            *witness = Some(t.to_vec());
        }
    };
    let coverage = if budget.is_exhaustive(n, arity as u32) {
        let mut tuples = 0u64;
        if n > 0 {
            'outer: loop {
                tuples += 1;
                consider(&tuple, &mut best, &mut witness);
                let mut pos = arity;
                loop {
                    if pos == 0 {
                        break 'outer;
                    }
                    pos -= 1;
                    tuple[pos] += 1;
                    if tuple[pos] < n {
                        break;
                    }
                    tuple[pos] = 0;
                }
            }
        }
        Coverage::Exhaustive { tuples }
    } else {
        let mut rng = budget.rng(name);
        for _ in 0..budget.samples {
            for t in tuple.iter_mut() {
                *t = rng.gen_range(0..n);
            }
            consider(&tuple, &mut best, &mut witness);
        }
        budget.sampled()
    };
    Measured {
        value: best,
        witness,
        coverage,
    }
}

/// Defects of localisation and symmetry; the empirical `κ₀` is the larger.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaZero<S> {
    /// `d(μ(a,a,b), a)` over pairs, witness `(a, b)`.
    pub m1: Measured<S>,
    /// `d(μ(σ(a,b,c)), μ(a,b,c))` over triples and permutations σ.
    pub m2: Measured<S>,
}

impl<S: Scalar> KappaZero<S> {
    pub fn value(&self) -> S {
        self.m1.value.max_of(self.m2.value)
    }
}

pub fn check_m1_m2<S: Scalar>(space: &CoarseSpace<S>, budget: &ScanBudget) -> KappaZero<S> {
    let m1 = scan_max(space.len(), 2, budget, "kappa0 m1", |t| space.d(space.mu(t[0], t[0], t[1]), t[0]));
    let m2 = scan_max(space.len(), 3, budget, "kappa0 m2", |t| {
        let base = space.mu(t[0], t[1], t[2]);
        [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
            .into_iter()
            .map(|(i, j, k)| space.d(space.mu(t[i], t[j], t[k]), base))
            .fold(S::zero(), S::max_of)
    });
    KappaZero { m1, m2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlMode {
    /// Move one argument: `d(μ(a,b,c), μ(a′,b,c))` against `d(a,a′)`.
    OneVariable,
    /// Move all three: against `d(a,a′)+d(b,b′)+d(c,c′)`.
    ThreeVariable,
}

/// Observed displacement pairs and the minimal affine majorants `s ≤ Kt + H₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFit<S> {
    pub mode: ControlMode,
    /// `(t, largest s seen at t)`, sorted by `t`.
    pub envelope: Vec<(S, S)>,
    /// Pairs `(K, H₀)`, `H₀` increasing and `K` strictly decreasing.
    pub frontier: Vec<(S, S)>,
    pub coverage: Coverage,
}

impl<S: Scalar> AffineFit<S> {
    pub fn is_feasible(&self, k: S, h0: S) -> bool {
        self.envelope.iter().all(|&(t, s)| s <= k * t + h0)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode,
            "frontier": self.frontier.iter().map(|&(k, h)| json!({"K": k.to_json(), "H0": h.to_json()})).collect::<Vec<_>>(),
            "distinct_displacements": self.envelope.len(),
            "coverage": self.coverage,
        })
    }
}

fn sort_scalars<S: Scalar>(v: &mut [S]) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
}

fn envelope_of<S: Scalar>(mut pairs: Vec<(S, S)>) -> Vec<(S, S)> {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(S, S)> = Vec::new();
    for (t, s) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == t => last.1 = last.1.max_of(s),
            _ => out.push((t, s)),
        }
    }
    out
}

fn pareto<S: Scalar>(envelope: &[(S, S)]) -> Vec<(S, S)> {
    let floor = envelope
        .iter()
        .filter(|(t, _)| *t == S::zero())
        .map(|&(_, s)| s)
        .fold(S::zero(), S::max_of);
    let mut grid: Vec<S> = std::iter::once(S::zero())
        .chain(envelope.iter().map(|&(_, s)| s))
        .filter(|&h| h >= floor)
        .collect();
    sort_scalars(&mut grid);
    grid.dedup();
    let mut frontier: Vec<(S, S)> = Vec::new();
    for h0 in grid {
        let k = envelope
            .iter()
            .filter(|(t, _)| *t > S::zero())
            .map(|&(t, s)| if s > h0 { (s - h0) / t } else { S::zero() })
            .fold(S::zero(), S::max_of);
        if frontier.last().is_none_or(|&(prev, _)| k < prev) {
            frontier.push((k, h0));
        }
    }
    frontier
}

pub fn fit_affine_control<S: Scalar>(space: &CoarseSpace<S>, mode: ControlMode, budget: &ScanBudget) -> AffineFit<S> {
    let n = space.len();
    match mode {
        ControlMode::OneVariable => {
            // Largest output displacement per moved pair (a, a′).
            let mut worst = vec![S::zero(); n * n];
            let coverage = scan_max(n, 4, budget, "control one-variable", |t| {
                let (a, a2, b, c) = (t[0], t[1], t[2], t[3]);
                let s = space
                    .d(space.mu(a, b, c), space.mu(a2, b, c))
                    .max_of(space.d(space.mu(b, a, c), space.mu(b, a2, c)))
                    .max_of(space.d(space.mu(b, c, a), space.mu(b, c, a2)));
                let slot = &mut worst[a * n + a2];
                *slot = slot.max_of(s);
                S::zero()
            })
            .coverage;
            let pairs = (0..n * n).map(|i| (space.d(i / n, i % n), worst[i])).collect();
            let envelope = envelope_of(pairs);
            AffineFit {
                mode,
                frontier: pareto(&envelope),
                envelope,
                coverage,
            }
        }
        ControlMode::ThreeVariable => {
            let mut pairs = Vec::new();
            let coverage = scan_max(n, 6, budget, "control three-variable", |t| {
                let disp = space.d(t[0], t[3]) + space.d(t[1], t[4]) + space.d(t[2], t[5]);
                let s = space.d(space.mu(t[0], t[1], t[2]), space.mu(t[3], t[4], t[5]));
                pairs.push((disp, s));
                S::zero()
            })
            .coverage;
            let envelope = envelope_of(pairs);
            AffineFit {
                mode,
                frontier: pareto(&envelope),
                envelope,
                coverage,
            }
        }
    }
}

/// `d(μ(μ(a,b,c),b,d), μ(a,b,μ(c,b,d)))`, witness `(a,b,c,d)`.
pub fn kappa4<S: Scalar>(space: &CoarseSpace<S>, budget: &ScanBudget) -> Measured<S> {
    scan_max(space.len(), 4, budget, "kappa4", |t| {
        let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
        space.d(space.mu(space.mu(a, b, c), b, d), space.mu(a, b, space.mu(c, b, d)))
    })
}

/// `d(μ(x,y,μ(z,v,w)), μ(μ(x,y,z),μ(x,y,v),w))`, witness `(x,y,z,v,w)`.
pub fn five_point_defect<S: Scalar>(space: &CoarseSpace<S>, budget: &ScanBudget) -> Measured<S> {
    scan_max(space.len(), 5, budget, "five-point", |t| {
        let (x, y, z, v, w) = (t[0], t[1], t[2], t[3], t[4]);
        space.d(
            space.mu(x, y, space.mu(z, v, w)),
            space.mu(space.mu(x, y, z), space.mu(x, y, v), w),
        )
    })
}

/// Defects of the two iterated-median estimates at arity `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct IteratedDefects<S> {
    pub n: usize,
    /// `d(μ(a,e_{n+1},μ(e₁…eₙ;b)), μ(μ(a,e_{n+1},e₁)…μ(a,e_{n+1},eₙ);b))`,
    /// witness `(a, b, e₁ … e_{n+1})`.
    pub pivot: Measured<S>,
    /// `d(μ(a,b,μ(e₁…eₙ;c)), μ(μ(a,b,e₁)…μ(a,b,eₙ);μ(a,b,c)))`,
    /// witness `(a, b, c, e₁ … eₙ)`.
    pub projection: Measured<S>,
}

pub fn iterated_defects<S: Scalar>(space: &CoarseSpace<S>, n: usize, budget: &ScanBudget) -> Result<IteratedDefects<S>> {
    if n == 0 {
        return Err(Error::invalid("iterated medians need at least one argument"));
    }
    ensure_within("iterated median arity", n, ITERATED_LIMIT)?;
    let mut projected = Vec::with_capacity(n);
    let pivot = scan_max(space.len(), n + 3, budget, "iterated pivot", |t| {
        let (a, b, es) = (t[0], t[1], &t[2..]);
        let pivot = es[n];
        let lhs = space.mu(a, pivot, iterated_median(space, &es[..n], b));
        projected.clear();
        projected.extend(es[..n].iter().map(|&e| space.mu(a, pivot, e)));
        let rhs = iterated_median(space, &projected, b);
        space.d(lhs, rhs)
    });
    let projection = scan_max(space.len(), n + 3, budget, "iterated projection", |t| {
        let (a, b, c, es) = (t[0], t[1], t[2], &t[3..]);
        let lhs = space.mu(a, b, iterated_median(space, es, c));
        projected.clear();
        projected.extend(es.iter().map(|&e| space.mu(a, b, e)));
        let rhs = iterated_median(space, &projected, space.mu(a, b, c));
        space.d(lhs, rhs)
    });
    Ok(IteratedDefects { n, pivot, projection })
}

/// `{μ(a,y,b) : y}`, sorted.
pub fn interval_points<S: Scalar>(space: &CoarseSpace<S>, a: usize, b: usize) -> Vec<usize> {
    interval(space, a, b)
}

/// `{y : d(μ(a,y,b), y) ≤ λ}`, sorted.
pub fn coarse_interval<S: Scalar>(space: &CoarseSpace<S>, a: usize, b: usize, lambda: S) -> Vec<usize> {
    (0..space.len())
        .filter(|&y| space.d(space.mu(a, y, b), y) <= lambda)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateDefect<S> {
    /// `d(μ(a,b,μ(x,y,z)), μ(x,y,z))` over `x,y,z` in the coarse interval.
    pub defect: Measured<S>,
    /// Triples whose gated median falls outside `[a,b]`.
    pub outside_interval: u64,
}

pub fn interval_gate_defect<S: Scalar>(
    space: &CoarseSpace<S>,
    a: usize,
    b: usize,
    lambda: S,
    budget: &ScanBudget,
) -> GateDefect<S> {
    let members = coarse_interval(space, a, b, lambda);
    let mut inside = vec![false; space.len()];
    for p in interval_points(space, a, b) {
        inside[p] = true;
    }
    let mut outside_interval = 0;
    let mut defect = scan_max(members.len(), 3, budget, "interval gate", |t| {
        let (x, y, z) = (members[t[0]], members[t[1]], members[t[2]]);
        let m = space.mu(x, y, z);
        let gated = space.mu(a, b, m);
        if !inside[gated] {
            outside_interval += 1;
        }
        space.d(gated, m)
    });
    if let Some(w) = defect.witness.as_mut() {
        w.iter_mut().for_each(|i| *i = members[*i]);
    }
    GateDefect { defect, outside_interval }
}

/// A pair whose interval and zero-coarse interval differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntervalMismatch {
    pub a: usize,
    pub b: usize,
    pub interval: Vec<usize>,
    pub coarse: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalDichotomy {
    pub pairs: u64,
    pub mismatched_pairs: u64,
    pub first: Option<IntervalMismatch>,
}

impl IntervalDichotomy {
    pub fn coincide(&self) -> bool {
        self.mismatched_pairs == 0
    }

    pub fn to_json<S: Scalar>(&self, space: &CoarseSpace<S>) -> Value {
        json!({
            "pairs": self.pairs,
            "mismatched_pairs": self.mismatched_pairs,
            "first": self.first.as_ref().map(|m| json!({
                "a": space.label(m.a).to_string(),
                "b": space.label(m.b).to_string(),
                "interval": labels_json(space, &m.interval),
                "coarse_interval": labels_json(space, &m.coarse),
            })),
        })
    }
}

/// Compares `[a,b]` with `[a,b]₀` over every ordered pair.
pub fn interval_dichotomy<S: Scalar>(space: &CoarseSpace<S>) -> IntervalDichotomy {
    let n = space.len();
    let mut mismatched_pairs = 0;
    let mut first = None;
    for a in 0..n {
        for b in 0..n {
            let i = interval_points(space, a, b);
            let c = coarse_interval(space, a, b, S::zero());
            if i != c {
                mismatched_pairs += 1;
                if first.is_none() {
                    first = Some(IntervalMismatch {
                        a,
                        b,
                        interval: i,
                        coarse: c,
                    });
                }
            }
        }
    }
    IntervalDichotomy {
        pairs: (n * n) as u64,
        mismatched_pairs,
        first,
    }
}

/// Triples where `μ(x,y,z) ∉ [x,y]`, and the least `κ` with
/// `μ(x,y,z) ∈ [x,y]_κ` for every triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Membership<S> {
    pub outside: u64,
    pub coarse: Measured<S>,
}

pub fn interval_membership<S: Scalar>(space: &CoarseSpace<S>, budget: &ScanBudget) -> Membership<S> {
    let n = space.len();
    let mut outside = 0;
    let mut cached: Option<(usize, usize, Vec<bool>)> = None;
    let coarse = scan_max(n, 3, budget, "interval membership", |t| {
        let (x, y, z) = (t[0], t[1], t[2]);
        let fresh = !matches!(&cached, Some((cx, cy, _)) if (*cx, *cy) == (x, y));
        if fresh {
            let mut inside = vec![false; n];
            for p in interval_points(space, x, y) {
                inside[p] = true;
            }
            cached = Some((x, y, inside));
        }
        let inside = &cached.as_ref().expect("filled").2;
        let m = space.mu(x, y, z);
        if !inside[m] {
            outside += 1;
        }
        space.d(space.mu(x, m, y), m)
    });
    Membership { outside, coarse }
}

/// Least `λ` with `[a,b] ⊆ N_λ([a,x]) ∪ N_λ([x,b])` for all `a, b` and
/// `x ∈ [a,b]`; witness `(a, b, x, w)`.
pub fn thin_interval_lambda<S: Scalar>(space: &CoarseSpace<S>, budget: &ScanBudget) -> Measured<S> {
    let n = space.len();
    let worst_for = |a: usize, b: usize, x: usize, ab: &[usize], ax: &[usize], xb: &[usize]| {
        let mut best = S::zero();
        let mut witness = None;
        for &w in ab {
            let gap = ax
                .iter()
                .chain(xb)
                .map(|&u| space.d(w, u))
                .reduce(S::min_of)
                .unwrap_or_else(S::zero);
            if gap > best {
                best = gap;
                witness = Some(vec![a, b, x, w]);
            }
        }
        (best, witness)
    };
    let mut best = S::zero();
    let mut witness = None;
    let coverage = if budget.is_exhaustive(n, 5) {
        let intervals: Vec<Vec<usize>> = (0..n * n).map(|i| interval_points(space, i / n, i % n)).collect();
        let mut triples = 0u64;
        for a in 0..n {
            for b in 0..n {
                let ab = &intervals[a * n + b];
                for &x in ab {
                    triples += 1;
                    let (v, w) = worst_for(a, b, x, ab, &intervals[a * n + x], &intervals[x * n + b]);
                    if v > best {
                        best = v;
                        witness = w;
                    }
                }
            }
        }
        Coverage::Exhaustive { tuples: triples }
    } else {
        let mut rng = budget.rng("thin interval");
        let rounds = (budget.samples / n.max(1)).max(1);
        for _ in 0..rounds {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let x = space.mu(a, rng.gen_range(0..n), b);
            let ab = interval_points(space, a, b);
            let (v, w) = worst_for(a, b, x, &ab, &interval_points(space, a, x), &interval_points(space, x, b));
            if v > best {
                best = v;
                witness = w;
            }
        }
        Coverage::Sampled {
            tuples: rounds as u64,
            seed: budget.seed,
        }
    };
    Measured {
        value: best,
        witness,
        coverage,
    }
}

/// Legs `e₁…e_k` in `[a,b]` that project pairwise near `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerCertificate<S> {
    pub anchor: usize,
    pub opposite: usize,
    pub legs: Vec<usize>,
    /// `max_{i≠j} d(μ(eᵢ,a,eⱼ), a)`.
    pub lambda_defect: S,
    /// `min_i d(eᵢ, a)`.
    pub separation: S,
    /// `max_i d(μ(a,b,eᵢ), eᵢ)`.
    pub interval_defect: S,
    pub coverage: Coverage,
}

impl<S: Scalar> CornerCertificate<S> {
    pub fn new(space: &CoarseSpace<S>, a: usize, b: usize, legs: Vec<usize>, coverage: Coverage) -> Self {
        let mut lambda_defect = S::zero();
        for (i, &e) in legs.iter().enumerate() {
            for (j, &f) in legs.iter().enumerate() {
                if i != j {
                    lambda_defect = lambda_defect.max_of(space.d(space.mu(e, a, f), a));
                }
            }
        }
        let separation = legs
            .iter()
            .map(|&e| space.d(e, a))
            .reduce(S::min_of)
            .unwrap_or_else(S::zero);
        let interval_defect = legs
            .iter()
            .map(|&e| space.d(space.mu(a, b, e), e))
            .fold(S::zero(), S::max_of);
        CornerCertificate {
            anchor: a,
            opposite: b,
            legs,
            lambda_defect,
            separation,
            interval_defect,
            coverage,
        }
    }

    pub fn to_json(&self, space: &CoarseSpace<S>) -> Value {
        json!({
            "anchor": space.label(self.anchor).to_string(),
            "opposite": space.label(self.opposite).to_string(),
            "legs": labels_json(space, &self.legs),
            "lambda_defect": self.lambda_defect.to_json(),
            "separation": self.separation.to_json(),
            "interval_defect": self.interval_defect.to_json(),
            "coverage": self.coverage,
        })
    }
}

/// Branch and bound over legs taken in order of decreasing distance from `a`.
struct LegSearch<'a, S> {
    space: &'a CoarseSpace<S>,
    a: usize,
    k: usize,
    compatible: &'a [bool],
    candidates: &'a [usize],
    chosen: Vec<usize>,
    best: S,
    found: Option<Vec<usize>>,
}

impl<S: Scalar> LegSearch<'_, S> {
    fn run(&mut self, from: usize) {
        let n = self.space.len();
        for idx in from..self.candidates.len() {
            let e = self.candidates[idx];
            if self.space.d(e, self.a) <= self.best {
                return;
            }
            if !self.chosen.iter().all(|&f| self.compatible[e * n + f]) {
                continue;
            }
            self.chosen.push(e);
            if self.chosen.len() == self.k {
                self.best = self.space.d(e, self.a);
                self.found = Some(self.chosen.clone());
            } else {
                self.run(idx + 1);
            }
            self.chosen.pop();
        }
    }
}

/// Maximizes the separation of `k` legs in an interval with λ-defect at most
/// `lambda`.
pub fn corner_search<S: Scalar>(space: &CoarseSpace<S>, k: usize, lambda: S, budget: &ScanBudget) -> Result<CornerCertificate<S>> {
    if k < 2 {
        return Err(Error::invalid("corner search needs at least two legs"));
    }
    let n = space.len();
    let mut best: Option<(usize, usize, Vec<usize>)> = None;
    let mut best_sep = S::zero();
    let coverage = if n <= CORNER_EXHAUSTIVE_LIMIT {
        let mut compatible = vec![false; n * n];
        let mut tuples = 0u64;
        for a in 0..n {
            for e in 0..n {
                for f in 0..n {
                    compatible[e * n + f] =
                        space.d(space.mu(e, a, f), a) <= lambda && space.d(space.mu(f, a, e), a) <= lambda;
                }
            }
            for b in 0..n {
                let mut candidates: Vec<usize> = interval_points(space, a, b)
                    .into_iter()
                    .filter(|&e| space.d(e, a) > best_sep)
                    .collect();
                if candidates.len() < k {
                    continue;
                }
                tuples += 1;
                candidates.sort_by(|&x, &y| {
                    space
                        .d(y, a)
                        .partial_cmp(&space.d(x, a))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(x.cmp(&y))
                });
                let mut search = LegSearch {
                    space,
                    a,
                    k,
                    compatible: &compatible,
                    candidates: &candidates,
                    chosen: Vec::with_capacity(k),
                    best: best_sep,
                    found: None,
                };
                search.run(0);
                if let Some(legs) = search.found {
                    best_sep = search.best;
                    best = Some((a, b, legs));
                }
            }
        }
        Coverage::Exhaustive { tuples }
    } else {
        let mut rng = budget.rng("corner search");
        let mut legs = vec![0; k];
        for _ in 0..budget.samples {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            for e in legs.iter_mut() {
                *e = space.mu(a, b, rng.gen_range(0..n));
            }
            let cert = CornerCertificate::new(space, a, b, legs.clone(), budget.sampled());
            let distinct = legs.iter().enumerate().all(|(i, e)| !legs[..i].contains(e));
            if distinct && cert.lambda_defect <= lambda && cert.separation > best_sep {
                best_sep = cert.separation;
                best = Some((a, b, legs.clone()));
            }
        }
        budget.sampled()
    };
    let (a, b, legs) = best.unwrap_or((0, 0, vec![0; k]));
    Ok(CornerCertificate::new(space, a, b, legs, coverage))
}

/// A map from the median cube into the space.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeMap<S> {
    pub dimension: usize,
    /// Image of the vertex with bit `i` set iff leg `i+1` is in the subset.
    pub vertices: Vec<usize>,
    /// `max d(μ(σx,σy,σz), σ(maj(x,y,z)))` over vertex triples.
    pub defect: S,
    /// Smallest image distance across a cube edge.
    pub min_adjacent: S,
}

impl<S: Scalar> CubeMap<S> {
    pub fn to_json(&self, space: &CoarseSpace<S>) -> Value {
        json!({
            "dimension": self.dimension,
            "vertices": labels_json(space, &self.vertices),
            "defect": self.defect.to_json(),
            "min_adjacent": self.min_adjacent.to_json(),
        })
    }
}

/// Sends `∅` to `a` and a nonempty subset of legs to their iterated median
/// towards `b`.
pub fn complete_cube<S: Scalar>(space: &CoarseSpace<S>, a: usize, b: usize, legs: &[usize]) -> Result<CubeMap<S>> {
    let k = legs.len();
    ensure_within("cube legs", k, CUBE_LEG_LIMIT)?;
    let vertices: Vec<usize> = (0..1usize << k)
        .map(|mask| {
            let chosen: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| legs[i]).collect();
            if chosen.is_empty() {
                a
            } else {
                iterated_median(space, &chosen, b)
            }
        })
        .collect();
    let size = vertices.len();
    let mut defect = S::zero();
    for x in 0..size {
        for y in 0..size {
            for z in 0..size {
                let image = vertices[majority(x as u64, y as u64, z as u64) as usize];
                defect = defect.max_of(space.d(space.mu(vertices[x], vertices[y], vertices[z]), image));
            }
        }
    }
    let min_adjacent = (0..size)
        .flat_map(|x| (0..k).map(move |i| (x, x ^ 1 << i)))
        .filter(|&(x, y)| x < y)
        .map(|(x, y)| space.d(vertices[x], vertices[y]))
        .reduce(S::min_of)
        .unwrap_or_else(S::zero);
    Ok(CubeMap {
        dimension: k,
        vertices,
        defect,
        min_adjacent,
    })
}

/// A free median algebra on `A` mapped into the space.
#[derive(Clone, Debug)]
pub struct Approximation<S> {
    pub subset: Vec<usize>,
    pub free: FreeMedianAlgebra,
    /// `π`: the `i`-th point of `A` goes to this element of Π.
    pub pi: Vec<usize>,
    /// `λ`: image of every element of Π.
    pub lambda: Vec<usize>,
    /// `max d(λ(m(x,y,z)), μ(λx,λy,λz))` over triples of Π.
    pub h_emp: S,
    pub witness: Option<[usize; 3]>,
}

/// Builds the free algebra needed by [`approximate_subset`]; subsets of size
/// 5 need `allow_five`.
pub fn approximation_algebra(p: usize, allow_five: bool) -> Result<FreeMedianAlgebra> {
    ensure_within("approximated subset size", p, if allow_five { 5 } else { 4 })?;
    free_median_algebra(p, FreeOptions { max_p: 5 })
}

pub fn approximate_subset<S: Scalar>(space: &CoarseSpace<S>, subset: &[usize], allow_five: bool) -> Result<Approximation<S>> {
    if subset.is_empty() {
        return Err(Error::EmptySet);
    }
    let free = approximation_algebra(subset.len(), allow_five)?;
    approximate_with(space, &free, subset)
}

/// [`approximate_subset`] against a prebuilt free algebra.
pub fn approximate_with<S: Scalar>(space: &CoarseSpace<S>, free: &FreeMedianAlgebra, subset: &[usize]) -> Result<Approximation<S>> {
    if subset.len() != free.p {
        return Err(Error::invalid(format!("subset has {} points, algebra {} generators", subset.len(), free.p)));
    }
    if let Some(&bad) = subset.iter().find(|&&p| p >= space.len()) {
        return Err(Error::invalid(format!("point {bad} out of range")));
    }
    let lambda = free.evaluate_all(subset, &mut |&x, &y, &z| space.mu(x, y, z));
    let alg = &free.algebra;
    let size = alg.len();
    let mut h_emp = S::zero();
    let mut witness = None;
    for x in 0..size {
        for y in 0..size {
            for z in 0..size {
                let v = space.d(
                    lambda[alg.median(x, y, z)],
                    space.mu(lambda[x], lambda[y], lambda[z]),
                );
                if v > h_emp {
                    h_emp = v;
                    witness = Some([x, y, z]);
                }
            }
        }
    }
    Ok(Approximation {
        subset: subset.to_vec(),
        free: free.clone(),
        pi: (1..=free.p).map(|i| free.generator(i)).collect(),
        lambda,
        h_emp,
        witness,
    })
}

/// The empirical `H(p)`: largest `H_emp` over `p`-subsets of distinct points,
/// all of them when there are at most `budget.samples`, else seeded samples.
/// Witness is the subset.
pub fn empirical_h<S: Scalar>(space: &CoarseSpace<S>, p: usize, allow_five: bool, budget: &ScanBudget) -> Result<Measured<S>> {
    let n = space.len();
    if p == 0 || p > n {
        return Err(Error::invalid(format!("cannot pick {p} distinct points from {n}")));
    }
    let free = approximation_algebra(p, allow_five)?;
    let mut best = S::zero();
    let mut witness = None;
    let mut consider = |subset: &[usize]| -> Result<()> {
        let approx = approximate_with(space, &free, subset)?;
        if approx.h_emp > best {
            best = approx.h_emp;
            witness = Some(subset.to_vec());
        }
        Ok(())
    };
    let total = binomial(n, p);
    let coverage = if total <= budget.samples as u128 {
        let mut combo: Vec<usize> = (0..p).collect();
        loop {
            consider(&combo)?;
            let Some(i) = (0..p).rev().find(|&i| combo[i] < n - p + i) else { break };
            combo[i] += 1;
            for j in i + 1..p {
                combo[j] = combo[j - 1] + 1;
            }
        }
        Coverage::Exhaustive { tuples: total as u64 }
    } else {
        let mut rng = budget.rng("empirical h");
        for _ in 0..budget.samples {
            let mut subset = sample(&mut rng, n, p).into_vec();
            subset.sort_unstable();
            consider(&subset)?;
        }
        budget.sampled()
    };
    Ok(Measured {
        value: best,
        witness,
        coverage,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Four-point hyperbolicity constant over 4-subsets `a < b < c < d`.
pub fn gromov_delta<S: Scalar>(space: &CoarseSpace<S>, budget: &ScanBudget) -> Measured<S> {
    let n = space.len();
    let delta = |a: usize, b: usize, c: usize, d: usize| {
        let mut sums = [
            space.d(a, b) + space.d(c, d),
            space.d(a, c) + space.d(b, d),
            space.d(a, d) + space.d(b, c),
        ];
        sort_scalars(&mut sums);
        (sums[2] - sums[1]).half()
    };
    let mut best = S::zero();
    let mut witness = None;
    let coverage = if budget.is_exhaustive(n, 4) {
        let mut tuples = 0u64;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        tuples += 1;
                        let v = delta(a, b, c, d);
                        if v > best {
                            best = v;
                            witness = Some(vec![a, b, c, d]);
                        }
                    }
                }
            }
        }
        Coverage::Exhaustive { tuples }
    } else {
        let mut rng = budget.rng("gromov delta");
        for _ in 0..budget.samples {
            let t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            let v = delta(t[0], t[1], t[2], t[3]);
            if v > best {
                best = v;
                let mut w = t.to_vec();
                w.sort_unstable();
                witness = Some(w);
            }
        }
        budget.sampled()
    };
    Measured {
        value: best,
        witness,
        coverage,
    }
}

/// `{z : d(a,z) + d(z,b) = d(a,b)}`; `tolerance` applies to floating metrics
/// only.
pub fn geodesic_set<S: Scalar>(space: &CoarseSpace<S>, a: usize, b: usize, tolerance: f64) -> Vec<usize> {
    let target = space.d(a, b);
    (0..space.len())
        .filter(|&z| (space.d(a, z) + space.d(z, b)).close_to(target, tolerance))
        .collect()
}

pub fn hausdorff<S: Scalar>(space: &CoarseSpace<S>, left: &[usize], right: &[usize]) -> Result<S> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::EmptySet);
    }
    let one_sided = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&x| to.iter().map(|&y| space.d(x, y)).reduce(S::min_of).expect("nonempty"))
            .fold(S::zero(), S::max_of)
    };
    Ok(one_sided(left, right).max_of(one_sided(right, left)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{grid_window, path_tree, sec5_space, star_tree};
    use crate::median::FiniteMedianAlgebra;
    use crate::space::MedianRule;

    fn budget() -> ScanBudget {
        ScanBudget::default()
    }

    #[test]
    fn exact_spaces_have_zero_defects() {
        let g = grid_window::<f64>(2).unwrap();
        assert_eq!(check_m1_m2(&g, &budget()).value(), 0.0);
        assert_eq!(kappa4(&g, &budget()).value, 0.0);
        assert_eq!(five_point_defect(&g, &budget()).value, 0.0);
        let it = iterated_defects(&g, 2, &budget()).unwrap();
        assert_eq!((it.pivot.value, it.projection.value), (0.0, 0.0));
        assert!(interval_dichotomy(&g).coincide());
        assert_eq!(interval_membership(&g, &budget()).outside, 0);
    }

    #[test]
    fn corrupted_table_has_kappa_zero() {
        let g = grid_window::<f64>(1).unwrap();
        let mut table = crate::median::TernaryTable::from_op(&g);
        // μ((0,0),(0,0),(1,1)) = (1,0), at distance 1 from (0,0).
        table.set(0, 0, 3, 1);
        let bad = g.with_rule(MedianRule::table(4, table.data().to_vec()).unwrap()).unwrap();
        let k0 = check_m1_m2(&bad, &budget());
        assert_eq!(k0.m1.value, 1.0);
        assert_eq!(k0.m1.witness, Some(vec![0, 3]));
        assert_eq!(k0.value(), 1.0);
    }

    #[test]
    fn affine_control_on_grid() {
        let g = grid_window::<f64>(3).unwrap();
        let fit = fit_affine_control(&g, ControlMode::OneVariable, &budget());
        assert_eq!(fit.frontier[0], (1.0, 0.0));
        assert_eq!(fit.frontier.last(), Some(&(0.0, 6.0)));
        assert!(fit.is_feasible(1.0, 0.0));
        assert!(!fit.is_feasible(0.9, 0.0));
        let doubled = fit_affine_control(&g.scaled(2.0), ControlMode::OneVariable, &budget());
        let expected: Vec<_> = fit.frontier.iter().map(|&(k, h)| (k, 2.0 * h)).collect();
        assert_eq!(doubled.frontier, expected);
        let three = fit_affine_control(&g, ControlMode::ThreeVariable, &ScanBudget { samples: 20_000, ..budget() });
        assert!(three.is_feasible(1.0, 0.0));
    }

    #[test]
    fn pareto_of_a_handmade_envelope() {
        let env = vec![(1.0, 3.0), (2.0, 4.0), (10.0, 10.0)];
        // H0 = 0 needs K = 3, H0 = 3 needs K = 0.7, H0 = 4 needs 0.6, H0 = 10 needs 0.
        assert_eq!(pareto(&env), vec![(3.0, 0.0), (0.7, 3.0), (0.6, 4.0), (0.0, 10.0)]);
        assert_eq!(pareto(&[(0.0, 2.0), (1.0, 3.0)]), vec![(1.0, 2.0), (0.0, 3.0)]);
    }

    #[test]
    fn grid_thin_interval_and_delta() {
        let g = grid_window::<f64>(4).unwrap();
        let p = |x, y| g.point(&[x, y]).unwrap();
        let thin = thin_interval_lambda(&g, &budget());
        assert_eq!(thin.value, 4.0);
        assert_eq!(thin.witness, Some(vec![p(0, 0), p(4, 4), p(4, 0), p(0, 4)]));
        let delta = gromov_delta(&g, &budget());
        assert_eq!(delta.value, 4.0);
        let mut corners = vec![p(0, 0), p(4, 4), p(4, 0), p(0, 4)];
        corners.sort_unstable();
        assert_eq!(delta.witness, Some(corners));
    }

    #[test]
    fn trees_are_thin_and_hyperbolic() {
        for t in [path_tree::<f64>(6).unwrap(), star_tree::<f64>(4).unwrap()] {
            assert_eq!(thin_interval_lambda(&t, &budget()).value, 0.0);
            assert_eq!(gromov_delta(&t, &budget()).value, 0.0);
            assert_eq!(corner_search(&t, 2, 0.0, &budget()).unwrap().separation, 0.0);
        }
    }

    #[test]
    fn corners_on_the_grid() {
        let g = grid_window::<f64>(8).unwrap();
        let p = |x, y| g.point(&[x, y]).unwrap();
        let cert = corner_search(&g, 2, 0.0, &budget()).unwrap();
        assert_eq!(cert.separation, 8.0);
        assert_eq!((cert.anchor, cert.opposite), (p(0, 0), p(8, 8)));
        assert_eq!(cert.legs, vec![p(8, 0), p(0, 8)]);
        assert_eq!(cert.lambda_defect, 0.0);
        let g4 = grid_window::<f64>(4).unwrap();
        assert_eq!(corner_search(&g4, 3, 0.0, &budget()).unwrap().separation, 0.0);
        assert!(corner_search(&g4, 1, 0.0, &budget()).is_err());
    }

    #[test]
    fn cube_completion() {
        let g = grid_window::<f64>(4).unwrap();
        let p = |x, y| g.point(&[x, y]).unwrap();
        let cube = complete_cube(&g, p(0, 0), p(4, 4), &[p(4, 0), p(0, 4)]).unwrap();
        assert_eq!(cube.vertices, vec![p(0, 0), p(4, 0), p(0, 4), p(4, 4)]);
        assert_eq!((cube.defect, cube.min_adjacent), (0.0, 4.0));
        let edge = complete_cube(&g, p(0, 0), p(4, 4), &[p(2, 1)]).unwrap();
        assert_eq!(edge.vertices, vec![p(0, 0), p(2, 1)]);
        assert_eq!(edge.defect, 0.0);
        let flat = complete_cube(&g, p(1, 1), p(4, 4), &[p(1, 1), p(1, 1)]).unwrap();
        assert!(flat.vertices.iter().all(|&v| v == p(1, 1)));
        assert_eq!(flat.min_adjacent, 0.0);
        assert!(complete_cube(&g, 0, 1, &[1, 2, 3, 4, 5]).is_err());
    }

    #[test]
    fn approximations_of_exact_spaces() {
        let c3 = FiniteMedianAlgebra::median_cube(3).unwrap();
        let space = CoarseSpace::<f64>::from_algebra(&c3).unwrap();
        let approx = approximate_subset(&space, &[1, 2, 4], false).unwrap();
        assert_eq!(approx.h_emp, 0.0);
        for (i, &a) in approx.subset.iter().enumerate() {
            assert_eq!(approx.lambda[approx.pi[i]], a);
        }
        let mut image = approx.lambda.clone();
        image.sort_unstable();
        image.dedup();
        assert_eq!(image, vec![0, 1, 2, 4]);
        assert!(approximate_subset(&space, &[0, 1, 2, 3, 4], false).unwrap_err().is_resource_limit());
        assert_eq!(approximate_subset(&space, &[0, 1, 2, 3, 4], true).unwrap().h_emp, 0.0);
        assert_eq!(empirical_h(&space, 3, false, &budget()).unwrap().value, 0.0);
    }

    #[test]
    fn geodesics_and_hausdorff() {
        let g = grid_window::<f64>(2).unwrap();
        let p = |x, y| g.point(&[x, y]).unwrap();
        let geo = geodesic_set(&g, p(0, 0), p(2, 1), 1e-9);
        assert_eq!(geo.len(), 6);
        assert_eq!(geo, interval_points(&g, p(0, 0), p(2, 1)));
        assert_eq!(geodesic_set(&g, 3, 3, 1e-9), vec![3]);
        assert_eq!(hausdorff(&g, &[3], &[3]).unwrap(), 0.0);
        assert!(hausdorff(&g, &[], &[3]).is_err());

        let s = sec5_space::<f64>(1, 1).unwrap();
        let q = |x, y| s.point(&[x, y]).unwrap();
        let gamma: Vec<usize> = crate::constructions::gamma_path(1).points.iter().map(|c| s.point(c).unwrap()).collect();
        let interval = interval_points(&s, q(2, 2), q(2, 0));
        assert_eq!(hausdorff(&s, &gamma, &interval).unwrap(), 2.0);
    }

    #[test]
    fn gate_defect_on_exact_space() {
        let g = grid_window::<f64>(3).unwrap();
        let gate = interval_gate_defect(&g, 0, 15, 0.0, &budget());
        assert_eq!(gate.defect.value, 0.0);
        assert_eq!(gate.outside_interval, 0);
    }
}
