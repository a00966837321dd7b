//! Exhaustive or sampled checks of median identities.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::ops::{fixed_interval, interval, iterated_median};
use super::TernaryOp;

/// How much of a tuple space to scan.
#[derive(Clone, Debug)]
pub struct CheckPolicy {
    /// Algebras up to this size are scanned exhaustively.
    pub exhaustive_limit: usize,
    /// Sample count for larger algebras.
    pub samples: usize,
    pub seed: u64,
    /// Cap on recorded counterexamples per identity.
    pub max_witnesses: usize,
}

impl Default for CheckPolicy {
    fn default() -> Self {
        CheckPolicy {
            exhaustive_limit: 64,
            samples: 100_000,
            seed: 0,
            max_witnesses: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive { tuples: u64 },
    Sampled { tuples: u64, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub name: String,
    pub coverage: Coverage,
    pub violations: u64,
    pub witnesses: Vec<Vec<usize>>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub m1: IdentityReport,
    pub m2: IdentityReport,
    pub m3: IdentityReport,
}

impl AxiomReport {
    pub fn is_median(&self) -> bool {
        self.m1.holds() && self.m2.holds() && self.m3.holds()
    }

    pub fn m1_defects(&self) -> &[Vec<usize>] {
        &self.m1.witnesses
    }

    pub fn m2_defects(&self) -> &[Vec<usize>] {
        &self.m2.witnesses
    }

    pub fn m3_defects(&self) -> &[Vec<usize>] {
        &self.m3.witnesses
    }

    pub fn first_violation(&self) -> Option<String> {
        [&self.m1, &self.m2, &self.m3]
            .into_iter()
            .find(|r| !r.holds())
            .map(|r| format!("{} fails at {:?}", r.name, r.witnesses.first().unwrap_or(&Vec::new())))
    }
}

pub(crate) fn salt(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Runs `ok` over all `n^arity` tuples, or over seeded random tuples when
/// `n` exceeds the policy limit.
fn scan<F>(name: &str, n: usize, arity: usize, policy: &CheckPolicy, mut ok: F) -> IdentityReport
where
    F: FnMut(&[usize]) -> bool,
{
    let mut tuple = vec![0usize; arity];
    let mut violations = 0u64;
    let mut witnesses = Vec::new();
    let record = |t: &[usize], violations: &mut u64, witnesses: &mut Vec<Vec<usize>>| {
        *violations += 1;
        if witnesses.len() < policy.max_witnesses {
            witnesses.push(t.to_vec());
        }
    };
    let coverage = if n <= policy.exhaustive_limit {
        let mut tuples = 0u64;
        if n > 0 {
            'outer: loop {
                tuples += 1;
                if !ok(&tuple) {
                    record(&tuple, &mut violations, &mut witnesses);
                }
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
        let seed = policy.seed ^ salt(name);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..policy.samples {
            for t in tuple.iter_mut() {
                *t = rng.gen_range(0..n);
            }
            if !ok(&tuple) {
                record(&tuple, &mut violations, &mut witnesses);
            }
        }
        Coverage::Sampled {
            tuples: policy.samples as u64,
            seed: policy.seed,
        }
    };
    IdentityReport {
        name: name.to_string(),
        coverage,
        violations,
        witnesses,
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// (M1) `m(a,a,b) = a`, witnesses `(a, b)`.
pub fn check_m1(op: &impl TernaryOp, policy: &CheckPolicy) -> IdentityReport {
    scan("M1 localisation", op.len(), 2, policy, |t| op.median(t[0], t[0], t[1]) == t[0])
}

/// (M2) invariance under all permutations, witnesses `(a, b, c)`.
pub fn check_m2(op: &impl TernaryOp, policy: &CheckPolicy) -> IdentityReport {
    scan("M2 symmetry", op.len(), 3, policy, |t| {
        let m = op.median(t[0], t[1], t[2]);
        PERMUTATIONS[1..]
            .iter()
            .all(|p| op.median(t[p[0]], t[p[1]], t[p[2]]) == m)
    })
}

/// (M3) `m(m(a,b,c),b,d) = m(a,b,m(c,b,d))`.
pub fn check_m3(op: &impl TernaryOp, policy: &CheckPolicy) -> IdentityReport {
    scan("M3 four-point", op.len(), 4, policy, |t| {
        let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
        op.median(op.median(a, b, c), b, d) == op.median(a, b, op.median(c, b, d))
    })
}

pub fn verify_median_axioms(op: &impl TernaryOp, policy: &CheckPolicy) -> AxiomReport {
    AxiomReport {
        m1: check_m1(op, policy),
        m2: check_m2(op, policy),
        m3: check_m3(op, policy),
    }
}

/// `m(a, m(a,b,c), m(b,c,d)) = m(a,b,c)`.
pub fn check_isbell(op: &impl TernaryOp, policy: &CheckPolicy) -> IdentityReport {
    scan("Isbell", op.len(), 4, policy, |t| {
        let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
        let abc = op.median(a, b, c);
        op.median(a, abc, op.median(b, c, d)) == abc
    })
}

/// `m(m(a,b,c),d,e) = m(a, m(b,d,e), m(c,d,e))`.
pub fn check_five_point(op: &impl TernaryOp, policy: &CheckPolicy) -> IdentityReport {
    scan("five-point", op.len(), 5, policy, |t| {
        let (a, b, c, d, e) = (t[0], t[1], t[2], t[3], t[4]);
        op.median(op.median(a, b, c), d, e) == op.median(a, op.median(b, d, e), op.median(c, d, e))
    })
}

/// Both descriptions of `[a,b]` agree.
pub fn check_interval_equivalence(op: &impl TernaryOp, policy: &CheckPolicy) -> IdentityReport {
    scan("interval equivalence", op.len(), 2, policy, |t| {
        interval(op, t[0], t[1]) == fixed_interval(op, t[0], t[1])
    })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// The iterated median of `k` points does not depend on their order.
/// Tuples are `(x₁, …, x_k, b)`.
pub fn check_iterated_symmetry(op: &impl TernaryOp, k: usize, policy: &CheckPolicy) -> IdentityReport {
    let perms = permutations(k);
    let mut buf = vec![0; k];
    scan(&format!("iterated symmetry k={k}"), op.len(), k + 1, policy, |t| {
        let (xs, b) = t.split_at(k);
        let base = iterated_median(op, xs, b[0]);
        perms.iter().all(|p| {
            for (slot, &i) in buf.iter_mut().zip(p) {
                *slot = xs[i];
            }
            iterated_median(op, &buf, b[0]) == base
        })
    })
}

/// Interval membership bitsets, either precomputed for all pairs or built on
/// demand.
struct Intervals<'a, T: TernaryOp> {
    op: &'a T,
    words: usize,
    table: Option<Vec<u64>>,
}

impl<'a, T: TernaryOp> Intervals<'a, T> {
    fn new(op: &'a T, precompute: bool) -> Self {
        let n = op.len();
        let words = n.div_ceil(64);
        let table = precompute.then(|| {
            let mut table = vec![0u64; n * n * words];
            for a in 0..n {
                for b in 0..n {
                    let base = (a * n + b) * words;
                    for x in 0..n {
                        let m = op.median(a, x, b);
                        table[base + m / 64] |= 1 << (m % 64);
                    }
                }
            }
            table
        });
        Intervals { op, words, table }
    }

    fn get(&self, a: usize, b: usize, out: &mut Vec<u64>) {
        out.clear();
        match &self.table {
            Some(t) => {
                let base = (a * self.op.len() + b) * self.words;
                out.extend_from_slice(&t[base..base + self.words]);
            }
            None => {
                out.resize(self.words, 0);
                for x in 0..self.op.len() {
                    let m = self.op.median(a, x, b);
                    out[m / 64] |= 1 << (m % 64);
                }
            }
        }
    }
}

fn contains(bits: &[u64], x: usize) -> bool {
    bits[x / 64] >> (x % 64) & 1 == 1
}

/// `⋂ₖ [xₖ, b] = [m(x₁,…,x_k; b), b]`, tuples `(x₁, …, x_k, b)`.
pub fn check_interval_intersection(op: &impl TernaryOp, k: usize, policy: &CheckPolicy) -> IdentityReport {
    let intervals = Intervals::new(op, op.len() <= policy.exhaustive_limit);
    let (mut acc, mut cur, mut rhs) = (Vec::new(), Vec::new(), Vec::new());
    scan(&format!("interval intersection k={k}"), op.len(), k + 1, policy, |t| {
        let (xs, b) = t.split_at(k);
        let b = b[0];
        intervals.get(xs[0], b, &mut acc);
        for &x in &xs[1..] {
            intervals.get(x, b, &mut cur);
            for (w, c) in acc.iter_mut().zip(&cur) {
                *w &= c;
            }
        }
        intervals.get(iterated_median(op, xs, b), b, &mut rhs);
        acc == rhs
    })
}

/// For `x₁…x_k ∈ [a,b]`: every `xᵢ ∈ [a, m(x₁,…,x_k; b)]`. Tuples are
/// `(a, b, x₁, …, x_k)`; tuples whose legs leave `[a,b]` are vacuous.
pub fn check_hull_containment(op: &impl TernaryOp, k: usize, policy: &CheckPolicy) -> IdentityReport {
    let intervals = Intervals::new(op, op.len() <= policy.exhaustive_limit);
    let (mut ab, mut ac) = (Vec::new(), Vec::new());
    let n = op.len();
    let name = format!("hull containment k={k}");
    if n <= policy.exhaustive_limit {
        // Enumerate legs inside each interval rather than all of X^k.
        let mut tuples = 0u64;
        let mut violations = 0u64;
        let mut witnesses = Vec::new();
        let mut legs = vec![0usize; k];
        for a in 0..n {
            for b in 0..n {
                intervals.get(a, b, &mut ab);
                let members: Vec<usize> = (0..n).filter(|&x| contains(&ab, x)).collect();
                let m = members.len();
                let mut idx = vec![0usize; k];
                'legs: loop {
                    for (slot, &i) in legs.iter_mut().zip(&idx) {
                        *slot = members[i];
                    }
                    tuples += 1;
                    intervals.get(a, iterated_median(op, &legs, b), &mut ac);
                    if !legs.iter().all(|&x| contains(&ac, x)) {
                        violations += 1;
                        if witnesses.len() < policy.max_witnesses {
                            let mut w = vec![a, b];
                            w.extend_from_slice(&legs);
                            witnesses.push(w);
                        }
                    }
                    let mut pos = k;
                    loop {
                        if pos == 0 {
                            break 'legs;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < m {
                            break;
                        }
                        idx[pos] = 0;
                    }
                }
            }
        }
        return IdentityReport {
            name,
            coverage: Coverage::Exhaustive { tuples },
            violations,
            witnesses,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ salt(&name));
    let mut violations = 0u64;
    let mut witnesses = Vec::new();
    let mut legs = vec![0usize; k];
    for _ in 0..policy.samples {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        for slot in legs.iter_mut() {
            *slot = op.median(a, rng.gen_range(0..n), b);
        }
        intervals.get(a, iterated_median(op, &legs, b), &mut ac);
        if !legs.iter().all(|&x| contains(&ac, x)) {
            violations += 1;
            if witnesses.len() < policy.max_witnesses {
                let mut w = vec![a, b];
                w.extend_from_slice(&legs);
                witnesses.push(w);
            }
        }
    }
    IdentityReport {
        name,
        coverage: Coverage::Sampled {
            tuples: policy.samples as u64,
            seed: policy.seed,
        },
        violations,
        witnesses,
    }
}

/// The `(n+2)`-point identity
/// `m(a, e_{n+1}, m(e₁,…,eₙ; b)) = m(m(a,e_{n+1},e₁), …, m(a,e_{n+1},eₙ); b)`.
/// Witnesses are `(a, b, e₁, …, e_{n+1})`.
///
/// The exhaustive path tabulates the iterated median for every base and
/// deduplicates the projections `x ↦ m(a, e_{n+1}, x)`.
pub fn check_pivot_identity(op: &impl TernaryOp, n: usize, policy: &CheckPolicy) -> IdentityReport {
    assert!(n >= 1, "pivot identity needs at least one leg");
    let size = op.len();
    let name = format!("pivot identity n={n}");
    let witness = |a: usize, b: usize, es: &[usize], last: usize| {
        let mut w = vec![a, b];
        w.extend_from_slice(es);
        w.push(last);
        w
    };
    if size > policy.exhaustive_limit {
        let mut es = vec![0; n];
        let mut projected = vec![0; n];
        return scan(&name, size, n + 3, policy, |t| {
            let (a, b, last) = (t[0], t[1], t[n + 2]);
            es.copy_from_slice(&t[2..n + 2]);
            for (p, &e) in projected.iter_mut().zip(&es) {
                *p = op.median(a, last, e);
            }
            op.median(a, last, iterated_median(op, &es, b)) == iterated_median(op, &projected, b)
        });
    }

    let tuples_per_base = size.pow(n as u32);
    // iterated[b][encoded tuple]
    let mut iterated = vec![0u32; size * tuples_per_base];
    let mut es = vec![0usize; n];
    for b in 0..size {
        for code in 0..tuples_per_base {
            decode(code, size, &mut es);
            iterated[b * tuples_per_base + code] = iterated_median(op, &es, b) as u32;
        }
    }
    let mut rows: Vec<(Vec<u32>, usize, usize)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for a in 0..size {
        for e in 0..size {
            let row: Vec<u32> = (0..size).map(|x| op.median(a, e, x) as u32).collect();
            if seen.insert(row.clone()) {
                rows.push((row, a, e));
            }
        }
    }
    let mut violations = 0u64;
    let mut witnesses = Vec::new();
    for (row, a, last) in &rows {
        for b in 0..size {
            let table = &iterated[b * tuples_per_base..(b + 1) * tuples_per_base];
            for code in 0..tuples_per_base {
                let lhs = row[table[code] as usize];
                let mut projected = 0usize;
                let mut rest = code;
                let mut scale = 1usize;
                for _ in 0..n {
                    projected += row[rest % size] as usize * scale;
                    rest /= size;
                    scale *= size;
                }
                if lhs != table[projected] {
                    // Duplicate rows repeat the same failures; count once per row.
                    violations += 1;
                    if witnesses.len() < policy.max_witnesses {
                        decode(code, size, &mut es);
                        witnesses.push(witness(*a, b, &es, *last));
                    }
                }
            }
        }
    }
    IdentityReport {
        name,
        coverage: Coverage::Exhaustive {
            tuples: (size as u64).pow(n as u32 + 3),
        },
        violations,
        witnesses,
    }
}

fn decode(mut code: usize, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut() {
        *slot = code % base;
        code /= base;
    }
}

/// Every identity above: axioms, Isbell, five-point, the iterated-median
/// laws for `k ∈ {2, 3}` and the pivot identity for `n ≤ 3`.
pub fn check_all(op: &impl TernaryOp, policy: &CheckPolicy) -> Vec<IdentityReport> {
    let mut out = vec![
        check_m1(op, policy),
        check_m2(op, policy),
        check_m3(op, policy),
        check_isbell(op, policy),
        check_five_point(op, policy),
        check_interval_equivalence(op, policy),
    ];
    for k in 2..=3 {
        out.push(check_iterated_symmetry(op, k, policy));
        out.push(check_interval_intersection(op, k, policy));
        out.push(check_hull_containment(op, k, policy));
    }
    for n in 1..=3 {
        out.push(check_pivot_identity(op, n, policy));
    }
    out
}
