//! The pipelines behind the command-line tool, returning reports instead of
//! printing.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::constructions::{gamma_path, grid_window, path_tree, sec5_endpoints, sec5_space, star_tree, subdivided_sec5};
use crate::error::{Error, Result};
use crate::ledger::ConstantLedger;
use crate::median::graph::{rank_brute_force, BRUTE_FORCE_LIMIT};
use crate::median::identities::{verify_median_axioms, CheckPolicy};
use crate::median::MedianGraph;
use crate::scalar::{Exact, Scalar};
use crate::space::CoarseSpace;
use crate::terms::{free_median_algebra, FreeOptions};
use crate::verify::{
    check_m1_m2, corner_search, empirical_h, fit_affine_control, five_point_defect, geodesic_set, gromov_delta,
    hausdorff, interval_dichotomy, interval_points, iterated_defects, kappa4, labels_json, ControlMode, ScanBudget,
};

/// First line of every CSV file written by the tool.
pub const CSV_SCHEMA: &str = "# medianlab-csv v1";

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Points up to which quadruple scans are exhaustive.
    pub sample_cap: usize,
    pub samples: usize,
    /// Subsets drawn per empirical `H(p)`.
    pub h_samples: usize,
    /// Absolute tolerance for floating metrics in geodesic tests.
    pub tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 0,
            sample_cap: 150,
            samples: 200_000,
            h_samples: 64,
            tolerance: 1e-9,
        }
    }
}

impl RunOptions {
    pub fn budget(&self) -> ScanBudget {
        ScanBudget {
            exhaustive_points: self.sample_cap,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

/// A deterministic payload plus wall times kept apart from it.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub input_digest: String,
    pub seed: u64,
    pub payload: Value,
    pub timings: Vec<(String, f64)>,
    #[serde(skip)]
    pub csv: Option<String>,
}

impl RunReport {
    fn new(command: impl Into<String>, input: &[u8], seed: u64) -> Self {
        RunReport {
            command: command.into(),
            input_digest: hex::encode(Sha256::digest(input)),
            seed,
            payload: Value::Null,
            timings: Vec::new(),
            csv: None,
        }
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push((phase.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    /// Everything except timings.
    pub fn deterministic_json(&self) -> Value {
        json!({
            "command": self.command,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "payload": self.payload,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.deterministic_json();
        v["timings"] = Value::Object(
            self.timings
                .iter()
                .map(|(k, t)| (k.clone(), json!(t)))
                .collect(),
        );
        v
    }
}

/// The free median algebra on `p` generators with its representatives and rank.
pub fn free_algebra(p: usize, options: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::new(format!("free-algebra {p}"), format!("free-algebra p={p}").as_bytes(), options.seed);
    let free = report.timed("closure", || free_median_algebra(p, FreeOptions::default()))?;
    let graph = report.timed("rank", || MedianGraph::new(&free.algebra))?;
    let brute = if free.len() <= BRUTE_FORCE_LIMIT {
        Some(rank_brute_force(&free.algebra)?)
    } else {
        None
    };
    report.payload = json!({
        "p": p,
        "element_count": free.len(),
        "rank": graph.rank(),
        "rank_brute_force": brute,
        "terms": free.representatives.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "algebra": free.algebra.to_json()?,
    });
    Ok(report)
}

/// Measured constants of a space, the ledger they feed and a verdict per axiom.
pub fn verify<S: Scalar>(space: &CoarseSpace<S>, input: &[u8], options: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::new("verify", input, options.seed);
    let budget = options.budget();
    let k0 = report.timed("kappa0", || check_m1_m2(space, &budget));
    let fit = report.timed("affine control", || fit_affine_control(space, ControlMode::OneVariable, &budget));
    let k4 = report.timed("kappa4", || kappa4(space, &budget));
    let k5 = report.timed("five-point", || five_point_defect(space, &budget));
    let h_budget = ScanBudget {
        samples: options.h_samples,
        ..budget
    };
    let mut h = Vec::new();
    for p in 3..=5 {
        let measured = if p <= space.len() {
            Some(report.timed(&format!("H({p})"), || empirical_h(space, p, true, &h_budget))?)
        } else {
            None
        };
        h.push(measured);
    }
    let h_value = |i: usize| h[i].as_ref().map_or(S::zero(), |m| m.value);
    let (k, h0) = fit.frontier.first().copied().unwrap_or((S::zero(), S::zero()));
    let ledger = ConstantLedger::new(k, h0, h_value(0), h_value(1), h_value(2));
    let iterated = report.timed("iterated", || iterated_defects(space, 2, &budget))?;
    let axioms = report.timed("median axioms", || {
        verify_median_axioms(
            space,
            &CheckPolicy {
                seed: options.seed,
                ..CheckPolicy::default()
            },
        )
    });

    let verdict = |name: &str, measured: S, bound: S, witness: Value| {
        json!({
            "axiom": name,
            "measured": measured.to_json(),
            "bound": bound.to_json(),
            "pass": measured <= bound || measured.close_to(bound, options.tolerance),
            "witness": witness,
        })
    };
    let witness = |w: &Option<Vec<usize>>| w.as_ref().map_or(Value::Null, |w| labels_json(space, w));
    let k0_witness = if k0.m1.value >= k0.m2.value { &k0.m1.witness } else { &k0.m2.witness };
    report.payload = json!({
        "points": space.len(),
        "kappa0": {"m1": k0.m1.to_json(space), "m2": k0.m2.to_json(space), "value": k0.value().to_json()},
        "affine_control": fit.to_json(),
        "kappa4": k4.to_json(space),
        "five_point": k5.to_json(space),
        "empirical_h": {
            "3": h[0].as_ref().map(|m| m.to_json(space)),
            "4": h[1].as_ref().map(|m| m.to_json(space)),
            "5": h[2].as_ref().map(|m| m.to_json(space)),
        },
        "iterated": {
            "n": 2,
            "pivot": iterated.pivot.to_json(space),
            "projection": iterated.projection.to_json(space),
        },
        "ledger": ledger.to_json(),
        "exact_median_axioms": {
            "pass": axioms.is_median(),
            "first_violation": axioms.first_violation(),
        },
        "axioms": [
            verdict("kappa0", k0.value(), ledger.kappa0, witness(k0_witness)),
            verdict("kappa4", k4.value, ledger.kappa4, witness(&k4.witness)),
            verdict("kappa5", k5.value, ledger.kappa5, witness(&k5.witness)),
            verdict("iterated pivot C_2", iterated.pivot.value, ledger.c_n[1], witness(&iterated.pivot.witness)),
            verdict("iterated projection D_2", iterated.projection.value, ledger.d_n[1], witness(&iterated.projection.witness)),
        ],
    });
    Ok(report)
}

/// Space families swept by [`rank_scan`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// The ℓ¹ grid on `[0,n]²`.
    Grid,
    /// A path with `n+1` vertices.
    Path,
    /// A star with `n` leaves.
    Star,
    /// The weighted window for `n` with margin 1.
    Sec5,
    /// Its subdivision.
    Subdivided,
}

impl Family {
    pub fn build<S: Scalar>(self, n: usize) -> Result<CoarseSpace<S>> {
        match self {
            Family::Grid => grid_window(n as i64),
            Family::Path => path_tree(n + 1),
            Family::Star => star_tree(n),
            Family::Sec5 => sec5_space(n as i64, 1),
            Family::Subdivided => subdivided_sec5(n as i64, 1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Grid => "grid",
            Family::Path => "path",
            Family::Star => "star",
            Family::Sec5 => "sec5",
            Family::Subdivided => "subdivided",
        }
    }
}

/// Least-squares line through the points with its coefficient of
/// determination; a constant response counts as a perfect fit.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, ys.first().copied().unwrap_or(0.0), 1.0);
    }
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

/// Best corner separation per window and leg count, with a growth fit per leg
/// count.
pub fn rank_scan(family: Family, ks: &[usize], lambda: f64, windows: &[usize], options: &RunOptions) -> Result<RunReport> {
    let input = format!("rank-scan family={} k={ks:?} lambda={lambda} windows={windows:?}", family.name());
    let mut report = RunReport::new(input.clone(), input.as_bytes(), options.seed);
    let budget = options.budget();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["family", "window", "points", "k", "lambda", "separation", "anchor", "opposite", "legs", "coverage"])?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &k in ks {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &w in windows {
            let space: CoarseSpace<f64> = family.build(w)?;
            let cert = report.timed(&format!("{} n={w} k={k}", family.name()), || corner_search(&space, k, lambda, &budget))?;
            let legs: Vec<String> = cert.legs.iter().map(|&e| space.label(e).to_string()).collect();
            let coverage = serde_json::to_string(&cert.coverage)?;
            writer.write_record([
                family.name().to_string(),
                w.to_string(),
                space.len().to_string(),
                k.to_string(),
                lambda.to_string(),
                cert.separation.to_string(),
                space.label(cert.anchor).to_string(),
                space.label(cert.opposite).to_string(),
                legs.join(" "),
                coverage,
            ])?;
            xs.push(w as f64);
            ys.push(cert.separation);
            rows.push(json!({"window": w, "k": k, "certificate": cert.to_json(&space)}));
        }
        let (slope, intercept, r2) = least_squares(&xs, &ys);
        fits.push(json!({
            "k": k,
            "slope": slope,
            "intercept": intercept,
            "r_squared": r2,
            "growth": if slope.abs() < 0.5 { "bounded" } else { "linear" },
        }));
    }
    report.payload = json!({
        "family": family,
        "lambda": lambda,
        "rows": rows,
        "fits": fits,
    });
    report.csv = Some(csv_with_schema(writer, "rank-scan")?);
    Ok(report)
}

fn csv_with_schema(writer: csv::Writer<Vec<u8>>, name: &str) -> Result<String> {
    let body = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(format!("{CSV_SCHEMA} {name}\n{}", String::from_utf8_lossy(&body)))
}

/// One row of the counterexample table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterexampleRow {
    pub n: i64,
    pub points: usize,
    pub distance: i64,
    pub gamma_length: i64,
    pub geodesic: bool,
    pub hausdorff_gamma: i64,
    pub hausdorff_geodesic_set: i64,
    pub n_plus_one: i64,
}

fn exact_integer(x: Exact) -> Result<i64> {
    if x.is_integer() {
        Ok(x.to_integer())
    } else {
        Err(Error::invalid(format!("expected an integer distance, got {x}")))
    }
}

/// `d(aₙ,bₙ)`, `length(γₙ)` and the two Hausdorff distances to `[aₙ,bₙ]`.
pub fn counterexample_row(n: i64, margin: i64) -> Result<CounterexampleRow> {
    let space: CoarseSpace<Exact> = sec5_space(n, margin)?;
    let (a, b) = sec5_endpoints(n);
    let locate = |c: &[i64; 2]| space.point(c).ok_or_else(|| Error::invalid(format!("({},{}) outside the window", c[0], c[1])));
    let (ia, ib) = (locate(&a)?, locate(&b)?);
    let gamma = gamma_path(n);
    let image = gamma.points.iter().map(locate).collect::<Result<Vec<_>>>()?;
    let interval = interval_points(&space, ia, ib);
    let geodesics = geodesic_set(&space, ia, ib, 0.0);
    let distance = exact_integer(space.d(ia, ib))?;
    Ok(CounterexampleRow {
        n,
        points: space.len(),
        distance,
        gamma_length: gamma.length,
        geodesic: gamma.length == distance,
        hausdorff_gamma: exact_integer(hausdorff(&space, &image, &interval)?)?,
        hausdorff_geodesic_set: exact_integer(hausdorff(&space, &geodesics, &interval)?)?,
        n_plus_one: n + 1,
    })
}

pub fn counterexample(ns: &[i64], margin: i64, options: &RunOptions) -> Result<RunReport> {
    let input = format!("counterexample n={ns:?} margin={margin}");
    let mut report = RunReport::new(input.clone(), input.as_bytes(), options.seed);
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut rows = Vec::new();
    for &n in ns {
        let row = report.timed(&format!("n={n}"), || counterexample_row(n, margin))?;
        writer.serialize(&row)?;
        rows.push(row);
    }
    report.payload = json!({
        "margin": margin,
        "rows": rows,
        "all_match": rows.iter().all(|r| r.geodesic && r.hausdorff_gamma == r.n_plus_one),
    });
    report.csv = Some(csv_with_schema(writer, "counterexample")?);
    Ok(report)
}

/// The four-point constant and its witness.
pub fn delta<S: Scalar>(space: &CoarseSpace<S>, input: &[u8], options: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::new("delta", input, options.seed);
    let budget = options.budget();
    let measured = report.timed("delta", || gromov_delta(space, &budget));
    report.payload = json!({
        "points": space.len(),
        "delta": measured.to_json(space),
    });
    Ok(report)
}

/// The ledger for given control parameters, exact in rational arithmetic.
pub fn report(k: Exact, h0: Exact, h3: Exact, h4: Exact, h5: Exact, depth: usize, options: &RunOptions) -> Result<RunReport> {
    let input = format!("report K={k} H0={h0} H3={h3} H4={h4} H5={h5} depth={depth}");
    let mut out = RunReport::new(input.clone(), input.as_bytes(), options.seed);
    let ledger = ConstantLedger::with_depth(k, h0, h3, h4, h5, depth);
    out.payload = ledger.to_json();
    Ok(out)
}

/// Interval dichotomy scan, used by `verify --intervals`.
pub fn intervals<S: Scalar>(space: &CoarseSpace<S>, input: &[u8], options: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::new("intervals", input, options.seed);
    let scan = report.timed("intervals", || interval_dichotomy(space));
    report.payload = scan.to_json(space);
    Ok(report)
}
