//! The eight acceptance criteria, one test each. Criterion 8 is split in two
//! because its halves make independent claims.

use medianlab::commands::{counterexample, least_squares, rank_scan, Family, RunOptions};
use medianlab::constructions::{grid_window, path_tree, random_tree, star_tree, subdivided_sec5};
use medianlab::median::graph::rank_brute_force;
use medianlab::median::identities::{check_all, CheckPolicy, Coverage};
use medianlab::median::ops::majority_closure;
use medianlab::terms::{
    canonical_form, enumerate_terms, free_median_algebra, generator_codes, rewrite_path, EtClasses, FreeOptions,
    Rewriter, SearchLimits, Term,
};
use medianlab::verify::{
    check_m1_m2, empirical_h, fit_affine_control, five_point_defect, gromov_delta, interval_dichotomy, kappa4,
    thin_interval_lambda, ControlMode, ScanBudget,
};
use medianlab::{CoarseSpace, ConstantLedger, Exact, FiniteMedianAlgebra, MedianGraph};

fn verdict(criterion: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("criterion {criterion}: PASS");
    } else {
        println!("criterion {criterion}: FAIL");
        panic!("criterion {criterion} failed:\n  {}", failures.join("\n  "));
    }
}

fn q(n: i64) -> Exact {
    Exact::from_integer(n)
}

#[test]
fn criterion_1_counterexample_table() {
    let ns: Vec<i64> = (1..=16).collect();
    let report = counterexample(&ns, 1, &RunOptions::default()).unwrap();
    let mut failures = Vec::new();
    for row in report.payload["rows"].as_array().unwrap() {
        let n = row["n"].as_i64().unwrap();
        let get = |k: &str| row[k].as_i64().unwrap();
        if get("distance") != 3 * (n + 1) {
            failures.push(format!("n={n}: d(a,b) = {}, want {}", get("distance"), 3 * (n + 1)));
        }
        if get("gamma_length") != get("distance") {
            failures.push(format!("n={n}: length(gamma) = {} but d(a,b) = {}", get("gamma_length"), get("distance")));
        }
        if get("hausdorff_gamma") != n + 1 {
            failures.push(format!("n={n}: Hausdorff distance {} , want {}", get("hausdorff_gamma"), n + 1));
        }
    }
    if report.payload["rows"].as_array().map(Vec::len) != Some(16) {
        failures.push("expected 16 rows".into());
    }
    let csv = report.csv.unwrap();
    if csv.lines().count() != 18 {
        failures.push(format!("CSV has {} lines, want schema + header + 16", csv.lines().count()));
    }
    verdict("1 (counterexample table n = 1..16)", &failures);
}

fn mirror(t: &Term) -> Term {
    match t.children() {
        None => t.clone(),
        Some([a, b, c]) => Term::node(mirror(c), mirror(b), mirror(a)),
    }
}

fn rotate(t: &Term) -> Term {
    match t.children() {
        None => t.clone(),
        Some([a, b, c]) => Term::node(rotate(b), rotate(c), rotate(a)),
    }
}

/// Every term of depth at most 1, and two reshuffles of each chosen
/// representative, paired with the element they denote.
fn spot_pairs(free: &medianlab::terms::FreeMedianAlgebra) -> Vec<(Term, usize)> {
    let p = free.p;
    let mut terms = enumerate_terms(p, 1);
    for r in &free.representatives {
        terms.push(mirror(r));
        terms.push(rotate(r));
    }
    terms
        .into_iter()
        .map(|t| {
            let code = canonical_form(&t, p).bits;
            let e = free.algebra.index_of_code(code).expect("closure contains every term");
            (t, e)
        })
        .collect()
}

#[test]
fn criterion_2_free_algebra_sizes() {
    let mut failures = Vec::new();
    for (p, want) in [(1usize, 1usize), (2, 2), (3, 4), (4, 12)] {
        let free = free_median_algebra(p, FreeOptions::default()).unwrap();
        let closure = majority_closure(&generator_codes(p), 1 << 16).unwrap();
        if free.len() != want || closure.len() != want {
            failures.push(format!("p={p}: free {} and closure {}, want {want}", free.len(), closure.len()));
        }
        if p <= 3 {
            let classes = EtClasses::compute(&Rewriter::new(p, 1), 2);
            let forms: std::collections::BTreeSet<u64> =
                classes.terms.iter().map(|t| canonical_form(t, p).bits).collect();
            let mut class_form = vec![None; classes.class_count];
            for (t, &c) in classes.terms.iter().zip(&classes.class_of) {
                let f = canonical_form(t, p).bits;
                if *class_form[c].get_or_insert(f) != f {
                    failures.push(format!("p={p}: one rewrite class holds two canonical forms"));
                    break;
                }
            }
            if classes.class_count != want || forms.len() != want {
                failures.push(format!("p={p}: {} rewrite classes, {} forms, want {want}", classes.class_count, forms.len()));
            }
        } else {
            for (t, e) in spot_pairs(&free) {
                let target = free.representative(e);
                let limits = SearchLimits {
                    complexity_cap: 3,
                    partner_bound: 0,
                    max_nodes: 300_000,
                };
                match rewrite_path(&t, target, p, limits) {
                    Ok(path) => {
                        let chained = path.iter().all(|s| s.is_valid())
                            && path.first().map_or(&t, |s| &s.source) == &t
                            && path.last().map_or(&t, |s| &s.target) == target;
                        if !chained {
                            failures.push(format!("p=4: broken path from {t} to {target}"));
                        }
                    }
                    Err(e) => failures.push(format!("p=4: {t} -> {target}: {e}")),
                }
            }
        }
    }
    let free4 = free_median_algebra(4, FreeOptions::default()).unwrap();
    let rank = MedianGraph::new(&free4.algebra).unwrap().rank();
    let brute = rank_brute_force(&free4.algebra).unwrap();
    if rank != 3 || brute != 3 {
        failures.push(format!("rank of the free algebra on 4 generators: graph {rank}, brute force {brute}, want 3"));
    }
    verdict("2 (free algebra sizes 1, 2, 4, 12 and rank 3)", &failures);
}

#[test]
fn criterion_3_identities_exhaustive() {
    let policy = CheckPolicy {
        exhaustive_limit: 64,
        ..CheckPolicy::default()
    };
    let free4 = free_median_algebra(4, FreeOptions::default()).unwrap().algebra;
    let cube = FiniteMedianAlgebra::median_cube(3).unwrap();
    let grid: CoarseSpace<Exact> = grid_window(5).unwrap();
    let mut failures = Vec::new();
    let mut run = |name: &str, reports: Vec<medianlab::median::identities::IdentityReport>| {
        for r in reports {
            if !r.holds() {
                failures.push(format!("{name}: {} fails, e.g. {:?}", r.name, r.witnesses.first()));
            }
            if !matches!(r.coverage, Coverage::Exhaustive { .. }) {
                failures.push(format!("{name}: {} was sampled", r.name));
            }
        }
    };
    run("free(4)", check_all(&free4, &policy));
    run("cube(3)", check_all(&cube, &policy));
    run("grid [0,5]^2", check_all(&grid, &policy));
    verdict("3 (identities on free(4), cube(3), grid [0,5]^2)", &failures);
}

#[test]
fn criterion_4_ledger_arithmetic() {
    let mut failures = Vec::new();
    let l = ConstantLedger::new(q(1), q(0), q(1), q(2), q(1));
    let checks = [
        ("kappa0", l.kappa0, q(8)),
        ("kappa4", l.kappa4, q(8)),
        ("kappa5", l.kappa5, q(5)),
        ("C1", l.c_n[0], q(5)),
        ("C2", l.c_n[1], q(10)),
        ("D2", l.d_n[1], q(20)),
        ("rho2 slope", l.rho_n[1].slope, q(2)),
        ("H3(3)", l.h_n[2].eval(q(3)), q(6)),
        ("log C1", l.log_c1, q(4)),
        ("log C2", l.log_c2, q(-3)),
    ];
    for (name, got, want) in checks {
        if got != want {
            failures.push(format!("{name} = {got}, want {want}"));
        }
    }
    let f = ConstantLedger::new(1.0, 0.0, 1.0, 2.0, 1.0);
    if (f.kappa0, f.kappa4, f.kappa5, f.c_n[1], f.d_n[1]) != (8.0, 8.0, 5.0, 10.0, 20.0) {
        failures.push("floating ledger disagrees with the rational one".into());
    }
    let k = Exact::new(1, 3);
    let r = ConstantLedger::new(k, q(0), q(0), q(0), Exact::new(1, 2));
    if r.kappa5 != Exact::new(3, 2) {
        failures.push(format!("kappa5 with K = 1/3, H5 = 1/2 is {}, want 3/2", r.kappa5));
    }
    verdict("4 (ledger arithmetic)", &failures);
}

#[test]
fn criterion_5_rank_growth() {
    let opts = RunOptions::default();
    let windows: Vec<usize> = (4..=12).collect();
    let mut failures = Vec::new();
    let grid = rank_scan(Family::Grid, &[2, 3], 0.0, &windows, &opts).unwrap();
    let csv = grid.csv.unwrap();
    let mut body = csv.lines().skip(1).collect::<Vec<_>>().join("\n");
    body.push('\n');
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (kc, wc, sc) = (col("k"), col("window"), col("separation"));
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.unwrap();
        let (k, w, s): (usize, f64, f64) = (rec[kc].parse().unwrap(), rec[wc].parse().unwrap(), rec[sc].parse().unwrap());
        match k {
            2 => {
                if s != w {
                    failures.push(format!("grid window {w}: 2-corner separation {s}, want {w}"));
                }
                xs.push(w);
                ys.push(s);
            }
            3 if s != 0.0 => failures.push(format!("grid window {w}: 3-corner separation {s}, want 0")),
            _ => {}
        }
    }
    let (slope, _, _) = least_squares(&xs, &ys);
    if (slope - 1.0).abs() > 0.01 {
        failures.push(format!("2-corner slope {slope}, want 1 +- 0.01"));
    }
    for family in [Family::Path, Family::Star] {
        let r = rank_scan(family, &[2, 3], 0.0, &windows, &opts).unwrap();
        for row in r.payload["rows"].as_array().unwrap() {
            let s = row["certificate"]["separation"].as_f64().unwrap();
            if s != 0.0 {
                failures.push(format!("{} window {}: k={} separation {s}, want 0", family.name(), row["window"], row["k"]));
            }
        }
    }
    verdict("5 (corner growth: grids rank 2, trees rank 1)", &failures);
}

#[test]
fn criterion_6_hyperbolicity_and_thin_intervals() {
    let budget = ScanBudget::default();
    let mut trees: Vec<(String, CoarseSpace<f64>)> = vec![
        ("path 12".into(), path_tree(12).unwrap()),
        ("star 8".into(), star_tree(8).unwrap()),
    ];
    for seed in 0..3 {
        trees.push((format!("random tree 16 seed {seed}"), random_tree(16, seed).unwrap()));
    }
    let mut failures = Vec::new();
    for (name, t) in &trees {
        let delta = gromov_delta(t, &budget).value;
        let lambda = thin_interval_lambda(t, &budget).value;
        if delta != 0.0 || lambda != 0.0 {
            failures.push(format!("{name}: delta {delta}, thin-interval {lambda}, want 0 and 0"));
        }
    }
    for n in [2i64, 4, 6] {
        let g: CoarseSpace<f64> = grid_window(n).unwrap();
        let delta = gromov_delta(&g, &budget).value;
        if delta != n as f64 {
            failures.push(format!("grid {n}: delta {delta}, want {n}"));
        }
        if n <= 4 {
            let lambda = thin_interval_lambda(&g, &budget).value;
            if lambda != n as f64 {
                failures.push(format!("grid {n}: thin-interval {lambda}, want {n}"));
            }
        }
    }
    verdict("6 (delta and thin intervals on trees and grids)", &failures);
}

#[test]
fn criterion_7_subdivided_constants() {
    let budget = ScanBudget::default();
    let h_budget = ScanBudget {
        samples: 400,
        ..budget
    };
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for n in [4i64, 8, 12] {
        let s: CoarseSpace<Exact> = subdivided_sec5(n, 1).unwrap();
        let k0 = check_m1_m2(&s, &budget).value();
        let k4 = kappa4(&s, &budget).value;
        let five = five_point_defect(&s, &budget).value;
        let h4 = empirical_h(&s, 4, false, &h_budget).unwrap().value;
        if k0 != q(0) {
            failures.push(format!("n={n}: kappa0 = {k0}, want 0"));
        }
        rows.push((n, s, k4, five, h4));
    }
    let (_, first, k4, five, h4) = &rows[0];
    for (n, _, k, f, h) in &rows[1..] {
        if (k, f, h) != (k4, five, h4) {
            failures.push(format!("n={n}: (kappa4, five-point, H(4)) = ({k}, {f}, {h}) differs from n=4 ({k4}, {five}, {h4})"));
        }
    }
    let fit = fit_affine_control(first, ControlMode::OneVariable, &budget);
    let (k, h0) = fit.frontier[0];
    for (n, s, k4m, _, _) in &rows {
        let h3 = empirical_h(s, 3, false, &h_budget).unwrap().value;
        let h5 = empirical_h(s, 5, true, &ScanBudget { samples: 40, ..budget }).unwrap().value;
        let ledger = ConstantLedger::new(k, h0, h3, *h4, h5);
        if *k4m > ledger.kappa4 {
            failures.push(format!("n={n}: measured kappa4 {k4m} exceeds the ledger bound {}", ledger.kappa4));
        }
    }
    verdict("7 (subdivided window constants are window independent)", &failures);
}

#[test]
fn criterion_8a_intervals_coincide_on_median_fixtures() {
    let mut fixtures: Vec<(String, CoarseSpace<Exact>)> = vec![
        ("grid 4".into(), grid_window(4).unwrap()),
        ("grid 5".into(), grid_window(5).unwrap()),
        ("path 10".into(), path_tree(10).unwrap()),
        ("star 6".into(), star_tree(6).unwrap()),
        ("random tree 20".into(), random_tree(20, 7).unwrap()),
    ];
    for (name, alg) in [
        ("cube 3", FiniteMedianAlgebra::median_cube(3).unwrap()),
        ("free 4", free_median_algebra(4, FreeOptions::default()).unwrap().algebra),
    ] {
        fixtures.push((name.into(), CoarseSpace::from_algebra(&alg).unwrap()));
    }
    let mut failures = Vec::new();
    for (name, s) in &fixtures {
        let scan = interval_dichotomy(s);
        if !scan.coincide() {
            failures.push(format!("{name}: {} of {} pairs differ: {}", scan.mismatched_pairs, scan.pairs, scan.to_json(s)));
        }
    }
    verdict("8a (intervals coincide on exact median fixtures)", &failures);
}

#[test]
fn criterion_8b_subdivided_window_separates_intervals() {
    let s: CoarseSpace<Exact> = subdivided_sec5(8, 1).unwrap();
    let scan = interval_dichotomy(&s);
    let mut failures = Vec::new();
    match &scan.first {
        Some(_) => println!("mismatch witness: {}", scan.to_json(&s)),
        None => failures.push(format!(
            "no pair among {} has differing interval and zero-coarse interval on the subdivided window n=8",
            scan.pairs
        )),
    }
    verdict("8b (a mismatch witness on the subdivided window)", &failures);
}
