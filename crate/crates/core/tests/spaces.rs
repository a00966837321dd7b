use std::collections::VecDeque;

use medianlab::commands::counterexample_row;
use medianlab::constructions::{
    grid_space, grid_window, path_tree, product_space, sec5_space, sec5_endpoints, subdivided_sec5, WeightRule,
    WeightedGridSpec,
};
use medianlab::median::identities::{verify_median_axioms, CheckPolicy};
use medianlab::median::TernaryTable;
use medianlab::verify::{
    corner_search, five_point_defect, gromov_delta, interval_membership, interval_points, kappa4, ScanBudget,
};
use medianlab::{CoarseSpace, Exact, MedianGraph, Scalar, TernaryOp};

fn q(n: i64) -> Exact {
    Exact::from_integer(n)
}

#[test]
fn weighted_and_unit_windows_agree_as_algebras() {
    for n in 1..=3 {
        let spec = WeightedGridSpec::sec5(n, 1);
        let weighted: CoarseSpace<Exact> = sec5_space(n, 1).unwrap();
        let unit: CoarseSpace<Exact> = grid_space(&WeightedGridSpec {
            rule: WeightRule::Unit,
            ..spec
        })
        .unwrap();
        assert_eq!(TernaryTable::from_op(&weighted), TernaryTable::from_op(&unit));
        assert!(verify_median_axioms(&weighted, &CheckPolicy::default()).is_median());
        for i in 0..unit.len() {
            for j in 0..unit.len() {
                assert!(unit.d(i, j) <= weighted.d(i, j));
                assert!(weighted.d(i, j) <= q(5) * unit.d(i, j));
            }
        }
        let budget = ScanBudget::default();
        assert_eq!(kappa4(&weighted, &budget).value, q(0));
        assert_eq!(five_point_defect(&weighted, &budget).value, q(0));
    }
}

#[test]
fn interval_between_the_endpoints_is_a_column() {
    for n in 1..=5 {
        let s: CoarseSpace<Exact> = sec5_space(n, 1).unwrap();
        let (a, b) = sec5_endpoints(n);
        let (ia, ib) = (s.point(&a).unwrap(), s.point(&b).unwrap());
        let mut got: Vec<Vec<i64>> = interval_points(&s, ia, ib)
            .into_iter()
            .map(|p| s.label(p).coords().unwrap().to_vec())
            .collect();
        got.sort();
        let want: Vec<Vec<i64>> = (0..=n + 1).map(|y| vec![n + 1, y]).collect();
        assert_eq!(got, want);
    }
}

/// Shortest chains of unit steps between every pair.
fn unit_chain_distances<S: Scalar>(s: &CoarseSpace<S>) -> Vec<Vec<Option<usize>>> {
    let n = s.len();
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| s.d(i, j) == S::one()).collect()).collect();
    (0..n)
        .map(|src| {
            let mut dist = vec![None; n];
            dist[src] = Some(0);
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[v].is_none() {
                        dist[v] = Some(dist[u].unwrap() + 1);
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

#[test]
fn subdivision_is_discretely_geodesic() {
    let sub: CoarseSpace<Exact> = subdivided_sec5(2, 1).unwrap();
    let chains = unit_chain_distances(&sub);
    for (i, row) in chains.iter().enumerate() {
        for (j, chain) in row.iter().enumerate() {
            assert_eq!(chain.map(|c| q(c as i64)), Some(sub.d(i, j)));
        }
    }
    let weighted: CoarseSpace<Exact> = sec5_space(2, 1).unwrap();
    let chains = unit_chain_distances(&weighted);
    let (x, y) = (weighted.point(&[3, 0]).unwrap(), weighted.point(&[3, 1]).unwrap());
    assert_eq!(weighted.d(x, y), q(5));
    assert_ne!(chains[x][y].map(|c| q(c as i64)), Some(q(5)));
}

#[test]
fn counterexample_at_eight() {
    let row = counterexample_row(8, 1).unwrap();
    assert_eq!((row.distance, row.gamma_length, row.hausdorff_gamma), (27, 27, 9));
    assert!(row.hausdorff_geodesic_set <= row.hausdorff_gamma);
}

#[test]
fn products_of_paths() {
    let two: CoarseSpace<f64> = path_tree(2).unwrap();
    let square = product_space(&two, &two).unwrap();
    let alg = square.to_algebra().unwrap();
    assert_eq!((alg.len(), MedianGraph::new(&alg).unwrap().rank()), (4, 2));
    assert_eq!(kappa4(&square, &ScanBudget::default()).value, 0.0);

    let path: CoarseSpace<f64> = path_tree(9).unwrap();
    let grid = product_space(&path, &path).unwrap();
    let cert = corner_search(&grid, 2, 0.0, &ScanBudget::default()).unwrap();
    assert_eq!(cert.separation, 8.0);
}

#[test]
fn corner_separation_grows_with_lambda_and_window() {
    let budget = ScanBudget::default();
    let mut previous_window = [0.0; 3];
    for n in 3..=6 {
        let g: CoarseSpace<f64> = grid_window(n).unwrap();
        let mut previous = 0.0;
        for (i, lambda) in [0.0, 1.0, 2.0].into_iter().enumerate() {
            let s = corner_search(&g, 2, lambda, &budget).unwrap().separation;
            assert!(s >= previous, "n={n} lambda={lambda}");
            assert!(s >= previous_window[i], "n={n} lambda={lambda}");
            previous = s;
            previous_window[i] = s;
        }
    }
}

#[test]
fn medians_land_in_intervals() {
    let budget = ScanBudget::default();
    let grid: CoarseSpace<Exact> = grid_window(3).unwrap();
    let m = interval_membership(&grid, &budget);
    assert_eq!((m.outside, m.coarse.value), (0, q(0)));
    let sub: CoarseSpace<Exact> = subdivided_sec5(2, 1).unwrap();
    let m = interval_membership(&sub, &budget);
    assert!(m.coarse.value >= q(0));
}

#[test]
fn delta_grows_on_weighted_windows() {
    let budget = ScanBudget {
        samples: 50_000,
        ..ScanBudget::default()
    };
    let values: Vec<Exact> = [1, 2, 3]
        .into_iter()
        .map(|n| gromov_delta(&sec5_space::<Exact>(n, 1).unwrap(), &budget).value)
        .collect();
    assert!(values.windows(2).all(|w| w[1] > w[0]), "{values:?}");
}
