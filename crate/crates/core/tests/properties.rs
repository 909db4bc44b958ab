use blockgreedy::io::{self, LibsvmOptions, TraceRecord};
use blockgreedy::partition::{balanced_sizes, max_cross_block_dot_exact, random_partition};
use blockgreedy::solver::{self, greedy_accept, propose_increment};
use blockgreedy::spectral::{
    prop1_bound, rho_block_exact, rho_block_sampled, spectral_radius_sym, theorem1_epsilon,
};
use blockgreedy::synthetic;
use blockgreedy::{cluster_features, LossKind, Partition, Problem, SolverConfig, SparseColMatrix, WeightVector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dense(m: &SparseColMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.n_rows(), m.n_cols());
    for j in 0..m.n_cols() {
        for (r, v) in m.column(j).iter() {
            d[(r, j)] = v;
        }
    }
    d
}

fn loss_kind() -> impl Strategy<Value = LossKind> {
    prop_oneof![Just(LossKind::Squared), Just(LossKind::Logistic)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_coordinate_change_moves_predictions_by_column(
        seed in any::<u64>(),
        j in 0usize..30,
        delta in -5.0f64..5.0,
    ) {
        let mut r = rng(seed);
        let m = synthetic::random_sparse_design(&mut r, 40, 30, 0.2);
        let w: Vec<f64> = (0..30).map(|_| r.gen_range(-2.0..2.0)).collect();
        let before = m.predictions(&WeightVector::from_vec(w.clone()).unwrap()).unwrap();
        let mut moved = w.clone();
        moved[j] += delta;
        let after = m.predictions(&WeightVector::from_vec(moved).unwrap()).unwrap();
        let mut expected = vec![0.0; 40];
        m.column(j).axpy_into(delta, &mut expected);
        for i in 0..40 {
            let diff = after[i] - before[i];
            prop_assert!((diff - expected[i]).abs() <= 1e-10 * (1.0 + before[i].abs() + after[i].abs()));
        }
    }

    #[test]
    fn column_dot_is_bit_symmetric(seed in any::<u64>()) {
        let m = synthetic::random_sparse_design(&mut rng(seed), 25, 12, 0.4);
        for i in 0..12 {
            for j in 0..12 {
                prop_assert_eq!(
                    m.column_dot(i, j).unwrap().to_bits(),
                    m.column_dot(j, i).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn coordinate_gradient_matches_dense_oracle(
        seed in any::<u64>(),
        loss in loss_kind(),
        n in 1usize..=20,
        p in 1usize..=20,
    ) {
        let mut r = rng(seed);
        let problem = synthetic::random_problem(&mut r, n, p, 0.5, loss, 0.1).unwrap();
        let w: Vec<f64> = (0..p).map(|_| r.gen_range(-1.0..1.0)).collect();
        let x = dense(problem.design());
        let t = &x * nalgebra::DVector::from_vec(w.clone());
        let d = nalgebra::DVector::from_iterator(
            n,
            problem.labels().iter().zip(t.iter()).map(|(&y, &ti)| match loss {
                LossKind::Squared => ti - y,
                LossKind::Logistic => -y / (1.0 + (y * ti).exp()),
            }),
        );
        let grad = x.transpose() * d / n as f64;
        let preds: Vec<f64> = t.iter().copied().collect();
        for j in 0..p {
            let g = problem.coordinate_gradient(j, &preds).unwrap();
            prop_assert!((g - grad[j]).abs() <= 1e-10, "j={} lib={} oracle={}", j, g, grad[j]);
        }
    }

    #[test]
    fn proposals_never_promise_ascent(
        g in -50.0f64..50.0,
        beta in 1e-4f64..100.0,
        w in -50.0f64..50.0,
        lambda in 0.0f64..20.0,
    ) {
        let p = propose_increment(0, g, beta, w, lambda).unwrap();
        prop_assert!(p.eta.is_finite());
        prop_assert!(p.guaranteed_descent <= 0.0);
    }

    #[test]
    fn greedy_accept_ignores_order(seed in any::<u64>(), len in 0usize..20) {
        let mut r = rng(seed);
        let mut props: Vec<_> = (0..len)
            .map(|j| {
                let eta = f64::from(r.gen_range(-3i32..=3));
                propose_increment(j, -eta, 1.0, 0.0, 0.0).unwrap()
            })
            .collect();
        let forward = greedy_accept(&props);
        props.reverse();
        prop_assert_eq!(forward, greedy_accept(&props));
    }

    #[test]
    fn clustering_yields_balanced_cover(seed in any::<u64>(), p in 1usize..60, b_frac in 0.0f64..1.0) {
        let b = 1 + ((p - 1) as f64 * b_frac) as usize;
        let m = synthetic::random_sparse_design(&mut rng(seed), 30, p, 0.2);
        let part = cluster_features(&m, b).unwrap();
        prop_assert_eq!(part.num_blocks(), b);
        prop_assert_eq!(part.num_features(), p);
        let mut sizes = part.block_sizes();
        sizes.sort_unstable_by(|a, c| c.cmp(a));
        prop_assert_eq!(sizes, balanced_sizes(p, b));
        let mut seen: Vec<usize> = part.blocks().iter().flatten().copied().collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..p).collect::<Vec<_>>());
    }

    #[test]
    fn radius_at_least_one_and_within_bound(seed in any::<u64>(), b in 2usize..5, size in 1usize..4) {
        let mut r = rng(seed);
        let p = b * size;
        let m = synthetic::random_unit_columns(&mut r, 6, p);
        let part = random_partition(&mut r, p, b).unwrap();
        let rho = rho_block_exact(&m, &part).unwrap().rho;
        let eps = max_cross_block_dot_exact(&m, &part).value;
        prop_assert!(rho >= 1.0 - 1e-12);
        prop_assert!(rho <= prop1_bound(eps, b) + 1e-9);
    }

    #[test]
    fn sampled_radius_is_running_maximum(seed in any::<u64>(), k in 1usize..40) {
        let mut r = rng(seed);
        let m = synthetic::random_unit_columns(&mut r, 5, 12);
        let part = random_partition(&mut r, 12, 4).unwrap();
        let short = rho_block_sampled(&m, &part, k, &mut rng(seed ^ 1)).unwrap().rho;
        let long = rho_block_sampled(&m, &part, k + 10, &mut rng(seed ^ 1)).unwrap().rho;
        prop_assert!(long >= short);
    }

    #[test]
    fn jacobi_recovers_constructed_eigenvalue(seed in any::<u64>(), n in 1usize..=10) {
        let mut r = rng(seed);
        let q = synthetic::random_orthonormal(&mut r, n);
        let q = dense(&q);
        let lambdas: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..10.0)).collect();
        let m = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas.clone())) * q.transpose();
        let flat: Vec<f64> = (0..n * n).map(|k| m[(k / n, k % n)]).collect();
        let top = lambdas.iter().copied().fold(0.0, f64::max);
        prop_assert!((spectral_radius_sym(&flat, n) - top).abs() < 1e-9);
    }

    #[test]
    fn full_parallelism_guarantee_iff_radius_below_two(rho in 1.0f64..4.0, b in 2usize..50) {
        let eps = theorem1_epsilon(rho, b, b).unwrap();
        prop_assert_eq!(eps < 1.0, rho < 2.0);
    }

    #[test]
    fn libsvm_write_read_is_idempotent(seed in any::<u64>(), n in 1usize..30, p in 1usize..30) {
        let mut r = rng(seed);
        let m = synthetic::random_sparse_design(&mut r, n, p, 0.3);
        let labels: Vec<f64> = (0..n).map(|_| f64::from(r.gen_range(-2i32..=2))).collect();
        let mut buf = Vec::new();
        io::write_libsvm(&m, &labels, &mut buf).unwrap();
        let opts = LibsvmOptions { num_features: Some(p), ..Default::default() };
        let text = String::from_utf8(buf).unwrap();
        let once = io::parse_libsvm_str(&text, opts).unwrap();
        let mut again = Vec::new();
        io::write_libsvm(&once.design, &once.labels, &mut again).unwrap();
        prop_assert_eq!(&text, &String::from_utf8(again).unwrap());
        prop_assert_eq!(&once.design, &m);
        let tokens = text.split_ascii_whitespace().filter(|t| t.contains(':')).count();
        prop_assert_eq!(tokens, once.design.nnz());
    }

    #[test]
    fn trace_rows_round_trip(
        rows in proptest::collection::vec((0usize..1_000_000, 0.0f64..1e4, -1e6f64..1e6, 0usize..1000, 0.0f64..10.0), 0..20)
    ) {
        let recs: Vec<TraceRecord> = rows
            .into_iter()
            .map(|(iteration, elapsed_seconds, objective, nnz, max_abs_eta)| TraceRecord {
                iteration, elapsed_seconds, objective, nnz, max_abs_eta,
            })
            .collect();
        let mut buf = Vec::new();
        io::write_trace_to(&recs, &mut buf).unwrap();
        prop_assert_eq!(io::read_trace_from(buf.as_slice()).unwrap(), recs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sequential_steps_descend_at_least_the_surrogate(
        seed in any::<u64>(),
        loss in loss_kind(),
        greedy in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let base = synthetic::random_problem(&mut r, 60, 40, 0.2, loss, 0.0).unwrap();
        let problem = base.with_lambda(0.05 * base.lambda_max()).unwrap();
        let (b, part) = if greedy {
            (1, Partition::single_block(40).unwrap())
        } else {
            (40, Partition::singletons(40).unwrap())
        };
        let mut cfg = SolverConfig::new(b, 1).with_seed(seed).recording_updates();
        cfg.max_iterations = 300;
        cfg.trace.every_iterations = 1;
        cfg.trace.every_seconds = 0.0;
        let res = solver::run(&problem, &part, &cfg).unwrap();
        let objective_at = |k: usize| res.trace.iter().find(|t| t.iteration == k).map(|t| t.objective);
        for u in res.updates.iter().filter(|u| u.iteration <= res.iterations && u.iteration > 0) {
            let (Some(before), Some(after)) = (objective_at(u.iteration - 1), objective_at(u.iteration)) else {
                continue;
            };
            if res.updates.iter().filter(|v| v.iteration == u.iteration).count() > 1 {
                continue;
            }
            prop_assert!(
                after <= before + u.guaranteed_descent + 1e-12,
                "iteration {}: {} -> {} promised {}", u.iteration, before, after, u.guaranteed_descent
            );
        }
    }

    #[test]
    fn clustering_recovers_planted_groups(seed in any::<u64>(), groups in 2usize..6, size in 2usize..6) {
        let planted = synthetic::planted_blocks(&mut rng(seed), groups, size, 6);
        let part = cluster_features(&planted.design, groups).unwrap();
        let mut got: Vec<Vec<usize>> = part.blocks().to_vec();
        let mut want: Vec<Vec<usize>> = planted.groups.blocks().to_vec();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn radius_is_one_exactly_for_orthogonal_selections() {
    let m = SparseColMatrix::from_columns(8, (0..8).map(|j| vec![(j, 1.0)]).collect()).unwrap();
    let part = random_partition(&mut rng(6), 8, 4).unwrap();
    assert_eq!(rho_block_exact(&m, &part).unwrap().rho, 1.0);
    let c = synthetic::constant_correlation(8, 0.3);
    assert!(rho_block_exact(&c, &part).unwrap().rho > 1.0);
}

#[test]
fn clustered_cross_dot_beats_random_on_planted_designs() {
    for seed in 0..20 {
        let planted = synthetic::planted_blocks(&mut rng(seed), 4, 6, 5);
        let clustered = cluster_features(&planted.design, 4).unwrap();
        let random = random_partition(&mut rng(seed + 100), 24, 4).unwrap();
        assert!(
            max_cross_block_dot_exact(&planted.design, &clustered).value
                < max_cross_block_dot_exact(&planted.design, &random).value
        );
    }
}

#[test]
fn cached_predictions_stay_close_to_recompute() {
    let mut r = rng(77);
    let base = synthetic::random_problem(&mut r, 300, 500, 0.05, LossKind::Squared, 0.0).unwrap();
    let problem = base.with_lambda(0.01 * base.lambda_max()).unwrap();
    let part = cluster_features(problem.design(), 10).unwrap();
    let mut cfg = SolverConfig::new(10, 3);
    cfg.max_iterations = 25_000;
    let res = solver::run(&problem, &part, &cfg).unwrap();
    assert!(res.max_drift < 1e-8, "drift {}", res.max_drift);
    let fresh = problem.design().predictions(&res.weights).unwrap();
    let obj = Problem::objective(&problem, &res.weights, &fresh);
    assert!((obj - res.objective).abs() <= 1e-10 * (1.0 + obj.abs()));
}
