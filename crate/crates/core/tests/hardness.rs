use sparsejl::hardness::{
    binomial, count_heavy_subsets, ell_fixed_point, empirical_lower_bound, generate, heavy_subset_trials,
    signature_groups, signature_pigeonhole_floor, solve_ell, suggested_t, LowerBoundSweep,
};
use sparsejl::SparseJlMatrix;

#[test]
fn subset_size_regression_values() {
    // Oracle: 50-step fixed-point iteration run independently; real fixed
    // points 1.9020, 1.6330, 1.8250 and 0.8570.
    assert_eq!(solve_ell(1 << 20, 1 << 10).unwrap(), 2);
    assert!((ell_fixed_point(1 << 20, 1 << 10).unwrap() - 1.902_014_531_2).abs() < 1e-8);
    assert_eq!(solve_ell(2048, 64).unwrap(), 2);
    assert_eq!(solve_ell(4096, 64).unwrap(), 2);
    assert_eq!(solve_ell(1024, 1024).unwrap(), 1);
}

#[test]
fn subset_size_is_near_its_fixed_point() {
    for (n, d) in [(1u64 << 20, 1u64 << 10), (1 << 30, 1 << 8), (1 << 12, 16), (5000, 40)] {
        let real = ell_fixed_point(n, d).unwrap();
        let residual = (real - (n as f64).ln() / (std::f64::consts::E * d as f64 / real).ln()).abs();
        assert!(residual <= 1e-8);
        assert!((solve_ell(n, d).unwrap() as f64 - real).abs() <= 0.5 + 1e-9);
    }
}

#[test]
fn subset_size_is_one_below_e_times_d() {
    for d in [3u64, 10, 100, 1000] {
        let limit = (std::f64::consts::E * d as f64) as u64;
        for n in [2, d, limit] {
            assert_eq!(solve_ell(n, d).unwrap(), 1, "n={n} d={d}");
        }
    }
}

#[test]
fn instance_vectors_are_unit() {
    let inst = generate(1 << 14, 20, 100_000, 0).unwrap();
    assert_eq!(inst.ell, solve_ell(1 << 14, 20).unwrap());
    let data = inst.to_dataset();
    assert!(data.len() as u128 <= binomial(20, inst.ell as u64) + 21);
    for p in data.points().iter().filter(|p| !p.is_zero()) {
        assert!((p.norm() - 1.0).abs() <= 1e-12);
    }
    assert!(data.points().last().unwrap().is_zero());
}

#[test]
fn disjoint_subset_vectors_have_zero_inner_product() {
    let inst = generate(1 << 9, 16, 10_000, 0).unwrap();
    let data = inst.to_dataset();
    assert_eq!(data.len(), 137);
    let mut pairs = 0;
    for i in 0..inst.subsets.len() {
        for j in i + 1..inst.subsets.len() {
            if inst.subsets[i].iter().all(|x| !inst.subsets[j].contains(x)) {
                assert_eq!(data.points()[i].dot(&data.points()[j]), 0.0);
                pairs += 1;
            }
        }
    }
    assert!(pairs > 0);
}

#[test]
fn heavy_subset_bound_holds_where_it_is_not_vacuous() {
    // (s/(8t))^t = 16 at s = 64, t = 2.
    let results = heavy_subset_trials(128, 64, 2, 200, 3).unwrap();
    assert!(results.iter().all(|r| r.bound == 16 && r.within_hypothesis));
    assert!(results.iter().all(|r| r.holds()));
    let results = heavy_subset_trials(64, 32, 4, 20, 4).unwrap();
    assert!(results.iter().all(|r| r.bound == 1 && r.holds()));
}

#[test]
fn heavy_subsets_of_a_spike() {
    let mut v = vec![0.0; 40];
    v[5] = 10.0;
    let r = count_heavy_subsets(&v, 16, 2).unwrap();
    assert!(r.count >= binomial(39, 1) as u64);
    assert_eq!(r.count, 39);
}

#[test]
fn identical_columns_share_every_signature() {
    // 32 columns over 2·2·4 = 16 possible (row, sign) patterns must collide.
    let a = SparseJlMatrix::sample(4, 32, 2, 0).unwrap();
    let (i, j) = (0..32)
        .flat_map(|i| (i + 1..32).map(move |j| (i, j)))
        .find(|&(i, j)| a.column(i) == a.column(j))
        .expect("pigeonhole guarantees a collision");
    for t in [1, 2] {
        let groups = signature_groups(&a, t).unwrap();
        for g in &groups {
            assert_eq!(g.columns.contains(&i), g.columns.contains(&j));
        }
    }
}

#[test]
fn signature_groups_partition_and_pigeonhole() {
    for (m, s, t, d) in [(8usize, 2usize, 1usize, 50usize), (12, 3, 2, 200), (16, 4, 4, 300), (20, 4, 2, 500)] {
        let a = SparseJlMatrix::sample(m, d, s, (m * t) as u64).unwrap();
        let groups = signature_groups(&a, t).unwrap();
        let total: usize = groups.iter().map(|g| g.columns.len()).sum();
        assert_eq!(total as u128, d as u128 * binomial(s as u64, t as u64));
        assert!(groups.windows(2).all(|w| w[0].columns.len() >= w[1].columns.len()));
        assert!(groups[0].columns.len() as u64 >= signature_pigeonhole_floor(m, d, s, t));
    }
    let a = SparseJlMatrix::sample(12, 200, 3, 0).unwrap();
    assert!(signature_groups(&a, 4).is_err());
}

#[test]
fn lower_bound_sweep_table() {
    let cfg = LowerBoundSweep {
        d: 16,
        n_target: 512,
        eps: 0.5,
        // ⌈4 ln 512 / 0.25⌉ = 100, so s = 100 is the dense single-block case.
        s_values: vec![1, 2, 100],
        trials: 60,
        seed: 2,
        c_m: 4.0,
        cap: 10_000,
    };
    let rows = empirical_lower_bound(&cfg).unwrap();
    assert_eq!(rows.len(), 3);
    let dense = rows[2].success;
    assert_eq!(rows[2].m, rows[2].s);
    assert!(rows.iter().all(|r| r.success <= dense + 0.1), "{rows:?}");
    assert!(rows[0].success < dense);
}

#[test]
fn suggested_t_formula() {
    let t = suggested_t(0.25, 1 << 10, 2, 1 << 12, 1 << 6);
    assert!((t - (128f64).ln() / (64f64).ln()).abs() < 1e-12);
}
