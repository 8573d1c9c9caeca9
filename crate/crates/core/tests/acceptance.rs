//! Acceptance suite: one test per criterion, each printing a
//! `[PASS]`/`[FAIL]` line with its elapsed time. Tolerances are pinned
//! here, in code. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;

use starball::esseen::{esseen_bound, esseen_eta_bound, lemma_tv_check};
use starball::gap::{
    doubling_ratio, fit::IntGap, properness_by_collision, approximation_pipeline, Gap, PipelineParams,
};
use starball::geometry::{estimate_constants, StarBody};
use starball::hyperplane::{best_hyperplane, planted_instance, verify_integral_bound};
use starball::mc;
use starball::noise::{eta_norm, growth_check, t_norm, NoiseModel, BERNOULLI_C_ETA};
use starball::smallball::{atoms, rho_exact, sharp_lo_report, Certificate, VectorSystem};

/// Series oracle for erf, independent of every Monte Carlo path.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..80 {
        term *= -x * x / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    2.0 / PI.sqrt() * sum
}

struct Criterion {
    label: &'static str,
    budget_secs: f64,
    start: Instant,
}

impl Criterion {
    fn new(label: &'static str, budget_secs: f64) -> Self {
        Criterion {
            label,
            budget_secs,
            start: Instant::now(),
        }
    }

    fn pass(self) {
        let elapsed = self.start.elapsed().as_secs_f64();
        println!("[PASS] {} ({elapsed:.2}s / {}s budget)", self.label, self.budget_secs);
        assert!(
            elapsed < self.budget_secs,
            "[FAIL] {}: runtime {elapsed:.2}s exceeded the {}s budget",
            self.label,
            self.budget_secs
        );
    }
}

// ---------------------------------------------------------------------------
// 1. sharp forward identity
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_sharp_lo_identity() {
    let c = Criterion::new(
        "criterion 1: all-ones rho equals 2^-n S(n, floor(R)+1) exactly for n in 4..=16, R in {0.5,1.5,2.5}",
        10.0,
    );
    for n in 4..=16usize {
        for r in [0.5, 1.5, 2.5] {
            let report = sharp_lo_report(n, r).unwrap();
            // dyadic rationals: f64 equality is the rational comparison
            assert_eq!(
                report.rho_canonical, report.bound,
                "[FAIL] criterion 1 at n={n}, R={r}: rho {} != bound {}",
                report.rho_canonical, report.bound
            );
            assert_eq!(report.ratio, 1.0);
        }
    }
    c.pass();
}

// ---------------------------------------------------------------------------
// 2 & 3. Esseen-type bound soundness
// ---------------------------------------------------------------------------

struct RandomSystems {
    cases: Vec<(StarBody, starball::BodyConstants, f64)>, // body, constants, p
}

impl RandomSystems {
    fn build() -> Self {
        let ps = [1.0, 2.0, f64::INFINITY, 0.5];
        let mut cases = Vec::new();
        for &p in &ps {
            for d in [1usize, 2] {
                let body = StarBody::lp(d, p).unwrap();
                let constants = estimate_constants(&body, 1_000_000, 0xC0FFEE + d as u64).unwrap();
                cases.push((body, constants, p));
            }
        }
        RandomSystems { cases }
    }

    /// Deterministic random system #i; `n` stays inside the exact-kernel
    /// comfort zone of the body in question.
    fn system(&self, i: usize) -> (VectorSystem, &starball::BodyConstants) {
        let (body, constants, p) = &self.cases[i % self.cases.len()];
        let d = body.dimension();
        let mut rng = mc::block_rng(0xACCE97, i as u64);
        let n_max = if d == 1 {
            12
        } else if p.is_infinite() {
            10
        } else if *p == 2.0 {
            8
        } else {
            10
        };
        let n = rng.gen_range(4..=n_max);
        let scale = rng.gen_range(-1.2..1.2f64).exp();
        let r = [0.5, 1.0, 2.0][i % 3];
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                mc::gaussian_vec(&mut rng, d)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect()
            })
            .collect();
        (
            VectorSystem::new(vectors, r, body.clone()).unwrap(),
            constants,
        )
    }
}

#[test]
fn criterion_02_esseen_bound_soundness() {
    let c = Criterion::new(
        "criterion 2: rho_exact <= kappa^d I(X_{V_R}) + 4 SE on 200 random systems, zero violations",
        300.0,
    );
    let suite = RandomSystems::build();
    let model = NoiseModel::bernoulli();
    for i in 0..200 {
        let (system, constants) = suite.system(i);
        let dist = atoms(&system, &model).unwrap();
        let rho = rho_exact(&dist, system.body(), system.r()).unwrap();
        let bound = esseen_bound(&system, &model, constants, 100_000, 7_000 + i as u64).unwrap();
        assert!(
            rho.rho <= bound.value + 4.0 * bound.std_error,
            "[FAIL] criterion 2 on system {i}: rho {} > bound {} + 4*{} (certificate {:?})",
            rho.rho,
            bound.value,
            bound.std_error,
            rho.certificate
        );
    }
    c.pass();
}

#[test]
fn criterion_03_eta_bound_soundness() {
    let c = Criterion::new(
        "criterion 3: rho_exact <= eta-norm bound + 4 SE on 50 random systems, zero violations",
        120.0,
    );
    let suite = RandomSystems::build();
    let model = NoiseModel::bernoulli();
    for i in 0..50 {
        let (system, constants) = suite.system(i + 1000);
        let dist = atoms(&system, &model).unwrap();
        let rho = rho_exact(&dist, system.body(), system.r()).unwrap();
        let bound =
            esseen_eta_bound(&system, &model, constants, 100_000, 9_000 + i as u64).unwrap();
        assert!(
            rho.rho <= bound.value + 4.0 * bound.std_error,
            "[FAIL] criterion 3 on system {i}: rho {} > eta bound {} + 4*{}",
            rho.rho,
            bound.value,
            bound.std_error
        );
    }
    c.pass();
}

// ---------------------------------------------------------------------------
// 4. torus-integral lemma
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_lemma_tv_grid() {
    let c = Criterion::new(
        "criterion 4: quadrature lhs <= 40(|w|+1)/(|w|sqrt(1+lambda)) on the full 45-cell grid",
        10.0,
    );
    for lambda in [0.01, 0.1, 1.0, 10.0, 100.0] {
        for w in [0.1, 1.0, 10.0] {
            for alpha in [0.0, 1.0, PI / 3.0] {
                let check = lemma_tv_check(lambda, w, alpha, 1 << 17).unwrap();
                // quadrature error budget 1e-6 is inside `holds`
                assert!(
                    check.holds,
                    "[FAIL] criterion 4 at lambda={lambda}, w={w}, alpha={alpha}: lhs {} > rhs {}",
                    check.lhs, check.rhs
                );
            }
        }
    }
    c.pass();
}

// ---------------------------------------------------------------------------
// 5. planted integral bound
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_planted_integral_bound() {
    let c = Criterion::new(
        "criterion 5: I(X_V) <= planted-hypothesis bound + 4 SE on 20 orthogonal-base systems",
        120.0,
    );
    let model = NoiseModel::bernoulli();
    let mut count = 0;
    for d in [1usize, 2] {
        for &r in &[0.5, 1.0] {
            for &quarter_k in &[false, true] {
                for rep in 0..3 {
                    // orthogonal scaled bases: axis vectors with lengths
                    // >= 3R√d, alternating axes, sign-alternating
                    let n = 8 + 2 * rep;
                    let k = if quarter_k { n / 4 } else { 0 };
                    let body = StarBody::lp(d, 2.0).unwrap();
                    let vectors: Vec<Vec<f64>> = (0..n)
                        .map(|j| {
                            let mut v = vec![0.0; d];
                            let axis = j % d;
                            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                            let len = (3.0 + 0.5 * (j / d) as f64) * r * (d as f64).sqrt();
                            v[axis] = sign * len;
                            v
                        })
                        .collect();
                    let system = VectorSystem::new(vectors, r, body).unwrap();
                    let check =
                        verify_integral_bound(&system, &model, k, 100_000, 40 + count).unwrap();
                    assert!(
                        check.hypothesis_holds,
                        "[FAIL] criterion 5: planted system d={d} n={n} k={k} fails its own hypothesis (objective {})",
                        check.min_objective
                    );
                    assert!(
                        check.inequality_holds,
                        "[FAIL] criterion 5: I {} > rhs {} + 4*{} at d={d} n={n} k={k}",
                        check.i_estimate, check.rhs, check.i_std_error
                    );
                    count += 1;
                }
            }
        }
    }
    assert!(count >= 20, "only {count} planted systems exercised");
    c.pass();
}

// ---------------------------------------------------------------------------
// 6. hyperplane recovery
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_hyperplane_recovery() {
    let c = Criterion::new(
        "criterion 6: best_hyperplane reaches near_count >= n-k on 50 planted instances",
        60.0,
    );
    for i in 0..50u64 {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let n = 8 + (i % 5) as usize;
        let k = 1 + (i % 3) as usize;
        let r = 1.0;
        let (vectors, _) = planted_instance(d, n, k, r, 0xBEEF + i);
        let report = best_hyperplane(&vectors, k, r).unwrap();
        assert!(
            report.near_count >= n - k,
            "[FAIL] criterion 6 on instance {i} (d={d}, n={n}, k={k}): near_count {} < {}",
            report.near_count,
            n - k
        );
    }
    c.pass();
}

// ---------------------------------------------------------------------------
// 7. body constants
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_body_constants() {
    let c = Criterion::new(
        "criterion 7: kappa([-1,1]) within 1% of the erf oracle at 1e6 samples; mu(B_2^2) within 1% of pi",
        30.0,
    );
    let interval = StarBody::scaled_box(vec![1.0]).unwrap();
    let constants = estimate_constants(&interval, 1_000_000, 0x5EED).unwrap();
    let gamma_oracle = erf_series(1.0 / 2f64.sqrt());
    let kappa_oracle = (2.0 / PI).sqrt() * 2.0 / gamma_oracle;
    assert!(
        (kappa_oracle - 2.337474).abs() < 1e-5,
        "oracle drifted: {kappa_oracle}"
    );
    assert!(
        (constants.kappa - kappa_oracle).abs() / kappa_oracle < 0.01,
        "[FAIL] criterion 7: kappa {} vs oracle {kappa_oracle}",
        constants.kappa
    );

    // closed form for the disk...
    let disk = StarBody::lp(2, 2.0).unwrap();
    let disk_constants = estimate_constants(&disk, 1_000_000, 0x5EED + 1).unwrap();
    assert!(
        (disk_constants.mu - PI).abs() / PI < 0.01,
        "[FAIL] criterion 7: mu(B_2^2) {} vs pi",
        disk_constants.mu
    );
    // ...and the same body through the radial Monte Carlo path
    let radial_disk = StarBody::radial(
        2,
        1.0,
        "unit disk",
        std::sync::Arc::new(|_: &[f64]| 1.0),
    )
    .unwrap();
    let mc_constants = estimate_constants(&radial_disk, 1_000_000, 0x5EED + 2).unwrap();
    assert!(
        (mc_constants.mu - PI).abs() / PI < 0.01,
        "[FAIL] criterion 7: radial-path mu {} vs pi",
        mc_constants.mu
    );
    c.pass();
}

// ---------------------------------------------------------------------------
// 8. GAP calculus
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_gap_calculus() {
    let c = Criterion::new(
        "criterion 8: properness equivalence on 100 random GAPs; doubling({0..9},2)=1.9; integer witnesses",
        60.0,
    );
    let mut rng = mc::block_rng(0x6A9, 0);
    for i in 0..100 {
        let d = rng.gen_range(1..=3usize);
        let rank = rng.gen_range(1..=3usize);
        let generators: Vec<Vec<i64>> = (0..rank)
            .map(|_| {
                let mut g: Vec<i64> = (0..d).map(|_| rng.gen_range(-4..=4i64)).collect();
                if g.iter().all(|&x| x == 0) {
                    g[0] = 1;
                }
                g
            })
            .collect();
        let bounds: Vec<i64> = (0..rank).map(|_| rng.gen_range(1..=4i64)).collect();
        let int_gap = IntGap {
            d,
            generators: generators.clone(),
            bounds: bounds.clone(),
        };
        let real_gap = Gap::new(
            d,
            generators
                .iter()
                .map(|g| g.iter().map(|&x| x as f64).collect())
                .collect(),
            bounds,
        )
        .unwrap();
        assert!(real_gap.cardinality_cap() <= 100_000);
        let via_cardinality = real_gap.is_proper(100_000).unwrap();
        let via_collisions = properness_by_collision(&int_gap, 100_000).unwrap();
        assert_eq!(
            via_cardinality, via_collisions,
            "[FAIL] criterion 8: properness disagreement on GAP {i}: {int_gap:?}"
        );

        // every enumerated point must carry an integer witness that
        // reconstructs it exactly
        if i % 10 == 0 {
            let points = real_gap.enumerate(100_000).unwrap();
            for p in &points {
                let target: Vec<i64> = p.iter().map(|&x| x.round() as i64).collect();
                let witness = int_gap.member_witness(&target).unwrap_or_else(|| {
                    panic!("[FAIL] criterion 8: no witness for {target:?} in GAP {i}")
                });
                assert_eq!(int_gap.apply_coeffs(&witness), target);
            }
            // a point beyond per-axis reach is certified out
            let reach: Vec<i64> = (0..d)
                .map(|axis| {
                    int_gap
                        .generators
                        .iter()
                        .zip(&int_gap.bounds)
                        .map(|(g, &l)| l * g[axis].abs())
                        .sum::<i64>()
                        + 1
                })
                .collect();
            assert!(int_gap.member_witness(&reach).is_none());
        }
    }

    let run: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let ratio = doubling_ratio(&run, 2, 100_000).unwrap();
    assert_eq!(ratio, 1.9, "[FAIL] criterion 8: doubling ratio {ratio} != 1.9");
    c.pass();
}

// ---------------------------------------------------------------------------
// 9. pipeline end to end
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_pipeline_end_to_end() {
    let c = Criterion::new(
        "criterion 9: pipeline completes on the exact-progression system (part-2 distances 0) and on a generic d=2 system",
        300.0,
    );
    // (a) n copies of one vector in d = 1: an exact progression
    let body = StarBody::scaled_box(vec![1.0]).unwrap();
    let system = VectorSystem::new(vec![vec![1.0]; 8], 1.0, body).unwrap();
    let model = NoiseModel::bernoulli();
    let params = PipelineParams::new(1.0, 0.5, 4);
    let report = approximation_pipeline(&system, &model, &params, 11).unwrap();
    assert!(report.rho_meets_level);
    assert_eq!(report.rho_certificate, Certificate::Exact);
    for (i, dist) in report.verification.part2.distances.iter().enumerate() {
        if !report.split.bad_indices.contains(&i) {
            assert!(
                *dist <= 1e-12,
                "[FAIL] criterion 9: non-discarded vector {i} at distance {dist}"
            );
        }
    }
    for (label, lhs, rhs) in [
        (
            "part1-rank",
            report.verification.part1.rank as f64,
            report.verification.part1.rank_rhs,
        ),
        (
            "part1-cardinality",
            report.verification.part1.cardinality,
            report.verification.part1.cardinality_rhs,
        ),
        (
            "part2",
            report.verification.part2.count_within as f64,
            report.verification.part2.threshold,
        ),
        (
            "part4",
            report.verification.part4.lhs,
            report.verification.part4.rhs,
        ),
    ] {
        assert!(
            lhs.is_finite() && rhs.is_finite(),
            "[FAIL] criterion 9: {label} not finite ({lhs}, {rhs})"
        );
    }
    assert!(report.verification.part3.t_max.is_some());
    assert!(report.verification.part3.c_prime.unwrap().is_finite());
    // witnesses are exact reconstructions
    for (vertex, coeffs) in &report.verification.part3.witnesses {
        let t = report.verification.part3.t_max.unwrap() as i64;
        let target: Vec<i64> = vertex.iter().map(|&u| u * t).collect();
        let mut point = vec![0i64; 1];
        for (x, g) in coeffs.iter().zip(&report.gap.generators) {
            // generators are scale·(integer); recover integers
            let int_g = (g[0] / report.gap_scale).round() as i64;
            point[0] += x * int_g;
        }
        assert_eq!(point, target, "[FAIL] criterion 9: witness mismatch");
    }

    // (b) generic d = 2 system over the cube body
    let body = StarBody::lp(2, f64::INFINITY).unwrap();
    let mut rng = mc::block_rng(0x9E9E, 0);
    let vectors: Vec<Vec<f64>> = (0..6)
        .map(|_| {
            mc::gaussian_vec(&mut rng, 2)
                .into_iter()
                .map(|x| 0.8 * x)
                .collect()
        })
        .collect();
    let system = VectorSystem::new(vectors, 1.0, body).unwrap();
    let params = PipelineParams::new(1.0, 0.5, 3);
    let report = approximation_pipeline(&system, &model, &params, 13).unwrap();
    assert!(
        report.rho_meets_level,
        "generic system fell below its level: rho = {}",
        report.rho
    );
    // incommensurate directions leave the fitter nothing better than the
    // structural box fallback
    assert!(report.fit.used_fallback);
    // every stage record present and finite
    assert!(report.level_set.s_size >= 1);
    assert!(report.split.n_good + report.split.n_bad == 6);
    assert!(report.k_choice.k >= 1);
    assert!(report.rounding.f_size >= 1);
    assert!(report.dual_volume.lhs.is_finite() && report.dual_volume.rhs.is_finite());
    assert!(report.fit.cardinality >= 1);
    let v = &report.verification;
    assert!(v.part1.rank_rhs.is_finite() && v.part1.cardinality.is_finite());
    assert!(v.part2.threshold.is_finite());
    assert!(v.part3.t_max.is_some());
    assert!(v.part4.lhs.is_finite() && v.part4.rhs.is_finite());
    c.pass();
}

// ---------------------------------------------------------------------------
// 10. noise identities
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_noise_identities() {
    let c = Criterion::new(
        "criterion 10: Bernoulli growth bound on a 1e4 grid; t_norm periodicity at 1e-12; eta triangle at 1e-9",
        10.0,
    );
    let model = NoiseModel::bernoulli();
    let grid: Vec<f64> = (0..10_000)
        .map(|i| -10.0 + 20.0 * i as f64 / 9_999.0)
        .collect();
    let check = growth_check(&model, BERNOULLI_C_ETA, &grid).unwrap();
    assert!(
        check.holds,
        "[FAIL] criterion 10: growth bound violated by {} at a = {}",
        check.max_excess, check.worst_a
    );

    let mut rng = mc::block_rng(0x701, 0);
    for _ in 0..100 {
        let a = rng.gen_range(-30.0..30.0f64);
        assert!(
            (t_norm(a + PI) - t_norm(a)).abs() <= 1e-12,
            "[FAIL] criterion 10: t_norm not pi-periodic at {a}"
        );
        assert!((t_norm(a) - t_norm(-a)).abs() <= 1e-12);
        assert!(t_norm(a) >= 0.0 && t_norm(a) <= PI / 2.0 + 1e-15);
    }

    let third = 1.0 / 3.0;
    let models = [
        model,
        NoiseModel::finite(vec![(0.0, third), (1.0, third), (2.0, third)]).unwrap(),
    ];
    for m in &models {
        for _ in 0..100 {
            let a = rng.gen_range(-5.0..5.0f64);
            let b = rng.gen_range(-5.0..5.0f64);
            assert!(
                eta_norm(m, a + b) <= eta_norm(m, a) + eta_norm(m, b) + 1e-9,
                "[FAIL] criterion 10: eta triangle violated at a={a}, b={b}"
            );
        }
    }
    c.pass();
}
