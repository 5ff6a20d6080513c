mod common;

use sstest::{
    hr_estimate, spatial_sign_tests, t_max, t_sum, tr_r2_hat, DataMatrix, Family, LeaveOutMode, Sampler,
    Scenario, ScatterSpec, SignalSpec, SolverConfig,
};

fn tight() -> SolverConfig {
    SolverConfig {
        tol_loc: 1e-12,
        tol_scale: 1e-12,
        max_iter: 1000,
        ..SolverConfig::default()
    }
}

fn draw(family: Family, n: usize, p: usize, signal: SignalSpec, seed: u64) -> DataMatrix {
    Sampler::new(&Scenario {
        family,
        n,
        p,
        scatter: ScatterSpec::Ar1 { rho: 0.5 },
        signal,
        seed,
    })
    .unwrap()
    .draw(0)
}

#[test]
fn hr_satisfies_both_equations_on_small_sample() {
    let x = DataMatrix::from_rows(&[
        vec![0.3, -1.2, 2.0],
        vec![1.1, 0.4, -0.7],
        vec![-0.8, 0.9, 0.1],
        vec![2.2, -0.3, 1.4],
        vec![-1.5, -2.1, 0.6],
        vec![0.2, 1.7, -1.9],
    ])
    .unwrap();
    let est = hr_estimate(&x, &tight()).unwrap();
    assert!(est.converged);
    let p = 3.0;
    let eps: Vec<Vec<f64>> = x
        .rows()
        .map(|r| (0..3).map(|j| (r[j] - est.theta[j]) / est.d[j].sqrt()).collect())
        .collect();
    let u: Vec<Vec<f64>> = eps
        .iter()
        .map(|e| {
            let r = e.iter().map(|a| a * a).sum::<f64>().sqrt();
            e.iter().map(|a| a / r).collect()
        })
        .collect();
    for j in 0..3 {
        let mean_u: f64 = u.iter().map(|v| v[j]).sum::<f64>() / 6.0;
        let mean_u2: f64 = u.iter().map(|v| v[j] * v[j]).sum::<f64>() / 6.0;
        assert!(mean_u.abs() < 1e-11, "location equation, coordinate {j}: {mean_u}");
        assert!((p * mean_u2 - 1.0).abs() < 1e-11, "scale equation, coordinate {j}");
    }
    let (theta, d) = common::hr(&common::rows_of(&x));
    let c = d[0] / est.d[0];
    for j in 0..3 {
        assert!((theta[j] - est.theta[j]).abs() < 1e-9);
        assert!((d[j] / est.d[j] - c).abs() < 1e-9 * c);
    }
}

#[test]
fn t_max_matches_transcription() {
    let x = draw(Family::Normal, 20, 10, SignalSpec::SparseEqual { s: 2, kappa: 0.4 }, 5);
    let lib = t_max(&x, &tight()).unwrap().t_max;
    let oracle = common::t_max(&common::rows_of(&x));
    assert!((lib - oracle).abs() < 1e-8 * oracle.abs().max(1.0), "{lib} vs {oracle}");
}

#[test]
fn t_sum_and_trace_match_transcription() {
    let x = draw(Family::StudentT { df: 3.0 }, 14, 6, SignalSpec::Null, 8);
    let (t_oracle, tr_oracle) = common::t_sum(&common::rows_of(&x));
    let out = t_sum(&x, &tight(), LeaveOutMode::Exact).unwrap();
    assert!((out.t_sum - t_oracle).abs() < 1e-9, "{} vs {t_oracle}", out.t_sum);
    assert!((out.tr_r2_hat - tr_oracle).abs() < 1e-8 * tr_oracle);
    let tr = tr_r2_hat(&x, &tight(), LeaveOutMode::Exact).unwrap();
    assert!((tr - out.tr_r2_hat).abs() < 1e-12 * tr);
}

#[test]
fn statistics_ignore_column_scaling() {
    let x = draw(Family::Normal, 16, 7, SignalSpec::SparseEqual { s: 3, kappa: 0.3 }, 21);
    let scales = [0.01, 3.0, 150.0, 0.7, 1.0, 42.0, 1e-3];
    let y = x.scale_columns(&scales).unwrap();
    let cfg = SolverConfig::default();
    for mode in [LeaveOutMode::Exact, LeaveOutMode::SharedDhat] {
        let a = spatial_sign_tests(&x, &cfg, mode).unwrap();
        let b = spatial_sign_tests(&y, &cfg, mode).unwrap();
        let close = |u: f64, v: f64| (u - v).abs() <= 1e-9 * u.abs().max(v.abs()).max(1e-12);
        assert!(close(a.max.t_max, b.max.t_max));
        assert!(close(a.sum.t_sum, b.sum.t_sum));
        assert!(close(a.sum.tr_r2_hat, b.sum.tr_r2_hat));
        assert!(close(a.combo.p_cc, b.combo.p_cc));
    }
}

#[test]
fn statistics_ignore_row_order() {
    let x = draw(Family::MixtureNormal { gamma: 0.8, inflation: 9.0 }, 12, 5, SignalSpec::Null, 3);
    let perm: Vec<usize> = vec![4, 11, 0, 7, 2, 9, 1, 10, 3, 8, 6, 5];
    let y = x.permute_rows(&perm).unwrap();
    let cfg = SolverConfig::default();
    let a = spatial_sign_tests(&x, &cfg, LeaveOutMode::Exact).unwrap();
    let b = spatial_sign_tests(&y, &cfg, LeaveOutMode::Exact).unwrap();
    assert!((a.max.t_max - b.max.t_max).abs() < 1e-6 * a.max.t_max.abs().max(1.0));
    assert!((a.sum.t_sum - b.sum.t_sum).abs() < 1e-6);
}

#[test]
fn sum_statistic_grows_with_dense_shift() {
    let cfg = SolverConfig::default();
    let null = draw(Family::Normal, 30, 40, SignalSpec::Null, 77);
    let alt = draw(Family::Normal, 30, 40, SignalSpec::with_strength(40, 2.0), 77);
    let a = t_sum(&null, &cfg, LeaveOutMode::Exact).unwrap();
    let b = t_sum(&alt, &cfg, LeaveOutMode::Exact).unwrap();
    assert!(b.normalized > a.normalized + 2.0, "{} vs {}", b.normalized, a.normalized);
}

#[test]
fn trace_estimate_for_independent_columns() {
    let sampler = Sampler::new(&Scenario {
        family: Family::Normal,
        n: 100,
        p: 100,
        scatter: ScatterSpec::Ar1 { rho: 0.0 },
        signal: SignalSpec::Null,
        seed: 31,
    })
    .unwrap();
    let cfg = SolverConfig::default();
    let mean = (0..50)
        .map(|rep| tr_r2_hat(&sampler.draw(rep), &cfg, LeaveOutMode::Exact).unwrap())
        .sum::<f64>()
        / 50.0;
    assert!((mean / 100.0 - 1.0).abs() < 0.15, "{mean}");
}
