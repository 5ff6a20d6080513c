use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;
use sstest::format::{round6, sig6};
use sstest::{
    cauchy_combine, clx_max_test, run_independence_diagnostic, run_power_experiment, run_size_experiment,
    spatial_sign_tests, srivastava_sum_test, DataMatrix, ExperimentPlan, LeaveOutMode, Method, RunOptions,
    SolverConfig,
};

use crate::input::read_matrix;
use crate::{Command, CommonArgs, Format, ModeArg};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Test { data, common } => {
            let x = read_matrix(&data.input, data.transpose)?;
            cmd_test(&x, &common)
        }
        Command::Paired {
            data,
            paired_with,
            split,
            common,
        } => {
            let x = read_matrix(&data.input, data.transpose)?;
            let diff = match (paired_with, split) {
                (Some(other), false) => {
                    let y = read_matrix(&other, data.transpose)?;
                    if (x.nrows(), x.ncols()) != (y.nrows(), y.ncols()) {
                        bail!(
                            "paired samples differ in shape: {}x{} vs {}x{}",
                            x.nrows(),
                            x.ncols(),
                            y.nrows(),
                            y.ncols()
                        );
                    }
                    x.difference(&y)?
                }
                (None, true) => {
                    let (a, b) = x.split_columns()?;
                    a.difference(&b)?
                }
                _ => bail!("paired needs either --paired-with FILE or --split"),
            };
            cmd_test(&diff, &common)
        }
        Command::Simulate {
            plan,
            replications,
            common,
        } => cmd_simulate(&plan, replications, &common),
        Command::Independence {
            plan,
            replications,
            common,
        } => cmd_independence(&plan, replications, &common),
    }
}

fn mode(common: &CommonArgs) -> Option<LeaveOutMode> {
    common.mode.map(|m| match m {
        ModeArg::Exact => LeaveOutMode::Exact,
        ModeArg::SharedDhat => LeaveOutMode::SharedDhat,
    })
}

fn solver(common: &CommonArgs) -> Result<SolverConfig> {
    let mut cfg = SolverConfig::default();
    if let Some(tol) = common.tol {
        cfg.tol_loc = tol;
        cfg.tol_scale = tol;
    }
    if let Some(m) = common.max_iter {
        cfg.max_iter = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn methods(common: &CommonArgs) -> Result<Option<Vec<Method>>> {
    let Some(names) = &common.methods else {
        return Ok(None);
    };
    let mut out = Vec::new();
    for name in names {
        let m: Method = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        bail!("--methods is empty");
    }
    Ok(Some(out))
}

fn alpha(common: &CommonArgs, default: f64) -> Result<f64> {
    let a = common.alpha.unwrap_or(default);
    if !(a > 0.0 && a < 1.0) {
        bail!("--alpha must lie in (0, 1), got {a}");
    }
    Ok(a)
}

fn threads(common: &CommonArgs) -> Result<Option<usize>> {
    match common.threads {
        Some(0) => bail!("--threads must be at least 1"),
        t => Ok(t),
    }
}

fn emit(text: &str, common: &CommonArgs) -> Result<()> {
    match &common.output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn mode_label(mode: LeaveOutMode) -> &'static str {
    match mode {
        LeaveOutMode::Exact => "exact",
        LeaveOutMode::SharedDhat => "shared-dhat (approximate)",
    }
}

struct TestRow {
    method: Method,
    statistic: f64,
    p_value: f64,
}

fn cmd_test(x: &DataMatrix, common: &CommonArgs) -> Result<()> {
    let (n, p) = (x.nrows(), x.ncols());
    if n < 4 {
        bail!("need at least 4 observations, got {n}");
    }
    if p < 3 {
        bail!("need at least 3 variables, got {p}");
    }
    let alpha = alpha(common, 0.05)?;
    let cfg = solver(common)?;
    let mode = mode(common).unwrap_or_default();
    let methods = methods(common)?.unwrap_or_else(|| Method::ALL.to_vec());
    let threads = threads(common)?.unwrap_or(1);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let mut warnings = Vec::new();
    let ss = if methods.iter().any(|m| m.is_spatial_sign()) {
        let o = pool
            .install(|| spatial_sign_tests(x, &cfg, mode))
            .context("spatial-sign tests failed")?;
        if !o.max.hr.converged {
            warnings.push(format!(
                "location/scale solver stopped after {} iterations without converging (location residual {}, scale residual {})",
                o.max.hr.iterations,
                sig6(o.max.hr.residual_location),
                sig6(o.max.hr.residual_scale)
            ));
        }
        if o.sum.nonconverged_pairs > 0 {
            warnings.push(format!(
                "{} leave-two-out solves did not converge",
                o.sum.nonconverged_pairs
            ));
        }
        if o.combo.clamped {
            warnings.push("a p-value was clamped away from 0 or 1 before the Cauchy combination".into());
        }
        Some(o)
    } else {
        None
    };
    let needs_max = methods.iter().any(|m| matches!(m, Method::Max | Method::Com));
    let needs_sum = methods.iter().any(|m| matches!(m, Method::Sum | Method::Com));
    let max = needs_max.then(|| clx_max_test(x)).transpose().context("MAX test failed")?;
    let sum = needs_sum.then(|| srivastava_sum_test(x)).transpose().context("SUM test failed")?;

    let mut rows = Vec::new();
    for &method in &methods {
        let (statistic, p_value) = match method {
            Method::SsMax => {
                let o = ss.as_ref().expect("computed");
                (o.max.normalized, o.max.p_value)
            }
            Method::SsSum => {
                let o = ss.as_ref().expect("computed");
                (o.sum.normalized, o.sum.p_value)
            }
            Method::SsCc => {
                let o = ss.as_ref().expect("computed");
                (o.combo.cauchy_stat, o.combo.p_cc)
            }
            Method::Max => {
                let o = max.as_ref().expect("computed");
                (o.statistic, o.p_value)
            }
            Method::Sum => {
                let o = sum.as_ref().expect("computed");
                (o.statistic, o.p_value)
            }
            Method::Com => {
                let c = cauchy_combine(
                    max.as_ref().expect("computed").p_value,
                    sum.as_ref().expect("computed").p_value,
                )?;
                (c.cauchy_stat, c.p_cc)
            }
        };
        rows.push(TestRow {
            method,
            statistic,
            p_value,
        });
    }

    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let decision = |r: &TestRow| if r.p_value < alpha { "reject" } else { "retain" };
    let text = match common.format {
        Format::Csv => {
            let mut s = String::from("method,statistic,p_value,decision,alpha,n,p,mode\n");
            for r in &rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{n},{p},{}",
                    r.method.name(),
                    sig6(r.statistic),
                    sig6(r.p_value),
                    decision(r),
                    sig6(alpha),
                    mode_label(mode)
                )?;
            }
            s
        }
        Format::Json => {
            let results: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "method": r.method.name(),
                        "statistic": round6(r.statistic),
                        "p_value": round6(r.p_value),
                        "decision": decision(r),
                    })
                })
                .collect();
            let doc = json!({
                "n": n,
                "p": p,
                "alpha": round6(alpha),
                "mode": mode_label(mode),
                "approximate": mode.is_approximate(),
                "results": results,
                "warnings": warnings,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    emit(&text, common)?;
    if common.output.is_some() {
        for r in &rows {
            println!(
                "{:<7} statistic {:>12}  p-value {:>12}  {}",
                r.method.name(),
                sig6(r.statistic),
                sig6(r.p_value),
                decision(r)
            );
        }
    }
    Ok(())
}

fn load_plan(path: &Path, replications: Option<usize>, common: &CommonArgs) -> Result<ExperimentPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut plan: ExperimentPlan =
        serde_json::from_str(&text).with_context(|| format!("{}: invalid plan", path.display()))?;
    if let Some(r) = replications {
        plan.replications = r;
    }
    if let Some(a) = common.alpha {
        plan.alpha = a;
    }
    if let Some(m) = methods(common)? {
        plan.methods = m;
    }
    if let Some(m) = mode(common) {
        plan.mode = m;
    }
    if let Some(tol) = common.tol {
        plan.solver.tol_loc = tol;
        plan.solver.tol_scale = tol;
    }
    if let Some(m) = common.max_iter {
        plan.solver.max_iter = m;
    }
    if let Some(seed) = common.seed {
        for (k, sc) in plan.scenarios.iter_mut().enumerate() {
            sc.seed = seed.wrapping_add(k as u64);
        }
    }
    if let Some(t) = threads(common)? {
        plan.parallelism = t;
    }
    plan.validate()?;
    Ok(plan)
}

fn cmd_simulate(path: &Path, replications: Option<usize>, common: &CommonArgs) -> Result<()> {
    let plan = load_plan(path, replications, common)?;
    let report = match &plan.power {
        Some(grid) => run_power_experiment(&plan, &grid.sparsity, &grid.strength)?,
        None => run_size_experiment(&plan)?,
    };
    if plan.mode.is_approximate() {
        eprintln!("note: shared-dhat mode approximates the leave-two-out statistic");
    }
    let failures: usize = report.rows.iter().map(|r| r.failures).sum();
    if failures > 0 {
        eprintln!("warning: {failures} method draws failed or did not converge (see the failures column)");
    }
    let text = match common.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    emit(&text, common)
}

fn cmd_independence(path: &Path, replications: Option<usize>, common: &CommonArgs) -> Result<()> {
    let plan = load_plan(path, replications, common)?;
    let opts = RunOptions::from(&plan);
    let mut results = Vec::new();
    for (k, sc) in plan.scenarios.iter().enumerate() {
        let corr = run_independence_diagnostic(sc, plan.replications, &opts)
            .with_context(|| format!("scenario {k}"))?;
        results.push((format!("S{k}"), sc, corr));
    }
    let text = match common.format {
        Format::Csv => {
            let mut s = String::from("scenario_id,family,n,p,replications,correlation,mode\n");
            for (id, sc, corr) in &results {
                writeln!(
                    s,
                    "{id},{},{},{},{},{},{}",
                    sc.family.label(),
                    sc.n,
                    sc.p,
                    plan.replications,
                    sig6(*corr),
                    mode_label(plan.mode)
                )?;
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = results
                .iter()
                .map(|(id, sc, corr)| {
                    json!({
                        "scenario_id": id,
                        "family": sc.family.label(),
                        "n": sc.n,
                        "p": sc.p,
                        "replications": plan.replications,
                        "correlation": round6(*corr),
                    })
                })
                .collect();
            let doc = json!({
                "mode": mode_label(plan.mode),
                "approximate": plan.mode.is_approximate(),
                "scenarios": rows,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    emit(&text, common)
}
