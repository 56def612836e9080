use std::io::Write;

use gauss_collocation::convergence::{ConvergenceReport, SweepOptions, MIN_FIT_POINTS};
use gauss_collocation::ocp::builtin;
use gauss_collocation::solver::{endpoint_controls, newton_solve_with, EndpointMode};
use gauss_collocation::{
    certify, run_sweep, AnalyticSolution, CertificationReport, DerivativeMode, DiffMatrices,
    DiscreteSolution, Error, Execution, GaussRule, ProblemSpec, SolverOptions,
};
use serde_json::json;

use crate::args::{Format, OutputArgs, SolverArgs};
use crate::output::{fmt_f64, json_f64, open, write_csv};

/// Why a command did not finish successfully.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments; exit code 2.
    Usage(String),
    /// Numerical or convergence failure, or flagged output; exit code 1.
    Numeric(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => m,
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Numeric(format!("cannot write output: {e}"))
}

fn emit(
    output: &OutputArgs,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let mut out = open(&output.output).map_err(io_failure)?;
    body(out.as_mut()).map_err(io_failure)?;
    out.flush().map_err(io_failure)
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)
}

pub fn rule(n: usize, output: &OutputArgs) -> Result<(), Failure> {
    let rule = GaussRule::new(n).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(output, |out| match output.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = rule
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let w = if (1..=n).contains(&i) {
                        fmt_f64(rule.weights()[i - 1])
                    } else {
                        String::new()
                    };
                    vec![i.to_string(), fmt_f64(t), w]
                })
                .collect();
            write_csv(out, &["i".into(), "tau".into(), "weight".into()], &rows)
        }
        Format::Json => write_json(
            out,
            &json!({ "n": n, "nodes": rule.nodes(), "weights": rule.weights() }),
        ),
    })
}

pub fn certify_orders(ns: &[usize], output: &OutputArgs) -> Result<(), Failure> {
    let report: CertificationReport =
        certify(ns, Execution::default()).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(output, |out| match output.format {
        Format::Csv => {
            let header = [
                "N",
                "p1_norm",
                "p1_minus_one_plus_tauN",
                "p2_norm",
                "p2_argmax_row",
                "flip_max_dev",
            ]
            .map(String::from);
            let rows: Vec<Vec<String>> = report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.n.to_string(),
                        fmt_f64(e.p1_norm),
                        fmt_f64(e.p1_gap),
                        fmt_f64(e.p2_norm),
                        e.p2_argmax_row.to_string(),
                        fmt_f64(e.flip_max_dev),
                    ]
                })
                .collect();
            write_csv(out, &header, &rows)
        }
        Format::Json => {
            let value = serde_json::to_value(&report).map_err(std::io::Error::other)?;
            write_json(out, &value)
        }
    })?;
    let flags: Vec<String> = report
        .entries
        .iter()
        .filter(|e| e.flagged())
        .map(|e| format!("N={}: {}", e.n, e.flags.join("; ")))
        .collect();
    if flags.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("flagged: {}", flags.join(", "))))
    }
}

fn problem(args: &SolverArgs) -> Result<(ProblemSpec, AnalyticSolution), Failure> {
    let (spec, oracle) = builtin(&args.problem)
        .ok_or_else(|| Failure::Usage(format!("unknown problem `{}`", args.problem)))?;
    let spec = if args.finite_differences {
        spec.with_mode(DerivativeMode::FiniteDifference)
    } else {
        spec
    };
    Ok((spec, oracle))
}

fn solver_options(args: &SolverArgs) -> SolverOptions {
    SolverOptions {
        tolerance: args.tolerance,
        max_iterations: args.max_iterations as usize,
        execution: Execution::default(),
        ..SolverOptions::default()
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One dump row per node `τ_0 .. τ_{N+1}`.
struct NodeRow {
    i: usize,
    tau: f64,
    t: f64,
    x: Vec<f64>,
    u: Vec<f64>,
    lambda: Vec<f64>,
    errors: [f64; 3],
}

fn node_rows(
    spec: &ProblemSpec,
    oracle: &AnalyticSolution,
    rule: &GaussRule,
    sol: &DiscreteSolution,
) -> Result<Vec<NodeRow>, Failure> {
    let big_n = rule.n();
    let numeric = |e: Error| Failure::Numeric(e.to_string());
    let (u_start, u_end) =
        endpoint_controls(spec, rule, sol, EndpointMode::MinimumPrinciple).map_err(numeric)?;
    let missing = vec![f64::NAN; spec.m()];
    let lambda_start = sol.costate_at(rule, -1.0).map_err(numeric)?;
    rule.nodes()
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let t = spec.map_time(tau).map_err(numeric)?;
            let u = match i {
                0 => u_start
                    .as_ref()
                    .map_or_else(|| missing.clone(), |u| u.as_slice().to_vec()),
                i if i == big_n + 1 => u_end
                    .as_ref()
                    .map_or_else(|| missing.clone(), |u| u.as_slice().to_vec()),
                i => sol.u_row(i),
            };
            let lambda = if i == 0 {
                lambda_start.as_slice().to_vec()
            } else {
                sol.lambda_row(i)
            };
            let x = sol.x_row(i);
            let errors = [
                euclid(&x, oracle.state_at(t).as_slice()),
                euclid(&u, oracle.control_at(t).as_slice()),
                euclid(&lambda, oracle.costate_at(t).as_slice()),
            ];
            Ok(NodeRow {
                i,
                tau,
                t,
                x,
                u,
                lambda,
                errors,
            })
        })
        .collect()
}

fn labelled(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |k| format!("{prefix}{k}"))
}

pub fn solve(n: usize, args: &SolverArgs, output: &OutputArgs) -> Result<(), Failure> {
    let (spec, oracle) = problem(args)?;
    let dm = DiffMatrices::with_n(n).map_err(|e| Failure::Usage(e.to_string()))?;
    let opts = solver_options(args);
    let (sol, converged) = match newton_solve_with(&spec, &dm, &opts) {
        Ok(sol) => (sol, true),
        Err(Error::NonConvergence { best, .. }) => (*best, false),
        Err(Error::SingularJacobian { iterate, .. }) => (*iterate, false),
        Err(e) => return Err(Failure::Numeric(e.to_string())),
    };
    let rows = node_rows(&spec, &oracle, dm.rule(), &sol)?;
    let (nx, nu) = (spec.n(), spec.m());

    emit(output, |out| match output.format {
        Format::Csv => {
            let header: Vec<String> = ["i", "tau", "t"]
                .into_iter()
                .map(String::from)
                .chain(labelled("x", nx))
                .chain(labelled("u", nu))
                .chain(labelled("lambda", nx))
                .chain(["err_state", "err_control", "err_costate"].map(String::from))
                .collect();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut fields = vec![r.i.to_string(), fmt_f64(r.tau), fmt_f64(r.t)];
                    fields.extend(
                        r.x.iter()
                            .chain(&r.u)
                            .chain(&r.lambda)
                            .chain(&r.errors)
                            .map(|&v| fmt_f64(v)),
                    );
                    fields
                })
                .collect();
            write_csv(out, &header, &body)
        }
        Format::Json => {
            let nodes: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    let list = |v: &[f64]| v.iter().map(|&x| json_f64(x)).collect::<Vec<_>>();
                    json!({
                        "i": r.i,
                        "tau": json_f64(r.tau),
                        "t": json_f64(r.t),
                        "x": list(&r.x),
                        "u": list(&r.u),
                        "lambda": list(&r.lambda),
                        "err_state": json_f64(r.errors[0]),
                        "err_control": json_f64(r.errors[1]),
                        "err_costate": json_f64(r.errors[2]),
                    })
                })
                .collect();
            let history: Vec<serde_json::Value> =
                sol.residual_history.iter().map(|&v| json_f64(v)).collect();
            write_json(
                out,
                &json!({
                    "problem": spec.name,
                    "n": n,
                    "converged": converged,
                    "iterations": sol.iterations,
                    "residual": json_f64(sol.residual_norm),
                    "residual_history": history,
                    "min_hessian_eigenvalue": sol.min_hessian_eigenvalue.map(json_f64),
                    "nodes": nodes,
                }),
            )
        }
    })?;

    let status = if converged {
        "converged"
    } else {
        "not converged"
    };
    let summary = format!(
        "solve: {status} problem={} N={n} iterations={} residual={}",
        spec.name,
        sol.iterations,
        fmt_f64(sol.residual_norm)
    );
    if output.format == Format::Csv {
        println!("{summary}");
    }
    if converged {
        Ok(())
    } else {
        Err(Failure::Numeric(summary))
    }
}

fn rates_line(report: &ConvergenceReport) -> String {
    let r = report.rates;
    let fmt = |a: Option<f64>| a.map_or_else(|| "none".to_string(), |v| format!("{v:.6}"));
    let mut line = format!(
        "rates: state={} control={} costate={}",
        fmt(r.state),
        fmt(r.control),
        fmt(r.costate)
    );
    if r.state.is_none() || r.control.is_none() || r.costate.is_none() {
        line.push_str(&format!(
            " (insufficient points: a fit needs at least {MIN_FIT_POINTS} converged errors above the floor)"
        ));
    }
    line
}

pub fn sweep(
    ns: &[usize],
    args: &SolverArgs,
    warm_start: bool,
    output: &OutputArgs,
) -> Result<(), Failure> {
    let (spec, oracle) = problem(args)?;
    let opts = SweepOptions {
        solver: solver_options(args),
        warm_start,
        execution: Execution::default(),
    };
    let report = run_sweep(&spec, &oracle, ns, &opts).map_err(|e| Failure::Usage(e.to_string()))?;
    emit(output, |out| match output.format {
        Format::Csv => {
            let header = [
                "N",
                "err_state",
                "err_control",
                "err_costate",
                "iterations",
                "residual",
            ]
            .map(String::from);
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_f64(r.err_state),
                        fmt_f64(r.err_control),
                        fmt_f64(r.err_costate),
                        r.iterations.to_string(),
                        fmt_f64(r.residual),
                    ]
                })
                .collect();
            write_csv(out, &header, &rows)
        }
        Format::Json => {
            let value = serde_json::to_value(&report).map_err(std::io::Error::other)?;
            write_json(out, &value)
        }
    })?;
    if output.format == Format::Csv {
        println!("{}", rates_line(&report));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gauss_collocation::convergence::SweepRow;

    fn row(n: usize, e: f64) -> SweepRow {
        SweepRow {
            n,
            err_state: e,
            err_control: e,
            err_costate: e,
            iterations: 1,
            residual: 0.0,
            dense_err_state: e,
            converged: true,
        }
    }

    #[test]
    fn rates_line_reports_fit() {
        let report =
            ConvergenceReport::from_rows("p", vec![row(1, 1e-1), row(2, 1e-2), row(3, 1e-3)]);
        assert_eq!(
            rates_line(&report),
            "rates: state=1.000000 control=1.000000 costate=1.000000"
        );
    }

    #[test]
    fn rates_line_flags_short_sweeps() {
        let report = ConvergenceReport::from_rows("p", vec![row(5, 1e-1), row(7, 1e-2)]);
        let line = rates_line(&report);
        assert!(line.starts_with("rates: state=none control=none costate=none"));
        assert!(line.contains("insufficient points"));
    }

    #[test]
    fn failure_codes() {
        assert_eq!(Failure::Usage("x".into()).exit_code(), 2);
        assert_eq!(Failure::Numeric("x".into()).exit_code(), 1);
    }
}
