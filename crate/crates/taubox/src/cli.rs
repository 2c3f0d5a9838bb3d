//! Batch front door: command dispatch and report emission.
//!
//! Exit codes: 0 success, 1 computation error, 2 configuration error,
//! 3 resource budget exceeded.

use std::path::PathBuf;

use crate::config::{Command, RunConfig};
use crate::divisor::exact_t;
use crate::engine::{compare, main_term};
use crate::error::{Error, Result};
use crate::integrals::QuadMethod;
use crate::local::{local_factor_table, DEFAULT_ENUM_BUDGET};
use crate::quadpoly::QuadPoly;
use crate::report::{fmt_f64, Report};
use crate::singular::{h_coeffs, smith_range_ok, JET_GUARD};
use crate::util::primes_up_to;
use crate::verify::{minor_arc_sweep, orthogonality_check, parseval_check};

/// Default cap on divisor-table length for exact sums.
pub const DEFAULT_TABLE_BUDGET: u64 = 1 << 31;

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub path: PathBuf,
    pub rows: usize,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::BudgetExceeded { .. } => 3,
        _ => 1,
    }
}

/// Runs one command and writes its report; the report is assembled fully in
/// memory first, so failures leave no partial output.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let mut report = Report::new();
    stamp_meta(&mut report, config);
    match config.command {
        Command::Exact => run_exact(config, &mut report)?,
        Command::Estimate => run_estimate(config, &mut report)?,
        Command::Compare => run_compare(config, &mut report)?,
        Command::LocalDump => run_local_dump(config, &mut report)?,
        Command::Verify => run_verify(config, &mut report)?,
    }
    let path = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", config.command.name())));
    report.write(&path)?;
    Ok(RunOutput {
        path,
        rows: report.row_count(),
    })
}

/// Run metadata embedded as header comments. The worker count is absent on
/// purpose: results are thread-count invariant and reports must be
/// byte-identical across worker counts.
fn stamp_meta(report: &mut Report, config: &RunConfig) {
    let poly = &config.poly;
    report
        .meta("command", config.command.name())
        .meta("ell", poly.ell())
        .meta(
            "Q",
            format!(
                "[{}]",
                poly.quad_coeffs()
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        )
        .meta(
            "b",
            format!(
                "[{}]",
                poly.linear_coeffs()
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        )
        .meta("c", poly.constant())
        .meta("k", config.k)
        .meta(
            "X",
            format!(
                "[{}]",
                config
                    .x_schedule
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        )
        .meta("P0", config.trunc.p0)
        .meta("M0", config.trunc.m0)
        .meta("Q0", config.trunc.q0)
        .meta(
            "quadrature",
            match config.quad.method {
                QuadMethod::TensorGaussLegendre { initial_panels } => {
                    format!("tensor, panels = {initial_panels}")
                }
                QuadMethod::MonteCarlo { samples } => format!("mc, samples = {samples}"),
            },
        )
        .meta("tol", fmt_f64(config.quad.rel_tol))
        .meta("seed", config.seed);
}

fn run_exact(config: &RunConfig, report: &mut Report) -> Result<()> {
    report.columns(&["X", "exact"]);
    let mut xs = config.x_schedule.clone();
    xs.sort_unstable();
    xs.dedup();
    for x in xs {
        let t = exact_t(&config.poly, config.k, x, DEFAULT_TABLE_BUDGET, config.threads)?;
        report.row(vec![x.to_string(), t.to_string()]);
    }
    Ok(())
}

fn run_estimate(config: &RunConfig, report: &mut Report) -> Result<()> {
    let ss = h_coeffs(&config.poly, config.k, &config.trunc, config.threads)?;
    report.columns(&["X", "main_term"]);
    let mut xs = config.x_schedule.clone();
    xs.sort_unstable();
    xs.dedup();
    for x in xs {
        let m = main_term(&config.poly, x, &ss, &config.quad, config.threads)?;
        report.row(vec![x.to_string(), fmt_f64(m)]);
    }
    footer_singular(report, &ss.h, ss.tail_estimate);
    Ok(())
}

fn run_compare(config: &RunConfig, report: &mut Report) -> Result<()> {
    let rep = compare(
        &config.poly,
        config.k,
        &config.x_schedule,
        &config.trunc,
        &config.quad,
        DEFAULT_TABLE_BUDGET,
        config.threads,
    )?;
    report.columns(&["X", "exact", "main_term", "ratio", "abs_err"]);
    for row in &rep.rows {
        report.row(vec![
            row.x.to_string(),
            row.exact.to_string(),
            fmt_f64(row.main_term),
            fmt_f64(row.ratio),
            fmt_f64(row.abs_err),
        ]);
    }
    match rep.fitted_exponent {
        Some(e) => report.footer("fitted_exponent", fmt_f64(e)),
        None => report.footer("fitted_exponent", "absent (need >= 3 sizes)"),
    };
    report.footer("theorem_exponent", fmt_f64(rep.theorem_exponent));
    footer_singular(report, &rep.h, rep.tail_estimate);
    Ok(())
}

fn footer_singular(report: &mut Report, h: &[f64], tail: f64) {
    report.footer(
        "H",
        format!(
            "[{}]",
            h.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
        ),
    );
    report.footer("tail_estimate", fmt_f64(tail));
}

fn run_local_dump(config: &RunConfig, report: &mut Report) -> Result<()> {
    report.columns(&["p", "m", "rho", "S_F", "F_k_at_1"]);
    let order = config.k as usize + JET_GUARD;
    for p in primes_up_to(config.trunc.p0) {
        let table = local_factor_table(
            &config.poly,
            config.k,
            p,
            config.trunc.m0,
            order,
            config.trunc.budget,
            config.threads,
        )?;
        for m in 1..=table.depth as usize {
            report.row(vec![
                p.to_string(),
                m.to_string(),
                table.rho[m].to_string(),
                fmt_f64(table.s_local[m]),
                fmt_f64(table.fk_jets[m - 1].value()),
            ]);
        }
    }
    Ok(())
}

fn run_verify(config: &RunConfig, report: &mut Report) -> Result<()> {
    let x = config.x_schedule.first().copied().unwrap_or(30);
    // grid identities at small scale
    let parseval = parseval_check(config.k, 1000, config.threads)?;
    report.meta("parseval_rel_err", fmt_f64(parseval.rel_err));
    if config.poly.sieve_bound(3) <= 10_000 {
        let orth = orthogonality_check(&config.poly, config.k, 3, DEFAULT_ENUM_BUDGET, config.threads)?;
        report.meta("orthogonality_rel_err", fmt_f64(orth.rel_err));
    }
    if let Some(&xmax) = config.x_schedule.iter().max() {
        let xf = xmax as f64;
        for q in 1..=config.trunc.q0.min(50) {
            if !smith_range_ok(config.k, xf, q) {
                report.meta(
                    "warning",
                    format!("q = {q} exceeds the X^(2/(k+1)) range of the AP approximation at X = {xmax}"),
                );
                break;
            }
        }
    }
    // minor-arc sweep over odd moduli
    let qs: Vec<u64> = (1..=15).map(|i| 2 * i + 1).collect();
    let rows = minor_arc_sweep(&config.poly, &qs, x, DEFAULT_ENUM_BUDGET, config.threads)?;
    report.columns(&["alpha", "q", "a", "beta", "I_abs", "bound", "ratio"]);
    for r in &rows {
        report.row(vec![
            fmt_f64(r.alpha),
            r.q.to_string(),
            r.a.to_string(),
            fmt_f64(r.beta),
            fmt_f64(r.i_abs),
            fmt_f64(r.bound),
            fmt_f64(r.ratio),
        ]);
    }
    let worst = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    report.footer("max_ratio", fmt_f64(worst));
    Ok(())
}

/// Validates that a polynomial passes hypotheses for the largest scheduled X
/// (used by the binary for friendlier early errors).
pub fn preflight(poly: &QuadPoly, xs: &[u64]) -> Result<()> {
    if let Some(&x) = xs.iter().max() {
        let v = poly.validate(x);
        if !v.passes_for_diagnostics() {
            return Err(Error::HypothesisViolated(v.violations().join("; ")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn tmpdir() -> PathBuf {
        let dir = std::env::temp_dir().join(format!("taubox-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn exact_command_end_to_end() {
        let out = tmpdir().join("exact1.csv");
        let text = format!(
            "command = exact\nell = 3\nQ = [1,0,0, 0,1,0, 0,0,1]\nb = [0,0,0]\nc = 0\nk = 2\nX = [1, 2]\noutput = {}\n",
            out.display()
        );
        let cfg = parse_config(&text).unwrap();
        let res = run(&cfg).unwrap();
        assert_eq!(res.rows, 2);
        let body = std::fs::read_to_string(&out).unwrap();
        assert!(body.contains("\n1,2\n"), "X=1 row: {body}");
        assert!(body.contains("\n2,29\n"), "X=2 row: {body}");
        assert!(body.contains("# command = exact"));
    }

    #[test]
    fn local_dump_small() {
        let out = tmpdir().join("dump1.csv");
        let text = format!(
            "command = local-dump\nell = 3\nQ = [1,0,0, 0,1,0, 0,0,1]\nb = [0,0,0]\nc = 0\nk = 2\nP0 = 10\nM0 = 2\noutput = {}\n",
            out.display()
        );
        let cfg = parse_config(&text).unwrap();
        run(&cfg).unwrap();
        let body = std::fs::read_to_string(&out).unwrap();
        // rho(2) = 4 row present with S_F(2) = 0
        assert!(body.lines().any(|l| l.starts_with("2,1,4,0,")), "{body}");
        // rows for p = 2,3,5,7 at m = 1,2
        assert_eq!(body.lines().filter(|l| !l.starts_with('#') && !l.starts_with('p')).count(), 8);
    }

    #[test]
    fn compare_command_writes_footers() {
        let out = tmpdir().join("cmp1.csv");
        let text = format!(
            "command = compare\nell = 3\nQ = [1,0,0, 0,1,0, 0,0,1]\nb = [0,0,0]\nc = 0\nk = 2\nX = [10, 20]\nP0 = 20\nQ0 = 40\noutput = {}\n",
            out.display()
        );
        let cfg = parse_config(&text).unwrap();
        run(&cfg).unwrap();
        let body = std::fs::read_to_string(&out).unwrap();
        assert!(body.contains("# fitted_exponent = absent"));
        assert!(body.contains("# theorem_exponent = 2.8"));
        assert!(body.contains("# H = ["));
        assert!(body.contains("X,exact,main_term,ratio,abs_err"));
    }

    #[test]
    fn invalid_config_never_creates_output() {
        let out = tmpdir().join("never.csv");
        let text = format!(
            "command = compare\nell = 3\nQ = [1,0,0, 0,1,0, 0,0,1]\nb = [0,0,0]\nc = 0\nk = 1\nX = [10]\noutput = {}\n",
            out.display()
        );
        assert!(parse_config(&text).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code_for(&Error::BudgetExceeded {
                what: "x",
                required: 2,
                budget: 1
            }),
            3
        );
        assert_eq!(exit_code_for(&Error::InvalidArgument("x".into())), 1);
    }
}
