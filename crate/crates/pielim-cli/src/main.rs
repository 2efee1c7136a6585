//! `pielim` — photon-information-efficiency limits, format-order
//! optimization, and deep-space link budgets from the command line.
//!
//! Every subcommand is deterministic: the same invocation produces
//! byte-identical output, data files carry no timestamps, and the version
//! banner appears only on the human-readable format. Numbers are printed in
//! their shortest round-trip form, so JSON and CSV output parse back to the
//! exact in-process values.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numeric domain
//! error, 3 certification failure.

mod scenario;

use clap::{ArgGroup, Args, Parser, Subcommand};
use pielim::{
    approx_domain_exceeded, certify_bound, coherent_detection_limit, design_variable_bandwidth,
    exact_mutual_information, information_rate, log_spaced, optimize_format_order_capped,
    optimize_vanishing_signal, photocount_probabilities, pie_approx_lambert, pie_bound, sweep,
    ChannelSpec, LinkAnalysis, LinkGeometry, OperatingPoint, PieResult, SweepGrid,
};
use scenario::{
    load_scenario, parse_axis_arg, parse_range_list, validate_axis, OutputFormat, ScenarioFile,
};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

/// Margin below which a certification run is treated as a bound violation.
const CERTIFY_FLOOR_BITS: f64 = -1e-10;

/// Default sweep axis: 50 log-spaced points per decade-spanning axis.
const DEFAULT_AXIS_START: f64 = 1e-8;
const DEFAULT_AXIS_STOP: f64 = 1.0;
const DEFAULT_AXIS_POINTS: usize = 50;

// ----------------------------------------------------------------
// Command line grammar
// ----------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "pielim",
    version,
    about = "Photon-information-efficiency limits of noisy photon-counting links"
)]
struct Cli {
    /// Emit one machine-readable JSON document instead of the human report.
    #[arg(long, global = true)]
    json: bool,

    /// Write output here instead of stdout (sweep CSV mode: file prefix).
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Suppress the version banner and warnings.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the PIE lower bound at one operating point and format order.
    Bound(BoundArgs),
    /// Maximize the PIE bound over the integer format order M.
    Optimize(OptimizeArgs),
    /// Vanishing-signal PIE limit at fixed background noise.
    Limit(LimitArgs),
    /// Optimize a whole (n_a, n_b) grid and emit figure-ready tables.
    Sweep(SweepArgs),
    /// Evaluate a deep-space link budget from a scenario file.
    Link(LinkArgs),
    /// Check the bound against the exact mutual-information oracle.
    Certify(CertifyArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("signal").required(true).args(["ns", "na"])))]
struct BoundArgs {
    /// Mean detected signal photons per frame (exclusive with --na).
    #[arg(long)]
    ns: Option<f64>,

    /// Mean detected signal photons per pulsed slot; n_s = M * n_a
    /// (exclusive with --ns).
    #[arg(long)]
    na: Option<f64>,

    /// Mean detected background photons per slot.
    #[arg(long)]
    nb: f64,

    /// Format order M: slots per frame.
    #[arg(long)]
    m: u64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct OptimizeArgs {
    /// Mean detected signal photons per pulsed slot; must be > 0
    /// (use `limit` for the n_a -> 0 regime).
    #[arg(long)]
    na: f64,

    /// Mean detected background photons per slot.
    #[arg(long)]
    nb: f64,

    /// Hardware cap on the format order search.
    #[arg(long = "m-cap", value_name = "M")]
    m_cap: Option<u64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LimitArgs {
    /// Mean detected background photons per slot; must be > 0.
    #[arg(long)]
    nb: f64,

    /// Print only the closed-form Lambert-W approximation.
    #[arg(long, conflicts_with = "both")]
    approx: bool,

    /// Print the numerical limit, the approximation, and their relative gap.
    #[arg(long)]
    both: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file supplying axes, order cap, and output format.
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,

    /// Signal axis: `start:stop:points` (log-spaced) or a comma list.
    #[arg(long = "na-axis", value_name = "AXIS")]
    na_axis: Option<String>,

    /// Background axis: same syntax as --na-axis.
    #[arg(long = "nb-axis", value_name = "AXIS")]
    nb_axis: Option<String>,

    /// Hardware cap on the format order search.
    #[arg(long = "m-cap", value_name = "M")]
    m_cap: Option<u64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct LinkArgs {
    /// Scenario file with the link geometry (may also carry n_b and m_cap).
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,

    /// Background photons per slot; overrides the scenario value.
    #[arg(long)]
    nb: Option<f64>,

    /// Hardware cap on the format order search.
    #[arg(long = "m-cap", value_name = "M")]
    m_cap: Option<u64>,

    /// Re-evaluate the budget at these ranges (comma list; `m`, `km`, `AU`).
    #[arg(long = "range-axis", value_name = "RANGES")]
    range_axis: Option<String>,

    /// With --range-axis: hold n_a at the reference value by rescaling the
    /// slot bandwidth (variable-bandwidth design, rate falls exactly as r^-2).
    #[arg(long = "fix-na", requires = "range_axis")]
    fix_na: bool,

    /// Hardware bandwidth ceiling for --fix-na designs, Hz.
    #[arg(long = "bandwidth-cap", value_name = "HZ", requires = "fix_na")]
    bandwidth_cap: Option<f64>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct CertifyArgs {
    /// Mean detected signal photons per frame; 0 reports the exact value only.
    #[arg(long)]
    ns: f64,

    /// Mean detected background photons per slot.
    #[arg(long)]
    nb: f64,

    /// Format order M.
    #[arg(long)]
    m: u64,
}

// ----------------------------------------------------------------
// Failure plumbing and output context
// ----------------------------------------------------------------

/// A command failure carrying the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    /// Exit code 1: the user asked for something malformed or inconsistent.
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<pielim::Error> for Failure {
    /// Exit code 2: the inputs parsed fine but left the numeric domain.
    fn from(e: pielim::Error) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
}

/// Shared output switches, resolved once from the global flags.
struct Ctx {
    json: bool,
    output: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    /// True when this invocation should render JSON, honoring a scenario's
    /// `format` field unless the --json flag already decided.
    fn json_mode(&self, file: Option<&ScenarioFile>) -> bool {
        self.json || matches!(file.and_then(|f| f.format), Some(OutputFormat::Json))
    }

    /// Version banner; human format only, silenced by --quiet.
    fn banner(&self) {
        if !self.quiet {
            println!("pielim {}", env!("CARGO_PKG_VERSION"));
        }
    }

    fn warn(&self, message: &str) {
        if !self.quiet {
            eprintln!("warning: {message}");
        }
    }

    /// Sends the rendered document to --output or stdout.
    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.output {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// Writes one of several output files, reporting the path on stdout.
    fn write_file(&self, path: &str, text: &str) -> Result<(), Failure> {
        std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write {path}: {e}")))?;
        if !self.quiet {
            println!("wrote {path}");
        }
        Ok(())
    }
}

// ----------------------------------------------------------------
// Rendering helpers
// ----------------------------------------------------------------

/// Shortest round-trip decimal form; the only f64 format CSV output uses.
fn num(x: f64) -> String {
    format!("{x}")
}

/// Human-report numbers: plain decimal in a comfortable magnitude window,
/// scientific notation outside it. Both forms round-trip.
fn hnum(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn log2_order(m: u64) -> f64 {
    (m as f64).log2()
}

/// CSV-quotes a free-text field (error messages may contain commas).
fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn json_doc(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON rendering cannot fail");
    text.push('\n');
    text
}

/// Rejects a zero order cap before it reaches the optimizer.
fn check_cap(m_cap: Option<u64>) -> Result<Option<u64>, Failure> {
    if m_cap == Some(0) {
        return Err(Failure::usage("--m-cap must be >= 1"));
    }
    Ok(m_cap)
}

// ----------------------------------------------------------------
// Entry point
// ----------------------------------------------------------------

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let ctx = Ctx {
        json: cli.json,
        output: cli.output.clone(),
        quiet: cli.quiet,
    };

    let result = match &cli.command {
        Command::Bound(args) => cmd_bound(&ctx, args),
        Command::Optimize(args) => cmd_optimize(&ctx, args),
        Command::Limit(args) => cmd_limit(&ctx, args),
        Command::Sweep(args) => cmd_sweep(&ctx, args),
        Command::Link(args) => cmd_link(&ctx, args),
        Command::Certify(args) => cmd_certify(&ctx, args),
    };

    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

// ----------------------------------------------------------------
// bound
// ----------------------------------------------------------------

fn cmd_bound(ctx: &Ctx, args: &BoundArgs) -> Result<u8, Failure> {
    let n_s = match (args.ns, args.na) {
        (Some(ns), None) => ns,
        (None, Some(na)) => {
            if !na.is_finite() || na <= 0.0 {
                return Err(Failure::usage(format!(
                    "--na must be finite and > 0, got {na}"
                )));
            }
            na * args.m as f64
        }
        _ => unreachable!("clap enforces exactly one of --ns/--na"),
    };

    let pie = pie_bound(n_s, args.nb, args.m)?;
    let (click, background) = photocount_probabilities(n_s, args.nb)?;

    if ctx.json_mode(None) {
        let doc = json!({
            "pie_bits_per_photon": pie,
            "p_c": click.value(),
            "p_b": background.value(),
        });
        ctx.emit(&json_doc(&doc))?;
    } else {
        ctx.banner();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "PIE bound at n_s = {}, n_b = {}, M = {}",
            hnum(n_s),
            hnum(args.nb),
            args.m
        );
        let _ = writeln!(out, "  pie   {} bits/photon", hnum(pie));
        let _ = writeln!(out, "  p_c   {}", hnum(click.value()));
        let _ = writeln!(out, "  p_b   {}", hnum(background.value()));
        ctx.emit(&out)?;
    }
    Ok(0)
}

// ----------------------------------------------------------------
// optimize
// ----------------------------------------------------------------

fn cmd_optimize(ctx: &Ctx, args: &OptimizeArgs) -> Result<u8, Failure> {
    if !args.na.is_finite() || args.na <= 0.0 {
        return Err(Failure::usage(format!(
            "--na must be > 0, got {}; use `pielim limit --nb {}` for the n_a -> 0 regime",
            args.na, args.nb
        )));
    }
    let m_cap = check_cap(args.m_cap)?;

    let point = OperatingPoint::new(args.na, args.nb)?;
    let result = optimize_format_order_capped(&point, m_cap)?;
    if !result.converged {
        ctx.warn(
            "the search did not certify a global optimum (order cap bound the \
             search or the certificate failed); reporting the best order found",
        );
    }

    if ctx.json_mode(None) {
        ctx.emit(&json_doc(&optimize_json(args.na, args.nb, &result)))?;
    } else {
        ctx.banner();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "optimal format at n_a = {}, n_b = {}",
            hnum(args.na),
            hnum(args.nb)
        );
        let _ = writeln!(out, "  pie_star     {} bits/photon", hnum(result.pie_star));
        let _ = writeln!(out, "  m_star       {}", result.m_star);
        let _ = writeln!(out, "  log2_m_star  {}", hnum(log2_order(result.m_star)));
        let _ = writeln!(out, "  n_s_star     {}", hnum(result.n_s_star));
        let _ = writeln!(out, "  converged    {}", yes_no(result.converged));
        let _ = writeln!(out, "  evaluations  {}", result.evaluations);
        ctx.emit(&out)?;
    }
    Ok(0)
}

fn optimize_json(n_a: f64, n_b: f64, result: &PieResult) -> Value {
    json!({
        "n_a": n_a,
        "n_b": n_b,
        "pie_star": result.pie_star,
        "m_star": result.m_star,
        "log2_m_star": log2_order(result.m_star),
        "n_s_star": result.n_s_star,
        "converged": result.converged,
        "evaluations": result.evaluations,
    })
}

// ----------------------------------------------------------------
// limit
// ----------------------------------------------------------------

fn cmd_limit(ctx: &Ctx, args: &LimitArgs) -> Result<u8, Failure> {
    let wants_approx = args.approx || args.both;
    let wants_numeric = !args.approx;

    let approx = if wants_approx {
        let value = pie_approx_lambert(args.nb)?;
        if approx_domain_exceeded(args.nb) {
            ctx.warn(&format!(
                "the closed-form approximation assumes n_b << 1; at n_b = {} (>= 2/e \
                 ~ 0.7358) its bracket has passed through zero and the value is not \
                 physically meaningful",
                hnum(args.nb)
            ));
        }
        if value < 0.0 {
            ctx.warn(&format!(
                "approximation fell below zero at n_b = {}; it is only valid for \
                 small backgrounds",
                hnum(args.nb)
            ));
        }
        Some(value)
    } else {
        None
    };

    let numeric = if wants_numeric {
        Some(optimize_vanishing_signal(args.nb)?)
    } else {
        None
    };

    if ctx.json_mode(None) {
        let mut doc = serde_json::Map::new();
        doc.insert("n_b".into(), json!(args.nb));
        if let Some(limit) = &numeric {
            doc.insert("pie_bits_per_photon".into(), json!(limit.pie_star));
            doc.insert("n_s_star".into(), json!(limit.n_s_star));
        }
        if let Some(value) = approx {
            doc.insert("pie_approx_bits_per_photon".into(), json!(value));
        }
        if let (Some(limit), Some(value)) = (&numeric, approx) {
            doc.insert(
                "relative_gap".into(),
                json!((limit.pie_star - value).abs() / limit.pie_star),
            );
        }
        ctx.emit(&json_doc(&Value::Object(doc)))?;
    } else {
        ctx.banner();
        let mut out = String::new();
        let _ = writeln!(out, "vanishing-signal PIE limit at n_b = {}", hnum(args.nb));
        if let Some(limit) = &numeric {
            let _ = writeln!(
                out,
                "  numerical  {} bits/photon  (maximized at n_s = {})",
                hnum(limit.pie_star),
                hnum(limit.n_s_star)
            );
        }
        if let Some(value) = approx {
            let _ = writeln!(out, "  approx     {} bits/photon", hnum(value));
        }
        if let (Some(limit), Some(value)) = (&numeric, approx) {
            let _ = writeln!(
                out,
                "  rel gap    {}",
                hnum((limit.pie_star - value).abs() / limit.pie_star)
            );
        }
        ctx.emit(&out)?;
    }
    Ok(0)
}

// ----------------------------------------------------------------
// sweep
// ----------------------------------------------------------------

fn cmd_sweep(ctx: &Ctx, args: &SweepArgs) -> Result<u8, Failure> {
    let file = match &args.scenario {
        Some(path) => Some(load_scenario(path).map_err(Failure::usage)?),
        None => None,
    };

    let n_a_axis = resolve_axis(
        "n_a axis",
        args.na_axis.as_deref(),
        file.as_ref().and_then(|f| f.n_a_axis.as_ref()),
    )?;
    let n_b_axis = resolve_axis(
        "n_b axis",
        args.nb_axis.as_deref(),
        file.as_ref().and_then(|f| f.n_b_axis.as_ref()),
    )?;
    let m_cap = check_cap(args.m_cap.or(file.as_ref().and_then(|f| f.m_cap)))?;

    let grid = sweep(&n_a_axis, &n_b_axis, m_cap)?;
    let failed = grid.failed_cells();
    if failed > 0 {
        ctx.warn(&format!(
            "{failed} of {} cells failed; see the error column",
            n_a_axis.len() * n_b_axis.len()
        ));
    }

    if ctx.json_mode(file.as_ref()) {
        ctx.emit(&json_doc(&sweep_json(&grid, m_cap)))?;
    } else if let Some(prefix_path) = &ctx.output {
        let prefix = prefix_path.display().to_string();
        ctx.write_file(&format!("{prefix}_cells.csv"), &cells_csv(&grid))?;
        ctx.write_file(
            &format!("{prefix}_pie_star.csv"),
            &panel_csv(
                &grid,
                "pie_star: optimized bound, bits per detected signal photon",
                |c| num(c.pie_star),
            ),
        )?;
        ctx.write_file(
            &format!("{prefix}_log2_m_star.csv"),
            &panel_csv(&grid, "log2_m_star: optimal format order, log2", |c| {
                num(log2_order(c.m_star))
            }),
        )?;
        ctx.write_file(
            &format!("{prefix}_n_s_star.csv"),
            &panel_csv(
                &grid,
                "n_s_star: detected photons per pulse at the optimum",
                |c| num(c.n_s_star),
            ),
        )?;
    } else {
        print!("{}", cells_csv(&grid));
    }

    Ok(if failed > 0 { 2 } else { 0 })
}

/// Axis priority: explicit flag, then scenario file, then the default
/// 50-point log grid over [1e-8, 1].
fn resolve_axis(
    name: &str,
    flag: Option<&str>,
    from_file: Option<&scenario::AxisSpec>,
) -> Result<Vec<f64>, Failure> {
    let axis = if let Some(text) = flag {
        parse_axis_arg(name, text).map_err(Failure::usage)?
    } else if let Some(spec) = from_file {
        spec.resolve(name).map_err(Failure::usage)?
    } else {
        log_spaced(DEFAULT_AXIS_START, DEFAULT_AXIS_STOP, DEFAULT_AXIS_POINTS)
            .expect("default axis parameters are valid")
    };
    validate_axis(name, &axis).map_err(Failure::usage)?;
    Ok(axis)
}

/// One row per cell, row-major over n_a then n_b. The `error` column is
/// appended only when at least one cell failed, so the header stays exactly
/// the documented seven columns on success.
fn cells_csv(grid: &SweepGrid) -> String {
    let with_error = grid.failed_cells() > 0;
    let mut out = String::from("n_a,n_b,pie_bits_per_photon,m_star,log2_m_star,n_s_star,converged");
    if with_error {
        out.push_str(",error");
    }
    out.push('\n');

    for (i_a, i_b, cell) in grid.iter() {
        let n_a = grid.n_a_axis()[i_a];
        let n_b = grid.n_b_axis()[i_b];
        match cell {
            Ok(c) => {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{},{}",
                    num(n_a),
                    num(n_b),
                    num(c.pie_star),
                    c.m_star,
                    num(log2_order(c.m_star)),
                    num(c.n_s_star),
                    c.converged
                );
                if with_error {
                    out.push(',');
                }
            }
            Err(e) => {
                let _ = write!(out, "{},{},,,,,", num(n_a), num(n_b));
                if with_error {
                    let _ = write!(out, ",{}", csv_quote(&e.to_string()));
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Matrix layout, one file per quantity: rows follow n_a, columns follow
/// n_b, and the leading comment line names the quantity and orientation.
fn panel_csv(grid: &SweepGrid, title: &str, value: impl Fn(&PieResult) -> String) -> String {
    let mut out = format!("# {title}; rows: n_a, columns: n_b\n");
    out.push_str("n_a");
    for &n_b in grid.n_b_axis() {
        let _ = write!(out, ",{}", num(n_b));
    }
    out.push('\n');

    for (i_a, &n_a) in grid.n_a_axis().iter().enumerate() {
        out.push_str(&num(n_a));
        for i_b in 0..grid.n_b_axis().len() {
            out.push(',');
            if let Ok(c) = grid.cell(i_a, i_b) {
                out.push_str(&value(c));
            }
        }
        out.push('\n');
    }
    out
}

fn sweep_json(grid: &SweepGrid, m_cap: Option<u64>) -> Value {
    let cells: Vec<Value> = grid
        .iter()
        .map(|(i_a, i_b, cell)| {
            let n_a = grid.n_a_axis()[i_a];
            let n_b = grid.n_b_axis()[i_b];
            match cell {
                Ok(c) => optimize_json(n_a, n_b, c),
                Err(e) => json!({ "n_a": n_a, "n_b": n_b, "error": e.to_string() }),
            }
        })
        .collect();
    json!({
        "n_a_axis": grid.n_a_axis(),
        "n_b_axis": grid.n_b_axis(),
        "m_cap": m_cap,
        "cells": cells,
    })
}

// ----------------------------------------------------------------
// link
// ----------------------------------------------------------------

fn cmd_link(ctx: &Ctx, args: &LinkArgs) -> Result<u8, Failure> {
    let file = load_scenario(&args.scenario).map_err(Failure::usage)?;
    let spec = file.geometry.as_ref().ok_or_else(|| {
        Failure::usage(format!(
            "scenario {} has no geometry section",
            args.scenario.display()
        ))
    })?;
    let geometry = spec.resolve().map_err(Failure::usage)?;
    let n_b = args
        .nb
        .or(file.n_b)
        .ok_or_else(|| Failure::usage("n_b is required: pass --nb or set n_b in the scenario"))?;
    let m_cap = check_cap(args.m_cap.or(file.m_cap))?;
    if args.fix_na && m_cap.is_some() {
        return Err(Failure::usage(
            "--fix-na re-optimizes the preserved operating point without a cap; \
             drop --m-cap (and the scenario m_cap) to use it",
        ));
    }

    let reference = information_rate(&geometry, n_b, m_cap)?;
    warn_near_field(ctx, &reference, geometry.range_m);
    let coherent = coherent_detection_limit(n_b)?;

    let mut entries: Vec<(LinkGeometry, LinkAnalysis)> = Vec::new();
    if let Some(text) = &args.range_axis {
        for range_m in parse_range_list(text).map_err(Failure::usage)? {
            let (scaled, analysis) = if args.fix_na {
                design_variable_bandwidth(
                    &geometry,
                    reference.n_a,
                    n_b,
                    range_m,
                    args.bandwidth_cap,
                )?
            } else {
                let mut scaled = geometry;
                scaled.range_m = range_m;
                let analysis = information_rate(&scaled, n_b, m_cap)?;
                (scaled, analysis)
            };
            warn_near_field(ctx, &analysis, range_m);
            entries.push((scaled, analysis));
        }
    }

    if ctx.json_mode(Some(&file)) {
        let doc = if entries.is_empty() {
            link_json(&geometry, &reference, coherent)
        } else {
            json!({
                "reference": link_json(&geometry, &reference, coherent),
                "range_sweep": entries
                    .iter()
                    .map(|(g, a)| link_json(g, a, coherent))
                    .collect::<Vec<Value>>(),
            })
        };
        ctx.emit(&json_doc(&doc))?;
    } else {
        ctx.banner();
        let mut out = String::new();
        render_link_block(&mut out, "link budget", &geometry, &reference, coherent);
        for (scaled, analysis) in &entries {
            out.push('\n');
            let label = if args.fix_na {
                "variable-bandwidth design"
            } else {
                "fixed-bandwidth budget"
            };
            render_link_block(&mut out, label, scaled, analysis, coherent);
        }
        ctx.emit(&out)?;
    }
    Ok(0)
}

fn warn_near_field(ctx: &Ctx, analysis: &LinkAnalysis, range_m: f64) {
    if analysis.near_field {
        ctx.warn(&format!(
            "eta_ch = {} exceeds 1 at range {} m: the apertures are inside each \
             other's near field and the far-field formula does not apply; the \
             raw value is reported unclamped",
            hnum(analysis.eta_ch),
            hnum(range_m)
        ));
    }
}

fn link_json(geometry: &LinkGeometry, analysis: &LinkAnalysis, coherent: f64) -> Value {
    let mut value = serde_json::to_value(analysis).expect("LinkAnalysis serializes");
    let map = value
        .as_object_mut()
        .expect("LinkAnalysis is a JSON object");
    map.insert("range_m".into(), json!(geometry.range_m));
    map.insert("bandwidth_hz".into(), json!(geometry.bandwidth_hz));
    map.insert("coherent_pie_bits_per_photon".into(), json!(coherent));
    map.insert(
        "counting_vs_coherent_ratio".into(),
        json!(analysis.pie_star / coherent),
    );
    value
}

fn render_link_block(
    out: &mut String,
    label: &str,
    geometry: &LinkGeometry,
    analysis: &LinkAnalysis,
    coherent: f64,
) {
    let ratio = analysis.pie_star / coherent;
    let verdict = if ratio > 1.0 {
        "photon counting wins"
    } else {
        "coherent detection wins"
    };
    let _ = writeln!(out, "{label} at range {} m", hnum(geometry.range_m));
    let _ = writeln!(out, "  eta_ch                   {}", hnum(analysis.eta_ch));
    let _ = writeln!(
        out,
        "  near field               {}",
        yes_no(analysis.near_field)
    );
    let _ = writeln!(
        out,
        "  slot bandwidth           {} Hz",
        hnum(geometry.bandwidth_hz)
    );
    let _ = writeln!(out, "  n_a (signal/slot)        {}", hnum(analysis.n_a));
    let _ = writeln!(out, "  n_b (background/slot)    {}", hnum(analysis.n_b));
    let _ = writeln!(
        out,
        "  pie_star                 {} bits/photon",
        hnum(analysis.pie_star)
    );
    let _ = writeln!(out, "  m_star                   {}", analysis.m_star);
    let _ = writeln!(
        out,
        "  log2_m_star              {}",
        hnum(log2_order(analysis.m_star))
    );
    let _ = writeln!(
        out,
        "  n_s_star                 {}",
        hnum(analysis.n_s_star)
    );
    let _ = writeln!(
        out,
        "  t_s_star                 {} s",
        hnum(analysis.t_s_star)
    );
    let _ = writeln!(
        out,
        "  rate                     {} bits/s",
        hnum(analysis.rate_bps)
    );
    let _ = writeln!(
        out,
        "  background counts/frame  {}",
        hnum(analysis.background_counts_per_frame)
    );
    let _ = writeln!(
        out,
        "  converged                {}",
        yes_no(analysis.converged)
    );
    let _ = writeln!(
        out,
        "  coherent limit           {} bits/photon",
        hnum(coherent)
    );
    let _ = writeln!(
        out,
        "  counting / coherent      {}  ({verdict})",
        hnum(ratio)
    );
}

// ----------------------------------------------------------------
// certify
// ----------------------------------------------------------------

fn cmd_certify(ctx: &Ctx, args: &CertifyArgs) -> Result<u8, Failure> {
    if args.ns == 0.0 {
        let spec = ChannelSpec::from_operating(0.0, args.nb, args.m)?;
        let exact = exact_mutual_information(&spec);
        let note = "the bound requires n_s > 0; reporting the exact mutual information only";
        if ctx.json_mode(None) {
            let doc = json!({
                "bound_bits": Value::Null,
                "exact_bits": exact,
                "margin_bits": Value::Null,
                "note": note,
            });
            ctx.emit(&json_doc(&doc))?;
        } else {
            ctx.banner();
            let mut out = String::new();
            let _ = writeln!(
                out,
                "certification at n_s = 0, n_b = {}, M = {}",
                hnum(args.nb),
                args.m
            );
            let _ = writeln!(out, "  note    {note}");
            let _ = writeln!(out, "  exact   {} bits/use", hnum(exact));
            ctx.emit(&out)?;
        }
        return Ok(0);
    }

    let cert = certify_bound(args.ns, args.nb, args.m)?;
    let holds = cert.margin_bits >= CERTIFY_FLOOR_BITS;

    if ctx.json_mode(None) {
        let mut text = serde_json::to_string_pretty(&cert).expect("Certification serializes");
        text.push('\n');
        ctx.emit(&text)?;
    } else {
        ctx.banner();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "certification at n_s = {}, n_b = {}, M = {}",
            hnum(args.ns),
            hnum(args.nb),
            args.m
        );
        let _ = writeln!(out, "  bound   {} bits/use", hnum(cert.bound_bits));
        let _ = writeln!(out, "  exact   {} bits/use", hnum(cert.exact_bits));
        let _ = writeln!(out, "  margin  {} bits/use", hnum(cert.margin_bits));
        let _ = writeln!(
            out,
            "  {}",
            if holds {
                "PASS: the bound holds (margin >= -1e-10)"
            } else {
                "FAIL: the bound is violated (margin < -1e-10)"
            }
        );
        ctx.emit(&out)?;
    }

    Ok(if holds { 0 } else { 3 })
}
