//! Command-line front end: `solve`, `certify` and `vertices`.
//!
//! Exit codes: `solve` returns 0 optimal, 2 infeasible, 3 unbounded;
//! `certify` returns 0 extreme, 4 not extreme, 5 infeasible; any usage or
//! I/O error returns 1.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::bound::{certify_measure, moment_bound, BoundResult, Status, FEAS_TOL};
use crate::error::Error;
use crate::extremality::{enumerate_extreme, ExtremalityCertificate};
use crate::measure::{Atom, DiscreteMeasure, FiniteSpace, Location, MomentTable};
use crate::problem::{load_problem, Domain, MomentProblem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_UNBOUNDED: i32 = 3;
pub const EXIT_NOT_EXTREME: i32 = 4;
pub const EXIT_NOT_MEMBER: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "momentset", version, about = "Sharp generalized-moment bounds and extreme-point certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutputFormat {
    /// Machine-readable JSON (17 significant digits)
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Human-readable text (default)
    #[arg(long)]
    text: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the sharp bound on the objective
    Solve {
        problem: PathBuf,
        #[arg(long, value_name = "S")]
        grid_step: Option<f64>,
        #[arg(long)]
        no_refine: bool,
        #[arg(long, value_name = "T")]
        tol: Option<f64>,
        #[command(flatten)]
        format: OutputFormat,
    },
    /// Decide whether a measure is an extreme point of the moment set
    Certify {
        problem: PathBuf,
        #[arg(long, value_name = "MEASURE_JSON")]
        measure: PathBuf,
        #[command(flatten)]
        format: OutputFormat,
    },
    /// List every extreme point of a finite-domain moment set
    Vertices { problem: PathBuf },
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EXIT_USAGE, e.to_string())
    }
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve {
            problem,
            grid_step,
            no_refine,
            tol,
            format,
        } => cmd_solve(&problem, grid_step, no_refine, tol, format.json, out),
        Command::Certify { problem, measure, format } => cmd_certify(&problem, &measure, format.json, out),
        Command::Vertices { problem } => cmd_vertices(&problem, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn out_err(e: io::Error) -> Failure {
    Failure(EXIT_USAGE, format!("writing output: {e}"))
}

/// Floats as JSON numbers with 17 significant digits; non-finite values as strings.
fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().copied().map(num).collect())
}

struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    serde::Serialize::serialize(v, &mut ser).expect("serializing a JSON value cannot fail");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

fn location_json(loc: Location, space: Option<&FiniteSpace>) -> Map<String, Value> {
    let mut m = Map::new();
    match loc {
        Location::Coord(c) => {
            if let Some(i) = space.and_then(|s| s.index_of(loc)) {
                m.insert("id".into(), Value::from(i));
            }
            m.insert("coord".into(), num(c));
        }
        Location::Point(i) => {
            m.insert("id".into(), Value::from(i));
            if let Some(c) = space.and_then(|s| s.coord(i)) {
                m.insert("coord".into(), num(c));
            }
        }
    }
    m
}

fn atoms_json(m: &DiscreteMeasure, space: Option<&FiniteSpace>) -> Value {
    Value::Array(
        m.atoms()
            .iter()
            .map(|a| {
                let mut o = location_json(a.location, space);
                o.insert("weight".into(), num(a.weight));
                Value::Object(o)
            })
            .collect(),
    )
}

fn finite_space(problem: &MomentProblem) -> Option<&FiniteSpace> {
    match &problem.domain {
        Domain::Finite { space } => Some(space),
        Domain::Interval { .. } => None,
    }
}

fn cmd_solve(
    path: &Path,
    grid_step: Option<f64>,
    no_refine: bool,
    tol: Option<f64>,
    json_mode: bool,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let mut problem = load_problem(&read(path)?)?;
    if let Some(s) = grid_step {
        problem = problem.with_grid_step(s)?;
    }
    if no_refine {
        problem.options.refine = false;
    }
    if let Some(t) = tol {
        problem.options.tol = t;
        problem.validate()?;
    }
    let r = moment_bound(&problem)?;
    let code = match r.status {
        Status::Optimal => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::Unbounded => EXIT_UNBOUNDED,
    };
    let space = finite_space(&problem);
    if json_mode {
        writeln!(out, "{}", to_json_string(&solve_json(&problem, &r, space))).map_err(out_err)?;
    } else {
        write_solve_text(&problem, &r, space, out).map_err(out_err)?;
    }
    Ok(code)
}

fn extremality_json(c: &ExtremalityCertificate) -> Value {
    json!({
        "is_extreme": c.is_extreme,
        "cells": c.cell_count(),
        "rank": c.rank,
        "feasibility_residual": num(c.feasibility_residual),
        "moment_vectors": c.moment_vectors.iter().map(|v| nums(v)).collect::<Vec<_>>(),
    })
}

fn solve_json(problem: &MomentProblem, r: &BoundResult, space: Option<&FiniteSpace>) -> Value {
    let mut o = Map::new();
    o.insert("status".into(), Value::from(r.status.as_str()));
    o.insert("sense".into(), Value::from(problem.sense.as_str()));
    o.insert("value".into(), num(r.value));
    if let Some(v) = r.lp_value {
        o.insert("lp_value".into(), num(v));
    }
    if let Some(m) = &r.measure {
        o.insert("atoms".into(), atoms_json(m, space));
    }
    if let Some(d) = &r.dual {
        o.insert(
            "dual".into(),
            json!({"y": nums(&d.y), "lower_multipliers": nums(&d.lower), "upper_multipliers": nums(&d.upper)}),
        );
    }
    if let (Some(c), Some(rep)) = (&r.certificate, &r.dual_report) {
        let worst = c.worst_point.map(|l| Value::Object(location_json(l, space))).unwrap_or(Value::Null);
        o.insert(
            "certificate".into(),
            json!({
                "accepted": rep.accepted,
                "certified_value": num(c.value),
                "dual_bound": num(rep.dual_bound),
                "gap": num(rep.gap),
                "max_violation": num(rep.max_violation),
                "worst_point": worst,
            }),
        );
    }
    if let Some(e) = &r.extremality {
        o.insert("extremality".into(), extremality_json(e));
    }
    if let Some(res) = &r.phase1_residual {
        o.insert("phase1_residual".into(), nums(res));
    }
    if let Some(ray) = &r.ray {
        o.insert(
            "ray".into(),
            Value::Array(
                ray.direction
                    .iter()
                    .map(|&(i, d)| {
                        let mut m = location_json(Location::Point(i), space);
                        m.insert("weight".into(), num(d));
                        Value::Object(m)
                    })
                    .collect(),
            ),
        );
    }
    o.insert("grid_size".into(), Value::from(r.grid_size));
    o.insert("refined".into(), Value::from(r.refined));
    o.insert("iterations".into(), Value::from(r.iterations));
    o.insert("breakpoint_warning".into(), Value::from(r.breakpoint_warning));
    Value::Object(o)
}

fn fmt_loc(loc: Location, space: Option<&FiniteSpace>) -> String {
    match (loc, space) {
        (Location::Point(i), Some(s)) => match s.coord(i) {
            Some(c) => format!("x = {c} (#{i})"),
            None => format!("#{i}"),
        },
        (Location::Point(i), None) => format!("#{i}"),
        (Location::Coord(c), _) => format!("x = {c}"),
    }
}

fn write_solve_text(
    problem: &MomentProblem,
    r: &BoundResult,
    space: Option<&FiniteSpace>,
    out: &mut dyn Write,
) -> io::Result<()> {
    writeln!(out, "status: {}", r.status.as_str())?;
    writeln!(out, "{} value: {}", problem.sense.as_str(), r.value)?;
    if let Some(m) = &r.measure {
        writeln!(out, "atoms ({}):", m.len())?;
        for a in m.atoms() {
            writeln!(out, "  {}  weight {}", fmt_loc(a.location, space), a.weight)?;
        }
    }
    if let Some(d) = &r.dual {
        writeln!(out, "dual y: {:?}", d.y)?;
    }
    if let Some(rep) = &r.dual_report {
        writeln!(
            out,
            "certificate: {} (dual bound {}, gap {:e}, max violation {:e})",
            if rep.accepted { "accepted" } else { "rejected" },
            rep.dual_bound,
            rep.gap,
            rep.max_violation
        )?;
    }
    if let Some(e) = &r.extremality {
        writeln!(
            out,
            "extremality: {} (cells {}, rank {})",
            if e.is_extreme { "extreme" } else { "not extreme" },
            e.cell_count(),
            e.rank
        )?;
    }
    if let Some(res) = &r.phase1_residual {
        writeln!(out, "phase-I residual: {res:?}")?;
    }
    if let Some(ray) = &r.ray {
        let pts: Vec<String> = ray.direction.iter().map(|&(i, d)| format!("{} ({d})", fmt_loc(Location::Point(i), space))).collect();
        writeln!(out, "improving ray: {}", pts.join(", "))?;
    }
    writeln!(
        out,
        "grid: {} points, refined: {}, iterations: {}",
        r.grid_size,
        if r.refined { "yes" } else { "no" },
        r.iterations
    )?;
    if r.breakpoint_warning {
        writeln!(out, "warning: some comparison has a non-affine side; its jumps may be mis-sampled")?;
    }
    Ok(())
}

fn parse_measure(text: &str, problem: &MomentProblem) -> Result<DiscreteMeasure, Failure> {
    let bad = |path: &str, msg: &str| Failure(EXIT_USAGE, format!("measure file: {path}: {msg}"));
    let v: Value = serde_json::from_str(text).map_err(|e| bad("$", &format!("invalid JSON: {e}")))?;
    let atoms = v
        .get("atoms")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("atoms", "expected an array"))?;
    let space = finite_space(problem);
    let mut out = Vec::with_capacity(atoms.len());
    for (i, a) in atoms.iter().enumerate() {
        let path = format!("atoms[{i}]");
        let weight = a
            .get("weight")
            .and_then(Value::as_f64)
            .ok_or_else(|| bad(&format!("{path}.weight"), "expected a number"))?;
        let location = match (a.get("id").and_then(Value::as_u64), a.get("coord").and_then(Value::as_f64)) {
            (Some(id), _) => Location::Point(id as usize),
            (None, Some(c)) => match space {
                Some(s) => Location::Point(
                    s.index_of(Location::Coord(c))
                        .ok_or_else(|| bad(&format!("{path}.coord"), "no domain point at this coordinate"))?,
                ),
                None => Location::Coord(c),
            },
            (None, None) => return Err(bad(&path, "needs \"coord\" or \"id\"")),
        };
        if weight != 0.0 {
            out.push(Atom { location, weight });
        }
    }
    Ok(DiscreteMeasure::new(out)?)
}

fn located(m: &DiscreteMeasure, weights: &[f64]) -> DiscreteMeasure {
    let atoms = m
        .atoms()
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(a, &w)| Atom { location: a.location, weight: w })
        .collect();
    DiscreteMeasure::new(atoms).unwrap_or_else(|_| DiscreteMeasure::zero())
}

fn cmd_certify(path: &Path, measure_path: &Path, json_mode: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let problem = load_problem(&read(path)?)?;
    let m = parse_measure(&read(measure_path)?, &problem)?;
    let tol = problem.options.tol.max(FEAS_TOL);
    let space = finite_space(&problem);
    let cert = match certify_measure(&problem, &m, tol) {
        Ok(c) => c,
        Err(Error::NotMember { residual }) => {
            if json_mode {
                let v = json!({"member": false, "feasibility_residual": num(residual)});
                writeln!(out, "{}", to_json_string(&v)).map_err(out_err)?;
            } else {
                writeln!(out, "not a member of the moment set (residual {residual:e})").map_err(out_err)?;
            }
            return Ok(EXIT_NOT_MEMBER);
        }
        Err(e) => return Err(e.into()),
    };
    let c = &cert.certificate;
    let witness = c.witness.as_ref().map(|w| {
        (
            w.phi.clone(),
            located(&m, w.nu_plus.weights()),
            located(&m, w.nu_minus.weights()),
        )
    });
    if json_mode {
        let mut o = extremality_json(c).as_object().cloned().unwrap_or_default();
        o.insert("member".into(), Value::from(true));
        o.insert("k".into(), Value::from(problem.k()));
        o.insert("heuristic".into(), Value::from(cert.heuristic));
        o.insert("target".into(), nums(&cert.target_vector));
        if let Some((phi, plus, minus)) = &witness {
            o.insert(
                "witness".into(),
                json!({"phi": nums(phi), "nu_plus": atoms_json(plus, space), "nu_minus": atoms_json(minus, space)}),
            );
        }
        writeln!(out, "{}", to_json_string(&Value::Object(o))).map_err(out_err)?;
    } else {
        writeln!(
            out,
            "{} (cells {}, k {}, rank {}, residual {:e}){}",
            if c.is_extreme { "extreme" } else { "not extreme" },
            c.cell_count(),
            problem.k(),
            c.rank,
            c.feasibility_residual,
            if cert.heuristic { " [box target: certified at the attained moment vector]" } else { "" }
        )
        .map_err(out_err)?;
        if let Some((phi, plus, minus)) = &witness {
            writeln!(out, "witness phi: {phi:?}").map_err(out_err)?;
            for (name, nu) in [("nu+", plus), ("nu-", minus)] {
                let parts: Vec<String> =
                    nu.atoms().iter().map(|a| format!("{} weight {}", fmt_loc(a.location, space), a.weight)).collect();
                writeln!(out, "{name}: {}", parts.join("; ")).map_err(out_err)?;
            }
        }
    }
    Ok(if c.is_extreme { EXIT_OK } else { EXIT_NOT_EXTREME })
}

fn cmd_vertices(path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let problem = load_problem(&read(path)?)?;
    let Domain::Finite { space } = &problem.domain else {
        return Err(Failure(EXIT_USAGE, "vertices needs a finite domain".into()));
    };
    let c = problem
        .target()?
        .exact_values()
        .ok_or_else(|| Failure(EXIT_USAGE, "vertices needs exact targets".into()))?;
    let disc = problem.discretize()?;
    let table: &MomentTable = &disc.table;
    let list = enumerate_extreme(table, &c, problem.options.tol)?;
    let items: Vec<Value> = list
        .iter()
        .map(|m| {
            let value = m.integrate_points(table.g()).unwrap_or(f64::NAN);
            json!({"atoms": atoms_json(m, Some(space)), "objective": num(value)})
        })
        .collect();
    writeln!(out, "{}", to_json_string(&Value::Array(items))).map_err(out_err)?;
    Ok(EXIT_OK)
}
