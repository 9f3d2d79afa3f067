//! Moment problems and their JSON problem-file format.
//!
//! ```json
//! {"domain": {"type": "interval", "lo": 0, "hi": 10, "grid_step": 0.01},
//!  "constraints": [{"f": "1", "target": [1, 1]}, {"f": "x", "target": [1, 1]}],
//!  "objective": "(x >= 2)", "sense": "max",
//!  "options": {"refine": true, "tol": 1e-9}}
//! ```
//!
//! Finite domains list their points and may carry raw value tables instead of
//! expressions: `{"type": "finite", "points": [{"id": 0, "coord": 0.0}, ..],
//! "F": [[..], ..], "g": [..]}`. Target bounds may be `null` for an
//! unbounded side, or a single number for an exact target.

use serde_json::{Map, Value};

use crate::bound::{MomentTarget, Sense};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::expr::{collect_breakpoints, parse_expr, Expr};
use crate::measure::{FiniteSpace, MomentTable, Point};

/// Number of grid cells used when an interval domain gives no step.
pub const DEFAULT_GRID_CELLS: f64 = 2000.0;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Upper limit on generated grid sizes.
pub const MAX_GRID_POINTS: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64, grid_step: f64 },
    Finite { space: FiniteSpace },
}

/// A constraint function or objective: an expression in `x`, or raw values
/// per point of a finite domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Function {
    Expr(Expr),
    Values(Vec<f64>),
}

impl Function {
    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Function::Expr(e) => Some(e),
            Function::Values(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub f: Function,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub refine: bool,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            refine: true,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentProblem {
    pub domain: Domain,
    pub constraints: Vec<Constraint>,
    pub objective: Function,
    pub sense: Sense,
    pub options: SolveOptions,
}

/// A problem sampled onto a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub space: FiniteSpace,
    pub table: MomentTable,
    /// Comparison jump points inserted into the grid.
    pub breakpoints: Vec<f64>,
    /// Some comparison has a non-affine side; its jumps may be mis-sampled.
    pub breakpoint_warning: bool,
}

impl MomentProblem {
    /// Builds an interval-domain problem from expressions.
    pub fn interval(
        lo: f64,
        hi: f64,
        grid_step: Option<f64>,
        constraints: &[(&str, f64, f64)],
        objective: &str,
        sense: Sense,
    ) -> Result<Self> {
        let constraints = constraints
            .iter()
            .map(|&(f, lo, hi)| {
                Ok(Constraint {
                    f: Function::Expr(parse_expr(f)?),
                    lo,
                    hi,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let p = MomentProblem {
            domain: Domain::Interval {
                lo,
                hi,
                grid_step: grid_step.unwrap_or((hi - lo) / DEFAULT_GRID_CELLS),
            },
            constraints,
            objective: Function::Expr(parse_expr(objective)?),
            sense,
            options: SolveOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.constraints.len()
    }

    pub fn target(&self) -> Result<MomentTarget> {
        MomentTarget::new(self.constraints.iter().map(|c| (c.lo, c.hi)).collect())
    }

    pub fn with_grid_step(mut self, step: f64) -> Result<Self> {
        if let Domain::Interval { grid_step, .. } = &mut self.domain {
            *grid_step = step;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_options(mut self, options: SolveOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let schema = |path: &str, message: &str| Error::Schema {
            path: path.into(),
            message: message.into(),
        };
        if self.constraints.is_empty() {
            return Err(schema("constraints", "at least one constraint is required"));
        }
        self.target().map_err(|e| schema("constraints", &e.to_string()))?;
        if !(self.options.tol > 0.0 && self.options.tol.is_finite()) {
            return Err(schema("options.tol", "must be a positive finite number"));
        }
        let fns = self
            .constraints
            .iter()
            .enumerate()
            .map(|(j, c)| (format!("constraints[{j}].f"), &c.f))
            .chain(std::iter::once(("objective".to_string(), &self.objective)));
        match &self.domain {
            Domain::Interval { lo, hi, grid_step } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(schema("domain", "interval needs finite lo < hi"));
                }
                if !(*grid_step > 0.0 && grid_step.is_finite()) {
                    return Err(schema("domain.grid_step", "must be > 0"));
                }
                if (hi - lo) / grid_step > MAX_GRID_POINTS as f64 {
                    return Err(schema("domain.grid_step", "grid would exceed the point limit"));
                }
                for (path, f) in fns {
                    if f.expr().is_none() {
                        return Err(schema(&path, "interval domains need an expression"));
                    }
                }
            }
            Domain::Finite { space } => {
                for (path, f) in fns {
                    match f {
                        Function::Values(v) if v.len() != space.len() => {
                            return Err(schema(&path, "value row length must equal the number of points"))
                        }
                        Function::Values(v) if v.iter().any(|x| !x.is_finite()) => {
                            return Err(schema(&path, "values must be finite"))
                        }
                        Function::Expr(_) if !space.has_coords() => {
                            return Err(schema(&path, "expressions need point coordinates"))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    fn expressions(&self) -> impl Iterator<Item = &Expr> {
        self.constraints
            .iter()
            .map(|c| &c.f)
            .chain(std::iter::once(&self.objective))
            .filter_map(Function::expr)
    }

    /// Values of `(f_1..f_k, g)` at an arbitrary coordinate.
    pub fn evaluate_at(&self, x: f64) -> Result<(Vec<f64>, f64)> {
        let eval = |f: &Function| match f {
            Function::Expr(e) => e.eval(x),
            Function::Values(_) => Err(Error::Invalid("value tables have no continuous extension".into())),
        };
        let fs = self.constraints.iter().map(|c| eval(&c.f)).collect::<Result<Vec<_>>>()?;
        Ok((fs, eval(&self.objective)?))
    }

    /// Grid points of an interval domain: `lo + i*step`, the upper endpoint,
    /// and every comparison breakpoint inside `[lo, hi]`.
    pub fn grid(&self) -> Result<(Vec<f64>, Vec<f64>, bool)> {
        let Domain::Interval { lo, hi, grid_step } = self.domain else {
            return Err(Error::Invalid("grid requested for a finite domain".into()));
        };
        let mut warning = false;
        let mut bps = Vec::new();
        for e in self.expressions() {
            let b = collect_breakpoints(e);
            warning |= b.warning;
            bps.extend(b.points.into_iter().filter(|p| *p >= lo && *p <= hi));
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup();

        let cells = ((hi - lo) / grid_step + 1e-9).floor() as usize;
        let snap = grid_step * 1e-9;
        let mut pts: Vec<f64> = (0..=cells)
            .map(|i| lo + i as f64 * grid_step)
            .filter(|&p| p <= hi)
            .collect();
        pts.retain(|p| (hi - p) > snap);
        pts.push(hi);
        pts.retain(|p| !bps.iter().any(|b| (p - b).abs() <= snap));
        pts.extend(bps.iter().copied());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Ok((pts, bps, warning))
    }

    pub fn discretize(&self) -> Result<Discretization> {
        self.discretize_with(Execution::default())
    }

    /// Samples every function on the grid (or finite points).
    pub fn discretize_with(&self, exec: Execution) -> Result<Discretization> {
        self.validate()?;
        let (space, breakpoints, breakpoint_warning) = match &self.domain {
            Domain::Interval { .. } => {
                let (pts, bps, warn) = self.grid()?;
                (FiniteSpace::from_coords(pts)?, bps, warn)
            }
            Domain::Finite { space } => {
                let mut warn = false;
                for e in self.expressions() {
                    warn |= collect_breakpoints(e).warning;
                }
                (space.clone(), Vec::new(), warn)
            }
        };
        let n = space.len();
        let row = |f: &Function| -> Result<Vec<f64>> {
            match f {
                Function::Values(v) => Ok(v.clone()),
                Function::Expr(e) => {
                    let coords = space.coords().ok_or_else(|| Error::Invalid("expressions need coordinates".into()))?;
                    exec.map(&coords, |&x| e.eval(x)).into_iter().collect()
                }
            }
        };
        let f = self.constraints.iter().map(|c| row(&c.f)).collect::<Result<Vec<_>>>()?;
        let g = row(&self.objective)?;
        debug_assert!(f.iter().all(|r| r.len() == n));
        Ok(Discretization {
            table: MomentTable::new(f, g)?,
            space,
            breakpoints,
            breakpoint_warning,
        })
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn get_number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| schema(path, "expected a finite number"))
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], prefix: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(schema(format!("{prefix}{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn parse_function(v: &Value, path: &str) -> Result<Function> {
    let text = v.as_str().ok_or_else(|| schema(path, "expected an expression string"))?;
    parse_expr(text).map(Function::Expr).map_err(|e| match e {
        Error::Parse { offset, message } => schema(path, format!("parse error at byte {offset}: {message}")),
        other => other,
    })
}

fn parse_target(v: &Value, path: &str) -> Result<(f64, f64)> {
    if v.is_number() {
        let c = get_number(v, path)?;
        return Ok((c, c));
    }
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema(path, "expected [lo, hi] or a number"))?;
    let side = |x: &Value, i: usize, inf: f64| -> Result<f64> {
        if x.is_null() {
            Ok(inf)
        } else {
            get_number(x, &format!("{path}[{i}]"))
        }
    };
    let lo = side(&arr[0], 0, f64::NEG_INFINITY)?;
    let hi = side(&arr[1], 1, f64::INFINITY)?;
    if lo > hi {
        return Err(schema(path, "lo must not exceed hi"));
    }
    Ok((lo, hi))
}

fn parse_number_row(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| get_number(x, &format!("{path}[{i}]")))
        .collect()
}

struct FiniteTables {
    space: FiniteSpace,
    f: Option<Vec<Vec<f64>>>,
    g: Option<Vec<f64>>,
}

fn parse_finite(obj: &Map<String, Value>) -> Result<FiniteTables> {
    reject_unknown(obj, &["type", "points", "F", "g"], "domain.")?;
    let pts = obj
        .get("points")
        .ok_or_else(|| schema("domain.points", "missing field"))?
        .as_array()
        .ok_or_else(|| schema("domain.points", "expected an array"))?;
    let mut points = Vec::with_capacity(pts.len());
    for (i, p) in pts.iter().enumerate() {
        let path = format!("domain.points[{i}]");
        let po = p.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
        reject_unknown(po, &["id", "coord"], &format!("{path}."))?;
        let id = po
            .get("id")
            .and_then(Value::as_u64)
            .ok_or_else(|| schema(format!("{path}.id"), "expected a nonnegative integer"))?;
        let coord = match po.get("coord") {
            None | Some(Value::Null) => None,
            Some(c) => Some(get_number(c, &format!("{path}.coord"))?),
        };
        points.push(Point { id: id as usize, coord });
    }
    let space = FiniteSpace::from_points(points).map_err(|e| schema("domain.points", e.to_string()))?;
    let f = match obj.get("F") {
        None => None,
        Some(v) => {
            let rows = v.as_array().ok_or_else(|| schema("domain.F", "expected an array of rows"))?;
            Some(
                rows.iter()
                    .enumerate()
                    .map(|(j, r)| parse_number_row(r, &format!("domain.F[{j}]")))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
    };
    let g = obj.get("g").map(|v| parse_number_row(v, "domain.g")).transpose()?;
    Ok(FiniteTables { space, f, g })
}

/// Parses and validates a JSON problem file, applying defaults.
pub fn load_problem(text: &str) -> Result<MomentProblem> {
    let root: Value = serde_json::from_str(text).map_err(|e| schema("$", format!("invalid JSON: {e}")))?;
    let obj = root.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    reject_unknown(obj, &["domain", "constraints", "objective", "sense", "options"], "")?;

    let dom = obj
        .get("domain")
        .ok_or_else(|| schema("domain", "missing field"))?
        .as_object()
        .ok_or_else(|| schema("domain", "expected an object"))?;
    let kind = dom
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("domain.type", "expected \"interval\" or \"finite\""))?;
    let (domain, tables) = match kind {
        "interval" => {
            reject_unknown(dom, &["type", "lo", "hi", "grid_step"], "domain.")?;
            let lo = get_number(dom.get("lo").ok_or_else(|| schema("domain.lo", "missing field"))?, "domain.lo")?;
            let hi = get_number(dom.get("hi").ok_or_else(|| schema("domain.hi", "missing field"))?, "domain.hi")?;
            if !(lo < hi) {
                return Err(schema("domain", "interval needs lo < hi"));
            }
            let grid_step = match dom.get("grid_step") {
                None | Some(Value::Null) => (hi - lo) / DEFAULT_GRID_CELLS,
                Some(v) => get_number(v, "domain.grid_step")?,
            };
            if !(grid_step > 0.0) {
                return Err(schema("domain.grid_step", "must be > 0"));
            }
            (Domain::Interval { lo, hi, grid_step }, None)
        }
        "finite" => {
            let t = parse_finite(dom)?;
            (Domain::Finite { space: t.space.clone() }, Some(t))
        }
        other => return Err(schema("domain.type", format!("unknown domain type \"{other}\""))),
    };

    let cons = obj
        .get("constraints")
        .ok_or_else(|| schema("constraints", "missing field"))?
        .as_array()
        .ok_or_else(|| schema("constraints", "expected an array"))?;
    if cons.is_empty() {
        return Err(schema("constraints", "at least one constraint is required"));
    }
    let table_rows = tables.as_ref().and_then(|t| t.f.as_ref());
    if let Some(rows) = table_rows {
        if rows.len() != cons.len() {
            return Err(schema("domain.F", "number of rows must equal the number of constraints"));
        }
    }
    let mut constraints = Vec::with_capacity(cons.len());
    for (j, c) in cons.iter().enumerate() {
        let path = format!("constraints[{j}]");
        let co = c.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
        reject_unknown(co, &["f", "target"], &format!("{path}."))?;
        let (lo, hi) = parse_target(
            co.get("target").ok_or_else(|| schema(format!("{path}.target"), "missing field"))?,
            &format!("{path}.target"),
        )?;
        let f = match (co.get("f"), table_rows) {
            (_, Some(rows)) => Function::Values(rows[j].clone()),
            (Some(v), None) => parse_function(v, &format!("{path}.f"))?,
            (None, None) => return Err(schema(format!("{path}.f"), "missing field")),
        };
        constraints.push(Constraint { f, lo, hi });
    }

    let objective = match (obj.get("objective"), tables.as_ref().and_then(|t| t.g.as_ref())) {
        (_, Some(g)) => Function::Values(g.clone()),
        (Some(v), None) => parse_function(v, "objective")?,
        (None, None) => return Err(schema("objective", "missing field")),
    };

    let sense = match obj.get("sense") {
        None => Sense::Max,
        Some(v) => match v.as_str() {
            Some("max") => Sense::Max,
            Some("min") => Sense::Min,
            _ => return Err(schema("sense", "expected \"max\" or \"min\"")),
        },
    };

    let mut options = SolveOptions::default();
    if let Some(o) = obj.get("options") {
        let o = o.as_object().ok_or_else(|| schema("options", "expected an object"))?;
        reject_unknown(o, &["refine", "tol"], "options.")?;
        if let Some(r) = o.get("refine") {
            options.refine = r.as_bool().ok_or_else(|| schema("options.refine", "expected a boolean"))?;
        }
        if let Some(t) = o.get("tol") {
            options.tol = get_number(t, "options.tol")?;
        }
    }

    let problem = MomentProblem {
        domain,
        constraints,
        objective,
        sense,
        options,
    };
    problem.validate()?;
    Ok(problem)
}
