//! Sharp bounds on `∫ g dμ` over nonnegative measures whose generalized
//! moments `∫ f_j dμ` lie in a box.
//!
//! The continuous problem is sampled on a grid and solved as a linear
//! program. Basic optimal solutions carry at most `k` positive weights, so the
//! optimizer is a `k`-atom discrete measure; atom positions can then be
//! polished off the grid with [`refine_atoms`]. An LP dual `y` with
//! `y·f ≥ g` on the grid is returned as a majorant certificate.

use crate::error::{check_len, Error, Result};
use crate::exec::Execution;
use crate::extremality::{certify_extreme, ExtremalityCertificate};
use crate::measure::{Atom, DiscreteMeasure, Location, Measure, MomentTable};
use crate::problem::{Domain, MomentProblem};
use crate::simplex::{self, LinearProgram, LpOutcome, Row, RowSense};

/// Absolute tolerance at which returned measures satisfy the target box.
pub const FEAS_TOL: f64 = 1e-8;
/// Absolute tolerance used to accept dual certificates.
pub const DUAL_TOL: f64 = 1e-7;
const ATOM_REL: f64 = 1e-12;
/// Moment residual accepted for candidate atom configurations during refinement.
const REFINE_FEAS_TOL: f64 = 1e-12;

fn target_scale(target: &MomentTarget) -> f64 {
    target
        .bounds()
        .iter()
        .flat_map(|&(lo, hi)| [lo, hi])
        .filter(|v| v.is_finite())
        .fold(1.0f64, |a, v| a.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Max => "max",
            Sense::Min => "min",
        }
    }
}

/// Box `[lo_1, hi_1] × … × [lo_k, hi_k]` of admissible moment vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTarget {
    bounds: Vec<(f64, f64)>,
}

impl MomentTarget {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Invalid("a moment target needs at least one constraint".into()));
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::Invalid(format!("target interval {j} = [{lo}, {hi}] is empty")));
            }
        }
        Ok(MomentTarget { bounds })
    }

    pub fn exact(c: &[f64]) -> Result<Self> {
        Self::new(c.iter().map(|&v| (v, v)).collect())
    }

    pub fn k(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// The target vector when every interval is a single point.
    pub fn exact_values(&self) -> Option<Vec<f64>> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| (lo == hi).then_some(lo))
            .collect()
    }

    /// `max_j dist(v_j, [lo_j, hi_j])`.
    pub fn distance(&self, v: &[f64]) -> f64 {
        self.bounds
            .iter()
            .zip(v)
            .map(|(&(lo, hi), &x)| (lo - x).max(x - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Support function of the box in direction `y`: `sup_{t ∈ C} y·t` for
    /// `Max`, `inf_{t ∈ C} y·t` for `Min`.
    pub fn support(&self, y: &[f64], sense: Sense) -> f64 {
        self.bounds
            .iter()
            .zip(y)
            .map(|(&(lo, hi), &yj)| {
                if yj == 0.0 {
                    return 0.0;
                }
                let up = (yj > 0.0) == (sense == Sense::Max);
                yj * if up { hi } else { lo }
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
        }
    }
}

/// LP multipliers. `y[j] = lower[j] + upper[j]` for box rows, the equality
/// multiplier for exact rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector {
    pub y: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Nonnegative direction along which the objective grows without bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovingRay {
    /// `(point id, weight)` for every positive component.
    pub direction: Vec<(usize, f64)>,
}

/// A vector `y` with `y·f ≥ g` (max) or `y·f ≤ g` (min) on the verification
/// points, certifying `value` as sharp.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub y: Vec<f64>,
    /// Primal value the certificate vouches for.
    pub value: f64,
    pub max_violation: f64,
    pub worst_point: Option<Location>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualReport {
    pub max_violation: f64,
    pub worst_point: Option<usize>,
    /// Support function of the target box at `y`.
    pub dual_bound: f64,
    pub gap: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub status: Status,
    /// Optimal value; `±∞` when unbounded, `∓∞` (empty sup/inf) when infeasible.
    pub value: f64,
    pub measure: Option<DiscreteMeasure>,
    pub dual: Option<DualVector>,
    pub ray: Option<ImprovingRay>,
    /// Per-constraint distance to the target box at the phase-I optimum.
    pub phase1_residual: Option<Vec<f64>>,
    pub grid_size: usize,
    pub refined: bool,
    pub iterations: usize,
    /// Grid LP value before refinement.
    pub lp_value: Option<f64>,
    pub certificate: Option<DualCertificate>,
    pub dual_report: Option<DualReport>,
    pub extremality: Option<ExtremalityCertificate>,
    pub breakpoint_warning: bool,
}

impl BoundResult {
    fn bare(status: Status, value: f64, grid_size: usize, iterations: usize) -> Self {
        BoundResult {
            status,
            value,
            measure: None,
            dual: None,
            ray: None,
            phase1_residual: None,
            grid_size,
            refined: false,
            iterations,
            lp_value: None,
            certificate: None,
            dual_report: None,
            extremality: None,
            breakpoint_warning: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Side {
    Exact,
    Lower,
    Upper,
}

fn build_lp(table: &MomentTable, target: &MomentTarget, objective: Vec<f64>) -> (LinearProgram, Vec<(usize, Side)>) {
    let mut rows = Vec::new();
    let mut map = Vec::new();
    for (j, (&(lo, hi), coeffs)) in target.bounds().iter().zip(table.rows()).enumerate() {
        let mut push = |sense, rhs, side| {
            rows.push(Row {
                coeffs: coeffs.clone(),
                sense,
                rhs,
            });
            map.push((j, side));
        };
        if lo == hi {
            push(RowSense::Eq, lo, Side::Exact);
        } else {
            if lo.is_finite() {
                push(RowSense::Ge, lo, Side::Lower);
            }
            if hi.is_finite() {
                push(RowSense::Le, hi, Side::Upper);
            }
        }
    }
    (LinearProgram { objective, rows }, map)
}

fn moments_of(table: &MomentTable, x: &[f64]) -> Vec<f64> {
    table
        .rows()
        .iter()
        .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Optimizes `∫ g dμ` over weight vectors `λ ≥ 0` with `lo ≤ Fλ ≤ hi`.
pub fn solve_lp(table: &MomentTable, target: &MomentTarget, sense: Sense) -> Result<BoundResult> {
    check_len("target", table.k(), target.k())?;
    let s = sense.sign();
    let objective: Vec<f64> = table.g().iter().map(|g| s * g).collect();
    let (lp, map) = build_lp(table, target, objective);
    let n = table.n();
    match simplex::solve(&lp)? {
        LpOutcome::Infeasible { x, iterations, .. } => {
            let mut r = BoundResult::bare(Status::Infeasible, -s * f64::INFINITY, n, iterations);
            let m = moments_of(table, &x);
            r.phase1_residual = Some(
                target
                    .bounds()
                    .iter()
                    .zip(&m)
                    .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0))
                    .collect(),
            );
            Ok(r)
        }
        LpOutcome::Unbounded { ray, iterations } => {
            let mut r = BoundResult::bare(Status::Unbounded, s * f64::INFINITY, n, iterations);
            r.ray = Some(ImprovingRay {
                direction: ray
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d > 0.0)
                    .map(|(i, &d)| (i, d))
                    .collect(),
            });
            Ok(r)
        }
        LpOutcome::Optimal(sol) => {
            let top = sol.x.iter().fold(0.0f64, |a, &v| a.max(v));
            let thr = ATOM_REL * top.max(1e-300);
            let atoms: Vec<Atom> = sol
                .x
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > thr)
                .map(|(i, &w)| Atom {
                    location: Location::Point(i),
                    weight: w,
                })
                .collect();
            let measure = DiscreteMeasure::new(atoms)?;
            let value = measure.integrate_points(table.g())?;

            let k = table.k();
            let mut dual = DualVector {
                y: vec![0.0; k],
                lower: vec![0.0; k],
                upper: vec![0.0; k],
            };
            for (&(j, side), &u) in map.iter().zip(&sol.duals) {
                let u = s * u;
                dual.y[j] += u;
                match side {
                    Side::Exact => {}
                    Side::Lower => dual.lower[j] = u,
                    Side::Upper => dual.upper[j] = u,
                }
            }
            let mut r = BoundResult::bare(Status::Optimal, value, n, sol.iterations);
            r.measure = Some(measure);
            r.dual = Some(dual);
            r.lp_value = Some(value);
            Ok(r)
        }
    }
}

/// Weak-duality check of a majorant (max) or minorant (min) certificate.
pub fn verify_dual(
    table: &MomentTable,
    g: &[f64],
    target: &MomentTarget,
    cert: &DualCertificate,
    sense: Sense,
    tol: f64,
) -> Result<DualReport> {
    check_len("objective values", table.n(), g.len())?;
    check_len("dual vector", table.k(), cert.y.len())?;
    check_len("target", table.k(), target.k())?;
    let s = sense.sign();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_point = None;
    for (i, &gi) in g.iter().enumerate() {
        let yf: f64 = table.rows().iter().zip(&cert.y).map(|(row, y)| y * row[i]).sum();
        let v = s * (gi - yf);
        if v > max_violation {
            max_violation = v;
            worst_point = Some(i);
        }
    }
    let dual_bound = target.support(&cert.y, sense);
    let gap = (dual_bound - cert.value).abs();
    let accepted = dual_bound.is_finite() && max_violation <= tol && gap <= tol;
    Ok(DualReport {
        max_violation,
        worst_point,
        dual_bound,
        gap,
        accepted,
    })
}

/// Solves the discretized problem, refines atom positions on interval
/// domains, and attaches dual and extremality certificates.
pub fn moment_bound(problem: &MomentProblem) -> Result<BoundResult> {
    moment_bound_with(problem, Execution::default())
}

pub fn moment_bound_with(problem: &MomentProblem, exec: Execution) -> Result<BoundResult> {
    let disc = problem.discretize_with(exec)?;
    let target = problem.target()?;
    let mut res = solve_lp(&disc.table, &target, problem.sense)?;
    res.breakpoint_warning = disc.breakpoint_warning;
    if res.status != Status::Optimal {
        return Ok(res);
    }

    let lp_value = res.value;
    if let Some(dual) = &res.dual {
        let mut cert = DualCertificate {
            y: dual.y.clone(),
            value: lp_value,
            max_violation: 0.0,
            worst_point: None,
        };
        let report = verify_dual(&disc.table, disc.table.g(), &target, &cert, problem.sense, DUAL_TOL)?;
        cert.max_violation = report.max_violation;
        cert.worst_point = report.worst_point.map(|i| disc.space.location(i));
        res.certificate = Some(cert);
        res.dual_report = Some(report);
    }

    let grid_measure = res.measure.take().map(|m| m.located_in(&disc.space));
    let mut measure = grid_measure.clone();
    if problem.options.refine && matches!(problem.domain, Domain::Interval { .. }) {
        if let Some(seed) = &grid_measure {
            let refined = refine_atoms_with(problem, seed, &RefineOptions::default())?;
            let better = problem.sense.sign() * (refined.value - lp_value) > 0.0;
            res.refined = true;
            res.iterations += refined.sweeps;
            if better {
                res.value = refined.value;
                measure = Some(refined.measure);
            }
        }
    }
    res.measure = measure;

    if let (Some(c), Some(m)) = (target.exact_values(), &res.measure) {
        // Extremality depends only on the support, so certify on the atoms.
        res.extremality = certify_measure(problem, m, feas_tol(&c)).ok().map(|c| c.certificate);
    }
    Ok(res)
}

/// Outcome of certifying a user-supplied measure against a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCertification {
    pub certificate: ExtremalityCertificate,
    /// Moment vector the measure was certified against.
    pub target_vector: Vec<f64>,
    /// Set for box targets: only the singleton set at the attained moment
    /// vector is certified.
    pub heuristic: bool,
    /// Values of `(f_1..f_k)` columns and `g` at each atom, in atom order.
    pub atom_table: MomentTable,
}

/// Certifies a located measure (coordinates or point ids) on its own support.
/// Exact targets are used as given; box targets are replaced by the attained
/// moment vector after checking membership.
pub fn certify_measure(problem: &MomentProblem, m: &DiscreteMeasure, tol: f64) -> Result<MeasureCertification> {
    let target = problem.target()?;
    let k = problem.k();
    let atom_table = if m.is_empty() {
        MomentTable::constraints_only(vec![vec![0.0]; k])?
    } else {
        match &problem.domain {
            Domain::Interval { lo, hi, .. } => {
                let mut f = vec![Vec::with_capacity(m.len()); k];
                let mut g = Vec::with_capacity(m.len());
                for a in m.atoms() {
                    let x = a
                        .location
                        .as_coord()
                        .filter(|x| x >= lo && x <= hi)
                        .ok_or_else(|| Error::Invalid(format!("atom {} is not a coordinate in the domain", a.location)))?;
                    let (fs, gv) = problem.evaluate_at(x)?;
                    for (row, v) in f.iter_mut().zip(fs) {
                        row.push(v);
                    }
                    g.push(gv);
                }
                MomentTable::new(f, g)?
            }
            Domain::Finite { space } => {
                let disc = problem.discretize_with(Execution::Sequential)?;
                let ids = m
                    .atoms()
                    .iter()
                    .map(|a| {
                        space
                            .index_of(a.location)
                            .ok_or_else(|| Error::Invalid(format!("atom {} is not a point of the domain", a.location)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                disc.table.select(&ids)?
            }
        }
    };
    let mu = if m.is_empty() {
        Measure::zero(1)
    } else {
        Measure::new(m.atoms().iter().map(|a| a.weight).collect())?
    };
    let attained = crate::measure::moment_vector(&mu, &atom_table, &crate::measure::SubsetMask::all(mu.len()))?;
    let (c, heuristic) = match target.exact_values() {
        Some(c) => (c, false),
        None => {
            let residual = target.distance(&attained);
            if !(residual <= tol) {
                return Err(Error::NotMember { residual });
            }
            (attained, true)
        }
    };
    let certificate = certify_extreme(&mu, &atom_table, &c, tol)?;
    Ok(MeasureCertification {
        certificate,
        target_vector: c,
        heuristic,
        atom_table,
    })
}

fn feas_tol(c: &[f64]) -> f64 {
    FEAS_TOL * c.iter().fold(1.0f64, |a, v| a.max(v.abs()))
}

/// Solves many problems, concurrently when `exec` allows.
pub fn moment_bound_batch(problems: &[MomentProblem], exec: Execution) -> Vec<Result<BoundResult>> {
    exec.map(problems, |p| moment_bound_with(p, Execution::Sequential))
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub max_sweeps: usize,
    /// Stop once a full sweep gains less than this.
    pub min_gain: f64,
    /// Uniform samples per line search before golden-section polishing.
    pub samples: usize,
    pub golden_iterations: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_sweeps: 200,
            min_gain: 1e-10,
            samples: 16,
            golden_iterations: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub measure: DiscreteMeasure,
    pub value: f64,
    pub sweeps: usize,
}

/// Continuous polish of atom locations starting from a feasible seed.
/// Returns the refined measure and its objective value.
pub fn refine_atoms(problem: &MomentProblem, seed: &DiscreteMeasure) -> Result<(DiscreteMeasure, f64)> {
    refine_atoms_with(problem, seed, &RefineOptions::default()).map(|r| (r.measure, r.value))
}

struct WeightSolve {
    locs: Vec<f64>,
    weights: Vec<f64>,
    /// Sense-adjusted objective (always maximized).
    score: f64,
}

fn solve_weights(problem: &MomentProblem, target: &MomentTarget, locs: &[f64]) -> Option<WeightSolve> {
    let mut f = vec![Vec::with_capacity(locs.len()); problem.k()];
    let mut g = Vec::with_capacity(locs.len());
    for &x in locs {
        let (fs, gv) = problem.evaluate_at(x).ok()?;
        for (row, v) in f.iter_mut().zip(fs) {
            row.push(v);
        }
        g.push(gv);
    }
    let table = MomentTable::new(f, g).ok()?;
    let r = solve_lp(&table, target, problem.sense).ok()?;
    if r.status != Status::Optimal {
        return None;
    }
    let m = r.measure?;
    let mut keep: Vec<(f64, f64)> = m
        .atoms()
        .iter()
        .filter_map(|a| match a.location {
            Location::Point(i) => Some((locs[i], a.weight)),
            Location::Coord(_) => None,
        })
        .collect();
    keep.sort_by(|a, b| a.0.total_cmp(&b.0));
    let moments: Vec<f64> = (0..problem.k())
        .map(|j| {
            keep.iter()
                .map(|&(x, w)| w * problem.evaluate_at(x).map(|(fs, _)| fs[j]).unwrap_or(f64::NAN))
                .sum()
        })
        .collect();
    if !(target.distance(&moments) <= REFINE_FEAS_TOL * target_scale(target)) {
        return None;
    }
    Some(WeightSolve {
        locs: keep.iter().map(|p| p.0).collect(),
        weights: keep.iter().map(|p| p.1).collect(),
        score: problem.sense.sign() * r.value,
    })
}

pub fn refine_atoms_with(
    problem: &MomentProblem,
    seed: &DiscreteMeasure,
    opts: &RefineOptions,
) -> Result<Refinement> {
    let Domain::Interval { lo, hi, .. } = problem.domain else {
        return Err(Error::Invalid("refinement needs an interval domain".into()));
    };
    let target = problem.target()?;
    let locs: Vec<f64> = seed
        .atoms()
        .iter()
        .map(|a| {
            a.location
                .as_coord()
                .filter(|x| *x >= lo && *x <= hi)
                .ok_or_else(|| Error::Invalid(format!("seed atom {} is not a coordinate in the domain", a.location)))
        })
        .collect::<Result<_>>()?;
    let mut moments = vec![0.0; problem.k()];
    for (a, &x) in seed.atoms().iter().zip(&locs) {
        let (fs, _) = problem.evaluate_at(x)?;
        for (m, v) in moments.iter_mut().zip(fs) {
            *m += a.weight * v;
        }
    }
    let residual = target.distance(&moments);
    if !(residual <= FEAS_TOL) {
        return Err(Error::SeedInfeasible { residual });
    }
    let mut cur = solve_weights(problem, &target, &locs).ok_or(Error::SeedInfeasible { residual })?;

    let mut bps: Vec<f64> = Vec::new();
    if let Ok((_, b, _)) = problem.grid() {
        bps = b;
    }

    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let start = cur.score;
        let mut i = 0;
        while i < cur.locs.len() {
            let left = if i == 0 { lo } else { cur.locs[i - 1] };
            let right = if i + 1 == cur.locs.len() { hi } else { cur.locs[i + 1] };
            if let Some(better) = line_search(problem, &target, &cur, i, left, right, &bps, opts) {
                cur = better;
            }
            i += 1;
        }
        if cur.score - start < opts.min_gain {
            break;
        }
    }

    let atoms = cur
        .locs
        .iter()
        .zip(&cur.weights)
        .map(|(&x, &w)| Atom {
            location: Location::Coord(x),
            weight: w,
        })
        .collect();
    Ok(Refinement {
        measure: DiscreteMeasure::new(atoms)?,
        value: problem.sense.sign() * cur.score,
        sweeps,
    })
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    problem: &MomentProblem,
    target: &MomentTarget,
    cur: &WeightSolve,
    i: usize,
    left: f64,
    right: f64,
    bps: &[f64],
    opts: &RefineOptions,
) -> Option<WeightSolve> {
    let n = cur.locs.len();
    let open_left = i > 0;
    let open_right = i + 1 < n;
    let admissible = |t: f64| {
        t >= left && t <= right && !(open_left && t == left) && !(open_right && t == right) && t != cur.locs[i]
    };
    let eval = |t: f64| -> Option<WeightSolve> {
        if !admissible(t) {
            return None;
        }
        let mut locs = cur.locs.clone();
        locs[i] = t;
        solve_weights(problem, target, &locs)
    };
    let score = |t: f64| eval(t).map_or(f64::NEG_INFINITY, |w| w.score);

    let mut best_t = cur.locs[i];
    let mut best = cur.score;
    let consider = |t: f64, s: f64, best_t: &mut f64, best: &mut f64| {
        if s > *best {
            *best = s;
            *best_t = t;
        }
    };

    let samples = opts.samples.max(2);
    let h = (right - left) / samples as f64;
    let grid: Vec<f64> = (0..=samples).map(|s| left + s as f64 * h).collect();
    let mut sampled = Vec::with_capacity(grid.len());
    for &t in &grid {
        let s = score(t);
        sampled.push(s);
        consider(t, s, &mut best_t, &mut best);
    }
    for &b in bps.iter().filter(|&&b| b >= left && b <= right) {
        consider(b, score(b), &mut best_t, &mut best);
    }

    // Golden-section search around the best sample and around the current
    // location, whichever brackets are nondegenerate.
    let idx = sampled
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|p| p.0)
        .unwrap_or(0);
    let centers = [grid[idx], cur.locs[i]];
    for c in centers {
        let mut a = (c - h).max(left);
        let mut b = (c + h).min(right);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut s1 = score(x1);
        let mut s2 = score(x2);
        for _ in 0..opts.golden_iterations {
            if b - a <= 1e-14 * (1.0 + c.abs()) {
                break;
            }
            if s1 >= s2 {
                b = x2;
                x2 = x1;
                s2 = s1;
                x1 = b - phi * (b - a);
                s1 = score(x1);
            } else {
                a = x1;
                x1 = x2;
                s1 = s2;
                x2 = a + phi * (b - a);
                s2 = score(x2);
            }
            consider(x1, s1, &mut best_t, &mut best);
            consider(x2, s2, &mut best_t, &mut best);
        }
    }

    if best > cur.score && best_t != cur.locs[i] {
        eval(best_t).filter(|w| w.score > cur.score)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_validation_and_support() {
        assert!(MomentTarget::new(vec![]).is_err());
        assert!(MomentTarget::new(vec![(1.0, 0.0)]).is_err());
        assert!(MomentTarget::new(vec![(f64::INFINITY, f64::INFINITY)]).is_err());
        let t = MomentTarget::new(vec![(1.0, 1.0), (0.0, 2.0), (f64::NEG_INFINITY, 3.0)]).unwrap();
        assert_eq!(t.exact_values(), None);
        assert_eq!(t.support(&[2.0, -1.0, 1.0], Sense::Max), 2.0 + 0.0 + 3.0);
        assert_eq!(t.support(&[2.0, -1.0, 1.0], Sense::Min), f64::NEG_INFINITY);
        assert_eq!(t.distance(&[1.0, 2.5, -4.0]), 0.5);
        assert_eq!(MomentTarget::exact(&[1.0, 2.0]).unwrap().exact_values(), Some(vec![1.0, 2.0]));
    }

    fn unit_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn normalization_only() {
        let t = MomentTable::new(vec![vec![1.0; 4]], vec![1.0; 4]).unwrap();
        let r = solve_lp(&t, &MomentTarget::exact(&[1.0]).unwrap(), Sense::Max).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.value - 1.0).abs() < 1e-15);
        assert_eq!(r.measure.unwrap().len(), 1);
    }

    #[test]
    fn unreachable_mean_is_infeasible() {
        let x = unit_grid(11);
        let t = MomentTable::new(vec![vec![1.0; 11], x], vec![0.0; 11]).unwrap();
        let r = solve_lp(&t, &MomentTarget::exact(&[1.0, 2.0]).unwrap(), Sense::Max).unwrap();
        assert_eq!(r.status, Status::Infeasible);
        assert_eq!(r.value, f64::NEG_INFINITY);
        let res = r.phase1_residual.unwrap();
        assert!(res.iter().any(|&v| v > 0.1), "{res:?}");
    }

    #[test]
    fn unbounded_with_ray() {
        // Constrain only the mean; mass at x = 0 is free and g = 1 rewards it.
        let x = unit_grid(5);
        let t = MomentTable::new(vec![x], vec![1.0; 5]).unwrap();
        let r = solve_lp(&t, &MomentTarget::exact(&[0.5]).unwrap(), Sense::Max).unwrap();
        assert_eq!(r.status, Status::Unbounded);
        assert_eq!(r.value, f64::INFINITY);
        let ray = r.ray.unwrap();
        assert_eq!(ray.direction, vec![(0, 1.0)]);
    }

    #[test]
    fn box_target_duals() {
        // max E[x] on [0,1] with mass in [0.5, 2]: all mass 2 at x = 1.
        let x = unit_grid(5);
        let t = MomentTable::new(vec![vec![1.0; 5]], x).unwrap();
        let target = MomentTarget::new(vec![(0.5, 2.0)]).unwrap();
        let r = solve_lp(&t, &target, Sense::Max).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        let d = r.dual.unwrap();
        assert!((d.upper[0] - 1.0).abs() < 1e-14 && d.lower[0] == 0.0);
        let cert = DualCertificate { y: d.y, value: r.value, max_violation: 0.0, worst_point: None };
        let rep = verify_dual(&t, t.g(), &target, &cert, Sense::Max, 1e-12).unwrap();
        assert!(rep.accepted, "{rep:?}");

        // The minimum sits on the lower mass bound.
        let r = solve_lp(&t, &target, Sense::Min).unwrap();
        assert!(r.value.abs() < 1e-14);
    }

    #[test]
    fn markov_dual_checks() {
        let x: Vec<f64> = (0..=1000).map(|i| i as f64 / 100.0).collect();
        let g = x.iter().map(|&v| if v >= 2.0 { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let t = MomentTable::new(vec![vec![1.0; x.len()], x.clone()], g).unwrap();
        let target = MomentTarget::exact(&[1.0, 1.0]).unwrap();
        let good = DualCertificate { y: vec![0.0, 0.5], value: 0.5, max_violation: 0.0, worst_point: None };
        let rep = verify_dual(&t, t.g(), &target, &good, Sense::Max, 1e-12).unwrap();
        assert!(rep.accepted);
        assert_eq!(rep.gap, 0.0);
        let bad = DualCertificate { y: vec![0.0, 0.4], ..good };
        let rep = verify_dual(&t, t.g(), &target, &bad, Sense::Max, 1e-12).unwrap();
        assert!(!rep.accepted);
        assert!((rep.max_violation - 0.2).abs() < 1e-15);
        assert_eq!(x[rep.worst_point.unwrap()], 2.0);
    }

    #[test]
    fn objective_equal_to_constraint() {
        let x = unit_grid(7);
        let t = MomentTable::new(vec![vec![1.0; 7], x.clone()], vec![1.0; 7]).unwrap();
        let target = MomentTarget::exact(&[0.8, 0.3]).unwrap();
        for sense in [Sense::Max, Sense::Min] {
            let r = solve_lp(&t, &target, sense).unwrap();
            assert!((r.value - 0.8).abs() < 1e-14);
            let cert = DualCertificate { y: vec![1.0, 0.0], value: r.value, max_violation: 0.0, worst_point: None };
            let rep = verify_dual(&t, t.g(), &target, &cert, sense, 1e-12).unwrap();
            assert!(rep.accepted);
            assert_eq!(rep.max_violation, 0.0);
        }
    }
}
