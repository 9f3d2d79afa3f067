//! Extreme points of the moment set `{μ ≥ 0 : ∫ f dμ = c}` on a finite space.
//!
//! A feasible μ is extreme exactly when its atomic partition has `m ≤ k`
//! cells whose moment vectors `∫_{A_i} f dμ` are linearly independent. When
//! they are dependent, a null vector `φ` of those moment vectors yields two
//! distinct feasible measures `ν± = Σ (1 ± φ_i) μ_{A_i}` averaging to μ.

use crate::error::{check_len, Error, Result};
use crate::exec::Execution;
use crate::linalg;
use crate::measure::{
    atomic_partition, moment_vector, support, Atom, AtomicPartition, DiscreteMeasure, Location,
    Measure, MomentTable, SubsetMask,
};

/// Largest ground space `enumerate_extreme` will search by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Evidence that μ is, or is not, an extreme point of the moment set.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalityCertificate {
    pub is_extreme: bool,
    pub partition: AtomicPartition,
    /// `∫_{A_i} f dμ` for every cell.
    pub moment_vectors: Vec<Vec<f64>>,
    pub rank: usize,
    /// `max_j |(∫ f dμ)_j - c_j|`.
    pub feasibility_residual: f64,
    pub witness: Option<PerturbationWitness>,
}

impl ExtremalityCertificate {
    pub fn cell_count(&self) -> usize {
        self.partition.len()
    }
}

/// Two distinct feasible measures whose midpoint is μ.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationWitness {
    /// One coefficient per partition cell, each in `[-1/2, 1/2]`.
    pub phi: Vec<f64>,
    pub nu_plus: Measure,
    pub nu_minus: Measure,
}

/// Invariant residuals of a witness, as measured against `(μ, f, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessCheck {
    /// `‖Σ φ_i ∫_{A_i} f dμ‖_∞`.
    pub orthogonality: f64,
    pub plus_residual: f64,
    pub minus_residual: f64,
    /// `(ν₊ + ν₋)/2 == μ` pointwise in floating point.
    pub exact_average: bool,
    pub distinct: bool,
    pub phi_in_range: bool,
}

impl WitnessCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.orthogonality <= tol
            && self.plus_residual <= tol
            && self.minus_residual <= tol
            && self.exact_average
            && self.distinct
            && self.phi_in_range
    }
}

impl PerturbationWitness {
    pub fn check(
        &self,
        mu: &Measure,
        table: &MomentTable,
        partition: &AtomicPartition,
        c: &[f64],
    ) -> Result<WitnessCheck> {
        check_len("phi", partition.len(), self.phi.len())?;
        let vectors = cell_moments(mu, table, partition)?;
        let mut combo = vec![0.0; table.k()];
        for (phi, v) in self.phi.iter().zip(&vectors) {
            for (acc, x) in combo.iter_mut().zip(v) {
                *acc += phi * x;
            }
        }
        let all = SubsetMask::all(mu.len());
        let residual = |nu: &Measure| -> Result<f64> {
            Ok(inf_distance(&moment_vector(nu, table, &all)?, c))
        };
        let exact_average = self
            .nu_plus
            .weights()
            .iter()
            .zip(self.nu_minus.weights())
            .zip(mu.weights())
            .all(|((p, q), w)| (p + q) * 0.5 == *w);
        Ok(WitnessCheck {
            orthogonality: combo.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            plus_residual: residual(&self.nu_plus)?,
            minus_residual: residual(&self.nu_minus)?,
            exact_average,
            distinct: self.nu_plus != self.nu_minus,
            phi_in_range: self.phi.iter().all(|p| p.abs() < 1.0)
                && self.phi.iter().any(|&p| p != 0.0),
        })
    }
}

fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

fn cell_moments(
    mu: &Measure,
    table: &MomentTable,
    partition: &AtomicPartition,
) -> Result<Vec<Vec<f64>>> {
    partition
        .cells()
        .iter()
        .map(|cell| moment_vector(mu, table, cell))
        .collect()
}

/// Decides extremality of a feasible μ and returns the supporting evidence.
pub fn certify_extreme(
    mu: &Measure,
    table: &MomentTable,
    c: &[f64],
    tol: f64,
) -> Result<ExtremalityCertificate> {
    check_len("measure", table.n(), mu.len())?;
    check_len("target vector", table.k(), c.len())?;
    let total = moment_vector(mu, table, &SubsetMask::all(mu.len()))?;
    let residual = inf_distance(&total, c);
    if !(residual <= tol) {
        return Err(Error::NotMember { residual });
    }
    if support(mu).count() == 0 {
        // The zero measure cannot be split into two distinct nonnegative measures.
        return Ok(ExtremalityCertificate {
            is_extreme: true,
            partition: AtomicPartition::empty(),
            moment_vectors: Vec::new(),
            rank: 0,
            feasibility_residual: residual,
            witness: None,
        });
    }
    let partition = atomic_partition(mu)?;
    let moment_vectors = cell_moments(mu, table, &partition)?;
    let m = partition.len();
    let rank = linalg::rank(table.k(), &moment_vectors, linalg::RANK_TOL);
    let is_extreme = m <= table.k() && rank == m;
    let witness = if is_extreme {
        None
    } else {
        Some(perturbation_witness(mu, table, &partition)?)
    };
    Ok(ExtremalityCertificate {
        is_extreme,
        partition,
        moment_vectors,
        rank,
        feasibility_residual: residual,
        witness,
    })
}

/// Builds `ν± = Σ (1 ± φ_i) μ_{A_i}` from a null vector of the cell moment
/// vectors, scaled so `max |φ_i| = 1/2`.
pub fn perturbation_witness(
    mu: &Measure,
    table: &MomentTable,
    partition: &AtomicPartition,
) -> Result<PerturbationWitness> {
    check_len("measure", table.n(), mu.len())?;
    if partition.is_empty() {
        return Err(Error::NoPerturbation);
    }
    for cell in partition.cells() {
        check_len("partition cell", mu.len(), cell.len())?;
    }
    let vectors = cell_moments(mu, table, partition)?;
    let m = vectors.len();
    if m <= table.k() && linalg::rank(table.k(), &vectors, linalg::RANK_TOL) == m {
        return Err(Error::NoPerturbation);
    }
    let raw = linalg::null_vector(table.k(), &vectors).ok_or(Error::NoPerturbation)?;
    let top = raw.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if top == 0.0 {
        return Err(Error::NoPerturbation);
    }
    let phi: Vec<f64> = raw.iter().map(|v| 0.5 * v / top).collect();

    let n = mu.len();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for (cell, &ph) in partition.cells().iter().zip(&phi) {
        for p in cell.indices() {
            let w = mu.weights()[p];
            // hi >= w and lo = 2w - hi is exact (Sterbenz), so hi + lo == 2w.
            let hi = w + (ph * w).abs();
            let lo = 2.0 * w - hi;
            let (a, b) = if ph >= 0.0 { (hi, lo) } else { (lo, hi) };
            plus[p] = a;
            minus[p] = b;
        }
    }
    Ok(PerturbationWitness {
        phi,
        nu_plus: Measure::new(plus)?,
        nu_minus: Measure::new(minus)?,
    })
}

/// Options for the brute-force extreme point search.
#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub cap: usize,
    pub execution: Execution,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            execution: Execution::default(),
        }
    }
}

/// Every extreme point of `{λ ≥ 0 : Fλ = c}`, found by solving each support
/// subset of size `≤ k` with independent columns. Results are sorted by
/// support tuple and tagged `D_f^(k)`.
pub fn enumerate_extreme(table: &MomentTable, c: &[f64], tol: f64) -> Result<Vec<DiscreteMeasure>> {
    enumerate_extreme_with(table, c, tol, &EnumerateOptions::default())
}

pub fn enumerate_extreme_with(
    table: &MomentTable,
    c: &[f64],
    tol: f64,
    opts: &EnumerateOptions,
) -> Result<Vec<DiscreteMeasure>> {
    check_len("target vector", table.k(), c.len())?;
    let n = table.n();
    if n > opts.cap {
        return Err(Error::EnumerationCap { n, cap: opts.cap });
    }
    let k = table.k();
    let columns: Vec<Vec<f64>> = (0..n).map(|i| table.column(i)).collect();
    let subsets = subsets_up_to(n, k.min(n));

    let solved = opts.execution.map(&subsets, |ids| basic_solution(ids, &columns, k, c, tol));
    let mut found: Vec<(Vec<usize>, DiscreteMeasure)> = subsets
        .into_iter()
        .zip(solved)
        .filter_map(|(ids, sol)| sol.map(|m| (ids, m)))
        .collect::<Vec<_>>();
    found.sort_by(|a, b| a.0.cmp(&b.0));
    found.dedup_by(|a, b| a.0 == b.0);
    Ok(found.into_iter().map(|(_, m)| m).collect())
}

fn basic_solution(
    ids: &[usize],
    columns: &[Vec<f64>],
    k: usize,
    c: &[f64],
    tol: f64,
) -> Option<DiscreteMeasure> {
    if ids.is_empty() {
        let zero = c.iter().all(|v| v.abs() <= tol);
        return zero.then(DiscreteMeasure::zero);
    }
    let cols: Vec<Vec<f64>> = ids.iter().map(|&i| columns[i].clone()).collect();
    if linalg::rank(k, &cols, linalg::RANK_TOL) != ids.len() {
        return None;
    }
    let (lambda, residual) = linalg::least_squares(k, &cols, c)?;
    if !(residual <= tol) || lambda.iter().any(|&l| !(l > tol)) {
        return None;
    }
    let atoms = ids
        .iter()
        .zip(&lambda)
        .map(|(&i, &w)| Atom {
            location: Location::Point(i),
            weight: w,
        })
        .collect();
    DiscreteMeasure::new(atoms).ok()?.tag_independent(k, &cols).ok()
}

/// All subsets of `0..n` with at most `max` elements, in lexicographic order
/// within each size.
pub(crate) fn subsets_up_to(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for size in 1..=max.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let mut i = size;
            while i > 0 && idx[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}
