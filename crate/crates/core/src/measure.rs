//! Finite measure spaces: measures, truncations, atoms, supports and atomic
//! partitions, plus integration of scalar and vector-valued functions.
//!
//! Every subset of a [`FiniteSpace`] is measurable. A set `A` is a μ-atom when
//! `μ_A(B) ∈ {0, μ(A)}` for every `B`, which on a finite space means `A`
//! carries at most one point of positive weight.

use std::cmp::Ordering;

use crate::error::{check_len, Error, Result};
use crate::linalg;

/// Weights at or below this fraction of the largest weight count as zero in
/// support and atom decisions.
pub const ZERO_WEIGHT_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub id: usize,
    pub coord: Option<f64>,
}

/// Ordered ground set `{0, .., n-1}` with optional strictly increasing coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    points: Vec<Point>,
}

impl FiniteSpace {
    /// `n` unlabeled points.
    pub fn labeled(n: usize) -> Result<Self> {
        Self::from_points((0..n).map(|id| Point { id, coord: None }).collect())
    }

    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        Self::from_points(
            coords
                .into_iter()
                .enumerate()
                .map(|(id, c)| Point { id, coord: Some(c) })
                .collect(),
        )
    }

    pub fn from_points(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("finite space needs at least one point".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.id != i {
                return Err(Error::Invalid(format!(
                    "point ids must be 0..n-1 in order; found id {} at position {i}",
                    p.id
                )));
            }
        }
        let with_coord = points.iter().filter(|p| p.coord.is_some()).count();
        if with_coord != 0 && with_coord != points.len() {
            return Err(Error::Invalid("either all points carry a coordinate or none do".into()));
        }
        if with_coord != 0 {
            let mut prev = f64::NEG_INFINITY;
            for p in &points {
                let c = p.coord.unwrap_or(f64::NAN);
                if !c.is_finite() || c <= prev {
                    return Err(Error::Invalid(
                        "coordinates must be finite and strictly increasing".into(),
                    ));
                }
                prev = c;
            }
        }
        Ok(FiniteSpace { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coord(&self, i: usize) -> Option<f64> {
        self.points.get(i).and_then(|p| p.coord)
    }

    pub fn has_coords(&self) -> bool {
        self.points[0].coord.is_some()
    }

    /// Coordinates of every point, if the space carries them.
    pub fn coords(&self) -> Option<Vec<f64>> {
        self.points.iter().map(|p| p.coord).collect()
    }

    /// Preferred external location for point `i`: its coordinate when present.
    pub fn location(&self, i: usize) -> Location {
        match self.coord(i) {
            Some(c) => Location::Coord(c),
            None => Location::Point(i),
        }
    }

    /// Index of the point at `loc`, matching coordinates exactly.
    pub fn index_of(&self, loc: Location) -> Option<usize> {
        match loc {
            Location::Point(i) => (i < self.len()).then_some(i),
            Location::Coord(c) => self.points.iter().position(|p| p.coord == Some(c)),
        }
    }
}

/// A subset of a finite space, one flag per point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    bits: Vec<bool>,
}

impl SubsetMask {
    pub fn new(bits: Vec<bool>) -> Self {
        SubsetMask { bits }
    }

    pub fn all(n: usize) -> Self {
        SubsetMask { bits: vec![true; n] }
    }

    pub fn empty(n: usize) -> Self {
        SubsetMask { bits: vec![false; n] }
    }

    pub fn from_indices(n: usize, idx: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n];
        for &i in idx {
            if i >= n {
                return Err(Error::Invalid(format!("index {i} outside a {n}-point space")));
            }
            bits[i] = true;
        }
        Ok(SubsetMask { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn is_disjoint(&self, other: &SubsetMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !(a && b))
    }

    pub fn union(&self, other: &SubsetMask) -> SubsetMask {
        SubsetMask {
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect(),
        }
    }

    pub fn complement(&self) -> SubsetMask {
        SubsetMask {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// Nonnegative finite weights over the points of a finite space.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    weights: Vec<f64>,
}

impl Measure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("measure over an empty space".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::Invalid(format!("measure weight {w} is not finite and nonnegative")));
        }
        Ok(Measure { weights })
    }

    pub fn zero(n: usize) -> Self {
        Measure { weights: vec![0.0; n] }
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        Measure { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Measure of the set `a`.
    pub fn measure_of(&self, a: &SubsetMask) -> Result<f64> {
        check_len("subset mask", self.len(), a.len())?;
        Ok(a.indices().map(|i| self.weights[i]).sum())
    }

    pub fn scaled(&self, t: f64) -> Result<Measure> {
        Measure::new(self.weights.iter().map(|w| w * t).collect())
    }

    /// Threshold below which a weight is treated as zero.
    pub fn zero_threshold(&self) -> f64 {
        let top = self.weights.iter().fold(0.0f64, |a, &w| a.max(w));
        ZERO_WEIGHT_REL * top.max(1e-300)
    }

    pub fn is_positive_at(&self, i: usize) -> bool {
        self.weights[i] > self.zero_threshold()
    }

    /// True when every weight sits below the zero threshold.
    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

/// `μ_A(B) = μ(A ∩ B)`.
pub fn truncate(mu: &Measure, a: &SubsetMask) -> Result<Measure> {
    check_len("subset mask", mu.len(), a.len())?;
    Ok(Measure {
        weights: mu
            .weights
            .iter()
            .zip(a.bits())
            .map(|(&w, &inside)| if inside { w } else { 0.0 })
            .collect(),
    })
}

/// `Σ_i w_i v_i`; points of weight exactly zero contribute nothing.
pub fn integrate(mu: &Measure, values: &[f64]) -> Result<f64> {
    check_len("value vector", mu.len(), values.len())?;
    Ok(mu
        .weights
        .iter()
        .zip(values)
        .filter(|(&w, _)| w != 0.0)
        .fold(0.0, |acc, (&w, &v)| acc + w * v))
}

/// `∫_A f dμ`, one component per row of the table.
pub fn moment_vector(mu: &Measure, table: &MomentTable, a: &SubsetMask) -> Result<Vec<f64>> {
    check_len("moment table columns", mu.len(), table.n())?;
    let restricted = truncate(mu, a)?;
    table
        .rows()
        .iter()
        .map(|row| integrate(&restricted, row))
        .collect()
}

/// Mask of points with weight above the zero threshold.
pub fn support(mu: &Measure) -> SubsetMask {
    let thr = mu.zero_threshold();
    SubsetMask {
        bits: mu.weights.iter().map(|&w| w > thr).collect(),
    }
}

/// Whether `a` is a μ-atom: at most one point of `a` carries positive weight.
pub fn is_atom(mu: &Measure, a: &SubsetMask) -> Result<bool> {
    check_len("subset mask", mu.len(), a.len())?;
    let thr = mu.zero_threshold();
    Ok(a.indices().filter(|&i| mu.weights[i] > thr).count() <= 1)
}

/// Value of `values` on the μ-atom `a`, i.e. at its unique support point.
pub fn atom_value(mu: &Measure, a: &SubsetMask, values: &[f64]) -> Result<f64> {
    check_len("subset mask", mu.len(), a.len())?;
    check_len("value vector", mu.len(), values.len())?;
    let thr = mu.zero_threshold();
    let mut pos = a.indices().filter(|&i| mu.weights[i] > thr);
    match (pos.next(), pos.next()) {
        (Some(i), None) => Ok(values[i]),
        (None, _) => Err(Error::NullAtom),
        (Some(_), Some(_)) => Err(Error::NotAnAtom),
    }
}

/// Atomic non-null partition of the whole space, one cell per support point.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPartition {
    cells: Vec<SubsetMask>,
    support_points: Vec<usize>,
}

impl AtomicPartition {
    /// Partition of the zero measure: no non-null cells.
    pub(crate) fn empty() -> Self {
        AtomicPartition {
            cells: Vec::new(),
            support_points: Vec::new(),
        }
    }

    pub fn cells(&self) -> &[SubsetMask] {
        &self.cells
    }

    /// The support point carried by each cell.
    pub fn support_points(&self) -> &[usize] {
        &self.support_points
    }

    /// Number of cells `m`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the cell containing point `i`.
    pub fn cell_of(&self, i: usize) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(i))
    }
}

/// Maximal atomic non-null partition. Zero-weight points join the cell of the
/// lowest-id support point.
pub fn atomic_partition(mu: &Measure) -> Result<AtomicPartition> {
    let supp = support(mu);
    let support_points: Vec<usize> = supp.indices().collect();
    let Some(&first) = support_points.first() else {
        return Err(Error::ZeroMeasure);
    };
    let n = mu.len();
    let cells = support_points
        .iter()
        .map(|&s| {
            let bits = (0..n)
                .map(|i| i == s || (s == first && !supp.contains(i)))
                .collect();
            SubsetMask { bits }
        })
        .collect();
    Ok(AtomicPartition {
        cells,
        support_points,
    })
}

/// Where an atom of a discrete measure sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Point(usize),
    Coord(f64),
}

impl Location {
    fn cmp_key(&self, other: &Location) -> Ordering {
        match (self, other) {
            (Location::Point(a), Location::Point(b)) => a.cmp(b),
            (Location::Coord(a), Location::Coord(b)) => a.total_cmp(b),
            (Location::Point(_), Location::Coord(_)) => Ordering::Less,
            (Location::Coord(_), Location::Point(_)) => Ordering::Greater,
        }
    }

    pub fn as_coord(&self) -> Option<f64> {
        match self {
            Location::Coord(c) => Some(*c),
            Location::Point(_) => None,
        }
    }
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Point(i) => write!(f, "#{i}"),
            Location::Coord(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: Location,
    pub weight: f64,
}

/// Membership tag for the classes `D^(k)` and `D_f^(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureClass {
    /// At most `k` atoms.
    Atomic { k: usize },
    /// At most `k` atoms whose constraint vectors are linearly independent.
    Independent { k: usize },
}

/// `Σ λ_i δ_{s_i}` with distinct locations and strictly positive weights,
/// stored in ascending location order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    class: Option<MeasureClass>,
}

impl DiscreteMeasure {
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self> {
        if let Some(a) = atoms.iter().find(|a| !(a.weight > 0.0 && a.weight.is_finite())) {
            return Err(Error::Invalid(format!(
                "atom weight {} must be strictly positive and finite",
                a.weight
            )));
        }
        if atoms.iter().any(|a| matches!(a.location, Location::Coord(c) if !c.is_finite())) {
            return Err(Error::Invalid("atom coordinates must be finite".into()));
        }
        atoms.sort_by(|a, b| a.location.cmp_key(&b.location));
        for w in atoms.windows(2) {
            if w[0].location.cmp_key(&w[1].location) == Ordering::Equal {
                return Err(Error::Invalid(format!("duplicate atom location {}", w[0].location)));
            }
            if std::mem::discriminant(&w[0].location) != std::mem::discriminant(&w[1].location) {
                return Err(Error::Invalid("atoms mix point ids and coordinates".into()));
            }
        }
        Ok(DiscreteMeasure { atoms, class: None })
    }

    /// The zero measure (no atoms).
    pub fn zero() -> Self {
        DiscreteMeasure {
            atoms: Vec::new(),
            class: None,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn class(&self) -> Option<MeasureClass> {
        self.class
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn in_atomic_class(&self, k: usize) -> bool {
        self.atoms.len() <= k
    }

    /// Tags the measure as a member of `D^(k)`.
    pub fn tag_atomic(mut self, k: usize) -> Result<Self> {
        if !self.in_atomic_class(k) {
            return Err(Error::Invalid(format!("{} atoms exceed k = {k}", self.atoms.len())));
        }
        self.class = Some(MeasureClass::Atomic { k });
        Ok(self)
    }

    /// Tags the measure as a member of `D_f^(k)`; `columns[i]` is `f` at atom `i`.
    pub fn tag_independent(mut self, k: usize, columns: &[Vec<f64>]) -> Result<Self> {
        check_len("atom columns", self.atoms.len(), columns.len())?;
        if !self.in_atomic_class(k) {
            return Err(Error::Invalid(format!("{} atoms exceed k = {k}", self.atoms.len())));
        }
        if linalg::rank(k, columns, linalg::RANK_TOL) != columns.len() {
            return Err(Error::Invalid("atom constraint vectors are linearly dependent".into()));
        }
        self.class = Some(MeasureClass::Independent { k });
        Ok(self)
    }

    /// Locations mapped through a space: point ids become coordinates when
    /// the space has them.
    pub fn located_in(&self, space: &FiniteSpace) -> DiscreteMeasure {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: match a.location {
                    Location::Point(i) => space.location(i),
                    other => other,
                },
                weight: a.weight,
            })
            .collect();
        DiscreteMeasure {
            atoms,
            class: self.class,
        }
    }

    /// Dense weight vector over a space of `n` points (point-id atoms only).
    pub fn to_measure(&self, space: &FiniteSpace) -> Result<Measure> {
        let mut w = vec![0.0; space.len()];
        for a in &self.atoms {
            let i = space
                .index_of(a.location)
                .ok_or_else(|| Error::Invalid(format!("atom location {} is not a point of the space", a.location)))?;
            w[i] += a.weight;
        }
        Measure::new(w)
    }

    /// `Σ λ_i values(s_i)` for point-id atoms.
    pub fn integrate_points(&self, values: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for a in &self.atoms {
            match a.location {
                Location::Point(i) if i < values.len() => acc += a.weight * values[i],
                _ => {
                    return Err(Error::Invalid(format!(
                        "atom location {} is not a point id in range",
                        a.location
                    )))
                }
            }
        }
        Ok(acc)
    }

    /// Moment vector of a point-id discrete measure against a table.
    pub fn moment_vector(&self, table: &MomentTable) -> Result<Vec<f64>> {
        table.rows().iter().map(|r| self.integrate_points(r)).collect()
    }
}

/// `Σ_i μ(A_i) δ_{s_i}`: the discrete measure that reproduces every integral
/// of μ, built from the atomic partition and each cell's support point.
pub fn dirac_representation(mu: &Measure) -> Result<DiscreteMeasure> {
    if mu.is_zero() {
        return Ok(DiscreteMeasure::zero());
    }
    let part = atomic_partition(mu)?;
    let atoms = part
        .cells()
        .iter()
        .zip(part.support_points())
        .map(|(cell, &s)| {
            Ok(Atom {
                location: Location::Point(s),
                weight: mu.measure_of(cell)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(atoms)
}

/// Values of the constraint functions `f_1..f_k` and the objective `g` at every point.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    f: Vec<Vec<f64>>,
    g: Vec<f64>,
}

impl MomentTable {
    /// `f[j][i] = f_j(s_i)`, `g[i] = g(s_i)`.
    pub fn new(f: Vec<Vec<f64>>, g: Vec<f64>) -> Result<Self> {
        if f.is_empty() {
            return Err(Error::Invalid("a moment table needs at least one constraint row".into()));
        }
        let n = g.len();
        if n == 0 {
            return Err(Error::Invalid("a moment table needs at least one point".into()));
        }
        for row in &f {
            check_len("constraint row", n, row.len())?;
        }
        if f.iter().flatten().chain(&g).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("moment table entries must be finite".into()));
        }
        Ok(MomentTable { f, g })
    }

    /// Table with a zero objective.
    pub fn constraints_only(f: Vec<Vec<f64>>) -> Result<Self> {
        let n = f.first().map_or(0, Vec::len);
        Self::new(f, vec![0.0; n])
    }

    pub fn k(&self) -> usize {
        self.f.len()
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// `f(s_i)` as a length-k vector.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.f.iter().map(|row| row[i]).collect()
    }

    pub fn with_objective(&self, g: Vec<f64>) -> Result<Self> {
        Self::new(self.f.clone(), g)
    }

    /// Sub-table on the listed point ids, in the given order.
    pub fn select(&self, ids: &[usize]) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.n()) {
            return Err(Error::Invalid(format!("point {bad} out of range")));
        }
        Self::new(
            self.f.iter().map(|row| ids.iter().map(|&i| row[i]).collect()).collect(),
            ids.iter().map(|&i| self.g[i]).collect(),
        )
    }
}
