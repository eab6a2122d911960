//! The five structural conditions under which the capacity region of a
//! degraded interference channel has a single-letter description.
//!
//! 1. The degrading stage T' is input symmetric with a transitive
//!    symmetry group.
//! 2. Family members are relabelings of each other by that group.
//! 3. All conditional output entropies H(Y1 | x1, x2) share one value.
//! 4. Transition weights summed over x2 are flat: |X2| / |Y1| everywhere.
//! 5. The convex hull of all family columns is covered by the union of
//!    group-relabeled copies of one member's column polytope.
//!
//! Conditions 1-4 are exact finite checks. Condition 5 is decided on a
//! deterministic finite test set (hull vertices, midpoints, a barycentric
//! grid), so a pass means "no counterexample at the stated resolution".

use std::collections::BTreeMap;

use crate::geom::convex_hull;
use crate::prob::{ChannelMatrix, Ddic};
use crate::solver::nnls;
use crate::symmetry::{input_symmetry_group, permute_rows, Perm, PermGroup};
use crate::{Error, Result};

/// Entrywise tolerance for the exact conditions (2, 3, 4).
pub const COND_TOL: f64 = 1e-9;
/// Residual tolerance for convex-membership tests in condition 5.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

// --- outcome types ---

#[derive(Debug, Clone)]
pub struct Cond1 {
    pub passed: bool,
    pub group: PermGroup,
}

#[derive(Debug, Clone)]
pub struct Cond2 {
    pub passed: bool,
    /// For each ordered pair (x2', x2''), the first group member G with
    /// T_{x2'} = G T_{x2''}.
    pub witnesses: BTreeMap<(usize, usize), Perm>,
    pub failing: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Cond3 {
    pub passed: bool,
    /// The common conditional entropy (entry (0, 0) of the table).
    pub eta: f64,
    /// Max minus min over the whole table.
    pub spread: f64,
    /// entropies[x2][x1] = H(Y1 | X1 = x1, X2 = x2).
    pub entropies: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Cond4 {
    pub passed: bool,
    /// |X2| / |Y1|.
    pub target: f64,
    pub max_deviation: f64,
}

/// Why a candidate relabeling column failed to cover the hull.
#[derive(Debug, Clone)]
pub struct CandidateFailure {
    pub x2_tilde: usize,
    /// A test point outside every relabeled copy of the candidate polytope.
    pub uncovered: Vec<f64>,
}

/// Per-test-point certificate: which group member covered it and with
/// what convex weights over the candidate's columns.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub g_index: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Coverage {
    pub x2_tilde: usize,
    pub points: Vec<Vec<f64>>,
    pub assignments: Vec<Assignment>,
    /// How many points each group member covered (first-match counting).
    pub per_g_counts: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Cond5 {
    pub passed: bool,
    pub x2_tilde: Option<usize>,
    pub resolution: usize,
    pub affine_dim: usize,
    pub n_test_points: usize,
    /// Certificate for the passing candidate.
    pub coverage: Option<Coverage>,
    /// Failures of lower-indexed candidates (all candidates when failing).
    pub failures: Vec<CandidateFailure>,
}

/// A check that is skipped when condition 1 already failed.
#[derive(Debug, Clone)]
pub enum CondResult<T> {
    Checked(T),
    Skipped,
}

impl<T> CondResult<T> {
    pub fn checked(&self) -> Option<&T> {
        match self {
            CondResult::Checked(t) => Some(t),
            CondResult::Skipped => None,
        }
    }

    pub fn is_skipped(&self) -> bool {
        matches!(self, CondResult::Skipped)
    }
}

#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub cond1: Cond1,
    pub cond2: CondResult<Cond2>,
    pub cond3: Cond3,
    pub cond4: Cond4,
    pub cond5: CondResult<Cond5>,
    /// Present iff condition 3 passed.
    pub eta: Option<f64>,
    /// Present iff condition 5 passed.
    pub x2_tilde: Option<usize>,
    /// Present iff condition 1 passed.
    pub group: Option<PermGroup>,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.cond1.passed
            && self.cond2.checked().is_some_and(|c| c.passed)
            && self.cond3.passed
            && self.cond4.passed
            && self.cond5.checked().is_some_and(|c| c.passed)
    }
}

// --- conditions 1 to 4 ---

/// Condition 1: T' is input symmetric with a transitive group.
pub fn check_condition1(d: &Ddic) -> Result<Cond1> {
    let group = input_symmetry_group(d.t_prime())?;
    let passed = group.is_transitive();
    Ok(Cond1 { passed, group })
}

/// Condition 2: every ordered pair of family members differs by a group
/// relabeling of Y1.
pub fn check_condition2(d: &Ddic, g: &PermGroup) -> Cond2 {
    let mut witnesses = BTreeMap::new();
    let mut failing = Vec::new();
    for a in 0..d.x2_size() {
        for b in 0..d.x2_size() {
            let ta = d.t(a).expect("index in range");
            let tb = d.t(b).expect("index in range");
            let hit = g.members().iter().find(|m| {
                permute_rows(tb, m)
                    .max_abs_diff(ta)
                    .is_ok_and(|diff| diff <= COND_TOL)
            });
            match hit {
                Some(m) => {
                    witnesses.insert((a, b), m.clone());
                }
                None => failing.push((a, b)),
            }
        }
    }
    Cond2 { passed: failing.is_empty(), witnesses, failing }
}

/// Condition 3: one common conditional output entropy.
pub fn check_condition3(d: &Ddic) -> Cond3 {
    let mut entropies = Vec::with_capacity(d.x2_size());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x2 in 0..d.x2_size() {
        let t = d.t(x2).expect("index in range");
        let row: Vec<f64> = (0..d.x1_size())
            .map(|x1| t.column_entropy(x1).expect("index in range"))
            .collect();
        for &h in &row {
            lo = lo.min(h);
            hi = hi.max(h);
        }
        entropies.push(row);
    }
    let spread = hi - lo;
    Cond3 {
        passed: spread <= COND_TOL,
        eta: entropies[0][0],
        spread,
        entropies,
    }
}

/// Condition 4: transition weights summed over x2 equal |X2| / |Y1|.
pub fn check_condition4(d: &Ddic) -> Cond4 {
    let target = d.x2_size() as f64 / d.y1_size() as f64;
    let mut max_deviation = 0.0f64;
    for y1 in 0..d.y1_size() {
        for x1 in 0..d.x1_size() {
            let sum: f64 = (0..d.x2_size())
                .map(|x2| d.t(x2).expect("index in range").get(y1, x1))
                .sum();
            max_deviation = max_deviation.max((sum - target).abs());
        }
    }
    Cond4 { passed: max_deviation <= COND_TOL, target, max_deviation }
}

// --- condition 5 ---

fn dedup_points(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        let dup = kept
            .iter()
            .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-12));
        if !dup {
            kept.push(p);
        }
    }
    kept
}

/// Convex membership: residual of expressing `v` as a convex combination
/// of `cols`, together with the best weights.
fn convex_fit(cols: &[Vec<f64>], v: &[f64]) -> (Vec<f64>, f64) {
    let dim = v.len();
    let k = cols.len();
    let m = dim + 1;
    let mut a = vec![0.0f64; m * k];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..dim {
            a[i * k + j] = col[i];
        }
        a[dim * k + j] = 1.0;
    }
    let mut b = Vec::with_capacity(m);
    b.extend_from_slice(v);
    b.push(1.0);
    let sol = nnls(m, k, &a, &b);
    let res = sol.max_abs_residual();
    (sol.x, res)
}

/// Extreme points of the deduplicated set: members not expressible as a
/// convex combination of the others.
fn extreme_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let others: Vec<Vec<f64>> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| q.clone())
            .collect();
        let (_, res) = convex_fit(&others, p);
        if res > COND_TOL {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        // Fully degenerate set (all points equal up to tolerance).
        out.push(points[0].clone());
    }
    out
}

/// Orthonormal basis of the affine hull via Gram-Schmidt on differences.
fn affine_basis(points: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let origin = points[0].clone();
    let dim = origin.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for p in &points[1..] {
        let mut v: Vec<f64> = p.iter().zip(&origin).map(|(a, b)| a - b).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for i in 0..dim {
                v[i] -= dot * b[i];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    (origin, basis)
}

fn project(p: &[f64], origin: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    basis
        .iter()
        .map(|b| p.iter().zip(origin).zip(b).map(|((x, o), bi)| (x - o) * bi).sum())
        .collect()
}

/// The affine dimension of the family's column hull; drives the default
/// grid resolution.
pub fn column_hull_dimension(d: &Ddic) -> usize {
    let mut cols = Vec::new();
    for x2 in 0..d.x2_size() {
        let t = d.t(x2).expect("index in range");
        for x1 in 0..d.x1_size() {
            cols.push(t.column_raw(x1));
        }
    }
    let deduped = dedup_points(cols);
    affine_basis(&deduped).1.len()
}

/// Default condition-5 grid resolution for a hull of the given dimension.
pub fn default_resolution(affine_dim: usize) -> usize {
    match affine_dim {
        0..=2 => 200,
        3 => 40,
        _ => 12,
    }
}

/// Deterministic test set for the hull of the family columns: extreme
/// points, their pairwise and triple-wise midpoints, and a barycentric
/// grid at `resolution` points per hull dimension.
fn coverage_test_points(d: &Ddic, resolution: usize) -> Result<(Vec<Vec<f64>>, usize)> {
    if resolution < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {resolution} < 2"
        )));
    }
    let mut cols = Vec::new();
    for x2 in 0..d.x2_size() {
        let t = d.t(x2)?;
        for x1 in 0..d.x1_size() {
            cols.push(t.column_raw(x1));
        }
    }
    let deduped = dedup_points(cols);
    let verts = extreme_points(&deduped);
    let dim_space = verts[0].len();
    let (origin, basis) = affine_basis(&deduped);
    let affine_dim = basis.len();

    let mut points: Vec<Vec<f64>> = verts.clone();
    for i in 0..verts.len() {
        for j in (i + 1)..verts.len() {
            let mid: Vec<f64> = (0..dim_space)
                .map(|k| 0.5 * (verts[i][k] + verts[j][k]))
                .collect();
            points.push(mid);
            for l in (j + 1)..verts.len() {
                let tri: Vec<f64> = (0..dim_space)
                    .map(|k| (verts[i][k] + verts[j][k] + verts[l][k]) / 3.0)
                    .collect();
                points.push(tri);
            }
        }
    }

    match affine_dim {
        0 => {}
        1 => {
            // Endpoints along the single hull direction, then a 1-D grid.
            let coords: Vec<f64> = verts.iter().map(|v| project(v, &origin, &basis)[0]).collect();
            let (mut lo_i, mut hi_i) = (0, 0);
            for (i, &c) in coords.iter().enumerate() {
                if c < coords[lo_i] {
                    lo_i = i;
                }
                if c > coords[hi_i] {
                    hi_i = i;
                }
            }
            for k in 0..=resolution {
                let t = k as f64 / resolution as f64;
                let p: Vec<f64> = (0..dim_space)
                    .map(|s| (1.0 - t) * verts[lo_i][s] + t * verts[hi_i][s])
                    .collect();
                points.push(p);
            }
        }
        2 => {
            // Fan-triangulate the planar hull polygon and grid each
            // triangle barycentrically.
            let coords: Vec<(f64, f64)> = verts
                .iter()
                .map(|v| {
                    let c = project(v, &origin, &basis);
                    (c[0], c[1])
                })
                .collect();
            let hull = convex_hull(&coords);
            let vert_of = |c: (f64, f64)| -> &Vec<f64> {
                let idx = coords
                    .iter()
                    .position(|&q| q == c)
                    .expect("hull vertex came from the projected set");
                &verts[idx]
            };
            for t in 1..hull.len().saturating_sub(1) {
                let (a, b, c) = (vert_of(hull[0]), vert_of(hull[t]), vert_of(hull[t + 1]));
                for i in 0..=resolution {
                    for j in 0..=(resolution - i) {
                        let k = resolution - i - j;
                        let (wa, wb, wc) = (
                            i as f64 / resolution as f64,
                            j as f64 / resolution as f64,
                            k as f64 / resolution as f64,
                        );
                        let p: Vec<f64> = (0..dim_space)
                            .map(|s| wa * a[s] + wb * b[s] + wc * c[s])
                            .collect();
                        points.push(p);
                    }
                }
            }
        }
        _ => {
            // Axis grid in hull coordinates, filtered to the hull.
            let proj: Vec<Vec<f64>> = verts.iter().map(|v| project(v, &origin, &basis)).collect();
            let mut lo = vec![f64::INFINITY; affine_dim];
            let mut hi = vec![f64::NEG_INFINITY; affine_dim];
            for c in &proj {
                for k in 0..affine_dim {
                    lo[k] = lo[k].min(c[k]);
                    hi[k] = hi[k].max(c[k]);
                }
            }
            let mut idx = vec![0usize; affine_dim];
            loop {
                let p: Vec<f64> = (0..dim_space)
                    .map(|s| {
                        let mut x = origin[s];
                        for k in 0..affine_dim {
                            let t = idx[k] as f64 / resolution as f64;
                            x += (lo[k] + t * (hi[k] - lo[k])) * basis[k][s];
                        }
                        x
                    })
                    .collect();
                let (_, res) = convex_fit(&verts, &p);
                if res <= COND_TOL {
                    points.push(p);
                }
                let mut k = 0;
                loop {
                    if k == affine_dim {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] <= resolution {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == affine_dim {
                    break;
                }
            }
        }
    }

    Ok((points, affine_dim))
}

struct CoverOutcome {
    covered: bool,
    assignments: Vec<Assignment>,
    per_g_counts: Vec<usize>,
    uncovered: Option<Vec<f64>>,
}

/// Tries to cover every test point by some relabeled copy of the
/// candidate's column polytope; members are tried in the given order and
/// the first success is recorded.
fn try_cover(points: &[Vec<f64>], candidate: &ChannelMatrix, members: &[Perm]) -> CoverOutcome {
    let cols: Vec<Vec<f64>> = (0..candidate.n_in()).map(|j| candidate.column_raw(j)).collect();
    let inverses: Vec<Perm> = members.iter().map(|g| g.inverse()).collect();
    let mut assignments = Vec::with_capacity(points.len());
    let mut per_g_counts = vec![0usize; members.len()];
    for p in points {
        let mut hit = None;
        for (gi, ginv) in inverses.iter().enumerate() {
            let pulled = ginv.permute_slots(p);
            let (weights, res) = convex_fit(&cols, &pulled);
            if res <= MEMBERSHIP_TOL {
                hit = Some((gi, weights));
                break;
            }
        }
        match hit {
            Some((gi, weights)) => {
                per_g_counts[gi] += 1;
                assignments.push(Assignment { g_index: gi, weights });
            }
            None => {
                return CoverOutcome {
                    covered: false,
                    assignments,
                    per_g_counts,
                    uncovered: Some(p.clone()),
                };
            }
        }
    }
    CoverOutcome { covered: true, assignments, per_g_counts, uncovered: None }
}

/// Condition 5 at the given grid resolution: some member's column
/// polytope, relabeled across the group, covers the whole column hull.
pub fn check_condition5(d: &Ddic, g: &PermGroup, resolution: usize) -> Result<Cond5> {
    if g.degree() != d.y1_size() {
        return Err(Error::DimensionMismatch(format!(
            "group degree {} does not match |Y1| = {}",
            g.degree(),
            d.y1_size()
        )));
    }
    let (points, affine_dim) = coverage_test_points(d, resolution)?;
    let mut failures = Vec::new();
    for cand in 0..d.x2_size() {
        let outcome = try_cover(&points, d.t(cand)?, g.members());
        if outcome.covered {
            return Ok(Cond5 {
                passed: true,
                x2_tilde: Some(cand),
                resolution,
                affine_dim,
                n_test_points: points.len(),
                coverage: Some(Coverage {
                    x2_tilde: cand,
                    points,
                    assignments: outcome.assignments,
                    per_g_counts: outcome.per_g_counts,
                }),
                failures,
            });
        }
        failures.push(CandidateFailure {
            x2_tilde: cand,
            uncovered: outcome.uncovered.expect("failure carries a witness"),
        });
    }
    Ok(Cond5 {
        passed: false,
        x2_tilde: None,
        resolution,
        affine_dim,
        n_test_points: points.len(),
        coverage: None,
        failures,
    })
}

/// Coverage check for one candidate with an explicit member list; lets
/// callers confirm that a specific subset of relabelings suffices.
pub fn coverage_with_members(
    d: &Ddic,
    x2_tilde: usize,
    members: &[Perm],
    resolution: usize,
) -> Result<(bool, Option<Vec<f64>>)> {
    let (points, _) = coverage_test_points(d, resolution)?;
    let outcome = try_cover(&points, d.t(x2_tilde)?, members);
    Ok((outcome.covered, outcome.uncovered))
}

/// Membership of one point in the union of relabeled candidate polytopes;
/// resolution-independent, used to confirm uncovered witnesses.
pub fn point_covered(d: &Ddic, x2_tilde: usize, members: &[Perm], point: &[f64]) -> Result<bool> {
    let candidate = d.t(x2_tilde)?;
    let single = [point.to_vec()];
    let outcome = try_cover(&single, candidate, members);
    Ok(outcome.covered)
}

// --- the combined report ---

/// Runs all five checks. Conditions 2 and 5 need the symmetry group, so
/// they are skipped when condition 1 fails; condition 5 runs at the
/// default resolution for the hull dimension.
pub fn check_all(d: &Ddic) -> Result<ConditionReport> {
    let cond1 = check_condition1(d)?;
    let cond3 = check_condition3(d);
    let cond4 = check_condition4(d);
    let (cond2, cond5) = if cond1.passed {
        let resolution = default_resolution(column_hull_dimension(d));
        (
            CondResult::Checked(check_condition2(d, &cond1.group)),
            CondResult::Checked(check_condition5(d, &cond1.group, resolution)?),
        )
    } else {
        (CondResult::Skipped, CondResult::Skipped)
    };
    let eta = cond3.passed.then_some(cond3.eta);
    let x2_tilde = cond5.checked().and_then(|c| c.x2_tilde);
    let group = cond1.passed.then(|| cond1.group.clone());
    Ok(ConditionReport { cond1, cond2, cond3, cond4, cond5, eta, x2_tilde, group })
}
