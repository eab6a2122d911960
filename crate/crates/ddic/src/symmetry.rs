//! Permutations, permutation groups, and channel input symmetry.
//!
//! A column permutation G is an input symmetry of a channel T when some
//! row permutation P makes T G = P T, i.e. relabeling inputs can be undone
//! by relabeling outputs. The set of all such G forms a group; when that
//! group is transitive the uniform input maximizes output entropy, which
//! is what the capacity computation relies on.

use crate::prob::{entropy_of, ChannelMatrix, ProbVector};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exhaustive search over column permutations is capped at this degree.
pub const MAX_EXHAUSTIVE_INPUTS: usize = 8;
/// Entrywise tolerance when matching permuted matrices.
pub const MATCH_TOL: f64 = 1e-9;

// --- permutations ---

/// A permutation of {0, .., n-1}; `map[i]` is the image of i.
///
/// Its matrix has the 1 of column j in row map[j], so left-multiplying a
/// vector sends entry j to slot map[j].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Perm {
    map: Vec<usize>,
}

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm { map: (0..n).collect() }
    }

    /// Validates that `map` is a bijection.
    pub fn from_mapping(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::InvalidParameter(format!(
                    "mapping {map:?} is not a permutation"
                )));
            }
            seen[v] = true;
        }
        Ok(Perm { map })
    }

    pub fn degree(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.map
    }

    /// Group operation: (self * other)(i) = self(other(i)).
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(self.degree(), other.degree());
        Perm {
            map: other.map.iter().map(|&i| self.map[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Perm { map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// The permutation matrix as a channel (entry (map[j], j) is 1).
    pub fn to_matrix(&self) -> ChannelMatrix {
        let n = self.degree();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if self.map[j] == i { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        ChannelMatrix::new(rows).expect("permutation matrix is stochastic")
    }

    /// Applies the permutation to vector slots: out[map[j]] = v[j].
    pub fn permute_slots(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.degree());
        let mut out = vec![0.0; v.len()];
        for (j, &x) in v.iter().enumerate() {
            out[self.map[j]] = x;
        }
        out
    }

    /// Cycle notation, e.g. "(0 1 2)" or "id".
    pub fn cycle_notation(&self) -> String {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = String::new();
        for start in 0..n {
            if seen[start] || self.map[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut cur = self.map[start];
            while cur != start {
                seen[cur] = true;
                cyc.push(cur);
                cur = self.map[cur];
            }
            out.push('(');
            out.push_str(
                &cyc.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            );
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("id");
        }
        out
    }
}

impl std::fmt::Display for Perm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.cycle_notation())
    }
}

// --- channel relabeling ---

/// T G: column j of the result is column g(j) of `t`.
pub fn permute_columns(t: &ChannelMatrix, g: &Perm) -> ChannelMatrix {
    assert_eq!(t.n_in(), g.degree(), "column permutation degree");
    let rows: Vec<Vec<f64>> = (0..t.n_out())
        .map(|i| (0..t.n_in()).map(|j| t.get(i, g.apply(j))).collect())
        .collect();
    ChannelMatrix::new(rows).expect("column permutation preserves stochasticity")
}

/// P T: row k of `t` lands in row p(k) of the result.
pub fn permute_rows(t: &ChannelMatrix, p: &Perm) -> ChannelMatrix {
    assert_eq!(t.n_out(), p.degree(), "row permutation degree");
    let inv = p.inverse();
    let rows: Vec<Vec<f64>> = (0..t.n_out())
        .map(|i| t.row(inv.apply(i)).to_vec())
        .collect();
    ChannelMatrix::new(rows).expect("row permutation preserves stochasticity")
}

// --- groups ---

/// A verified permutation group: identity, closure, and inverses are
/// checked at construction, members are sorted and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct PermGroup {
    members: Vec<Perm>,
}

impl PermGroup {
    pub fn new(mut members: Vec<Perm>) -> Result<Self> {
        if !verify_group(&members)? {
            return Err(Error::InvalidParameter(
                "member set is not a group under composition".into(),
            ));
        }
        members.sort();
        members.dedup();
        Ok(PermGroup { members })
    }

    pub fn degree(&self) -> usize {
        self.members[0].degree()
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    /// Members in canonical (lexicographic mapping) order.
    pub fn members(&self) -> &[Perm] {
        &self.members
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.members.binary_search(g).is_ok()
    }

    /// True when every index can be mapped to every other by some member.
    pub fn is_transitive(&self) -> bool {
        let n = self.degree();
        let mut orbit = vec![false; n];
        orbit[0] = true;
        let mut frontier = vec![0usize];
        while let Some(i) = frontier.pop() {
            for g in &self.members {
                let j = g.apply(i);
                if !orbit[j] {
                    orbit[j] = true;
                    frontier.push(j);
                }
            }
        }
        orbit.into_iter().all(|b| b)
    }
}

/// Group-axiom check on a raw member list: nonempty, uniform degree,
/// contains the identity, closed under composition and inverse.
pub fn verify_group(members: &[Perm]) -> Result<bool> {
    if members.is_empty() {
        return Err(Error::InvalidParameter("empty member list".into()));
    }
    let n = members[0].degree();
    if members.iter().any(|g| g.degree() != n) {
        return Err(Error::InvalidParameter("mixed permutation degrees".into()));
    }
    let mut sorted: Vec<Perm> = members.to_vec();
    sorted.sort();
    sorted.dedup();
    let has = |g: &Perm| sorted.binary_search(g).is_ok();
    if !has(&Perm::identity(n)) {
        return Ok(false);
    }
    for g in &sorted {
        if !has(&g.inverse()) {
            return Ok(false);
        }
        for h in &sorted {
            if !has(&g.compose(h)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// --- input symmetry search ---

fn rows_equal(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Finds a row permutation P with `permuted` = P `t`, if one exists.
///
/// Duplicate rows make the match a bipartite matching problem, solved by
/// augmenting paths; candidates are scanned in index order so the returned
/// witness is deterministic.
pub fn find_row_permutation(t: &ChannelMatrix, permuted: &ChannelMatrix) -> Option<Perm> {
    if t.n_out() != permuted.n_out() || t.n_in() != permuted.n_in() {
        return None;
    }
    let m = t.n_out();
    // adj[i] lists rows k of t matching row i of `permuted`.
    let adj: Vec<Vec<usize>> = (0..m)
        .map(|i| {
            (0..m)
                .filter(|&k| rows_equal(permuted.row(i), t.row(k), MATCH_TOL))
                .collect()
        })
        .collect();

    // match_of[k] = row of `permuted` assigned to row k of t.
    let mut match_of = vec![usize::MAX; m];
    fn augment(i: usize, adj: &[Vec<usize>], match_of: &mut [usize], seen: &mut [bool]) -> bool {
        for &k in &adj[i] {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            if match_of[k] == usize::MAX || augment(match_of[k], adj, match_of, seen) {
                match_of[k] = i;
                return true;
            }
        }
        false
    }
    for i in 0..m {
        let mut seen = vec![false; m];
        if !augment(i, &adj, &mut match_of, &mut seen) {
            return None;
        }
    }
    // Row k of t landed in row match_of[k] of `permuted`.
    Perm::from_mapping(match_of).ok()
}

fn lex_permutations(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Perm>) {
        if cur.len() == n {
            out.push(Perm { map: cur.clone() });
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

/// The input symmetry group of `t` by exhaustive search over all column
/// permutations (degree capped at MAX_EXHAUSTIVE_INPUTS).
pub fn input_symmetry_group(t: &ChannelMatrix) -> Result<PermGroup> {
    let n = t.n_in();
    if n > MAX_EXHAUSTIVE_INPUTS {
        return Err(Error::AlphabetTooLarge { n, limit: MAX_EXHAUSTIVE_INPUTS });
    }
    let mut members = Vec::new();
    for g in lex_permutations(n) {
        let tg = permute_columns(t, &g);
        if find_row_permutation(t, &tg).is_some() {
            members.push(g);
        }
    }
    // The accepted set is a group up to the matching tolerance; the
    // constructor re-verifies the axioms rather than assuming them.
    PermGroup::new(members)
}

// --- entropy maximization falsifier ---

/// Outcome of probing whether the uniform input maximizes output entropy.
#[derive(Debug, Clone)]
pub enum EntropyMaxOutcome {
    Holds { uniform_entropy: f64 },
    Violated {
        witness: ProbVector,
        witness_entropy: f64,
        uniform_entropy: f64,
    },
}

impl EntropyMaxOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, EntropyMaxOutcome::Holds { .. })
    }
}

/// Checks H(T p) <= H(T u) over all simplex vertices and `trials` random
/// simplex points. A falsifier, not a proof: used as a guard before
/// relying on the transitive-symmetry entropy argument.
pub fn uniform_maximizes_output_entropy(
    t: &ChannelMatrix,
    trials: usize,
    seed: u64,
) -> EntropyMaxOutcome {
    let n = t.n_in();
    let uniform = vec![1.0 / n as f64; n];
    let h_u = entropy_of(&t.apply_raw(&uniform));
    let tol = 1e-9;

    let check = |p: Vec<f64>| -> Option<EntropyMaxOutcome> {
        let h = entropy_of(&t.apply_raw(&p));
        if h > h_u + tol {
            Some(EntropyMaxOutcome::Violated {
                witness: ProbVector::new(p).expect("sampled point is a distribution"),
                witness_entropy: h,
                uniform_entropy: h_u,
            })
        } else {
            None
        }
    };

    for j in 0..n {
        let mut p = vec![0.0; n];
        p[j] = 1.0;
        if let Some(v) = check(p) {
            return v;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        // Normalized exponentials sample the simplex uniformly.
        let mut p: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let sum: f64 = p.iter().sum();
        for x in p.iter_mut() {
            *x /= sum;
        }
        if let Some(v) = check(p) {
            return v;
        }
    }
    EntropyMaxOutcome::Holds { uniform_entropy: h_u }
}
