//! Capacity curves for degraded interference channels: the common
//! conditional entropy `eta`, the degrading stage's maximum output
//! entropy `tau`, the constrained minimum-entropy trace `F`, its lower
//! convex envelope, the achievable-region boundary, and a multi-start
//! lower estimate of the broadcast-style outer bound `T`.
//!
//! All entropies are in bits. Every stochastic search takes an explicit
//! seed and reduces in a fixed order, so results are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::{check_all, check_condition3};
use crate::geom::lower_hull;
use crate::prob::{entropy_of, ChannelMatrix, Ddic};
use crate::symmetry::uniform_maximizes_output_entropy;
use crate::{Error, Result};

/// Default seed for every stochastic search in the crate.
pub const DEFAULT_SEED: u64 = 0x5EED;

const LN_2: f64 = std::f64::consts::LN_2;
/// Iterates are kept at least this far inside the simplex so entropy
/// gradients stay finite; minima at extreme points are still reachable
/// because grid seeds start there.
const SIMPLEX_FLOOR: f64 = 1e-12;
/// Evaluation slack beyond the sampled c-range: the grid keeps c_max a
/// hair short of log2|Y1|, so queries at the exact endpoint clamp.
const RANGE_SLACK: f64 = 5e-3;
/// Penalty weights for the constrained searches, ramped stage by stage.
const MU_RAMP: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];
/// A run of the outer-bound search only counts when the conditional
/// entropy constraint lands within this distance of the target.
pub const OUTER_CONSTRAINT_TOL: f64 = 1e-3;

// --- binary helpers and the analytic oracle ---

/// Entropy of a Bernoulli(p) source, bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// Inverse of `binary_entropy` on [0, 1/2], by bisection. Runs the
/// interval down to one ulp (entropy has unbounded slope at 0, so a
/// coarser p would not give an accurate h round-trip).
pub fn binary_entropy_inv(h: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&h) {
        return Err(Error::InvalidParameter(format!(
            "binary entropy value {h} outside [0, 1]"
        )));
    }
    let target = h.clamp(0.0, 1.0);
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn star(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + (1.0 - a) * b
}

/// Analytic trace value for the binary additive channel pair: the front
/// end flips with probability `p`, the degrading stage with probability
/// `q`. For a given output entropy `c` at the first receiver the minimum
/// second-receiver entropy is h2(h2inv(c) * q) under the convolution
/// a*b = a(1-b) + (1-a)b. Serves as an independent check on the grid
/// trace; `p` and `q` fold into [0, 1/2] first.
pub fn binary_f_oracle(p: f64, q: f64, c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "flip probabilities p = {p}, q = {q} outside [0, 1]"
        )));
    }
    let p = p.min(1.0 - p);
    let q = q.min(1.0 - q);
    let c_lo = binary_entropy(p);
    if c < c_lo - 1e-9 || c > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "c = {c} outside the attainable range [{c_lo}, 1]"
        )));
    }
    let r = binary_entropy_inv(c.clamp(c_lo, 1.0))?;
    Ok(binary_entropy(star(r, q)))
}

// --- scalar channel constants ---

/// The common conditional output entropy of the family columns.
/// Requires equal column entropies (spread at most 1e-9).
pub fn eta(d: &Ddic) -> Result<f64> {
    let c3 = check_condition3(d);
    if !c3.passed {
        return Err(Error::Precondition(format!(
            "column entropies spread {} exceeds 1e-9; no common value",
            c3.spread
        )));
    }
    Ok(c3.eta)
}

/// Maximum output entropy of the degrading stage, attained at uniform
/// input for input-symmetric matrices. Runs a 1000-trial falsifier and
/// refuses to answer if some input beats uniform.
pub fn tau(t_prime: &ChannelMatrix) -> Result<f64> {
    match uniform_maximizes_output_entropy(t_prime, 1000, DEFAULT_SEED) {
        outcome if outcome.holds() => {}
        crate::symmetry::EntropyMaxOutcome::Violated {
            witness,
            witness_entropy,
            uniform_entropy,
        } => {
            return Err(Error::NotOutputEntropyMaximal {
                witness: witness.entries().to_vec(),
                witness_entropy,
                uniform_entropy,
            });
        }
        _ => unreachable!(),
    }
    let n = t_prime.n_in();
    let uniform = vec![1.0 / n as f64; n];
    Ok(entropy_of(&t_prime.apply_raw(&uniform)))
}

// --- trace of F ---

/// Default barycentric grid subdivisions per input alphabet size.
pub fn default_simplex_res(x1_size: usize) -> usize {
    match x1_size {
        0..=2 => 400,
        3 => 80,
        4 => 24,
        _ => 12,
    }
}

#[derive(Debug, Clone)]
pub struct TracePoint {
    pub c: f64,
    pub f: f64,
    /// Input distribution achieving (c, f).
    pub minimizer: Vec<f64>,
}

/// Sampled lower trace of the constrained curve
/// F(c) = min { H(Y2 | X2 = x2_tilde) : H(Y1 | X2 = x2_tilde) = c }.
/// Every point is an achieved pair, so the trace sits on or above the
/// true curve.
#[derive(Debug, Clone)]
pub struct FTrace {
    /// Bin minima plus the two forced endpoints, strictly increasing c.
    pub points: Vec<TracePoint>,
    /// Full (c, f) sample cloud from the grid sweep; envelope input.
    pub samples: Vec<(f64, f64)>,
    pub eta: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub x2_tilde: usize,
    pub simplex_res: usize,
    pub bins: usize,
    /// Bins that received no grid sample; gaps are reported, never
    /// interpolated over silently.
    pub n_empty_bins: usize,
}

impl FTrace {
    /// Piecewise-linear interpolation of the trace at `c`; queries up to
    /// RANGE_SLACK beyond the sampled range clamp to the nearest end.
    pub fn f_at(&self, c: f64) -> Result<f64> {
        interp(&self.points_xy(), self.c_min, self.c_max, c)
    }

    /// The trace point whose c is closest to `c`.
    pub fn minimizer_near(&self, c: f64) -> &TracePoint {
        self.points
            .iter()
            .min_by(|a, b| {
                let da = (a.c - c).abs();
                let db = (b.c - c).abs();
                da.partial_cmp(&db).expect("finite distances")
            })
            .expect("trace holds at least the endpoints")
    }

    fn points_xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.c, p.f)).collect()
    }
}

fn interp(pts: &[(f64, f64)], lo: f64, hi: f64, c: f64) -> Result<f64> {
    if c < lo - RANGE_SLACK || c > hi + RANGE_SLACK {
        return Err(Error::InvalidParameter(format!(
            "c = {c} outside the sampled range [{lo}, {hi}]"
        )));
    }
    let c = c.clamp(lo, hi);
    match pts.iter().position(|&(x, _)| x >= c) {
        Some(0) => Ok(pts[0].1),
        Some(i) => {
            let (x0, y0) = pts[i - 1];
            let (x1, y1) = pts[i];
            let t = if x1 > x0 { (c - x0) / (x1 - x0) } else { 0.0 };
            Ok(y0 + t * (y1 - y0))
        }
        None => Ok(pts.last().expect("nonempty").1),
    }
}

/// All compositions of `res` into `dim` parts, as simplex points in
/// lexicographic order.
fn simplex_grid(dim: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(dim - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    rec(dim, res, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|ks| ks.into_iter().map(|k| k as f64 / res as f64).collect())
        .collect()
}

/// Gradient of H (bits) at `v`, safe at zero entries: a zero coordinate
/// gets a large finite slope that vanishes under any zero matrix weight.
fn entropy_grad(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| -((x.max(1e-300)).ln() + 1.0) / LN_2).collect()
}

/// A^T g for the row-major channel matrix.
fn transpose_apply(t: &ChannelMatrix, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64; t.n_in()];
    for i in 0..t.n_out() {
        let gi = g[i];
        if gi == 0.0 {
            continue;
        }
        let row = t.row(i);
        for (j, &tij) in row.iter().enumerate() {
            out[j] += tij * gi;
        }
    }
    out
}

/// Euclidean projection onto the probability simplex, then a small floor
/// and renormalization so later entropy gradients stay finite.
fn project_to_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - theta).max(SIMPLEX_FLOOR);
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Minimizes f(p) = H(Bp) subject to H(Tp) close to `c_target` by
/// projected descent on f + mu (H(Tp) - c_target)^2 with a ramped mu.
fn penalized_trace_min(
    t: &ChannelMatrix,
    b: &ChannelMatrix,
    start: &[f64],
    c_target: f64,
) -> (Vec<f64>, f64, f64) {
    let phi = |p: &[f64], mu: f64| -> (f64, f64, f64) {
        let cv = entropy_of(&t.apply_raw(p));
        let fv = entropy_of(&b.apply_raw(p));
        (fv + mu * (cv - c_target) * (cv - c_target), cv, fv)
    };
    let mut p = start.to_vec();
    project_to_simplex(&mut p);
    for &mu in &MU_RAMP {
        let mut alpha = 0.25f64;
        let (mut phi_cur, _, _) = phi(&p, mu);
        let mut small_steps = 0;
        for _ in 0..120 {
            let img_t = t.apply_raw(&p);
            let img_b = b.apply_raw(&p);
            let cv = entropy_of(&img_t);
            let gf = transpose_apply(b, &entropy_grad(&img_b));
            let gc = transpose_apply(t, &entropy_grad(&img_t));
            let scale = 2.0 * mu * (cv - c_target);
            let grad: Vec<f64> = gf.iter().zip(&gc).map(|(a, b)| a + scale * b).collect();

            let mut step = alpha;
            let mut moved = false;
            for _ in 0..45 {
                let mut q: Vec<f64> =
                    p.iter().zip(&grad).map(|(x, g)| x - step * g).collect();
                project_to_simplex(&mut q);
                let (phi_q, _, _) = phi(&q, mu);
                if phi_q < phi_cur - 1e-15 {
                    let gain = phi_cur - phi_q;
                    p = q;
                    phi_cur = phi_q;
                    alpha = (step * 1.5).min(1.0);
                    moved = true;
                    small_steps = if gain < 1e-13 { small_steps + 1 } else { 0 };
                    break;
                }
                step *= 0.5;
            }
            if !moved || small_steps >= 2 {
                break;
            }
        }
    }
    let cv = entropy_of(&t.apply_raw(&p));
    let fv = entropy_of(&b.apply_raw(&p));
    (p, cv, fv)
}

/// Deterministic sweep of the constrained curve F: a barycentric grid
/// over input distributions, per-bin minima over c, projected-descent
/// refinement toward each bin center, and forced endpoints at the
/// common column entropy and at the largest sampled c.
pub fn trace_f(d: &Ddic, x2_tilde: usize, simplex_res: usize, bins: usize) -> Result<FTrace> {
    if simplex_res < 2 || bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "degenerate grid: simplex_res = {simplex_res}, bins = {bins}"
        )));
    }
    let eta_val = eta(d)?;
    let t = d.t(x2_tilde)?.clone();
    let b = d.y2_channel(x2_tilde)?;
    let c_hi = (d.y1_size() as f64).log2();
    let width = (c_hi - eta_val) / bins as f64;
    if width <= 0.0 {
        return Err(Error::InvalidParameter(
            "attainable c-range is a single point; no trace to sweep".into(),
        ));
    }

    let grid = simplex_grid(d.x1_size(), simplex_res);
    let mut samples = Vec::with_capacity(grid.len());
    let mut bin_best: Vec<Option<(f64, f64, usize)>> = vec![None; bins];
    let mut max_c = (f64::NEG_INFINITY, 0usize);
    for (idx, p) in grid.iter().enumerate() {
        let c = entropy_of(&t.apply_raw(p));
        let f = entropy_of(&b.apply_raw(p));
        samples.push((c, f));
        if c > max_c.0 {
            max_c = (c, idx);
        }
        let bin = (((c - eta_val) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        if bin_best[bin].is_none_or(|(_, bf, _)| f < bf) {
            bin_best[bin] = Some((c, f, idx));
        }
    }

    // Forced low endpoint: the best vertex input. Concavity of entropy
    // puts every f at or above the minimum vertex value, so this is the
    // true left end of the curve.
    let mut eta_point: Option<TracePoint> = None;
    for j in 0..d.x1_size() {
        let c = t.column_entropy(j)?;
        let f = b.column_entropy(j)?;
        if eta_point.as_ref().is_none_or(|p| f < p.f) {
            let mut e = vec![0.0; d.x1_size()];
            e[j] = 1.0;
            eta_point = Some(TracePoint { c, f, minimizer: e });
        }
    }
    let eta_point = eta_point.expect("at least one input symbol");

    // Forced high endpoint: the sample with the largest c.
    let top = TracePoint {
        c: samples[max_c.1].0,
        f: samples[max_c.1].1,
        minimizer: grid[max_c.1].clone(),
    };

    let mut points: Vec<TracePoint> = vec![eta_point];
    let mut n_empty_bins = 0;
    for (bin, best) in bin_best.iter().enumerate() {
        let Some((c0, f0, idx)) = *best else {
            n_empty_bins += 1;
            continue;
        };
        let center = eta_val + (bin as f64 + 0.5) * width;
        let (p_ref, c_ref, f_ref) = penalized_trace_min(&t, &b, &grid[idx], center);
        if (c_ref - center).abs() <= 1e-4 && f_ref < f0 {
            points.push(TracePoint { c: c_ref, f: f_ref, minimizer: p_ref });
        } else {
            points.push(TracePoint { c: c0, f: f0, minimizer: grid[idx].clone() });
        }
    }
    points.push(top);

    points.sort_by(|a, b| a.c.partial_cmp(&b.c).expect("finite c"));
    let mut deduped: Vec<TracePoint> = Vec::with_capacity(points.len());
    for p in points {
        match deduped.last_mut() {
            Some(last) if (last.c - p.c).abs() <= 1e-12 => {
                if p.f < last.f {
                    *last = p;
                }
            }
            _ => deduped.push(p),
        }
    }
    let c_min = deduped.first().expect("nonempty").c;
    let c_max = deduped.last().expect("nonempty").c;
    // Endpoints participate in the envelope alongside the grid cloud.
    for p in &deduped {
        samples.push((p.c, p.f));
    }
    Ok(FTrace {
        points: deduped,
        samples,
        eta: eta_val,
        c_min,
        c_max,
        x2_tilde,
        simplex_res,
        bins,
        n_empty_bins,
    })
}

// --- lower convex envelope ---

/// Piecewise-linear convex function on [c_min, c_max] given by its
/// vertex list; slopes strictly increase between segments.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub vertices: Vec<(f64, f64)>,
}

impl Envelope {
    pub fn c_min(&self) -> f64 {
        self.vertices.first().expect("nonempty").0
    }

    pub fn c_max(&self) -> f64 {
        self.vertices.last().expect("nonempty").0
    }

    /// Value at `c`; queries up to RANGE_SLACK beyond the ends clamp.
    pub fn eval(&self, c: f64) -> Result<f64> {
        interp(&self.vertices, self.c_min(), self.c_max(), c)
    }
}

/// Lower convex envelope of the trace's full sample cloud (grid samples
/// plus refined bin minima and endpoints), via a monotone-chain lower
/// hull restricted to a function of c.
pub fn lower_convex_envelope(trace: &FTrace) -> Result<Envelope> {
    if trace.samples.len() < 2 {
        return Err(Error::Precondition(
            "envelope needs at least two trace samples".into(),
        ));
    }
    let mut vertices = lower_hull(&trace.samples);
    // A trailing vertical pair (same c, two f values) is not a function
    // of c; keep the lower point.
    while vertices.len() >= 2 {
        let n = vertices.len();
        if vertices[n - 1].0 == vertices[n - 2].0 {
            vertices.remove(n - 1);
        } else {
            break;
        }
    }
    if vertices.len() < 2 {
        return Err(Error::Precondition(
            "envelope degenerate: all samples share one c".into(),
        ));
    }
    Ok(Envelope { vertices })
}

// --- region boundary ---

#[derive(Debug, Clone)]
pub struct BoundaryRow {
    pub c: f64,
    pub r1: f64,
    pub r2: f64,
    /// Trace interpolation at c (the measured curve).
    pub f_hat: f64,
    /// Envelope value at c.
    pub env_f: f64,
}

#[derive(Debug, Clone)]
pub struct RegionBoundary {
    /// Sorted by R1 nondecreasing; R2 nonincreasing.
    pub rows: Vec<BoundaryRow>,
    pub eta: f64,
    pub tau: f64,
    pub x2_tilde: usize,
    pub simplex_res: usize,
    pub bins: usize,
    pub c_grid: usize,
}

#[derive(Debug, Clone)]
pub struct RegionOptions {
    /// Barycentric grid subdivisions; default chosen by |X1|.
    pub simplex_res: Option<usize>,
    pub bins: usize,
    /// Extra uniform c-samples merged with the envelope vertices.
    pub c_grid: usize,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions { simplex_res: None, bins: 200, c_grid: 101 }
    }
}

/// Achievable-region boundary {(c - eta, tau - envF(c))}: verifies the
/// structural conditions, sweeps the trace, builds the envelope, and
/// tabulates rows over the envelope vertices merged with a uniform
/// c-grid. R2 is clipped at zero.
pub fn capacity_region(d: &Ddic, opts: &RegionOptions) -> Result<RegionBoundary> {
    let report = check_all(d)?;
    if !report.all_passed() {
        return Err(Error::Precondition(
            "structural conditions fail; the region formula does not apply".into(),
        ));
    }
    let x2_tilde = report.x2_tilde.expect("present when all conditions pass");
    let simplex_res = opts.simplex_res.unwrap_or_else(|| default_simplex_res(d.x1_size()));
    let trace = trace_f(d, x2_tilde, simplex_res, opts.bins)?;
    let envelope = lower_convex_envelope(&trace)?;
    let tau_val = tau(d.t_prime())?;

    let mut cs: Vec<f64> = envelope.vertices.iter().map(|&(c, _)| c).collect();
    if opts.c_grid >= 2 {
        let (lo, hi) = (envelope.c_min(), envelope.c_max());
        for k in 0..opts.c_grid {
            cs.push(lo + (hi - lo) * k as f64 / (opts.c_grid - 1) as f64);
        }
    }
    cs.sort_by(|a, b| a.partial_cmp(b).expect("finite c"));
    cs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let mut rows: Vec<BoundaryRow> = Vec::with_capacity(cs.len());
    for &c in &cs {
        let env_f = envelope.eval(c)?;
        let f_hat = trace.f_at(c)?;
        let r1 = c - trace.eta;
        let r2 = (tau_val - env_f).max(0.0);
        // The envelope never dips below its left end, so R2 is
        // nonincreasing up to float dust; flatten that dust.
        let r2 = match rows.last() {
            Some(prev) if r2 > prev.r2 && r2 - prev.r2 <= 1e-12 => prev.r2,
            _ => r2,
        };
        rows.push(BoundaryRow { c, r1, r2, f_hat, env_f });
    }
    Ok(RegionBoundary {
        rows,
        eta: trace.eta,
        tau: tau_val,
        x2_tilde,
        simplex_res,
        bins: opts.bins,
        c_grid: opts.c_grid,
    })
}

// --- outer bound ---

/// One answered outer-bound query.
#[derive(Debug, Clone)]
pub struct OuterEstimate {
    pub c: f64,
    /// Best I(U; Y2) over the valid runs; a lower estimate of T(c).
    pub t_hat: f64,
    /// H(Y1 | U) achieved by the best run.
    pub achieved_c: f64,
    pub valid_runs: usize,
    pub total_runs: usize,
}

/// Multi-start penalized ascent for
/// T(c) = max I(U; Y2) subject to H(Y1 | U) = c,
/// over weights p(u) and conditionals p(x1, x2 | u) with
/// |U| = min(|Y1|, |Y2|, |X1||X2|). The estimate is one-sided: runs that
/// miss the constraint are discarded, and the reported value is achieved
/// by an explicit feasible decomposition.
pub struct OuterSolver {
    /// (x1, x2) -> Y1 map, |Y1| x K with K = |X1||X2|, k = x2 |X1| + x1.
    a: ChannelMatrix,
    /// (x1, x2) -> Y2 map (degrading stage composed on).
    w: ChannelMatrix,
    u_size: usize,
    x1_size: usize,
    x2_size: usize,
    trace: FTrace,
}

impl OuterSolver {
    /// Sweeps the trace at the given grid (for witness starts), then
    /// prepares the flattened channel maps.
    pub fn new(d: &Ddic, x2_tilde: usize, simplex_res: usize, bins: usize) -> Result<Self> {
        let trace = trace_f(d, x2_tilde, simplex_res, bins)?;
        Self::with_trace(d, trace)
    }

    /// Reuses an existing trace of the same channel.
    pub fn with_trace(d: &Ddic, trace: FTrace) -> Result<Self> {
        let k = d.x1_size() * d.x2_size();
        let mut rows = vec![vec![0.0f64; k]; d.y1_size()];
        for x2 in 0..d.x2_size() {
            let t = d.t(x2)?;
            for x1 in 0..d.x1_size() {
                for y1 in 0..d.y1_size() {
                    rows[y1][x2 * d.x1_size() + x1] = t.get(y1, x1);
                }
            }
        }
        let a = ChannelMatrix::new(rows)?;
        let w = d.t_prime().compose(&a)?;
        let u_size = d.y1_size().min(d.y2_size()).min(k);
        Ok(OuterSolver {
            a,
            w,
            u_size,
            x1_size: d.x1_size(),
            x2_size: d.x2_size(),
            trace,
        })
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn trace(&self) -> &FTrace {
        &self.trace
    }

    /// Best I(U; Y2) over one witness run plus `restarts` random runs;
    /// errors when no run lands within OUTER_CONSTRAINT_TOL of `c`.
    pub fn estimate(&self, c: f64, restarts: usize, seed: u64) -> Result<OuterEstimate> {
        let c_hi = -((1.0 / self.a.n_out() as f64).log2());
        if c < self.trace.eta - 1e-9 || c > c_hi + 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "c = {c} outside [eta, log2 |Y1|] = [{}, {c_hi}]",
                self.trace.eta
            )));
        }
        let mut best: Option<(f64, f64)> = None;
        let mut valid_runs = 0;
        let total_runs = restarts + 1;
        for run in 0..total_runs {
            let (w0, q0) = if run == 0 {
                self.witness_start(c)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run as u64);
                self.random_start(&mut rng)
            };
            let (value, achieved) = self.ascend(c, w0, q0);
            if (achieved - c).abs() <= OUTER_CONSTRAINT_TOL {
                valid_runs += 1;
                if best.is_none_or(|(v, _)| value > v) {
                    best = Some((value, achieved));
                }
            }
        }
        match best {
            Some((t_hat, achieved_c)) => Ok(OuterEstimate {
                c,
                t_hat,
                achieved_c,
                valid_runs,
                total_runs,
            }),
            None => Err(Error::ConstraintNotMet { c, tol: OUTER_CONSTRAINT_TOL }),
        }
    }

    /// Start from the decomposition that realizes the inner bound: U
    /// plays the role of a uniform X2, X1 drawn from the trace minimizer
    /// nearest to c, independent of U.
    fn witness_start(&self, c: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let k = self.a.n_in();
        let px1 = &self.trace.minimizer_near(c).minimizer;
        let active = self.x2_size.min(self.u_size);
        let mut w = vec![0.0f64; self.u_size];
        let mut q = vec![vec![1.0 / k as f64; k]; self.u_size];
        for u in 0..active {
            w[u] = 1.0 / active as f64;
            let mut qu = vec![0.0f64; k];
            for x1 in 0..self.x1_size {
                qu[u * self.x1_size + x1] = px1[x1];
            }
            q[u] = qu;
        }
        project_to_simplex(&mut w);
        for qu in q.iter_mut() {
            project_to_simplex(qu);
        }
        (w, q)
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<Vec<f64>>) {
        let sample = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
            let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= s.max(1e-300));
            project_to_simplex(&mut v);
            v
        };
        let w = sample(rng, self.u_size);
        let q = (0..self.u_size).map(|_| sample(rng, self.a.n_in())).collect();
        (w, q)
    }

    /// Penalized projected-gradient ascent on
    /// I(U; Y2) - mu (H(Y1|U) - c)^2 with the shared mu ramp.
    /// Returns (I(U; Y2), H(Y1|U)) at the final iterate.
    fn ascend(&self, c: f64, mut w: Vec<f64>, mut q: Vec<Vec<f64>>) -> (f64, f64) {
        let score = |w: &[f64], q: &[Vec<f64>], mu: f64| -> (f64, f64, f64) {
            let mut py2 = vec![0.0f64; self.w.n_out()];
            let mut h_y2_g_u = 0.0;
            let mut h_y1_g_u = 0.0;
            for u in 0..self.u_size {
                let pu_y2 = self.w.apply_raw(&q[u]);
                let pu_y1 = self.a.apply_raw(&q[u]);
                for (acc, x) in py2.iter_mut().zip(&pu_y2) {
                    *acc += w[u] * x;
                }
                h_y2_g_u += w[u] * entropy_of(&pu_y2);
                h_y1_g_u += w[u] * entropy_of(&pu_y1);
            }
            let i_uy2 = entropy_of(&py2) - h_y2_g_u;
            let gap = h_y1_g_u - c;
            (i_uy2 - mu * gap * gap, i_uy2, h_y1_g_u)
        };

        for &mu in &MU_RAMP {
            let mut alpha = 0.25f64;
            let (mut j_cur, _, _) = score(&w, &q, mu);
            let mut small_steps = 0;
            for _ in 0..150 {
                // Shared pieces of the gradient.
                let mut py2 = vec![0.0f64; self.w.n_out()];
                let mut h_y1_g_u = 0.0;
                let py2_u: Vec<Vec<f64>> =
                    (0..self.u_size).map(|u| self.w.apply_raw(&q[u])).collect();
                let py1_u: Vec<Vec<f64>> =
                    (0..self.u_size).map(|u| self.a.apply_raw(&q[u])).collect();
                for u in 0..self.u_size {
                    for (acc, x) in py2.iter_mut().zip(&py2_u[u]) {
                        *acc += w[u] * x;
                    }
                    h_y1_g_u += w[u] * entropy_of(&py1_u[u]);
                }
                let g_py2 = entropy_grad(&py2);
                let pen = 2.0 * mu * (h_y1_g_u - c);
                let mix = transpose_apply(&self.w, &g_py2);

                let mut grad_w = vec![0.0f64; self.u_size];
                let mut grad_q: Vec<Vec<f64>> = Vec::with_capacity(self.u_size);
                for u in 0..self.u_size {
                    grad_w[u] = py2_u[u].iter().zip(&g_py2).map(|(a, b)| a * b).sum::<f64>()
                        - entropy_of(&py2_u[u])
                        - pen * entropy_of(&py1_u[u]);
                    let own = transpose_apply(&self.w, &entropy_grad(&py2_u[u]));
                    let con = transpose_apply(&self.a, &entropy_grad(&py1_u[u]));
                    let gu: Vec<f64> = (0..self.a.n_in())
                        .map(|i| w[u] * (mix[i] - own[i] - pen * con[i]))
                        .collect();
                    grad_q.push(gu);
                }

                let mut step = alpha;
                let mut moved = false;
                for _ in 0..45 {
                    let mut w_new: Vec<f64> =
                        w.iter().zip(&grad_w).map(|(x, g)| x + step * g).collect();
                    project_to_simplex(&mut w_new);
                    let mut q_new = q.clone();
                    for (qu, gu) in q_new.iter_mut().zip(&grad_q) {
                        for (x, g) in qu.iter_mut().zip(gu) {
                            *x += step * g;
                        }
                        project_to_simplex(qu);
                    }
                    let (j_new, _, _) = score(&w_new, &q_new, mu);
                    if j_new > j_cur + 1e-15 {
                        let gain = j_new - j_cur;
                        w = w_new;
                        q = q_new;
                        j_cur = j_new;
                        alpha = (step * 1.5).min(1.0);
                        moved = true;
                        small_steps = if gain < 1e-13 { small_steps + 1 } else { 0 };
                        break;
                    }
                    step *= 0.5;
                }
                if !moved || small_steps >= 2 {
                    break;
                }
            }
        }
        let (_, i_uy2, h_y1_g_u) = score(&w, &q, 0.0);
        (i_uy2, h_y1_g_u)
    }
}

/// One-shot outer-bound estimate: verifies the structural conditions,
/// sweeps the default trace, and answers for a single c.
pub fn outer_bound_t(d: &Ddic, c: f64, restarts: usize, seed: u64) -> Result<f64> {
    let report = check_all(d)?;
    if !report.all_passed() {
        return Err(Error::Precondition(
            "structural conditions fail; witness starts need a valid trace".into(),
        ));
    }
    let x2_tilde = report.x2_tilde.expect("present when all conditions pass");
    let solver = OuterSolver::new(d, x2_tilde, default_simplex_res(d.x1_size()), 200)?;
    Ok(solver.estimate(c, restarts, seed)?.t_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{make_counterexample, make_dadic, CounterexampleKind};
    use crate::prob::ProbVector;

    fn binary_dadic(p: f64, q: f64) -> Ddic {
        let p1 = ProbVector::new(vec![1.0 - p, p]).unwrap();
        let p2 = ProbVector::new(vec![1.0 - q, q]).unwrap();
        make_dadic(2, &p1, &p2).unwrap()
    }

    fn noiseless_dadic(s: usize) -> Ddic {
        let point = ProbVector::point_mass(s, 0).unwrap();
        make_dadic(s, &point, &point).unwrap()
    }

    #[test]
    fn binary_entropy_frozen_values() {
        assert!((binary_entropy(0.5) - 1.0).abs() <= 1e-15);
        assert!((binary_entropy(0.1) - 0.46899559358928117).abs() <= 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
    }

    #[test]
    fn binary_entropy_inverse_round_trip() {
        for k in 0..=20 {
            let h = k as f64 / 20.0;
            let p = binary_entropy_inv(h).unwrap();
            assert!((0.0..=0.5).contains(&p));
            assert!((binary_entropy(p) - h).abs() <= 1e-11, "h = {h}");
        }
        assert!(binary_entropy_inv(1.5).is_err());
    }

    #[test]
    fn oracle_matches_closed_forms() {
        assert!((binary_f_oracle(0.1, 0.2, 1.0).unwrap() - 1.0).abs() <= 1e-9);
        let c_eta = binary_entropy(0.1);
        let expect = binary_entropy(star(0.1, 0.2));
        assert!((binary_f_oracle(0.1, 0.2, c_eta).unwrap() - expect).abs() <= 1e-9);
        // No degradation: the oracle is the identity in c.
        for c in [0.3, 0.6, 0.95] {
            assert!((binary_f_oracle(0.05, 0.0, c).unwrap() - c).abs() <= 1e-9);
        }
        assert!(binary_f_oracle(0.1, 0.2, 0.2).is_err());
        assert!(binary_f_oracle(1.2, 0.2, 0.9).is_err());
    }

    #[test]
    fn eta_values() {
        let p1 = ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap();
        let p2 = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let d = make_dadic(3, &p1, &p2).unwrap();
        assert!((eta(&d).unwrap() - 1.1567796494470395).abs() <= 1e-12);
        assert!(eta(&noiseless_dadic(3)).unwrap().abs() <= 1e-15);
        let broken = make_counterexample(CounterexampleKind::BrokenCond3).unwrap();
        assert!(matches!(eta(&broken), Err(Error::Precondition(_))));
    }

    #[test]
    fn tau_values() {
        let bsc = ChannelMatrix::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        assert!((tau(&bsc).unwrap() - 1.0).abs() <= 1e-12);
        let erase = ChannelMatrix::new(vec![
            vec![0.7, 0.0],
            vec![0.3, 0.3],
            vec![0.0, 0.7],
        ])
        .unwrap();
        assert!((tau(&erase).unwrap() - 1.5812908992306927).abs() <= 1e-12);
        assert!((tau(&ChannelMatrix::identity(3)).unwrap() - 3f64.log2()).abs() <= 1e-12);
        // A one-sided channel where a skewed input beats uniform.
        let z = ChannelMatrix::new(vec![vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        assert!(matches!(tau(&z), Err(Error::NotOutputEntropyMaximal { .. })));
    }

    #[test]
    fn noiseless_degradation_traces_the_diagonal() {
        let d = noiseless_dadic(3);
        let trace = trace_f(&d, 0, 60, 80).unwrap();
        assert!(trace.c_min.abs() <= 1e-6);
        for p in &trace.points {
            assert!((p.f - p.c).abs() <= 1e-9, "off-diagonal at c = {}", p.c);
        }
        for win in trace.points.windows(2) {
            assert!(win[1].c > win[0].c);
        }
    }

    #[test]
    fn binary_trace_matches_analytic_oracle() {
        // Coarser grid than the default keeps this unit test fast; the
        // acceptance suite runs the full resolution.
        let d = binary_dadic(0.1, 0.2);
        let trace = trace_f(&d, 0, 100, 100).unwrap();
        assert!((trace.c_min - binary_entropy(0.1)).abs() <= 1e-6);
        assert!((trace.c_max - 1.0).abs() <= 1e-9);
        for k in 0..=20 {
            let c = trace.c_min + (trace.c_max - trace.c_min) * k as f64 / 20.0;
            let got = trace.f_at(c).unwrap();
            let want = binary_f_oracle(0.1, 0.2, c).unwrap();
            assert!((got - want).abs() <= 2e-3, "c = {c}: {got} vs {want}");
        }
    }

    #[test]
    fn trace_rejects_degenerate_grids() {
        let d = binary_dadic(0.1, 0.2);
        assert!(trace_f(&d, 0, 1, 100).is_err());
        assert!(trace_f(&d, 0, 100, 1).is_err());
    }

    #[test]
    fn envelope_of_w_shaped_cloud() {
        let cloud = vec![(0.0, 1.0), (1.0, 0.0), (2.0, 0.8), (3.0, 0.2), (4.0, 1.0)];
        let trace = FTrace {
            points: cloud
                .iter()
                .map(|&(c, f)| TracePoint { c, f, minimizer: vec![1.0] })
                .collect(),
            samples: cloud,
            eta: 0.0,
            c_min: 0.0,
            c_max: 4.0,
            x2_tilde: 0,
            simplex_res: 2,
            bins: 2,
            n_empty_bins: 0,
        };
        let env = lower_convex_envelope(&trace).unwrap();
        assert_eq!(env.vertices, vec![(0.0, 1.0), (1.0, 0.0), (3.0, 0.2), (4.0, 1.0)]);
        // Collinear cloud reduces to its two ends.
        let line: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 2.0 * k as f64)).collect();
        let trace2 = FTrace { samples: line, ..trace };
        let env2 = lower_convex_envelope(&trace2).unwrap();
        assert_eq!(env2.vertices, vec![(0.0, 0.0), (4.0, 8.0)]);
    }

    #[test]
    fn envelope_sits_under_trace_with_increasing_slopes() {
        let d = binary_dadic(0.1, 0.2);
        let trace = trace_f(&d, 0, 100, 100).unwrap();
        let env = lower_convex_envelope(&trace).unwrap();
        for p in &trace.points {
            assert!(env.eval(p.c).unwrap() <= p.f + 1e-9);
        }
        for win in env.vertices.windows(3) {
            let s01 = (win[1].1 - win[0].1) / (win[1].0 - win[0].0);
            let s12 = (win[2].1 - win[1].1) / (win[2].0 - win[1].0);
            assert!(s12 >= s01);
        }
    }

    #[test]
    fn noiseless_region_is_the_time_sharing_triangle() {
        let d = noiseless_dadic(3);
        let opts = RegionOptions { simplex_res: Some(60), bins: 80, c_grid: 41 };
        let region = capacity_region(&d, &opts).unwrap();
        let total = 3f64.log2();
        assert!(region.eta.abs() <= 1e-12);
        assert!((region.tau - total).abs() <= 1e-12);
        for row in &region.rows {
            assert!((row.r1 + row.r2 - total).abs() <= 1e-6, "row at c = {}", row.c);
        }
    }

    #[test]
    fn binary_region_endpoints_and_monotonicity() {
        let d = binary_dadic(0.1, 0.2);
        let opts = RegionOptions { simplex_res: Some(200), bins: 150, c_grid: 51 };
        let region = capacity_region(&d, &opts).unwrap();
        let first = region.rows.first().unwrap();
        let last = region.rows.last().unwrap();
        let r2_at_zero = 1.0 - binary_entropy(star(0.1, 0.2));
        let r1_at_zero = 1.0 - binary_entropy(0.1);
        assert!(first.r1.abs() <= 1e-9);
        assert!((first.r2 - r2_at_zero).abs() <= 2e-3);
        assert!((last.r1 - r1_at_zero).abs() <= 2e-3);
        assert!(last.r2.abs() <= 2e-3);
        let mut prev: Option<&BoundaryRow> = None;
        for row in &region.rows {
            assert!(row.r1 >= -1e-9 && row.r2 >= -1e-9);
            if let Some(p) = prev {
                assert!(row.r1 >= p.r1 - 1e-12);
                assert!(row.r2 <= p.r2 + 1e-12);
            }
            prev = Some(row);
        }
        // Concavity of the frontier: chords never rise above the curve.
        for win in region.rows.windows(3) {
            if win[2].r1 - win[0].r1 <= 1e-9 {
                continue;
            }
            let t = (win[1].r1 - win[0].r1) / (win[2].r1 - win[0].r1);
            let chord = win[0].r2 + t * (win[2].r2 - win[0].r2);
            assert!(win[1].r2 >= chord - 1e-9);
        }
    }

    #[test]
    fn region_requires_passing_conditions() {
        let broken = make_counterexample(CounterexampleKind::BrokenCond4).unwrap();
        assert!(matches!(
            capacity_region(&broken, &RegionOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn outer_estimate_at_the_low_end_matches_the_witness_value() {
        let d = binary_dadic(0.1, 0.2);
        let solver = OuterSolver::new(&d, 0, 100, 100).unwrap();
        let c = solver.trace().eta;
        let est = solver.estimate(c, 4, DEFAULT_SEED).unwrap();
        let expect = 1.0 - binary_entropy(star(0.1, 0.2));
        assert!((est.t_hat - expect).abs() <= 3e-3, "{} vs {expect}", est.t_hat);
        assert!((est.achieved_c - c).abs() <= OUTER_CONSTRAINT_TOL);
        assert!(est.valid_runs >= 1);
    }

    #[test]
    fn outer_estimate_vanishes_at_full_conditional_entropy() {
        let d = binary_dadic(0.1, 0.2);
        let solver = OuterSolver::new(&d, 0, 100, 100).unwrap();
        let est = solver.estimate(1.0, 4, DEFAULT_SEED).unwrap();
        assert!(est.t_hat >= -1e-12);
        assert!(est.t_hat <= 3e-3, "expected about zero, got {}", est.t_hat);
    }

    #[test]
    fn outer_estimate_respects_the_single_sender_ceiling() {
        // Degenerate two-user channel with |X2| = 1 and a noiseless
        // degrading stage: I(U; Y2) can never exceed log2 |Y1| - c.
        let family = vec![ChannelMatrix::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap()];
        let d = Ddic::new(family, ChannelMatrix::identity(2)).unwrap();
        let solver = OuterSolver::new(&d, 0, 200, 100).unwrap();
        let c = 0.8;
        let est = solver.estimate(c, 8, DEFAULT_SEED).unwrap();
        assert!(est.t_hat <= 1.0 - c + 2e-3, "got {}", est.t_hat);
    }

    #[test]
    fn outer_rejects_c_outside_range() {
        let d = binary_dadic(0.1, 0.2);
        let solver = OuterSolver::new(&d, 0, 60, 60).unwrap();
        assert!(solver.estimate(0.2, 2, DEFAULT_SEED).is_err());
        assert!(solver.estimate(1.2, 2, DEFAULT_SEED).is_err());
    }

    #[test]
    fn trace_is_invariant_to_the_reference_member() {
        let p1 = ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap();
        let p2 = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let d = make_dadic(3, &p1, &p2).unwrap();
        let t0 = trace_f(&d, 0, 40, 60).unwrap();
        let t1 = trace_f(&d, 1, 40, 60).unwrap();
        let lo = t0.c_min.max(t1.c_min);
        let hi = t0.c_max.min(t1.c_max);
        for k in 0..=15 {
            let c = lo + (hi - lo) * k as f64 / 15.0;
            let a = t0.f_at(c).unwrap();
            let b = t1.f_at(c).unwrap();
            assert!((a - b).abs() <= 2e-3, "c = {c}: {a} vs {b}");
        }
    }

    #[test]
    fn minimizer_near_picks_the_closest_point() {
        let d = binary_dadic(0.1, 0.2);
        let trace = trace_f(&d, 0, 60, 60).unwrap();
        let p = trace.minimizer_near(trace.c_min);
        assert!((p.c - trace.c_min).abs() <= 1e-12);
        // The low end is achieved by a point mass.
        assert!(p.minimizer.iter().any(|&x| (x - 1.0).abs() <= 1e-9));
    }
}
