//! Monte-Carlo probe of the random-coding scheme: fresh random codebooks
//! every trial, symbol-wise channel passes, and maximum-likelihood
//! decoding — successive at receiver 1 (interferer's message first, then
//! its own), interference-treated-as-noise at receiver 2.
//!
//! The probe is a sanity check on rate pairs, not a proof: ML decoding
//! at these blocklengths is at least as strong as the typicality
//! arguments it stands in for.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::prob::{Ddic, ProbVector};
use crate::{Error, Result};

/// Largest codebook the simulator will materialize.
pub const MAX_CODEBOOK: usize = 4096;

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Blocklength.
    pub n: usize,
    /// Rates in bits per symbol.
    pub r1: f64,
    pub r2: f64,
    pub trials: usize,
    pub seed: u64,
    /// Codebook generation distribution for transmitter 1.
    pub px1: ProbVector,
    /// Codebook generation distribution for transmitter 2 (the scheme
    /// calls for uniform; any distribution is accepted).
    pub px2: ProbVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Empirical block-error rate of receiver 1 on its own message.
    pub err1: f64,
    /// Empirical block-error rate of receiver 2 on its own message.
    pub err2: f64,
    /// 95% normal-approximation half-widths.
    pub ci1: f64,
    pub ci2: f64,
    pub trials: usize,
    /// Realized codebook sizes.
    pub m1: usize,
    pub m2: usize,
}

/// ceil(2^(n rate)) codewords, with a tolerance so that rates hitting an
/// integer power of two exactly (up to float noise) do not round up one
/// extra entry. Zero rate means a single codeword.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidParameter(format!("rate {rate} must be >= 0")));
    }
    let raw = (n as f64 * rate).exp2();
    let rounded = raw.round();
    let m = if (raw - rounded).abs() <= 1e-9 { rounded } else { raw.ceil() };
    Ok((m as usize).max(1))
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn ln_or_floor(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Runs `cfg.trials` independent coding trials and reports empirical
/// block-error rates. Trial `k` uses its own deterministic RNG stream
/// (stream k + 1 of the seed), so results are independent of execution
/// order and identical across runs.
pub fn simulate_point(d: &Ddic, cfg: &SimConfig) -> Result<SimResult> {
    if cfg.n < 1 {
        return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
    }
    if cfg.trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if cfg.px1.dim() != d.x1_size() || cfg.px2.dim() != d.x2_size() {
        return Err(Error::DimensionMismatch(format!(
            "generation distributions ({}, {}) do not match alphabets ({}, {})",
            cfg.px1.dim(),
            cfg.px2.dim(),
            d.x1_size(),
            d.x2_size()
        )));
    }
    let m1 = codebook_size(cfg.n, cfg.r1)?;
    let m2 = codebook_size(cfg.n, cfg.r2)?;
    for m in [m1, m2] {
        if m > MAX_CODEBOOK {
            return Err(Error::InvalidParameter(format!(
                "codebook of {m} codewords exceeds the {MAX_CODEBOOK} guard"
            )));
        }
    }

    // Sampling columns and log-likelihood tables, fixed per call.
    let px1 = cfg.px1.entries();
    let mut cols1: Vec<Vec<Vec<f64>>> = Vec::with_capacity(d.x2_size()); // [x2][x1][y1]
    let mut log_t: Vec<Vec<Vec<f64>>> = Vec::with_capacity(d.x2_size()); // [x2][y1][x1]
    let mut l1: Vec<Vec<f64>> = Vec::with_capacity(d.x2_size()); // [x2][y1]
    let mut l2: Vec<Vec<f64>> = Vec::with_capacity(d.x2_size()); // [x2][y2]
    for x2 in 0..d.x2_size() {
        let t = d.t(x2)?;
        cols1.push((0..d.x1_size()).map(|x1| t.column_raw(x1)).collect());
        log_t.push(
            (0..d.y1_size())
                .map(|y1| (0..d.x1_size()).map(|x1| ln_or_floor(t.get(y1, x1))).collect())
                .collect(),
        );
        l1.push(
            (0..d.y1_size())
                .map(|y1| {
                    ln_or_floor(
                        (0..d.x1_size()).map(|x1| px1[x1] * t.get(y1, x1)).sum::<f64>(),
                    )
                })
                .collect(),
        );
        let composed = d.y2_channel(x2)?;
        l2.push(
            (0..d.y2_size())
                .map(|y2| {
                    ln_or_floor(
                        (0..d.x1_size())
                            .map(|x1| px1[x1] * composed.get(y2, x1))
                            .sum::<f64>(),
                    )
                })
                .collect(),
        );
    }
    let cols_prime: Vec<Vec<f64>> =
        (0..d.y1_size()).map(|y1| d.t_prime().column_raw(y1)).collect();

    let mut fails1 = 0usize;
    let mut fails2 = 0usize;
    for trial in 0..cfg.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial as u64 + 1);

        let cb1: Vec<Vec<usize>> = (0..m1)
            .map(|_| (0..cfg.n).map(|_| draw(&mut rng, px1)).collect())
            .collect();
        let cb2: Vec<Vec<usize>> = (0..m2)
            .map(|_| (0..cfg.n).map(|_| draw(&mut rng, cfg.px2.entries())).collect())
            .collect();
        let w1 = rng.gen_range(0..m1);
        let w2 = rng.gen_range(0..m2);

        let mut y1_seq = Vec::with_capacity(cfg.n);
        let mut y2_seq = Vec::with_capacity(cfg.n);
        for t in 0..cfg.n {
            let y1 = draw(&mut rng, &cols1[cb2[w2][t]][cb1[w1][t]]);
            let y2 = draw(&mut rng, &cols_prime[y1]);
            y1_seq.push(y1);
            y2_seq.push(y2);
        }

        // Receiver 1, stage 1: the interferer's message under the
        // x1-marginalized likelihood. Ties keep the lowest index.
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (w, word) in cb2.iter().enumerate() {
            let score: f64 = (0..cfg.n).map(|t| l1[word[t]][y1_seq[t]]).sum();
            if score > best.0 {
                best = (score, w);
            }
        }
        let w2_hat_rx1 = best.1;

        // Receiver 1, stage 2: its own message given the decoded
        // interferer word.
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (w, word) in cb1.iter().enumerate() {
            let score: f64 = (0..cfg.n)
                .map(|t| log_t[cb2[w2_hat_rx1][t]][y1_seq[t]][word[t]])
                .sum();
            if score > best.0 {
                best = (score, w);
            }
        }
        if best.1 != w1 {
            fails1 += 1;
        }

        // Receiver 2: own message, interference absorbed into the law.
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (w, word) in cb2.iter().enumerate() {
            let score: f64 = (0..cfg.n).map(|t| l2[word[t]][y2_seq[t]]).sum();
            if score > best.0 {
                best = (score, w);
            }
        }
        if best.1 != w2 {
            fails2 += 1;
        }
    }

    let trials = cfg.trials as f64;
    let err1 = fails1 as f64 / trials;
    let err2 = fails2 as f64 / trials;
    let half = |e: f64| 1.96 * (e * (1.0 - e) / trials).sqrt();
    Ok(SimResult {
        err1,
        err2,
        ci1: half(err1),
        ci2: half(err2),
        trials: cfg.trials,
        m1,
        m2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::make_dadic;

    fn binary_dadic(p: f64, q: f64) -> Ddic {
        let p1 = ProbVector::new(vec![1.0 - p, p]).unwrap();
        let p2 = ProbVector::new(vec![1.0 - q, q]).unwrap();
        make_dadic(2, &p1, &p2).unwrap()
    }

    fn noiseless_dadic(s: usize) -> Ddic {
        let point = ProbVector::point_mass(s, 0).unwrap();
        make_dadic(s, &point, &point).unwrap()
    }

    fn uniform_cfg(d: &Ddic, n: usize, r1: f64, r2: f64, trials: usize) -> SimConfig {
        SimConfig {
            n,
            r1,
            r2,
            trials,
            seed: 0x5EED,
            px1: ProbVector::uniform(d.x1_size()),
            px2: ProbVector::uniform(d.x2_size()),
        }
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(codebook_size(8, 0.0).unwrap(), 1);
        assert_eq!(codebook_size(10, 0.3).unwrap(), 8);
        assert_eq!(codebook_size(12, 0.25).unwrap(), 8);
        // 2^(12 * 0.26) = 2^3.12 is strictly between 8 and 9.
        assert_eq!(codebook_size(12, 0.26).unwrap(), 9);
        assert!(codebook_size(8, -0.1).is_err());
    }

    #[test]
    fn zero_rates_over_noiseless_channels_never_err() {
        let d = noiseless_dadic(3);
        let cfg = uniform_cfg(&d, 6, 0.0, 0.0, 200);
        let res = simulate_point(&d, &cfg).unwrap();
        assert_eq!(res.err1, 0.0);
        assert_eq!(res.err2, 0.0);
        assert_eq!(res.ci1, 0.0);
        assert_eq!((res.m1, res.m2), (1, 1));
    }

    #[test]
    fn identical_configs_give_identical_results() {
        let d = binary_dadic(0.1, 0.2);
        let cfg = uniform_cfg(&d, 8, 0.2, 0.1, 300);
        let a = simulate_point(&d, &cfg).unwrap();
        let b = simulate_point(&d, &cfg).unwrap();
        assert_eq!(a, b);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 0x5EED + 1;
        let c = simulate_point(&d, &cfg2).unwrap();
        assert!(c.err1 != a.err1 || c.err2 != a.err2 || c.err1 == 0.0);
    }

    #[test]
    fn guard_rejects_oversized_codebooks() {
        let d = binary_dadic(0.1, 0.2);
        let cfg = uniform_cfg(&d, 20, 1.0, 0.0, 10);
        assert!(matches!(simulate_point(&d, &cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn overloaded_second_receiver_fails_often() {
        // Rate far above capacity of the composed stage: decoding cannot
        // be much better than guessing among many codewords.
        let d = binary_dadic(0.1, 0.2);
        let cfg = uniform_cfg(&d, 8, 0.05, 0.95, 400);
        let res = simulate_point(&d, &cfg).unwrap();
        assert!(res.err2 > 0.3, "err2 = {}", res.err2);
    }

    #[test]
    fn longer_blocks_help_inside_the_region() {
        // A comfortably interior rate pair for the binary additive
        // channel; block error should drop clearly from n = 2 to n = 12.
        // px1 must be skewed: at uniform px1 the first receiver's output
        // carries no information about x2 and stage one cannot decode.
        let d = binary_dadic(0.1, 0.2);
        let px1 = ProbVector::new(vec![0.1, 0.9]).unwrap();
        let mk = |n: usize| SimConfig {
            n,
            r1: 0.1,
            r2: 0.05,
            trials: 3000,
            seed: 0x5EED,
            px1: px1.clone(),
            px2: ProbVector::uniform(2),
        };
        let short = simulate_point(&d, &mk(2)).unwrap();
        let long = simulate_point(&d, &mk(12)).unwrap();
        assert!(
            long.err1 + 0.02 < short.err1,
            "err1: {} vs {}",
            long.err1,
            short.err1
        );
        assert!(
            long.err2 <= short.err2 + 0.01,
            "err2: {} vs {}",
            long.err2,
            short.err2
        );
    }

    #[test]
    fn ci_half_widths_follow_the_normal_approximation() {
        let d = binary_dadic(0.1, 0.2);
        let cfg = uniform_cfg(&d, 4, 0.3, 0.3, 500);
        let res = simulate_point(&d, &cfg).unwrap();
        let expect = 1.96 * (res.err1 * (1.0 - res.err1) / 500.0).sqrt();
        assert!((res.ci1 - expect).abs() <= 1e-15);
        assert!(res.err1 >= 0.0 && res.err1 <= 1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let d = binary_dadic(0.1, 0.2);
        let cfg = SimConfig {
            n: 4,
            r1: 0.1,
            r2: 0.1,
            trials: 10,
            seed: 1,
            px1: ProbVector::uniform(3),
            px2: ProbVector::uniform(2),
        };
        assert!(matches!(simulate_point(&d, &cfg), Err(Error::DimensionMismatch(_))));
    }
}
