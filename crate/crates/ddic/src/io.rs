//! File formats: JSON channel specs and family files, JSON condition
//! reports, and CSV emitters for the numeric curves.
//!
//! Channel specs are JSON with explicit sizes and nested arrays indexed
//! `T[x2][y1][x1]` and `Tprime[y2][y1]`. Numbers round-trip exactly
//! (shortest-representation float serialization), so parse -> serialize
//! -> parse is the identity on channels. CSV values use fixed-decimal
//! formatting to keep outputs byte-stable across runs.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::capacity::RegionBoundary;
use crate::conditions::{CondResult, ConditionReport};
use crate::mcsim::{SimConfig, SimResult};
use crate::prob::{ChannelMatrix, Ddic};
use crate::{Error, Result};

/// On-disk channel description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelSpecFile {
    pub x1_size: usize,
    pub x2_size: usize,
    pub y1_size: usize,
    pub y2_size: usize,
    /// Family transition probabilities, indexed [x2][y1][x1].
    #[serde(rename = "T")]
    pub t: Vec<Vec<Vec<f64>>>,
    /// Degrading stage, indexed [y2][y1].
    #[serde(rename = "Tprime")]
    pub t_prime: Vec<Vec<f64>>,
}

impl ChannelSpecFile {
    pub fn from_ddic(d: &Ddic) -> Self {
        let t = d
            .family()
            .iter()
            .map(|m| (0..m.n_out()).map(|i| m.row(i).to_vec()).collect())
            .collect();
        let tp = d.t_prime();
        let t_prime = (0..tp.n_out()).map(|i| tp.row(i).to_vec()).collect();
        ChannelSpecFile {
            x1_size: d.x1_size(),
            x2_size: d.x2_size(),
            y1_size: d.y1_size(),
            y2_size: d.y2_size(),
            t,
            t_prime,
        }
    }

    pub fn to_ddic(&self) -> Result<Ddic> {
        if self.t.len() != self.x2_size {
            return Err(Error::Parse(format!(
                "T lists {} members but x2_size = {}",
                self.t.len(),
                self.x2_size
            )));
        }
        for (x2, rows) in self.t.iter().enumerate() {
            if rows.len() != self.y1_size
                || rows.iter().any(|r| r.len() != self.x1_size)
            {
                return Err(Error::Parse(format!(
                    "T[{x2}] is not {} x {}",
                    self.y1_size, self.x1_size
                )));
            }
        }
        if self.t_prime.len() != self.y2_size
            || self.t_prime.iter().any(|r| r.len() != self.y1_size)
        {
            return Err(Error::Parse(format!(
                "Tprime is not {} x {}",
                self.y2_size, self.y1_size
            )));
        }
        let family = self
            .t
            .iter()
            .map(|rows| ChannelMatrix::new(rows.clone()))
            .collect::<Result<Vec<_>>>()?;
        let t_prime = ChannelMatrix::new(self.t_prime.clone())?;
        Ddic::new(family, t_prime)
    }
}

/// Parses a JSON channel spec.
pub fn parse_channel_spec(text: &str) -> Result<Ddic> {
    let file: ChannelSpecFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_ddic()
}

/// Serializes a channel to pretty JSON (trailing newline included).
pub fn channel_spec_json(d: &Ddic) -> String {
    let mut s = serde_json::to_string_pretty(&ChannelSpecFile::from_ddic(d))
        .expect("plain data serializes");
    s.push('\n');
    s
}

pub fn load_channel_spec(path: &Path) -> Result<Ddic> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_channel_spec(&text)
}

pub fn save_channel_spec(path: &Path, d: &Ddic) -> Result<()> {
    std::fs::write(path, channel_spec_json(d))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Deserialize)]
struct FamilyFile {
    #[serde(rename = "T")]
    t: Vec<Vec<Vec<f64>>>,
}

/// Parses a family-of-matrices file: any JSON object with a "T" field
/// indexed [member][row][col]. Full channel specs qualify, so either
/// file kind can feed the degradation solver.
pub fn parse_family(text: &str) -> Result<Vec<ChannelMatrix>> {
    let file: FamilyFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.t.is_empty() {
        return Err(Error::Parse("family file lists no matrices".into()));
    }
    file.t
        .into_iter()
        .map(ChannelMatrix::new)
        .collect::<Result<Vec<_>>>()
}

pub fn load_family(path: &Path) -> Result<Vec<ChannelMatrix>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_family(&text)
}

// --- condition report ---

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

/// Summarizes a condition report as JSON: statuses, the key scalars, and
/// failure witnesses, without the bulky per-point coverage tables.
pub fn report_to_json(report: &ConditionReport) -> serde_json::Value {
    let cond1 = json!({
        "status": status(report.cond1.passed),
        "transitive": report.cond1.passed,
        "group_order": report.cond1.group.order(),
        "members": report.cond1.group.members().iter()
            .map(|g| g.cycle_notation()).collect::<Vec<_>>(),
    });
    let cond2 = match &report.cond2 {
        CondResult::Skipped => json!({ "status": "skipped" }),
        CondResult::Checked(c2) => json!({
            "status": status(c2.passed),
            "n_witnesses": c2.witnesses.len(),
            "failing_pairs": c2.failing,
        }),
    };
    let cond3 = json!({
        "status": status(report.cond3.passed),
        "eta": report.cond3.eta,
        "spread": report.cond3.spread,
    });
    let cond4 = json!({
        "status": status(report.cond4.passed),
        "target": report.cond4.target,
        "max_deviation": report.cond4.max_deviation,
    });
    let cond5 = match &report.cond5 {
        CondResult::Skipped => json!({ "status": "skipped" }),
        CondResult::Checked(c5) => json!({
            "status": status(c5.passed),
            "x2_tilde": c5.x2_tilde,
            "resolution": c5.resolution,
            "affine_dim": c5.affine_dim,
            "n_test_points": c5.n_test_points,
            "per_g_counts": c5.coverage.as_ref().map(|c| c.per_g_counts.clone()),
            "failures": c5.failures.iter().map(|f| json!({
                "x2_tilde": f.x2_tilde,
                "uncovered": f.uncovered,
            })).collect::<Vec<_>>(),
        }),
    };
    json!({
        "all_passed": report.all_passed(),
        "condition1": cond1,
        "condition2": cond2,
        "condition3": cond3,
        "condition4": cond4,
        "condition5": cond5,
        "eta": report.eta,
        "x2_tilde": report.x2_tilde,
    })
}

// --- CSV emitters ---

/// Fixed-decimal formatting; negative zero is canonicalized so equal
/// values always print identically.
fn num(x: f64, decimals: usize) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.decimals$}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Region boundary as CSV: `#` metadata lines, a header, then one row
/// per c with the rates and both curve values.
pub fn write_region_csv<W: Write>(
    out: &mut W,
    region: &RegionBoundary,
    decimals: usize,
    seed: u64,
) -> Result<()> {
    writeln!(out, "# eta = {}", num(region.eta, decimals)).map_err(io_err)?;
    writeln!(out, "# tau = {}", num(region.tau, decimals)).map_err(io_err)?;
    writeln!(out, "# x2_tilde = {}", region.x2_tilde).map_err(io_err)?;
    writeln!(out, "# simplex_res = {}", region.simplex_res).map_err(io_err)?;
    writeln!(out, "# bins = {}", region.bins).map_err(io_err)?;
    writeln!(out, "# c_grid = {}", region.c_grid).map_err(io_err)?;
    writeln!(out, "# seed = {seed}").map_err(io_err)?;
    writeln!(out, "c,R1,R2,F,envF").map_err(io_err)?;
    for row in &region.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(row.c, decimals),
            num(row.r1, decimals),
            num(row.r2, decimals),
            num(row.f_hat, decimals),
            num(row.env_f, decimals)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// One outer-bound comparison row: the estimate, the boundary value
/// tau - envF(c), and the slack between them.
#[derive(Debug, Clone)]
pub struct OuterRow {
    pub c: f64,
    pub t_hat: f64,
    pub bound: f64,
    pub slack: f64,
}

pub fn write_outer_csv<W: Write>(
    out: &mut W,
    rows: &[OuterRow],
    eta: f64,
    tau: f64,
    restarts: usize,
    decimals: usize,
    seed: u64,
) -> Result<()> {
    writeln!(out, "# eta = {}", num(eta, decimals)).map_err(io_err)?;
    writeln!(out, "# tau = {}", num(tau, decimals)).map_err(io_err)?;
    writeln!(out, "# restarts = {restarts}").map_err(io_err)?;
    writeln!(out, "# seed = {seed}").map_err(io_err)?;
    writeln!(out, "c,T_hat,bound,slack").map_err(io_err)?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            num(row.c, decimals),
            num(row.t_hat, decimals),
            num(row.bound, decimals),
            num(row.slack, decimals)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// One simulated operating point.
#[derive(Debug, Clone)]
pub struct SimRow {
    pub n: usize,
    pub r1: f64,
    pub r2: f64,
    pub result: SimResult,
}

pub fn write_sim_csv<W: Write>(
    out: &mut W,
    rows: &[SimRow],
    cfg_template: &SimConfig,
    decimals: usize,
) -> Result<()> {
    let fmt_vec = |v: &[f64]| {
        v.iter().map(|&x| num(x, decimals)).collect::<Vec<_>>().join(",")
    };
    writeln!(out, "# seed = {}", cfg_template.seed).map_err(io_err)?;
    writeln!(out, "# trials = {}", cfg_template.trials).map_err(io_err)?;
    writeln!(out, "# px1 = {}", fmt_vec(cfg_template.px1.entries())).map_err(io_err)?;
    writeln!(out, "# px2 = {}", fmt_vec(cfg_template.px2.entries())).map_err(io_err)?;
    writeln!(out, "n,R1,R2,err1,ci1,err2,ci2").map_err(io_err)?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.n,
            num(row.r1, decimals),
            num(row.r2, decimals),
            num(row.result.err1, decimals),
            num(row.result.ci1, decimals),
            num(row.result.err2, decimals),
            num(row.result.ci2, decimals)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::BoundaryRow;
    use crate::conditions::check_all;
    use crate::fixtures::{make_counterexample, make_dadic, CounterexampleKind};
    use crate::prob::ProbVector;

    fn dadic3() -> Ddic {
        let p1 = ProbVector::new(vec![0.7, 0.2, 0.1]).unwrap();
        let p2 = ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        make_dadic(3, &p1, &p2).unwrap()
    }

    #[test]
    fn spec_round_trip_is_exact() {
        let d = dadic3();
        let text = channel_spec_json(&d);
        let back = parse_channel_spec(&text).unwrap();
        assert_eq!(back.x1_size(), d.x1_size());
        assert_eq!(back.x2_size(), d.x2_size());
        assert_eq!(back.y1_size(), d.y1_size());
        assert_eq!(back.y2_size(), d.y2_size());
        for x2 in 0..d.x2_size() {
            let diff = back.t(x2).unwrap().max_abs_diff(d.t(x2).unwrap()).unwrap();
            assert_eq!(diff, 0.0);
        }
        assert_eq!(back.t_prime().max_abs_diff(d.t_prime()).unwrap(), 0.0);
        // And a second serialization is byte-identical.
        assert_eq!(channel_spec_json(&back), text);
    }

    #[test]
    fn spec_dimension_lies_are_rejected() {
        let d = dadic3();
        let mut file = ChannelSpecFile::from_ddic(&d);
        file.y1_size = 4;
        assert!(matches!(file.to_ddic(), Err(Error::Parse(_))));
        assert!(parse_channel_spec("{ not json").is_err());
    }

    #[test]
    fn family_parser_accepts_full_specs_and_family_files() {
        let d = dadic3();
        let fam = parse_family(&channel_spec_json(&d)).unwrap();
        assert_eq!(fam.len(), 3);
        assert_eq!(fam[0].max_abs_diff(d.t(0).unwrap()).unwrap(), 0.0);
        let only = serde_json::json!({ "T": [[[1.0, 0.0], [0.0, 1.0]]] }).to_string();
        assert_eq!(parse_family(&only).unwrap().len(), 1);
        assert!(parse_family("{\"T\": []}").is_err());
    }

    #[test]
    fn report_json_statuses() {
        let good = report_to_json(&check_all(&dadic3()).unwrap());
        assert_eq!(good["all_passed"], true);
        assert_eq!(good["condition1"]["status"], "pass");
        assert_eq!(good["condition5"]["x2_tilde"], 0);
        assert_eq!(good["condition1"]["members"].as_array().unwrap().len(), 3);

        let bad = make_counterexample(CounterexampleKind::NonSymmetricTprime).unwrap();
        let rep = report_to_json(&check_all(&bad).unwrap());
        assert_eq!(rep["all_passed"], false);
        assert_eq!(rep["condition1"]["status"], "fail");
        assert_eq!(rep["condition2"]["status"], "skipped");
        assert_eq!(rep["condition5"]["status"], "skipped");
    }

    #[test]
    fn region_csv_shape() {
        let region = RegionBoundary {
            rows: vec![
                BoundaryRow { c: 0.5, r1: 0.0, r2: 0.25, f_hat: 0.75, env_f: 0.75 },
                BoundaryRow { c: 1.0, r1: 0.5, r2: -0.0, f_hat: 1.0, env_f: 1.0 },
            ],
            eta: 0.5,
            tau: 1.0,
            x2_tilde: 0,
            simplex_res: 10,
            bins: 4,
            c_grid: 2,
        };
        let mut buf = Vec::new();
        write_region_csv(&mut buf, &region, 6, 0x5EED).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# eta = 0.500000");
        assert_eq!(lines[7], "c,R1,R2,F,envF");
        assert_eq!(lines[8], "0.500000,0.000000,0.250000,0.750000,0.750000");
        // Negative zero prints like zero.
        assert_eq!(lines[9], "1.000000,0.500000,0.000000,1.000000,1.000000");
        assert_eq!(lines.len(), 10);
    }

    #[test]
    fn outer_and_sim_csv_shapes() {
        let mut buf = Vec::new();
        let rows = vec![OuterRow { c: 0.5, t_hat: 0.2, bound: 0.21, slack: 0.01 }];
        write_outer_csv(&mut buf, &rows, 0.4, 1.0, 8, 4, 7).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# restarts = 8"));
        assert!(text.contains("c,T_hat,bound,slack"));
        assert!(text.contains("0.5000,0.2000,0.2100,0.0100"));

        let cfg = SimConfig {
            n: 4,
            r1: 0.25,
            r2: 0.125,
            trials: 16,
            seed: 7,
            px1: ProbVector::uniform(2),
            px2: ProbVector::uniform(2),
        };
        let row = SimRow {
            n: 4,
            r1: 0.25,
            r2: 0.125,
            result: SimResult {
                err1: 0.25,
                err2: 0.5,
                ci1: 0.1,
                ci2: 0.2,
                trials: 16,
                m1: 2,
                m2: 2,
            },
        };
        let mut buf = Vec::new();
        write_sim_csv(&mut buf, &[row], &cfg, 3).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# px1 = 0.500,0.500"));
        assert!(text.contains("n,R1,R2,err1,ci1,err2,ci2"));
        assert!(text.contains("4,0.250,0.125,0.250,0.100,0.500,0.200"));
    }
}
