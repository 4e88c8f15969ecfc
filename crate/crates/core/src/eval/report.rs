//! Evaluation reports: a `key = value` text document with CSV tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::eval::independence::{IndependenceReport, PairKind};
use crate::eval::occupancy::OccupancyReport;
use crate::io::RunConfig;

/// Significance level used when summarizing chi-square tests in reports.
pub const REPORT_ALPHA: f64 = 0.001;

/// Mean recall and precision over all queries within the top `cutoff` ranks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPrPoint {
    pub cutoff: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub build: Duration,
    pub encode: Duration,
    pub query: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub config: RunConfig,
    pub database_size: usize,
    pub query_count: usize,
    pub ground_truth_k: usize,
    pub map: f64,
    pub pr_curve: Vec<RankedPrPoint>,
    pub occupancy: Option<OccupancyReport>,
    pub independence: Option<IndependenceReport>,
    pub timings: Timings,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        // writing to a String cannot fail
        let _ = self.write_text(&mut s);
        s
    }

    fn write_text(&self, s: &mut String) -> std::fmt::Result {
        writeln!(s, "[run]")?;
        writeln!(s, "method = {}", self.method)?;
        writeln!(s, "{}", self.config)?;
        writeln!(s, "ground_truth = exact l2 top-{}", self.ground_truth_k)?;
        writeln!(s, "database_size = {}", self.database_size)?;
        writeln!(s, "query_count = {}", self.query_count)?;
        writeln!(s)?;
        writeln!(s, "[retrieval]")?;
        writeln!(s, "map = {:.6}", self.map)?;
        writeln!(s, "pr_points = {}", self.pr_curve.len())?;
        writeln!(s)?;
        writeln!(s, "[timings]")?;
        writeln!(s, "build_ms = {:.3}", ms(self.timings.build))?;
        writeln!(s, "encode_ms = {:.3}", ms(self.timings.encode))?;
        writeln!(s, "query_ms = {:.3}", ms(self.timings.query))?;

        if let Some(occ) = &self.occupancy {
            writeln!(s)?;
            writeln!(s, "[occupancy]")?;
            writeln!(s, "tables = {}", occ.tables.len())?;
            writeln!(s, "mean_entropy_bits = {:.6}", occ.mean_entropy_bits())?;
            writeln!(s, "alpha = {REPORT_ALPHA}")?;
            writeln!(
                s,
                "uniform_not_rejected = {}",
                occ.non_rejected(REPORT_ALPHA)
            )?;
            writeln!(s, "table,chi_square,p_value,entropy_bits,counts")?;
            for (t, h) in occ.tables.iter().enumerate() {
                let counts: Vec<String> = h.counts.iter().map(u64::to_string).collect();
                writeln!(
                    s,
                    "{t},{:.6},{:.6e},{:.6},{}",
                    h.test.statistic,
                    h.test.p_value,
                    h.entropy_bits,
                    counts.join(" ")
                )?;
            }
        }

        if let Some(ind) = &self.independence {
            writeln!(s)?;
            writeln!(s, "[independence]")?;
            writeln!(s, "samples = {}", ind.samples)?;
            writeln!(s, "alpha = {REPORT_ALPHA}")?;
            writeln!(s, "degenerate_pairs = {}", ind.degenerate())?;
            for (label, kind) in [
                ("all", None),
                ("intra_block", Some(PairKind::IntraBlock)),
                ("inter_block", Some(PairKind::InterBlock)),
            ] {
                writeln!(s, "{label}.tested = {}", ind.tested(kind))?;
                writeln!(
                    s,
                    "{label}.non_rejection_rate = {:.6}",
                    ind.non_rejection_rate(REPORT_ALPHA, kind)
                )?;
            }
        }
        Ok(())
    }

    /// `cutoff,recall,precision` rows.
    pub fn pr_csv(&self) -> String {
        let mut s = String::from("cutoff,recall,precision\n");
        for p in &self.pr_curve {
            let _ = writeln!(s, "{},{},{}", p.cutoff, p.recall, p.precision);
        }
        s
    }

    /// `first,second,kind,statistic,p_value` rows; degenerate pairs leave the
    /// last two fields empty.
    pub fn independence_csv(&self) -> Option<String> {
        let ind = self.independence.as_ref()?;
        let mut s = String::from("first,second,kind,statistic,p_value\n");
        for p in &ind.pairs {
            let kind = match p.kind {
                PairKind::IntraBlock => "intra",
                PairKind::InterBlock => "inter",
            };
            let _ = match p.test {
                Some(t) => writeln!(
                    s,
                    "{},{},{kind},{},{}",
                    p.first, p.second, t.statistic, t.p_value
                ),
                None => writeln!(s, "{},{},{kind},,", p.first, p.second),
            };
        }
        Some(s)
    }

    /// Writes `report.txt`, `pr.csv` and, when present, `independence.csv`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(path, e))
        };
        write("report.txt", self.to_text())?;
        write("pr.csv", self.pr_csv())?;
        if let Some(csv) = self.independence_csv() {
            write("independence.csv", csv)?;
        }
        Ok(())
    }
}
