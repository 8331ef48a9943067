//! Tables behind the effect-size and volcano plots.

use std::io::Write;
use std::path::Path;

use linda_core::special::t_quantile;

use crate::error::{Error, Result};
use crate::io::{self, ResultFile};
use crate::number::{format_f64, format_opt};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    EffectSize,
    Volcano,
}

impl std::str::FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "effectsize" => Ok(PlotKind::EffectSize),
            "volcano" => Ok(PlotKind::Volcano),
            _ => Err(format!("unknown plot kind `{s}` (expected effectsize or volcano)")),
        }
    }
}

/// Rejection status, optionally recomputed at a different FDR level from
/// the adjusted p-values.
fn rejected(row: &io::ResultRow, fdr: Option<f64>) -> bool {
    match fdr {
        Some(q) => row.padj.is_some_and(|p| p <= q),
        None => row.reject,
    }
}

pub fn write_plot_data<W: Write>(w: W, results: &ResultFile, kind: PlotKind, fdr: Option<f64>) -> Result<()> {
    let shift = match kind {
        PlotKind::EffectSize => results.bias_shift()?,
        PlotKind::Volcano => 0.0,
    };
    write_records(w, results, kind, fdr, shift).map_err(|e| Error::io("plot data", e))
}

fn write_records<W: Write>(
    w: W,
    results: &ResultFile,
    kind: PlotKind,
    fdr: Option<f64>,
    shift: f64,
) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    let flag = |r: &io::ResultRow| if rejected(r, fdr) { "1" } else { "0" }.to_string();
    match kind {
        PlotKind::EffectSize => {
            wtr.write_record(["taxon", "debiased_coef", "nondebiased_coef", "ci_lo", "ci_hi", "reject"])?;
            for r in &results.rows {
                let half = r.stderr.map(|se| t_quantile(0.975, r.df) * se);
                wtr.write_record([
                    r.taxon.clone(),
                    format_f64(r.coefficient),
                    format_f64(r.coefficient - shift),
                    format_opt(half.map(|h| r.coefficient - h)),
                    format_opt(half.map(|h| r.coefficient + h)),
                    flag(r),
                ])?;
            }
        }
        PlotKind::Volcano => {
            wtr.write_record(["taxon", "coef", "neg_log10_p", "reject"])?;
            for r in &results.rows {
                wtr.write_record([
                    r.taxon.clone(),
                    format_f64(r.coefficient),
                    format_opt(r.pvalue.map(|p| -p.log10())),
                    flag(r),
                ])?;
            }
        }
    }
    wtr.flush()
}

pub fn run(results: &Path, kind: PlotKind, fdr: Option<f64>, out: &Path) -> Result<()> {
    if let Some(q) = fdr {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Usage(format!("--fdr must lie in (0, 1), got {q}")));
        }
    }
    let parsed = io::read_results_path(results)?;
    let mut w = io::create(out)?;
    write_plot_data(&mut w, &parsed, kind, fdr)?;
    w.flush().map_err(|e| Error::io(out, e))
}
