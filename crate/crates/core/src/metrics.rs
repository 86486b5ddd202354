//! Peak-reduction metrics and sweep summaries.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;

use crate::dynamics::DynamicsKind;
use crate::model::max_of;
use crate::{CpError, Result};

/// Percentage drop of the peak from `initial` to `final_load`.
pub fn peak_reduction(initial: &[f64], final_load: &[f64]) -> Result<f64> {
    if initial.len() != final_load.len() {
        return Err(CpError::DimensionMismatch {
            what: "final load",
            expected: initial.len(),
            found: final_load.len(),
        });
    }
    let before = max_of(initial);
    if before <= 0.0 || initial.is_empty() {
        return Err(CpError::ZeroPeakLoad);
    }
    Ok((before - max_of(final_load)) / before * 100.0)
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// One completed run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kind: DynamicsKind,
    /// Upper bound as a ratio of each agent's baseline level.
    pub cap_ratio: f64,
    pub players: usize,
    pub initial_peak: f64,
    pub final_peak: f64,
    /// Peak reduction in percent.
    pub reduction: f64,
}

/// Average, best and worst reduction of one dynamics, with the cases
/// attaining the extremes as `(cap_ratio, players)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSummary {
    pub kind: DynamicsKind,
    pub average: f64,
    pub best: f64,
    pub best_cases: Vec<(f64, usize)>,
    pub worst: f64,
    pub worst_cases: Vec<(f64, usize)>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    /// Rows sorted by dynamics, cap, then player count.
    pub rows: Vec<SweepRow>,
    pub per_dynamics: Vec<DynamicsSummary>,
}

fn kind_rank(kind: DynamicsKind) -> u8 {
    match kind {
        DynamicsKind::BestResponse => 0,
        DynamicsKind::FictitiousPlay => 1,
    }
}

fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    kind_rank(a.kind)
        .cmp(&kind_rank(b.kind))
        .then(a.cap_ratio.total_cmp(&b.cap_ratio))
        .then(a.players.cmp(&b.players))
}

pub fn summarize_sweep(mut rows: Vec<SweepRow>) -> Result<SweepSummary> {
    if rows.is_empty() {
        return Err(CpError::InvalidParameter("sweep has no rows".into()));
    }
    rows.sort_by(row_order);
    let mut per_dynamics = Vec::new();
    for kind in [DynamicsKind::BestResponse, DynamicsKind::FictitiousPlay] {
        let of_kind: Vec<&SweepRow> = rows.iter().filter(|r| r.kind == kind).collect();
        if of_kind.is_empty() {
            continue;
        }
        let values: Vec<f64> = of_kind.iter().map(|r| r.reduction).collect();
        let (average, _) = mean_and_std(&values);
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let worst = values.iter().copied().fold(f64::INFINITY, f64::min);
        let cases = |target: f64| {
            of_kind
                .iter()
                .filter(|r| r.reduction == target)
                .map(|r| (r.cap_ratio, r.players))
                .collect()
        };
        per_dynamics.push(DynamicsSummary {
            kind,
            average,
            best,
            best_cases: cases(best),
            worst,
            worst_cases: cases(worst),
            runs: of_kind.len(),
        });
    }
    Ok(SweepSummary { rows, per_dynamics })
}

fn case_label(cases: &[(f64, usize)], baseline_total: f64) -> String {
    let mut out = String::new();
    for (k, (cap, n)) in cases.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "X={:.0}, N={}", cap * baseline_total, n);
    }
    out
}

impl SweepSummary {
    /// Plain-text table with one column per dynamics. Caps are shown as
    /// `ratio * cap_scale` (e.g. 1000 turns 1.2 into 1200).
    pub fn render_table(&self, cap_scale: f64) -> String {
        let mut cells: Vec<[String; 3]> = Vec::new();
        for s in &self.per_dynamics {
            cells.push([
                alloc::format!("{:.2}%", s.average),
                alloc::format!("{:.2}% ({})", s.best, case_label(&s.best_cases, cap_scale)),
                alloc::format!("{:.2}% ({})", s.worst, case_label(&s.worst_cases, cap_scale)),
            ]);
        }
        let label_w = "Peak reduction".len();
        let widths: Vec<usize> = self
            .per_dynamics
            .iter()
            .zip(&cells)
            .map(|(s, c)| c.iter().map(String::len).chain([s.kind.label().len()]).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        let _ = write!(out, "{:<label_w$}", "Peak reduction");
        for (s, w) in self.per_dynamics.iter().zip(&widths) {
            let _ = write!(out, " | {:<w$}", s.kind.label());
        }
        out.push('\n');
        let rule = label_w + widths.iter().map(|w| w + 3).sum::<usize>();
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for (row, name) in ["Average", "Best", "Worst"].iter().enumerate() {
            let _ = write!(out, "{:<label_w$}", name);
            for (c, w) in cells.iter().zip(&widths) {
                let _ = write!(out, " | {:<w$}", c[row]);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_examples() {
        assert!((peak_reduction(&[0.0, 10.0], &[5.0, 5.0]).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(peak_reduction(&[4.0, 4.0], &[4.0, 4.0]).unwrap(), 0.0);
        assert!(peak_reduction(&[4.0, 4.0], &[5.0, 3.0]).unwrap() < 0.0);
        assert!(matches!(peak_reduction(&[0.0, 0.0], &[0.0, 0.0]), Err(CpError::ZeroPeakLoad)));
        assert!(peak_reduction(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mean_std() {
        assert_eq!(mean_and_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_and_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - libm::sqrt(5.0 / 3.0)).abs() < 1e-12);
    }

    fn row(kind: DynamicsKind, cap: f64, n: usize, red: f64) -> SweepRow {
        SweepRow {
            kind,
            cap_ratio: cap,
            players: n,
            initial_peak: 100.0,
            final_peak: 100.0 - red,
            reduction: red,
        }
    }

    #[test]
    fn summary_ties_and_order() {
        use DynamicsKind::*;
        let rows = alloc::vec![
            row(FictitiousPlay, 1.5, 3, 2.0),
            row(BestResponse, 1.8, 2, 4.0),
            row(BestResponse, 1.2, 5, 1.0),
            row(BestResponse, 1.2, 2, 4.0),
        ];
        let s = summarize_sweep(rows).unwrap();
        assert_eq!(s.rows[0].players, 2);
        assert_eq!(s.rows[0].cap_ratio, 1.2);
        assert_eq!(s.rows[3].kind, FictitiousPlay);
        let brd = &s.per_dynamics[0];
        assert_eq!(brd.best_cases, alloc::vec![(1.2, 2), (1.8, 2)]);
        assert_eq!(brd.worst_cases, alloc::vec![(1.2, 5)]);
        assert!((brd.average - 3.0).abs() < 1e-12);
        let table = s.render_table(1000.0);
        assert!(table.contains("X=1200, N=2, X=1800, N=2"));
        assert!(table.lines().next().unwrap().contains("FPD"));
        assert!(summarize_sweep(alloc::vec![]).is_err());
    }
}
