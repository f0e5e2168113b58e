//! Convergence studies and the stabilization comparison.

use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::output;
use crate::run::{simulate, RunOutcome, RunSummary};

/// `log(e₀/e₁) / log(p₀/p₁)`.
pub fn eoc(e0: f64, e1: f64, p0: f64, p1: f64) -> f64 {
    (e0 / e1).ln() / (p0 / p1).ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Space,
    Time,
}

impl StudyKind {
    /// Column whose rates decide the study.
    pub fn headline(self) -> &'static str {
        match self {
            StudyKind::Space => "exact_h1",
            StudyKind::Time => "interp_h1",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    pub label: String,
    pub h: f64,
    pub tau: f64,
    pub completed: bool,
    pub interp_h1: f64,
    pub exact_h1: f64,
    /// Rates against the previous row; `None` for the first row and next to
    /// aborted runs.
    pub eoc_interp_h1: Option<f64>,
    pub eoc_exact_h1: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub expected_order: f64,
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    pub const HEADER: &'static str = "label,h,tau,completed,interp_h1,exact_h1,eoc_interp_h1,eoc_exact_h1,note";

    /// Rates of the headline column.
    pub fn headline_eocs(&self) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .skip(1)
            .map(|r| match self.kind {
                StudyKind::Space => r.eoc_exact_h1,
                StudyKind::Time => r.eoc_interp_h1,
            })
            .collect()
    }

    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        output::csv(
            Self::HEADER,
            self.rows.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    r.label,
                    r.h,
                    r.tau,
                    r.completed,
                    r.interp_h1,
                    r.exact_h1,
                    opt(r.eoc_interp_h1),
                    opt(r.eoc_exact_h1),
                    r.note
                )
            }),
        )
    }
}

/// Builds the table from per-run maxima over time. `parameter` is `h` for
/// space and `τ` for time.
pub fn tabulate(kind: StudyKind, expected_order: f64, runs: &[(String, &RunSummary, f64)]) -> StudyReport {
    let mut rows: Vec<StudyRow> = Vec::with_capacity(runs.len());
    for (i, (label, s, tau)) in runs.iter().enumerate() {
        let completed = s.aborted.is_none();
        let mut row = StudyRow {
            label: label.clone(),
            h: s.mesh_width,
            tau: *tau,
            completed,
            interp_h1: s.max_interp_h1.unwrap_or(f64::NAN),
            exact_h1: s.max_exact_h1.unwrap_or(f64::NAN),
            eoc_interp_h1: None,
            eoc_exact_h1: None,
            note: if completed { String::new() } else { "aborted".into() },
        };
        if i > 0 && completed && rows[i - 1].completed {
            let prev = &rows[i - 1];
            let (p0, p1) = match kind {
                StudyKind::Space => (prev.h, row.h),
                StudyKind::Time => (prev.tau, row.tau),
            };
            row.eoc_interp_h1 = Some(eoc(prev.interp_h1, row.interp_h1, p0, p1));
            row.eoc_exact_h1 = Some(eoc(prev.exact_h1, row.exact_h1, p0, p1));
            let headline = match kind {
                StudyKind::Space => row.eoc_exact_h1,
                StudyKind::Time => row.eoc_interp_h1,
            };
            if headline.is_some_and(|p| p < 0.5 * expected_order) {
                row.note = "flattening".into();
            }
        }
        rows.push(row);
    }
    StudyReport { kind, expected_order, rows }
}

#[derive(Serialize)]
struct StudyDiagnostics<'a> {
    config: &'a RunConfig,
    report: &'a StudyReport,
    runs: Vec<&'a RunSummary>,
}

fn require_reference(cfg: &RunConfig) -> Result<()> {
    if cfg.solution().is_none() {
        return Err(HarnessError::field("reference", "convergence studies need a [reference] section"));
    }
    Ok(())
}

fn finish(cfg: &RunConfig, report: StudyReport, outcomes: &[RunOutcome], out: &Path) -> Result<StudyReport> {
    output::write_text(&out.join("eoc.csv"), &report.csv())?;
    let runs = outcomes.iter().map(|o| &o.summary).collect();
    output::write_json(&out.join("diag.json"), &StudyDiagnostics { config: cfg, report: &report, runs })?;
    Ok(report)
}

/// Runs every refinement level at a fixed step size.
pub fn converge_space(cfg: &RunConfig, levels: &[usize], tau: f64, out: &Path) -> Result<StudyReport> {
    require_reference(cfg)?;
    if levels.len() < 2 {
        return Err(HarnessError::field("levels", "need at least two levels"));
    }
    output::create_dir(out)?;
    let mut outcomes = Vec::new();
    for &level in levels {
        let run_cfg = RunConfig { refinement: level, tau, snapshot_times: Vec::new(), ..cfg.clone() };
        run_cfg.validate()?;
        outcomes.push(simulate(&run_cfg, Some(&out.join(format!("level_{level}"))))?);
    }
    let runs: Vec<_> = levels.iter().zip(&outcomes).map(|(l, o)| (format!("level_{l}"), &o.summary, tau)).collect();
    let report = tabulate(StudyKind::Space, cfg.degree as f64, &runs);
    finish(cfg, report, &outcomes, out)
}

/// Runs every step size on a fixed mesh.
pub fn converge_time(cfg: &RunConfig, taus: &[f64], level: usize, out: &Path) -> Result<StudyReport> {
    require_reference(cfg)?;
    if taus.len() < 2 {
        return Err(HarnessError::field("taus", "need at least two step sizes"));
    }
    output::create_dir(out)?;
    let mut outcomes = Vec::new();
    for &tau in taus {
        let run_cfg = RunConfig { refinement: level, tau, snapshot_times: Vec::new(), ..cfg.clone() };
        run_cfg.validate()?;
        outcomes.push(simulate(&run_cfg, Some(&out.join(format!("tau_{tau}"))))?);
    }
    let runs: Vec<_> = taus.iter().zip(&outcomes).map(|(t, o)| (format!("tau_{t}"), &o.summary, *t)).collect();
    let report = tabulate(StudyKind::Time, cfg.order as f64, &runs);
    finish(cfg, report, &outcomes, out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilizationComparison {
    pub unstabilized: RunSummary,
    pub stabilized: RunSummary,
    /// No non-finite energy or diagnostics in either run.
    pub finite: [bool; 2],
}

impl StabilizationComparison {
    pub const HEADER: &'static str = "variant,completed,steps_completed,time_reached,initial_energy,final_energy,\
max_relative_energy_increase,min_det_ratio,max_abs_nu_minus_1,total_cg_iterations,wall_seconds,finite";

    pub fn csv(&self) -> String {
        let line = |name: &str, s: &RunSummary, finite: bool| {
            format!(
                "{name},{},{},{},{},{},{},{},{},{},{},{finite}",
                s.aborted.is_none(),
                s.steps_completed,
                s.time_reached,
                s.initial_energy,
                s.final_energy,
                s.max_relative_energy_increase,
                s.min_det_ratio,
                s.max_abs_nu_minus_1,
                s.total_cg_iterations,
                s.wall_seconds
            )
        };
        output::csv(
            Self::HEADER,
            [line("unstabilized", &self.unstabilized, self.finite[0]), line("stabilized", &self.stabilized, self.finite[1])],
        )
    }
}

fn finite(o: &RunOutcome) -> bool {
    o.energy.iter().all(|r| r.energy.is_finite() && r.min_det_ratio.is_finite() && r.max_abs_nu_minus_1.is_finite())
}

/// Runs the configuration with and without the stabilizing term.
pub fn compare_stabilization(cfg: &RunConfig, out: &Path) -> Result<StabilizationComparison> {
    output::create_dir(out)?;
    let plain = simulate(&RunConfig { stabilized: false, ..cfg.clone() }, Some(&out.join("unstabilized")))?;
    let stab = simulate(&RunConfig { stabilized: true, ..cfg.clone() }, Some(&out.join("stabilized")))?;
    let cmp = StabilizationComparison {
        finite: [finite(&plain), finite(&stab)],
        unstabilized: plain.summary,
        stabilized: stab.summary,
    };
    output::write_text(&out.join("comparison.csv"), &cmp.csv())?;
    #[derive(Serialize)]
    struct Diag<'a> {
        config: &'a RunConfig,
        comparison: &'a StabilizationComparison,
    }
    output::write_json(&out.join("diag.json"), &Diag { config: cfg, comparison: &cmp })?;
    Ok(cmp)
}
