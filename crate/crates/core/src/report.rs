//! Ledger roll-ups: per-step aggregation of the per-(step, class) clustering
//! ledger into the plot-data tables (accuracy vs step, time vs step, warm vs
//! cold iterations) and a short text summary.

use crate::error::{Error, Result};
use crate::evolve::{StepMode, StepRecord};
use crate::io::{self, fmt_f64, BoundsRow};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// One ledger step collapsed across its class rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StepAggregate {
    pub step: usize,
    pub mode: StepMode,
    /// Summed Lloyd iterations across classes.
    pub iterations: usize,
    /// Propagation wall-clock (shared per step, recorded once).
    pub seconds_propagate: f64,
    /// Summed clustering wall-clock across classes.
    pub seconds_cluster: f64,
    /// Total condensed size at this step.
    pub condensed_size: usize,
}

/// Groups ledger rows by step, summing class contributions. Rows of one step
/// must agree on mode (one clustering stage per step).
pub fn aggregate_steps(ledger: &[StepRecord]) -> Result<Vec<StepAggregate>> {
    let mut by_step: BTreeMap<usize, StepAggregate> = BTreeMap::new();
    for r in ledger {
        let agg = by_step.entry(r.step).or_insert(StepAggregate {
            step: r.step,
            mode: r.mode,
            iterations: 0,
            seconds_propagate: r.seconds_propagate,
            seconds_cluster: 0.0,
            condensed_size: 0,
        });
        if agg.mode != r.mode {
            return Err(Error::Config(format!(
                "ledger step {} mixes warm and cold rows",
                r.step
            )));
        }
        agg.iterations += r.iterations;
        agg.seconds_cluster += r.seconds_cluster;
        agg.condensed_size += r.condensed_size;
    }
    Ok(by_step.into_values().collect())
}

/// The assembled report: three plot-data tables plus summary lines.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    /// (step, accuracy if evaluated, cumulative seconds through this step).
    pub accuracy_vs_step: Vec<(usize, Option<f64>, f64)>,
    pub time_vs_step: Vec<StepAggregate>,
    /// (step, warm iterations if present, cold iterations if present).
    pub iterations_warm_vs_cold: Vec<(usize, Option<usize>, Option<usize>)>,
    pub summary: Vec<String>,
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Builds the report tables from a primary ledger, an optional cold-run
/// ledger for the warm/cold pairing, optional per-step accuracies, and
/// optional bound rows for the summary.
pub fn build_report(
    ledger: &[StepRecord],
    cold_ledger: Option<&[StepRecord]>,
    eval_rows: Option<&[(usize, f64)]>,
    bounds: Option<&[BoundsRow]>,
) -> Result<ReportBundle> {
    if ledger.is_empty() {
        return Err(Error::Config("empty ledger".into()));
    }
    let steps = aggregate_steps(ledger)?;

    let acc_by_step: BTreeMap<usize, f64> = eval_rows
        .unwrap_or(&[])
        .iter()
        .copied()
        .collect();
    let mut cumulative = 0.0;
    let accuracy_vs_step: Vec<(usize, Option<f64>, f64)> = steps
        .iter()
        .map(|s| {
            cumulative += s.seconds_propagate + s.seconds_cluster;
            (s.step, acc_by_step.get(&s.step).copied(), cumulative)
        })
        .collect();

    // Warm/cold iteration pairing: each step contributes to the column of
    // its recorded mode; a dedicated cold run fills the cold column.
    let mut paired: BTreeMap<usize, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for s in &steps {
        let slot = paired.entry(s.step).or_default();
        match s.mode {
            StepMode::Warm => slot.0 = Some(s.iterations),
            StepMode::Cold => slot.1 = Some(s.iterations),
        }
    }
    if let Some(cold) = cold_ledger {
        for s in aggregate_steps(cold)? {
            if s.mode == StepMode::Warm {
                return Err(Error::Config(format!(
                    "cold-run ledger contains a warm step ({})",
                    s.step
                )));
            }
            paired.entry(s.step).or_default().1 = Some(s.iterations);
        }
    }
    let iterations_warm_vs_cold: Vec<(usize, Option<usize>, Option<usize>)> = paired
        .iter()
        .map(|(&step, &(w, c))| (step, w, c))
        .collect();

    let warm: Vec<f64> = iterations_warm_vs_cold
        .iter()
        .filter_map(|&(_, w, _)| w.map(|x| x as f64))
        .collect();
    let cold: Vec<f64> = iterations_warm_vs_cold
        .iter()
        .filter_map(|&(_, _, c)| c.map(|x| x as f64))
        .collect();

    let mut summary = Vec::new();
    summary.push(format!("steps: {}", steps.len()));
    summary.push(format!(
        "final condensed size: {}",
        steps.last().map_or(0, |s| s.condensed_size)
    ));
    if let Some(&(step, acc, _)) = accuracy_vs_step.last() {
        if let Some(acc) = acc {
            summary.push(format!("final accuracy (step {step}): {acc:.4}"));
        }
    }
    match (median(&warm), median(&cold)) {
        (Some(w), Some(c)) => {
            summary.push(format!("median iterations: warm {w}, cold {c}"));
            summary.push(format!(
                "warm-start benefit: {}",
                if w < c { "yes" } else { "no" }
            ));
        }
        _ => summary.push("warm-start benefit: n/a (need both warm and cold steps)".into()),
    }
    if let Some(rows) = bounds {
        let violations = rows.iter().filter(|r| !r.pass).count();
        summary.push(format!(
            "bound checks: {} instances, {} violations",
            rows.len(),
            violations
        ));
    }

    Ok(ReportBundle {
        accuracy_vs_step,
        time_vs_step: steps,
        iterations_warm_vs_cold,
        summary,
    })
}

pub const ACCURACY_VS_STEP_HEADER: &str = "step,accuracy,cumulative_seconds";
pub const TIME_VS_STEP_HEADER: &str =
    "step,seconds_propagate,seconds_cluster,seconds_total,condensed_size";
pub const ITERATIONS_HEADER: &str = "step,iterations_warm,iterations_cold";

/// Writes the three plot-data CSVs and `summary.txt` into `dir`.
pub fn write_report_bundle(dir: &Path, bundle: &ReportBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| -> Result<()> {
        fs::write(dir.join(name), text).map_err(|e| Error::io(dir.join(name), e))
    };

    let mut acc = String::from(ACCURACY_VS_STEP_HEADER);
    acc.push('\n');
    for &(step, a, secs) in &bundle.accuracy_vs_step {
        let cell = a.map(fmt_f64).unwrap_or_default();
        acc.push_str(&format!("{step},{cell},{}\n", fmt_f64(secs)));
    }
    write("accuracy_vs_step.csv", acc)?;

    let mut time = String::from(TIME_VS_STEP_HEADER);
    time.push('\n');
    for s in &bundle.time_vs_step {
        time.push_str(&format!(
            "{},{},{},{},{}\n",
            s.step,
            fmt_f64(s.seconds_propagate),
            fmt_f64(s.seconds_cluster),
            fmt_f64(s.seconds_propagate + s.seconds_cluster),
            s.condensed_size,
        ));
    }
    write("time_vs_step.csv", time)?;

    let mut iters = String::from(ITERATIONS_HEADER);
    iters.push('\n');
    for &(step, w, c) in &bundle.iterations_warm_vs_cold {
        let w = w.map(|x| x.to_string()).unwrap_or_default();
        let c = c.map(|x| x.to_string()).unwrap_or_default();
        iters.push_str(&format!("{step},{w},{c}\n"));
    }
    write("iterations_warm_vs_cold.csv", iters)?;

    write("summary.txt", bundle.summary.join("\n") + "\n")
}

/// Convenience: read inputs from disk, build, and write. Returns the bundle
/// so callers can print the summary.
pub fn run_report(
    ledger_path: &Path,
    cold_ledger_path: Option<&Path>,
    eval_path: Option<&Path>,
    bounds_path: Option<&Path>,
    out_dir: &Path,
) -> Result<ReportBundle> {
    let ledger = io::read_ledger_csv(ledger_path)?;
    let cold = cold_ledger_path.map(io::read_ledger_csv).transpose()?;
    let eval = eval_path.map(io::read_eval_csv).transpose()?;
    let bounds = bounds_path.map(io::read_bounds_csv).transpose()?;
    let bundle = build_report(
        &ledger,
        cold.as_deref(),
        eval.as_deref(),
        bounds.as_deref(),
    )?;
    write_report_bundle(out_dir, &bundle)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, class: usize, mode: StepMode, iterations: usize) -> StepRecord {
        StepRecord {
            step,
            class,
            mode,
            iterations,
            j: 1.0,
            sse: 1.0,
            penalty: 0.0,
            seconds_propagate: 0.01,
            seconds_cluster: 0.02,
            condensed_size: 4,
        }
    }

    fn warm_run(steps: usize, iters: &dyn Fn(usize) -> usize) -> Vec<StepRecord> {
        let mut out = Vec::new();
        for t in 1..=steps {
            let mode = if t == 1 { StepMode::Cold } else { StepMode::Warm };
            out.push(row(t, 0, mode, iters(t)));
            out.push(row(t, 1, mode, iters(t) + 1));
        }
        out
    }

    fn cold_run(steps: usize, iters: &dyn Fn(usize) -> usize) -> Vec<StepRecord> {
        let mut out = Vec::new();
        for t in 1..=steps {
            out.push(row(t, 0, StepMode::Cold, iters(t)));
            out.push(row(t, 1, StepMode::Cold, iters(t) + 1));
        }
        out
    }

    #[test]
    fn single_step_ledger_gives_one_row_outputs() {
        let ledger = vec![row(1, 0, StepMode::Cold, 5), row(1, 1, StepMode::Cold, 3)];
        let bundle = build_report(&ledger, None, Some(&[(1, 0.9)]), None).unwrap();
        assert_eq!(bundle.accuracy_vs_step.len(), 1);
        assert_eq!(bundle.time_vs_step.len(), 1);
        assert_eq!(bundle.iterations_warm_vs_cold.len(), 1);
        assert_eq!(bundle.accuracy_vs_step[0], (1, Some(0.9), 0.01 + 2.0 * 0.02));
        assert_eq!(bundle.time_vs_step[0].iterations, 8);
        assert_eq!(bundle.time_vs_step[0].condensed_size, 8);
        assert_eq!(bundle.iterations_warm_vs_cold[0], (1, None, Some(8)));
    }

    #[test]
    fn five_step_warm_and_cold_ledgers_pair_by_step() {
        let warm = warm_run(5, &|_| 3);
        let cold = cold_run(5, &|_| 9);
        let bundle = build_report(&warm, Some(&cold), None, None).unwrap();
        assert_eq!(bundle.iterations_warm_vs_cold.len(), 5);
        for &(step, w, c) in &bundle.iterations_warm_vs_cold {
            assert_eq!(c, Some(19), "cold column from the cold run");
            if step == 1 {
                assert_eq!(w, None, "warm run's first step is itself cold");
            } else {
                assert_eq!(w, Some(7));
            }
        }
    }

    #[test]
    fn warm_median_below_cold_median_flags_benefit() {
        let warm = warm_run(5, &|_| 2);
        let cold = cold_run(5, &|_| 10);
        let bundle = build_report(&warm, Some(&cold), None, None).unwrap();
        assert!(
            bundle
                .summary
                .iter()
                .any(|l| l == "warm-start benefit: yes"),
            "{:?}",
            bundle.summary
        );

        let slow_warm = warm_run(5, &|_| 50);
        let bundle = build_report(&slow_warm, Some(&cold), None, None).unwrap();
        assert!(bundle.summary.iter().any(|l| l == "warm-start benefit: no"));

        let bundle = build_report(&cold, None, None, None).unwrap();
        assert!(bundle
            .summary
            .iter()
            .any(|l| l.starts_with("warm-start benefit: n/a")));
    }

    #[test]
    fn cumulative_seconds_accumulate_across_steps() {
        let ledger = warm_run(3, &|_| 1);
        let bundle = build_report(&ledger, None, None, None).unwrap();
        let per_step = 0.01 + 2.0 * 0.02;
        for (i, &(_, _, secs)) in bundle.accuracy_vs_step.iter().enumerate() {
            assert!((secs - per_step * (i + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_mode_step_is_rejected() {
        let ledger = vec![row(1, 0, StepMode::Cold, 5), row(1, 1, StepMode::Warm, 3)];
        assert!(build_report(&ledger, None, None, None).is_err());
        let warm_in_cold = vec![row(1, 0, StepMode::Warm, 5)];
        assert!(build_report(&warm_in_cold.clone(), Some(&warm_in_cold), None, None).is_err());
    }

    #[test]
    fn bundle_files_have_pinned_headers_and_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let warm = warm_run(5, &|t| 10 - t);
        let cold = cold_run(5, &|t| 10 + t);
        let bundle =
            build_report(&warm, Some(&cold), Some(&[(5, 0.88)]), None).unwrap();
        write_report_bundle(dir.path(), &bundle).unwrap();
        let read = |name: &str| fs::read_to_string(dir.path().join(name)).unwrap();
        let acc = read("accuracy_vs_step.csv");
        assert!(acc.starts_with(ACCURACY_VS_STEP_HEADER));
        assert_eq!(acc.lines().count(), 6);
        assert!(acc.lines().nth(1).unwrap().starts_with("1,,"), "no eval row for step 1");
        let time = read("time_vs_step.csv");
        assert!(time.starts_with(TIME_VS_STEP_HEADER));
        assert_eq!(time.lines().count(), 6);
        let iters = read("iterations_warm_vs_cold.csv");
        assert!(iters.starts_with(ITERATIONS_HEADER));
        assert_eq!(iters.lines().count(), 6);
        assert!(!read("summary.txt").is_empty());
    }
}
