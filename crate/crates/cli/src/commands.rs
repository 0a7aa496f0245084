use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use isac_core::agent::{Checkpoint, SdpStats, Variant};
use isac_core::envs::EnvKind;
use isac_core::harness::{
    aggregate, map_seeds, read_metrics, run_training_with, target_score, write_metrics,
    write_summary, EvalRecord, Execution, RunOptions, RunResult, SeedCurves, SeedDiagnostics,
    SummaryDocument,
};
use isac_core::plot::{render_svg, CurveSeries};
use isac_core::replay::write_snapshot;

use crate::args::{CompareArgs, PlotArgs, TrainArgs};
use crate::config::{FileConfig, Resolved};
use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "curves.svg";
pub const TABLE_FILE: &str = "table.txt";

/// One trained variant: its configuration and every seed's outcome.
pub struct TrainedRow {
    pub resolved: Resolved,
    pub dir: PathBuf,
    pub results: Vec<RunResult>,
}

impl TrainedRow {
    pub fn records(&self) -> Vec<EvalRecord> {
        self.results
            .iter()
            .flat_map(|r| r.records.clone())
            .collect()
    }

    pub fn faults(&self) -> Vec<String> {
        self.results
            .iter()
            .filter_map(|r| r.fault.as_ref().map(|f| format!("seed {}: {f}", r.seed)))
            .collect()
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Runs every seed, then writes the resolved config, metrics, checkpoints
/// and (optionally) replay dumps into `dir`. Files are written only after
/// all seeds have finished.
pub fn train_row(
    resolved: &Resolved,
    dir: &Path,
    execution: Execution,
    dump_buffer: bool,
) -> Result<TrainedRow, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_text(&dir.join(CONFIG_FILE), &resolved.canonical_toml())?;
    let run = &resolved.run;
    let dump = dump_buffer && run.variant == Variant::Isac;
    if dump_buffer && !dump {
        log::warn!("--dump-buffer only applies to isac; no buffer written");
    }
    log::info!(
        "training {} on {} for {} steps, seeds {:?}",
        run.label(),
        run.env,
        run.total_steps,
        run.seeds
    );
    let run_one = |seed: u64| {
        run_training_with(
            run,
            seed,
            RunOptions {
                keep_replay: dump,
                ..Default::default()
            },
        )
    };
    let results = map_seeds(&run.seeds, execution, run_one)?;
    let row = TrainedRow {
        resolved: resolved.clone(),
        dir: dir.to_path_buf(),
        results,
    };
    let metrics = dir.join(METRICS_FILE);
    write_metrics(create(&metrics)?, &run.label(), run.env, &row.records())?;
    for r in &row.results {
        let path = dir.join(format!("checkpoint-seed{}.json", r.seed));
        Checkpoint::capture(&r.agent).write(create(&path)?)?;
        if let Some(buffer) = r.replay.as_ref().and_then(|s| s.isac_buffer()) {
            let path = dir.join(format!("replay-seed{}.tsv", r.seed));
            write_snapshot(buffer, create(&path)?)?;
        }
    }
    Ok(row)
}

/// Aggregates a trained row against `target` (or its own final window) and
/// writes `summary.json`.
pub fn summarize_row(row: &TrainedRow, target: Option<f64>) -> Result<SummaryDocument, CliError> {
    let run = &row.resolved.run;
    let records = row.records();
    if records.is_empty() {
        return Err(CliError::Numerical(format!(
            "{}: no unit completed ({})",
            run.label(),
            row.faults().join("; ")
        )));
    }
    let stats = aggregate(&records, target, run.n_f, run.smoothing_window)?;
    let mut pooled = SdpStats::default();
    let seeds = row
        .results
        .iter()
        .map(|r| {
            pooled.selections += r.sdp.selections;
            pooled.prioritized += r.sdp.prioritized;
            SeedDiagnostics {
                seed: r.seed,
                env_steps: r.env_steps,
                episodes: r.episodes,
                fault: r.fault.clone(),
                sdp: r.sdp,
                sdp_fraction: r.sdp.fraction(),
                flushes: r.flushes,
            }
        })
        .collect();
    let doc = SummaryDocument {
        label: run.label(),
        variant: run.variant,
        env: run.env,
        total_steps: run.total_steps,
        unit_steps: run.unit_steps,
        zeta_th: run.zeta_th,
        xi: run.xi,
        sdp_fraction: pooled.fraction(),
        stats,
        seeds,
    };
    write_summary(create(&row.dir.join(SUMMARY_FILE))?, &doc)?;
    Ok(doc)
}

fn plot_rows(
    path: &Path,
    title: &str,
    rows: &[(String, SeedCurves)],
    window: usize,
) -> Result<(), CliError> {
    let series: Vec<CurveSeries> = rows
        .iter()
        .map(|(label, curves)| CurveSeries::from_curves(label.clone(), curves, window))
        .collect();
    write_text(path, &render_svg(title, &series)?)
}

fn fault_check(rows: &[&TrainedRow]) -> Result<(), CliError> {
    let faults: Vec<String> = rows
        .iter()
        .flat_map(|r| {
            r.faults()
                .into_iter()
                .map(move |f| format!("{}: {f}", r.resolved.run.label()))
        })
        .collect();
    if faults.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(faults.join("; ")))
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<SummaryDocument, CliError> {
    let resolved = args.run.resolve()?;
    let row = train_row(
        &resolved,
        &resolved.out_dir,
        execution(args.run.sequential),
        args.dump_buffer,
    )?;
    let doc = summarize_row(&row, args.target_score)?;
    let curves = SeedCurves::from_records(&row.records())?;
    plot_rows(
        &row.dir.join(PLOT_FILE),
        &format!("{} on {}", doc.label, doc.env),
        &[(doc.label.clone(), curves)],
        resolved.run.smoothing_window,
    )?;
    let table = format_table(std::slice::from_ref(&doc));
    write_text(&row.dir.join(TABLE_FILE), &table)?;
    print!("{table}");
    fault_check(&[&row])?;
    Ok(doc)
}

/// Builds the compared rows. Layers, lowest first: defaults, the shared
/// `--config` file, a `--row` file, shared flags, then the row's own
/// variant / threshold.
pub fn compare_rows(args: &CompareArgs) -> Result<Vec<Resolved>, CliError> {
    let base = args.run.file()?;
    let flags = args.run.layer();
    let mut layers: Vec<FileConfig> = Vec::new();
    for path in &args.rows {
        layers.push(base.overlay(&FileConfig::load(path)?).overlay(&flags));
    }
    for &v in &args.variants {
        layers.push(base.overlay(&flags).overlay(&FileConfig {
            variant: Some(v),
            label: Some(v.name().to_string()),
            ..Default::default()
        }));
    }
    for &z in &args.zeta_ths {
        layers.push(base.overlay(&flags).overlay(&FileConfig {
            variant: Some(Variant::Isac),
            zeta_th: Some(z),
            label: Some(format!("isac_zeta{z}")),
            ..Default::default()
        }));
    }
    if layers.len() < 2 {
        return Err(CliError::Usage(
            "compare needs at least two rows (--row, --variants or --zeta-ths)".into(),
        ));
    }
    let mut rows = layers
        .iter()
        .map(FileConfig::resolve)
        .collect::<Result<Vec<_>, _>>()?;
    let first = rows[0].run.clone();
    for r in &rows[1..] {
        let g = &r.run;
        if g.env != first.env
            || g.seeds != first.seeds
            || g.total_steps != first.total_steps
            || g.unit_steps != first.unit_steps
        {
            return Err(CliError::Usage(format!(
                "mismatched grids: `{}` ({}, seeds {:?}, {} steps in units of {}) vs `{}` ({}, seeds {:?}, {} steps in units of {})",
                first.label(),
                first.env,
                first.seeds,
                first.total_steps,
                first.unit_steps,
                g.label(),
                g.env,
                g.seeds,
                g.total_steps,
                g.unit_steps
            )));
        }
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for r in &mut rows {
        let label = r.run.label();
        let n = seen.entry(label.clone()).or_insert(0);
        *n += 1;
        if *n > 1 {
            r.run.label = Some(format!("{label}-{n}"));
        }
    }
    Ok(rows)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<Vec<SummaryDocument>, CliError> {
    let rows = compare_rows(args)?;
    let out_dir = rows[0].out_dir.clone();
    let exec = execution(args.run.sequential);
    let trained = rows
        .iter()
        .map(|r| train_row(r, &out_dir.join(r.run.label()), exec, false))
        .collect::<Result<Vec<_>, _>>()?;
    let baseline = trained
        .iter()
        .find(|t| t.resolved.run.variant == Variant::Sac);
    let target_row = baseline.unwrap_or(&trained[0]);
    if baseline.is_none() {
        log::warn!(
            "no sac row; target score taken from `{}`",
            target_row.resolved.run.label()
        );
    }
    let target_curves = SeedCurves::from_records(&target_row.records())?;
    let target = target_score(&target_curves.mean_std().0, target_row.resolved.run.n_f)?;
    let docs = trained
        .iter()
        .map(|t| summarize_row(t, Some(target)))
        .collect::<Result<Vec<_>, _>>()?;
    let curves = trained
        .iter()
        .map(|t| {
            Ok((
                t.resolved.run.label(),
                SeedCurves::from_records(&t.records())?,
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let env = rows[0].run.env;
    plot_rows(
        &out_dir.join(PLOT_FILE),
        &format!("{env}"),
        &curves,
        rows[0].run.smoothing_window,
    )?;
    let table = format_table(&docs);
    write_text(&out_dir.join(TABLE_FILE), &table)?;
    print!("{table}");
    fault_check(&trained.iter().collect::<Vec<_>>())?;
    Ok(docs)
}

pub fn cmd_plot(args: &PlotArgs) -> Result<PathBuf, CliError> {
    let mut grouped: BTreeMap<(String, EnvKind), Vec<EvalRecord>> = BTreeMap::new();
    for path in &args.metrics {
        let file = File::open(path).map_err(|e| io_err(path, e))?;
        for row in read_metrics(file).map_err(|e| io_err(path, e))? {
            grouped
                .entry((row.variant.clone(), row.env))
                .or_default()
                .push(row.record());
        }
    }
    if grouped.is_empty() {
        return Err(CliError::Usage("metrics files contain no records".into()));
    }
    let envs: Vec<String> = {
        let mut e: Vec<String> = grouped.keys().map(|(_, e)| e.to_string()).collect();
        e.dedup();
        e
    };
    let rows = grouped
        .into_iter()
        .map(|((label, _), recs)| Ok((label, SeedCurves::from_records(&recs)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let title = args.title.clone().unwrap_or_else(|| envs.join(", "));
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    plot_rows(&args.out, &title, &rows, args.window)?;
    Ok(args.out.clone())
}

fn fmt_steps(v: Option<f64>) -> String {
    v.map_or_else(|| "never".to_string(), |s| format!("{s:.0}"))
}

/// Plain-text results table, one row per variant.
pub fn format_table(docs: &[SummaryDocument]) -> String {
    let mut out = String::new();
    let target = docs.first().map_or(f64::NAN, |d| d.stats.target_score);
    let _ = writeln!(out, "target score: {target:.3}");
    let _ = writeln!(
        out,
        "{:<18} {:>10} {:>9} {:>22} {:>10} {:>8} {:>8}",
        "variant", "R_max", "sigma", "T mean ± std", "T median", "reached", "sdp"
    );
    for d in docs {
        let s = &d.stats;
        let t = match (s.steps_to_target_mean, s.steps_to_target_std) {
            (Some(m), Some(sd)) => format!("{m:.0} ± {sd:.0}"),
            _ => "never".to_string(),
        };
        let sdp = if d.variant == Variant::Isac {
            format!("{:.3}", d.sdp_fraction)
        } else {
            "-".to_string()
        };
        let _ = writeln!(
            out,
            "{:<18} {:>10.2} {:>9.2} {:>22} {:>10} {:>8} {:>8}",
            d.label,
            s.max_mean_return,
            s.mean_std,
            t,
            fmt_steps(s.steps_to_target_median),
            format!("{}/{}", s.reached_target, s.seeds.len()),
            sdp
        );
    }
    out
}
