//! The three subcommands.

use std::path::Path;

use phcomm_core::chem::Species;
use phcomm_core::scenarios::{
    closed_form_series, isi_metrics_with, normalize_by_peak, run_batch, IsiMetrics, IsiThresholds, ReceiverSeries,
    ScenarioJob,
};
use phcomm_core::Error as CoreError;

use crate::config::{Job, RunConfig, ScenarioSection};
use crate::error::CliError;
use crate::output::{self, Cell, Table};

/// Files written by a command, in write order.
pub type Written = Vec<String>;

fn run_jobs(jobs: &[ScenarioJob], workers: usize) -> Result<Vec<ReceiverSeries>, CliError> {
    let results = run_batch(jobs, workers)?;
    jobs.iter()
        .zip(results)
        .map(|(job, r)| r.map_err(|e| CliError::from(e).in_scenario(&job.scenario.id)))
        .collect()
}

fn stability_notes(job: &Job) -> Vec<(String, String)> {
    let j = &job.job;
    let snap = j.grid.snap(j.config.receiver_x).expect("receiver validated on resolve");
    let s = &job.stability;
    vec![
        ("scenario".into(), j.scenario.id.clone()),
        ("dt_s".into(), output::num(j.config.dt)),
        ("grid_nodes".into(), j.grid.len().to_string()),
        ("diffusion_number".into(), output::num(s.diffusion_number)),
        ("courant_number".into(), output::num(s.courant_number)),
        ("cell_peclet".into(), output::num(s.cell_peclet)),
        ("receiver_node_cm".into(), output::num(snap.position)),
        ("receiver_offset_cm".into(), output::num(snap.offset)),
    ]
}

const SUMMARY_COLUMNS: [&str; 12] = [
    "scenario",
    "status",
    "peak_c_h_M",
    "peak_time_s",
    "width_at_10pct_s",
    "time_to_baseline_s",
    "baseline_reached",
    "response_delay_s",
    "min_pH",
    "min_pH_time_s",
    "max_pH",
    "max_pH_time_s",
];

fn metrics_or_none(series: &ReceiverSeries, thresholds: &IsiThresholds) -> Result<Option<IsiMetrics>, CliError> {
    match isi_metrics_with(series, thresholds) {
        Ok(m) => Ok(Some(m)),
        Err(CoreError::NoSignal { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn summary_row(id: &str, series: &ReceiverSeries, metrics: Option<IsiMetrics>) -> Vec<Cell> {
    let (lo_i, _) = series.peak().expect("series is never empty");
    let (hi_i, _) = series.trough().expect("series is never empty");
    let mut row: Vec<Cell> = vec![id.into()];
    match metrics {
        Some(m) => row.extend([
            "ok".into(),
            m.peak_value.into(),
            m.peak_time.into(),
            m.width_at_10pct.into(),
            m.time_to_baseline.into(),
            m.baseline_reached.into(),
            m.response_delay.into(),
        ]),
        None => {
            row.push("no signal".into());
            row.extend(std::iter::repeat_n(Cell::Num(f64::NAN), 4));
            row.push(false.into());
            row.push(Cell::Num(f64::NAN));
        }
    }
    row.extend([
        series.ph[lo_i].into(),
        series.times[lo_i].into(),
        series.ph[hi_i].into(),
        series.times[hi_i].into(),
    ]);
    row
}

fn write_table(out: &Path, stem: &str, header: &str, table: &Table, written: &mut Written) -> Result<(), CliError> {
    output::write_atomic(out, &format!("{stem}.csv"), &table.to_csv(header))?;
    output::write_atomic(out, &format!("{stem}.txt"), &table.to_text())?;
    written.push(format!("{stem}.csv"));
    written.push(format!("{stem}.txt"));
    Ok(())
}

/// Runs every scenario and writes one CSV per scenario plus a summary.
pub fn simulate(cfg: &RunConfig, out: &Path, workers: usize) -> Result<(Written, String), CliError> {
    let jobs = cfg.resolve()?;
    let plain: Vec<ScenarioJob> = jobs.iter().map(|j| j.job.clone()).collect();
    let series = run_jobs(&plain, workers)?;
    std::fs::create_dir_all(out)?;
    let thresholds = cfg.thresholds();

    let mut written = Vec::new();
    let mut summary = Table::new(&SUMMARY_COLUMNS);
    for (job, s) in jobs.iter().zip(&series) {
        let mut notes = stability_notes(job);
        notes.extend(s.metadata.iter().map(|(k, v)| (format!("series.{k}"), v.clone())));
        let metrics = metrics_or_none(s, &thresholds)?;
        let normalized = match metrics {
            Some(_) => Some(normalize_by_peak(s)?),
            None => None,
        };
        let name = format!("{}.csv", job.job.scenario.id);
        output::write_atomic(
            out,
            &name,
            &output::series_csv(&output::header("simulate", cfg, &notes), s, normalized.as_ref()),
        )?;
        written.push(name);
        summary.push(summary_row(&job.job.scenario.id, s, metrics));
    }
    write_table(out, "summary", &output::header("simulate summary", cfg, &[]), &summary, &mut written)?;
    Ok((written, summary.to_text()))
}

const COMPARE_COLUMNS: [&str; 11] = [
    "scenario",
    "reference",
    "ion",
    "max_abs_error_M",
    "max_error_pct_of_peak",
    "extremum_time_s",
    "reference_extremum_time_s",
    "extremum_time_diff_s",
    "extremum_pH",
    "reference_extremum_pH",
    "extremum_pH_diff",
];

/// The ion whose pulse a scenario is judged by: the first release's.
fn pulse_ion(job: &ScenarioJob) -> Species {
    job.scenario
        .emissions
        .iter()
        .min_by(|a, b| a.release_time.total_cmp(&b.release_time))
        .map_or(Species::Acid, |e| e.species)
}

fn compare_row(id: &str, reference: &str, ion: Species, got: &ReceiverSeries, want: &ReceiverSeries) -> Vec<Cell> {
    let (g, w) = match ion {
        Species::Acid => (&got.c_h, &want.c_h),
        Species::Base => (&got.c_oh, &want.c_oh),
    };
    let bg = want.background;
    let amplitude = w.iter().map(|c| (c - bg).abs()).fold(0.0, f64::max);
    let max_err = g.iter().zip(w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let extremum = |s: &ReceiverSeries| match ion {
        Species::Acid => s.peak().expect("series is never empty").0,
        Species::Base => s.trough().expect("series is never empty").0,
    };
    let (kg, kw) = (extremum(got), extremum(want));
    vec![
        id.into(),
        reference.into(),
        ion.name().into(),
        max_err.into(),
        (100.0 * max_err / amplitude).into(),
        got.times[kg].into(),
        want.times[kw].into(),
        (got.times[kg] - want.times[kw]).into(),
        got.ph[kg].into(),
        want.ph[kw].into(),
        (got.ph[kg] - want.ph[kw]).into(),
    ]
}

/// Closed-form record for a single-release scenario, on the solver's
/// sample times and receiver node.
fn closed_form_reference(job: &ScenarioJob, times: &[f64]) -> Result<Option<ReceiverSeries>, CliError> {
    let [e] = job.scenario.emissions.as_slice() else {
        return Ok(None);
    };
    let receiver = job.grid.snap(job.config.receiver_x)?.position;
    let mut series = ReceiverSeries::new(job.scenario.id.clone(), job.params.background());
    let since: Vec<f64> = times.iter().map(|t| (t - e.release_time).max(0.0)).collect();
    for (&t, pair) in times.iter().zip(closed_form_series(e, &since, receiver, &job.params)?) {
        series.push(t, pair);
    }
    Ok(Some(series))
}

/// Runs each scenario against its reaction-free and closed-form references.
pub fn compare(cfg: &RunConfig, out: &Path, workers: usize) -> Result<(Written, String), CliError> {
    if !cfg.compare.closed_form && !cfg.compare.no_reaction {
        return Err(CliError::Config(
            "both compare.closed_form and compare.no_reaction are off; nothing to compare".into(),
        ));
    }
    let jobs: Vec<ScenarioJob> = cfg.resolve()?.into_iter().map(|j| j.job).collect();
    let mut batch = jobs.clone();
    if cfg.compare.no_reaction {
        batch.extend(jobs.iter().map(|j| ScenarioJob {
            params: j.params.without_reaction(),
            ..j.clone()
        }));
    }
    let series = run_jobs(&batch, workers)?;
    let (with_reaction, without) = series.split_at(jobs.len());

    let mut table = Table::new(&COMPARE_COLUMNS);
    let mut skipped = Vec::new();
    for (k, job) in jobs.iter().enumerate() {
        let id = &job.scenario.id;
        let ion = pulse_ion(job);
        let got = &with_reaction[k];
        if cfg.compare.closed_form {
            match closed_form_reference(job, &got.times)? {
                Some(reference) => table.push(compare_row(id, "closed-form", ion, got, &reference)),
                None => skipped.push(id.clone()),
            }
        }
        if cfg.compare.no_reaction {
            table.push(compare_row(id, "no-reaction", ion, got, &without[k]));
        }
    }
    std::fs::create_dir_all(out)?;
    let mut notes = Vec::new();
    if !skipped.is_empty() {
        notes.push(("no_closed_form".to_string(), skipped.join(" ")));
    }
    let mut written = Vec::new();
    write_table(out, "compare", &output::header("compare", cfg, &notes), &table, &mut written)?;
    let mut text = table.to_text();
    if !skipped.is_empty() {
        text.push_str(&format!("no closed form for two-release scenarios: {}\n", skipped.join(", ")));
    }
    Ok((written, text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    /// Flow velocity, cm/s.
    Velocity,
    /// Receiver distance from the first transmitter, cm.
    Distance,
    /// Time between the two releases, s.
    Gap,
    /// Moles in the first release.
    Moles,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Velocity => "velocity_cm_per_s",
            Axis::Distance => "distance_cm",
            Axis::Gap => "gap_s",
            Axis::Moles => "moles",
        }
    }

    fn apply(self, s: &mut ScenarioSection, value: f64) -> Result<(), CliError> {
        let first = s
            .emission
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.release_time_s.total_cmp(&b.1.release_time_s))
            .map(|(i, _)| i)
            .ok_or_else(|| CliError::Config(format!("scenario `{}` has no emissions", s.id)))?;
        match self {
            Axis::Velocity => s.velocity_cm_per_s = Some(value),
            Axis::Distance => s.receiver_cm = Some(s.emission[first].position_cm + value),
            Axis::Moles => s.emission[first].moles = value,
            Axis::Gap => {
                if s.emission.len() != 2 {
                    return Err(CliError::Config(format!(
                        "gap sweep needs two emissions; scenario `{}` has {}",
                        s.id,
                        s.emission.len()
                    )));
                }
                let start = s.emission[first].release_time_s;
                s.emission[1 - first].release_time_s = start + value;
            }
        }
        Ok(())
    }
}

/// One row per (scenario, value), scenarios in file order and values in
/// the order given.
pub fn sweep(cfg: &RunConfig, axis: Axis, values: &[f64], out: &Path, workers: usize) -> Result<(Written, String), CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::Config(format!("sweep value {v} is not finite")));
    }
    cfg.resolve()?;
    let mut expanded = cfg.clone();
    expanded.scenario.clear();
    let mut points = Vec::new();
    for s in &cfg.scenario {
        for (k, &value) in values.iter().enumerate() {
            let mut point = s.clone();
            point.id = format!("{}.{}.{k}", s.id, axis.name());
            axis.apply(&mut point, value).map_err(|e| e.in_scenario(&s.id))?;
            expanded.scenario.push(point);
            points.push((s.id.clone(), value));
        }
    }
    let jobs: Vec<ScenarioJob> = expanded.resolve()?.into_iter().map(|j| j.job).collect();
    let series = run_jobs(&jobs, workers)?;
    let thresholds = cfg.thresholds();

    let mut columns = vec!["axis", "value"];
    columns.extend(SUMMARY_COLUMNS);
    let mut table = Table::new(&columns);
    for ((id, value), s) in points.iter().zip(&series) {
        let mut row: Vec<Cell> = vec![axis.name().into(), (*value).into()];
        row.extend(summary_row(id, s, metrics_or_none(s, &thresholds)?));
        table.push(row);
    }
    std::fs::create_dir_all(out)?;
    let values_note = values.iter().map(|v| output::num(*v)).collect::<Vec<_>>().join(" ");
    let notes = [
        ("axis".to_string(), axis.name().to_string()),
        ("values".to_string(), values_note),
    ];
    let mut written = Vec::new();
    write_table(out, "sweep", &output::header("sweep", cfg, &notes), &table, &mut written)?;
    Ok((written, table.to_text()))
}
