//! Transmission scenarios and receiver-side metrics.
//!
//! A scenario is one or two releases from the transmitter. A single release
//! starts from a Gaussian pulse on top of neutral water. For two releases the
//! default model seeds a fresh solve at the second release: the first pulse
//! is taken as its free-diffusion profile at that moment, the complementary
//! ion is set from the ion product, and the second pulse is added on top.

use rayon::prelude::*;

use crate::analytic::{self, GaussianProfile, ImpulseSpec};
use crate::chem::{self, ChannelParams, IonPair, Species};
use crate::error::{Error, Result};
use crate::fdm::{Grid1D, IonField, Simulation, SolverConfig};

/// Width of the Gaussian standing in for the release delta, cm.
pub const DEFAULT_INJECTION_SIGMA: f64 = 1e-3;

/// Largest fraction of an injected pulse allowed outside the domain or lost
/// to sampling on the grid.
const MAX_LOST_FRACTION: f64 = 1e-6;

/// One release event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    pub species: Species,
    /// mol
    pub moles: f64,
    /// s
    pub release_time: f64,
    /// cm
    pub injection_sigma: f64,
    /// Transmitter position, cm.
    pub position: f64,
}

impl Emission {
    pub fn new(species: Species, moles: f64) -> Self {
        Self {
            species,
            moles,
            release_time: 0.0,
            injection_sigma: DEFAULT_INJECTION_SIGMA,
            position: 0.0,
        }
    }

    pub fn acid(moles: f64) -> Self {
        Self::new(Species::Acid, moles)
    }

    pub fn base(moles: f64) -> Self {
        Self::new(Species::Base, moles)
    }

    pub fn at(mut self, release_time: f64) -> Self {
        self.release_time = release_time;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.injection_sigma = sigma;
        self
    }

    pub fn from_position(mut self, position: f64) -> Self {
        self.position = position;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.moles >= 0.0 && self.moles.is_finite()) {
            return Err(Error::Config(format!("emission moles must be >= 0, got {}", self.moles)));
        }
        if !(self.release_time >= 0.0 && self.release_time.is_finite()) {
            return Err(Error::Config(format!(
                "release time must be >= 0, got {}",
                self.release_time
            )));
        }
        if !(self.injection_sigma > 0.0 && self.injection_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "injection sigma must be > 0, got {}",
                self.injection_sigma
            )));
        }
        if !self.position.is_finite() {
            return Err(Error::Config("transmitter position must be finite".into()));
        }
        Ok(())
    }

    fn injection_profile(&self) -> Result<GaussianProfile> {
        GaussianProfile::new(self.moles, self.position, self.injection_sigma * self.injection_sigma)
    }
}

/// Samples `profile` on the grid in M, after checking that it is contained
/// in the domain and resolved by the node spacing.
fn molar_on_grid(profile: &GaussianProfile, grid: &Grid1D, params: &ChannelParams) -> Result<Vec<f64>> {
    let values: Vec<f64> = (0..grid.len())
        .map(|j| analytic::molar_from_density(profile.density(grid.x(j)), 1, params.cross_section))
        .collect();
    if profile.moles == 0.0 {
        return Ok(values);
    }
    let last = grid.x(grid.len() - 1);
    let outside = profile.mass_outside(grid.x_min, last);
    if outside > MAX_LOST_FRACTION {
        return Err(Error::Config(format!(
            "{:.3e} of the pulse centred at {} cm (sd {:.3e} cm) lies outside [{}, {last}]",
            outside,
            profile.mean,
            profile.std_dev(),
            grid.x_min
        )));
    }
    let sampled = analytic::density_from_molar(values.iter().sum::<f64>() * grid.dx, 1, params.cross_section);
    let lost = (sampled / profile.moles - (1.0 - outside)).abs();
    if lost > MAX_LOST_FRACTION {
        return Err(Error::Config(format!(
            "pulse of sd {:.3e} cm is under-resolved by dx = {:.3e} cm (mass error {lost:.3e})",
            profile.std_dev(),
            grid.dx
        )));
    }
    Ok(values)
}

/// Initial field for a single release at time zero: the released ion gets
/// `N·𝒩(position, σ²)` on top of the background, the other ion stays neutral.
pub fn build_initial_single(emission: &Emission, grid: &Grid1D, params: &ChannelParams) -> Result<IonField> {
    emission.validate()?;
    params.validate()?;
    let pulse = molar_on_grid(&emission.injection_profile()?, grid, params)?;
    let mut field = IonField::background(grid, params);
    for (c, add) in field.species_mut(emission.species).iter_mut().zip(&pulse) {
        *c += add;
    }
    Ok(field)
}

/// Field at the moment of the second of two releases, `gap` seconds after
/// the first.
///
/// The first pulse is its free profile `N₁·𝒩(position + v·T, 2·D₁·T)` plus
/// background, the complementary ion is `k_w / C_first` node by node, and
/// the second pulse's injection Gaussian is then added to its own ion.
pub fn build_initial_consecutive(
    first: &Emission,
    second: &Emission,
    gap: f64,
    grid: &Grid1D,
    params: &ChannelParams,
) -> Result<IonField> {
    if !(gap > 0.0 && gap.is_finite()) {
        return Err(Error::Domain(format!("gap between releases must be > 0, got {gap}")));
    }
    first.validate()?;
    second.validate()?;
    params.validate()?;
    let spread = ImpulseSpec {
        moles: first.moles,
        diffusion: params.diffusion(first.species),
        velocity: params.velocity,
        distance: 1.0,
        dimension: 1,
    };
    let mut profile = analytic::spatial_profile(&spread, gap)?;
    profile.mean += first.position;
    let arrived = molar_on_grid(&profile, grid, params)?;
    let bg = params.background();
    let mut field = IonField::background(grid, params);
    let (first_ion, other_ion) = match first.species {
        Species::Acid => (&mut field.c_h, &mut field.c_oh),
        Species::Base => (&mut field.c_oh, &mut field.c_h),
    };
    for ((c1, c2), add) in first_ion.iter_mut().zip(other_ion.iter_mut()).zip(&arrived) {
        *c1 = bg + add;
        *c2 = params.k_w / *c1;
    }
    let pulse = molar_on_grid(&second.injection_profile()?, grid, params)?;
    for (c, add) in field.species_mut(second.species).iter_mut().zip(&pulse) {
        *c += add;
    }
    Ok(field)
}

/// How the second of two releases enters the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConsecutiveMode {
    /// Free profile of the first pulse seeds a new solve at the second
    /// release; earlier receiver samples come from the closed form.
    #[default]
    TwoStage,
    /// One solve from the first release, with the second pulse added to
    /// the field when its release time is reached.
    Continuous,
}

impl ConsecutiveMode {
    pub fn name(self) -> &'static str {
        match self {
            ConsecutiveMode::TwoStage => "two-stage",
            ConsecutiveMode::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub emissions: Vec<Emission>,
    pub mode: ConsecutiveMode,
}

impl Scenario {
    pub fn new(id: impl Into<String>, emissions: Vec<Emission>) -> Self {
        Self {
            id: id.into(),
            emissions,
            mode: ConsecutiveMode::default(),
        }
    }

    pub fn with_mode(mut self, mode: ConsecutiveMode) -> Self {
        self.mode = mode;
        self
    }

    /// Checks the emission list without running anything.
    pub fn validate(&self) -> Result<()> {
        self.schedule().map(|_| ())
    }

    /// Releases sorted by time, with simultaneous acid/base releases merged
    /// into their net surplus.
    fn schedule(&self) -> Result<Vec<Emission>> {
        if self.emissions.is_empty() {
            return Err(Error::Config(format!("scenario `{}` has no emissions", self.id)));
        }
        if self.emissions.len() > 2 {
            return Err(Error::Config(format!(
                "scenario `{}` has {} emissions; at most two are supported",
                self.id,
                self.emissions.len()
            )));
        }
        for e in &self.emissions {
            e.validate()?;
        }
        let mut sorted = self.emissions.clone();
        sorted.sort_by(|a, b| a.release_time.total_cmp(&b.release_time));
        if sorted.len() == 2 && sorted[0].release_time == sorted[1].release_time {
            let (a, b) = (sorted[0], sorted[1]);
            let amount = |s: Species| {
                [a, b]
                    .iter()
                    .filter(|e| e.species == s)
                    .map(|e| e.moles)
                    .sum::<f64>()
            };
            let net = chem::net_release(amount(Species::Acid), amount(Species::Base))?;
            let merged = Emission {
                species: net.species.unwrap_or(a.species),
                moles: net.moles,
                ..a
            };
            return Ok(vec![merged]);
        }
        Ok(sorted)
    }
}

/// H⁺ (and OH⁻) record at the receiver node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReceiverSeries {
    pub id: String,
    /// Neutral-water H⁺ concentration, M.
    pub background: f64,
    /// s
    pub times: Vec<f64>,
    /// M
    pub c_h: Vec<f64>,
    /// M
    pub c_oh: Vec<f64>,
    pub ph: Vec<f64>,
    /// Free-form provenance (scenario parameters, notes).
    pub metadata: Vec<(String, String)>,
}

impl ReceiverSeries {
    pub fn new(id: impl Into<String>, background: f64) -> Self {
        Self {
            id: id.into(),
            background,
            ..Self::default()
        }
    }

    /// Appends a sample. Concentrations are assumed valid.
    pub fn push(&mut self, t: f64, pair: IonPair) {
        self.times.push(t);
        self.c_h.push(pair.c_h);
        self.c_oh.push(pair.c_oh);
        self.ph.push(-pair.c_h.log10());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// `c_h − background` at every sample.
    pub fn excursion(&self) -> Vec<f64> {
        self.c_h.iter().map(|c| c - self.background).collect()
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    /// Index and value of the maximum H⁺ concentration.
    pub fn peak(&self) -> Option<(usize, f64)> {
        self.c_h
            .iter()
            .copied()
            .enumerate()
            .fold(None, |best, (i, c)| match best {
                Some((_, b)) if b >= c => best,
                _ => Some((i, c)),
            })
    }

    /// Index of the minimum H⁺ concentration (maximum pH).
    pub fn trough(&self) -> Option<(usize, f64)> {
        self.c_h
            .iter()
            .copied()
            .enumerate()
            .fold(None, |best, (i, c)| match best {
                Some((_, b)) if b <= c => best,
                _ => Some((i, c)),
            })
    }

    pub fn shift_time(&mut self, offset: f64) {
        for t in &mut self.times {
            *t += offset;
        }
    }

    /// Drops samples at or after the first sample of `later`, then appends
    /// all of `later`.
    fn splice(&mut self, later: ReceiverSeries) {
        if let Some(&start) = later.times.first() {
            let keep = self.times.partition_point(|&t| t < start);
            self.times.truncate(keep);
            self.c_h.truncate(keep);
            self.c_oh.truncate(keep);
            self.ph.truncate(keep);
        }
        self.times.extend(later.times);
        self.c_h.extend(later.c_h);
        self.c_oh.extend(later.c_oh);
        self.ph.extend(later.ph);
    }
}

/// Closed-form receiver record of a lone release, sampled at `times`
/// (relative to the release).
pub fn closed_form_series(emission: &Emission, times: &[f64], receiver_x: f64, params: &ChannelParams) -> Result<Vec<IonPair>> {
    let distance = receiver_x - emission.position;
    // the closed form is written for a downstream receiver; mirror otherwise
    let (distance, velocity) = if distance >= 0.0 {
        (distance, params.velocity)
    } else {
        (-distance, -params.velocity)
    };
    let spec = ImpulseSpec {
        moles: emission.moles,
        diffusion: params.diffusion(emission.species),
        velocity,
        distance: distance.max(f64::MIN_POSITIVE),
        dimension: 1,
    };
    let samples = match emission.species {
        Species::Acid => analytic::acid_receiver_series(&spec, times, params)?,
        Species::Base => analytic::base_receiver_series(&spec, times, params)?,
    };
    Ok(samples
        .into_iter()
        .map(|s| IonPair {
            c_h: s.c_h,
            c_oh: params.k_w / s.c_h,
        })
        .collect())
}

/// Runs one scenario and returns the receiver record, with time measured
/// from the first release.
pub fn run_scenario(scenario: &Scenario, grid: &Grid1D, config: &SolverConfig, params: &ChannelParams) -> Result<ReceiverSeries> {
    let schedule = scenario.schedule()?;
    let first = schedule[0];
    let mut series = match schedule.get(1).copied() {
        None => {
            let initial = build_initial_single(&first, grid, params)?;
            let mut sim = Simulation::new(initial, grid, config, params)?;
            sim.run_to_end()?;
            sim.finish().1
        }
        Some(second) => {
            let gap = second.release_time - first.release_time;
            if gap >= config.t_end {
                return Err(Error::Config(format!(
                    "second release at {gap} s falls after t_end = {} s",
                    config.t_end
                )));
            }
            match scenario.mode {
                ConsecutiveMode::TwoStage => run_two_stage(&first, &second, gap, grid, config, params)?,
                ConsecutiveMode::Continuous => run_continuous(&first, &second, gap, grid, config, params)?,
            }
        }
    };
    series.id = scenario.id.clone();
    series.note("scenario", &scenario.id);
    series.note("time_origin", "first release");
    if schedule.len() == 2 {
        series.note("consecutive_mode", scenario.mode.name());
    }
    for (k, e) in schedule.iter().enumerate() {
        series.note(
            format!("emission_{k}"),
            format!(
                "{} {:e} mol at {} s, sigma {:e} cm, x {} cm",
                e.species, e.moles, e.release_time, e.injection_sigma, e.position
            ),
        );
    }
    Ok(series)
}

fn run_two_stage(
    first: &Emission,
    second: &Emission,
    gap: f64,
    grid: &Grid1D,
    config: &SolverConfig,
    params: &ChannelParams,
) -> Result<ReceiverSeries> {
    let initial = build_initial_consecutive(first, second, gap, grid, params)?;
    let mut stage = *config;
    stage.t_end = config.t_end - gap;
    if stage.t_end <= stage.dt {
        return Err(Error::Config(format!(
            "only {} s remain after the second release; increase t_end",
            stage.t_end
        )));
    }
    let mut sim = Simulation::new(initial, grid, &stage, params)?;
    sim.run_to_end()?;
    let mut later = sim.finish().1;
    later.shift_time(gap);

    let interval = config.record_interval();
    let early_times: Vec<f64> = (0..)
        .map(|k| k as f64 * interval)
        .take_while(|&t| t < gap)
        .collect();
    let receiver = grid.snap(config.receiver_x)?.position;
    let mut series = ReceiverSeries::new("", params.background());
    for (&t, pair) in early_times.iter().zip(closed_form_series(first, &early_times, receiver, params)?) {
        series.push(t, pair);
    }
    series.splice(later);
    Ok(series)
}

fn run_continuous(
    first: &Emission,
    second: &Emission,
    gap: f64,
    grid: &Grid1D,
    config: &SolverConfig,
    params: &ChannelParams,
) -> Result<ReceiverSeries> {
    let initial = build_initial_single(first, grid, params)?;
    let mut sim = Simulation::new(initial, grid, config, params)?;
    sim.advance_to(gap)?;
    let pulse = molar_on_grid(&second.injection_profile()?, grid, params)?;
    sim.inject(second.species, &pulse)?;
    sim.run_to_end()?;
    Ok(sim.finish().1)
}

/// Everything needed to run one scenario independently.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioJob {
    pub scenario: Scenario,
    pub grid: Grid1D,
    pub config: SolverConfig,
    pub params: ChannelParams,
}

impl ScenarioJob {
    pub fn run(&self) -> Result<ReceiverSeries> {
        run_scenario(&self.scenario, &self.grid, &self.config, &self.params)
    }
}

/// Runs jobs in parallel on `workers` threads (`0` = all cores). Results
/// keep the order of `jobs`.
pub fn run_batch(jobs: &[ScenarioJob], workers: usize) -> Result<Vec<Result<ReceiverSeries>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| jobs.par_iter().map(ScenarioJob::run).collect()))
}

/// Thresholds behind [`IsiMetrics`], as fractions of the peak amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiThresholds {
    /// Level for the rise time and the pulse width.
    pub width_fraction: f64,
    /// Half-width of the band around background that counts as cleared.
    pub baseline_band: f64,
    /// A signal needs a peak above this multiple of the background.
    pub min_peak_factor: f64,
}

impl Default for IsiThresholds {
    fn default() -> Self {
        Self {
            width_fraction: 0.1,
            baseline_band: 0.05,
            min_peak_factor: 2.0,
        }
    }
}

/// Pulse-shape summary of a receiver record. Thresholds are applied to the
/// excursion above background, interpolating linearly between samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsiMetrics {
    /// M (1 for a normalized record)
    pub peak_value: f64,
    /// s
    pub peak_time: f64,
    /// Total time spent above 10% of the peak amplitude, s.
    pub width_at_10pct: f64,
    /// First time after the peak from which the excursion stays within 5%
    /// of the amplitude; the last sample time if that never happens.
    pub time_to_baseline: f64,
    pub baseline_reached: bool,
    /// First crossing of 10% of the amplitude, s.
    pub response_delay: f64,
}

/// Interpolated time where the segment `(t0, v0)–(t1, v1)` meets `level`.
fn crossing(t0: f64, v0: f64, t1: f64, v1: f64, level: f64) -> f64 {
    if v1 == v0 {
        return t0;
    }
    t0 + (level - v0) / (v1 - v0) * (t1 - t0)
}

/// Metrics of an excursion record whose positive maximum is the pulse.
fn excursion_metrics(times: &[f64], exc: &[f64], peak_value: f64, th: &IsiThresholds) -> IsiMetrics {
    let (peak_idx, amp) = exc
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let level = th.width_fraction * amp;

    let rise = exc.iter().position(|&v| v >= level).unwrap_or(peak_idx);
    let response_delay = if rise == 0 {
        times[0]
    } else {
        crossing(times[rise - 1], exc[rise - 1], times[rise], exc[rise], level)
    };

    let mut width = 0.0;
    for k in 0..exc.len().saturating_sub(1) {
        let (t0, t1, v0, v1) = (times[k], times[k + 1], exc[k], exc[k + 1]);
        width += match (v0 >= level, v1 >= level) {
            (true, true) => t1 - t0,
            (false, false) => 0.0,
            (true, false) => crossing(t0, v0, t1, v1, level) - t0,
            (false, true) => t1 - crossing(t0, v0, t1, v1, level),
        };
    }

    let band = th.baseline_band * amp;
    let last_out = (peak_idx..exc.len()).rev().find(|&k| exc[k].abs() > band).unwrap_or(peak_idx);
    let (time_to_baseline, baseline_reached) = if last_out + 1 >= exc.len() {
        (times[times.len() - 1], false)
    } else {
        let (k, v0, v1) = (last_out, exc[last_out], exc[last_out + 1]);
        let edge = if v0 > 0.0 { band } else { -band };
        (crossing(times[k], v0, times[k + 1], v1, edge), true)
    };

    IsiMetrics {
        peak_value,
        peak_time: times[peak_idx],
        width_at_10pct: width,
        time_to_baseline,
        baseline_reached,
        response_delay,
    }
}

fn signal_amplitude(series: &ReceiverSeries, th: &IsiThresholds) -> Result<(usize, f64)> {
    let (idx, peak) = series.peak().ok_or(Error::NoSignal { peak: 0.0 })?;
    // written negated so a NaN peak also counts as no signal
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(peak > th.min_peak_factor * series.background) {
        return Err(Error::NoSignal { peak });
    }
    Ok((idx, peak))
}

/// ISI metrics with the default thresholds (10% width level, 5% baseline
/// band, peak at least twice the background).
pub fn isi_metrics(series: &ReceiverSeries) -> Result<IsiMetrics> {
    isi_metrics_with(series, &IsiThresholds::default())
}

pub fn isi_metrics_with(series: &ReceiverSeries, thresholds: &IsiThresholds) -> Result<IsiMetrics> {
    let (_, peak) = signal_amplitude(series, thresholds)?;
    Ok(excursion_metrics(&series.times, &series.excursion(), peak, thresholds))
}

/// Receiver record scaled so its pulse peaks at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub id: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl NormalizedSeries {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at time `t`, interpolated linearly.
    pub fn at(&self, t: f64) -> Option<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 || k > self.times.len() {
            return None;
        }
        if k == self.times.len() {
            return (self.times[k - 1] == t).then(|| self.values[k - 1]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }

    pub fn metrics(&self, thresholds: &IsiThresholds) -> IsiMetrics {
        excursion_metrics(&self.times, &self.values, 1.0, thresholds)
    }
}

/// `(c_h − background) / (peak − background)`.
pub fn normalize_by_peak(series: &ReceiverSeries) -> Result<NormalizedSeries> {
    let (idx, peak) = signal_amplitude(series, &IsiThresholds::default())?;
    let amp = peak - series.background;
    let mut values: Vec<f64> = series.excursion().iter().map(|e| e / amp).collect();
    values[idx] = 1.0;
    Ok(NormalizedSeries {
        id: series.id.clone(),
        times: series.times.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle(n: usize, height: f64) -> ReceiverSeries {
        let mut s = ReceiverSeries::new("tri", 1e-7);
        for k in 0..=n {
            let t = 2.0 * k as f64 / n as f64;
            let v = height * (1.0 - (t - 1.0).abs());
            s.push(t, IonPair { c_h: 1e-7 + v, c_oh: 1e-7 });
        }
        s
    }

    #[test]
    fn triangle_metrics() {
        for n in [4, 20, 1000] {
            let m = isi_metrics(&triangle(n, 0.5)).unwrap();
            assert!((m.width_at_10pct - 1.8).abs() < 1e-12, "n = {n}: {m:?}");
            assert!((m.response_delay - 0.1).abs() < 1e-12);
            assert!((m.peak_time - 1.0).abs() < 1e-12);
            assert!((m.time_to_baseline - 1.95).abs() < 1e-12);
            assert!(m.baseline_reached);
            assert!(m.width_at_10pct <= m.time_to_baseline);
        }
    }

    #[test]
    fn constant_series_has_no_signal() {
        let mut s = ReceiverSeries::new("flat", 1e-7);
        for k in 0..10 {
            s.push(k as f64, IonPair { c_h: 1e-7, c_oh: 1e-7 });
        }
        assert!(matches!(isi_metrics(&s), Err(Error::NoSignal { .. })));
        assert!(matches!(normalize_by_peak(&s), Err(Error::NoSignal { .. })));
        assert!(isi_metrics(&ReceiverSeries::new("empty", 1e-7)).is_err());
    }

    #[test]
    fn baseline_not_reached_is_censored() {
        let mut s = ReceiverSeries::new("rising", 1e-7);
        for k in 0..10 {
            s.push(k as f64, IonPair { c_h: 1e-7 + k as f64 * 1e-3, c_oh: 1e-7 });
        }
        let m = isi_metrics(&s).unwrap();
        assert!(!m.baseline_reached);
        assert_eq!(m.time_to_baseline, 9.0);
    }

    #[test]
    fn undershoot_counts_towards_baseline() {
        // pulse that overshoots below background before settling
        let vals = [0.0, 0.5, 1.0, 0.2, -0.3, -0.04, -0.01];
        let mut s = ReceiverSeries::new("u", 1e-7);
        for (k, v) in vals.iter().enumerate() {
            s.push(k as f64, IonPair { c_h: 1e-7 + v * 1e-3 + 1e-12, c_oh: 1e-7 });
        }
        let m = isi_metrics(&s).unwrap();
        // leaves −0.3 and enters the band at −0.05 between t = 4 and 5
        let want = 4.0 + (-0.05 + 0.3) / (-0.04 + 0.3);
        assert!((m.time_to_baseline - want).abs() < 1e-6, "{m:?}");
    }

    #[test]
    fn normalization_peaks_at_one_and_keeps_metrics() {
        let s = triangle(37, 2e-3);
        let n = normalize_by_peak(&s).unwrap();
        assert_eq!(n.max(), 1.0);
        let a = isi_metrics(&s).unwrap();
        let b = n.metrics(&IsiThresholds::default());
        assert!((a.width_at_10pct - b.width_at_10pct).abs() < 1e-9);
        assert!((a.time_to_baseline - b.time_to_baseline).abs() < 1e-9);
        assert!((a.response_delay - b.response_delay).abs() < 1e-9);
        assert_eq!(a.peak_time, b.peak_time);
        assert!((n.at(1.0).unwrap() - 1.0).abs() < 0.1);
        assert!(n.at(-1.0).is_none());
    }

    #[test]
    fn single_release_fields() {
        let g = Grid1D::new(-0.3, 0.5, 1e-3).unwrap();
        let p = ChannelParams::default();
        let bg = IonField::background(&g, &p);
        assert_eq!(build_initial_single(&Emission::acid(0.0), &g, &p).unwrap(), bg);

        let acid = build_initial_single(&Emission::acid(0.001), &g, &p).unwrap();
        let moles = acid.moles_above_background(Species::Acid, &g, &p);
        assert!((moles - 0.001).abs() / 0.001 < 1e-6);
        assert!(acid.c_oh.iter().all(|&c| c == bg.c_oh[0]));

        let base = build_initial_single(&Emission::base(0.001), &g, &p).unwrap();
        assert!(base.c_h.iter().all(|&c| c == bg.c_h[0]));
        let moles = base.moles_above_background(Species::Base, &g, &p);
        assert!((moles - 0.001).abs() / 0.001 < 1e-6);
    }

    #[test]
    fn pulse_outside_domain_rejected() {
        let g = Grid1D::new(-0.3, 0.5, 1e-3).unwrap();
        let p = ChannelParams::default();
        let near_edge = Emission::acid(0.001).from_position(-0.298);
        assert!(matches!(build_initial_single(&near_edge, &g, &p), Err(Error::Config(_))));
        let thin = Emission::acid(0.001).with_sigma(1e-4);
        assert!(matches!(build_initial_single(&thin, &g, &p), Err(Error::Config(_))));
    }

    #[test]
    fn consecutive_field_layout() {
        let g = Grid1D::new(-0.3, 0.5, 1e-3).unwrap();
        let p = ChannelParams::default();
        let first = Emission::acid(0.001);
        let f = build_initial_consecutive(&first, &Emission::base(0.0).at(0.5), 0.5, &g, &p).unwrap();
        let spec = ImpulseSpec::for_species(Species::Acid, 0.001, 1.0, &p).unwrap();
        let prof = analytic::spatial_profile(&spec, 0.5).unwrap();
        for j in (0..g.len()).step_by(17) {
            let want = 1e-7 + analytic::molar_from_density(prof.density(g.x(j)), 1, 1.0);
            assert!((f.c_h[j] - want).abs() <= 1e-15 * want);
            assert!((f.c_h[j] * f.c_oh[j] - p.k_w).abs() / p.k_w < 1e-12);
        }
        assert!(build_initial_consecutive(&first, &Emission::base(0.001), 0.0, &g, &p).is_err());
        assert!(build_initial_consecutive(&first, &Emission::base(0.001), -1.0, &g, &p).is_err());
    }

    #[test]
    fn consecutive_with_vanishing_first_release() {
        let g = Grid1D::new(-0.3, 0.5, 1e-3).unwrap();
        let p = ChannelParams::default();
        let second = Emission::base(0.001).at(0.5);
        let single = build_initial_single(&second, &g, &p).unwrap();
        let worst = |n1: f64| {
            let f = build_initial_consecutive(&Emission::acid(n1), &second, 0.5, &g, &p).unwrap();
            (0..g.len())
                .map(|j| {
                    let dh = (f.c_h[j] - single.c_h[j]).abs() / single.c_h[j];
                    let doh = (f.c_oh[j] - single.c_oh[j]).abs() / single.c_oh[j];
                    dh.max(doh)
                })
                .fold(0.0, f64::max)
        };
        // 1 mol/cm is 1000 M here, so background scale is ~1e-15 mol
        assert!(worst(1e-15) < 1e-3);
        let (a, b) = (worst(1e-13), worst(1e-14));
        assert!((a / b - 10.0).abs() < 0.5, "{a} {b}");
    }

    #[test]
    fn schedule_rules() {
        let none = Scenario::new("none", vec![]);
        assert!(none.schedule().is_err());
        let many = Scenario::new("many", vec![Emission::acid(1.0); 3]);
        assert!(many.schedule().is_err());
        let same = Scenario::new("same", vec![Emission::acid(0.002), Emission::base(0.0005)]);
        let s = same.schedule().unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].species, Species::Acid);
        assert!((s[0].moles - 0.0015).abs() < 1e-15);
        let swapped = Scenario::new("swap", vec![Emission::base(1.0).at(2.0), Emission::acid(1.0)]);
        let s = swapped.schedule().unwrap();
        assert_eq!(s[0].species, Species::Acid);
    }
}
