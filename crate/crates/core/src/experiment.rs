//! Config-driven orchestration of the three experiments: unperturbed cluster
//! growth, localization under a perturbation sweep, and dynamic-equilibrium
//! convergence from prepared initial clusters.
//!
//! Every experiment is a family of [`ClusterTrace`]s produced by one shared
//! routine: evolve Iz forward under `H_eff` for n cycles (optionally after
//! N₀ unperturbed preparation cycles), evolve the time-reversed observable
//! under `H_0` for the matching unperturbed dose, extract the coherence
//! spectrum of the pair, and estimate the cluster size. With the `eigen`
//! backend the traces run through the symmetry-adapted spectral engine; the
//! `trotter` backend uses the dense reference operations cycle by cycle and
//! is practical only for small N.
//!
//! Determinism contract: identical config + seed produce bit-identical
//! traces (and therefore byte-identical CSV exports). All result ordering
//! follows config order, never completion order.

pub mod config;
mod emit;

pub use config::{
    AnalysisConfig, BackendChoice, CouplingConfig, EvolutionMode, ExperimentConfig, OutputConfig,
    OutputFormat, ScheduleConfig, SystemConfig, DEFAULT_SEED,
};
pub use emit::emit_outputs;

use crate::cluster::{
    cluster_size_with_report, plateau, powerlaw_fit, ClusterTrace, Plateau, PlateauParams,
    PowerLawFit, TracePoint,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{couplings_from_model, PerturbationSpec};
use crate::hilbert::{build_basis, SpinSystem};
use crate::mqc::{spectrum_direct, CoherenceSpectrum};
use crate::propagate::engine::{
    iz_sector, spectrum_from_sectors, EigenOperator, SectorBasis, SegmentedEvolver,
    SpectralEvolver,
};
use crate::propagate::{
    backward_observable, forward_state, forward_state_segmented, Backend, CycleSchedule,
};

/// Builds the spin system described by the config (couplings plus label).
pub fn build_system(cfg: &ExperimentConfig) -> Result<SpinSystem> {
    let model = cfg.system.coupling.to_model(cfg.seed);
    let mut sys = couplings_from_model(&model, cfg.system.n_spins)?;
    if let Some(label) = &cfg.system.label {
        sys.label = label.clone();
    }
    Ok(sys)
}

/// Everything a batch of runs shares: the system, the backend, and (for the
/// eigen backend) the diagonalized engine state.
struct Runner {
    sys: SpinSystem,
    tau0: f64,
    n_cycles: usize,
    seed: u64,
    backend: Backend,
    evolution: EvolutionMode,
    engine: Option<EngineState>,
}

/// Cached spectral-engine state. `H_0` is diagonalized once; the effective
/// Hamiltonian of the most recent p ≠ 0 is kept so consecutive runs at the
/// same perturbation (the equilibrium sweep) reuse it. Segmented runs
/// additionally diagonalize `H_dd` once and cache the cycle blocks of the
/// most recent p.
struct EngineState {
    sb: SectorBasis,
    ev0: SpectralEvolver,
    last_eff: Option<(u64, SpectralEvolver)>,
    evdd: Option<SpectralEvolver>,
    last_seg: Option<(u64, SegmentedEvolver)>,
}

impl Runner {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let sys = build_system(cfg)?;
        let backend = cfg.backend()?;
        let engine = match backend {
            Backend::Eigen => {
                let sb = SectorBasis::new(sys.n_spins)?;
                let ev0 = SpectralEvolver::new(&sb, &sys, 1.0, 0.0)?;
                Some(EngineState { sb, ev0, last_eff: None, evdd: None, last_seg: None })
            }
            Backend::Trotter { .. } => None,
        };
        Ok(Runner {
            sys,
            tau0: cfg.schedule.tau0_s,
            n_cycles: cfg.schedule.n_cycles,
            seed: cfg.seed,
            backend,
            evolution: cfg.schedule.evolution,
            engine,
        })
    }

    /// One full trace at perturbation strength `p` with `n_prep` unperturbed
    /// preparation cycles, sampled at n = 0…n_cycles.
    ///
    /// At p = 0 there is no perturbation segment, so the static and segmented
    /// protocols coincide; such runs always take the static path.
    fn trace(&mut self, p: f64, n_prep: usize) -> Result<ClusterTrace> {
        let sched = CycleSchedule::from_p(self.tau0, p, self.n_cycles, n_prep)?;
        let segmented = self.evolution == EvolutionMode::Segmented && p != 0.0;
        match &mut self.engine {
            Some(state) if segmented => state.trace_segmented(&self.sys, &sched, p, self.seed),
            Some(state) => state.trace(&self.sys, &sched, p, self.seed),
            None => dense_trace(&self.sys, &sched, p, segmented, self.backend, self.seed),
        }
    }
}

impl EngineState {
    fn trace(
        &mut self,
        sys: &SpinSystem,
        sched: &CycleSchedule,
        p: f64,
        seed: u64,
    ) -> Result<ClusterTrace> {
        if p != 0.0 {
            let bits = p.to_bits();
            if self.last_eff.as_ref().map(|(b, _)| *b) != Some(bits) {
                let eff = SpectralEvolver::new(&self.sb, sys, 1.0 - p, p)?;
                self.last_eff = Some((bits, eff));
            }
        }
        let eff: &SpectralEvolver = match (p, &self.last_eff) {
            (0.0, _) => &self.ev0,
            (_, Some((_, eff))) => eff,
            _ => unreachable!("effective evolver cached above"),
        };

        let n_prep = sched.n_prep_cycles;
        let prepared: Option<EigenOperator> = if n_prep > 0 {
            let init = self.ev0.evolve(n_prep as f64 * sched.tau0);
            Some(eff.to_eigenbasis(&init))
        } else {
            None
        };

        let mut points = Vec::with_capacity(sched.n_cycles + 1);
        let mut spectra = Vec::with_capacity(sched.n_cycles + 1);
        for n in 0..=sched.n_cycles {
            let t = n as f64 * sched.tau_c();
            let rho = match &prepared {
                Some(w) => eff.evolve_prepared(t, w),
                None => eff.evolve(t),
            };
            // for the unperturbed, unprepared run the decoding observable is
            // the state itself (same generator, same duration) — skip the
            // second evolution
            let spec = if p == 0.0 && n_prep == 0 {
                spectrum_from_sectors(&self.sb, &rho, &rho)?
            } else {
                let obs = self.ev0.evolve((n + n_prep) as f64 * sched.tau0);
                spectrum_from_sectors(&self.sb, &obs, &rho)?
            };
            match measure_point(&spec, n, p)? {
                Some(k) => {
                    points.push(TracePoint { n_cycles: n, time: t, k });
                    spectra.push(spec);
                }
                None => continue,
            }
        }
        ClusterTrace::new(
            p,
            sched.tau0,
            sched.tau_sigma,
            n_prep,
            seed,
            sys.label.clone(),
            points,
            Some(spectra),
        )
    }

    /// Segmented-mode trace: the state is advanced cycle by cycle with the
    /// literal τ₀/τ_Σ alternation instead of the static blend. Only p ≠ 0
    /// arrives here (see [`Runner::trace`]).
    fn trace_segmented(
        &mut self,
        sys: &SpinSystem,
        sched: &CycleSchedule,
        p: f64,
        seed: u64,
    ) -> Result<ClusterTrace> {
        if self.evdd.is_none() {
            self.evdd = Some(SpectralEvolver::new(&self.sb, sys, 0.0, 1.0)?);
        }
        let bits = p.to_bits();
        if self.last_seg.as_ref().map(|(b, _)| *b) != Some(bits) {
            let evdd = self.evdd.as_ref().expect("H_dd evolver built above");
            let seg = SegmentedEvolver::new(&self.ev0, evdd, sched.tau0, sched.tau_sigma);
            self.last_seg = Some((bits, seg));
        }
        let seg = &self.last_seg.as_ref().expect("cycle blocks cached above").1;

        let n_prep = sched.n_prep_cycles;
        let mut rho = if n_prep > 0 {
            self.ev0.evolve(n_prep as f64 * sched.tau0)
        } else {
            iz_sector(&self.sb)
        };
        let mut points = Vec::with_capacity(sched.n_cycles + 1);
        let mut spectra = Vec::with_capacity(sched.n_cycles + 1);
        for n in 0..=sched.n_cycles {
            if n > 0 {
                rho = seg.step(&rho);
            }
            let obs = self.ev0.evolve((n + n_prep) as f64 * sched.tau0);
            let spec = spectrum_from_sectors(&self.sb, &obs, &rho)?;
            match measure_point(&spec, n, p)? {
                Some(k) => {
                    points.push(TracePoint {
                        n_cycles: n,
                        time: n as f64 * sched.tau_c(),
                        k,
                    });
                    spectra.push(spec);
                }
                None => continue,
            }
        }
        ClusterTrace::new(
            p,
            sched.tau0,
            sched.tau_sigma,
            n_prep,
            seed,
            sys.label.clone(),
            points,
            Some(spectra),
        )
    }
}

/// Reference-path trace: composes `forward_state` (or its segmented variant),
/// `backward_observable`, and `spectrum_direct` point by point. Exact for the
/// eigen backend and Trotterized for `Backend::Trotter`; cost grows quickly
/// with N.
fn dense_trace(
    sys: &SpinSystem,
    sched: &CycleSchedule,
    p: f64,
    segmented: bool,
    backend: Backend,
    seed: u64,
) -> Result<ClusterTrace> {
    let basis = build_basis(sys.n_spins)?;
    let pert = PerturbationSpec::new(sched.p())?;
    let mut points = Vec::with_capacity(sched.n_cycles + 1);
    let mut spectra = Vec::with_capacity(sched.n_cycles + 1);
    for n in 0..=sched.n_cycles {
        let sub = CycleSchedule::new(sched.tau0, sched.tau_sigma, n, sched.n_prep_cycles)?;
        let rho = if segmented {
            forward_state_segmented(sys, &sub, &pert, backend)?
        } else {
            forward_state(sys, &sub, &pert, backend)?
        };
        let obs = backward_observable(sys, &sub, backend)?;
        let spec = spectrum_direct(&rho, &obs, &basis)?;
        match measure_point(&spec, n, p)? {
            Some(k) => {
                points.push(TracePoint { n_cycles: n, time: n as f64 * sched.tau_c(), k });
                spectra.push(spec);
            }
            None => continue,
        }
    }
    ClusterTrace::new(
        p,
        sched.tau0,
        sched.tau_sigma,
        sched.n_prep_cycles,
        seed,
        sys.label.clone(),
        points,
        Some(spectra),
    )
}

/// Extracts the cluster size for one trace point, or `None` when the point is
/// unmeasurable.
///
/// At strong perturbation and small N the decoded spectrum can lose all
/// positive weight at isolated times (the forward and backward evolutions
/// decorrelate until the overlap fluctuates about zero). `cluster_size` is
/// undefined there, so the point is dropped from the trace with a note on
/// stderr rather than aborting the run; any other failure still propagates.
fn measure_point(spec: &CoherenceSpectrum, n: usize, p: f64) -> Result<Option<f64>> {
    match cluster_size_with_report(spec) {
        Ok((k, report)) => {
            if report.flagged() {
                eprintln!(
                    "note[cluster]: clipped negative spectral weight {:.3e} (of {:.3e}) \
                     at n = {n}, p = {p}",
                    report.clipped_magnitude, report.total
                );
            }
            Ok(Some(k))
        }
        Err(Error::Degenerate(_)) => {
            eprintln!(
                "note[cluster]: spectrum has no positive weight at n = {n}, p = {p}; \
                 point dropped"
            );
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Unperturbed cluster growth: a single p = 0 trace with no preparation.
pub fn run_growth(cfg: &ExperimentConfig) -> Result<ClusterTrace> {
    Runner::new(cfg)?.trace(0.0, 0)
}

/// The localization sweep: one trace per configured perturbation strength,
/// in config order.
pub fn run_localization(cfg: &ExperimentConfig) -> Result<Vec<ClusterTrace>> {
    let mut runner = Runner::new(cfg)?;
    cfg.schedule.p_values.iter().map(|&p| runner.trace(p, 0)).collect()
}

/// The dynamic-equilibrium experiment: one trace per (p, N₀) pair, p outer,
/// N₀ inner (config order). Preparation runs N₀ unperturbed cycles first so
/// the perturbed evolution starts from a cluster of size K₀ > 1.
pub fn run_equilibrium(cfg: &ExperimentConfig) -> Result<Vec<ClusterTrace>> {
    if cfg.schedule.n_prep_cycles.is_empty() {
        return Err(Error::Config(
            "equilibrium experiment needs a nonempty n_prep_cycles list".into(),
        ));
    }
    let mut runner = Runner::new(cfg)?;
    let mut traces = Vec::new();
    for &p in cfg.equilibrium_p() {
        for &n0 in &cfg.schedule.n_prep_cycles {
            traces.push(runner.trace(p, n0)?);
        }
    }
    Ok(traces)
}

/// Plateau detection result for one localization trace.
#[derive(Debug, Clone)]
pub struct PlateauSummary {
    pub p: f64,
    pub plateau: Plateau,
}

/// Plateau analysis of a localization sweep plus the K_loc(p) power-law fit.
#[derive(Debug, Clone)]
pub struct LocalizationAnalysis {
    /// One summary per p > 0 trace, in trace order.
    pub summaries: Vec<PlateauSummary>,
    /// Present when at least 3 traces localized; fit over their (p, K_loc).
    pub fit: Option<PowerLawFit>,
}

/// Runs plateau detection on every p > 0 trace and fits the power law over
/// the localized ones (requires ≥ 3 to fit; fewer yields `fit: None`).
///
/// Traces left with fewer than the 6 points plateau detection needs (possible
/// when unmeasurable points were dropped) are skipped with a note on stderr
/// instead of failing the whole analysis.
pub fn analyze_localization(
    traces: &[ClusterTrace],
    params: &PlateauParams,
) -> Result<LocalizationAnalysis> {
    let mut summaries = Vec::new();
    for trace in traces.iter().filter(|t| t.p > 0.0) {
        if trace.points.len() < 6 {
            eprintln!(
                "note[analysis]: trace at p = {} has only {} usable points; \
                 skipping plateau detection",
                trace.p,
                trace.points.len()
            );
            continue;
        }
        summaries.push(PlateauSummary { p: trace.p, plateau: plateau(trace, params)? });
    }
    let points: Vec<(f64, f64)> = summaries
        .iter()
        .filter(|s| s.plateau.localized)
        .map(|s| (s.p, s.plateau.k_loc))
        .collect();
    let fit = if points.len() >= 3 { Some(powerlaw_fit(&points)?) } else { None };
    Ok(LocalizationAnalysis { summaries, fit })
}

/// Convergence bookkeeping for one equilibrium group (fixed p, varying N₀).
#[derive(Debug, Clone)]
pub struct EquilibriumSpread {
    pub p: f64,
    /// Per preparation length: (N₀, K_loc, localized flag).
    pub outcomes: Vec<(usize, f64, bool)>,
    /// (max − min)/mean of K_loc across the group (0 for a single trace).
    pub relative_spread: f64,
}

/// Groups equilibrium traces by p (order of first appearance) and measures
/// how far apart the per-N₀ plateaus land.
pub fn equilibrium_spreads(
    traces: &[ClusterTrace],
    params: &PlateauParams,
) -> Result<Vec<EquilibriumSpread>> {
    let mut groups: Vec<(u64, f64, Vec<(usize, f64, bool)>)> = Vec::new();
    for trace in traces {
        let result = plateau(trace, params)?;
        let bits = trace.p.to_bits();
        let entry = (trace.n_prep_cycles, result.k_loc, result.localized);
        match groups.iter_mut().find(|(b, _, _)| *b == bits) {
            Some((_, _, list)) => list.push(entry),
            None => groups.push((bits, trace.p, vec![entry])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(_, p, outcomes)| {
            let ks: Vec<f64> = outcomes.iter().map(|&(_, k, _)| k).collect();
            let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
            for &k in &ks {
                lo = lo.min(k);
                hi = hi.max(k);
                sum += k;
            }
            let mean = sum / ks.len() as f64;
            let relative_spread = if ks.len() > 1 && mean > 0.0 { (hi - lo) / mean } else { 0.0 };
            EquilibriumSpread { p, outcomes, relative_spread }
        })
        .collect())
}

/// Everything a run can produce, for emission as files.
#[derive(Debug, Default)]
pub struct ExperimentResults {
    pub growth: Option<ClusterTrace>,
    pub localization: Vec<ClusterTrace>,
    pub equilibrium: Vec<ClusterTrace>,
    pub analysis: Option<LocalizationAnalysis>,
}

impl ExperimentResults {
    pub fn is_empty(&self) -> bool {
        self.growth.is_none()
            && self.localization.is_empty()
            && self.equilibrium.is_empty()
            && self.analysis.is_none()
    }
}

/// Runs growth, localization, equilibrium, and the power-law analysis in one
/// pass, sharing the diagonalized engine state across experiments. The p = 0
/// localization trace doubles as the growth trace (identical code path).
///
/// Plateau analysis needs ≥ 6 trace points; shorter schedules skip it rather
/// than fail the whole run.
pub fn run_all(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    let mut runner = Runner::new(cfg)?;
    let localization: Vec<ClusterTrace> = cfg
        .schedule
        .p_values
        .iter()
        .map(|&p| runner.trace(p, 0))
        .collect::<Result<_>>()?;
    let growth = match localization.iter().position(|t| t.p == 0.0) {
        Some(i) => localization[i].clone(),
        None => runner.trace(0.0, 0)?,
    };
    let equilibrium = if cfg.schedule.n_prep_cycles.is_empty() {
        Vec::new()
    } else {
        let mut traces = Vec::new();
        for &p in cfg.equilibrium_p() {
            for &n0 in &cfg.schedule.n_prep_cycles {
                traces.push(runner.trace(p, n0)?);
            }
        }
        traces
    };
    let analysis = if cfg.schedule.n_cycles + 1 >= 6 {
        Some(analyze_localization(&localization, &cfg.plateau_params())?)
    } else {
        None
    };
    Ok(ExperimentResults { growth: Some(growth), localization, equilibrium, analysis })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(n_spins: usize, n_cycles: usize, p_values: Vec<f64>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_profile();
        cfg.system.n_spins = n_spins;
        cfg.schedule.n_cycles = n_cycles;
        cfg.schedule.p_values = p_values;
        cfg.schedule.equilibrium_p_values = None;
        cfg.seed = 7;
        cfg
    }

    #[test]
    fn growth_on_a_two_spin_chain_follows_the_closed_form() {
        // For a single coupled pair under H_0, A₀ = cos²(dt) and
        // A_{±2} = sin²(dt)/2, so K(t) = max(1, 8·sin²(dt)): the estimator
        // oscillates between 1 and 8 and there is no growth beyond the pair.
        let mut cfg = small_config(2, 12, vec![0.0]);
        let d = 900.0;
        cfg.system.coupling = CouplingConfig::Chain { strength_rad_s: d };
        cfg.schedule.tau0_s = 1.0e-4;
        let trace = run_growth(&cfg).unwrap();
        assert_eq!(trace.points.len(), 13);
        for pt in &trace.points {
            let expect = (8.0 * (d * pt.time).sin().powi(2)).max(1.0);
            assert!(
                (pt.k - expect).abs() < 1e-9,
                "n = {}: K = {} vs closed form {}",
                pt.n_cycles,
                pt.k,
                expect
            );
        }
    }

    #[test]
    fn zero_cycles_yields_the_single_uncorrelated_point() {
        let cfg = small_config(3, 0, vec![0.0]);
        let trace = run_growth(&cfg).unwrap();
        assert_eq!(trace.points.len(), 1);
        assert_eq!(trace.points[0].n_cycles, 0);
        assert_eq!(trace.points[0].k, 1.0);
    }

    #[test]
    fn localization_at_p_zero_reproduces_growth_bitwise() {
        let cfg = small_config(4, 6, vec![0.0, 0.4]);
        let growth = run_growth(&cfg).unwrap();
        let sweep = run_localization(&cfg).unwrap();
        assert_eq!(sweep.len(), 2);
        for (a, b) in growth.points.iter().zip(&sweep[0].points) {
            assert_eq!(a.k.to_bits(), b.k.to_bits(), "n = {}", a.n_cycles);
            assert_eq!(a.time.to_bits(), b.time.to_bits());
        }
    }

    #[test]
    fn equilibrium_with_zero_preparation_reduces_to_localization() {
        let mut cfg = small_config(4, 6, vec![0.4]);
        cfg.schedule.n_prep_cycles = vec![0];
        let eq = run_equilibrium(&cfg).unwrap();
        let loc = run_localization(&cfg).unwrap();
        assert_eq!(eq.len(), 1);
        for (a, b) in eq[0].points.iter().zip(&loc[0].points) {
            assert_eq!(a.k.to_bits(), b.k.to_bits(), "n = {}", a.n_cycles);
        }
    }

    #[test]
    fn equilibrium_requires_preparation_lengths() {
        let mut cfg = small_config(3, 6, vec![0.4]);
        cfg.schedule.n_prep_cycles = vec![];
        assert_eq!(run_equilibrium(&cfg).unwrap_err().category(), "config");
    }

    #[test]
    fn prepared_traces_start_above_one() {
        // after enough preparation the n = 0 point reports the seeded
        // cluster K₀ > 1
        let mut cfg = small_config(4, 6, vec![0.4]);
        cfg.schedule.n_prep_cycles = vec![3];
        let eq = run_equilibrium(&cfg).unwrap();
        assert!(eq[0].points[0].k > 1.0, "K₀ = {}", eq[0].points[0].k);
    }

    #[test]
    fn trotter_backend_approaches_the_eigen_result() {
        let mut cfg = small_config(3, 3, vec![0.3]);
        // keep the per-cycle dipolar phase small so every point stays
        // measurable and the comparison covers the full schedule
        cfg.system.coupling = CouplingConfig::RandomAllToAll { second_moment_hz: 500.0 };
        cfg.schedule.tau0_s = 1.0e-4;
        let exact = run_localization(&cfg).unwrap();
        assert_eq!(exact[0].points.len(), 4);
        cfg.backend = BackendChoice::Trotter;
        cfg.trotter_step_s = Some(1.0e-6);
        let approx = run_localization(&cfg).unwrap();
        for (a, b) in exact[0].points.iter().zip(&approx[0].points) {
            assert!(
                (a.k - b.k).abs() < 1e-4,
                "n = {}: eigen K = {} vs trotter K = {}",
                a.n_cycles,
                a.k,
                b.k
            );
        }
    }

    #[test]
    fn unmeasurable_points_are_dropped_not_fatal() {
        // at full paper-scale coupling, three spins at p = 0.3 decorrelate so
        // hard that some points lose all positive spectral weight; the run
        // must drop those points and keep the rest of the trace intact
        let mut cfg = small_config(3, 3, vec![0.3]);
        cfg.schedule.tau0_s = 1.0e-4;
        let sweep = run_localization(&cfg).unwrap();
        let trace = &sweep[0];
        assert!(
            trace.points.len() < 4,
            "expected at least one dropped point, got all {}",
            trace.points.len()
        );
        assert_eq!(trace.points[0].n_cycles, 0, "the n = 0 echo always survives");
        assert!(trace.points.iter().all(|pt| pt.k >= 1.0 && pt.k.is_finite()));
        let spectra = trace.spectra.as_ref().unwrap();
        assert_eq!(spectra.len(), trace.points.len(), "spectra stay aligned");
    }

    #[test]
    fn reruns_are_bit_identical() {
        let cfg = small_config(5, 5, vec![0.2]);
        let a = run_localization(&cfg).unwrap();
        let b = run_localization(&cfg).unwrap();
        for (x, y) in a[0].points.iter().zip(&b[0].points) {
            assert_eq!(x.k.to_bits(), y.k.to_bits());
        }
    }

    #[test]
    fn run_all_assembles_every_section() {
        let mut cfg = small_config(4, 8, vec![0.0, 0.5]);
        // gentle coupling: four spins at p = 0.5 keep positive spectral
        // weight over the whole schedule, so no points are dropped
        cfg.system.coupling = CouplingConfig::RandomAllToAll { second_moment_hz: 800.0 };
        cfg.schedule.n_prep_cycles = vec![2];
        let results = run_all(&cfg).unwrap();
        assert!(results.growth.is_some());
        assert_eq!(results.localization.len(), 2);
        assert_eq!(results.equilibrium.len(), 2); // p ∈ {0, 0.5} × N₀ ∈ {2}
        let analysis = results.analysis.unwrap();
        assert_eq!(analysis.summaries.len(), 1); // only p = 0.5 is analyzed
        // growth is the p = 0 sweep trace, bit for bit
        let growth = results.growth.unwrap();
        for (a, b) in growth.points.iter().zip(&results.localization[0].points) {
            assert_eq!(a.k.to_bits(), b.k.to_bits());
        }
    }
}
