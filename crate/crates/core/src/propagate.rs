//! Exact unitary propagation of operators, cycle schedules, and the
//! forward/backward evolutions of the MQC experiment.
//!
//! Conventions (ħ = 1, Hamiltonians in rad/s, times in seconds):
//!
//! ```text
//! U(t)      = exp(−i H t)
//! ρ^H(t)    = U† Iz U                      (Heisenberg-evolved observable)
//! forward   : ρ^H_eff(Nτ_c), optionally preceded by a preparation stage
//!             of N₀ cycles under H_0 alone
//! backward  : A = V Iz V†,  V = exp(+i H_0 T),  T = (N + N₀)·τ₀
//! ```
//!
//! The decoding duration `T` matches the total unperturbed dose of the
//! forward protocol (preparation plus encoding), so an unperturbed run is
//! reversed completely and a prepared initial state is measured with its own
//! cluster size at N = 0.
//!
//! Two backends construct propagators: `Eigen` (Hermitian eigendecomposition,
//! the reference, exact to roundoff) and `Trotter` (symmetric second-order
//! product of pair gates, step error O(step²)).

pub mod engine;
mod trotter;

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_h0, build_h_eff, PerturbationSpec};
use crate::hilbert::{build_basis, collective_iz, OpKind, OperatorMatrix, SpinSystem};

// ---------------------------------------------------------------------------
// backends and propagators
// ---------------------------------------------------------------------------

/// Propagator construction method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Hermitian eigendecomposition; exact up to roundoff. The default.
    Eigen,
    /// Symmetric (Strang) splitting over pair terms with the given step in
    /// seconds; global error is O(step²). Requires the Hamiltonian to be a
    /// sum of two-spin terms of the dipolar/double-quantum family, which all
    /// Hamiltonians built by this crate are.
    Trotter { step: f64 },
}

/// A unitary time-evolution operator together with its provenance.
#[derive(Debug, Clone)]
pub struct Propagator {
    /// The unitary exp(−i·generator·duration).
    pub u: OperatorMatrix,
    /// The Hamiltonian that generated `u` (kept for introspection and
    /// energy-conservation checks; a dense copy).
    pub generator: OperatorMatrix,
    /// Evolution time in seconds (may be negative: backward evolution).
    pub duration: f64,
}

/// Builds `U = exp(−i h t)` for a hermitian `h`.
pub fn propagator_of(h: &OperatorMatrix, t: f64, backend: Backend) -> Result<Propagator> {
    if h.kind != OpKind::Hermitian {
        return Err(Error::Kind("propagator generator must be tagged hermitian".into()));
    }
    h.validate()?;
    let u = match backend {
        Backend::Eigen => eigen_unitary(&h.entries, t)?,
        Backend::Trotter { step } => trotter::unitary(&h.entries, t, step)?,
    };
    Ok(Propagator {
        u: OperatorMatrix { dim: h.dim, entries: u, kind: OpKind::Unitary },
        generator: h.clone(),
        duration: t,
    })
}

/// exp(−i h t) by spectral decomposition: h = V E V† ⇒ U = V e^{−iEt} V†.
fn eigen_unitary(h: &Array2<Complex64>, t: f64) -> Result<Array2<Complex64>> {
    let (eigs, vecs) = h
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Diagnostic(format!("eigendecomposition failed: {e}")))?;
    let phases = eigs.mapv(|w| Complex64::from_polar(1.0, -w * t));
    // scale column j of V by e^{−iE_j t}, then multiply by V†
    let scaled = &vecs * &phases; // broadcasts over rows
    let vdag = vecs.t().mapv(|z| z.conj());
    Ok(scaled.dot(&vdag))
}

/// Heisenberg conjugation `u† · a · u`; preserves hermiticity and traces.
pub fn evolve_observable(a: &OperatorMatrix, u: &Propagator) -> Result<OperatorMatrix> {
    if a.dim != u.u.dim {
        return Err(Error::Shape(format!(
            "observable dim {} does not match propagator dim {}",
            a.dim, u.u.dim
        )));
    }
    let udag = u.u.entries.t().mapv(|z| z.conj());
    let entries = udag.dot(&a.entries).dot(&u.u.entries);
    Ok(OperatorMatrix { dim: a.dim, entries, kind: a.kind })
}

// ---------------------------------------------------------------------------
// cycle schedules
// ---------------------------------------------------------------------------

/// Timing of one simulated experiment: N cycles of duration τ_c = τ₀ + τ_Σ,
/// optionally preceded by N₀ preparation cycles of duration τ₀ under H_0.
///
/// The perturbation strength is derived: p = τ_Σ/τ_c. The limiting case
/// p = 1 is represented by τ₀ = 0 (pure perturbation, zero decoding dose);
/// τ₀ and τ_Σ may not both vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSchedule {
    pub tau0: f64,
    pub tau_sigma: f64,
    pub n_cycles: usize,
    pub n_prep_cycles: usize,
}

impl CycleSchedule {
    pub fn new(tau0: f64, tau_sigma: f64, n_cycles: usize, n_prep_cycles: usize) -> Result<Self> {
        if !(tau0 >= 0.0) || !(tau_sigma >= 0.0) || !tau0.is_finite() || !tau_sigma.is_finite() {
            return Err(Error::Domain(format!(
                "cycle durations must be finite and nonnegative, got tau0 = {tau0}, tau_sigma = {tau_sigma}"
            )));
        }
        if tau0 + tau_sigma <= 0.0 {
            return Err(Error::Domain("tau0 + tau_sigma must be positive".into()));
        }
        Ok(CycleSchedule { tau0, tau_sigma, n_cycles, n_prep_cycles })
    }

    /// Builds a schedule from a reference τ₀ and a perturbation strength p:
    /// τ_Σ = p·τ₀/(1−p) so that τ_Σ/(τ₀+τ_Σ) = p. For p = 1 the unperturbed
    /// period vanishes (τ₀ = 0) and τ_Σ is set to the reference duration so
    /// the cycle time stays finite.
    pub fn from_p(tau0_ref: f64, p: f64, n_cycles: usize, n_prep_cycles: usize) -> Result<Self> {
        if !(tau0_ref > 0.0) || !tau0_ref.is_finite() {
            return Err(Error::Domain(format!("reference tau0 must be positive, got {tau0_ref}")));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("perturbation strength p = {p} outside [0, 1]")));
        }
        if p == 1.0 {
            CycleSchedule::new(0.0, tau0_ref, n_cycles, n_prep_cycles)
        } else {
            CycleSchedule::new(tau0_ref, tau0_ref * p / (1.0 - p), n_cycles, n_prep_cycles)
        }
    }

    /// Derived perturbation strength p = τ_Σ/(τ₀+τ_Σ) ∈ [0, 1].
    pub fn p(&self) -> f64 {
        self.tau_sigma / (self.tau0 + self.tau_sigma)
    }

    /// Cycle duration τ_c = τ₀ + τ_Σ.
    pub fn tau_c(&self) -> f64 {
        self.tau0 + self.tau_sigma
    }

    /// Total decoding duration (N + N₀)·τ₀: the unperturbed dose that the
    /// time-reversed observable must match.
    pub fn decode_duration(&self) -> f64 {
        (self.n_cycles + self.n_prep_cycles) as f64 * self.tau0
    }
}

// ---------------------------------------------------------------------------
// experiment-level evolutions
// ---------------------------------------------------------------------------

fn check_p_consistency(schedule: &CycleSchedule, pert: &PerturbationSpec) -> Result<()> {
    if (schedule.p() - pert.p).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "schedule-derived p = {} disagrees with perturbation p = {}",
            schedule.p(),
            pert.p
        )));
    }
    Ok(())
}

/// The state after the full forward protocol:
/// `ρ = U_N† ρ_init U_N` with `U_N = exp(−i H_eff N τ_c)` and
/// `ρ_init = Iz` evolved for N₀τ₀ under H_0 when N₀ > 0.
pub fn forward_state(
    sys: &SpinSystem,
    schedule: &CycleSchedule,
    pert: &PerturbationSpec,
    backend: Backend,
) -> Result<OperatorMatrix> {
    check_p_consistency(schedule, pert)?;
    let basis = build_basis(sys.n_spins)?;
    let mut rho = collective_iz(&basis);
    if schedule.n_prep_cycles > 0 {
        let h0 = build_h0(sys);
        let t_prep = schedule.n_prep_cycles as f64 * schedule.tau0;
        let u_prep = propagator_of(&h0, t_prep, backend)?;
        rho = evolve_observable(&rho, &u_prep)?;
    }
    if schedule.n_cycles > 0 {
        let h_eff = build_h_eff(sys, pert)?;
        let t_total = schedule.n_cycles as f64 * schedule.tau_c();
        let u_n = propagator_of(&h_eff, t_total, backend)?;
        rho = evolve_observable(&rho, &u_n)?;
    }
    Ok(rho)
}

/// Same protocol with the literal cycle alternation of the pulse sequence:
/// each cycle evolves τ₀ under H_0 then τ_Σ under Σ = H_dd, instead of
/// τ_c under the static average H_eff. Used to verify the average-Hamiltonian
/// picture numerically; the static form is the model's default.
pub fn forward_state_segmented(
    sys: &SpinSystem,
    schedule: &CycleSchedule,
    pert: &PerturbationSpec,
    backend: Backend,
) -> Result<OperatorMatrix> {
    check_p_consistency(schedule, pert)?;
    let basis = build_basis(sys.n_spins)?;
    let mut rho = collective_iz(&basis);
    if schedule.n_prep_cycles > 0 {
        let h0 = build_h0(sys);
        let t_prep = schedule.n_prep_cycles as f64 * schedule.tau0;
        let u_prep = propagator_of(&h0, t_prep, backend)?;
        rho = evolve_observable(&rho, &u_prep)?;
    }
    if schedule.n_cycles > 0 {
        let h0 = build_h0(sys);
        let h_dd = crate::hamiltonian::build_h_dd(sys);
        let u0 = propagator_of(&h0, schedule.tau0, backend)?;
        let us = propagator_of(&h_dd, schedule.tau_sigma, backend)?;
        // one cycle: first τ₀ under H_0, then τ_Σ under Σ (applied left)
        let cycle = us.u.entries.dot(&u0.u.entries);
        let mut u_total = OperatorMatrix::identity(sys.dim()).entries;
        for _ in 0..schedule.n_cycles {
            u_total = cycle.dot(&u_total);
        }
        let prop = Propagator {
            u: OperatorMatrix { dim: sys.dim(), entries: u_total, kind: OpKind::Unitary },
            generator: h0,
            duration: schedule.n_cycles as f64 * schedule.tau_c(),
        };
        rho = evolve_observable(&rho, &prop)?;
    }
    Ok(rho)
}

/// The decoding observable `A = V Iz V†` with `V = exp(+i H_0 T)` and
/// `T = (N + N₀)·τ₀` — equivalently Iz evolved under the sign-reversed H_0,
/// the abstract form of shifting all RF pulse phases for time reversal.
pub fn backward_observable(
    sys: &SpinSystem,
    schedule: &CycleSchedule,
    backend: Backend,
) -> Result<OperatorMatrix> {
    let basis = build_basis(sys.n_spins)?;
    let iz = collective_iz(&basis);
    let t = schedule.decode_duration();
    if t == 0.0 {
        return Ok(iz);
    }
    let h0 = build_h0(sys);
    // evolve_observable(Iz, exp(−iH₀T)) = exp(+iH₀T)·Iz·exp(−iH₀T) = V Iz V†
    let u = propagator_of(&h0, t, backend)?;
    evolve_observable(&iz, &u)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
