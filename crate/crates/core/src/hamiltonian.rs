//! Dipolar, double-quantum, and blended effective Hamiltonians.
//!
//! All Hamiltonians live in the secular (high-field) regime and are built
//! from a pair-coupling matrix `d_ij` (rad/s):
//!
//! ```text
//! H_dd  =  Σ_{i<j} d_ij [ 2 Îz^i Îz^j − (Îx^i Îx^j + Îy^i Îy^j) ]
//! H_0   = −Σ_{i<j} d_ij [ Îx^i Îx^j − Îy^i Îy^j ]
//! H_eff = (1−p) H_0 + p Σ ,    Σ = H_dd
//! ```
//!
//! `H_dd` conserves total m (flip-flop terms), while `H_0` raises or lowers
//! m by exactly 2 (double-quantum terms): in the bit basis a pair term of
//! `H_dd` connects states with the two bits unequal, and a pair term of `H_0`
//! flips two equal bits simultaneously. Both matrices are real and extremely
//! sparse; they are materialized densely because the propagators consuming
//! them are dense anyway.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{distributions::Uniform, Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, SpinSystem, MAX_SPINS};

// ---------------------------------------------------------------------------
// coupling models
// ---------------------------------------------------------------------------

/// How the coupling matrix is generated.
#[derive(Debug, Clone)]
pub enum CouplingVariant {
    /// Dipolar couplings from spin positions:
    /// `d_ij = prefactor · (1 − 3cos²θ_ij) / r_ij³` with `θ_ij` the polar
    /// angle of the inter-spin vector against the z axis. `prefactor` is in
    /// rad·s⁻¹·m³, positions in meters.
    Geometric { positions: Vec<[f64; 3]>, prefactor: f64 },
    /// Every pair coupled, drawn i.i.d. uniform in [−1, 1] (then rescaled via
    /// `target_second_moment`). The draw order is row-major over pairs i < j,
    /// so a fixed seed yields one well-defined matrix.
    RandomAllToAll { seed: u64 },
    /// Nearest-neighbor chain with a single coupling strength (rad/s).
    Chain { nearest_neighbor_strength: f64 },
}

/// A coupling model: generation variant plus optional normalization target.
#[derive(Debug, Clone)]
pub struct CouplingModel {
    pub variant: CouplingVariant,
    /// When set, all couplings are rescaled by one global factor so that the
    /// RMS coupling per spin, `sqrt((1/N) Σ_i Σ_{j≠i} d_ij²)`, equals this
    /// target (rad/s).
    pub target_second_moment: Option<f64>,
}

/// Generates the coupling matrix for `n_spins` spins and wraps it in a
/// validated [`SpinSystem`].
pub fn couplings_from_model(model: &CouplingModel, n_spins: usize) -> Result<SpinSystem> {
    if n_spins < 1 || n_spins > MAX_SPINS {
        return Err(Error::Size(format!(
            "n_spins = {n_spins} outside supported range 1..={MAX_SPINS}"
        )));
    }
    let mut d = Array2::<f64>::zeros((n_spins, n_spins));
    let label;
    match &model.variant {
        CouplingVariant::Geometric { positions, prefactor } => {
            if n_spins < 2 {
                return Err(Error::Size("geometric model needs at least 2 spins".into()));
            }
            if positions.len() != n_spins {
                return Err(Error::Shape(format!(
                    "geometric model has {} positions for {n_spins} spins",
                    positions.len()
                )));
            }
            for i in 0..n_spins {
                for j in (i + 1)..n_spins {
                    let dx = positions[j][0] - positions[i][0];
                    let dy = positions[j][1] - positions[i][1];
                    let dz = positions[j][2] - positions[i][2];
                    let r2 = dx * dx + dy * dy + dz * dz;
                    if r2 == 0.0 {
                        return Err(Error::Geometry(format!(
                            "spins {i} and {j} have coincident positions"
                        )));
                    }
                    let r = r2.sqrt();
                    let cos_theta = dz / r;
                    let val = prefactor * (1.0 - 3.0 * cos_theta * cos_theta) / (r2 * r);
                    d[[i, j]] = val;
                    d[[j, i]] = val;
                }
            }
            label = format!("geometric(n={n_spins})");
        }
        CouplingVariant::RandomAllToAll { seed } => {
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            let dist = Uniform::new_inclusive(-1.0, 1.0);
            for i in 0..n_spins {
                for j in (i + 1)..n_spins {
                    let val = rng.sample(dist);
                    d[[i, j]] = val;
                    d[[j, i]] = val;
                }
            }
            label = format!("random_all_to_all(seed={seed})");
        }
        CouplingVariant::Chain { nearest_neighbor_strength } => {
            if n_spins < 2 {
                return Err(Error::Size("chain model needs at least 2 spins".into()));
            }
            for i in 0..(n_spins - 1) {
                d[[i, i + 1]] = *nearest_neighbor_strength;
                d[[i + 1, i]] = *nearest_neighbor_strength;
            }
            label = format!("chain(n={n_spins})");
        }
    }
    if let Some(target) = model.target_second_moment {
        if target <= 0.0 || !target.is_finite() {
            return Err(Error::Domain(format!(
                "target second moment must be positive and finite, got {target}"
            )));
        }
        let current = {
            let total: f64 = d.iter().map(|v| v * v).sum();
            (total / n_spins as f64).sqrt()
        };
        if current == 0.0 {
            return Err(Error::Domain(
                "cannot rescale an all-zero coupling matrix to a nonzero second moment".into(),
            ));
        }
        d.mapv_inplace(|v| v * (target / current));
    }
    SpinSystem::new(n_spins, d, label)
}

// ---------------------------------------------------------------------------
// perturbation
// ---------------------------------------------------------------------------

/// Which operator plays the role of the perturbation Σ in `H_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaKind {
    /// Σ = H_dd, the raw dipolar Hamiltonian (the only supported choice; the
    /// tag exists so future variants do not change the contract).
    #[default]
    Dipolar,
}

/// Perturbation strength and flavor for the effective Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationSpec {
    /// Relative weight p = τ_Σ/τ_c ∈ [0, 1].
    pub p: f64,
    pub sigma_kind: SigmaKind,
}

impl PerturbationSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("perturbation strength p = {p} outside [0, 1]")));
        }
        Ok(PerturbationSpec { p, sigma_kind: SigmaKind::Dipolar })
    }
}

// ---------------------------------------------------------------------------
// Hamiltonian builders
// ---------------------------------------------------------------------------

/// Shared kernel: builds `w0·H_0 + wdd·H_dd` in one pass over pair terms.
fn build_blend(sys: &SpinSystem, w0: f64, wdd: f64) -> OperatorMatrix {
    let n = sys.n_spins;
    let dim = sys.dim();
    let mut entries: Array2<Complex64> = Array2::zeros((dim, dim));
    for b in 0..dim {
        let mut diag = 0.0;
        for i in 0..n {
            let bit_i = b >> i & 1;
            for j in (i + 1)..n {
                let d = sys.couplings[[i, j]];
                if d == 0.0 {
                    continue;
                }
                let bit_j = b >> j & 1;
                let flipped = b ^ (1 << i) ^ (1 << j);
                if bit_i == bit_j {
                    // 2 IzIz on aligned bits: +d/2 ; double-quantum flip: −d/2
                    diag += wdd * d * 0.5;
                    entries[[flipped, b]] += Complex64::new(-w0 * d * 0.5, 0.0);
                } else {
                    // 2 IzIz on anti-aligned bits: −d/2 ; flip-flop: −d/2
                    diag -= wdd * d * 0.5;
                    entries[[flipped, b]] += Complex64::new(-wdd * d * 0.5, 0.0);
                }
            }
        }
        entries[[b, b]] = Complex64::new(diag, 0.0);
    }
    OperatorMatrix { dim, entries, kind: crate::hilbert::OpKind::Hermitian }
}

/// The secular dipolar Hamiltonian `H_dd` (Zeeman-conserving; `[H_dd, Iz] = 0`).
pub fn build_h_dd(sys: &SpinSystem) -> OperatorMatrix {
    build_blend(sys, 0.0, 1.0)
}

/// The double-quantum Hamiltonian `H_0` (every element changes m by ±2).
pub fn build_h0(sys: &SpinSystem) -> OperatorMatrix {
    build_blend(sys, 1.0, 0.0)
}

/// The engineered effective Hamiltonian `H_eff = (1−p) H_0 + p H_dd`.
pub fn build_h_eff(sys: &SpinSystem, pert: &PerturbationSpec) -> Result<OperatorMatrix> {
    if !(0.0..=1.0).contains(&pert.p) {
        return Err(Error::Domain(format!(
            "perturbation strength p = {} outside [0, 1]",
            pert.p
        )));
    }
    let SigmaKind::Dipolar = pert.sigma_kind;
    Ok(build_blend(sys, 1.0 - pert.p, pert.p))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
