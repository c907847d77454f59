//! Symmetry-adapted spectral evolution — the fast path behind the experiment
//! runners.
//!
//! Every Hamiltonian in this crate (H_dd, H_0, and their blends) is real
//! symmetric in the bit basis and conserves two cheap symmetries:
//!
//! * **m-parity**: each term changes the total magnetization by 0 or ±2, so
//!   the parity of `popcount(b)` is conserved and the matrix is block
//!   diagonal over the two parity classes.
//! * **global spin flip** `F|b⟩ = |b̄⟩` (all bits complemented): coupling
//!   coefficients are invariant under flipping both spins of a pair. For even
//!   N the flip preserves parity and refines each parity class into F = ±1
//!   sectors spanned by `|k,±⟩ = (|b_k⟩ ± |b̄_k⟩)/√2` over representatives
//!   `b_k < b̄_k`; for odd N it exchanges the parity classes and is not used.
//!
//! The observable Iz is diagonal (parity-preserving) and F-odd
//! (`F Iz F = −Iz`), so within a parity class it has matrix element `m(b_k)`
//! exactly between `|k,+⟩` and `|k,−⟩`. Writing `V_± , E_±` for the
//! eigensystems of the two F-blocks, the evolved operator
//! `ρ(t) = e^{+iHt} Iz e^{−iHt}` has a single independent block per parity:
//!
//! ```text
//! C(t) = V₊ · (W ∘ P(t)) · V₋ᵀ ,   W = V₊ᵀ diag(m) V₋ ,
//! P_ab(t) = exp(i(E₊a − E₋b)t) ,
//! ```
//!
//! and the full matrix is recovered entrywise from C and the sector
//! bookkeeping. All heavy arithmetic is real dgemm on blocks of size 2^(N−2)
//! (even N) or 2^(N−1) (odd N, one block per parity, no F refinement), which
//! is what makes 40-cycle N = 12 traces take seconds instead of hours.
//!
//! This module is an optimization detail: its outputs are cross-validated
//! against the dense reference path (`propagator_of` + `evolve_observable` +
//! `spectrum_direct`) in the test suite, and nothing here changes the public
//! contract of the dense operations.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::hilbert::SpinSystem;
use crate::mqc::{CoherenceSpectrum, SpectrumSource};

// ---------------------------------------------------------------------------
// sector basis
// ---------------------------------------------------------------------------

/// One parity class: the ordered basis states (representatives for even N,
/// all class members for odd N) and their magnetization bookkeeping.
#[derive(Debug, Clone)]
pub struct SectorClass {
    /// Basis states in ascending bit-pattern order.
    pub states: Vec<usize>,
    /// m(b) per state (exact half-integers).
    pub m: Vec<f64>,
    /// 2·m(b) per state, for exact integer coherence-order arithmetic.
    pub two_m: Vec<i32>,
}

/// The parity (× global-flip, for even N) decomposition of the bit basis.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n_spins: usize,
    /// Even N uses the flip refinement (states are representatives b < b̄).
    pub flip_adapted: bool,
    /// Classes indexed by popcount parity.
    pub classes: [SectorClass; 2],
    /// Position of each state's representative within its class.
    index_of: Vec<u32>,
    full_mask: usize,
}

impl SectorBasis {
    pub fn new(n_spins: usize) -> Result<Self> {
        if n_spins < 1 || n_spins > crate::hilbert::MAX_SPINS {
            return Err(Error::Size(format!(
                "n_spins = {n_spins} outside supported range 1..={}",
                crate::hilbert::MAX_SPINS
            )));
        }
        let dim = 1usize << n_spins;
        let full_mask = dim - 1;
        let flip_adapted = n_spins % 2 == 0;
        let half_n = n_spins as f64 / 2.0;
        let mut classes = [
            SectorClass { states: vec![], m: vec![], two_m: vec![] },
            SectorClass { states: vec![], m: vec![], two_m: vec![] },
        ];
        let mut index_of = vec![0u32; dim];
        for b in 0..dim {
            let keep = if flip_adapted { b < (b ^ full_mask) } else { true };
            if keep {
                let parity = (b.count_ones() % 2) as usize;
                let class = &mut classes[parity];
                index_of[b] = class.states.len() as u32;
                class.states.push(b);
                class.m.push(b.count_ones() as f64 - half_n);
                class.two_m.push(2 * b.count_ones() as i32 - n_spins as i32);
            }
        }
        if flip_adapted {
            for b in 0..dim {
                if b > (b ^ full_mask) {
                    index_of[b] = index_of[b ^ full_mask];
                }
            }
        }
        Ok(SectorBasis { n_spins, flip_adapted, classes, index_of, full_mask })
    }
}

// ---------------------------------------------------------------------------
// sector operators
// ---------------------------------------------------------------------------

/// A complex block stored as split real/imaginary parts so that all matrix
/// products stay in real dgemm.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub re: Array2<f64>,
    pub im: Array2<f64>,
}

/// An F-odd (even N) or parity-diagonal (odd N) operator in sector
/// coordinates: one block per parity class. For even N the block is the
/// `(F=+1, F=−1)` coupling block; for odd N it is the full class block.
#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub blocks: [SectorBlock; 2],
}

/// An operator expressed in a specific evolver's eigenbasis (the `W` of the
/// evolution formula); only meaningful together with that evolver.
#[derive(Debug, Clone)]
pub struct EigenOperator {
    blocks: [SectorBlock; 2],
}

// ---------------------------------------------------------------------------
// sector Hamiltonian blocks
// ---------------------------------------------------------------------------

/// Accumulates the action of `w0·H_0 + wdd·H_dd` on one source basis state:
/// calls `emit(target, amplitude)` for every nonzero `⟨target|H|source⟩`.
fn for_each_h_element(
    sys: &SpinSystem,
    source: usize,
    w0: f64,
    wdd: f64,
    mut emit: impl FnMut(usize, f64),
) {
    let n = sys.n_spins;
    let mut diag = 0.0;
    for i in 0..n {
        let bit_i = source >> i & 1;
        for j in (i + 1)..n {
            let d = sys.couplings[[i, j]];
            if d == 0.0 {
                continue;
            }
            let bit_j = source >> j & 1;
            let flipped = source ^ (1 << i) ^ (1 << j);
            if bit_i == bit_j {
                diag += wdd * d * 0.5;
                if w0 != 0.0 {
                    emit(flipped, -w0 * d * 0.5);
                }
            } else {
                diag -= wdd * d * 0.5;
                if wdd != 0.0 {
                    emit(flipped, -wdd * d * 0.5);
                }
            }
        }
    }
    emit(source, diag);
}

/// Builds the real-symmetric sector blocks of `w0·H_0 + wdd·H_dd`.
/// Even N: per parity the two F-blocks `(H₊, H₋)`; odd N: one block per
/// parity (the second entry of the pair is unused and empty).
fn sector_blocks(
    sb: &SectorBasis,
    sys: &SpinSystem,
    w0: f64,
    wdd: f64,
) -> [(Array2<f64>, Array2<f64>); 2] {
    std::array::from_fn(|parity| {
        let class = &sb.classes[parity];
        let size = class.states.len();
        if sb.flip_adapted {
            let mut h_plus = Array2::zeros((size, size));
            let mut h_minus = Array2::zeros((size, size));
            for (k, &b) in class.states.iter().enumerate() {
                for_each_h_element(sys, b, w0, wdd, |target, amp| {
                    let l = sb.index_of[target] as usize;
                    // H₊[l,k] = H(b_l, b_k) + H(b_l, b̄_k): a target equal to
                    // the representative contributes the first term, a target
                    // equal to its complement the second (with F-sign in H₋).
                    h_plus[[l, k]] += amp;
                    if target < (target ^ sb.full_mask) {
                        h_minus[[l, k]] += amp;
                    } else {
                        h_minus[[l, k]] -= amp;
                    }
                });
            }
            (h_plus, h_minus)
        } else {
            let mut h = Array2::zeros((size, size));
            for (k, &b) in class.states.iter().enumerate() {
                for_each_h_element(sys, b, w0, wdd, |target, amp| {
                    let l = sb.index_of[target] as usize;
                    h[[l, k]] += amp;
                });
            }
            (h, Array2::zeros((0, 0)))
        }
    })
}

// ---------------------------------------------------------------------------
// spectral evolver
// ---------------------------------------------------------------------------

/// Eigensystem pair of one parity class: left = F=+1 block, right = F=−1
/// block for even N; for odd N both sides are the same class block.
#[derive(Debug, Clone)]
struct SectorPair {
    e_left: Array1<f64>,
    v_left: Array2<f64>,
    e_right: Array1<f64>,
    v_right: Array2<f64>,
    /// W = V_leftᵀ · diag(m) · V_right (real, since Iz is diagonal).
    w: Array2<f64>,
}

/// Diagonalized sector Hamiltonian, ready to evolve Iz (or a prepared
/// initial operator) to arbitrary times at dgemm cost.
#[derive(Debug)]
pub struct SpectralEvolver {
    pub n_spins: usize,
    sectors: [SectorPair; 2],
}

impl SpectralEvolver {
    /// Diagonalizes `w0·H_0 + wdd·H_dd` sector by sector.
    pub fn new(sb: &SectorBasis, sys: &SpinSystem, w0: f64, wdd: f64) -> Result<Self> {
        if sys.n_spins != sb.n_spins {
            return Err(Error::Shape(format!(
                "system has {} spins but sector basis was built for {}",
                sys.n_spins, sb.n_spins
            )));
        }
        let blocks = sector_blocks(sb, sys, w0, wdd);
        let sectors = blocks
            .into_iter()
            .enumerate()
            .map(|(parity, (h_plus, h_minus))| {
                let class = &sb.classes[parity];
                let m_diag = Array1::from(class.m.clone());
                let (e_left, v_left) = h_plus
                    .eigh(UPLO::Lower)
                    .map_err(|e| Error::Diagnostic(format!("sector eigendecomposition failed: {e}")))?;
                let (e_right, v_right) = if sb.flip_adapted {
                    h_minus.eigh(UPLO::Lower).map_err(|e| {
                        Error::Diagnostic(format!("sector eigendecomposition failed: {e}"))
                    })?
                } else {
                    (e_left.clone(), v_left.clone())
                };
                // W = V_leftᵀ diag(m) V_right: scale rows of V_right by m first
                let scaled = &v_right * &m_diag.view().insert_axis(ndarray::Axis(1));
                let w = v_left.t().dot(&scaled);
                Ok(SectorPair { e_left, v_left, e_right, v_right, w })
            })
            .collect::<Result<Vec<_>>>()?;
        let sectors: [SectorPair; 2] =
            sectors.try_into().expect("exactly two parity classes");
        Ok(SpectralEvolver { n_spins: sb.n_spins, sectors })
    }

    /// `ρ(t) = e^{+iHt} Iz e^{−iHt}` in sector coordinates.
    pub fn evolve(&self, t: f64) -> SectorOperator {
        let blocks = std::array::from_fn(|parity| {
            let s = &self.sectors[parity];
            evolve_block(s, t, None)
        });
        SectorOperator { blocks }
    }

    /// Same with a prepared initial operator instead of Iz; `init` must have
    /// been produced by [`SpectralEvolver::to_eigenbasis`] on this evolver.
    pub fn evolve_prepared(&self, t: f64, init: &EigenOperator) -> SectorOperator {
        let blocks = std::array::from_fn(|parity| {
            let s = &self.sectors[parity];
            evolve_block(s, t, Some(&init.blocks[parity]))
        });
        SectorOperator { blocks }
    }

    /// Transforms a sector-coordinate operator into this evolver's eigenbasis
    /// (the `W` slot of the evolution formula): `W = V_leftᵀ · C · V_right`.
    pub fn to_eigenbasis(&self, op: &SectorOperator) -> EigenOperator {
        let blocks = std::array::from_fn(|parity| {
            let s = &self.sectors[parity];
            let block = &op.blocks[parity];
            SectorBlock {
                re: s.v_left.t().dot(&block.re).dot(&s.v_right),
                im: s.v_left.t().dot(&block.im).dot(&s.v_right),
            }
        });
        EigenOperator { blocks }
    }
}

// ---------------------------------------------------------------------------
// segmented (alternating) evolution
// ---------------------------------------------------------------------------

/// Per-cycle propagator blocks for the literal alternation protocol: within
/// each cycle the state evolves for τ₀ under `H_0`, then for τ_Σ under the
/// perturbation `H_dd`. Both Hamiltonians commute with the parity and
/// global-flip symmetries, so the cycle unitary `G = U_Σ·U_0` is block
/// diagonal over the same sectors and an F-odd operator block updates as
/// `C ← G_left† · C · G_right` per parity class.
///
/// Unlike the static blend, the alternation is not generated by a single
/// Hermitian matrix at finite τ, so states are advanced cycle by cycle
/// (`step`) instead of being evaluated at arbitrary times.
#[derive(Debug)]
pub struct SegmentedEvolver {
    /// Per parity: conj-transposed left factor `G_left†` and right factor
    /// `G_right`. For odd N (no flip refinement) both derive from the same
    /// class block.
    cycles: [(SectorBlock, SectorBlock); 2],
}

impl SegmentedEvolver {
    /// Builds the cycle blocks from the already-diagonalized segment
    /// generators: `ev0` must be the pure-`H_0` evolver and `evdd` the
    /// pure-`H_dd` evolver on the same sector basis.
    pub fn new(ev0: &SpectralEvolver, evdd: &SpectralEvolver, tau0: f64, tau_sigma: f64) -> Self {
        let cycles = std::array::from_fn(|parity| {
            let s0 = &ev0.sectors[parity];
            let sd = &evdd.sectors[parity];
            let g_left = block_mul(
                &unitary_block(&sd.e_left, &sd.v_left, tau_sigma),
                &unitary_block(&s0.e_left, &s0.v_left, tau0),
            );
            let g_right = block_mul(
                &unitary_block(&sd.e_right, &sd.v_right, tau_sigma),
                &unitary_block(&s0.e_right, &s0.v_right, tau0),
            );
            let g_left_dag = SectorBlock {
                re: g_left.re.t().to_owned(),
                im: g_left.im.mapv(|x| -x).t().to_owned(),
            };
            (g_left_dag, g_right)
        });
        SegmentedEvolver { cycles }
    }

    /// Advances a sector operator by one full cycle:
    /// `C ← G_left† · C · G_right` per parity class.
    pub fn step(&self, op: &SectorOperator) -> SectorOperator {
        let blocks = std::array::from_fn(|parity| {
            let (g_left_dag, g_right) = &self.cycles[parity];
            block_mul(g_left_dag, &block_mul(&op.blocks[parity], g_right))
        });
        SectorOperator { blocks }
    }
}

/// `U = V · diag(e^{−iEt}) · Vᵀ` as a split-complex block (V real orthogonal).
fn unitary_block(e: &Array1<f64>, v: &Array2<f64>, t: f64) -> SectorBlock {
    let cos = Array1::from_iter(e.iter().map(|w| (w * t).cos()));
    let sin = Array1::from_iter(e.iter().map(|w| -(w * t).sin()));
    let vt = v.t();
    let scaled_re = &vt * &cos.view().insert_axis(ndarray::Axis(1));
    let scaled_im = &vt * &sin.view().insert_axis(ndarray::Axis(1));
    SectorBlock { re: v.dot(&scaled_re), im: v.dot(&scaled_im) }
}

/// Split-complex matrix product with three real multiplications:
/// `re = P₁ − P₂`, `im = (A_re+A_im)(B_re+B_im) − P₁ − P₂`.
fn block_mul(a: &SectorBlock, b: &SectorBlock) -> SectorBlock {
    let p1 = a.re.dot(&b.re);
    let p2 = a.im.dot(&b.im);
    let p3 = (&a.re + &a.im).dot(&(&b.re + &b.im));
    SectorBlock { re: &p1 - &p2, im: p3 - p1 - p2 }
}

/// The collective observable Iz in sector coordinates: within each parity
/// class it couples `|k,+⟩` to `|k,−⟩` with element `m(b_k)` (even N), or is
/// the diagonal class block `diag(m)` (odd N).
pub fn iz_sector(sb: &SectorBasis) -> SectorOperator {
    let blocks = std::array::from_fn(|parity| {
        let class = &sb.classes[parity];
        let size = class.states.len();
        let mut re = Array2::zeros((size, size));
        for (k, &m) in class.m.iter().enumerate() {
            re[[k, k]] = m;
        }
        SectorBlock { im: Array2::zeros((size, size)), re }
    });
    SectorOperator { blocks }
}

/// Core evolution step for one parity class:
/// `C(t) = V_left · (W ∘ P(t)) · V_rightᵀ`, `P_ab = e^{i(E_left,a − E_right,b)t}`.
///
/// The phase matrix is rank-2 in sines/cosines, so `W ∘ P` costs O(n²)
/// multiplies with no per-element trig:
/// `P_re = ca⊗cb + sa⊗sb`, `P_im = sa⊗cb − ca⊗sb` with
/// `ca = cos(E_left t)`, `sa = sin(E_left t)`, etc.
fn evolve_block(s: &SectorPair, t: f64, init: Option<&SectorBlock>) -> SectorBlock {
    let size_l = s.e_left.len();
    let size_r = s.e_right.len();
    let ca: Vec<f64> = s.e_left.iter().map(|e| (e * t).cos()).collect();
    let sa: Vec<f64> = s.e_left.iter().map(|e| (e * t).sin()).collect();
    let cb: Vec<f64> = s.e_right.iter().map(|e| (e * t).cos()).collect();
    let sbv: Vec<f64> = s.e_right.iter().map(|e| (e * t).sin()).collect();

    let mut m_re = Array2::zeros((size_l, size_r));
    let mut m_im = Array2::zeros((size_l, size_r));
    match init {
        None => {
            // W real: M = W ∘ P
            for a in 0..size_l {
                let (ca_a, sa_a) = (ca[a], sa[a]);
                for b in 0..size_r {
                    let p_re = ca_a * cb[b] + sa_a * sbv[b];
                    let p_im = sa_a * cb[b] - ca_a * sbv[b];
                    let w = s.w[[a, b]];
                    m_re[[a, b]] = w * p_re;
                    m_im[[a, b]] = w * p_im;
                }
            }
        }
        Some(w0) => {
            for a in 0..size_l {
                let (ca_a, sa_a) = (ca[a], sa[a]);
                for b in 0..size_r {
                    let p_re = ca_a * cb[b] + sa_a * sbv[b];
                    let p_im = sa_a * cb[b] - ca_a * sbv[b];
                    let (w_re, w_im) = (w0.re[[a, b]], w0.im[[a, b]]);
                    m_re[[a, b]] = w_re * p_re - w_im * p_im;
                    m_im[[a, b]] = w_re * p_im + w_im * p_re;
                }
            }
        }
    }
    SectorBlock {
        re: s.v_left.dot(&m_re).dot(&s.v_right.t()),
        im: s.v_left.dot(&m_im).dot(&s.v_right.t()),
    }
}

// ---------------------------------------------------------------------------
// spectrum extraction
// ---------------------------------------------------------------------------

/// Computes the MQC spectrum `A_M = Tr{O_M† ρ_M} / Tr{Iz²}` directly from
/// sector blocks, equivalent to `mqc::spectrum_direct` on the dense matrices.
///
/// Even N: the dense entries of an F-odd operator with sector block C are
/// `ρ(b_k, b_l) = S_kl`, `ρ(b_k, b̄_l) = −A_kl`, `ρ(b̄_k, b_l) = A_kl`,
/// `ρ(b̄_k, b̄_l) = −S_kl` with `S = (C+C†)/2`, `A = (C−C†)/2`, which bins
/// the S-products at `M = ±(m_k − m_l)` and the A-products at
/// `M = ±(m_k + m_l)`. Odd N: the class block is the operator block itself,
/// binned at `M = m_k − m_l`.
pub fn spectrum_from_sectors(
    sb: &SectorBasis,
    obs: &SectorOperator,
    rho: &SectorOperator,
) -> Result<CoherenceSpectrum> {
    let n = sb.n_spins;
    let n_orders = 2 * n + 1;
    let mut acc_re = vec![0.0f64; n_orders];
    let mut acc_im = vec![0.0f64; n_orders];

    for parity in 0..2 {
        let class = &sb.classes[parity];
        let size = class.states.len();
        let o = &obs.blocks[parity];
        let r = &rho.blocks[parity];
        if sb.flip_adapted {
            // hermitian/antihermitian split of both blocks
            let o_s_re = 0.5 * (&o.re + &o.re.t());
            let o_s_im = 0.5 * (&o.im - &o.im.t());
            let o_a_re = 0.5 * (&o.re - &o.re.t());
            let o_a_im = 0.5 * (&o.im + &o.im.t());
            let r_s_re = 0.5 * (&r.re + &r.re.t());
            let r_s_im = 0.5 * (&r.im - &r.im.t());
            let r_a_re = 0.5 * (&r.re - &r.re.t());
            let r_a_im = 0.5 * (&r.im + &r.im.t());
            for k in 0..size {
                let tm_k = class.two_m[k];
                for l in 0..size {
                    // conj(O_S)·ρ_S at M = ±(m_k − m_l)
                    let vs_re = o_s_re[[k, l]] * r_s_re[[k, l]] + o_s_im[[k, l]] * r_s_im[[k, l]];
                    let vs_im = o_s_re[[k, l]] * r_s_im[[k, l]] - o_s_im[[k, l]] * r_s_re[[k, l]];
                    let m_diff = ((tm_k - class.two_m[l]) / 2 + n as i32) as usize;
                    acc_re[m_diff] += vs_re;
                    acc_im[m_diff] += vs_im;
                    acc_re[2 * n - m_diff] += vs_re;
                    acc_im[2 * n - m_diff] += vs_im;
                    // conj(O_A)·ρ_A at M = ±(m_k + m_l)
                    let va_re = o_a_re[[k, l]] * r_a_re[[k, l]] + o_a_im[[k, l]] * r_a_im[[k, l]];
                    let va_im = o_a_re[[k, l]] * r_a_im[[k, l]] - o_a_im[[k, l]] * r_a_re[[k, l]];
                    let m_sum = ((tm_k + class.two_m[l]) / 2 + n as i32) as usize;
                    acc_re[m_sum] += va_re;
                    acc_im[m_sum] += va_im;
                    acc_re[2 * n - m_sum] += va_re;
                    acc_im[2 * n - m_sum] += va_im;
                }
            }
        } else {
            for k in 0..size {
                let tm_k = class.two_m[k];
                for l in 0..size {
                    let v_re = o.re[[k, l]] * r.re[[k, l]] + o.im[[k, l]] * r.im[[k, l]];
                    let v_im = o.re[[k, l]] * r.im[[k, l]] - o.im[[k, l]] * r.re[[k, l]];
                    let m_idx = ((tm_k - class.two_m[l]) / 2 + n as i32) as usize;
                    acc_re[m_idx] += v_re;
                    acc_im[m_idx] += v_im;
                }
            }
        }
    }

    let norm = n as f64 * (1u64 << n) as f64 / 4.0;
    CoherenceSpectrum::from_raw(n, acc_re, acc_im, norm, SpectrumSource::Direct)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{
        build_h_eff, couplings_from_model, CouplingModel, CouplingVariant, PerturbationSpec,
    };
    use crate::hilbert::{build_basis, collective_iz};
    use crate::mqc::spectrum_direct;
    use crate::propagate::{
        backward_observable, forward_state, propagator_of, Backend, CycleSchedule,
    };

    fn random_system(n: usize, seed: u64) -> SpinSystem {
        couplings_from_model(
            &CouplingModel {
                variant: CouplingVariant::RandomAllToAll { seed },
                target_second_moment: Some(1.0),
            },
            n,
        )
        .unwrap()
    }

    /// Engine vs dense reference: identical spectra for a grid of
    /// (N, p, n_cycles, n_prep) including odd N and the p = 1 edge.
    #[test]
    fn engine_matches_dense_reference() {
        for &(n, seed, p, n_cycles, n_prep) in &[
            (2usize, 1u64, 0.0f64, 3usize, 0usize),
            (4, 7, 0.0, 5, 0),
            (4, 7, 0.3, 4, 2),
            (5, 9, 0.108, 6, 0),
            (5, 9, 0.65, 3, 3),
            (6, 11, 1.0, 4, 0),
            (3, 13, 0.5, 5, 1),
        ] {
            let sys = random_system(n, seed);
            let tau0_ref = 0.35;
            let sched = CycleSchedule::from_p(tau0_ref, p, n_cycles, n_prep).unwrap();
            let pert = PerturbationSpec::new(p).unwrap();

            // dense reference
            let rho_d = forward_state(&sys, &sched, &pert, Backend::Eigen).unwrap();
            let obs_d = backward_observable(&sys, &sched, Backend::Eigen).unwrap();
            let basis = build_basis(n).unwrap();
            let spec_d = spectrum_direct(&rho_d, &obs_d, &basis).unwrap();

            // engine
            let sb = SectorBasis::new(n).unwrap();
            let ev0 = SpectralEvolver::new(&sb, &sys, 1.0, 0.0).unwrap();
            let ev_eff = SpectralEvolver::new(&sb, &sys, 1.0 - p, p).unwrap();
            let rho_e = if n_prep > 0 {
                let init = ev0.evolve(n_prep as f64 * sched.tau0);
                let prepared = ev_eff.to_eigenbasis(&init);
                ev_eff.evolve_prepared(n_cycles as f64 * sched.tau_c(), &prepared)
            } else {
                ev_eff.evolve(n_cycles as f64 * sched.tau_c())
            };
            let obs_e = ev0.evolve(sched.decode_duration());
            let spec_e = spectrum_from_sectors(&sb, &obs_e, &rho_e).unwrap();

            for m in -(n as i32)..=(n as i32) {
                let (a, b) = (spec_d.amplitude(m), spec_e.amplitude(m));
                assert!(
                    (a - b).abs() < 1e-12,
                    "N={n} p={p} n={n_cycles} prep={n_prep} M={m}: dense {a:.15e} vs engine {b:.15e}"
                );
            }
        }
    }

    /// Segmented engine vs dense segmented reference: identical spectra for a
    /// grid of (N, p, n_cycles, n_prep) including odd N, preparation stages,
    /// and the p = 1 edge.
    #[test]
    fn segmented_engine_matches_dense_reference() {
        use crate::propagate::forward_state_segmented;
        for &(n, seed, p, n_cycles, n_prep) in &[
            (4usize, 7u64, 0.3f64, 4usize, 0usize),
            (4, 7, 0.65, 5, 2),
            (5, 9, 0.108, 6, 0),
            (5, 9, 0.5, 3, 3),
            (6, 11, 1.0, 4, 0),
            (3, 13, 0.85, 5, 1),
        ] {
            let sys = random_system(n, seed);
            let sched = CycleSchedule::from_p(0.35, p, n_cycles, n_prep).unwrap();
            let pert = PerturbationSpec::new(p).unwrap();

            // dense reference
            let rho_d = forward_state_segmented(&sys, &sched, &pert, Backend::Eigen).unwrap();
            let obs_d = backward_observable(&sys, &sched, Backend::Eigen).unwrap();
            let basis = build_basis(n).unwrap();
            let spec_d = spectrum_direct(&rho_d, &obs_d, &basis).unwrap();

            // engine
            let sb = SectorBasis::new(n).unwrap();
            let ev0 = SpectralEvolver::new(&sb, &sys, 1.0, 0.0).unwrap();
            let evdd = SpectralEvolver::new(&sb, &sys, 0.0, 1.0).unwrap();
            let seg = SegmentedEvolver::new(&ev0, &evdd, sched.tau0, sched.tau_sigma);
            let mut rho_e = if n_prep > 0 {
                ev0.evolve(n_prep as f64 * sched.tau0)
            } else {
                iz_sector(&sb)
            };
            for _ in 0..n_cycles {
                rho_e = seg.step(&rho_e);
            }
            let obs_e = ev0.evolve(sched.decode_duration());
            let spec_e = spectrum_from_sectors(&sb, &obs_e, &rho_e).unwrap();

            for m in -(n as i32)..=(n as i32) {
                let (a, b) = (spec_d.amplitude(m), spec_e.amplitude(m));
                assert!(
                    (a - b).abs() < 1e-12,
                    "N={n} p={p} n={n_cycles} prep={n_prep} M={m}: dense {a:.15e} vs engine {b:.15e}"
                );
            }
        }
    }

    /// The evolved sector operator reconstructs the dense ρ(t) entrywise.
    #[test]
    fn sector_operator_reconstructs_dense_state() {
        for n in [3usize, 4] {
            let sys = random_system(n, 31);
            let h = build_h_eff(&sys, &PerturbationSpec::new(0.4).unwrap()).unwrap();
            let t = 0.9;
            let u = propagator_of(&h, t, Backend::Eigen).unwrap();
            let basis = build_basis(n).unwrap();
            let iz = collective_iz(&basis);
            let dense = crate::propagate::evolve_observable(&iz, &u).unwrap();

            let sb = SectorBasis::new(n).unwrap();
            let ev = SpectralEvolver::new(&sb, &sys, 0.6, 0.4).unwrap();
            let op = ev.evolve(t);

            let full = sb.classes[0].states.len() + sb.classes[1].states.len();
            assert_eq!(if sb.flip_adapted { 2 * full } else { full }, 1 << n);

            for parity in 0..2 {
                let class = &sb.classes[parity];
                let block = &op.blocks[parity];
                for (k, &bk) in class.states.iter().enumerate() {
                    for (l, &bl) in class.states.iter().enumerate() {
                        if sb.flip_adapted {
                            let c_kl = num_complex::Complex64::new(block.re[[k, l]], block.im[[k, l]]);
                            let c_lk = num_complex::Complex64::new(block.re[[l, k]], block.im[[l, k]]);
                            let s = 0.5 * (c_kl + c_lk.conj());
                            let a = 0.5 * (c_kl - c_lk.conj());
                            let full_mask = (1 << n) - 1;
                            let checks = [
                                (bk, bl, s),
                                (bk, bl ^ full_mask, -a),
                                (bk ^ full_mask, bl, a),
                                (bk ^ full_mask, bl ^ full_mask, -s),
                            ];
                            for (r, c, want) in checks {
                                let got = dense.entries[[r, c]];
                                assert!(
                                    (got - want).norm() < 1e-12,
                                    "N={n} parity={parity} ({r},{c}): {got} vs {want}"
                                );
                            }
                        } else {
                            let got = dense.entries[[bk, bl]];
                            let want =
                                num_complex::Complex64::new(block.re[[k, l]], block.im[[k, l]]);
                            assert!((got - want).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn class_sizes_are_complete() {
        for n in 1..=8usize {
            let sb = SectorBasis::new(n).unwrap();
            let total: usize = sb.classes.iter().map(|c| c.states.len()).sum();
            let expect = if sb.flip_adapted { 1 << (n - 1) } else { 1 << n };
            assert_eq!(total, expect, "N = {n}");
        }
    }
}
