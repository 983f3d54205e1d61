//! PBC00 trine protocol objects.
//!
//! Alice prepares one of three qubit states spaced 120 degrees apart on a
//! great circle of the Bloch sphere; each signal encodes a (trit, bit) pair
//! `(r, b)` through `signal = f(r, b)`. Bob measures an unambiguous
//! three-outcome POVM built from the dual (orthogonal-complement) states.
//! After Alice announces `r`, Bob's outcome `p` either decodes a bit
//! (`g(p, r)` in `{0, 1}`) or the round is discarded.
//!
//! This module provides those objects plus the two channels the entropy
//! objective needs: the post-selection announcement map `G` and the key-map
//! pinching `Z`. `G` is exposed in two equivalent forms, a literal Kraus
//! channel into the full `R (x) A (x) B (x) Bbar` register and an exact
//! reduced form on the 12-dimensional image subspace that the optimizer uses.
//!
//! Register order conventions (last factor fastest, see [`crate::matcore`]):
//! * protocol input: `A (x) B` with `A` indexed by `a = 2r + b` (dim 6),
//! * announcement output: `R (x) A (x) B (x) Bbar`,
//! * Bob's space `B`: a bare qubit, or vacuum-flag (x) qubit (dim 3) for the
//!   detector-level model, with the vacuum at index 0.

use crate::error::{Error, Result};
use crate::matcore::{
    apply_and_trace, outer, partial_trace, tensor_product, C64, CMat,
    ChannelKind, DensityOperator, KrausChannel,
};
use std::f64::consts::PI;

/// Amplitude of each conclusive measurement branch, `sqrt(2/3)`.
fn branch_amp() -> f64 {
    (2.0 / 3.0f64).sqrt()
}

// ---------------------------------------------------------------------------
// Signals and measurement
// ---------------------------------------------------------------------------

/// Bob's measured space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BobSpace {
    /// Bare qubit (single-photon analysis), dimension 2.
    Qubit,
    /// Vacuum flag plus qubit (detector-level analysis), dimension 3,
    /// vacuum at index 0.
    VacuumQubit,
}

impl BobSpace {
    pub fn dim(self) -> usize {
        match self {
            BobSpace::Qubit => 2,
            BobSpace::VacuumQubit => 3,
        }
    }
}

/// The three trine signals, their duals, and Bob's POVM.
#[derive(Clone, Debug)]
pub struct SignalSet {
    /// `psi_j = [cos(2 pi j / 3), -sin(2 pi j / 3)]`.
    pub signals: [Vec<C64>; 3],
    /// Duals `psibar_k = [sin(2 pi k / 3), cos(2 pi k / 3)]`, orthogonal to
    /// the matching signal.
    pub duals: [Vec<C64>; 3],
    /// Unambiguous POVM `P_k = (2/3) |psibar_k><psibar_k|`.
    pub povm: [CMat; 3],
}

/// Constructs the trine signal set in closed form.
pub fn build_signal_set() -> SignalSet {
    let mut signals: [Vec<C64>; 3] = Default::default();
    let mut duals: [Vec<C64>; 3] = Default::default();
    let mut povm: [CMat; 3] = [CMat::zeros(2, 2), CMat::zeros(2, 2), CMat::zeros(2, 2)];
    for j in 0..3 {
        let th = 2.0 * PI * j as f64 / 3.0;
        signals[j] = vec![C64::new(th.cos(), 0.0), C64::new(-th.sin(), 0.0)];
        duals[j] = vec![C64::new(th.sin(), 0.0), C64::new(th.cos(), 0.0)];
        povm[j] = outer(&duals[j], &duals[j]).scale(2.0 / 3.0);
    }
    SignalSet {
        signals,
        duals,
        povm,
    }
}

impl SignalSet {
    /// Dual ket embedded into the requested Bob space (vacuum slot zero).
    pub fn dual_embedded(&self, p: usize, bob: BobSpace) -> Vec<C64> {
        match bob {
            BobSpace::Qubit => self.duals[p].clone(),
            BobSpace::VacuumQubit => {
                vec![C64::ZERO, self.duals[p][0], self.duals[p][1]]
            }
        }
    }

    /// POVM element on the requested Bob space. For the vacuum-flag space
    /// `k = 3` is the no-click element (vacuum projector).
    pub fn povm_embedded(&self, k: usize, bob: BobSpace) -> CMat {
        match bob {
            BobSpace::Qubit => self.povm[k].clone(),
            BobSpace::VacuumQubit => {
                if k == 3 {
                    let mut m = CMat::zeros(3, 3);
                    m[(0, 0)] = C64::ONE;
                    m
                } else {
                    let mut m = CMat::zeros(3, 3);
                    for i in 0..2 {
                        for j in 0..2 {
                            m[(i + 1, j + 1)] = self.povm[k][(i, j)];
                        }
                    }
                    m
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Encoding and decoding tables
// ---------------------------------------------------------------------------

/// Outcome classification after the announcement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Bob decodes this bit.
    Bit(u8),
    /// Round discarded.
    Inconclusive,
}

/// Encoding table `f` and decoding table `g` of the protocol.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProtocolTables;

impl ProtocolTables {
    pub fn new() -> Self {
        ProtocolTables
    }

    /// Signal index sent for announcement trit `r` and key bit `b`.
    pub fn f(&self, r: usize, b: usize) -> usize {
        debug_assert!(r < 3 && b < 2);
        (r + b) % 3
    }

    /// Bob's decoding of outcome `p` given announcement `r`.
    pub fn g(&self, p: usize, r: usize) -> Verdict {
        debug_assert!(p < 3 && r < 3);
        if p == (r + 2) % 3 {
            Verdict::Inconclusive
        } else if p == r {
            Verdict::Bit(1)
        } else {
            Verdict::Bit(0)
        }
    }

    /// The two conclusive outcomes for announcement `r`, in a fixed order.
    pub fn conclusive(&self, r: usize) -> [usize; 2] {
        [r, (r + 1) % 3]
    }

    /// The discarded outcome for announcement `r`.
    pub fn inconclusive(&self, r: usize) -> usize {
        (r + 2) % 3
    }
}

// ---------------------------------------------------------------------------
// Source
// ---------------------------------------------------------------------------

/// Alice's purified source `|Psi> = sum_{r,b} sqrt(1/6) |2r+b>_A |psi_f(r,b)>_B`
/// as a 12-dimensional density operator.
pub fn entangled_source() -> Result<DensityOperator> {
    let sig = build_signal_set();
    let tab = ProtocolTables::new();
    let amp = (1.0 / 6.0f64).sqrt();
    let mut ket = vec![C64::ZERO; 12];
    for r in 0..3 {
        for b in 0..2 {
            let a = 2 * r + b;
            let j = tab.f(r, b);
            for beta in 0..2 {
                ket[a * 2 + beta] = amp * sig.signals[j][beta];
            }
        }
    }
    DensityOperator::from_mat(outer(&ket, &ket))
}

/// Alice's reduced state `Tr_B |Psi><Psi|`, the right-hand side of every
/// source-replacement constraint. Rank 2 by construction.
pub fn source_marginal() -> Result<CMat> {
    let rho = entangled_source()?;
    partial_trace(rho.mat(), &[6, 2], &[0])
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

/// Joint outcome observable `Q_j (x) P_k` with its labels.
#[derive(Clone, Debug)]
pub struct OutcomeObservable {
    /// Alice's announced signal class.
    pub j: usize,
    /// Bob's outcome (`3` = no click in the vacuum-flag space).
    pub k: usize,
    pub op: CMat,
}

/// Hermitian basis element on Alice's register, tensored with identity on
/// Bob's, together with its source-fixed expectation value.
#[derive(Clone, Debug)]
pub struct ThetaConstraint {
    /// Row-major pair label `(q, q')` over Alice's 6 basis states.
    pub q: usize,
    pub q_prime: usize,
    pub op: CMat,
    pub value: f64,
}

/// The full constraint family for one Bob space.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub bob: BobSpace,
    /// Total operator dimension (12 or 18).
    pub dim: usize,
    pub outcomes: Vec<OutcomeObservable>,
    pub thetas: Vec<ThetaConstraint>,
}

/// Projector onto Alice's states that encode signal class `j`.
pub fn signal_class_projector(j: usize) -> CMat {
    let tab = ProtocolTables::new();
    let mut q = CMat::zeros(6, 6);
    for r in 0..3 {
        for b in 0..2 {
            if tab.f(r, b) == j {
                let a = 2 * r + b;
                q[(a, a)] = C64::ONE;
            }
        }
    }
    q
}

/// Builds the outcome observables `Q_j (x) P_k` and the 36 source-replacement
/// observables with their expectation values.
pub fn build_observables(bob: BobSpace) -> Result<ObservableSet> {
    let sig = build_signal_set();
    let db = bob.dim();
    let dim = 6 * db;
    let k_range = match bob {
        BobSpace::Qubit => 3,
        BobSpace::VacuumQubit => 4,
    };

    let mut outcomes = Vec::with_capacity(3 * k_range);
    for j in 0..3 {
        let qj = signal_class_projector(j);
        for k in 0..k_range {
            let pk = sig.povm_embedded(k, bob);
            outcomes.push(OutcomeObservable {
                j,
                k,
                op: tensor_product(&qj, &pk),
            });
        }
    }

    let rho_a = source_marginal()?;
    let eye_b = CMat::identity(db);
    let mut thetas = Vec::with_capacity(36);
    for q in 0..6 {
        for qp in 0..6 {
            let mut th = CMat::zeros(6, 6);
            if qp <= q {
                // Symmetric element (|q><q'| + |q'><q|)/2; collapses to the
                // projector when q == q'.
                th[(q, qp)] += C64::new(0.5, 0.0);
                th[(qp, q)] += C64::new(0.5, 0.0);
            } else {
                // Antisymmetric element i(|q'><q| - |q><q'|)/2.
                th[(qp, q)] += C64::new(0.0, 0.5);
                th[(q, qp)] += C64::new(0.0, -0.5);
            }
            let value = th.inner_re(&rho_a);
            thetas.push(ThetaConstraint {
                q,
                q_prime: qp,
                op: tensor_product(&th, &eye_b),
                value,
            });
        }
    }

    Ok(ObservableSet {
        bob,
        dim,
        outcomes,
        thetas,
    })
}

// ---------------------------------------------------------------------------
// Announcement map G and key pinching Z
// ---------------------------------------------------------------------------

/// The post-selection announcement map `G` and key-map pinching `Z`.
///
/// `G` keeps only conclusive rounds: for announcement `r` it writes Alice's
/// bit to register `R`, applies the conclusive measurement branches
/// `sqrt(P_p)` on `B`, and records the outcome in `Bbar`. One Kraus operator
/// per announcement; the two conclusive outcomes stay coherent inside it.
/// `Z` dephases the key register `R`.
///
/// The `reduced` form re-expresses `G` on an orthonormal basis of its
/// 12-dimensional image, ordered so that `Z` is block diagonal with the two
/// key blocks occupying indices `0..6` and `6..12`. Spectra (and therefore
/// every entropy built from them) agree with the literal form exactly.
#[derive(Clone, Debug)]
pub struct GZMaps {
    pub bob: BobSpace,
    pub dim_in: usize,
    /// Literal channel into `R (x) A (x) B (x) Bbar`.
    pub g: KrausChannel,
    /// Factor dimensions of the literal output register.
    pub out_dims: Vec<usize>,
    /// Reduced Kraus operators (three, `12 x dim_in`).
    pub reduced: Vec<CMat>,
}

/// Dimension of the reduced image space of `G`.
pub const REDUCED_DIM: usize = 12;
/// Size of each key block in the reduced ordering.
pub const REDUCED_BLOCK: usize = 6;

/// Builds the announcement/pinching pair for the requested Bob space.
pub fn build_gz_maps(bob: BobSpace) -> Result<GZMaps> {
    let sig = build_signal_set();
    let tab = ProtocolTables::new();
    let db = bob.dim();
    let dim_in = 6 * db;
    let out_dims = vec![2, 6, db, 3];
    let dim_out: usize = out_dims.iter().product();
    let amp = branch_amp();

    let mut literal = Vec::with_capacity(3);
    let mut reduced = Vec::with_capacity(3);
    for r in 0..3 {
        let mut lit = CMat::zeros(dim_out, dim_in);
        let mut red = CMat::zeros(REDUCED_DIM, dim_in);
        for b in 0..2 {
            let a = 2 * r + b;
            for (p_hat, &p) in tab.conclusive(r).iter().enumerate() {
                let dual = sig.dual_embedded(p, bob);
                for beta_out in 0..db {
                    if dual[beta_out] == C64::ZERO {
                        continue;
                    }
                    // Literal row (b, a, beta_out, p), last factor fastest.
                    let row = ((b * 6 + a) * db + beta_out) * 3 + p;
                    for beta_in in 0..db {
                        let col = a * db + beta_in;
                        lit[(row, col)] += amp * dual[beta_out] * dual[beta_in].conj();
                    }
                }
                let red_row = b * REDUCED_BLOCK + r * 2 + p_hat;
                for beta_in in 0..db {
                    let col = a * db + beta_in;
                    red[(red_row, col)] += amp * dual[beta_in].conj();
                }
            }
        }
        literal.push(lit);
        reduced.push(red);
    }

    let g = KrausChannel::new(literal, ChannelKind::TraceNonincreasing)?;
    Ok(GZMaps {
        bob,
        dim_in,
        g,
        out_dims,
        reduced,
    })
}

impl GZMaps {
    /// `G(rho)` on the literal output register.
    pub fn apply_g_literal(&self, rho: &CMat) -> Result<CMat> {
        self.g.apply(rho)
    }

    /// Key-register pinching on the literal output register.
    pub fn pinch_literal(&self, x: &CMat) -> CMat {
        let half = x.rows / 2;
        let mut out = x.clone();
        for i in 0..half {
            for j in half..x.cols {
                out[(i, j)] = C64::ZERO;
                out[(j, i)] = C64::ZERO;
            }
        }
        out
    }

    /// `G(rho)` expressed on the 12-dimensional image basis.
    pub fn apply_g_reduced(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(REDUCED_DIM, REDUCED_DIM);
        for k in &self.reduced {
            out = out.add(&k.mul(rho).mul(&k.dagger()));
        }
        out.hermitized()
    }

    /// Key-register pinching in the reduced ordering (two 6-blocks).
    pub fn pinch_reduced(&self, x: &CMat) -> CMat {
        let mut out = x.clone();
        for i in 0..REDUCED_BLOCK {
            for j in REDUCED_BLOCK..REDUCED_DIM {
                out[(i, j)] = C64::ZERO;
                out[(j, i)] = C64::ZERO;
            }
        }
        out
    }

    /// Adjoint of the reduced map, `sum_r K_r^dag X K_r`.
    pub fn adjoint_reduced(&self, x: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_in, self.dim_in);
        for k in &self.reduced {
            out = out.add(&k.dagger().mul(x).mul(k));
        }
        out.hermitized()
    }
}

// ---------------------------------------------------------------------------
// Full announcement pipeline (validation target)
// ---------------------------------------------------------------------------

/// Builds the staged announcement pipeline on the single-photon spaces:
/// classical copies of Alice's trit (`Atilde`, `Abar`-public), Bob's
/// measurement with a pass/fail sift flag (`Btilde`) and outcome record
/// (`Bbar`), the projection onto passing rounds, and the key-write isometry.
/// Returns the six composite Kraus operators (announcement x sift-flag) on
/// the register `R (x) A (x) Atilde (x) Abar (x) B (x) Btilde (x) Bbar`.
fn full_pipeline_composites() -> Vec<CMat> {
    let sig = build_signal_set();
    let tab = ProtocolTables::new();
    let amp = branch_amp();

    // Stage 1: A -> A (x) Atilde (x) Abar, announcing r (one Kraus per r).
    let mut stage1 = Vec::with_capacity(3);
    for r in 0..3 {
        let mut ka = CMat::zeros(54, 6);
        for b in 0..2 {
            let a = 2 * r + b;
            let row = (a * 3 + r) * 3 + r;
            ka[(row, a)] = C64::ONE;
        }
        stage1.push(tensor_product(&ka, &CMat::identity(2))); // 108 x 12
    }

    // Stage 2: B -> B (x) Btilde (x) Bbar conditioned on Atilde; one Kraus
    // per sift verdict s (0 = pass, 1 = fail), conclusive outcomes coherent.
    let mut stage2 = Vec::with_capacity(2);
    for s in 0..2 {
        let mut kb = CMat::zeros(648, 108);
        for r in 0..3 {
            for p in 0..3 {
                let passing = tab.g(p, r) != Verdict::Inconclusive;
                if passing != (s == 0) {
                    continue;
                }
                for a in 0..6 {
                    for u in 0..3 {
                        for bo in 0..2 {
                            for bi in 0..2 {
                                let w = amp * sig.duals[p][bo] * sig.duals[p][bi].conj();
                                if w == C64::ZERO {
                                    continue;
                                }
                                let row = ((((a * 3 + r) * 3 + u) * 2 + bo) * 2 + s) * 3 + p;
                                let col = ((a * 3 + r) * 3 + u) * 2 + bi;
                                kb[(row, col)] += w;
                            }
                        }
                    }
                }
            }
        }
        stage2.push(kb);
    }

    // Stage 3 projector onto passing rounds, folded in by zeroing fail rows.
    // Stage 4 isometry: read (r, b) off A and write b to a fresh key register.
    let mut composites = Vec::with_capacity(6);
    for s1 in &stage1 {
        for (s, s2) in stage2.iter().enumerate() {
            let mut m = s2.mul(s1); // 648 x 12
            if s == 1 {
                // Projection onto Btilde = pass annihilates this branch.
                m = CMat::zeros(648, 12);
            }
            let mut lifted = CMat::zeros(1296, 12);
            for row in 0..648 {
                let a = row / 108;
                let b = a % 2;
                let new_row = b * 648 + row;
                for col in 0..12 {
                    lifted[(new_row, col)] = m[(row, col)];
                }
            }
            composites.push(lifted);
        }
    }
    composites
}

/// Applies the staged announcement pipeline to `rho`, traces out the
/// classical helper registers, and reports the max-norm deviation from the
/// one-shot map [`build_gz_maps`] produces. Contract: below 1e-10 for every
/// PSD input.
pub fn validate_full_g(rho: &CMat) -> Result<f64> {
    if !rho.is_square() || rho.rows != 12 {
        return Err(Error::Dimension {
            context: "validate_full_g",
            expected: 12,
            got: rho.rows,
        });
    }
    let composites = full_pipeline_composites();
    let traced = apply_and_trace(&composites, rho, &[2, 6, 3, 3, 2, 2, 3], &[0, 1, 4, 6])?;
    let gz = build_gz_maps(BobSpace::Qubit)?;
    let simplified = gz.apply_g_literal(rho)?;
    Ok(traced.max_abs_diff(&simplified))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
