//! Convex optimization of the post-selected relative-entropy objective.
//!
//! Two stages: Frank-Wolfe descent over the constrained state set gives a
//! feasible iterate whose objective value is an upper bound on the minimum;
//! a verified dual point for the linearized problem then converts that
//! iterate into a certified lower bound on the minimum. Safety rests only on
//! convexity, the gradient at the final iterate, and an independently
//! re-checked dual feasibility, never on solver convergence claims.

mod sdp;

pub use sdp::{linear_sdp_minimize, DualPoint, SdpSolution};

use crate::error::{Error, Result};
use crate::matcore::{
    hermitian_eigenvalues, matrix_log2, CMat, DensityOperator, HermitianOperator,
};
use crate::protocol::GZMaps;
use serde::Serialize;

/// Default eigenvalue floor used inside logarithms.
pub const DEFAULT_SPECTRAL_FLOOR: f64 = 1e-12;

/// Feasibility tolerance for accepting a hint state or a subproblem output.
pub const FEASIBILITY_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Constraint sets
// ---------------------------------------------------------------------------

/// Affine description of the feasible state set: exact expectation values and
/// two-sided expectation intervals over a `dim`-dimensional PSD cone.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    pub dim: usize,
    pub equalities: Vec<(HermitianOperator, f64)>,
    pub intervals: Vec<(HermitianOperator, f64, f64)>,
    trace_index: usize,
}

impl ConstraintSet {
    /// Validates dimensions, interval ordering, and the presence of the
    /// unit-trace equality (required by every downstream certificate).
    pub fn new(
        dim: usize,
        equalities: Vec<(HermitianOperator, f64)>,
        intervals: Vec<(HermitianOperator, f64, f64)>,
    ) -> Result<Self> {
        for (g, _) in &equalities {
            if g.dim() != dim {
                return Err(Error::Dimension {
                    context: "constraint equality",
                    expected: dim,
                    got: g.dim(),
                });
            }
        }
        for (om, lo, hi) in &intervals {
            if om.dim() != dim {
                return Err(Error::Dimension {
                    context: "constraint interval",
                    expected: dim,
                    got: om.dim(),
                });
            }
            if lo > hi {
                return Err(Error::InvalidParameter {
                    name: "interval",
                    detail: format!("lower bound {lo} exceeds upper bound {hi}"),
                });
            }
        }
        let eye = CMat::identity(dim);
        let trace_index = equalities
            .iter()
            .position(|(g, gamma)| g.mat().max_abs_diff(&eye) < 1e-10 && (gamma - 1.0).abs() < 1e-10)
            .ok_or(Error::InvalidParameter {
                name: "equalities",
                detail: "constraint set must contain the unit-trace equality".into(),
            })?;
        Ok(ConstraintSet {
            dim,
            equalities,
            intervals,
            trace_index,
        })
    }

    /// Index of the unit-trace row inside `equalities`.
    pub fn trace_index(&self) -> usize {
        self.trace_index
    }

    /// Largest constraint violation of `rho`: absolute for equalities,
    /// distance outside `[lo, hi]` for intervals.
    pub fn residual(&self, rho: &CMat) -> f64 {
        let mut worst = 0.0f64;
        for (g, gamma) in &self.equalities {
            worst = worst.max((g.mat().inner_re(rho) - gamma).abs());
        }
        for (om, lo, hi) in &self.intervals {
            let v = om.mat().inner_re(rho);
            worst = worst.max((lo - v).max(0.0)).max((v - hi).max(0.0));
        }
        worst
    }
}

// ---------------------------------------------------------------------------
// Configuration and reporting
// ---------------------------------------------------------------------------

/// Step-size rule for the Frank-Wolfe iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LineSearch {
    /// Golden-section search for the exact one-dimensional minimum.
    ExactGolden,
    /// Classical `2/(t+2)` schedule.
    Diminishing,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub fw_gap_tol: f64,
    pub spectral_floor: f64,
    pub line_search: LineSearch,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 300,
            fw_gap_tol: 1e-6,
            spectral_floor: DEFAULT_SPECTRAL_FLOOR,
            line_search: LineSearch::ExactGolden,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fw_gap_tol <= 0.0 || self.spectral_floor <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "solver_config",
                detail: format!(
                    "tolerances must be positive: gap_tol {}, floor {}",
                    self.fw_gap_tol, self.spectral_floor
                ),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                detail: "need at least one iteration".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Converged,
    IterationLimit,
    Infeasible,
}

/// Outcome of one optimization run. `lower_bound` is the certified value;
/// `upper_bound` is the objective at the final feasible iterate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverReport {
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: SolverStatus,
}

// ---------------------------------------------------------------------------
// Objective and gradient
// ---------------------------------------------------------------------------

fn entropy_bits(eigs: &[f64], floor: f64) -> f64 {
    let mut s = 0.0;
    for &v in eigs {
        if v > floor {
            s -= v * v.log2();
        }
    }
    s
}

/// Post-selected relative entropy `f(rho) = D(G(rho) || Z(G(rho)))` in bits.
///
/// Because `Z` is a pinching that preserves the diagonal blocks of `G(rho)`,
/// the divergence reduces to the entropy difference of the pinched and
/// unpinched operators; both are evaluated on the reduced image.
pub fn objective(rho: &DensityOperator, maps: &GZMaps) -> Result<f64> {
    objective_with_floor(rho.mat(), maps, DEFAULT_SPECTRAL_FLOOR)
}

pub(crate) fn objective_with_floor(rho: &CMat, maps: &GZMaps, floor: f64) -> Result<f64> {
    let g = maps.apply_g_reduced(rho);
    if g.trace().re <= 1e-14 {
        // Empty post-selection: no rounds survive, nothing to distill.
        return Ok(0.0);
    }
    let zg = maps.pinch_reduced(&g);
    let eg = hermitian_eigenvalues(&g)?;
    let ezg = hermitian_eigenvalues(&zg)?;
    Ok((entropy_bits(&ezg, floor) - entropy_bits(&eg, floor)).max(0.0))
}

/// Gradient of the objective: `G†(log2 G(rho) - log2 Z(G(rho)))`.
/// The identity terms of the two entropy derivatives cancel exactly because
/// the pinching is unital.
pub fn gradient(rho: &DensityOperator, maps: &GZMaps) -> Result<HermitianOperator> {
    gradient_with_floor(rho.mat(), maps, DEFAULT_SPECTRAL_FLOOR)
}

pub(crate) fn gradient_with_floor(
    rho: &CMat,
    maps: &GZMaps,
    floor: f64,
) -> Result<HermitianOperator> {
    let g = maps.apply_g_reduced(rho);
    let zg = maps.pinch_reduced(&g);
    let lg = matrix_log2(&g, floor)?;
    let lzg = matrix_log2(&zg, floor)?;
    let grad = maps.adjoint_reduced(&lg.sub(&lzg));
    HermitianOperator::new(grad.hermitized())
}

// ---------------------------------------------------------------------------
// Feasible initialization
// ---------------------------------------------------------------------------

/// Returns a feasible state: the hint if it already satisfies the constraint
/// set, otherwise the output of a feasibility solve with a trace objective
/// (whose optimum is pinned to 1 by the trace row).
pub fn feasible_init(cs: &ConstraintSet, hint: Option<&DensityOperator>) -> Result<DensityOperator> {
    if let Some(h) = hint {
        if h.dim() == cs.dim && cs.residual(h.mat()) < FEASIBILITY_TOL {
            return Ok(h.clone());
        }
    }
    let eye = HermitianOperator::new(CMat::identity(cs.dim))?;
    let sol = linear_sdp_minimize(&eye, cs)?;
    Ok(sol.sigma)
}

// ---------------------------------------------------------------------------
// Frank-Wolfe
// ---------------------------------------------------------------------------

/// Result of the descent stage.
#[derive(Clone, Debug)]
pub struct FwOutcome {
    pub rho_star: DensityOperator,
    /// Objective at the final iterate; a valid upper bound on the minimum.
    pub upper_bound: f64,
    /// Last linearization gap `<grad, rho - sigma>`.
    pub fw_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Golden-section minimization of a convex function on [0, 1], returning the
/// best evaluated point. At most `max_evals` function evaluations.
fn golden_section<F: FnMut(f64) -> Result<f64>>(
    mut eval: F,
    max_evals: usize,
) -> Result<(f64, f64)> {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut best = (0.0, eval(0.0)?);
    let mut track = |x: f64, f: f64, best: &mut (f64, f64)| {
        if f < best.1 {
            *best = (x, f);
        }
    };
    let f_one = eval(1.0)?;
    track(1.0, f_one, &mut best);
    let mut evals = 2;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    track(x1, f1, &mut best);
    track(x2, f2, &mut best);
    evals += 2;
    while evals < max_evals && (b - a) > 1e-7 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = eval(x1)?;
            track(x1, f1, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = eval(x2)?;
            track(x2, f2, &mut best);
        }
        evals += 1;
    }
    Ok(best)
}

/// Frank-Wolfe minimization of the objective over the constraint set.
///
/// Each iteration linearizes at the current feasible iterate and moves
/// toward the linear minimizer; with the exact line search the objective is
/// monotone non-increasing. Stops at `fw_gap_tol` or the iteration limit.
pub fn fw_minimize(
    cs: &ConstraintSet,
    maps: &GZMaps,
    cfg: &SolverConfig,
    hint: Option<&DensityOperator>,
) -> Result<FwOutcome> {
    cfg.validate()?;
    if cs.dim != maps.dim_in {
        return Err(Error::Dimension {
            context: "fw_minimize",
            expected: maps.dim_in,
            got: cs.dim,
        });
    }
    let mut rho = feasible_init(cs, hint)?;
    let mut f_cur = objective_with_floor(rho.mat(), maps, cfg.spectral_floor)?;
    let mut gap = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;

    for t in 0..cfg.max_iterations {
        iterations = t + 1;
        let grad = gradient_with_floor(rho.mat(), maps, cfg.spectral_floor)?;
        let sub = linear_sdp_minimize(&grad, cs)?;
        let sigma = sub.sigma;
        gap = grad.mat().inner_re(rho.mat()) - grad.mat().inner_re(sigma.mat());
        if gap < cfg.fw_gap_tol {
            converged = true;
            iterations = t;
            break;
        }
        let gamma = match cfg.line_search {
            LineSearch::Diminishing => 2.0 / (t as f64 + 2.0),
            LineSearch::ExactGolden => {
                // The image of the segment is a segment; precompute ends.
                let g0 = maps.apply_g_reduced(rho.mat());
                let g1 = maps.apply_g_reduced(sigma.mat());
                let z0 = maps.pinch_reduced(&g0);
                let z1 = maps.pinch_reduced(&g1);
                let floor = cfg.spectral_floor;
                let (gamma, _) = golden_section(
                    |x| {
                        let g = g0.scale(1.0 - x).add(&g1.scale(x));
                        if g.trace().re <= 1e-14 {
                            return Ok(0.0);
                        }
                        let z = z0.scale(1.0 - x).add(&z1.scale(x));
                        Ok((entropy_bits(&hermitian_eigenvalues(&z)?, floor)
                            - entropy_bits(&hermitian_eigenvalues(&g)?, floor))
                        .max(0.0))
                    },
                    50,
                )?;
                gamma
            }
        };
        if gamma <= 0.0 {
            // Exact search found no descent; the gap estimate is already the
            // best certificate this linearization offers.
            converged = gap < cfg.fw_gap_tol;
            break;
        }
        let next = rho.mat().scale(1.0 - gamma).add(&sigma.mat().scale(gamma));
        let f_next = objective_with_floor(&next, maps, cfg.spectral_floor)?;
        if f_next > f_cur {
            // Numerical stall: keep the current iterate.
            break;
        }
        rho = DensityOperator::from_mat(next)?;
        f_cur = f_next;
    }

    Ok(FwOutcome {
        rho_star: rho,
        upper_bound: f_cur,
        fw_gap: gap,
        iterations,
        converged,
    })
}

// ---------------------------------------------------------------------------
// Certified lower bound
// ---------------------------------------------------------------------------

/// Converts a feasible iterate into a certified lower bound on the
/// constrained minimum of the objective.
///
/// With `W` the gradient at `rho_star`, convexity gives
/// `f(sigma) >= f(rho_star) + <W, sigma - rho_star>` for every state, and a
/// dual-feasible point of `min <W, sigma>` bounds that linear term from
/// below. The dual point is re-verified here by an eigenvalue check on the
/// original operators; a bound is never returned without that verification.
pub fn certified_lower_bound(
    rho_star: &DensityOperator,
    cs: &ConstraintSet,
    maps: &GZMaps,
) -> Result<f64> {
    certified_lower_bound_with_floor(rho_star, cs, maps, DEFAULT_SPECTRAL_FLOOR)
}

pub(crate) fn certified_lower_bound_with_floor(
    rho_star: &DensityOperator,
    cs: &ConstraintSet,
    maps: &GZMaps,
    floor: f64,
) -> Result<f64> {
    let w = gradient_with_floor(rho_star.mat(), maps, floor)?;
    let sol = linear_sdp_minimize(&w, cs)?;
    let mut y = sol.dual.y.clone();
    let z = sol.dual.z.clone();
    let wz = sol.dual.w.clone();

    let defect = |y: &[f64]| -> CMat {
        let mut d = w.mat().clone();
        for (yi, (g, _)) in y.iter().zip(&cs.equalities) {
            if *yi != 0.0 {
                d = d.sub(&g.mat().scale(*yi));
            }
        }
        for (j, (om, _, _)) in cs.intervals.iter().enumerate() {
            let coeff = z[j] - wz[j];
            if coeff != 0.0 {
                d = d.sub(&om.mat().scale(coeff));
            }
        }
        d.hermitized()
    };

    // Repair: any negative part of the defect is absorbed into the trace
    // multiplier, which only lowers the certified value.
    let min_eig = hermitian_eigenvalues(&defect(&y))?[0];
    if min_eig < 0.0 {
        y[cs.trace_index()] += min_eig * (1.0 + 1e-12) - 1e-15;
    }

    // Independent verification on the original operators.
    let verified_min = hermitian_eigenvalues(&defect(&y))?[0];
    if verified_min < -1e-9 {
        return Err(Error::Certification {
            detail: format!(
                "dual point infeasible after repair: min eigenvalue {verified_min:.3e}"
            ),
        });
    }
    if z.iter().chain(wz.iter()).any(|v| *v < 0.0) {
        return Err(Error::Certification {
            detail: "negative interval multiplier".into(),
        });
    }

    let mut dual_value: f64 = y
        .iter()
        .zip(&cs.equalities)
        .map(|(yi, (_, gamma))| yi * gamma)
        .sum();
    for (j, (_, lo, hi)) in cs.intervals.iter().enumerate() {
        dual_value += z[j] * lo - wz[j] * hi;
    }

    let f_star = objective_with_floor(rho_star.mat(), maps, floor)?;
    Ok(f_star - w.mat().inner_re(rho_star.mat()) + dual_value)
}

/// Full two-stage run: Frank-Wolfe descent, then the dual certificate.
/// Panics if the certified lower bound ever exceeds the upper bound beyond
/// 1e-9; that would mean a broken certificate, not a tolerance issue.
pub fn minimize_with_certificate(
    cs: &ConstraintSet,
    maps: &GZMaps,
    cfg: &SolverConfig,
    hint: Option<&DensityOperator>,
) -> Result<(DensityOperator, SolverReport)> {
    let fw = fw_minimize(cs, maps, cfg, hint)?;
    let lower = certified_lower_bound_with_floor(&fw.rho_star, cs, maps, cfg.spectral_floor)?;
    let report = SolverReport {
        upper_bound: fw.upper_bound,
        lower_bound: lower,
        gap: fw.upper_bound - lower,
        iterations: fw.iterations,
        status: if fw.converged {
            SolverStatus::Converged
        } else {
            SolverStatus::IterationLimit
        },
    };
    assert!(
        report.lower_bound <= report.upper_bound + 1e-9,
        "weak duality violated: lower {} > upper {}",
        report.lower_bound,
        report.upper_bound
    );
    Ok((fw.rho_star, report))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::simulate_depolarizing;
    use crate::matcore::test_support::{assert_close, random_state};
    use crate::matcore::{relative_entropy, tensor_product, C64};
    use crate::protocol::{build_gz_maps, build_observables, source_marginal, BobSpace};
    use rand::prelude::*;
    use rand::rngs::StdRng;

    fn herm(m: CMat) -> HermitianOperator {
        HermitianOperator::new(m).unwrap()
    }

    /// Equality constraint set generated by the depolarizing simulation.
    fn depolarizing_set(p: f64) -> (ConstraintSet, DensityOperator) {
        let stats = simulate_depolarizing(p).unwrap();
        let obs = build_observables(BobSpace::Qubit).unwrap();
        let mut eqs = vec![(herm(CMat::identity(12)), 1.0)];
        for o in &obs.outcomes {
            eqs.push((herm(o.op.clone()), stats.outcomes[o.j][o.k]));
        }
        for t in &obs.thetas {
            eqs.push((herm(t.op.clone()), t.value));
        }
        (
            ConstraintSet::new(12, eqs, vec![]).unwrap(),
            stats.rho,
        )
    }

    #[test]
    fn objective_vanishes_on_empty_postselection() {
        // Alice anything, Bob vacuum: every round is discarded.
        let maps = build_gz_maps(BobSpace::VacuumQubit).unwrap();
        let ra = source_marginal().unwrap();
        let mut vac = CMat::zeros(3, 3);
        vac[(0, 0)] = C64::new(1.0, 0.0);
        let rho = DensityOperator::from_mat(tensor_product(&ra, &vac)).unwrap();
        assert_eq!(objective(&rho, &maps).unwrap(), 0.0);
    }

    #[test]
    fn objective_at_perfect_channel_is_half_bit() {
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let stats = simulate_depolarizing(0.0).unwrap();
        let f = objective(&stats.rho, &maps).unwrap();
        assert_close(f, 0.5, 0.01);
    }

    #[test]
    fn objective_matches_literal_channel_route() {
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        for &p in &[0.05, 0.15, 0.25] {
            let stats = simulate_depolarizing(p).unwrap();
            let f_reduced = objective(&stats.rho, &maps).unwrap();
            let g = maps.apply_g_literal(stats.rho.mat()).unwrap();
            let zg = maps.pinch_literal(&g);
            let f_literal = relative_entropy(&g, &zg).unwrap();
            assert_close(f_reduced, f_literal, 1e-9);
        }
    }

    /// Random traceless Hermitian direction supported on the face where the
    /// depolarizing states live (A-marginal support tensor the full B space);
    /// directions leaving that face exit the PSD cone at any step size.
    fn face_direction(rng: &mut StdRng) -> CMat {
        let ra = source_marginal().unwrap();
        let (vals, vecs) = crate::matcore::hermitian_eigensystem(&ra).unwrap();
        let mut face: Vec<Vec<C64>> = Vec::new();
        for (i, v) in vals.iter().enumerate() {
            if *v > 1e-9 {
                let col: Vec<C64> = (0..6).map(|r| vecs[(r, i)]).collect();
                for b in 0..2 {
                    let mut vec12 = vec![C64::new(0.0, 0.0); 12];
                    for r in 0..6 {
                        vec12[r * 2 + b] = col[r];
                    }
                    face.push(vec12);
                }
            }
        }
        let k = face.len();
        let mut h = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                if i < j {
                    let re = rng.random_range(-1.0..1.0);
                    let im = rng.random_range(-1.0..1.0);
                    h[(i, j)] = C64::new(re, im);
                    h[(j, i)] = C64::new(re, -im);
                } else if i == j {
                    h[(i, i)] = C64::new(rng.random_range(-1.0..1.0), 0.0);
                }
            }
        }
        // Remove the trace within the face.
        let tr = h.trace().re / k as f64;
        for i in 0..k {
            h[(i, i)] -= C64::new(tr, 0.0);
        }
        let mut delta = CMat::zeros(12, 12);
        for i in 0..k {
            for j in 0..k {
                let hij = h[(i, j)];
                if hij.re == 0.0 && hij.im == 0.0 {
                    continue;
                }
                for a in 0..12 {
                    for b in 0..12 {
                        delta[(a, b)] += hij * face[i][a] * face[j][b].conj();
                    }
                }
            }
        }
        delta.hermitized()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let mut rng = StdRng::seed_from_u64(0x9rad_check_u64_seed);
        let eps = 1e-5;
        for &p in &[0.12, 0.2, 0.3] {
            let stats = simulate_depolarizing(p).unwrap();
            let grad = gradient(&stats.rho, &maps).unwrap();
            assert!(grad.mat().herm_defect() < 1e-12);
            let delta = face_direction(&mut rng);
            let plus = stats.rho.mat().add(&delta.scale(eps));
            let minus = stats.rho.mat().sub(&delta.scale(eps));
            let fp = objective_with_floor(&plus, &maps, DEFAULT_SPECTRAL_FLOOR).unwrap();
            let fm = objective_with_floor(&minus, &maps, DEFAULT_SPECTRAL_FLOOR).unwrap();
            let numeric = (fp - fm) / (2.0 * eps);
            let analytic = grad.mat().inner_re(&delta);
            let rel = (numeric - analytic).abs() / analytic.abs().max(1e-12);
            assert!(
                rel < 1e-5,
                "p={p}: analytic {analytic:.9e} vs numeric {numeric:.9e} (rel {rel:.2e})"
            );
        }
    }

    #[test]
    fn convexity_probe_on_random_states() {
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let mut rng = StdRng::seed_from_u64(0xc0_4e_11);
        for _ in 0..50 {
            let r1 = random_state(&mut rng, 12);
            let r2 = random_state(&mut rng, 12);
            let f1 = objective_with_floor(&r1, &maps, DEFAULT_SPECTRAL_FLOOR).unwrap();
            let f2 = objective_with_floor(&r2, &maps, DEFAULT_SPECTRAL_FLOOR).unwrap();
            for lam in [0.25, 0.5, 0.75] {
                let mix = r1.scale(lam).add(&r2.scale(1.0 - lam));
                let fm = objective_with_floor(&mix, &maps, DEFAULT_SPECTRAL_FLOOR).unwrap();
                assert!(
                    fm <= lam * f1 + (1.0 - lam) * f2 + 1e-9,
                    "convexity violated: {fm} vs {}",
                    lam * f1 + (1.0 - lam) * f2
                );
            }
        }
    }

    #[test]
    fn singleton_set_converges_immediately() {
        // Complete tomographic pinning of the p = 0.1 state.
        let stats = simulate_depolarizing(0.1).unwrap();
        let rho = &stats.rho;
        let mut eqs = vec![(herm(CMat::identity(12)), 1.0)];
        for q in 0..12usize {
            for qp in q..12usize {
                if q == qp {
                    let mut m = CMat::zeros(12, 12);
                    m[(q, q)] = C64::new(1.0, 0.0);
                    let op = herm(m);
                    let val = op.mat().inner_re(rho.mat());
                    eqs.push((op, val));
                } else {
                    let mut s = CMat::zeros(12, 12);
                    s[(q, qp)] = C64::new(0.5, 0.0);
                    s[(qp, q)] = C64::new(0.5, 0.0);
                    let mut a = CMat::zeros(12, 12);
                    a[(q, qp)] = C64::new(0.0, -0.5);
                    a[(qp, q)] = C64::new(0.0, 0.5);
                    for m in [s, a] {
                        let op = herm(m);
                        let val = op.mat().inner_re(rho.mat());
                        eqs.push((op, val));
                    }
                }
            }
        }
        let cs = ConstraintSet::new(12, eqs, vec![]).unwrap();
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let cfg = SolverConfig {
            max_iterations: 10,
            ..SolverConfig::default()
        };
        let fw = fw_minimize(&cs, &maps, &cfg, Some(rho)).unwrap();
        assert!(fw.iterations <= 2, "iterations {}", fw.iterations);
        let f_direct = objective(rho, &maps).unwrap();
        assert_close(fw.upper_bound, f_direct, 1e-6);
        let lower = certified_lower_bound(&fw.rho_star, &cs, &maps).unwrap();
        assert_close(lower, f_direct, 1e-5);
    }

    #[test]
    fn fw_descends_monotonically_with_certified_bounds() {
        let (cs, rho) = depolarizing_set(0.1);
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let cfg = SolverConfig {
            max_iterations: 40,
            ..SolverConfig::default()
        };
        let (rho_star, report) = minimize_with_certificate(&cs, &maps, &cfg, Some(&rho)).unwrap();
        assert!(report.lower_bound <= report.upper_bound + 1e-9);
        assert!(report.gap.is_finite() && report.gap >= -1e-9);
        assert!(cs.residual(rho_star.mat()) < 1e-7);
        // Upper bound can never exceed the starting objective (monotone).
        let f0 = objective(&rho, &maps).unwrap();
        assert!(report.upper_bound <= f0 + 1e-12);
    }

    #[test]
    fn perfect_channel_key_bit_is_certified() {
        let (cs, rho) = depolarizing_set(0.0);
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let cfg = SolverConfig::default();
        let (rho_star, report) = minimize_with_certificate(&cs, &maps, &cfg, Some(&rho)).unwrap();
        assert_close(report.lower_bound, 0.5, 0.01);
        assert_close(report.upper_bound, 0.5, 0.01);
        // First-order optimality at the converged iterate.
        let grad = gradient(&rho_star, &maps).unwrap();
        let sub = linear_sdp_minimize(&grad, &cs).unwrap();
        let descent = grad.mat().inner_re(sub.sigma.mat()) - grad.mat().inner_re(rho_star.mat());
        assert!(descent >= -1e-4, "descent direction remains: {descent}");
    }

    #[test]
    fn solver_is_deterministic() {
        let (cs, rho) = depolarizing_set(0.1);
        let maps = build_gz_maps(BobSpace::Qubit).unwrap();
        let cfg = SolverConfig {
            max_iterations: 15,
            ..SolverConfig::default()
        };
        let (_, r1) = minimize_with_certificate(&cs, &maps, &cfg, Some(&rho)).unwrap();
        let (_, r2) = minimize_with_certificate(&cs, &maps, &cfg, Some(&rho)).unwrap();
        assert_eq!(r1.upper_bound.to_bits(), r2.upper_bound.to_bits());
        assert_eq!(r1.lower_bound.to_bits(), r2.lower_bound.to_bits());
        assert_eq!(r1.iterations, r2.iterations);
    }

    #[test]
    fn feasible_init_accepts_hint_and_solves_without_one() {
        let (cs, rho) = depolarizing_set(0.1);
        let with_hint = feasible_init(&cs, Some(&rho)).unwrap();
        assert!(with_hint.mat().max_abs_diff(rho.mat()) == 0.0);
        let without = feasible_init(&cs, None).unwrap();
        assert!(cs.residual(without.mat()) < 1e-7ered);
    }

    #[test]
    fn perturbed_constraints_are_infeasible() {
        let (cs, _) = depolarizing_set(0.1);
        let mut eqs = cs.equalities.clone();
        // Shift one outcome expectation far outside anything a state can do
        // while the remaining rows still sum to the trace.
        let idx = 3;
        eqs[idx].1 += 0.1;
        let bad = ConstraintSet::new(12, eqs, cs.intervals.clone()).unwrap();
        match feasible_init(&bad, None) {
            Err(Error::Infeasible { .. }) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }
}
