//! Photon-number yield bounds from multi-intensity statistics.
//!
//! Each observed outcome probability at intensity `mu` is a Poisson mixture
//! of per-photon-number yields. With a finite cutoff `N` the mixture over
//! `n <= N` brackets the observation: the truncated sum from below, the sum
//! plus the full tail mass from above. Linear programs over the yields then
//! give certified bounds on the single-photon yield.
//!
//! The LP solver is a dense two-phase primal simplex with Bland's rule; at
//! this scale (about a dozen variables and twenty rows) it is exact enough
//! and deterministic.

use crate::channels::OutcomeStats;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Poisson weights
// ---------------------------------------------------------------------------

/// Poisson probability `e^{-mu} mu^n / n!`, computed in log space so large
/// `n` underflows gracefully to zero instead of overflowing the factorial.
pub fn poisson_weight(mu: f64, n: usize) -> f64 {
    if mu < 0.0 {
        return f64::NAN;
    }
    if mu == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    ((n as f64) * mu.ln() - mu - ln_fact).exp()
}

// ---------------------------------------------------------------------------
// Linear programming
// ---------------------------------------------------------------------------

/// Termination state of an LP solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solution of a linear program.
#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
}

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

/// Solves `min (or max) c^T x` subject to `A x <= b`, `x >= 0`.
///
/// Two-phase dense simplex. Bland's rule on both entering and leaving
/// choices guarantees termination under degeneracy at the cost of a few
/// extra pivots, which is irrelevant at this problem size.
pub fn lp_solve(c: &[f64], a: &[Vec<f64>], b: &[f64], maximize: bool) -> Result<LpSolution> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidParameter {
            name: "lp",
            detail: format!("shape mismatch: {} rows, {} rhs, {} objective", m, b.len(), n),
        });
    }
    let obj: Vec<f64> = if maximize {
        c.iter().map(|v| -v).collect()
    } else {
        c.to_vec()
    };

    // Columns: n structural, m slack, then one artificial per negated row.
    // Rows with negative rhs are negated so the tableau rhs is nonnegative;
    // their slack enters with coefficient -1, so an artificial carries the
    // initial basis there.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let mut needs_artificial: Vec<bool> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i] < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = a[i].iter().map(|v| sign * v).collect();
        row.extend(std::iter::repeat(0.0).take(m));
        row[n + i] = sign; // slack for this row
        rows.push(row);
        rhs.push(sign * b[i]);
        needs_artificial.push(flip);
    }
    let mut art_cols: Vec<usize> = Vec::new();
    let total0 = n + m;
    let n_art = needs_artificial.iter().filter(|&&f| f).count();
    let total = total0 + n_art;
    let mut next_art = total0;
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    for i in 0..m {
        for row in rows.iter_mut() {
            row.resize(total, 0.0);
        }
        if needs_artificial[i] {
            rows[i][next_art] = 1.0;
            basis.push(next_art);
            art_cols.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + i);
        }
    }
    for row in rows.iter_mut() {
        row.resize(total, 0.0);
    }

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut phase1 = vec![0.0; total];
        for &col in &art_cols {
            phase1[col] = 1.0;
        }
        let val = simplex_core(&mut rows, &mut rhs, &mut basis, &phase1)?;
        let val = match val {
            CoreResult::Optimal(v) => v,
            CoreResult::Unbounded => {
                return Err(Error::Convergence {
                    what: "lp phase 1",
                    detail: "phase-1 objective unbounded below, tableau corrupt".into(),
                })
            }
        };
        if val > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::NAN,
                x: vec![f64::NAN; n],
            });
        }
        // Pivot lingering artificials out of the basis where possible.
        for i in 0..m {
            if basis[i] >= total0 {
                if let Some(col) = (0..total0).find(|&c| rows[i][c].abs() > PIVOT_TOL) {
                    pivot(&mut rows, &mut rhs, &mut basis, i, col);
                }
                // A row that cannot be pivoted is redundant; its artificial
                // stays basic at zero and phase 2 never increases it because
                // artificial columns are excluded from entering.
            }
        }
    }

    // Phase 2 on the original objective, artificial columns barred.
    let mut phase2 = vec![0.0; total];
    phase2[..n].copy_from_slice(&obj);
    match simplex_core_limited(&mut rows, &mut rhs, &mut basis, &phase2, total0)? {
        CoreResult::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: if maximize {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            x: vec![f64::NAN; n],
        }),
        CoreResult::Optimal(val) => {
            let mut x = vec![0.0; n];
            for (i, &bi) in basis.iter().enumerate() {
                if bi < n {
                    x[bi] = rhs[i];
                }
            }
            let objective = if maximize { -val } else { val };
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective,
                x,
            })
        }
    }
}

enum CoreResult {
    Optimal(f64),
    Unbounded,
}

fn simplex_core(
    rows: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    cost: &[f64],
) -> Result<CoreResult> {
    let total = cost.len();
    simplex_core_limited(rows, rhs, basis, cost, total)
}

/// Simplex iterations with entering columns restricted to `col < col_limit`.
fn simplex_core_limited(
    rows: &mut [Vec<f64>],
    rhs: &mut [f64],
    basis: &mut [usize],
    cost: &[f64],
    col_limit: usize,
) -> Result<CoreResult> {
    let m = rows.len();
    // Reduced costs maintained implicitly: z_j - c_j via basis costs.
    let max_pivots = 200 * (m + col_limit).max(1);
    for _ in 0..max_pivots {
        // Reduced cost of column j: c_j - sum_i c_B[i] * rows[i][j].
        let mut entering: Option<usize> = None;
        for j in 0..col_limit {
            if basis.contains(&j) {
                continue;
            }
            let mut red = cost[j];
            for i in 0..m {
                red -= cost[basis[i]] * rows[i][j];
            }
            if red < -PIVOT_TOL {
                entering = Some(j); // Bland: smallest index wins
                break;
            }
        }
        let Some(col) = entering else {
            let mut val = 0.0;
            for i in 0..m {
                val += cost[basis[i]] * rhs[i];
            }
            return Ok(CoreResult::Optimal(val));
        };
        // Ratio test, Bland tie-break on basis index.
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            if rows[i][col] > PIVOT_TOL {
                let ratio = rhs[i] / rows[i][col];
                let better = ratio < best_ratio - 1e-15
                    || ((ratio - best_ratio).abs() <= 1e-15
                        && leave.map(|l| basis[i] < basis[l]).unwrap_or(false));
                if leave.is_none() || better {
                    if ratio < best_ratio {
                        best_ratio = ratio;
                    }
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Ok(CoreResult::Unbounded);
        };
        pivot(rows, rhs, basis, row, col);
    }
    Err(Error::Convergence {
        what: "simplex",
        detail: "pivot limit exceeded".into(),
    })
}

fn pivot(rows: &mut [Vec<f64>], rhs: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let m = rows.len();
    let piv = rows[row][col];
    let inv = 1.0 / piv;
    for v in rows[row].iter_mut() {
        *v *= inv;
    }
    rhs[row] *= inv;
    for i in 0..m {
        if i == row {
            continue;
        }
        let factor = rows[i][col];
        if factor == 0.0 {
            continue;
        }
        let pivot_row = rows[row].clone();
        for (v, pv) in rows[i].iter_mut().zip(pivot_row.iter()) {
            *v -= factor * pv;
        }
        rhs[i] -= factor * rhs[row];
        if rhs[i].abs() < 1e-13 {
            rhs[i] = 0.0;
        }
    }
    basis[row] = col;
}

// ---------------------------------------------------------------------------
// Yield bounds
// ---------------------------------------------------------------------------

/// Certified interval for one announced-outcome yield.
#[derive(Clone, Copy, Debug)]
pub struct YieldBounds {
    pub j: usize,
    /// Outcome index; 3 is the no-click outcome.
    pub k: usize,
    /// Lower bound on the single-photon yield `o_{j,k,1}`.
    pub lower: f64,
    /// Upper bound on the single-photon yield `o_{j,k,1}`.
    pub upper: f64,
}

/// Default photon-number cutoff for the yield LPs.
pub const DEFAULT_CUTOFF: usize = 10;

/// Bounds the single-photon yields `o_{j,k,1}` for all twelve `(j, k)` pairs
/// (three signals, three click outcomes plus no-click) from observed
/// statistics at each intensity.
///
/// Per intensity the truncated Poisson mixture brackets the observation:
/// `sum_{n<=N} w_n o_n <= o_mu <= sum_{n<=N} w_n o_n + (1 - sum_{n<=N} w_n)`.
pub fn decoy_bounds(
    intensities: &[f64],
    stats: &[OutcomeStats],
    cutoff: usize,
) -> Result<Vec<YieldBounds>> {
    if intensities.is_empty() || intensities.len() != stats.len() {
        return Err(Error::InvalidParameter {
            name: "intensities",
            detail: format!(
                "need matching nonempty intensity and statistics lists, got {} and {}",
                intensities.len(),
                stats.len()
            ),
        });
    }
    if cutoff < 1 {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            detail: "photon-number cutoff must be at least 1".into(),
        });
    }
    for (&mu, st) in intensities.iter().zip(stats) {
        if mu < 0.0 {
            return Err(Error::InvalidParameter {
                name: "intensities",
                detail: format!("negative intensity {mu}"),
            });
        }
        for j in 0..3 {
            for k in 0..4 {
                let o = st.o[j][k];
                if !(-1e-12..=1.0 + 1e-12).contains(&o) {
                    return Err(Error::ObservationInfeasible {
                        j,
                        k,
                        mu,
                        detail: format!("observed probability {o} outside [0, 1]"),
                    });
                }
            }
        }
    }

    let nvars = cutoff + 1;
    let weights: Vec<Vec<f64>> = intensities
        .iter()
        .map(|&mu| (0..nvars).map(|n| poisson_weight(mu, n)).collect())
        .collect();
    let tails: Vec<f64> = weights
        .iter()
        .map(|w| (1.0 - w.iter().sum::<f64>()).max(0.0))
        .collect();

    let mut out = Vec::with_capacity(12);
    for j in 0..3 {
        for k in 0..4 {
            // Rows: per intensity, mixture <= o and -mixture <= tail - o;
            // then upper box bounds o_n <= 1.
            let mut rows: Vec<Vec<f64>> = Vec::new();
            let mut rhs: Vec<f64> = Vec::new();
            for (i, w) in weights.iter().enumerate() {
                let o = stats[i].o[j][k].clamp(0.0, 1.0);
                rows.push(w.clone());
                rhs.push(o);
                rows.push(w.iter().map(|v| -v).collect());
                rhs.push(tails[i] - o);
            }
            for n in 0..nvars {
                let mut row = vec![0.0; nvars];
                row[n] = 1.0;
                rows.push(row);
                rhs.push(1.0);
            }
            let mut objective = vec![0.0; nvars];
            objective[1] = 1.0;

            let lo = lp_solve(&objective, &rows, &rhs, false)?;
            let hi = lp_solve(&objective, &rows, &rhs, true)?;
            for sol in [&lo, &hi] {
                match sol.status {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => {
                        return Err(Error::ObservationInfeasible {
                            j,
                            k,
                            mu: intensities[0],
                            detail: format!(
                                "statistics across intensities {:?} are jointly \
                                 incompatible with a photon-number decomposition",
                                intensities
                            ),
                        });
                    }
                    LpStatus::Unbounded => {
                        return Err(Error::Unbounded {
                            detail: format!("yield LP unbounded for pair ({j}, {k})"),
                        });
                    }
                }
            }
            out.push(YieldBounds {
                j,
                k,
                lower: lo.objective.clamp(0.0, 1.0),
                upper: hi.objective.clamp(0.0, 1.0),
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
