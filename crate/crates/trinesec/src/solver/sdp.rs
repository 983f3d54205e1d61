//! Dense primal-dual interior-point solver for linear objectives over the
//! cone PSD(d) + nonnegative scalars, subject to equality rows.
//!
//! This is the linear oracle behind the Frank-Wolfe loop and the dual
//! certificate. Problems are tiny (d <= 18, a few dozen rows), so everything
//! is dense, deterministic, and double precision: HKM search direction with
//! a Mehrotra predictor-corrector and an infeasible start.
//!
//! Interval constraints `lo <= <Omega, X> <= hi` enter through two slack
//! scalars per interval: `<Omega, X> - u = lo` and `u + v = hi - lo`.

use super::ConstraintSet;
use crate::error::{Error, Result};
use crate::matcore::{hermitian_eigenvalues, C64, CMat, DensityOperator, HermitianOperator};

/// Width below which an interval is treated as an equality; keeps the slack
/// block away from an empty interior.
const DEGENERATE_WIDTH: f64 = 1e-12;

/// Dual multipliers for a solved linear SDP, in the constraint-set layout:
/// `y` per equality, `z`/`w` per interval lower/upper side (both >= 0).
#[derive(Clone, Debug)]
pub struct DualPoint {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    /// `sum y*gamma + sum (z*lo - w*hi)`, recomputed from the multipliers.
    pub value: f64,
}

/// Primal-dual solution of `min <C, X>` over the constraint set.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub sigma: DensityOperator,
    pub dual: DualPoint,
    pub objective: f64,
    pub iterations: usize,
}

// ---------------------------------------------------------------------------
// Cone points and rows
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct ConePoint {
    mat: CMat,
    diag: Vec<f64>,
}

impl ConePoint {
    fn identity(dim: usize, ell: usize) -> Self {
        ConePoint {
            mat: CMat::identity(dim),
            diag: vec![1.0; ell],
        }
    }

    fn inner(&self, other: &ConePoint) -> f64 {
        let mut v = self.mat.inner_re(&other.mat);
        for (a, b) in self.diag.iter().zip(&other.diag) {
            v += a * b;
        }
        v
    }
}

/// One equality row over the cone: `<mat, X_psd> + sum g_t x_t = rhs`.
struct Row {
    mat: CMat,
    diag: Vec<(usize, f64)>,
    rhs: f64,
}

fn row_dot(row: &Row, p: &ConePoint) -> f64 {
    let mut v = row.mat.inner_re(&p.mat);
    for &(t, g) in &row.diag {
        v += g * p.diag[t];
    }
    v
}

fn row_gram(a: &Row, b: &Row) -> f64 {
    let mut v = a.mat.inner_re(&b.mat);
    for &(t, ga) in &a.diag {
        for &(t2, gb) in &b.diag {
            if t == t2 {
                v += ga * gb;
            }
        }
    }
    v
}

/// `Re Tr(a b)` without forming the product.
fn trace_prod_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.rows;
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            let av = a[(p, q)];
            if av.re == 0.0 && av.im == 0.0 {
                continue;
            }
            let bv = b[(q, p)];
            acc += av.re * bv.re - av.im * bv.im;
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Dense linear algebra helpers
// ---------------------------------------------------------------------------

fn cholesky_lower(a: &CMat) -> Result<CMat> {
    let n = a.rows;
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 {
            return Err(Error::NotPositive {
                context: "interior-point cholesky",
                min_eig: d,
            });
        }
        let dj = d.sqrt();
        l[(j, j)] = C64::new(dj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
fn forward_solve(l: &CMat, b: &CMat) -> CMat {
    let n = l.rows;
    let m = b.cols;
    let mut x = b.clone();
    for col in 0..m {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

fn pd_inverse(a: &CMat) -> Result<CMat> {
    let l = cholesky_lower(a)?;
    let linv = forward_solve(&l, &CMat::identity(a.rows));
    Ok(linv.dagger().mul(&linv).hermitized())
}

/// Largest step `alpha` keeping `m + alpha dm` positive semidefinite.
fn max_step_psd(m: &CMat, dm: &CMat) -> Result<f64> {
    let l = cholesky_lower(m)?;
    let linv = forward_solve(&l, &CMat::identity(m.rows));
    let s = linv.mul(dm).mul(&linv.dagger()).hermitized();
    let lam = hermitian_eigenvalues(&s)?[0];
    Ok(if lam >= -1e-14 { f64::INFINITY } else { -1.0 / lam })
}

fn max_step_diag(x: &[f64], dx: &[f64]) -> f64 {
    let mut a = f64::INFINITY;
    for (v, dv) in x.iter().zip(dx) {
        if *dv < 0.0 {
            a = a.min(-v / dv);
        }
    }
    a
}

/// Real dense LU with partial pivoting, reusable for several solves.
struct LuFactors {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl LuFactors {
    fn factor(mut m: Vec<Vec<f64>>) -> Result<Self> {
        let n = m.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale: f64 = m
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .max(1.0);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            if m[piv][col].abs() < 1e-14 * scale {
                return Err(Error::Convergence {
                    what: "interior-point schur factorization",
                    detail: format!("pivot {:.3e} at column {col}", m[piv][col]),
                });
            }
            m.swap(col, piv);
            perm.swap(col, piv);
            let inv = 1.0 / m[col][col];
            for i in col + 1..n {
                let f = m[i][col] * inv;
                m[i][col] = f;
                for j in col + 1..n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
        Ok(LuFactors { lu: m, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                x[i] -= self.lu[i][k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.lu[i][k] * x[k];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Row selection
// ---------------------------------------------------------------------------

/// Greedy Gram-pivoted selection of a linearly independent row subset.
/// A dropped row must be consistent with the kept ones, otherwise the
/// constraint system has no solution at all.
fn select_rows(rows: &[Row]) -> Result<Vec<usize>> {
    let mut kept: Vec<usize> = Vec::new();
    let mut gram_kept: Vec<Vec<f64>> = Vec::new(); // growing Gram of kept rows
    for (i, row) in rows.iter().enumerate() {
        let gii = row_gram(row, row);
        let cross: Vec<f64> = kept.iter().map(|&k| row_gram(&rows[k], row)).collect();
        let (res2, coeffs) = if kept.is_empty() {
            (gii, Vec::new())
        } else {
            let lu = LuFactors::factor(gram_kept.clone())?;
            let c = lu.solve(&cross);
            let proj: f64 = c.iter().zip(&cross).map(|(a, b)| a * b).sum();
            (gii - proj, c)
        };
        if res2 > 1e-10 * gii.max(1.0) {
            kept.push(i);
            for (r, &k) in gram_kept.iter_mut().zip(&kept) {
                r.push(row_gram(&rows[k], row));
            }
            let mut new_row: Vec<f64> = kept[..kept.len() - 1]
                .iter()
                .map(|&k| row_gram(&rows[k], row))
                .collect();
            new_row.push(gii);
            gram_kept.push(new_row);
        } else {
            let implied: f64 = coeffs
                .iter()
                .zip(&kept)
                .map(|(c, &k)| c * rows[k].rhs)
                .sum();
            if (row.rhs - implied).abs() > 1e-8 * row.rhs.abs().max(1.0) {
                return Err(Error::Infeasible {
                    detail: format!(
                        "constraint row {i} is dependent but inconsistent: \
                         rhs {:.6e} vs implied {:.6e}",
                        row.rhs, implied
                    ),
                });
            }
        }
    }
    Ok(kept)
}

// ---------------------------------------------------------------------------
// Interior-point core
// ---------------------------------------------------------------------------

struct IpmOutcome {
    x: ConePoint,
    y: Vec<f64>,
    iterations: usize,
    primal_obj: f64,
    primal_res: f64,
    rel_gap: f64,
}

const IPM_MAX_ITER: usize = 150;

fn solve_ipm(dim: usize, ell: usize, rows: &[Row], cost: &CMat) -> Result<IpmOutcome> {
    let m = rows.len();
    let total_dim = (dim + ell) as f64;
    let mut x = ConePoint::identity(dim, ell);
    let mut z = ConePoint::identity(dim, ell);
    let mut y = vec![0.0; m];
    let cnorm = 1.0 + cost.fro_norm();
    let mut slow_steps = 0usize;

    let mut last: Option<IpmOutcome> = None;
    for iter in 0..IPM_MAX_ITER {
        let rp: Vec<f64> = rows.iter().map(|r| r.rhs - row_dot(r, &x)).collect();
        let mut rd_mat = cost.sub(&z.mat);
        let mut rd_diag: Vec<f64> = z.diag.iter().map(|v| -v).collect();
        for (i, row) in rows.iter().enumerate() {
            if y[i] != 0.0 {
                rd_mat = rd_mat.sub(&row.mat.scale(y[i]));
                for &(t, g) in &row.diag {
                    rd_diag[t] -= y[i] * g;
                }
            }
        }
        let mu = x.inner(&z) / total_dim;
        let pobj = cost.inner_re(&x.mat);
        let dobj: f64 = y.iter().zip(rows).map(|(yi, r)| yi * r.rhs).sum();
        let pinf = rp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dinf = rd_mat
            .fro_norm()
            .max(rd_diag.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

        last = Some(IpmOutcome {
            x: x.clone(),
            y: y.clone(),
            iterations: iter,
            primal_obj: pobj,
            primal_res: pinf,
            rel_gap,
        });
        if pinf < 1e-9 && dinf / cnorm < 1e-9 && rel_gap < 1e-9 {
            return Ok(last.unwrap());
        }
        // A diverging dual objective with stuck primal residual is the
        // infeasible-start method's signature of primal infeasibility.
        if dobj.abs() > 1e8 * cnorm && pinf > 1e-6 {
            return Err(Error::Infeasible {
                detail: format!(
                    "dual objective diverged ({dobj:.3e}) with primal residual {pinf:.3e}"
                ),
            });
        }

        // Factorizations shared by predictor and corrector.
        let zinv = pd_inverse(&z.mat)?;
        let yj: Vec<CMat> = rows
            .iter()
            .map(|r| x.mat.mul(&r.mat).mul(&zinv))
            .collect();
        let mut schur = vec![vec![0.0f64; m]; m];
        for i in 0..m {
            for j in 0..m {
                let mut v = trace_prod_re(&rows[i].mat, &yj[j]);
                for &(t, gi) in &rows[i].diag {
                    for &(t2, gj) in &rows[j].diag {
                        if t == t2 {
                            v += gi * gj * x.diag[t] / z.diag[t];
                        }
                    }
                }
                schur[i][j] = v;
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                let s = 0.5 * (schur[i][j] + schur[j][i]);
                schur[i][j] = s;
                schur[j][i] = s;
            }
        }
        let lu = LuFactors::factor(schur)?;

        let solve_direction = |tau_mu: f64,
                               corr: Option<(&CMat, &[f64])>|
         -> Result<(ConePoint, Vec<f64>, ConePoint)> {
            let mut r_mat = zinv
                .scale(tau_mu)
                .sub(&x.mat)
                .sub(&x.mat.mul(&rd_mat).mul(&zinv));
            let mut r_diag: Vec<f64> = (0..ell)
                .map(|t| {
                    (tau_mu - x.diag[t] * z.diag[t]) / z.diag[t]
                        - x.diag[t] * rd_diag[t] / z.diag[t]
                })
                .collect();
            if let Some((cm, cd)) = corr {
                r_mat = r_mat.sub(&cm.mul(&zinv));
                for t in 0..ell {
                    r_diag[t] -= cd[t] / z.diag[t];
                }
            }
            // For Hermitian A, Re Tr(A M) equals Re Tr(A H(M)); skip the
            // explicit symmetrization of r_mat here.
            let rhs: Vec<f64> = (0..m)
                .map(|i| {
                    let mut v = rp[i] - trace_prod_re(&rows[i].mat, &r_mat);
                    for &(t, g) in &rows[i].diag {
                        v -= g * r_diag[t];
                    }
                    v
                })
                .collect();
            let dy = lu.solve(&rhs);
            let mut dz_mat = rd_mat.clone();
            let mut dz_diag = rd_diag.clone();
            for (i, row) in rows.iter().enumerate() {
                dz_mat = dz_mat.sub(&row.mat.scale(dy[i]));
                for &(t, g) in &row.diag {
                    dz_diag[t] -= dy[i] * g;
                }
            }
            let mut dx_mat = r_mat;
            for (i, yji) in yj.iter().enumerate() {
                dx_mat = dx_mat.add(&yji.scale(dy[i]));
            }
            let dx_diag: Vec<f64> = (0..ell)
                .map(|t| {
                    let mut v = r_diag[t];
                    for (i, row) in rows.iter().enumerate() {
                        for &(t2, g) in &row.diag {
                            if t2 == t {
                                v += dy[i] * g * x.diag[t] / z.diag[t];
                            }
                        }
                    }
                    v
                })
                .collect();
            Ok((
                ConePoint {
                    mat: dx_mat.hermitized(),
                    diag: dx_diag,
                },
                dy,
                ConePoint {
                    mat: dz_mat.hermitized(),
                    diag: dz_diag,
                },
            ))
        };

        // Mehrotra predictor.
        let (dxa, _dya, dza) = solve_direction(0.0, None)?;
        let apa = max_step_psd(&x.mat, &dxa.mat)?
            .min(max_step_diag(&x.diag, &dxa.diag))
            .min(1.0 / 0.98)
            * 0.98;
        let ada = max_step_psd(&z.mat, &dza.mat)?
            .min(max_step_diag(&z.diag, &dza.diag))
            .min(1.0 / 0.98)
            * 0.98;
        let xa = ConePoint {
            mat: x.mat.add(&dxa.mat.scale(apa)),
            diag: x
                .diag
                .iter()
                .zip(&dxa.diag)
                .map(|(v, d)| v + apa * d)
                .collect(),
        };
        let za = ConePoint {
            mat: z.mat.add(&dza.mat.scale(ada)),
            diag: z
                .diag
                .iter()
                .zip(&dza.diag)
                .map(|(v, d)| v + ada * d)
                .collect(),
        };
        let mu_aff = xa.inner(&za) / total_dim;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 1.0);

        // Corrector.
        let corr_mat = dxa.mat.mul(&dza.mat);
        let corr_diag: Vec<f64> = dxa
            .diag
            .iter()
            .zip(&dza.diag)
            .map(|(a, b)| a * b)
            .collect();
        let (dx, dy, dz) = solve_direction(sigma * mu, Some((&corr_mat, &corr_diag)))?;
        let ap = (max_step_psd(&x.mat, &dx.mat)?.min(max_step_diag(&x.diag, &dx.diag)) * 0.98)
            .min(1.0);
        let ad = (max_step_psd(&z.mat, &dz.mat)?.min(max_step_diag(&z.diag, &dz.diag)) * 0.98)
            .min(1.0);

        x.mat = x.mat.add(&dx.mat.scale(ap)).hermitized();
        for (v, d) in x.diag.iter_mut().zip(&dx.diag) {
            *v += ap * d;
        }
        z.mat = z.mat.add(&dz.mat.scale(ad)).hermitized();
        for (v, d) in z.diag.iter_mut().zip(&dz.diag) {
            *v += ad * d;
        }
        for (v, d) in y.iter_mut().zip(&dy) {
            *v += ad * d;
        }

        if ap < 1e-3 && ad < 1e-3 {
            slow_steps += 1;
        } else {
            slow_steps = 0;
        }
        if slow_steps >= 8 {
            break;
        }
    }

    // Loose exit: accept if the external contract still holds, otherwise
    // classify the failure.
    let out = last.ok_or(Error::Convergence {
        what: "interior-point method",
        detail: "no iterations executed".into(),
    })?;
    if out.primal_res < 1e-8 && out.rel_gap < 1e-7 {
        return Ok(out);
    }
    if out.primal_res > 1e-7 {
        Err(Error::Infeasible {
            detail: format!(
                "primal residual stalled at {:.3e} after {} iterations",
                out.primal_res, out.iterations
            ),
        })
    } else {
        Err(Error::Convergence {
            what: "interior-point method",
            detail: format!(
                "residual {:.3e}, relative gap {:.3e} after {} iterations",
                out.primal_res, out.rel_gap, out.iterations
            ),
        })
    }
}

// ---------------------------------------------------------------------------
// Public entry point
// ---------------------------------------------------------------------------

/// Minimizes `<C, X>` over `X >= 0` subject to the constraint set.
///
/// Returns a primal-feasible point (constraint residual < 1e-8, smallest
/// eigenvalue > -1e-9) together with dual multipliers whose certified
/// objective matches the primal to < 1e-7 on the internally normalized
/// problem. Deterministic: identical inputs give identical outputs.
pub fn linear_sdp_minimize(c: &HermitianOperator, cs: &ConstraintSet) -> Result<SdpSolution> {
    let d = cs.dim;
    if c.dim() != d {
        return Err(Error::Dimension {
            context: "sdp objective",
            expected: d,
            got: c.dim(),
        });
    }
    let scale = c.mat().fro_norm().max(1.0);
    let cost = c.mat().scale(1.0 / scale);

    // Assemble rows: equalities first, then per interval a lower row and a
    // cap row over slack scalars u_j (index j) and v_j (index n_int + j).
    let n_eq = cs.equalities.len();
    let n_int = cs.intervals.len();
    let mut rows: Vec<Row> = Vec::with_capacity(n_eq + 2 * n_int);
    for (g, gamma) in &cs.equalities {
        rows.push(Row {
            mat: g.mat().clone(),
            diag: Vec::new(),
            rhs: *gamma,
        });
    }
    let mut interval_row: Vec<Option<usize>> = vec![None; n_int];
    for (j, (om, lo, hi)) in cs.intervals.iter().enumerate() {
        if hi - lo < DEGENERATE_WIDTH {
            rows.push(Row {
                mat: om.mat().clone(),
                diag: Vec::new(),
                rhs: 0.5 * (lo + hi),
            });
            interval_row[j] = Some(rows.len() - 1);
        }
    }
    let wide: Vec<usize> = (0..n_int)
        .filter(|&j| interval_row[j].is_none())
        .collect();
    let ell = 2 * wide.len();
    for (slot, &j) in wide.iter().enumerate() {
        let (om, lo, hi) = &cs.intervals[j];
        let u = slot;
        let v = wide.len() + slot;
        rows.push(Row {
            mat: om.mat().clone(),
            diag: vec![(u, -1.0)],
            rhs: *lo,
        });
        interval_row[j] = Some(rows.len() - 1);
        rows.push(Row {
            mat: CMat::zeros(d, d),
            diag: vec![(u, 1.0), (v, 1.0)],
            rhs: hi - lo,
        });
    }

    let kept = select_rows(&rows)?;
    let kept_rows: Vec<Row> = kept
        .iter()
        .map(|&i| Row {
            mat: rows[i].mat.clone(),
            diag: rows[i].diag.clone(),
            rhs: rows[i].rhs,
        })
        .collect();

    let out = solve_ipm(d, ell, &kept_rows, &cost)?;

    // Scatter duals back to the full row list, rescale to the original C.
    let mut y_full = vec![0.0; rows.len()];
    for (slot, &i) in kept.iter().enumerate() {
        y_full[i] = out.y[slot] * scale;
    }
    let y: Vec<f64> = (0..n_eq).map(|i| y_full[i]).collect();
    let mut z = vec![0.0; n_int];
    let mut w = vec![0.0; n_int];
    for j in 0..n_int {
        let alpha = y_full[interval_row[j].expect("interval row recorded")];
        z[j] = alpha.max(0.0);
        w[j] = (-alpha).max(0.0);
    }
    let mut value: f64 = y
        .iter()
        .zip(&cs.equalities)
        .map(|(yi, (_, gamma))| yi * gamma)
        .sum();
    for j in 0..n_int {
        let (_, lo, hi) = &cs.intervals[j];
        value += z[j] * lo - w[j] * hi;
    }

    let trace = out.x.mat.trace().re;
    if trace <= 0.0 {
        return Err(Error::NotPositive {
            context: "sdp primal trace",
            min_eig: trace,
        });
    }
    let sigma = DensityOperator::from_mat(out.x.mat.scale(1.0 / trace))?;
    Ok(SdpSolution {
        sigma,
        dual: DualPoint {
            y,
            z,
            w,
            value,
        },
        objective: out.primal_obj * scale,
        iterations: out.iterations,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::test_support::assert_close;
    use crate::matcore::{tensor_product, HermitianOperator};

    fn herm(m: CMat) -> HermitianOperator {
        HermitianOperator::new(m).unwrap()
    }

    fn pauli_z() -> CMat {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(-1.0, 0.0);
        m
    }

    fn pauli_x() -> CMat {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        m[(1, 0)] = C64::new(1.0, 0.0);
        m
    }

    fn pauli_y() -> CMat {
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        m
    }

    fn trace_set(dim: usize) -> (HermitianOperator, f64) {
        (herm(CMat::identity(dim)), 1.0)
    }

    #[test]
    fn identity_objective_returns_trace() {
        let cs = ConstraintSet::new(2, vec![trace_set(2)], vec![]).unwrap();
        let sol = linear_sdp_minimize(&herm(CMat::identity(2)), &cs).unwrap();
        assert_close(sol.objective, 1.0, 1e-7);
    }

    #[test]
    fn pinned_observable_pins_objective() {
        let cs = ConstraintSet::new(
            2,
            vec![trace_set(2), (herm(pauli_z()), 0.3)],
            vec![],
        )
        .unwrap();
        let sol = linear_sdp_minimize(&herm(pauli_z().scale(-1.0)), &cs).unwrap();
        assert_close(sol.objective, -0.3, 1e-7);
    }

    #[test]
    fn unconstrained_direction_reaches_extreme_eigenvalue() {
        let cs = ConstraintSet::new(2, vec![trace_set(2)], vec![]).unwrap();
        let sol = linear_sdp_minimize(&herm(pauli_z()), &cs).unwrap();
        assert_close(sol.objective, -1.0, 1e-6);
        // Minimizer concentrates on |1>.
        assert_close(sol.sigma.mat()[(1, 1)].re, 1.0, 1e-5);
    }

    #[test]
    fn interval_constraint_binds_and_duals_verify() {
        let z_op = herm(pauli_z());
        let cs = ConstraintSet::new(
            2,
            vec![trace_set(2)],
            vec![(z_op.clone(), -0.3, 0.7)],
        )
        .unwrap();
        for (c, want) in [(pauli_z(), -0.3), (pauli_z().scale(-1.0), -0.7)] {
            let sol = linear_sdp_minimize(&herm(c.clone()), &cs).unwrap();
            assert_close(sol.objective, want, 1e-6);
            // Independent dual check: C - y*I - (z-w)*Z >= -1e-9 and the
            // certified value matches the primal objective.
            let mut defect = c.clone();
            defect = defect.sub(&CMat::identity(2).scale(sol.dual.y[0]));
            defect = defect.sub(&pauli_z().scale(sol.dual.z[0] - sol.dual.w[0]));
            let eigs = hermitian_eigenvalues(&defect.hermitized()).unwrap();
            assert!(eigs[0] > -1e-9, "dual infeasible: {:?}", eigs);
            assert!(sol.dual.z[0] >= 0.0 && sol.dual.w[0] >= 0.0);
            assert_close(sol.dual.value, want, 1e-6);
        }
    }

    #[test]
    fn singleton_tomography_reproduces_the_state() {
        // Pin a qubit state by its full Pauli decomposition.
        let mut rho = CMat::zeros(2, 2);
        rho[(0, 0)] = C64::new(0.65, 0.0);
        rho[(1, 1)] = C64::new(0.35, 0.0);
        rho[(0, 1)] = C64::new(0.2, 0.1);
        rho[(1, 0)] = C64::new(0.2, -0.1);
        let obs = [pauli_x(), pauli_y(), pauli_z()];
        let mut eqs = vec![trace_set(2)];
        for o in &obs {
            let val = o.inner_re(&rho);
            eqs.push((herm(o.clone()), val));
        }
        let cs = ConstraintSet::new(2, eqs, vec![]).unwrap();
        let c = herm(pauli_x().add(&pauli_z().scale(0.4)));
        let sol = linear_sdp_minimize(&c, &cs).unwrap();
        assert_close(sol.objective, c.mat().inner_re(&rho), 1e-6);
        assert!(sol.sigma.mat().max_abs_diff(&rho) < 1e-5);
    }

    #[test]
    fn inconsistent_dependent_rows_are_infeasible() {
        let cs = ConstraintSet::new(
            2,
            vec![trace_set(2), (herm(CMat::identity(2)), 1.1)],
            vec![],
        )
        .unwrap();
        match linear_sdp_minimize(&herm(pauli_z()), &cs) {
            Err(Error::Infeasible { .. }) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn psd_infeasible_system_is_detected() {
        // <Z> = 2 is impossible for a unit-trace PSD matrix.
        let cs = ConstraintSet::new(
            2,
            vec![trace_set(2), (herm(pauli_z()), 2.0)],
            vec![],
        )
        .unwrap();
        match linear_sdp_minimize(&herm(pauli_x()), &cs) {
            Err(Error::Infeasible { .. }) => {}
            other => panic!("expected Infeasible, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_interval_acts_as_equality() {
        let cs = ConstraintSet::new(
            2,
            vec![trace_set(2)],
            vec![(herm(pauli_z()), 0.25, 0.25)],
        )
        .unwrap();
        let sol = linear_sdp_minimize(&herm(pauli_z()), &cs).unwrap();
        assert_close(sol.objective, 0.25, 1e-6);
    }

    #[test]
    fn protocol_scale_problem_meets_contracts() {
        use crate::channels::simulate_depolarizing;
        use crate::protocol::{build_observables, BobSpace};
        let stats = simulate_depolarizing(0.1).unwrap();
        let obs = build_observables(BobSpace::Qubit).unwrap();
        let mut eqs = vec![(herm(CMat::identity(12)), 1.0)];
        for o in &obs.outcomes {
            eqs.push((
                herm(o.op.clone()),
                stats.outcomes[o.j][o.k],
            ));
        }
        for t in &obs.thetas {
            eqs.push((herm(t.op.clone()), t.value));
        }
        let cs = ConstraintSet::new(12, eqs, vec![]).unwrap();
        // A structured objective with both signs.
        let c = herm(tensor_product(
            &CMat::identity(6),
            &pauli_z(),
        ));
        let sol = linear_sdp_minimize(&c, &cs).unwrap();
        // Contract checks: residual, PSD, verified dual value below primal.
        let resid = cs.residual(sol.sigma.mat());
        assert!(resid < 2e-8, "residual {resid}");
        let eigs = hermitian_eigenvalues(sol.sigma.mat()).unwrap();
        assert!(eigs[0] > -1e-9);
        assert!(sol.dual.value <= sol.objective + 1e-6);
        // Independent dual feasibility on the original operators.
        let mut defect = c.mat().clone();
        for (yi, (g, _)) in sol.dual.y.iter().zip(&cs.equalities) {
            defect = defect.sub(&g.mat().scale(*yi));
        }
        let eigs = hermitian_eigenvalues(&defect.hermitized()).unwrap();
        assert!(eigs[0] > -1e-7, "dual defect {:.3e}", eigs[0]);
    }
}
