//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.
//!
//! Jacobi is chosen over tridiagonalization because the matrices here are
//! small (dimension at most a few hundred), the method is unconditionally
//! stable, and it is easy to make bit-deterministic: fixed sweep order, no
//! pivot selection, no parallelism. Eigenvectors come out orthonormal to
//! machine precision, which the dual-certificate checks downstream rely on.

use super::CMat;
use crate::error::{Error, Result};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 60;
/// Off-diagonal Frobenius mass, relative to the input norm, at which a sweep
/// pass declares convergence. Quadratic convergence makes the final pass
/// overshoot this by orders of magnitude.
const OFF_TOL: f64 = 1e-14;

/// Full eigensystem of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and a unitary matrix whose columns
/// are the matching eigenvectors, so `a == V diag(vals) V^dag` up to a
/// max-norm defect below 1e-10 for well-scaled inputs. The input is
/// symmetrized as `(A + A^dag)/2` before iterating; callers are expected to
/// pass matrices that are already Hermitian to validation tolerance.
pub fn hermitian_eigensystem(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let (vals, vecs) = jacobi(a, true)?;
    Ok((vals, vecs.expect("vectors requested")))
}

/// Eigenvalues only, ascending. Same iteration as [`hermitian_eigensystem`]
/// without the accumulation of the eigenvector product.
pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    let (vals, _) = jacobi(a, false)?;
    Ok(vals)
}

fn jacobi(a: &CMat, want_vectors: bool) -> Result<(Vec<f64>, Option<CMat>)> {
    if a.rows != a.cols {
        return Err(Error::Dimension {
            context: "hermitian_eigensystem",
            expected: a.rows,
            got: a.cols,
        });
    }
    let d = a.rows;
    if d == 0 {
        return Ok((Vec::new(), want_vectors.then(|| CMat::identity(0))));
    }

    let mut m = a.hermitized();
    let mut v = want_vectors.then(|| CMat::identity(d));

    let anorm = m.fro_norm();
    if anorm == 0.0 || d == 1 {
        let vals = (0..d).map(|i| m[(i, i)].re).collect::<Vec<_>>();
        return Ok((sorted_with(vals, &mut v), v));
    }
    let stop = OFF_TOL * anorm;
    // Entries this small cannot move the spectrum at f64 resolution; skipping
    // them avoids pathological 0/0 phases.
    let skip = 1e-300;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_fro(&m) <= stop {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[(p, q)];
                let abs = apq.norm();
                if abs <= skip {
                    continue;
                }
                let phase = apq / abs;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                rotate(&mut m, p, q, c, s, phase);
                if let Some(vm) = v.as_mut() {
                    rotate_right(vm, p, q, c, s, phase);
                }
            }
        }
    }
    if !converged && off_fro(&m) > stop {
        return Err(Error::Convergence {
            what: "Jacobi eigensolver",
            detail: format!(
                "off-diagonal mass {:.3e} above {:.3e} after {MAX_SWEEPS} sweeps",
                off_fro(&m),
                stop
            ),
        });
    }

    let vals = (0..d).map(|i| m[(i, i)].re).collect::<Vec<_>>();
    let vals = sorted_with(vals, &mut v);
    if let Some(vm) = v.as_mut() {
        normalize_phases(vm);
    }
    Ok((vals, v))
}

/// In-place `M <- J^dag M J` for the complex rotation
/// `J[p,p]=c, J[p,q]=s*phase, J[q,p]=-s*conj(phase), J[q,q]=c`,
/// chosen so the (p,q) entry is annihilated.
fn rotate(m: &mut CMat, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let d = m.rows;
    // Column update M <- M J.
    for k in 0..d {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * phase.conj() * mkq;
        m[(k, q)] = s * phase * mkp + c * mkq;
    }
    // Row update M <- J^dag M.
    for k in 0..d {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * phase * mqk;
        m[(q, k)] = s * phase.conj() * mpk + c * mqk;
    }
    // Pin the algebraic zeros and real diagonals to cut rounding drift.
    m[(p, q)] = Complex64::ZERO;
    m[(q, p)] = Complex64::ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
}

/// In-place `V <- V J` (eigenvector accumulation).
fn rotate_right(v: &mut CMat, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let d = v.rows;
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * phase.conj() * vkq;
        v[(k, q)] = s * phase * vkp + c * vkq;
    }
}

fn off_fro(m: &CMat) -> f64 {
    let d = m.rows;
    let mut acc = 0.0;
    for p in 0..d {
        for q in 0..d {
            if p != q {
                acc += m[(p, q)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Sorts eigenvalues ascending and applies the same permutation to the
/// eigenvector columns. Ties keep their pre-sort order, so results are
/// reproducible bit for bit.
fn sorted_with(vals: Vec<f64>, v: &mut Option<CMat>) -> Vec<f64> {
    let d = vals.len();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    if let Some(vm) = v.as_mut() {
        let orig = vm.clone();
        for (new_col, &old_col) in idx.iter().enumerate() {
            for r in 0..d {
                vm[(r, new_col)] = orig[(r, old_col)];
            }
        }
    }
    idx.into_iter().map(|i| vals[i]).collect()
}

/// Rotates each eigenvector's global phase so its largest-modulus entry is
/// real and nonnegative. Purely cosmetic for correctness, but it makes
/// eigenvectors comparable across code paths in tests.
fn normalize_phases(v: &mut CMat) {
    let d = v.rows;
    for col in 0..v.cols {
        let mut best = 0usize;
        let mut best_mod = -1.0f64;
        for r in 0..d {
            let m = v[(r, col)].norm();
            if m > best_mod + 1e-15 {
                best_mod = m;
                best = r;
            }
        }
        if best_mod <= 0.0 {
            continue;
        }
        let ph = v[(best, col)] / best_mod;
        if ph.norm() == 0.0 {
            continue;
        }
        let corr = ph.conj();
        for r in 0..d {
            let x = v[(r, col)] * corr;
            v[(r, col)] = x;
        }
        // Force the anchor entry exactly real.
        let anchor = v[(best, col)];
        v[(best, col)] = Complex64::new(anchor.norm() * anchor.re.signum(), 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::test_support::{assert_close, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_matrix_passes_through() {
        let mut a = CMat::zeros(3, 3);
        a[(0, 0)] = Complex64::new(2.0, 0.0);
        a[(1, 1)] = Complex64::new(-1.0, 0.0);
        a[(2, 2)] = Complex64::new(0.5, 0.0);
        let (vals, v) = hermitian_eigensystem(&a).unwrap();
        assert_close(vals[0], -1.0, 1e-14);
        assert_close(vals[1], 0.5, 1e-14);
        assert_close(vals[2], 2.0, 1e-14);
        let recon = v.mul(&CMat::diag_real(&vals)).mul(&v.dagger());
        assert!(recon.max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn pauli_y_eigensystem() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = Complex64::new(0.0, -1.0);
        a[(1, 0)] = Complex64::new(0.0, 1.0);
        let (vals, v) = hermitian_eigensystem(&a).unwrap();
        assert_close(vals[0], -1.0, 1e-14);
        assert_close(vals[1], 1.0, 1e-14);
        let recon = v.mul(&CMat::diag_real(&vals)).mul(&v.dagger());
        assert!(recon.max_abs_diff(&a) < 1e-13);
    }

    #[test]
    fn reconstructs_random_hermitian_to_contract_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        for &d in &[2usize, 5, 12, 18, 40, 72] {
            let a = random_hermitian(&mut rng, d, 1.0);
            let (vals, v) = hermitian_eigensystem(&a).unwrap();
            for w in vals.windows(2) {
                assert!(w[0] <= w[1], "eigenvalues must ascend");
            }
            let recon = v.mul(&CMat::diag_real(&vals)).mul(&v.dagger());
            assert!(
                recon.max_abs_diff(&a) < 1e-10,
                "reconstruction defect {:.3e} at d={d}",
                recon.max_abs_diff(&a)
            );
            let gram = v.dagger().mul(&v);
            assert!(gram.max_abs_diff(&CMat::identity(d)) < 1e-12);
        }
    }

    #[test]
    fn matches_nalgebra_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        for &d in &[3usize, 8, 17, 33] {
            let a = random_hermitian(&mut rng, d, 2.0);
            let vals = hermitian_eigenvalues(&a).unwrap();

            let na = nalgebra::DMatrix::from_fn(d, d, |i, j| a[(i, j)]);
            let mut reference: Vec<f64> = na
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            reference.sort_by(f64::total_cmp);
            for (ours, theirs) in vals.iter().zip(reference.iter()) {
                assert_close(*ours, *theirs, 1e-9);
            }
        }
    }

    #[test]
    fn rejects_rectangular_input() {
        let a = CMat::zeros(2, 3);
        assert!(hermitian_eigensystem(&a).is_err());
    }

    #[test]
    fn eigenvalues_only_agrees_with_full_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
        let a = random_hermitian(&mut rng, 24, 1.0);
        let fast = hermitian_eigenvalues(&a).unwrap();
        let (full, _) = hermitian_eigensystem(&a).unwrap();
        for (x, y) in fast.iter().zip(full.iter()) {
            assert_close(*x, *y, 1e-12);
        }
    }
}
