//! Dense complex linear algebra sized for protocol-scale operators.
//!
//! All matrices are row-major `Complex64` with explicit dimensions. The
//! routines are deterministic by construction: fixed iteration orders, no
//! randomized pivoting, no intra-operation parallelism, so identical inputs
//! give bit-identical outputs on every run.
//!
//! Register-ordering convention used across the crate: composite systems are
//! indexed with the *last* factor fastest, so for dims `[d0, d1, d2]` the
//! flat index is `(i0*d1 + i1)*d2 + i2`. All tensor products and partial
//! traces follow that convention.

mod eig;

pub use eig::{hermitian_eigensystem, hermitian_eigenvalues};

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;

/// Working scalar type of the whole crate.
pub type C64 = Complex64;

/// Max-norm hermiticity defect accepted by [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Trace defect accepted by [`DensityOperator::new`].
pub const TRACE_TOL: f64 = 1e-10;
/// Most-negative eigenvalue accepted for a state to count as PSD.
pub const PSD_TOL: f64 = 1e-10;
/// Kraus (sub)normalization defect accepted by [`KrausChannel::new`].
pub const KRAUS_TOL: f64 = 1e-10;
/// Eigenvalues below this are a hard error for operator logarithms.
pub const LOG_NEG_TOL: f64 = 1e-8;
/// Probability mass outside the second argument's support that
/// [`relative_entropy`] tolerates before declaring a violation.
pub const SUPPORT_LEAK_TOL: f64 = 1e-9;
/// Gram determinants at or below this are treated as linear dependence.
pub const GRAM_DET_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Matrix type
// ---------------------------------------------------------------------------

/// Dense row-major complex matrix.
///
/// Indexing panics on out-of-range access; dimension mismatches in the
/// arithmetic methods panic as well, since they are programmer errors rather
/// than data-dependent conditions. Fallible, data-dependent validation lives
/// in the typed wrappers below.
#[derive(Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMat({}x{})", self.rows, self.cols)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Square diagonal matrix from real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let mut m = CMat::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// Column vector (n x 1) from a slice.
    pub fn col_vector(v: &[C64]) -> Self {
        CMat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape");
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub shape");
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> CMat {
        self.scale_c(C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `self * other`, plain triple loop in cache-friendly order.
    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "mul inner dimension");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == C64::ZERO {
                    continue;
                }
                let orow = i * out.cols;
                let brow = k * other.cols;
                for j in 0..other.cols {
                    out.data[orow + j] += aik * other.data[brow + j];
                }
            }
        }
        out
    }

    /// `(A + A^dag)/2`. Used after every channel application to keep rounding
    /// noise from accumulating in the anti-Hermitian direction.
    pub fn hermitized(&self) -> CMat {
        assert!(self.is_square(), "hermitized needs a square matrix");
        let mut out = CMat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)].conj());
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "diff shape");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Hermiticity defect `max |A - A^dag|` of a square matrix.
    pub fn herm_defect(&self) -> f64 {
        assert!(self.is_square(), "herm_defect needs a square matrix");
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Real part of the Hilbert-Schmidt inner product `<A, B> = Tr(A^dag B)`.
    pub fn inner_re(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "inner shape");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// `|u><v|` outer product.
pub fn outer(u: &[C64], v: &[C64]) -> CMat {
    let mut m = CMat::zeros(u.len(), v.len());
    for (i, a) in u.iter().enumerate() {
        for (j, b) in v.iter().enumerate() {
            m[(i, j)] = a * b.conj();
        }
    }
    m
}

/// Kronecker (tensor) product with the last factor indexed fastest.
pub fn tensor_product(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.rows * b.rows, a.cols * b.cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let aij = a[(ia, ja)];
            if aij == C64::ZERO {
                continue;
            }
            for ib in 0..b.rows {
                let orow = (ia * b.rows + ib) * out.cols + ja * b.cols;
                let brow = ib * b.cols;
                for jb in 0..b.cols {
                    out.data[orow + jb] += aij * b.data[brow + jb];
                }
            }
        }
    }
    out
}

/// Tensor product of kets.
pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Partial trace
// ---------------------------------------------------------------------------

/// Offsets of every multi-index over `dims_sel` inside the flat index space
/// described by `strides_sel`.
fn subsystem_offsets(dims_sel: &[usize], strides_sel: &[usize]) -> Vec<usize> {
    let total: usize = dims_sel.iter().product();
    let mut out = Vec::with_capacity(total.max(1));
    for mut idx in 0..total.max(1) {
        if dims_sel.is_empty() {
            out.push(0);
            break;
        }
        let mut off = 0;
        for pos in (0..dims_sel.len()).rev() {
            off += (idx % dims_sel[pos]) * strides_sel[pos];
            idx /= dims_sel[pos];
        }
        out.push(off);
    }
    out
}

fn split_keep(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>, Vec<usize>)> {
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter {
                name: "keep",
                detail: "subsystem indices must be strictly increasing".into(),
            });
        }
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::InvalidParameter {
            name: "keep",
            detail: format!("subsystem index out of range for {} factors", dims.len()),
        });
    }
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let kept_strides: Vec<usize> = keep.iter().map(|&k| strides[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let traced_strides: Vec<usize> = traced.iter().map(|&k| strides[k]).collect();
    Ok((kept_dims, kept_strides, traced_dims, traced_strides))
}

/// Partial trace of a square operator over the subsystems *not* listed in
/// `keep`. `dims` are the tensor factor dimensions in register order and must
/// multiply to the operator dimension; `keep` is strictly increasing.
pub fn partial_trace(a: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if !a.is_square() || a.rows != total {
        return Err(Error::Dimension {
            context: "partial_trace",
            expected: total,
            got: a.rows,
        });
    }
    let (kept_dims, kept_strides, traced_dims, traced_strides) = split_keep(dims, keep)?;
    let kept_offsets = subsystem_offsets(&kept_dims, &kept_strides);
    let traced_offsets = subsystem_offsets(&traced_dims, &traced_strides);

    let dk: usize = kept_dims.iter().product();
    let mut out = CMat::zeros(dk, dk);
    for (mi, &ri) in kept_offsets.iter().enumerate() {
        for (mj, &rj) in kept_offsets.iter().enumerate() {
            let mut acc = C64::ZERO;
            for &t in &traced_offsets {
                acc += a[(ri + t, rj + t)];
            }
            out[(mi, mj)] = acc;
        }
    }
    Ok(out)
}

/// `Tr_traced( sum_K K rho K^dag )` without materializing the full-size
/// intermediate. `out_dims` describe the Kraus output space; `keep` selects
/// the factors of that space to retain. Needed because composite announcement
/// maps blow up to thousands of dimensions while their traced output is tiny.
pub fn apply_and_trace(
    kraus: &[CMat],
    rho: &CMat,
    out_dims: &[usize],
    keep: &[usize],
) -> Result<CMat> {
    let total: usize = out_dims.iter().product();
    let (kept_dims, kept_strides, traced_dims, traced_strides) = split_keep(out_dims, keep)?;
    let kept_offsets = subsystem_offsets(&kept_dims, &kept_strides);
    let traced_offsets = subsystem_offsets(&traced_dims, &traced_strides);
    let dk: usize = kept_dims.iter().product();
    let mut out = CMat::zeros(dk, dk);

    for k in kraus {
        if k.rows != total || k.cols != rho.rows || !rho.is_square() {
            return Err(Error::Dimension {
                context: "apply_and_trace",
                expected: total,
                got: k.rows,
            });
        }
        let b = k.mul(rho); // (total x d)
        let d = rho.rows;
        for (mi, &ri) in kept_offsets.iter().enumerate() {
            for (mj, &rj) in kept_offsets.iter().enumerate() {
                let mut acc = C64::ZERO;
                for &t in &traced_offsets {
                    let brow = (ri + t) * d;
                    let krow = (rj + t) * d;
                    for a in 0..d {
                        acc += b.data[brow + a] * k.data[krow + a].conj();
                    }
                }
                out[(mi, mj)] += acc;
            }
        }
    }
    Ok(out.hermitized())
}

// ---------------------------------------------------------------------------
// Spectral functions
// ---------------------------------------------------------------------------

/// Base-2 operator logarithm with a spectral floor.
///
/// Eigenvalues are clamped below by `floor` (> 0) before the log, which keeps
/// states with numerically-zero eigenvalues inside the differentiable domain.
/// Eigenvalues below `-1e-8` mean the input genuinely is not PSD and produce
/// an error instead of being masked by the clamp.
pub fn matrix_log2(a: &CMat, floor: f64) -> Result<CMat> {
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter {
            name: "floor",
            detail: format!("spectral floor must be positive, got {floor:.3e}"),
        });
    }
    let (vals, v) = hermitian_eigensystem(a)?;
    if let Some(&worst) = vals.first() {
        if worst < -LOG_NEG_TOL {
            return Err(Error::NegativeEigenvalue {
                context: "matrix_log2",
                value: worst,
            });
        }
    }
    let logs: Vec<f64> = vals.iter().map(|&x| x.max(floor).log2()).collect();
    Ok(v.mul(&CMat::diag_real(&logs)).mul(&v.dagger()).hermitized())
}

/// Quantum relative entropy `D(rho || sigma)` in bits.
///
/// Errors with [`Error::SupportViolation`] when more than [`SUPPORT_LEAK_TOL`]
/// of `rho`'s mass lies outside `sigma`'s support (where the entropy is
/// `+inf`), and with [`Error::NotPositive`] when either input has an
/// eigenvalue below `-1e-8`.
pub fn relative_entropy(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if !rho.is_square() || !sigma.is_square() || rho.rows != sigma.rows {
        return Err(Error::Dimension {
            context: "relative_entropy",
            expected: rho.rows,
            got: sigma.rows,
        });
    }
    let rvals = hermitian_eigenvalues(rho)?;
    let (svals, svecs) = hermitian_eigensystem(sigma)?;
    for (vals, ctx) in [(&rvals, "relative_entropy rho"), (&svals, "relative_entropy sigma")] {
        if let Some(&min) = vals.first() {
            if min < -LOG_NEG_TOL {
                return Err(Error::NotPositive {
                    context: ctx,
                    min_eig: min,
                });
            }
        }
    }
    let smax = svals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = 1e-12 * smax;

    // <v_j| rho |v_j> for every eigenvector of sigma.
    let d = rho.rows;
    let mut weights = vec![0.0f64; d];
    for j in 0..d {
        let mut acc = C64::ZERO;
        for r in 0..d {
            let mut rowdot = C64::ZERO;
            for c in 0..d {
                rowdot += rho[(r, c)] * svecs[(c, j)];
            }
            acc += svecs[(r, j)].conj() * rowdot;
        }
        weights[j] = acc.re.max(0.0);
    }

    let leaked: f64 = svals
        .iter()
        .zip(weights.iter())
        .filter(|(s, _)| **s <= cut)
        .map(|(_, w)| *w)
        .sum();
    if leaked > SUPPORT_LEAK_TOL {
        return Err(Error::SupportViolation { leaked });
    }

    let h_rho: f64 = rvals
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum();
    let cross: f64 = svals
        .iter()
        .zip(weights.iter())
        .filter(|(s, _)| **s > cut)
        .map(|(s, w)| w * s.log2())
        .sum();
    Ok(h_rho - cross)
}

// ---------------------------------------------------------------------------
// Orthonormalization
// ---------------------------------------------------------------------------

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Determinant by LU with partial pivoting. Small systems only.
fn det_lu(g: &CMat) -> C64 {
    let n = g.rows;
    let mut a = g.clone();
    let mut det = C64::ONE;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[(col, col)].norm();
        for r in (col + 1)..n {
            let m = a[(r, col)].norm();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best == 0.0 {
            return C64::ZERO;
        }
        if piv != col {
            for c in 0..n {
                let tmp = a[(col, c)];
                a[(col, c)] = a[(piv, c)];
                a[(piv, c)] = tmp;
            }
            det = -det;
        }
        let diag = a[(col, col)];
        det *= diag;
        for r in (col + 1)..n {
            let f = a[(r, col)] / diag;
            if f == C64::ZERO {
                continue;
            }
            for c in col..n {
                let sub = f * a[(col, c)];
                a[(r, c)] -= sub;
            }
        }
    }
    det
}

/// Modified Gram-Schmidt with a second orthogonalization pass.
///
/// Rejects linearly dependent input families by checking `|det Gram|` against
/// [`GRAM_DET_TOL`] before orthogonalizing, so near-dependence fails loudly
/// instead of returning a garbage basis.
pub fn gram_schmidt(vectors: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let len = vectors[0].len();
    if vectors.iter().any(|v| v.len() != len) || vectors.len() > len {
        return Err(Error::Dimension {
            context: "gram_schmidt",
            expected: len,
            got: vectors.len(),
        });
    }
    let n = vectors.len();
    let gram = CMat::from_fn(n, n, |i, j| dot(&vectors[i], &vectors[j]));
    let gdet = det_lu(&gram).norm();
    if gdet <= GRAM_DET_TOL {
        return Err(Error::LinearDependence { gram_det: gdet });
    }

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    for v in vectors {
        let mut w = v.clone();
        // Two passes of MGS; the second mops up the O(eps * condition) error
        // of the first.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q.iter()) {
                    *wi -= c * qi;
                }
            }
        }
        let norm = dot(&w, &w).re.sqrt();
        if norm <= GRAM_DET_TOL {
            return Err(Error::LinearDependence { gram_det: gdet });
        }
        for wi in w.iter_mut() {
            *wi /= norm;
        }
        basis.push(w);
    }
    Ok(basis)
}

// ---------------------------------------------------------------------------
// Validated operator types
// ---------------------------------------------------------------------------

/// Square matrix validated (and stored) as Hermitian.
#[derive(Clone, Debug)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    /// Validates squareness and a hermiticity defect below
    /// [`HERMITICITY_TOL`], then stores the symmetrized matrix.
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension {
                context: "HermitianOperator",
                expected: mat.rows,
                got: mat.cols,
            });
        }
        let defect = mat.herm_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                context: "HermitianOperator",
                deviation: defect,
            });
        }
        Ok(HermitianOperator {
            mat: mat.hermitized(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn eigensystem(&self) -> Result<(Vec<f64>, CMat)> {
        hermitian_eigensystem(&self.mat)
    }
}

/// Positive-semidefinite operator with a pinned trace.
///
/// `trace_target` is usually 1, but subnormalized conditional states carry
/// their own target.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: HermitianOperator,
    trace_target: f64,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator, trace_target: f64) -> Result<Self> {
        let tr = op.mat().trace().re;
        if (tr - trace_target).abs() > TRACE_TOL {
            return Err(Error::TraceMismatch {
                got: tr,
                want: trace_target,
            });
        }
        let vals = hermitian_eigenvalues(op.mat())?;
        if let Some(&min) = vals.first() {
            if min < -PSD_TOL {
                return Err(Error::NotPositive {
                    context: "DensityOperator",
                    min_eig: min,
                });
            }
        }
        Ok(DensityOperator { op, trace_target })
    }

    /// Unit-trace state from a raw matrix.
    pub fn from_mat(mat: CMat) -> Result<Self> {
        DensityOperator::new(HermitianOperator::new(mat)?, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn mat(&self) -> &CMat {
        self.op.mat()
    }

    pub fn trace_target(&self) -> f64 {
        self.trace_target
    }
}

/// Whether a channel must preserve trace exactly or may only shrink it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    TracePreserving,
    TraceNonincreasing,
}

/// Completely positive map in Kraus form, `rho -> sum_i K_i rho K_i^dag`.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    ops: Vec<CMat>,
    kind: ChannelKind,
}

impl KrausChannel {
    /// Validates shapes and the normalization `sum K^dag K == I` (trace
    /// preserving) or `<= I` in the PSD order (trace nonincreasing), both to
    /// [`KRAUS_TOL`].
    pub fn new(ops: Vec<CMat>, kind: ChannelKind) -> Result<Self> {
        let first = ops.first().ok_or(Error::InvalidParameter {
            name: "ops",
            detail: "a Kraus channel needs at least one operator".into(),
        })?;
        let (dim_out, dim_in) = (first.rows, first.cols);
        for k in &ops {
            if k.rows != dim_out || k.cols != dim_in {
                return Err(Error::Dimension {
                    context: "KrausChannel",
                    expected: dim_out,
                    got: k.rows,
                });
            }
        }
        let mut s = CMat::zeros(dim_in, dim_in);
        for k in &ops {
            s = s.add(&k.dagger().mul(k));
        }
        match kind {
            ChannelKind::TracePreserving => {
                let dev = s.max_abs_diff(&CMat::identity(dim_in));
                if dev > KRAUS_TOL {
                    return Err(Error::KrausNormalization {
                        context: "trace preserving",
                        deviation: dev,
                    });
                }
            }
            ChannelKind::TraceNonincreasing => {
                let vals = hermitian_eigenvalues(&s.hermitized())?;
                let overshoot = vals.last().copied().unwrap_or(0.0) - 1.0;
                if overshoot > KRAUS_TOL {
                    return Err(Error::KrausNormalization {
                        context: "trace nonincreasing",
                        deviation: overshoot,
                    });
                }
            }
        }
        Ok(KrausChannel {
            dim_in,
            dim_out,
            ops,
            kind,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    /// `sum_i K_i a K_i^dag`, re-symmetrized.
    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        if !a.is_square() || a.rows != self.dim_in {
            return Err(Error::Dimension {
                context: "KrausChannel::apply",
                expected: self.dim_in,
                got: a.rows,
            });
        }
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.ops {
            out = out.add(&k.mul(a).mul(&k.dagger()));
        }
        Ok(out.hermitized())
    }

    /// Heisenberg-picture adjoint `sum_i K_i^dag a K_i`, re-symmetrized.
    /// Satisfies `<apply(rho), A> == <rho, apply_adjoint(A)>`.
    pub fn apply_adjoint(&self, a: &CMat) -> Result<CMat> {
        if !a.is_square() || a.rows != self.dim_out {
            return Err(Error::Dimension {
                context: "KrausChannel::apply_adjoint",
                expected: self.dim_out,
                got: a.rows,
            });
        }
        let mut out = CMat::zeros(self.dim_in, self.dim_in);
        for k in &self.ops {
            out = out.add(&k.dagger().mul(a).mul(k));
        }
        Ok(out.hermitized())
    }
}

// ---------------------------------------------------------------------------
// Test support
// ---------------------------------------------------------------------------

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    pub fn assert_close(a: f64, b: f64, tol: f64) {
        assert!(
            (a - b).abs() <= tol,
            "expected {b:.15e}, got {a:.15e} (tol {tol:.1e})"
        );
    }

    pub fn random_cmat(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> CMat {
        CMat::from_fn(rows, cols, |_, _| {
            C64::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        })
    }

    pub fn random_hermitian(rng: &mut impl Rng, d: usize, scale: f64) -> CMat {
        random_cmat(rng, d, d, scale).hermitized()
    }

    /// Random full-rank density matrix via G G^dag / Tr.
    pub fn random_state(rng: &mut impl Rng, d: usize) -> CMat {
        let g = random_cmat(rng, d, d, 1.0);
        let m = g.mul(&g.dagger());
        let tr = m.trace().re;
        m.scale(1.0 / tr)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
