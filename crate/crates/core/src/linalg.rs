//! Dense symmetric linear algebra.
//!
//! Covers everything the selectors need: covariance estimation, Cholesky,
//! a cyclic Jacobi eigensolver, the generalized eigenvalue decomposition
//! (GEVD) of a symmetric-definite pencil via Cholesky whitening, the
//! generalized Rayleigh quotient (GRQ) in dB, and sensor-subset reduction
//! of a covariance pair.
//!
//! All values are immutable after construction and the operations are pure,
//! so concurrent read-only use is safe.

use crate::error::{Error, Result};
use crate::mat::{Mat, SymMat};

/// Problem dimensions: `c` sensors, `l` lags per sensor, `k` filters, and
/// an optional selection budget `m` with `k <= m <= c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemDims {
    pub c: usize,
    pub l: usize,
    pub k: usize,
    pub m: Option<usize>,
}

impl ProblemDims {
    pub fn new(c: usize, l: usize, k: usize) -> Self {
        ProblemDims { c, l, k, m: None }
    }

    pub fn with_budget(c: usize, l: usize, k: usize, m: usize) -> Self {
        ProblemDims { c, l, k, m: Some(m) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 || self.l < 1 || self.k < 1 {
            return Err(Error::InvalidConfig(format!(
                "dimensions must be positive: C={} L={} K={}",
                self.c, self.l, self.k
            )));
        }
        if let Some(m) = self.m {
            if m < self.k || m > self.c {
                return Err(Error::InvalidConfig(format!(
                    "budget M={} must satisfy K={} <= M <= C={}",
                    m, self.k, self.c
                )));
            }
        }
        Ok(())
    }

    /// Spatio-temporal dimension `C*L`.
    pub fn cl(&self) -> usize {
        self.c * self.l
    }
}

/// The two covariance matrices of a discrimination problem, both `CL x CL`.
///
/// Row/column block `c` spans indices `[c*L, (c+1)*L)` for sensor `c`.
#[derive(Debug, Clone)]
pub struct CovariancePair {
    pub dims: ProblemDims,
    pub r1: SymMat,
    pub r2: SymMat,
}

impl CovariancePair {
    /// Build a pair, validating dimensions and positive semidefiniteness of
    /// both matrices (Cholesky with a small pivot tolerance).
    pub fn new(dims: ProblemDims, r1: SymMat, r2: SymMat) -> Result<Self> {
        dims.validate()?;
        let cl = dims.cl();
        if r1.dim() != cl || r2.dim() != cl {
            return Err(Error::Dimension(format!(
                "covariance pair must be {cl}x{cl}, got {}x{} and {}x{}",
                r1.dim(),
                r1.dim(),
                r2.dim(),
                r2.dim()
            )));
        }
        check_psd(&r1, "R1")?;
        check_psd(&r2, "R2")?;
        Ok(CovariancePair { dims, r1, r2 })
    }

    pub fn cl(&self) -> usize {
        self.dims.cl()
    }
}

/// A GEVD result: filterbank `w` (one filter per column), generalized
/// eigenvalues in descending order, and the GRQ of the full bank in dB.
#[derive(Debug, Clone)]
pub struct GevdSolution {
    pub w: Mat,
    pub lambdas: Vec<f64>,
    pub grq_db: f64,
}

/// PSD check via Cholesky of `m + tol*I` with `tol` scaled to the trace.
fn check_psd(m: &SymMat, name: &str) -> Result<()> {
    let n = m.dim();
    let tol = 1e-10 * (m.trace().abs() / n as f64).max(1e-300);
    cholesky(&m.add_diag(tol)).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot, index } => Error::NotPositiveDefinite {
            pivot,
            index, // keep the pivot location, rename the context
        },
        other => other,
    })?;
    log::trace!("{name} passed PSD check");
    Ok(())
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &SymMat) -> Result<Mat> {
    let n = a.dim();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: d, index: j });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `L x = b` for lower-triangular `L`.
pub fn forward_sub(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in 0..n {
        let row = l.row(i);
        let mut s = x[i];
        for k in 0..i {
            s -= row[k] * x[k];
        }
        x[i] = s / row[i];
    }
    x
}

/// Solve `L' x = b` for lower-triangular `L`.
pub fn backward_sub_t(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order with eigenvectors as the columns
/// of the returned matrix. Eigenvector sign is fixed so the entry of largest
/// magnitude is positive, which keeps results deterministic for tests.
pub fn jacobi_eigen(a: &SymMat) -> (Vec<f64>, Mat) {
    let n = a.dim();
    let mut m = a.as_mat().clone();
    let mut q = Mat::identity(n);
    let max_sweeps = 100;

    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let scale = m.frob_norm().max(1e-300);
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m[(p, r)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(r, r)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, r)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, r)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(r, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(r, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkq;
                    q[(k, r)] = s * qkp + c * qkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the whitened-EVD output order on exact ties.
    order.sort_by(|&a, &b| m[(b, b)].partial_cmp(&m[(a, a)]).unwrap());

    let lambdas: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = q.col(i);
        let mut imax = 0;
        for (idx, x) in v.iter().enumerate() {
            if x.abs() > v[imax].abs() {
                imax = idx;
            }
        }
        if v[imax] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        for (row, x) in v.into_iter().enumerate() {
            vecs[(row, col)] = x;
        }
    }
    (lambdas, vecs)
}

/// Sample covariance `(1/T) * X'X` of `samples` with one sample per row.
///
/// Samples are assumed zero-mean; no demeaning is performed. The result is
/// explicitly symmetrized to kill rounding asymmetry.
pub fn estimate_covariance(samples: &Mat) -> Result<SymMat> {
    let t = samples.rows();
    if t < 1 {
        return Err(Error::Dimension("need at least one sample".into()));
    }
    for i in 0..t {
        if samples.row(i).iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("sample row {i}")));
        }
    }
    let n = samples.cols();
    let mut r = Mat::zeros(n, n);
    for ti in 0..t {
        let row = samples.row(ti);
        for i in 0..n {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            let rrow = &mut r;
            for j in i..n {
                rrow[(i, j)] += xi * row[j];
            }
        }
    }
    let inv_t = 1.0 / t as f64;
    let mut full = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = r[(i, j)] * inv_t;
            full[(i, j)] = v;
            full[(j, i)] = v;
        }
    }
    SymMat::new(full)
}

/// Options for [`solve_gevd`]. The default applies no diagonal loading; on
/// Cholesky failure a fallback loading of `1e-12 * trace(R2)/CL` is applied
/// with a logged warning so ill-conditioned pencils keep their unregularized
/// behavior unless recovery is required.
#[derive(Debug, Clone, Copy)]
pub struct GevdOptions {
    /// Diagonal loading added to R2 as `loading * trace(R2)/n`.
    pub loading: f64,
}

impl Default for GevdOptions {
    fn default() -> Self {
        GevdOptions { loading: 0.0 }
    }
}

/// GEVD of the pencil `(R1, R2)`: the `K` generalized eigenvectors with the
/// largest generalized eigenvalues, normalized so `W' R2 W = I_K`.
///
/// Algorithm: Cholesky whitening. With `R2 = L L'`, the eigenpairs of
/// `L^-1 R1 L^-T` give the eigenvalues directly and `W = L^-T Q`.
pub fn solve_gevd(pair: &CovariancePair, k: usize) -> Result<GevdSolution> {
    solve_gevd_with(pair, k, GevdOptions::default())
}

pub fn solve_gevd_with(pair: &CovariancePair, k: usize, opts: GevdOptions) -> Result<GevdSolution> {
    let n = pair.r2.dim();
    if k > n {
        return Err(Error::Dimension(format!(
            "requested K={k} eigenpairs from an {n}x{n} pencil"
        )));
    }
    let base_load = opts.loading * pair.r2.trace() / n as f64;
    let r2 = if base_load != 0.0 {
        pair.r2.add_diag(base_load)
    } else {
        pair.r2.clone()
    };
    let l = match cholesky(&r2) {
        Ok(l) => l,
        Err(Error::NotPositiveDefinite { pivot, .. }) => {
            let fallback = 1e-12 * pair.r2.trace() / n as f64;
            log::warn!(
                "R2 Cholesky failed (pivot {pivot:e}); retrying with diagonal loading {fallback:e}"
            );
            cholesky(&pair.r2.add_diag(fallback))?
        }
        Err(e) => return Err(e),
    };

    // Whitened matrix L^-1 R1 L^-T, built column by column.
    let mut white = Mat::zeros(n, n);
    for j in 0..n {
        let col = pair.r1.as_mat().col(j);
        let y = forward_sub(&l, &col);
        for (i, v) in y.into_iter().enumerate() {
            white[(i, j)] = v;
        }
    }
    let mut whitened = Mat::zeros(n, n);
    for i in 0..n {
        let row: Vec<f64> = (0..n).map(|j| white[(i, j)]).collect();
        let y = forward_sub(&l, &row);
        for (j, v) in y.into_iter().enumerate() {
            whitened[(i, j)] = v;
        }
    }
    let (lambdas, q) = jacobi_eigen(&SymMat::new(whitened)?);

    let mut w = Mat::zeros(n, k);
    for col in 0..k {
        let qc = q.col(col);
        let wc = backward_sub_t(&l, &qc);
        for (i, v) in wc.into_iter().enumerate() {
            w[(i, col)] = v;
        }
    }
    let grq = grq_db(pair, &w)?;
    Ok(GevdSolution {
        w,
        lambdas: lambdas[..k].to_vec(),
        grq_db: grq,
    })
}

/// GRQ of a filterbank in dB: `10*log10(trace(W'R1W)/trace(W'R2W))`.
pub fn grq_db(pair: &CovariancePair, w: &Mat) -> Result<f64> {
    if w.cols() < 1 {
        return Err(Error::Dimension("filterbank must have K >= 1 columns".into()));
    }
    if w.rows() != pair.r1.dim() {
        return Err(Error::Dimension(format!(
            "filterbank has {} rows, pair dimension is {}",
            w.rows(),
            pair.r1.dim()
        )));
    }
    if w.max_abs() == 0.0 {
        return Err(Error::DegenerateFilter("all-zero filterbank".into()));
    }
    let num = quad_trace(&pair.r1, w);
    let den = quad_trace(&pair.r2, w);
    if den <= 0.0 {
        return Err(Error::DegenerateFilter(format!(
            "denominator trace {den:e} is not positive"
        )));
    }
    Ok(10.0 * (num / den).log10())
}

/// `trace(W' A W)`.
fn quad_trace(a: &SymMat, w: &Mat) -> f64 {
    let mut total = 0.0;
    for k in 0..w.cols() {
        let col = w.col(k);
        let av = a.as_mat().matvec(&col);
        total += col.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>();
    }
    total
}

/// Restrict a pair to the given sensors, keeping the full `L x L` lag block
/// for each selected sensor. Block order follows ascending sensor index;
/// the input set is sorted and deduplicated.
pub fn reduce_pair(pair: &CovariancePair, sensors: &[usize]) -> Result<CovariancePair> {
    if sensors.is_empty() {
        return Err(Error::InvalidSensorSet("empty sensor set".into()));
    }
    let mut sel: Vec<usize> = sensors.to_vec();
    sel.sort_unstable();
    sel.dedup();
    if let Some(&bad) = sel.iter().find(|&&s| s >= pair.dims.c) {
        return Err(Error::InvalidSensorSet(format!(
            "sensor {bad} out of range 0..{}",
            pair.dims.c
        )));
    }
    let l = pair.dims.l;
    let m = sel.len();
    let idx: Vec<usize> = sel
        .iter()
        .flat_map(|&s| (0..l).map(move |lag| s * l + lag))
        .collect();
    let take = |src: &SymMat| -> SymMat {
        let mut out = Mat::zeros(m * l, m * l);
        for (i, &pi) in idx.iter().enumerate() {
            for (j, &pj) in idx.iter().enumerate() {
                out[(i, j)] = src[(pi, pj)];
            }
        }
        SymMat::new(out).expect("reduction of a finite symmetric matrix")
    };
    let dims = ProblemDims {
        c: m,
        l,
        k: pair.dims.k,
        m: None,
    };
    Ok(CovariancePair {
        dims,
        r1: take(&pair.r1),
        r2: take(&pair.r2),
    })
}
