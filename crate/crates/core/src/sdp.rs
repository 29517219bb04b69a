//! A self-contained conic solver for the SDP family used by the
//! group-sparse selector:
//!
//! ```text
//! minimize   <objective_v, V> + <objective_u, U>
//! subject to <A_j, V> = b_j                      (trace equalities)
//!            U[r,s] >= |V[p,q]|                  (max-norm couplings)
//!            V PSD
//! ```
//!
//! `V` is parameterized by its scaled upper triangle (svec) and `U` by its
//! plain upper triangle. Each absolute-value coupling expands into two
//! linear inequalities. The whole program is put in the standard conic form
//! `min c'x  s.t.  Ax + s = b, s in K` with `K` a product of the zero cone
//! (equalities), the nonnegative orthant (expanded couplings), and the PSD
//! cone (an identity block mapping svec(V) into the slack).
//!
//! The solver is plain two-block ADMM: the affine step solves the normal
//! equations with a cached Cholesky factor of `A'A` (which is independent
//! of the penalty parameter, so residual-balancing updates are free), and
//! the cone step projects the PSD block with a symmetric eigendecomposition.
//! Constraint rows are diagonally equilibrated before solving.
//!
//! One workspace per solve; independent solves may run concurrently. The
//! workspace can be reused across solves that share the constraints and
//! only change the objective (the reweighting loop does this).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_sub, backward_sub_t, jacobi_eigen};
use crate::mat::{Mat, SymMat};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// One trace equality `<a, V> = b`.
#[derive(Debug, Clone)]
pub struct EqConstraint {
    pub a: SymMat,
    pub b: f64,
}

/// One max-norm coupling `U[u_row, u_col] >= |V[v_row, v_col]|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coupling {
    pub v_row: usize,
    pub v_col: usize,
    pub u_row: usize,
    pub u_col: usize,
}

/// The SDP instance described in the module docs.
#[derive(Debug, Clone)]
pub struct SdrProgram {
    pub n_v: usize,
    pub n_u: usize,
    pub objective_v: SymMat,
    pub objective_u: SymMat,
    pub eq_constraints: Vec<EqConstraint>,
    pub abs_couplings: Vec<Coupling>,
}

impl SdrProgram {
    pub fn validate(&self) -> Result<()> {
        if self.objective_v.dim() != self.n_v || self.objective_u.dim() != self.n_u {
            return Err(Error::Dimension("objective matrix dimensions".into()));
        }
        if !self.objective_v.as_mat().is_finite() || !self.objective_u.as_mat().is_finite() {
            return Err(Error::NonFinite("objective matrices".into()));
        }
        for (j, eq) in self.eq_constraints.iter().enumerate() {
            if eq.a.dim() != self.n_v {
                return Err(Error::Dimension(format!("equality constraint {j}")));
            }
        }
        let mut covered = vec![false; self.n_u * (self.n_u + 1) / 2];
        for cp in &self.abs_couplings {
            if cp.v_row >= self.n_v
                || cp.v_col >= self.n_v
                || cp.u_row >= self.n_u
                || cp.u_col >= self.n_u
            {
                return Err(Error::Dimension(format!("coupling index out of range: {cp:?}")));
            }
            covered[tri_index(cp.u_row.min(cp.u_col), cp.u_row.max(cp.u_col), self.n_u)] = true;
        }
        if covered.iter().any(|&c| !c) {
            return Err(Error::InvalidConfig(
                "every U entry must be referenced by at least one coupling".into(),
            ));
        }
        Ok(())
    }
}

/// Solver tolerances and iteration caps.
#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty; adapted by residual balancing.
    pub rho: f64,
    /// Over-relaxation factor.
    pub alpha: f64,
    pub check_every: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings {
            tol_abs: 1e-6,
            tol_rel: 1e-6,
            max_iters: 50_000,
            rho: 1.0,
            alpha: 1.5,
            check_every: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Solver output: `v` is PSD within tolerance, `u` entrywise nonnegative
/// within tolerance, and all constraints hold within `tol_abs`.
#[derive(Debug, Clone)]
pub struct SdrSolution {
    pub v: SymMat,
    pub u: SymMat,
    pub objective: f64,
    pub status: SdpStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

/// Solve a program from scratch.
pub fn solve(program: &SdrProgram, settings: &SdpSettings) -> Result<SdrSolution> {
    let mut ws = SdpWorkspace::new(program)?;
    ws.solve(&program.objective_v, &program.objective_u, settings, false)
}

fn tri_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cone {
    Zero,
    NonNeg,
    Psd,
}

struct Row {
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Constraint-side state reusable across objective changes.
pub struct SdpWorkspace {
    n_v: usize,
    n_u: usize,
    nx: usize,
    rows: Vec<Row>,
    b: Vec<f64>,
    cones: Vec<Cone>,
    /// Per-row equilibration factor; the stored rows are already scaled.
    dscale: Vec<f64>,
    chol: Mat,
    psd_offset: usize,
    // iterate carried over for warm starts
    x: Vec<f64>,
    s: Vec<f64>,
    lam: Vec<f64>,
    rho: f64,
}

impl SdpWorkspace {
    pub fn new(program: &SdrProgram) -> Result<Self> {
        program.validate()?;
        let n_v = program.n_v;
        let n_u = program.n_u;
        let sv = tri_len(n_v);
        let tu = tri_len(n_u);
        let nx = sv + tu;
        let ucol = |r: usize, s: usize| sv + tri_index(r.min(s), r.max(s), n_u);

        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();

        for eq in &program.eq_constraints {
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            for i in 0..n_v {
                for j in i..n_v {
                    let a = eq.a[(i, j)];
                    if a != 0.0 {
                        cols.push(tri_index(i, j, n_v) as u32);
                        vals.push(if i == j { a } else { SQRT2 * a });
                    }
                }
            }
            rows.push(Row { cols, vals });
            b.push(eq.b);
            cones.push(Cone::Zero);
        }

        for cp in &program.abs_couplings {
            let (p, q) = (cp.v_row.min(cp.v_col), cp.v_row.max(cp.v_col));
            let vcol = tri_index(p, q, n_v) as u32;
            let vcoef = if p == q { 1.0 } else { 1.0 / SQRT2 };
            // V[p,q] - U <= 0 and -V[p,q] - U <= 0
            for sign in [1.0, -1.0] {
                rows.push(Row {
                    cols: vec![vcol, ucol(cp.u_row, cp.u_col) as u32],
                    vals: vec![sign * vcoef, -1.0],
                });
                b.push(0.0);
                cones.push(Cone::NonNeg);
            }
        }

        let psd_offset = rows.len();
        for i in 0..sv {
            rows.push(Row {
                cols: vec![i as u32],
                vals: vec![-1.0],
            });
            b.push(0.0);
            cones.push(Cone::Psd);
        }

        // Row equilibration; PSD rows stay at unit scale so the slack block
        // remains a valid svec.
        let mut dscale = vec![1.0; rows.len()];
        for (r, row) in rows.iter_mut().enumerate() {
            if cones[r] == Cone::Psd {
                continue;
            }
            let norm = row.vals.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-300 {
                let d = 1.0 / norm;
                dscale[r] = d;
                for v in &mut row.vals {
                    *v *= d;
                }
                b[r] *= d;
            }
        }

        // Dense A'A and its Cholesky factor.
        let mut ata = Mat::zeros(nx, nx);
        for row in &rows {
            for (i, &ci) in row.cols.iter().enumerate() {
                let vi = row.vals[i];
                for (j, &cj) in row.cols.iter().enumerate() {
                    ata[(ci as usize, cj as usize)] += vi * row.vals[j];
                }
            }
        }
        let chol = match cholesky(&SymMat::new(ata.clone())?) {
            Ok(l) => l,
            Err(_) => {
                for i in 0..nx {
                    ata[(i, i)] += 1e-10;
                }
                cholesky(&SymMat::new(ata)?)?
            }
        };

        let m = rows.len();
        Ok(SdpWorkspace {
            n_v,
            n_u,
            nx,
            rows,
            b,
            cones,
            dscale,
            chol,
            psd_offset,
            x: vec![0.0; nx],
            s: vec![0.0; m],
            lam: vec![0.0; m],
            rho: 1.0,
        })
    }

    /// Cost vector for the current objectives in svec/tri coordinates.
    fn cost(&self, objective_v: &SymMat, objective_u: &SymMat) -> Vec<f64> {
        let mut c = vec![0.0; self.nx];
        let sv = tri_len(self.n_v);
        for i in 0..self.n_v {
            for j in i..self.n_v {
                let o = objective_v[(i, j)];
                c[tri_index(i, j, self.n_v)] = if i == j { o } else { SQRT2 * o };
            }
        }
        for r in 0..self.n_u {
            for s in r..self.n_u {
                let o = objective_u[(r, s)];
                c[sv + tri_index(r, s, self.n_u)] = if r == s { o } else { 2.0 * o };
            }
        }
        c
    }

    fn apply_a(&self, x: &[f64], out: &mut [f64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for (c, v) in row.cols.iter().zip(&row.vals) {
                acc += v * x[*c as usize];
            }
            out[r] = acc;
        }
    }

    fn apply_at(&self, y: &[f64], out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for (r, row) in self.rows.iter().enumerate() {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for (c, v) in row.cols.iter().zip(&row.vals) {
                out[*c as usize] += v * yr;
            }
        }
    }

    fn project_cone(&self, v: &mut [f64]) {
        for r in 0..self.psd_offset {
            match self.cones[r] {
                Cone::Zero => v[r] = 0.0,
                Cone::NonNeg => v[r] = v[r].max(0.0),
                Cone::Psd => unreachable!(),
            }
        }
        // PSD block: unsvec, clamp eigenvalues, svec back.
        let n = self.n_v;
        let block = &mut v[self.psd_offset..];
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let val = block[tri_index(i, j, n)];
                let e = if i == j { val } else { val / SQRT2 };
                m[(i, j)] = e;
                m[(j, i)] = e;
            }
        }
        let (lambdas, q) = jacobi_eigen(&SymMat::new(m).expect("finite PSD block"));
        let mut proj = Mat::zeros(n, n);
        for (k, &lam) in lambdas.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let col = q.col(k);
            for i in 0..n {
                let li = lam * col[i];
                for j in i..n {
                    proj[(i, j)] += li * col[j];
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                block[tri_index(i, j, n)] = if i == j {
                    proj[(i, j)]
                } else {
                    SQRT2 * proj[(i, j)]
                };
            }
        }
    }

    /// Run ADMM with the given objective. With `warm = true` the previous
    /// solve's iterate seeds this one; the constraints must be unchanged.
    pub fn solve(
        &mut self,
        objective_v: &SymMat,
        objective_u: &SymMat,
        settings: &SdpSettings,
        warm: bool,
    ) -> Result<SdrSolution> {
        let c = self.cost(objective_v, objective_u);
        let cnorm = c.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        let m = self.rows.len();
        if !warm {
            self.x = vec![0.0; self.nx];
            self.s = vec![0.0; m];
            self.lam = vec![0.0; m];
            self.rho = settings.rho;
        }
        // lam stores the scaled dual y/rho, so a warm start must keep the
        // rho it was scaled with
        let mut rho = self.rho;
        let alpha = settings.alpha;
        let bnorm = self.b.iter().map(|v| v * v).sum::<f64>().sqrt();

        let mut ax = vec![0.0; m];
        let mut rhs = vec![0.0; self.nx];
        let mut at_ds = vec![0.0; self.nx];
        let mut s_prev = vec![0.0; m];
        let mut status = SdpStatus::MaxIters;
        let mut residuals = Residuals {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: f64::INFINITY,
        };
        let mut iterations = settings.max_iters;

        for iter in 0..settings.max_iters {
            // affine step: A'A x = A'(b - s - lam) - c/rho
            for r in 0..m {
                ax[r] = self.b[r] - self.s[r] - self.lam[r];
            }
            self.apply_at(&ax, &mut rhs);
            for (ri, ci) in rhs.iter_mut().zip(&c) {
                *ri -= ci / rho;
            }
            let y = forward_sub(&self.chol, &rhs);
            self.x = backward_sub_t(&self.chol, &y);
            if self.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverDiverged { iter });
            }
            self.apply_a(&self.x, &mut ax);

            s_prev.copy_from_slice(&self.s);
            for r in 0..m {
                let ax_rel = alpha * ax[r] + (1.0 - alpha) * (self.b[r] - self.s[r]);
                self.s[r] = self.b[r] - ax_rel - self.lam[r];
                self.lam[r] += ax_rel - self.b[r];
            }
            let mut s = std::mem::take(&mut self.s);
            self.project_cone(&mut s);
            self.s = s;
            for r in 0..m {
                self.lam[r] += self.s[r];
            }

            if (iter + 1) % settings.check_every == 0 || iter + 1 == settings.max_iters {
                // primal residual in unscaled row units
                let mut pri = 0.0;
                for r in 0..m {
                    let e = (ax[r] + self.s[r] - self.b[r]) / self.dscale[r];
                    pri += e * e;
                }
                let pri = pri.sqrt();
                let ds: Vec<f64> = self
                    .s
                    .iter()
                    .zip(&s_prev)
                    .map(|(a, b)| a - b)
                    .collect();
                self.apply_at(&ds, &mut at_ds);
                let dua = rho * at_ds.iter().map(|v| v * v).sum::<f64>().sqrt();

                let pri_obj: f64 = c.iter().zip(&self.x).map(|(a, b)| a * b).sum();
                let dual_obj: f64 =
                    -rho * self.b.iter().zip(&self.lam).map(|(a, b)| a * b).sum::<f64>();
                let gap = (pri_obj - dual_obj).abs();

                let ax_norm = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s_norm = self.s.iter().map(|v| v * v).sum::<f64>().sqrt();
                let eps_pri =
                    settings.tol_abs + settings.tol_rel * ax_norm.max(s_norm).max(bnorm);
                let eps_dua = (settings.tol_abs + settings.tol_rel) * cnorm;
                let eps_gap = settings.tol_abs
                    + 10.0 * settings.tol_rel * pri_obj.abs().max(dual_obj.abs());

                residuals = Residuals {
                    primal: pri,
                    dual: dua,
                    gap,
                };
                log::trace!(
                    "admm iter={} rho={rho:.3e} pri={pri:.3e}/{eps_pri:.3e} dua={dua:.3e}/{eps_dua:.3e} gap={gap:.3e}/{eps_gap:.3e} obj={pri_obj:.6e}",
                    iter + 1
                );
                if pri <= eps_pri && dua <= eps_dua && gap <= eps_gap {
                    status = SdpStatus::Optimal;
                    iterations = iter + 1;
                    break;
                }
                if !pri.is_finite() || !dua.is_finite() {
                    return Err(Error::SolverDiverged { iter });
                }
                // crude divergence heuristic: iterates far beyond any
                // feasible scale signal an infeasible/unbounded program
                let xnorm = self.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if xnorm > 1e12 * (1.0 + bnorm) {
                    status = SdpStatus::Infeasible;
                    iterations = iter + 1;
                    break;
                }

                // Residual balancing on threshold-relative residuals: each
                // residual is measured against its own stopping tolerance so
                // a large cost scale cannot mask a diverged dual. The factor
                // targets the geometric balance point and only fires on a
                // 5x imbalance; fixed doubling at every check can lock into
                // a limit cycle that never converges. The normal-equation
                // factor does not depend on rho, so rescaling is cheap.
                // lam stores y/rho and must keep y fixed across the change.
                let pri_rel = pri / eps_pri;
                let dua_rel = dua / eps_dua;
                if pri_rel > 0.0 && dua_rel > 0.0 {
                    let factor = (pri_rel / dua_rel).sqrt().clamp(1e-2, 1e2);
                    if !(0.2..=5.0).contains(&factor) {
                        let new_rho = (rho * factor).clamp(1e-6, 1e6);
                        let applied = new_rho / rho;
                        if applied != 1.0 {
                            rho = new_rho;
                            for l in &mut self.lam {
                                *l /= applied;
                            }
                        }
                    }
                }
            }
        }

        self.rho = rho;
        let (v, u) = self.extract();
        if status == SdpStatus::Infeasible {
            return Ok(SdrSolution {
                v,
                u,
                objective: f64::NAN,
                status,
                residuals,
                iterations,
            });
        }
        let objective = objective_v.dot(&v) + objective_u.dot(&u);
        Ok(SdrSolution {
            v,
            u,
            objective,
            status,
            residuals,
            iterations,
        })
    }

    /// Rebuild V (from the PSD slack block, exactly PSD) and U (from x).
    fn extract(&self) -> (SymMat, SymMat) {
        let n = self.n_v;
        let block = &self.s[self.psd_offset..];
        let mut v = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let raw = block[tri_index(i, j, n)];
                let e = if i == j { raw } else { raw / SQRT2 };
                v[(i, j)] = e;
                v[(j, i)] = e;
            }
        }
        let sv = tri_len(n);
        let mut u = Mat::zeros(self.n_u, self.n_u);
        for r in 0..self.n_u {
            for s in r..self.n_u {
                let e = self.x[sv + tri_index(r, s, self.n_u)];
                u[(r, s)] = e;
                u[(s, r)] = e;
            }
        }
        (
            SymMat::new(v).expect("finite V"),
            SymMat::new(u).expect("finite U"),
        )
    }
}

/// Write a plain-text dump of a program for cross-checking against external
/// solvers. Format: one header line, then `objective_v` and `objective_u`
/// as dense rows, then one line per equality (`eq <b> <dense upper
/// triangle of A>`), then one line per coupling (`abs v_row v_col u_row
/// u_col`).
pub fn dump_program(program: &SdrProgram, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(
        out,
        "sdr n_v={} n_u={} eqs={} couplings={}",
        program.n_v,
        program.n_u,
        program.eq_constraints.len(),
        program.abs_couplings.len()
    )
    .unwrap();
    let dump_mat = |out: &mut String, tag: &str, m: &SymMat| {
        for i in 0..m.dim() {
            let row: Vec<String> = (0..m.dim()).map(|j| format!("{}", m[(i, j)])).collect();
            writeln!(out, "{tag} {}", row.join(" ")).unwrap();
        }
    };
    dump_mat(&mut out, "objective_v", &program.objective_v);
    dump_mat(&mut out, "objective_u", &program.objective_u);
    for eq in &program.eq_constraints {
        let mut vals = Vec::new();
        for i in 0..program.n_v {
            for j in i..program.n_v {
                vals.push(format!("{}", eq.a[(i, j)]));
            }
        }
        writeln!(out, "eq {} {}", eq.b, vals.join(" ")).unwrap();
    }
    for cp in &program.abs_couplings {
        writeln!(out, "abs {} {} {} {}", cp.v_row, cp.v_col, cp.u_row, cp.u_col).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `min trace(V) s.t. V[0,0] = 1, V PSD` on a 2x2 variable.
    fn trace_program() -> SdrProgram {
        let mut a = SymMat::zeros(2);
        a.set(0, 0, 1.0);
        SdrProgram {
            n_v: 2,
            n_u: 1,
            objective_v: SymMat::identity(2),
            objective_u: SymMat::zeros(1),
            eq_constraints: vec![EqConstraint { a, b: 1.0 }],
            abs_couplings: vec![Coupling {
                v_row: 0,
                v_col: 0,
                u_row: 0,
                u_col: 0,
            }],
        }
    }

    #[test]
    fn minimal_trace_program() {
        let sol = solve(&trace_program(), &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-4, "objective {}", sol.objective);
        assert!((sol.v[(0, 0)] - 1.0).abs() < 1e-4);
        assert!(sol.v[(1, 1)].abs() < 1e-4);
    }

    #[test]
    fn coupling_forces_u() {
        // min U[0,0] s.t. V[0,0] = 1 and U[0,0] >= |V[0,0]|
        let mut program = trace_program();
        program.objective_v = SymMat::zeros(2);
        program.objective_u = SymMat::from_diag(&[1.0]);
        let sol = solve(&program, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.u[(0, 0)] - 1.0).abs() < 1e-4, "U00 = {}", sol.u[(0, 0)]);
    }

    #[test]
    fn returned_v_is_psd() {
        let sol = solve(&trace_program(), &SdpSettings::default()).unwrap();
        let (lambdas, _) = jacobi_eigen(&sol.v);
        for l in lambdas {
            assert!(l >= -1e-5, "eigenvalue {l}");
        }
    }

    #[test]
    fn objective_u_monotonicity() {
        // increasing every entry of objective_u never decreases the optimum
        let mut program = trace_program();
        program.objective_u = SymMat::from_diag(&[1.0]);
        let lo = solve(&program, &SdpSettings::default()).unwrap().objective;
        program.objective_u = SymMat::from_diag(&[2.0]);
        let hi = solve(&program, &SdpSettings::default()).unwrap().objective;
        assert!(hi >= lo - 1e-6, "lo {lo} hi {hi}");
    }

    #[test]
    fn validate_requires_u_coverage() {
        let mut program = trace_program();
        program.n_u = 2;
        program.objective_u = SymMat::zeros(2);
        assert!(program.validate().is_err());
    }
}
