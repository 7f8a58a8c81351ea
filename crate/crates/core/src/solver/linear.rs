//! Linear algebra for the Newton step: the Jacobian has the sparsity of the
//! five-point cylindrical stencil and is symmetric positive definite.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

/// Preconditioner for conjugate gradients in 2D mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preconditioner {
    /// Diagonal scaling.
    Jacobi,
    /// Exact tridiagonal solve along each ζ line (block Jacobi over θ).
    ZetaLine,
    /// Exact solve of the operator with the mass term averaged over θ:
    /// Fourier modes in θ, one tridiagonal solve in ζ per mode.
    #[default]
    Spectral,
}

/// Factorized θ-Fourier preconditioner: modes `0..=nt/2` suffice for real
/// data.
struct Spectral {
    nz: usize,
    nt: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Thomas factors per mode, `[i * nm + m]`.
    inv_denom: Vec<f64>,
    upper: Vec<f64>,
    zc: Vec<f64>,
}

impl Spectral {
    fn new(m: &StencilMatrix) -> Self {
        let (nz, nt) = (m.nz, m.nt);
        let nm = nt / 2 + 1;
        let dth = 2.0 * std::f64::consts::PI / nt as f64;
        let lam: Vec<f64> = (0..nm).map(|k| 2.0 * (k as f64 * dth).cos()).collect();
        let dbar: Vec<f64> = m
            .diag
            .chunks_exact(nt)
            .map(|row| row.iter().sum::<f64>() / nt as f64)
            .collect();
        let mut inv_denom = vec![0.0; nz * nm];
        let mut upper = vec![0.0; nz * nm];
        for (k, lk) in lam.iter().enumerate() {
            let mut prev_upper = 0.0;
            for i in 0..nz {
                let d = dbar[i] + m.tc[i] * lk;
                let denom = if i == 0 { d } else { d - m.zc[i - 1] * prev_upper };
                inv_denom[i * nm + k] = 1.0 / denom;
                if i + 1 < nz {
                    prev_upper = m.zc[i] / denom;
                    upper[i * nm + k] = prev_upper;
                }
            }
        }
        let mut planner = FftPlanner::new();
        Spectral {
            nz,
            nt,
            fwd: planner.plan_fft_forward(nt),
            inv: planner.plan_fft_inverse(nt),
            inv_denom,
            upper,
            zc: m.zc.clone(),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64], buf: &mut [Complex64]) {
        let (nz, nt) = (self.nz, self.nt);
        let nm = nt / 2 + 1;
        for (b, x) in buf.iter_mut().zip(r) {
            *b = Complex64::new(*x, 0.0);
        }
        self.fwd.process(buf);
        for k in 0..nm {
            buf[k] *= self.inv_denom[k];
            for i in 1..nz {
                let prev = buf[(i - 1) * nt + k];
                let c = &mut buf[i * nt + k];
                *c = (*c - prev * self.zc[i - 1]) * self.inv_denom[i * nm + k];
            }
            for i in (0..nz - 1).rev() {
                let next = buf[(i + 1) * nt + k];
                buf[i * nt + k] -= next * self.upper[i * nm + k];
            }
        }
        for row in buf.chunks_exact_mut(nt) {
            for k in nm..nt {
                row[k] = row[nt - k].conj();
            }
        }
        self.inv.process(buf);
        let scale = 1.0 / nt as f64;
        for (zk, b) in z.iter_mut().zip(buf.iter()) {
            *zk = b.re * scale;
        }
    }
}

/// `J = diag + dt K` on unknown rows `0..nz` (the Dirichlet row excluded),
/// stored by its diagonal and the two off-diagonal stencil weights.
#[derive(Debug, Clone)]
pub(crate) struct StencilMatrix {
    pub nz: usize,
    pub nt: usize,
    /// `nz * nt`, row-major (ζ outer).
    pub diag: Vec<f64>,
    /// Coupling between rows `i` and `i + 1`, `nz - 1` entries.
    pub zc: Vec<f64>,
    /// Coupling between θ neighbours on row `i`, `nz` entries.
    pub tc: Vec<f64>,
}

impl StencilMatrix {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nz, nt) = (self.nz, self.nt);
        for i in 0..nz {
            for j in 0..nt {
                let k = i * nt + j;
                let mut s = self.diag[k] * x[k];
                if i > 0 {
                    s += self.zc[i - 1] * x[k - nt];
                }
                if i + 1 < nz {
                    s += self.zc[i] * x[k + nt];
                }
                if nt > 1 {
                    let jp = if j + 1 == nt { 0 } else { j + 1 };
                    let jm = if j == 0 { nt - 1 } else { j - 1 };
                    s += self.tc[i] * (x[i * nt + jp] + x[i * nt + jm]);
                }
                y[k] = s;
            }
        }
    }

    /// Solves one ζ line `j` with the Thomas algorithm, ignoring θ coupling.
    fn solve_line(&self, j: usize, rhs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        let (nz, nt) = (self.nz, self.nt);
        // forward sweep; scratch holds the modified super-diagonal
        let mut denom = self.diag[j];
        out[j] = rhs[j] / denom;
        for i in 1..nz {
            scratch[i - 1] = self.zc[i - 1] / denom;
            denom = self.diag[i * nt + j] - self.zc[i - 1] * scratch[i - 1];
            out[i * nt + j] = (rhs[i * nt + j] - self.zc[i - 1] * out[(i - 1) * nt + j]) / denom;
        }
        for i in (0..nz - 1).rev() {
            out[i * nt + j] -= scratch[i] * out[(i + 1) * nt + j];
        }
    }

    /// Direct solve; exact when `nt == 1`.
    pub fn solve_radial(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.nt, 1);
        let mut out = vec![0.0; rhs.len()];
        let mut scratch = vec![0.0; self.nz];
        self.solve_line(0, rhs, &mut out, &mut scratch);
        out
    }

    fn precondition(
        &self,
        pc: Preconditioner,
        spectral: Option<&Spectral>,
        r: &[f64],
        z: &mut [f64],
        scratch: &mut [f64],
        buf: &mut [Complex64],
    ) {
        if let Some(sp) = spectral {
            sp.apply(r, z, buf);
            return;
        }
        match pc {
            Preconditioner::Jacobi => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(&self.diag) {
                    *z = r / d;
                }
            }
            Preconditioner::ZetaLine | Preconditioner::Spectral => {
                for j in 0..self.nt {
                    self.solve_line(j, r, z, scratch);
                }
            }
        }
    }

    /// Preconditioned conjugate gradients from a zero initial guess.
    /// Returns the solution and the iteration count.
    pub fn pcg(
        &self,
        b: &[f64],
        pc: Preconditioner,
        rel_tol: f64,
        max_iter: usize,
    ) -> (Vec<f64>, usize, bool) {
        let n = b.len();
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z = vec![0.0; n];
        let spectral = (pc == Preconditioner::Spectral && self.nt > 1).then(|| Spectral::new(self));
        let mut scratch = vec![0.0; self.nz];
        let mut buf = vec![Complex64::new(0.0, 0.0); if spectral.is_some() { n } else { 0 }];
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            return (x, 0, true);
        }
        self.precondition(pc, spectral.as_ref(), &r, &mut z, &mut scratch, &mut buf);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for it in 1..=max_iter {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if dot(&r, &r).sqrt() <= rel_tol * bnorm {
                return (x, it, true);
            }
            self.precondition(pc, spectral.as_ref(), &r, &mut z, &mut scratch, &mut buf);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        (x, max_iter, false)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
