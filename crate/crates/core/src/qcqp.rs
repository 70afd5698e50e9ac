//! Numerical kernels: the single-constraint QCQP, Gauss-Seidel block descent over
//! satellites, and the closed-form augmented-Lagrangian step used by PDD consensus.
//!
//! Column costs have the form `w^H A w - 2 Re(b^H w)`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::intermediates::Intermediates;
use crate::C64;

const MAX_DOUBLINGS: u32 = 60;
const MAX_BISECTIONS: usize = 500;
const PSD_SLACK: f64 = 1e-9;
const KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ColumnQuadratic {
    /// Hermitian PSD. Columns sharing the same `Arc` share one decomposition.
    pub a: Arc<DMatrix<C64>>,
    pub b: DVector<C64>,
}

impl ColumnQuadratic {
    pub fn cost(&self, w: &DVector<C64>) -> f64 {
        quad_cost(&self.a, &self.b, w)
    }
}

pub fn quad_cost(a: &DMatrix<C64>, b: &DVector<C64>, w: &DVector<C64>) -> f64 {
    (w.adjoint() * a * w)[(0, 0)].re - 2.0 * b.dotc(w).re
}

/// `sum_l w_l^H G w_l <= budget`.
#[derive(Debug, Clone)]
pub struct PowerConstraint {
    pub gram: DMatrix<C64>,
    pub budget: f64,
}

impl PowerConstraint {
    pub fn power(&self, w: &DMatrix<C64>) -> f64 {
        if w.nrows() == 0 {
            return 0.0;
        }
        (w.adjoint() * &self.gram * w).trace().re
    }
}

#[derive(Debug, Clone)]
pub struct QcqpSolution {
    /// One column per input quadratic.
    pub w: DMatrix<C64>,
    pub lambda: f64,
    pub power: f64,
}

struct Spectral {
    eig: Vec<f64>,
    vecs: DMatrix<C64>,
    kernel: Vec<bool>,
}

fn spectral(a: &DMatrix<C64>, l: &DMatrix<C64>) -> Result<Spectral> {
    let x = l.solve_lower_triangular(a).expect("cholesky factor is invertible");
    let c = l
        .solve_lower_triangular(&x.adjoint())
        .expect("cholesky factor is invertible");
    let c = (&c + c.adjoint()) * C64::from(0.5);
    let se = SymmetricEigen::new(c);
    let scale = se.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let min = se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_SLACK * scale {
        return Err(Error::NotPsd { min_eig: min, scale });
    }
    let kernel = se.eigenvalues.iter().map(|&e| e <= KERNEL_TOL * scale).collect();
    Ok(Spectral {
        eig: se.eigenvalues.iter().map(|&e| e.max(0.0)).collect(),
        vecs: se.eigenvectors,
        kernel,
    })
}

struct Prepared {
    spec: usize,
    z: DVector<C64>,
}

/// Minimizes `sum_l (w_l^H A_l w_l - 2 Re(b_l^H w_l))` subject to one power constraint.
///
/// With `G = L L^H` and `L^{-1} A L^{-H} = U diag(e) U^H`, the KKT point for multiplier
/// `lambda` has transmit power `sum |z_i|^2 / (e_i + lambda)^2`, `z = U^H L^{-1} b`, which
/// is monotone in `lambda`; the active case is found by bisection.
pub fn solve_single_constraint_qcqp(cols: &[ColumnQuadratic], con: &PowerConstraint, tol: f64) -> Result<QcqpSolution> {
    let n = con.gram.nrows();
    if !(con.budget > 0.0) {
        return Err(Error::Validation {
            key: "budget".into(),
            reason: format!("must be positive, got {}", con.budget),
        });
    }
    for c in cols {
        if c.a.shape() != (n, n) || c.b.len() != n {
            return Err(Error::Dimension(format!(
                "column quadratic {:?}/{} against gram {n}x{n}",
                c.a.shape(),
                c.b.len()
            )));
        }
    }
    if n == 0 || cols.is_empty() {
        return Ok(QcqpSolution {
            w: DMatrix::zeros(n, cols.len()),
            lambda: 0.0,
            power: 0.0,
        });
    }

    let l = Cholesky::new(con.gram.clone()).ok_or(Error::DegenerateGram)?.unpack();
    let mut specs: Vec<(Arc<DMatrix<C64>>, Spectral)> = Vec::new();
    let mut prepared = Vec::with_capacity(cols.len());
    for c in cols {
        let idx = match specs.iter().position(|(a, _)| Arc::ptr_eq(a, &c.a)) {
            Some(i) => i,
            None => {
                specs.push((c.a.clone(), spectral(&c.a, &l)?));
                specs.len() - 1
            }
        };
        let lb = l.solve_lower_triangular(&c.b).expect("cholesky factor is invertible");
        prepared.push(Prepared {
            spec: idx,
            z: specs[idx].1.vecs.adjoint() * lb,
        });
    }

    let zmax = prepared
        .iter()
        .flat_map(|p| p.z.iter())
        .fold(0.0f64, |m, z| m.max(z.norm()));
    let unbounded = prepared.iter().any(|p| {
        let sp = &specs[p.spec].1;
        p.z.iter()
            .zip(&sp.kernel)
            .any(|(z, &ker)| ker && z.norm() > KERNEL_TOL * zmax)
    });

    let power = |lambda: f64| -> f64 {
        prepared
            .iter()
            .map(|p| {
                let sp = &specs[p.spec].1;
                p.z.iter()
                    .enumerate()
                    .filter(|&(i, _)| lambda > 0.0 || !sp.kernel[i])
                    .map(|(i, z)| z.norm_sqr() / (sp.eig[i] + lambda).powi(2))
                    .sum::<f64>()
            })
            .sum()
    };
    let build = |lambda: f64| -> DMatrix<C64> {
        let cols: Vec<DVector<C64>> = prepared
            .iter()
            .map(|p| {
                let sp = &specs[p.spec].1;
                let y = DVector::from_iterator(
                    n,
                    p.z.iter().enumerate().map(|(i, z)| {
                        if lambda == 0.0 && sp.kernel[i] {
                            C64::new(0.0, 0.0)
                        } else {
                            z / (sp.eig[i] + lambda)
                        }
                    }),
                );
                l.adjoint()
                    .solve_upper_triangular(&(&sp.vecs * y))
                    .expect("cholesky factor is invertible")
            })
            .collect();
        DMatrix::from_columns(&cols)
    };

    if !unbounded {
        let p0 = power(0.0);
        if p0 <= con.budget {
            return Ok(QcqpSolution {
                w: build(0.0),
                lambda: 0.0,
                power: p0,
            });
        }
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut p_hi = power(hi);
    let mut doublings = 0;
    while p_hi > con.budget {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::BracketFailure { doublings });
        }
        lo = hi;
        hi *= 2.0;
        p_hi = power(hi);
        doublings += 1;
    }
    for _ in 0..MAX_BISECTIONS {
        if (p_hi - con.budget).abs() <= tol * con.budget {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p_mid = power(mid);
        debug_assert!(p_mid >= p_hi * (1.0 - 1e-12));
        if p_mid > con.budget {
            lo = mid;
        } else {
            hi = mid;
            p_hi = p_mid;
        }
    }
    Ok(QcqpSolution {
        w: build(hi),
        lambda: hi,
        power: p_hi,
    })
}

/// One satellite's share of a coupled problem: the columns it may use, their quadratics
/// and its power constraint.
#[derive(Debug, Clone)]
pub struct QcqpBlock {
    /// Indices into `0..num_columns`; other columns are pinned to zero.
    pub columns: Vec<usize>,
    pub cols: Vec<ColumnQuadratic>,
    pub con: PowerConstraint,
}

/// `sum_s sum_c [w_{s,c}^H A w_{s,c} - 2 Re(b^H w_{s,c})] + sum_{s != j} sum_c w_{s,c}^H M_{s,j} w_{j,c}`
/// with `M_{j,s} = M_{s,j}^H`.
#[derive(Debug, Clone)]
pub struct CoupledQcqp {
    pub num_columns: usize,
    pub blocks: Vec<QcqpBlock>,
    /// `cross[s][j]` for `s != j`; `None` means no coupling.
    pub cross: Vec<Vec<Option<DMatrix<C64>>>>,
}

impl CoupledQcqp {
    pub fn objective(&self, w: &[DMatrix<C64>]) -> f64 {
        let mut obj = 0.0;
        for (s, blk) in self.blocks.iter().enumerate() {
            for (c, q) in blk.columns.iter().zip(&blk.cols) {
                obj += q.cost(&w[s].column(*c).into_owned());
            }
            for (j, m) in self.cross[s].iter().enumerate() {
                if let Some(m) = m {
                    if j != s {
                        obj += (w[s].adjoint() * m * &w[j]).trace().re;
                    }
                }
            }
        }
        obj
    }
}

#[derive(Debug, Clone)]
pub struct MultiblockSolution {
    pub w: Vec<DMatrix<C64>>,
    pub rounds: usize,
    pub objective: f64,
}

/// Gauss-Seidel block descent over satellites, each block solved exactly with the others
/// frozen.
pub fn solve_multiblock_qcqp(
    problem: &CoupledQcqp,
    init: Vec<DMatrix<C64>>,
    tol: f64,
    bisect_tol: f64,
    max_rounds: usize,
) -> Result<MultiblockSolution> {
    let mut w = init;
    let mut obj = problem.objective(&w);
    let mut rounds = 0;
    while rounds < max_rounds {
        for (s, blk) in problem.blocks.iter().enumerate() {
            let cols: Vec<ColumnQuadratic> = blk
                .columns
                .iter()
                .zip(&blk.cols)
                .map(|(&c, q)| {
                    let mut b = q.b.clone();
                    for (j, m) in problem.cross[s].iter().enumerate() {
                        if let (Some(m), true) = (m, j != s) {
                            b -= m * w[j].column(c);
                        }
                    }
                    ColumnQuadratic { a: q.a.clone(), b }
                })
                .collect();
            let sol = solve_single_constraint_qcqp(&cols, &blk.con, bisect_tol)?;
            w[s].fill(C64::new(0.0, 0.0));
            for (i, &c) in blk.columns.iter().enumerate() {
                w[s].set_column(c, &sol.w.column(i));
            }
        }
        rounds += 1;
        let next = problem.objective(&w);
        let decrease = obj - next;
        obj = next;
        if problem.blocks.len() <= 1 || decrease <= tol * obj.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(MultiblockSolution {
        w,
        rounds,
        objective: obj,
    })
}

/// Per-user WMMSE receiver and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserWeights {
    pub mu: C64,
    pub nu: f64,
}

/// Minimizer over `Gamma` of
/// `sum_u nu_u [|1 - mu_u F_u|^2 + |mu_u|^2 (P_u + sum_{l != u} Q_{u,l})]
///  + rho/2 sum_s ||Gamma - Gamma_s + Theta_s / rho||^2`
/// subject to `P, Q >= 0`. The problem separates per entry.
pub fn solve_separable_alp(
    weights: &[UserWeights],
    locals: &[Intermediates],
    duals: &[Intermediates],
    rho: f64,
) -> Result<Intermediates> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidPenalty(rho));
    }
    if locals.is_empty() || locals.len() != duals.len() {
        return Err(Error::Dimension(format!(
            "{} local intermediates, {} duals",
            locals.len(),
            duals.len()
        )));
    }
    let nu_count = weights.len();
    let ns = locals.len() as f64;
    let mut out = Intermediates::zeros(nu_count);
    for u in 0..nu_count {
        let UserWeights { mu, nu } = weights[u];
        let c = nu * mu.norm_sqr();
        let f_sum: C64 = locals.iter().zip(duals).map(|(g, t)| g.f[u] - t.f[u] / rho).sum();
        out.f[u] = (mu.conj() * nu + f_sum * (rho / 2.0)) / (c + rho * ns / 2.0);
        let p_mean = locals
            .iter()
            .zip(duals)
            .map(|(g, t)| g.p[u] - t.p[u] / rho)
            .sum::<f64>()
            / ns;
        out.p[u] = (p_mean - c / (rho * ns)).max(0.0);
        for l in 0..nu_count {
            let q_mean = locals
                .iter()
                .zip(duals)
                .map(|(g, t)| g.q[(u, l)] - t.q[(u, l)] / rho)
                .sum::<f64>()
                / ns;
            let lin = if l == u { 0.0 } else { c / (rho * ns) };
            out.q[(u, l)] = (q_mean - lin).max(0.0);
        }
    }
    Ok(out)
}

/// Value of the augmented Lagrangian minimized by [`solve_separable_alp`].
pub fn alp_value(
    weights: &[UserWeights],
    gamma: &Intermediates,
    locals: &[Intermediates],
    duals: &[Intermediates],
    rho: f64,
) -> f64 {
    let mut v = 0.0;
    for (u, w) in weights.iter().enumerate() {
        v += w.nu
            * ((C64::new(1.0, 0.0) - w.mu * gamma.f[u]).norm_sqr()
                + w.mu.norm_sqr() * (gamma.p[u] + gamma.interference(u)));
    }
    for (g, t) in locals.iter().zip(duals) {
        let d = gamma.axpy(-1.0, g).axpy(1.0 / rho, t);
        v += rho / 2.0
            * (d.f.iter().map(|z| z.norm_sqr()).sum::<f64>()
                + d.p.iter().map(|x| x * x).sum::<f64>()
                + d.q.iter().map(|x| x * x).sum::<f64>());
    }
    v
}
