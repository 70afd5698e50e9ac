#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use leobf::intermediates::Intermediates;
use leobf::qcqp::{quad_cost, ColumnQuadratic, CoupledQcqp, PowerConstraint, QcqpBlock, UserWeights};
use leobf::C64;
use nalgebra::DMatrix;
use rand::Rng;

use super::{cn, cvec, psd};

/// Best feasible primal value and best dual value over a two-stage log grid of `lambda`.
/// The optimum lies between them.
pub fn lambda_grid_oracle(cols: &[ColumnQuadratic], con: &PowerConstraint) -> (f64, f64) {
    let eval = |lambda: f64| -> Option<(f64, f64, f64)> {
        let mut power = 0.0;
        let mut primal = 0.0;
        let mut dual = -lambda * con.budget;
        for c in cols {
            let m = &*c.a + &con.gram * C64::from(lambda);
            let w = m.clone().lu().solve(&c.b)?;
            power += (w.adjoint() * &con.gram * &w)[(0, 0)].re;
            primal += quad_cost(&c.a, &c.b, &w);
            dual -= c.b.dotc(&w).re;
        }
        Some((power, primal, dual))
    };
    let grid =
        |lo: f64, hi: f64| -> Vec<f64> { (0..10_000).map(|i| lo * (hi / lo).powf(i as f64 / 9_999.0)).collect() };
    let mut best_primal = f64::INFINITY;
    let mut best_dual = f64::NEG_INFINITY;
    let mut first_feasible = None;
    for l in grid(1e-10, 1e8) {
        if let Some((p, f, d)) = eval(l) {
            best_dual = best_dual.max(d);
            if p <= con.budget {
                best_primal = best_primal.min(f);
                first_feasible.get_or_insert(l);
            }
        }
    }
    if let Some(l) = first_feasible {
        for l in grid(l / 1.01, l * 1.01) {
            if let Some((p, f, d)) = eval(l) {
                best_dual = best_dual.max(d);
                if p <= con.budget {
                    best_primal = best_primal.min(f);
                }
            }
        }
    }
    (best_primal, best_dual)
}

pub fn random_single<R: Rng>(r: &mut R, n: usize, ncols: usize) -> (Vec<ColumnQuadratic>, PowerConstraint) {
    let rank = r.random_range(1..=n);
    let a = Arc::new(psd(r, n, rank));
    let cols = (0..ncols)
        .map(|_| ColumnQuadratic {
            a: a.clone(),
            b: cvec(r, n) * C64::from(r.random_range(0.5..3.0)),
        })
        .collect();
    let gram = psd(r, n, n) + DMatrix::identity(n, n) * C64::from(0.1);
    (
        cols,
        PowerConstraint {
            gram,
            budget: r.random_range(0.05..2.0),
        },
    )
}
/// Accelerated projected gradient on `v_s = L_s^H w_s`, where each block's feasible set
/// is a Frobenius ball.
pub fn projected_gradient(p: &CoupledQcqp, steps: usize) -> f64 {
    let ns = p.blocks.len();
    let ls: Vec<DMatrix<C64>> = p
        .blocks
        .iter()
        .map(|b| b.con.gram.clone().cholesky().unwrap().unpack())
        .collect();
    let linv: Vec<DMatrix<C64>> = ls.iter().map(|l| l.clone().try_inverse().unwrap()).collect();
    let to_w = |v: &[DMatrix<C64>]| -> Vec<DMatrix<C64>> { (0..ns).map(|s| linv[s].adjoint() * &v[s]).collect() };
    let full = |v: &[DMatrix<C64>]| -> Vec<DMatrix<C64>> {
        let w = to_w(v);
        w.iter()
            .enumerate()
            .map(|(s, ws)| {
                let mut m = DMatrix::zeros(ws.nrows(), p.num_columns);
                for &c in &p.blocks[s].columns {
                    m.set_column(c, &ws.column(c));
                }
                m
            })
            .collect()
    };
    // gradient wrt conj(w): A w - b + sum_j M_sj w_j, mapped back to v by L^{-1}
    let grad = |v: &[DMatrix<C64>]| -> Vec<DMatrix<C64>> {
        let w = full(v);
        (0..ns)
            .map(|s| {
                let blk = &p.blocks[s];
                let mut g = DMatrix::zeros(w[s].nrows(), p.num_columns);
                for (q, &c) in blk.cols.iter().zip(&blk.columns) {
                    let mut col = &*q.a * w[s].column(c) - &q.b;
                    for (j, m) in p.cross[s].iter().enumerate() {
                        if let Some(m) = m {
                            col += m * w[j].column(c);
                        }
                    }
                    g.set_column(c, &col);
                }
                &linv[s] * g
            })
            .collect()
    };
    let project = |v: &mut Vec<DMatrix<C64>>| {
        for (s, vs) in v.iter_mut().enumerate() {
            let n2 = vs.norm_squared();
            let b = p.blocks[s].con.budget;
            if n2 > b {
                *vs *= C64::from((b / n2).sqrt());
            }
        }
    };
    // Lipschitz bound from the Hessian in v coordinates
    let mut lip = 0.0;
    for s in 0..ns {
        let mut row = 0.0;
        for j in 0..ns {
            let m = if s == j {
                p.blocks[s].cols[0].a.as_ref().clone()
            } else {
                match &p.cross[s][j] {
                    Some(m) => m.clone(),
                    None => continue,
                }
            };
            row += (&linv[s] * m * linv[j].adjoint()).norm();
        }
        lip = f64::max(lip, row);
    }
    let step = 1.0 / lip;
    let t0 = p.blocks[0].con.gram.nrows();
    let mut v: Vec<DMatrix<C64>> = (0..ns)
        .map(|s| DMatrix::zeros(p.blocks[s].con.gram.nrows().max(t0), p.num_columns))
        .collect();
    let mut y = v.clone();
    let mut tk = 1.0f64;
    for _ in 0..steps {
        let g = grad(&y);
        let mut next: Vec<DMatrix<C64>> = y.iter().zip(&g).map(|(a, b)| a - b * C64::from(step)).collect();
        project(&mut next);
        let tn = (1.0 + (1.0 + 4.0 * tk * tk).sqrt()) / 2.0;
        let beta = (tk - 1.0) / tn;
        y = next
            .iter()
            .zip(&v)
            .map(|(a, b)| a + (a - b) * C64::from(beta))
            .collect();
        v = next;
        tk = tn;
    }
    p.objective(&full(&v))
}

pub fn random_coupled<R: Rng>(r: &mut R, t: usize, ncols: usize, coupling: f64) -> CoupledQcqp {
    let ns = 2;
    let h = psd(r, ns * t, ns * t);
    let mut blocks = Vec::new();
    for s in 0..ns {
        let a = Arc::new(h.view((s * t, s * t), (t, t)).into_owned());
        let columns: Vec<usize> = (0..ncols).collect();
        let cols = columns
            .iter()
            .map(|_| ColumnQuadratic {
                a: a.clone(),
                b: cvec(r, t) * C64::from(2.0),
            })
            .collect();
        blocks.push(QcqpBlock {
            columns,
            cols,
            con: PowerConstraint {
                gram: psd(r, t, t) + DMatrix::identity(t, t) * C64::from(0.5),
                budget: r.random_range(0.2..1.0),
            },
        });
    }
    let cross = (0..ns)
        .map(|s| {
            (0..ns)
                .map(|j| (s != j).then(|| h.view((s * t, j * t), (t, t)).into_owned() * C64::from(coupling)))
                .collect()
        })
        .collect();
    CoupledQcqp {
        num_columns: ncols,
        blocks,
        cross,
    }
}

pub fn random_alp<R: Rng>(
    r: &mut R,
    s: usize,
    u: usize,
    dual_scale: f64,
) -> (Vec<UserWeights>, Vec<Intermediates>, Vec<Intermediates>) {
    let mk = |r: &mut R, scale: f64, allow_negative: bool| {
        let mut g = Intermediates::zeros(u);
        let lo = if allow_negative { -1.0 } else { 0.0 };
        for a in 0..u {
            g.f[a] = cn(r) * scale;
            g.p[a] = r.random_range(lo..1.0) * scale;
            for b in 0..u {
                if a != b {
                    g.q[(a, b)] = r.random_range(lo..1.0) * scale;
                }
            }
        }
        g
    };
    let w = (0..u)
        .map(|_| UserWeights {
            mu: cn(r),
            nu: r.random_range(0.1..3.0),
        })
        .collect();
    let locals = (0..s).map(|_| mk(r, 1.0, false)).collect();
    let duals = (0..s).map(|_| mk(r, dual_scale, true)).collect();
    (w, locals, duals)
}

/// Projected gradient on the augmented Lagrangian with `P, Q >= 0`.
pub fn alp_oracle(w: &[UserWeights], locals: &[Intermediates], duals: &[Intermediates], rho: f64) -> Intermediates {
    let u = w.len();
    let ns = locals.len() as f64;
    let mut g = Intermediates::zeros(u);
    let lmax = w.iter().map(|x| x.nu * x.mu.norm_sqr()).fold(0.0, f64::max) + rho * ns;
    let step = 1.0 / lmax;
    for _ in 0..20_000 {
        let mut next = g.clone();
        for a in 0..u {
            let c = w[a].nu * w[a].mu.norm_sqr();
            // d/d conj(F)
            let mut df = g.f[a] * c - w[a].mu.conj() * w[a].nu;
            let mut dp = c;
            let mut dq: Vec<f64> = (0..u).map(|b| if a == b { 0.0 } else { c }).collect();
            for (l, t) in locals.iter().zip(duals) {
                df += (g.f[a] - l.f[a] + t.f[a] / rho) * (rho / 2.0);
                dp += rho * (g.p[a] - l.p[a] + t.p[a] / rho);
                for b in 0..u {
                    dq[b] += rho * (g.q[(a, b)] - l.q[(a, b)] + t.q[(a, b)] / rho);
                }
            }
            next.f[a] = g.f[a] - df * (2.0 * step);
            next.p[a] = (g.p[a] - step * dp).max(0.0);
            for b in 0..u {
                next.q[(a, b)] = (g.q[(a, b)] - step * dq[b]).max(0.0);
            }
        }
        g = next;
    }
    g
}
