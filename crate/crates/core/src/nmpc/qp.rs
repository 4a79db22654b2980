//! Dense convex QP solved by a primal-dual interior-point method with
//! Mehrotra predictor-corrector steps
//!
//! ```text
//! minimise 1/2 x' P x + q' x   subject to   l <= A x <= u
//! ```
//!
//! `A` is stored as sparse rows; infinite bounds drop their half of the row.
//! Rows are normalised to unit infinity norm before solving.

use nalgebra::{DMatrix, DVector};

use crate::nmpc::QpSettings;

/// One constraint row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: Vec<SparseRow>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    MaxIterations,
    /// The Newton system could not be factorised.
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Row multipliers: `P x + q + A' y = 0` at the optimum, `y_i > 0` on an
    /// active upper bound and `y_i < 0` on an active lower bound.
    pub y: DVector<f64>,
    pub iterations: usize,
    pub status: QpStatus,
}

impl QpProblem {
    pub fn a_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.a.len(),
            self.a.iter().map(|row| row.iter().map(|&(j, v)| v * x[j]).sum()),
        )
    }

    pub fn at_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.q.len());
        for (row, yi) in self.a.iter().zip(y.iter()) {
            if *yi != 0.0 {
                for &(j, v) in row {
                    out[j] += v * yi;
                }
            }
        }
        out
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    /// Largest violation of `l <= A x <= u`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let ax = self.a_mul(x);
        (0..ax.len())
            .map(|i| (self.l[i] - ax[i]).max(ax[i] - self.u[i]).max(0.0))
            .fold(0.0, f64::max)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One-sided inequalities `G x <= h`.
struct Inequalities {
    rows: Vec<SparseRow>,
    h: DVector<f64>,
    /// Source row and the factor mapping this multiplier back onto it.
    origin: Vec<(usize, f64)>,
}

impl Inequalities {
    fn new(problem: &QpProblem) -> Self {
        let mut rows = Vec::new();
        let mut h = Vec::new();
        let mut origin = Vec::new();
        for (i, row) in problem.a.iter().enumerate() {
            let norm = row.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
            if norm == 0.0 {
                continue;
            }
            if problem.u[i].is_finite() {
                rows.push(row.iter().map(|&(j, v)| (j, v / norm)).collect());
                h.push(problem.u[i] / norm);
                origin.push((i, 1.0 / norm));
            }
            if problem.l[i].is_finite() {
                rows.push(row.iter().map(|&(j, v)| (j, -v / norm)).collect());
                h.push(-problem.l[i] / norm);
                origin.push((i, -1.0 / norm));
            }
        }
        Self {
            rows,
            h: DVector::from_vec(h),
            origin,
        }
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.len(),
            self.rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()),
        )
    }

    fn tmul(&self, y: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (r, yi) in self.rows.iter().zip(y.iter()) {
            for &(j, v) in r {
                out[j] += v * yi;
            }
        }
        out
    }

    /// `P + G' diag(w) G`.
    fn normal_matrix(&self, p: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
        let mut m = p.clone();
        for (r, &wi) in self.rows.iter().zip(w.iter()) {
            for &(i, vi) in r {
                let a = wi * vi;
                for &(j, vj) in r {
                    m[(i, j)] += a * vj;
                }
            }
        }
        m
    }
}

/// Largest step in `(0, 1]` keeping `v + a dv >= 0`.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(vi, di)| -vi / di)
        .fold(1.0, f64::min)
}

pub fn solve(problem: &QpProblem, settings: &QpSettings) -> QpSolution {
    let n = problem.q.len();
    let m_rows = problem.a.len();
    let g = Inequalities::new(problem);
    let mi = g.len();
    let tol = settings.tolerance;
    let failure = |iterations| QpSolution {
        x: DVector::zeros(n),
        y: DVector::zeros(m_rows),
        iterations,
        status: QpStatus::NumericalFailure,
    };

    let diag_scale = (0..n).fold(1.0f64, |a, i| a.max(problem.p[(i, i)].abs()));
    let factor = |m: DMatrix<f64>| {
        let mut reg = 1e-13 * diag_scale;
        for _ in 0..6 {
            let mut mm = m.clone();
            for i in 0..n {
                mm[(i, i)] += reg;
            }
            if let Some(c) = mm.cholesky() {
                return Some(c);
            }
            reg *= 100.0;
        }
        None
    };

    if mi == 0 {
        return match factor(problem.p.clone()) {
            Some(c) => QpSolution {
                x: c.solve(&(-&problem.q)),
                y: DVector::zeros(m_rows),
                iterations: 1,
                status: QpStatus::Solved,
            },
            None => failure(0),
        };
    }

    let mut x = DVector::zeros(n);
    let mut s = (&g.h - g.mul(&x)).map(|r| r.max(1.0));
    let mut z = DVector::from_element(mi, 1.0);

    let scale_p = 1.0 + inf_norm(&problem.q);
    let scale_d = 1.0 + inf_norm(&g.h);
    let mut status = QpStatus::MaxIterations;
    let mut iterations = settings.max_iter;

    for it in 1..=settings.max_iter {
        let rp = g.mul(&x) + &s - &g.h;
        let rd = &problem.p * &x + &problem.q + g.tmul(&z, n);
        let mu = s.dot(&z) / mi as f64;
        if inf_norm(&rd) <= tol * scale_p && inf_norm(&rp) <= tol * scale_d && mu <= tol {
            status = QpStatus::Solved;
            iterations = it - 1;
            break;
        }

        let w = z.component_div(&s);
        let Some(chol) = factor(g.normal_matrix(&problem.p, &w)) else {
            return failure(it);
        };
        let newton = |rc: &DVector<f64>| {
            // rc is the complementarity residual s.z - target.
            let rc_s = rc.component_div(&s);
            let rhs = -&rd - g.tmul(&(w.component_mul(&rp) - &rc_s), n);
            let dx = chol.solve(&rhs);
            let gdx = g.mul(&dx);
            let ds = -&rp - &gdx;
            let dz = w.component_mul(&(&gdx + &rp)) - rc_s;
            (dx, ds, dz)
        };

        let rc_aff = s.component_mul(&z);
        let (_, ds_a, dz_a) = newton(&rc_aff);
        let a_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = (&s + &ds_a * a_aff).dot(&(&z + &dz_a * a_aff)) / mi as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let rc = rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(mi, sigma * mu);
        let (dx, ds, dz) = newton(&rc);
        let a = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        x += &dx * a;
        s += &ds * a;
        z += &dz * a;
    }

    let mut y = DVector::zeros(m_rows);
    for (k, &(i, f)) in g.origin.iter().enumerate() {
        y[i] += f * z[k];
    }
    QpSolution {
        x,
        y,
        iterations,
        status,
    }
}
