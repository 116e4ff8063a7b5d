//! Dense brute-force reference for small quadratically constrained problems:
//! maximize `b'Qb + q'b` subject to `b'P_i b + p_i'b = c_i`, i = 1, 2, by damped
//! Newton iteration on the KKT system from many random starts.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub struct Quadratic {
    pub mat: DMatrix<f64>,
    pub lin: DVector<f64>,
}

impl Quadratic {
    pub fn eval(&self, b: &DVector<f64>) -> f64 {
        (b.transpose() * &self.mat * b)[(0, 0)] + self.lin.dot(b)
    }

    pub fn grad(&self, b: &DVector<f64>) -> DVector<f64> {
        &self.mat * b * 2.0 + &self.lin
    }
}

pub struct Problem {
    pub objective: Quadratic,
    pub constraints: [(Quadratic, f64); 2],
}

impl Problem {
    fn residual(&self, b: &DVector<f64>, mu: [f64; 2]) -> DVector<f64> {
        let d = b.len();
        let mut stat = self.objective.grad(b);
        for (m, (c, _)) in mu.iter().zip(&self.constraints) {
            stat -= c.grad(b) * *m;
        }
        let mut f = DVector::zeros(d + 2);
        f.rows_mut(0, d).copy_from(&stat);
        for (i, (c, rhs)) in self.constraints.iter().enumerate() {
            f[d + i] = c.eval(b) - rhs;
        }
        f
    }

    fn jacobian(&self, b: &DVector<f64>, mu: [f64; 2]) -> DMatrix<f64> {
        let d = b.len();
        let mut j = DMatrix::zeros(d + 2, d + 2);
        let mut hess = &self.objective.mat * 2.0;
        for (m, (c, _)) in mu.iter().zip(&self.constraints) {
            hess -= &c.mat * (2.0 * m);
        }
        j.view_mut((0, 0), (d, d)).copy_from(&hess);
        for (i, (c, _)) in self.constraints.iter().enumerate() {
            let g = c.grad(b);
            j.view_mut((0, d + i), (d, 1)).copy_from(&(-&g));
            j.view_mut((d + i, 0), (1, d)).copy_from(&g.transpose());
        }
        j
    }

    fn newton(&self, mut b: DVector<f64>, mut mu: [f64; 2]) -> Option<DVector<f64>> {
        let d = b.len();
        let mut f = self.residual(&b, mu);
        for _ in 0..200 {
            let norm = f.norm();
            if norm < 1e-13 {
                return Some(b);
            }
            let step = self.jacobian(&b, mu).lu().solve(&(-&f))?;
            let mut alpha = 1.0;
            loop {
                let nb = &b + step.rows(0, d) * alpha;
                let nmu = [mu[0] + alpha * step[d], mu[1] + alpha * step[d + 1]];
                let nf = self.residual(&nb, nmu);
                if nf.norm() < norm * (1.0 - 1e-4 * alpha) || alpha < 1e-8 {
                    b = nb;
                    mu = nmu;
                    f = nf;
                    break;
                }
                alpha *= 0.5;
            }
        }
        (f.norm() < 1e-10).then_some(b)
    }

    /// Best KKT point found over `starts` random initializations.
    pub fn solve(&self, dim: usize, starts: usize, seed: u64) -> Option<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(f64, DVector<f64>)> = None;
        for _ in 0..starts {
            let b = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
            let mu = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            if let Some(sol) = self.newton(b, mu) {
                let val = self.objective.eval(&sol);
                if best.as_ref().is_none_or(|(v, _)| val > *v) {
                    best = Some((val, sol));
                }
            }
        }
        best.map(|(_, b)| b)
    }
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn lag_one_matrix(len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |i, j| if i.abs_diff(j) == 1 { 0.5 } else { 0.0 })
}

/// Maximize `γ'Ĩb` s.t. `b'Ĩb = l`, `b'M̃b = ρ l`.
pub fn primal(sigma: &DMatrix<f64>, gamma: &DVector<f64>, len: usize, rho: f64, l: f64) -> Problem {
    let a = kron(sigma, &DMatrix::identity(len, len));
    let m = kron(sigma, &lag_one_matrix(len));
    let d = gamma.len();
    Problem {
        objective: Quadratic { mat: DMatrix::zeros(d, d), lin: &a * gamma },
        constraints: [
            (Quadratic { mat: a.clone(), lin: DVector::zeros(d) }, l),
            (Quadratic { mat: m, lin: DVector::zeros(d) }, rho * l),
        ],
    }
}

/// Maximize `b'M̃b` s.t. `b'Ĩb = l`, `γ'Ĩb = c √(l γ'Ĩγ)`.
pub fn dual(sigma: &DMatrix<f64>, gamma: &DVector<f64>, len: usize, corr: f64, l: f64) -> Problem {
    let a = kron(sigma, &DMatrix::identity(len, len));
    let m = kron(sigma, &lag_one_matrix(len));
    let d = gamma.len();
    let ag = &a * gamma;
    let gvar = gamma.dot(&ag);
    Problem {
        objective: Quadratic { mat: m, lin: DVector::zeros(d) },
        constraints: [
            (Quadratic { mat: a, lin: DVector::zeros(d) }, l),
            (Quadratic { mat: DMatrix::zeros(d, d), lin: ag }, corr * (l * gvar).sqrt()),
        ],
    }
}
