//! Log-barrier interior-point method for small dense convex programs
//!
//! ```text
//! minimize f(z)  subject to  A z = b,  g_k(z) <= 0
//! ```
//!
//! where each `g_k` is affine plus an optional separable convex quadratic.

use nalgebra::{DMatrix, DVector};

/// `Σ lin_l z_l + Σ quad_l z_l² <= rhs`.
#[derive(Debug, Clone, Default)]
pub(crate) struct Ineq {
    pub lin: Vec<(usize, f64)>,
    pub quad: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Ineq {
    pub fn linear(lin: Vec<(usize, f64)>, rhs: f64) -> Self {
        Ineq { lin, quad: Vec::new(), rhs }
    }

    /// `lo <= z_k`.
    pub fn lower(k: usize, lo: f64) -> Self {
        Ineq::linear(vec![(k, -1.0)], -lo)
    }

    /// `z_k <= hi`.
    pub fn upper(k: usize, hi: f64) -> Self {
        Ineq::linear(vec![(k, 1.0)], hi)
    }

    /// `rhs - g(z)`, positive in the strict interior.
    pub fn slack(&self, z: &DVector<f64>) -> f64 {
        let mut v = self.rhs;
        for &(k, a) in &self.lin {
            v -= a * z[k];
        }
        for &(k, q) in &self.quad {
            v -= q * z[k] * z[k];
        }
        v
    }
}

/// Smooth convex objective. `value` returns `+∞` outside the domain.
pub(crate) trait Objective {
    fn value(&self, z: &DVector<f64>) -> f64;
    /// Adds `scale·∇f` and `scale·∇²f` into the buffers.
    fn add_grad_hess(&self, z: &DVector<f64>, scale: f64, g: &mut DVector<f64>, h: &mut DMatrix<f64>);
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOptions {
    /// Target bound on `m/t`, the suboptimality of the central point.
    pub eps: f64,
    pub max_newton: usize,
    pub growth: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierResult {
    pub z: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton decrement `λ²/2` below which a centering step is complete.
const CENTERING_TOL: f64 = 1e-9;
const MAX_CENTERING: usize = 100;

pub(crate) struct Barrier<'a> {
    pub objective: &'a dyn Objective,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub ineqs: Vec<Ineq>,
}

impl Barrier<'_> {
    fn strictly_feasible(&self, z: &DVector<f64>) -> bool {
        self.ineqs.iter().all(|c| c.slack(z) > 0.0)
    }

    fn merit(&self, z: &DVector<f64>, t: f64) -> f64 {
        let mut v = t * self.objective.value(z);
        for c in &self.ineqs {
            let s = c.slack(z);
            if !(s > 0.0) {
                return f64::INFINITY;
            }
            v -= s.ln();
        }
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn grad_hess(&self, z: &DVector<f64>, t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = z.len();
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        self.objective.add_grad_hess(z, t, &mut g, &mut h);
        let mut grad_c = vec![0.0; n];
        for c in &self.ineqs {
            let s = c.slack(z);
            let mut idx: Vec<usize> = Vec::with_capacity(c.lin.len() + c.quad.len());
            for &(k, a) in &c.lin {
                if !idx.contains(&k) {
                    idx.push(k);
                }
                grad_c[k] += a;
            }
            for &(k, q) in &c.quad {
                if !idx.contains(&k) {
                    idx.push(k);
                }
                grad_c[k] += 2.0 * q * z[k];
                h[(k, k)] += 2.0 * q / s;
            }
            for &k in &idx {
                g[k] += grad_c[k] / s;
                for &l in &idx {
                    h[(k, l)] += grad_c[k] * grad_c[l] / (s * s);
                }
            }
            for &k in &idx {
                grad_c[k] = 0.0;
            }
        }
        (g, h)
    }

    /// Solves the equality-constrained Newton system with Jacobi scaling,
    /// adding diagonal regularization if the system is singular.
    fn newton_step(&self, g: &DVector<f64>, h: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
        let n = g.len();
        let p = self.a_eq.nrows();
        let d: Vec<f64> = (0..n)
            .map(|k| {
                let v = h[(k, k)];
                if v > 0.0 && v.is_finite() {
                    1.0 / v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut reg = 0.0;
        loop {
            let mut kkt = DMatrix::zeros(n + p, n + p);
            let mut rhs = DVector::zeros(n + p);
            for k in 0..n {
                for l in 0..n {
                    kkt[(k, l)] = d[k] * h[(k, l)] * d[l];
                }
                kkt[(k, k)] += reg;
                rhs[k] = -g[k] * d[k];
            }
            for q in 0..p {
                for k in 0..n {
                    let a = self.a_eq[(q, k)] * d[k];
                    kkt[(n + q, k)] = a;
                    kkt[(k, n + q)] = a;
                }
                rhs[n + q] = r[q];
            }
            if let Some(sol) = kkt.lu().solve(&rhs) {
                if sol.iter().all(|v| v.is_finite()) {
                    return DVector::from_fn(n, |k, _| sol[k] * d[k]);
                }
            }
            reg = if reg == 0.0 { 1e-12 } else { reg * 100.0 };
            if reg > 1e6 {
                return DVector::zeros(n);
            }
        }
    }

    pub fn minimize(&self, z0: DVector<f64>, opts: &BarrierOptions) -> BarrierResult {
        let m = self.ineqs.len().max(1) as f64;
        let mut z = z0;
        debug_assert!(self.strictly_feasible(&z));
        let f0 = self.objective.value(&z);
        let mut t = if f0.is_finite() { m / f0.abs().max(1.0) } else { 1.0 };
        let mut iterations = 0;
        loop {
            // centering; `stalled` means rounding noise dominates the step
            let mut stalled = false;
            for _ in 0..MAX_CENTERING {
                if iterations >= opts.max_newton {
                    return BarrierResult { z, iterations, converged: false };
                }
                let (g, h) = self.grad_hess(&z, t);
                let r = &self.b_eq - &self.a_eq * &z;
                let mut dz = self.newton_step(&g, &h, &r);
                if self.a_eq.nrows() > 0 {
                    let miss = &r - &self.a_eq * &dz;
                    dz += project_affine(&self.a_eq, &miss, &DVector::zeros(dz.len()));
                }
                iterations += 1;
                let dec = -g.dot(&dz);
                let feasible_eq = r.amax() <= 1e-13 * (1.0 + self.b_eq.amax());
                if dec / 2.0 <= CENTERING_TOL && feasible_eq {
                    break;
                }
                let base = self.merit(&z, t);
                let mut s = 1.0;
                let mut accepted = false;
                while s > 1e-16 {
                    let trial = &z + &dz * s;
                    let mt = self.merit(&trial, t);
                    if mt.is_finite() && (!feasible_eq || mt <= base - 0.25 * s * dec) {
                        accepted = (&trial - &z).amax() > 1e-15 * (1.0 + z.amax());
                        z = trial;
                        break;
                    }
                    s *= 0.5;
                }
                if !accepted {
                    stalled = true;
                    break;
                }
            }
            if m / t <= opts.eps || stalled {
                return BarrierResult { z, iterations, converged: true };
            }
            t *= opts.growth;
        }
    }
}

/// Indices of a maximal linearly independent subset of the rows of `a`,
/// chosen greedily by Gram-Schmidt.
pub(crate) fn independent_rows(a: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for q in 0..a.nrows() {
        let row: DVector<f64> = a.row(q).transpose();
        let norm = row.norm();
        if norm == 0.0 {
            continue;
        }
        let mut v = row.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = v.dot(b);
                v -= b * c;
            }
        }
        let vn = v.norm();
        if vn > 1e-10 * norm {
            basis.push(v / vn);
            keep.push(q);
        }
    }
    keep
}

/// Least-norm correction of `z` onto `{A z = b}`.
pub(crate) fn project_affine(a: &DMatrix<f64>, b: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 {
        return z.clone();
    }
    let r = b - a * z;
    let aat = a * a.transpose();
    match aat.lu().solve(&r) {
        Some(w) => z + a.transpose() * w,
        None => z.clone(),
    }
}
