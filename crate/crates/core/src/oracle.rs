//! Brute-force reference implementations for tests and acceptance runs.
//!
//! Nothing here touches the FFT path or the shrinkage operators: linear
//! operators are assembled as explicit dense matrices straight from their
//! stencil definitions, and the TV/L2 model is minimized in its ε-smoothed form
//! by damped Newton iterations on those matrices. Only meant for small `n`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TvError};
use crate::grid::{GradientField, Image, Kernel, TvVariant};

/// Largest side length the dense oracles accept.
pub const DENSE_LIMIT: usize = 32;

/// Default smoothing for [`reference_tv_solve`].
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Cap on Newton iterations over all smoothing levels.
pub const MAX_NEWTON_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Forward differences, `2n² x n²`: all `dx` rows, then all `dy` rows.
    D,
    /// Transpose of `D`.
    Dt,
    /// Periodic convolution with the kernel, `n² x n²`.
    K,
}

fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(TvError::TooLarge { n, limit: DENSE_LIMIT });
    }
    if n < 2 {
        return Err(TvError::InvalidImage(format!("side {n} < 2")));
    }
    Ok(())
}

/// Explicit matrix of one of the periodic operators on vectorized
/// (row-major) images.
pub fn dense_operator(kind: OperatorKind, n: usize, k: Option<&Kernel>) -> Result<DMatrix<f64>> {
    check_dense(n)?;
    let nn = n * n;
    let idx = |r: usize, c: usize| (r % n) * n + (c % n);
    match kind {
        OperatorKind::D => {
            let mut d = DMatrix::zeros(2 * nn, nn);
            for r in 0..n {
                for c in 0..n {
                    let p = idx(r, c);
                    d[(p, idx(r, c + 1))] += 1.0;
                    d[(p, p)] -= 1.0;
                    d[(nn + p, idx(r + 1, c))] += 1.0;
                    d[(nn + p, p)] -= 1.0;
                }
            }
            Ok(d)
        }
        OperatorKind::Dt => Ok(dense_operator(OperatorKind::D, n, None)?.transpose()),
        OperatorKind::K => {
            let k = k.ok_or_else(|| TvError::BadSpec("K operator needs a kernel".into()))?;
            if k.size() > n {
                return Err(TvError::KernelTooLarge { kernel: k.size(), image: n });
            }
            let m = k.size();
            let h = m / 2;
            let mut mat = DMatrix::zeros(nn, nn);
            for r in 0..n {
                for c in 0..n {
                    for a in 0..m {
                        for b in 0..m {
                            // out(r, c) += k(a, b) * u(r - (a - h), c - (b - h))
                            let src = idx(r + n + h - a, c + n + h - b);
                            mat[(idx(r, c), src)] += k.tap(a, b);
                        }
                    }
                }
            }
            Ok(mat)
        }
    }
}

pub fn image_to_vector(u: &Image) -> DVector<f64> {
    DVector::from_column_slice(u.data())
}

pub fn vector_to_image(n: usize, v: &DVector<f64>) -> Image {
    Image::from_raw(n, v.iter().copied().collect())
}

/// `[dx; dy]` stacked as a single `2n²` vector.
pub fn field_to_vector(g: &GradientField) -> DVector<f64> {
    DVector::from_iterator(2 * g.dx().len(), g.dx().iter().chain(g.dy()).copied())
}

pub fn vector_to_field(n: usize, v: &DVector<f64>) -> GradientField {
    let nn = n * n;
    GradientField::from_raw(n, v.rows(0, nn).iter().copied().collect(), v.rows(nn, nn).iter().copied().collect())
}

/// Dense LU solve of `(μKᵀK + βDᵀD) u = μKᵀf + Dᵀ(βw − λ)`.
pub fn dense_normal_solve(
    f: &Image,
    w: &GradientField,
    lambda: &GradientField,
    mu: f64,
    beta: f64,
    k: &Kernel,
) -> Result<Image> {
    let n = f.size();
    let d = dense_operator(OperatorKind::D, n, None)?;
    let kmat = dense_operator(OperatorKind::K, n, Some(k))?;
    let lhs = kmat.transpose() * &kmat * mu + d.transpose() * &d * beta;
    let r = field_to_vector(w) * beta - field_to_vector(lambda);
    let rhs = kmat.transpose() * image_to_vector(f) * mu + d.transpose() * r;
    let sol = lhs.lu().solve(&rhs).ok_or(TvError::SingularSystem {
        row: 0,
        col: 0,
        denominator: 0.0,
    })?;
    Ok(vector_to_image(n, &sol))
}

/// Dense problem data for the smoothed TV/L2 objective.
struct SmoothedModel {
    n: usize,
    d: DMatrix<f64>,
    kmat: DMatrix<f64>,
    ktk: DMatrix<f64>,
    ktf: DVector<f64>,
    f: DVector<f64>,
    mu: f64,
    variant: TvVariant,
}

impl SmoothedModel {
    fn new(f: &Image, k: &Kernel, mu: f64, variant: TvVariant) -> Result<Self> {
        let n = f.size();
        let d = dense_operator(OperatorKind::D, n, None)?;
        let kmat = dense_operator(OperatorKind::K, n, Some(k))?;
        let ktk = kmat.transpose() * &kmat;
        let fv = image_to_vector(f);
        let ktf = kmat.transpose() * &fv;
        Ok(SmoothedModel { n, d, kmat, ktk, ktf, f: fv, mu, variant })
    }

    fn value(&self, u: &DVector<f64>, eps: f64) -> f64 {
        let nn = self.n * self.n;
        let g = &self.d * u;
        let e2 = eps * eps;
        let tv: f64 = match self.variant {
            TvVariant::Isotropic => (0..nn).map(|i| (g[i] * g[i] + g[nn + i] * g[nn + i] + e2).sqrt()).sum(),
            TvVariant::Anisotropic => g.iter().map(|x| (x * x + e2).sqrt()).sum(),
        };
        let r = &self.kmat * u - &self.f;
        tv + 0.5 * self.mu * r.norm_squared()
    }

    fn gradient_and_hessian(&self, u: &DVector<f64>, eps: f64) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let nn = n * n;
        let g = &self.d * u;
        let e2 = eps * eps;
        // per-pixel gradient of φ and its 2x2 Hessian
        let mut dphi = DVector::zeros(2 * nn);
        let mut hess = self.ktk.clone() * self.mu;
        for r in 0..n {
            for c in 0..n {
                let p = r * n + c;
                let (gx, gy) = (g[p], g[nn + p]);
                let (hxx, hxy, hyy) = match self.variant {
                    TvVariant::Isotropic => {
                        let s = (gx * gx + gy * gy + e2).sqrt();
                        dphi[p] = gx / s;
                        dphi[nn + p] = gy / s;
                        let s3 = s * s * s;
                        (1.0 / s - gx * gx / s3, -gx * gy / s3, 1.0 / s - gy * gy / s3)
                    }
                    TvVariant::Anisotropic => {
                        let sx = (gx * gx + e2).sqrt();
                        let sy = (gy * gy + e2).sqrt();
                        dphi[p] = gx / sx;
                        dphi[nn + p] = gy / sy;
                        (e2 / (sx * sx * sx), 0.0, e2 / (sy * sy * sy))
                    }
                };
                // Dx row at p: +1 at right neighbour, -1 at p; Dy row: +1 below, -1 at p.
                let ex = [((r * n + (c + 1) % n), 1.0), (p, -1.0)];
                let ey = [(((r + 1) % n) * n + c, 1.0), (p, -1.0)];
                for &(i, a) in &ex {
                    for &(j, b) in &ex {
                        hess[(i, j)] += hxx * a * b;
                    }
                    for &(j, b) in &ey {
                        hess[(i, j)] += hxy * a * b;
                        hess[(j, i)] += hxy * a * b;
                    }
                }
                for &(i, a) in &ey {
                    for &(j, b) in &ey {
                        hess[(i, j)] += hyy * a * b;
                    }
                }
            }
        }
        let grad = self.d.transpose() * dphi + (&self.ktk * u - &self.ktf) * self.mu;
        (grad, hess)
    }
}

/// Value of `Σ √(‖Dᵢu‖² + ε²) + μ/2‖Ku − f‖²` (per component for the
/// anisotropic variant), from the dense operators.
pub fn smoothed_tv_objective(
    u: &Image,
    f: &Image,
    k: &Kernel,
    mu: f64,
    epsilon: f64,
    variant: TvVariant,
) -> Result<f64> {
    check_dense(f.size())?;
    u.check_same_size(f.size())?;
    let model = SmoothedModel::new(f, k, mu, variant)?;
    Ok(model.value(&image_to_vector(u), epsilon))
}

/// Minimizer of the ε-smoothed TV/L2 objective.
///
/// Damped Newton with Armijo backtracking, warm-started through a decreasing
/// sequence of smoothing levels `1e-1, 1e-2, …, epsilon`. Stops at the target
/// level once the gradient norm falls below `1e-8·n`.
pub fn reference_tv_solve(
    f: &Image,
    k: &Kernel,
    mu: f64,
    epsilon: f64,
    variant: TvVariant,
) -> Result<Image> {
    let n = f.size();
    check_dense(n)?;
    if !(epsilon > 0.0) || !(mu > 0.0) {
        return Err(TvError::InvalidConfig(format!(
            "reference solve needs epsilon > 0 and mu > 0, got {epsilon}, {mu}"
        )));
    }
    let model = SmoothedModel::new(f, k, mu, variant)?;
    let mut levels = Vec::new();
    let mut e = 1e-1;
    while e > epsilon * 1.000_001 {
        levels.push(e);
        e *= 0.1;
    }
    levels.push(epsilon);

    let final_tol = 1e-8 * n as f64;
    let mut u = image_to_vector(f);
    let mut total = 0usize;
    let mut grad_norm = f64::INFINITY;
    for (li, &eps) in levels.iter().enumerate() {
        let tol = if li + 1 == levels.len() { final_tol } else { final_tol.max(1e-6 * n as f64) };
        let mut value = model.value(&u, eps);
        loop {
            let (grad, hess) = model.gradient_and_hessian(&u, eps);
            grad_norm = grad.norm();
            if grad_norm < tol {
                break;
            }
            if total >= MAX_NEWTON_ITERS {
                return Err(TvError::NoConvergence { iterations: total, grad_norm });
            }
            total += 1;
            let step = match hess.cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -grad.clone(),
            };
            let slope = grad.dot(&step);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &u + &step * t;
                let v = model.value(&trial, eps);
                if v <= value + 1e-4 * t * slope + 1e-15 * value.abs() {
                    u = trial;
                    value = v;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                // no representable decrease left at this level
                break;
            }
        }
    }
    if grad_norm >= final_tol {
        return Err(TvError::NoConvergence { iterations: total, grad_norm });
    }
    Ok(vector_to_image(n, &u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_kernel, KernelSpec};

    #[test]
    fn d_for_two_by_two() {
        let d = dense_operator(OperatorKind::D, 2, None).unwrap();
        assert_eq!(d.shape(), (8, 4));
        for row in d.row_iter() {
            let mut vals: Vec<f64> = row.iter().copied().filter(|v| *v != 0.0).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // with n = 2 the right neighbour of the right neighbour wraps to self,
            // but each row still has exactly one +1 and one -1
            assert_eq!(vals, vec![-1.0, 1.0]);
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let k = make_kernel(KernelSpec::Delta).unwrap();
        let m = dense_operator(OperatorKind::K, 5, Some(&k)).unwrap();
        assert_eq!(m, DMatrix::identity(25, 25));
    }

    #[test]
    fn dt_is_exact_transpose() {
        let d = dense_operator(OperatorKind::D, 4, None).unwrap();
        let dt = dense_operator(OperatorKind::Dt, 4, None).unwrap();
        assert_eq!(dt, d.transpose());
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            dense_operator(OperatorKind::D, 33, None),
            Err(TvError::TooLarge { n: 33, limit: 32 })
        ));
        let k = make_kernel(KernelSpec::Delta).unwrap();
        assert!(reference_tv_solve(&Image::zeros(40), &k, 1.0, 1e-6, TvVariant::Isotropic).is_err());
    }

    #[test]
    fn constant_data_is_its_own_solution() {
        let k = make_kernel(KernelSpec::Delta).unwrap();
        let f = Image::constant(6, 0.25);
        let u = reference_tv_solve(&f, &k, 10.0, DEFAULT_EPSILON, TvVariant::Isotropic).unwrap();
        assert!((&u - &f).max_abs() < 1e-12);
    }

    #[test]
    fn huge_fidelity_returns_data() {
        let k = make_kernel(KernelSpec::Delta).unwrap();
        let f = Image::from_fn(8, |r, c| if (r / 2 + c / 3) % 2 == 0 { 0.9 } else { 0.2 });
        for variant in [TvVariant::Isotropic, TvVariant::Anisotropic] {
            let u = reference_tv_solve(&f, &k, 1e8, DEFAULT_EPSILON, variant).unwrap();
            assert!((&u - &f).max_abs() < 1e-3);
        }
    }
}
