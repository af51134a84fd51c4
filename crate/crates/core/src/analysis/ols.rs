use super::matrix::{dot, Matrix};
use super::AnalysisError;
use crate::Scalar;

/// Ordinary least-squares fit with leverages.
///
/// Columns that are (numerically) linear combinations of earlier columns
/// are dropped, so `beta` and `columns` describe the retained design only.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit<T> {
    pub columns: Vec<String>,
    pub dropped: Vec<String>,
    pub beta: Vec<T>,
    pub fitted: Vec<T>,
    pub residuals: Vec<T>,
    /// Diagonal of the projection matrix.
    pub leverages: Vec<T>,
    /// Residual standard error on `n - p` degrees of freedom.
    pub sigma_hat: T,
    /// Upper-triangular factor of the retained design, `p × p`.
    r: Matrix<T>,
}

impl<T: Scalar> RegressionFit<T> {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    /// Number of retained columns.
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn rss(&self) -> T {
        dot(&self.residuals, &self.residuals)
    }

    pub fn coefficient(&self, name: &str) -> Option<T> {
        self.columns
            .iter()
            .position(|c| c == name)
            .map(|k| self.beta[k])
    }

    /// Standard errors `sigma_hat · sqrt(diag((XᵀX)⁻¹))`, from the triangular
    /// factor.
    pub fn standard_errors(&self) -> Vec<T> {
        let p = self.p();
        // columns of R⁻¹ by back substitution
        let mut rinv = Matrix::<T>::zeros(p, p);
        for c in 0..p {
            for i in (0..=c).rev() {
                let mut s = if i == c { T::one() } else { T::zero() };
                for k in i + 1..=c {
                    s = s - self.r[(i, k)] * rinv[(k, c)];
                }
                rinv[(i, c)] = s / self.r[(i, i)];
            }
        }
        (0..p)
            .map(|j| {
                let ss: T = (j..p).map(|c| rinv[(j, c)] * rinv[(j, c)]).sum();
                self.sigma_hat * ss.sqrt()
            })
            .collect()
    }

    /// Internally studentized residual of row `i`:
    /// `e_i / (sigma_hat · sqrt(1 − h_i))`.
    pub fn studentized_residual(&self, i: usize) -> Result<T, AnalysisError> {
        // h_i = 1 forces e_i = 0, leaving 0/0
        let slack = T::one() - self.leverages[i];
        if slack <= T::rank_tolerance() {
            return Err(AnalysisError::UndefinedResidual { rows: vec![i] });
        }
        let e = self.residuals[i];
        if e == T::zero() {
            return Ok(T::zero());
        }
        Ok(e / (self.sigma_hat * slack.sqrt()))
    }

    /// All internally studentized residuals. Fails listing every row whose
    /// leverage is 1.
    pub fn studentized_residuals(&self) -> Result<Vec<T>, AnalysisError> {
        let mut bad = Vec::new();
        let mut out = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            match self.studentized_residual(i) {
                Ok(r) => out.push(r),
                Err(_) => bad.push(i),
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(AnalysisError::UndefinedResidual { rows: bad })
        }
    }
}

/// Fits `y ≈ X β` by Householder QR.
///
/// Columns are processed left to right; a column whose component orthogonal
/// to the already retained columns is below [`Scalar::rank_tolerance`] of
/// its own norm is dropped (with a warning) instead of failing the fit.
pub fn fit_ols<T: Scalar>(
    x: &Matrix<T>,
    names: &[String],
    y: &[T],
) -> Result<RegressionFit<T>, AnalysisError> {
    let (n, m) = (x.rows(), x.cols());
    assert_eq!(names.len(), m, "one name per column");
    assert_eq!(y.len(), n, "one response per row");

    let mut a = x.clone();
    let mut qty = y.to_vec();
    let tol = T::rank_tolerance();
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut reflectors: Vec<(Vec<T>, T)> = Vec::new();

    for j in 0..m {
        let k = retained.len();
        let original = dot(x.col(j), x.col(j)).sqrt();
        if k == n {
            dropped.push(j);
            continue;
        }
        let tail = &a.col(j)[k..];
        let norm = dot(tail, tail).sqrt();
        if original == T::zero() || norm <= tol * original {
            dropped.push(j);
            continue;
        }
        let mut v = tail.to_vec();
        let alpha = if v[0] > T::zero() { -norm } else { norm };
        v[0] = v[0] - alpha;
        let vv = dot(&v, &v);
        let beta = (T::one() + T::one()) / vv;
        for c in j..m {
            reflect(&mut a.col_mut(c)[k..], &v, beta);
        }
        reflect(&mut qty[k..], &v, beta);
        reflectors.push((v, beta));
        retained.push(j);
    }

    if !dropped.is_empty() {
        let list: Vec<&str> = dropped.iter().map(|&j| names[j].as_str()).collect();
        if retained.is_empty() {
            return Err(AnalysisError::RankDeficient {
                columns: list.iter().map(|s| s.to_string()).collect(),
            });
        }
        log::warn!("dropping linearly dependent columns: {}", list.join(", "));
    }

    let p = retained.len();
    if n <= p {
        return Err(AnalysisError::InsufficientData { n, p });
    }

    let mut r = Matrix::<T>::zeros(p, p);
    for (c, &j) in retained.iter().enumerate() {
        for i in 0..=c {
            r[(i, c)] = a[(i, j)];
        }
    }
    let mut beta = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut s = qty[i];
        for k in i + 1..p {
            s = s - r[(i, k)] * beta[k];
        }
        beta[i] = s / r[(i, i)];
    }

    // thin Q = H_1 ⋯ H_p [I; 0]
    let mut q = Matrix::<T>::zeros(n, p);
    for c in 0..p {
        q[(c, c)] = T::one();
    }
    for (k, (v, b)) in reflectors.iter().enumerate().rev() {
        for c in 0..p {
            reflect(&mut q.col_mut(c)[k..], v, *b);
        }
    }
    let leverages: Vec<T> = (0..n)
        .map(|i| (0..p).map(|c| q[(i, c)] * q[(i, c)]).sum())
        .collect();

    let xr = x.select_cols(&retained);
    let fitted = xr.mul_vec(&beta);
    let residuals: Vec<T> = y.iter().zip(&fitted).map(|(&yi, &fi)| yi - fi).collect();
    let rss = dot(&residuals, &residuals);
    let sigma_hat = (rss / T::of((n - p) as f64)).sqrt();

    Ok(RegressionFit {
        columns: retained.iter().map(|&j| names[j].clone()).collect(),
        dropped: dropped.iter().map(|&j| names[j].clone()).collect(),
        beta,
        fitted,
        residuals,
        leverages,
        sigma_hat,
        r,
    })
}

/// Applies `I − β v vᵀ` to `x` in place.
fn reflect<T: Scalar>(x: &mut [T], v: &[T], beta: T) {
    let s = dot(v, x) * beta;
    for (xi, &vi) in x.iter_mut().zip(v) {
        *xi = *xi - s * vi;
    }
}
