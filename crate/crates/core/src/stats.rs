//! Ordinary least squares and two-sample t procedures.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Least-squares fit with an intercept. Coefficient vectors list the
/// intercept first, then one entry per predictor column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit<T> {
    pub n: usize,
    /// Number of predictors, excluding the intercept.
    pub k: usize,
    pub df_residual: usize,
    pub coefficients: Vec<T>,
    pub standard_errors: Vec<T>,
    pub t_values: Vec<T>,
    pub r_squared: T,
    pub adj_r_squared: T,
    pub f_statistic: T,
    pub residual_sum_squares: T,
}

impl<T: Scalar> OlsFit<T> {
    pub fn slope_t_values(&self) -> &[T] {
        &self.t_values[1..]
    }

    pub fn slopes(&self) -> &[T] {
        &self.coefficients[1..]
    }

    /// Two-sided p-values for every coefficient.
    pub fn p_values(&self) -> Vec<f64> {
        self.t_values
            .iter()
            .map(|t| two_sided_p(t.widen(), self.df_residual as f64))
            .collect()
    }
}

/// Fits `response ~ 1 + predictors` where `predictors` holds one row per observation.
///
/// Solved by Householder QR of the design matrix; the coefficient covariance
/// comes from `R^-1 R^-T`.
pub fn ols_fit<T: Scalar>(predictors: &[Vec<T>], response: &[T]) -> Result<OlsFit<T>> {
    let n = response.len();
    if predictors.len() != n {
        return Err(Error::Domain(format!(
            "{} predictor rows for {} responses",
            predictors.len(),
            n
        )));
    }
    let k = predictors.first().map_or(0, Vec::len);
    if let Some(bad) = predictors.iter().position(|r| r.len() != k) {
        return Err(Error::Domain(format!(
            "predictor row {bad} has {} columns, expected {k}",
            predictors[bad].len()
        )));
    }
    let p = k + 1;
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {k} predictors plus intercept"
        )));
    }
    if predictors.iter().flatten().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite value in regression input".into()));
    }

    // column-major design matrix
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(p);
    cols.push(vec![T::one(); n]);
    for j in 0..k {
        cols.push(predictors.iter().map(|row| row[j]).collect());
    }
    let col_norms: Vec<T> = cols.iter().map(|c| norm(c)).collect();
    let mut qty: Vec<T> = response.to_vec();
    let tol = T::epsilon() * T::of(100.0 * n as f64);

    let mut r = vec![vec![T::zero(); p]; p];
    for j in 0..p {
        let tail_norm = norm(&cols[j][j..]);
        if col_norms[j] == T::zero() || tail_norm <= tol * col_norms[j] {
            return Err(Error::Singular);
        }
        let alpha = if cols[j][j] > T::zero() { -tail_norm } else { tail_norm };
        let mut v: Vec<T> = cols[j][j..].to_vec();
        v[0] = v[0] - alpha;
        let vv = dot(&v, &v);
        let two = T::of(2.0);
        for col in cols.iter_mut().skip(j) {
            let s = two * dot(&v, &col[j..]) / vv;
            for (x, vi) in col[j..].iter_mut().zip(&v) {
                *x = *x - s * *vi;
            }
        }
        let s = two * dot(&v, &qty[j..]) / vv;
        for (x, vi) in qty[j..].iter_mut().zip(&v) {
            *x = *x - s * *vi;
        }
        for (i, row) in r.iter_mut().enumerate().take(j + 1) {
            row[j] = cols[j][i];
        }
    }

    let mut coefficients = vec![T::zero(); p];
    for i in (0..p).rev() {
        let mut acc = qty[i];
        for j in i + 1..p {
            acc = acc - r[i][j] * coefficients[j];
        }
        coefficients[i] = acc / r[i][i];
    }

    // inverse of the upper-triangular factor, column by column
    let mut rinv = vec![vec![T::zero(); p]; p];
    for c in 0..p {
        for i in (0..=c).rev() {
            let mut acc = if i == c { T::one() } else { T::zero() };
            for j in i + 1..=c {
                acc = acc - r[i][j] * rinv[j][c];
            }
            rinv[i][c] = acc / r[i][i];
        }
    }

    let df = n - p;
    let sse = qty[p..].iter().fold(T::zero(), |acc, &e| acc + e * e);
    let sigma2 = sse / T::of(df as f64);
    let standard_errors: Vec<T> = (0..p)
        .map(|i| {
            let var = rinv[i][i..].iter().fold(T::zero(), |acc, &x| acc + x * x);
            (sigma2 * var).sqrt()
        })
        .collect();
    let t_values = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&b, &se)| b / se)
        .collect();

    let mean = response.iter().fold(T::zero(), |acc, &y| acc + y) / T::of(n as f64);
    let sst = response
        .iter()
        .fold(T::zero(), |acc, &y| acc + (y - mean) * (y - mean));
    let (r_squared, f_statistic) = if sst > T::zero() {
        let r2 = T::one() - sse / sst;
        let f = ((sst - sse) / T::of(k as f64)) / sigma2;
        (r2, f)
    } else {
        (T::zero(), T::zero())
    };
    let adj_r_squared =
        T::one() - (T::one() - r_squared) * T::of((n - 1) as f64) / T::of(df as f64);

    Ok(OlsFit {
        n,
        k,
        df_residual: df,
        coefficients,
        standard_errors,
        t_values,
        r_squared,
        adj_r_squared,
        f_statistic,
        residual_sum_squares: sse,
    })
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Scalar>(a: &[T]) -> T {
    // scaled to avoid overflow on large inputs
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let s = a.iter().fold(T::zero(), |acc, &x| {
        let y = x / scale;
        acc + y * y
    });
    scale * s.sqrt()
}

/// Quantile of Student's t distribution with `df` degrees of freedom.
pub fn student_t_quantile(prob: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(prob)
}

pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Significance marks used in regression tables.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedInterval<T> {
    pub mean_difference: T,
    pub lo: T,
    pub hi: T,
    pub df: usize,
    /// All differences were equal; the interval collapses to a point.
    pub degenerate: bool,
}

/// Confidence interval for `mean(a - b)` over yoked observations.
pub fn paired_t_ci<T: Scalar>(a: &[T], b: &[T], level: f64) -> Result<PairedInterval<T>> {
    if a.len() != b.len() {
        return Err(Error::Domain(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level {level} outside (0, 1)")));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} pairs; need at least 2")));
    }
    let diffs: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    let (mean, var) = mean_var(&diffs);
    let df = n - 1;
    if var == T::zero() {
        return Ok(PairedInterval {
            mean_difference: mean,
            lo: mean,
            hi: mean,
            df,
            degenerate: true,
        });
    }
    let q = T::of(student_t_quantile(1.0 - (1.0 - level) / 2.0, df as f64));
    let half = q * (var / T::of(n as f64)).sqrt();
    Ok(PairedInterval {
        mean_difference: mean,
        lo: mean - half,
        hi: mean + half,
        df,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest<T> {
    pub t: T,
    pub df: T,
}

/// Welch's unequal-variance two-sample t statistic for `mean(a) - mean(b)`.
pub fn welch_t<T: Scalar>(a: &[T], b: &[T]) -> Result<WelchTest<T>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "samples of size {} and {}; need at least 2 each",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let sa = va / T::of(a.len() as f64);
    let sb = vb / T::of(b.len() as f64);
    let se2 = sa + sb;
    let diff = ma - mb;
    let t = if se2 == T::zero() {
        if diff == T::zero() {
            T::zero()
        } else {
            diff.signum() * T::infinity()
        }
    } else {
        diff / se2.sqrt()
    };
    let df = se2 * se2
        / (sa * sa / T::of((a.len() - 1) as f64) + sb * sb / T::of((b.len() - 1) as f64));
    Ok(WelchTest { t, df })
}

/// Mean and unbiased variance (two-pass).
fn mean_var<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = T::of(xs.len() as f64);
    let mean = xs.iter().fold(T::zero(), |acc, &x| acc + x) / n;
    let ss = xs
        .iter()
        .fold(T::zero(), |acc, &x| acc + (x - mean) * (x - mean));
    (mean, ss / (n - T::one()))
}

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().fold(T::zero(), |acc, &x| acc + x) / T::of(xs.len() as f64))
    }
}
