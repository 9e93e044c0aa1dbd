//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Pearson correlation of paired samples, two-pass for accuracy.
/// `None` when fewer than two pairs or either margin has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    pearson_iter(|| x.iter().copied().zip(y.iter().copied()))
}

/// Pearson correlation over a re-iterable stream of pairs.
pub fn pearson_iter<F, I>(pairs: F) -> Option<f64>
where
    F: Fn() -> I,
    I: Iterator<Item = (f64, f64)>,
{
    let (mut n, mut sx, mut sy) = (0usize, 0.0, 0.0);
    for (a, b) in pairs() {
        n += 1;
        sx += a;
        sy += b;
    }
    if n < 2 {
        return None;
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in pairs() {
        let (da, db) = (a - mx, b - my);
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Rescales to mean 0, sd 1. Constant columns come back as all zeros.
pub fn standardize(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let sd = sample_sd(x);
    if !(sd > 0.0) {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - m) / sd).collect()
}

/// One-sample Kolmogorov–Smirnov statistic of `values` against the continuous
/// CDF `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(values: &[f64], cdf: F) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic Kolmogorov tail probability with Stephens' small-sample
/// correction: `Q_KS((√n + 0.12 + 0.11/√n)·D)`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_q(lambda)
}

/// `Q_KS(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut prev = 0.0f64;
    for k in 1..=200 {
        let term = sign * 2.0 * (a2 * (k * k) as f64).exp();
        sum += term;
        if term.abs() <= 1e-12 * prev.abs() || term.abs() <= 1e-300 {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev = term;
    }
    // series failed to converge: λ tiny
    1.0
}

/// Upper tail of χ² with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Upper tail of Student t (two-sided p-value for |t|).
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    StudentsT::new(0.0, 1.0, df).map(|d| 2.0 * d.sf(t.abs())).unwrap_or(f64::NAN)
}

/// Upper tail of the F distribution.
pub fn f_sf(x: f64, d1: f64, d2: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, FisherSnedecor};
    FisherSnedecor::new(d1, d2).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OlsError {
    #[error("need more rows than columns ({rows} rows, {cols} columns)")]
    TooFewRows { rows: usize, cols: usize },
    #[error("design matrix is rank deficient (column {0})")]
    RankDeficient(usize),
}

/// Least-squares fit of `y` on the columns of `x` (include an intercept column
/// yourself). `r_squared` is centred, so it assumes an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coef: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub tss: f64,
    pub r_squared: f64,
    /// RSS / (n − p).
    pub sigma2: f64,
    pub df_resid: usize,
    /// `(XᵀX)⁻¹`.
    pub xtx_inv: DMatrix<f64>,
}

pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, OlsError> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(OlsError::TooFewRows { rows: n, cols: p });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..p).map(|k| x.column(k).norm()).fold(0.0f64, f64::max);
    for k in 0..p {
        if r[(k, k)].abs() <= 1e-10 * scale.max(1.0) {
            return Err(OlsError::RankDeficient(k));
        }
    }
    let qty = qr.q().transpose() * y;
    let coef = r.solve_upper_triangular(&qty).ok_or(OlsError::RankDeficient(0))?;
    let rinv = r.solve_upper_triangular(&DMatrix::identity(p, p)).ok_or(OlsError::RankDeficient(0))?;
    let xtx_inv = &rinv * rinv.transpose();
    let resid = y - x * &coef;
    let rss = resid.norm_squared();
    let ybar = y.mean();
    let tss = y.iter().map(|v| (v - ybar).powi(2)).sum::<f64>();
    let df = n - p;
    let sigma2 = rss / df as f64;
    Ok(OlsFit {
        std_errors: (0..p).map(|k| (sigma2 * xtx_inv[(k, k)]).sqrt()).collect(),
        coef: coef.iter().copied().collect(),
        residuals: resid.iter().copied().collect(),
        rss,
        tss,
        r_squared: if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 1.0 },
        sigma2,
        df_resid: df,
        xtx_inv,
    })
}
