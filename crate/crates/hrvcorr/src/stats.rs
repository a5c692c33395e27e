//! Explanatory-analysis metrics: Pearson correlation with Student-t
//! significance, and RMSE.
//!
//! The t-distribution tail probability is computed through the regularized
//! incomplete beta function, evaluated with a Lentz continued fraction, so
//! no external statistics crate is involved and the result can be checked
//! against direct quadrature of the t density.

use thiserror::Error;

/// Pearson correlation together with its two-sided significance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    /// Sample correlation coefficient in [-1, 1].
    pub r: f64,
    /// Number of paired samples.
    pub n: usize,
    /// t statistic `r * sqrt((n-2) / (1-r^2))`; signed infinity at |r| = 1.
    pub t_stat: f64,
    /// Two-sided p-value from the Student-t distribution with n-2 degrees
    /// of freedom.
    pub p_two_sided: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series has zero variance")]
    DegenerateVariance,
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("degrees of freedom must be >= 1")]
    InvalidDf,
}

/// Sample Pearson correlation between two equal-length series.
///
/// Requires at least 3 pairs (so the t test has a positive number of
/// degrees of freedom) and nonzero variance in both series. A perfect
/// correlation (|r| = 1) reports p = 0.
///
/// ```
/// use hrvcorr::stats::pearson;
///
/// let res = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
/// assert_eq!(res.r, 1.0);
/// assert_eq!(res.p_two_sided, 0.0);
/// ```
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { got: n, need: 3 });
    }

    let nf = n as f64;
    let mean_x = x.iter().sum::<f64>() / nf;
    let mean_y = y.iter().sum::<f64>() / nf;

    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }

    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = n - 2;
    let (t_stat, p_two_sided) = if r.abs() >= 1.0 {
        (f64::INFINITY.copysign(r), 0.0)
    } else {
        let t = r * (df as f64 / (1.0 - r * r)).sqrt();
        (t, student_t_sf(t, df)?)
    };

    Ok(CorrelationResult { r, n, t_stat, p_two_sided })
}

/// Root mean square of elementwise differences between two series.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let sum_sq: f64 = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok((sum_sq / x.len() as f64).sqrt())
}

/// Two-sided Student-t survival probability `P(|T| >= |t|)` with `df`
/// degrees of freedom.
///
/// Evaluated as the regularized incomplete beta `I_x(df/2, 1/2)` at
/// `x = df / (df + t^2)`, which decreases monotonically in |t|.
pub fn student_t_sf(t: f64, df: usize) -> Result<f64, StatsError> {
    if df < 1 {
        return Err(StatsError::InvalidDf);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let dff = df as f64;
    let x = dff / (dff + t * t);
    Ok(regularized_inc_beta(x, dff / 2.0, 0.5).clamp(0.0, 1.0))
}

/// Natural log of Γ(z) for z > 0, by the Lanczos approximation.
pub fn ln_gamma(z: f64) -> f64 {
    // Numerical Recipes g=5, n=6 coefficient set; |ε| < 2e-10 for z > 0.
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    debug_assert!(z > 0.0);
    let mut series = 1.000000000190015;
    for (i, c) in COEF.iter().enumerate() {
        series += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.5066282746310005 * series / z).ln()
}

/// Regularized incomplete beta function `I_x(a, b)` for `x` in [0, 1],
/// `a, b > 0`.
///
/// Continued-fraction evaluation (modified Lentz), absolute tolerance
/// 1e-10, capped at 300 iterations. The symmetry
/// `I_x(a,b) = 1 - I_{1-x}(b,a)` keeps the fraction in its fast-converging
/// region.
pub fn regularized_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(x, a, b) / a
    } else {
        1.0 - front * beta_cf(1.0 - x, b, a) / b
    }
}

fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const TOL: f64 = 1e-10;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let mf = m as f64;
        let m2 = 2.0 * mf;

        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;

        if (delta - 1.0).abs() < TOL {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Student-t density with `df` degrees of freedom.
    fn t_density(u: f64, df: f64) -> f64 {
        let norm = (ln_gamma((df + 1.0) / 2.0)
            - ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln())
        .exp();
        norm * (1.0 + u * u / df).powf(-(df + 1.0) / 2.0)
    }

    /// Quadrature oracle: P(|T| >= |t|) = 1 - 2 * integral of the density
    /// over [0, |t|], by the trapezoid rule.
    fn t_sf_quadrature(t: f64, df: usize, steps: usize) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 1.0;
        }
        let h = t / steps as f64;
        let dff = df as f64;
        let mut acc = 0.5 * (t_density(0.0, dff) + t_density(t, dff));
        for k in 1..steps {
            acc += t_density(k as f64 * h, dff);
        }
        1.0 - 2.0 * acc * h
    }

    #[test]
    fn perfect_correlation() {
        let res = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(res.r, 1.0);
        assert_eq!(res.p_two_sided, 0.0);
        assert_eq!(res.n, 3);
    }

    #[test]
    fn perfect_anticorrelation() {
        let res = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(res.r, -1.0);
        assert_eq!(res.p_two_sided, 0.0);
    }

    #[test]
    fn hand_computed_r() {
        // Centered cross sum 3.0 over sqrt(5 * 5).
        let res = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((res.r - 0.6).abs() < 1e-12);
    }

    #[test]
    fn pearson_error_paths() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatsError::LengthMismatch { left: 2, right: 3 }
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(),
            StatsError::TooFewSamples { got: 2, need: 3 }
        ));
        assert!(matches!(
            pearson(&[5.0, 5.0, 5.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatsError::DegenerateVariance
        ));
    }

    #[test]
    fn t_stat_matches_definition() {
        let res = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        let expect = res.r * ((res.n as f64 - 2.0) / (1.0 - res.r * res.r)).sqrt();
        assert!((res.t_stat - expect).abs() < 1e-12);
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        let v = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((v - 12.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rmse_is_symmetric() {
        let x = [1.0, 4.5, -2.0, 8.25];
        let y = [0.5, 3.0, 1.0, 9.0];
        assert_eq!(rmse(&x, &y).unwrap(), rmse(&y, &x).unwrap());
    }

    #[test]
    fn rmse_error_paths() {
        assert!(matches!(rmse(&[], &[]).unwrap_err(), StatsError::EmptyInput));
        assert!(matches!(
            rmse(&[1.0], &[]).unwrap_err(),
            StatsError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn sf_at_zero_is_one() {
        for df in [1, 5, 30, 1000] {
            assert_eq!(student_t_sf(0.0, df).unwrap(), 1.0);
        }
    }

    #[test]
    fn sf_tail_limit() {
        assert!(student_t_sf(1e9, 30).unwrap() < 1e-12);
        assert_eq!(student_t_sf(f64::INFINITY, 5).unwrap(), 0.0);
    }

    #[test]
    fn sf_invalid_df() {
        assert!(matches!(student_t_sf(1.0, 0).unwrap_err(), StatsError::InvalidDf));
    }

    #[test]
    fn sf_hand_value_df10() {
        // Two-sided tail for t = 2.0, df = 10.
        let p = student_t_sf(2.0, 10).unwrap();
        assert!((p - 0.0734).abs() < 5e-5, "p = {p}");
    }

    #[test]
    fn sf_matches_quadrature() {
        for &df in &[1usize, 5, 30, 1000] {
            for &t in &[0.0, 0.25, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0] {
                let got = student_t_sf(t, df).unwrap();
                let want = t_sf_quadrature(t, df, 200_000);
                assert!(
                    (got - want).abs() < 1e-6,
                    "df={df} t={t}: got {got}, quadrature {want}"
                );
            }
        }
    }

    #[test]
    fn sf_monotone_in_t() {
        let mut prev = 1.0;
        for i in 1..=80 {
            let t = i as f64 * 0.1;
            let p = student_t_sf(t, 7).unwrap();
            assert!(p < prev, "sf not strictly decreasing at t={t}");
            prev = p;
        }
    }

    #[test]
    fn inc_beta_bounds() {
        assert_eq!(regularized_inc_beta(0.0, 2.0, 3.0), 0.0);
        assert_eq!(regularized_inc_beta(1.0, 2.0, 3.0), 1.0);
        // I_x(1,1) is the identity.
        assert!((regularized_inc_beta(0.37, 1.0, 1.0) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-10);
        assert!((ln_gamma(2.0)).abs() < 1e-10);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-9);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-10);
    }
}
