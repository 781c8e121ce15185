//! Pearson correlation and the independent two-sample t-test, with two-tailed
//! p-values computed through the regularized incomplete beta function.

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    /// r for correlations, t for t-tests.
    pub statistic: f64,
    pub p_value: f64,
    pub df: f64,
    pub n: usize,
}

/// ln Gamma(x) for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Continued-fraction kernel of the incomplete beta function (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3.0e-16;
    const FPMIN: f64 = 1.0e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn betai(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "betai domain: x = {x}");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let bt =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        bt * betacf(a, b, x) / a
    } else {
        1.0 - bt * betacf(b, a, 1.0 - x) / b
    }
}

/// Two-tailed p-value of a t statistic with `df` degrees of freedom.
pub fn t_two_tailed_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    betai(df / 2.0, 0.5, df / (df + t * t))
}

/// Pearson product-moment correlation with its two-tailed p-value
/// (t = r sqrt((n-2)/(1-r^2)) against Student's t with n-2 df).
pub fn pearson(x: &[f64], y: &[f64]) -> Result<StatTestResult, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { a: x.len(), b: y.len() });
    }
    let n = x.len();
    if n < 3 {
        return Err(EvalError::TooFewSamples { got: n, need: 3 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if (1.0 - r * r) <= 0.0 {
        0.0
    } else {
        t_two_tailed_p(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(StatTestResult { statistic: r, p_value: p, df, n })
}

/// Student's pooled-variance independent two-sample t-test (two-tailed).
/// Both samples constant and equal makes t undefined, reported as an error so
/// callers emit an absent value.
pub fn ttest_ind(a: &[f64], b: &[f64]) -> Result<StatTestResult, EvalError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(EvalError::TooFewSamples { got: a.len().min(b.len()), need: 2 });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (nb - 1.0);
    let df = na + nb - 2.0;
    let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    if sp2 == 0.0 {
        if ma == mb {
            return Err(EvalError::Degenerate);
        }
        // constant but different samples: infinitely significant
        let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(StatTestResult { statistic: t, p_value: 0.0, df, n: a.len() + b.len() });
    }
    let t = (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(StatTestResult { statistic: t, p_value: t_two_tailed_p(t, df), df, n: a.len() + b.len() })
}

/// Welch's unequal-variance variant, provided behind its own name.
pub fn ttest_welch(a: &[f64], b: &[f64]) -> Result<StatTestResult, EvalError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(EvalError::TooFewSamples { got: a.len().min(b.len()), need: 2 });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ma = a.iter().sum::<f64>() / na;
    let mb = b.iter().sum::<f64>() / nb;
    let va = a.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / (nb - 1.0);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        if ma == mb {
            return Err(EvalError::Degenerate);
        }
        let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
        return Ok(StatTestResult { statistic: t, p_value: 0.0, df: na + nb - 2.0, n: a.len() + b.len() });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    Ok(StatTestResult { statistic: t, p_value: t_two_tailed_p(t, df), df, n: a.len() + b.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_exact_linearity() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-12);
        assert!(r.p_value < 1e-9);
    }

    #[test]
    fn pearson_worked_example() {
        // cov-sum 4.0 / sqrt(5 * 5) = 0.8
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.statistic - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_anti_linearity() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 + 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let r = pearson(&x, &y).unwrap();
        assert!((r.statistic + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_affine_invariance() {
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin() + 2.0).collect();
        let up: Vec<f64> = x.iter().map(|v| 3.0 * v + 7.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -0.5 * v + 1.0).collect();
        assert!((pearson(&x, &up).unwrap().statistic - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &down).unwrap().statistic + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_inputs() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(EvalError::TooFewSamples { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(EvalError::ZeroVariance)
        ));
    }

    #[test]
    fn ttest_identical_samples() {
        let a = [1.0, 2.0, 3.0];
        let r = ttest_ind(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ttest_worked_example() {
        // a=[0,1], b=[1,2]: pooled s^2 = 0.5, se = sqrt(0.5), t = -1.4142, df = 2
        let r = ttest_ind(&[0.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!((r.statistic - (-std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert_eq!(r.df, 2.0);
    }

    #[test]
    fn ttest_swap_negates_t_keeps_p() {
        let a = [0.3, 0.9, 1.4, 0.7];
        let b = [1.1, 1.9, 2.3];
        let ab = ttest_ind(&a, &b).unwrap();
        let ba = ttest_ind(&b, &a).unwrap();
        assert!((ab.statistic + ba.statistic).abs() < 1e-12);
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
    }

    #[test]
    fn ttest_degenerate_equal_constants() {
        assert!(matches!(ttest_ind(&[2.0, 2.0], &[2.0, 2.0]), Err(EvalError::Degenerate)));
    }

    #[test]
    fn p_values_are_monotone_in_t() {
        let df = 7.0;
        let mut last = 1.0;
        for i in 0..50 {
            let t = i as f64 * 0.2;
            let p = t_two_tailed_p(t, df);
            assert!(p <= last + 1e-12, "p not monotone at t={t}");
            last = p;
        }
    }
}
