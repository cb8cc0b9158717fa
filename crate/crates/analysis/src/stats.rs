//! Normality, variance-homogeneity, one-way ANOVA and Tukey-Kramer tests.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::quad::{integrate, Tolerance};
use crate::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaRow {
    pub source: String,
    pub df: f64,
    pub sum_sq: f64,
    pub mean_sq: f64,
    pub f_value: Option<f64>,
    pub p_value: Option<f64>,
}

/// One pairwise comparison: `mean[later] - mean[earlier]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub later: usize,
    pub earlier: usize,
    pub difference: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub df: Vec<f64>,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<AnovaRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<PairwiseComparison>,
}

impl TestReport {
    fn new(test: &str, statistic: f64, df: Vec<f64>, p_value: f64) -> Self {
        TestReport { test: test.into(), statistic, df, p_value, table: vec![], comparisons: vec![] }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn phi_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn phi_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Upper tail of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, x / 2.0)
    }
}

/// Upper tail of the F distribution.
pub fn f_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        1.0
    } else {
        beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, ci| acc * x + ci)
}

/// Shapiro-Wilk W with Royston's approximation for its p-value.
pub fn shapiro_wilk(xs: &[f64]) -> Result<TestReport, AnalysisError> {
    let n = xs.len();
    if n < 3 {
        return Err(AnalysisError::SampleTooSmall { n, min: 3 });
    }
    if n > 5000 {
        return Err(AnalysisError::SampleTooLarge { n, max: 5000 });
    }
    let mut x = xs.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if !(range > 1e-19 * x[n - 1].abs().max(1.0)) {
        return Err(AnalysisError::ZeroVariance);
    }

    let half = n / 2;
    let an = n as f64;
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = FRAC_1_SQRT_2;
    } else {
        let norm = std_normal();
        let m: Vec<f64> = (1..=half).map(|i| norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25))).collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let c1 = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        let c2 = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let a1 = poly(&c1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&c2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        a[0] = a1;
        for i in first..half {
            a[i] = -m[i] / fac;
        }
    }

    let numerator: f64 = (0..half).map(|i| a[i] * (x[n - 1 - i] - x[i])).sum::<f64>().powi(2);
    let w = (numerator / sum_sq_dev(&x)).min(1.0);

    let p = if n == 3 {
        let p = 6.0 / PI * (w.sqrt().asin() - (0.75f64).sqrt().asin());
        p.clamp(0.0, 1.0)
    } else {
        let mut y = (1.0 - w).ln();
        let (m, s);
        if n <= 11 {
            let gamma = poly(&[-2.273, 0.459], an);
            if y >= gamma {
                return Ok(TestReport::new("shapiro_wilk", w, vec![], 1e-99));
            }
            y = -(gamma - y).ln();
            m = poly(&[0.544, -0.39978, 0.025054, -6.714e-4], an);
            s = poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp();
        } else {
            let ln_n = an.ln();
            m = poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n);
            s = poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp();
        }
        1.0 - phi_cdf((y - m) / s)
    };
    Ok(TestReport::new("shapiro_wilk", w, vec![], p))
}

/// Bartlett's test that every group has the same variance.
pub fn bartlett(groups: &[Vec<f64>]) -> Result<TestReport, AnalysisError> {
    if groups.len() < 2 {
        return Err(AnalysisError::TooFewGroups(groups.len()));
    }
    let k = groups.len() as f64;
    let mut vars = Vec::with_capacity(groups.len());
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(AnalysisError::DegenerateGroup(i));
        }
        let v = sum_sq_dev(g) / (g.len() - 1) as f64;
        if !(v > 0.0) {
            return Err(AnalysisError::DegenerateGroup(i));
        }
        vars.push(v);
    }
    let dfs: Vec<f64> = groups.iter().map(|g| (g.len() - 1) as f64).collect();
    let df_total: f64 = dfs.iter().sum();
    let statistic = if vars.iter().all(|v| *v == vars[0]) {
        0.0
    } else {
        let pooled = dfs.iter().zip(&vars).map(|(d, v)| d * v).sum::<f64>() / df_total;
        let num = df_total * pooled.ln() - dfs.iter().zip(&vars).map(|(d, v)| d * v.ln()).sum::<f64>();
        let corr = 1.0 + (dfs.iter().map(|d| 1.0 / d).sum::<f64>() - 1.0 / df_total) / (3.0 * (k - 1.0));
        (num / corr).max(0.0)
    };
    Ok(TestReport::new("bartlett", statistic, vec![k - 1.0], chi2_sf(statistic, k - 1.0)))
}

struct Anova {
    means: Vec<f64>,
    sizes: Vec<usize>,
    ss_between: f64,
    ss_within: f64,
    df_between: f64,
    df_within: f64,
}

fn anova_parts(groups: &[Vec<f64>]) -> Result<Anova, AnalysisError> {
    if groups.len() < 2 {
        return Err(AnalysisError::TooFewGroups(groups.len()));
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(AnalysisError::DegenerateGroup(i));
    }
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let n: usize = sizes.iter().sum();
    let k = groups.len();
    if n <= k {
        return Err(AnalysisError::DegenerateGroups("no residual degrees of freedom".into()));
    }
    let means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    // Pairwise form: exactly zero whenever all group means coincide.
    let mut ss_between = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            ss_between += (sizes[i] * sizes[j]) as f64 * (means[i] - means[j]).powi(2);
        }
    }
    ss_between /= n as f64;
    let ss_within: f64 = groups.iter().map(|g| sum_sq_dev(g)).sum();
    if !(ss_within > 0.0) {
        return Err(AnalysisError::DegenerateGroups("zero variance within every group".into()));
    }
    Ok(Anova { means, sizes, ss_between, ss_within, df_between: (k - 1) as f64, df_within: (n - k) as f64 })
}

/// One-way ANOVA F test, with its treatment/residual table.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<TestReport, AnalysisError> {
    let a = anova_parts(groups)?;
    let ms_b = a.ss_between / a.df_between;
    let ms_w = a.ss_within / a.df_within;
    let f = ms_b / ms_w;
    let p = f_sf(f, a.df_between, a.df_within);
    let mut r = TestReport::new("one_way_anova", f, vec![a.df_between, a.df_within], p);
    r.table = vec![
        AnovaRow {
            source: "Treatment".into(),
            df: a.df_between,
            sum_sq: a.ss_between,
            mean_sq: ms_b,
            f_value: Some(f),
            p_value: Some(p),
        },
        AnovaRow { source: "Residual".into(), df: a.df_within, sum_sq: a.ss_within, mean_sq: ms_w, f_value: None, p_value: None },
    ];
    Ok(r)
}

/// Density of `sqrt(chi2_df / df)` at `s`.
fn scaled_chi_pdf(s: f64, df: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let h = df / 2.0;
    (LN_2 + h * h.ln() - ln_gamma(h) + (df - 1.0) * s.ln() - h * s * s).exp()
}

/// P(range of `k` standard normals > w), written so that the integrand has
/// no cancellation even when the tail is tiny.
fn range_sf(w: f64, k: usize) -> Result<f64, AnalysisError> {
    if w <= 0.0 {
        return Ok(1.0);
    }
    let m = k - 1;
    let integrand = |z: f64| {
        let hi = phi_cdf(z);
        let lo = phi_cdf(z - w);
        let inside = hi - lo;
        let sum: f64 = (0..m).map(|i| hi.powi((m - 1 - i) as i32) * inside.powi(i as i32)).sum();
        phi_pdf(z) * lo * sum
    };
    let centre = (w / 2.0).min(8.0);
    let v = integrate(integrand, &[-8.5, centre - 1.0, centre, centre + 1.0, 8.5 + w.min(8.5)], Tolerance::default())?;
    Ok((k as f64 * v).clamp(0.0, 1.0))
}

/// Upper tail P(Q > q) of the studentized range distribution with `k`
/// means and `df` error degrees of freedom.
pub fn ptukey_sf(q: f64, k: usize, df: f64) -> Result<f64, AnalysisError> {
    if k < 2 {
        return Err(AnalysisError::TooFewGroups(k));
    }
    if q <= 0.0 {
        return Ok(1.0);
    }
    if df.is_infinite() {
        return range_sf(q, k);
    }
    let sd = (0.5 / df).sqrt();
    let mode = ((df - 1.0) / df).max(0.0).sqrt();
    let hi = ((df + 30.0 * (2.0 * df).sqrt() + 60.0) / df).sqrt();
    let mut breaks = vec![0.0, hi];
    for t in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
        let s = mode + t * sd;
        if s > 0.0 && s < hi {
            breaks.push(s);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut inner_err = None;
    let tol = Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 2000 };
    let v = integrate(
        |s| match range_sf(q * s, k) {
            Ok(u) => scaled_chi_pdf(s, df) * u,
            Err(e) => {
                inner_err.get_or_insert(e);
                0.0
            }
        },
        &breaks,
        tol,
    )?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Quantile of the studentized range: the `q` with P(Q <= q) = `p`.
pub fn qtukey(p: f64, k: usize, df: f64) -> Result<f64, AnalysisError> {
    let target = 1.0 - p;
    let (mut lo, mut hi) = (0.0, 1.0);
    while ptukey_sf(hi, k, df)? > target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(AnalysisError::QuadratureNonConvergence { estimate: hi, error: f64::NAN });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ptukey_sf(mid, k, df)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tukey-Kramer honest significance test over all pairs of groups. The
/// report statistic is the largest studentized range among the pairs.
pub fn tukey_kramer(groups: &[Vec<f64>], alpha: f64) -> Result<TestReport, AnalysisError> {
    let a = anova_parts(groups)?;
    let k = groups.len();
    let mse = a.ss_within / a.df_within;
    let q_crit = qtukey(1.0 - alpha, k, a.df_within)?;
    let mut comparisons = Vec::new();
    let mut q_max: f64 = 0.0;
    for earlier in 0..k {
        for later in earlier + 1..k {
            let diff = a.means[later] - a.means[earlier];
            let se = (mse / 2.0 * (1.0 / a.sizes[earlier] as f64 + 1.0 / a.sizes[later] as f64)).sqrt();
            let q = diff.abs() / se;
            q_max = q_max.max(q);
            let half = q_crit * se;
            comparisons.push(PairwiseComparison {
                later,
                earlier,
                difference: diff,
                ci_low: diff - half,
                ci_high: diff + half,
                p_value: ptukey_sf(q, k, a.df_within)?,
            });
        }
    }
    comparisons.sort_by_key(|c| (c.later, c.earlier));
    let p_min = comparisons.iter().map(|c| c.p_value).fold(1.0, f64::min);
    let mut r = TestReport::new("tukey_kramer", q_max, vec![k as f64, a.df_within], p_min);
    r.comparisons = comparisons;
    Ok(r)
}
