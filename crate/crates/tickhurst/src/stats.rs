//! Shared statistical machinery: moments, OLS line fit, one-way ANOVA,
//! Kruskal–Wallis, and distribution-CDF helpers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor, Normal};

use crate::error::{Error, Result};

/// Divisor used for standard deviations: `Population` divides by n (the form
/// the rescaled-range definition uses), `Sample` by n−1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaDivisor {
    #[default]
    Population,
    Sample,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation about the mean with the chosen divisor. Returns `None`
/// when the divisor is undefined (empty slice, or a single value under the
/// sample form).
pub fn std_dev(values: &[f64], divisor: SigmaDivisor) -> Option<f64> {
    let n = values.len();
    let denom = match divisor {
        SigmaDivisor::Population if n >= 1 => n as f64,
        SigmaDivisor::Sample if n >= 2 => (n - 1) as f64,
        _ => return None,
    };
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / denom).sqrt())
}

/// Ordinary least-squares line fit of y on x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn ols_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::Config("x and y must have equal length".into()));
    }
    if xs.len() < 2 {
        return Err(Error::Config("OLS needs at least 2 points".into()));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("OLS regressor has zero variance".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if syy == 0.0 {
        1.0 // a constant y is fit exactly by the horizontal line
    } else {
        let ss_res: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        1.0 - ss_res / syy
    };
    Ok(LineFit { slope, intercept, r_squared })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("unit normal is valid");
    n.cdf(x)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("quantile probability {p} outside [0,1]")));
    }
    let n = Normal::new(0.0, 1.0).expect("unit normal is valid");
    Ok(n.inverse_cdf(p))
}

/// Upper-tail p-value of an F statistic with the given degrees of freedom.
pub fn f_p_value(f_stat: f64, df_between: usize, df_within: usize) -> Result<f64> {
    if df_between == 0 || df_within == 0 {
        return Err(Error::Config("F degrees of freedom must be positive".into()));
    }
    if f_stat.is_infinite() {
        return Ok(0.0);
    }
    let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
        .map_err(|e| Error::Internal(format!("F distribution: {e}")))?;
    Ok(1.0 - dist.cdf(f_stat))
}

/// Upper-tail p-value of a chi-squared statistic.
pub fn chi_squared_p_value(x: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::Config("chi-squared df must be positive".into()));
    }
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::Internal(format!("chi-squared distribution: {e}")))?;
    Ok(1.0 - dist.cdf(x))
}

/// One-way analysis of variance over ≥ 2 non-empty groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_stat: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    /// Mean of each group included in the test, in input order.
    pub group_means: Vec<f64>,
}

/// F = MSB/MSW with the usual between/within decomposition. Empty groups are
/// ignored; at least two non-empty groups and N > k observations required.
/// All-constant equal groups (SSB = SSW = 0) leave F undefined and error.
pub fn anova_oneway(groups: &[&[f64]]) -> Result<AnovaResult> {
    let groups: Vec<&[f64]> = groups.iter().copied().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    if k < 2 {
        return Err(Error::Config("ANOVA needs at least 2 non-empty groups".into()));
    }
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    if n_total <= k {
        return Err(Error::Config("ANOVA needs more observations than groups".into()));
    }
    for g in &groups {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("ANOVA input contains a non-finite value".into()));
        }
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n_total as f64;
    let group_means: Vec<f64> = groups.iter().map(|g| mean(g)).collect();
    let ssb: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, m)| g.len() as f64 * (m - grand) * (m - grand))
        .sum();
    let ssw: f64 = groups
        .iter()
        .zip(&group_means)
        .map(|(g, m)| g.iter().map(|v| (v - m) * (v - m)).sum::<f64>())
        .sum();
    let df_between = k - 1;
    let df_within = n_total - k;
    if ssw == 0.0 && ssb == 0.0 {
        return Err(Error::Degenerate(
            "ANOVA undefined: zero variance both between and within groups".into(),
        ));
    }
    let msb = ssb / df_between as f64;
    let msw = ssw / df_within as f64;
    let f_stat = if msw == 0.0 { f64::INFINITY } else { msb / msw };
    let p_value = f_p_value(f_stat, df_between, df_within)?;
    Ok(AnovaResult { f_stat, df_between, df_within, p_value, group_means })
}

/// Kruskal–Wallis rank test over ≥ 2 non-empty groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallisResult {
    pub h_stat: f64,
    pub df: usize,
    pub p_value: f64,
    /// True when tied values were present and the tie-correction factor was
    /// applied to H.
    pub tie_correction_applied: bool,
    /// True when every value was identical, leaving H undefined; H is
    /// reported as 0 with p = 1 in that case.
    pub degenerate: bool,
}

/// Average-rank tie handling with the standard tie-correction factor
/// `1 − Σ(t³−t)/(N³−N)`; the statistic refers to χ² with k−1 degrees of
/// freedom.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<KruskalWallisResult> {
    let groups: Vec<&[f64]> = groups.iter().copied().filter(|g| !g.is_empty()).collect();
    let k = groups.len();
    if k < 2 {
        return Err(Error::Config("Kruskal-Wallis needs at least 2 non-empty groups".into()));
    }
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    let df = k - 1;

    // Global average ranks.
    let mut tagged: Vec<(f64, usize)> = Vec::with_capacity(n_total);
    for (gi, g) in groups.iter().enumerate() {
        for &v in *g {
            if !v.is_finite() {
                return Err(Error::Data("Kruskal-Wallis input contains a non-finite value".into()));
            }
            tagged.push((v, gi));
        }
    }
    tagged.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values compare"));

    let mut rank_sums = vec![0.0f64; k];
    let mut tie_term = 0.0f64; // Σ (t³ − t) over tie runs
    let mut any_tie = false;
    let mut i = 0;
    while i < n_total {
        let mut j = i + 1;
        while j < n_total && tagged[j].0 == tagged[i].0 {
            j += 1;
        }
        let run = j - i;
        // ranks are 1-based; the run i..j shares the average rank
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for t in i..j {
            rank_sums[tagged[t].1] += avg_rank;
        }
        if run > 1 {
            any_tie = true;
            let t = run as f64;
            tie_term += t * t * t - t;
        }
        i = j;
    }

    if tie_term == (n_total as f64).powi(3) - n_total as f64 {
        // every value identical: H is undefined
        return Ok(KruskalWallisResult {
            h_stat: 0.0,
            df,
            p_value: 1.0,
            tie_correction_applied: false,
            degenerate: true,
        });
    }

    let nf = n_total as f64;
    let mid = (nf + 1.0) / 2.0;
    let dev_sum: f64 = groups
        .iter()
        .zip(&rank_sums)
        .map(|(g, rs)| {
            let ni = g.len() as f64;
            let rbar = rs / ni;
            ni * (rbar - mid) * (rbar - mid)
        })
        .sum();
    let mut h_stat = (12.0 * dev_sum) / (nf * (nf + 1.0));
    let tie_correction_applied = any_tie;
    if any_tie {
        h_stat /= 1.0 - tie_term / (nf * nf * nf - nf);
    }
    let p_value = chi_squared_p_value(h_stat, df)?;
    Ok(KruskalWallisResult { h_stat, df, p_value, tie_correction_applied, degenerate: false })
}
