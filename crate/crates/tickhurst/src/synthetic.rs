//! Controlled test-series generators: IID Gaussian noise and exact
//! fractional Gaussian noise (fGn) with a specified Hurst exponent, produced
//! on a synthetic evenly spaced clock so the full pipeline (hour tags
//! included) can consume them like real data.

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::AnalysisSeries;

/// fGn sampling method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FgnMethod {
    /// Circulant embedding for power-of-two lengths, recursive conditional
    /// sampling otherwise.
    #[default]
    Auto,
    CirculantEmbedding,
    Hosking,
}

/// Specification of one fractional-Gaussian-noise draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgnSpec {
    /// Hurst exponent, strictly inside (0, 1).
    pub hurst_h: f64,
    pub length: usize,
    pub seed: u64,
    pub variance: f64,
    pub method: FgnMethod,
}

impl FgnSpec {
    pub fn new(hurst_h: f64, length: usize, seed: u64) -> Self {
        FgnSpec { hurst_h, length, seed, variance: 1.0, method: FgnMethod::Auto }
    }
}

/// The synthetic clock: evenly spaced instants starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimestampGrid {
    pub start: DateTime<Utc>,
    pub spacing_seconds: u64,
}

impl Default for TimestampGrid {
    fn default() -> Self {
        // A Monday midnight, so weekday/hour coding starts at a clean origin.
        TimestampGrid {
            start: Utc.with_ymd_and_hms(2000, 5, 1, 0, 0, 0).unwrap(),
            spacing_seconds: 1,
        }
    }
}

/// Echo of what produced a synthetic series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SyntheticSpec {
    Fgn(FgnSpec),
    GaussianIid { length: usize, seed: u64, variance: f64 },
}

/// A generated series on its synthetic clock, with the generator settings
/// echoed for sidecar emission.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeries {
    pub series: AnalysisSeries,
    pub spec: SyntheticSpec,
    pub grid: TimestampGrid,
}

impl SyntheticSeries {
    pub fn values(&self) -> &[f64] {
        &self.series.values
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

/// Exact fGn autocovariance at lag k for unit variance:
/// `γ(k) = ½(|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H})`.
pub fn fgn_autocovariance(k: usize, hurst_h: f64) -> f64 {
    let two_h = 2.0 * hurst_h;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn validate_fgn_spec(spec: &FgnSpec) -> Result<()> {
    if !(spec.hurst_h > 0.0 && spec.hurst_h < 1.0) {
        return Err(Error::Config(format!(
            "Hurst exponent must lie strictly inside (0, 1); got {}",
            spec.hurst_h
        )));
    }
    if spec.length == 0 {
        return Err(Error::Config("fGn length must be at least 1".into()));
    }
    if !(spec.variance > 0.0) {
        return Err(Error::Config("fGn variance must be positive".into()));
    }
    Ok(())
}

/// Generate fractional Gaussian noise per an [`FgnSpec`]. The circulant-embedding
/// path draws the exact covariance in O(N log N); the recursive conditional
/// (Durbin–Levinson) path is exact too and covers non-power-of-two lengths.
/// Deterministic per seed.
pub fn gen_fgn(spec: &FgnSpec, grid: &TimestampGrid) -> Result<SyntheticSeries> {
    validate_fgn_spec(spec)?;
    let values = match spec.method {
        FgnMethod::CirculantEmbedding => fgn_circulant(spec)?,
        FgnMethod::Hosking => fgn_hosking(spec),
        FgnMethod::Auto => {
            if spec.length.is_power_of_two() && spec.length >= 2 {
                match fgn_circulant(spec) {
                    Ok(v) => v,
                    Err(Error::Degenerate(_)) => fgn_hosking(spec),
                    Err(e) => return Err(e),
                }
            } else {
                fgn_hosking(spec)
            }
        }
    };
    let series =
        AnalysisSeries::with_uniform_clock(values, grid.start, grid.spacing_seconds)?;
    Ok(SyntheticSeries { series, spec: SyntheticSpec::Fgn(*spec), grid: *grid })
}

/// Davies–Harte circulant embedding: eigenvalues of the length-2N circulant
/// extension of the covariance must be nonnegative; complex spectral draws
/// with Hermitian symmetry then invert to an exact sample.
fn fgn_circulant(spec: &FgnSpec) -> Result<Vec<f64>> {
    let n = spec.length;
    if n < 2 {
        // a single draw needs no embedding
        let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
        let z: f64 = rng.sample(StandardNormal);
        return Ok(vec![z * spec.variance.sqrt()]);
    }
    let m = 2 * n;
    let gamma: Vec<f64> =
        (0..=n).map(|k| fgn_autocovariance(k, spec.hurst_h) * spec.variance).collect();
    // circulant first row: γ0..γN, γ(N−1)..γ1
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(m);
    buf.extend(gamma.iter().map(|g| Complex::new(*g, 0.0)));
    buf.extend(gamma[1..n].iter().rev().map(|g| Complex::new(*g, 0.0)));
    debug_assert_eq!(buf.len(), m);

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let mut eigen: Vec<f64> = buf.iter().map(|z| z.re).collect();
    let max_eigen = eigen.iter().cloned().fold(0.0f64, f64::max);
    let tolerance = 1e-8 * max_eigen;
    if eigen.iter().any(|&l| l < -tolerance) {
        return Err(Error::Degenerate(format!(
            "circulant embedding not nonnegative-definite at H={}, N={n}",
            spec.hurst_h
        )));
    }
    for l in &mut eigen {
        if *l < 0.0 {
            *l = 0.0;
        }
    }

    // Spectral draws, in a fixed order so output is reproducible: the two
    // real frequencies first, then one (A, B) pair per conjugate pair.
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut w = vec![Complex::new(0.0, 0.0); m];
    let z0: f64 = rng.sample(StandardNormal);
    let zn: f64 = rng.sample(StandardNormal);
    w[0] = Complex::new(eigen[0].sqrt() * z0, 0.0);
    w[n] = Complex::new(eigen[n].sqrt() * zn, 0.0);
    for k in 1..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let scale = (eigen[k] / 2.0).sqrt();
        w[k] = Complex::new(scale * a, scale * b);
        w[m - k] = w[k].conj();
    }
    planner.plan_fft_inverse(m).process(&mut w);
    // the inverse transform is unnormalized: divide by √M for unit-variance
    // spectral scaling
    let norm = 1.0 / (m as f64).sqrt();
    Ok(w[..n].iter().map(|z| z.re * norm).collect())
}

/// Recursive conditional sampling (Durbin–Levinson): draw each value from
/// its exact conditional distribution given the past. O(N²), used as the
/// fallback and for non-power-of-two lengths.
fn fgn_hosking(spec: &FgnSpec) -> Vec<f64> {
    let n = spec.length;
    let gamma: Vec<f64> =
        (0..n).map(|k| fgn_autocovariance(k, spec.hurst_h) * spec.variance).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(n);
    let first: f64 = rng.sample(StandardNormal);
    values.push(first * gamma[0].sqrt());
    if n == 1 {
        return values;
    }
    let mut phi: Vec<f64> = Vec::with_capacity(n); // AR coefficients, newest order
    let mut v = gamma[0]; // innovation variance
    for t in 1..n {
        let kappa = if t == 1 {
            gamma[1] / gamma[0]
        } else {
            let acc: f64 = (0..phi.len()).map(|j| phi[j] * gamma[t - 1 - j]).sum();
            (gamma[t] - acc) / v
        };
        if t > 1 {
            let old = phi.clone();
            for j in 0..old.len() {
                phi[j] = old[j] - kappa * old[old.len() - 1 - j];
            }
        }
        phi.push(kappa);
        v *= 1.0 - kappa * kappa;
        let mean: f64 = (0..phi.len()).map(|j| phi[j] * values[t - 1 - j]).sum();
        let z: f64 = rng.sample(StandardNormal);
        values.push(mean + z * v.max(0.0).sqrt());
    }
    values
}

/// IID Gaussian draws with the given variance (variance 0 yields constant
/// zeros). Deterministic per seed.
pub fn gen_gaussian_iid(
    length: usize,
    seed: u64,
    variance: f64,
    grid: &TimestampGrid,
) -> Result<SyntheticSeries> {
    if length == 0 {
        return Err(Error::Config("series length must be at least 1".into()));
    }
    if variance < 0.0 {
        return Err(Error::Config("variance must be nonnegative".into()));
    }
    let sd = variance.sqrt();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let values: Vec<f64> =
        (0..length).map(|_| rng.sample::<f64, _>(StandardNormal) * sd).collect();
    let series = AnalysisSeries::with_uniform_clock(values, grid.start, grid.spacing_seconds)?;
    Ok(SyntheticSeries {
        series,
        spec: SyntheticSpec::GaussianIid { length, seed, variance },
        grid: *grid,
    })
}
