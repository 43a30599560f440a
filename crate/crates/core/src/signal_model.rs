//! Ground-truth spectral models, sample synthesis, noise, and torus geometry.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Torus distance below which two frequencies are treated as identical.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

/// Default number of candidate draws spent by [`random_model`] per frequency.
pub const DEFAULT_RETRY_CAP: usize = 10_000;

/// Wrap a frequency into `[0, 1)`.
pub fn reduce(omega: f64) -> f64 {
    let r = omega.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Wrap-around distance on the unit torus, always in `[0, 0.5]`.
pub fn torus_distance(a: f64, b: f64) -> f64 {
    // reducing each point first keeps the result exactly symmetric
    let d = (reduce(a) - reduce(b)).abs();
    d.min(1.0 - d)
}

/// Symmetric Hausdorff distance between two frequency sets under the torus
/// metric.
pub fn hausdorff_distance(s: &[f64], t: &[f64]) -> Result<f64> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::EmptySet);
    }
    let one_sided = |from: &[f64], to: &[f64]| {
        from.iter()
            .map(|&a| to.iter().map(|&b| torus_distance(a, b)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(s, t).max(one_sided(t, s)))
}

/// Frequencies and amplitudes of `y(t) = Σ x_j exp(−2πi ω_j t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct SpectralModel {
    frequencies: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    frequencies: Vec<f64>,
    amplitudes: Vec<[f64; 2]>,
}

impl TryFrom<RawModel> for SpectralModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let amplitudes = raw
            .amplitudes
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        SpectralModel::new(raw.frequencies, amplitudes)
    }
}

impl From<SpectralModel> for RawModel {
    fn from(m: SpectralModel) -> Self {
        RawModel {
            frequencies: m.frequencies,
            amplitudes: m.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl SpectralModel {
    /// Frequencies are reduced into `[0, 1)`; they must be pairwise distinct
    /// (beyond [`DEDUP_TOLERANCE`]) and every amplitude must be nonzero.
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidModel("at least one frequency is required".into()));
        }
        if frequencies.len() != amplitudes.len() {
            return Err(Error::InvalidModel(format!(
                "{} frequencies but {} amplitudes",
                frequencies.len(),
                amplitudes.len()
            )));
        }
        if let Some(bad) = frequencies.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidModel(format!("non-finite frequency {bad}")));
        }
        if let Some(bad) = amplitudes.iter().find(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::InvalidModel(format!("non-finite amplitude {bad}")));
        }
        if amplitudes.iter().any(|x| x.norm() == 0.0) {
            return Err(Error::InvalidModel("amplitudes must be nonzero".into()));
        }
        let frequencies: Vec<f64> = frequencies.into_iter().map(reduce).collect();
        for (i, &a) in frequencies.iter().enumerate() {
            for &b in &frequencies[i + 1..] {
                if torus_distance(a, b) <= DEDUP_TOLERANCE {
                    return Err(Error::InvalidModel(format!(
                        "frequencies {a} and {b} coincide on the torus"
                    )));
                }
            }
        }
        Ok(Self {
            frequencies,
            amplitudes,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn sparsity(&self) -> usize {
        self.frequencies.len()
    }

    pub fn x_min(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn x_max(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Smallest pairwise torus distance, `None` for a single frequency.
    pub fn min_separation(&self) -> Option<f64> {
        min_pairwise(&self.frequencies)
    }

    /// Same amplitudes with every frequency moved by `shift` (mod 1).
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(
            self.frequencies.iter().map(|w| w + shift).collect(),
            self.amplitudes.clone(),
        )
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub(crate) fn min_pairwise(freqs: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, &a) in freqs.iter().enumerate() {
        for &b in &freqs[i + 1..] {
            let d = torus_distance(a, b);
            best = Some(best.map_or(d, |m| m.min(d)));
        }
    }
    best
}

/// Complex samples at `t = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector {
    values: Vec<Complex64>,
}

impl SampleVector {
    /// Needs at least two samples (`M ≥ 1`).
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples (M >= 1), got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Highest sample index `M`.
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Writes `k,re,im` rows under a header line.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["k", "re", "im"])?;
        for (k, z) in self.values.iter().enumerate() {
            w.write_record([k.to_string(), format!("{:e}", z.re), format!("{:e}", z.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `k,re,im` rows; a header line is optional and rows must be in
    /// order `k = 0, 1, ...`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut values = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            if line == 0 && record.get(0) == Some("k") {
                continue;
            }
            if record.len() != 3 {
                return Err(Error::Parse(format!(
                    "sample row {} has {} fields, expected k,re,im",
                    line + 1,
                    record.len()
                )));
            }
            let field = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))
            };
            let k = record[0]
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
            if k != values.len() {
                return Err(Error::Parse(format!(
                    "sample index {k} out of order (expected {})",
                    values.len()
                )));
            }
            values.push(Complex64::new(field(1)?, field(2)?));
        }
        Self::new(values)
    }
}

impl std::ops::Add for &SampleVector {
    type Output = SampleVector;

    fn add(self, rhs: &SampleVector) -> SampleVector {
        assert_eq!(self.values.len(), rhs.values.len(), "sample lengths differ");
        SampleVector {
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    nu: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(nu: f64, seed: u64) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise level must be finite and nonnegative, got {nu}"
            )));
        }
        Ok(Self { nu, seed })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Samples `y_k = Σ_j x_j exp(−2πi ω_j k)` for `k = 0..=M`.
pub fn synthesize(model: &SpectralModel, degree: usize) -> Result<SampleVector> {
    if degree < 1 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    let values = (0..=degree)
        .map(|k| {
            model
                .frequencies
                .iter()
                .zip(&model.amplitudes)
                .map(|(&w, &x)| {
                    // reduce the phase before evaluating to keep large k accurate
                    let phase = -2.0 * PI * reduce(w * k as f64);
                    x * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect();
    SampleVector::new(values)
}

/// The noise vector alone: i.i.d. `N(0, ν²) + i N(0, ν²)` per entry.
pub fn noise(len: usize, spec: &NoiseSpec) -> Vec<Complex64> {
    if spec.nu == 0.0 {
        return vec![Complex64::new(0.0, 0.0); len];
    }
    let mut rng = rng::rng(spec.seed);
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(spec.nu * re, spec.nu * im)
        })
        .collect()
}

pub fn add_noise(y: &SampleVector, spec: &NoiseSpec) -> SampleVector {
    if spec.nu == 0.0 {
        return y.clone();
    }
    let eps = noise(y.values.len(), spec);
    SampleVector {
        values: y.values.iter().zip(eps).map(|(a, b)| a + b).collect(),
    }
}

/// `ν √(2(M+1)) / ‖y‖₂`.
pub fn nsr(y: &SampleVector, nu: f64) -> Result<f64> {
    let norm = y.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(nu * (2.0 * y.values.len() as f64).sqrt() / norm)
}

pub fn nu_for_target_nsr(y: &SampleVector, target_nsr: f64) -> Result<f64> {
    if !(target_nsr >= 0.0 && target_nsr.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target NSR must be finite and nonnegative, got {target_nsr}"
        )));
    }
    let norm = y.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(target_nsr * norm / (2.0 * y.values.len() as f64).sqrt())
}

/// How [`random_model`] draws amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmplitudeLaw {
    /// `x_j = exp(iθ_j)`, θ uniform on `[0, 2π)`.
    UnitRandomPhase,
    /// Real amplitudes with `|x|` uniform on `[1, ratio]`; one entry is pinned
    /// to 1 and another to `ratio` so the dynamic range is exact.
    RealDynamicRange {
        ratio: f64,
        #[serde(default)]
        signed: bool,
    },
}

impl Default for AmplitudeLaw {
    fn default() -> Self {
        AmplitudeLaw::UnitRandomPhase
    }
}

/// How [`random_model`] places frequencies relative to the separation band.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// A uniform start followed by `s − 1` consecutive gaps drawn uniformly
    /// from the band, so every nearest-neighbour distance lies in it. The
    /// closing gap across the wrap-around must be at least `low`.
    #[default]
    ConsecutiveGaps,
    /// Uniform rejection sampling: candidates keep at least `low` from every
    /// accepted frequency and the finished set is redrawn while its minimum
    /// separation exceeds `high`.
    MinSeparation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModelSpec {
    pub sparsity: usize,
    /// Band `[low, high]` for the minimum pairwise separation, in RL.
    pub separation_rl: (f64, f64),
    pub degree: usize,
    pub amplitude_law: AmplitudeLaw,
    pub placement: Placement,
    pub seed: u64,
    pub retry_cap: usize,
}

impl RandomModelSpec {
    pub fn new(
        sparsity: usize,
        separation_rl: (f64, f64),
        degree: usize,
        amplitude_law: AmplitudeLaw,
        seed: u64,
    ) -> Self {
        Self {
            sparsity,
            separation_rl,
            degree,
            amplitude_law,
            placement: Placement::default(),
            seed,
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}

/// Random instance whose minimum pairwise separation lies in the requested
/// RL band, placed according to [`Placement`].
///
/// Each frequency gets at most `retry_cap` candidates and the whole set at
/// most `retry_cap` redraws before giving up.
pub fn random_model(spec: &RandomModelSpec) -> Result<SpectralModel> {
    let s = spec.sparsity;
    let (low, high) = spec.separation_rl;
    if s == 0 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    if spec.degree < 1 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    if !(low >= 0.0 && low <= high) {
        return Err(Error::InvalidArgument(format!(
            "separation band [{low}, {high}] is not a valid interval"
        )));
    }
    let rl = 1.0 / spec.degree as f64;
    let min_sep = low * rl;
    if s > 1 && s as f64 * min_sep >= 1.0 {
        return Err(Error::InfeasibleSeparation(format!(
            "{s} frequencies at {low} RL with M = {} do not fit on the torus",
            spec.degree
        )));
    }
    if s > 1 && min_sep <= DEDUP_TOLERANCE {
        return Err(Error::InvalidArgument(
            "minimum separation must exceed the deduplication tolerance".into(),
        ));
    }

    let mut rng = rng::rng(spec.seed);
    let cap = spec.retry_cap.max(1);
    let mut frequencies = Vec::with_capacity(s);

    let placed = match spec.placement {
        Placement::ConsecutiveGaps => place_by_gaps(&mut rng, &mut frequencies, s, low * rl, high * rl, cap),
        Placement::MinSeparation => place_by_rejection(&mut rng, &mut frequencies, s, low * rl, high * rl, cap),
    };
    if !placed {
        return Err(Error::RetriesExhausted(cap));
    }
    frequencies.sort_by(f64::total_cmp);

    let amplitudes = match spec.amplitude_law {
        AmplitudeLaw::UnitRandomPhase => (0..s)
            .map(|_| Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>()))
            .collect(),
        AmplitudeLaw::RealDynamicRange { ratio, signed } => {
            if !(ratio >= 1.0 && ratio.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "dynamic range must be finite and >= 1, got {ratio}"
                )));
            }
            let mut mags: Vec<f64> = (0..s).map(|_| 1.0 + (ratio - 1.0) * rng.random::<f64>()).collect();
            if s >= 2 {
                let lo_idx = rng.random_range(0..s);
                let mut hi_idx = rng.random_range(0..s - 1);
                if hi_idx >= lo_idx {
                    hi_idx += 1;
                }
                mags[lo_idx] = 1.0;
                mags[hi_idx] = ratio;
            } else {
                mags[0] = 1.0;
            }
            mags.into_iter()
                .map(|m| {
                    let sign = if signed && rng.random::<bool>() { -1.0 } else { 1.0 };
                    Complex64::new(sign * m, 0.0)
                })
                .collect()
        }
    };
    SpectralModel::new(frequencies, amplitudes)
}

fn place_by_gaps(rng: &mut rng::Rng, frequencies: &mut Vec<f64>, s: usize, low: f64, high: f64, cap: usize) -> bool {
    for _ in 0..cap {
        frequencies.clear();
        let mut w: f64 = rng.random();
        frequencies.push(w);
        for _ in 1..s {
            w += low + (high - low) * rng.random::<f64>();
            frequencies.push(reduce(w));
        }
        // the closing gap is the distance from the last point back to the first
        let closing = 1.0 - (w - frequencies[0]);
        if s == 1 || closing >= low {
            return true;
        }
    }
    false
}

fn place_by_rejection(
    rng: &mut rng::Rng,
    frequencies: &mut Vec<f64>,
    s: usize,
    min_sep: f64,
    high: f64,
    cap: usize,
) -> bool {
    for _ in 0..cap {
        frequencies.clear();
        let mut stuck = false;
        while frequencies.len() < s {
            let mut accepted = false;
            for _ in 0..cap {
                let candidate: f64 = rng.random();
                if frequencies.iter().all(|&w| torus_distance(w, candidate) >= min_sep) {
                    frequencies.push(candidate);
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                stuck = true;
                break;
            }
        }
        if stuck {
            continue;
        }
        if min_pairwise(frequencies).is_none_or(|d| d <= high) {
            return true;
        }
    }
    false
}
