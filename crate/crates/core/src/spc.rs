//! Single-pixel detector simulation and restoration of complex noiselet
//! measurements from real binary-pattern readings.
//!
//! Each reading is `ỹ_t = <p_t, X>`; one extra unmodulated reading gives the
//! total intensity `T = <I_v, X>`. Pair `j` of readings restores
//!
//! ```text
//! odd q:  y_j = (2·ỹ_{2j-1} + 2i·ỹ_{2j} - (1+i)·T) / sqrt(2n)
//! even q: y_j = ((1+i)·ỹ_{2j-1} + (1-i)·ỹ_{2j} - T) / sqrt(n)
//! ```
//!
//! and its mirror `y_{m+1-j} = conj(y_j)`, i.e. `m` complex coefficients
//! from `m + 1` readings.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::noiselet::{ComplexField, Geometry};
use crate::patterns::{PatternSource, SamplingPlan};

/// Default detector noise, relative to the mean reading.
pub const DEFAULT_NOISE_SIGMA: f64 = 4e-4;

/// Scene reflectance with values in `[0, 1]` and power-of-two sides.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneImage {
    image: Image,
    geometry: Geometry,
}

impl SceneImage {
    /// Clamps pixels into `[0, 1]`.
    pub fn new(mut image: Image) -> Result<Self> {
        let geometry = image.geometry()?;
        for p in image.pixels_mut() {
            *p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
        }
        Ok(Self { image, geometry })
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn pixels(&self) -> &[f64] {
        self.image.pixels()
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    /// One reading per pattern.
    Plain,
    /// Pattern and complement, `(<p, X> - <I_v - p, X>)/2` per reading.
    Differential,
}

/// Detector readings for one plan. Serialises to JSON for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub plan: SamplingPlan,
    pub mode: MeasurementMode,
    /// Noise level relative to the mean noiseless plain reading.
    pub noise_sigma: f64,
    /// Absolute standard deviation actually added to each reading.
    pub noise_std: f64,
    pub seed: u64,
    pub y_tilde: Vec<f64>,
    /// Estimate of `<I_v, X>`, the same in both modes.
    pub total_intensity: f64,
}

impl MeasurementRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: Self = serde_json::from_str(text)?;
        if record.y_tilde.len() != record.plan.m() {
            return Err(Error::LengthMismatch {
                expected: record.plan.m(),
                actual: record.y_tilde.len(),
            });
        }
        Ok(record)
    }

    /// Readings converted to plain mode: a differential reading is
    /// `<p, X> - T/2`, so adding `T/2` back gives `<p, X>`.
    pub fn plain_readings(&self) -> Vec<f64> {
        match self.mode {
            MeasurementMode::Plain => self.y_tilde.clone(),
            MeasurementMode::Differential => {
                let half = self.total_intensity / 2.0;
                self.y_tilde.iter().map(|y| y + half).collect()
            }
        }
    }
}

fn dot(pattern: &[u8], x: &[f64]) -> f64 {
    pattern.iter().zip(x).map(|(&p, &v)| f64::from(p) * v).sum()
}

/// Simulates the detector for every pattern of `source` against `x`.
///
/// Noise is additive Gaussian with standard deviation
/// `noise_sigma · mean_t <p_t, X>`, drawn from a ChaCha8 stream seeded with
/// `seed`: one draw per pattern reading in order, then one for the total
/// intensity.
pub fn measure(
    source: &impl PatternSource,
    x: &SceneImage,
    noise_sigma: f64,
    mode: MeasurementMode,
    seed: u64,
) -> Result<MeasurementRecord> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sigma {noise_sigma} must be >= 0")));
    }
    let plan = source.plan();
    if plan.geometry() != x.geometry() {
        return Err(Error::LengthMismatch { expected: plan.n(), actual: x.pixels().len() });
    }
    let pixels = x.pixels();
    let mut clean = Vec::with_capacity(plan.m());
    source.for_each_pattern(&mut |_, p| {
        if p.len() != pixels.len() {
            return Err(Error::LengthMismatch { expected: pixels.len(), actual: p.len() });
        }
        clean.push(dot(p, pixels));
        Ok(())
    })?;
    if clean.len() != plan.m() {
        return Err(Error::LengthMismatch { expected: plan.m(), actual: clean.len() });
    }
    let total: f64 = pixels.iter().sum();
    let mean_signal = if clean.is_empty() { 0.0 } else { clean.iter().sum::<f64>() / clean.len() as f64 };
    let noise_std = noise_sigma * mean_signal;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_std)
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;
    let mut noise = || if noise_std > 0.0 { normal.sample(&mut rng) } else { 0.0 };

    let y_tilde = clean
        .iter()
        .map(|&c| match mode {
            MeasurementMode::Plain => c + noise(),
            MeasurementMode::Differential => (c - (total - c)) / 2.0 + noise(),
        })
        .collect();
    let total_intensity = total + noise();

    Ok(MeasurementRecord {
        plan: plan.clone(),
        mode,
        noise_sigma,
        noise_std,
        seed,
        y_tilde,
        total_intensity,
    })
}

/// Restores the `m` complex noiselet coefficients `Y = Φ·X` (plan order)
/// from a record.
pub fn restore_complex(record: &MeasurementRecord) -> Result<ComplexField> {
    let plan = &record.plan;
    let m = plan.m();
    if record.y_tilde.len() != m {
        return Err(Error::LengthMismatch { expected: m, actual: record.y_tilde.len() });
    }
    let n = plan.n() as f64;
    let t = record.total_intensity;
    let y = record.plain_readings();
    let (mut re, mut im) = (vec![0.0; m], vec![0.0; m]);
    for j in 0..m / 2 {
        let (y1, y2) = (y[2 * j], y[2 * j + 1]);
        let (r, i) = if plan.order().is_odd() {
            let s = 1.0 / (2.0 * n).sqrt();
            ((2.0 * y1 - t) * s, (2.0 * y2 - t) * s)
        } else {
            let s = 1.0 / n.sqrt();
            ((y1 + y2 - t) * s, (y1 - y2) * s)
        };
        re[j] = r;
        im[j] = i;
        re[m - 1 - j] = r;
        im[m - 1 - j] = -i;
    }
    ComplexField::vector(re, im)
}

/// Detector exposures behind a record: `m + 1` in plain mode, twice that in
/// differential mode.
pub fn measurement_count(record: &MeasurementRecord) -> usize {
    measurement_count_for(record.mode, record.plan.m())
}

pub fn measurement_count_for(mode: MeasurementMode, m: usize) -> usize {
    match mode {
        MeasurementMode::Plain => m + 1,
        MeasurementMode::Differential => 2 * (m + 1),
    }
}

/// Planning estimate `ceil(C · S · ln(n) · mu²)` of the measurements
/// sufficient for recovering an `S`-sparse signal.
pub fn required_measurements(s: usize, n: usize, mu: f64, c: f64) -> Result<u64> {
    if s == 0 {
        return Err(Error::InvalidArgument("sparsity S must be >= 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("n must be >= 2".into()));
    }
    if !(mu >= 1.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("coherence {mu} must be >= 1")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("constant C = {c} must be > 0")));
    }
    Ok((c * s as f64 * (n as f64).ln() * mu * mu).ceil() as u64)
}

/// Expected l2 norm of the noise that the record's readings put on the
/// restored vector `Y`.
///
/// Per mirror pair the restored coefficient picks up `5σ²/n` of variance in
/// plain mode (`4σ²/n` from the two readings, `σ²/n` from the shared total
/// intensity) and `4σ²/n` in differential mode, where the total-intensity
/// noise cancels.
pub fn noise_epsilon(record: &MeasurementRecord) -> f64 {
    let per_row = match record.mode {
        MeasurementMode::Plain => 5.0,
        MeasurementMode::Differential => 4.0,
    };
    let (m, n) = (record.plan.m() as f64, record.plan.n() as f64);
    record.noise_std * (per_row * m / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noiselet::{dense_noiselet, NoiseletOrder};
    use crate::patterns::{build_patterns, make_plan, SamplingPlan};
    use rand::Rng;

    fn scene(g: Geometry, seed: u64) -> SceneImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let px = (0..g.n()).map(|_| rng.gen_range(0.0..1.0)).collect();
        SceneImage::new(Image::new(g.rows(), g.cols(), px).unwrap()).unwrap()
    }

    fn dense_phi_x(plan: &SamplingPlan, x: &SceneImage) -> ComplexField {
        let dense = dense_noiselet(plan.order()).unwrap();
        let xv = ComplexField::from_real(x.pixels(), plan.n(), 1).unwrap();
        let full = dense.matvec(&xv).unwrap();
        let rows = plan.rows();
        let vals: Vec<_> = rows.iter().map(|&k| full.get(k - 1)).collect();
        ComplexField::from_complex(&vals, rows.len(), 1).unwrap()
    }

    #[test]
    fn scene_is_clamped() {
        let img = Image::new(1, 2, vec![-0.5, 1.5]).unwrap();
        assert_eq!(SceneImage::new(img).unwrap().pixels(), &[0.0, 1.0]);
        assert!(SceneImage::new(Image::zeros(3, 2)).is_err());
    }

    #[test]
    fn constant_image_readings() {
        let g = Geometry::square(4).unwrap();
        let plan = make_plan(g, 8, 0).unwrap();
        let set = build_patterns(&plan).unwrap();
        let ones = SceneImage::new(Image::new(4, 4, vec![1.0; 16]).unwrap()).unwrap();
        let rec = measure(&set, &ones, 0.0, MeasurementMode::Plain, 0).unwrap();
        let sums: Vec<f64> = set.patterns.iter().map(|p| p.iter().map(|&v| f64::from(v)).sum()).collect();
        assert_eq!(rec.y_tilde, sums);
        assert_eq!(rec.total_intensity, 16.0);

        let diff = measure(&set, &ones, 0.0, MeasurementMode::Differential, 0).unwrap();
        let expect: Vec<f64> = sums.iter().map(|s| (2.0 * s - 16.0) / 2.0).collect();
        assert_eq!(diff.y_tilde, expect);
    }

    #[test]
    fn all_ones_pattern_gives_sum() {
        let g = Geometry::square(2).unwrap();
        let plan = SamplingPlan::new(g, vec![1], 0).unwrap();
        let x = scene(g, 4);
        let set = crate::patterns::PatternSet { patterns: vec![vec![1; 4], vec![1; 4]], plan };
        let rec = measure(&set, &x, 0.0, MeasurementMode::Plain, 0).unwrap();
        let sum: f64 = x.pixels().iter().sum();
        assert!((rec.y_tilde[0] - sum).abs() < 1e-15);
    }

    #[test]
    fn restore_n2_matches_dense() {
        let g = Geometry::new(1, 2).unwrap();
        let plan = make_plan(g, 2, 0).unwrap();
        let x = SceneImage::new(Image::new(1, 2, vec![1.0, 0.0]).unwrap()).unwrap();
        let rec = measure(&build_patterns(&plan).unwrap(), &x, 0.0, MeasurementMode::Plain, 0).unwrap();
        let y = restore_complex(&rec).unwrap();
        assert!(y.max_abs_diff(&dense_phi_x(&plan, &x)) < 1e-12);
    }

    #[test]
    fn restore_zero_image() {
        let g = Geometry::square(4).unwrap();
        let plan = make_plan(g, 8, 1).unwrap();
        let x = SceneImage::new(Image::zeros(4, 4)).unwrap();
        let rec = measure(&build_patterns(&plan).unwrap(), &x, 0.0, MeasurementMode::Plain, 0).unwrap();
        assert_eq!(rec.total_intensity, 0.0);
        assert!(restore_complex(&rec).unwrap().norm() == 0.0);
    }

    #[test]
    fn restore_q4_half_sampling_both_modes() {
        let g = Geometry::square(4).unwrap();
        let plan = make_plan(g, 8, 3).unwrap();
        let set = build_patterns(&plan).unwrap();
        let x = scene(g, 9);
        let want = dense_phi_x(&plan, &x);
        for mode in [MeasurementMode::Plain, MeasurementMode::Differential] {
            let rec = measure(&set, &x, 0.0, mode, 0).unwrap();
            assert!(restore_complex(&rec).unwrap().max_abs_diff(&want) < 1e-9);
        }
    }

    #[test]
    fn restored_vector_is_conjugate_symmetric() {
        let g = Geometry::new(2, 16).unwrap();
        let plan = make_plan(g, 12, 5).unwrap();
        let rec = measure(&build_patterns(&plan).unwrap(), &scene(g, 1), 0.01, MeasurementMode::Plain, 3)
            .unwrap();
        let y = restore_complex(&rec).unwrap();
        for j in 0..6 {
            assert_eq!(y.get(j), y.get(11 - j).conj());
        }
    }

    #[test]
    fn measure_errors() {
        let g = Geometry::square(4).unwrap();
        let plan = make_plan(g, 4, 0).unwrap();
        let set = build_patterns(&plan).unwrap();
        let x = scene(g, 0);
        assert!(measure(&set, &x, -1.0, MeasurementMode::Plain, 0).is_err());
        let wrong = scene(Geometry::square(8).unwrap(), 0);
        assert!(measure(&set, &wrong, 0.0, MeasurementMode::Plain, 0).is_err());
    }

    #[test]
    fn counts() {
        assert_eq!(measurement_count_for(MeasurementMode::Plain, 16), 17);
        assert_eq!(measurement_count_for(MeasurementMode::Differential, 16), 34);
        assert_eq!(measurement_count_for(MeasurementMode::Plain, 0), 1);
    }

    #[test]
    fn required_measurement_estimate() {
        assert_eq!(required_measurements(10, 65536, 1.0, 1.0).unwrap(), 111);
        let base = 10.0 * (65536f64).ln();
        assert_eq!(required_measurements(10, 65536, 2.0, 1.0).unwrap(), (4.0 * base).ceil() as u64);
        assert!(required_measurements(0, 16, 1.0, 1.0).is_err());
        assert!(required_measurements(1, 1, 1.0, 1.0).is_err());
        assert!(required_measurements(1, 16, 0.5, 1.0).is_err());
        assert!(required_measurements(1, 16, 1.0, 0.0).is_err());
    }

    #[test]
    fn record_json_round_trip() {
        let g = Geometry::square(4).unwrap();
        let plan = make_plan(g, 6, 2).unwrap();
        let rec =
            measure(&build_patterns(&plan).unwrap(), &scene(g, 2), 0.1, MeasurementMode::Differential, 8)
                .unwrap();
        let back = MeasurementRecord::from_json(&rec.to_json().unwrap()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(NoiseletOrder::from_size(16).unwrap(), back.plan.order());
    }
}
