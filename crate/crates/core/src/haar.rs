//! Orthonormal 2D Haar wavelets, the sparsity basis, and mutual coherence.
//!
//! The decomposition is the usual pyramid: each level applies a 1D Haar step
//! to every row and then every column of the current low-pass block, which
//! then shrinks by two in each direction. Coefficients are laid out in place
//! (low-pass block in the top-left corner).

use crate::error::{Error, Result};
use crate::noiselet::{ComplexField, Geometry};

/// Haar coefficients with the same row-major layout as the image.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletCoeffs {
    pub values: Vec<f64>,
    pub geometry: Geometry,
    pub levels: u32,
}

impl WaveletCoeffs {
    pub fn zeros(geometry: Geometry, levels: u32) -> Self {
        Self { values: vec![0.0; geometry.n()], geometry, levels }
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Full decomposition depth for a geometry.
pub fn max_levels(geometry: Geometry) -> u32 {
    geometry.rows().min(geometry.cols()).trailing_zeros()
}

fn check(geometry: Geometry, levels: u32, len: usize) -> Result<()> {
    if len != geometry.n() {
        return Err(Error::LengthMismatch { expected: geometry.n(), actual: len });
    }
    if levels > max_levels(geometry) {
        return Err(Error::InvalidArgument(format!(
            "{levels} Haar levels requested, at most {} for {}x{}",
            max_levels(geometry),
            geometry.rows(),
            geometry.cols()
        )));
    }
    Ok(())
}

fn step_forward(data: &mut [f64], scratch: &mut [f64]) {
    let half = data.len() / 2;
    for i in 0..half {
        let (a, b) = (data[2 * i], data[2 * i + 1]);
        scratch[i] = (a + b) * std::f64::consts::FRAC_1_SQRT_2;
        scratch[half + i] = (a - b) * std::f64::consts::FRAC_1_SQRT_2;
    }
    data.copy_from_slice(&scratch[..data.len()]);
}

fn step_inverse(data: &mut [f64], scratch: &mut [f64]) {
    let half = data.len() / 2;
    for i in 0..half {
        let (s, d) = (data[i], data[half + i]);
        scratch[2 * i] = (s + d) * std::f64::consts::FRAC_1_SQRT_2;
        scratch[2 * i + 1] = (s - d) * std::f64::consts::FRAC_1_SQRT_2;
    }
    data.copy_from_slice(&scratch[..data.len()]);
}

/// Applies `step` to every row of the top-left `h × w` block, then to every
/// column of it.
fn block_pass(
    values: &mut [f64],
    cols: usize,
    h: usize,
    w: usize,
    rows_first: bool,
    step: fn(&mut [f64], &mut [f64]),
) {
    let mut scratch = vec![0.0; h.max(w)];
    let mut column = vec![0.0; h];
    let do_rows = |values: &mut [f64], scratch: &mut [f64]| {
        for r in 0..h {
            step(&mut values[r * cols..r * cols + w], scratch);
        }
    };
    let do_cols = |values: &mut [f64], scratch: &mut [f64], column: &mut [f64]| {
        for c in 0..w {
            for r in 0..h {
                column[r] = values[r * cols + c];
            }
            step(column, scratch);
            for r in 0..h {
                values[r * cols + c] = column[r];
            }
        }
    };
    if rows_first {
        do_rows(values, &mut scratch);
        do_cols(values, &mut scratch, &mut column);
    } else {
        do_cols(values, &mut scratch, &mut column);
        do_rows(values, &mut scratch);
    }
}

/// Multilevel orthonormal 2D Haar analysis of a row-major image.
pub fn haar_analyze(image: &[f64], geometry: Geometry, levels: u32) -> Result<WaveletCoeffs> {
    check(geometry, levels, image.len())?;
    let mut values = image.to_vec();
    let (mut h, mut w) = (geometry.rows(), geometry.cols());
    for _ in 0..levels {
        block_pass(&mut values, geometry.cols(), h, w, true, step_forward);
        h /= 2;
        w /= 2;
    }
    Ok(WaveletCoeffs { values, geometry, levels })
}

/// Inverse of [`haar_analyze`].
pub fn haar_synthesize(coeffs: &WaveletCoeffs) -> Result<Vec<f64>> {
    let geometry = coeffs.geometry;
    check(geometry, coeffs.levels, coeffs.values.len())?;
    let mut values = coeffs.values.clone();
    for level in (0..coeffs.levels).rev() {
        let h = geometry.rows() >> level;
        let w = geometry.cols() >> level;
        block_pass(&mut values, geometry.cols(), h, w, false, step_inverse);
    }
    Ok(values)
}

/// Dense orthonormal 1D Haar matrix of size `n` (full depth); row `k` is the
/// `k`-th basis function. Intended for coherence checks on small sizes.
pub fn haar_matrix_1d(n: usize) -> Result<Vec<f64>> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let levels = n.trailing_zeros();
    let mut out = vec![0.0; n * n];
    let mut scratch = vec![0.0; n];
    for k in 0..n {
        let row = &mut out[k * n..(k + 1) * n];
        row[k] = 1.0;
        for level in (0..levels).rev() {
            step_inverse(&mut row[..n >> level], &mut scratch);
        }
    }
    Ok(out)
}

/// Dense 2D Haar basis: row `k` of the returned `n × n` row-major matrix is
/// the image synthesised from the `k`-th unit coefficient.
pub fn haar_basis(geometry: Geometry, levels: u32) -> Result<Vec<f64>> {
    let n = geometry.n();
    check(geometry, levels, n)?;
    let mut out = vec![0.0; n * n];
    let mut coeffs = WaveletCoeffs::zeros(geometry, levels);
    for k in 0..n {
        coeffs.values[k] = 1.0;
        let atom = haar_synthesize(&coeffs)?;
        coeffs.values[k] = 0.0;
        out[k * n..(k + 1) * n].copy_from_slice(&atom);
    }
    Ok(out)
}

/// Mutual coherence `sqrt(n) · max_{j,k} |<φ_j, ψ_k>|` between the rows of a
/// dense complex basis and the rows of a dense real basis (both `n × n`).
pub fn coherence(phi: &ComplexField, psi: &[f64]) -> Result<f64> {
    let n = phi.rows();
    if phi.cols() != n {
        return Err(Error::LengthMismatch { expected: n, actual: phi.cols() });
    }
    if psi.len() != n * n {
        return Err(Error::LengthMismatch { expected: n * n, actual: psi.len() });
    }
    let (re, im) = (phi.re(), phi.im());
    let mut best = 0.0f64;
    for j in 0..n {
        let (rj, ij) = (&re[j * n..(j + 1) * n], &im[j * n..(j + 1) * n]);
        for k in 0..n {
            let pk = &psi[k * n..(k + 1) * n];
            let (mut sr, mut si) = (0.0, 0.0);
            for l in 0..n {
                sr += rj[l] * pk[l];
                si += ij[l] * pk[l];
            }
            best = best.max(sr.hypot(si));
        }
    }
    Ok((n as f64).sqrt() * best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn constant_image_has_single_coefficient() {
        let g = Geometry::square(16).unwrap();
        let c = 0.37;
        let f = haar_analyze(&vec![c; g.n()], g, max_levels(g)).unwrap();
        assert!((f.values[0] - c * 16.0).abs() < 1e-12);
        assert!(f.values[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_by_two_by_hand() {
        let (a, b, c, d) = (0.9, 0.2, -0.4, 1.3);
        let g = Geometry::square(2).unwrap();
        let f = haar_analyze(&[a, b, c, d], g, 1).unwrap();
        let want = [
            (a + b + c + d) / 2.0,
            (a - b + c - d) / 2.0,
            (a + b - c - d) / 2.0,
            (a - b - c + d) / 2.0,
        ];
        for (got, want) in f.values.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_64() {
        let g = Geometry::square(64).unwrap();
        let x = random(g.n(), 1);
        for levels in [1, 3, max_levels(g)] {
            let back = haar_synthesize(&haar_analyze(&x, g, levels).unwrap()).unwrap();
            let err = back.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn rectangular_round_trip() {
        let g = Geometry::new(8, 32).unwrap();
        let x = random(g.n(), 2);
        let f = haar_analyze(&x, g, max_levels(g)).unwrap();
        let back = haar_synthesize(&f).unwrap();
        assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn synthesis_edge_cases() {
        let g = Geometry::square(8).unwrap();
        let zero = WaveletCoeffs::zeros(g, 3);
        assert!(haar_synthesize(&zero).unwrap().iter().all(|&v| v == 0.0));

        let mut atom = WaveletCoeffs::zeros(g, 3);
        atom.values[0] = 1.0;
        let img = haar_synthesize(&atom).unwrap();
        assert!(img.iter().all(|v| (v - 1.0 / 8.0).abs() < 1e-15));
    }

    #[test]
    fn bad_dimensions() {
        let g = Geometry::square(8).unwrap();
        assert!(haar_analyze(&[0.0; 10], g, 1).is_err());
        assert!(haar_analyze(&[0.0; 64], g, 4).is_err());
    }

    #[test]
    fn haar_matrix_1d_is_orthonormal() {
        let n = 16;
        let h = haar_matrix_1d(n).unwrap();
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|l| h[a * n + l] * h[b * n + l]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_self_coherence_is_sqrt_n() {
        let n = 16;
        let mut id = vec![0.0; n * n];
        for k in 0..n {
            id[k * n + k] = 1.0;
        }
        let phi = ComplexField::from_real(&id, n, n).unwrap();
        assert!((coherence(&phi, &id).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_dimension_mismatch() {
        let phi = ComplexField::zeros(4, 4);
        assert!(coherence(&phi, &[0.0; 15]).is_err());
    }
}
