//! Deterministic test scenes.
//!
//! [`sparse_haar_image`] builds images that are exactly sparse in the Haar
//! basis. [`object_scene`] renders a photograph-like scene: a shaded,
//! cratered sphere and a few lit props on a dim, textured backdrop. Its
//! statistics (heavy-tailed Haar coefficients, mostly dark frame) are those
//! of a typical single-pixel camera target.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::haar::{self, WaveletCoeffs};
use crate::image::Image;
use crate::noiselet::Geometry;

/// An image in `[0, 1]` with exactly `max(1, round(fraction · n))` nonzero
/// full-depth Haar coefficients, the DC coefficient among them.
///
/// Off-DC values are standard normal on a uniformly random support; the
/// image is then shifted and scaled into `[0, 1]`, which only touches the
/// DC coefficient and the common scale.
pub fn sparse_haar_image(geometry: Geometry, fraction: f64, seed: u64) -> Result<(Image, WaveletCoeffs)> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} not in (0, 1]")));
    }
    let n = geometry.n();
    let s = ((fraction * n as f64).round() as usize).clamp(1, n);
    let levels = haar::max_levels(geometry);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = WaveletCoeffs::zeros(geometry, levels);
    for i in sample(&mut rng, n - 1, s - 1) {
        let v: f64 = StandardNormal.sample(&mut rng);
        coeffs.values[i + 1] = v;
    }
    let raw = haar::haar_synthesize(&coeffs)?;
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    // Keep a margin so the DC coefficient is never zero.
    let scale = 0.9 / span;
    let shift = 0.05 - lo * scale;
    let pixels: Vec<f64> = raw.iter().map(|v| v * scale + shift).collect();
    let coeffs = haar::haar_analyze(&pixels, geometry, levels)?;
    Ok((Image::new(geometry.rows(), geometry.cols(), pixels)?, coeffs))
}

fn smoothstep(edge0: f64, edge1: f64, x: f64) -> f64 {
    let t = ((x - edge0) / (edge1 - edge0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Bilinear value noise on a `cells × cells` lattice over the unit square.
struct ValueNoise {
    cells: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(cells: usize, rng: &mut impl Rng) -> Self {
        let lattice = (0..(cells + 1) * (cells + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { cells, lattice }
    }

    fn at(&self, u: f64, v: f64) -> f64 {
        let (x, y) = (u * self.cells as f64, v * self.cells as f64);
        let (i, j) = ((x.floor() as usize).min(self.cells - 1), (y.floor() as usize).min(self.cells - 1));
        let (fx, fy) = (smoothstep(0.0, 1.0, x - i as f64), smoothstep(0.0, 1.0, y - j as f64));
        let w = self.cells + 1;
        let g = |a: usize, b: usize| self.lattice[b * w + a];
        let top = g(i, j) * (1.0 - fx) + g(i + 1, j) * fx;
        let bottom = g(i, j + 1) * (1.0 - fx) + g(i + 1, j + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

const GRAIN: f64 = 0.12;

struct Crater {
    cx: f64,
    cy: f64,
    r: f64,
    depth: f64,
}

/// The reference object scene, `side × side` pixels with `side ≥ 8` a power
/// of two. The same `side` always yields the same image.
pub fn object_scene(side: usize) -> Result<Image> {
    let geometry = Geometry::square(side)?;
    if side < 8 {
        return Err(Error::InvalidArgument(format!("scene side {side} must be >= 8")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ce4e);
    let octaves: Vec<ValueNoise> = [4, 8, 16, 32, 64, 128].iter().map(|&c| ValueNoise::new(c, &mut rng)).collect();
    let craters: Vec<Crater> = (0..14)
        .map(|_| {
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let d = rng.gen_range(0.0..0.8f64).sqrt();
            Crater {
                cx: d * a.cos(),
                cy: d * a.sin(),
                r: rng.gen_range(0.05..0.16),
                depth: rng.gen_range(0.15..0.35),
            }
        })
        .collect();

    let px = 1.0 / side as f64;
    // Sphere centre and radius in unit coordinates; light from the upper left.
    let (sx, sy, sr) = (0.40, 0.44, 0.27);
    let light = {
        let l: [f64; 3] = [-0.55, -0.45, 0.70];
        let norm = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
        [l[0] / norm, l[1] / norm, l[2] / norm]
    };

    let image = Image::from_fn(geometry.rows(), geometry.cols(), |r, c| {
        let u = (c as f64 + 0.5) * px;
        let v = (r as f64 + 0.5) * px;
        let texture = |u: f64, v: f64| -> f64 {
            octaves[..4].iter().enumerate().map(|(o, nz)| nz.at(u, v) * 0.5f64.powi(o as i32)).sum::<f64>()
        };
        let grain = |u: f64, v: f64| -> f64 { octaves[4].at(u, v) + 0.8 * octaves[5].at(u, v) };

        // Backdrop: dim vertical falloff with faint mottling.
        let mut value = 0.035 + 0.03 * (1.0 - v) + 0.012 * texture(u, v);

        // Table top along the bottom edge with a soft front edge.
        let table = smoothstep(0.80 - px, 0.80 + px, v);
        value = value * (1.0 - table) + table * (0.16 + 0.05 * texture(u * 2.0, v) + 0.5 * GRAIN * grain(u, v) - 0.08 * (v - 0.8));

        // Box on the table, right side, with a lit face and a darker side.
        let (bx0, bx1, by0, by1) = (0.66, 0.86, 0.56, 0.84);
        let inside_box = smoothstep(bx0 - px, bx0 + px, u)
            * (1.0 - smoothstep(bx1 - px, bx1 + px, u))
            * smoothstep(by0 - px, by0 + px, v)
            * (1.0 - smoothstep(by1 - px, by1 + px, v));
        let face = if u < 0.80 { 0.55 - 0.25 * (v - by0) } else { 0.30 };
        value = value * (1.0 - inside_box) + inside_box * face;

        // Cylinder (can) on the left front.
        let (cx0, cx1, cy0, cy1) = (0.08, 0.22, 0.62, 0.86);
        let inside_can = smoothstep(cx0 - px, cx0 + px, u)
            * (1.0 - smoothstep(cx1 - px, cx1 + px, u))
            * smoothstep(cy0 - px, cy0 + px, v)
            * (1.0 - smoothstep(cy1 - px, cy1 + px, v));
        let t = (u - cx0) / (cx1 - cx0) * 2.0 - 1.0;
        let can = 0.12 + 0.55 * (1.0 - t * t).max(0.0).sqrt() * (0.6 - 0.4 * t).max(0.0);
        value = value * (1.0 - inside_can) + inside_can * can;

        // Lambert-shaded sphere with shallow craters.
        let (dx, dy) = ((u - sx) / sr, (v - sy) / sr);
        let rho = (dx * dx + dy * dy).sqrt();
        let edge = 1.0 - smoothstep(1.0 - px / sr, 1.0 + px / sr, rho);
        if edge > 0.0 {
            let z = (1.0 - (rho * rho).min(1.0)).sqrt();
            let lambert = (dx * light[0] + dy * light[1] + z * light[2]).max(0.0);
            let mut albedo = 0.78 + 0.10 * texture(0.5 + dx * 0.5, 0.5 + dy * 0.5) + GRAIN * grain(u, v);
            for k in &craters {
                let d = ((dx - k.cx).powi(2) + (dy - k.cy).powi(2)).sqrt() / k.r;
                if d < 1.25 {
                    let floor = 1.0 - smoothstep(0.85, 1.0, d);
                    let rim = smoothstep(0.9, 1.0, d) * (1.0 - smoothstep(1.0, 1.25, d));
                    albedo *= 1.0 - k.depth * floor + 0.25 * k.depth * rim;
                }
            }
            let sphere = 0.02 + albedo * lambert;
            value = value * (1.0 - edge) + edge * sphere;
        }
        value.clamp(0.0, 1.0)
    });
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_image_has_requested_support() {
        let g = Geometry::square(16).unwrap();
        let (img, coeffs) = sparse_haar_image(g, 0.1, 3).unwrap();
        let nnz = coeffs.values.iter().filter(|v| v.abs() > 1e-12).count();
        assert_eq!(nnz, 26);
        assert!(coeffs.values[0].abs() > 1e-12);
        assert!(img.pixels().iter().all(|&p| (0.0..=1.0).contains(&p)));
        let again = sparse_haar_image(g, 0.1, 3).unwrap();
        assert_eq!(again.0, img);
    }

    #[test]
    fn object_scene_is_deterministic_and_in_range() {
        let a = object_scene(64).unwrap();
        let b = object_scene(64).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert!(a.max() > 0.6 && a.mean() < 0.3);
        assert!(object_scene(48).is_err());
    }
}
