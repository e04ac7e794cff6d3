//! Image recovery from restored noiselet coefficients.
//!
//! The measurement operator maps Haar coefficients `F` to `Φ·Ψ·F`: Haar
//! synthesis, fast noiselet transform, then selection of the plan rows.
//! `Φ` is never materialised. Images are real, so the solver works on the
//! real-valued least-squares geometry of the stacked `[Re; Im]` residual,
//! whose gradient is `Re(A^H r)`.
//!
//! [`solve_bpdn`] minimises `‖F‖₁` subject to `‖y - A·F‖₂ ≤ ε` by solving a
//! sequence of penalised problems `½‖A·F - y‖² + λ‖F‖₁` with FISTA (with
//! adaptive restart) and moving `λ` until the residual meets `ε`: geometric
//! continuation down from `λ_max = ‖A^T y‖_∞` until a feasible point
//! appears, then bisection on `log λ` between the last infeasible and
//! feasible weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::haar::{self, WaveletCoeffs};
use crate::image::Image;
use crate::noiselet::{self, ComplexField, Direction, Geometry};
use crate::patterns::SamplingPlan;

/// BPDN settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconConfig {
    /// Radius of the residual ball.
    pub epsilon: f64,
    /// Total FISTA iterations over all regularisation weights.
    pub max_iters: usize,
    /// Inner stop: `‖F_{k+1} - F_k‖ ≤ step_tolerance · max(‖F_{k+1}‖, 1e-300)`.
    pub step_tolerance: f64,
    /// Residual floor relative to `‖y‖` used when `epsilon` is below it
    /// (basis pursuit), and the relative `‖F‖₁` change that ends bisection.
    pub objective_tolerance: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self { epsilon: 0.0, max_iters: 5000, step_tolerance: 1e-10, objective_tolerance: 1e-8 }
    }
}

impl ReconConfig {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self { epsilon, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.step_tolerance >= 0.0 && self.objective_tolerance >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct ReconResult {
    pub image: Image,
    pub coeffs: WaveletCoeffs,
    /// `‖y - Φ·Ψ·F‖₂`, recomputed from the returned coefficients.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖F‖₁` of each successively accepted feasible iterate.
    pub objective_history: Vec<f64>,
}

/// `Φ·Ψ` for one plan and Haar depth.
#[derive(Clone, Debug)]
pub struct MeasurementOperator {
    geometry: Geometry,
    levels: u32,
    rows: Vec<usize>,
}

impl MeasurementOperator {
    /// Full-depth Haar basis.
    pub fn new(plan: &SamplingPlan) -> Self {
        Self::with_levels(plan, haar::max_levels(plan.geometry()))
    }

    pub fn with_levels(plan: &SamplingPlan, levels: u32) -> Self {
        Self {
            geometry: plan.geometry(),
            levels,
            rows: plan.rows().into_iter().map(|k| k - 1).collect(),
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// `Φ·Ψ·F` for row-major coefficients `F`.
    pub fn forward(&self, f: &[f64]) -> Result<ComplexField> {
        let coeffs = WaveletCoeffs { values: f.to_vec(), geometry: self.geometry, levels: self.levels };
        let mut re = haar::haar_synthesize(&coeffs)?;
        let mut im = vec![0.0; re.len()];
        noiselet::fnt_in_place(&mut re, &mut im, Direction::Forward)?;
        ComplexField::vector(
            self.rows.iter().map(|&r| re[r]).collect(),
            self.rows.iter().map(|&r| im[r]).collect(),
        )
    }

    /// `Re(Ψ^T·Φ^H·y)`, the adjoint of [`forward`](Self::forward) for the
    /// real inner product `Re <A f, y>`.
    pub fn adjoint(&self, y: &ComplexField) -> Result<Vec<f64>> {
        if y.len() != self.rows.len() {
            return Err(Error::LengthMismatch { expected: self.rows.len(), actual: y.len() });
        }
        let n = self.geometry.n();
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        for (i, &r) in self.rows.iter().enumerate() {
            re[r] += y.re()[i];
            im[r] += y.im()[i];
        }
        noiselet::fnt_in_place(&mut re, &mut im, Direction::Inverse)?;
        Ok(haar::haar_analyze(&re, self.geometry, self.levels)?.values)
    }

    /// Largest eigenvalue of `A^T A` by power iteration.
    pub fn norm_squared_estimate(&self, iters: usize, tol: f64) -> Result<f64> {
        let n = self.geometry.n();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        normalize(&mut v);
        let mut est = 0.0;
        for _ in 0..iters {
            let mut w = self.adjoint(&self.forward(&v)?)?;
            let next = norm2(&w);
            if next == 0.0 {
                return Ok(0.0);
            }
            w.iter_mut().for_each(|x| *x /= next);
            v = w;
            let done = (next - est).abs() <= tol * next;
            est = next;
            if done {
                break;
            }
        }
        Ok(est)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn sub(a: &ComplexField, b: &ComplexField) -> ComplexField {
    let re = a.re().iter().zip(b.re()).map(|(x, y)| x - y).collect();
    let im = a.im().iter().zip(b.im()).map(|(x, y)| x - y).collect();
    ComplexField::vector(re, im).expect("equal lengths")
}

/// `Φ·Ψ·F` for the plan's rows.
pub fn forward_op(f: &WaveletCoeffs, plan: &SamplingPlan) -> Result<ComplexField> {
    if f.geometry != plan.geometry() {
        return Err(Error::LengthMismatch { expected: plan.n(), actual: f.values.len() });
    }
    MeasurementOperator::with_levels(plan, f.levels).forward(&f.values)
}

/// Adjoint of [`forward_op`] at full Haar depth.
pub fn adjoint_op(y: &ComplexField, plan: &SamplingPlan) -> Result<WaveletCoeffs> {
    let op = MeasurementOperator::new(plan);
    Ok(WaveletCoeffs { values: op.adjoint(y)?, geometry: plan.geometry(), levels: op.levels() })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct Fista<'a> {
    op: &'a MeasurementOperator,
    y: &'a ComplexField,
    step: f64,
    tol: f64,
}

impl Fista<'_> {
    /// Minimises `½‖A x - y‖² + λ‖x‖₁` from `x`; returns iterations used.
    fn run(&self, x: &mut Vec<f64>, lambda: f64, max_iter: usize) -> Result<usize> {
        let thresh = self.step * lambda;
        let mut z = x.clone();
        let mut t = 1.0f64;
        let mut next = vec![0.0; x.len()];
        for it in 1..=max_iter {
            let grad = self.op.adjoint(&sub(&self.op.forward(&z)?, self.y))?;
            for ((nx, &zi), &gi) in next.iter_mut().zip(&z).zip(&grad) {
                *nx = soft_threshold(zi - self.step * gi, thresh);
            }
            let mut step_sq = 0.0;
            let mut restart_dot = 0.0;
            for ((&nx, &xi), &zi) in next.iter().zip(x.iter()).zip(&z) {
                let d = nx - xi;
                step_sq += d * d;
                restart_dot += (zi - nx) * d;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            if restart_dot > 0.0 {
                t = 1.0;
                z.copy_from_slice(&next);
            } else {
                let beta = (t - 1.0) / t_next;
                for ((zi, &nx), &xi) in z.iter_mut().zip(&next).zip(x.iter()) {
                    *zi = nx + beta * (nx - xi);
                }
                t = t_next;
            }
            std::mem::swap(x, &mut next);
            if step_sq.sqrt() <= self.tol * norm2(x).max(1e-300) {
                return Ok(it);
            }
        }
        Ok(max_iter)
    }
}

const CONTINUATION_FACTOR: f64 = 0.1;
/// A feasible iterate with residual at least this fraction of `ε` ends the
/// search.
const BOUNDARY_FRACTION: f64 = 0.99;

/// Basis pursuit denoising over the Haar coefficients (full depth).
///
/// Returns `F = 0` when `ε ≥ ‖y‖₂`. When `ε` is below
/// `objective_tolerance · ‖y‖₂` the problem is treated as basis pursuit and
/// the residual target becomes that floor. If no feasible point is found
/// within `max_iters`, the last iterate is returned with `converged = false`.
pub fn solve_bpdn(y: &ComplexField, plan: &SamplingPlan, config: &ReconConfig) -> Result<ReconResult> {
    config.validate()?;
    let op = MeasurementOperator::new(plan);
    if y.len() != op.m() {
        return Err(Error::LengthMismatch { expected: op.m(), actual: y.len() });
    }
    let geometry = plan.geometry();
    let n = geometry.n();
    let y_norm = y.norm();
    let finish = |f: Vec<f64>, iterations, converged, history| -> Result<ReconResult> {
        let residual_norm = sub(y, &op.forward(&f)?).norm();
        let coeffs = WaveletCoeffs { values: f, geometry, levels: op.levels() };
        let image = Image::new(geometry.rows(), geometry.cols(), haar::haar_synthesize(&coeffs)?)?;
        Ok(ReconResult { image, coeffs, residual_norm, iterations, converged, objective_history: history })
    };

    if config.epsilon >= y_norm {
        return finish(vec![0.0; n], 0, true, vec![0.0]);
    }

    let floor = config.objective_tolerance * y_norm;
    let basis_pursuit = config.epsilon <= floor;
    let target = config.epsilon.max(floor);
    let feasible_limit = target * (1.0 + 1e-6);

    let lipschitz = op.norm_squared_estimate(20, 1e-6)? * 1.01;
    let fista = Fista { op: &op, y, step: 1.0 / lipschitz, tol: config.step_tolerance };
    let lambda_max = op.adjoint(y)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut x = vec![0.0; n];
    let mut used = 0;
    let mut lambda = lambda_max * 0.5;
    let (mut lo, mut hi): (Option<f64>, f64) = (None, lambda_max);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut history = Vec::new();

    while used < config.max_iters {
        used += fista.run(&mut x, lambda, config.max_iters - used)?;
        let residual = sub(y, &op.forward(&x)?).norm();
        if residual <= feasible_limit {
            let l1: f64 = x.iter().map(|v| v.abs()).sum();
            let prev = best.as_ref().map(|b| b.0);
            if prev.is_none_or(|p| l1 <= p) {
                history.push(l1);
                best = Some((l1, x.clone()));
            }
            lo = Some(lambda);
            if basis_pursuit || residual >= BOUNDARY_FRACTION * target {
                break;
            }
            if let Some(p) = prev {
                if (p - l1).abs() <= config.objective_tolerance * p {
                    break;
                }
            }
        } else {
            hi = lambda;
        }
        lambda = match lo {
            None => lambda * CONTINUATION_FACTOR,
            Some(lo) => (lo * hi).sqrt(),
        };
        if let Some(lo) = lo {
            if hi / lo < 1.0 + 1e-9 {
                break;
            }
        }
        if lambda < lambda_max * 1e-15 {
            break;
        }
    }

    match best {
        Some((_, f)) => finish(f, used, true, history),
        None => finish(x, used, false, history),
    }
}

/// Direct inverse for full sampling: undoes the plan order and applies
/// `N^H`.
pub fn solve_full(y: &ComplexField, plan: &SamplingPlan) -> Result<Image> {
    if !plan.is_full() {
        return Err(Error::InvalidPlan(format!(
            "direct inverse needs full sampling, plan has m = {} of n = {}",
            plan.m(),
            plan.n()
        )));
    }
    let n = plan.n();
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, actual: y.len() });
    }
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for (pos, k) in plan.rows().into_iter().enumerate() {
        re[k - 1] = y.re()[pos];
        im[k - 1] = y.im()[pos];
    }
    noiselet::fnt_in_place(&mut re, &mut im, Direction::Inverse)?;
    let g = plan.geometry();
    Image::new(g.rows(), g.cols(), re)
}

/// Mean squared error.
pub fn mse(x_hat: &Image, x_ref: &Image) -> Result<f64> {
    if (x_hat.rows(), x_hat.cols()) != (x_ref.rows(), x_ref.cols()) {
        return Err(Error::LengthMismatch { expected: x_ref.pixels().len(), actual: x_hat.pixels().len() });
    }
    let n = x_ref.pixels().len() as f64;
    Ok(x_hat.pixels().iter().zip(x_ref.pixels()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n)
}

/// Least-squares gain/offset fit of `x_hat` onto `x_ref`.
pub fn register_affine(x_hat: &Image, x_ref: &Image) -> Result<Image> {
    mse(x_hat, x_ref)?;
    let mh = x_hat.mean();
    let mr = x_ref.mean();
    let (mut cov, mut var) = (0.0, 0.0);
    for (a, b) in x_hat.pixels().iter().zip(x_ref.pixels()) {
        cov += (a - mh) * (b - mr);
        var += (a - mh) * (a - mh);
    }
    let gain = if var > 0.0 { cov / var } else { 0.0 };
    let offset = mr - gain * mh;
    let pixels = x_hat.pixels().iter().map(|a| gain * a + offset).collect();
    Image::new(x_hat.rows(), x_hat.cols(), pixels)
}

/// `10·log10(max(x_ref)² / MSE)`, optionally after registering `x_hat` to
/// `x_ref`. A numerically zero MSE (PSNR above 240 dB) is reported as
/// `f64::INFINITY`.
pub fn psnr(x_hat: &Image, x_ref: &Image, register: bool) -> Result<f64> {
    let err = if register { mse(&register_affine(x_hat, x_ref)?, x_ref)? } else { mse(x_hat, x_ref)? };
    let peak = x_ref.max();
    let peak_sq = peak * peak;
    if err == 0.0 || err <= peak_sq * 1e-24 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak_sq / err).log10())
}

/// Keeps the `ceil(fraction · n)` largest-magnitude coefficients; ties go to
/// the lower linear index.
pub fn compress_topk(f: &WaveletCoeffs, fraction: f64) -> Result<WaveletCoeffs> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} not in (0, 1]")));
    }
    let n = f.values.len();
    let keep = ((fraction * n as f64).ceil() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        f.values[b].abs().total_cmp(&f.values[a].abs()).then(a.cmp(&b))
    });
    let mut out = WaveletCoeffs::zeros(f.geometry, f.levels);
    for &i in &idx[..keep] {
        out.values[i] = f.values[i];
    }
    Ok(out)
}
