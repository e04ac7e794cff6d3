//! Binary sampling patterns for a binary light modulator.
//!
//! A [`SamplingPlan`] picks `m/2` rows `k` from the upper half of `N_n` and
//! pairs each with its mirror row `n + 1 - k`; sensing-matrix position `j`
//! holds `k_j` and position `m + 1 - j` holds the mirror. Because mirror rows
//! are complex conjugates, the two real 0/1 patterns built from row `k_j`
//! carry both of them:
//!
//! ```text
//! odd q:  p_{2j-1} = (sqrt(2n)·Re φ + 1)/2        p_{2j} = (sqrt(2n)·Im φ + 1)/2
//! even q: p_{2j-1} = (sqrt(n)·(Re+Im) φ + 1)/2     p_{2j} = (sqrt(n)·(Re-Im) φ + 1)/2
//! ```
//!
//! The same patterns come out of the integer transform as `a_k = (Re Ñ_k + 1)/2`
//! or `b_k = (Im Ñ_k + 1)/2`, possibly complemented; [`pair_rule`] works out
//! which from the phase that relates `Ñ_n` to `N_n`. Packing many unit
//! vectors into the bit-planes of one integer input produces a whole bundle
//! of patterns with a single transform run ([`gen_bundle`]).

pub mod stream;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noiselet::{
    self, ComplexField, Geometry, IntComplexField, NoiseletOrder, DEFAULT_WIDTH, GUARD_BITS,
};

/// Mirror-paired selection of noiselet rows plus the image geometry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanDocument", into = "PlanDocument")]
pub struct SamplingPlan {
    geometry: Geometry,
    m: usize,
    upper_rows: Vec<usize>,
    seed: u64,
}

/// On-disk form of a plan.
#[derive(Serialize, Deserialize)]
struct PlanDocument {
    q: u32,
    geometry: [usize; 2],
    m: usize,
    upper_rows: Vec<usize>,
    seed: u64,
}

impl TryFrom<PlanDocument> for SamplingPlan {
    type Error = Error;

    fn try_from(doc: PlanDocument) -> Result<Self> {
        let geometry = Geometry::new(doc.geometry[0], doc.geometry[1])?;
        if geometry.order().q() != doc.q {
            return Err(Error::InvalidPlan(format!(
                "q = {} does not match geometry {}x{}",
                doc.q, doc.geometry[0], doc.geometry[1]
            )));
        }
        if doc.m != 2 * doc.upper_rows.len() {
            return Err(Error::InvalidPlan(format!(
                "m = {} but {} upper rows",
                doc.m,
                doc.upper_rows.len()
            )));
        }
        SamplingPlan::new(geometry, doc.upper_rows, doc.seed)
    }
}

impl From<SamplingPlan> for PlanDocument {
    fn from(plan: SamplingPlan) -> Self {
        PlanDocument {
            q: plan.order().q(),
            geometry: [plan.geometry.rows(), plan.geometry.cols()],
            m: plan.m,
            upper_rows: plan.upper_rows,
            seed: plan.seed,
        }
    }
}

impl SamplingPlan {
    /// Builds a plan from explicit 1-based upper-half rows.
    pub fn new(geometry: Geometry, upper_rows: Vec<usize>, seed: u64) -> Result<Self> {
        let n = geometry.n();
        let m = 2 * upper_rows.len();
        if m > n {
            return Err(Error::InvalidPlan(format!("m = {m} exceeds n = {n}")));
        }
        let mut seen = vec![false; n / 2 + 1];
        for &k in &upper_rows {
            if k == 0 || k > n / 2 {
                return Err(Error::InvalidPlan(format!("row {k} not in upper half 1..={}", n / 2)));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidPlan(format!("row {k} selected twice")));
            }
        }
        Ok(Self { geometry, m, upper_rows, seed })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn order(&self) -> NoiseletOrder {
        self.geometry.order()
    }

    pub fn n(&self) -> usize {
        self.geometry.n()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn upper_rows(&self) -> &[usize] {
        &self.upper_rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_full(&self) -> bool {
        self.m == self.n()
    }

    /// Noiselet row (1-based) at sensing-matrix position `position`
    /// (1-based, `1..=m`).
    pub fn row_at(&self, position: usize) -> usize {
        assert!((1..=self.m).contains(&position), "position {position} outside 1..={}", self.m);
        let half = self.m / 2;
        if position <= half {
            self.upper_rows[position - 1]
        } else {
            self.n() + 1 - self.upper_rows[self.m - position]
        }
    }

    /// All `m` noiselet rows in sensing-matrix order.
    pub fn rows(&self) -> Vec<usize> {
        (1..=self.m).map(|p| self.row_at(p)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Draws `m/2` distinct upper-half rows uniformly without replacement from a
/// ChaCha8 stream seeded with `seed`. Rows are stored in ascending order.
pub fn make_plan(geometry: Geometry, m: usize, seed: u64) -> Result<SamplingPlan> {
    let n = geometry.n();
    if !m.is_multiple_of(2) {
        return Err(Error::InvalidPlan(format!("m = {m} must be even")));
    }
    if m < 2 || m > n {
        return Err(Error::InvalidPlan(format!("m = {m} not in 2..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = rand::seq::index::sample(&mut rng, n / 2, m / 2)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    rows.sort_unstable();
    SamplingPlan::new(geometry, rows, seed)
}

/// `m` binary patterns in measurement order (`p_1..p_m`), each `n` bytes of
/// 0 or 1 in row-major pixel order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSet {
    pub patterns: Vec<Vec<u8>>,
    pub plan: SamplingPlan,
}

/// Anything that can enumerate the patterns of a plan in measurement order.
pub trait PatternSource {
    fn plan(&self) -> &SamplingPlan;

    /// Calls `f(t, pattern)` for `t = 0..m` (0-based pattern index).
    fn for_each_pattern(&self, f: &mut dyn FnMut(usize, &[u8]) -> Result<()>) -> Result<()>;
}

impl PatternSource for PatternSet {
    fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    fn for_each_pattern(&self, f: &mut dyn FnMut(usize, &[u8]) -> Result<()>) -> Result<()> {
        for (t, p) in self.patterns.iter().enumerate() {
            f(t, p)?;
        }
        Ok(())
    }
}

fn to_binary(values: impl Iterator<Item = f64>) -> Result<Vec<u8>> {
    values
        .enumerate()
        .map(|(i, v)| {
            if v.abs() < 1e-9 {
                Ok(0)
            } else if (v - 1.0).abs() < 1e-9 {
                Ok(1)
            } else {
                Err(Error::NonBinary { index: i, value: format!("{v}") })
            }
        })
        .collect()
}

/// The two real patterns carried by the complex noiselet row `phi`.
pub fn patterns_from_row(phi: &ComplexField, order: NoiseletOrder) -> Result<(Vec<u8>, Vec<u8>)> {
    let n = order.n() as f64;
    let (re, im) = (phi.re(), phi.im());
    if order.is_odd() {
        let s = (2.0 * n).sqrt();
        let p1 = to_binary(re.iter().map(|r| (s * r + 1.0) / 2.0))?;
        let p2 = to_binary(im.iter().map(|i| (s * i + 1.0) / 2.0))?;
        Ok((p1, p2))
    } else {
        let s = n.sqrt();
        let p1 = to_binary(re.iter().zip(im).map(|(r, i)| (s * (r + i) + 1.0) / 2.0))?;
        let p2 = to_binary(re.iter().zip(im).map(|(r, i)| (s * (r - i) + 1.0) / 2.0))?;
        Ok((p1, p2))
    }
}

/// Reference construction of the pattern matrix from the complex noiselet
/// rows of the plan (floating-point transform, no integer tricks).
pub fn build_patterns(plan: &SamplingPlan) -> Result<PatternSet> {
    let order = plan.order();
    let mut patterns = Vec::with_capacity(plan.m());
    for &k in plan.upper_rows() {
        let phi = noiselet::noiselet_row(k, order)?;
        let (p1, p2) = patterns_from_row(&phi, order)?;
        patterns.push(p1);
        patterns.push(p2);
    }
    Ok(PatternSet { patterns, plan: plan.clone() })
}

fn check_binary(p: &[u8]) -> Result<()> {
    match p.iter().position(|&v| v > 1) {
        Some(index) => Err(Error::NonBinary { index, value: p[index].to_string() }),
        None => Ok(()),
    }
}

/// Recovers the complex noiselet row from its pattern pair:
///
/// ```text
/// odd q:  φ = (2·p1 + 2i·p2 - (1+i)) / sqrt(2n)
/// even q: φ = ((1+i)·p1 + (1-i)·p2 - 1) / sqrt(n)
/// ```
pub fn invert_patterns(p1: &[u8], p2: &[u8], order: NoiseletOrder) -> Result<ComplexField> {
    let n = order.n();
    for p in [p1, p2] {
        if p.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: p.len() });
        }
        check_binary(p)?;
    }
    let (mut re, mut im) = (Vec::with_capacity(n), Vec::with_capacity(n));
    if order.is_odd() {
        let s = 1.0 / (2.0 * n as f64).sqrt();
        for (&a, &b) in p1.iter().zip(p2) {
            re.push((2.0 * f64::from(a) - 1.0) * s);
            im.push((2.0 * f64::from(b) - 1.0) * s);
        }
    } else {
        let s = 1.0 / (n as f64).sqrt();
        for (&a, &b) in p1.iter().zip(p2) {
            let (a, b) = (f64::from(a), f64::from(b));
            re.push((a + b - 1.0) * s);
            im.push((a - b) * s);
        }
    }
    ComplexField::vector(re, im)
}

/// Which component of the modified transform a pattern is read from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternKind {
    /// `a_k = (Re Ñ_k + 1)/2`
    A,
    /// `b_k = (Im Ñ_k + 1)/2`
    B,
}

/// One bit-plane of a bundle: pattern kind, 1-based noiselet row, and
/// whether the plane is complemented (`1 - p`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaneDescriptor {
    pub kind: PatternKind,
    pub row: usize,
    pub complement: bool,
}

/// Source component and complement flag for `p_{2j-1}` and `p_{2j}`.
///
/// With `z = x + iy` an entry of `Ñ_n`, the matching entry of the unitary
/// row is `z·conj(ω)/sqrt(2n)` with `ω = exp(iπ(q+1)/4)`. Each pattern is
/// `(L(x, y) + 1)/2` for a linear form `L`; because the rotation is a
/// multiple of `π/4` (and of `π/2` for odd `q`), `L` is exactly one of
/// `±x` or `±y`. The coefficients are evaluated and rounded here.
pub fn pair_rule(order: NoiseletOrder) -> [(PatternKind, bool); 2] {
    let rot = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4 * f64::from(order.q() + 1));
    let odd = order.is_odd();
    let forms = |z: Complex64| -> [f64; 2] {
        let w = z * rot;
        if odd {
            [w.re, w.im]
        } else {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [(w.re + w.im) * s, (w.re - w.im) * s]
        }
    };
    let on_x = forms(Complex64::new(1.0, 0.0));
    let on_y = forms(Complex64::new(0.0, 1.0));
    let mut out = [(PatternKind::A, false); 2];
    for i in 0..2 {
        let (cx, cy) = (on_x[i].round(), on_y[i].round());
        debug_assert!((on_x[i] - cx).abs() < 1e-12 && (on_y[i] - cy).abs() < 1e-12);
        out[i] = if cy == 0.0 {
            (PatternKind::A, cx < 0.0)
        } else {
            (PatternKind::B, cy < 0.0)
        };
    }
    out
}

/// Plane descriptors for all `m` patterns of a plan, in measurement order.
pub fn resolve_sign_map(plan: &SamplingPlan) -> Vec<PlaneDescriptor> {
    let rule = pair_rule(plan.order());
    plan.upper_rows()
        .iter()
        .flat_map(|&row| {
            rule.iter().map(move |&(kind, complement)| PlaneDescriptor { kind, row, complement })
        })
        .collect()
}

/// `a_k` or `b_k` for one row, from the integer transform of `e_k`.
pub fn gen_pattern_fast(k: usize, kind: PatternKind, order: NoiseletOrder) -> Result<Vec<u8>> {
    let e = IntComplexField::unit(k, order.n(), DEFAULT_WIDTH)?;
    let out = noiselet::modified_fnt(&e, order)?;
    let plane = match kind {
        PatternKind::A => out.re(),
        PatternKind::B => out.im(),
    };
    Ok(plane.iter().map(|&v| ((v + 1) / 2) as u8).collect())
}

/// Up to `width - 2` binary patterns packed into the bit-planes of one
/// integer per pixel; plane `t` is bit `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedBundle {
    pub planes: Vec<u64>,
    pub plane_map: Vec<PlaneDescriptor>,
    pub width: u32,
}

impl PackedBundle {
    pub fn plane_count(&self) -> usize {
        self.plane_map.len()
    }

    /// Unpacks plane `t` into `out`.
    pub fn extract_into(&self, t: usize, out: &mut [u8]) {
        assert!(t < self.plane_count());
        for (o, &w) in out.iter_mut().zip(&self.planes) {
            *o = ((w >> t) & 1) as u8;
        }
    }

    pub fn plane(&self, t: usize) -> Vec<u8> {
        let mut out = vec![0; self.planes.len()];
        self.extract_into(t, &mut out);
        out
    }
}

/// Largest bundle for an integer width.
pub fn max_planes(width: u32) -> usize {
    width.saturating_sub(GUARD_BITS) as usize
}

/// Generates every plane of `descriptors` with one integer transform run.
///
/// The input is `e_packed = Σ_t 2^t·e_{k_t}`; by linearity
/// `Re Ñ(e_packed) = Σ_t 2^t·(2·a_{k_t} - 1)`, so
/// `a_packed = (Re Ñ(e_packed) + 2^l - 1)/2` and likewise for `b` with the
/// imaginary part. Each plane then takes its bit from `a_packed` or
/// `b_packed` and is complemented if flagged.
pub fn gen_bundle(
    descriptors: &[PlaneDescriptor],
    order: NoiseletOrder,
    width: u32,
) -> Result<PackedBundle> {
    let l = descriptors.len();
    let max = max_planes(width);
    if l > max || width > 64 {
        return Err(Error::BundleOverflow { planes: l, width, max });
    }
    if l == 0 {
        return Err(Error::InvalidArgument("empty bundle".into()));
    }
    let n = order.n();
    let mut re = vec![0i64; n];
    let (mut mask_a, mut flip) = (0u64, 0u64);
    for (t, d) in descriptors.iter().enumerate() {
        if d.row == 0 || d.row > n {
            return Err(Error::IndexOutOfRange { index: d.row, n });
        }
        re[d.row - 1] += 1i64 << t;
        if d.kind == PatternKind::A {
            mask_a |= 1 << t;
        }
        if d.complement {
            flip |= 1 << t;
        }
    }
    let input = IntComplexField::from_real(re, width)?;
    let out = noiselet::modified_fnt(&input, order)?;
    let offset = (1i64 << l) - 1;
    let planes = out
        .re()
        .iter()
        .zip(out.im())
        .map(|(&r, &i)| {
            let a = ((r + offset) >> 1) as u64;
            let b = ((i + offset) >> 1) as u64;
            ((a & mask_a) | (b & !mask_a)) ^ flip
        })
        .collect();
    Ok(PackedBundle { planes, plane_map: descriptors.to_vec(), width })
}

/// Patterns of a plan produced on the fly in bundles by the integer
/// transform; never holds more than one bundle in memory.
#[derive(Clone, Debug)]
pub struct BundledPatterns {
    plan: SamplingPlan,
    width: u32,
}

impl BundledPatterns {
    pub fn new(plan: SamplingPlan) -> Self {
        Self { plan, width: DEFAULT_WIDTH }
    }

    pub fn with_width(plan: SamplingPlan, width: u32) -> Result<Self> {
        if max_planes(width) == 0 || width > 64 {
            return Err(Error::BundleOverflow { planes: 1, width, max: max_planes(width) });
        }
        Ok(Self { plan, width })
    }

    /// Bundles covering the plan, `width - 2` planes each (last one shorter).
    pub fn bundles(&self) -> impl Iterator<Item = Result<PackedBundle>> + '_ {
        let map = resolve_sign_map(&self.plan);
        let per = max_planes(self.width);
        let order = self.plan.order();
        let width = self.width;
        (0..map.len().div_ceil(per)).map(move |b| {
            let chunk = &map[b * per..((b + 1) * per).min(map.len())];
            gen_bundle(chunk, order, width)
        })
    }

    pub fn to_pattern_set(&self) -> Result<PatternSet> {
        let mut patterns = Vec::with_capacity(self.plan.m());
        self.for_each_pattern(&mut |_, p| {
            patterns.push(p.to_vec());
            Ok(())
        })?;
        Ok(PatternSet { patterns, plan: self.plan.clone() })
    }
}

impl PatternSource for BundledPatterns {
    fn plan(&self) -> &SamplingPlan {
        &self.plan
    }

    fn for_each_pattern(&self, f: &mut dyn FnMut(usize, &[u8]) -> Result<()>) -> Result<()> {
        let mut buf = vec![0u8; self.plan.n()];
        let mut t = 0;
        for bundle in self.bundles() {
            let bundle = bundle?;
            for plane in 0..bundle.plane_count() {
                bundle.extract_into(plane, &mut buf);
                f(t, &buf)?;
                t += 1;
            }
        }
        Ok(())
    }
}
