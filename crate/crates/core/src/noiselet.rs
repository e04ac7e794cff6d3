//! Discrete noiselet transforms.
//!
//! The unitary noiselet matrix is defined by the Kronecker recursion
//!
//! ```text
//! N_1 = [1],    N_2n = G ⊗ N_n,    G = 1/2 [[1-i, 1+i], [1+i, 1-i]]
//! ```
//!
//! so `N_n = G ⊗ G ⊗ ... ⊗ G` and every factor `I ⊗ G ⊗ I` is a block
//! butterfly. `N_n` is symmetric, hence `N_n^H = conj(N_n)` and the inverse
//! transform uses the conjugate butterfly.
//!
//! The modified transform `Ñ_n = sqrt(2n) · exp(iπ(q+1)/4) · N_n` has
//! entries in `{±1±i}` and is computed with integer additions only:
//! `q` stages of `(u, w) -> (u + i·w, w + i·u)` followed by a global `(1+i)`
//! rotation.
//!
//! Normalisation: everything returning [`ComplexField`] uses the unitary
//! convention; [`IntComplexField`] results are the unscaled integer `Ñ_n`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest `n` for which dense matrices are built unless a caller passes an
/// explicit limit.
pub const DEFAULT_DENSE_LIMIT: usize = 4096;

/// Default bit width of the integer transform.
pub const DEFAULT_WIDTH: u32 = 64;

/// Bits reserved for intermediate values of the integer transform on top of
/// the packed payload.
pub const GUARD_BITS: u32 = 2;

const MAX_Q: u32 = 40;

/// Transform size `n = 2^q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseletOrder {
    q: u32,
}

impl NoiseletOrder {
    pub fn new(q: u32) -> Result<Self> {
        if q > MAX_Q {
            return Err(Error::InvalidArgument(format!("order q = {q} exceeds {MAX_Q}")));
        }
        Ok(Self { q })
    }

    pub fn from_size(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        Self::new(n.trailing_zeros())
    }

    pub fn q(self) -> u32 {
        self.q
    }

    pub fn n(self) -> usize {
        1usize << self.q
    }

    /// Odd `q` selects the `{±1±i}/sqrt(2n)` element set, even `q` the
    /// `{±1, ±i}/sqrt(n)` one.
    pub fn is_odd(self) -> bool {
        self.q % 2 == 1
    }
}

/// Image geometry with power-of-two sides. Images are stored row-major and
/// the 2D noiselet transform of a `rows × cols` image equals the 1D
/// transform of size `rows · cols` applied to the row-major vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    rows: usize,
    cols: usize,
}

impl Geometry {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        for side in [rows, cols] {
            if side == 0 || !side.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(side));
            }
        }
        NoiseletOrder::from_size(rows * cols)?;
        Ok(Self { rows, cols })
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn rows(self) -> usize {
        self.rows
    }

    pub fn cols(self) -> usize {
        self.cols
    }

    pub fn n(self) -> usize {
        self.rows * self.cols
    }

    pub fn order(self) -> NoiseletOrder {
        NoiseletOrder { q: self.n().trailing_zeros() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Multiply by `N_n`.
    Forward,
    /// Multiply by `N_n^H`.
    Inverse,
}

/// Complex vector or row-major matrix with separate real and imaginary
/// planes. Vectors have shape `(len, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    re: Vec<f64>,
    im: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl ComplexField {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { re: vec![0.0; rows * cols], im: vec![0.0; rows * cols], rows, cols }
    }

    pub fn zeros_vector(len: usize) -> Self {
        Self::zeros(len, 1)
    }

    pub fn from_parts(re: Vec<f64>, im: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if re.len() != rows * cols {
            return Err(Error::LengthMismatch { expected: rows * cols, actual: re.len() });
        }
        if im.len() != re.len() {
            return Err(Error::LengthMismatch { expected: re.len(), actual: im.len() });
        }
        Ok(Self { re, im, rows, cols })
    }

    pub fn vector(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        let len = re.len();
        Self::from_parts(re, im, len, 1)
    }

    pub fn from_real(values: &[f64], rows: usize, cols: usize) -> Result<Self> {
        Self::from_parts(values.to_vec(), vec![0.0; values.len()], rows, cols)
    }

    pub fn from_complex(values: &[Complex64], rows: usize, cols: usize) -> Result<Self> {
        Self::from_parts(
            values.iter().map(|z| z.re).collect(),
            values.iter().map(|z| z.im).collect(),
            rows,
            cols,
        )
    }

    /// Unit vector `e_k` for the 1-based index `k`.
    pub fn unit(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange { index: k, n });
        }
        let mut v = Self::zeros_vector(n);
        v.re[k - 1] = 1.0;
        Ok(v)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    /// Mutable access to both planes; lengths cannot change.
    pub fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.re, self.im)
    }

    /// Element at 0-based linear index.
    pub fn get(&self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    /// Element at 0-based `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.get(row * self.cols + col)
    }

    pub fn set(&mut self, i: usize, z: Complex64) {
        self.re[i] = z.re;
        self.im[i] = z.im;
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }

    /// 0-based row of a matrix as a vector.
    pub fn row(&self, row: usize) -> ComplexField {
        let span = row * self.cols..(row + 1) * self.cols;
        ComplexField {
            re: self.re[span.clone()].to_vec(),
            im: self.im[span].to_vec(),
            rows: self.cols,
            cols: 1,
        }
    }

    pub fn conj(&self) -> ComplexField {
        ComplexField {
            re: self.re.clone(),
            im: self.im.iter().map(|v| -v).collect(),
            rows: self.rows,
            cols: self.cols,
        }
    }

    /// Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        self.re.iter().chain(&self.im).map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        assert_eq!(self.len(), other.len(), "shape mismatch");
        (0..self.len()).map(|i| (self.get(i) - other.get(i)).norm()).fold(0.0, f64::max)
    }

    /// Dense matrix-vector product.
    pub fn matvec(&self, v: &ComplexField) -> Result<ComplexField> {
        if v.len() != self.cols {
            return Err(Error::LengthMismatch { expected: self.cols, actual: v.len() });
        }
        let x = v.to_complex();
        let mut out = ComplexField::zeros_vector(self.rows);
        for r in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, xc) in x.iter().enumerate() {
                acc += self.at(r, c) * xc;
            }
            out.set(r, acc);
        }
        Ok(out)
    }

    /// Dense product `self · other^H`.
    pub fn mul_adjoint(&self, other: &ComplexField) -> Result<ComplexField> {
        if self.cols != other.cols {
            return Err(Error::LengthMismatch { expected: self.cols, actual: other.cols });
        }
        let a = self.to_complex();
        let b = other.to_complex();
        let k = self.cols;
        let mut out = ComplexField::zeros(self.rows, other.rows);
        for r in 0..self.rows {
            let ar = &a[r * k..(r + 1) * k];
            for c in 0..other.rows {
                let bc = &b[c * k..(c + 1) * k];
                let acc: Complex64 = ar.iter().zip(bc).map(|(x, y)| x * y.conj()).sum();
                out.set(r * other.rows + c, acc);
            }
        }
        Ok(out)
    }
}

/// Integer complex vector with a declared bit width (values are stored in
/// `i64`; the width bounds what the transform may produce).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntComplexField {
    re: Vec<i64>,
    im: Vec<i64>,
    width: u32,
}

impl IntComplexField {
    pub fn new(re: Vec<i64>, im: Vec<i64>, width: u32) -> Result<Self> {
        if im.len() != re.len() {
            return Err(Error::LengthMismatch { expected: re.len(), actual: im.len() });
        }
        if !(GUARD_BITS + 1..=64).contains(&width) {
            return Err(Error::InvalidArgument(format!("integer width {width} not in 3..=64")));
        }
        Ok(Self { re, im, width })
    }

    pub fn from_real(re: Vec<i64>, width: u32) -> Result<Self> {
        let im = vec![0; re.len()];
        Self::new(re, im, width)
    }

    /// Unit vector `e_k` (1-based `k`).
    pub fn unit(k: usize, n: usize, width: u32) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::IndexOutOfRange { index: k, n });
        }
        let mut re = vec![0; n];
        re[k - 1] = 1;
        Self::from_real(re, width)
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[i64] {
        &self.re
    }

    pub fn im(&self) -> &[i64] {
        &self.im
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn into_parts(self) -> (Vec<i64>, Vec<i64>) {
        (self.re, self.im)
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r as f64, i as f64)).collect()
    }
}

fn generator() -> [[Complex64; 2]; 2] {
    let a = Complex64::new(0.5, -0.5);
    let b = Complex64::new(0.5, 0.5);
    [[a, b], [b, a]]
}

/// Kronecker product `small ⊗ big` of a 2×2 block with an `n × n` matrix.
fn kron2(small: &[[Complex64; 2]; 2], big: &[Complex64], n: usize) -> Vec<Complex64> {
    let m = 2 * n;
    let mut out = vec![Complex64::new(0.0, 0.0); m * m];
    for (a, small_row) in small.iter().enumerate() {
        for (b, g) in small_row.iter().enumerate() {
            for r in 0..n {
                for c in 0..n {
                    out[(a * n + r) * m + b * n + c] = g * big[r * n + c];
                }
            }
        }
    }
    out
}

fn check_dense(order: NoiseletOrder, limit: usize) -> Result<()> {
    if order.n() > limit {
        return Err(Error::DenseLimitExceeded { n: order.n(), limit });
    }
    Ok(())
}

/// Dense unitary `N_n` built from the Kronecker recursion, with the default
/// dense limit.
pub fn dense_noiselet(order: NoiseletOrder) -> Result<ComplexField> {
    dense_noiselet_with_limit(order, DEFAULT_DENSE_LIMIT)
}

pub fn dense_noiselet_with_limit(order: NoiseletOrder, limit: usize) -> Result<ComplexField> {
    check_dense(order, limit)?;
    let g = generator();
    let mut mat = vec![Complex64::new(1.0, 0.0)];
    let mut n = 1;
    for _ in 0..order.q() {
        mat = kron2(&g, &mat, n);
        n *= 2;
    }
    ComplexField::from_complex(&mat, n, n)
}

/// Dense integer `Ñ_n` from its own recursion `Ñ_1 = [1+i]`,
/// `Ñ_2n = [[1, i], [i, 1]] ⊗ Ñ_n`, returned as exact floats.
pub fn dense_modified_noiselet(order: NoiseletOrder) -> Result<ComplexField> {
    check_dense(order, DEFAULT_DENSE_LIMIT)?;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let g = [[one, i], [i, one]];
    let mut mat = vec![Complex64::new(1.0, 1.0)];
    let mut n = 1;
    for _ in 0..order.q() {
        mat = kron2(&g, &mat, n);
        n *= 2;
    }
    ComplexField::from_complex(&mat, n, n)
}

/// Largest entrywise deviation `|Ñ_n - sqrt(2n)·exp(iπ(q+1)/4)·N_n|`.
pub fn verify_modified_relation(order: NoiseletOrder) -> Result<f64> {
    let modified = dense_modified_noiselet(order)?;
    let unitary = dense_noiselet(order)?;
    let scale = (2.0 * order.n() as f64).sqrt();
    let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4 * f64::from(order.q() + 1));
    let dev = (0..unitary.len())
        .map(|i| (modified.get(i) - unitary.get(i) * phase * scale).norm())
        .fold(0.0, f64::max);
    Ok(dev)
}

fn butterflies(re: &mut [f64], im: &mut [f64], direction: Direction) {
    let n = re.len();
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Inverse => -1.0,
    };
    let mut half = n / 2;
    while half >= 1 {
        for (re_blk, im_blk) in re.chunks_exact_mut(2 * half).zip(im.chunks_exact_mut(2 * half)) {
            let (ru, rw) = re_blk.split_at_mut(half);
            let (iu, iw) = im_blk.split_at_mut(half);
            for i in 0..half {
                let sr = ru[i] + rw[i];
                let si = iu[i] + iw[i];
                let dr = ru[i] - rw[i];
                let di = iu[i] - iw[i];
                // u' = (s ∓ i·d)/2, w' = (s ± i·d)/2
                ru[i] = 0.5 * (sr + sign * di);
                iu[i] = 0.5 * (si - sign * dr);
                rw[i] = 0.5 * (sr - sign * di);
                iw[i] = 0.5 * (si + sign * dr);
            }
        }
        half /= 2;
    }
}

/// In-place fast noiselet transform of a split complex vector. The length
/// must be a power of two; O(n log n), `N_n` is never materialised.
pub fn fnt_in_place(re: &mut [f64], im: &mut [f64], direction: Direction) -> Result<()> {
    if re.len() != im.len() {
        return Err(Error::LengthMismatch { expected: re.len(), actual: im.len() });
    }
    NoiseletOrder::from_size(re.len())?;
    butterflies(re, im, direction);
    Ok(())
}

/// `N_n · v` (forward) or `N_n^H · v` (inverse).
pub fn fnt(v: &ComplexField, order: NoiseletOrder, direction: Direction) -> Result<ComplexField> {
    if v.len() != order.n() {
        return Err(Error::LengthMismatch { expected: order.n(), actual: v.len() });
    }
    let mut out = v.clone();
    butterflies(&mut out.re, &mut out.im, direction);
    Ok(out)
}

/// 2D transform `N_rows · A · N_cols^T` of a row-major matrix, computed as
/// separable passes over columns and rows.
pub fn fnt2d(a: &ComplexField, direction: Direction) -> Result<ComplexField> {
    let (rows, cols) = (a.rows(), a.cols());
    Geometry::new(rows, cols)?;
    let mut out = a.clone();

    // rows: A · N_cols^T (N is symmetric)
    for r in 0..rows {
        let span = r * cols..(r + 1) * cols;
        butterflies(&mut out.re[span.clone()], &mut out.im[span], direction);
    }

    // columns: N_rows · A
    let mut col_re = vec![0.0; rows];
    let mut col_im = vec![0.0; rows];
    for c in 0..cols {
        for r in 0..rows {
            col_re[r] = out.re[r * cols + c];
            col_im[r] = out.im[r * cols + c];
        }
        butterflies(&mut col_re, &mut col_im, direction);
        for r in 0..rows {
            out.re[r * cols + c] = col_re[r];
            out.im[r * cols + c] = col_im[r];
        }
    }
    Ok(out)
}

/// Row `k` (1-based) of `N_n`. Since `N_n` is symmetric this is the forward
/// transform of `e_k`.
pub fn noiselet_row(k: usize, order: NoiseletOrder) -> Result<ComplexField> {
    let e = ComplexField::unit(k, order.n())?;
    fnt(&e, order, Direction::Forward)
}

/// Mirror index `n + 1 - j` of the 1-based row `j`: row `j` of `N_n` is the
/// complex conjugate of its mirror row.
pub fn mirror_row(j: usize, order: NoiseletOrder) -> Result<usize> {
    let n = order.n();
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    Ok(n + 1 - j)
}

/// Bits needed to hold every intermediate and final value of the integer
/// transform of `v`, sign included.
///
/// Before the final rotation every value is a sum of `±re_k`, `±im_k` with
/// each input entry used once, so it is bounded by the l1 norm `L` of the
/// input; the `(1+i)` rotation at most doubles that.
fn required_bits(v: &IntComplexField) -> u32 {
    let l1: u128 = v
        .re
        .iter()
        .chain(&v.im)
        .map(|x| u128::from(x.unsigned_abs()))
        .sum();
    let bound = 2 * l1;
    (128 - bound.leading_zeros()) + 1
}

pub(crate) fn modified_butterflies(re: &mut [i64], im: &mut [i64]) {
    let n = re.len();
    let mut half = n / 2;
    while half >= 1 {
        for (re_blk, im_blk) in re.chunks_exact_mut(2 * half).zip(im.chunks_exact_mut(2 * half)) {
            let (ru, rw) = re_blk.split_at_mut(half);
            let (iu, iw) = im_blk.split_at_mut(half);
            for i in 0..half {
                let (a, b, c, d) = (ru[i], iu[i], rw[i], iw[i]);
                // (u, w) -> (u + i·w, w + i·u)
                ru[i] = a - d;
                iu[i] = b + c;
                rw[i] = c - b;
                iw[i] = d + a;
            }
        }
        half /= 2;
    }
    for (r, i) in re.iter_mut().zip(im.iter_mut()) {
        let (a, b) = (*r, *i);
        *r = a - b;
        *i = a + b;
    }
}

/// Integer-only modified noiselet transform `Ñ_n · v`.
///
/// Rejects inputs whose worst-case intermediate magnitude does not fit the
/// declared width of `v`.
pub fn modified_fnt(v: &IntComplexField, order: NoiseletOrder) -> Result<IntComplexField> {
    if v.len() != order.n() {
        return Err(Error::LengthMismatch { expected: order.n(), actual: v.len() });
    }
    let needed = required_bits(v);
    if needed > v.width {
        return Err(Error::OverflowRisk { needed, width: v.width });
    }
    let mut out = v.clone();
    modified_butterflies(&mut out.re, &mut out.im);
    Ok(out)
}
