//! Dense 4-D tensors and the forward/backward primitives for each layer kind.
//!
//! Layout is `(batch, channels, rows, cols)`, row-major with channels outer to
//! the spatial grid: the flat index of element `(b, c, i, j)` is
//! `((b*C + c)*H + i)*W + j`. Values are stored in single precision;
//! accumulations inside every operation run in double precision and are
//! rounded once on store.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dimensions of a [`Tensor`]: batch, channels, rows, cols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape { n, c, h, w }
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scalars per batch item.
    pub fn item_len(&self) -> usize {
        self.c * self.h * self.w
    }

    /// Flat index of `(b, c, i, j)`.
    pub fn index(&self, b: usize, c: usize, i: usize, j: usize) -> usize {
        ((b * self.c + c) * self.h + i) * self.w + j
    }
}

impl core::fmt::Display for Shape {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.c, self.h, self.w)
    }
}

/// Dense 4-D array of `f32` scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn filled(shape: Shape, value: f32) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::InvalidGeometry(format!(
                "data length {} does not match shape {} ({} elements)",
                data.len(),
                shape,
                shape.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn get(&self, b: usize, c: usize, i: usize, j: usize) -> f32 {
        self.data[self.shape.index(b, c, i, j)]
    }

    pub fn set(&mut self, b: usize, c: usize, i: usize, j: usize, value: f32) {
        let idx = self.shape.index(b, c, i, j);
        self.data[idx] = value;
    }

    /// Contiguous scalars of batch item `b`.
    pub fn item(&self, b: usize) -> &[f32] {
        let len = self.shape.item_len();
        &self.data[b * len..(b + 1) * len]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Single batch item extracted as its own tensor.
    pub fn batch_item(&self, b: usize) -> Tensor {
        Tensor {
            shape: Shape::new(1, self.shape.c, self.shape.h, self.shape.w),
            data: self.item(b).to_vec(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Convolution parameters: weights shaped `(out_channels, in_channels, kh, kw)`,
/// one bias per output channel, a spatial stride and symmetric zero-padding.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    weights: Tensor,
    bias: Vec<f32>,
    stride: usize,
    padding: usize,
}

impl ConvKernel {
    pub fn new(weights: Tensor, bias: Vec<f32>, stride: usize, padding: usize) -> Result<Self> {
        let s = weights.shape();
        if s.h < 1 || s.w < 1 {
            return Err(Error::InvalidGeometry(format!(
                "kernel spatial extent must be at least 1x1, got {}x{}",
                s.h, s.w
            )));
        }
        if stride < 1 {
            return Err(Error::InvalidGeometry(String::from("stride must be >= 1")));
        }
        if bias.len() != s.n {
            return Err(Error::InvalidGeometry(format!(
                "bias length {} does not match {} output channels",
                bias.len(),
                s.n
            )));
        }
        Ok(ConvKernel {
            weights,
            bias,
            stride,
            padding,
        })
    }

    pub fn out_channels(&self) -> usize {
        self.weights.shape().n
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape().c
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.weights.shape().h, self.weights.shape().w)
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Tensor {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f32] {
        &mut self.bias
    }

    /// Kernel with both spatial axes reversed and the channel roles swapped.
    /// The bias does not survive the role swap and is zeroed; stride and
    /// padding are carried over unchanged.
    pub fn flipped(&self) -> ConvKernel {
        let s = self.weights.shape();
        let mut flipped = Tensor::zeros(Shape::new(s.c, s.n, s.h, s.w));
        for oc in 0..s.n {
            for ic in 0..s.c {
                for ki in 0..s.h {
                    for kj in 0..s.w {
                        let v = self.weights.get(oc, ic, ki, kj);
                        flipped.set(ic, oc, s.h - 1 - ki, s.w - 1 - kj, v);
                    }
                }
            }
        }
        ConvKernel {
            weights: flipped,
            bias: vec![0.0; s.c],
            stride: self.stride,
            padding: self.padding,
        }
    }

    /// Same weights with different stride/padding geometry.
    pub fn with_geometry(&self, stride: usize, padding: usize) -> ConvKernel {
        ConvKernel {
            weights: self.weights.clone(),
            bias: self.bias.clone(),
            stride,
            padding,
        }
    }

    /// Output shape for `input`, validating channel count and kernel fit.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let s = self.weights.shape();
        if input.c != s.c {
            return Err(Error::ShapeMismatch {
                expected: Shape::new(input.n, s.c, input.h, input.w),
                got: input,
            });
        }
        let ph = input.h + 2 * self.padding;
        let pw = input.w + 2 * self.padding;
        if ph < s.h || pw < s.w {
            return Err(Error::InvalidGeometry(format!(
                "padded input {}x{} smaller than kernel {}x{}",
                ph, pw, s.h, s.w
            )));
        }
        Ok(Shape::new(
            input.n,
            s.n,
            (ph - s.h) / self.stride + 1,
            (pw - s.w) / self.stride + 1,
        ))
    }
}

/// Max-pooling geometry: window extent and stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub window: (usize, usize),
    pub stride: usize,
}

impl PoolSpec {
    pub fn new(window: (usize, usize), stride: usize) -> Result<Self> {
        if window.0 < 1 || window.1 < 1 {
            return Err(Error::InvalidGeometry(String::from(
                "pool window must be at least 1x1",
            )));
        }
        if stride < 1 {
            return Err(Error::InvalidGeometry(String::from("stride must be >= 1")));
        }
        Ok(PoolSpec { window, stride })
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let (ph, pw) = self.window;
        if input.h < ph || input.w < pw {
            return Err(Error::InvalidGeometry(format!(
                "pool window {}x{} larger than input {}x{}",
                ph, pw, input.h, input.w
            )));
        }
        Ok(Shape::new(
            input.n,
            input.c,
            (input.h - ph) / self.stride + 1,
            (input.w - pw) / self.stride + 1,
        ))
    }
}

/// Recorded argmax location of every pooling window, as flat indices into the
/// pooled input. Ties are broken toward the lowest linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct Switches {
    output_shape: Shape,
    input_shape: Shape,
    indices: Vec<usize>,
}

impl Switches {
    pub fn output_shape(&self) -> Shape {
        self.output_shape
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// Row-major dense matrix for fully-connected layers: `rows` outputs by
/// `cols` inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidGeometry(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f32) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Cross-correlation of `x` with the kernel (the ConvNet convention).
pub fn conv_forward(x: &Tensor, k: &ConvKernel) -> Result<Tensor> {
    let input = x.shape();
    let out_shape = k.output_shape(input)?;
    let (kh, kw) = k.kernel_size();
    let stride = k.stride();
    let pad = k.padding() as isize;
    let mut out = Tensor::zeros(out_shape);

    let xd = x.data();
    let wd = k.weights().data();
    let od = out.data_mut();
    for b in 0..out_shape.n {
        for oc in 0..out_shape.c {
            let bias = k.bias()[oc] as f64;
            for oh in 0..out_shape.h {
                let ih0 = (oh * stride) as isize - pad;
                let ki_lo = (-ih0).max(0) as usize;
                let ki_hi = kh.min((input.h as isize - ih0).max(0) as usize);
                for ow in 0..out_shape.w {
                    let iw0 = (ow * stride) as isize - pad;
                    let kj_lo = (-iw0).max(0) as usize;
                    let kj_hi = kw.min((input.w as isize - iw0).max(0) as usize);
                    let mut acc = bias;
                    for ic in 0..input.c {
                        for ki in ki_lo..ki_hi {
                            let ih = (ih0 + ki as isize) as usize;
                            let xrow = input.index(b, ic, ih, (iw0 + kj_lo as isize) as usize);
                            let wrow = k.weights().shape().index(oc, ic, ki, kj_lo);
                            let xs = &xd[xrow..xrow + (kj_hi - kj_lo)];
                            let ws = &wd[wrow..wrow + (kj_hi - kj_lo)];
                            for (xv, wv) in xs.iter().zip(ws) {
                                acc += *xv as f64 * *wv as f64;
                            }
                        }
                    }
                    od[out_shape.index(b, oc, oh, ow)] = acc as f32;
                }
            }
        }
    }
    Ok(out)
}

/// Gradient of [`conv_forward`] with respect to its input: routes every
/// upstream element back through the kernel taps that produced it. Equals a
/// full convolution of `dy` with the flipped kernel.
pub fn conv_backward_input(dy: &Tensor, k: &ConvKernel, input_shape: Shape) -> Result<Tensor> {
    let expected = k.output_shape(input_shape)?;
    if dy.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            got: dy.shape(),
        });
    }
    let (kh, kw) = k.kernel_size();
    let stride = k.stride();
    let pad = k.padding() as isize;

    let mut dx = vec![0.0f64; input_shape.len()];
    let dyd = dy.data();
    let wd = k.weights().data();
    let wshape = k.weights().shape();
    for b in 0..expected.n {
        for oc in 0..expected.c {
            for oh in 0..expected.h {
                let ih0 = (oh * stride) as isize - pad;
                let ki_lo = (-ih0).max(0) as usize;
                let ki_hi = kh.min((input_shape.h as isize - ih0).max(0) as usize);
                for ow in 0..expected.w {
                    let g = dyd[expected.index(b, oc, oh, ow)] as f64;
                    if g == 0.0 {
                        continue;
                    }
                    let iw0 = (ow * stride) as isize - pad;
                    let kj_lo = (-iw0).max(0) as usize;
                    let kj_hi = kw.min((input_shape.w as isize - iw0).max(0) as usize);
                    for ic in 0..input_shape.c {
                        for ki in ki_lo..ki_hi {
                            let ih = (ih0 + ki as isize) as usize;
                            let xrow = input_shape.index(b, ic, ih, (iw0 + kj_lo as isize) as usize);
                            let wrow = wshape.index(oc, ic, ki, kj_lo);
                            let dxs = &mut dx[xrow..xrow + (kj_hi - kj_lo)];
                            let ws = &wd[wrow..wrow + (kj_hi - kj_lo)];
                            for (dxv, wv) in dxs.iter_mut().zip(ws) {
                                *dxv += g * *wv as f64;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(input_shape, dx.iter().map(|&v| v as f32).collect())
}

/// Elementwise `max(x, 0)`.
pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Upstream gradient gated by the sign of the saved forward input. The
/// sub-gradient at exactly zero is zero (strict inequality).
pub fn relu_backward(dy: &Tensor, x_saved: &Tensor) -> Result<Tensor> {
    if dy.shape() != x_saved.shape() {
        return Err(Error::ShapeMismatch {
            expected: x_saved.shape(),
            got: dy.shape(),
        });
    }
    let data = dy
        .data()
        .iter()
        .zip(x_saved.data())
        .map(|(&g, &x)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(dy.shape(), data)
}

/// Per-window maximum plus the recorded argmax ("switch") of every window.
pub fn maxpool_forward(x: &Tensor, p: &PoolSpec) -> Result<(Tensor, Switches)> {
    let input = x.shape();
    let out_shape = p.output_shape(input)?;
    let (ph, pw) = p.window;
    let mut out = Tensor::zeros(out_shape);
    let mut indices = vec![0usize; out_shape.len()];

    let xd = x.data();
    for b in 0..out_shape.n {
        for c in 0..out_shape.c {
            for oh in 0..out_shape.h {
                let ih0 = oh * p.stride;
                for ow in 0..out_shape.w {
                    let iw0 = ow * p.stride;
                    let mut best = f32::NEG_INFINITY;
                    let mut best_idx = input.index(b, c, ih0, iw0);
                    for ki in 0..ph {
                        let row = input.index(b, c, ih0 + ki, iw0);
                        for kj in 0..pw {
                            let v = xd[row + kj];
                            if v > best {
                                best = v;
                                best_idx = row + kj;
                            }
                        }
                    }
                    let o = out_shape.index(b, c, oh, ow);
                    out.data_mut()[o] = best;
                    indices[o] = best_idx;
                }
            }
        }
    }
    Ok((
        out,
        Switches {
            output_shape: out_shape,
            input_shape: input,
            indices,
        },
    ))
}

/// Routes每 upstream element to its recorded switch location, accumulating
/// where overlapping windows share an argmax; all other cells are zero.
pub fn maxpool_backward(dy: &Tensor, switches: &Switches, input_shape: Shape) -> Result<Tensor> {
    if dy.shape() != switches.output_shape() {
        return Err(Error::ShapeMismatch {
            expected: switches.output_shape(),
            got: dy.shape(),
        });
    }
    if input_shape != switches.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: switches.input_shape(),
            got: input_shape,
        });
    }
    let mut dx = vec![0.0f64; input_shape.len()];
    for (&g, &idx) in dy.data().iter().zip(switches.indices()) {
        if idx >= dx.len() {
            return Err(Error::InvalidGeometry(format!(
                "switch index {} out of range for input shape {}",
                idx, input_shape
            )));
        }
        dx[idx] += g as f64;
    }
    Tensor::from_vec(input_shape, dx.iter().map(|&v| v as f32).collect())
}

/// Affine map over the flattened batch item: `y = W x + b`.
pub fn fc_forward(x: &Tensor, weights: &Matrix, bias: &[f32]) -> Result<Tensor> {
    let input = x.shape();
    if input.item_len() != weights.cols() {
        return Err(Error::InvalidGeometry(format!(
            "fully-connected input of {} values (shape {}) does not match weight columns {}",
            input.item_len(),
            input,
            weights.cols()
        )));
    }
    if bias.len() != weights.rows() {
        return Err(Error::InvalidGeometry(format!(
            "bias length {} does not match {} output rows",
            bias.len(),
            weights.rows()
        )));
    }
    let out_shape = Shape::new(input.n, weights.rows(), 1, 1);
    let mut out = Tensor::zeros(out_shape);
    for b in 0..input.n {
        let xi = x.item(b);
        for r in 0..weights.rows() {
            let mut acc = bias[r] as f64;
            for (xv, wv) in xi.iter().zip(weights.row(r)) {
                acc += *xv as f64 * *wv as f64;
            }
            out.data_mut()[out_shape.index(b, r, 0, 0)] = acc as f32;
        }
    }
    Ok(out)
}

/// Gradient of [`fc_forward`] with respect to its input: `Wᵀ dy`, reshaped to
/// the original input shape.
pub fn fc_backward_input(dy: &Tensor, weights: &Matrix, input_shape: Shape) -> Result<Tensor> {
    let expected = Shape::new(input_shape.n, weights.rows(), 1, 1);
    if dy.shape() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            got: dy.shape(),
        });
    }
    if input_shape.item_len() != weights.cols() {
        return Err(Error::InvalidGeometry(format!(
            "input shape {} does not match weight columns {}",
            input_shape,
            weights.cols()
        )));
    }
    let mut dx = vec![0.0f64; input_shape.len()];
    for b in 0..input_shape.n {
        let base = b * input_shape.item_len();
        for r in 0..weights.rows() {
            let g = dy.data()[expected.index(b, r, 0, 0)] as f64;
            if g == 0.0 {
                continue;
            }
            for (dxv, wv) in dx[base..base + weights.cols()].iter_mut().zip(weights.row(r)) {
                *dxv += g * *wv as f64;
            }
        }
    }
    Tensor::from_vec(input_shape, dx.iter().map(|&v| v as f32).collect())
}

/// Numerically stable softmax: exponentials are taken after subtracting the
/// maximum score.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    if scores.is_empty() {
        return Vec::new();
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| crate::math::exp(s - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}
