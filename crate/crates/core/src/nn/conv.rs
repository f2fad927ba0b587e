//! im2col convolution kernels.

use super::{shape_err, NnError};

/// Static shape of one conv2d application.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_channels: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new(
        input: [usize; 4],
        weight: [usize; 4],
        stride: usize,
        padding: usize,
    ) -> Result<Self, NnError> {
        let [batch, in_channels, in_h, in_w] = input;
        let [out_channels, wc, kernel_h, kernel_w] = weight;
        if wc != in_channels {
            return Err(shape_err(
                "conv2d",
                format!("input has {in_channels} channels, weight expects {wc}"),
            ));
        }
        if stride == 0 {
            return Err(shape_err("conv2d", "stride must be positive"));
        }
        if in_h + 2 * padding < kernel_h || in_w + 2 * padding < kernel_w {
            return Err(shape_err(
                "conv2d",
                format!("kernel {kernel_h}×{kernel_w} larger than padded input {in_h}×{in_w}"),
            ));
        }
        Ok(Self {
            batch,
            in_channels,
            in_h,
            in_w,
            out_channels,
            kernel_h,
            kernel_w,
            stride,
            padding,
            out_h: (in_h + 2 * padding - kernel_h) / stride + 1,
            out_w: (in_w + 2 * padding - kernel_w) / stride + 1,
        })
    }

    /// Rows of the unfolded input (C_in·kh·kw).
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    /// Output positions per sample (H'·W').
    pub fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    pub fn in_sample_len(&self) -> usize {
        self.in_channels * self.in_h * self.in_w
    }

    pub fn out_sample_len(&self) -> usize {
        self.out_channels * self.positions()
    }

    /// Output columns `ox` whose input column `ox·stride + kj − padding`
    /// lies inside the image.
    #[inline]
    fn valid_ox(&self, kj: usize) -> std::ops::Range<usize> {
        let (s, p) = (self.stride, self.padding);
        let lo = if kj >= p { 0 } else { (p - kj).div_ceil(s) };
        // ox·s + kj − p ≤ in_w − 1  ⇔  ox ≤ (in_w − 1 + p − kj)/s
        let hi = if self.in_w + p > kj { ((self.in_w - 1 + p - kj) / s + 1).min(self.out_w) } else { 0 };
        lo.min(hi)..hi
    }

    /// Unfolds one sample (C_in×H×W) into a K×P column matrix.
    pub fn im2col(&self, input: &[f32], cols: &mut [f32]) {
        let p = self.positions();
        let (s, pad) = (self.stride, self.padding);
        for c in 0..self.in_channels {
            let plane = &input[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            for ki in 0..self.kernel_h {
                for kj in 0..self.kernel_w {
                    let row = (c * self.kernel_h + ki) * self.kernel_w + kj;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    let xs = self.valid_ox(kj);
                    for oy in 0..self.out_h {
                        let out = &mut dst[oy * self.out_w..(oy + 1) * self.out_w];
                        let iy = (oy * s + ki) as isize - pad as isize;
                        if iy < 0 || iy as usize >= self.in_h {
                            out.fill(0.0);
                            continue;
                        }
                        let src = &plane[iy as usize * self.in_w..(iy as usize + 1) * self.in_w];
                        out[..xs.start].fill(0.0);
                        out[xs.end..].fill(0.0);
                        if xs.is_empty() {
                            continue;
                        }
                        let first = xs.start * s + kj - pad;
                        if s == 1 {
                            out[xs.clone()].copy_from_slice(&src[first..first + xs.len()]);
                        } else {
                            for (o, ox) in out[xs.clone()].iter_mut().zip(0..) {
                                *o = src[first + ox * s];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Scatters a K×P column gradient back onto one input sample (accumulating).
    pub fn col2im(&self, cols: &[f32], input_grad: &mut [f32]) {
        let p = self.positions();
        let (s, pad) = (self.stride, self.padding);
        for c in 0..self.in_channels {
            let plane = &mut input_grad[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            for ki in 0..self.kernel_h {
                for kj in 0..self.kernel_w {
                    let row = (c * self.kernel_h + ki) * self.kernel_w + kj;
                    let src = &cols[row * p..(row + 1) * p];
                    let xs = self.valid_ox(kj);
                    if xs.is_empty() {
                        continue;
                    }
                    let first = xs.start * s + kj - pad;
                    for oy in 0..self.out_h {
                        let iy = (oy * s + ki) as isize - pad as isize;
                        if iy < 0 || iy as usize >= self.in_h {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * self.in_w..(iy as usize + 1) * self.in_w];
                        let row_src = &src[oy * self.out_w..(oy + 1) * self.out_w];
                        for (v, ox) in row_src[xs.clone()].iter().zip(0..) {
                            dst[first + ox * s] += v;
                        }
                    }
                }
            }
        }
    }
}

/// Row-major GEMM `c = op(a)·op(b) + beta·c` with explicit strides, so
/// transposed operands need no copy.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (usize, usize),
    b: &[f32],
    (rsb, csb): (usize, usize),
    beta: f32,
    c: &mut [f32],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || (m - 1) * rsa + (k - 1) * csa < a.len());
    assert!(k == 0 || (k - 1) * rsb + (n - 1) * csb < b.len());
    assert!(c.len() >= m * n);
    // SAFETY: the assertions above bound every index the kernel touches.
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Forward convolution of a full batch.
pub(crate) fn conv_forward(g: &ConvGeometry, input: &[f32], weight: &[f32], bias: &[f32]) -> Vec<f32> {
    let k = g.patch_len();
    let p = g.positions();
    let mut out = vec![0.0f32; g.batch * g.out_sample_len()];
    let mut cols = vec![0.0f32; k * p];
    for n in 0..g.batch {
        let x = &input[n * g.in_sample_len()..(n + 1) * g.in_sample_len()];
        g.im2col(x, &mut cols);
        let y = &mut out[n * g.out_sample_len()..(n + 1) * g.out_sample_len()];
        for (co, row) in y.chunks_mut(p).enumerate() {
            row.fill(bias[co]);
        }
        gemm(g.out_channels, k, p, weight, (k, 1), &cols, (p, 1), 1.0, y);
    }
    out
}

/// Gradients of a convolution given the upstream gradient.
pub(crate) struct ConvGrads {
    pub input: Option<Vec<f32>>,
    pub weight: Option<Vec<f32>>,
    pub bias: Option<Vec<f32>>,
}

pub(crate) fn conv_backward(
    g: &ConvGeometry,
    grad_out: &[f32],
    input: &[f32],
    weight: &[f32],
    need: (bool, bool, bool),
) -> ConvGrads {
    let (need_input, need_weight, need_bias) = need;
    let k = g.patch_len();
    let p = g.positions();
    let mut grad_w = need_weight.then(|| vec![0.0f32; g.out_channels * k]);
    let mut grad_x = need_input.then(|| vec![0.0f32; g.batch * g.in_sample_len()]);
    let grad_b = need_bias.then(|| {
        let mut acc = vec![0.0f64; g.out_channels];
        for n in 0..g.batch {
            let dy = &grad_out[n * g.out_sample_len()..(n + 1) * g.out_sample_len()];
            for (co, row) in dy.chunks(p).enumerate() {
                acc[co] += row.iter().map(|&v| v as f64).sum::<f64>();
            }
        }
        acc.into_iter().map(|v| v as f32).collect()
    });
    let mut cols = vec![0.0f32; k * p];
    for n in 0..g.batch {
        let dy = &grad_out[n * g.out_sample_len()..(n + 1) * g.out_sample_len()];
        if let Some(gw) = grad_w.as_mut() {
            g.im2col(&input[n * g.in_sample_len()..(n + 1) * g.in_sample_len()], &mut cols);
            // dW (C_out×K) += dY (C_out×P) · colsᵀ (P×K)
            gemm(g.out_channels, p, k, dy, (p, 1), &cols, (1, p), 1.0, gw);
        }
        if let Some(gx) = grad_x.as_mut() {
            // dcols (K×P) = Wᵀ (K×C_out) · dY (C_out×P)
            gemm(k, g.out_channels, p, weight, (1, k), dy, (p, 1), 0.0, &mut cols);
            g.col2im(&cols, &mut gx[n * g.in_sample_len()..(n + 1) * g.in_sample_len()]);
        }
    }
    ConvGrads {
        input: grad_x,
        weight: grad_w,
        bias: grad_b,
    }
}
