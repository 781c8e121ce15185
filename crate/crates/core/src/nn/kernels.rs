//! Raw forward/backward math kernels shared by the autodiff tape and the
//! no-grad inference paths. All loops are sequentially ordered so results are
//! bit-reproducible across runs.

use super::tensor::Tensor;
use super::NnError;

/// C[m,n] = A[m,k] * B[k,n]
pub fn matmul_nn(a: &Tensor, b: &Tensor, m: usize, k: usize, n: usize) -> Tensor {
    debug_assert_eq!(a.numel(), m * k);
    debug_assert_eq!(b.numel(), k * n);
    let mut c = Tensor::zeros(&[m, n]);
    unsafe {
        matrixmultiply::sgemm(
            m, k, n, 1.0,
            a.data.as_ptr(), k as isize, 1,
            b.data.as_ptr(), n as isize, 1,
            0.0,
            c.data.as_mut_ptr(), n as isize, 1,
        );
    }
    c
}

/// C[m,n] = A[m,k] * B^T where B is [n,k]
pub fn matmul_nt(a: &Tensor, b: &Tensor, m: usize, k: usize, n: usize) -> Tensor {
    debug_assert_eq!(a.numel(), m * k);
    debug_assert_eq!(b.numel(), n * k);
    let mut c = Tensor::zeros(&[m, n]);
    unsafe {
        matrixmultiply::sgemm(
            m, k, n, 1.0,
            a.data.as_ptr(), k as isize, 1,
            b.data.as_ptr(), 1, k as isize,
            0.0,
            c.data.as_mut_ptr(), n as isize, 1,
        );
    }
    c
}

/// C[m,n] = A^T * B where A is [k,m], B is [k,n]. When `accumulate` the
/// product is added into `c` instead of overwriting it.
pub fn matmul_tn_into(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let beta = if accumulate { 1.0 } else { 0.0 };
    unsafe {
        matrixmultiply::sgemm(
            m, k, n, 1.0,
            a.as_ptr(), 1, m as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// C[m,n] += A[m,k] * B^T where B is [n,k].
pub fn matmul_nt_into(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize, accumulate: bool) {
    let beta = if accumulate { 1.0 } else { 0.0 };
    unsafe {
        matrixmultiply::sgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv2dSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2dSpec {
    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kernel) / self.stride + 1,
            (w + 2 * self.pad - self.kernel) / self.stride + 1,
        )
    }
}

fn im2col(x: &[f32], c: usize, h: usize, w: usize, spec: &Conv2dSpec, cols: &mut [f32]) {
    let (oh, ow) = spec.out_hw(h, w);
    let k = spec.kernel;
    debug_assert_eq!(cols.len(), c * k * k * oh * ow);
    let mut row = 0usize;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let base = row * oh * ow;
                for oy in 0..oh {
                    let iy = (oy * spec.stride + ky) as isize - spec.pad as isize;
                    for ox in 0..ow {
                        let ix = (ox * spec.stride + kx) as isize - spec.pad as isize;
                        let v = if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                            x[(ci * h + iy as usize) * w + ix as usize]
                        } else {
                            0.0
                        };
                        cols[base + oy * ow + ox] = v;
                    }
                }
                row += 1;
            }
        }
    }
}

fn col2im_add(cols: &[f32], c: usize, h: usize, w: usize, spec: &Conv2dSpec, dx: &mut [f32]) {
    let (oh, ow) = spec.out_hw(h, w);
    let k = spec.kernel;
    let mut row = 0usize;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let base = row * oh * ow;
                for oy in 0..oh {
                    let iy = (oy * spec.stride + ky) as isize - spec.pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..ow {
                        let ix = (ox * spec.stride + kx) as isize - spec.pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        dx[(ci * h + iy as usize) * w + ix as usize] += cols[base + oy * ow + ox];
                    }
                }
                row += 1;
            }
        }
    }
}

/// x: [B,C,H,W], w: [O,C,K,K], b: [O] -> [B,O,OH,OW]
pub fn conv2d_forward(x: &Tensor, w: &Tensor, b: &Tensor, spec: &Conv2dSpec) -> Tensor {
    let (bs, c, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    debug_assert_eq!(c, spec.in_channels);
    let (oh, ow) = spec.out_hw(h, wd);
    let o = spec.out_channels;
    let ckk = c * spec.kernel * spec.kernel;
    let mut out = Tensor::zeros(&[bs, o, oh, ow]);
    let mut cols = vec![0.0f32; ckk * oh * ow];
    for bi in 0..bs {
        let xs = &x.data[bi * c * h * wd..(bi + 1) * c * h * wd];
        im2col(xs, c, h, wd, spec, &mut cols);
        let dst = &mut out.data[bi * o * oh * ow..(bi + 1) * o * oh * ow];
        unsafe {
            matrixmultiply::sgemm(
                o, ckk, oh * ow, 1.0,
                w.data.as_ptr(), ckk as isize, 1,
                cols.as_ptr(), (oh * ow) as isize, 1,
                0.0,
                dst.as_mut_ptr(), (oh * ow) as isize, 1,
            );
        }
        for oc in 0..o {
            let bias = b.data[oc];
            for v in &mut dst[oc * oh * ow..(oc + 1) * oh * ow] {
                *v += bias;
            }
        }
    }
    out
}

pub struct Conv2dGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn conv2d_backward(x: &Tensor, w: &Tensor, grad_out: &Tensor, spec: &Conv2dSpec) -> Conv2dGrads {
    let (bs, c, h, wd) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let (oh, ow) = spec.out_hw(h, wd);
    let o = spec.out_channels;
    let ckk = c * spec.kernel * spec.kernel;
    let mut dx = Tensor::zeros(&x.shape);
    let mut dw = Tensor::zeros(&w.shape);
    let mut db = Tensor::zeros(&[o]);
    let mut cols = vec![0.0f32; ckk * oh * ow];
    let mut dcols = vec![0.0f32; ckk * oh * ow];
    for bi in 0..bs {
        let xs = &x.data[bi * c * h * wd..(bi + 1) * c * h * wd];
        let gs = &grad_out.data[bi * o * oh * ow..(bi + 1) * o * oh * ow];
        im2col(xs, c, h, wd, spec, &mut cols);
        // dW += g [O, OHW] x cols^T [OHW, CKK]
        matmul_nt_into(gs, &cols, &mut dw.data, o, oh * ow, ckk, true);
        // dcols = W^T [CKK, O] x g [O, OHW]
        matmul_tn_into(&w.data, gs, &mut dcols, ckk, o, oh * ow, false);
        col2im_add(&dcols, c, h, wd, spec, &mut dx.data[bi * c * h * wd..(bi + 1) * c * h * wd]);
        for oc in 0..o {
            db.data[oc] += gs[oc * oh * ow..(oc + 1) * oh * ow].iter().sum::<f32>();
        }
    }
    Conv2dGrads { dx, dw, db }
}

/// 2x2 max pooling with stride 2. Returns output and per-output argmax
/// indices into the flattened input (used for the backward scatter).
pub fn max_pool2_forward(x: &Tensor) -> (Tensor, Vec<u32>) {
    let (bs, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[bs, c, oh, ow]);
    let mut arg = vec![0u32; bs * c * oh * ow];
    for bi in 0..bs {
        for ci in 0..c {
            let base = (bi * c + ci) * h * w;
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f32::NEG_INFINITY;
                    let mut best_i = 0usize;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let i = base + (oy * 2 + dy) * w + ox * 2 + dx;
                            if x.data[i] > best {
                                best = x.data[i];
                                best_i = i;
                            }
                        }
                    }
                    let oi = ((bi * c + ci) * oh + oy) * ow + ox;
                    out.data[oi] = best;
                    arg[oi] = best_i as u32;
                }
            }
        }
    }
    (out, arg)
}

pub fn max_pool2_backward(grad_out: &Tensor, arg: &[u32], in_shape: &[usize]) -> Tensor {
    let mut dx = Tensor::zeros(in_shape);
    for (g, &i) in grad_out.data.iter().zip(arg) {
        dx.data[i as usize] += g;
    }
    dx
}

/// [B,C,H,W] -> [B,C]
pub fn global_avg_pool_forward(x: &Tensor) -> Tensor {
    let (bs, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let mut out = Tensor::zeros(&[bs, c]);
    let hw = (h * w) as f32;
    for bi in 0..bs {
        for ci in 0..c {
            let base = (bi * c + ci) * h * w;
            out.data[bi * c + ci] = x.data[base..base + h * w].iter().sum::<f32>() / hw;
        }
    }
    out
}

pub fn global_avg_pool_backward(grad_out: &Tensor, in_shape: &[usize]) -> Tensor {
    let (bs, c, h, w) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
    let mut dx = Tensor::zeros(in_shape);
    let inv = 1.0 / (h * w) as f32;
    for bi in 0..bs {
        for ci in 0..c {
            let g = grad_out.data[bi * c + ci] * inv;
            let base = (bi * c + ci) * h * w;
            for v in &mut dx.data[base..base + h * w] {
                *v += g;
            }
        }
    }
    dx
}

/// x: [B,F], w: [O,F], b: [O] -> [B,O]
pub fn linear_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Tensor {
    let (bs, f) = (x.shape[0], x.shape[1]);
    let o = w.shape[0];
    let mut y = matmul_nt(x, w, bs, f, o);
    for bi in 0..bs {
        for oi in 0..o {
            y.data[bi * o + oi] += b.data[oi];
        }
    }
    y
}

pub struct LinearGrads {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

pub fn linear_backward(x: &Tensor, w: &Tensor, grad_out: &Tensor) -> LinearGrads {
    let (bs, f) = (x.shape[0], x.shape[1]);
    let o = w.shape[0];
    let dx = matmul_nn(grad_out, w, bs, o, f);
    let mut dw = Tensor::zeros(&w.shape);
    matmul_tn_into(&grad_out.data, &x.data, &mut dw.data, o, bs, f, false);
    let mut db = Tensor::zeros(&[o]);
    for bi in 0..bs {
        for oi in 0..o {
            db.data[oi] += grad_out.data[bi * o + oi];
        }
    }
    LinearGrads { dx, dw, db }
}

pub const GROUP_NORM_EPS: f32 = 1e-5;

/// x: [B,C,H,W], gamma/beta: [C], groups divides C.
pub fn group_norm_forward(x: &Tensor, gamma: &Tensor, beta: &Tensor, groups: usize) -> Tensor {
    let (bs, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    debug_assert_eq!(c % groups, 0);
    let cg = c / groups;
    let n = cg * h * w;
    let mut out = Tensor::zeros(&x.shape);
    for bi in 0..bs {
        for g in 0..groups {
            let base = (bi * c + g * cg) * h * w;
            let xs = &x.data[base..base + n];
            let mean = xs.iter().sum::<f32>() / n as f32;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / n as f32;
            let istd = 1.0 / (var + GROUP_NORM_EPS).sqrt();
            for ci in 0..cg {
                let ch = g * cg + ci;
                let (gm, bt) = (gamma.data[ch], beta.data[ch]);
                for i in 0..h * w {
                    let xi = xs[ci * h * w + i];
                    out.data[base + ci * h * w + i] = gm * (xi - mean) * istd + bt;
                }
            }
        }
    }
    out
}

pub struct GroupNormGrads {
    pub dx: Tensor,
    pub dgamma: Tensor,
    pub dbeta: Tensor,
}

pub fn group_norm_backward(
    x: &Tensor,
    gamma: &Tensor,
    grad_out: &Tensor,
    groups: usize,
) -> GroupNormGrads {
    let (bs, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
    let cg = c / groups;
    let n = cg * h * w;
    let nf = n as f32;
    let mut dx = Tensor::zeros(&x.shape);
    let mut dgamma = Tensor::zeros(&[c]);
    let mut dbeta = Tensor::zeros(&[c]);
    for bi in 0..bs {
        for g in 0..groups {
            let base = (bi * c + g * cg) * h * w;
            let xs = &x.data[base..base + n];
            let gs = &grad_out.data[base..base + n];
            let mean = xs.iter().sum::<f32>() / nf;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f32>() / nf;
            let istd = 1.0 / (var + GROUP_NORM_EPS).sqrt();
            // dxhat = g * gamma_c; accumulate the two reduction terms
            let mut sum_dxhat = 0.0f32;
            let mut sum_dxhat_xhat = 0.0f32;
            for ci in 0..cg {
                let gm = gamma.data[g * cg + ci];
                for i in 0..h * w {
                    let j = ci * h * w + i;
                    let xhat = (xs[j] - mean) * istd;
                    let dxhat = gs[j] * gm;
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                }
            }
            for ci in 0..cg {
                let ch = g * cg + ci;
                let gm = gamma.data[ch];
                for i in 0..h * w {
                    let j = ci * h * w + i;
                    let xhat = (xs[j] - mean) * istd;
                    let dxhat = gs[j] * gm;
                    dx.data[base + j] = istd * (dxhat - sum_dxhat / nf - xhat * sum_dxhat_xhat / nf);
                    dgamma.data[ch] += gs[j] * xhat;
                    dbeta.data[ch] += gs[j];
                }
            }
        }
    }
    GroupNormGrads { dx, dgamma, dbeta }
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(&x.shape);
    for i in 0..x.data.len() {
        if x.data[i] > 0.0 {
            dx.data[i] = grad_out.data[i];
        }
    }
    dx
}

pub const L2_NORM_MIN: f32 = 1e-12;

/// Row-wise L2 normalization of [R,D]. Zero rows are an error.
pub fn l2_normalize_rows_forward(x: &Tensor) -> Result<Tensor, NnError> {
    let (r, d) = (x.shape[0], x.shape[1]);
    let mut out = Tensor::zeros(&x.shape);
    for ri in 0..r {
        let row = &x.data[ri * d..(ri + 1) * d];
        let norm = row.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm < L2_NORM_MIN {
            return Err(NnError::ZeroNorm { row: ri });
        }
        for (o, v) in out.data[ri * d..(ri + 1) * d].iter_mut().zip(row) {
            *o = v / norm;
        }
    }
    Ok(out)
}

pub fn l2_normalize_rows_backward(x: &Tensor, y: &Tensor, grad_out: &Tensor) -> Tensor {
    let (r, d) = (x.shape[0], x.shape[1]);
    let mut dx = Tensor::zeros(&x.shape);
    for ri in 0..r {
        let xr = &x.data[ri * d..(ri + 1) * d];
        let yr = &y.data[ri * d..(ri + 1) * d];
        let gr = &grad_out.data[ri * d..(ri + 1) * d];
        let norm = xr.iter().map(|v| v * v).sum::<f32>().sqrt();
        let dot: f32 = gr.iter().zip(yr).map(|(g, y)| g * y).sum();
        for i in 0..d {
            dx.data[ri * d + i] = (gr[i] - dot * yr[i]) / norm;
        }
    }
    dx
}

/// Row-wise log(sum(exp(x))) of [R,C] -> [R].
pub fn logsumexp_rows_forward(x: &Tensor) -> Tensor {
    let (r, c) = (x.shape[0], x.shape[1]);
    let mut out = Tensor::zeros(&[r]);
    for ri in 0..r {
        let row = &x.data[ri * c..(ri + 1) * c];
        let m = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let s: f32 = row.iter().map(|v| (v - m).exp()).sum();
        out.data[ri] = m + s.ln();
    }
    out
}

pub fn logsumexp_rows_backward(x: &Tensor, lse: &Tensor, grad_out: &Tensor) -> Tensor {
    let (r, c) = (x.shape[0], x.shape[1]);
    let mut dx = Tensor::zeros(&x.shape);
    for ri in 0..r {
        let g = grad_out.data[ri];
        for ci in 0..c {
            dx.data[ri * c + ci] = g * (x.data[ri * c + ci] - lse.data[ri]).exp();
        }
    }
    dx
}

/// Mean cross-entropy of row-wise softmax(logits) against integer labels.
pub fn softmax_xent_forward(logits: &Tensor, labels: &[usize]) -> f32 {
    let (b, k) = (logits.shape[0], logits.shape[1]);
    debug_assert_eq!(labels.len(), b);
    let mut total = 0.0f32;
    for bi in 0..b {
        let row = &logits.data[bi * k..(bi + 1) * k];
        let m = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f32>().ln();
        total += lse - row[labels[bi]];
    }
    total / b as f32
}

pub fn softmax_xent_backward(logits: &Tensor, labels: &[usize], grad_out: f32) -> Tensor {
    let (b, k) = (logits.shape[0], logits.shape[1]);
    let mut dx = Tensor::zeros(&logits.shape);
    let scale = grad_out / b as f32;
    for bi in 0..b {
        let row = &logits.data[bi * k..(bi + 1) * k];
        let m = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f32>().ln();
        for ki in 0..k {
            let p = (row[ki] - lse).exp();
            dx.data[bi * k + ki] = scale * (p - if ki == labels[bi] { 1.0 } else { 0.0 });
        }
    }
    dx
}
