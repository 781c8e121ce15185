//! Shared test oracles: naive f64 reference implementations of every network
//! operation (straight loops, no GEMM, no shared code with the library) and a
//! central-difference gradient-check harness built on them.

#![allow(dead_code)]

use gaze_ssl::nn::kernels::Conv2dSpec;
use gaze_ssl::nn::{Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

// ---------------------------------------------------------------- naive f64

pub fn naive_conv2d(
    x: &[f64],
    w: &[f64],
    b: &[f64],
    bs: usize,
    c: usize,
    h: usize,
    wd: usize,
    spec: &Conv2dSpec,
) -> Vec<f64> {
    let k = spec.kernel;
    let (oh, ow) = spec.out_hw(h, wd);
    let o = spec.out_channels;
    let mut out = vec![0.0; bs * o * oh * ow];
    for bi in 0..bs {
        for oc in 0..o {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = b[oc];
                    for ci in 0..c {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * spec.stride + ky) as isize - spec.pad as isize;
                                let ix = (ox * spec.stride + kx) as isize - spec.pad as isize;
                                if iy < 0 || iy >= h as isize || ix < 0 || ix >= wd as isize {
                                    continue;
                                }
                                let xv = x[((bi * c + ci) * h + iy as usize) * wd + ix as usize];
                                let wv = w[((oc * c + ci) * k + ky) * k + kx];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[((bi * o + oc) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    out
}

pub fn naive_relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

pub fn naive_max_pool2(x: &[f64], bs: usize, c: usize, h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![0.0; bs * c * oh * ow];
    for bi in 0..bs {
        for ci in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = f64::NEG_INFINITY;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            let v = x[((bi * c + ci) * h + oy * 2 + dy) * w + ox * 2 + dx];
                            best = best.max(v);
                        }
                    }
                    out[((bi * c + ci) * oh + oy) * ow + ox] = best;
                }
            }
        }
    }
    out
}

pub fn naive_gap(x: &[f64], bs: usize, c: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; bs * c];
    for bi in 0..bs {
        for ci in 0..c {
            let base = (bi * c + ci) * h * w;
            out[bi * c + ci] = x[base..base + h * w].iter().sum::<f64>() / (h * w) as f64;
        }
    }
    out
}

pub fn naive_linear(x: &[f64], w: &[f64], b: &[f64], bs: usize, f: usize, o: usize) -> Vec<f64> {
    let mut out = vec![0.0; bs * o];
    for bi in 0..bs {
        for oi in 0..o {
            let mut acc = b[oi];
            for fi in 0..f {
                acc += x[bi * f + fi] * w[oi * f + fi];
            }
            out[bi * o + oi] = acc;
        }
    }
    out
}

pub fn naive_group_norm(
    x: &[f64],
    gamma: &[f64],
    beta: &[f64],
    bs: usize,
    c: usize,
    h: usize,
    w: usize,
    groups: usize,
    eps: f64,
) -> Vec<f64> {
    let cg = c / groups;
    let n = (cg * h * w) as f64;
    let mut out = vec![0.0; x.len()];
    for bi in 0..bs {
        for g in 0..groups {
            let base = (bi * c + g * cg) * h * w;
            let xs = &x[base..base + cg * h * w];
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let istd = 1.0 / (var + eps).sqrt();
            for ci in 0..cg {
                let ch = g * cg + ci;
                for i in 0..h * w {
                    let j = ci * h * w + i;
                    out[base + j] = gamma[ch] * (xs[j] - mean) * istd + beta[ch];
                }
            }
        }
    }
    out
}

pub fn naive_l2_normalize_rows(x: &[f64], r: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for ri in 0..r {
        let row = &x[ri * d..(ri + 1) * d];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for i in 0..d {
            out[ri * d + i] = row[i] / norm;
        }
    }
    out
}

pub fn naive_matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0;
            for kk in 0..k {
                acc += a[i * k + kk] * b[j * k + kk];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

pub fn naive_logsumexp_rows(x: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r];
    for ri in 0..r {
        let row = &x[ri * c..(ri + 1) * c];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        out[ri] = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    }
    out
}

pub fn naive_softmax_xent(logits: &[f64], labels: &[usize], b: usize, k: usize) -> f64 {
    let mut total = 0.0;
    for bi in 0..b {
        let row = &logits[bi * k..(bi + 1) * k];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - row[labels[bi]];
    }
    total / b as f64
}

/// Brute-force contrastive loss on raw embeddings: L2-normalize rows, then an
/// explicit double loop over the 2B batch; anchor i pairs with i +- B, the
/// denominator runs over all k != i including the positive.
pub fn naive_simclr_tt(z_raw: &[f64], rows: usize, d: usize, tau: f64) -> f64 {
    let z = naive_l2_normalize_rows(z_raw, rows, d);
    let b = rows / 2;
    let sim = |i: usize, j: usize| -> f64 {
        (0..d).map(|c| z[i * d + c] * z[j * d + c]).sum::<f64>()
    };
    let mut total = 0.0;
    for i in 0..rows {
        let partner = if i < b { i + b } else { i - b };
        let num = (sim(i, partner) / tau).exp();
        let mut den = 0.0;
        for k in 0..rows {
            if k == i {
                continue;
            }
            den += (sim(i, k) / tau).exp();
        }
        total += -(num / den).ln();
    }
    total / rows as f64
}

/// Brute-force regression loss: mean over rows of 2 - 2 cos(q_i, t_i).
pub fn naive_byol_tt(q: &[f64], t: &[f64], rows: usize, d: usize) -> f64 {
    let qn = naive_l2_normalize_rows(q, rows, d);
    let tn = naive_l2_normalize_rows(t, rows, d);
    let mut total = 0.0;
    for i in 0..rows {
        let cos: f64 = (0..d).map(|c| qn[i * d + c] * tn[i * d + c]).sum();
        total += 2.0 - 2.0 * cos;
    }
    total / rows as f64
}

// ------------------------------------------------------------- the harness

pub fn to_f64(t: &Tensor) -> Vec<f64> {
    t.data.iter().map(|&v| v as f64).collect()
}

/// One operation instance under test: f32 inputs, a tape builder producing
/// the op's output variable, and the naive f64 forward of the same op.
pub struct OpCheck<'a> {
    pub name: String,
    pub inputs: Vec<Tensor>,
    pub build: Box<dyn Fn(&mut Tape, &[Var]) -> Var + 'a>,
    pub naive: Box<dyn Fn(&[Vec<f64>]) -> Vec<f64> + 'a>,
}

/// Central-difference gradient check at step `h` with elementwise relative
/// tolerance `tol`. Also verifies the forward value against the naive oracle.
pub fn gradcheck(check: &OpCheck, h: f64, tol: f64, rng: &mut ChaCha12Rng) {
    // forward on tape
    let mut tape = Tape::new();
    let vars: Vec<Var> = check.inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = (check.build)(&mut tape, &vars);
    let out_shape = tape.shape(out).to_vec();
    let out_numel: usize = out_shape.iter().product();

    // naive forward agreement
    let f64_inputs: Vec<Vec<f64>> = check.inputs.iter().map(to_f64).collect();
    let naive_out = (check.naive)(&f64_inputs);
    assert_eq!(naive_out.len(), out_numel, "{}: oracle output length mismatch", check.name);
    for (i, (&a, &n)) in tape.value(out).data.iter().zip(&naive_out).enumerate() {
        let denom = (a.abs() as f64).max(n.abs()).max(1e-3);
        assert!(
            ((a as f64 - n).abs() / denom) < 1e-4,
            "{}: forward mismatch at {i}: impl {a} vs oracle {n}",
            check.name
        );
    }

    // scalarize: s = sum(out * r) with random +-[0.5, 1.5] weights
    let weights: Vec<f64> = (0..out_numel)
        .map(|_| {
            let mag: f64 = rng.gen_range(0.5..1.5);
            if rng.gen::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    let w32 = Tensor::new(out_shape.clone(), weights.iter().map(|&v| v as f32).collect()).unwrap();
    let weighted = tape.mul_const(out, &w32);
    let mean = tape.mean_all(weighted);
    let loss = tape.scale(mean, out_numel as f32);
    let grads = tape.backward(loss).expect("backward");

    let scalar_of = |inputs: &[Vec<f64>]| -> f64 {
        let out = (check.naive)(inputs);
        out.iter().zip(&weights).map(|(o, w)| o * w).sum()
    };

    for (ii, input) in check.inputs.iter().enumerate() {
        let analytic = grads.get(vars[ii], &input.shape);
        for j in 0..input.numel() {
            let mut plus = f64_inputs.clone();
            let mut minus = f64_inputs.clone();
            plus[ii][j] += h;
            minus[ii][j] -= h;
            let num = (scalar_of(&plus) - scalar_of(&minus)) / (2.0 * h);
            let a = analytic.data[j] as f64;
            let denom = a.abs().max(num.abs()).max(1e-4);
            let rel = (a - num).abs() / denom;
            assert!(
                rel < tol,
                "{}: grad mismatch input {ii} elem {j}: analytic {a:.6e} vs numeric {num:.6e} (rel {rel:.3e})",
                check.name
            );
        }
    }
}

// ------------------------------------------------------ instance generators

pub fn rand_tensor(shape: &[usize], lo: f32, hi: f32, rng: &mut ChaCha12Rng) -> Tensor {
    Tensor::uniform(shape, lo, hi, rng)
}

/// Values bounded away from zero (relu-kink safe): |v| in [0.1, 1.2].
pub fn rand_tensor_nonzero(shape: &[usize], rng: &mut ChaCha12Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let mag: f32 = rng.gen_range(0.1..1.2);
            if rng.gen::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Random tensor whose 2x2 pooling windows have a clear (>= 0.06) max gap.
pub fn rand_tensor_pool_safe(bs: usize, c: usize, h: usize, w: usize, rng: &mut ChaCha12Rng) -> Tensor {
    let mut t = rand_tensor(&[bs, c, h, w], -1.0, 1.0, rng);
    for bi in 0..bs {
        for ci in 0..c {
            for oy in 0..h / 2 {
                for ox in 0..w / 2 {
                    let idx = |dy: usize, dx: usize| ((bi * c + ci) * h + oy * 2 + dy) * w + ox * 2 + dx;
                    let mut vals: Vec<(usize, f32)> = (0..4)
                        .map(|k| {
                            let i = idx(k / 2, k % 2);
                            (i, t.data[i])
                        })
                        .collect();
                    vals.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
                    if vals[0].1 - vals[1].1 < 0.06 {
                        t.data[vals[0].0] += 0.2;
                    }
                }
            }
        }
    }
    t
}

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
