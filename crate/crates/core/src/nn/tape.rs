//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation appends a node holding its forward value and a backward
//! closure. `backward` walks the tape in reverse, accumulating gradients into
//! a table indexed by node id. Leaves (parameters, inputs, constants) have no
//! backward closure; parameters unreachable from the loss simply end up with
//! a `None` entry, which callers read as a zero gradient.

use super::kernels::{self, Conv2dSpec};
use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub usize);

type BackFn = Box<dyn FnOnce(&Tensor, &[Tensor], &mut [Option<Tensor>])>;

#[derive(Default)]
pub struct Tape {
    values: Vec<Tensor>,
    backs: Vec<Option<BackFn>>,
    consumed: bool,
}

/// Gradient table produced by [`Tape::backward`].
pub struct Grads {
    table: Vec<Option<Tensor>>,
}

impl Grads {
    /// Gradient for `v`, or zeros of `shape` when `v` is unreachable from the loss.
    pub fn get(&self, v: Var, shape: &[usize]) -> Tensor {
        match &self.table[v.0] {
            Some(t) => t.clone(),
            None => Tensor::zeros(shape),
        }
    }

    pub fn get_opt(&self, v: Var) -> Option<&Tensor> {
        self.table[v.0].as_ref()
    }
}

fn accum(grads: &mut [Option<Tensor>], id: usize, t: Tensor) {
    match &mut grads[id] {
        Some(g) => g.add_assign(&t),
        slot @ None => *slot = Some(t),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.values[v.0].shape
    }

    fn push(&mut self, value: Tensor, back: Option<BackFn>) -> Var {
        self.values.push(value);
        self.backs.push(back);
        Var(self.values.len() - 1)
    }

    /// Insert a leaf (parameter, input, or constant). Leaves receive gradient
    /// accumulation but propagate nothing further.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, None)
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, spec: Conv2dSpec) -> Var {
        let out = kernels::conv2d_forward(self.value(x), self.value(w), self.value(b), &spec);
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                let gr = kernels::conv2d_backward(&vals[x.0], &vals[w.0], g, &spec);
                accum(grads, x.0, gr.dx);
                accum(grads, w.0, gr.dw);
                accum(grads, b.0, gr.db);
            })),
        )
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = kernels::relu_forward(self.value(x));
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                accum(grads, x.0, kernels::relu_backward(&vals[x.0], g));
            })),
        )
    }

    pub fn max_pool2(&mut self, x: Var) -> Var {
        let (out, arg) = kernels::max_pool2_forward(self.value(x));
        let in_shape = self.value(x).shape.clone();
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, kernels::max_pool2_backward(g, &arg, &in_shape));
            })),
        )
    }

    pub fn global_avg_pool(&mut self, x: Var) -> Var {
        let out = kernels::global_avg_pool_forward(self.value(x));
        let in_shape = self.value(x).shape.clone();
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, kernels::global_avg_pool_backward(g, &in_shape));
            })),
        )
    }

    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let out = kernels::linear_forward(self.value(x), self.value(w), self.value(b));
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                let gr = kernels::linear_backward(&vals[x.0], &vals[w.0], g);
                accum(grads, x.0, gr.dx);
                accum(grads, w.0, gr.dw);
                accum(grads, b.0, gr.db);
            })),
        )
    }

    pub fn group_norm(&mut self, x: Var, gamma: Var, beta: Var, groups: usize) -> Var {
        let out =
            kernels::group_norm_forward(self.value(x), self.value(gamma), self.value(beta), groups);
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                let gr = kernels::group_norm_backward(&vals[x.0], &vals[gamma.0], g, groups);
                accum(grads, x.0, gr.dx);
                accum(grads, gamma.0, gr.dgamma);
                accum(grads, beta.0, gr.dbeta);
            })),
        )
    }

    pub fn l2_normalize_rows(&mut self, x: Var) -> Result<Var, NnError> {
        let out = kernels::l2_normalize_rows_forward(self.value(x))?;
        Ok(self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                // y is re-derived from x; norms are guaranteed nonzero by the forward pass
                let y = kernels::l2_normalize_rows_forward(&vals[x.0]).expect("checked in forward");
                accum(grads, x.0, kernels::l2_normalize_rows_backward(&vals[x.0], &y, g));
            })),
        ))
    }

    /// a: [R,D], b: [S,D] -> a * b^T: [R,S]
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let (r, d) = (self.shape(a)[0], self.shape(a)[1]);
        let s = self.shape(b)[0];
        let out = kernels::matmul_nt(self.value(a), self.value(b), r, d, s);
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                // dA = G [R,S] x B [S,D]; dB = G^T [S,R] x A [R,D]
                let da = kernels::matmul_nn(g, &vals[b.0], r, s, d);
                let mut db = Tensor::zeros(&[s, d]);
                kernels::matmul_tn_into(&g.data, &vals[a.0].data, &mut db.data, s, r, d, false);
                accum(grads, a.0, da);
                accum(grads, b.0, db);
            })),
        )
    }

    pub fn scale(&mut self, x: Var, s: f32) -> Var {
        let out = self.value(x).map(|v| v * s);
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, g.map(|v| v * s));
            })),
        )
    }

    pub fn add_scalar(&mut self, x: Var, s: f32) -> Var {
        let out = self.value(x).map(|v| v + s);
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, g.clone());
            })),
        )
    }

    pub fn add(&mut self, x: Var, y: Var) -> Var {
        debug_assert_eq!(self.shape(x), self.shape(y));
        let mut out = self.value(x).clone();
        out.add_assign(self.value(y));
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, g.clone());
                accum(grads, y.0, g.clone());
            })),
        )
    }

    pub fn sub(&mut self, x: Var, y: Var) -> Var {
        debug_assert_eq!(self.shape(x), self.shape(y));
        let xv = self.value(x);
        let yv = self.value(y);
        let data = xv.data.iter().zip(&yv.data).map(|(a, b)| a - b).collect();
        let out = Tensor { shape: xv.shape.clone(), data };
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, g.clone());
                accum(grads, y.0, g.map(|v| -v));
            })),
        )
    }

    pub fn mul(&mut self, x: Var, y: Var) -> Var {
        debug_assert_eq!(self.shape(x), self.shape(y));
        let xv = self.value(x);
        let yv = self.value(y);
        let data = xv.data.iter().zip(&yv.data).map(|(a, b)| a * b).collect();
        let out = Tensor { shape: xv.shape.clone(), data };
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                let dx = Tensor {
                    shape: g.shape.clone(),
                    data: g.data.iter().zip(&vals[y.0].data).map(|(g, b)| g * b).collect(),
                };
                let dy = Tensor {
                    shape: g.shape.clone(),
                    data: g.data.iter().zip(&vals[x.0].data).map(|(g, a)| g * a).collect(),
                };
                accum(grads, x.0, dx);
                accum(grads, y.0, dy);
            })),
        )
    }

    /// Add a constant tensor (no gradient flows into `c`).
    pub fn add_const(&mut self, x: Var, c: &Tensor) -> Var {
        debug_assert_eq!(self.shape(x), &c.shape[..]);
        let xv = self.value(x);
        let data = xv.data.iter().zip(&c.data).map(|(a, b)| a + b).collect();
        let out = Tensor { shape: xv.shape.clone(), data };
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, g.clone());
            })),
        )
    }

    /// Multiply by a constant tensor (no gradient flows into `c`).
    pub fn mul_const(&mut self, x: Var, c: &Tensor) -> Var {
        debug_assert_eq!(self.shape(x), &c.shape[..]);
        let xv = self.value(x);
        let data = xv.data.iter().zip(&c.data).map(|(a, b)| a * b).collect();
        let out = Tensor { shape: xv.shape.clone(), data };
        let cc = c.clone();
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                let dx = Tensor {
                    shape: g.shape.clone(),
                    data: g.data.iter().zip(&cc.data).map(|(g, c)| g * c).collect(),
                };
                accum(grads, x.0, dx);
            })),
        )
    }

    pub fn logsumexp_rows(&mut self, x: Var) -> Var {
        let out = kernels::logsumexp_rows_forward(self.value(x));
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                let lse = kernels::logsumexp_rows_forward(&vals[x.0]);
                accum(grads, x.0, kernels::logsumexp_rows_backward(&vals[x.0], &lse, g));
            })),
        )
    }

    /// [R,C] -> [R] row sums.
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let (r, c) = (self.shape(x)[0], self.shape(x)[1]);
        let xv = self.value(x);
        let mut out = Tensor::zeros(&[r]);
        for ri in 0..r {
            out.data[ri] = xv.data[ri * c..(ri + 1) * c].iter().sum();
        }
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                let mut dx = Tensor::zeros(&[r, c]);
                for ri in 0..r {
                    for ci in 0..c {
                        dx.data[ri * c + ci] = g.data[ri];
                    }
                }
                accum(grads, x.0, dx);
            })),
        )
    }

    /// Row-wise dot product of two [R,D] matrices -> [R].
    pub fn dot_rows(&mut self, a: Var, b: Var) -> Var {
        let (r, d) = (self.shape(a)[0], self.shape(a)[1]);
        debug_assert_eq!(self.shape(b), &[r, d]);
        let av = self.value(a);
        let bv = self.value(b);
        let mut out = Tensor::zeros(&[r]);
        for ri in 0..r {
            out.data[ri] = av.data[ri * d..(ri + 1) * d]
                .iter()
                .zip(&bv.data[ri * d..(ri + 1) * d])
                .map(|(x, y)| x * y)
                .sum();
        }
        self.push(
            out,
            Some(Box::new(move |g, vals, grads| {
                let mut da = Tensor::zeros(&[r, d]);
                let mut db = Tensor::zeros(&[r, d]);
                for ri in 0..r {
                    for di in 0..d {
                        da.data[ri * d + di] = g.data[ri] * vals[b.0].data[ri * d + di];
                        db.data[ri * d + di] = g.data[ri] * vals[a.0].data[ri * d + di];
                    }
                }
                accum(grads, a.0, da);
                accum(grads, b.0, db);
            })),
        )
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let n = self.value(x).numel();
        let mean = self.value(x).data.iter().sum::<f32>() / n as f32;
        let in_shape = self.value(x).shape.clone();
        self.push(
            Tensor::scalar(mean),
            Some(Box::new(move |g, _vals, grads| {
                let gv = g.item() / n as f32;
                accum(grads, x.0, Tensor::full(&in_shape, gv));
            })),
        )
    }

    /// Mean softmax cross-entropy against integer labels -> scalar.
    pub fn softmax_xent(&mut self, logits: Var, labels: Vec<usize>) -> Var {
        let loss = kernels::softmax_xent_forward(self.value(logits), &labels);
        self.push(
            Tensor::scalar(loss),
            Some(Box::new(move |g, vals, grads| {
                accum(
                    grads,
                    logits.0,
                    kernels::softmax_xent_backward(&vals[logits.0], &labels, g.item()),
                );
            })),
        )
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Var {
        let xv = self.value(x);
        debug_assert_eq!(xv.numel(), shape.iter().product::<usize>());
        let out = Tensor { shape: shape.clone(), data: xv.data.clone() };
        let in_shape = xv.shape.clone();
        self.push(
            out,
            Some(Box::new(move |g, _vals, grads| {
                accum(grads, x.0, Tensor { shape: in_shape.clone(), data: g.data.clone() });
            })),
        )
    }

    /// Run reverse-mode accumulation from a scalar loss. Consumes the
    /// recorded graph; a second call on return is an error.
    pub fn backward(&mut self, loss: Var) -> Result<Grads, NnError> {
        if self.consumed {
            return Err(NnError::NoGraph("backward already consumed this tape".into()));
        }
        if loss.0 >= self.values.len() {
            return Err(NnError::NoGraph(format!("loss var {} not on tape", loss.0)));
        }
        if self.values[loss.0].numel() != 1 {
            return Err(NnError::ShapeMismatch(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.values[loss.0].shape
            )));
        }
        self.consumed = true;
        let mut backs = std::mem::take(&mut self.backs);
        let mut table: Vec<Option<Tensor>> = vec![None; self.values.len()];
        table[loss.0] = Some(Tensor::scalar(1.0));
        for i in (0..=loss.0).rev() {
            if table[i].is_none() {
                continue;
            }
            if let Some(f) = backs[i].take() {
                let g = table[i].clone().expect("grad present");
                f(&g, &self.values, &mut table);
            }
        }
        Ok(Grads { table })
    }
}
