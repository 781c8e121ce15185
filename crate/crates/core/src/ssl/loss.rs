//! The two time-based self-supervised objectives.
//!
//! The contrastive loss pairs embedding row `i` with row `i + B` (and vice
//! versa) in a combined batch of 2B rows. For each anchor `t` the denominator
//! runs over every other embedding in the batch, the positive included; only
//! the anchor itself is excluded. The regression loss scores an online
//! prediction against a constant (stop-gradient) target embedding per row:
//! `2 - 2 * cos`.

use crate::nn::tensor::Tensor;
use crate::nn::{Tape, Var};

use super::SslError;

/// Maximum deviation of an embedding row norm from 1 before the contrastive
/// loss rejects its input.
pub const NORM_TOLERANCE: f32 = 1e-4;

/// Contrastive time-pair loss over a combined batch of 2B L2-normalized
/// embedding rows (anchor `i` pairs with `i + B`). Symmetric: every row
/// serves as an anchor once. Returns the scalar loss variable.
pub fn simclr_tt_loss(tape: &mut Tape, z: Var, temperature: f32) -> Result<Var, SslError> {
    if temperature <= 0.0 {
        return Err(SslError::BadConfig(format!("temperature must be positive, got {temperature}")));
    }
    let shape = tape.shape(z).to_vec();
    if shape.len() != 2 {
        return Err(SslError::BadConfig(format!("embeddings must be [rows, dim], got {shape:?}")));
    }
    let rows = shape[0];
    let dim = shape[1];
    if rows < 4 || rows % 2 != 0 {
        return Err(SslError::BadConfig(format!(
            "contrastive batch needs an even row count >= 4, got {rows}"
        )));
    }
    // normalization precondition
    let zv = tape.value(z);
    for r in 0..rows {
        let norm = zv.data[r * dim..(r + 1) * dim].iter().map(|v| v * v).sum::<f32>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(SslError::Unnormalized { row: r, norm });
        }
    }

    let b = rows / 2;
    let sim = tape.matmul_nt(z, z);
    let logits = tape.scale(sim, 1.0 / temperature);
    // exclude the anchor itself from the denominator
    let mut diag = Tensor::zeros(&[rows, rows]);
    for i in 0..rows {
        diag.data[i * rows + i] = -1.0e9;
    }
    let masked = tape.add_const(logits, &diag);
    let lse = tape.logsumexp_rows(masked);
    // select each anchor's positive logit
    let mut pos_mask = Tensor::zeros(&[rows, rows]);
    for i in 0..rows {
        let partner = if i < b { i + b } else { i - b };
        pos_mask.data[i * rows + partner] = 1.0;
    }
    let pos_logits = tape.mul_const(logits, &pos_mask);
    let pos = tape.sum_rows(pos_logits);
    let per_anchor = tape.sub(lse, pos);
    Ok(tape.mean_all(per_anchor))
}

/// Regression loss `mean(2 - 2 cos(q_i, target_i))`; the target batch is a
/// constant (no gradient flows into it).
pub fn byol_tt_loss(tape: &mut Tape, q: Var, z_target: &Tensor) -> Result<Var, SslError> {
    let qshape = tape.shape(q).to_vec();
    if qshape != z_target.shape {
        return Err(SslError::BadConfig(format!(
            "prediction shape {qshape:?} does not match target shape {:?}",
            z_target.shape
        )));
    }
    let tn = crate::nn::kernels::l2_normalize_rows_forward(z_target)?;
    let qn = tape.l2_normalize_rows(q)?;
    let t_const = tape.leaf(tn);
    let cos = tape.dot_rows(qn, t_const);
    let mean_cos = tape.mean_all(cos);
    let neg2 = tape.scale(mean_cos, -2.0);
    Ok(tape.add_scalar(neg2, 2.0))
}
