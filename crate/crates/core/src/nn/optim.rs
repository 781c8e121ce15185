//! AdamW with decoupled weight decay, plus the EMA update for target networks.

use super::model::ParamSet;
use super::tensor::Tensor;
use super::NnError;

#[derive(Debug, Clone)]
pub struct AdamW {
    pub lr: f32,
    pub weight_decay: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    step: u64,
    /// (first moment, second moment) per parameter, keyed by position.
    moments: Vec<(Tensor, Tensor)>,
}

impl AdamW {
    pub fn new(lr: f32, weight_decay: f32) -> Self {
        Self { lr, weight_decay, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, moments: Vec::new() }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. `grads` must align with `params` iteration order.
    /// Weight decay is applied to the parameter directly, independent of the
    /// adaptive step. NaN or non-finite gradients abort with the offending
    /// parameter name.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Tensor]) -> Result<(), NnError> {
        if grads.len() != params.len() {
            return Err(NnError::ShapeMismatch(format!(
                "optimizer got {} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        if self.moments.is_empty() {
            self.moments =
                grads.iter().map(|g| (Tensor::zeros(&g.shape), Tensor::zeros(&g.shape))).collect();
        }
        for ((name, _), g) in params.iter().zip(grads) {
            if !g.is_finite() {
                return Err(NnError::NonFiniteGradient { param: name.to_string() });
            }
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (pi, (_, p)) in params.iter_mut().enumerate() {
            let g = &grads[pi];
            let (m, v) = &mut self.moments[pi];
            let decay = 1.0 - self.lr * self.weight_decay;
            for i in 0..p.data.len() {
                p.data[i] *= decay;
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * g.data[i];
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * g.data[i] * g.data[i];
                let m_hat = m.data[i] / bc1;
                let v_hat = v.data[i] / bc2;
                p.data[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// xi' = m * xi + (1 - m) * theta, matched by parameter name. Every target
/// parameter must exist in the online set with the same shape.
pub fn ema_update(online: &ParamSet, target: &mut ParamSet, momentum: f32) -> Result<(), NnError> {
    if !(0.0..=1.0).contains(&momentum) {
        return Err(NnError::ShapeMismatch(format!("ema momentum must be in [0,1], got {momentum}")));
    }
    for (name, xi) in target.iter_mut() {
        let theta = online
            .get(name)
            .ok_or_else(|| NnError::MissingParam(format!("ema source missing {name}")))?;
        if theta.shape != xi.shape {
            return Err(NnError::ShapeMismatch(format!(
                "ema shape mismatch for {name}: {:?} vs {:?}",
                theta.shape, xi.shape
            )));
        }
        for (x, t) in xi.data.iter_mut().zip(&theta.data) {
            *x = momentum * *x + (1.0 - momentum) * t;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_param(v: f32) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::full(&[2], v));
        p
    }

    #[test]
    fn zero_grad_with_decay_shrinks_exactly() {
        let mut params = single_param(2.0);
        let mut opt = AdamW::new(0.1, 0.1);
        opt.step(&mut params, &[Tensor::zeros(&[2])]).unwrap();
        for v in &params.get("w").unwrap().data {
            assert_eq!(*v, 2.0 * (1.0 - 0.01));
        }
    }

    #[test]
    fn zero_grad_without_decay_is_identity() {
        let mut params = single_param(1.5);
        let mut opt = AdamW::new(0.1, 0.0);
        opt.step(&mut params, &[Tensor::zeros(&[2])]).unwrap();
        for v in &params.get("w").unwrap().data {
            assert_eq!(*v, 1.5);
        }
    }

    #[test]
    fn constant_gradient_update_magnitude_approaches_lr() {
        let mut params = single_param(0.0);
        let mut opt = AdamW::new(0.01, 0.0);
        let g = Tensor::full(&[2], 0.37);
        let mut prev = params.get("w").unwrap().data[0];
        let mut last_delta = 0.0f32;
        for _ in 0..500 {
            opt.step(&mut params, &[g.clone()]).unwrap();
            let cur = params.get("w").unwrap().data[0];
            last_delta = (cur - prev).abs();
            prev = cur;
        }
        assert!((last_delta - 0.01).abs() < 1e-4, "delta {last_delta}");
    }

    #[test]
    fn nan_gradient_is_a_hard_failure() {
        let mut params = single_param(1.0);
        let mut opt = AdamW::new(0.01, 0.0);
        let g = Tensor::full(&[2], f32::NAN);
        let err = opt.step(&mut params, &[g]).unwrap_err();
        assert!(matches!(err, NnError::NonFiniteGradient { .. }));
    }

    #[test]
    fn ema_endpoints_and_midpoint() {
        let mut theta = ParamSet::new();
        theta.insert("w", Tensor::full(&[3], 2.0));
        let mut xi = ParamSet::new();
        xi.insert("w", Tensor::zeros(&[3]));

        let mut t = xi.clone();
        ema_update(&theta, &mut t, 0.0).unwrap();
        assert_eq!(t.get("w").unwrap().data, vec![2.0; 3]);

        let mut t = xi.clone();
        ema_update(&theta, &mut t, 1.0).unwrap();
        assert_eq!(t.get("w").unwrap().data, vec![0.0; 3]);

        ema_update(&theta, &mut xi, 0.5).unwrap();
        assert_eq!(xi.get("w").unwrap().data, vec![1.0; 3]);
    }
}
