//! Self-supervised objectives behind a common trait, selected by name.

use crate::nn::model::{
    encoder_forward, init_encoder, init_predictor, init_projector, predictor_forward,
    projector_forward, encode_raw, project_raw,
};
use crate::nn::tensor::Tensor;
use crate::nn::{ema_update, AdamW, EncoderConfig, ParamSet, ParamVars, Tape};

use super::loss::{byol_tt_loss, simclr_tt_loss};
use super::pairs::PairBatch;
use super::{SslConfig, SslError};

/// Online (and optionally target) parameters of a method in training.
pub struct MethodState {
    pub enc_cfg: EncoderConfig,
    pub online: ParamSet,
    pub target: Option<ParamSet>,
}

pub trait SslMethod {
    fn name(&self) -> &'static str;
    fn init(&self, enc_cfg: &EncoderConfig, seed: u64) -> MethodState;
    /// One optimizer step; returns the batch loss.
    fn step(
        &self,
        state: &mut MethodState,
        batch: &PairBatch,
        cfg: &SslConfig,
        opt: &mut AdamW,
    ) -> Result<f32, SslError>;
}

pub fn method_names() -> Vec<&'static str> {
    vec!["simclr-tt", "byol-tt"]
}

pub fn method_by_name(name: &str) -> Option<Box<dyn SslMethod>> {
    match name {
        "simclr-tt" => Some(Box::new(SimclrTt)),
        "byol-tt" => Some(Box::new(ByolTt)),
        _ => None,
    }
}

fn concat_batch(a: &Tensor, b: &Tensor) -> Tensor {
    debug_assert_eq!(a.shape[1..], b.shape[1..]);
    let mut shape = a.shape.clone();
    shape[0] += b.shape[0];
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor { shape, data }
}

fn collect_grads(
    state: &ParamSet,
    vars: &ParamVars,
    grads: &crate::nn::Grads,
) -> Vec<Tensor> {
    state.iter().map(|(n, t)| grads.get(vars.var(n), &t.shape)).collect()
}

/// Contrastive method: both pair elements pass through the same online
/// encoder and projector; all other batch embeddings act as negatives.
pub struct SimclrTt;

impl SslMethod for SimclrTt {
    fn name(&self) -> &'static str {
        "simclr-tt"
    }

    fn init(&self, enc_cfg: &EncoderConfig, seed: u64) -> MethodState {
        let mut online = init_encoder(enc_cfg, seed);
        online.extend(init_projector(enc_cfg, seed ^ 0x11));
        MethodState { enc_cfg: *enc_cfg, online, target: None }
    }

    fn step(
        &self,
        state: &mut MethodState,
        batch: &PairBatch,
        cfg: &SslConfig,
        opt: &mut AdamW,
    ) -> Result<f32, SslError> {
        let mut tape = Tape::new();
        let vars = ParamVars::bind(&mut tape, &state.online);
        let x = tape.leaf(concat_batch(&batch.anchors, &batch.positives));
        let feat = encoder_forward(&mut tape, &vars, &state.enc_cfg, x)?;
        let z = projector_forward(&mut tape, &vars, feat);
        let zn = tape.l2_normalize_rows(z)?;
        let loss = simclr_tt_loss(&mut tape, zn, cfg.temperature)?;
        let value = tape.value(loss).item();
        let grads = tape.backward(loss)?;
        let gvec = collect_grads(&state.online, &vars, &grads);
        opt.step(&mut state.online, &gvec)?;
        Ok(value)
    }
}

/// Regression method: online encoder + projector + predictor against an EMA
/// target encoder + projector evaluated without gradients.
pub struct ByolTt;

impl SslMethod for ByolTt {
    fn name(&self) -> &'static str {
        "byol-tt"
    }

    fn init(&self, enc_cfg: &EncoderConfig, seed: u64) -> MethodState {
        let mut online = init_encoder(enc_cfg, seed);
        online.extend(init_projector(enc_cfg, seed ^ 0x11));
        online.extend(init_predictor(enc_cfg, seed ^ 0x22));
        // target starts as a copy of the online encoder + projector
        let mut target = online.subset("enc.");
        target.extend(online.subset("proj."));
        MethodState { enc_cfg: *enc_cfg, online, target: Some(target) }
    }

    fn step(
        &self,
        state: &mut MethodState,
        batch: &PairBatch,
        cfg: &SslConfig,
        opt: &mut AdamW,
    ) -> Result<f32, SslError> {
        let target = state.target.as_ref().expect("byol state carries a target network");
        // stop-gradient branch: plain forward through the target network
        let t_pos = project_raw(target, &encode_raw(target, &state.enc_cfg, &batch.positives)?)?;

        let mut tape = Tape::new();
        let vars = ParamVars::bind(&mut tape, &state.online);
        let xa = tape.leaf(batch.anchors.clone());
        let fa = encoder_forward(&mut tape, &vars, &state.enc_cfg, xa)?;
        let za = projector_forward(&mut tape, &vars, fa);
        let qa = predictor_forward(&mut tape, &vars, za);
        let loss_fwd = byol_tt_loss(&mut tape, qa, &t_pos)?;

        let loss = if cfg.byol_symmetrize {
            let t_anchor = project_raw(target, &encode_raw(target, &state.enc_cfg, &batch.anchors)?)?;
            let xp = tape.leaf(batch.positives.clone());
            let fp = encoder_forward(&mut tape, &vars, &state.enc_cfg, xp)?;
            let zp = projector_forward(&mut tape, &vars, fp);
            let qp = predictor_forward(&mut tape, &vars, zp);
            let loss_rev = byol_tt_loss(&mut tape, qp, &t_anchor)?;
            let sum = tape.add(loss_fwd, loss_rev);
            tape.scale(sum, 0.5)
        } else {
            loss_fwd
        };

        let value = tape.value(loss).item();
        let grads = tape.backward(loss)?;
        let gvec = collect_grads(&state.online, &vars, &grads);
        opt.step(&mut state.online, &gvec)?;
        let target = state.target.as_mut().expect("byol target");
        ema_update(&state.online, target, cfg.ema_momentum)?;
        Ok(value)
    }
}
