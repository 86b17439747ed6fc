//! Conditional VAE with reparameterized gradients, used by both the task
//! and the exploration policy.

use crate::nn::adam::{AdamConfig, AdamState};
use crate::nn::mlp::{Activation, Mlp, MlpGrads};
use crate::nn::NnError;
use crate::rng::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Encoder maps (x ++ c) to (mu, log sigma^2); decoder maps (z ++ c) back to
/// x. `beta` weighs the KL term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvaeParams {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub latent_dim: usize,
    pub beta: f64,
}

#[derive(Debug, Clone)]
pub struct CvaeGrads {
    pub encoder: MlpGrads,
    pub decoder: MlpGrads,
}

/// Loss pieces for one example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvaeLoss {
    pub total: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

impl CvaeParams {
    /// Build encoder and decoder around the given hidden widths.
    pub fn new_seeded(
        x_dim: usize,
        c_dim: usize,
        latent_dim: usize,
        hidden: &[usize],
        beta: f64,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> CvaeParams {
        let mut enc_sizes = vec![x_dim + c_dim];
        enc_sizes.extend_from_slice(hidden);
        enc_sizes.push(2 * latent_dim);
        let mut dec_sizes = vec![latent_dim + c_dim];
        dec_sizes.extend_from_slice(hidden);
        dec_sizes.push(x_dim);
        CvaeParams {
            encoder: Mlp::new_seeded(&enc_sizes, activation, rng),
            decoder: Mlp::new_seeded(&dec_sizes, activation, rng),
            latent_dim,
            beta,
        }
    }

    pub fn x_dim(&self) -> usize {
        self.decoder.output_dim()
    }

    pub fn c_dim(&self) -> usize {
        self.encoder.input_dim() - self.x_dim()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        self.encoder.check_shapes()?;
        self.decoder.check_shapes()?;
        if self.encoder.output_dim() != 2 * self.latent_dim {
            return Err(NnError::ShapeMismatch {
                what: "encoder output vs latent dimension".into(),
                expected: 2 * self.latent_dim,
                got: self.encoder.output_dim(),
            });
        }
        if self.decoder.input_dim() != self.latent_dim + self.c_dim() {
            return Err(NnError::ShapeMismatch {
                what: "decoder input vs latent + conditioning".into(),
                expected: self.latent_dim + self.c_dim(),
                got: self.decoder.input_dim(),
            });
        }
        Ok(())
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Loss and exact gradients for a fixed reparameterization draw `eps`.
/// Split out from the rng-driven entry point so finite-difference checks can
/// hold the noise constant.
pub fn cvae_loss_and_grads_with_eps(
    params: &CvaeParams,
    x: &[f64],
    c: &[f64],
    eps: &[f64],
) -> Result<(CvaeLoss, CvaeGrads), NnError> {
    let d_z = params.latent_dim;
    if x.len() != params.x_dim() {
        return Err(NnError::ShapeMismatch {
            what: "cvae input x".into(),
            expected: params.x_dim(),
            got: x.len(),
        });
    }
    if eps.len() != d_z {
        return Err(NnError::ShapeMismatch {
            what: "reparameterization noise".into(),
            expected: d_z,
            got: eps.len(),
        });
    }

    let enc_cache = params.encoder.forward_cached(&concat(x, c))?;
    let enc_out = enc_cache.output();
    let (mu, logvar) = enc_out.split_at(d_z);
    let std: Vec<f64> = logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
    let z: Vec<f64> = mu
        .iter()
        .zip(&std)
        .zip(eps)
        .map(|((m, s), e)| m + s * e)
        .collect();

    let dec_cache = params.decoder.forward_cached(&concat(&z, c))?;
    let x_hat = dec_cache.output();

    let reconstruction: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    let kl: f64 = mu
        .iter()
        .zip(logvar)
        .map(|(m, lv)| 0.5 * (lv.exp() + m * m - 1.0 - lv))
        .sum();
    let loss = CvaeLoss { total: reconstruction + params.beta * kl, reconstruction, kl };

    // Reconstruction gradient through the decoder.
    let out_grad: Vec<f64> = x_hat.iter().zip(x).map(|(b, a)| 2.0 * (b - a)).collect();
    let (dec_grads, dec_input_grad) = params.decoder.backward(&dec_cache, &out_grad);
    let grad_z = &dec_input_grad[..d_z];

    // Reparameterization plus KL gradients into the encoder outputs.
    let mut enc_out_grad = vec![0.0; 2 * d_z];
    for i in 0..d_z {
        enc_out_grad[i] = grad_z[i] + params.beta * mu[i];
        enc_out_grad[d_z + i] =
            grad_z[i] * 0.5 * std[i] * eps[i] + params.beta * 0.5 * (logvar[i].exp() - 1.0);
    }
    let (enc_grads, _) = params.encoder.backward(&enc_cache, &enc_out_grad);

    Ok((loss, CvaeGrads { encoder: enc_grads, decoder: dec_grads }))
}

/// Loss and gradients with the reparameterization noise drawn from `rng`.
pub fn cvae_loss_and_grads(
    params: &CvaeParams,
    x: &[f64],
    c: &[f64],
    rng: &mut impl Rng,
) -> Result<(CvaeLoss, CvaeGrads), NnError> {
    let eps: Vec<f64> = (0..params.latent_dim).map(|_| StandardNormal.sample(rng)).collect();
    cvae_loss_and_grads_with_eps(params, x, c, &eps)
}

/// Decode a fresh latent draw conditioned on `c`.
pub fn cvae_sample(params: &CvaeParams, c: &[f64], rng: &mut impl Rng) -> Result<Vec<f64>, NnError> {
    let z: Vec<f64> = (0..params.latent_dim).map(|_| StandardNormal.sample(rng)).collect();
    params.decoder.forward(&concat(&z, c))
}

/// Dataset mean loss under a frozen noise stream, used to compare parameter
/// snapshots during fitting.
pub fn cvae_eval_loss(params: &CvaeParams, dataset: &[(Vec<f64>, Vec<f64>)]) -> Result<f64, NnError> {
    let mut rng = rng_from_seed(0x5eed_e7a1);
    let mut total = 0.0;
    for (x, c) in dataset {
        let eps: Vec<f64> = (0..params.latent_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let (loss, _) = cvae_loss_and_grads_with_eps(params, x, c, &eps)?;
        total += loss.total;
    }
    Ok(total / dataset.len() as f64)
}

/// Before/after losses reported by a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub loss_before: f64,
    pub loss_after: f64,
    pub epochs: usize,
}

/// Adam-fit the CVAE to (x, c) pairs. Batches walk the dataset in order;
/// the returned parameters are the best snapshot by frozen-noise evaluation
/// loss, so the post-fit loss never exceeds the pre-fit loss.
pub fn cvae_fit(
    params: &mut CvaeParams,
    dataset: &[(Vec<f64>, Vec<f64>)],
    epochs: usize,
    batch: usize,
    adam_cfg: AdamConfig,
    rng: &mut impl Rng,
) -> Result<FitReport, NnError> {
    if dataset.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let batch = batch.max(1).min(dataset.len());
    let loss_before = cvae_eval_loss(params, dataset)?;
    if epochs == 0 {
        return Ok(FitReport { loss_before, loss_after: loss_before, epochs: 0 });
    }

    let mut enc_adam = AdamState::new(&params.encoder, adam_cfg);
    let mut dec_adam = AdamState::new(&params.decoder, adam_cfg);
    let mut best = params.clone();
    let mut best_loss = loss_before;

    for _ in 0..epochs {
        for chunk in dataset.chunks(batch) {
            let mut enc_acc = MlpGrads::zeros_like(&params.encoder);
            let mut dec_acc = MlpGrads::zeros_like(&params.decoder);
            for (x, c) in chunk {
                let (_, grads) = cvae_loss_and_grads(params, x, c, rng)?;
                enc_acc.add_scaled(&grads.encoder, 1.0 / chunk.len() as f64);
                dec_acc.add_scaled(&grads.decoder, 1.0 / chunk.len() as f64);
            }
            enc_adam.apply(&mut params.encoder, &enc_acc);
            dec_adam.apply(&mut params.decoder, &dec_acc);
        }
        let loss = cvae_eval_loss(params, dataset)?;
        if loss < best_loss {
            best_loss = loss;
            best = params.clone();
        }
    }

    *params = best;
    Ok(FitReport { loss_before, loss_after: best_loss, epochs })
}
