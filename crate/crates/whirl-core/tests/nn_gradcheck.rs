//! Finite-difference oracle for the analytic gradients.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use whirl_core::nn::{
    cvae_loss_and_grads_with_eps, Activation, CvaeParams, Mlp,
};
use whirl_core::rng::rng_from_seed;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
/// Pre-activations closer to zero than this may cross the relu kink under
/// perturbation; those coordinates are detected and skipped.
const KINK_MARGIN: f64 = 1e-3;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn mlp_has_kink_near(mlp: &Mlp, input: &[f64]) -> bool {
    let cache = mlp.forward_cached(input).unwrap();
    mlp.activation == Activation::Relu
        && cache
            .pre_activations
            .iter()
            .take(mlp.n_layers() - 1)
            .any(|layer| layer.iter().any(|p| p.abs() < KINK_MARGIN))
}

/// Scalar loss g . f(x) with a fixed cotangent g.
fn mlp_loss(mlp: &Mlp, input: &[f64], cotangent: &[f64]) -> f64 {
    mlp.forward(input)
        .unwrap()
        .iter()
        .zip(cotangent)
        .map(|(o, g)| o * g)
        .sum()
}

#[test]
fn mlp_gradients_match_central_differences() {
    for (activation, arch_seed) in [(Activation::Relu, 100u64), (Activation::Tanh, 200u64)] {
        let mut rng = rng_from_seed(arch_seed);
        let sizes = [6usize, 16, 16, 16, 4];
        let mlp = Mlp::new_seeded(&sizes, activation, &mut rng);
        let input: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cotangent: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        if mlp_has_kink_near(&mlp, &input) {
            continue;
        }

        let cache = mlp.forward_cached(&input).unwrap();
        let (grads, input_grad) = mlp.backward(&cache, &cotangent);

        let n = mlp.param_count();
        let mut checked = 0;
        for k in 0..140 {
            let idx = (k * 7919) % n;
            let analytic = Mlp::grad_at(&grads, idx);
            let mut plus = mlp.clone();
            *plus.param_mut(idx) += H;
            let mut minus = mlp.clone();
            *minus.param_mut(idx) -= H;
            if mlp_has_kink_near(&plus, &input) || mlp_has_kink_near(&minus, &input) {
                continue;
            }
            let fd = (mlp_loss(&plus, &input, &cotangent) - mlp_loss(&minus, &input, &cotangent))
                / (2.0 * H);
            if analytic.abs() < 1e-10 && fd.abs() < 1e-10 {
                checked += 1;
                continue;
            }
            assert!(
                rel_err(analytic, fd) < REL_TOL,
                "{activation:?} param {idx}: analytic {analytic} vs fd {fd}"
            );
            checked += 1;
        }
        assert!(checked >= 100, "only {checked} coordinates checked");

        // Input gradient check on a few coordinates.
        for i in 0..input.len() {
            let mut plus = input.clone();
            plus[i] += H;
            let mut minus = input.clone();
            minus[i] -= H;
            let fd =
                (mlp_loss(&mlp, &plus, &cotangent) - mlp_loss(&mlp, &minus, &cotangent)) / (2.0 * H);
            assert!(rel_err(input_grad[i], fd) < REL_TOL);
        }
    }
}

fn cvae_param_count(params: &CvaeParams) -> usize {
    params.encoder.param_count() + params.decoder.param_count()
}

fn cvae_param_mut(params: &mut CvaeParams, idx: usize) -> &mut f64 {
    let enc = params.encoder.param_count();
    if idx < enc {
        params.encoder.param_mut(idx)
    } else {
        params.decoder.param_mut(idx - enc)
    }
}

fn cvae_kinky(params: &CvaeParams, x: &[f64], c: &[f64], eps: &[f64]) -> bool {
    // Reconstruct the encoder/decoder inputs the loss uses and look for
    // near-zero pre-activations in either network.
    let mut enc_in = x.to_vec();
    enc_in.extend_from_slice(c);
    if mlp_has_kink_near(&params.encoder, &enc_in) {
        return true;
    }
    let enc_out = params.encoder.forward(&enc_in).unwrap();
    let (mu, logvar) = enc_out.split_at(params.latent_dim);
    let mut dec_in: Vec<f64> = mu
        .iter()
        .zip(logvar)
        .zip(eps)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect();
    dec_in.extend_from_slice(c);
    mlp_has_kink_near(&params.decoder, &dec_in)
}

#[test]
fn cvae_gradients_match_central_differences() {
    let mut rng = rng_from_seed(300);
    let params = CvaeParams::new_seeded(5, 3, 2, &[12, 12], 5e-4, Activation::Relu, &mut rng);
    let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eps: Vec<f64> = (0..2).map(|_| StandardNormal.sample(&mut rng)).collect();
    assert!(!cvae_kinky(&params, &x, &c, &eps), "unlucky seed: kink at base point");

    let (_, grads) = cvae_loss_and_grads_with_eps(&params, &x, &c, &eps).unwrap();
    let grad_at = |idx: usize| {
        let enc = params.encoder.param_count();
        if idx < enc {
            Mlp::grad_at(&grads.encoder, idx)
        } else {
            Mlp::grad_at(&grads.decoder, idx - enc)
        }
    };

    let n = cvae_param_count(&params);
    let mut checked = 0;
    for k in 0..160 {
        let idx = (k * 6271) % n;
        let analytic = grad_at(idx);
        let mut plus = params.clone();
        *cvae_param_mut(&mut plus, idx) += H;
        let mut minus = params.clone();
        *cvae_param_mut(&mut minus, idx) -= H;
        if cvae_kinky(&plus, &x, &c, &eps) || cvae_kinky(&minus, &x, &c, &eps) {
            continue;
        }
        let (lp, _) = cvae_loss_and_grads_with_eps(&plus, &x, &c, &eps).unwrap();
        let (lm, _) = cvae_loss_and_grads_with_eps(&minus, &x, &c, &eps).unwrap();
        let fd = (lp.total - lm.total) / (2.0 * H);
        if analytic.abs() < 1e-10 && fd.abs() < 1e-10 {
            checked += 1;
            continue;
        }
        assert!(
            rel_err(analytic, fd) < REL_TOL,
            "cvae param {idx}: analytic {analytic} vs fd {fd}"
        );
        checked += 1;
    }
    assert!(checked >= 100, "only {checked} coordinates checked");
}
