//! Flat binary checkpoints for network parameters.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic "WHRL" | version u32 | latent_dim u32 | beta f64 | encoder | decoder
//! ```
//!
//! and each network block is
//!
//! ```text
//! activation u8 | n_sizes u32 | sizes u32... | weights f64... | biases f64...
//! ```
//!
//! with weight blocks row-major in layer order.

use crate::nn::cvae::CvaeParams;
use crate::nn::mlp::{Activation, Mlp};
use crate::nn::NnError;

const MAGIC: &[u8; 4] = b"WHRL";
const VERSION: u32 = 1;

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.pos + n > self.data.len() {
            return Err(NnError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, NnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

fn encode_mlp(out: &mut Vec<u8>, mlp: &Mlp) {
    out.push(match mlp.activation {
        Activation::Relu => 0,
        Activation::Tanh => 1,
    });
    push_u32(out, mlp.layer_sizes.len() as u32);
    for s in &mlp.layer_sizes {
        push_u32(out, *s as u32);
    }
    for w in &mlp.weights {
        for v in w {
            push_f64(out, *v);
        }
    }
    for b in &mlp.biases {
        for v in b {
            push_f64(out, *v);
        }
    }
}

fn decode_mlp(r: &mut Reader) -> Result<Mlp, NnError> {
    let activation = match r.u8()? {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        other => return Err(NnError::Checkpoint(format!("unknown activation tag {other}"))),
    };
    let n_sizes = r.u32()? as usize;
    if n_sizes < 2 || n_sizes > 64 {
        return Err(NnError::Checkpoint(format!("implausible layer count {n_sizes}")));
    }
    let mut layer_sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        layer_sizes.push(r.u32()? as usize);
    }
    let mut weights = Vec::with_capacity(n_sizes - 1);
    for l in 0..n_sizes - 1 {
        let n = layer_sizes[l] * layer_sizes[l + 1];
        let mut w = Vec::with_capacity(n);
        for _ in 0..n {
            w.push(r.f64()?);
        }
        weights.push(w);
    }
    let mut biases = Vec::with_capacity(n_sizes - 1);
    for l in 0..n_sizes - 1 {
        let mut b = Vec::with_capacity(layer_sizes[l + 1]);
        for _ in 0..layer_sizes[l + 1] {
            b.push(r.f64()?);
        }
        biases.push(b);
    }
    Ok(Mlp { layer_sizes, weights, biases, activation })
}

pub fn encode_cvae(params: &CvaeParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, VERSION);
    push_u32(&mut out, params.latent_dim as u32);
    push_f64(&mut out, params.beta);
    encode_mlp(&mut out, &params.encoder);
    encode_mlp(&mut out, &params.decoder);
    out
}

pub fn decode_cvae(data: &[u8]) -> Result<CvaeParams, NnError> {
    let mut r = Reader { data, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let latent_dim = r.u32()? as usize;
    let beta = r.f64()?;
    let encoder = decode_mlp(&mut r)?;
    let decoder = decode_mlp(&mut r)?;
    let params = CvaeParams { encoder, decoder, latent_dim, beta };
    params.validate()?;
    Ok(params)
}
