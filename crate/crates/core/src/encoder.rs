//! Compact per-frame encoder with a hand-written reverse pass.
//!
//! For frame `t` of a clip:
//!
//! ```text
//! h_t = tanh(W1 x_t + b1)
//! g_t = h_t + s · PE(t)                        sinusoidal, scale s
//! m_t = (1 - w) g_t + (w / 2)(g_{t-1} + g_{t+1})   edges replicated
//! y_t = W2 m_t + b2
//! z_t = y_t / ||y_t||
//! ```
//!
//! `w` (temporal mixing) and `s` (positional scale) are architecture settings;
//! the trainable parameters are `W1, b1, W2, b2`, stored flat in that order.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm, Matrix};
use crate::num;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderDims {
    pub d_in: usize,
    pub d_h: usize,
    pub d_z: usize,
}

impl EncoderDims {
    pub fn param_count(&self) -> usize {
        self.d_h * self.d_in + self.d_h + self.d_z * self.d_h + self.d_z
    }

    fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.d_h == 0 || self.d_z == 0 {
            return Err(invalid("encoder dimensions must be positive"));
        }
        Ok(())
    }
}

/// Non-trainable architecture settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    pub dims: EncoderDims,
    /// Temporal mixing weight in `[0, 1]`.
    pub mix_weight: f64,
    /// Scale of the additive positional encoding.
    pub pos_scale: f64,
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(invalid("mix weight must lie in [0, 1]"));
        }
        if !self.pos_scale.is_finite() {
            return Err(invalid("positional scale must be finite"));
        }
        Ok(())
    }
}

/// Encoder architecture plus its flat trainable parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams {
    config: EncoderConfig,
    values: Vec<f64>,
}

impl EncoderParams {
    pub fn from_values(config: EncoderConfig, values: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if values.len() != config.dims.param_count() {
            return Err(Error::DimensionMismatch {
                expected: config.dims.param_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder parameter".into()));
        }
        Ok(Self { config, values })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn dims(&self) -> EncoderDims {
        self.config.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn offsets(&self) -> [usize; 4] {
        let d = self.config.dims;
        let w1 = 0;
        let b1 = w1 + d.d_h * d.d_in;
        let w2 = b1 + d.d_h;
        let b2 = w2 + d.d_z * d.d_h;
        [w1, b1, w2, b2]
    }

    pub fn w1(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[0]..o[1]]
    }

    pub fn b1(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[1]..o[2]]
    }

    pub fn w2(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[2]..o[3]]
    }

    pub fn b2(&self) -> &[f64] {
        let o = self.offsets();
        &self.values[o[3]..]
    }
}

/// Deterministic initialization: weights `N(0, 1) / sqrt(fan_in)`, biases zero.
pub fn init_params(seed: u64, config: EncoderConfig) -> Result<EncoderParams> {
    config.validate()?;
    let d = config.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(d.param_count());
    let s1 = 1.0 / num::sqrt(d.d_in as f64);
    for _ in 0..d.d_h * d.d_in {
        let v: f64 = StandardNormal.sample(&mut rng);
        values.push(v * s1);
    }
    values.extend(core::iter::repeat_n(0.0, d.d_h));
    let s2 = 1.0 / num::sqrt(d.d_h as f64);
    for _ in 0..d.d_z * d.d_h {
        let v: f64 = StandardNormal.sample(&mut rng);
        values.push(v * s2);
    }
    values.extend(core::iter::repeat_n(0.0, d.d_z));
    EncoderParams::from_values(config, values)
}

/// Standard sinusoidal positional encoding of length `dim` at position `t`.
pub fn positional_encoding(t: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let freq = 1.0 / num::pow(10_000.0, (2 * (k / 2)) as f64 / dim as f64);
            let a = t as f64 * freq;
            if k % 2 == 0 {
                num::sin(a)
            } else {
                num::cos(a)
            }
        })
        .collect()
}

/// Forward activations kept for the reverse pass.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub embeddings: Matrix,
    hidden: Matrix,
    mixed: Matrix,
    norms: Vec<f64>,
}

fn neighbors(t: usize, len: usize) -> (usize, usize) {
    let prev = t.saturating_sub(1);
    let next = if t + 1 < len { t + 1 } else { t };
    (prev, next)
}

/// Forward pass keeping activations.
pub fn encode_with_cache(features: &Matrix, params: &EncoderParams) -> Result<Encoded> {
    let d = params.dims();
    if features.cols() != d.d_in {
        return Err(Error::DimensionMismatch {
            expected: d.d_in,
            got: features.cols(),
        });
    }
    if features.rows() == 0 {
        return Err(invalid("clip has no frames"));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("encoder input".into()));
    }
    let t_len = features.rows();
    let (w1, b1, w2, b2) = (params.w1(), params.b1(), params.w2(), params.b2());

    let mut hidden = Matrix::zeros(t_len, d.d_h);
    let mut pre_mix = Matrix::zeros(t_len, d.d_h);
    for t in 0..t_len {
        let x = features.row(t);
        let pe = positional_encoding(t, d.d_h);
        for r in 0..d.d_h {
            let row = &w1[r * d.d_in..(r + 1) * d.d_in];
            let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b1[r];
            let h = num::tanh(a);
            hidden[(t, r)] = h;
            pre_mix[(t, r)] = h + params.config.pos_scale * pe[r];
        }
    }

    let w = params.config.mix_weight;
    let mixed = if w == 0.0 {
        pre_mix
    } else {
        let mut m = Matrix::zeros(t_len, d.d_h);
        for t in 0..t_len {
            let (p, n) = neighbors(t, t_len);
            for r in 0..d.d_h {
                m[(t, r)] = (1.0 - w) * pre_mix[(t, r)] + 0.5 * w * (pre_mix[(p, r)] + pre_mix[(n, r)]);
            }
        }
        m
    };

    let mut z = Matrix::zeros(t_len, d.d_z);
    let mut norms = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let m = mixed.row(t);
        let out = z.row_mut(t);
        for (o, zo) in out.iter_mut().enumerate() {
            let row = &w2[o * d.d_h..(o + 1) * d.d_h];
            *zo = row.iter().zip(m).map(|(w, v)| w * v).sum::<f64>() + b2[o];
        }
        let n = norm(out);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NonFinite("encoder output norm".into()));
        }
        for v in out.iter_mut() {
            *v /= n;
        }
        norms.push(n);
    }
    Ok(Encoded {
        embeddings: z,
        hidden,
        mixed,
        norms,
    })
}

/// Embeds every frame of a clip; rows of the result have unit norm.
pub fn encode(features: &Matrix, params: &EncoderParams) -> Result<Matrix> {
    Ok(encode_with_cache(features, params)?.embeddings)
}

impl Encoded {
    /// Gradient of `<upstream, z>` with respect to the flat parameter vector.
    pub fn backward(&self, features: &Matrix, params: &EncoderParams, upstream: &Matrix) -> Result<Vec<f64>> {
        let d = params.dims();
        if upstream.shape() != self.embeddings.shape() {
            return Err(invalid("upstream gradient shape differs from the embeddings"));
        }
        if features.shape() != (self.embeddings.rows(), d.d_in) {
            return Err(invalid("features do not match the cached forward pass"));
        }
        let t_len = self.embeddings.rows();
        let offs = params.offsets();
        let mut grad = vec![0.0; d.param_count()];
        let w2 = params.w2();

        // through normalization and the output layer
        let mut d_mixed = Matrix::zeros(t_len, d.d_h);
        let mut dy = vec![0.0; d.d_z];
        for t in 0..t_len {
            let z = self.embeddings.row(t);
            let gz = upstream.row(t);
            let proj: f64 = z.iter().zip(gz).map(|(a, b)| a * b).sum();
            for o in 0..d.d_z {
                dy[o] = (gz[o] - z[o] * proj) / self.norms[t];
            }
            let m = self.mixed.row(t);
            for o in 0..d.d_z {
                if dy[o] == 0.0 {
                    continue;
                }
                let gw = &mut grad[offs[2] + o * d.d_h..offs[2] + (o + 1) * d.d_h];
                for (g, &mv) in gw.iter_mut().zip(m) {
                    *g += dy[o] * mv;
                }
                grad[offs[3] + o] += dy[o];
            }
            let dm = d_mixed.row_mut(t);
            for o in 0..d.d_z {
                let row = &w2[o * d.d_h..(o + 1) * d.d_h];
                for (acc, &wv) in dm.iter_mut().zip(row) {
                    *acc += dy[o] * wv;
                }
            }
        }

        // transpose of the mixing operator
        let w = params.config.mix_weight;
        let d_pre = if w == 0.0 {
            d_mixed
        } else {
            let mut g = Matrix::zeros(t_len, d.d_h);
            for t in 0..t_len {
                let (p, n) = neighbors(t, t_len);
                for r in 0..d.d_h {
                    let v = d_mixed[(t, r)];
                    g[(t, r)] += (1.0 - w) * v;
                    g[(p, r)] += 0.5 * w * v;
                    g[(n, r)] += 0.5 * w * v;
                }
            }
            g
        };

        // through tanh and the input layer; the positional term is constant
        for t in 0..t_len {
            let x = features.row(t);
            for r in 0..d.d_h {
                let h = self.hidden[(t, r)];
                let da = d_pre[(t, r)] * (1.0 - h * h);
                if da == 0.0 {
                    continue;
                }
                let gw = &mut grad[offs[0] + r * d.d_in..offs[0] + (r + 1) * d.d_in];
                for (g, &xv) in gw.iter_mut().zip(x) {
                    *g += da * xv;
                }
                grad[offs[1] + r] += da;
            }
        }
        Ok(grad)
    }
}

/// Reverse pass from scratch: gradient of `<upstream, encode(features)>`
/// with respect to every trainable parameter.
pub fn encode_backward(features: &Matrix, params: &EncoderParams, upstream: &Matrix) -> Result<Vec<f64>> {
    encode_with_cache(features, params)?.backward(features, params, upstream)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(mix: f64, pos: f64) -> EncoderConfig {
        EncoderConfig {
            dims: EncoderDims { d_in: 5, d_h: 7, d_z: 4 },
            mix_weight: mix,
            pos_scale: pos,
        }
    }

    fn features(seed: u64, t: usize, d: usize) -> Matrix {
        let mut s = seed.wrapping_add(99);
        Matrix::from_fn(t, d, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
    }

    fn randomized(seed: u64, cfg: EncoderConfig) -> EncoderParams {
        // nonzero biases so their gradients are exercised
        let mut p = init_params(seed, cfg).unwrap();
        let noise = features(seed + 1, 1, p.values().len());
        for (v, n) in p.values_mut().iter_mut().zip(noise.as_slice()) {
            *v += 0.1 * n;
        }
        p
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_params(3, config(0.3, 0.5)).unwrap();
        let b = init_params(3, config(0.3, 0.5)).unwrap();
        let c = init_params(4, config(0.3, 0.5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn outputs_are_unit_norm() {
        let p = randomized(1, config(0.4, 0.2));
        let z = encode(&features(2, 9, 5), &p).unwrap();
        for row in z.row_iter() {
            assert!((norm(row) - 1.0).abs() < 1e-12);
        }
        let unit = Matrix::from_fn(1, 5, |_, k| if k == 0 { 1.0 } else { 0.0 });
        let z = encode(&unit, &p).unwrap();
        assert!((norm(z.row(0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let p = init_params(1, config(0.0, 0.0)).unwrap();
        assert!(matches!(
            encode(&features(1, 3, 6), &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frames_independent_without_mixing_or_positions() {
        let p = randomized(5, config(0.0, 0.0));
        let x = features(6, 6, 5);
        let perm = [3usize, 0, 5, 1, 4, 2];
        let z = encode(&x, &p).unwrap();
        let zp = encode(&x.select_rows(&perm), &p).unwrap();
        assert_eq!(zp, z.select_rows(&perm));
    }

    #[test]
    fn encode_is_bit_deterministic() {
        let p = randomized(8, config(0.5, 1.0));
        let x = features(9, 7, 5);
        assert_eq!(encode(&x, &p).unwrap(), encode(&x, &p).unwrap());
    }

    #[test]
    fn jvp_matches_finite_differences() {
        let p = randomized(11, config(0.35, 0.7));
        let x = features(12, 6, 5);
        let dir = features(13, 1, p.values().len());
        let h = 1e-6;
        let shifted = |s: f64| {
            let mut q = p.clone();
            for (v, dv) in q.values_mut().iter_mut().zip(dir.as_slice()) {
                *v += s * dv;
            }
            encode(&x, &q).unwrap()
        };
        let (zp, zm) = (shifted(h), shifted(-h));
        // J v via reverse mode: <e_k, J v> = <J^T e_k, v>
        let z = encode(&x, &p).unwrap();
        for t in 0..z.rows() {
            for k in 0..z.cols() {
                let mut e = Matrix::zeros(z.rows(), z.cols());
                e[(t, k)] = 1.0;
                let g = encode_backward(&x, &p, &e).unwrap();
                let jvp: f64 = g.iter().zip(dir.as_slice()).map(|(a, b)| a * b).sum();
                let fd = (zp[(t, k)] - zm[(t, k)]) / (2.0 * h);
                assert!((fd - jvp).abs() <= 1e-4 * fd.abs().max(1e-3), "{fd} vs {jvp}");
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences_for_every_parameter() {
        for (mix, pos) in [(0.0, 0.0), (0.3, 0.5), (1.0, 1.0)] {
            let p = randomized(21, config(mix, pos));
            let x = features(22, 5, 5);
            let up = features(23, 5, 4);
            let f = |q: &EncoderParams| encode(&x, q).unwrap().frobenius_dot(&up);
            let g = encode_backward(&x, &p, &up).unwrap();
            let h = 1e-6;
            for k in 0..p.values().len() {
                let mut a = p.clone();
                a.values_mut()[k] += h;
                let mut b = p.clone();
                b.values_mut()[k] -= h;
                let fd = (f(&a) - f(&b)) / (2.0 * h);
                assert!((fd - g[k]).abs() <= 1e-4 * fd.abs().max(1e-3), "param {k}: {fd} vs {}", g[k]);
            }
        }
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let p = randomized(31, config(0.2, 0.3));
        let x = features(32, 4, 5);
        let up = features(33, 4, 4);
        let g1 = encode_backward(&x, &p, &up).unwrap();
        let g2 = encode_backward(&x, &p, &up.scale(2.0)).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        let g0 = encode_backward(&x, &p, &Matrix::zeros(4, 4)).unwrap();
        assert!(g0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_frame_mixing_is_identity() {
        let p = randomized(41, config(0.8, 0.0));
        let q = EncoderParams::from_values(config(0.0, 0.0), p.values().to_vec()).unwrap();
        let x = features(42, 1, 5);
        assert_eq!(encode(&x, &p).unwrap(), encode(&x, &q).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(init_params(0, config(1.5, 0.0)).is_err());
        let bad = EncoderConfig {
            dims: EncoderDims { d_in: 0, d_h: 1, d_z: 1 },
            mix_weight: 0.0,
            pos_scale: 0.0,
        };
        assert!(bad.validate().is_err());
    }
}
