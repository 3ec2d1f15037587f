use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::foldmetrics::Structure;
use crate::gradkit::{GradError, Var};
use crate::scalar::Scalar;
use crate::seqcore::{MsaEmbedding, SequenceEmbedding, ALPHABET_SIZE};
use crate::tensor::Tensor;

use super::{DifferentiablePredictor, PredictError, StructurePredictor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Width of the residue-type embedding and hidden layer.
    pub hidden: usize,
    /// Weight of the alignment profile in the per-residue features.
    pub w_msa: f64,
    /// Radians of bend/twist per unit of network output.
    pub angle_gain: f64,
    /// Inverse temperature of the per-column softmax applied to the embedding.
    pub sharpness: f64,
    /// Polar angle of the chain direction before the first bend.
    pub initial_polar: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            w_msa: 0.25,
            angle_gain: 1.0,
            sharpness: 2.0,
            initial_polar: 1.0,
            seed: 42,
        }
    }
}

/// Seeded, untrained stand-in for a structure predictor.
///
/// Each embedding column `x` first goes through `softmax(β x)`, so a
/// half-deleted column leans towards whichever residue dominates. Per residue, features are
/// `E^T ((1 - w) softmax(β p) + w q)` where `q` is the alignment profile
/// column. A `tanh` layer and a linear
/// head turn them into bend and twist angles. Cumulative angles give a unit
/// bond direction per residue in spherical coordinates, and cumulative bonds
/// give the coordinates, so a change at residue `i` moves every residue from
/// `i` onward.
#[derive(Debug, Clone)]
pub struct ToySurrogate<T> {
    config: SurrogateConfig,
    /// `21 x h`
    type_embed: Tensor<T>,
    /// `h x h`
    w1: Tensor<T>,
    /// `h x 1`
    b1: Tensor<T>,
    /// `2 x h`
    w2: Tensor<T>,
    /// `2 x 1`
    b2: Tensor<T>,
}

impl<T: Scalar> ToySurrogate<T> {
    pub fn new(config: SurrogateConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let h = config.hidden;
        let mut normal = |rows: usize, cols: usize, scale: f64| {
            Tensor::from_fn(rows, cols, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                T::lit(z * scale)
            })
        };
        let inv_sqrt_h = 1.0 / (h as f64).sqrt();
        let type_embed = normal(ALPHABET_SIZE, h, 1.0);
        let w1 = normal(h, h, inv_sqrt_h);
        let b1 = normal(h, 1, 0.1);
        let w2 = normal(2, h, inv_sqrt_h);
        let b2 = normal(2, 1, 0.1);
        Self {
            config,
            type_embed,
            w1,
            b1,
            w2,
            b2,
        }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(SurrogateConfig {
            seed,
            ..SurrogateConfig::default()
        })
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.config
    }

    fn mixed_input(&self, seq: &Tensor<T>, msa: &MsaEmbedding) -> Tensor<T> {
        let seq = &self.sharpen(seq);
        if msa.is_empty() {
            return seq.clone();
        }
        let w = T::lit(self.config.w_msa);
        let profile = msa.profile::<T>();
        seq.zip_map(&profile, |p, q| (T::one() - w) * p + w * q)
            .expect("profile has the embedding shape")
    }

    fn sharpen(&self, x: &Tensor<T>) -> Tensor<T> {
        let beta = T::lit(self.config.sharpness);
        let mut out = x.map(|v| (beta * v).exp());
        for c in 0..x.cols() {
            let total = out.column(c).into_iter().sum::<T>();
            for r in 0..x.rows() {
                out.set(r, c, out.get(r, c) / total);
            }
        }
        out
    }

    fn sharpen_var<'t>(&self, x: Var<'t, T>) -> Result<Var<'t, T>, GradError> {
        let tape = x.tape();
        let e = x.scale(T::lit(self.config.sharpness))?.exp()?;
        let totals = tape.constant(Tensor::ones(1, ALPHABET_SIZE))?.matmul(e)?;
        let totals = tape.constant(Tensor::ones(ALPHABET_SIZE, 1))?.matmul(totals)?;
        e.div(totals)
    }

    /// Per-residue `(bend, twist)` angles, `2 x l`.
    fn angles(&self, input: &Tensor<T>) -> Tensor<T> {
        let l = input.cols();
        let feats = self
            .type_embed
            .transpose()
            .matmul(input)
            .expect("21-row input");
        let pre = self.w1.matmul(&feats).expect("hidden shape");
        let hidden = Tensor::from_fn(self.config.hidden, l, |r, c| {
            (pre.get(r, c) + self.b1.get(r, 0)).tanh()
        });
        let out = self.w2.matmul(&hidden).expect("head shape");
        let gain = T::lit(self.config.angle_gain);
        Tensor::from_fn(2, l, |r, c| gain * (out.get(r, c) + self.b2.get(r, 0)))
    }

    fn check_input(&self, seq: &Tensor<T>, msa: &MsaEmbedding) -> Result<(), PredictError> {
        if seq.rows() != ALPHABET_SIZE || seq.cols() == 0 {
            return Err(PredictError::Seq(crate::seqcore::SeqError::BadEmbeddingShape {
                rows: seq.rows(),
                cols: seq.cols(),
            }));
        }
        if !msa.is_empty() && msa.len() != seq.cols() {
            return Err(PredictError::LengthMismatch {
                found: msa.len(),
                expected: seq.cols(),
            });
        }
        Ok(())
    }

    /// Forward pass on a raw `21 x l` matrix (no embedding-form check).
    pub fn predict_matrix(
        &self,
        seq: &Tensor<T>,
        msa: &MsaEmbedding,
    ) -> Result<Structure<T>, PredictError> {
        self.check_input(seq, msa)?;
        let angles = self.angles(&self.mixed_input(seq, msa));
        let mut theta = T::lit(self.config.initial_polar);
        let mut phi = T::zero();
        let mut pos = [T::zero(); 3];
        let mut coords = Vec::with_capacity(seq.cols());
        for c in 0..seq.cols() {
            theta = theta + angles.get(0, c);
            phi = phi + angles.get(1, c);
            pos[0] = pos[0] + theta.sin() * phi.cos();
            pos[1] = pos[1] + theta.sin() * phi.sin();
            pos[2] = pos[2] + theta.cos();
            coords.push(pos);
        }
        Ok(Structure::new(coords)?)
    }
}

impl<T: Scalar> Default for ToySurrogate<T> {
    fn default() -> Self {
        Self::new(SurrogateConfig::default())
    }
}

impl<T: Scalar> StructurePredictor<T> for ToySurrogate<T> {
    fn predict(
        &self,
        seq: &SequenceEmbedding<T>,
        msa: &MsaEmbedding,
    ) -> Result<Structure<T>, PredictError> {
        self.predict_matrix(seq.matrix(), msa)
    }

    fn describe(&self) -> String {
        let c = &self.config;
        format!(
            "toy-surrogate(seed={},hidden={},w_msa={},angle_gain={},sharpness={},initial_polar={})",
            c.seed, c.hidden, c.w_msa, c.angle_gain, c.sharpness, c.initial_polar
        )
    }
}

impl<T: Scalar> DifferentiablePredictor<T> for ToySurrogate<T> {
    fn predict_var<'t>(
        &self,
        seq: Var<'t, T>,
        msa: &MsaEmbedding,
    ) -> Result<Var<'t, T>, PredictError> {
        let tape = seq.tape();
        let (rows, l) = seq.shape();
        self.check_input(&Tensor::zeros(rows, l), msa)?;

        let seq = self.sharpen_var(seq)?;
        let input = if msa.is_empty() {
            seq
        } else {
            let w = T::lit(self.config.w_msa);
            let profile = msa.profile::<T>().map(|q| w * q);
            seq.scale(T::one() - w)?.add(tape.constant(profile)?)?
        };
        let embed_t = tape.constant(self.type_embed.transpose())?;
        let feats = embed_t.matmul(input)?;
        let bias1 = Tensor::from_fn(self.config.hidden, l, |r, _| self.b1.get(r, 0));
        let hidden = tape
            .constant(self.w1.clone())?
            .matmul(feats)?
            .add(tape.constant(bias1)?)?
            .tanh()?;

        let gain = T::lit(self.config.angle_gain);
        let head_row = |r: usize| -> Result<Var<'t, T>, PredictError> {
            let w = Tensor::from_fn(1, self.config.hidden, |_, c| gain * self.w2.get(r, c));
            let b = Tensor::filled(1, l, gain * self.b2.get(r, 0));
            Ok(tape.constant(w)?.matmul(hidden)?.add(tape.constant(b)?)?)
        };
        // Inclusive prefix sums via an upper-triangular ones matrix.
        let prefix = tape.constant(Tensor::from_fn(l, l, |j, i| {
            if j <= i {
                T::one()
            } else {
                T::zero()
            }
        }))?;
        let theta = head_row(0)?.matmul(prefix)?.offset(T::lit(self.config.initial_polar))?;
        let phi = head_row(1)?.matmul(prefix)?;
        let (st, ct) = (theta.sin()?, theta.cos()?);
        let dx = st.mul(phi.cos()?)?;
        let dy = st.mul(phi.sin()?)?;
        let dz = ct;

        let basis = |k: usize| tape.constant(Tensor::from_fn(3, 1, |r, _| if r == k { T::one() } else { T::zero() }));
        let bonds = basis(0)?
            .matmul(dx)?
            .add(basis(1)?.matmul(dy)?)?
            .add(basis(2)?.matmul(dz)?)?;
        Ok(bonds.matmul(prefix)?)
    }
}
