//! Reference single-head spherical epipolar attention at toy scale.
//!
//! `softmax(q kᵀ / √d ⊙ M) v`, with the mask either multiplied into the
//! logits literally (masked logits become 0) or applied additively (masked
//! logits become -∞). The kernel sits before temporal attention in the video
//! U-Net; only the layer itself lives here.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::epipolar::EpipolarMaskTensor;
use crate::error::{Error, Result};

/// Query frame tokens against all key/value tokens of N frames.
#[derive(Debug, Clone, PartialEq)]
pub struct AttnTensors {
    /// `h·w × C`
    pub q: DMatrix<f64>,
    /// `N·h·w × C`
    pub k: DMatrix<f64>,
    /// `N·h·w × C`
    pub v: DMatrix<f64>,
}

impl AttnTensors {
    pub fn head_dim(&self) -> usize {
        self.q.ncols()
    }

    fn check(&self, mask: &DMatrix<f64>) -> Result<()> {
        if self.q.ncols() != self.k.ncols() || self.k.nrows() != self.v.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "q {:?}, k {:?}, v {:?}",
                self.q.shape(),
                self.k.shape(),
                self.v.shape()
            )));
        }
        if mask.shape() != (self.q.nrows(), self.k.nrows()) {
            return Err(Error::ShapeMismatch(format!(
                "mask {:?} vs logits ({}, {})",
                mask.shape(),
                self.q.nrows(),
                self.k.nrows()
            )));
        }
        for (m, name) in [(&self.q, "q"), (&self.k, "k"), (&self.v, "v")] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskSemantics {
    /// Logits times the binary mask; masked positions keep weight `exp(0)`.
    MultiplicativeLiteral,
    /// Masked logits set to -∞; masked positions get exactly zero weight.
    #[default]
    AdditiveNegInf,
}

/// Dense `h·w × N·h·w` 0/1 matrix of a packed mask.
pub fn mask_matrix(mask: &EpipolarMaskTensor) -> DMatrix<f64> {
    let rows = mask.pixels();
    let cols = mask.frames() * mask.pixels();
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for (c, bit) in mask.row(r).enumerate() {
            if bit {
                m[(r, c)] = 1.0;
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnOutput {
    pub output: DMatrix<f64>,
    /// Row-stochastic attention weights.
    pub weights: DMatrix<f64>,
}

/// Forward pass against a dense 0/1 mask.
pub fn attend(t: &AttnTensors, mask: &DMatrix<f64>, mode: MaskSemantics) -> Result<AttnOutput> {
    t.check(mask)?;
    let scale = 1.0 / (t.head_dim() as f64).sqrt();
    let mut weights = &t.q * t.k.transpose() * scale;
    for r in 0..weights.nrows() {
        let mut row_max = f64::NEG_INFINITY;
        for c in 0..weights.ncols() {
            let l = match mode {
                MaskSemantics::MultiplicativeLiteral => weights[(r, c)] * mask[(r, c)],
                MaskSemantics::AdditiveNegInf if mask[(r, c)] != 0.0 => weights[(r, c)],
                MaskSemantics::AdditiveNegInf => f64::NEG_INFINITY,
            };
            weights[(r, c)] = l;
            row_max = row_max.max(l);
        }
        if row_max == f64::NEG_INFINITY {
            return Err(Error::AllMasked(r));
        }
        let mut sum = 0.0;
        for c in 0..weights.ncols() {
            let e = (weights[(r, c)] - row_max).exp();
            weights[(r, c)] = e;
            sum += e;
        }
        for c in 0..weights.ncols() {
            weights[(r, c)] /= sum;
        }
    }
    Ok(AttnOutput {
        output: &weights * &t.v,
        weights,
    })
}

/// Spherical epipolar attention of one query frame.
pub fn spheric_epi_attn(t: &AttnTensors, mask: &EpipolarMaskTensor, mode: MaskSemantics) -> Result<DMatrix<f64>> {
    Ok(attend(t, &mask_matrix(mask), mode)?.output)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnGrads {
    pub q: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

/// Analytic gradients of `Σ grad_output ⊙ output` with respect to q, k, v.
pub fn attend_backward(
    t: &AttnTensors,
    mask: &DMatrix<f64>,
    mode: MaskSemantics,
    grad_output: &DMatrix<f64>,
) -> Result<AttnGrads> {
    let AttnOutput { weights: p, .. } = attend(t, mask, mode)?;
    let scale = 1.0 / (t.head_dim() as f64).sqrt();
    let dv = p.transpose() * grad_output;
    let dp = grad_output * t.v.transpose();
    let mut ds = DMatrix::zeros(p.nrows(), p.ncols());
    for r in 0..p.nrows() {
        let dot: f64 = (0..p.ncols()).map(|c| dp[(r, c)] * p[(r, c)]).sum();
        for c in 0..p.ncols() {
            let dl = p[(r, c)] * (dp[(r, c)] - dot);
            ds[(r, c)] = match mode {
                MaskSemantics::MultiplicativeLiteral => dl * mask[(r, c)],
                MaskSemantics::AdditiveNegInf if mask[(r, c)] != 0.0 => dl,
                MaskSemantics::AdditiveNegInf => 0.0,
            };
        }
    }
    let grads = AttnGrads {
        q: &ds * &t.k * scale,
        k: ds.transpose() * &t.q * scale,
        v: dv,
    };
    for (m, name) in [(&grads.q, "dq"), (&grads.k, "dk"), (&grads.v, "dv")] {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(name));
        }
    }
    Ok(grads)
}

/// Gradients below this magnitude are compared in absolute terms.
pub const GRAD_REL_FLOOR: f64 = 1e-3;

/// Worst finite-difference disagreement per tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub q: f64,
    pub k: f64,
    pub v: f64,
}

impl GradCheck {
    pub fn max(&self) -> f64 {
        self.q.max(self.k).max(self.v)
    }
}

#[derive(Clone, Copy)]
enum Which {
    Q,
    K,
    V,
}

/// Central differences of `Σ output` against the analytic gradient; the
/// error per entry is `|a - f| / max(|a|, |f|, GRAD_REL_FLOOR)`.
pub fn attn_grad_check(t: &AttnTensors, mask: &DMatrix<f64>, mode: MaskSemantics, eps_fd: f64) -> Result<GradCheck> {
    let ones = DMatrix::from_element(t.q.nrows(), t.v.ncols(), 1.0);
    let analytic = attend_backward(t, mask, mode, &ones)?;
    let check = |which: Which, grad: &DMatrix<f64>| -> Result<f64> {
        let errs = (0..grad.len())
            .into_par_iter()
            .map(|idx| {
                let perturbed = |delta: f64| -> Result<DMatrix<f64>> {
                    let mut p = t.clone();
                    match which {
                        Which::Q => p.q[idx] += delta,
                        Which::K => p.k[idx] += delta,
                        Which::V => p.v[idx] += delta,
                    }
                    Ok(attend(&p, mask, mode)?.output)
                };
                // Summing elementwise differences avoids cancelling two
                // large loss totals.
                let diff = perturbed(eps_fd)? - perturbed(-eps_fd)?;
                let fd = diff.sum() / (2.0 * eps_fd);
                let a = grad[idx];
                Ok((a - fd).abs() / a.abs().max(fd.abs()).max(GRAD_REL_FLOOR))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(errs.into_iter().fold(0.0, f64::max))
    };
    Ok(GradCheck {
        q: check(Which::Q, &analytic.q)?,
        k: check(Which::K, &analytic.k)?,
        v: check(Which::V, &analytic.v)?,
    })
}
