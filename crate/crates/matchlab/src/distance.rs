//! Relevance-distance heads over final-layer embedding sets. All four are
//! asymmetric in (query, corpus) and lower means "more plausibly contained".

use crate::error::{MatchError, Result};
use crate::nn::{linear, mlp};
use crate::params::ParameterStore;
use crate::tape::{Tape, Tensor};

/// Set-alignment distance: total hinge mass of `X_q - omega X_c`, with the
/// query row order fixed and the corpus set pulled through the alignment.
pub fn set_align_distance(
    tape: &mut Tape,
    xq: Tensor,
    xc: Tensor,
    omega_qc: Tensor,
) -> Result<Tensor> {
    if xq.shape() != xc.shape() {
        return Err(MatchError::Dimension {
            op: "set_align_distance",
            lhs: xq.shape(),
            rhs: xc.shape(),
        });
    }
    if omega_qc.rows() != omega_qc.cols() || omega_qc.cols() != xc.rows() {
        return Err(MatchError::Dimension {
            op: "set_align_distance",
            lhs: omega_qc.shape(),
            rhs: xc.shape(),
        });
    }
    let aligned = tape.matmul(omega_qc, xc)?;
    let diff = tape.sub(xq, aligned)?;
    let pos = tape.relu(diff)?;
    tape.sum_all(pos)
}

/// Gated-sum readout to a single whole-graph vector (1 x dim): project each
/// row to `2 dim`, use the first half (through a sigmoid) to gate the second,
/// sum over rows, and map through a final linear layer.
pub fn readout(tape: &mut Tape, store: &ParameterStore, x: Tensor) -> Result<Tensor> {
    let dim = x.cols();
    let projected = linear(tape, store, "readout.gate", x)?;
    let gate = tape.slice_cols(projected, 0, dim)?;
    let payload = tape.slice_cols(projected, dim, dim)?;
    let sig = tape.sigmoid(gate)?;
    let gated = tape.mul(sig, payload)?;
    let summed = tape.col_sum(gated)?;
    linear(tape, store, "readout.out", summed)
}

/// `sum_i [gq_i - gc_i]_+` on whole-graph vectors.
pub fn agg_hinge(tape: &mut Tape, gq: Tensor, gc: Tensor) -> Result<Tensor> {
    if gq.shape() != gc.shape() {
        return Err(MatchError::Dimension {
            op: "agg_hinge",
            lhs: gq.shape(),
            rhs: gc.shape(),
        });
    }
    let diff = tape.sub(gq, gc)?;
    let pos = tape.relu(diff)?;
    tape.sum_all(pos)
}

/// Trainable MLP on the concatenation `[gq ; gc]`; free to be asymmetric.
pub fn agg_mlp(tape: &mut Tape, store: &ParameterStore, gq: Tensor, gc: Tensor) -> Result<Tensor> {
    let cat = tape.concat_cols(gq, gc)?;
    mlp(tape, store, "score", 2, cat)
}

/// Neural tensor network head: `gamma(gq^T W[1..L] gc + V [gq;gc] + b)` with
/// L = 16 bilinear slices and a scoring MLP `gamma`.
pub fn agg_ntn(tape: &mut Tape, store: &ParameterStore, gq: Tensor, gc: Tensor) -> Result<Tensor> {
    const L: usize = 16;
    if gq.shape() != gc.shape() || gq.rows() != 1 {
        return Err(MatchError::Dimension {
            op: "agg_ntn",
            lhs: gq.shape(),
            rhs: gc.shape(),
        });
    }
    let gct = tape.transpose(gc)?;
    let mut bilinear: Option<Tensor> = None;
    for l in 0..L {
        let w = store.leaf(tape, &format!("ntn.w{l}"))?;
        let gw = tape.matmul(gq, w)?;
        let scalar = tape.matmul(gw, gct)?; // 1x1
        bilinear = Some(match bilinear {
            None => scalar,
            Some(acc) => tape.concat_cols(acc, scalar)?,
        });
    }
    let bilinear = bilinear.expect("L > 0");

    let cat = tape.concat_cols(gq, gc)?;
    let v = store.leaf(tape, "ntn.v")?;
    let vterm = tape.matmul(cat, v)?; // 1xL
    let b = store.leaf(tape, "ntn.b")?;
    let pre = tape.add(bilinear, vterm)?;
    let pre = tape.add(pre, b)?;
    mlp(tape, store, "ntn.score", 3, pre)
}
