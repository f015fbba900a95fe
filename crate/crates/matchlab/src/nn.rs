//! Small network building blocks composed from tape primitives.

use ndarray::Axis;

use crate::error::Result;
use crate::params::ParameterStore;
use crate::tape::{Mat, Tape, Tensor};

/// `x @ W + b` with `W` at `"{prefix}.w"` (in x out) and `b` at `"{prefix}.b"`
/// (1 x out, broadcast over rows).
pub fn linear(tape: &mut Tape, store: &ParameterStore, prefix: &str, x: Tensor) -> Result<Tensor> {
    let w = store.leaf(tape, &format!("{prefix}.w"))?;
    let b = store.leaf(tape, &format!("{prefix}.b"))?;
    let xw = tape.matmul(x, w)?;
    tape.broadcast_add(xw, b)
}

/// Linear layers at `"{prefix}.0"`, `"{prefix}.1"`, ... with ReLU between
/// (none after the last).
pub fn mlp(
    tape: &mut Tape,
    store: &ParameterStore,
    prefix: &str,
    n_layers: usize,
    x: Tensor,
) -> Result<Tensor> {
    let mut h = x;
    for i in 0..n_layers {
        h = linear(tape, store, &format!("{prefix}.{i}"), h)?;
        if i + 1 < n_layers {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

/// Register an MLP's parameters: widths `[in, h1, ..., out]`.
pub fn init_mlp(
    store: &mut ParameterStore,
    prefix: &str,
    widths: &[usize],
    rng: &mut impl rand::Rng,
) -> Result<()> {
    for i in 0..widths.len() - 1 {
        store.insert_glorot(&format!("{prefix}.{i}.w"), widths[i], widths[i + 1], rng)?;
        store.insert_zeros(&format!("{prefix}.{i}.b"), 1, widths[i + 1])?;
    }
    Ok(())
}

/// One GRU update of `hidden` (N x dh) from `input` (N x di):
///
/// ```text
/// z = sigmoid(x Wz + h Uz + bz)
/// r = sigmoid(x Wr + h Ur + br)
/// n = tanh(x Wn + bn + r * (h Un + cn))
/// h' = (1 - z) * n + z * h
/// ```
pub fn gru_step(
    tape: &mut Tape,
    store: &ParameterStore,
    prefix: &str,
    hidden: Tensor,
    input: Tensor,
) -> Result<Tensor> {
    let gate = |tape: &mut Tape, w: &str, u: &str, b: &str| -> Result<Tensor> {
        let w = store.leaf(tape, w)?;
        let u = store.leaf(tape, u)?;
        let b = store.leaf(tape, b)?;
        let xw = tape.matmul(input, w)?;
        let hu = tape.matmul(hidden, u)?;
        let s = tape.add(xw, hu)?;
        tape.broadcast_add(s, b)
    };
    let z = {
        let pre = gate(
            tape,
            &format!("{prefix}.w_z"),
            &format!("{prefix}.u_z"),
            &format!("{prefix}.b_z"),
        )?;
        tape.sigmoid(pre)?
    };
    let r = {
        let pre = gate(
            tape,
            &format!("{prefix}.w_r"),
            &format!("{prefix}.u_r"),
            &format!("{prefix}.b_r"),
        )?;
        tape.sigmoid(pre)?
    };
    let n = {
        let wn = store.leaf(tape, &format!("{prefix}.w_n"))?;
        let un = store.leaf(tape, &format!("{prefix}.u_n"))?;
        let bn = store.leaf(tape, &format!("{prefix}.b_n"))?;
        let cn = store.leaf(tape, &format!("{prefix}.c_n"))?;
        let hu = tape.matmul(hidden, un)?;
        let hu = tape.broadcast_add(hu, cn)?;
        let rh = tape.mul(r, hu)?;
        let xw = tape.matmul(input, wn)?;
        let xw = tape.broadcast_add(xw, bn)?;
        let pre = tape.add(xw, rh)?;
        tape.tanh(pre)?
    };
    // h' = (1-z)*n + z*h
    let one_minus_z = tape.affine(z, -1.0, 1.0)?;
    let a = tape.mul(one_minus_z, n)?;
    let b = tape.mul(z, hidden)?;
    tape.add(a, b)
}

/// Register GRU parameters for input width `di` and hidden width `dh`.
pub fn init_gru(
    store: &mut ParameterStore,
    prefix: &str,
    di: usize,
    dh: usize,
    rng: &mut impl rand::Rng,
) -> Result<()> {
    for gate in ["z", "r", "n"] {
        store.insert_glorot(&format!("{prefix}.w_{gate}"), di, dh, rng)?;
        store.insert_glorot(&format!("{prefix}.u_{gate}"), dh, dh, rng)?;
        store.insert_zeros(&format!("{prefix}.b_{gate}"), 1, dh)?;
    }
    store.insert_zeros(&format!("{prefix}.c_n"), 1, dh)?;
    Ok(())
}

/// Row-wise log(sum(exp(x))), shape (rows, 1).
///
/// The row maxima are recorded as constants; the cancellation in the chain
/// rule makes the gradient exact regardless.
pub fn logsumexp_rows(tape: &mut Tape, x: Tensor) -> Result<Tensor> {
    let maxes: Vec<f64> = tape
        .value(x)
        .axis_iter(Axis(0))
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let m = tape.constant(Mat::from_shape_vec((x.rows(), 1), maxes).expect("row max shape"))?;
    let shifted = tape.broadcast_sub(x, m)?;
    let e = tape.exp(shifted)?;
    let s = tape.row_sum(e)?;
    let l = tape.log(s)?;
    tape.add(l, m)
}

/// Column-wise log(sum(exp(x))), shape (1, cols).
pub fn logsumexp_cols(tape: &mut Tape, x: Tensor) -> Result<Tensor> {
    let maxes: Vec<f64> = tape
        .value(x)
        .axis_iter(Axis(1))
        .map(|col| col.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let m = tape.constant(Mat::from_shape_vec((1, x.cols()), maxes).expect("col max shape"))?;
    let shifted = tape.broadcast_sub(x, m)?;
    let e = tape.exp(shifted)?;
    let s = tape.col_sum(e)?;
    let l = tape.log(s)?;
    tape.add(l, m)
}
