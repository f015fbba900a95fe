//! Cross-graph interaction: similarity non-linearities and the normalizations
//! that turn them into alignment matrices.

use serde::{Deserialize, Serialize};

use crate::error::{MatchError, Result};
use crate::nn::{logsumexp_cols, logsumexp_rows, mlp};
use crate::params::ParameterStore;
use crate::tape::{Mat, Tape, Tensor};

/// Similarity between embedding rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `LRL(x_q) . LRL(x_c)`, a shared Linear-ReLU-Linear map on both sides.
    Neural,
    /// Plain dot product.
    Dot,
    /// `-(sum_i [x_q_i - x_c_i]_+)`: zero iff the query row is dominated.
    #[default]
    Hinge,
}

/// Normalization turning similarities into alignment scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Row/column softmax attention; rows are normalized independently, so
    /// two query nodes can claim the same corpus node.
    NonInjective,
    /// Sinkhorn iteration toward a doubly stochastic matrix, the continuous
    /// relaxation of a permutation.
    #[default]
    Injective,
}

/// Alignment hyperparameters shared by both structures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignSettings {
    pub structure: Structure,
    pub nonlinearity: Nonlinearity,
    pub tau: f64,
    pub sinkhorn_steps: usize,
}

impl Default for AlignSettings {
    fn default() -> Self {
        AlignSettings {
            structure: Structure::Injective,
            nonlinearity: Nonlinearity::Hinge,
            tau: 0.1,
            sinkhorn_steps: 20,
        }
    }
}

/// Pairwise similarity matrix `S[u, u'] = eta(xq[u], xc[u'])`.
///
/// `lrl_prefix` names the shared LRL parameters used by the neural kind.
/// Inputs must have equal row counts (call sites pad first) and equal widths.
pub fn similarity(
    tape: &mut Tape,
    store: &ParameterStore,
    kind: Nonlinearity,
    lrl_prefix: &str,
    xq: Tensor,
    xc: Tensor,
) -> Result<Tensor> {
    if xq.cols() != xc.cols() || xq.rows() != xc.rows() {
        return Err(MatchError::Dimension {
            op: "similarity",
            lhs: xq.shape(),
            rhs: xc.shape(),
        });
    }
    match kind {
        Nonlinearity::Dot => {
            let ct = tape.transpose(xc)?;
            tape.matmul(xq, ct)
        }
        Nonlinearity::Neural => {
            let pq = mlp(tape, store, lrl_prefix, 2, xq)?;
            let pc = mlp(tape, store, lrl_prefix, 2, xc)?;
            let ct = tape.transpose(pc)?;
            tape.matmul(pq, ct)
        }
        Nonlinearity::Hinge => {
            let n = xq.rows();
            // Tile rows to evaluate all pairs: row u*n+u' holds xq[u] - xc[u'].
            let idx_q: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat(u).take(n)).collect();
            let idx_c: Vec<usize> = (0..n).flat_map(|_| 0..n).collect();
            let tq = tape.gather_rows(xq, &idx_q)?;
            let tc = tape.gather_rows(xc, &idx_c)?;
            let diff = tape.sub(tq, tc)?;
            let pos = tape.relu(diff)?;
            let sums = tape.row_sum(pos)?;
            let grid = tape.reshape(sums, n, n)?;
            tape.neg(grid)
        }
    }
}

/// Attention normalization: `omega_qc` is the row softmax of `S / tau`,
/// `omega_cq[u',u]` the column softmax. Padding rows and columns participate
/// like any other (balanced-transport convention).
pub fn attention_align(tape: &mut Tape, s: Tensor, tau: f64) -> Result<(Tensor, Tensor)> {
    if tau <= 0.0 {
        return Err(MatchError::Config(format!("temperature must be positive, got {tau}")));
    }
    let scaled = tape.scale(s, 1.0 / tau)?;
    let qc = tape.softmax_rows(scaled)?;
    let st = tape.transpose(scaled)?;
    let cq = tape.softmax_rows(st)?;
    Ok((qc, cq))
}

/// Sinkhorn normalization: starting from `Z_0 = exp(S / tau)`, each step
/// normalizes columns then rows. Returns `(Z_T, Z_T^T)`.
///
/// Runs in the log domain so small temperatures cannot overflow the
/// exponential. `noise` (e.g. Gumbel samples) is added to `S` before scaling;
/// the plain iteration is noiseless.
pub fn sinkhorn_align(
    tape: &mut Tape,
    s: Tensor,
    tau: f64,
    steps: usize,
    noise: Option<&Mat>,
) -> Result<(Tensor, Tensor)> {
    if tau <= 0.0 {
        return Err(MatchError::Config(format!("temperature must be positive, got {tau}")));
    }
    if steps < 1 {
        return Err(MatchError::Config("sinkhorn needs at least one step".into()));
    }
    if s.rows() != s.cols() {
        return Err(MatchError::Dimension {
            op: "sinkhorn_align",
            lhs: s.shape(),
            rhs: s.shape(),
        });
    }
    let mut log_z = match noise {
        Some(g) => {
            let gt = tape.constant(g.clone())?;
            let sg = tape.add(s, gt)?;
            tape.scale(sg, 1.0 / tau)?
        }
        None => tape.scale(s, 1.0 / tau)?,
    };
    for _ in 0..steps {
        let col_lse = logsumexp_cols(tape, log_z)?;
        log_z = tape.broadcast_sub(log_z, col_lse)?;
        let row_lse = logsumexp_rows(tape, log_z)?;
        log_z = tape.broadcast_sub(log_z, row_lse)?;
    }
    let z = tape.exp(log_z)?;
    let zt = tape.transpose(z)?;
    Ok((z, zt))
}

/// Dispatch on the configured structure. Returns `(omega_qc, omega_cq)`.
pub fn align(
    tape: &mut Tape,
    settings: &AlignSettings,
    s: Tensor,
    noise: Option<&Mat>,
) -> Result<(Tensor, Tensor)> {
    match settings.structure {
        Structure::NonInjective => attention_align(tape, s, settings.tau),
        Structure::Injective => {
            sinkhorn_align(tape, s, settings.tau, settings.sinkhorn_steps, noise)
        }
    }
}

/// Draw a matrix of standard Gumbel samples.
pub fn gumbel_noise(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> Mat {
    Mat::from_shape_fn((rows, cols), |_| {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        -(-u.ln()).ln()
    })
}
