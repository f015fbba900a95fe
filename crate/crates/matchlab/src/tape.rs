//! Reverse-mode automatic differentiation over dense f64 matrices.
//!
//! A [`Tape`] records forward operations in topological order; [`Tape::backward`]
//! replays them in reverse to accumulate gradients with respect to every named
//! parameter leaf. Everything is 64-bit: the gradient checks in this crate run
//! at 1e-4 relative tolerance, which single precision cannot sustain.
//!
//! Every forward op validates shapes and rejects non-finite results immediately;
//! Sinkhorn exponentials can overflow, and a silent NaN would poison ranking
//! metrics much later.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{concatenate, s, Array2, Axis};

use crate::error::{MatchError, Result};

/// Dense row-major matrix of f64.
pub type Mat = Array2<f64>;

/// Gradients keyed by parameter path, in stable (sorted) order.
pub type GradMap = BTreeMap<String, Mat>;

/// Handle to a value recorded on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tensor {
    id: usize,
    rows: usize,
    cols: usize,
}

impl Tensor {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

enum Op {
    /// Input node; `param` names it as a trainable leaf.
    Leaf { param: Option<String> },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MatMul(usize, usize),
    Transpose(usize),
    /// scale * x + shift, elementwise.
    Affine { x: usize, scale: f64, shift: f64 },
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    Exp(usize),
    Log(usize),
    SoftmaxRows(usize),
    RowSum(usize),
    ColSum(usize),
    SumAll(usize),
    /// x + v with v broadcast; v is (rows,1) or (1,cols).
    BroadcastAdd { x: usize, v: usize },
    ConcatCols(usize, usize),
    SliceCols { x: usize, start: usize },
    GatherRows { x: usize, idx: Arc<Vec<usize>> },
    /// Entries where mask != 0 are replaced by `value` (zero gradient there).
    MaskedFill { x: usize, mask: Arc<Mat>, value: f64 },
    /// Append zero rows below x.
    PadRows { x: usize, extra: usize },
    /// Same entries in row-major order, new shape.
    Reshape(usize),
}

struct Node {
    value: Mat,
    op: Op,
}

/// Records a computation for later reverse-mode differentiation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn check_finite(value: &Mat, op: &'static str) -> Result<()> {
    if value.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(MatchError::NonFinite { op })
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a recorded tensor.
    pub fn value(&self, t: Tensor) -> &Mat {
        &self.nodes[t.id].value
    }

    fn push(&mut self, value: Mat, op: Op, name: &'static str) -> Result<Tensor> {
        check_finite(&value, name)?;
        let id = self.nodes.len();
        let (rows, cols) = value.dim();
        self.nodes.push(Node { value, op });
        Ok(Tensor { id, rows, cols })
    }

    /// Record an input that does not require a gradient.
    pub fn constant(&mut self, value: Mat) -> Result<Tensor> {
        self.push(value, Op::Leaf { param: None }, "constant")
    }

    /// Record a named trainable leaf. Gradients from [`Tape::backward`] are
    /// keyed by this name.
    pub fn leaf(&mut self, name: &str, value: Mat) -> Result<Tensor> {
        self.push(
            value,
            Op::Leaf {
                param: Some(name.to_string()),
            },
            "leaf",
        )
    }

    fn binary_same_shape(
        &mut self,
        a: Tensor,
        b: Tensor,
        op: &'static str,
        f: impl FnOnce(&Mat, &Mat) -> Mat,
        mk: impl FnOnce(usize, usize) -> Op,
    ) -> Result<Tensor> {
        if a.shape() != b.shape() {
            return Err(MatchError::Dimension {
                op,
                lhs: a.shape(),
                rhs: b.shape(),
            });
        }
        let value = f(&self.nodes[a.id].value, &self.nodes[b.id].value);
        self.push(value, mk(a.id, b.id), op)
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.binary_same_shape(a, b, "add", |x, y| x + y, Op::Add)
    }

    pub fn sub(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.binary_same_shape(a, b, "sub", |x, y| x - y, Op::Sub)
    }

    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.binary_same_shape(a, b, "mul", |x, y| x * y, Op::Mul)
    }

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        if a.cols != b.rows {
            return Err(MatchError::Dimension {
                op: "matmul",
                lhs: a.shape(),
                rhs: b.shape(),
            });
        }
        let value = self.nodes[a.id].value.dot(&self.nodes[b.id].value);
        self.push(value, Op::MatMul(a.id, b.id), "matmul")
    }

    pub fn transpose(&mut self, a: Tensor) -> Result<Tensor> {
        let value = self.nodes[a.id].value.t().to_owned();
        self.push(value, Op::Transpose(a.id), "transpose")
    }

    /// Elementwise `scale * x + shift`.
    pub fn affine(&mut self, x: Tensor, scale: f64, shift: f64) -> Result<Tensor> {
        let value = self.nodes[x.id].value.mapv(|v| scale * v + shift);
        self.push(value, Op::Affine { x: x.id, scale, shift }, "affine")
    }

    pub fn scale(&mut self, x: Tensor, scale: f64) -> Result<Tensor> {
        self.affine(x, scale, 0.0)
    }

    pub fn neg(&mut self, x: Tensor) -> Result<Tensor> {
        self.affine(x, -1.0, 0.0)
    }

    pub fn relu(&mut self, x: Tensor) -> Result<Tensor> {
        let value = self.nodes[x.id].value.mapv(|v| v.max(0.0));
        self.push(value, Op::Relu(x.id), "relu")
    }

    pub fn sigmoid(&mut self, x: Tensor) -> Result<Tensor> {
        let value = self.nodes[x.id].value.mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(value, Op::Sigmoid(x.id), "sigmoid")
    }

    pub fn tanh(&mut self, x: Tensor) -> Result<Tensor> {
        let value = self.nodes[x.id].value.mapv(f64::tanh);
        self.push(value, Op::Tanh(x.id), "tanh")
    }

    pub fn exp(&mut self, x: Tensor) -> Result<Tensor> {
        let value = self.nodes[x.id].value.mapv(f64::exp);
        self.push(value, Op::Exp(x.id), "exp")
    }

    pub fn log(&mut self, x: Tensor) -> Result<Tensor> {
        let value = self.nodes[x.id].value.mapv(f64::ln);
        self.push(value, Op::Log(x.id), "log")
    }

    /// Softmax across the columns of each row.
    pub fn softmax_rows(&mut self, x: Tensor) -> Result<Tensor> {
        let v = &self.nodes[x.id].value;
        let mut out = v.clone();
        for mut row in out.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.mapv_inplace(|e| (e - max).exp());
            let sum: f64 = row.iter().sum();
            row.mapv_inplace(|e| e / sum);
        }
        self.push(out, Op::SoftmaxRows(x.id), "softmax_rows")
    }

    /// Per-row sums, shape (rows, 1).
    pub fn row_sum(&mut self, x: Tensor) -> Result<Tensor> {
        let v = &self.nodes[x.id].value;
        let value = v
            .sum_axis(Axis(1))
            .into_shape_with_order((x.rows, 1))
            .expect("row_sum reshape");
        self.push(value, Op::RowSum(x.id), "row_sum")
    }

    /// Per-column sums, shape (1, cols).
    pub fn col_sum(&mut self, x: Tensor) -> Result<Tensor> {
        let v = &self.nodes[x.id].value;
        let value = v
            .sum_axis(Axis(0))
            .into_shape_with_order((1, x.cols))
            .expect("col_sum reshape");
        self.push(value, Op::ColSum(x.id), "col_sum")
    }

    /// Sum of all entries, shape (1, 1).
    pub fn sum_all(&mut self, x: Tensor) -> Result<Tensor> {
        let value = Mat::from_elem((1, 1), self.nodes[x.id].value.sum());
        self.push(value, Op::SumAll(x.id), "sum_all")
    }

    /// `x + v` where v is a (rows,1) column vector broadcast across columns,
    /// or a (1,cols) row vector broadcast across rows.
    pub fn broadcast_add(&mut self, x: Tensor, v: Tensor) -> Result<Tensor> {
        let ok = (v.rows == x.rows && v.cols == 1) || (v.rows == 1 && v.cols == x.cols);
        if !ok {
            return Err(MatchError::Dimension {
                op: "broadcast_add",
                lhs: x.shape(),
                rhs: v.shape(),
            });
        }
        let xv = &self.nodes[x.id].value;
        let vv = &self.nodes[v.id].value;
        let value = if v.cols == 1 {
            let mut out = xv.clone();
            for (mut row, b) in out.rows_mut().into_iter().zip(vv.column(0)) {
                row.mapv_inplace(|e| e + b);
            }
            out
        } else {
            xv + vv
        };
        self.push(value, Op::BroadcastAdd { x: x.id, v: v.id }, "broadcast_add")
    }

    /// `x - v`, broadcasting as in [`Tape::broadcast_add`].
    pub fn broadcast_sub(&mut self, x: Tensor, v: Tensor) -> Result<Tensor> {
        let nv = self.neg(v)?;
        self.broadcast_add(x, nv)
    }

    pub fn concat_cols(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        if a.rows != b.rows {
            return Err(MatchError::Dimension {
                op: "concat_cols",
                lhs: a.shape(),
                rhs: b.shape(),
            });
        }
        let value = concatenate(
            Axis(1),
            &[self.nodes[a.id].value.view(), self.nodes[b.id].value.view()],
        )
        .expect("concat_cols");
        self.push(value, Op::ConcatCols(a.id, b.id), "concat_cols")
    }

    /// Columns `[start, start+len)` of x.
    pub fn slice_cols(&mut self, x: Tensor, start: usize, len: usize) -> Result<Tensor> {
        if start + len > x.cols {
            return Err(MatchError::Dimension {
                op: "slice_cols",
                lhs: x.shape(),
                rhs: (start, len),
            });
        }
        let value = self.nodes[x.id]
            .value
            .slice(s![.., start..start + len])
            .to_owned();
        self.push(value, Op::SliceCols { x: x.id, start }, "slice_cols")
    }

    /// Select rows of x by index; repeats allowed. The pullback scatter-adds.
    pub fn gather_rows(&mut self, x: Tensor, idx: &[usize]) -> Result<Tensor> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= x.rows) {
            return Err(MatchError::Usage(format!(
                "gather_rows index {bad} out of bounds for {} rows",
                x.rows
            )));
        }
        let src = &self.nodes[x.id].value;
        let mut value = Mat::zeros((idx.len(), x.cols));
        for (r, &i) in idx.iter().enumerate() {
            value.row_mut(r).assign(&src.row(i));
        }
        self.push(
            value,
            Op::GatherRows {
                x: x.id,
                idx: Arc::new(idx.to_vec()),
            },
            "gather_rows",
        )
    }

    /// Replace entries of x where `mask` is nonzero with `value`.
    pub fn masked_fill(&mut self, x: Tensor, mask: &Mat, value: f64) -> Result<Tensor> {
        if mask.dim() != x.shape() {
            return Err(MatchError::Dimension {
                op: "masked_fill",
                lhs: x.shape(),
                rhs: mask.dim(),
            });
        }
        let mut out = self.nodes[x.id].value.clone();
        ndarray::Zip::from(&mut out).and(mask).for_each(|o, &m| {
            if m != 0.0 {
                *o = value;
            }
        });
        self.push(
            out,
            Op::MaskedFill {
                x: x.id,
                mask: Arc::new(mask.clone()),
                value,
            },
            "masked_fill",
        )
    }

    /// Append `extra` zero rows below x.
    pub fn pad_rows(&mut self, x: Tensor, extra: usize) -> Result<Tensor> {
        let xv = &self.nodes[x.id].value;
        let mut value = Mat::zeros((x.rows + extra, x.cols));
        value.slice_mut(s![..x.rows, ..]).assign(xv);
        self.push(value, Op::PadRows { x: x.id, extra }, "pad_rows")
    }

    /// Reinterpret x with a new shape of equal element count (row-major).
    pub fn reshape(&mut self, x: Tensor, rows: usize, cols: usize) -> Result<Tensor> {
        if rows * cols != x.rows * x.cols {
            return Err(MatchError::Dimension {
                op: "reshape",
                lhs: x.shape(),
                rhs: (rows, cols),
            });
        }
        let value = self.nodes[x.id]
            .value
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((rows, cols))
            .expect("reshape count checked");
        self.push(value, Op::Reshape(x.id), "reshape")
    }

    /// Scalar (1x1) convenience leaf.
    pub fn scalar(&mut self, v: f64) -> Result<Tensor> {
        self.constant(Mat::from_elem((1, 1), v))
    }

    /// Gradients of a scalar output with respect to every named leaf.
    ///
    /// Named leaves not reachable from `output` get zero gradients.
    pub fn backward(&self, output: Tensor) -> Result<GradMap> {
        if output.id >= self.nodes.len() {
            return Err(MatchError::Usage("backward: output not on this tape".into()));
        }
        if output.shape() != (1, 1) {
            return Err(MatchError::Usage(format!(
                "backward: output must be 1x1, got {:?}",
                output.shape()
            )));
        }
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.id] = Some(Mat::from_elem((1, 1), 1.0));

        for id in (0..=output.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.pull(id, &g, &mut grads);
            grads[id] = Some(g);
        }

        let mut out = GradMap::new();
        for (id, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf { param: Some(name) } = &node.op {
                let g = grads[id]
                    .take()
                    .map(|g| g.as_standard_layout().to_owned())
                    .unwrap_or_else(|| Mat::zeros(node.value.dim()));
                // A parameter recorded twice accumulates into one slot.
                out.entry(name.clone())
                    .and_modify(|acc| *acc += &g)
                    .or_insert(g);
            }
        }
        Ok(out)
    }

    fn accumulate(grads: &mut [Option<Mat>], id: usize, delta: Mat) {
        match &mut grads[id] {
            Some(g) => *g += &delta,
            slot => *slot = Some(delta),
        }
    }

    fn pull(&self, id: usize, g: &Mat, grads: &mut [Option<Mat>]) {
        match &self.nodes[id].op {
            Op::Leaf { .. } => {}
            Op::Add(a, b) => {
                Self::accumulate(grads, *a, g.clone());
                Self::accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                Self::accumulate(grads, *a, g.clone());
                Self::accumulate(grads, *b, -g);
            }
            Op::Mul(a, b) => {
                Self::accumulate(grads, *a, g * &self.nodes[*b].value);
                Self::accumulate(grads, *b, g * &self.nodes[*a].value);
            }
            Op::MatMul(a, b) => {
                let ga = g.dot(&self.nodes[*b].value.t());
                let gb = self.nodes[*a].value.t().dot(g);
                Self::accumulate(grads, *a, ga);
                Self::accumulate(grads, *b, gb);
            }
            Op::Transpose(a) => {
                Self::accumulate(grads, *a, g.t().to_owned());
            }
            Op::Affine { x, scale, .. } => {
                Self::accumulate(grads, *x, g * *scale);
            }
            Op::Relu(x) => {
                let mask = self.nodes[*x].value.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                Self::accumulate(grads, *x, g * &mask);
            }
            Op::Sigmoid(x) => {
                let out = &self.nodes[id].value;
                Self::accumulate(grads, *x, g * &(out * &(1.0 - out)));
            }
            Op::Tanh(x) => {
                let out = &self.nodes[id].value;
                Self::accumulate(grads, *x, g * &(1.0 - out * out));
            }
            Op::Exp(x) => {
                Self::accumulate(grads, *x, g * &self.nodes[id].value);
            }
            Op::Log(x) => {
                Self::accumulate(grads, *x, g / &self.nodes[*x].value);
            }
            Op::SoftmaxRows(x) => {
                // ds_i = s_i * (g_i - sum_j g_j s_j) per row
                let out = &self.nodes[id].value;
                let mut dx = g * out;
                for (mut row, orow) in dx.rows_mut().into_iter().zip(out.rows()) {
                    let dot: f64 = row.iter().sum();
                    ndarray::Zip::from(&mut row).and(&orow).for_each(|r, &o| {
                        *r -= dot * o;
                    });
                }
                Self::accumulate(grads, *x, dx);
            }
            Op::RowSum(x) => {
                let (rows, cols) = self.nodes[*x].value.dim();
                let mut dx = Mat::zeros((rows, cols));
                for (mut row, &gv) in dx.rows_mut().into_iter().zip(g.column(0)) {
                    row.fill(gv);
                }
                Self::accumulate(grads, *x, dx);
            }
            Op::ColSum(x) => {
                let (rows, cols) = self.nodes[*x].value.dim();
                let mut dx = Mat::zeros((rows, cols));
                for mut row in dx.rows_mut() {
                    row.assign(&g.row(0));
                }
                Self::accumulate(grads, *x, dx);
            }
            Op::SumAll(x) => {
                let dx = Mat::from_elem(self.nodes[*x].value.dim(), g[(0, 0)]);
                Self::accumulate(grads, *x, dx);
            }
            Op::BroadcastAdd { x, v } => {
                Self::accumulate(grads, *x, g.clone());
                let vdim = self.nodes[*v].value.dim();
                let gv = if vdim.1 == 1 {
                    g.sum_axis(Axis(1))
                        .into_shape_with_order(vdim)
                        .expect("broadcast_add pullback")
                } else {
                    g.sum_axis(Axis(0))
                        .into_shape_with_order(vdim)
                        .expect("broadcast_add pullback")
                };
                Self::accumulate(grads, *v, gv);
            }
            Op::ConcatCols(a, b) => {
                let ca = self.nodes[*a].value.ncols();
                Self::accumulate(grads, *a, g.slice(s![.., ..ca]).to_owned());
                Self::accumulate(grads, *b, g.slice(s![.., ca..]).to_owned());
            }
            Op::SliceCols { x, start } => {
                let mut dx = Mat::zeros(self.nodes[*x].value.dim());
                dx.slice_mut(s![.., *start..*start + g.ncols()]).assign(g);
                Self::accumulate(grads, *x, dx);
            }
            Op::GatherRows { x, idx } => {
                let mut dx = Mat::zeros(self.nodes[*x].value.dim());
                for (r, &i) in idx.iter().enumerate() {
                    let mut row = dx.row_mut(i);
                    row += &g.row(r);
                }
                Self::accumulate(grads, *x, dx);
            }
            Op::MaskedFill { x, mask, .. } => {
                let keep = mask.mapv(|m| if m != 0.0 { 0.0 } else { 1.0 });
                Self::accumulate(grads, *x, g * &keep);
            }
            Op::PadRows { x, .. } => {
                let rows = self.nodes[*x].value.nrows();
                Self::accumulate(grads, *x, g.slice(s![..rows, ..]).to_owned());
            }
            Op::Reshape(x) => {
                let dim = self.nodes[*x].value.dim();
                let dx = g
                    .as_standard_layout()
                    .to_owned()
                    .into_shape_with_order(dim)
                    .expect("reshape pullback");
                Self::accumulate(grads, *x, dx);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn mat(rows: usize, cols: usize, vals: &[f64]) -> Mat {
        Mat::from_shape_vec((rows, cols), vals.to_vec()).unwrap()
    }

    #[test]
    fn relu_forward() {
        let mut t = Tape::new();
        let x = t.constant(mat(1, 2, &[-1.0, 2.0])).unwrap();
        let y = t.relu(x).unwrap();
        assert_eq!(t.value(y), &mat(1, 2, &[0.0, 2.0]));
    }

    #[test]
    fn matmul_identity() {
        let mut t = Tape::new();
        let i = t.constant(Mat::eye(2)).unwrap();
        let x = t.constant(mat(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let y = t.matmul(i, x).unwrap();
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn softmax_symmetric_row() {
        let mut t = Tape::new();
        let x = t.constant(mat(1, 2, &[0.0, 0.0])).unwrap();
        let y = t.softmax_rows(x).unwrap();
        assert_eq!(t.value(y), &mat(1, 2, &[0.5, 0.5]));
    }

    #[test]
    fn backward_of_sum_is_ones() {
        let mut t = Tape::new();
        let w = t.leaf("w", mat(2, 2, &[1.0, -2.0, 0.5, 3.0])).unwrap();
        let s = t.sum_all(w).unwrap();
        let grads = t.backward(s).unwrap();
        assert_eq!(grads["w"], Mat::from_elem((2, 2), 1.0));
    }

    #[test]
    fn backward_relu_subgradient() {
        let mut t = Tape::new();
        let w = t.leaf("w", mat(1, 2, &[-1.0, 3.0])).unwrap();
        let r = t.relu(w).unwrap();
        let s = t.sum_all(r).unwrap();
        let grads = t.backward(s).unwrap();
        assert_eq!(grads["w"], mat(1, 2, &[0.0, 1.0]));
    }

    #[test]
    fn unused_leaf_gets_zero_gradient() {
        let mut t = Tape::new();
        let w = t.leaf("w", mat(1, 1, &[2.0])).unwrap();
        let u = t.leaf("unused", mat(2, 3, &[0.0; 6])).unwrap();
        let _ = u;
        let s = t.sum_all(w).unwrap();
        let grads = t.backward(s).unwrap();
        assert_eq!(grads["unused"], Mat::zeros((2, 3)));
    }

    #[test]
    fn shape_mismatch_reports_op_and_shapes() {
        let mut t = Tape::new();
        let a = t.constant(Mat::zeros((2, 2))).unwrap();
        let b = t.constant(Mat::zeros((3, 2))).unwrap();
        let err = t.add(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("add") && msg.contains("(2, 2)") && msg.contains("(3, 2)"), "{msg}");
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut t = Tape::new();
        let x = t.constant(mat(1, 1, &[1000.0])).unwrap();
        let err = t.exp(x).unwrap_err();
        assert!(matches!(err, MatchError::NonFinite { op: "exp" }));
    }

    #[test]
    fn backward_requires_scalar_output() {
        let mut t = Tape::new();
        let x = t.leaf("x", Mat::zeros((2, 2))).unwrap();
        assert!(t.backward(x).is_err());
    }

    /// Central finite differences on every op reachable through a generic
    /// scalar-valued composite.
    #[test]
    fn finite_difference_every_op() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dims = (3, 4);
        let base: Vec<f64> = (0..dims.0 * dims.1).map(|_| rng.gen_range(-1.5..1.5)).collect();

        // Scalar function exercising each op at least once.
        let eval = |vals: &[f64]| -> f64 {
            let mut t = Tape::new();
            let x = t.leaf("x", mat(dims.0, dims.1, vals)).unwrap();
            let w = t.constant(mat(dims.1, dims.0, &vec![0.3; dims.0 * dims.1])).unwrap();
            let mm = t.matmul(x, w).unwrap(); // 3x3
            let tr = t.transpose(mm).unwrap();
            let sm = t.softmax_rows(tr).unwrap();
            let sg = t.sigmoid(sm).unwrap();
            let th = t.tanh(sg).unwrap();
            let af = t.affine(th, 1.3, -0.2).unwrap();
            let rl = t.relu(af).unwrap();
            let ex = t.exp(rl).unwrap();
            let lg = t.log(ex).unwrap();
            let rs = t.row_sum(lg).unwrap(); // 3x1
            let bs = t.broadcast_add(lg, rs).unwrap();
            let cs = t.col_sum(bs).unwrap(); // 1x3
            let b2 = t.broadcast_add(bs, cs).unwrap();
            let cc = t.concat_cols(b2, lg).unwrap(); // 3x6
            let sl = t.slice_cols(cc, 1, 4).unwrap();
            let gr = t.gather_rows(sl, &[0, 2, 2, 1]).unwrap();
            let mask = Mat::from_shape_fn((4, 4), |(i, j)| ((i + j) % 3 == 0) as u8 as f64);
            let mf = t.masked_fill(gr, &mask, 0.25).unwrap();
            let pr = t.pad_rows(mf, 2).unwrap();
            let a = t.mul(pr, pr).unwrap();
            let b = t.sub(a, pr).unwrap();
            let c = t.add(b, pr).unwrap();
            let s = t.sum_all(c).unwrap();
            t.value(s)[(0, 0)]
        };

        // Analytic gradient.
        let grad = {
            let mut t = Tape::new();
            let x = t.leaf("x", mat(dims.0, dims.1, &base)).unwrap();
            let w = t.constant(mat(dims.1, dims.0, &vec![0.3; dims.0 * dims.1])).unwrap();
            let mm = t.matmul(x, w).unwrap();
            let tr = t.transpose(mm).unwrap();
            let sm = t.softmax_rows(tr).unwrap();
            let sg = t.sigmoid(sm).unwrap();
            let th = t.tanh(sg).unwrap();
            let af = t.affine(th, 1.3, -0.2).unwrap();
            let rl = t.relu(af).unwrap();
            let ex = t.exp(rl).unwrap();
            let lg = t.log(ex).unwrap();
            let rs = t.row_sum(lg).unwrap();
            let bs = t.broadcast_add(lg, rs).unwrap();
            let cs = t.col_sum(bs).unwrap();
            let b2 = t.broadcast_add(bs, cs).unwrap();
            let cc = t.concat_cols(b2, lg).unwrap();
            let sl = t.slice_cols(cc, 1, 4).unwrap();
            let gr = t.gather_rows(sl, &[0, 2, 2, 1]).unwrap();
            let mask = Mat::from_shape_fn((4, 4), |(i, j)| ((i + j) % 3 == 0) as u8 as f64);
            let mf = t.masked_fill(gr, &mask, 0.25).unwrap();
            let pr = t.pad_rows(mf, 2).unwrap();
            let a = t.mul(pr, pr).unwrap();
            let b = t.sub(a, pr).unwrap();
            let c = t.add(b, pr).unwrap();
            let s = t.sum_all(c).unwrap();
            t.backward(s).unwrap().remove("x").unwrap()
        };

        let eps = 1e-5;
        for k in 0..base.len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[k] += eps;
            minus[k] -= eps;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * eps);
            let an = grad.as_slice().unwrap()[k];
            let denom = fd.abs().max(an.abs()).max(1e-4);
            assert!(
                ((fd - an).abs() / denom) < 1e-6,
                "coordinate {k}: fd {fd} vs analytic {an}"
            );
        }
    }

    #[test]
    fn linearity_of_backward() {
        // grad(a*f + b*g) == a*grad(f) + b*grad(g)
        let x0 = mat(2, 2, &[0.3, -0.7, 1.1, 0.2]);
        let run = |a: f64, b: f64| -> Mat {
            let mut t = Tape::new();
            let x = t.leaf("x", x0.clone()).unwrap();
            let f = {
                let sq = t.mul(x, x).unwrap();
                t.sum_all(sq).unwrap()
            };
            let g = {
                let th = t.tanh(x).unwrap();
                t.sum_all(th).unwrap()
            };
            let fa = t.scale(f, a).unwrap();
            let gb = t.scale(g, b).unwrap();
            let y = t.add(fa, gb).unwrap();
            t.backward(y).unwrap().remove("x").unwrap()
        };
        let combined = run(2.5, -1.25);
        let f_only = run(1.0, 0.0);
        let g_only = run(0.0, 1.0);
        let expected = &f_only * 2.5 + &g_only * -1.25;
        for (c, e) in combined.iter().zip(expected.iter()) {
            assert!((c - e).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_gradients() {
        let run = || -> Vec<u64> {
            let mut t = Tape::new();
            let x = t.leaf("x", array![[0.1, 0.9], [-0.4, 0.3]]).unwrap();
            let s = t.softmax_rows(x).unwrap();
            let y = t.sum_all(s).unwrap();
            let g = t.backward(y).unwrap().remove("x").unwrap();
            g.iter().map(|v| v.to_bits()).collect()
        };
        assert_eq!(run(), run());
    }
}
