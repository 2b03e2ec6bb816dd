//! Computation tape recording forward operations for reverse-mode autodiff.
//!
//! Each operation appends a node holding its output value and enough context
//! to push gradients back to its inputs. Nodes are appended after their
//! inputs, so walking the tape in reverse visits every node after all of its
//! consumers: a single reverse sweep computes all gradients.

use rand::Rng;

use super::{matmul_nt, matmul_raw, matmul_tn, Tensor, TensorError};

/// Lower bound used to clamp predicted probabilities inside the binary
/// cross-entropy loss; the upper bound is `1 - PROB_CLAMP`.
pub const PROB_CLAMP: f64 = 1e-7;

/// Handle to a node on a [`Tape`]. Only valid for the tape that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    MatMul { a: usize, b: usize },
    Add { a: usize, b: usize },
    AddRow { a: usize, b: usize },
    Mul { a: usize, b: usize },
    Scale { a: usize, factor: f64 },
    Transpose { a: usize },
    Relu { a: usize },
    Sigmoid { a: usize },
    SoftmaxRows { a: usize },
    Dropout { a: usize, mask: Vec<f64> },
    RowMaxPool { a: usize, argmax: Vec<usize> },
    RowSumPool { a: usize },
    RowMeanPool { a: usize },
    ConcatCols { parts: Vec<usize> },
    ConcatRows { parts: Vec<usize> },
    FlattenRow { a: usize },
    LayerNorm { x: usize, gain: usize, bias: usize },
    BceLoss { probs: usize, labels: usize },
    L2Penalty { params: Vec<usize>, delta: f64 },
    Sum { a: usize },
}

struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Records a forward computation and replays it in reverse for gradients.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
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

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        let grad = vec![0.0; value.len()];
        self.nodes.push(Node {
            rows,
            cols,
            value,
            grad,
            op,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Enters a tensor onto the tape as an input node. Its `requires_grad`
    /// flag decides whether [`Tape::grad`] reports a gradient for it.
    pub fn leaf(&mut self, t: &Tensor) -> Var {
        let v = self.push(t.rows(), t.cols(), t.data().to_vec(), Op::Leaf);
        self.nodes[v.0].requires_grad = t.requires_grad();
        v
    }

    /// Convenience for constant inputs that never need gradients.
    pub fn constant(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<Var, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::DataLength {
                len: data.len(),
                rows,
                cols,
            });
        }
        Ok(self.push(rows, cols, data, Op::Leaf))
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].grad
    }

    fn dims(&self, v: Var) -> (usize, usize, &[f64]) {
        let n = &self.nodes[v.0];
        (n.rows, n.cols, &n.value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, k, av) = self.dims(a);
        let (k2, n, bv) = self.dims(b);
        if k != k2 {
            return Err(TensorError::DimensionMismatch {
                op: "matmul",
                left: (m, k),
                right: (k2, n),
            });
        }
        let out = matmul_raw(av, bv, m, k, n);
        Ok(self.push(m, n, out, Op::MatMul { a: a.0, b: b.0 }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, n, av) = self.dims(a);
        let (m2, n2, bv) = self.dims(b);
        if (m, n) != (m2, n2) {
            return Err(TensorError::DimensionMismatch {
                op: "add",
                left: (m, n),
                right: (m2, n2),
            });
        }
        let out: Vec<f64> = av.iter().zip(bv).map(|(x, y)| x + y).collect();
        Ok(self.push(m, n, out, Op::Add { a: a.0, b: b.0 }))
    }

    /// Adds a 1 x n row vector to every row of an m x n matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, TensorError> {
        let (m, n, av) = self.dims(a);
        let (rm, rn, rv) = self.dims(row);
        if rm != 1 || rn != n {
            return Err(TensorError::DimensionMismatch {
                op: "add_row",
                left: (m, n),
                right: (rm, rn),
            });
        }
        let mut out = av.to_vec();
        for r in out.chunks_mut(n) {
            for (o, &b) in r.iter_mut().zip(rv) {
                *o += b;
            }
        }
        Ok(self.push(m, n, out, Op::AddRow { a: a.0, b: row.0 }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (m, n, av) = self.dims(a);
        let (m2, n2, bv) = self.dims(b);
        if (m, n) != (m2, n2) {
            return Err(TensorError::DimensionMismatch {
                op: "mul",
                left: (m, n),
                right: (m2, n2),
            });
        }
        let out: Vec<f64> = av.iter().zip(bv).map(|(x, y)| x * y).collect();
        Ok(self.push(m, n, out, Op::Mul { a: a.0, b: b.0 }))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let (m, n, av) = self.dims(a);
        let out: Vec<f64> = av.iter().map(|x| x * factor).collect();
        self.push(m, n, out, Op::Scale { a: a.0, factor })
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let (m, n, av) = self.dims(a);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = av[i * n + j];
            }
        }
        self.push(n, m, out, Op::Transpose { a: a.0 })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let (m, n, av) = self.dims(a);
        let out: Vec<f64> = av.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
        self.push(m, n, out, Op::Relu { a: a.0 })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let (m, n, av) = self.dims(a);
        let out: Vec<f64> = av.iter().map(|&x| 1.0 / (1.0 + (-x).exp())).collect();
        self.push(m, n, out, Op::Sigmoid { a: a.0 })
    }

    /// Row-wise softmax with max subtraction, so large but equal logits do
    /// not overflow.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let (m, n, av) = self.dims(a);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &av[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let dst = &mut out[i * n..(i + 1) * n];
            let mut total = 0.0;
            for (d, &x) in dst.iter_mut().zip(row) {
                *d = (x - max).exp();
                total += *d;
            }
            for d in dst.iter_mut() {
                *d /= total;
            }
        }
        self.push(m, n, out, Op::SoftmaxRows { a: a.0 })
    }

    /// Inverted dropout: in training mode each entry is dropped with
    /// probability `rate` and survivors are scaled by 1/(1-rate), so the
    /// expected value of the output matches the input. In evaluation mode
    /// the input passes through exactly.
    pub fn dropout<R: Rng>(
        &mut self,
        a: Var,
        rate: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var, TensorError> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::Parameter {
                name: "dropout rate",
                value: rate,
                requirement: "0 <= rate < 1",
            });
        }
        let (m, n, av) = self.dims(a);
        let mask: Vec<f64> = if training && rate > 0.0 {
            let keep = 1.0 / (1.0 - rate);
            (0..m * n)
                .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                .collect()
        } else {
            vec![1.0; m * n]
        };
        let out: Vec<f64> = av.iter().zip(&mask).map(|(x, k)| x * k).collect();
        Ok(self.push(m, n, out, Op::Dropout { a: a.0, mask }))
    }

    /// Column-wise maximum over rows, producing a 1 x n row. The index of
    /// the first maximal row per column receives the full gradient.
    pub fn row_max_pool(&mut self, a: Var) -> Result<Var, TensorError> {
        let (m, n, av) = self.dims(a);
        if m == 0 {
            return Err(TensorError::Empty { op: "row_max_pool" });
        }
        let mut out = av[..n].to_vec();
        let mut argmax = vec![0usize; n];
        for i in 1..m {
            for j in 0..n {
                let x = av[i * n + j];
                if x > out[j] {
                    out[j] = x;
                    argmax[j] = i;
                }
            }
        }
        Ok(self.push(1, n, out, Op::RowMaxPool { a: a.0, argmax }))
    }

    /// Column-wise sum over rows, producing a 1 x n row.
    pub fn row_sum_pool(&mut self, a: Var) -> Result<Var, TensorError> {
        let (m, n, av) = self.dims(a);
        if m == 0 {
            return Err(TensorError::Empty { op: "row_sum_pool" });
        }
        let mut out = vec![0.0; n];
        for row in av.chunks(n) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x;
            }
        }
        Ok(self.push(1, n, out, Op::RowSumPool { a: a.0 }))
    }

    /// Column-wise mean over rows, producing a 1 x n row.
    pub fn row_mean_pool(&mut self, a: Var) -> Result<Var, TensorError> {
        let (m, n, av) = self.dims(a);
        if m == 0 {
            return Err(TensorError::Empty { op: "row_mean_pool" });
        }
        let inv = 1.0 / m as f64;
        let mut out = vec![0.0; n];
        for row in av.chunks(n) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x * inv;
            }
        }
        Ok(self.push(1, n, out, Op::RowMeanPool { a: a.0 }))
    }

    /// Horizontal concatenation; every part must have the same row count.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::Empty { op: "concat_cols" });
        }
        let (m, _, _) = self.dims(parts[0]);
        let mut total = 0;
        for &p in parts {
            let (pm, pn, _) = self.dims(p);
            if pm != m {
                return Err(TensorError::DimensionMismatch {
                    op: "concat_cols",
                    left: self.shape(parts[0]),
                    right: (pm, pn),
                });
            }
            total += pn;
        }
        let mut out = vec![0.0; m * total];
        let mut offset = 0;
        for &p in parts {
            let (_, pn, pv) = self.dims(p);
            for i in 0..m {
                out[i * total + offset..i * total + offset + pn]
                    .copy_from_slice(&pv[i * pn..(i + 1) * pn]);
            }
            offset += pn;
        }
        Ok(self.push(
            m,
            total,
            out,
            Op::ConcatCols {
                parts: parts.iter().map(|p| p.0).collect(),
            },
        ))
    }

    /// Vertical concatenation; every part must have the same column count.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        if parts.is_empty() {
            return Err(TensorError::Empty { op: "concat_rows" });
        }
        let (_, n, _) = self.dims(parts[0]);
        let mut total = 0;
        let mut out = Vec::new();
        for &p in parts {
            let (pm, pn, pv) = self.dims(p);
            if pn != n {
                return Err(TensorError::DimensionMismatch {
                    op: "concat_rows",
                    left: self.shape(parts[0]),
                    right: (pm, pn),
                });
            }
            total += pm;
            out.extend_from_slice(pv);
        }
        Ok(self.push(
            total,
            n,
            out,
            Op::ConcatRows {
                parts: parts.iter().map(|p| p.0).collect(),
            },
        ))
    }

    /// Reshapes an m x n matrix into a single row of length m*n, keeping
    /// row-major order.
    pub fn flatten_row(&mut self, a: Var) -> Var {
        let (m, n, av) = self.dims(a);
        let out = av.to_vec();
        self.push(1, m * n, out, Op::FlattenRow { a: a.0 })
    }

    /// Layer normalization over each row: the row is standardized to zero
    /// mean and unit variance, then rescaled by `gain` and shifted by
    /// `bias` (both 1 x n).
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Result<Var, TensorError> {
        const EPS: f64 = 1e-5;
        let (m, n, xv) = self.dims(x);
        let (gm, gn, gv) = self.dims(gain);
        let (bm, bn, bv) = self.dims(bias);
        if gm != 1 || gn != n {
            return Err(TensorError::DimensionMismatch {
                op: "layer_norm gain",
                left: (m, n),
                right: (gm, gn),
            });
        }
        if bm != 1 || bn != n {
            return Err(TensorError::DimensionMismatch {
                op: "layer_norm bias",
                left: (m, n),
                right: (bm, bn),
            });
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &xv[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv_std = 1.0 / (var + EPS).sqrt();
            let dst = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                dst[j] = (row[j] - mean) * inv_std * gv[j] + bv[j];
            }
        }
        Ok(self.push(
            m,
            n,
            out,
            Op::LayerNorm {
                x: x.0,
                gain: gain.0,
                bias: bias.0,
            },
        ))
    }

    /// Mean binary cross-entropy between predicted probabilities and 0/1
    /// labels, both column vectors. Probabilities are clamped away from 0
    /// and 1 before the logs, and clamped entries receive zero gradient.
    pub fn bce_loss(&mut self, probs: Var, labels: Var) -> Result<Var, TensorError> {
        let (m, n, pv) = self.dims(probs);
        let (lm, ln, lv) = self.dims(labels);
        if n != 1 || ln != 1 || m != lm {
            return Err(TensorError::DimensionMismatch {
                op: "bce_loss",
                left: (m, n),
                right: (lm, ln),
            });
        }
        if m == 0 {
            return Err(TensorError::Empty { op: "bce_loss" });
        }
        for (row, &y) in lv.iter().enumerate() {
            if y != 0.0 && y != 1.0 {
                return Err(TensorError::InvalidLabel { value: y, row });
            }
        }
        let mut total = 0.0;
        for (&p, &y) in pv.iter().zip(lv) {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        }
        let loss = total / m as f64;
        Ok(self.push(
            1,
            1,
            vec![loss],
            Op::BceLoss {
                probs: probs.0,
                labels: labels.0,
            },
        ))
    }

    /// Scaled squared-norm penalty over a set of parameter tensors:
    /// (2 / delta) * sum of squares of every entry.
    pub fn l2_penalty(&mut self, params: &[Var], delta: f64) -> Result<Var, TensorError> {
        if delta <= 0.0 {
            return Err(TensorError::Parameter {
                name: "delta",
                value: delta,
                requirement: "delta > 0",
            });
        }
        let mut total = 0.0;
        for &p in params {
            let (_, _, pv) = self.dims(p);
            total += pv.iter().map(|&x| x * x).sum::<f64>();
        }
        let value = 2.0 / delta * total;
        Ok(self.push(
            1,
            1,
            vec![value],
            Op::L2Penalty {
                params: params.iter().map(|p| p.0).collect(),
                delta,
            },
        ))
    }

    /// Sum of all entries, producing a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let (_, _, av) = self.dims(a);
        let total: f64 = av.iter().sum();
        self.push(1, 1, vec![total], Op::Sum { a: a.0 })
    }

    /// Propagates gradients from a scalar loss back to every node.
    /// Gradients accumulate across calls; leaves are not zeroed here.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let (m, n) = self.shape(loss);
        if (m, n) != (1, 1) {
            return Err(TensorError::NotScalar {
                what: "backward loss",
                rows: m,
                cols: n,
            });
        }
        // Each call is a fresh sweep: interior gradients are scratch space,
        // while leaf gradients persist so repeated calls accumulate.
        for node in &mut self.nodes {
            if !matches!(node.op, Op::Leaf) {
                node.grad.iter_mut().for_each(|g| *g = 0.0);
            }
        }
        self.nodes[loss.0].grad[0] += 1.0;
        for idx in (0..=loss.0).rev() {
            self.propagate(idx);
        }
        Ok(())
    }

    fn add_grad(&mut self, node: usize, delta: &[f64]) {
        let g = &mut self.nodes[node].grad;
        debug_assert_eq!(g.len(), delta.len());
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }

    fn propagate(&mut self, idx: usize) {
        // A node no gradient reached contributes nothing to its inputs.
        if self.nodes[idx].grad.iter().all(|&g| g == 0.0) {
            return;
        }
        let (rows, cols) = (self.nodes[idx].rows, self.nodes[idx].cols);
        match &self.nodes[idx].op {
            Op::Leaf => {}
            Op::MatMul { a, b } => {
                let (a, b) = (*a, *b);
                let g = self.nodes[idx].grad.clone();
                let (am, ak) = (self.nodes[a].rows, self.nodes[a].cols);
                let bn = self.nodes[b].cols;
                let da = matmul_nt(&g, &self.nodes[b].value, am, bn, ak);
                let db = matmul_tn(&self.nodes[a].value, &g, am, ak, bn);
                self.add_grad(a, &da);
                self.add_grad(b, &db);
            }
            Op::Add { a, b } => {
                let (a, b) = (*a, *b);
                let g = self.nodes[idx].grad.clone();
                self.add_grad(a, &g);
                self.add_grad(b, &g);
            }
            Op::AddRow { a, b } => {
                let (a, b) = (*a, *b);
                let g = self.nodes[idx].grad.clone();
                self.add_grad(a, &g);
                let mut db = vec![0.0; cols];
                for row in g.chunks(cols) {
                    for (d, &gi) in db.iter_mut().zip(row) {
                        *d += gi;
                    }
                }
                self.add_grad(b, &db);
            }
            Op::Mul { a, b } => {
                let (a, b) = (*a, *b);
                let g = self.nodes[idx].grad.clone();
                let da: Vec<f64> = g
                    .iter()
                    .zip(&self.nodes[b].value)
                    .map(|(gi, bv)| gi * bv)
                    .collect();
                let db: Vec<f64> = g
                    .iter()
                    .zip(&self.nodes[a].value)
                    .map(|(gi, av)| gi * av)
                    .collect();
                self.add_grad(a, &da);
                self.add_grad(b, &db);
            }
            Op::Scale { a, factor } => {
                let (a, factor) = (*a, *factor);
                let da: Vec<f64> = self.nodes[idx].grad.iter().map(|g| g * factor).collect();
                self.add_grad(a, &da);
            }
            Op::Transpose { a } => {
                let a = *a;
                let g = &self.nodes[idx].grad;
                let mut da = vec![0.0; g.len()];
                for i in 0..rows {
                    for j in 0..cols {
                        da[j * rows + i] = g[i * cols + j];
                    }
                }
                self.add_grad(a, &da);
            }
            Op::Relu { a } => {
                let a = *a;
                let da: Vec<f64> = self.nodes[idx]
                    .grad
                    .iter()
                    .zip(&self.nodes[a].value)
                    .map(|(g, &x)| if x > 0.0 { *g } else { 0.0 })
                    .collect();
                self.add_grad(a, &da);
            }
            Op::Sigmoid { a } => {
                let a = *a;
                let da: Vec<f64> = self.nodes[idx]
                    .grad
                    .iter()
                    .zip(&self.nodes[idx].value)
                    .map(|(g, &s)| g * s * (1.0 - s))
                    .collect();
                self.add_grad(a, &da);
            }
            Op::SoftmaxRows { a } => {
                let a = *a;
                let g = &self.nodes[idx].grad;
                let s = &self.nodes[idx].value;
                let mut da = vec![0.0; g.len()];
                for i in 0..rows {
                    let gr = &g[i * cols..(i + 1) * cols];
                    let sr = &s[i * cols..(i + 1) * cols];
                    let dot: f64 = gr.iter().zip(sr).map(|(gi, si)| gi * si).sum();
                    let dst = &mut da[i * cols..(i + 1) * cols];
                    for j in 0..cols {
                        dst[j] = sr[j] * (gr[j] - dot);
                    }
                }
                self.add_grad(a, &da);
            }
            Op::Dropout { a, mask } => {
                let a = *a;
                let da: Vec<f64> = self.nodes[idx]
                    .grad
                    .iter()
                    .zip(mask)
                    .map(|(g, k)| g * k)
                    .collect();
                self.add_grad(a, &da);
            }
            Op::RowMaxPool { a, argmax } => {
                let a = *a;
                let acols = self.nodes[a].cols;
                let mut da = vec![0.0; self.nodes[a].value.len()];
                for (j, (&i, &g)) in argmax.iter().zip(&self.nodes[idx].grad).enumerate() {
                    da[i * acols + j] += g;
                }
                self.add_grad(a, &da);
            }
            Op::RowSumPool { a } => {
                let a = *a;
                let g = self.nodes[idx].grad.clone();
                let arows = self.nodes[a].rows;
                let mut da = Vec::with_capacity(arows * cols);
                for _ in 0..arows {
                    da.extend_from_slice(&g);
                }
                self.add_grad(a, &da);
            }
            Op::RowMeanPool { a } => {
                let a = *a;
                let arows = self.nodes[a].rows;
                let inv = 1.0 / arows as f64;
                let g: Vec<f64> = self.nodes[idx].grad.iter().map(|v| v * inv).collect();
                let mut da = Vec::with_capacity(arows * cols);
                for _ in 0..arows {
                    da.extend_from_slice(&g);
                }
                self.add_grad(a, &da);
            }
            Op::ConcatCols { parts } => {
                let parts = parts.clone();
                let g = self.nodes[idx].grad.clone();
                let mut offset = 0;
                for p in parts {
                    let pn = self.nodes[p].cols;
                    let pm = self.nodes[p].rows;
                    let mut dp = vec![0.0; pm * pn];
                    for i in 0..pm {
                        dp[i * pn..(i + 1) * pn]
                            .copy_from_slice(&g[i * cols + offset..i * cols + offset + pn]);
                    }
                    self.add_grad(p, &dp);
                    offset += pn;
                }
            }
            Op::ConcatRows { parts } => {
                let parts = parts.clone();
                let g = self.nodes[idx].grad.clone();
                let mut offset = 0;
                for p in parts {
                    let pm = self.nodes[p].rows;
                    let dp = g[offset * cols..(offset + pm) * cols].to_vec();
                    self.add_grad(p, &dp);
                    offset += pm;
                }
            }
            Op::FlattenRow { a } => {
                let a = *a;
                let da = self.nodes[idx].grad.clone();
                self.add_grad(a, &da);
            }
            Op::LayerNorm { x, gain, bias } => {
                const EPS: f64 = 1e-5;
                let (x, gain, bias) = (*x, *gain, *bias);
                let g = self.nodes[idx].grad.clone();
                let xv = &self.nodes[x].value;
                let gv = self.nodes[gain].value.clone();
                let n = cols as f64;
                let mut dx = vec![0.0; xv.len()];
                let mut dgain = vec![0.0; cols];
                let mut dbias = vec![0.0; cols];
                for i in 0..rows {
                    let row = &xv[i * cols..(i + 1) * cols];
                    let gr = &g[i * cols..(i + 1) * cols];
                    let mean = row.iter().sum::<f64>() / n;
                    let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
                    let inv_std = 1.0 / (var + EPS).sqrt();
                    let xhat: Vec<f64> = row.iter().map(|&v| (v - mean) * inv_std).collect();
                    for j in 0..cols {
                        dgain[j] += gr[j] * xhat[j];
                        dbias[j] += gr[j];
                    }
                    // dL/dxhat_j = g_j * gain_j; fold the mean and variance
                    // paths into the standard closed form.
                    let dxhat: Vec<f64> = gr.iter().zip(&gv).map(|(gi, gj)| gi * gj).collect();
                    let sum_dxhat: f64 = dxhat.iter().sum();
                    let sum_dxhat_xhat: f64 =
                        dxhat.iter().zip(&xhat).map(|(d, h)| d * h).sum();
                    let dst = &mut dx[i * cols..(i + 1) * cols];
                    for j in 0..cols {
                        dst[j] = inv_std / n
                            * (n * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
                    }
                }
                self.add_grad(x, &dx);
                self.add_grad(gain, &dgain);
                self.add_grad(bias, &dbias);
            }
            Op::BceLoss { probs, labels } => {
                let (probs, labels) = (*probs, *labels);
                let g = self.nodes[idx].grad[0];
                let m = self.nodes[probs].rows as f64;
                let pv = &self.nodes[probs].value;
                let lv = &self.nodes[labels].value;
                let dp: Vec<f64> = pv
                    .iter()
                    .zip(lv)
                    .map(|(&p, &y)| {
                        if p < PROB_CLAMP || p > 1.0 - PROB_CLAMP {
                            0.0
                        } else {
                            g * (p - y) / (p * (1.0 - p)) / m
                        }
                    })
                    .collect();
                self.add_grad(probs, &dp);
            }
            Op::L2Penalty { params, delta } => {
                let params = params.clone();
                let coeff = 4.0 / delta * self.nodes[idx].grad[0];
                for p in params {
                    let dp: Vec<f64> = self.nodes[p].value.iter().map(|&x| coeff * x).collect();
                    self.add_grad(p, &dp);
                }
            }
            Op::Sum { a } => {
                let a = *a;
                let g = self.nodes[idx].grad[0];
                let da = vec![g; self.nodes[a].value.len()];
                self.add_grad(a, &da);
            }
        }
    }

    /// Copies accumulated gradients back into the leaf tensors handed to
    /// [`Tape::leaf`], in the order given. Leaves without `requires_grad`
    /// are skipped.
    pub fn harvest_into(&self, pairs: &mut [(Var, &mut Tensor)]) {
        for (var, tensor) in pairs.iter_mut() {
            if tensor.requires_grad() {
                tensor.accumulate_grad(&self.nodes[var.0].grad);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tensor(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::new(rows, cols, data.to_vec()).unwrap()
    }

    /// Central-difference gradient of `f` with respect to `x`, used as the
    /// oracle for every backward rule below.
    fn numeric_grad<F>(x: &Tensor, mut f: F) -> Vec<f64>
    where
        F: FnMut(&Tensor) -> f64,
    {
        let h = 1e-5;
        let mut grads = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus.data_mut()[i] += h;
            let mut minus = x.clone();
            minus.data_mut()[i] -= h;
            grads.push((f(&plus) - f(&minus)) / (2.0 * h));
        }
        grads
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!(
                (a - e).abs() <= tol,
                "index {i}: {a} vs {e} (tol {tol})"
            );
        }
    }

    #[test]
    fn matmul_matches_hand_result() {
        let mut tape = Tape::new();
        let a = tape.leaf(&tensor(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let b = tape.leaf(&tensor(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]));
        let c = tape.matmul(a, b).unwrap();
        assert_eq!(tape.shape(c), (2, 2));
        assert_eq!(tape.value(c), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn matmul_rejects_inner_mismatch() {
        let mut tape = Tape::new();
        let a = tape.leaf(&tensor(2, 3, &[0.0; 6]));
        let b = tape.leaf(&tensor(2, 2, &[0.0; 4]));
        assert!(matches!(
            tape.matmul(a, b),
            Err(TensorError::DimensionMismatch { op: "matmul", .. })
        ));
    }

    #[test]
    fn matmul_gradient_matches_finite_differences() {
        let a0 = tensor(2, 3, &[0.5, -1.2, 2.0, 0.3, 1.1, -0.7]);
        let b0 = tensor(3, 2, &[1.5, -0.4, 0.2, 0.9, -1.1, 0.6]);

        let mut tape = Tape::new();
        let a = tape.leaf(&a0.clone().with_grad());
        let b = tape.leaf(&b0.clone().with_grad());
        let c = tape.matmul(a, b).unwrap();
        let loss = tape.sum(c);
        tape.backward(loss).unwrap();

        let fd_a = numeric_grad(&a0, |x| {
            let mut t = Tape::new();
            let a = t.leaf(x);
            let b = t.leaf(&b0);
            let c = t.matmul(a, b).unwrap();
            let s = t.sum(c);
            t.value(s)[0]
        });
        let fd_b = numeric_grad(&b0, |x| {
            let mut t = Tape::new();
            let a = t.leaf(&a0);
            let b = t.leaf(x);
            let c = t.matmul(a, b).unwrap();
            let s = t.sum(c);
            t.value(s)[0]
        });
        assert_close(tape.grad(a), &fd_a, 1e-6);
        assert_close(tape.grad(b), &fd_b, 1e-6);
    }

    #[test]
    fn relu_zeroes_negatives_and_gates_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 4, &[-2.0, -0.5, 0.5, 3.0]));
        let y = tape.relu(x);
        assert_eq!(tape.value(y), &[0.0, 0.0, 0.5, 3.0]);
        let loss = tape.sum(y);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn sigmoid_gradient_matches_finite_differences() {
        let x0 = tensor(1, 3, &[-1.5, 0.2, 2.7]);
        let mut tape = Tape::new();
        let x = tape.leaf(&x0);
        let y = tape.sigmoid(x);
        let loss = tape.sum(y);
        tape.backward(loss).unwrap();
        let fd = numeric_grad(&x0, |t| {
            let mut tp = Tape::new();
            let x = tp.leaf(t);
            let y = tp.sigmoid(x);
            let s = tp.sum(y);
            tp.value(s)[0]
        });
        assert_close(tape.grad(x), &fd, 1e-6);
    }

    #[test]
    fn softmax_rows_sum_to_one_and_survive_large_inputs() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 2, &[1000.0, 1000.5]));
        let y = tape.softmax_rows(x);
        let v = tape.value(y);
        assert!(v.iter().all(|p| p.is_finite()));
        assert!((v[0] + v[1] - 1.0).abs() < 1e-12);
        assert!(v[1] > v[0]);
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        let x0 = tensor(2, 3, &[0.1, -0.4, 1.2, 2.0, 0.0, -1.0]);
        let w = tensor(2, 3, &[0.3, 1.0, -0.5, 0.8, -1.2, 0.4]);
        let mut tape = Tape::new();
        let x = tape.leaf(&x0);
        let wv = tape.leaf(&w);
        let y = tape.softmax_rows(x);
        let p = tape.mul(y, wv).unwrap();
        let loss = tape.sum(p);
        tape.backward(loss).unwrap();
        let fd = numeric_grad(&x0, |t| {
            let mut tp = Tape::new();
            let x = tp.leaf(t);
            let wv = tp.leaf(&w);
            let y = tp.softmax_rows(x);
            let p = tp.mul(y, wv).unwrap();
            let s = tp.sum(p);
            tp.value(s)[0]
        });
        assert_close(tape.grad(x), &fd, 1e-6);
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 4, &[1.0, -2.0, 3.0, -4.0]));
        let y = tape.dropout(x, 0.0, true, &mut rng).unwrap();
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn dropout_eval_mode_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 4, &[1.0, -2.0, 3.0, -4.0]));
        let y = tape.dropout(x, 0.9, false, &mut rng).unwrap();
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn dropout_preserves_mean_in_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let ones = Tensor::new(1, n, vec![1.0; n]).unwrap();
        let mut tape = Tape::new();
        let x = tape.leaf(&ones);
        let y = tape.dropout(x, 0.5, true, &mut rng).unwrap();
        let mean = tape.value(y).iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn dropout_rejects_rate_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 2, &[1.0, 2.0]));
        assert!(tape.dropout(x, 1.0, true, &mut rng).is_err());
    }

    #[test]
    fn dropout_gradient_uses_recorded_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0 = tensor(1, 8, &[1.0; 8]);
        let mut tape = Tape::new();
        let x = tape.leaf(&x0);
        let y = tape.dropout(x, 0.5, true, &mut rng).unwrap();
        let loss = tape.sum(y);
        tape.backward(loss).unwrap();
        // Gradient must equal the realized mask: 2.0 where kept, 0 where dropped.
        assert_eq!(tape.grad(x), tape.value(y));
    }

    #[test]
    fn row_max_pool_takes_columnwise_maxima() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(2, 2, &[1.0, 5.0, 3.0, 2.0]));
        let y = tape.row_max_pool(x).unwrap();
        assert_eq!(tape.value(y), &[3.0, 5.0]);
        let loss = tape.sum(y);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn row_pools_match_finite_differences() {
        let x0 = tensor(3, 2, &[0.5, -1.0, 2.5, 0.1, -0.3, 1.7]);
        for pool in ["sum", "mean"] {
            let run = |t: &Tensor| {
                let mut tp = Tape::new();
                let x = tp.leaf(t);
                let y = match pool {
                    "sum" => tp.row_sum_pool(x).unwrap(),
                    _ => tp.row_mean_pool(x).unwrap(),
                };
                let s = tp.sum(y);
                (tp, x, s)
            };
            let (mut tape, x, s) = run(&x0);
            tape.backward(s).unwrap();
            let fd = numeric_grad(&x0, |t| {
                let (tp, _, s) = run(t);
                tp.value(s)[0]
            });
            assert_close(tape.grad(x), &fd, 1e-6);
        }
    }

    #[test]
    fn concat_cols_joins_and_routes_gradients() {
        let mut tape = Tape::new();
        let a = tape.leaf(&tensor(1, 2, &[1.0, 2.0]));
        let b = tape.leaf(&tensor(1, 1, &[3.0]));
        let c = tape.concat_cols(&[a, b]).unwrap();
        assert_eq!(tape.value(c), &[1.0, 2.0, 3.0]);
        let w = tape.leaf(&tensor(1, 3, &[10.0, 20.0, 30.0]));
        let p = tape.mul(c, w).unwrap();
        let loss = tape.sum(p);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a), &[10.0, 20.0]);
        assert_eq!(tape.grad(b), &[30.0]);
    }

    #[test]
    fn concat_cols_rejects_row_mismatch() {
        let mut tape = Tape::new();
        let a = tape.leaf(&tensor(2, 2, &[0.0; 4]));
        let b = tape.leaf(&tensor(1, 2, &[0.0; 2]));
        assert!(tape.concat_cols(&[a, b]).is_err());
    }

    #[test]
    fn concat_rows_stacks_vertically() {
        let mut tape = Tape::new();
        let a = tape.leaf(&tensor(1, 2, &[1.0, 2.0]));
        let b = tape.leaf(&tensor(2, 2, &[3.0, 4.0, 5.0, 6.0]));
        let c = tape.concat_rows(&[a, b]).unwrap();
        assert_eq!(tape.shape(c), (3, 2));
        assert_eq!(tape.value(c), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn flatten_row_keeps_row_major_order() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        let y = tape.flatten_row(x);
        assert_eq!(tape.shape(y), (1, 4));
        assert_eq!(tape.value(y), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn layer_norm_standardizes_rows() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 4, &[1.0, 2.0, 3.0, 4.0]));
        let gain = tape.leaf(&tensor(1, 4, &[1.0; 4]));
        let bias = tape.leaf(&tensor(1, 4, &[0.0; 4]));
        let y = tape.layer_norm(x, gain, bias).unwrap();
        let v = tape.value(y);
        let mean: f64 = v.iter().sum::<f64>() / 4.0;
        let var: f64 = v.iter().map(|&a| (a - mean) * (a - mean)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    fn layer_norm_constant_row_maps_to_bias() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 3, &[5.0, 5.0, 5.0]));
        let gain = tape.leaf(&tensor(1, 3, &[2.0; 3]));
        let bias = tape.leaf(&tensor(1, 3, &[0.5, -0.5, 0.0]));
        let y = tape.layer_norm(x, gain, bias).unwrap();
        assert_close(tape.value(y), &[0.5, -0.5, 0.0], 1e-12);
    }

    #[test]
    fn layer_norm_gradient_matches_finite_differences() {
        let x0 = tensor(2, 4, &[0.3, -1.1, 2.2, 0.7, 1.5, -0.2, 0.9, -1.8]);
        let gain0 = tensor(1, 4, &[1.2, 0.8, -0.5, 1.0]);
        let bias0 = tensor(1, 4, &[0.1, -0.2, 0.3, 0.0]);
        let w = tensor(2, 4, &[0.5, -1.0, 0.7, 0.2, -0.6, 1.1, 0.4, -0.9]);

        let eval = |x: &Tensor, gain: &Tensor, bias: &Tensor| {
            let mut tp = Tape::new();
            let xv = tp.leaf(x);
            let gv = tp.leaf(gain);
            let bv = tp.leaf(bias);
            let y = tp.layer_norm(xv, gv, bv).unwrap();
            let wv = tp.leaf(&w);
            let p = tp.mul(y, wv).unwrap();
            let s = tp.sum(p);
            (tp, xv, gv, bv, s)
        };

        let (mut tape, xv, gv, bv, s) = eval(&x0, &gain0, &bias0);
        tape.backward(s).unwrap();

        let fd_x = numeric_grad(&x0, |t| {
            let (tp, _, _, _, s) = eval(t, &gain0, &bias0);
            tp.value(s)[0]
        });
        let fd_gain = numeric_grad(&gain0, |t| {
            let (tp, _, _, _, s) = eval(&x0, t, &bias0);
            tp.value(s)[0]
        });
        let fd_bias = numeric_grad(&bias0, |t| {
            let (tp, _, _, _, s) = eval(&x0, &gain0, t);
            tp.value(s)[0]
        });
        assert_close(tape.grad(xv), &fd_x, 1e-5);
        assert_close(tape.grad(gv), &fd_gain, 1e-6);
        assert_close(tape.grad(bv), &fd_bias, 1e-6);
    }

    #[test]
    fn bce_loss_matches_hand_values() {
        let mut tape = Tape::new();
        let p = tape.leaf(&Tensor::column(&[0.5]));
        let y = tape.leaf(&Tensor::column(&[1.0]));
        let loss = tape.bce_loss(p, y).unwrap();
        assert!((tape.value(loss)[0] - 0.6931471805599453).abs() < 1e-15);

        let mut tape = Tape::new();
        let p = tape.leaf(&Tensor::column(&[0.9]));
        let y = tape.leaf(&Tensor::column(&[1.0]));
        let loss = tape.bce_loss(p, y).unwrap();
        assert!((tape.value(loss)[0] - 0.10536051565782628).abs() < 1e-15);
    }

    #[test]
    fn bce_loss_clamps_extreme_probabilities() {
        let mut tape = Tape::new();
        let p = tape.leaf(&Tensor::column(&[0.0, 1.0]));
        let y = tape.leaf(&Tensor::column(&[1.0, 0.0]));
        let loss = tape.bce_loss(p, y).unwrap();
        let v = tape.value(loss)[0];
        assert!(v.is_finite());
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(p), &[0.0, 0.0]);
    }

    #[test]
    fn bce_loss_rejects_fractional_labels() {
        let mut tape = Tape::new();
        let p = tape.leaf(&Tensor::column(&[0.5]));
        let y = tape.leaf(&Tensor::column(&[0.5]));
        assert!(matches!(
            tape.bce_loss(p, y),
            Err(TensorError::InvalidLabel { row: 0, .. })
        ));
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let p0 = Tensor::column(&[0.2, 0.7, 0.45, 0.9]);
        let y0 = Tensor::column(&[0.0, 1.0, 1.0, 0.0]);
        let mut tape = Tape::new();
        let p = tape.leaf(&p0);
        let y = tape.leaf(&y0);
        let loss = tape.bce_loss(p, y).unwrap();
        tape.backward(loss).unwrap();
        let fd = numeric_grad(&p0, |t| {
            let mut tp = Tape::new();
            let p = tp.leaf(t);
            let y = tp.leaf(&y0);
            let l = tp.bce_loss(p, y).unwrap();
            tp.value(l)[0]
        });
        assert_close(tape.grad(p), &fd, 1e-6);
    }

    #[test]
    fn l2_penalty_matches_closed_form() {
        // Single weight of 3.0 with delta = 2: (2/2) * 9 = 9, gradient (4/2)*3 = 6.
        let mut tape = Tape::new();
        let w = tape.leaf(&Tensor::scalar(3.0));
        let pen = tape.l2_penalty(&[w], 2.0).unwrap();
        assert_eq!(tape.value(pen), &[9.0]);
        tape.backward(pen).unwrap();
        assert_eq!(tape.grad(w), &[6.0]);
    }

    #[test]
    fn l2_penalty_rejects_nonpositive_delta() {
        let mut tape = Tape::new();
        let w = tape.leaf(&Tensor::scalar(1.0));
        assert!(tape.l2_penalty(&[w], 0.0).is_err());
        assert!(tape.l2_penalty(&[w], -1.0).is_err());
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf(&tensor(1, 2, &[1.0, 2.0]));
        assert!(matches!(
            tape.backward(x),
            Err(TensorError::NotScalar { .. })
        ));
    }

    #[test]
    fn backward_of_square_gives_two_x() {
        // d/dx sum(x*x) = 2x; at x = 3 the gradient is 6.
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::scalar(3.0));
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum(sq);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[6.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let mut tape = Tape::new();
        let x = tape.leaf(&Tensor::scalar(3.0));
        let sq = tape.mul(x, x).unwrap();
        let loss = tape.sum(sq);
        tape.backward(loss).unwrap();
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x), &[12.0]);
    }

    #[test]
    fn add_row_broadcasts_and_sums_gradient() {
        let x0 = tensor(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b0 = tensor(1, 2, &[10.0, 20.0]);
        let mut tape = Tape::new();
        let x = tape.leaf(&x0);
        let b = tape.leaf(&b0);
        let y = tape.add_row(x, b).unwrap();
        assert_eq!(tape.value(y), &[11.0, 22.0, 13.0, 24.0, 15.0, 26.0]);
        let loss = tape.sum(y);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(b), &[3.0, 3.0]);
    }

    #[test]
    fn transpose_swaps_shape_and_gradients() {
        let x0 = tensor(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let w = tensor(3, 2, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let mut tape = Tape::new();
        let x = tape.leaf(&x0);
        let xt = tape.transpose(x);
        assert_eq!(tape.shape(xt), (3, 2));
        assert_eq!(tape.value(xt), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let wv = tape.leaf(&w);
        let p = tape.mul(xt, wv).unwrap();
        let loss = tape.sum(p);
        tape.backward(loss).unwrap();
        let fd = numeric_grad(&x0, |t| {
            let mut tp = Tape::new();
            let x = tp.leaf(t);
            let xt = tp.transpose(x);
            let wv = tp.leaf(&w);
            let p = tp.mul(xt, wv).unwrap();
            let s = tp.sum(p);
            tp.value(s)[0]
        });
        assert_close(tape.grad(x), &fd, 1e-6);
    }

    #[test]
    fn chained_network_gradient_matches_finite_differences() {
        // Two-layer perceptron with every broadcast op in play.
        let x0 = tensor(2, 3, &[0.2, -0.8, 1.4, 0.9, 0.0, -1.2]);
        let w1_data: Vec<f64> = (0..12).map(|i| (i as f64 * 0.13).sin()).collect();
        let w1 = Tensor::new(3, 4, w1_data).unwrap();
        let b1 = tensor(1, 4, &[0.1, -0.1, 0.2, 0.0]);
        let w2 = tensor(4, 1, &[0.5, -0.4, 0.3, 0.8]);

        let eval = |w: &Tensor| {
            let mut tp = Tape::new();
            let x = tp.leaf(&x0);
            let w1v = tp.leaf(w);
            let b1v = tp.leaf(&b1);
            let w2v = tp.leaf(&w2);
            let h = tp.matmul(x, w1v).unwrap();
            let h = tp.add_row(h, b1v).unwrap();
            let h = tp.relu(h);
            let o = tp.matmul(h, w2v).unwrap();
            let o = tp.sigmoid(o);
            let s = tp.sum(o);
            (tp, w1v, s)
        };

        let (mut tape, w1v, s) = eval(&w1);
        tape.backward(s).unwrap();
        let fd = numeric_grad(&w1, |t| {
            let (tp, _, s) = eval(t);
            tp.value(s)[0]
        });
        assert_close(tape.grad(w1v), &fd, 1e-6);
    }
}
