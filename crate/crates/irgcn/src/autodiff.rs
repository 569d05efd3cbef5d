//! Reverse-mode differentiation over a closed set of matrix operations.
//!
//! The op set is fixed on purpose: leaf inputs, matrix product,
//! elementwise add / multiply / relu / softplus, column concatenation,
//! row mean, row gather, scalar scale, and total sum are exactly what the
//! encoder, the relation embedder, and every scorer in this crate need.
//! Keeping the set closed keeps the gradient rules small enough to verify
//! exhaustively against finite differences.
//!
//! Expressions live in an arena ([`Graph`]): every node records its
//! operation and operand ids, and operands always precede consumers, so
//! * forward evaluation is one in-order sweep, and
//! * backpropagation is one reverse sweep with gradient accumulation.
//!
//! Leaf values can be rebound with [`Graph::set_input`] and the graph
//! re-run, which is how training epochs and the finite-difference checker
//! reuse one tape.
//!
//! Determinism: every kernel iterates in a fixed order, so identical
//! leaves give bit-identical values and gradients on every platform.

use crate::tensor::Tensor;
use crate::{Error, Result};

/// Handle to a node in a [`Graph`]. Only meaningful for the graph that
/// issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    /// Position of the node in its arena (operands always have smaller
    /// indices than consumers).
    pub fn index(self) -> usize {
        self.0
    }
}

/// The closed operation set.
#[derive(Debug, Clone)]
enum Op {
    /// Leaf holding an externally supplied value.
    Input,
    /// Matrix product `A · B`.
    MatMul(NodeId, NodeId),
    /// Elementwise sum of two same-shape matrices.
    Add(NodeId, NodeId),
    /// Elementwise `max(x, 0)`; the subgradient at 0 is taken as 0.
    Relu(NodeId),
    /// `[A | B]` for two matrices with equal row counts.
    ConcatCols(NodeId, NodeId),
    /// Column-wise mean over rows, `k×c → 1×c`, pairwise summation.
    MeanRows(NodeId),
    /// Elementwise product of two same-shape matrices.
    ElemMul(NodeId, NodeId),
    /// Total sum of all entries, `→ 1×1`.
    Sum(NodeId),
    /// Elementwise `ln(1 + e^x)`, computed in overflow-safe form.
    Softplus(NodeId),
    /// Elementwise hyperbolic tangent.
    Tanh(NodeId),
    /// Gather rows: output row `i` is operand row `indices[i]`.
    RowLookup(NodeId, Vec<usize>),
    /// Multiply every entry by a constant.
    Scale(NodeId, f64),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    grad: Tensor,
}

/// Numerically stable softplus, `log(1 + exp(x))`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic sigmoid, the derivative of softplus.
#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// An arena of expression nodes forming one differentiable computation.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    /// Number of nodes currently in the arena.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, id: NodeId) -> Result<()> {
        if id.0 >= self.nodes.len() {
            Err(Error::Index(format!(
                "node id {} out of range for graph of {} nodes",
                id.0,
                self.nodes.len()
            )))
        } else {
            Ok(())
        }
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op,
            value: Tensor::zeros(rows, cols),
            grad: Tensor::zeros(rows, cols),
        });
        id
    }

    /// Shape of a node's value.
    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        self.nodes[id.0].value.shape()
    }

    /// Current value of a node (meaningful after [`Graph::forward`]
    /// covered it; inputs are always current).
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Current gradient of a node (meaningful after [`Graph::backward`]).
    pub fn grad(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].grad
    }

    /// True when the node is a leaf input.
    pub fn is_input(&self, id: NodeId) -> bool {
        matches!(self.nodes[id.0].op, Op::Input)
    }

    // ---- builders ------------------------------------------------------

    /// New leaf holding `value`.
    pub fn input(&mut self, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len());
        let grad = Tensor::zeros(value.rows(), value.cols());
        self.nodes.push(Node {
            op: Op::Input,
            value,
            grad,
        });
        id
    }

    /// Rebind the value of an input leaf. The replacement must keep the
    /// leaf's shape; non-input nodes cannot be rebound.
    pub fn set_input(&mut self, id: NodeId, value: Tensor) -> Result<()> {
        self.check(id)?;
        if !matches!(self.nodes[id.0].op, Op::Input) {
            return Err(Error::Contract(format!(
                "node {} is not an input leaf and cannot be rebound",
                id.0
            )));
        }
        let (r, c) = self.nodes[id.0].value.shape();
        if value.shape() != (r, c) {
            return Err(Error::Dim {
                op: "set_input",
                left_rows: r,
                left_cols: c,
                right_rows: value.rows(),
                right_cols: value.cols(),
            });
        }
        self.nodes[id.0].value = value;
        Ok(())
    }

    /// Overwrite one entry of an input leaf (used by the finite-difference
    /// checker to nudge single coordinates).
    pub fn set_input_entry(&mut self, id: NodeId, i: usize, j: usize, v: f64) -> Result<()> {
        self.check(id)?;
        if !matches!(self.nodes[id.0].op, Op::Input) {
            return Err(Error::Contract(format!(
                "node {} is not an input leaf and cannot be rebound",
                id.0
            )));
        }
        let (r, c) = self.nodes[id.0].value.shape();
        if i >= r || j >= c {
            return Err(Error::Index(format!(
                "entry ({i},{j}) out of range for {r}x{c} input"
            )));
        }
        self.nodes[id.0].value.set(i, j, v);
        Ok(())
    }

    fn binary_same_shape(&mut self, op_name: &'static str, a: NodeId, b: NodeId) -> Result<(usize, usize)> {
        self.check(a)?;
        self.check(b)?;
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if (ar, ac) != (br, bc) {
            return Err(Error::Dim {
                op: op_name,
                left_rows: ar,
                left_cols: ac,
                right_rows: br,
                right_cols: bc,
            });
        }
        Ok((ar, ac))
    }

    /// Matrix product node; inner dimensions must agree.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ac != br {
            return Err(Error::Dim {
                op: "matmul",
                left_rows: ar,
                left_cols: ac,
                right_rows: br,
                right_cols: bc,
            });
        }
        Ok(self.push(Op::MatMul(a, b), ar, bc))
    }

    /// Elementwise sum node.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.binary_same_shape("add", a, b)?;
        Ok(self.push(Op::Add(a, b), r, c))
    }

    /// Elementwise product node.
    pub fn elem_mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (r, c) = self.binary_same_shape("elem_mul", a, b)?;
        Ok(self.push(Op::ElemMul(a, b), r, c))
    }

    /// Rectifier node.
    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let (r, c) = self.shape(a);
        Ok(self.push(Op::Relu(a), r, c))
    }

    /// Softplus node.
    pub fn softplus(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let (r, c) = self.shape(a);
        Ok(self.push(Op::Softplus(a), r, c))
    }

    /// Hyperbolic-tangent node.
    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let (r, c) = self.shape(a);
        Ok(self.push(Op::Tanh(a), r, c))
    }

    /// Column-concatenation node; row counts must agree.
    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.check(a)?;
        self.check(b)?;
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        if ar != br {
            return Err(Error::Dim {
                op: "concat_cols",
                left_rows: ar,
                left_cols: ac,
                right_rows: br,
                right_cols: bc,
            });
        }
        Ok(self.push(Op::ConcatCols(a, b), ar, ac + bc))
    }

    /// Row-mean node, `k×c → 1×c`.
    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        let (_, c) = self.shape(a);
        Ok(self.push(Op::MeanRows(a), 1, c))
    }

    /// Total-sum node, `→ 1×1`.
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId> {
        self.check(a)?;
        Ok(self.push(Op::Sum(a), 1, 1))
    }

    /// Row-gather node: output row `i` is operand row `indices[i]`.
    /// Indices may repeat; gradients accumulate into repeated rows.
    pub fn row_lookup(&mut self, a: NodeId, indices: Vec<usize>) -> Result<NodeId> {
        self.check(a)?;
        let (r, c) = self.shape(a);
        if indices.is_empty() {
            return Err(Error::Contract("row_lookup requires at least one index".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= r) {
            return Err(Error::Index(format!(
                "row_lookup index {bad} out of range for {r} rows"
            )));
        }
        let n = indices.len();
        Ok(self.push(Op::RowLookup(a, indices), n, c))
    }

    /// Constant-scale node.
    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        self.check(a)?;
        let (r, c) = self.shape(a);
        Ok(self.push(Op::Scale(a, factor), r, c))
    }

    // ---- evaluation ----------------------------------------------------

    fn eval(&self, op: &Op) -> Result<Tensor> {
        Ok(match op {
            Op::Input => unreachable!("inputs are never re-evaluated"),
            Op::MatMul(a, b) => self.nodes[a.0].value.matmul(&self.nodes[b.0].value)?,
            Op::Add(a, b) => {
                let mut out = self.nodes[a.0].value.clone();
                out.add_assign(&self.nodes[b.0].value)?;
                out
            }
            Op::ElemMul(a, b) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let mut out = av.clone();
                for (o, y) in out.data_mut().iter_mut().zip(bv.data()) {
                    *o *= y;
                }
                out
            }
            Op::Relu(a) => self.nodes[a.0].value.map(|x| x.max(0.0)),
            Op::Softplus(a) => self.nodes[a.0].value.map(softplus),
            Op::Tanh(a) => self.nodes[a.0].value.map(f64::tanh),
            Op::ConcatCols(a, b) => {
                let av = &self.nodes[a.0].value;
                let bv = &self.nodes[b.0].value;
                let (r, ac) = av.shape();
                let bc = bv.cols();
                Tensor::from_fn(r, ac + bc, |i, j| {
                    if j < ac {
                        av.get(i, j)
                    } else {
                        bv.get(i, j - ac)
                    }
                })
            }
            Op::MeanRows(a) => self.nodes[a.0].value.mean_rows_value(),
            Op::Sum(a) => Tensor::scalar(self.nodes[a.0].value.sum_all()),
            Op::RowLookup(a, idx) => {
                let av = &self.nodes[a.0].value;
                Tensor::from_fn(idx.len(), av.cols(), |i, j| av.get(idx[i], j))
            }
            Op::Scale(a, f) => self.nodes[a.0].value.map(|x| f * x),
        })
    }

    /// Evaluate nodes `0..=root` in arena order. Input leaves keep their
    /// bound values; every other node is recomputed. Safe to call after
    /// rebinding inputs.
    pub fn forward(&mut self, root: NodeId) -> Result<()> {
        self.check(root)?;
        for idx in 0..=root.0 {
            if matches!(self.nodes[idx].op, Op::Input) {
                continue;
            }
            let op = self.nodes[idx].op.clone();
            let v = self.eval(&op)?;
            self.nodes[idx].value = v;
        }
        Ok(())
    }

    /// Evaluate every node in the arena.
    pub fn forward_all(&mut self) -> Result<()> {
        if self.nodes.is_empty() {
            return Ok(());
        }
        self.forward(NodeId(self.nodes.len() - 1))
    }

    /// Reverse-accumulate gradients of a scalar root into every node at
    /// or below it. The root must be 1×1; call after [`Graph::forward`].
    pub fn backward(&mut self, root: NodeId) -> Result<()> {
        self.check(root)?;
        if self.shape(root) != (1, 1) {
            let (r, c) = self.shape(root);
            return Err(Error::Contract(format!(
                "backward requires a 1x1 scalar root, got {r}x{c}"
            )));
        }
        for idx in 0..=root.0 {
            let (r, c) = self.nodes[idx].value.shape();
            self.nodes[idx].grad = Tensor::zeros(r, c);
        }
        self.nodes[root.0].grad = Tensor::scalar(1.0);

        for idx in (0..=root.0).rev() {
            let op = self.nodes[idx].op.clone();
            if matches!(op, Op::Input) {
                continue;
            }
            // Compute each operand's contribution first, then accumulate;
            // this keeps aliased operands (e.g. elem_mul(x, x)) correct.
            let contributions: Vec<(NodeId, Tensor)> = {
                let g = &self.nodes[idx].grad;
                match &op {
                    Op::Input => unreachable!(),
                    Op::MatMul(a, b) => {
                        let av = &self.nodes[a.0].value;
                        let bv = &self.nodes[b.0].value;
                        let ga = g.matmul(&bv.transpose())?;
                        let gb = av.transpose().matmul(g)?;
                        vec![(*a, ga), (*b, gb)]
                    }
                    Op::Add(a, b) => vec![(*a, g.clone()), (*b, g.clone())],
                    Op::ElemMul(a, b) => {
                        let av = &self.nodes[a.0].value;
                        let bv = &self.nodes[b.0].value;
                        let mut ga = g.clone();
                        for (x, y) in ga.data_mut().iter_mut().zip(bv.data()) {
                            *x *= y;
                        }
                        let mut gb = g.clone();
                        for (x, y) in gb.data_mut().iter_mut().zip(av.data()) {
                            *x *= y;
                        }
                        vec![(*a, ga), (*b, gb)]
                    }
                    Op::Relu(a) => {
                        let av = &self.nodes[a.0].value;
                        let mut ga = g.clone();
                        for (x, y) in ga.data_mut().iter_mut().zip(av.data()) {
                            // Subgradient at exactly 0 is taken as 0.
                            if *y <= 0.0 {
                                *x = 0.0;
                            }
                        }
                        vec![(*a, ga)]
                    }
                    Op::Softplus(a) => {
                        let av = &self.nodes[a.0].value;
                        let mut ga = g.clone();
                        for (x, y) in ga.data_mut().iter_mut().zip(av.data()) {
                            *x *= sigmoid(*y);
                        }
                        vec![(*a, ga)]
                    }
                    Op::Tanh(a) => {
                        let av = &self.nodes[a.0].value;
                        let mut ga = g.clone();
                        for (x, y) in ga.data_mut().iter_mut().zip(av.data()) {
                            let t = y.tanh();
                            *x *= 1.0 - t * t;
                        }
                        vec![(*a, ga)]
                    }
                    Op::ConcatCols(a, b) => {
                        let (r, ac) = self.nodes[a.0].value.shape();
                        let bc = self.nodes[b.0].value.cols();
                        let ga = Tensor::from_fn(r, ac, |i, j| g.get(i, j));
                        let gb = Tensor::from_fn(r, bc, |i, j| g.get(i, ac + j));
                        vec![(*a, ga), (*b, gb)]
                    }
                    Op::MeanRows(a) => {
                        let (k, c) = self.nodes[a.0].value.shape();
                        let inv = 1.0 / k as f64;
                        let ga = Tensor::from_fn(k, c, |_, j| g.get(0, j) * inv);
                        vec![(*a, ga)]
                    }
                    Op::Sum(a) => {
                        let (r, c) = self.nodes[a.0].value.shape();
                        let ga = Tensor::filled(r, c, g.item());
                        vec![(*a, ga)]
                    }
                    Op::RowLookup(a, idx_list) => {
                        let (r, c) = self.nodes[a.0].value.shape();
                        let mut ga = Tensor::zeros(r, c);
                        // Ascending output-row order; repeated source rows
                        // accumulate deterministically.
                        for (out_i, &src) in idx_list.iter().enumerate() {
                            for j in 0..c {
                                ga.set(src, j, ga.get(src, j) + g.get(out_i, j));
                            }
                        }
                        vec![(*a, ga)]
                    }
                    Op::Scale(a, f) => {
                        let ga = g.map(|x| f * x);
                        vec![(*a, ga)]
                    }
                }
            };
            for (target, contrib) in contributions {
                self.nodes[target.0].grad.add_assign(&contrib)?;
            }
        }
        Ok(())
    }

    // ---- finite-difference verification --------------------------------

    /// Compare analytic gradients of `root` w.r.t. the given input leaves
    /// against central finite differences.
    ///
    /// For every entry of every leaf, the relative error is
    /// `|fd - analytic| / max(|fd|, |analytic|, 1)`; the floor of 1 keeps
    /// the measure meaningful where the true gradient is (near) zero and
    /// the difference quotient is dominated by cancellation noise.
    ///
    /// Requirements: `root` is 1×1, every listed leaf is an input, and
    /// `0 < eps <= 1e-3`.
    pub fn grad_check(
        &mut self,
        root: NodeId,
        leaves: &[NodeId],
        eps: f64,
        tol: f64,
    ) -> Result<GradCheckReport> {
        self.check(root)?;
        if self.shape(root) != (1, 1) {
            let (r, c) = self.shape(root);
            return Err(Error::Contract(format!(
                "grad_check requires a 1x1 scalar root, got {r}x{c}"
            )));
        }
        if !(eps > 0.0 && eps <= 1e-3) {
            return Err(Error::Contract(format!(
                "grad_check step must be in (0, 1e-3], got {eps}"
            )));
        }
        for &l in leaves {
            self.check(l)?;
            if !self.is_input(l) {
                return Err(Error::Contract(format!(
                    "grad_check leaf {} is not an input node",
                    l.index()
                )));
            }
        }

        self.forward(root)?;
        self.backward(root)?;
        let analytic: Vec<Tensor> = leaves.iter().map(|&l| self.grad(l).clone()).collect();

        let mut checks = Vec::with_capacity(leaves.len());
        for (li, &leaf) in leaves.iter().enumerate() {
            let (r, c) = self.shape(leaf);
            let mut max_rel = 0.0f64;
            for i in 0..r {
                for j in 0..c {
                    let orig = self.value(leaf).get(i, j);
                    self.set_input_entry(leaf, i, j, orig + eps)?;
                    self.forward(root)?;
                    let f_plus = self.value(root).item();
                    self.set_input_entry(leaf, i, j, orig - eps)?;
                    self.forward(root)?;
                    let f_minus = self.value(root).item();
                    self.set_input_entry(leaf, i, j, orig)?;
                    let fd = (f_plus - f_minus) / (2.0 * eps);
                    let an = analytic[li].get(i, j);
                    let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1.0);
                    if rel > max_rel {
                        max_rel = rel;
                    }
                }
            }
            checks.push(LeafCheck {
                leaf,
                entries: r * c,
                max_rel_err: max_rel,
            });
        }
        // Leave the graph in a consistent state for the caller.
        self.forward(root)?;
        Ok(GradCheckReport { checks, eps, tol })
    }
}

/// Finite-difference result for one input leaf.
#[derive(Debug, Clone)]
pub struct LeafCheck {
    pub leaf: NodeId,
    pub entries: usize,
    pub max_rel_err: f64,
}

/// Outcome of [`Graph::grad_check`] over a set of leaves.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checks: Vec<LeafCheck>,
    pub eps: f64,
    pub tol: f64,
}

impl GradCheckReport {
    /// Largest relative error over all checked entries.
    pub fn max_rel_err(&self) -> f64 {
        self.checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max)
    }

    /// True when every leaf is within tolerance.
    pub fn passed(&self) -> bool {
        self.max_rel_err() < self.tol
    }
}
