use super::kernels::{self, BatchKind};
use super::Tensor;
use crate::{Error, Parallelism, Result};

/// Handle to a node on a [`Graph`]. The wrapped index is the node id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul { a: Var, b: Var, bias: Option<Var>, m: usize, k: usize, n: usize },
    Batched { a: Var, b: Var, kind: BatchKind, alpha: f64, batch: usize, m: usize, k: usize, n: usize },
    Add(Var, Var),
    Mul(Var, Var),
    AddBias { a: Var, bias: Var },
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    SoftmaxRows(Var),
    Reshape(Var),
    ConcatLast(Vec<Var>),
    Gather { table: Var, indices: Vec<usize> },
    Stack(Vec<Var>),
    Sum(Var),
    BceLogitsSum { logits: Var, labels: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    op: Op,
    requires_grad: bool,
}

/// A reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is already a topological order and [`Graph::backward`] replays it in
/// reverse.
///
/// A graph is owned by one thread; its kernels may fan out internally
/// according to its [`Parallelism`].
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    par: Parallelism,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn with_parallelism(par: Parallelism) -> Self {
        Graph {
            nodes: Vec::new(),
            par,
        }
    }

    pub fn parallelism(&self) -> Parallelism {
        self.par
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// A trainable leaf.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient accumulated on `v` by the last [`Graph::backward`], shaped like
    /// its value. Only trainable leaves keep a gradient after `backward`.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let node = &self.nodes[v.0];
        node.grad
            .as_ref()
            .map(|g| Tensor::new(node.value.shape().to_vec(), g.clone()).expect("grad shape"))
    }

    pub fn take_grad(&mut self, v: Var) -> Option<Vec<f64>> {
        self.nodes[v.0].grad.take()
    }

    /// `a[.., k] · b[k×n]`. Leading dimensions of `a` are kept, so a
    /// `[B×T×k]` input yields `[B×T×n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_bias(a, b, None)
    }

    /// `a · w + bias`, with `bias` of length `n` added to every output row.
    pub fn linear(&mut self, a: Var, w: Var, bias: Var) -> Result<Var> {
        self.matmul_bias(a, w, Some(bias))
    }

    fn matmul_bias(&mut self, a: Var, b: Var, bias: Option<Var>) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sb.len() != 2 || sa[sa.len() - 1] != sb[0] {
            return Err(Error::Shape {
                op: "matmul",
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        let (k, n) = (sb[0], sb[1]);
        if let Some(bias) = bias {
            if self.value(bias).len() != n {
                return Err(Error::Shape {
                    op: "linear bias",
                    left: sb.to_vec(),
                    right: self.value(bias).shape().to_vec(),
                });
            }
        }
        let m = self.value(a).outer_len();
        let mut shape = sa[..sa.len() - 1].to_vec();
        shape.push(n);
        let mut data = kernels::matmul(self.par, self.value(a).data(), self.value(b).data(), m, k, n);
        if let Some(bias) = bias {
            let bv = self.value(bias).data();
            for row in data.chunks_mut(n) {
                row.iter_mut().zip(bv).for_each(|(x, b)| *x += b);
            }
        }
        let rg = self.rg(a) || self.rg(b) || bias.is_some_and(|v| self.rg(v));
        Ok(self.push(Tensor::new(shape, data)?, Op::MatMul { a, b, bias, m, k, n }, rg))
    }

    fn batched(&mut self, a: Var, b: Var, kind: BatchKind, alpha: f64) -> Result<Var> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        let err = || Error::Shape {
            op: "batched_matmul",
            left: sa.to_vec(),
            right: sb.to_vec(),
        };
        if sa.len() != 3 || sb.len() != 3 || sa[0] != sb[0] {
            return Err(err());
        }
        let (batch, m, k) = (sa[0], sa[1], sa[2]);
        let n = match kind {
            BatchKind::NN if sb[1] == k => sb[2],
            BatchKind::NT if sb[2] == k => sb[1],
            _ => return Err(err()),
        };
        let mut data = kernels::batched(
            self.par,
            kind,
            self.value(a).data(),
            self.value(b).data(),
            batch,
            (m, k, n),
        );
        if alpha != 1.0 {
            data.iter_mut().for_each(|x| *x *= alpha);
        }
        let rg = self.rg(a) || self.rg(b);
        let t = Tensor::new(vec![batch, m, n], data)?;
        Ok(self.push(t, Op::Batched { a, b, kind, alpha, batch, m, k, n }, rg))
    }

    /// Per-item `a[i] · b[i]` for `a[B×m×k]`, `b[B×k×n]`.
    pub fn batched_matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.batched(a, b, BatchKind::NN, 1.0)
    }

    /// Per-item `alpha · a[i] · b[i]ᵀ` for `a[B×m×k]`, `b[B×n×k]`.
    pub fn batched_matmul_nt(&mut self, a: Var, b: Var, alpha: f64) -> Result<Var> {
        self.batched(a, b, BatchKind::NT, alpha)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(Error::Shape {
                op,
                left: sa.to_vec(),
                right: sb.to_vec(),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let t = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::Add(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let t = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(t, Op::Mul(a, b), rg))
    }

    /// Adds `bias` (length = last dim of `a`) to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let n = self.value(a).last_dim();
        if self.value(bias).len() != n {
            return Err(Error::Shape {
                op: "add_bias",
                left: self.value(a).shape().to_vec(),
                right: self.value(bias).shape().to_vec(),
            });
        }
        let bv = self.value(bias).data();
        let mut data = self.value(a).data().to_vec();
        for row in data.chunks_mut(n) {
            for (x, b) in row.iter_mut().zip(bv) {
                *x += b;
            }
        }
        let t = Tensor::new(self.value(a).shape().to_vec(), data)?;
        let rg = self.rg(a) || self.rg(bias);
        Ok(self.push(t, Op::AddBias { a, bias }, rg))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = self.value(a).map(|x| x * c);
        let rg = self.rg(a);
        self.push(t, Op::Scale(a, c), rg)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let t = self.value(a).map(|x| if x > 0.0 { x } else { 0.0 });
        let rg = self.rg(a);
        self.push(t, Op::Relu(a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let t = self.value(a).map(sigmoid);
        let rg = self.rg(a);
        self.push(t, Op::Sigmoid(a), rg)
    }

    /// Softmax over the last dimension, with row-max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Result<Var> {
        let t = softmax_rows(self.value(a))?;
        let rg = self.rg(a);
        Ok(self.push(t, Op::SoftmaxRows(a), rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let t = self.value(a).reshaped(shape.to_vec())?;
        let rg = self.rg(a);
        Ok(self.push(t, Op::Reshape(a), rg))
    }

    /// Concatenates along the last dimension. All parts must agree on the
    /// leading dimensions.
    pub fn concat_last(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of zero tensors".into()))?;
        let lead = self.value(*first).shape()[..self.value(*first).shape().len() - 1].to_vec();
        let rows = self.value(*first).outer_len();
        let mut width = 0;
        for &p in parts {
            let s = self.value(p).shape();
            if s[..s.len() - 1] != lead[..] {
                return Err(Error::Shape {
                    op: "concat_last",
                    left: self.value(*first).shape().to_vec(),
                    right: s.to_vec(),
                });
            }
            width += s[s.len() - 1];
        }
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for &p in parts {
                let v = self.value(p);
                let w = v.last_dim();
                data.extend_from_slice(&v.data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(width);
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Tensor::new(shape, data)?, Op::ConcatLast(parts.to_vec()), rg))
    }

    /// Row lookup: output row `i` is `table[indices[i]]`.
    pub fn gather_rows(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let s = self.value(table).shape();
        if s.len() != 2 {
            return Err(Error::Shape {
                op: "gather_rows",
                left: s.to_vec(),
                right: vec![indices.len()],
            });
        }
        let (rows, d) = (s[0], s[1]);
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(Error::InvalidArgument(format!(
                "index {bad} out of bounds for table with {rows} rows"
            )));
        }
        let tv = self.value(table).data();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(&tv[i * d..(i + 1) * d]);
        }
        let t = Tensor::new(vec![indices.len(), d], data)?;
        let rg = self.rg(table);
        Ok(self.push(
            t,
            Op::Gather {
                table,
                indices: indices.to_vec(),
            },
            rg,
        ))
    }

    /// Stacks `T` tensors of shape `[B×d]` into `[B×T×d]`.
    pub fn stack_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("stack of zero tensors".into()))?;
        let s0 = self.value(*first).shape().to_vec();
        if s0.len() != 2 {
            return Err(Error::Shape {
                op: "stack_rows",
                left: s0,
                right: vec![],
            });
        }
        for &p in parts {
            if self.value(p).shape() != &s0[..] {
                return Err(Error::Shape {
                    op: "stack_rows",
                    left: s0,
                    right: self.value(p).shape().to_vec(),
                });
            }
        }
        let (b, d, t) = (s0[0], s0[1], parts.len());
        let mut data = vec![0.0; b * t * d];
        for (ti, &p) in parts.iter().enumerate() {
            let v = self.value(p).data();
            for bi in 0..b {
                data[(bi * t + ti) * d..(bi * t + ti + 1) * d].copy_from_slice(&v[bi * d..(bi + 1) * d]);
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Tensor::new(vec![b, t, d], data)?, Op::Stack(parts.to_vec()), rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = kernels::sum(self.par, self.value(a).data());
        let rg = self.rg(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    /// Summed binary cross-entropy of `sigmoid(logits)` against `labels`,
    /// evaluated in the overflow-free logit form.
    pub fn bce_with_logits_sum(&mut self, logits: Var, labels: &[f64]) -> Result<Var> {
        let z = self.value(logits);
        if z.len() != labels.len() {
            return Err(Error::Shape {
                op: "bce_with_logits_sum",
                left: z.shape().to_vec(),
                right: vec![labels.len()],
            });
        }
        let terms: Vec<f64> = z
            .data()
            .iter()
            .zip(labels)
            .map(|(&z, &y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
            .collect();
        let loss = kernels::sum(self.par, &terms);
        let rg = self.rg(logits);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::BceLogitsSum {
                logits,
                labels: labels.to_vec(),
            },
            rg,
        ))
    }

    /// Accumulates `d(loss)/d(node)` into every trainable ancestor of `loss`.
    ///
    /// Gradients from a previous call are cleared first. Intermediate gradients
    /// are freed as the sweep passes them; only leaves keep theirs.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if !self.value(loss).is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        for n in &mut self.nodes {
            n.grad = None;
        }
        if !self.rg(loss) {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            let contribs = self.local_grads(i, &g);
            for (v, cg) in contribs {
                let node = &mut self.nodes[v.0];
                match &mut node.grad {
                    Some(acc) => acc.iter_mut().zip(&cg).for_each(|(a, c)| *a += c),
                    None => node.grad = Some(cg),
                }
            }
        }
        Ok(())
    }

    fn local_grads(&self, i: usize, g: &[f64]) -> Vec<(Var, Vec<f64>)> {
        let par = self.par;
        let out = &self.nodes[i].value;
        let mut res = Vec::new();
        let mut emit = |v: Var, f: &dyn Fn() -> Vec<f64>| {
            if self.rg(v) {
                res.push((v, f()));
            }
        };
        match &self.nodes[i].op {
            Op::Leaf => {}
            &Op::MatMul { a, b, bias, m, k, n } => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                emit(a, &|| kernels::matmul_nt(par, g, bv, m, n, k));
                emit(b, &|| kernels::matmul_tn(par, av, g, m, k, n));
                if let Some(bias) = bias {
                    emit(bias, &|| kernels::column_sums(par, g, m, n));
                }
            }
            &Op::Batched { a, b, kind, alpha, batch, m, k, n } => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                let scaled: Vec<f64>;
                let g = if alpha != 1.0 {
                    scaled = g.iter().map(|x| x * alpha).collect();
                    &scaled[..]
                } else {
                    g
                };
                match kind {
                    BatchKind::NN => {
                        emit(a, &|| kernels::batched(par, BatchKind::NT, g, bv, batch, (m, n, k)));
                        emit(b, &|| kernels::batched(par, BatchKind::TN, av, g, batch, (m, k, n)));
                    }
                    BatchKind::NT => {
                        emit(a, &|| kernels::batched(par, BatchKind::NN, g, bv, batch, (m, n, k)));
                        emit(b, &|| kernels::batched(par, BatchKind::TN, g, av, batch, (m, n, k)));
                    }
                    BatchKind::TN => unreachable!("TN is never recorded"),
                }
            }
            &Op::Add(a, b) => {
                emit(a, &|| g.to_vec());
                emit(b, &|| g.to_vec());
            }
            &Op::Mul(a, b) => {
                let (av, bv) = (self.value(a).data(), self.value(b).data());
                emit(a, &|| g.iter().zip(bv).map(|(g, y)| g * y).collect());
                emit(b, &|| g.iter().zip(av).map(|(g, x)| g * x).collect());
            }
            &Op::AddBias { a, bias } => {
                let n = out.last_dim();
                emit(a, &|| g.to_vec());
                emit(bias, &|| kernels::column_sums(par, g, g.len() / n, n));
            }
            &Op::Scale(a, c) => emit(a, &|| g.iter().map(|g| g * c).collect()),
            &Op::Relu(a) => emit(a, &|| {
                g.iter()
                    .zip(out.data())
                    .map(|(g, &y)| if y > 0.0 { *g } else { 0.0 })
                    .collect()
            }),
            &Op::Sigmoid(a) => emit(a, &|| {
                g.iter().zip(out.data()).map(|(g, &s)| g * s * (1.0 - s)).collect()
            }),
            &Op::SoftmaxRows(a) => emit(a, &|| {
                let n = out.last_dim();
                let mut dx = vec![0.0; g.len()];
                for ((dr, gr), sr) in dx.chunks_mut(n).zip(g.chunks(n)).zip(out.data().chunks(n)) {
                    let dot: f64 = gr.iter().zip(sr).map(|(g, s)| g * s).sum();
                    for ((d, g), s) in dr.iter_mut().zip(gr).zip(sr) {
                        *d = s * (g - dot);
                    }
                }
                dx
            }),
            &Op::Reshape(a) => emit(a, &|| g.to_vec()),
            Op::ConcatLast(parts) => {
                let width = out.last_dim();
                let rows = out.outer_len();
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).last_dim();
                    emit(p, &|| {
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            d.extend_from_slice(&g[r * width + offset..r * width + offset + w]);
                        }
                        d
                    });
                    offset += w;
                }
            }
            Op::Gather { table, indices } => emit(*table, &|| {
                let tv = self.value(*table);
                let d = tv.last_dim();
                let mut dt = vec![0.0; tv.len()];
                for (r, &ix) in indices.iter().enumerate() {
                    for (t, gv) in dt[ix * d..(ix + 1) * d].iter_mut().zip(&g[r * d..(r + 1) * d]) {
                        *t += gv;
                    }
                }
                dt
            }),
            Op::Stack(parts) => {
                let s = out.shape();
                let (b, t, d) = (s[0], s[1], s[2]);
                for (ti, &p) in parts.iter().enumerate() {
                    emit(p, &|| {
                        let mut dp = Vec::with_capacity(b * d);
                        for bi in 0..b {
                            dp.extend_from_slice(&g[(bi * t + ti) * d..(bi * t + ti + 1) * d]);
                        }
                        dp
                    });
                }
            }
            &Op::Sum(a) => emit(a, &|| vec![g[0]; self.value(a).len()]),
            Op::BceLogitsSum { logits, labels } => emit(*logits, &|| {
                self.value(*logits)
                    .data()
                    .iter()
                    .zip(labels)
                    .map(|(&z, &y)| g[0] * (sigmoid(z) - y))
                    .collect()
            }),
        }
        res
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    if let Some(bad) = x.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("softmax input is not finite: {bad}")));
    }
    let n = x.last_dim();
    let mut out = x.data().to_vec();
    for row in out.chunks_mut(n) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[Vec<f64>]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_identity_and_small_product() {
        let mut g = Graph::new();
        let i = g.constant(Tensor::identity(2));
        let m = g.constant(t(&[vec![1.0, 2.0], vec![3.0, 4.0]]));
        let p = g.matmul(i, m).unwrap();
        assert_eq!(g.value(p).data(), &[1.0, 2.0, 3.0, 4.0]);

        let a = g.constant(t(&[vec![1.0, 2.0]]));
        let b = g.constant(t(&[vec![3.0], vec![4.0]]));
        let p = g.matmul(a, b).unwrap();
        assert_eq!(g.value(p).data(), &[11.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[2, 3]));
        let b = g.constant(Tensor::zeros(&[2, 3]));
        let err = g.matmul(a, b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn matmul_random_matches_triple_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut g = Graph::new();
        let av = g.constant(Tensor::new(vec![3, 4], a.clone()).unwrap());
        let bv = g.constant(Tensor::new(vec![4, 2], b.clone()).unwrap());
        let c = g.matmul(av, bv).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mut s = 0.0;
                for p in 0..4 {
                    s += a[i * 4 + p] * b[p * 2 + j];
                }
                assert!((g.value(c).at2(i, j) - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn softmax_examples() {
        let s = softmax_rows(&t(&[vec![0.0, 0.0]])).unwrap();
        assert_eq!(s.data(), &[0.5, 0.5]);
        let s = softmax_rows(&t(&[vec![5.0]])).unwrap();
        assert_eq!(s.data(), &[1.0]);
        // exp(k) / (e + e^2 + e^3), evaluated directly
        let denom = 1f64.exp() + 2f64.exp() + 3f64.exp();
        let expect = [1f64.exp() / denom, 2f64.exp() / denom, 3f64.exp() / denom];
        let s = softmax_rows(&t(&[vec![1.0, 2.0, 3.0]])).unwrap();
        for (x, (e, frozen)) in s.data().iter().zip(expect.iter().zip([0.09003, 0.24473, 0.66524])) {
            assert!((x - e).abs() < 1e-15);
            assert!((x - frozen).abs() < 1e-5);
        }
        assert!(matches!(
            softmax_rows(&t(&[vec![f64::NAN, 1.0]])),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let s = softmax_rows(&t(&[vec![1000.0, 1000.0, -1000.0]])).unwrap();
        assert!(s.all_finite());
        assert!((s.data()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn backward_linear_and_quadratic() {
        let mut g = Graph::new();
        let w = g.param(Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap());
        let l = g.sum(w);
        g.backward(l).unwrap();
        assert_eq!(g.grad(w).unwrap().data(), &[1.0, 1.0, 1.0]);

        let mut g = Graph::new();
        let w = g.param(Tensor::vector(vec![1.0, 2.0]).unwrap());
        let sq = g.mul(w, w).unwrap();
        let l = g.sum(sq);
        g.backward(l).unwrap();
        assert_eq!(g.grad(w).unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_and_skips_non_ancestors() {
        let mut g = Graph::new();
        let w = g.param(Tensor::vector(vec![1.0, 2.0]).unwrap());
        let other = g.param(Tensor::vector(vec![5.0]).unwrap());
        assert!(matches!(g.backward(w), Err(Error::Contract(_))));
        let l = g.sum(w);
        g.backward(l).unwrap();
        assert!(g.grad(other).is_none());
    }

    #[test]
    fn gather_out_of_bounds_is_an_error() {
        let mut g = Graph::new();
        let table = g.param(Tensor::zeros(&[3, 2]));
        assert!(g.gather_rows(table, &[0, 3]).is_err());
    }

    #[test]
    fn bce_matches_naive_formula() {
        let mut g = Graph::new();
        let z = g.param(Tensor::new(vec![3, 1], vec![0.3, -2.0, 12.0]).unwrap());
        let labels = [1.0, 0.0, 0.0];
        let l = g.bce_with_logits_sum(z, &labels).unwrap();
        let naive: f64 = [0.3f64, -2.0, 12.0]
            .iter()
            .zip(labels)
            .map(|(&z, y)| {
                let p = 1.0 / (1.0 + (-z).exp());
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum();
        assert!((g.value(l).data()[0] - naive).abs() < 1e-9, "{naive}");
        g.backward(l).unwrap();
        let gz = g.grad(z).unwrap();
        assert!((gz.data()[0] - (sigmoid(0.3) - 1.0)).abs() < 1e-15);
    }
}
