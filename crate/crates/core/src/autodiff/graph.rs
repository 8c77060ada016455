use std::collections::HashMap;

use super::tensor::{axpy, dot};
use super::{AutodiffError, Gradients, ParamId, ParameterStore, Shape, Tensor};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Lookup {
        param: ParamId,
        row: usize,
    },
    Add(Vec<NodeId>),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// `W[:, offset..offset + len(x)] · x`
    MatVec {
        w: NodeId,
        x: NodeId,
        offset: usize,
    },
    Concat(Vec<NodeId>),
    Slice {
        x: NodeId,
        start: usize,
    },
    Tanh(NodeId),
    Logistic(NodeId),
    Pick {
        x: NodeId,
        index: usize,
    },
    MaxOver {
        x: NodeId,
        argmax: usize,
    },
    ScalarAdd(NodeId),
    ScalarMul(NodeId, f64),
    Sum(NodeId),
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    /// `None` for parameter references, whose value lives in the store.
    value: Option<Tensor>,
}

/// An eagerly evaluated expression graph over a borrowed parameter store.
///
/// Nodes are appended in creation order, so parents always precede children
/// and the graph is acyclic by construction.
pub struct Graph<'a> {
    store: &'a ParameterStore,
    nodes: Vec<Node>,
    param_nodes: HashMap<ParamId, NodeId>,
    matvec_count: usize,
    param_matvecs: HashMap<ParamId, usize>,
}

/// Result of a backward pass: parameter gradients plus per-node gradients.
pub struct Backward {
    pub params: Gradients,
    nodes: Vec<Option<Vec<f64>>>,
}

impl Backward {
    /// Gradient of the loss with respect to a non-parameter node, if it was reached.
    pub fn node(&self, id: NodeId) -> Option<&[f64]> {
        self.nodes.get(id.0).and_then(|g| g.as_deref())
    }
}

impl<'a> Graph<'a> {
    pub fn new(store: &'a ParameterStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
            matvec_count: 0,
            param_matvecs: HashMap::new(),
        }
    }

    pub fn store(&self) -> &'a ParameterStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of matrix-vector products built so far.
    pub fn matvec_count(&self) -> usize {
        self.matvec_count
    }

    /// Number of matrix-vector products whose matrix is the parameter `param`.
    pub fn matvec_count_for(&self, param: ParamId) -> usize {
        self.param_matvecs.get(&param).copied().unwrap_or(0)
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        let node = &self.nodes[id.0];
        match (&node.op, &node.value) {
            (_, Some(v)) => v,
            (Op::Param(p), None) => self.store.value(*p),
            _ => unreachable!("node without value"),
        }
    }

    pub fn shape(&self, id: NodeId) -> Shape {
        self.value(id).shape()
    }

    /// First component of a node's value; intended for scalar nodes.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.value(id).data()[0]
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value: Some(value) });
        id
    }

    fn vector_len(&self, id: NodeId, op: &'static str) -> Result<usize, AutodiffError> {
        match self.shape(id) {
            Shape::Vector(n) => Ok(n),
            other => Err(AutodiffError::NotAVector { op, shape: other }),
        }
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(), AutodiffError> {
        let (left, right) = (self.shape(a), self.shape(b));
        if left != right {
            return Err(AutodiffError::ShapeMismatch { op, left, right });
        }
        Ok(())
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Constant, value)
    }

    /// Reference to a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, param: ParamId) -> NodeId {
        if let Some(&id) = self.param_nodes.get(&param) {
            return id;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            op: Op::Param(param),
            value: None,
        });
        self.param_nodes.insert(param, id);
        id
    }

    /// Row `row` of a matrix parameter, as a vector.
    pub fn lookup(&mut self, param: ParamId, row: usize) -> Result<NodeId, AutodiffError> {
        let table = self.store.value(param);
        let rows = match table.shape() {
            Shape::Matrix(r, _) => r,
            other => {
                return Err(AutodiffError::NotAMatrix {
                    op: "lookup",
                    shape: other,
                })
            }
        };
        if row >= rows {
            return Err(AutodiffError::IndexOutOfRange {
                op: "lookup",
                index: row,
                len: rows,
            });
        }
        let value = Tensor::vector(table.row(row).to_vec());
        Ok(self.push(Op::Lookup { param, row }, value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.add_all(&[a, b])
    }

    /// Elementwise sum of equally shaped nodes.
    pub fn add_all(&mut self, xs: &[NodeId]) -> Result<NodeId, AutodiffError> {
        let (&first, rest) = xs.split_first().ok_or(AutodiffError::Empty("add"))?;
        let mut value = self.value(first).clone();
        for &x in rest {
            self.same_shape("add", first, x)?;
            for (acc, v) in value.data_mut().iter_mut().zip(self.value(x).data()) {
                *acc += v;
            }
        }
        Ok(self.push(Op::Add(xs.to_vec()), value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let mut value = self.value(a).clone();
        for (acc, v) in value.data_mut().iter_mut().zip(self.value(b).data()) {
            *acc -= v;
        }
        Ok(self.push(Op::Sub(a, b), value))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let mut value = self.value(a).clone();
        for (acc, v) in value.data_mut().iter_mut().zip(self.value(b).data()) {
            *acc *= v;
        }
        Ok(self.push(Op::Mul(a, b), value))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId, AutodiffError> {
        let cols = match self.shape(w) {
            Shape::Matrix(_, c) => c,
            other => {
                return Err(AutodiffError::NotAMatrix {
                    op: "matvec",
                    shape: other,
                })
            }
        };
        let len = self.vector_len(x, "matvec")?;
        if len != cols {
            return Err(AutodiffError::ShapeMismatch {
                op: "matvec",
                left: self.shape(w),
                right: self.shape(x),
            });
        }
        self.matvec_block(w, x, 0)
    }

    /// Product of the column block `W[:, offset..offset + len(x)]` with `x`.
    pub fn matvec_block(&mut self, w: NodeId, x: NodeId, offset: usize) -> Result<NodeId, AutodiffError> {
        let (rows, cols) = match self.shape(w) {
            Shape::Matrix(r, c) => (r, c),
            other => {
                return Err(AutodiffError::NotAMatrix {
                    op: "matvec",
                    shape: other,
                })
            }
        };
        let len = self.vector_len(x, "matvec")?;
        if offset + len > cols {
            return Err(AutodiffError::ShapeMismatch {
                op: "matvec",
                left: self.shape(w),
                right: self.shape(x),
            });
        }
        let wv = self.value(w);
        let xv = self.value(x).data();
        let out: Vec<f64> = (0..rows).map(|i| dot(&wv.row(i)[offset..offset + len], xv)).collect();
        self.matvec_count += 1;
        if let Op::Param(p) = self.nodes[w.0].op {
            *self.param_matvecs.entry(p).or_insert(0) += 1;
        }
        Ok(self.push(Op::MatVec { w, x, offset }, Tensor::vector(out)))
    }

    pub fn concat(&mut self, xs: &[NodeId]) -> Result<NodeId, AutodiffError> {
        if xs.is_empty() {
            return Err(AutodiffError::Empty("concat"));
        }
        let mut out = Vec::new();
        for &x in xs {
            self.vector_len(x, "concat")?;
            out.extend_from_slice(self.value(x).data());
        }
        Ok(self.push(Op::Concat(xs.to_vec()), Tensor::vector(out)))
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId, AutodiffError> {
        let n = self.vector_len(x, "slice")?;
        if len == 0 || start + len > n {
            return Err(AutodiffError::IndexOutOfRange {
                op: "slice",
                index: start + len,
                len: n,
            });
        }
        let value = Tensor::vector(self.value(x).data()[start..start + len].to_vec());
        Ok(self.push(Op::Slice { x, start }, value))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let mut value = self.value(x).clone();
        value.data_mut().iter_mut().for_each(|v| *v = v.tanh());
        self.push(Op::Tanh(x), value)
    }

    pub fn logistic(&mut self, x: NodeId) -> NodeId {
        let mut value = self.value(x).clone();
        value.data_mut().iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp()));
        self.push(Op::Logistic(x), value)
    }

    /// Component `index` of a vector, as a scalar.
    pub fn pick(&mut self, x: NodeId, index: usize) -> Result<NodeId, AutodiffError> {
        let n = self.vector_len(x, "pick")?;
        if index >= n {
            return Err(AutodiffError::IndexOutOfRange {
                op: "pick",
                index,
                len: n,
            });
        }
        let value = Tensor::scalar(self.value(x).data()[index]);
        Ok(self.push(Op::Pick { x, index }, value))
    }

    /// Maximum over the listed components of a vector. Ties go to the lowest index.
    pub fn max_over(&mut self, x: NodeId, indices: &[usize]) -> Result<NodeId, AutodiffError> {
        let n = self.vector_len(x, "max_over")?;
        if indices.is_empty() {
            return Err(AutodiffError::Empty("max_over"));
        }
        let data = self.value(x).data();
        let mut best: Option<usize> = None;
        for &i in indices {
            if i >= n {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "max_over",
                    index: i,
                    len: n,
                });
            }
            best = match best {
                Some(b) if data[b] > data[i] || (data[b] == data[i] && b < i) => Some(b),
                _ => Some(i),
            };
        }
        let argmax = best.expect("indices non-empty");
        let value = Tensor::scalar(data[argmax]);
        Ok(self.push(Op::MaxOver { x, argmax }, value))
    }

    pub fn scalar_add(&mut self, x: NodeId, c: f64) -> NodeId {
        let mut value = self.value(x).clone();
        value.data_mut().iter_mut().for_each(|v| *v += c);
        self.push(Op::ScalarAdd(x), value)
    }

    pub fn scalar_mul(&mut self, x: NodeId, c: f64) -> NodeId {
        let mut value = self.value(x).clone();
        value.data_mut().iter_mut().for_each(|v| *v *= c);
        self.push(Op::ScalarMul(x, c), value)
    }

    /// Sum of all components.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let total = self.value(x).data().iter().sum();
        self.push(Op::Sum(x), Tensor::scalar(total))
    }

    /// `max(0, x)` for a scalar `x`, built from concat and max-over-indices.
    pub fn hinge(&mut self, x: NodeId) -> Result<NodeId, AutodiffError> {
        if self.shape(x) != Shape::scalar() {
            return Err(AutodiffError::NonScalarLoss(self.shape(x)));
        }
        let zero = self.constant(Tensor::scalar(0.0));
        let pair = self.concat(&[zero, x])?;
        self.max_over(pair, &[0, 1])
    }

    /// Reverse-mode gradients of a scalar loss with respect to every parameter.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, AutodiffError> {
        Ok(self.backward_nodes(loss)?.params)
    }

    pub fn backward_nodes(&self, loss: NodeId) -> Result<Backward, AutodiffError> {
        let shape = self.shape(loss);
        if shape != Shape::scalar() {
            return Err(AutodiffError::NonScalarLoss(shape));
        }
        let mut sink = Sink {
            nodes: &self.nodes,
            store: self.store,
            node_grads: vec![None; loss.0 + 1],
            params: Gradients::new(),
        };
        sink.slot(loss)[0] += 1.0;

        for i in (0..=loss.0).rev() {
            let Some(g) = sink.node_grads[i].take() else {
                continue;
            };
            match &self.nodes[i].op {
                Op::Constant | Op::Param(_) => {}
                Op::Lookup { param, row } => {
                    let cols = g.len();
                    let total = self.store.value(*param).shape().len();
                    let dst = sink.params.entry(*param, total);
                    axpy(1.0, &g, &mut dst[row * cols..(row + 1) * cols]);
                }
                Op::Add(xs) => {
                    for &x in xs {
                        axpy(1.0, &g, sink.slot(x));
                    }
                }
                Op::Sub(a, b) => {
                    axpy(1.0, &g, sink.slot(*a));
                    axpy(-1.0, &g, sink.slot(*b));
                }
                Op::Mul(a, b) => {
                    let da: Vec<f64> = g.iter().zip(self.value(*b).data()).map(|(g, v)| g * v).collect();
                    let db: Vec<f64> = g.iter().zip(self.value(*a).data()).map(|(g, v)| g * v).collect();
                    axpy(1.0, &da, sink.slot(*a));
                    axpy(1.0, &db, sink.slot(*b));
                }
                Op::MatVec { w, x, offset } => {
                    let wv = self.value(*w);
                    let xv = self.value(*x).data();
                    let len = xv.len();
                    let mut dx = vec![0.0; len];
                    for (r, &gr) in g.iter().enumerate() {
                        if gr != 0.0 {
                            axpy(gr, &wv.row(r)[*offset..offset + len], &mut dx);
                        }
                    }
                    axpy(1.0, &dx, sink.slot(*x));
                    let cols = match wv.shape() {
                        Shape::Matrix(_, c) => c,
                        Shape::Vector(_) => unreachable!("matvec over a vector"),
                    };
                    let dw = sink.slot(*w);
                    for (r, &gr) in g.iter().enumerate() {
                        if gr != 0.0 {
                            let start = r * cols + offset;
                            axpy(gr, xv, &mut dw[start..start + len]);
                        }
                    }
                }
                Op::Concat(xs) => {
                    let mut start = 0;
                    for &x in xs {
                        let len = self.value(x).shape().len();
                        axpy(1.0, &g[start..start + len], sink.slot(x));
                        start += len;
                    }
                }
                Op::Slice { x, start } => {
                    let dst = sink.slot(*x);
                    axpy(1.0, &g, &mut dst[*start..start + g.len()]);
                }
                Op::Tanh(x) => {
                    let y = self.nodes[i].value.as_ref().expect("tanh value").data();
                    let dx: Vec<f64> = g.iter().zip(y).map(|(g, y)| g * (1.0 - y * y)).collect();
                    axpy(1.0, &dx, sink.slot(*x));
                }
                Op::Logistic(x) => {
                    let y = self.nodes[i].value.as_ref().expect("logistic value").data();
                    let dx: Vec<f64> = g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)).collect();
                    axpy(1.0, &dx, sink.slot(*x));
                }
                Op::Pick { x, index } => sink.slot(*x)[*index] += g[0],
                Op::MaxOver { x, argmax } => sink.slot(*x)[*argmax] += g[0],
                Op::ScalarAdd(x) => axpy(1.0, &g, sink.slot(*x)),
                Op::ScalarMul(x, c) => axpy(*c, &g, sink.slot(*x)),
                Op::Sum(x) => sink.slot(*x).iter_mut().for_each(|d| *d += g[0]),
            }
            sink.node_grads[i] = Some(g);
        }

        Ok(Backward {
            params: sink.params,
            nodes: sink.node_grads,
        })
    }
}

/// Gradient destinations during a backward pass.
struct Sink<'g> {
    nodes: &'g [Node],
    store: &'g ParameterStore,
    node_grads: Vec<Option<Vec<f64>>>,
    params: Gradients,
}

impl Sink<'_> {
    fn slot(&mut self, id: NodeId) -> &mut [f64] {
        let node = &self.nodes[id.0];
        match node.op {
            Op::Param(p) => {
                let len = self.store.value(p).shape().len();
                self.params.entry(p, len)
            }
            _ => {
                let len = node.value.as_ref().map_or(0, |v| v.shape().len());
                self.node_grads[id.0].get_or_insert_with(|| vec![0.0; len])
            }
        }
    }
}
