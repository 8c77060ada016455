use rand::Rng;

use crate::autodiff::{AutodiffError, Graph, Init, NodeId, ParamId, ParameterStore, Shape, Tensor};

/// One-hidden-layer perceptron: `W2 · tanh(W1 · x + b1) + b2`.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    input: usize,
    hidden: usize,
    output: usize,
}

impl Mlp {
    pub fn declare<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        rng: &mut R,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
    ) -> Result<Self, AutodiffError> {
        let w1 = store.add(
            format!("{}.W1", name),
            Init::Glorot.sample(Shape::Matrix(hidden, input), rng),
        )?;
        let b1 = store.add(format!("{}.b1", name), Tensor::zeros(Shape::Vector(hidden)))?;
        let w2 = store.add(
            format!("{}.W2", name),
            Init::Glorot.sample(Shape::Matrix(output, hidden), rng),
        )?;
        let b2 = store.add(format!("{}.b2", name), Tensor::zeros(Shape::Vector(output)))?;
        Ok(Mlp {
            w1,
            b1,
            w2,
            b2,
            input,
            hidden,
            output,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    pub fn forward(&self, g: &mut Graph, x: NodeId) -> Result<NodeId, AutodiffError> {
        let w1 = g.param(self.w1);
        let pre = g.matvec(w1, x)?;
        self.finish(g, pre)
    }

    /// `W1[:, offset..offset + len(x)] · x`, one block of the first layer.
    pub fn first_layer_block(&self, g: &mut Graph, x: NodeId, offset: usize) -> Result<NodeId, AutodiffError> {
        let w1 = g.param(self.w1);
        g.matvec_block(w1, x, offset)
    }

    /// Completes the network from the first-layer product `W1 · x`.
    pub fn finish(&self, g: &mut Graph, pre: NodeId) -> Result<NodeId, AutodiffError> {
        let b1 = g.param(self.b1);
        let w2 = g.param(self.w2);
        let b2 = g.param(self.b2);
        let z = g.add(pre, b1)?;
        let h = g.tanh(z);
        let out = g.matvec(w2, h)?;
        g.add(out, b2)
    }
}
