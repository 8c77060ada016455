use rand::Rng;

use crate::autodiff::{AutodiffError, Graph, Init, NodeId, ParamId, ParameterStore, Shape, Tensor};

/// Hidden and cell state of one LSTM step.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: NodeId,
    pub c: NodeId,
}

/// A single-direction LSTM layer.
///
/// The four gate blocks are stacked in one `4h x (input + h)` matrix in the
/// order input, forget, output, candidate:
///
/// ```text
/// z  = W · (x ∘ h) + b
/// i, f, o = logistic(z_i), logistic(z_f), logistic(z_o)
/// g  = tanh(z_g)
/// c' = f ⊙ c + i ⊙ g
/// h' = o ⊙ tanh(c')
/// ```
#[derive(Clone, Debug)]
pub struct LstmCell {
    weights: ParamId,
    bias: ParamId,
    input: usize,
    hidden: usize,
}

impl LstmCell {
    pub fn declare<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        rng: &mut R,
        name: &str,
        input: usize,
        hidden: usize,
    ) -> Result<Self, AutodiffError> {
        let w_shape = Shape::Matrix(4 * hidden, input + hidden);
        let weights = store.add(format!("{}.W", name), Init::Glorot.sample(w_shape, rng))?;
        let bias = store.add(format!("{}.b", name), Tensor::zeros(Shape::Vector(4 * hidden)))?;
        Ok(LstmCell {
            weights,
            bias,
            input,
            hidden,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn weights(&self) -> ParamId {
        self.weights
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    pub fn initial_state(&self, g: &mut Graph) -> LstmState {
        let h = g.constant(Tensor::zeros(Shape::Vector(self.hidden)));
        let c = g.constant(Tensor::zeros(Shape::Vector(self.hidden)));
        LstmState { h, c }
    }

    pub fn step(&self, g: &mut Graph, state: LstmState, x: NodeId) -> Result<LstmState, AutodiffError> {
        let hd = self.hidden;
        let w = g.param(self.weights);
        let b = g.param(self.bias);
        let xh = g.concat(&[x, state.h])?;
        let z = g.matvec(w, xh)?;
        let z = g.add(z, b)?;
        let zi = g.slice(z, 0, hd)?;
        let zf = g.slice(z, hd, hd)?;
        let zo = g.slice(z, 2 * hd, hd)?;
        let zg = g.slice(z, 3 * hd, hd)?;
        let i = g.logistic(zi);
        let f = g.logistic(zf);
        let o = g.logistic(zo);
        let cand = g.tanh(zg);
        let keep = g.mul(f, state.c)?;
        let write = g.mul(i, cand)?;
        let c = g.add(keep, write)?;
        let tc = g.tanh(c);
        let h = g.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    /// Runs the cell over `xs` from a zero state and returns every hidden state.
    pub fn run(&self, g: &mut Graph, xs: &[NodeId]) -> Result<Vec<NodeId>, AutodiffError> {
        let mut state = self.initial_state(g);
        let mut out = Vec::with_capacity(xs.len());
        for &x in xs {
            state = self.step(g, state, x)?;
            out.push(state.h);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct BiLstmLayer {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

/// Stacked bidirectional LSTM; each layer's concatenated outputs feed the next.
#[derive(Clone, Debug)]
pub struct BiLstm {
    layers: Vec<BiLstmLayer>,
}

impl BiLstm {
    pub fn declare<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        rng: &mut R,
        input: usize,
        hidden: usize,
        layers: usize,
    ) -> Result<Self, AutodiffError> {
        let mut out = Vec::with_capacity(layers);
        let mut dim = input;
        for l in 0..layers {
            let forward = LstmCell::declare(store, rng, &format!("lstm.{}.fwd", l), dim, hidden)?;
            let backward = LstmCell::declare(store, rng, &format!("lstm.{}.bwd", l), dim, hidden)?;
            out.push(BiLstmLayer { forward, backward });
            dim = 2 * hidden;
        }
        Ok(BiLstm { layers: out })
    }

    pub fn layers(&self) -> &[BiLstmLayer] {
        &self.layers
    }

    pub fn output_dim(&self) -> usize {
        2 * self.layers.last().map_or(0, |l| l.forward.hidden_dim())
    }

    /// Encodes the whole sequence with one left-to-right and one
    /// right-to-left pass per layer, keeping all intermediate states.
    pub fn run(&self, g: &mut Graph, xs: &[NodeId]) -> Result<Vec<NodeId>, AutodiffError> {
        let mut inputs = xs.to_vec();
        for layer in &self.layers {
            let fwd = layer.forward.run(g, &inputs)?;
            let reversed: Vec<NodeId> = inputs.iter().rev().copied().collect();
            let mut bwd = layer.backward.run(g, &reversed)?;
            bwd.reverse();
            inputs = fwd
                .iter()
                .zip(&bwd)
                .map(|(&f, &b)| g.concat(&[f, b]))
                .collect::<Result<_, _>>()?;
        }
        Ok(inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_cell(input: usize, hidden: usize) -> (ParameterStore, LstmCell) {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cell = LstmCell::declare(&mut store, &mut rng, "cell", input, hidden).unwrap();
        let w = cell.weights();
        store.value_mut(w).data_mut().iter_mut().for_each(|v| *v = 0.0);
        (store, cell)
    }

    #[test]
    fn zero_weights_halve_the_cell() {
        let (store, cell) = zero_cell(3, 2);
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::vector(vec![0.7, -1.0, 2.0]));
        let h = g.constant(Tensor::vector(vec![0.3, 0.1]));
        let c = g.constant(Tensor::vector(vec![1.0, -2.0]));
        let next = cell.step(&mut g, LstmState { h, c }, x).unwrap();
        let cv = g.value(next.c).data().to_vec();
        let hv = g.value(next.h).data().to_vec();
        assert_eq!(cv, vec![0.5, -1.0]);
        for (hk, ck) in hv.iter().zip([1.0f64, -2.0]) {
            assert!((hk - 0.5 * (0.5 * ck).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_zero_weights_gives_zero_output() {
        let (store, cell) = zero_cell(2, 3);
        let mut g = Graph::new(&store);
        let s0 = cell.initial_state(&mut g);
        let x = g.constant(Tensor::vector(vec![1.0, 1.0]));
        let s1 = cell.step(&mut g, s0, x).unwrap();
        assert_eq!(g.value(s1.h).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn step_is_deterministic() {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = LstmCell::declare(&mut store, &mut rng, "cell", 2, 2).unwrap();
        let mut g = Graph::new(&store);
        let s0 = cell.initial_state(&mut g);
        let x = g.constant(Tensor::vector(vec![0.2, -0.4]));
        let a = cell.step(&mut g, s0, x).unwrap();
        let b = cell.step(&mut g, s0, x).unwrap();
        assert_eq!(g.value(a.h), g.value(b.h));
        assert_eq!(g.value(a.c), g.value(b.c));
    }
}
