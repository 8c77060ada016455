//! Minimal reverse-mode automatic differentiation.
//!
//! A [`Graph`] evaluates every operation eagerly as it is built and records
//! enough structure to run a single backward pass from a scalar loss.
//! Trainable tensors live in a [`ParameterStore`], which the graph borrows
//! read-only; gradients come back as a [`Gradients`] value that the store
//! consumes in [`ParameterStore::adam_step`].

mod graph;
mod params;
mod tensor;

use thiserror::Error;

pub use graph::{Backward, Graph, NodeId};
pub use params::{AdamConfig, Gradients, Init, ParamId, ParameterStore};
pub use tensor::{Shape, Tensor};

#[derive(Debug, Error, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {left} and {right}")]
    ShapeMismatch {
        op: &'static str,
        left: Shape,
        right: Shape,
    },
    #[error("{op}: expected a vector, got {shape}")]
    NotAVector { op: &'static str, shape: Shape },
    #[error("{op}: expected a matrix, got {shape}")]
    NotAMatrix { op: &'static str, shape: Shape },
    #[error("{op}: index {index} out of range for length {len}")]
    IndexOutOfRange { op: &'static str, index: usize, len: usize },
    #[error("{0}: needs at least one operand")]
    Empty(&'static str),
    #[error("loss must be scalar, got shape {0}")]
    NonScalarLoss(Shape),
    #[error("non-finite value in parameter '{0}'")]
    NonFinite(String),
    #[error("parameter '{0}' already exists")]
    DuplicateParameter(String),
    #[error("unknown parameter id {0}")]
    UnknownParameter(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, shape: Shape) -> Tensor {
        let data = (0..shape.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::new(shape, data)
    }

    /// Central finite differences of `f` with respect to every parameter entry.
    fn check_gradients<F>(store: &mut ParameterStore, f: F)
    where
        F: Fn(&mut Graph) -> NodeId,
    {
        let analytic = {
            let mut graph = Graph::new(store);
            let loss = f(&mut graph);
            graph.backward(loss).unwrap()
        };
        let eps = 1e-6;
        let ids: Vec<ParamId> = store.ids().collect();
        for id in ids {
            for k in 0..store.value(id).shape().len() {
                let orig = store.value(id).data()[k];
                store.value_mut(id).data_mut()[k] = orig + eps;
                let plus = {
                    let mut g = Graph::new(store);
                    let l = f(&mut g);
                    g.scalar(l)
                };
                store.value_mut(id).data_mut()[k] = orig - eps;
                let minus = {
                    let mut g = Graph::new(store);
                    let l = f(&mut g);
                    g.scalar(l)
                };
                store.value_mut(id).data_mut()[k] = orig;
                let numeric = (plus - minus) / (2.0 * eps);
                let exact = analytic.get(id).map_or(0.0, |g| g[k]);
                let err = (numeric - exact).abs() / numeric.abs().max(exact.abs()).max(1e-3);
                assert!(
                    err < 1e-4,
                    "{}[{}]: analytic {} numeric {}",
                    store.name(id),
                    k,
                    exact,
                    numeric
                );
            }
        }
    }

    #[test]
    fn forward_values() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let z = g.constant(Tensor::vector(vec![0.0; 3]));
        let t = g.tanh(z);
        assert_eq!(g.value(t).data(), &[0.0, 0.0, 0.0]);

        let a = g.constant(Tensor::vector(vec![1.0, 2.0]));
        let b = g.constant(Tensor::vector(vec![3.0]));
        let c = g.concat(&[a, b]).unwrap();
        assert_eq!(g.value(c).data(), &[1.0, 2.0, 3.0]);

        let id = g.constant(Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]));
        let x = g.constant(Tensor::vector(vec![5.0, 7.0]));
        let y = g.matvec(id, x).unwrap();
        assert_eq!(g.value(y).data(), &[5.0, 7.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let w = g.constant(Tensor::zeros(Shape::Matrix(2, 3)));
        let x = g.constant(Tensor::zeros(Shape::Vector(2)));
        let err = g.matvec(w, x).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2x3]") && msg.contains("[2]"), "{}", msg);

        let a = g.constant(Tensor::zeros(Shape::Vector(2)));
        let b = g.constant(Tensor::zeros(Shape::Vector(3)));
        assert!(matches!(g.add(a, b), Err(AutodiffError::ShapeMismatch { .. })));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let v = g.constant(Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(g.backward(v), Err(AutodiffError::NonScalarLoss(_))));
    }

    #[test]
    fn linear_map_gradient_rows_equal_input() {
        let mut store = ParameterStore::new();
        let w = store.add("W", Tensor::matrix(3, 2, vec![0.1; 6])).unwrap();
        let mut g = Graph::new(&store);
        let wn = g.param(w);
        let x = g.constant(Tensor::vector(vec![2.0, -3.0]));
        let y = g.matvec(wn, x).unwrap();
        let loss = g.sum(y);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap(), &[2.0, -3.0, 2.0, -3.0, 2.0, -3.0]);
    }

    #[test]
    fn pick_gradient_is_one_hot() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let v = g.constant(Tensor::vector(vec![0.3, 0.1, 0.9, 0.4]));
        let loss = g.pick(v, 2).unwrap();
        let back = g.backward_nodes(loss).unwrap();
        assert_eq!(back.node(v).unwrap(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn unreachable_parameters_have_zero_gradient() {
        let mut store = ParameterStore::new();
        let used = store.add("used", Tensor::vector(vec![1.0, 2.0])).unwrap();
        store.add("unused", Tensor::vector(vec![1.0])).unwrap();
        let mut g = Graph::new(&store);
        let u = g.param(used);
        let loss = g.sum(u);
        let map = g.backward(loss).unwrap().to_map(&store);
        assert_eq!(map["used"].data(), &[1.0, 1.0]);
        assert_eq!(map["unused"].data(), &[0.0]);
    }

    #[test]
    fn max_over_routes_to_lowest_tied_index() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let v = g.constant(Tensor::vector(vec![0.5, 2.0, 1.0, 2.0]));
        let m = g.max_over(v, &[3, 1, 2]).unwrap();
        assert_eq!(g.scalar(m), 2.0);
        let back = g.backward_nodes(m).unwrap();
        assert_eq!(back.node(v).unwrap(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn hinge_is_zero_below_margin() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let neg = g.constant(Tensor::scalar(-0.5));
        let pos = g.constant(Tensor::scalar(0.75));
        let h0 = g.hinge(neg).unwrap();
        let h1 = g.hinge(pos).unwrap();
        assert_eq!(g.scalar(h0), 0.0);
        assert_eq!(g.scalar(h1), 0.75);
    }

    #[test]
    fn every_op_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut store = ParameterStore::new();
        let w = store.add("W", random_tensor(&mut rng, Shape::Matrix(4, 6))).unwrap();
        let a = store.add("a", random_tensor(&mut rng, Shape::Vector(3))).unwrap();
        let b = store.add("b", random_tensor(&mut rng, Shape::Vector(3))).unwrap();
        let e = store.add("E", random_tensor(&mut rng, Shape::Matrix(5, 3))).unwrap();

        check_gradients(&mut store, |g| {
            let wn = g.param(w);
            let an = g.param(a);
            let bn = g.param(b);
            let row = g.lookup(e, 3).unwrap();
            let prod = g.mul(an, row).unwrap();
            let diff = g.sub(prod, bn).unwrap();
            let x = g.concat(&[diff, bn]).unwrap();
            let h = g.matvec(wn, x).unwrap();
            let h = g.tanh(h);
            let left = g.matvec_block(wn, an, 2).unwrap();
            let left = g.logistic(left);
            let s = g.add_all(&[h, left, h]).unwrap();
            let s = g.scalar_mul(s, 1.5);
            let s = g.scalar_add(s, 0.25);
            let part = g.slice(s, 1, 3).unwrap();
            let best = g.max_over(part, &[0, 1, 2]).unwrap();
            let first = g.pick(s, 0).unwrap();
            let total = g.sum(part);
            let margin = g.sub(best, first).unwrap();
            let hinge = g.hinge(margin).unwrap();
            g.add_all(&[hinge, total, first]).unwrap()
        });
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut store = ParameterStore::new();
        let w = store.add("W", random_tensor(&mut rng, Shape::Matrix(8, 8))).unwrap();
        let x = random_tensor(&mut rng, Shape::Vector(8));
        let run = || {
            let mut g = Graph::new(&store);
            let wn = g.param(w);
            let xn = g.constant(x.clone());
            let y = g.matvec(wn, xn).unwrap();
            let y = g.tanh(y);
            g.value(y).clone()
        };
        assert_eq!(run().data(), run().data());
    }
}
