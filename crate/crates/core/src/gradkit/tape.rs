use std::cell::RefCell;
use std::collections::BTreeMap;

use crate::scalar::{sigmoid, Scalar};
use crate::tensor::{ShapeMismatch, Tensor};

use super::GradError;

#[derive(Debug, Clone, Copy)]
enum Op<T> {
    Leaf { param: bool },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Min(usize, usize),
    Max(usize, usize),
    MatMul(usize, usize),
    Sum(usize),
    Mean(usize),
    Neg(usize),
    Abs(usize),
    Sqrt(usize),
    Exp(usize),
    Sigmoid(usize),
    Tanh(usize),
    Sin(usize),
    Cos(usize),
    LeakyRelu(usize, T),
    Scale(usize, T),
    Offset(usize, T),
}

impl<T> Op<T> {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf { .. } => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Min(..) => "min",
            Op::Max(..) => "max",
            Op::MatMul(..) => "matmul",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::Neg(_) => "neg",
            Op::Abs(_) => "abs",
            Op::Sqrt(_) => "sqrt",
            Op::Exp(_) => "exp",
            Op::Sigmoid(_) => "sigmoid",
            Op::Tanh(_) => "tanh",
            Op::Sin(_) => "sin",
            Op::Cos(_) => "cos",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Scale(..) => "scale",
            Op::Offset(..) => "offset",
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

/// Append-only record of primitive operations. Parents always precede their
/// children, so a single reverse sweep visits every node once.
pub struct Tape<T> {
    nodes: RefCell<Vec<Node<T>>>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T> {
    tape: &'t Tape<T>,
    id: usize,
}

/// Gradients of a scalar loss with respect to every parameter leaf.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    by_id: BTreeMap<usize, Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, var: Var<'_, T>) -> Option<&Tensor<T>> {
        self.by_id.get(&var.id)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// A leaf whose gradient is reported by [`Tape::backward`].
    pub fn param(&self, value: Tensor<T>) -> Result<Var<'_, T>, GradError> {
        self.push(value, Op::Leaf { param: true })
    }

    /// A leaf treated as a constant.
    pub fn constant(&self, value: Tensor<T>) -> Result<Var<'_, T>, GradError> {
        self.push(value, Op::Leaf { param: false })
    }

    pub fn scalar(&self, value: T) -> Result<Var<'_, T>, GradError> {
        self.constant(Tensor::scalar(value))
    }

    fn push(&self, value: Tensor<T>, op: Op<T>) -> Result<Var<'_, T>, GradError> {
        if !value.all_finite() {
            return Err(GradError::NonFinite { op: op.name() });
        }
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        Ok(Var {
            tape: self,
            id: nodes.len() - 1,
        })
    }

    fn value_of(&self, id: usize) -> Tensor<T> {
        self.nodes.borrow()[id].value.clone()
    }

    fn unary(&self, a: usize, op: Op<T>, f: impl Fn(T) -> T) -> Result<Var<'_, T>, GradError> {
        let v = self.nodes.borrow()[a].value.map(f);
        self.push(v, op)
    }

    fn binary(
        &self,
        a: usize,
        b: usize,
        op: Op<T>,
        f: impl Fn(T, T) -> T,
    ) -> Result<Var<'_, T>, GradError> {
        let v = {
            let nodes = self.nodes.borrow();
            broadcast_zip(&nodes[a].value, &nodes[b].value, f)
                .map_err(|source| GradError::Shape { op: op.name(), source })?
        };
        self.push(v, op)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_, T>) -> Result<Gradients<T>, GradError> {
        let nodes = self.nodes.borrow();
        let (rows, cols) = nodes[loss.id].value.shape();
        if (rows, cols) != (1, 1) {
            return Err(GradError::NonScalarLoss { rows, cols });
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(Tensor::scalar(T::one()));
        let mut by_id = BTreeMap::new();

        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            let Some(g) = grads[id].take() else {
                if let Op::Leaf { param: true } = node.op {
                    let (r, c) = node.value.shape();
                    by_id.insert(id, Tensor::zeros(r, c));
                }
                continue;
            };
            if !g.all_finite() {
                return Err(GradError::NonFiniteGradient { op: node.op.name() });
            }
            let y = &node.value;
            let val = |i: usize| &nodes[i].value;
            match node.op {
                Op::Leaf { param } => {
                    if param {
                        by_id.insert(id, g);
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, a, reduce_to(&g, val(a)));
                    accumulate(&mut grads, b, reduce_to(&g, val(b)));
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, a, reduce_to(&g, val(a)));
                    accumulate(&mut grads, b, reduce_to(&g.map(|x| -x), val(b)));
                }
                Op::Mul(a, b) => {
                    let ga = broadcast_zip(&g, val(b), |g, b| g * b).expect("forward shapes");
                    let gb = broadcast_zip(&g, val(a), |g, a| g * a).expect("forward shapes");
                    accumulate(&mut grads, a, reduce_to(&ga, val(a)));
                    accumulate(&mut grads, b, reduce_to(&gb, val(b)));
                }
                Op::Div(a, b) => {
                    let ga = broadcast_zip(&g, val(b), |g, b| g / b).expect("forward shapes");
                    // d(a/b)/db = -(a/b)/b = -y/b
                    let yb = broadcast_zip(y, val(b), |y, b| -y / b).expect("forward shapes");
                    let gb = g.zip_map(&yb, |g, d| g * d).expect("output shape");
                    accumulate(&mut grads, a, reduce_to(&ga, val(a)));
                    accumulate(&mut grads, b, reduce_to(&gb, val(b)));
                }
                Op::Min(a, b) | Op::Max(a, b) => {
                    let take_min = matches!(node.op, Op::Min(..));
                    let pick_a = broadcast_zip(val(a), val(b), |x, z| {
                        let chosen = if take_min { x <= z } else { x >= z };
                        if chosen {
                            T::one()
                        } else {
                            T::zero()
                        }
                    })
                    .expect("forward shapes");
                    let ga = g.zip_map(&pick_a, |g, m| g * m).expect("output shape");
                    let gb = g.zip_map(&pick_a, |g, m| g * (T::one() - m)).expect("output shape");
                    accumulate(&mut grads, a, reduce_to(&ga, val(a)));
                    accumulate(&mut grads, b, reduce_to(&gb, val(b)));
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul(&val(b).transpose()).expect("forward shapes");
                    let gb = val(a).transpose().matmul(&g).expect("forward shapes");
                    accumulate(&mut grads, a, ga);
                    accumulate(&mut grads, b, gb);
                }
                Op::Sum(a) | Op::Mean(a) => {
                    let (r, c) = val(a).shape();
                    let mut s = g.item().expect("reduction output is scalar");
                    if matches!(node.op, Op::Mean(_)) {
                        s = s / T::lit((r * c) as f64);
                    }
                    accumulate(&mut grads, a, Tensor::filled(r, c, s));
                }
                Op::Neg(a) => accumulate(&mut grads, a, g.map(|x| -x)),
                Op::Scale(a, k) => accumulate(&mut grads, a, g.map(|x| x * k)),
                Op::Offset(a, _) => accumulate(&mut grads, a, g),
                Op::Abs(a) => {
                    let d = val(a).map(|x| {
                        if x > T::zero() {
                            T::one()
                        } else if x < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        }
                    });
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
                Op::LeakyRelu(a, slope) => {
                    let d = val(a).map(|x| if x > T::zero() { T::one() } else { slope });
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
                Op::Sqrt(a) => {
                    let d = y.map(|y| T::lit(0.5) / y);
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
                Op::Exp(a) => accumulate(&mut grads, a, hadamard(&g, y)),
                Op::Sigmoid(a) => {
                    let d = y.map(|s| s * (T::one() - s));
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
                Op::Tanh(a) => {
                    let d = y.map(|t| T::one() - t * t);
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
                Op::Sin(a) => {
                    let d = val(a).map(T::cos);
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
                Op::Cos(a) => {
                    let d = val(a).map(|x| -x.sin());
                    accumulate(&mut grads, a, hadamard(&g, &d));
                }
            }
        }
        Ok(Gradients { by_id })
    }
}

fn hadamard<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    a.zip_map(b, |x, y| x * y).expect("elementwise derivative shape")
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: usize, g: Tensor<T>) {
    grads[id] = Some(match grads[id].take() {
        Some(prev) => prev.zip_map(&g, |a, b| a + b).expect("gradient shape"),
        None => g,
    });
}

/// Sums an upstream gradient down to a broadcast (scalar) operand's shape.
fn reduce_to<T: Scalar>(g: &Tensor<T>, operand: &Tensor<T>) -> Tensor<T> {
    if operand.is_scalar() && !g.is_scalar() {
        Tensor::scalar(g.sum())
    } else {
        g.clone()
    }
}

fn broadcast_zip<T: Scalar>(
    a: &Tensor<T>,
    b: &Tensor<T>,
    f: impl Fn(T, T) -> T,
) -> Result<Tensor<T>, ShapeMismatch> {
    if a.shape() == b.shape() {
        a.zip_map(b, f)
    } else if a.is_scalar() {
        let x = a.data()[0];
        Ok(b.map(|y| f(x, y)))
    } else if b.is_scalar() {
        let y = b.data()[0];
        Ok(a.map(|x| f(x, y)))
    } else {
        Err(ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        })
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn value(&self) -> Tensor<T> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.shape()
    }

    /// Value of a scalar node.
    pub fn item(&self) -> Option<T> {
        self.tape.nodes.borrow()[self.id].value.item()
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn add(self, rhs: Self) -> Result<Self, GradError> {
        self.tape.binary(self.id, rhs.id, Op::Add(self.id, rhs.id), |a, b| a + b)
    }

    pub fn sub(self, rhs: Self) -> Result<Self, GradError> {
        self.tape.binary(self.id, rhs.id, Op::Sub(self.id, rhs.id), |a, b| a - b)
    }

    pub fn mul(self, rhs: Self) -> Result<Self, GradError> {
        self.tape.binary(self.id, rhs.id, Op::Mul(self.id, rhs.id), |a, b| a * b)
    }

    pub fn div(self, rhs: Self) -> Result<Self, GradError> {
        self.tape.binary(self.id, rhs.id, Op::Div(self.id, rhs.id), |a, b| a / b)
    }

    pub fn min(self, rhs: Self) -> Result<Self, GradError> {
        self.tape
            .binary(self.id, rhs.id, Op::Min(self.id, rhs.id), |a, b| if a <= b { a } else { b })
    }

    pub fn max(self, rhs: Self) -> Result<Self, GradError> {
        self.tape
            .binary(self.id, rhs.id, Op::Max(self.id, rhs.id), |a, b| if a >= b { a } else { b })
    }

    pub fn matmul(self, rhs: Self) -> Result<Self, GradError> {
        let v = {
            let nodes = self.tape.nodes.borrow();
            nodes[self.id]
                .value
                .matmul(&nodes[rhs.id].value)
                .map_err(|source| GradError::Shape { op: "matmul", source })?
        };
        self.tape.push(v, Op::MatMul(self.id, rhs.id))
    }

    pub fn sum(self) -> Result<Self, GradError> {
        let s = self.tape.nodes.borrow()[self.id].value.sum();
        self.tape.push(Tensor::scalar(s), Op::Sum(self.id))
    }

    pub fn mean(self) -> Result<Self, GradError> {
        let s = {
            let nodes = self.tape.nodes.borrow();
            let v = &nodes[self.id].value;
            v.sum() / T::lit(v.len() as f64)
        };
        self.tape.push(Tensor::scalar(s), Op::Mean(self.id))
    }

    pub fn neg(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Neg(self.id), |x| -x)
    }

    pub fn abs(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Abs(self.id), T::abs)
    }

    pub fn sqrt(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Sqrt(self.id), T::sqrt)
    }

    pub fn exp(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Exp(self.id), T::exp)
    }

    pub fn sigmoid(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Sigmoid(self.id), sigmoid)
    }

    pub fn tanh(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Tanh(self.id), T::tanh)
    }

    pub fn sin(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Sin(self.id), T::sin)
    }

    pub fn cos(self) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Cos(self.id), T::cos)
    }

    /// `max(0, x) + slope * min(0, x)`; the derivative at 0 is `slope`.
    pub fn leaky_relu(self, slope: T) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::LeakyRelu(self.id, slope), |x| {
            crate::scalar::leaky_relu(x, slope)
        })
    }

    /// Multiplication by a constant scalar.
    pub fn scale(self, k: T) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Scale(self.id, k), |x| x * k)
    }

    /// Addition of a constant scalar.
    pub fn offset(self, k: T) -> Result<Self, GradError> {
        self.tape.unary(self.id, Op::Offset(self.id, k), |x| x + k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Tensor<f64> {
        Tensor::scalar(x)
    }

    #[test]
    fn square_gradient() {
        let tape = Tape::new();
        let x = tape.param(s(3.0)).unwrap();
        let y = x.mul(x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(x).unwrap().item(), Some(6.0));
    }

    #[test]
    fn sigmoid_gradient_at_zero() {
        let tape = Tape::new();
        let x = tape.param(s(0.0)).unwrap();
        let y = x.sigmoid().unwrap();
        assert_eq!(y.item(), Some(0.5));
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(x).unwrap().item(), Some(0.25));
    }

    #[test]
    fn l1_of_sigmoid() {
        let tape = Tape::<f64>::new();
        let d = tape.param(Tensor::zeros(1, 2)).unwrap();
        let loss = d.sigmoid().unwrap().abs().unwrap().sum().unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.wrt(d).unwrap().data(), &[0.25, 0.25]);
    }

    #[test]
    fn leaky_relu_values_and_kink() {
        let tape = Tape::new();
        let a = tape.param(s(-0.2)).unwrap();
        assert!((a.leaky_relu(0.1).unwrap().item().unwrap() + 0.02).abs() < 1e-15);
        let b = tape.param(s(0.3)).unwrap();
        assert_eq!(b.leaky_relu(0.1).unwrap().item(), Some(0.3));
        let z = tape.param(s(0.0)).unwrap();
        let y = z.leaky_relu(0.1).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(z).unwrap().item(), Some(0.1));
    }

    #[test]
    fn abs_subgradient_at_zero() {
        let tape = Tape::new();
        let z = tape.param(s(0.0)).unwrap();
        let g = tape.backward(z.abs().unwrap()).unwrap();
        assert_eq!(g.wrt(z).unwrap().item(), Some(0.0));
    }

    #[test]
    fn shape_mismatch_and_nonfinite() {
        let tape = Tape::<f64>::new();
        let a = tape.constant(Tensor::zeros(2, 3)).unwrap();
        let b = tape.constant(Tensor::zeros(3, 2)).unwrap();
        assert!(matches!(a.add(b), Err(GradError::Shape { op: "add", .. })));
        assert!(a.matmul(b).is_ok());
        assert!(matches!(b.matmul(b), Err(GradError::Shape { .. })));
        let z = tape.scalar(0.0).unwrap();
        let one = tape.scalar(1.0).unwrap();
        assert!(matches!(one.div(z), Err(GradError::NonFinite { op: "div" })));
        assert!(matches!(
            tape.constant(Tensor::scalar(f64::NAN)),
            Err(GradError::NonFinite { .. })
        ));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let tape = Tape::<f64>::new();
        let a = tape.param(Tensor::zeros(2, 2)).unwrap();
        assert!(matches!(
            tape.backward(a),
            Err(GradError::NonScalarLoss { rows: 2, cols: 2 })
        ));
    }

    #[test]
    fn scalar_broadcast_gradients_reduce() {
        let tape = Tape::new();
        let k = tape.param(s(2.0)).unwrap();
        let v = tape.param(Tensor::row_vector(&[1.0, 2.0, 3.0])).unwrap();
        let loss = k.mul(v).unwrap().sum().unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.wrt(k).unwrap().item(), Some(6.0));
        assert_eq!(g.wrt(v).unwrap().data(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn unused_param_gets_zero_gradient() {
        let tape = Tape::new();
        let x = tape.param(s(1.0)).unwrap();
        let unused = tape.param(Tensor::ones(2, 2)).unwrap();
        let g = tape.backward(x.exp().unwrap()).unwrap();
        assert_eq!(g.wrt(unused).unwrap(), &Tensor::zeros(2, 2));
        assert_eq!(g.len(), 2);
    }
}
