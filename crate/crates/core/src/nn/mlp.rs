use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::Scalar;
use crate::seeding::StreamRng;

/// Dense layer computing `x · weight + bias` on row-major batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F> {
    /// Shape `(in, out)`.
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Scalar> Linear<F> {
    /// Uniform fan-in initialisation, `U(-s/sqrt(in), s/sqrt(in))` for both
    /// weights and biases.
    pub fn init(inputs: usize, outputs: usize, scale: f64, rng: &mut StreamRng) -> Self {
        let bound = scale / (inputs as f64).sqrt();
        let weight = Array2::from_shape_simple_fn((inputs, outputs), || {
            F::of(rng.random_range(-bound..=bound))
        });
        let bias =
            Array1::from_shape_simple_fn(outputs, || F::of(rng.random_range(-bound..=bound)));
        Self { weight, bias }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    fn apply(&self, x: ArrayView2<F>) -> Array2<F> {
        let mut z = x.dot(&self.weight);
        z += &self.bias;
        z
    }
}

/// Multi-layer perceptron with ReLU hidden activations and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    layers: Vec<Linear<F>>,
}

/// Layer inputs saved by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    /// `inputs[0]` is the network input, `inputs[l]` the ReLU output of layer `l - 1`.
    inputs: Vec<Array2<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads<F> {
    pub weights: Vec<Array2<F>>,
    pub biases: Vec<Array1<F>>,
}

impl<F: Scalar> MlpGrads<F> {
    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// Flattened in the same order as [`Mlp::params_flat`].
    pub fn flat(&self) -> Vec<F> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }
}

impl<F: Scalar> Mlp<F> {
    /// `sizes = [input, hidden.., output]`. The output layer's init range is
    /// multiplied by `output_scale`.
    pub fn new(sizes: &[usize], output_scale: f64, rng: &mut StreamRng) -> Self {
        assert!(
            sizes.len() >= 2,
            "an mlp needs at least input and output sizes"
        );
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let scale = if i + 1 == n { output_scale } else { 1.0 };
                Linear::init(sizes[i], sizes[i + 1], scale, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Linear<F>>) -> Self {
        assert!(!layers.is_empty());
        for pair in layers.windows(2) {
            assert_eq!(
                pair[0].outputs(),
                pair[1].inputs(),
                "layer sizes do not chain"
            );
        }
        Self { layers }
    }

    pub fn layers(&self) -> &[Linear<F>] {
        &self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, x: ArrayView2<F>) -> Array2<F> {
        let mut h = self.layers[0].apply(x);
        for layer in &self.layers[1..] {
            h.mapv_inplace(relu);
            h = layer.apply(h.view());
        }
        h
    }

    pub fn forward_cached(&self, x: ArrayView2<F>) -> (Array2<F>, ForwardCache<F>) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_owned());
        let last = self.layers.len() - 1;
        let mut out = None;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.apply(inputs[i].view());
            if i == last {
                out = Some(z);
            } else {
                z.mapv_inplace(relu);
                inputs.push(z);
            }
        }
        (out.expect("at least one layer"), ForwardCache { inputs })
    }

    /// Backpropagate `d_out` (gradient of the loss w.r.t. the network output).
    ///
    /// Returns parameter gradients (skipped when `param_grads` is false) and
    /// the gradient w.r.t. the network input.
    pub fn backward(
        &self,
        cache: &ForwardCache<F>,
        d_out: Array2<F>,
        param_grads: bool,
    ) -> (Option<MlpGrads<F>>, Array2<F>) {
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(if param_grads { n } else { 0 });
        let mut biases = Vec::with_capacity(if param_grads { n } else { 0 });
        let mut dz = d_out;
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let input = &cache.inputs[l];
            if param_grads {
                weights.push(input.t().dot(&dz));
                biases.push(dz.sum_axis(Axis(0)));
            }
            let mut dh = dz.dot(&layer.weight.t());
            if l > 0 {
                // ReLU mask: the cached input of layer l is relu(z_{l-1}).
                Zip::from(&mut dh).and(input).for_each(|d, &h| {
                    if h <= F::zero() {
                        *d = F::zero();
                    }
                });
            }
            dz = dh;
        }
        let grads = if param_grads {
            weights.reverse();
            biases.reverse();
            Some(MlpGrads { weights, biases })
        } else {
            None
        };
        (grads, dz)
    }

    pub fn params_flat(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.weight.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[F]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut at = 0;
        for l in &mut self.layers {
            for w in l.weight.iter_mut() {
                *w = flat[at];
                at += 1;
            }
            for b in l.bias.iter_mut() {
                *b = flat[at];
                at += 1;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|x| x.is_finite()))
    }

    /// `self <- (1 - tau) * self + tau * online`.
    pub fn soft_update_from(&mut self, online: &Mlp<F>, tau: F) {
        let keep = F::one() - tau;
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            Zip::from(&mut t.weight)
                .and(&o.weight)
                .for_each(|t, &o| *t = keep * *t + tau * o);
            Zip::from(&mut t.bias)
                .and(&o.bias)
                .for_each(|t, &o| *t = keep * *t + tau * o);
        }
    }

    /// Same architecture and values in another float type.
    pub fn cast<G: Scalar>(&self) -> Mlp<G> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Linear {
                    weight: l.weight.mapv(|x| G::of(x.to_f64_lossy())),
                    bias: l.bias.mapv(|x| G::of(x.to_f64_lossy())),
                })
                .collect(),
        }
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Linear<F>] {
        &mut self.layers
    }
}

#[inline]
fn relu<F: Scalar>(x: F) -> F {
    if x > F::zero() {
        x
    } else {
        F::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use crate::seeding::stream;
    use ndarray::Array2;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream(seed, "batch", 0);
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
    }

    #[test]
    fn forward_matches_cached_forward() {
        let mut rng = stream(1, "net", 0);
        let net: Mlp<f64> = Mlp::new(&[3, 16, 16, 2], 1.0, &mut rng);
        let x = random_batch(5, 3, 2);
        let (y, _) = net.forward_cached(x.view());
        assert_eq!(net.forward(x.view()), y);
        assert_eq!(y.dim(), (5, 2));
        assert_eq!(net.sizes(), vec![3, 16, 16, 2]);
    }

    #[test]
    fn single_layer_network_is_affine() {
        let mut rng = stream(1, "net", 0);
        let net: Mlp<f64> = Mlp::new(&[2, 1], 1.0, &mut rng);
        let x = ndarray::array![[0.0, 0.0], [1.0, 0.0]];
        let y = net.forward(x.view());
        let l = &net.layers()[0];
        assert!((y[[0, 0]] - l.bias[0]).abs() < 1e-15);
        assert!((y[[1, 0]] - l.bias[0] - l.weight[[0, 0]]).abs() < 1e-15);
    }

    /// Loss = sum(c ⊙ net(x)); backward against central differences.
    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = stream(4, "net", 0);
        let mut net: Mlp<f64> = Mlp::new(&[4, 12, 12, 3], 1.0, &mut rng);
        let x = random_batch(6, 4, 5);
        let c = random_batch(6, 3, 6);
        let (_, cache) = net.forward_cached(x.view());
        let (grads, d_in) = net.backward(&cache, c.clone(), true);
        let analytic = grads.unwrap().flat();
        let params = net.params_flat();
        let report = gradient_check(
            &params,
            &analytic,
            |p| {
                net.set_params_flat(p);
                (&net.forward(x.view()) * &c).sum()
            },
            1e-5,
            1e-6,
        );
        assert!(report.passed(), "{report:?}");

        // input gradient
        let mut net2 = net.clone();
        net2.set_params_flat(&params);
        let flat_x: Vec<f64> = x.iter().copied().collect();
        let report = gradient_check(
            &flat_x,
            &d_in.iter().copied().collect::<Vec<_>>(),
            |p| {
                let xp = Array2::from_shape_vec((6, 4), p.to_vec()).unwrap();
                (&net2.forward(xp.view()) * &c).sum()
            },
            1e-5,
            1e-6,
        );
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn soft_update_with_unit_tau_copies() {
        let mut rng = stream(2, "net", 0);
        let online: Mlp<f32> = Mlp::new(&[3, 8, 1], 1.0, &mut rng);
        let mut target: Mlp<f32> = Mlp::new(&[3, 8, 1], 1.0, &mut rng);
        assert_ne!(online, target);
        target.soft_update_from(&online, 1.0);
        assert_eq!(online, target);
    }

    #[test]
    fn flat_round_trip() {
        let mut rng = stream(2, "net", 0);
        let mut net: Mlp<f32> = Mlp::new(&[3, 8, 2], 0.01, &mut rng);
        let flat = net.params_flat();
        assert_eq!(flat.len(), 3 * 8 + 8 + 8 * 2 + 2);
        let doubled: Vec<f32> = flat.iter().map(|x| x * 2.0).collect();
        net.set_params_flat(&doubled);
        assert_eq!(net.params_flat(), doubled);
    }
}
