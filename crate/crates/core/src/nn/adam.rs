use ndarray::{Array1, Array2, Zip};

use super::{Mlp, MlpGrads, Scalar};

/// Adam with bias correction, `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
#[derive(Debug, Clone)]
pub struct Adam<F> {
    lr: F,
    beta1: F,
    beta2: F,
    eps: F,
    t: i32,
    m_w: Vec<Array2<F>>,
    v_w: Vec<Array2<F>>,
    m_b: Vec<Array1<F>>,
    v_b: Vec<Array1<F>>,
}

impl<F: Scalar> Adam<F> {
    pub const EPS: f64 = 1e-8;

    pub fn new(net: &Mlp<F>, lr: f64, betas: (f64, f64)) -> Self {
        let m_w: Vec<_> = net
            .layers()
            .iter()
            .map(|l| Array2::zeros(l.weight.raw_dim()))
            .collect();
        let m_b: Vec<_> = net
            .layers()
            .iter()
            .map(|l| Array1::zeros(l.bias.raw_dim()))
            .collect();
        Self {
            lr: F::of(lr),
            beta1: F::of(betas.0),
            beta2: F::of(betas.1),
            eps: F::of(Self::EPS),
            t: 0,
            v_w: m_w.clone(),
            v_b: m_b.clone(),
            m_w,
            m_b,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, net: &mut Mlp<F>, grads: &MlpGrads<F>) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let one = F::one();
        let c1 = one - b1.powi(self.t);
        let c2 = one - b2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut F, m: &mut F, v: &mut F, g: F| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            Zip::from(&mut layer.weight)
                .and(&mut self.m_w[i])
                .and(&mut self.v_w[i])
                .and(&grads.weights[i])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut self.m_b[i])
                .and(&mut self.v_b[i])
                .and(&grads.biases[i])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
    }
}

/// Adam for a single scalar parameter (the log temperature).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarAdam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    t: i32,
    m: f64,
    v: f64,
}

impl ScalarAdam {
    pub fn new(lr: f64, betas: (f64, f64)) -> Self {
        Self {
            lr,
            beta1: betas.0,
            beta2: betas.1,
            t: 0,
            m: 0.0,
            v: 0.0,
        }
    }

    pub fn step(&mut self, param: &mut f64, grad: f64) {
        self.t += 1;
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad;
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad;
        let m_hat = self.m / (1.0 - self.beta1.powi(self.t));
        let v_hat = self.v / (1.0 - self.beta2.powi(self.t));
        *param -= self.lr * m_hat / (v_hat.sqrt() + 1e-8);
    }
}
