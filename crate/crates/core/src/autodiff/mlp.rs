//! Fully-connected scalar networks evaluated on second-order jets, with an
//! exact reverse pass through the jet computation for parameter gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jet::{dot, Jet2, JetCotangent};
use crate::error::{Error, Result};

/// A model whose output jet at a point is differentiable in its parameters.
pub trait JetModel: Send + Sync {
    fn input_dim(&self) -> usize;

    fn param_count(&self) -> usize;

    fn jet(&self, params: &[f64], x: &[f64]) -> Jet2;

    /// Adds `∂⟨cotangent, jet(x)⟩/∂θ` into `out`.
    fn pullback(&self, params: &[f64], x: &[f64], cotangent: &JetCotangent, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Sine,
}

impl Activation {
    /// `(σ, σ', σ'', σ''')` at `z`.
    #[inline]
    fn derivatives(self, z: f64) -> [f64; 4] {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                let s1 = 1.0 - t * t;
                [t, s1, -2.0 * t * s1, s1 * (6.0 * t * t - 2.0)]
            }
            Activation::Sine => {
                let (s, c) = z.sin_cos();
                [s, c, -s, -c]
            }
        }
    }
}

/// Architecture of a scalar-output MLP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub seed: u64,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, activation: Activation, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_widths,
            activation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidModel("input dimension must be at least 1".into()));
        }
        if self.hidden_widths.is_empty() {
            return Err(Error::InvalidModel("at least one hidden layer is required".into()));
        }
        if self.hidden_widths.contains(&0) {
            return Err(Error::InvalidModel("hidden widths must be at least 1".into()));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of each affine layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend(&self.hidden_widths);
        dims.push(1);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|(fan_in, fan_out)| fan_in * fan_out + fan_out)
            .sum()
    }
}

/// Flat parameter vector, layer-major: `W` (row-major, `out×in`) then `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Scaled-uniform weights in `±√(6/(fan_in+fan_out))`, zero biases.
pub fn init_params(spec: &MlpSpec) -> Result<ParameterVector> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = Vec::with_capacity(spec.param_count());
    for (fan_in, fan_out) in spec.layer_shapes() {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            values.push(rng.random_range(-limit..limit));
        }
        values.extend(std::iter::repeat_n(0.0, fan_out));
    }
    Ok(ParameterVector(values))
}

/// Jet of the network output at `x`.
pub fn forward_jet(spec: &MlpSpec, params: &ParameterVector, x: &[f64]) -> Result<Jet2> {
    let mlp = Mlp::new(spec.clone())?;
    if params.len() != mlp.param_count() {
        return Err(Error::DimensionMismatch {
            what: "parameter vector",
            expected: mlp.param_count(),
            actual: params.len(),
        });
    }
    if x.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            what: "input point",
            expected: spec.input_dim,
            actual: x.len(),
        });
    }
    Ok(mlp.jet(params.as_slice(), x))
}

#[derive(Debug, Clone, Copy)]
struct LayerLayout {
    fan_in: usize,
    fan_out: usize,
    weights: usize,
    biases: usize,
}

/// An [`MlpSpec`] with its parameter layout resolved.
#[derive(Debug, Clone)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<LayerLayout>,
    param_count: usize,
}

/// Jets of every unit in a layer: values `n`, gradients `n×d`, Hessians `n×d×d`.
#[derive(Debug, Clone)]
struct LayerJets {
    val: Vec<f64>,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl LayerJets {
    fn zeros(n: usize, d: usize) -> Self {
        Self {
            val: vec![0.0; n],
            grad: vec![0.0; n * d],
            hess: vec![0.0; n * d * d],
        }
    }

    fn input(x: &[f64]) -> Self {
        let d = x.len();
        let mut jets = Self::zeros(d, d);
        jets.val.copy_from_slice(x);
        for i in 0..d {
            jets.grad[i * d + i] = 1.0;
        }
        jets
    }
}

impl Mlp {
    pub fn new(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut offset = 0;
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let weights = offset;
                let biases = weights + fan_in * fan_out;
                offset = biases + fan_out;
                LayerLayout {
                    fan_in,
                    fan_out,
                    weights,
                    biases,
                }
            })
            .collect();
        Ok(Self {
            spec,
            layers,
            param_count: offset,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    fn affine(&self, layer: &LayerLayout, params: &[f64], input: &LayerJets) -> LayerJets {
        let d = self.spec.input_dim;
        let dd = d * d;
        let mut z = LayerJets::zeros(layer.fan_out, d);
        for i in 0..layer.fan_out {
            let row = &params[layer.weights + i * layer.fan_in..layer.weights + (i + 1) * layer.fan_in];
            z.val[i] = params[layer.biases + i] + dot(row, &input.val);
            let grad = &mut z.grad[i * d..(i + 1) * d];
            let hess = &mut z.hess[i * dd..(i + 1) * dd];
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for (g, a) in grad.iter_mut().zip(&input.grad[j * d..(j + 1) * d]) {
                    *g += w * a;
                }
                for (h, a) in hess.iter_mut().zip(&input.hess[j * dd..(j + 1) * dd]) {
                    *h += w * a;
                }
            }
        }
        z
    }

    fn activate(&self, z: &LayerJets) -> LayerJets {
        let d = self.spec.input_dim;
        let dd = d * d;
        let n = z.val.len();
        let mut a = LayerJets::zeros(n, d);
        for i in 0..n {
            let [s0, s1, s2, _] = self.spec.activation.derivatives(z.val[i]);
            a.val[i] = s0;
            let zg = &z.grad[i * d..(i + 1) * d];
            for k in 0..d {
                a.grad[i * d + k] = s1 * zg[k];
                for l in 0..d {
                    a.hess[i * dd + k * d + l] = s2 * zg[k] * zg[l] + s1 * z.hess[i * dd + k * d + l];
                }
            }
        }
        a
    }

    /// Forward pass without a tape. The first layer sees the coordinate
    /// jets, so its gradients are the weight rows and its Hessians vanish.
    fn forward(&self, params: &[f64], x: &[f64]) -> Jet2 {
        let d = self.spec.input_dim;
        let dd = d * d;
        let first = &self.layers[0];
        let mut z = LayerJets::zeros(first.fan_out, d);
        for i in 0..first.fan_out {
            let row = &params[first.weights + i * d..first.weights + (i + 1) * d];
            z.val[i] = params[first.biases + i] + dot(row, x);
            z.grad[i * d..(i + 1) * d].copy_from_slice(row);
        }
        let mut hess_zero = true;
        for layer in &self.layers[1..] {
            // activation in place
            for i in 0..z.val.len() {
                let [s0, s1, s2, _] = self.spec.activation.derivatives(z.val[i]);
                z.val[i] = s0;
                let zg = &mut z.grad[i * d..(i + 1) * d];
                let zh = &mut z.hess[i * dd..(i + 1) * dd];
                for k in 0..d {
                    for l in 0..d {
                        let curv = s2 * zg[k] * zg[l];
                        zh[k * d + l] = if hess_zero { curv } else { curv + s1 * zh[k * d + l] };
                    }
                }
                for g in zg.iter_mut() {
                    *g *= s1;
                }
            }
            hess_zero = false;
            let mut next = LayerJets::zeros(layer.fan_out, d);
            for i in 0..layer.fan_out {
                let row = &params[layer.weights + i * layer.fan_in..layer.weights + (i + 1) * layer.fan_in];
                next.val[i] = params[layer.biases + i] + dot(row, &z.val);
                let grad = &mut next.grad[i * d..(i + 1) * d];
                for (&w, ag) in row.iter().zip(z.grad.chunks_exact(d)) {
                    for (g, a) in grad.iter_mut().zip(ag) {
                        *g += w * a;
                    }
                }
                let hess = &mut next.hess[i * dd..(i + 1) * dd];
                for (&w, ah) in row.iter().zip(z.hess.chunks_exact(dd)) {
                    for (h, a) in hess.iter_mut().zip(ah) {
                        *h += w * a;
                    }
                }
            }
            z = next;
        }
        Jet2 {
            value: z.val[0],
            grad: z.grad,
            hess: z.hess,
        }
    }

    /// Forward pass keeping every layer: `[a0, z1, a1, …, z_L]`.
    fn tape(&self, params: &[f64], x: &[f64]) -> Vec<LayerJets> {
        let mut tape = Vec::with_capacity(2 * self.layers.len());
        tape.push(LayerJets::input(x));
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let z = self.affine(layer, params, tape.last().unwrap());
            if l == last {
                tape.push(z);
            } else {
                let a = self.activate(&z);
                tape.push(z);
                tape.push(a);
            }
        }
        tape
    }

    /// Reverse pass of the activation jet map: cotangent on `a = σ(z)` to
    /// cotangent on `z`.
    fn activation_adjoint(&self, z: &LayerJets, abar: &LayerJets) -> LayerJets {
        let d = self.spec.input_dim;
        let dd = d * d;
        let n = z.val.len();
        let mut zbar = LayerJets::zeros(n, d);
        for i in 0..n {
            let [_, s1, s2, s3] = self.spec.activation.derivatives(z.val[i]);
            let zg = &z.grad[i * d..(i + 1) * d];
            let zh = &z.hess[i * dd..(i + 1) * dd];
            let ag = &abar.grad[i * d..(i + 1) * d];
            let ah = &abar.hess[i * dd..(i + 1) * dd];

            let mut quad = 0.0;
            for k in 0..d {
                for l in 0..d {
                    quad += ah[k * d + l] * zg[k] * zg[l];
                }
            }
            zbar.val[i] = s1 * abar.val[i] + s2 * dot(ag, zg) + s3 * quad + s2 * dot(ah, zh);
            for m in 0..d {
                let mut sym = 0.0;
                for l in 0..d {
                    sym += (ah[m * d + l] + ah[l * d + m]) * zg[l];
                }
                zbar.grad[i * d + m] = s1 * ag[m] + s2 * sym;
            }
            for (dst, src) in zbar.hess[i * dd..(i + 1) * dd].iter_mut().zip(ah) {
                *dst = s1 * src;
            }
        }
        zbar
    }
}

impl JetModel for Mlp {
    fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    fn param_count(&self) -> usize {
        self.param_count
    }

    fn jet(&self, params: &[f64], x: &[f64]) -> Jet2 {
        self.forward(params, x)
    }

    fn pullback(&self, params: &[f64], x: &[f64], cotangent: &JetCotangent, out: &mut [f64]) {
        let d = self.spec.input_dim;
        let dd = d * d;
        let tape = self.tape(params, x);
        let mut zbar = LayerJets {
            val: vec![cotangent.value],
            grad: cotangent.grad.clone(),
            hess: cotangent.hess.clone(),
        };
        // tape index of the input to layer l is 2l, of z_l is 2l + 1
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &tape[2 * l];
            for i in 0..layer.fan_out {
                let zv = zbar.val[i];
                let zg = &zbar.grad[i * d..(i + 1) * d];
                let zh = &zbar.hess[i * dd..(i + 1) * dd];
                out[layer.biases + i] += zv;
                let row = layer.weights + i * layer.fan_in;
                for j in 0..layer.fan_in {
                    out[row + j] += zv * input.val[j]
                        + dot(zg, &input.grad[j * d..(j + 1) * d])
                        + dot(zh, &input.hess[j * dd..(j + 1) * dd]);
                }
            }
            if l == 0 {
                break;
            }
            let mut abar = LayerJets::zeros(layer.fan_in, d);
            for i in 0..layer.fan_out {
                let zv = zbar.val[i];
                let zg = &zbar.grad[i * d..(i + 1) * d];
                let zh = &zbar.hess[i * dd..(i + 1) * dd];
                for j in 0..layer.fan_in {
                    let w = params[layer.weights + i * layer.fan_in + j];
                    abar.val[j] += w * zv;
                    for (dst, src) in abar.grad[j * d..(j + 1) * d].iter_mut().zip(zg) {
                        *dst += w * src;
                    }
                    for (dst, src) in abar.hess[j * dd..(j + 1) * dd].iter_mut().zip(zh) {
                        *dst += w * src;
                    }
                }
            }
            zbar = self.activation_adjoint(&tape[2 * l - 1], &abar);
        }
    }
}

/// Linear-in-parameters model `u(x) = Σ_p θ_p m_p(x)` over all monomials
/// of total degree at most `degree`.
#[derive(Debug, Clone)]
pub struct PolynomialModel {
    input_dim: usize,
    exponents: Vec<Vec<u32>>,
}

impl PolynomialModel {
    pub fn new(input_dim: usize, degree: u32) -> Self {
        let mut exponents = vec![vec![]];
        for _ in 0..input_dim {
            exponents = exponents
                .into_iter()
                .flat_map(|prefix: Vec<u32>| {
                    let used: u32 = prefix.iter().sum();
                    (0..=degree - used).map(move |e| {
                        let mut next = prefix.clone();
                        next.push(e);
                        next
                    })
                })
                .collect();
        }
        exponents.sort_by_key(|e| (e.iter().sum::<u32>(), std::cmp::Reverse(e.clone())));
        Self {
            input_dim,
            exponents,
        }
    }

    pub fn basis_jet(&self, index: usize, x: &[f64]) -> Jet2 {
        let d = self.input_dim;
        let alpha = &self.exponents[index];
        let mono = |powers: &[i64]| -> f64 {
            let mut coeff = 1.0;
            let mut value = 1.0;
            for (k, (&a, &p)) in alpha.iter().zip(powers).enumerate() {
                let a = a as i64;
                if a < p {
                    return 0.0;
                }
                for q in 0..p {
                    coeff *= (a - q) as f64;
                }
                value *= x[k].powi((a - p) as i32);
            }
            coeff * value
        };
        let mut jet = Jet2::constant(mono(&vec![0; d]), d);
        for i in 0..d {
            let mut p = vec![0i64; d];
            p[i] = 1;
            jet.grad[i] = mono(&p);
            for j in 0..d {
                let mut p = vec![0i64; d];
                p[i] += 1;
                p[j] += 1;
                jet.hess[i * d + j] = mono(&p);
            }
        }
        jet
    }
}

impl JetModel for PolynomialModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn param_count(&self) -> usize {
        self.exponents.len()
    }

    fn jet(&self, params: &[f64], x: &[f64]) -> Jet2 {
        let d = self.input_dim;
        let mut out = Jet2::constant(0.0, d);
        for (p, &theta) in params.iter().enumerate() {
            let b = self.basis_jet(p, x);
            out.value += theta * b.value;
            for (o, g) in out.grad.iter_mut().zip(&b.grad) {
                *o += theta * g;
            }
            for (o, h) in out.hess.iter_mut().zip(&b.hess) {
                *o += theta * h;
            }
        }
        out
    }

    fn pullback(&self, _params: &[f64], x: &[f64], cotangent: &JetCotangent, out: &mut [f64]) {
        for (p, o) in out.iter_mut().enumerate() {
            *o += cotangent.pair(&self.basis_jet(p, x));
        }
    }
}
