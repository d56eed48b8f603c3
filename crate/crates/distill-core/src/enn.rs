//! Data model and exact evaluation of ternary-activation essence networks.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{InputLayout, Label};
use crate::error::{Error, Result};

/// A single linear-threshold neuron: `y = act(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    #[serde(with = "decimal_vec")]
    pub weights: Vec<f64>,
    #[serde(with = "decimal")]
    pub bias: f64,
    /// Training provenance, e.g. which subconcept pair an SVM separated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

impl Neuron {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Neuron { weights, bias, provenance: None }
    }

    pub fn with_provenance(weights: Vec<f64>, bias: f64, prov: impl Into<String>) -> Self {
        Neuron { weights, bias, provenance: Some(prov.into()) }
    }

    /// Pre-activation with fixed index-ascending summation order.
    pub fn pre_activation(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (w, v) in self.weights.iter().zip(x) {
            acc += w * v;
        }
        acc + self.bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerKind {
    Differentia,
    Subconcept,
    Concept,
}

/// Activation applied by every neuron in a layer. `Sign` is ternary with
/// `sign(0) = 0`; `Indicator` is the binary `1 if pre > 0 else 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Sign,
    Indicator,
}

impl Activation {
    pub fn apply(&self, pre: f64) -> f64 {
        match self {
            Activation::Sign => {
                if pre > 0.0 {
                    1.0
                } else if pre < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Activation::Indicator => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    pub activation: Activation,
    pub neurons: Vec<Neuron>,
}

impl Layer {
    pub fn new(kind: LayerKind, neurons: Vec<Neuron>) -> Self {
        Layer { kind, activation: Activation::Sign, neurons }
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }

    pub fn input_width(&self) -> usize {
        self.neurons.first().map_or(0, |n| n.weights.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputHead {
    /// Full set of maximizing concept indices plus a seeded uniform choice.
    Argmax,
    /// `exp(C) / sum(exp(C))` over concept raw scores.
    Softmax,
}

pub const NETWORK_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub version: u32,
    pub input_layout: InputLayout,
    pub layers: Vec<Layer>,
    pub output_head: OutputHead,
    pub concept_labels: Vec<Label>,
}

/// Every neuron's activation plus the concept layer's raw scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    /// Activated outputs, one vector per layer.
    pub layers: Vec<Vec<f64>>,
    /// Pre-activation scores of the final (concept) layer.
    pub concept_raw: Vec<f64>,
}

/// Result of applying the output head.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkOutput {
    Classes {
        /// All maximizing concept indices, ascending.
        tie_set: Vec<usize>,
        /// Seeded uniform choice among the tie set.
        choice: usize,
        /// Label of the chosen concept neuron.
        label: Label,
    },
    Probabilities(Vec<f64>),
}

impl Network {
    pub fn new(
        input_layout: InputLayout,
        layers: Vec<Layer>,
        output_head: OutputHead,
        concept_labels: Vec<Label>,
    ) -> Self {
        Network { version: NETWORK_FORMAT_VERSION, input_layout, layers, output_head, concept_labels }
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_layout.len();
        for (li, layer) in self.layers.iter().enumerate() {
            for n in &layer.neurons {
                if n.weights.len() != width {
                    return Err(Error::Model(format!(
                        "layer {li}: neuron expects {} inputs, upstream width is {width}",
                        n.weights.len()
                    )));
                }
                if !n.bias.is_finite() || n.weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::Model(format!("layer {li}: non-finite parameter")));
                }
            }
            width = layer.width();
        }
        let concept_width = self.layers.last().map_or(0, |l| l.width());
        if concept_width == 0 {
            return Err(Error::Model("empty concept layer".into()));
        }
        if self.concept_labels.len() != concept_width {
            return Err(Error::Model(format!(
                "{} concept labels for {} concept neurons",
                self.concept_labels.len(),
                concept_width
            )));
        }
        Ok(())
    }

    /// Deterministic full forward pass. Pure in `(self, x)`.
    pub fn forward_eval(&self, x: &[f64]) -> Result<ActivationRecord> {
        if x.len() != self.input_layout.len() {
            return Err(Error::InputLayout {
                expected: self.input_layout.describe(),
                got: format!("{} values", x.len()),
            });
        }
        let mut layers_out: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut concept_raw = Vec::new();
        let mut cur: &[f64] = x;
        for (li, layer) in self.layers.iter().enumerate() {
            let raw: Vec<f64> = layer.neurons.iter().map(|n| n.pre_activation(cur)).collect();
            if li + 1 == self.layers.len() {
                concept_raw = raw.clone();
            }
            let act: Vec<f64> = raw.iter().map(|&p| layer.activation.apply(p)).collect();
            layers_out.push(act);
            cur = layers_out.last().unwrap();
        }
        Ok(ActivationRecord { layers: layers_out, concept_raw })
    }

    /// Applies the output head to the concept raw scores.
    pub fn network_output(&self, x: &[f64], seed: u64) -> Result<NetworkOutput> {
        let rec = self.forward_eval(x)?;
        self.head_output(&rec.concept_raw, seed)
    }

    pub fn head_output(&self, concept_raw: &[f64], seed: u64) -> Result<NetworkOutput> {
        if concept_raw.is_empty() {
            return Err(Error::Model("empty concept layer".into()));
        }
        match self.output_head {
            OutputHead::Argmax => {
                let (tie_set, choice) = argmax_tie_set(concept_raw, seed);
                let label = self.concept_labels[choice].clone();
                Ok(NetworkOutput::Classes { tie_set, choice, label })
            }
            OutputHead::Softmax => Ok(NetworkOutput::Probabilities(softmax(concept_raw))),
        }
    }

    /// Replaces every hidden ternary neuron with a positive indicator copy
    /// and a fully negated copy; concept raw scores are preserved exactly.
    pub fn ternary_to_binary(&self) -> Network {
        let mut layers = Vec::with_capacity(self.layers.len());
        // Whether the upstream vector was doubled by translation.
        let mut upstream_doubled = false;
        let n_layers = self.layers.len();
        for (li, layer) in self.layers.iter().enumerate() {
            let remap = |n: &Neuron| -> Neuron {
                if !upstream_doubled {
                    return n.clone();
                }
                let mut w = Vec::with_capacity(n.weights.len() * 2);
                for &wi in &n.weights {
                    w.push(wi);
                    w.push(-wi);
                }
                Neuron { weights: w, bias: n.bias, provenance: n.provenance.clone() }
            };
            let is_last = li + 1 == n_layers;
            if is_last || layer.activation == Activation::Indicator {
                layers.push(Layer {
                    kind: layer.kind,
                    activation: layer.activation,
                    neurons: layer.neurons.iter().map(remap).collect(),
                });
                if is_last {
                    break;
                }
                upstream_doubled = false;
                continue;
            }
            let mut neurons = Vec::with_capacity(layer.neurons.len() * 2);
            for n in &layer.neurons {
                let pos = remap(n);
                let neg = Neuron {
                    weights: pos.weights.iter().map(|w| -w).collect(),
                    bias: -pos.bias,
                    provenance: pos.provenance.clone(),
                };
                neurons.push(pos);
                neurons.push(neg);
            }
            layers.push(Layer { kind: layer.kind, activation: Activation::Indicator, neurons });
            upstream_doubled = true;
        }
        Network {
            version: self.version,
            input_layout: self.input_layout.clone(),
            layers,
            output_head: self.output_head,
            concept_labels: self.concept_labels.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Network> {
        let net: Network = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }
}

pub fn argmax_tie_set(scores: &[f64], seed: u64) -> (Vec<usize>, usize) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tie_set: Vec<usize> =
        scores.iter().enumerate().filter(|(_, &s)| s == max).map(|(i, _)| i).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let choice = tie_set[rng.random_range(0..tie_set.len())];
    (tie_set, choice)
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// f64 as decimal string. Rust's shortest round-trip formatting keeps the
/// value bit-exact across serialize/parse.
mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

mod decimal_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| format!("{x}")))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.into_iter().map(|s| s.parse().map_err(serde::de::Error::custom)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_net() -> Network {
        Network::new(
            InputLayout::Vector(2),
            vec![
                Layer::new(LayerKind::Differentia, vec![
                    Neuron::new(vec![1.0, 1.0], -1.0),
                    Neuron::new(vec![1.0, -1.0], 0.0),
                ]),
                Layer::new(LayerKind::Concept, vec![
                    Neuron::new(vec![1.0, 1.0], 0.0),
                    Neuron::new(vec![-1.0, -1.0], 0.0),
                ]),
            ],
            OutputHead::Argmax,
            vec![Label::class("a"), Label::class("b")],
        )
    }

    #[test]
    fn forward_ternary_outputs() {
        let net = tiny_net();
        let rec = net.forward_eval(&[1.0, 1.0]).unwrap();
        // w=(1,1), b=-1 on (1,1) -> +1 ; w=(1,-1), b=0 on (1,1) -> tie 0.
        assert_eq!(rec.layers[0], vec![1.0, 0.0]);
        for layer in &rec.layers {
            assert!(layer.iter().all(|v| *v == -1.0 || *v == 0.0 || *v == 1.0));
        }
    }

    #[test]
    fn argmax_tie_reported() {
        let (ties, choice) = argmax_tie_set(&[2.0, 2.0], 7);
        assert_eq!(ties, vec![0, 1]);
        assert!(ties.contains(&choice));
    }

    #[test]
    fn softmax_symmetry() {
        let p = softmax(&[0.0, 0.0]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = softmax(&[3.0, 1.0, -2.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn ternary_to_binary_preserves_scores() {
        let net = tiny_net();
        let bin = net.ternary_to_binary();
        for x in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]] {
            let a = net.forward_eval(&x).unwrap().concept_raw;
            let b = bin.forward_eval(&x).unwrap().concept_raw;
            assert_eq!(a, b, "input {x:?}");
        }
    }

    #[test]
    fn json_roundtrip_exact() {
        let mut net = tiny_net();
        net.layers[0].neurons[0].weights[0] = 0.1 + 0.2; // not exactly 0.3
        let s = net.to_json().unwrap();
        let back = Network::from_json(&s).unwrap();
        assert_eq!(net, back);
        assert!(s.contains("0.30000000000000004"));
    }
}
