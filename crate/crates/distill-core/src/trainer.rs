//! Network construction from labeled data: subconcept partitioning plus
//! SVM-built differentia, subconcept, and concept layers.

use std::collections::HashMap;

use crate::cluster::{complete_linkage, Dendrogram};
use crate::condense::integerize;
use crate::dataset::{Dataset, Label, LabelKind};
use crate::enn::{Activation, Layer, LayerKind, Network, NetworkOutput, Neuron, OutputHead};
use crate::error::{Error, Result};
use crate::svm::{max_margin_plane, SeparatingPlane};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMethod {
    AdaptiveCut,
    MisclassificationSplit,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub method: PartitionMethod,
    /// Minimum total subconcept count for the adaptive cut; clamped up to
    /// one per concept.
    pub min_k: usize,
    pub seed: u64,
    /// Split concepts into shared-active-feature components first. Only
    /// meaningful for 0/1 symbolic inputs; ignored otherwise.
    pub refine: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { method: PartitionMethod::AdaptiveCut, min_k: 1, seed: 0, refine: false }
    }
}

/// One (possibly refined) concept: a target label and its sample indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    pub label: Label,
    pub members: Vec<usize>,
}

/// Concepts with their samples divided into linearly separable subconcepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptPartition {
    pub label: Label,
    pub subconcepts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubconceptPartition {
    pub concepts: Vec<ConceptPartition>,
}

impl SubconceptPartition {
    /// Global subconcept list as (concept index, subconcept index, members).
    pub fn flat(&self) -> Vec<(usize, usize, &Vec<usize>)> {
        let mut out = Vec::new();
        for (ci, c) in self.concepts.iter().enumerate() {
            for (si, s) in c.subconcepts.iter().enumerate() {
                out.push((ci, si, s));
            }
        }
        out
    }

    pub fn total_subconcepts(&self) -> usize {
        self.concepts.iter().map(|c| c.subconcepts.len()).sum()
    }
}

/// A subconcept pair whose maximum-margin plane still misclassifies samples.
#[derive(Debug, Clone)]
pub struct PairFailure {
    /// (concept index, subconcept index) of each side.
    pub a: (usize, usize),
    pub b: (usize, usize),
    /// Misclassified sample indices into the dataset, per side.
    pub mis_a: Vec<usize>,
    pub mis_b: Vec<usize>,
}

/// Memoizes pairwise SVM fits. Keys are the two sorted index sets in
/// canonical order; querying the flipped orientation negates the plane.
#[derive(Default)]
pub struct SvmCache {
    planes: HashMap<(Vec<usize>, Vec<usize>), CachedPlane>,
}

#[derive(Clone)]
struct CachedPlane {
    plane: SeparatingPlane,
    /// Misclassified sample indices into the dataset.
    mis: Vec<usize>,
}

impl SvmCache {
    /// Maximum-margin plane with `pos` on the positive side. Misclassified
    /// indices are reported as dataset indices.
    pub fn plane(
        &mut self,
        ds: &Dataset,
        pos: &[usize],
        neg: &[usize],
    ) -> Result<(SeparatingPlane, Vec<usize>)> {
        let flipped = neg < pos;
        let key = if flipped {
            (neg.to_vec(), pos.to_vec())
        } else {
            (pos.to_vec(), neg.to_vec())
        };
        if !self.planes.contains_key(&key) {
            let cached = fit_plane(ds, &key.0, &key.1)?;
            self.planes.insert(key.clone(), cached);
        }
        let cached = self.planes.get(&key).unwrap().clone();
        let mut plane = cached.plane;
        if flipped {
            plane.w.iter_mut().for_each(|w| *w = -*w);
            plane.b = -plane.b;
        }
        Ok((plane, cached.mis))
    }
}

fn fit_plane(ds: &Dataset, pos: &[usize], neg: &[usize]) -> Result<CachedPlane> {
    // Two singletons have a closed-form separator: the perpendicular
    // bisector, scaled to unit functional margin.
    if pos.len() == 1 && neg.len() == 1 {
        let p = &ds.samples[pos[0]].input;
        let q = &ds.samples[neg[0]].input;
        let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 > 0.0 {
            let w: Vec<f64> = p.iter().zip(q).map(|(a, b)| 2.0 * (a - b) / d2).collect();
            let b = 1.0 - w.iter().zip(p).map(|(wi, xi)| wi * xi).sum::<f64>();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            return Ok(CachedPlane {
                plane: SeparatingPlane { w, b, margin: 1.0 / norm, misclassified: vec![] },
                mis: vec![],
            });
        }
    }
    let a: Vec<Vec<f64>> = pos.iter().map(|&i| ds.samples[i].input.clone()).collect();
    let b: Vec<Vec<f64>> = neg.iter().map(|&i| ds.samples[i].input.clone()).collect();
    let plane = max_margin_plane(&a, &b)?;
    let mis = plane
        .misclassified
        .iter()
        .map(|&k| if k < pos.len() { pos[k] } else { neg[k - pos.len()] })
        .collect();
    Ok(CachedPlane { plane, mis })
}

/// Concepts in label first-appearance order, one per distinct label.
pub fn concepts_from_labels(ds: &Dataset) -> Vec<Concept> {
    let mut order: Vec<Concept> = Vec::new();
    for (i, s) in ds.samples.iter().enumerate() {
        match order.iter_mut().find(|c| c.label.key() == s.label.key()) {
            Some(c) => c.members.push(i),
            None => order.push(Concept { label: s.label.clone(), members: vec![i] }),
        }
    }
    order
}

fn is_symbolic(ds: &Dataset) -> bool {
    ds.samples.iter().all(|s| s.input.iter().all(|&v| v == 0.0 || v == 1.0))
}

/// Splits each concept into components of samples that share at least one
/// active feature, directly or transitively.
pub fn component_concepts(ds: &Dataset) -> Vec<Concept> {
    let mut out = Vec::new();
    for concept in concepts_from_labels(ds) {
        let members = &concept.members;
        // Union-find over local positions, joined through shared features.
        let mut parent: Vec<usize> = (0..members.len()).collect();
        fn root(parent: &mut Vec<usize>, mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let dim = ds.layout.len();
        for f in 0..dim {
            let mut first: Option<usize> = None;
            for (li, &gi) in members.iter().enumerate() {
                if ds.samples[gi].input[f] == 1.0 {
                    match first {
                        None => first = Some(li),
                        Some(fi) => {
                            let (a, b) = (root(&mut parent, fi), root(&mut parent, li));
                            parent[a] = b;
                        }
                    }
                }
            }
        }
        let mut comps: Vec<(usize, Vec<usize>)> = Vec::new();
        for li in 0..members.len() {
            let r = root(&mut parent, li);
            match comps.iter_mut().find(|(cr, _)| *cr == r) {
                Some((_, v)) => v.push(members[li]),
                None => comps.push((r, vec![members[li]])),
            }
        }
        comps.sort_by_key(|(_, v)| v[0]);
        for (_, v) in comps {
            out.push(Concept { label: concept.label.clone(), members: v });
        }
    }
    out
}

/// Dataset-level view of [`component_concepts`] for class labels: samples
/// are relabeled `label#k` when a concept splits into several components.
pub fn refine_concepts_by_components(ds: &Dataset) -> Dataset {
    let concepts = component_concepts(ds);
    let mut relabeled = ds.clone();
    let mut counts: HashMap<String, usize> = HashMap::new();
    for c in &concepts {
        *counts.entry(c.label.key()).or_insert(0) += 1;
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    for c in &concepts {
        let total = counts[&c.label.key()];
        let k = seen.entry(c.label.key()).or_insert(0);
        let label = match (&c.label, total) {
            (Label::Class(name), t) if t > 1 => Label::Class(format!("{name}#{k}")),
            (l, _) => l.clone(),
        };
        *k += 1;
        for &i in &c.members {
            relabeled.samples[i].label = label.clone();
        }
    }
    relabeled
}

/// Re-fits every distinct subconcept pair and reports the ones whose plane
/// does not perfectly separate them.
pub fn check_pairwise_separability(
    part: &SubconceptPartition,
    ds: &Dataset,
    cache: &mut SvmCache,
) -> Result<Vec<PairFailure>> {
    let flat = part.flat();
    let mut failures = Vec::new();
    for i in 0..flat.len() {
        for j in i + 1..flat.len() {
            let (ci, si, a) = flat[i];
            let (cj, sj, b) = flat[j];
            let (_, mis) = cache.plane(ds, a, b)?;
            if !mis.is_empty() {
                failures.push(PairFailure {
                    a: (ci, si),
                    b: (cj, sj),
                    mis_a: mis.iter().copied().filter(|m| a.contains(m)).collect(),
                    mis_b: mis.iter().copied().filter(|m| b.contains(m)).collect(),
                });
            }
        }
    }
    Ok(failures)
}

/// Hierarchical clustering per concept with a shared cut height, re-cut one
/// extra subconcept at a time until every pair separates.
pub fn partition_adaptive_cut(ds: &Dataset, min_k: usize) -> Result<SubconceptPartition> {
    let mut cache = SvmCache::default();
    partition_adaptive_cut_from(ds, concepts_from_labels(ds), min_k, &mut cache)
}

pub fn partition_adaptive_cut_from(
    ds: &Dataset,
    concepts: Vec<Concept>,
    min_k: usize,
    cache: &mut SvmCache,
) -> Result<SubconceptPartition> {
    ds.check_contradictions()?;
    let dendros: Vec<Dendrogram> = concepts
        .iter()
        .map(|c| {
            let pts: Vec<Vec<f64>> =
                c.members.iter().map(|&i| ds.samples[i].input.clone()).collect();
            complete_linkage(&pts)
        })
        .collect();
    // Shared cut levels, coarsest first. Cutting just below a merge height
    // undoes that merge in every tree; level 0 still keeps duplicate points
    // together.
    let mut heights: Vec<f64> =
        dendros.iter().flat_map(|d| d.merges.iter().map(|m| m.height)).collect();
    heights.sort_by(|a, b| b.partial_cmp(a).unwrap());
    heights.dedup();
    let mut levels = vec![f64::INFINITY];
    for (i, &h) in heights.iter().enumerate() {
        let below = heights.get(i + 1).copied().unwrap_or(0.0).min(h.max(0.0));
        levels.push(if h > 0.0 { below } else { 0.0 });
    }
    levels.dedup();

    let cut_all = |level: f64| -> SubconceptPartition {
        SubconceptPartition {
            concepts: concepts
                .iter()
                .zip(&dendros)
                .map(|(c, d)| ConceptPartition {
                    label: c.label.clone(),
                    subconcepts: d
                        .cut_at(level)
                        .into_iter()
                        .map(|local| local.into_iter().map(|li| c.members[li]).collect())
                        .collect(),
                })
                .collect(),
        }
    };

    let mut want = min_k.max(concepts.len());
    loop {
        let mut chosen = cut_all(*levels.last().unwrap());
        for &level in &levels {
            let part = cut_all(level);
            if part.total_subconcepts() >= want {
                chosen = part;
                break;
            }
        }
        let got = chosen.total_subconcepts();
        if check_pairwise_separability(&chosen, ds, cache)?.is_empty() {
            return Ok(chosen);
        }
        if got >= ds.samples.len() || got < want {
            // Either every subconcept is a singleton already, or no cut level
            // can split any further (identical samples cluster at height 0);
            // asking for more subconcepts cannot help.
            return Err(Error::TrainingFailure {
                stage: "partition".into(),
                detail: "finest subconcept partition still not pairwise separable".into(),
            });
        }
        want = got + 1;
    }
}

/// One subconcept per concept to start; the worst-separated pair repeatedly
/// sheds its misclassified samples into a new subconcept.
pub fn partition_misclassification_split(ds: &Dataset) -> Result<SubconceptPartition> {
    let mut cache = SvmCache::default();
    partition_misclassification_split_from(ds, concepts_from_labels(ds), &mut cache)
}

pub fn partition_misclassification_split_from(
    ds: &Dataset,
    concepts: Vec<Concept>,
    cache: &mut SvmCache,
) -> Result<SubconceptPartition> {
    ds.check_contradictions()?;
    let mut part = SubconceptPartition {
        concepts: concepts
            .into_iter()
            .map(|c| ConceptPartition { label: c.label, subconcepts: vec![c.members] })
            .collect(),
    };
    loop {
        let failures = check_pairwise_separability(&part, ds, cache)?;
        let Some(worst) = failures
            .iter()
            .max_by_key(|f| f.mis_a.len() + f.mis_b.len())
        else {
            return Ok(part);
        };
        // The side with more misclassified samples loses them; ties go to
        // the side listed first.
        let (side, moved) = if worst.mis_b.len() > worst.mis_a.len() {
            (worst.b, worst.mis_b.clone())
        } else {
            (worst.a, worst.mis_a.clone())
        };
        let (side, moved) = {
            let whole = &part.concepts[side.0].subconcepts[side.1];
            if moved.len() < whole.len() && !moved.is_empty() {
                (side, moved)
            } else if whole.len() > 1 {
                // Degenerate fit blamed the whole subconcept; peel off
                // everything but its first sample so progress is certain.
                (side, whole[1..].to_vec())
            } else {
                let other = if side == worst.a { worst.b } else { worst.a };
                let alt = &part.concepts[other.0].subconcepts[other.1];
                if alt.len() > 1 {
                    (other, alt[1..].to_vec())
                } else {
                    return Err(Error::TrainingFailure {
                        stage: "partition".into(),
                        detail: "two singleton subconcepts cannot be separated".into(),
                    });
                }
            }
        };
        let sub = &mut part.concepts[side.0].subconcepts[side.1];
        sub.retain(|i| !moved.contains(i));
        part.concepts[side.0].subconcepts.push(moved);
    }
}

/// Signed activations of one layer for every sample, given per-sample
/// inputs to that layer.
fn layer_outputs(layer: &Layer, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    inputs
        .iter()
        .map(|x| {
            layer
                .neurons
                .iter()
                .map(|n| layer.activation.apply(n.pre_activation(x)))
                .collect()
        })
        .collect()
}

/// Rescales a neuron to small integer weights when an exact rescaling
/// exists. Positive scaling preserves sign semantics, and rounding removes
/// solver noise, so the network computes the same clean function its
/// condensed program will print.
fn snap_neuron(n: &mut Neuron) {
    let mut v = n.weights.clone();
    v.push(n.bias);
    if let Some(iv) = integerize(&v, 1e-6, 64, 1e-9) {
        n.bias = iv[n.weights.len()];
        n.weights = iv[..n.weights.len()].to_vec();
    }
}

/// Snaps a whole layer with one common scale. Required for concept layers
/// under argmax, where per-neuron scales would reorder the scores.
fn snap_layer_shared(neurons: &mut [Neuron]) {
    let all: Vec<f64> = neurons
        .iter()
        .flat_map(|n| n.weights.iter().copied().chain([n.bias]))
        .collect();
    if let Some(iv) = integerize(&all, 1e-6, 64, 1e-9) {
        let mut it = iv.chunks(neurons.first().map_or(1, |n| n.weights.len() + 1));
        for n in neurons.iter_mut() {
            let chunk = it.next().unwrap();
            n.weights = chunk[..chunk.len() - 1].to_vec();
            n.bias = chunk[chunk.len() - 1];
        }
    }
}

const LOGIT_CLAMP: f64 = 10.0;

/// Moves a snapped subconcept neuron's bias to the edge of its own class:
/// the weakest member activation becomes exactly +1 while every other
/// sample stays strictly negative. The SVM fixes the direction, but with
/// sparse training data many integer biases separate the classes; this
/// picks the tightest one, turning the neuron into a precise recognizer
/// of its subconcept. Only applies when the snapped weights are integral
/// (so activations land on an integer grid) and the tightened plane still
/// separates.
///
/// Used for argmax heads over three or more concepts: there, a subconcept
/// that also half-fires on another concept's inputs inflates that rival
/// score directly, so precision beats margin. Two-concept heads keep the
/// midpoint bias, whose wider margin is what absorbs off-distribution
/// noise in the inputs.
fn tighten_bias(n: &mut Neuron, inputs: &[Vec<f64>], members: &[usize]) {
    if n.weights.iter().any(|w| (w - w.round()).abs() > 1e-9) {
        return;
    }
    let proj = |i: usize| (n.weights.iter().zip(&inputs[i]).map(|(w, x)| w * x).sum::<f64>())
        .round();
    let min_pos = match members.iter().map(|&i| proj(i)).reduce(f64::min) {
        Some(p) => p,
        None => return,
    };
    let max_neg = (0..inputs.len())
        .filter(|i| !members.contains(i))
        .map(proj)
        .reduce(f64::max);
    let b = 1.0 - min_pos;
    if max_neg.is_none_or(|m| m + b < 0.0) {
        n.bias = b;
    }
}

/// A subconcept plane that also separates sibling subconcepts is kept only
/// while its margin stays within this factor of the cross-concept-only
/// margin.
const SIBLING_MARGIN_FACTOR: f64 = 2.0;

fn label_logit(label: &Label) -> Result<f64> {
    match label {
        Label::Probability(p1, p2) => {
            let l = if *p2 == 0.0 {
                f64::INFINITY
            } else if *p1 == 0.0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (p1 / p2).ln()
            };
            Ok(l.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))
        }
        Label::Class(c) => Err(Error::TrainingFailure {
            stage: "concept".into(),
            detail: format!("class label {c} in probability-pair path"),
        }),
    }
}

/// Builds the three-layer network from a certified partition.
///
/// Differentia neurons are fit per cross-concept subconcept pair. With
/// more than two concepts both orientations of each pair are kept, so the
/// per-pair neuron grid covers a full square minus its diagonal and can be
/// condensed into one loop. With exactly two concepts the reverse
/// orientation is just the sign-negated mirror and would only duplicate
/// every downstream feature, so a single orientation is kept and the pair
/// grid is the (subconcepts x subconcepts) rectangle.
pub fn build_network(
    part: &SubconceptPartition,
    ds: &Dataset,
    cache: &mut SvmCache,
) -> Result<Network> {
    let flat = part.flat();
    let n = ds.samples.len();
    let two_concepts = part.concepts.len() == 2;

    let mut d_neurons = Vec::new();
    for &(ca, sa, a) in &flat {
        for &(cb, sb, b) in &flat {
            if ca == cb || (two_concepts && ca > cb) {
                continue;
            }
            let (plane, mis) = cache.plane(ds, a, b)?;
            if !mis.is_empty() {
                return Err(Error::TrainingFailure {
                    stage: "differentia".into(),
                    detail: format!("subconcepts c{ca}.s{sa} vs c{cb}.s{sb} not separable"),
                });
            }
            let mut n = Neuron::with_provenance(
                plane.w,
                plane.b,
                format!("c{ca}.s{sa}|c{cb}.s{sb}"),
            );
            snap_neuron(&mut n);
            d_neurons.push(n);
        }
    }
    let d_layer = Layer::new(LayerKind::Differentia, d_neurons);
    let inputs: Vec<Vec<f64>> = ds.samples.iter().map(|s| s.input.clone()).collect();
    let d_out = layer_outputs(&d_layer, &inputs);

    let d_ds = Dataset::new(
        crate::dataset::InputLayout::Vector(d_layer.width()),
        ds.label_kind,
        d_out
            .iter()
            .zip(&ds.samples)
            .map(|(x, s)| crate::dataset::Sample { input: x.clone(), label: s.label.clone() })
            .collect(),
    );
    let mut s_cache = SvmCache::default();
    let mut s_neurons = Vec::new();
    for &(ci, si, members) in &flat {
        // A subconcept neuron separates its samples from the rest of the
        // training set. Sibling subconcepts are only soft negatives, though:
        // they feed the same concept neuron, so when dropping them from the
        // negative set buys a decisively larger margin (or they are not
        // separable at all in differentia space), the neuron keeps the wide
        // cross-concept margin instead of contorting around within-concept
        // detail the concept layer never needs.
        let cross: Vec<usize> = flat
            .iter()
            .filter(|&&(cb, _, _)| cb != ci)
            .flat_map(|&(_, _, m)| m.iter().copied())
            .collect();
        let (cross_plane, cross_mis) = s_cache.plane(&d_ds, members, &cross)?;
        if !cross_mis.is_empty() {
            return Err(Error::TrainingFailure {
                stage: "subconcept".into(),
                detail: format!("subconcept c{ci}.s{si} not separable from the rest"),
            });
        }
        let rest: Vec<usize> = (0..n).filter(|i| !members.contains(i)).collect();
        let plane = match s_cache.plane(&d_ds, members, &rest) {
            Ok((full, mis))
                if mis.is_empty()
                    && cross_plane.margin < SIBLING_MARGIN_FACTOR * full.margin =>
            {
                full
            }
            _ => cross_plane,
        };
        let mut n = Neuron::with_provenance(plane.w, plane.b, format!("c{ci}.s{si}"));
        snap_neuron(&mut n);
        if ds.label_kind == LabelKind::Class && part.concepts.len() >= 3 {
            tighten_bias(&mut n, &d_out, members);
        }
        s_neurons.push(n);
    }
    let mut s_layer = Layer::new(LayerKind::Subconcept, s_neurons);
    if ds.label_kind == LabelKind::ProbabilityPair {
        // Probability targets read each subconcept as a 0/1 indicator whose
        // label log-odds feed the two softmax channels directly.
        s_layer.activation = Activation::Indicator;
    }
    let s_out = layer_outputs(&s_layer, &d_out);

    let (c_neurons, labels, head) = match ds.label_kind {
        LabelKind::Class => {
            if part.concepts.len() < 2 {
                return Err(Error::TrainingFailure {
                    stage: "concept".into(),
                    detail: "need at least two concepts for a class head".into(),
                });
            }
            let s_ds = Dataset::new(
                crate::dataset::InputLayout::Vector(s_layer.width()),
                ds.label_kind,
                s_out
                    .iter()
                    .zip(&ds.samples)
                    .map(|(x, s)| crate::dataset::Sample {
                        input: x.clone(),
                        label: s.label.clone(),
                    })
                    .collect(),
            );
            let mut c_cache = SvmCache::default();
            let mut neurons = Vec::new();
            let mut labels = Vec::new();
            for (ci, c) in part.concepts.iter().enumerate() {
                let members: Vec<usize> = c.subconcepts.iter().flatten().copied().collect();
                let mut members = members;
                members.sort_unstable();
                let rest: Vec<usize> = (0..n).filter(|i| !members.contains(i)).collect();
                let (plane, mis) = c_cache.plane(&s_ds, &members, &rest)?;
                if !mis.is_empty() {
                    return Err(Error::TrainingFailure {
                        stage: "concept".into(),
                        detail: format!("concept c{ci} not separable from the rest"),
                    });
                }
                neurons.push(Neuron::with_provenance(plane.w, plane.b, format!("c{ci}")));
                labels.push(c.label.clone());
            }
            snap_layer_shared(&mut neurons);
            (neurons, labels, OutputHead::Argmax)
        }
        LabelKind::ProbabilityPair => {
            let logits: Vec<f64> = flat
                .iter()
                .map(|&(ci, _, _)| label_logit(&part.concepts[ci].label))
                .collect::<Result<_>>()?;
            let pos = Neuron::with_provenance(logits.clone(), 0.0, "p(true)");
            let neg =
                Neuron::with_provenance(logits.iter().map(|l| -l).collect(), 0.0, "p(false)");
            (
                vec![pos, neg],
                vec![Label::class("true"), Label::class("false")],
                OutputHead::Softmax,
            )
        }
    };
    let c_layer = Layer { kind: LayerKind::Concept, activation: Activation::Sign, neurons: c_neurons };

    let net = Network::new(ds.layout.clone(), vec![d_layer, s_layer, c_layer], head, labels);
    net.validate()?;
    Ok(net)
}

/// Full pipeline: optional component refinement, partitioning, layer
/// construction, and a training-set correctness check.
pub fn train(ds: &Dataset, config: &TrainConfig) -> Result<Network> {
    ds.validate()?;
    ds.check_contradictions()?;
    let concepts = if config.refine && is_symbolic(ds) {
        component_concepts(ds)
    } else {
        concepts_from_labels(ds)
    };
    let mut cache = SvmCache::default();
    let part = match config.method {
        PartitionMethod::AdaptiveCut => {
            partition_adaptive_cut_from(ds, concepts, config.min_k, &mut cache)?
        }
        PartitionMethod::MisclassificationSplit => {
            partition_misclassification_split_from(ds, concepts, &mut cache)?
        }
    };
    let net = build_network(&part, ds, &mut cache)?;

    for (i, s) in ds.samples.iter().enumerate() {
        match net.network_output(&s.input, config.seed)? {
            NetworkOutput::Classes { tie_set, .. } => {
                let ok = tie_set
                    .iter()
                    .all(|&c| net.concept_labels[c].key() == s.label.key());
                if !ok {
                    return Err(Error::TrainingFailure {
                        stage: "verification".into(),
                        detail: format!("training sample {i} classified incorrectly"),
                    });
                }
            }
            NetworkOutput::Probabilities(p) => {
                if let Label::Probability(p1, p2) = s.label {
                    if (p1 - p2) * (p[0] - p[1]) < 0.0 {
                        return Err(Error::TrainingFailure {
                            stage: "verification".into(),
                            detail: format!("training sample {i} has inverted odds"),
                        });
                    }
                }
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{InputLayout, Sample};

    fn class_ds(inputs: Vec<Vec<f64>>, labels: Vec<&str>, layout: InputLayout) -> Dataset {
        Dataset::new(
            layout,
            LabelKind::Class,
            inputs
                .into_iter()
                .zip(labels)
                .map(|(input, l)| Sample { input, label: Label::class(l) })
                .collect(),
        )
    }

    fn xor_ds() -> Dataset {
        class_ds(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
            ],
            vec!["a", "a", "b", "b"],
            InputLayout::Vector(2),
        )
    }

    #[test]
    fn components_split_by_shared_features() {
        // (1,0,0) and (1,1,0) share feature 0; (0,0,1) is isolated.
        let ds = class_ds(
            vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec!["a", "a", "a"],
            InputLayout::Vector(3),
        );
        let comps = component_concepts(&ds);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].members, vec![0, 1]);
        assert_eq!(comps[1].members, vec![2]);

        let relabeled = refine_concepts_by_components(&ds);
        assert_eq!(relabeled.label_order().len(), 2);
    }

    #[test]
    fn components_all_disjoint() {
        let ds = class_ds(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec!["a", "a"],
            InputLayout::Vector(2),
        );
        assert_eq!(component_concepts(&ds).len(), 2);
    }

    #[test]
    fn adaptive_cut_keeps_separable_concepts_whole() {
        let ds = class_ds(
            vec![vec![0.0], vec![0.5], vec![3.0], vec![3.5]],
            vec!["lo", "lo", "hi", "hi"],
            InputLayout::Vector(1),
        );
        let part = partition_adaptive_cut(&ds, 1).unwrap();
        assert_eq!(part.total_subconcepts(), 2);
    }

    #[test]
    fn adaptive_cut_certifies_xor() {
        let part = partition_adaptive_cut(&xor_ds(), 1).unwrap();
        let mut cache = SvmCache::default();
        assert!(check_pairwise_separability(&part, &xor_ds(), &mut cache).unwrap().is_empty());
        assert!(part.total_subconcepts() >= 3);
    }

    #[test]
    fn misclassification_split_certifies_xor() {
        let ds = xor_ds();
        let part = partition_misclassification_split(&ds).unwrap();
        let mut cache = SvmCache::default();
        assert!(check_pairwise_separability(&part, &ds, &mut cache).unwrap().is_empty());
        assert!(part.total_subconcepts() >= 3);
    }

    #[test]
    fn interleaved_points_split() {
        // A = {-2, 2}, B = {0}: A must split into its two singletons.
        let ds = class_ds(
            vec![vec![-2.0], vec![2.0], vec![0.0]],
            vec!["a", "a", "b"],
            InputLayout::Vector(1),
        );
        let part = partition_misclassification_split(&ds).unwrap();
        assert_eq!(part.concepts[0].subconcepts.len(), 2);
        assert_eq!(part.concepts[1].subconcepts.len(), 1);
    }

    #[test]
    fn contradiction_rejected() {
        let ds = class_ds(
            vec![vec![1.0], vec![1.0]],
            vec!["a", "b"],
            InputLayout::Vector(1),
        );
        assert!(matches!(partition_adaptive_cut(&ds, 1), Err(Error::Contradiction(..))));
    }

    #[test]
    fn minimal_topology_two_concepts() {
        let ds = class_ds(
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            vec!["a", "b"],
            InputLayout::Vector(2),
        );
        let net = train(&ds, &TrainConfig::default()).unwrap();
        // One subconcept per concept: with two concepts the pair plane is
        // shared, so one differentia, two subconcept neurons, two concept
        // neurons.
        assert_eq!(net.layers[0].width(), 1);
        assert_eq!(net.layers[1].width(), 2);
        assert_eq!(net.layers[2].width(), 2);
    }

    fn rule30_ds() -> Dataset {
        // All 8 neighborhoods; label = next center state under rule 30.
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for bits in 0..8u32 {
            let cells = vec![
                (bits >> 2 & 1) as f64,
                (bits >> 1 & 1) as f64,
                (bits & 1) as f64,
            ];
            let next = 30u32 >> bits & 1;
            inputs.push(cells);
            labels.push(if next == 1 { "1" } else { "0" });
        }
        class_ds(inputs, labels.iter().map(|s| &**s).collect(), InputLayout::Vector(3))
    }

    #[test]
    fn rule30_network_classifies_all_neighborhoods() {
        let ds = rule30_ds();
        for method in [PartitionMethod::AdaptiveCut, PartitionMethod::MisclassificationSplit] {
            let net = train(&ds, &TrainConfig { method, ..Default::default() }).unwrap();
            for s in &ds.samples {
                match net.network_output(&s.input, 0).unwrap() {
                    NetworkOutput::Classes { tie_set, label, .. } => {
                        assert_eq!(tie_set.len(), 1, "tie on {:?}", s.input);
                        assert_eq!(label.key(), s.label.key(), "input {:?}", s.input);
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    #[test]
    fn probability_labels_build_softmax_head() {
        // Two symbolic inputs with opposite certain odds.
        let ds = Dataset::new(
            InputLayout::Vector(2),
            LabelKind::ProbabilityPair,
            vec![
                Sample { input: vec![1.0, 0.0], label: Label::Probability(1.0, 0.0) },
                Sample { input: vec![0.0, 1.0], label: Label::Probability(0.0, 1.0) },
            ],
        );
        let net = train(&ds, &TrainConfig { refine: true, ..Default::default() }).unwrap();
        assert_eq!(net.output_head, OutputHead::Softmax);
        match net.network_output(&[1.0, 0.0], 0).unwrap() {
            NetworkOutput::Probabilities(p) => {
                assert!(p[0] > 0.99, "expected near-certain TRUE, got {p:?}");
            }
            _ => unreachable!(),
        }
        // Clamped log-odds of (1,0) is exactly 10.
        let w = &net.layers[2].neurons[0].weights;
        assert!(w.contains(&10.0) && w.contains(&-10.0), "{w:?}");
    }

    #[test]
    fn preference_logit_value() {
        assert!((label_logit(&Label::Probability(0.99, 0.01)).unwrap() - 2.2975599250672945).abs() < 1e-9);
        assert_eq!(label_logit(&Label::Probability(1.0, 0.0)).unwrap(), 10.0);
    }
}
