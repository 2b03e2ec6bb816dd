//! The drug-pair synergy network: a cell-line reduction MLP, graph
//! convolutions over each drug's dual graph, a small transformer encoder
//! over the pooled graph tokens with a long concatenation residual, and a
//! fused classification head.
//!
//! Four variants share one parameter naming scheme: the full model
//! (`EGTSyn`), atom graph only with transformer (`GTSyn`), dual graph
//! without transformer (`EGSyn`), and atom graph only without transformer
//! (`GSyn`). A smaller variant's parameter names are a strict subset of
//! every larger variant's, so ablation runs stay directly comparable.

mod checkpoint;

pub use checkpoint::{
    parse_checkpoint, read_checkpoint, render_checkpoint, write_checkpoint, CheckpointError,
    LoadedCheckpoint, FORMAT_VERSION,
};

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::molgraph::{DualGraph, FeatureGraph, FEATURE_DIM};
use crate::tensor::{
    adam_step, grad_check, AdamHyperParams, AdamState, GradCheckReport, Tape, Tensor, TensorError,
    Var,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("unknown variant `{0}`, expected EGTSyn, GTSyn, EGSyn, or GSyn")]
    UnknownVariant(String),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("cell line vector has {found} features, config expects {expected}")]
    CellWidth { expected: usize, found: usize },
}

/// Which sub-blocks the network is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Dual graph and transformer encoder.
    EGTSyn,
    /// Atom graph only, with transformer encoder.
    GTSyn,
    /// Dual graph, no transformer.
    EGSyn,
    /// Atom graph only, no transformer.
    GSyn,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::EGTSyn, Variant::GTSyn, Variant::EGSyn, Variant::GSyn];

    pub fn uses_bond_graph(self) -> bool {
        matches!(self, Variant::EGTSyn | Variant::EGSyn)
    }

    pub fn uses_transformer(self) -> bool {
        matches!(self, Variant::EGTSyn | Variant::GTSyn)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::EGTSyn => "EGTSyn",
            Variant::GTSyn => "GTSyn",
            Variant::EGSyn => "EGSyn",
            Variant::GSyn => "GSyn",
        }
    }

    pub fn parse(name: &str) -> Result<Variant, ModelError> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| ModelError::UnknownVariant(name.to_string()))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::parse(s)
    }
}

/// How per-node embeddings collapse to one graph-level vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    Max,
    Sum,
    Mean,
}

impl Pooling {
    pub fn name(self) -> &'static str {
        match self {
            Pooling::Max => "max",
            Pooling::Sum => "sum",
            Pooling::Mean => "mean",
        }
    }

    pub fn parse(name: &str) -> Result<Pooling, ModelError> {
        match name {
            "max" => Ok(Pooling::Max),
            "sum" => Ok(Pooling::Sum),
            "mean" => Ok(Pooling::Mean),
            other => Err(ModelError::Config(format!(
                "unknown pooling `{other}`, expected max, sum, or mean"
            ))),
        }
    }
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Pooling {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pooling::parse(s)
    }
}

/// All architecture hyperparameters plus the weight-initialization seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub variant: Variant,
    pub gcn_layers: usize,
    pub gcn_hidden: usize,
    pub graph_embed_dim: usize,
    pub attention_heads: usize,
    pub ffn_hidden: usize,
    pub cell_input_dim: usize,
    pub cell_hidden: (usize, usize),
    pub cell_embed_dim: usize,
    pub head_hidden: (usize, usize),
    pub dropout_rate: f64,
    pub pooling: Pooling,
    pub seed: u64,
}

impl ModelConfig {
    /// Default widths for a given variant and seed.
    pub fn new(variant: Variant, seed: u64) -> ModelConfig {
        ModelConfig {
            variant,
            gcn_layers: 2,
            gcn_hidden: 156,
            graph_embed_dim: 128,
            attention_heads: 4,
            ffn_hidden: 256,
            cell_input_dim: 954,
            cell_hidden: (2048, 512),
            cell_embed_dim: 256,
            head_hidden: (1024, 256),
            dropout_rate: 0.2,
            pooling: Pooling::Max,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("gcn_layers", self.gcn_layers),
            ("gcn_hidden", self.gcn_hidden),
            ("graph_embed_dim", self.graph_embed_dim),
            ("attention_heads", self.attention_heads),
            ("ffn_hidden", self.ffn_hidden),
            ("cell_input_dim", self.cell_input_dim),
            ("cell_hidden.0", self.cell_hidden.0),
            ("cell_hidden.1", self.cell_hidden.1),
            ("cell_embed_dim", self.cell_embed_dim),
            ("head_hidden.0", self.head_hidden.0),
            ("head_hidden.1", self.head_hidden.1),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(ModelError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.graph_embed_dim % self.attention_heads != 0 {
            return Err(ModelError::Config(format!(
                "graph_embed_dim {} not divisible by attention_heads {}",
                self.graph_embed_dim, self.attention_heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::Config(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::new(Variant::EGTSyn, 0)
    }
}

enum Init {
    Xavier,
    Zeros,
    Ones,
}

struct ParamSpec {
    name: String,
    rows: usize,
    cols: usize,
    init: Init,
}

/// Per-layer (input, output) widths of a GCN stack: node features in,
/// graph embedding out, hidden width between.
fn gcn_widths(config: &ModelConfig) -> Vec<(usize, usize)> {
    let layers = config.gcn_layers;
    if layers == 1 {
        return vec![(FEATURE_DIM, config.graph_embed_dim)];
    }
    let mut widths = vec![(FEATURE_DIM, config.gcn_hidden)];
    for _ in 1..layers - 1 {
        widths.push((config.gcn_hidden, config.gcn_hidden));
    }
    widths.push((config.gcn_hidden, config.graph_embed_dim));
    widths
}

fn push_linear(specs: &mut Vec<ParamSpec>, stem: &str, rows: usize, cols: usize) {
    specs.push(ParamSpec {
        name: format!("{stem}.w"),
        rows,
        cols,
        init: Init::Xavier,
    });
    specs.push(ParamSpec {
        name: format!("{stem}.b"),
        rows: 1,
        cols,
        init: Init::Zeros,
    });
}

/// The full named parameter layout for a config, in construction order.
fn parameter_specs(config: &ModelConfig) -> Vec<ParamSpec> {
    let d = config.graph_embed_dim;
    let mut specs = Vec::new();
    push_linear(&mut specs, "cell.fc1", config.cell_input_dim, config.cell_hidden.0);
    push_linear(&mut specs, "cell.fc2", config.cell_hidden.0, config.cell_hidden.1);
    push_linear(&mut specs, "cell.fc3", config.cell_hidden.1, config.cell_embed_dim);
    for (i, (din, dout)) in gcn_widths(config).into_iter().enumerate() {
        specs.push(ParamSpec {
            name: format!("gcn_atom.l{i}.w"),
            rows: din,
            cols: dout,
            init: Init::Xavier,
        });
    }
    if config.variant.uses_bond_graph() {
        for (i, (din, dout)) in gcn_widths(config).into_iter().enumerate() {
            specs.push(ParamSpec {
                name: format!("gcn_bond.l{i}.w"),
                rows: din,
                cols: dout,
                init: Init::Xavier,
            });
        }
    }
    if config.variant.uses_transformer() {
        let dh = d / config.attention_heads;
        for h in 0..config.attention_heads {
            for proj in ["wq", "wk", "wv"] {
                specs.push(ParamSpec {
                    name: format!("attn.h{h}.{proj}"),
                    rows: d,
                    cols: dh,
                    init: Init::Xavier,
                });
            }
        }
        specs.push(ParamSpec {
            name: "attn.wo".to_string(),
            rows: d,
            cols: d,
            init: Init::Xavier,
        });
        specs.push(ParamSpec {
            name: "ln.gain".to_string(),
            rows: 1,
            cols: d,
            init: Init::Ones,
        });
        specs.push(ParamSpec {
            name: "ln.bias".to_string(),
            rows: 1,
            cols: d,
            init: Init::Zeros,
        });
        push_linear(&mut specs, "ffn.fc1", d, config.ffn_hidden);
        push_linear(&mut specs, "ffn.fc2", config.ffn_hidden, d);
    }
    let tokens = if config.variant.uses_bond_graph() { 2 } else { 1 };
    let proj_in = if config.variant.uses_transformer() {
        2 * tokens * d
    } else {
        tokens * d
    };
    push_linear(&mut specs, "proj", proj_in, 2 * d);
    let head_in = 2 * (2 * d + config.cell_embed_dim);
    push_linear(&mut specs, "head.fc1", head_in, config.head_hidden.0);
    push_linear(&mut specs, "head.fc2", config.head_hidden.0, config.head_hidden.1);
    push_linear(&mut specs, "head.out", config.head_hidden.1, 1);
    specs
}

/// One training example: an ordered drug pair, its cell-line feature
/// vector, and the 0/1 synergy label.
#[derive(Debug, Clone, Copy)]
pub struct PairItem<'a> {
    pub drug_a: &'a DualGraph,
    pub drug_b: &'a DualGraph,
    pub cell: &'a [f64],
    pub label: f64,
}

/// A synergy model: config plus named parameter tensors.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    names: Vec<String>,
    values: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl Model {
    /// Builds a model with Xavier-uniform weights, zero biases, and unit
    /// layer-norm gains, all drawn from a stream seeded by `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Model, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut names = Vec::new();
        let mut values = Vec::new();
        let mut index = HashMap::new();
        for spec in parameter_specs(&config) {
            let count = spec.rows * spec.cols;
            let data = match spec.init {
                Init::Xavier => {
                    let bound = (6.0 / (spec.rows + spec.cols) as f64).sqrt();
                    (0..count).map(|_| rng.gen_range(-bound..bound)).collect()
                }
                Init::Zeros => vec![0.0; count],
                Init::Ones => vec![1.0; count],
            };
            let tensor = Tensor::new(spec.rows, spec.cols, data)?.with_grad();
            index.insert(spec.name.clone(), names.len());
            names.push(spec.name);
            values.push(tensor);
        }
        Ok(Model {
            config,
            names,
            values,
            index,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn param_names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.values[i])
    }

    /// Total number of trainable scalars.
    pub fn parameter_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    pub fn zero_grads(&mut self) {
        for tensor in &mut self.values {
            tensor.zero_grad();
        }
    }

    /// Adds a uniform offset in `(-scale, scale)` to every parameter.
    ///
    /// Finite-difference gradient checks need a generic point: freshly
    /// initialized biases sit exactly on the ReLU kink whenever their
    /// input row is all zeros, and central differences straddling a kink
    /// disagree with the one-sided analytic gradient. A small jitter
    /// moves every pre-activation off the kink without leaving the
    /// well-scaled regime.
    pub fn jitter_params(&mut self, scale: f64, rng: &mut ChaCha8Rng) {
        for tensor in &mut self.values {
            for v in tensor.data_mut() {
                *v += rng.gen_range(-scale..scale);
            }
        }
    }

    /// Optimizer state sized for this model's parameters.
    pub fn adam_state(&self) -> AdamState {
        AdamState::new(&self.values)
    }

    /// Applies one Adam update from the accumulated gradients.
    pub fn apply_adam(&mut self, state: &mut AdamState, hp: &AdamHyperParams) {
        adam_step(&mut self.values, state, hp);
    }

    /// Synergy probability for a drug pair, symmetrized over pair order
    /// and computed without dropout.
    pub fn predict(
        &self,
        drug_a: &DualGraph,
        drug_b: &DualGraph,
        cell: &[f64],
    ) -> Result<f64, ModelError> {
        let mut pass = Pass::new(self);
        let mut dropout = None;
        let ab = pass.predict_one(drug_a, drug_b, cell, &mut dropout)?;
        let ba = pass.predict_one(drug_b, drug_a, cell, &mut dropout)?;
        Ok((pass.tape.value(ab)[0] + pass.tape.value(ba)[0]) / 2.0)
    }

    /// Mean binary cross-entropy over a batch with dropout off and no
    /// parameter penalty, for validation tracking.
    pub fn eval_loss(&self, items: &[PairItem]) -> Result<f64, ModelError> {
        let (tape, _, loss) = self.forward_loss(items, None, None)?;
        Ok(tape.value(loss)[0])
    }

    /// Cell-line embedding (no dropout), exposed for inspection.
    pub fn cell_embedding(&self, cell: &[f64]) -> Result<Tensor, ModelError> {
        let mut pass = Pass::new(self);
        let mut dropout = None;
        let v = pass.cell_reduce(cell, &mut dropout)?;
        Ok(pass.extract(v))
    }

    /// The pooled graph-token sequence fed to the encoder: one row per
    /// token, 2 tokens for dual-graph variants, 1 otherwise.
    pub fn graph_tokens(&self, dual: &DualGraph) -> Result<Tensor, ModelError> {
        let mut pass = Pass::new(self);
        let v = pass.token_sequence(dual)?;
        Ok(pass.extract(v))
    }

    /// Final per-drug embedding of width `2 * graph_embed_dim`.
    pub fn drug_embedding(&self, dual: &DualGraph) -> Result<Tensor, ModelError> {
        let mut pass = Pass::new(self);
        let v = pass.drug_embed(dual)?;
        Ok(pass.extract(v))
    }

    /// Forward pass over a batch: mean binary cross-entropy plus the
    /// optional L2 penalty `(2/delta) * sum(theta^2)`.
    fn forward_loss(
        &self,
        items: &[PairItem],
        l2_delta: Option<f64>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Tape, Vec<Var>, Var), ModelError> {
        if items.is_empty() {
            return Err(ModelError::Config("batch must not be empty".to_string()));
        }
        let mut pass = Pass::new(self);
        let mut dropout = rng;
        let mut probs = Vec::with_capacity(items.len());
        let mut labels = Vec::with_capacity(items.len());
        for item in items {
            probs.push(pass.predict_one(item.drug_a, item.drug_b, item.cell, &mut dropout)?);
            labels.push(item.label);
        }
        let preds = pass.tape.concat_rows(&probs)?;
        let target = pass.tape.constant(items.len(), 1, labels)?;
        let mut loss = pass.tape.bce_loss(preds, target)?;
        if let Some(delta) = l2_delta {
            let penalty = pass.tape.l2_penalty(&pass.vars, delta)?;
            loss = pass.tape.add(loss, penalty)?;
        }
        let Pass { tape, vars, .. } = pass;
        Ok((tape, vars, loss))
    }

    /// Runs forward and backward over a batch with dropout active,
    /// accumulating gradients into the parameter tensors. Returns the
    /// batch loss.
    pub fn batch_gradients(
        &mut self,
        items: &[PairItem],
        l2_delta: Option<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<f64, ModelError> {
        let (mut tape, vars, loss) = self.forward_loss(items, l2_delta, Some(rng))?;
        tape.backward(loss)?;
        let mut pairs: Vec<(Var, &mut Tensor)> =
            vars.into_iter().zip(self.values.iter_mut()).collect();
        tape.harvest_into(&mut pairs);
        Ok(tape.value(loss)[0])
    }

    /// Verifies every parameter's analytic batch gradient against central
    /// finite differences. Dropout runs from a fixed seed so the loss is
    /// a deterministic function of the parameters.
    pub fn check_gradients(
        &self,
        items: &[PairItem],
        l2_delta: Option<f64>,
        tolerance: f64,
    ) -> Result<GradCheckReport, ModelError> {
        self.check_gradients_inner(items, l2_delta, tolerance, None)
    }

    /// Negative control for the gradient checker: scales one parameter's
    /// analytic gradient by `factor` before the comparison, so a working
    /// checker must report that parameter as failed.
    pub fn check_gradients_negative_control(
        &self,
        items: &[PairItem],
        l2_delta: Option<f64>,
        tolerance: f64,
        param: &str,
        factor: f64,
    ) -> Result<GradCheckReport, ModelError> {
        if !self.index.contains_key(param) {
            return Err(ModelError::Config(format!("unknown parameter `{param}`")));
        }
        self.check_gradients_inner(items, l2_delta, tolerance, Some((param, factor)))
    }

    fn check_gradients_inner(
        &self,
        items: &[PairItem],
        l2_delta: Option<f64>,
        tolerance: f64,
        corrupt: Option<(&str, f64)>,
    ) -> Result<GradCheckReport, ModelError> {
        const DROPOUT_SEED: u64 = 0x5eed;
        let mut worker = self.clone();
        worker.zero_grads();
        let mut rng = ChaCha8Rng::seed_from_u64(DROPOUT_SEED);
        worker.batch_gradients(items, l2_delta, &mut rng)?;
        let mut analytic: Vec<Vec<f64>> = worker
            .values
            .iter()
            .map(|t| t.grad().expect("parameters carry gradient buffers").to_vec())
            .collect();
        if let Some((param, factor)) = corrupt {
            let slot = self.index[param];
            for g in &mut analytic[slot] {
                *g *= factor;
            }
        }
        let named: Vec<(String, Tensor)> = self
            .names
            .iter()
            .cloned()
            .zip(self.values.iter().cloned())
            .collect();
        let report = grad_check(
            &named,
            &analytic,
            |params| {
                let probe = Model {
                    config: self.config.clone(),
                    names: self.names.clone(),
                    values: params.iter().map(|(_, t)| t.clone()).collect(),
                    index: self.index.clone(),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(DROPOUT_SEED);
                let (tape, _, loss) = probe
                    .forward_loss(items, l2_delta, Some(&mut rng))
                    .map_err(|e| match e {
                        ModelError::Tensor(t) => t,
                        other => unreachable!("inputs validated by the analytic pass: {other}"),
                    })?;
                Ok(tape.value(loss)[0])
            },
            tolerance,
        )?;
        Ok(report)
    }

}

/// Scaled dot-product attention, `softmax(Q Kᵀ / sqrt(d)) V` with `d` the
/// key width.
pub fn attention(tape: &mut Tape, q: Var, k: Var, v: Var) -> Result<Var, TensorError> {
    let (_, d) = tape.shape(q);
    let kt = tape.transpose(k);
    let scores = tape.matmul(q, kt)?;
    let scaled = tape.scale(scores, 1.0 / (d as f64).sqrt());
    let weights = tape.softmax_rows(scaled);
    tape.matmul(weights, v)
}

/// Multi-head self-attention: one `(wq, wk, wv)` projection triple per
/// head, per-head attention over the projected sequences, concatenation,
/// then the output projection `wo`.
pub fn multi_head_attention(
    tape: &mut Tape,
    e: Var,
    heads: &[(Var, Var, Var)],
    wo: Var,
) -> Result<Var, TensorError> {
    let mut parts = Vec::with_capacity(heads.len());
    for &(wq, wk, wv) in heads {
        let q = tape.matmul(e, wq)?;
        let k = tape.matmul(e, wk)?;
        let v = tape.matmul(e, wv)?;
        parts.push(attention(tape, q, k, v)?);
    }
    let cat = tape.concat_cols(&parts)?;
    tape.matmul(cat, wo)
}

/// One graph-convolution layer: `ReLU(A_norm · H · W)`.
pub fn gcn_layer(tape: &mut Tape, h: Var, a_norm: Var, w: Var) -> Result<Var, TensorError> {
    let ah = tape.matmul(a_norm, h)?;
    let ahw = tape.matmul(ah, w)?;
    Ok(tape.relu(ahw))
}

/// One forward pass: a tape with every parameter entered as a leaf.
struct Pass<'m> {
    model: &'m Model,
    tape: Tape,
    vars: Vec<Var>,
}

impl<'m> Pass<'m> {
    fn new(model: &'m Model) -> Pass<'m> {
        let mut tape = Tape::new();
        let vars = model.values.iter().map(|t| tape.leaf(t)).collect();
        Pass { model, tape, vars }
    }

    fn p(&self, name: &str) -> Var {
        match self.model.index.get(name) {
            Some(&i) => self.vars[i],
            None => panic!("parameter {name} not built for this variant"),
        }
    }

    fn extract(&self, v: Var) -> Tensor {
        let (rows, cols) = self.tape.shape(v);
        Tensor::new(rows, cols, self.tape.value(v).to_vec())
            .expect("tape shapes are consistent")
    }

    fn linear(&mut self, x: Var, stem: &str) -> Result<Var, TensorError> {
        let w = self.p(&format!("{stem}.w"));
        let b = self.p(&format!("{stem}.b"));
        let xw = self.tape.matmul(x, w)?;
        self.tape.add_row(xw, b)
    }

    fn maybe_dropout(
        &mut self,
        v: Var,
        dropout: &mut Option<&mut ChaCha8Rng>,
    ) -> Result<Var, TensorError> {
        match dropout {
            Some(rng) => self
                .tape
                .dropout(v, self.model.config.dropout_rate, true, &mut **rng),
            None => Ok(v),
        }
    }

    /// Cell-line reduction: two dropout-guarded ReLU layers and a final
    /// ReLU layer.
    fn cell_reduce(
        &mut self,
        cell: &[f64],
        dropout: &mut Option<&mut ChaCha8Rng>,
    ) -> Result<Var, ModelError> {
        let expected = self.model.config.cell_input_dim;
        if cell.len() != expected {
            return Err(ModelError::CellWidth {
                expected,
                found: cell.len(),
            });
        }
        let x = self.tape.constant(1, expected, cell.to_vec())?;
        let mut h = self.linear(x, "cell.fc1")?;
        h = self.tape.relu(h);
        h = self.maybe_dropout(h, dropout)?;
        h = self.linear(h, "cell.fc2")?;
        h = self.tape.relu(h);
        h = self.maybe_dropout(h, dropout)?;
        h = self.linear(h, "cell.fc3")?;
        Ok(self.tape.relu(h))
    }

    /// Runs one graph through its GCN stack, returning per-node rows.
    fn gcn_stack(&mut self, prefix: &str, graph: &FeatureGraph) -> Result<Var, ModelError> {
        if graph.node_count() == 0 {
            return Err(ModelError::EmptyGraph);
        }
        let a_norm = self.tape.leaf(&graph.adjacency_norm);
        let mut h = self.tape.leaf(&graph.node_features);
        for i in 0..self.model.config.gcn_layers {
            let w = self.p(&format!("{prefix}.l{i}.w"));
            h = gcn_layer(&mut self.tape, h, a_norm, w)?;
        }
        Ok(h)
    }

    fn pool(&mut self, h: Var) -> Result<Var, TensorError> {
        match self.model.config.pooling {
            Pooling::Max => self.tape.row_max_pool(h),
            Pooling::Sum => self.tape.row_sum_pool(h),
            Pooling::Mean => self.tape.row_mean_pool(h),
        }
    }

    /// Pooled graph tokens: atom-graph token first, atom-bond-graph token
    /// second for dual-graph variants.
    fn token_sequence(&mut self, dual: &DualGraph) -> Result<Var, ModelError> {
        let atom = self.gcn_stack("gcn_atom", &dual.atom_graph)?;
        let atom_token = self.pool(atom)?;
        if self.model.config.variant.uses_bond_graph() {
            let bond = self.gcn_stack("gcn_bond", &dual.atom_bond_graph)?;
            let bond_token = self.pool(bond)?;
            Ok(self.tape.concat_rows(&[atom_token, bond_token])?)
        } else {
            Ok(atom_token)
        }
    }

    fn multi_head(&mut self, e: Var) -> Result<Var, TensorError> {
        let head_count = self.model.config.attention_heads;
        let mut heads = Vec::with_capacity(head_count);
        for h in 0..head_count {
            heads.push((
                self.p(&format!("attn.h{h}.wq")),
                self.p(&format!("attn.h{h}.wk")),
                self.p(&format!("attn.h{h}.wv")),
            ));
        }
        let wo = self.p("attn.wo");
        multi_head_attention(&mut self.tape, e, &heads, wo)
    }

    /// Drug embedding: graph tokens, optionally encoded by self-attention
    /// plus a feed-forward block, concatenated with the raw tokens (the
    /// long residual) and projected to `2 * graph_embed_dim`.
    fn drug_embed(&mut self, dual: &DualGraph) -> Result<Var, ModelError> {
        let e = self.token_sequence(dual)?;
        let flat = if self.model.config.variant.uses_transformer() {
            let mh = self.multi_head(e)?;
            let gain = self.p("ln.gain");
            let bias = self.p("ln.bias");
            let z = self.tape.layer_norm(mh, gain, bias)?;
            let f = self.linear(z, "ffn.fc1")?;
            let f = self.tape.relu(f);
            let zp = self.linear(f, "ffn.fc2")?;
            let zp_flat = self.tape.flatten_row(zp);
            let e_flat = self.tape.flatten_row(e);
            self.tape.concat_cols(&[zp_flat, e_flat])?
        } else {
            self.tape.flatten_row(e)
        };
        Ok(self.linear(flat, "proj")?)
    }

    /// Probability for one ordered pair: drug embeddings and the cell
    /// embedding fused through the classification head.
    fn predict_one(
        &mut self,
        drug_a: &DualGraph,
        drug_b: &DualGraph,
        cell: &[f64],
        dropout: &mut Option<&mut ChaCha8Rng>,
    ) -> Result<Var, ModelError> {
        let ea = self.drug_embed(drug_a)?;
        let eb = self.drug_embed(drug_b)?;
        let c = self.cell_reduce(cell, dropout)?;
        let ra = self.tape.concat_cols(&[ea, c])?;
        let rb = self.tape.concat_cols(&[eb, c])?;
        let r = self.tape.concat_cols(&[ra, rb])?;
        let mut h = self.linear(r, "head.fc1")?;
        h = self.tape.relu(h);
        h = self.maybe_dropout(h, dropout)?;
        h = self.linear(h, "head.fc2")?;
        h = self.tape.relu(h);
        h = self.maybe_dropout(h, dropout)?;
        let out = self.linear(h, "head.out")?;
        Ok(self.tape.sigmoid(out))
    }
}
