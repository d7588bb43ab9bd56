//! Deterministic tiny decoder-only transformer for desk-scale testing, plus
//! a planted-bias wrapper whose decisions run through a known direction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::unit_normalize;

use super::{Capabilities, InterventionHook, ModelAdapter, PrefillTrace, TokenId};

pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PLANTED_MODEL_ID: &str = "reference-planted-v1";

const LN_EPS: f64 = 1e-5;

/// Norm given to the dedicated unembedding rows of decision-label tokens.
/// Strong, mutually orthogonal label directions keep desk-scale decision
/// probes well-conditioned: a hidden state pushed along one label direction
/// wins the softmax with a wide margin.
const LABEL_ROW_SCALE: f64 = 3.0;

/// 32-entry vocabulary. Decision labels and `tie` appear in both bare and
/// space-prefixed forms, matching how real tokenizers split answer tokens.
fn default_vocab() -> Vec<String> {
    [
        "<pad>", "<bos>", "<eos>", "<unk>", "A", " A", "B", " B", "C", " C", "tie", " tie", "\n",
        " ", ".", ":", "-", ",", "the", " the", "save", " save", "one", " one", "five", " five",
        "you", " you", "must", " must", "now", " now",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Debug, Clone)]
pub struct ReferenceConfig {
    pub model_id: String,
    pub seed: u64,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub max_seq_len: usize,
    pub final_norm: bool,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            model_id: "reference".into(),
            seed: 0x5EED,
            num_layers: 4,
            hidden_dim: 16,
            max_seq_len: 1024,
            final_norm: true,
        }
    }
}

struct Block {
    wq: Vec<f64>,
    wk: Vec<f64>,
    wv: Vec<f64>,
    wo: Vec<f64>,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

pub struct ReferenceModel {
    cfg: ReferenceConfig,
    vocab: Vec<String>,
    /// Vocab entries sorted longest-first for greedy tokenization.
    sorted_vocab: Vec<(String, TokenId)>,
    embed: Vec<f64>,
    pos: Vec<f64>,
    blocks: Vec<Block>,
    w_lm: Vec<f64>,
    unk: TokenId,
}

fn draw(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

impl ReferenceModel {
    pub fn new(cfg: ReferenceConfig) -> Self {
        let vocab = default_vocab();
        let d = cfg.hidden_dim;
        let v = vocab.len();
        // Weight draw order is part of the determinism contract.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let embed = draw(&mut rng, v * d, 1.0);
        let pos = draw(&mut rng, cfg.max_seq_len * d, 0.3);
        let mlp_dim = 4 * d;
        let blocks = (0..cfg.num_layers)
            .map(|_| Block {
                wq: draw(&mut rng, d * d, 1.0 / (d as f64).sqrt()),
                wk: draw(&mut rng, d * d, 1.0 / (d as f64).sqrt()),
                wv: draw(&mut rng, d * d, 1.0 / (d as f64).sqrt()),
                wo: draw(&mut rng, d * d, 1.0 / (d as f64).sqrt()),
                w1: draw(&mut rng, mlp_dim * d, 1.0 / (d as f64).sqrt()),
                b1: draw(&mut rng, mlp_dim, 0.1),
                w2: draw(&mut rng, d * mlp_dim, 1.0 / (mlp_dim as f64).sqrt()),
                b2: draw(&mut rng, d, 0.1),
            })
            .collect();
        let mut w_lm = draw(&mut rng, v * d, 1.0 / (d as f64).sqrt());

        // Orthonormal directions for the label families A, B, C, tie; both
        // the bare and space-prefixed variant of a label share its row.
        let mut label_dirs: Vec<Vec<f64>> = Vec::new();
        while label_dirs.len() < 4 {
            let candidate = draw(&mut rng, d, 1.0);
            let mut w = candidate;
            for prev in &label_dirs {
                let dot: f64 = w.iter().zip(prev).map(|(a, b)| a * b).sum();
                for (x, p) in w.iter_mut().zip(prev) {
                    *x -= dot * p;
                }
            }
            if let Ok(u) = unit_normalize(&w) {
                label_dirs.push(u);
            }
        }
        for (family, dir) in [["A", " A"], ["B", " B"], ["C", " C"], ["tie", " tie"]]
            .iter()
            .zip(&label_dirs)
        {
            for name in family.iter() {
                let id = vocab.iter().position(|t| t == name).expect("label in vocab");
                for (slot, u) in w_lm[id * d..(id + 1) * d].iter_mut().zip(dir) {
                    *slot = LABEL_ROW_SCALE * u;
                }
            }
        }

        let mut sorted_vocab: Vec<(String, TokenId)> = vocab
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        sorted_vocab.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));
        let unk = vocab.iter().position(|t| t == UNK_TOKEN).expect("unk in vocab");

        ReferenceModel {
            cfg,
            vocab,
            sorted_vocab,
            embed,
            pos,
            blocks,
            w_lm,
            unk,
        }
    }

    pub fn config(&self) -> &ReferenceConfig {
        &self.cfg
    }

    /// Row of the unembedding matrix for one token.
    pub fn unembedding_row(&self, token: TokenId) -> &[f64] {
        let d = self.cfg.hidden_dim;
        &self.w_lm[token * d..(token + 1) * d]
    }

    /// Unit direction whose unembedding strongly favors the given tokens.
    /// The mean unembedding row is subtracted so the direction carries
    /// contrast rather than a uniform logit shift.
    pub fn dominant_direction(&self, tokens: &[TokenId]) -> Vec<f64> {
        let d = self.cfg.hidden_dim;
        let v = self.vocab.len();
        let mut mean = vec![0.0; d];
        for t in 0..v {
            for (m, w) in mean.iter_mut().zip(self.unembedding_row(t)) {
                *m += w / v as f64;
            }
        }
        let mut dir = vec![0.0; d];
        for &t in tokens {
            for ((x, w), m) in dir.iter_mut().zip(self.unembedding_row(t)).zip(&mean) {
                *x += w - m;
            }
        }
        unit_normalize(&dir).expect("unembedding rows are generic")
    }

    fn layer_norm(h: &[f64]) -> Vec<f64> {
        let n = h.len() as f64;
        let mean: f64 = h.iter().sum::<f64>() / n;
        let var: f64 = h.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        h.iter().map(|x| (x - mean) * inv).collect()
    }

    fn matvec(w: &[f64], x: &[f64], out_dim: usize) -> Vec<f64> {
        let in_dim = x.len();
        (0..out_dim)
            .map(|r| {
                let row = &w[r * in_dim..(r + 1) * in_dim];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    fn block_forward(&self, block: &Block, states: &mut [Vec<f64>]) {
        let d = self.cfg.hidden_dim;
        let t_len = states.len();
        let normed: Vec<Vec<f64>> = states.iter().map(|s| Self::layer_norm(s)).collect();
        let qs: Vec<Vec<f64>> = normed.iter().map(|x| Self::matvec(&block.wq, x, d)).collect();
        let ks: Vec<Vec<f64>> = normed.iter().map(|x| Self::matvec(&block.wk, x, d)).collect();
        let vs: Vec<Vec<f64>> = normed.iter().map(|x| Self::matvec(&block.wv, x, d)).collect();
        let scale = 1.0 / (d as f64).sqrt();

        let mut attn_out: Vec<Vec<f64>> = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let scores: Vec<f64> = (0..=t)
                .map(|j| scale * qs[t].iter().zip(&ks[j]).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            let mut ctx = vec![0.0; d];
            for (j, e) in exps.iter().enumerate() {
                let w = e / total;
                for (c, vj) in ctx.iter_mut().zip(&vs[j]) {
                    *c += w * vj;
                }
            }
            attn_out.push(Self::matvec(&block.wo, &ctx, d));
        }
        for (s, a) in states.iter_mut().zip(&attn_out) {
            for (x, y) in s.iter_mut().zip(a) {
                *x += y;
            }
        }

        for s in states.iter_mut() {
            let normed = Self::layer_norm(s);
            let mut hidden = Self::matvec(&block.w1, &normed, 4 * d);
            for (h, b) in hidden.iter_mut().zip(&block.b1) {
                *h = (*h + b).max(0.0);
            }
            let mut out = Self::matvec(&block.w2, &hidden, d);
            for (o, b) in out.iter_mut().zip(&block.b2) {
                *o += b;
            }
            for (x, y) in s.iter_mut().zip(&out) {
                *x += y;
            }
        }
    }

    fn logits_from_state(&self, h: &[f64]) -> Vec<f64> {
        let z = if self.cfg.final_norm {
            Self::layer_norm(h)
        } else {
            h.to_vec()
        };
        Self::matvec(&self.w_lm, &z, self.vocab.len())
    }

    /// Shared forward pass. `tap` runs after each block on the last-token
    /// state; both built-in biases and user hooks route through it so the
    /// capture-after-transform contract holds for every adapter built here.
    fn forward_with_tap(
        &self,
        prompt: &[TokenId],
        tap: &mut dyn FnMut(usize, &mut Vec<f64>) -> Result<()>,
    ) -> Result<PrefillTrace> {
        let d = self.cfg.hidden_dim;
        if prompt.len() > self.cfg.max_seq_len {
            return Err(Error::Config(format!(
                "prompt length {} exceeds max_seq_len {}",
                prompt.len(),
                self.cfg.max_seq_len
            )));
        }
        for &t in prompt {
            if t >= self.vocab.len() {
                return Err(Error::TokenMapping(format!("token id {t} out of vocabulary")));
            }
        }
        let mut states: Vec<Vec<f64>> = prompt
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let e = &self.embed[t * d..(t + 1) * d];
                let p = &self.pos[i * d..(i + 1) * d];
                e.iter().zip(p).map(|(a, b)| a + b).collect()
            })
            .collect();

        let mut hidden = Vec::with_capacity(self.cfg.num_layers + 1);
        hidden.push(states.last().expect("non-empty prompt").clone());
        for (l, block) in self.blocks.iter().enumerate() {
            self.block_forward(block, &mut states);
            let last = states.last_mut().expect("non-empty prompt");
            tap(l, last)?;
            hidden.push(last.clone());
        }
        let logits = self.logits_from_state(states.last().expect("non-empty"));
        Ok(PrefillTrace { hidden, logits })
    }

    fn hooks_tap<'a>(
        hooks: &'a [InterventionHook],
    ) -> impl FnMut(usize, &mut Vec<f64>) -> Result<()> + 'a {
        move |layer, state| {
            for hook in hooks.iter().filter(|h| h.layer == layer) {
                *state = hook.apply(state)?;
            }
            Ok(())
        }
    }
}

impl ModelAdapter for ReferenceModel {
    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }

    fn num_layers(&self) -> usize {
        self.cfg.num_layers
    }

    fn hidden_dim(&self) -> usize {
        self.cfg.hidden_dim
    }

    fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }

    fn final_norm_before_unembed(&self) -> bool {
        self.cfg.final_norm
    }

    fn reentrant(&self) -> bool {
        true
    }

    /// Greedy longest-match over the vocabulary; unmatched characters
    /// collapse to `<unk>`. A `<bos>` token heads every encoding.
    fn tokenize(&self, text: &str) -> Vec<TokenId> {
        let mut out = vec![1]; // <bos>
        let mut rest = text;
        'outer: while !rest.is_empty() {
            for (tok, id) in &self.sorted_vocab {
                if !tok.starts_with('<') && rest.starts_with(tok.as_str()) {
                    out.push(*id);
                    rest = &rest[tok.len()..];
                    continue 'outer;
                }
            }
            let mut chars = rest.chars();
            chars.next();
            rest = chars.as_str();
            out.push(self.unk);
        }
        out
    }

    fn detokenize(&self, token: TokenId) -> &str {
        self.vocab.get(token).map(|s| s.as_str()).unwrap_or(UNK_TOKEN)
    }

    fn prefill(&self, prompt: &[TokenId], hooks: &[InterventionHook]) -> Result<PrefillTrace> {
        let mut tap = Self::hooks_tap(hooks);
        self.forward_with_tap(prompt, &mut tap)
    }

    fn unembed(&self, h: &[f64]) -> Result<Vec<f64>> {
        Ok(self.logits_from_state(h))
    }
}

// ---------------------------------------------------------------------------
// Planted-bias wrapper
// ---------------------------------------------------------------------------

/// Reference model whose decision is driven through a planted direction:
/// a constant pull toward label A at one layer, and a much stronger pull
/// toward label B whenever the trigger token appears in the prompt. The
/// trigger shift lives entirely in a single known direction, so projecting
/// that direction out of the hidden state restores the unframed decision.
pub struct PlantedReference {
    base: ReferenceModel,
    model_id: String,
    layer: usize,
    /// Bare and space-prefixed forms of the trigger word.
    triggers: Vec<TokenId>,
    bias_always: Vec<f64>,
    bias_trigger: Vec<f64>,
}

impl PlantedReference {
    pub fn new(
        base_cfg: ReferenceConfig,
        model_id: impl Into<String>,
        layer: usize,
        trigger_token: &str,
        always_scale: f64,
        trigger_scale: f64,
    ) -> Result<Self> {
        let base = ReferenceModel::new(base_cfg);
        let triggers: Vec<TokenId> = [trigger_token.to_string(), format!(" {trigger_token}")]
            .iter()
            .filter_map(|t| base.vocab.iter().position(|v| v == t))
            .collect();
        if triggers.is_empty() {
            return Err(Error::TokenMapping(format!(
                "trigger `{trigger_token}` not in vocab"
            )));
        }
        let a_tokens: Vec<TokenId> = ["A", " A"]
            .iter()
            .filter_map(|t| base.vocab.iter().position(|v| v == t))
            .collect();
        let b_tokens: Vec<TokenId> = ["B", " B"]
            .iter()
            .filter_map(|t| base.vocab.iter().position(|v| v == t))
            .collect();
        let dir_a = base.dominant_direction(&a_tokens);
        let dir_b = base.dominant_direction(&b_tokens);
        Ok(PlantedReference {
            base,
            model_id: model_id.into(),
            layer,
            triggers,
            bias_always: dir_a.iter().map(|x| x * always_scale).collect(),
            bias_trigger: dir_b.iter().map(|x| x * trigger_scale).collect(),
        })
    }

    /// The fixed instance the registry exposes as `reference-planted-v1`.
    /// Trigger word `now`, pull toward A of 25, triggered pull toward B of 60
    /// at layer 2.
    pub fn canonical() -> Self {
        PlantedReference::new(
            ReferenceConfig::default(),
            PLANTED_MODEL_ID,
            2,
            "now",
            25.0,
            60.0,
        )
        .expect("canonical planted reference builds")
    }

    /// Unit direction of the triggered shift, for tests that need the
    /// ground-truth subspace.
    pub fn trigger_direction(&self) -> Vec<f64> {
        unit_normalize(&self.bias_trigger).expect("trigger bias non-zero")
    }

    pub fn steer_layer(&self) -> usize {
        self.layer
    }
}

impl ModelAdapter for PlantedReference {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn num_layers(&self) -> usize {
        self.base.num_layers()
    }

    fn hidden_dim(&self) -> usize {
        self.base.hidden_dim()
    }

    fn vocab(&self) -> &[String] {
        self.base.vocab()
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::ALL
    }

    fn final_norm_before_unembed(&self) -> bool {
        self.base.final_norm_before_unembed()
    }

    fn reentrant(&self) -> bool {
        true
    }

    fn tokenize(&self, text: &str) -> Vec<TokenId> {
        self.base.tokenize(text)
    }

    fn detokenize(&self, token: TokenId) -> &str {
        self.base.detokenize(token)
    }

    fn prefill(&self, prompt: &[TokenId], hooks: &[InterventionHook]) -> Result<PrefillTrace> {
        let triggered = prompt.iter().any(|t| self.triggers.contains(t));
        let mut tap = |layer: usize, state: &mut Vec<f64>| -> Result<()> {
            if layer == self.layer {
                for (s, b) in state.iter_mut().zip(&self.bias_always) {
                    *s += b;
                }
                if triggered {
                    for (s, b) in state.iter_mut().zip(&self.bias_trigger) {
                        *s += b;
                    }
                }
            }
            for hook in hooks.iter().filter(|h| h.layer == layer) {
                *state = hook.apply(state)?;
            }
            Ok(())
        };
        self.base.forward_with_tap(prompt, &mut tap)
    }

    fn unembed(&self, h: &[f64]) -> Result<Vec<f64>> {
        Ok(self.base.logits_from_state(h))
    }
}
