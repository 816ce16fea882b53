//! Shared data model: token grids, cues, budgets, hyperparameters, and
//! the staged selection trace.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense grid of visual token vectors in row-major order.
///
/// Token index `i` sits at grid coordinate `(i / cols, i % cols)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid {
    rows: usize,
    cols: usize,
    dim_v: usize,
    data: Vec<f64>,
}

impl TokenGrid {
    pub fn new(rows: usize, cols: usize, dim_v: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || dim_v == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        let expected = rows * cols * dim_v;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "grid data length {} does not match rows*cols*dim_v = {}",
                data.len(),
                expected
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("grid contains non-finite entries"));
        }
        Ok(TokenGrid {
            rows,
            cols,
            dim_v,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim_v(&self) -> usize {
        self.dim_v
    }

    /// Number of tokens N = rows * cols.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false // rows and cols are positive by construction
    }

    pub fn token(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim_v..(i + 1) * self.dim_v]
    }

    /// Row-major coordinate of token `i`.
    pub fn coord(&self, i: usize) -> Result<(usize, usize)> {
        if i >= self.len() {
            return Err(Error::invalid(format!(
                "token index {i} out of range for {} tokens",
                self.len()
            )));
        }
        Ok((i / self.cols, i % self.cols))
    }

    /// Token index at `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Grid with every token vector multiplied by `s`. Used by scale tests.
    pub fn scaled(&self, s: f64) -> TokenGrid {
        TokenGrid {
            rows: self.rows,
            cols: self.cols,
            dim_v: self.dim_v,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueKind {
    Global,
    Target,
    Task,
    Option,
}

/// One prompt-derived evidence query: a unit-norm text embedding plus a label.
#[derive(Debug, Clone, PartialEq)]
pub struct Cue {
    pub kind: CueKind,
    vector: Vec<f64>,
    pub label: String,
}

impl Cue {
    /// Builds a cue, normalizing the vector to unit length.
    pub fn new(kind: CueKind, vector: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::invalid("cue vector must be non-empty"));
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::invalid("cue vector has zero or non-finite norm"));
        }
        Ok(Cue {
            kind,
            vector: vector.into_iter().map(|x| x / norm).collect(),
            label: label.into(),
        })
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    /// Unit vector with all-equal entries; the prompt-agnostic stand-in cue.
    pub fn constant(kind: CueKind, dim: usize, label: impl Into<String>) -> Result<Self> {
        Cue::new(kind, vec![1.0; dim], label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    OpenEnded,
    MultipleChoice,
}

/// The prompt's cue collection: search targets for the odor field plus
/// per-option cues used only for option support and uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct CueSet {
    cues: Vec<Cue>,
    option_cues: Vec<Cue>,
    pub prompt_kind: PromptKind,
}

impl CueSet {
    pub fn new(cues: Vec<Cue>, option_cues: Vec<Cue>) -> Result<Self> {
        if cues.is_empty() {
            return Err(Error::invalid("cue set must contain at least one cue"));
        }
        if cues.iter().any(|c| c.kind == CueKind::Option) {
            return Err(Error::invalid("option cues belong in the option list"));
        }
        if option_cues.iter().any(|c| c.kind != CueKind::Option) {
            return Err(Error::invalid("option list may only hold option cues"));
        }
        let dim = cues[0].dim();
        if cues
            .iter()
            .chain(option_cues.iter())
            .any(|c| c.dim() != dim)
        {
            return Err(Error::invalid("all cues must share one dimension"));
        }
        let prompt_kind = if option_cues.is_empty() {
            PromptKind::OpenEnded
        } else {
            PromptKind::MultipleChoice
        };
        Ok(CueSet {
            cues,
            option_cues,
            prompt_kind,
        })
    }

    pub fn cues(&self) -> &[Cue] {
        &self.cues
    }

    pub fn option_cues(&self) -> &[Cue] {
        &self.option_cues
    }

    pub fn dim_t(&self) -> usize {
        self.cues[0].dim()
    }

    /// First global-kind cue, falling back to the first cue.
    pub fn global_cue(&self) -> &Cue {
        self.cues
            .iter()
            .find(|c| c.kind == CueKind::Global)
            .unwrap_or(&self.cues[0])
    }
}

/// All tunables of the router, the sensing bank, and the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Number of sensing heads.
    pub heads: usize,
    /// Shared sensing dimension.
    pub sensing_dim: usize,
    /// Non-zero entries per visual projection row.
    pub nonzeros_visual: usize,
    /// Non-zero entries per text projection row.
    pub nonzeros_text: usize,
    /// Ones per head mask.
    pub nonzeros_mask: usize,
    /// Heads gated on per cue.
    pub active_heads: usize,
    /// Softmax temperature for head gating.
    pub gate_temperature: f64,
    /// Seed for the frozen bank.
    pub seed: u64,
    /// Coarse-search window side length.
    pub window: usize,
    /// Scaffold tokens kept per selected window.
    pub scaffold_per_window: usize,
    /// Chebyshev radius of the local-support neighborhood.
    pub lock_radius: usize,
    /// Spatial bandwidth of the proximity kernel.
    pub spatial_bandwidth: f64,
    /// Local-support weight in the lock-on score.
    pub local_weight: f64,
    /// Redundancy weight in the lock-on score.
    pub redundancy_weight: f64,
    /// Fraction of the budget reserved for the rescue stage.
    pub jump_fraction: f64,
    /// Feature/spatial balance inside the coverage kernel.
    pub coverage_balance: f64,
    /// Uncertainty weight in the rescue score.
    pub uncertainty_weight: f64,
    /// Coverage penalty in the rescue score.
    pub coverage_penalty: f64,
    /// Coarse pool size multiplier relative to the main budget.
    pub pool_multiplier: f64,
    /// Cosine threshold above which the merge baseline drops a token.
    pub merge_threshold: f64,
    /// Relevance floor for the conditional-diversity baseline.
    pub relevance_floor: f64,
    pub use_odor_cue: bool,
    pub use_multi_cue: bool,
    pub use_lockon: bool,
    pub use_rescue: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            heads: 16,
            sensing_dim: 128,
            nonzeros_visual: 32,
            nonzeros_text: 8,
            nonzeros_mask: 16,
            active_heads: 4,
            gate_temperature: 0.5,
            seed: 42,
            window: 2,
            scaffold_per_window: 1,
            lock_radius: 1,
            spatial_bandwidth: 2.0,
            local_weight: 0.35,
            redundancy_weight: 0.35,
            jump_fraction: 0.15,
            coverage_balance: 0.5,
            uncertainty_weight: 0.25,
            coverage_penalty: 0.50,
            pool_multiplier: 2.0,
            merge_threshold: 0.95,
            relevance_floor: 0.05,
            use_odor_cue: true,
            use_multi_cue: true,
            use_lockon: true,
            use_rescue: true,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.sensing_dim == 0 {
            return Err(Error::invalid("heads and sensing_dim must be positive"));
        }
        if self.active_heads == 0 || self.active_heads > self.heads {
            return Err(Error::invalid(format!(
                "active_heads must lie in 1..={}, got {}",
                self.heads, self.active_heads
            )));
        }
        if self.nonzeros_mask > self.sensing_dim {
            return Err(Error::invalid("nonzeros_mask exceeds sensing_dim"));
        }
        if self.nonzeros_visual == 0 || self.nonzeros_text == 0 || self.nonzeros_mask == 0 {
            return Err(Error::invalid("non-zero counts must be positive"));
        }
        if !(self.jump_fraction > 0.0 && self.jump_fraction < 1.0) {
            return Err(Error::invalid("jump_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.coverage_balance) {
            return Err(Error::invalid("coverage_balance must lie in [0, 1]"));
        }
        if self.window == 0 || self.scaffold_per_window == 0 {
            return Err(Error::invalid(
                "window and scaffold_per_window must be positive",
            ));
        }
        if !(self.spatial_bandwidth > 0.0) {
            return Err(Error::invalid("spatial_bandwidth must be positive"));
        }
        if !(self.gate_temperature > 0.0) {
            return Err(Error::invalid("gate_temperature must be positive"));
        }
        if !(self.pool_multiplier >= 1.0) {
            return Err(Error::invalid("pool_multiplier must be at least 1"));
        }
        Ok(())
    }
}

/// Token budget: retention ratio plus the realized count K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Budget {
    pub ratio: f64,
    pub k: usize,
}

/// Nearest integer with half values rounded up.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

impl Budget {
    /// K = round_half_up(ratio * n) clamped to [1, n].
    pub fn new(ratio: f64, n: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::invalid(format!(
                "retention ratio {ratio} outside (0, 1]"
            )));
        }
        if n == 0 {
            return Err(Error::invalid("token count must be positive"));
        }
        let k = round_half_up(ratio * n as f64).clamp(1, n);
        Ok(Budget { ratio, k })
    }
}

/// Full record of one staged selection.
///
/// Index lists are sorted ascending; `lock_picks` / `rescue_picks` keep the
/// greedy pick order with the score each token had when chosen, while the
/// `*_table` entries score every candidate of the stage against its initial
/// state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTrace {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub odor: Vec<f64>,
    pub coarse_pool: Vec<usize>,
    pub scaffold: Vec<usize>,
    pub locked_pool: Vec<usize>,
    pub locked: Vec<usize>,
    pub rescue: Vec<usize>,
    #[serde(rename = "final")]
    pub final_indices: Vec<usize>,
    pub coords: Vec<(usize, usize)>,
    pub lock_table: Vec<(usize, f64)>,
    pub lock_picks: Vec<(usize, f64)>,
    pub rescue_table: Vec<(usize, f64)>,
    pub rescue_picks: Vec<(usize, f64)>,
}

impl SelectionTrace {
    pub fn stage_sizes(&self) -> StageSizes {
        StageSizes {
            coarse_pool: self.coarse_pool.len(),
            scaffold: self.scaffold.len(),
            locked_pool: self.locked_pool.len(),
            locked: self.locked.len(),
            rescue: self.rescue.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageSizes {
    pub coarse_pool: usize,
    pub scaffold: usize,
    pub locked_pool: usize,
    pub locked: usize,
    pub rescue: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_identity_retention() {
        assert_eq!(Budget::new(1.0, 576).unwrap().k, 576);
    }

    #[test]
    fn budget_rounds_to_nearest() {
        // 0.2 * 576 = 115.2 rounds down.
        assert_eq!(Budget::new(0.2, 576).unwrap().k, 115);
    }

    #[test]
    fn budget_ties_round_up() {
        // 0.5 * 9 = 4.5 rounds up.
        assert_eq!(Budget::new(0.5, 9).unwrap().k, 5);
    }

    #[test]
    fn budget_rejects_bad_inputs() {
        assert!(Budget::new(0.0, 10).is_err());
        assert!(Budget::new(1.5, 10).is_err());
        assert!(Budget::new(0.5, 0).is_err());
    }

    #[test]
    fn coord_row_major() {
        let grid = TokenGrid::new(4, 4, 1, vec![0.0; 16]).unwrap();
        assert_eq!(grid.coord(0).unwrap(), (0, 0));
        assert_eq!(grid.coord(5).unwrap(), (1, 1));
        assert_eq!(grid.coord(15).unwrap(), (3, 3));
        assert!(grid.coord(16).is_err());
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(TokenGrid::new(0, 4, 1, vec![]).is_err());
        assert!(TokenGrid::new(2, 2, 2, vec![0.0; 7]).is_err());
        assert!(TokenGrid::new(1, 1, 2, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn defaults_match_reference_settings() {
        let hp = HyperParams::default();
        assert_eq!(hp.heads, 16);
        assert_eq!(hp.sensing_dim, 128);
        assert_eq!(
            (hp.nonzeros_visual, hp.nonzeros_text, hp.nonzeros_mask),
            (32, 8, 16)
        );
        assert_eq!(hp.active_heads, 4);
        assert_eq!(hp.gate_temperature, 0.5);
        assert_eq!(hp.seed, 42);
        assert_eq!(hp.window, 2);
        assert_eq!(hp.scaffold_per_window, 1);
        assert_eq!(hp.lock_radius, 1);
        assert_eq!(hp.spatial_bandwidth, 2.0);
        assert_eq!(hp.local_weight, 0.35);
        assert_eq!(hp.redundancy_weight, 0.35);
        assert_eq!(hp.jump_fraction, 0.15);
        assert_eq!(hp.coverage_balance, 0.5);
        assert_eq!(hp.uncertainty_weight, 0.25);
        assert_eq!(hp.coverage_penalty, 0.50);
        assert_eq!(hp.pool_multiplier, 2.0);
        assert!(hp.use_odor_cue && hp.use_multi_cue && hp.use_lockon && hp.use_rescue);
        hp.validate().unwrap();
    }

    #[test]
    fn invalid_hyperparams_rejected() {
        let mut hp = HyperParams::default();
        hp.active_heads = 17;
        assert!(hp.validate().is_err());
        let mut hp = HyperParams::default();
        hp.jump_fraction = 1.0;
        assert!(hp.validate().is_err());
        let mut hp = HyperParams::default();
        hp.nonzeros_mask = 129;
        assert!(hp.validate().is_err());
    }

    #[test]
    fn cue_is_normalized() {
        let cue = Cue::new(CueKind::Global, vec![3.0, 4.0], "g").unwrap();
        let norm: f64 = cue.vector().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cue_set_kinds_enforced() {
        let g = Cue::new(CueKind::Global, vec![1.0, 0.0], "g").unwrap();
        let o = Cue::new(CueKind::Option, vec![0.0, 1.0], "A").unwrap();
        assert!(CueSet::new(vec![], vec![]).is_err());
        assert!(CueSet::new(vec![o.clone()], vec![]).is_err());
        assert!(CueSet::new(vec![g.clone()], vec![g.clone()]).is_err());
        let set = CueSet::new(vec![g.clone()], vec![o.clone()]).unwrap();
        assert_eq!(set.prompt_kind, PromptKind::MultipleChoice);
        let set = CueSet::new(vec![g], vec![]).unwrap();
        assert_eq!(set.prompt_kind, PromptKind::OpenEnded);
    }
}
