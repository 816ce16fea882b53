//! Frozen sparse sensing bank and the odor-field estimator.
//!
//! Two shared sign-random sparse projections map visual tokens and text
//! cues into one sensing space; per-head binary masks carve that space
//! into heads. A cue gates its top heads by masked projection energy and
//! the odor value of a token is the gated, softmax-weighted cosine between
//! the masked projections, maximized over the prompt's cues.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Cue, CueSet, HyperParams, TokenGrid};
use crate::rng::Rng;

/// One sparse projection: per output row, the input columns and signed
/// magnitudes of its non-zero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    pub dim_in: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseProjection {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(col, val)| val * v[col]).sum())
            .collect()
    }
}

/// The frozen sensing parameters: projections, head masks, and the seed
/// they were generated from. Regeneration from the same seed and shapes is
/// bit-identical, so banks are never serialized.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingBank {
    pub seed: u64,
    pub sensing_dim: usize,
    visual: SparseProjection,
    text: SparseProjection,
    masks: Vec<Vec<bool>>,
}

impl SensingBank {
    /// Assembles a bank from explicit parts. Intended for small hand-built
    /// configurations; `build_bank` is the production constructor.
    pub fn from_parts(
        visual_rows: Vec<Vec<f64>>,
        text_rows: Vec<Vec<f64>>,
        masks: Vec<Vec<bool>>,
        seed: u64,
    ) -> Result<Self> {
        let sensing_dim = visual_rows.len();
        if sensing_dim == 0 || text_rows.len() != sensing_dim {
            return Err(Error::invalid(
                "projections must share a positive row count",
            ));
        }
        if masks.is_empty() || masks.iter().any(|m| m.len() != sensing_dim) {
            return Err(Error::invalid("each mask must cover the sensing dimension"));
        }
        let dim_v = visual_rows[0].len();
        let dim_t = text_rows[0].len();
        if visual_rows.iter().any(|r| r.len() != dim_v)
            || text_rows.iter().any(|r| r.len() != dim_t)
        {
            return Err(Error::invalid("ragged projection rows"));
        }
        let to_sparse = |dense: Vec<Vec<f64>>, dim_in: usize| SparseProjection {
            dim_in,
            rows: dense
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .enumerate()
                        .filter(|&(_, v)| v != 0.0)
                        .collect()
                })
                .collect(),
        };
        Ok(SensingBank {
            seed,
            sensing_dim,
            visual: to_sparse(visual_rows, dim_v),
            text: to_sparse(text_rows, dim_t),
            masks,
        })
    }

    pub fn heads(&self) -> usize {
        self.masks.len()
    }

    pub fn dim_v(&self) -> usize {
        self.visual.dim_in
    }

    pub fn dim_t(&self) -> usize {
        self.text.dim_in
    }

    pub fn mask(&self, h: usize) -> &[bool] {
        &self.masks[h]
    }

    pub fn project_visual(&self, v: &[f64]) -> Vec<f64> {
        self.visual.apply(v)
    }

    pub fn project_text(&self, c: &[f64]) -> Vec<f64> {
        self.text.apply(c)
    }

    pub fn visual_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.visual.rows
    }

    pub fn text_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.text.rows
    }
}

fn sparse_row(rng: &mut Rng, dim_in: usize, nonzeros: usize) -> Vec<(usize, f64)> {
    let magnitude = 1.0 / (nonzeros as f64).sqrt();
    let positions = rng.sample_without_replacement(nonzeros, dim_in);
    let mut row: Vec<(usize, f64)> = positions
        .into_iter()
        .map(|col| {
            let sign = if rng.coin() { 1.0 } else { -1.0 };
            (col, sign * magnitude)
        })
        .collect();
    row.sort_unstable_by_key(|&(col, _)| col);
    row
}

/// Generates the frozen bank from one generator stream seeded with
/// `hp.seed`: visual rows first, then text rows, then head masks.
pub fn build_bank(hp: &HyperParams, dim_v: usize, dim_t: usize) -> Result<SensingBank> {
    hp.validate()?;
    if hp.nonzeros_visual > dim_v {
        return Err(Error::invalid(format!(
            "nonzeros_visual {} exceeds visual dimension {dim_v}",
            hp.nonzeros_visual
        )));
    }
    if hp.nonzeros_text > dim_t {
        return Err(Error::invalid(format!(
            "nonzeros_text {} exceeds text dimension {dim_t}",
            hp.nonzeros_text
        )));
    }
    let mut rng = Rng::new(hp.seed);
    let visual = SparseProjection {
        dim_in: dim_v,
        rows: (0..hp.sensing_dim)
            .map(|_| sparse_row(&mut rng, dim_v, hp.nonzeros_visual))
            .collect(),
    };
    let text = SparseProjection {
        dim_in: dim_t,
        rows: (0..hp.sensing_dim)
            .map(|_| sparse_row(&mut rng, dim_t, hp.nonzeros_text))
            .collect(),
    };
    let masks = (0..hp.heads)
        .map(|_| {
            let ones = rng.sample_without_replacement(hp.nonzeros_mask, hp.sensing_dim);
            let mut mask = vec![false; hp.sensing_dim];
            for pos in ones {
                mask[pos] = true;
            }
            mask
        })
        .collect();
    Ok(SensingBank {
        seed: hp.seed,
        sensing_dim: hp.sensing_dim,
        visual,
        text,
        masks,
    })
}

/// Cosine of two vectors restricted to the mask; 0 when either masked part
/// is degenerate.
fn masked_cosine(mask: &[bool], a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (j, &on) in mask.iter().enumerate() {
        if on {
            dot += a[j] * b[j];
            na += a[j] * a[j];
            nb += b[j] * b[j];
        }
    }
    let (na, nb) = (na.sqrt(), nb.sqrt());
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Response of head `h` to token vector `v_i` under cue `c`: the cosine of
/// the masked projections.
pub fn head_response(bank: &SensingBank, v_i: &[f64], c: &[f64], h: usize) -> Result<f64> {
    if h >= bank.heads() {
        return Err(Error::invalid(format!("head index {h} out of range")));
    }
    if v_i.len() != bank.dim_v() || c.len() != bank.dim_t() {
        return Err(Error::invalid("vector dimensions do not match the bank"));
    }
    let pv = bank.project_visual(v_i);
    let pt = bank.project_text(c);
    Ok(masked_cosine(bank.mask(h), &pv, &pt))
}

/// Head gate for one cue: the `active_heads` strongest heads by masked
/// projection energy, with softmax weights at `gate_temperature`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGate {
    pub heads: Vec<usize>,
    pub weights: Vec<f64>,
}

pub fn gate_heads(bank: &SensingBank, c: &[f64], hp: &HyperParams) -> Result<HeadGate> {
    if c.len() != bank.dim_t() {
        return Err(Error::invalid("cue dimension does not match the bank"));
    }
    if hp.active_heads == 0 || hp.active_heads > bank.heads() {
        return Err(Error::invalid("active_heads out of range for this bank"));
    }
    let pt = bank.project_text(c);
    let activations: Vec<f64> = (0..bank.heads())
        .map(|h| {
            bank.mask(h)
                .iter()
                .enumerate()
                .filter(|&(_, &on)| on)
                .map(|(j, _)| pt[j] * pt[j])
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..bank.heads()).collect();
    // Descending activation, ties toward the lower head index.
    order.sort_by(|&a, &b| {
        activations[b]
            .partial_cmp(&activations[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut heads: Vec<usize> = order[..hp.active_heads].to_vec();
    heads.sort_unstable();
    let max_act = heads
        .iter()
        .map(|&h| activations[h])
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = heads
        .iter()
        .map(|&h| ((activations[h] - max_act) / hp.gate_temperature).exp())
        .collect();
    let total: f64 = exps.iter().sum();
    let weights = exps.into_iter().map(|e| e / total).collect();
    Ok(HeadGate { heads, weights })
}

/// The prompt-conditioned odor field and its per-cue decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct OdorField {
    /// Final odor value per token: max over the per-cue fields.
    pub a: Vec<f64>,
    /// Gated response field per non-option cue.
    pub per_cue: Vec<Vec<f64>>,
    /// Gate used for each non-option cue.
    pub gates: Vec<HeadGate>,
}

fn check_dims(bank: &SensingBank, grid: &TokenGrid, dim_t: usize) -> Result<()> {
    if bank.dim_v() != grid.dim_v() {
        return Err(Error::invalid(format!(
            "bank visual dimension {} does not match grid dimension {}",
            bank.dim_v(),
            grid.dim_v()
        )));
    }
    if bank.dim_t() != dim_t {
        return Err(Error::invalid(format!(
            "bank text dimension {} does not match cue dimension {dim_t}",
            bank.dim_t()
        )));
    }
    Ok(())
}

fn gated_field(
    bank: &SensingBank,
    projected_tokens: &[Vec<f64>],
    c: &[f64],
    gate: &HeadGate,
) -> Vec<f64> {
    let pt = bank.project_text(c);
    projected_tokens
        .par_iter()
        .map(|pv| {
            gate.heads
                .iter()
                .zip(&gate.weights)
                .map(|(&h, &w)| w * masked_cosine(bank.mask(h), pv, &pt))
                .sum()
        })
        .collect()
}

/// Projects every grid token into the sensing space once; later cue-field
/// evaluations reuse the result.
pub fn project_grid(bank: &SensingBank, grid: &TokenGrid) -> Result<Vec<Vec<f64>>> {
    if bank.dim_v() != grid.dim_v() {
        return Err(Error::invalid(format!(
            "bank visual dimension {} does not match grid dimension {}",
            bank.dim_v(),
            grid.dim_v()
        )));
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map(|i| bank.project_visual(grid.token(i)))
        .collect())
}

/// Gated response field for one cue over pre-projected tokens.
pub fn cue_field_projected(
    bank: &SensingBank,
    projected: &[Vec<f64>],
    c: &[f64],
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    let gate = gate_heads(bank, c, hp)?;
    Ok(gated_field(bank, projected, c, &gate))
}

/// Evaluates the odor field for every non-option cue. Option cues never
/// enter the max; they only feed option support and uncertainty.
pub fn odor_field(
    bank: &SensingBank,
    grid: &TokenGrid,
    cues: &CueSet,
    hp: &HyperParams,
) -> Result<OdorField> {
    check_dims(bank, grid, cues.dim_t())?;
    let projected = project_grid(bank, grid)?;
    let mut per_cue = Vec::with_capacity(cues.cues().len());
    let mut gates = Vec::with_capacity(cues.cues().len());
    for cue in cues.cues() {
        let gate = gate_heads(bank, cue.vector(), hp)?;
        per_cue.push(gated_field(bank, &projected, cue.vector(), &gate));
        gates.push(gate);
    }
    let n = grid.len();
    let mut a = vec![f64::NEG_INFINITY; n];
    for field in &per_cue {
        for (ai, &fi) in a.iter_mut().zip(field) {
            if fi > *ai {
                *ai = fi;
            }
        }
    }
    Ok(OdorField { a, per_cue, gates })
}

/// The gated response field for exactly one cue, of any kind.
pub fn single_cue_field(
    bank: &SensingBank,
    grid: &TokenGrid,
    cue: &Cue,
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    check_dims(bank, grid, cue.dim())?;
    let projected = project_grid(bank, grid)?;
    cue_field_projected(bank, &projected, cue.vector(), hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CueKind, CueSet};

    fn toy_hp() -> HyperParams {
        let mut hp = HyperParams::default();
        hp.heads = 1;
        hp.sensing_dim = 2;
        hp.nonzeros_visual = 1;
        hp.nonzeros_text = 1;
        hp.nonzeros_mask = 2;
        hp.active_heads = 1;
        hp
    }

    /// Identity-ish bank: 2-dim sensing space, one all-ones head.
    fn toy_bank() -> SensingBank {
        SensingBank::from_parts(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![true, true]],
            0,
        )
        .unwrap()
    }

    #[test]
    fn bank_regeneration_is_identical() {
        let hp = HyperParams::default();
        let a = build_bank(&hp, 64, 48).unwrap();
        let b = build_bank(&hp, 64, 48).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bank_row_counts_exact() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 64, 48).unwrap();
        assert_eq!(bank.visual_rows().len(), 128);
        for row in bank.visual_rows() {
            assert_eq!(row.len(), hp.nonzeros_visual);
        }
        for row in bank.text_rows() {
            assert_eq!(row.len(), hp.nonzeros_text);
        }
        for h in 0..bank.heads() {
            let ones = bank.mask(h).iter().filter(|&&b| b).count();
            assert_eq!(ones, hp.nonzeros_mask);
        }
    }

    #[test]
    fn bank_rows_unit_norm() {
        let bank = build_bank(&HyperParams::default(), 64, 48).unwrap();
        for row in bank.visual_rows().iter().chain(bank.text_rows()) {
            let norm: f64 = row.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn full_mask_when_nonzeros_equal_dim() {
        let mut hp = HyperParams::default();
        hp.nonzeros_mask = hp.sensing_dim;
        let bank = build_bank(&hp, 64, 48).unwrap();
        for h in 0..bank.heads() {
            assert!(bank.mask(h).iter().all(|&b| b));
        }
    }

    #[test]
    fn bank_dimension_checks() {
        let hp = HyperParams::default();
        assert!(build_bank(&hp, 16, 48).is_err()); // nonzeros_visual = 32 > 16
        assert!(build_bank(&hp, 64, 4).is_err()); // nonzeros_text = 8 > 4
    }

    #[test]
    fn head_response_of_identical_projections() {
        let bank = toy_bank();
        let z = head_response(&bank, &[0.3, 0.4], &[0.3, 0.4], 0).unwrap();
        assert!((z - 1.0).abs() < 1e-12);
        let z = head_response(&bank, &[0.3, 0.4], &[-0.3, -0.4], 0).unwrap();
        assert!((z + 1.0).abs() < 1e-12);
    }

    #[test]
    fn head_response_hand_cosine() {
        // Projections (1,0) and (1,1) under a full mask: cosine 1/sqrt(2).
        let bank = toy_bank();
        let z = head_response(&bank, &[1.0, 0.0], &[1.0, 1.0], 0).unwrap();
        assert!((z - 1.0 / 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn head_response_degenerate_projection_is_zero() {
        let bank = toy_bank();
        let z = head_response(&bank, &[0.0, 0.0], &[1.0, 1.0], 0).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn gate_ties_prefer_lower_heads() {
        // Two identical masks produce equal activations.
        let bank = SensingBank::from_parts(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![true, true], vec![true, true], vec![true, true]],
            0,
        )
        .unwrap();
        let mut hp = toy_hp();
        hp.heads = 3;
        hp.active_heads = 2;
        let gate = gate_heads(&bank, &[1.0, 0.0], &hp).unwrap();
        assert_eq!(gate.heads, vec![0, 1]);
        assert!((gate.weights[0] - 0.5).abs() < 1e-12);
        assert!((gate.weights[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gate_softmax_hand_value() {
        // Activations 2 and 1 at temperature 0.5 give softmax(4, 2).
        let bank = SensingBank::from_parts(
            vec![vec![1.0], vec![1.0]],
            vec![vec![2.0], vec![1.0]],
            vec![vec![true, false], vec![false, true]],
            0,
        )
        .unwrap();
        let mut hp = toy_hp();
        hp.heads = 2;
        hp.active_heads = 2;
        let gate = gate_heads(&bank, &[1.0], &hp).unwrap();
        let e2 = 2f64.exp();
        assert!((gate.weights[0] - e2 / (e2 + 1.0)).abs() < 1e-9);
        assert!((gate.weights[0] - 0.8808).abs() < 1e-4);
        assert!((gate.weights[1] - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn gate_all_heads_when_k_equals_heads() {
        let hp = HyperParams {
            active_heads: 16,
            ..HyperParams::default()
        };
        let bank = build_bank(&hp, 64, 48).unwrap();
        let mut rng = Rng::new(1);
        let c = rng.unit_vec(48);
        let gate = gate_heads(&bank, &c, &hp).unwrap();
        assert_eq!(gate.heads, (0..16).collect::<Vec<_>>());
        let sum: f64 = gate.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gating_is_monotone_in_active_heads() {
        let base = HyperParams::default();
        let bank = build_bank(&base, 64, 48).unwrap();
        let mut rng = Rng::new(2);
        for _ in 0..20 {
            let c = rng.unit_vec(48);
            let mut previous: Vec<usize> = Vec::new();
            for k in 1..=base.heads {
                let hp = HyperParams {
                    active_heads: k,
                    ..base.clone()
                };
                let gate = gate_heads(&bank, &c, &hp).unwrap();
                assert!(previous.iter().all(|h| gate.heads.contains(h)));
                previous = gate.heads;
            }
        }
    }

    fn random_grid(rng: &mut Rng, rows: usize, cols: usize, dim_v: usize) -> TokenGrid {
        let data = rng.gaussian_vec(rows * cols * dim_v);
        TokenGrid::new(rows, cols, dim_v, data).unwrap()
    }

    #[test]
    fn odor_single_cue_single_head_collapses() {
        let mut hp = HyperParams::default();
        hp.active_heads = 1;
        let bank = build_bank(&hp, 48, 32).unwrap();
        let mut rng = Rng::new(3);
        let grid = random_grid(&mut rng, 3, 3, 48);
        let cue = Cue::new(CueKind::Global, rng.unit_vec(32), "g").unwrap();
        let set = CueSet::new(vec![cue.clone()], vec![]).unwrap();
        let field = odor_field(&bank, &grid, &set, &hp).unwrap();
        let gate = gate_heads(&bank, cue.vector(), &hp).unwrap();
        assert_eq!(gate.heads.len(), 1);
        for i in 0..grid.len() {
            let z = head_response(&bank, grid.token(i), cue.vector(), gate.heads[0]).unwrap();
            assert!((field.a[i] - z).abs() < 1e-12);
        }
    }

    #[test]
    fn odor_is_max_over_cues() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 48, 32).unwrap();
        let mut rng = Rng::new(4);
        let grid = random_grid(&mut rng, 4, 3, 48);
        let c1 = Cue::new(CueKind::Global, rng.unit_vec(32), "g").unwrap();
        let c2 = Cue::new(CueKind::Target, rng.unit_vec(32), "t").unwrap();
        let set = CueSet::new(vec![c1, c2], vec![]).unwrap();
        let field = odor_field(&bank, &grid, &set, &hp).unwrap();
        for i in 0..grid.len() {
            let expected = field.per_cue[0][i].max(field.per_cue[1][i]);
            assert_eq!(field.a[i], expected);
        }
    }

    #[test]
    fn odor_hand_evaluated_toy() {
        // 2x2 grid in 2-dim space with the identity bank: odor equals the
        // plain cosine between the token and the cue.
        let bank = toy_bank();
        let hp = toy_hp();
        let grid = TokenGrid::new(2, 2, 2, vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 1.0, 1.0]).unwrap();
        let cue = Cue::new(CueKind::Global, vec![1.0, 0.0], "g").unwrap();
        let set = CueSet::new(vec![cue], vec![]).unwrap();
        let field = odor_field(&bank, &grid, &set, &hp).unwrap();
        let expected = [1.0, 0.0, -1.0, 1.0 / 2f64.sqrt()];
        for (a, e) in field.a.iter().zip(expected.iter()) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn single_cue_field_equals_odor_for_singleton() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 48, 32).unwrap();
        let mut rng = Rng::new(5);
        let grid = random_grid(&mut rng, 3, 3, 48);
        let cue = Cue::new(CueKind::Global, rng.unit_vec(32), "g").unwrap();
        let set = CueSet::new(vec![cue.clone()], vec![]).unwrap();
        let field = odor_field(&bank, &grid, &set, &hp).unwrap();
        let single = single_cue_field(&bank, &grid, &cue, &hp).unwrap();
        assert_eq!(field.a, single);
    }

    #[test]
    fn orthogonal_option_cue_gives_zero_field() {
        // Identity bank, all tokens along e1, option cue along e2.
        let bank = toy_bank();
        let hp = toy_hp();
        let grid = TokenGrid::new(2, 2, 2, vec![1.0, 0.0, 2.0, 0.0, 0.5, 0.0, 3.0, 0.0]).unwrap();
        let cue = Cue::new(CueKind::Option, vec![0.0, 1.0], "A").unwrap();
        let field = single_cue_field(&bank, &grid, &cue, &hp).unwrap();
        assert!(field.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn identical_option_cues_have_identical_fields() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 48, 32).unwrap();
        let mut rng = Rng::new(6);
        let grid = random_grid(&mut rng, 3, 3, 48);
        let v = rng.unit_vec(32);
        let a = Cue::new(CueKind::Option, v.clone(), "A").unwrap();
        let b = Cue::new(CueKind::Option, v, "B").unwrap();
        assert_eq!(
            single_cue_field(&bank, &grid, &a, &hp).unwrap(),
            single_cue_field(&bank, &grid, &b, &hp).unwrap()
        );
    }

    #[test]
    fn odor_values_bounded() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 64, 48).unwrap();
        let mut rng = Rng::new(7);
        for _ in 0..10 {
            let grid = random_grid(&mut rng, 5, 4, 64);
            let cues = CueSet::new(
                vec![Cue::new(CueKind::Global, rng.unit_vec(48), "g").unwrap()],
                vec![],
            )
            .unwrap();
            let field = odor_field(&bank, &grid, &cues, &hp).unwrap();
            for &a in &field.a {
                assert!((-1.0 - 1e-6..=1.0 + 1e-6).contains(&a));
            }
        }
    }

    #[test]
    fn odor_scale_invariant() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 64, 48).unwrap();
        let mut rng = Rng::new(8);
        let grid = random_grid(&mut rng, 4, 4, 64);
        let cues = CueSet::new(
            vec![Cue::new(CueKind::Global, rng.unit_vec(48), "g").unwrap()],
            vec![],
        )
        .unwrap();
        let base = odor_field(&bank, &grid, &cues, &hp).unwrap();
        for s in [0.1, 3.0, 10.0] {
            let scaled = odor_field(&bank, &grid.scaled(s), &cues, &hp).unwrap();
            for (a, b) in base.a.iter().zip(&scaled.a) {
                assert!((a - b).abs() < 1e-9, "scale {s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn odor_deterministic_across_thread_counts() {
        let hp = HyperParams::default();
        let bank = build_bank(&hp, 64, 48).unwrap();
        let mut rng = Rng::new(9);
        let grid = random_grid(&mut rng, 6, 6, 64);
        let cues = CueSet::new(
            vec![Cue::new(CueKind::Global, rng.unit_vec(48), "g").unwrap()],
            vec![],
        )
        .unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| odor_field(&bank, &grid, &cues, &hp).unwrap())
        };
        let one = run(1);
        let eight = run(8);
        assert_eq!(one, eight);
    }

    #[test]
    fn constant_cue_field_ignores_prompt() {
        let mut hp = HyperParams::default();
        hp.use_odor_cue = false;
        let bank = build_bank(&hp, 48, 32).unwrap();
        let mut rng = Rng::new(10);
        let grid = random_grid(&mut rng, 4, 4, 48);
        let provider = crate::embedding::EmbeddingProvider::desk_hash(32).unwrap();
        let a = crate::cues::build_cues(
            &crate::cues::PromptSpec::open("What color is the hat?"),
            &provider,
            &hp,
        )
        .unwrap();
        let b = crate::cues::build_cues(
            &crate::cues::PromptSpec::open("How many sheep are grazing?"),
            &provider,
            &hp,
        )
        .unwrap();
        let fa = odor_field(&bank, &grid, &a, &hp).unwrap();
        let fb = odor_field(&bank, &grid, &b, &hp).unwrap();
        assert_eq!(fa.a, fb.a);
    }
}
