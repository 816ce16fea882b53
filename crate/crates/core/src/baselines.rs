//! Reference pruners for comparative runs. These mirror the common
//! training-free selection styles (score ranking, max-min diversity,
//! similarity merging, relevance-weighted diversity) on the same grid and
//! cue inputs as the staged router; they are style-of analogues, not
//! reimplementations of the published systems.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Budget, CueSet, HyperParams, TokenGrid};
use crate::search::{self, normalize};
use crate::sensing::{self, SensingBank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrunerKind {
    F3a,
    ScoreRank,
    DiversityMaxmin,
    SimilarityMerge,
    ConditionalDiversity,
}

impl PrunerKind {
    pub const ALL: [PrunerKind; 5] = [
        PrunerKind::F3a,
        PrunerKind::ScoreRank,
        PrunerKind::DiversityMaxmin,
        PrunerKind::SimilarityMerge,
        PrunerKind::ConditionalDiversity,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PrunerKind::F3a => "f3a",
            PrunerKind::ScoreRank => "score_rank",
            PrunerKind::DiversityMaxmin => "diversity_maxmin",
            PrunerKind::SimilarityMerge => "similarity_merge",
            PrunerKind::ConditionalDiversity => "conditional_diversity",
        }
    }

    /// Runs the selector, returning exactly `budget.k` sorted indices.
    pub fn select(
        &self,
        grid: &TokenGrid,
        cues: &CueSet,
        bank: &SensingBank,
        hp: &HyperParams,
        budget: Budget,
    ) -> Result<Vec<usize>> {
        match self {
            PrunerKind::F3a => Ok(search::select(grid, cues, bank, hp, budget)?.final_indices),
            PrunerKind::ScoreRank => score_rank_select(grid, cues, bank, hp, budget.k),
            PrunerKind::DiversityMaxmin => diversity_maxmin_select(grid, budget.k),
            PrunerKind::SimilarityMerge => similarity_merge_select(grid, hp, budget.k),
            PrunerKind::ConditionalDiversity => {
                conditional_diversity_select(grid, cues, bank, hp, budget.k)
            }
        }
    }
}

impl fmt::Display for PrunerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrunerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f3a" => Ok(PrunerKind::F3a),
            "score_rank" => Ok(PrunerKind::ScoreRank),
            "diversity_maxmin" => Ok(PrunerKind::DiversityMaxmin),
            "similarity_merge" => Ok(PrunerKind::SimilarityMerge),
            "conditional_diversity" => Ok(PrunerKind::ConditionalDiversity),
            other => Err(Error::invalid(format!("unknown method {other:?}"))),
        }
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("budget {k} outside 1..={n}")));
    }
    Ok(())
}

fn unit_tokens(grid: &TokenGrid) -> Vec<Vec<f64>> {
    (0..grid.len())
        .map(|i| {
            let v = grid.token(i);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                vec![0.0; v.len()]
            } else {
                v.iter().map(|x| x / norm).collect()
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Top-K tokens by global-cue response, ties toward the lower index.
pub fn score_rank_select(
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
    k: usize,
) -> Result<Vec<usize>> {
    let n = grid.len();
    check_k(k, n)?;
    if k == n {
        return Ok((0..n).collect());
    }
    let field = sensing::single_cue_field(bank, grid, cues.global_cue(), hp)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| field[b].partial_cmp(&field[a]).unwrap().then(a.cmp(&b)));
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

/// Greedy farthest-point selection under cosine distance, seeded at the
/// largest-norm token.
pub fn diversity_maxmin_select(grid: &TokenGrid, k: usize) -> Result<Vec<usize>> {
    let n = grid.len();
    check_k(k, n)?;
    if k == n {
        return Ok((0..n).collect());
    }
    let norms: Vec<f64> = (0..n)
        .map(|i| grid.token(i).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let seed = (0..n)
        .max_by(|&a, &b| norms[a].partial_cmp(&norms[b]).unwrap().then(b.cmp(&a)))
        .unwrap();
    let vbar = unit_tokens(grid);

    let mut chosen = vec![seed];
    let mut min_dist: Vec<f64> = (0..n).map(|i| 1.0 - dot(&vbar[i], &vbar[seed])).collect();
    let mut taken = vec![false; n];
    taken[seed] = true;
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            if best.map_or(true, |(_, b)| min_dist[i] > b) {
                best = Some((i, min_dist[i]));
            }
        }
        let (next, _) = best.unwrap();
        taken[next] = true;
        chosen.push(next);
        for i in 0..n {
            if !taken[i] {
                let d = 1.0 - dot(&vbar[i], &vbar[next]);
                if d < min_dist[i] {
                    min_dist[i] = d;
                }
            }
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Dominance-ranked sweep that drops near-duplicates of already-kept
/// tokens, then fills any shortfall from the skipped tokens in dominance
/// order.
pub fn similarity_merge_select(grid: &TokenGrid, hp: &HyperParams, k: usize) -> Result<Vec<usize>> {
    let n = grid.len();
    check_k(k, n)?;
    if k == n {
        return Ok((0..n).collect());
    }
    let vbar = unit_tokens(grid);
    let dominance: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| dot(&vbar[i], &vbar[j])).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        dominance[b]
            .partial_cmp(&dominance[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut kept: Vec<usize> = Vec::with_capacity(k);
    let mut skipped: Vec<usize> = Vec::new();
    for &i in &order {
        if kept.len() == k {
            break;
        }
        let duplicate = kept
            .iter()
            .any(|&j| dot(&vbar[i], &vbar[j]) > hp.merge_threshold);
        if duplicate {
            skipped.push(i);
        } else {
            kept.push(i);
        }
    }
    for &i in &skipped {
        if kept.len() == k {
            break;
        }
        kept.push(i);
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Greedy relevance-weighted diversity: gain is the global-cue relevance
/// times the cosine distance to the closest chosen token.
pub fn conditional_diversity_select(
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
    k: usize,
) -> Result<Vec<usize>> {
    let n = grid.len();
    check_k(k, n)?;
    if k == n {
        return Ok((0..n).collect());
    }
    let field = sensing::single_cue_field(bank, grid, cues.global_cue(), hp)?;
    let rel: Vec<f64> = normalize(&field)
        .into_iter()
        .map(|x| x + hp.relevance_floor)
        .collect();
    let seed = (0..n)
        .max_by(|&a, &b| rel[a].partial_cmp(&rel[b]).unwrap().then(b.cmp(&a)))
        .unwrap();
    let vbar = unit_tokens(grid);

    let mut chosen = vec![seed];
    let mut taken = vec![false; n];
    taken[seed] = true;
    let mut min_dist: Vec<f64> = (0..n).map(|i| 1.0 - dot(&vbar[i], &vbar[seed])).collect();
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            let gain = rel[i] * min_dist[i];
            if best.map_or(true, |(_, b)| gain > b) {
                best = Some((i, gain));
            }
        }
        let (next, _) = best.unwrap();
        taken[next] = true;
        chosen.push(next);
        for i in 0..n {
            if !taken[i] {
                let d = 1.0 - dot(&vbar[i], &vbar[next]);
                if d < min_dist[i] {
                    min_dist[i] = d;
                }
            }
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cue, CueKind};
    use crate::rng::Rng;
    use crate::sensing::build_bank;

    fn small_hp() -> HyperParams {
        HyperParams {
            nonzeros_visual: 8,
            nonzeros_text: 8,
            ..HyperParams::default()
        }
    }

    fn random_grid(rng: &mut Rng, rows: usize, cols: usize, dim_v: usize) -> TokenGrid {
        TokenGrid::new(rows, cols, dim_v, rng.gaussian_vec(rows * cols * dim_v)).unwrap()
    }

    fn simple_cues(rng: &mut Rng, dim_t: usize) -> CueSet {
        CueSet::new(
            vec![Cue::new(CueKind::Global, rng.unit_vec(dim_t), "g").unwrap()],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn all_selectors_full_budget() {
        let mut rng = Rng::new(61);
        let hp = small_hp();
        let bank = build_bank(&hp, 8, 8).unwrap();
        let grid = random_grid(&mut rng, 3, 4, 8);
        let cues = simple_cues(&mut rng, 8);
        let budget = Budget::new(1.0, 12).unwrap();
        for kind in PrunerKind::ALL {
            let sel = kind.select(&grid, &cues, &bank, &hp, budget).unwrap();
            assert_eq!(sel, (0..12).collect::<Vec<_>>(), "{kind}");
        }
    }

    #[test]
    fn selectors_return_exactly_k_sorted() {
        let mut rng = Rng::new(62);
        let hp = small_hp();
        let bank = build_bank(&hp, 8, 8).unwrap();
        for _ in 0..5 {
            let grid = random_grid(&mut rng, 5, 5, 8);
            let cues = simple_cues(&mut rng, 8);
            let budget = Budget::new(0.35, 25).unwrap();
            for kind in PrunerKind::ALL {
                let sel = kind.select(&grid, &cues, &bank, &hp, budget).unwrap();
                assert_eq!(sel.len(), budget.k, "{kind}");
                assert!(sel.windows(2).all(|w| w[0] < w[1]), "{kind}");
                assert!(sel.iter().all(|&i| i < 25), "{kind}");
            }
        }
    }

    #[test]
    fn score_rank_matches_sort_oracle() {
        let mut rng = Rng::new(63);
        let hp = small_hp();
        let bank = build_bank(&hp, 8, 8).unwrap();
        let grid = random_grid(&mut rng, 3, 3, 8);
        let cues = simple_cues(&mut rng, 8);
        let sel = score_rank_select(&grid, &cues, &bank, &hp, 4).unwrap();
        let field = sensing::single_cue_field(&bank, &grid, cues.global_cue(), &hp).unwrap();
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&a, &b| field[b].partial_cmp(&field[a]).unwrap().then(a.cmp(&b)));
        let mut expected = order[..4].to_vec();
        expected.sort_unstable();
        assert_eq!(sel, expected);
    }

    #[test]
    fn score_rank_single_best_token() {
        // Token 3 aligned with the cue through an identity-ish bank.
        let bank = crate::sensing::SensingBank::from_parts(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![true, true]],
            0,
        )
        .unwrap();
        let mut hp = small_hp();
        hp.heads = 1;
        hp.sensing_dim = 2;
        hp.active_heads = 1;
        let mut data = vec![0.0, -1.0, 0.3, 0.4, -0.5, 0.0, 1.0, 0.1];
        data[6] = 1.0;
        let grid = TokenGrid::new(2, 2, 2, data).unwrap();
        let cues = CueSet::new(
            vec![Cue::new(CueKind::Global, vec![1.0, 0.1], "g").unwrap()],
            vec![],
        )
        .unwrap();
        let sel = score_rank_select(&grid, &cues, &bank, &hp, 1).unwrap();
        assert_eq!(sel, vec![3]);
    }

    #[test]
    fn maxmin_identical_tokens_first_k() {
        let grid = TokenGrid::new(2, 3, 2, vec![1.0; 12]).unwrap();
        let sel = diversity_maxmin_select(&grid, 3).unwrap();
        assert_eq!(sel, vec![0, 1, 2]);
    }

    #[test]
    fn maxmin_finds_antipodal_pair() {
        // Tokens 2 and 5 are antipodal with the largest norms.
        let data = vec![
            0.1, 0.0, //
            0.0, 0.1, //
            3.0, 0.0, //
            0.05, 0.05, //
            0.0, -0.1, //
            -3.0, 0.0,
        ];
        let grid = TokenGrid::new(2, 3, 2, data).unwrap();
        let sel = diversity_maxmin_select(&grid, 2).unwrap();
        assert_eq!(sel, vec![2, 5]);
        // Exhaustive pair check: no pair has larger min cosine distance.
        let vbar = unit_tokens(&grid);
        let dist = |a: usize, b: usize| 1.0 - dot(&vbar[a], &vbar[b]);
        for a in 0..6 {
            for b in (a + 1)..6 {
                assert!(dist(a, b) <= dist(2, 5) + 1e-12);
            }
        }
    }

    #[test]
    fn merge_keeps_one_per_cluster() {
        // Two tight clusters of three tokens each.
        let data = vec![
            1.0, 0.00, //
            1.0, 0.01, //
            1.0, -0.01, //
            0.0, 1.00, //
            0.01, 1.0, //
            -0.01, 1.0,
        ];
        let grid = TokenGrid::new(2, 3, 2, data).unwrap();
        let sel = similarity_merge_select(&grid, &small_hp(), 2).unwrap();
        assert_eq!(sel.len(), 2);
        let one_each = sel.iter().filter(|&&i| i < 3).count() == 1;
        assert!(one_each, "selection {sel:?} should span both clusters");
    }

    #[test]
    fn merge_orthogonal_tokens_tie_to_first_k() {
        let data = vec![
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ];
        let grid = TokenGrid::new(2, 2, 4, data).unwrap();
        let sel = similarity_merge_select(&grid, &small_hp(), 2).unwrap();
        assert_eq!(sel, vec![0, 1]);
    }

    #[test]
    fn merge_fills_from_skipped() {
        // Three near-identical tokens: the sweep keeps one, then must fill
        // the rest from the skipped duplicates.
        let data = vec![1.0, 0.0, 1.0, 0.001, 1.0, -0.001];
        let grid = TokenGrid::new(1, 3, 2, data).unwrap();
        let sel = similarity_merge_select(&grid, &small_hp(), 2).unwrap();
        assert_eq!(sel.len(), 2);
    }

    #[test]
    fn conditional_diversity_matches_step_oracle() {
        let mut rng = Rng::new(64);
        let hp = small_hp();
        let bank = build_bank(&hp, 8, 8).unwrap();
        let grid = random_grid(&mut rng, 3, 3, 8);
        let cues = simple_cues(&mut rng, 8);
        let k = 4;
        let sel = conditional_diversity_select(&grid, &cues, &bank, &hp, k).unwrap();

        // Step-by-step greedy re-simulation.
        let field = sensing::single_cue_field(&bank, &grid, cues.global_cue(), &hp).unwrap();
        let rel: Vec<f64> = normalize(&field).into_iter().map(|x| x + 0.05).collect();
        let vbar = unit_tokens(&grid);
        let mut chosen: Vec<usize> = Vec::new();
        let mut remaining: Vec<usize> = (0..9).collect();
        let seed = *remaining
            .iter()
            .max_by(|&&a, &&b| rel[a].partial_cmp(&rel[b]).unwrap().then(b.cmp(&a)))
            .unwrap();
        chosen.push(seed);
        remaining.retain(|&i| i != seed);
        while chosen.len() < k {
            let gain = |i: usize| {
                let d = chosen
                    .iter()
                    .map(|&j| 1.0 - dot(&vbar[i], &vbar[j]))
                    .fold(f64::INFINITY, f64::min);
                rel[i] * d
            };
            let next = *remaining
                .iter()
                .max_by(|&&a, &&b| gain(a).partial_cmp(&gain(b)).unwrap().then(b.cmp(&a)))
                .unwrap();
            chosen.push(next);
            remaining.retain(|&i| i != next);
        }
        chosen.sort_unstable();
        assert_eq!(sel, chosen);
    }

    #[test]
    fn conditional_diversity_zero_diversity_grid() {
        let grid = TokenGrid::new(2, 2, 2, vec![1.0, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0, 0.5]).unwrap();
        let mut rng = Rng::new(65);
        let hp = HyperParams {
            nonzeros_visual: 2,
            nonzeros_text: 8,
            ..HyperParams::default()
        };
        let bank = build_bank(&hp, 2, 8).unwrap();
        let cues = simple_cues(&mut rng, 8);
        let sel = conditional_diversity_select(&grid, &cues, &bank, &hp, 2).unwrap();
        assert_eq!(sel, vec![0, 1]);
    }

    #[test]
    fn oversized_budget_rejected() {
        let grid = TokenGrid::new(2, 2, 2, vec![1.0; 8]).unwrap();
        assert!(diversity_maxmin_select(&grid, 5).is_err());
        assert!(similarity_merge_select(&grid, &small_hp(), 0).is_err());
    }

    #[test]
    fn maxmin_permutation_equivariant() {
        // Reversing token order permutes the selection when all pairwise
        // distances are distinct.
        let mut rng = Rng::new(66);
        let n = 9;
        let dim = 6;
        let data = rng.gaussian_vec(n * dim);
        let grid = TokenGrid::new(3, 3, dim, data.clone()).unwrap();
        let sel = diversity_maxmin_select(&grid, 4).unwrap();
        let mut reversed = Vec::with_capacity(n * dim);
        for i in (0..n).rev() {
            reversed.extend_from_slice(&data[i * dim..(i + 1) * dim]);
        }
        let grid_rev = TokenGrid::new(3, 3, dim, reversed).unwrap();
        let sel_rev = diversity_maxmin_select(&grid_rev, 4).unwrap();
        let mut mapped: Vec<usize> = sel_rev.iter().map(|&i| n - 1 - i).collect();
        mapped.sort_unstable();
        assert_eq!(sel, mapped);
    }
}
