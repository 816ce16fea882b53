//! Three-stage budgeted token search: coarse window scan, lock-on
//! refinement inside the candidate pool, and a rescue pass that spends a
//! reserved budget slice on under-covered tokens anywhere in the grid.
//!
//! Every greedy stage breaks score ties toward the lower token index, so
//! selection is a pure function of its inputs.

use crate::error::{Error, Result};
use crate::model::{
    round_half_up, Budget, CueSet, HyperParams, PromptKind, SelectionTrace, TokenGrid,
};
use crate::sensing::{self, OdorField, SensingBank};

/// Split of the total budget K into the main stages and the rescue slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageBudgets {
    pub k: usize,
    pub k_main: usize,
    pub k_jump: usize,
}

impl StageBudgets {
    pub fn new(k: usize, hp: &HyperParams) -> Self {
        let k_jump = if hp.use_rescue {
            round_half_up(hp.jump_fraction * k as f64).min(k - 1)
        } else {
            0
        };
        StageBudgets {
            k,
            k_main: k - k_jump,
            k_jump,
        }
    }
}

/// Disjoint tiling of the grid into `w x w` windows, row-major window
/// order; edge windows shrink where the grid is not divisible by `w`.
#[derive(Debug, Clone)]
pub struct WindowPartition {
    pub w: usize,
    pub windows: Vec<Vec<usize>>,
}

impl WindowPartition {
    pub fn new(grid: &TokenGrid, w: usize) -> Self {
        let (rows, cols) = (grid.rows(), grid.cols());
        let mut windows = Vec::new();
        let mut wr = 0;
        while wr < rows {
            let mut wc = 0;
            let r_end = (wr + w).min(rows);
            while wc < cols {
                let c_end = (wc + w).min(cols);
                let mut window = Vec::with_capacity((r_end - wr) * (c_end - wc));
                for r in wr..r_end {
                    for c in wc..c_end {
                        window.push(grid.index(r, c));
                    }
                }
                windows.push(window);
                wc += w;
            }
            wr += w;
        }
        WindowPartition { w, windows }
    }
}

/// Min-max normalization to [0, 1]; collapses to all zeros when the range
/// is degenerate.
pub fn normalize(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range > 1e-12 {
        values.iter().map(|&x| (x - min) / range).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Coarse window search: scores each window by its average odor, keeps the
/// `M` best windows as the candidate pool, and anchors each kept window
/// with its strongest tokens.
pub fn coarse_search(
    field: &OdorField,
    grid: &TokenGrid,
    hp: &HyperParams,
    budgets: StageBudgets,
) -> (Vec<usize>, Vec<usize>) {
    let partition = WindowPartition::new(grid, hp.window);
    let averages: Vec<f64> = partition
        .windows
        .iter()
        .map(|w| w.iter().map(|&i| field.a[i]).sum::<f64>() / w.len() as f64)
        .collect();
    let mut order: Vec<usize> = (0..partition.windows.len()).collect();
    order.sort_by(|&a, &b| {
        averages[b]
            .partial_cmp(&averages[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let window_area = hp.window * hp.window;
    let mut m = ((hp.pool_multiplier * budgets.k_main as f64) / window_area as f64).ceil() as usize;
    m = m.clamp(1, partition.windows.len());
    // Expand the pool until it can hold the main budget.
    let mut pool_len: usize = order[..m].iter().map(|&w| partition.windows[w].len()).sum();
    while pool_len < budgets.k_main && m < partition.windows.len() {
        pool_len += partition.windows[order[m]].len();
        m += 1;
    }

    let mut pool = Vec::with_capacity(pool_len);
    let mut scaffold = Vec::new();
    for &w in &order[..m] {
        let window = &partition.windows[w];
        pool.extend_from_slice(window);
        let mut ranked = window.clone();
        ranked.sort_by(|&a, &b| field.a[b].partial_cmp(&field.a[a]).unwrap().then(a.cmp(&b)));
        scaffold.extend_from_slice(&ranked[..hp.scaffold_per_window.min(ranked.len())]);
    }
    pool.sort_unstable();
    scaffold.sort_unstable();
    (pool, scaffold)
}

/// Mean distance from a token to its 4-neighborhood, border-clipped.
fn detail_contrast(grid: &TokenGrid) -> Vec<f64> {
    let (rows, cols) = (grid.rows(), grid.cols());
    (0..grid.len())
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let mut total = 0.0;
            let mut count = 0usize;
            let mut visit = |nr: usize, nc: usize| {
                let v = grid.token(i);
                let u = grid.token(nr * cols + nc);
                let d = v
                    .iter()
                    .zip(u)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                total += d;
                count += 1;
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < rows {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < cols {
                visit(r, c + 1);
            }
            if count == 0 {
                0.0
            } else {
                total / count as f64
            }
        })
        .collect()
}

fn option_fields(
    bank: &SensingBank,
    grid: &TokenGrid,
    cues: &CueSet,
    hp: &HyperParams,
) -> Result<Vec<Vec<f64>>> {
    let projected = sensing::project_grid(bank, grid)?;
    cues.option_cues()
        .iter()
        .map(|cue| sensing::cue_field_projected(bank, &projected, cue.vector(), hp))
        .collect()
}

fn task_scores_from_parts(
    field: &OdorField,
    grid: &TokenGrid,
    cues: &CueSet,
    options: &[Vec<f64>],
) -> Vec<f64> {
    let mut components = vec![normalize(&field.a)];
    if cues.prompt_kind == PromptKind::MultipleChoice && !options.is_empty() {
        let support: Vec<f64> = (0..grid.len())
            .map(|i| {
                options
                    .iter()
                    .map(|f| f[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        components.push(normalize(&support));
    }
    components.push(normalize(&detail_contrast(grid)));
    (0..grid.len())
        .map(|i| components.iter().map(|c| c[i]).sum::<f64>() / components.len() as f64)
        .collect()
}

/// Per-token task score: the mean of the normalized cue agreement, option
/// support (multiple-choice prompts only), and local detail contrast.
pub fn task_scores(
    field: &OdorField,
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    let options = option_fields(bank, grid, cues, hp)?;
    Ok(task_scores_from_parts(field, grid, cues, &options))
}

fn neighborhood(grid: &TokenGrid, i: usize, radius: usize) -> impl Iterator<Item = usize> + '_ {
    let (rows, cols) = (grid.rows(), grid.cols());
    let (r, c) = (i / cols, i % cols);
    let r_lo = r.saturating_sub(radius);
    let r_hi = (r + radius).min(rows - 1);
    let c_lo = c.saturating_sub(radius);
    let c_hi = (c + radius).min(cols - 1);
    (r_lo..=r_hi).flat_map(move |nr| (c_lo..=c_hi).map(move |nc| nr * cols + nc))
}

/// Local support at token `i`: half the neighborhood's mean odor plus half
/// its best task score.
pub fn local_support(
    field: &OdorField,
    grid: &TokenGrid,
    hp: &HyperParams,
    i: usize,
    task: &[f64],
) -> f64 {
    let mut sum_a = 0.0;
    let mut max_s = f64::NEG_INFINITY;
    let mut count = 0usize;
    for j in neighborhood(grid, i, hp.lock_radius) {
        sum_a += field.a[j];
        max_s = max_s.max(task[j]);
        count += 1;
    }
    0.5 * sum_a / count as f64 + 0.5 * max_s
}

fn local_support_all(
    field: &OdorField,
    grid: &TokenGrid,
    hp: &HyperParams,
    task: &[f64],
) -> Vec<f64> {
    (0..grid.len())
        .map(|i| local_support(field, grid, hp, i, task))
        .collect()
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

fn spatial_kernel(grid: &TokenGrid, i: usize, j: usize, sigma: f64) -> f64 {
    let cols = grid.cols();
    let (ri, ci) = (i / cols, i % cols);
    let (rj, cj) = (j / cols, j % cols);
    let dr = ri as f64 - rj as f64;
    let dc = ci as f64 - cj as f64;
    (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Redundancy of token `i` against a selected set: the strongest combined
/// visual-similarity plus spatial-proximity match. Zero for an empty set.
pub fn redundancy(grid: &TokenGrid, hp: &HyperParams, i: usize, selected: &[usize]) -> f64 {
    if selected.is_empty() {
        return 0.0;
    }
    let vbar = unit_tokens(grid);
    selected
        .iter()
        .map(|&j| dot(&vbar[i], &vbar[j]) + spatial_kernel(grid, i, j, hp.spatial_bandwidth))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of the lock-on stage, with the score table used by the trace.
#[derive(Debug, Clone)]
pub struct LockOutcome {
    pub pool: Vec<usize>,
    pub locked: Vec<usize>,
    pub table: Vec<(usize, f64)>,
    pub picks: Vec<(usize, f64)>,
}

/// Greedy lock-on inside the coarse pool. Seeded by the scaffold, each step
/// adds the candidate with the best odor-plus-support score discounted by
/// redundancy against the running selection.
pub fn lock_on(
    field: &OdorField,
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
    pool: &[usize],
    scaffold: &[usize],
    budgets: StageBudgets,
) -> Result<LockOutcome> {
    let n = grid.len();
    let in_pool = {
        let mut mask = vec![false; n];
        for &i in pool {
            mask[i] = true;
        }
        mask
    };
    if scaffold.iter().any(|&i| !in_pool[i]) {
        return Err(Error::invalid("scaffold must lie inside the pool"));
    }
    if pool.len() < budgets.k_main {
        return Err(Error::invalid(format!(
            "pool of {} tokens cannot fill a main budget of {}",
            pool.len(),
            budgets.k_main
        )));
    }

    if !hp.use_lockon {
        let mut ranked = pool.to_vec();
        ranked.sort_by(|&a, &b| field.a[b].partial_cmp(&field.a[a]).unwrap().then(a.cmp(&b)));
        ranked.truncate(budgets.k_main);
        let picks: Vec<(usize, f64)> = ranked.iter().map(|&i| (i, field.a[i])).collect();
        ranked.sort_unstable();
        return Ok(LockOutcome {
            pool: pool.to_vec(),
            locked: ranked,
            table: pool.iter().map(|&i| (i, field.a[i])).collect(),
            picks,
        });
    }

    // Static per-token terms, normalized over the pool once.
    let task = task_scores(field, grid, cues, bank, hp)?;
    let support = local_support_all(field, grid, hp, &task);
    let pool_a: Vec<f64> = pool.iter().map(|&i| field.a[i]).collect();
    let pool_l: Vec<f64> = pool.iter().map(|&i| support[i]).collect();
    let norm_a_pool = normalize(&pool_a);
    let norm_l_pool = normalize(&pool_l);
    let mut norm_a = vec![0.0; n];
    let mut norm_l = vec![0.0; n];
    for (pos, &i) in pool.iter().enumerate() {
        norm_a[i] = norm_a_pool[pos];
        norm_l[i] = norm_l_pool[pos];
    }

    let vbar = unit_tokens(grid);
    let pair = |i: usize, j: usize| {
        dot(&vbar[i], &vbar[j]) + spatial_kernel(grid, i, j, hp.spatial_bandwidth)
    };

    // Seed with the scaffold, truncated by descending odor when oversized.
    let mut seed = scaffold.to_vec();
    if seed.len() > budgets.k_main {
        seed.sort_by(|&a, &b| field.a[b].partial_cmp(&field.a[a]).unwrap().then(a.cmp(&b)));
        seed.truncate(budgets.k_main);
        seed.sort_unstable();
    }
    let mut selected = vec![false; n];
    for &i in &seed {
        selected[i] = true;
    }

    // Redundancy cache against the running selection; grows monotonically.
    let mut red = vec![f64::NEG_INFINITY; n];
    for &i in pool {
        for &j in &seed {
            let p = pair(i, j);
            if p > red[i] {
                red[i] = p;
            }
        }
    }
    let score = |i: usize, red: &[f64]| {
        let r = if red[i] == f64::NEG_INFINITY {
            0.0
        } else {
            red[i]
        };
        norm_a[i] + hp.local_weight * norm_l[i] - hp.redundancy_weight * (r / 2.0)
    };

    let table: Vec<(usize, f64)> = pool.iter().map(|&i| (i, score(i, &red))).collect();

    let mut locked = seed;
    let mut picks = Vec::new();
    while locked.len() < budgets.k_main {
        let mut best: Option<(usize, f64)> = None;
        for &i in pool {
            if selected[i] {
                continue;
            }
            let m = score(i, &red);
            if best.map_or(true, |(_, b)| m > b) {
                best = Some((i, m));
            }
        }
        let (chosen, m) = best.expect("pool holds at least k_main tokens");
        selected[chosen] = true;
        picks.push((chosen, m));
        locked.push(chosen);
        for &i in pool {
            if !selected[i] {
                let p = pair(i, chosen);
                if p > red[i] {
                    red[i] = p;
                }
            }
        }
    }
    locked.sort_unstable();
    Ok(LockOutcome {
        pool: pool.to_vec(),
        locked,
        table,
        picks,
    })
}

fn uncertainty_from_parts(
    field: &OdorField,
    grid: &TokenGrid,
    cues: &CueSet,
    options: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let raw: Vec<f64> = if cues.prompt_kind == PromptKind::MultipleChoice {
        if options.len() < 2 {
            return Err(Error::invalid(
                "uncertainty needs at least two option cues for multiple choice",
            ));
        }
        (0..grid.len())
            .map(|i| {
                let mut top1 = f64::NEG_INFINITY;
                let mut top2 = f64::NEG_INFINITY;
                for f in options {
                    let v = f[i];
                    if v > top1 {
                        top2 = top1;
                        top1 = v;
                    } else if v > top2 {
                        top2 = v;
                    }
                }
                top1 - top2
            })
            .collect()
    } else {
        let global_idx = cues
            .cues()
            .iter()
            .position(|c| c.kind == crate::model::CueKind::Global)
            .unwrap_or(0);
        field.per_cue[global_idx].clone()
    };
    Ok(normalize(&raw).into_iter().map(|x| 1.0 - x).collect())
}

/// Per-token uncertainty: one minus the normalized option-support margin
/// for multiple-choice prompts, one minus normalized global-cue agreement
/// otherwise.
pub fn uncertainty(
    field: &OdorField,
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
) -> Result<Vec<f64>> {
    let options = option_fields(bank, grid, cues, hp)?;
    uncertainty_from_parts(field, grid, cues, &options)
}

/// Outcome of the rescue stage.
#[derive(Debug, Clone)]
pub struct RescueOutcome {
    pub rescued: Vec<usize>,
    pub table: Vec<(usize, f64)>,
    pub picks: Vec<(usize, f64)>,
}

/// Spends the reserved rescue budget on tokens outside the locked set,
/// favoring odor and uncertainty while penalizing coverage by what is
/// already kept (including earlier rescue picks).
pub fn rescue_jump(
    field: &OdorField,
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
    locked: &[usize],
    budgets: StageBudgets,
) -> Result<RescueOutcome> {
    let n = grid.len();
    if budgets.k_jump == 0 {
        return Ok(RescueOutcome {
            rescued: Vec::new(),
            table: Vec::new(),
            picks: Vec::new(),
        });
    }
    let in_locked = {
        let mut mask = vec![false; n];
        for &i in locked {
            mask[i] = true;
        }
        mask
    };
    let candidates: Vec<usize> = (0..n).filter(|&i| !in_locked[i]).collect();
    if candidates.len() < budgets.k_jump {
        return Err(Error::invalid(format!(
            "{} free tokens cannot fill a rescue budget of {}",
            candidates.len(),
            budgets.k_jump
        )));
    }

    let options = option_fields(bank, grid, cues, hp)?;
    let unc = uncertainty_from_parts(field, grid, cues, &options)?;
    let norm_a = normalize(&field.a);

    let vbar = unit_tokens(grid);
    let pair = |i: usize, j: usize| {
        hp.coverage_balance * dot(&vbar[i], &vbar[j])
            + (1.0 - hp.coverage_balance) * spatial_kernel(grid, i, j, hp.spatial_bandwidth)
    };
    let mut cov = vec![f64::NEG_INFINITY; n];
    for &i in &candidates {
        for &j in locked {
            let p = pair(i, j);
            if p > cov[i] {
                cov[i] = p;
            }
        }
    }
    let score = |i: usize, cov: &[f64]| {
        let c = if cov[i] == f64::NEG_INFINITY {
            0.0
        } else {
            cov[i]
        };
        norm_a[i] + hp.uncertainty_weight * unc[i] - hp.coverage_penalty * c
    };

    let table: Vec<(usize, f64)> = candidates.iter().map(|&i| (i, score(i, &cov))).collect();

    let mut taken = vec![false; n];
    let mut rescued = Vec::with_capacity(budgets.k_jump);
    let mut picks = Vec::with_capacity(budgets.k_jump);
    for _ in 0..budgets.k_jump {
        let mut best: Option<(usize, f64)> = None;
        for &i in &candidates {
            if taken[i] {
                continue;
            }
            let q = score(i, &cov);
            if best.map_or(true, |(_, b)| q > b) {
                best = Some((i, q));
            }
        }
        let (chosen, q) = best.expect("candidate set holds at least k_jump tokens");
        taken[chosen] = true;
        picks.push((chosen, q));
        rescued.push(chosen);
        for &i in &candidates {
            if !taken[i] {
                let p = pair(i, chosen);
                if p > cov[i] {
                    cov[i] = p;
                }
            }
        }
    }
    rescued.sort_unstable();
    Ok(RescueOutcome {
        rescued,
        table,
        picks,
    })
}

/// Runs the full staged selection for one budget and returns the trace.
/// The final set is the sorted union of the locked and rescued tokens and
/// has exactly `budget.k` members. At full retention the search is skipped
/// and every token is returned.
pub fn select(
    grid: &TokenGrid,
    cues: &CueSet,
    bank: &SensingBank,
    hp: &HyperParams,
    budget: Budget,
) -> Result<SelectionTrace> {
    hp.validate()?;
    let n = grid.len();
    if budget.k > n {
        return Err(Error::invalid(format!(
            "budget {} exceeds token count {n}",
            budget.k
        )));
    }
    let field = sensing::odor_field(bank, grid, cues, hp)?;
    let coords = |indices: &[usize]| -> Vec<(usize, usize)> {
        indices
            .iter()
            .map(|&i| (i / grid.cols(), i % grid.cols()))
            .collect()
    };

    if budget.k == n {
        let all: Vec<usize> = (0..n).collect();
        return Ok(SelectionTrace {
            rows: grid.rows(),
            cols: grid.cols(),
            k: budget.k,
            odor: field.a,
            coarse_pool: all.clone(),
            scaffold: Vec::new(),
            locked_pool: all.clone(),
            locked: all.clone(),
            rescue: Vec::new(),
            coords: coords(&all),
            final_indices: all,
            lock_table: Vec::new(),
            lock_picks: Vec::new(),
            rescue_table: Vec::new(),
            rescue_picks: Vec::new(),
        });
    }

    let budgets = StageBudgets::new(budget.k, hp);
    let (pool, scaffold) = coarse_search(&field, grid, hp, budgets);
    let lock = lock_on(&field, grid, cues, bank, hp, &pool, &scaffold, budgets)?;
    let rescue = rescue_jump(&field, grid, cues, bank, hp, &lock.locked, budgets)?;

    let mut final_indices = lock.locked.clone();
    final_indices.extend_from_slice(&rescue.rescued);
    final_indices.sort_unstable();
    debug_assert_eq!(final_indices.len(), budget.k);

    Ok(SelectionTrace {
        rows: grid.rows(),
        cols: grid.cols(),
        k: budget.k,
        odor: field.a,
        coarse_pool: pool,
        scaffold,
        locked_pool: lock.pool,
        locked: lock.locked,
        rescue: rescue.rescued,
        coords: coords(&final_indices),
        final_indices,
        lock_table: lock.table,
        lock_picks: lock.picks,
        rescue_table: rescue.table,
        rescue_picks: rescue.picks,
    })
}
