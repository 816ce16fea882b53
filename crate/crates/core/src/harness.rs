//! Synthetic planted-evidence benchmark harness.
//!
//! Tasks plant known evidence (and optionally distractor) regions in a
//! random grid so selection quality is measurable without a model:
//! evidence tokens are built to respond to the task's cue through the
//! sensing bank, distractors are structured but cue-orthogonal, and the
//! rest is noise. The module also hosts the fixed-fidelity token-demand
//! calculator and the exact two-sided sign test used for paired method
//! comparisons.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::PrunerKind;
use crate::error::{Error, Result};
use crate::model::{Budget, Cue, CueKind, CueSet, HyperParams, TokenGrid};
use crate::rng::Rng;
use crate::sensing::{self, SensingBank};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleRegion,
    Distributed,
    PeripheralSmall,
    OptionDiscrimination,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::SingleRegion,
        Scenario::Distributed,
        Scenario::PeripheralSmall,
        Scenario::OptionDiscrimination,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SingleRegion => "single_region",
            Scenario::Distributed => "distributed",
            Scenario::PeripheralSmall => "peripheral_small",
            Scenario::OptionDiscrimination => "option_discrimination",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_region" => Ok(Scenario::SingleRegion),
            "distributed" => Ok(Scenario::Distributed),
            "peripheral_small" => Ok(Scenario::PeripheralSmall),
            "option_discrimination" => Ok(Scenario::OptionDiscrimination),
            other => Err(Error::invalid(format!("unknown scenario {other:?}"))),
        }
    }
}

/// A planted-evidence instance with ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub grid: TokenGrid,
    pub cues: CueSet,
    pub evidence_mask: Vec<usize>,
    pub distractor_mask: Vec<usize>,
    pub scenario: Scenario,
    pub seed: u64,
}

/// Noise scale applied on top of the planted base directions.
const PLANT_NOISE: f64 = 0.3;
/// Candidates tried when aligning an evidence base with a cue.
const ALIGN_CANDIDATES: usize = 64;
/// Candidates tried for the distractor base: salient, but reliably weaker
/// than the evidence alignment.
const DISTRACTOR_CANDIDATES: usize = 16;
/// Rejection threshold for drawing a direction unaligned with another.
const UNALIGNED_COS: f64 = 0.2;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Hyperparameters of the internal alignment bank: defaults with the
/// non-zero counts clamped so any positive dimensions work.
fn alignment_hp(dim_v: usize, dim_t: usize) -> HyperParams {
    let mut hp = HyperParams::default();
    hp.nonzeros_visual = hp.nonzeros_visual.min(dim_v);
    hp.nonzeros_text = hp.nonzeros_text.min(dim_t);
    hp
}

/// Gated response of a single candidate token to a cue.
fn cue_response(bank: &SensingBank, hp: &HyperParams, v: &[f64], c: &[f64]) -> f64 {
    let gate = sensing::gate_heads(bank, c, hp).expect("gate on validated bank");
    gate.heads
        .iter()
        .zip(&gate.weights)
        .map(|(&h, &w)| w * sensing::head_response(bank, v, c, h).expect("head in range"))
        .sum()
}

/// Best of 64 random unit candidates by gated response to `cue`.
fn aligned_base(
    rng: &mut Rng,
    bank: &SensingBank,
    hp: &HyperParams,
    dim_v: usize,
    cue: &[f64],
) -> Vec<f64> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..ALIGN_CANDIDATES {
        let cand = rng.unit_vec(dim_v);
        let score = cue_response(bank, hp, &cand, cue);
        if best.as_ref().map_or(true, |&(_, b)| score > b) {
            best = Some((cand, score));
        }
    }
    best.unwrap().0
}

fn unaligned_direction(rng: &mut Rng, reference: &[f64], dim: usize) -> Vec<f64> {
    loop {
        let cand = rng.unit_vec(dim);
        if cosine(reference, &cand).abs() < UNALIGNED_COS {
            return cand;
        }
    }
}

/// Distractor base: cue-responsive like the evidence base (best of 64
/// candidates) but constrained to be visually unaligned with it, so the
/// region reads as a tempting yet wrong salient object.
fn distractor_base(
    rng: &mut Rng,
    bank: &SensingBank,
    hp: &HyperParams,
    dim_v: usize,
    cue: &[f64],
    avoid: &[f64],
) -> Vec<f64> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut found = 0;
    while found < DISTRACTOR_CANDIDATES {
        let cand = rng.unit_vec(dim_v);
        if cosine(avoid, &cand).abs() >= UNALIGNED_COS {
            continue;
        }
        found += 1;
        let score = cue_response(bank, hp, &cand, cue);
        if best.as_ref().map_or(true, |&(_, b)| score > b) {
            best = Some((cand, score));
        }
    }
    best.unwrap().0
}

fn rect_indices(r0: usize, c0: usize, height: usize, width: usize, cols: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(height * width);
    for r in r0..r0 + height {
        for c in c0..c0 + width {
            out.push(r * cols + c);
        }
    }
    out
}

/// Random anchor for a `height x width` rectangle inside
/// `[r_lo, r_hi] x [c_lo, c_hi]` (inclusive anchor bounds).
fn anchor(rng: &mut Rng, r_lo: usize, r_hi: usize, c_lo: usize, c_hi: usize) -> (usize, usize) {
    let r = r_lo + rng.below((r_hi - r_lo + 1) as u64) as usize;
    let c = c_lo + rng.below((c_hi - c_lo + 1) as u64) as usize;
    (r, c)
}

/// Random even coordinate in [0, max_inclusive].
fn even_anchor(rng: &mut Rng, max_inclusive: usize) -> usize {
    2 * rng.below((max_inclusive / 2 + 1) as u64) as usize
}

/// Generates a deterministic planted-evidence task.
///
/// Evidence tokens are `normalize(base + 0.3 * noise)` around a base
/// direction aligned with the task cue through the sensing bank (best of
/// 64 random candidates); distractor tokens share a weaker cue-tempting
/// direction (best of 16) kept visually unaligned with the evidence base;
/// background tokens are pure normalized noise.
pub fn generate_task(
    scenario: Scenario,
    seed: u64,
    rows: usize,
    cols: usize,
    dim_v: usize,
    dim_t: usize,
) -> Result<SyntheticTask> {
    if rows == 0 || cols == 0 || dim_v == 0 || dim_t == 0 {
        return Err(Error::invalid("task dimensions must be positive"));
    }
    let hp = alignment_hp(dim_v, dim_t);
    let bank = sensing::build_bank(&hp, dim_v, dim_t)?;
    let mut rng = Rng::new(seed);

    // Cue directions in text space.
    let cue_a = rng.unit_vec(dim_t);
    let cue_b = if scenario == Scenario::OptionDiscrimination {
        Some(unaligned_direction(&mut rng, &cue_a, dim_t))
    } else {
        None
    };

    // Visual base directions aligned with the cues.
    let base_a = aligned_base(&mut rng, &bank, &hp, dim_v, &cue_a);
    let base_b = cue_b
        .as_ref()
        .map(|c| aligned_base(&mut rng, &bank, &hp, dim_v, c));

    // Layout. The peripheral scenario keeps its fixed central 3x4
    // distractor; the other scenarios get a dominant distractor square
    // spanning two thirds of each grid side, anchored first, with the
    // evidence blobs fitted into the remaining strip. Square evidence
    // blobs land on even coordinates, matching how patch embeddings tile
    // an image; thin line blobs anchor freely and may straddle patches.
    let layout_error = || {
        Error::invalid(format!(
            "grid {rows}x{cols} too small for the {scenario} layout"
        ))
    };
    let mut evidence_blobs: Vec<(Vec<usize>, &Vec<f64>)> = Vec::new();
    let distractor_mask: Vec<usize>;
    if scenario == Scenario::PeripheralSmall {
        if rows < 4 || cols < 4 {
            return Err(layout_error());
        }
        let side = rng.below(4);
        let blob = match side {
            0 => {
                let r = rng.below(2) as usize;
                let c0 = even_anchor(&mut rng, cols - 2);
                rect_indices(r, c0, 1, 2, cols)
            }
            1 => {
                let r = rows - 2 + rng.below(2) as usize;
                let c0 = even_anchor(&mut rng, cols - 2);
                rect_indices(r, c0, 1, 2, cols)
            }
            2 => {
                let c = rng.below(2) as usize;
                let r0 = even_anchor(&mut rng, rows - 2);
                rect_indices(r0, c, 2, 1, cols)
            }
            _ => {
                let c = cols - 2 + rng.below(2) as usize;
                let r0 = even_anchor(&mut rng, rows - 2);
                rect_indices(r0, c, 2, 1, cols)
            }
        };
        let central = rect_indices((rows - 3) / 2, (cols - 4) / 2, 3, 4, cols);
        if central.iter().any(|i| blob.contains(i)) {
            return Err(layout_error());
        }
        evidence_blobs.push((blob, &base_a));
        distractor_mask = central;
    } else {
        let height = (rows * 2 / 3).max(1);
        let width = (cols * 2 / 3).max(1);
        if rows < 3 || cols < 6 {
            return Err(layout_error());
        }
        let (dr, dc) = anchor(&mut rng, 0, rows - height, 0, cols - width);
        let distractor = rect_indices(dr, dc, height, width, cols);
        let min_sep = rows.min(cols) / 2;
        let disjoint = |blob: &[usize], other: &[usize]| blob.iter().all(|i| !other.contains(i));
        let center = |blob: &[usize]| {
            let (mut r, mut c) = (0.0, 0.0);
            for &i in blob {
                r += (i / cols) as f64;
                c += (i % cols) as f64;
            }
            (r / blob.len() as f64, c / blob.len() as f64)
        };
        let far_apart = |a: &[usize], b: &[usize]| {
            let (ra, ca) = center(a);
            let (rb, cb) = center(b);
            (ra - rb).abs().max((ca - cb).abs()) >= min_sep as f64
        };
        match scenario {
            Scenario::SingleRegion => {
                // One thin 1x8 line, free-anchored: it straddles patch
                // windows and routinely hides behind the dominant object.
                if cols < 8 {
                    return Err(layout_error());
                }
                let mut evidence = None;
                for _ in 0..1000 {
                    let (r0, c0) = anchor(&mut rng, 0, rows - 1, 0, cols - 8);
                    let blob = rect_indices(r0, c0, 1, 8, cols);
                    if disjoint(&blob, &distractor) {
                        evidence = Some(blob);
                        break;
                    }
                }
                evidence_blobs.push((evidence.ok_or_else(layout_error)?, &base_a));
            }
            Scenario::Distributed | Scenario::OptionDiscrimination => {
                // Two compact patch-aligned squares, far apart.
                let mut pair = None;
                for _ in 0..2000 {
                    let r0 = even_anchor(&mut rng, rows - 2);
                    let c0 = even_anchor(&mut rng, cols - 2);
                    let first = rect_indices(r0, c0, 2, 2, cols);
                    if !disjoint(&first, &distractor) {
                        continue;
                    }
                    let r1 = even_anchor(&mut rng, rows - 2);
                    let c1 = even_anchor(&mut rng, cols - 2);
                    let second = rect_indices(r1, c1, 2, 2, cols);
                    if disjoint(&second, &distractor)
                        && disjoint(&second, &first)
                        && far_apart(&first, &second)
                    {
                        pair = Some((first, second));
                        break;
                    }
                }
                let (first, second) = pair.ok_or_else(layout_error)?;
                evidence_blobs.push((first, &base_a));
                let second_base = match scenario {
                    Scenario::OptionDiscrimination => base_b.as_ref().unwrap(),
                    _ => &base_a,
                };
                evidence_blobs.push((second, second_base));
            }
            _ => unreachable!(),
        }
        distractor_mask = distractor;
    }

    let mut evidence_mask: Vec<usize> = evidence_blobs
        .iter()
        .flat_map(|(blob, _)| blob.iter().cloned())
        .collect();
    evidence_mask.sort_unstable();

    // Distractor base: cue-tempting but visually unlike the evidence.
    let global_dir: Vec<f64> = match &cue_b {
        None => cue_a.clone(),
        Some(cue_b) => {
            let mut v: Vec<f64> = cue_a.iter().zip(cue_b).map(|(a, b)| a + b).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        }
    };
    let distractor_dir = distractor_base(&mut rng, &bank, &hp, dim_v, &global_dir, &base_a);

    // Fill tokens in index order.
    let n = rows * cols;
    let mut class: Vec<Option<&Vec<f64>>> = vec![None; n];
    for (blob, base) in &evidence_blobs {
        for &i in blob {
            class[i] = Some(base);
        }
    }
    for &i in &distractor_mask {
        class[i] = Some(&distractor_dir);
    }
    let mut data = Vec::with_capacity(n * dim_v);
    for token_class in class.iter() {
        match token_class {
            Some(base) => {
                let noise = rng.gaussian_vec(dim_v);
                let mut v: Vec<f64> = base
                    .iter()
                    .zip(&noise)
                    .map(|(b, n)| b + PLANT_NOISE * n)
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= norm);
                data.extend_from_slice(&v);
            }
            None => {
                data.extend_from_slice(&rng.unit_vec(dim_v));
            }
        }
    }
    let grid = TokenGrid::new(rows, cols, dim_v, data)?;

    let cues = match cue_b {
        None => CueSet::new(vec![Cue::new(CueKind::Global, cue_a, "planted")?], vec![])?,
        Some(cue_b) => {
            let global: Vec<f64> = cue_a.iter().zip(&cue_b).map(|(a, b)| a + b).collect();
            CueSet::new(
                vec![Cue::new(CueKind::Global, global, "planted")?],
                vec![
                    Cue::new(CueKind::Option, cue_a, "A")?,
                    Cue::new(CueKind::Option, cue_b, "B")?,
                ],
            )?
        }
    };

    Ok(SyntheticTask {
        grid,
        cues,
        evidence_mask,
        distractor_mask,
        scenario,
        seed,
    })
}

/// One evaluation: which tokens a method kept and how well that covers the
/// planted evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub method: PrunerKind,
    pub scenario: Scenario,
    pub rho: f64,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub evidence_recall: f64,
    pub distractor_rate: f64,
    pub spatial_coverage: f64,
    /// Wall-clock selection time. Excluded from serialized reports so
    /// repeated runs stay byte-identical.
    #[serde(skip)]
    pub runtime_ns: u128,
}

/// Runs one selector on one task and scores the selection. The cue
/// ablation switches in `hp` are applied to the task's cues first.
pub fn evaluate(
    task: &SyntheticTask,
    method: PrunerKind,
    hp: &HyperParams,
    rho: f64,
) -> Result<MetricRow> {
    let cues = crate::cues::apply_cue_ablations(&task.cues, hp)?;
    let bank = sensing::build_bank(hp, task.grid.dim_v(), cues.dim_t())?;
    let n = task.grid.len();
    let budget = Budget::new(rho, n)?;
    let start = Instant::now();
    let selected = method.select(&task.grid, &cues, &bank, hp, budget)?;
    let runtime_ns = start.elapsed().as_nanos();

    let mut selected_mask = vec![false; n];
    for &i in &selected {
        selected_mask[i] = true;
    }
    let hits = task
        .evidence_mask
        .iter()
        .filter(|&&i| selected_mask[i])
        .count();
    let evidence_recall = hits as f64 / task.evidence_mask.len() as f64;
    let distractor_hits = task
        .distractor_mask
        .iter()
        .filter(|&&i| selected_mask[i])
        .count();
    let distractor_rate = distractor_hits as f64 / budget.k as f64;

    let cols = task.grid.cols();
    let rows = task.grid.rows();
    let covered = task
        .evidence_mask
        .iter()
        .filter(|&&e| {
            let (r, c) = (e / cols, e % cols);
            let r_lo = r.saturating_sub(1);
            let r_hi = (r + 1).min(rows - 1);
            let c_lo = c.saturating_sub(1);
            let c_hi = (c + 1).min(cols - 1);
            (r_lo..=r_hi).any(|nr| (c_lo..=c_hi).any(|nc| selected_mask[nr * cols + nc]))
        })
        .count();
    let spatial_coverage = covered as f64 / task.evidence_mask.len() as f64;

    Ok(MetricRow {
        method,
        scenario: task.scenario,
        rho,
        seed: task.seed,
        n,
        k: budget.k,
        evidence_recall,
        distractor_rate,
        spatial_coverage,
        runtime_ns,
    })
}

/// Measured (retention, accuracy) points for one model and method.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionCurve {
    pub model: String,
    pub method: String,
    points: Vec<(f64, f64)>,
}

impl RetentionCurve {
    /// Points are sorted by retention; retention values must be distinct,
    /// lie in (0, 1], and include the full-token point at 1.0.
    pub fn new(
        model: impl Into<String>,
        method: impl Into<String>,
        mut points: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("retention curve has no points"));
        }
        if points
            .iter()
            .any(|&(r, a)| !(r > 0.0 && r <= 1.0) || !a.is_finite())
        {
            return Err(Error::invalid(
                "retention points must lie in (0, 1] with finite accuracy",
            ));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("retention values must be distinct"));
        }
        if points.last().unwrap().0 != 1.0 {
            return Err(Error::invalid(
                "retention curve must include the point at 1.0",
            ));
        }
        Ok(RetentionCurve {
            model: model.into(),
            method: method.into(),
            points,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn full_accuracy(&self) -> f64 {
        self.points.last().unwrap().1
    }
}

/// Minimum retention (in percent, 0-100) at which the piecewise-linear
/// interpolant of the curve reaches `tau` times the full-token accuracy.
/// When even the lowest measured point meets the target, that point is
/// returned unchanged; no extrapolation below it is attempted.
pub fn token_demand(curve: &RetentionCurve, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::invalid(format!(
            "fidelity target {tau} outside (0, 1]"
        )));
    }
    let target = tau * curve.full_accuracy();
    let points = curve.points();
    if points[0].1 >= target {
        return Ok(points[0].0 * 100.0);
    }
    for pair in points.windows(2) {
        let (r0, a0) = pair[0];
        let (r1, a1) = pair[1];
        if a1 >= target {
            let t = (target - a0) / (a1 - a0);
            return Ok((r0 + t * (r1 - r0)) * 100.0);
        }
    }
    Ok(100.0)
}

/// P[X <= k] for X ~ Binomial(n, 1/2), via exact big-integer sums.
fn binomial_tail_le(k: u64, n: u64) -> f64 {
    let mut sum = BigUint::zero();
    let mut coeff = BigUint::one();
    for i in 0..=k {
        if i > 0 {
            coeff = coeff * BigUint::from(n - i + 1) / BigUint::from(i);
        }
        sum += &coeff;
    }
    // sum / 2^n with a 64-bit mantissa.
    if sum.is_zero() {
        return 0.0;
    }
    let shift = sum.bits().saturating_sub(64);
    let mant = (sum >> shift).to_u64().expect("mantissa fits after shift") as f64;
    let exp = shift as i64 - n as i64;
    if exp < -1100 {
        return 0.0;
    }
    mant * 2f64.powi(exp as i32)
}

/// Exact two-sided binomial sign test at p0 = 1/2.
pub fn sign_test(wins: u64, trials: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("sign test needs at least one trial"));
    }
    if wins > trials {
        return Err(Error::invalid(format!(
            "wins {wins} exceed trials {trials}"
        )));
    }
    let lower = binomial_tail_le(wins, trials);
    let upper = binomial_tail_le(trials - wins, trials); // P[X >= wins] by symmetry
    Ok((2.0 * lower.min(upper)).min(1.0))
}

/// Battery configuration; also the schema of the bench config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    pub rows: usize,
    pub cols: usize,
    pub dim_v: usize,
    pub dim_t: usize,
    pub scenarios: Vec<Scenario>,
    pub seed_base: u64,
    pub seed_count: u64,
    pub ratios: Vec<f64>,
    pub methods: Vec<PrunerKind>,
    pub params: HyperParams,
    pub sweeps: bool,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            rows: 24,
            cols: 24,
            dim_v: 11,
            dim_t: 32,
            scenarios: Scenario::ALL.to_vec(),
            seed_base: 0,
            seed_count: 100,
            ratios: vec![0.2, 0.4, 0.6],
            methods: PrunerKind::ALL.to_vec(),
            // Visual non-zeros clamped to the desk-scale token dimension.
            params: HyperParams {
                nonzeros_visual: 11,
                ..HyperParams::default()
            },
            sweeps: false,
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.scenarios.is_empty() || self.ratios.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid(
                "battery needs scenarios, ratios, and methods",
            ));
        }
        if self.seed_count == 0 {
            return Err(Error::invalid("battery needs at least one seed"));
        }
        if self.ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::invalid("battery ratios must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// All rows of one battery run, sorted by (method, scenario, rho, seed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn mean_recall(&self, method: PrunerKind, scenario: Scenario, rho: f64) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.scenario == scenario && r.rho == rho)
            .map(|r| r.evidence_recall)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }

    pub fn mean_recall_overall(&self, method: PrunerKind) -> Option<f64> {
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.evidence_recall)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    }
}

/// Runs the battery for the configured grid, evaluating every method and
/// ratio on each generated task. Tasks are generated once per (scenario,
/// seed); rows are sorted so the report does not depend on scheduling.
pub fn run_battery(config: &BatteryConfig) -> Result<MetricReport> {
    config.validate()?;
    let pairs: Vec<(Scenario, u64)> = config
        .scenarios
        .iter()
        .flat_map(|&s| (0..config.seed_count).map(move |i| (s, config.seed_base + i)))
        .collect();
    let results: Vec<Result<Vec<MetricRow>>> = pairs
        .par_iter()
        .map(|&(scenario, seed)| {
            let task = generate_task(
                scenario,
                seed,
                config.rows,
                config.cols,
                config.dim_v,
                config.dim_t,
            )?;
            let mut rows = Vec::with_capacity(config.methods.len() * config.ratios.len());
            for &method in &config.methods {
                for &rho in &config.ratios {
                    rows.push(evaluate(&task, method, &config.params, rho)?);
                }
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for result in results {
        rows.extend(result?);
    }
    rows.sort_by(|a, b| {
        a.method
            .name()
            .cmp(b.method.name())
            .then(a.scenario.name().cmp(b.scenario.name()))
            .then(a.rho.partial_cmp(&b.rho).unwrap())
            .then(a.seed.cmp(&b.seed))
    });
    Ok(MetricReport { rows })
}

/// Aggregated view of a report: means per (method, scenario, rho).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: PrunerKind,
    pub scenario: Scenario,
    pub rho: f64,
    pub tasks: usize,
    pub mean_recall: f64,
    pub mean_distractor_rate: f64,
    pub mean_coverage: f64,
}

pub fn summarize(report: &MetricReport) -> Vec<SummaryRow> {
    let mut keys: Vec<(PrunerKind, Scenario, f64)> = report
        .rows
        .iter()
        .map(|r| (r.method, r.scenario, r.rho))
        .collect();
    keys.sort_by(|a, b| {
        a.0.name()
            .cmp(b.0.name())
            .then(a.1.name().cmp(b.1.name()))
            .then(a.2.partial_cmp(&b.2).unwrap())
    });
    keys.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && a.2 == b.2);
    keys.into_iter()
        .map(|(method, scenario, rho)| {
            let rows: Vec<&MetricRow> = report
                .rows
                .iter()
                .filter(|r| r.method == method && r.scenario == scenario && r.rho == rho)
                .collect();
            let count = rows.len() as f64;
            SummaryRow {
                method,
                scenario,
                rho,
                tasks: rows.len(),
                mean_recall: rows.iter().map(|r| r.evidence_recall).sum::<f64>() / count,
                mean_distractor_rate: rows.iter().map(|r| r.distractor_rate).sum::<f64>() / count,
                mean_coverage: rows.iter().map(|r| r.spatial_coverage).sum::<f64>() / count,
            }
        })
        .collect()
}

/// One row of the single-group stability sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub group: String,
    pub setting: String,
    pub mean_recall: f64,
    pub delta: f64,
}

/// Single-group parameter variations evaluated with the staged router
/// only: head count, window size, rescue fraction, and bank seed, each
/// varied alone against the config's defaults.
pub fn run_sweeps(config: &BatteryConfig) -> Result<Vec<SweepRow>> {
    let f3a_only = |params: HyperParams| BatteryConfig {
        methods: vec![PrunerKind::F3a],
        params,
        sweeps: false,
        ..config.clone()
    };
    let base_report = run_battery(&f3a_only(config.params.clone()))?;
    let base_mean = base_report
        .mean_recall_overall(PrunerKind::F3a)
        .expect("battery produced rows");

    let mut rows = vec![SweepRow {
        group: "default".into(),
        setting: "default".into(),
        mean_recall: base_mean,
        delta: 0.0,
    }];
    let variants: Vec<(&str, String, HyperParams)> = vec![
        (
            "heads",
            "8".into(),
            HyperParams {
                heads: 8,
                ..config.params.clone()
            },
        ),
        (
            "heads",
            "32".into(),
            HyperParams {
                heads: 32,
                ..config.params.clone()
            },
        ),
        (
            "window",
            "1".into(),
            HyperParams {
                window: 1,
                ..config.params.clone()
            },
        ),
        (
            "window",
            "3".into(),
            HyperParams {
                window: 3,
                ..config.params.clone()
            },
        ),
        (
            "jump_fraction",
            "0.10".into(),
            HyperParams {
                jump_fraction: 0.10,
                ..config.params.clone()
            },
        ),
        (
            "jump_fraction",
            "0.20".into(),
            HyperParams {
                jump_fraction: 0.20,
                ..config.params.clone()
            },
        ),
        (
            "seed",
            "7".into(),
            HyperParams {
                seed: 7,
                ..config.params.clone()
            },
        ),
        (
            "seed",
            "123".into(),
            HyperParams {
                seed: 123,
                ..config.params.clone()
            },
        ),
    ];
    for (group, setting, params) in variants {
        let mean = if params == config.params {
            base_mean
        } else {
            run_battery(&f3a_only(params))?
                .mean_recall_overall(PrunerKind::F3a)
                .expect("battery produced rows")
        };
        rows.push(SweepRow {
            group: group.into(),
            setting,
            mean_recall: mean,
            delta: mean - base_mean,
        });
    }
    Ok(rows)
}
