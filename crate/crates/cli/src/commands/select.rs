use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use f3a_core::baselines::PrunerKind;
use f3a_core::io::f3t::F3tContainer;
use f3a_core::io::image::{write_pgm, write_ppm};
use f3a_core::io::instance::InstanceDescriptor;
use f3a_core::model::{Budget, StageSizes, TokenGrid};
use f3a_core::{build_bank, build_cues, odor_field, search, EmbeddingProvider};

use super::{read_input, write_output, CliError};

#[derive(Args)]
pub struct SelectArgs {
    /// Instance descriptor JSON.
    #[arg(long)]
    instance: PathBuf,
    /// Tensor container holding the grid named by the instance.
    #[arg(long)]
    tensors: PathBuf,
    /// Selection method; overrides the instance's choice.
    #[arg(long)]
    method: Option<String>,
    /// Embedding dimension for the built-in hash embedder.
    #[arg(long, default_value_t = 64)]
    embed_dim: usize,
    /// Tensor container with precomputed text embeddings keyed by text.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Write the selection JSON here as well as to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write the full selection trace JSON here (staged method only).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write BASE.pgm (odor field) and BASE.ppm (selection overlay).
    #[arg(long, value_name = "BASE")]
    heatmap: Option<PathBuf>,
}

#[derive(Serialize)]
struct Selection {
    indices: Vec<usize>,
    coords: Vec<(usize, usize)>,
    #[serde(rename = "K")]
    k: usize,
    stage_sizes: StageSizes,
}

pub fn run(args: SelectArgs) -> Result<(), CliError> {
    let instance = InstanceDescriptor::from_json(&read_input(&args.instance)?)?;
    let container = F3tContainer::read_file(&args.tensors).map_err(CliError::from)?;
    let entry = container.get(&instance.grid.tensor_key).ok_or_else(|| {
        CliError::input(format!(
            "tensor container has no entry {:?}",
            instance.grid.tensor_key
        ))
    })?;
    if entry.dims.len() != 3
        || entry.dims[0] as usize != instance.grid.rows
        || entry.dims[1] as usize != instance.grid.cols
    {
        return Err(CliError::input(format!(
            "tensor {:?} must have shape [rows, cols, dim]; instance says {}x{}, file says {:?}",
            instance.grid.tensor_key, instance.grid.rows, instance.grid.cols, entry.dims
        )));
    }
    let dim_v = entry.dims[2] as usize;
    let data: Vec<f64> = entry.data.iter().map(|&x| x as f64).collect();
    let grid = TokenGrid::new(instance.grid.rows, instance.grid.cols, dim_v, data)?;

    let provider = match &args.embeddings {
        Some(path) => EmbeddingProvider::from_f3t(path)?,
        None => {
            if args.embed_dim == 0 {
                return Err(CliError::input("--embed-dim must be positive"));
            }
            EmbeddingProvider::desk_hash(args.embed_dim)?
        }
    };
    let hp = instance.hyperparams();
    let prompt = instance.prompt.to_prompt_spec().map_err(CliError::from)?;
    let cues = build_cues(&prompt, &provider, &hp)?;
    let bank = build_bank(&hp, dim_v, provider.dim_t())?;
    let budget = Budget::new(instance.budget.ratio, grid.len())?;

    let method_name = args
        .method
        .or(instance.method)
        .unwrap_or_else(|| "f3a".to_string());
    let method: PrunerKind = method_name
        .parse()
        .map_err(|_| CliError::input(format!("unknown method {method_name:?}")))?;
    if args.trace.is_some() && method != PrunerKind::F3a {
        return Err(CliError::input("--trace is only available with method f3a"));
    }

    let (indices, stage_sizes, trace_json) = if method == PrunerKind::F3a {
        let trace = search::select(&grid, &cues, &bank, &hp, budget)?;
        let stage_sizes = trace.stage_sizes();
        let json = serde_json::to_string(&trace)
            .map_err(|e| CliError::input(format!("trace serialization: {e}")))?;
        (trace.final_indices, stage_sizes, Some(json))
    } else {
        let indices = method.select(&grid, &cues, &bank, &hp, budget)?;
        let stage_sizes = StageSizes {
            coarse_pool: 0,
            scaffold: 0,
            locked_pool: 0,
            locked: 0,
            rescue: 0,
        };
        (indices, stage_sizes, None)
    };

    let coords: Vec<(usize, usize)> = indices
        .iter()
        .map(|&i| (i / grid.cols(), i % grid.cols()))
        .collect();
    let selection = Selection {
        indices,
        coords,
        k: budget.k,
        stage_sizes,
    };
    let selection_json = serde_json::to_string(&selection)
        .map_err(|e| CliError::input(format!("selection serialization: {e}")))?;
    println!("{selection_json}");
    if let Some(path) = &args.output {
        write_output(path, &selection_json)?;
    }
    if let (Some(path), Some(json)) = (&args.trace, &trace_json) {
        write_output(path, json)?;
    }
    if let Some(base) = &args.heatmap {
        let field = odor_field(&bank, &grid, &cues, &hp)?;
        let pgm = base.with_extension("pgm");
        let ppm = base.with_extension("ppm");
        write_pgm(&pgm, grid.cols(), grid.rows(), &field.a)?;
        write_ppm(&ppm, grid.cols(), grid.rows(), &field.a, &selection.indices)?;
    }
    Ok(())
}
