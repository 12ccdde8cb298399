use std::process::ExitCode;

use anyhow::Context;
use hipe_core::tensor::{load_array, load_input, render_heatmap};

use crate::args::RenderArgs;

pub fn run(args: &RenderArgs) -> anyhow::Result<ExitCode> {
    let map = load_array(&args.map)
        .and_then(|a| a.into_field())
        .with_context(|| format!("loading map {}", args.map.display()))?;
    let overlay = match &args.overlay {
        Some(p) => Some(load_input(p).with_context(|| format!("loading overlay {}", p.display()))?),
        None => None,
    };
    render_heatmap(&map, &args.out, overlay.as_ref())
        .with_context(|| format!("rendering {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}
