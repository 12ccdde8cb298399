use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use hipe_core::tensor::{load_input, render_heatmap, save_array};
use log::{info, warn};

use crate::args::MapArgs;
use crate::methods::run_method;
use crate::oracles::open_oracle;
use crate::report::{write_json, MapReport};

pub fn run(args: &MapArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.resolve()?;
    let input = cfg.input()?;
    let spec = cfg.oracle_spec()?;
    let x = load_input(input).with_context(|| format!("loading input {}", input.display()))?;
    let (c, h, w) = x.shape();
    let mut oracle = open_oracle(spec, h, w, cfg.oracle_workers, cfg.target, cfg.timeout()?)?;
    let calls_before = oracle.call_count();

    let start = Instant::now();
    let out = run_method(cfg.method, &cfg, &x, &mut oracle)?;
    let wall = start.elapsed();

    let counted = oracle.call_count() - calls_before;
    if counted != out.oracle_calls {
        warn!("oracle counted {counted} calls, method reported {}", out.oracle_calls);
    }
    info!("{} finished: {} oracle calls in {wall:.2?}", cfg.method.name(), out.oracle_calls);

    if let Some(path) = &cfg.out_map {
        save_array(out.saliency.clone(), path).with_context(|| format!("writing map {}", path.display()))?;
    }
    if let Some(path) = &cfg.out_png {
        let overlay = args.overlay.then_some(&x);
        render_heatmap(&out.saliency, path, overlay)
            .with_context(|| format!("writing heatmap {}", path.display()))?;
    }
    if let Some(path) = &cfg.report {
        let report = MapReport {
            command: "map",
            method: cfg.method.name(),
            input: input.display().to_string(),
            shape: [c, h, w],
            oracle: spec.to_string(),
            oracle_calls: out.oracle_calls,
            wall_time_ms: wall.as_secs_f64() * 1e3,
            base_score: out.base_score,
            levels: out.levels.as_deref(),
        };
        write_json(&report, path)?;
    }
    println!("{}: {} oracle calls, {:.2} ms", cfg.method.name(), out.oracle_calls, wall.as_secs_f64() * 1e3);
    Ok(ExitCode::SUCCESS)
}
