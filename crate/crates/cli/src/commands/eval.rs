use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context};
use hipe_core::metrics::{deletion_curve, insertion_curve, pointing_game, MetricCurve};
use hipe_core::oracle::ScoringOracle;
use hipe_core::synthetic::random_map;
use hipe_core::tensor::{load_array, load_input};
use hipe_core::{ImageTensor, ScalarField2D};

use crate::args::{EvalArgs, Metric};
use crate::config::RunConfig;
use crate::oracles::open_oracle;
use crate::report::{write_json, CurveReport, PointingReport, RandomBaseline};

fn load_field(path: &Path, what: &str) -> anyhow::Result<ScalarField2D> {
    load_array(path)
        .and_then(|a| a.into_field())
        .with_context(|| format!("loading {what} {}", path.display()))
}

pub fn run(args: &EvalArgs) -> anyhow::Result<ExitCode> {
    let map = load_field(&args.map, "map")?;
    match args.metric {
        Metric::Pointing => pointing(args, &map),
        Metric::Insertion | Metric::Deletion => curve(args, &map),
    }
}

fn pointing(args: &EvalArgs, map: &ScalarField2D) -> anyhow::Result<ExitCode> {
    let region_path = args.region.as_deref().context("pointing needs --region <mask.hfa>")?;
    let region = load_field(region_path, "region")?;
    let hit = pointing_game(map, &region, args.tolerance)?;
    let (i, j) = map.argmax();
    if let Some(path) = &args.report {
        let report = PointingReport {
            command: "eval",
            metric: "pointing",
            map: args.map.display().to_string(),
            region: region_path.display().to_string(),
            tolerance_px: args.tolerance,
            argmax: [i, j],
            hit,
        };
        write_json(&report, path)?;
    }
    println!("pointing: {} (argmax at row {i}, col {j})", if hit { "hit" } else { "miss" });
    Ok(ExitCode::SUCCESS)
}

fn score_curve(
    metric: Metric,
    x: &ImageTensor,
    map: &ScalarField2D,
    oracle: &mut (impl ScoringOracle + ?Sized),
    args: &EvalArgs,
) -> hipe_core::Result<MetricCurve> {
    match metric {
        Metric::Insertion => insertion_curve(x, map, oracle, args.step_frac, args.blur_sigma),
        _ => deletion_curve(x, map, oracle, args.step_frac),
    }
}

fn curve(args: &EvalArgs, map: &ScalarField2D) -> anyhow::Result<ExitCode> {
    if !(args.step_frac > 0.0 && args.step_frac <= 1.0) {
        bail!("--step-frac must lie in (0, 1], got {}", args.step_frac);
    }
    let input = args.input.as_deref().context("insertion and deletion need --input")?;
    let x = load_input(input).with_context(|| format!("loading input {}", input.display()))?;
    let (_, h, w) = x.shape();
    if map.dims() != (h, w) {
        return Err(
            hipe_core::Error::Dimension(format!("map is {:?} but input is {h}x{w}", map.dims())).into()
        );
    }
    let mut cfg = RunConfig::default();
    args.oracle.apply(&mut cfg);
    let spec = cfg.oracle_spec()?;
    let mut oracle = open_oracle(spec, h, w, cfg.oracle_workers, cfg.target, cfg.timeout()?)?;

    let before = oracle.call_count();
    let curve = score_curve(args.metric, &x, map, &mut oracle, args)?;
    let calls = oracle.call_count() - before;

    let random_baseline = if args.random_baselines > 0 {
        let (mut auc, mut norm) = (0.0, 0.0);
        for k in 0..args.random_baselines {
            let m = random_map(args.seed.wrapping_add(k as u64), h, w);
            let c = score_curve(args.metric, &x, &m, &mut oracle, args)?;
            auc += c.auc;
            norm += c.normalized_auc();
        }
        let n = args.random_baselines as f64;
        Some(RandomBaseline {
            maps: args.random_baselines,
            seed: args.seed,
            mean_auc: auc / n,
            mean_normalized_auc: norm / n,
        })
    } else {
        None
    };

    if let Some(path) = &args.out_csv {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        curve.write_csv(BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
    }
    let name = args.metric.name();
    if let Some(path) = &args.report {
        let report = CurveReport {
            command: "eval",
            metric: name,
            map: args.map.display().to_string(),
            input: input.display().to_string(),
            oracle: spec.to_string(),
            step_frac: args.step_frac,
            points: curve.points.len(),
            auc: curve.auc,
            normalized_auc: curve.normalized_auc(),
            oracle_calls: calls,
            random_baseline,
        };
        write_json(&report, path)?;
    }
    println!("{name}: auc {:.6}, normalized {:.6}", curve.auc, curve.normalized_auc());
    Ok(ExitCode::SUCCESS)
}
