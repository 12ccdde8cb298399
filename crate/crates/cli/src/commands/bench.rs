use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context};
use hipe_core::metrics::{deletion_curve, efficiency_report, insertion_curve, MethodCost};
use hipe_core::tensor::load_input;
use log::{info, warn};

use crate::args::BenchArgs;
use crate::config::Method;
use crate::methods::run_method;
use crate::oracles::open_oracle;
use crate::report::{write_json, BenchReport, BenchRow};

fn median_ms(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn failed(method: Method, samples_ms: Vec<f64>, err: impl std::fmt::Display) -> BenchRow {
    BenchRow {
        method: method.name(),
        status: "failed",
        error: Some(err.to_string()),
        calls: None,
        samples_ms,
        wall_time_ms: None,
        ratio: None,
        insertion_auc: None,
        deletion_auc: None,
        insertion_normalized_auc: None,
        deletion_normalized_auc: None,
    }
}

pub fn run(args: &BenchArgs) -> anyhow::Result<ExitCode> {
    ensure!(!args.methods.is_empty(), "bench needs at least one method");
    ensure!(args.repeats >= 1, "--repeats must be at least 1");
    let cfg = args.resolve()?;
    let input = cfg.input()?;
    let spec = cfg.oracle_spec()?;
    let x = load_input(input).with_context(|| format!("loading input {}", input.display()))?;
    let (_, h, w) = x.shape();
    let mut oracle = open_oracle(spec, h, w, cfg.oracle_workers, cfg.target, cfg.timeout()?)?;

    let mut rows = Vec::new();
    for &method in &args.methods {
        let mut samples = Vec::with_capacity(args.repeats);
        let mut first = None;
        let mut error = None;
        for rep in 0..args.repeats {
            let start = Instant::now();
            match run_method(method, &cfg, &x, &mut oracle) {
                Ok(out) => {
                    samples.push(start.elapsed().as_secs_f64() * 1e3);
                    info!("{} repeat {rep}: {} calls", method.name(), out.oracle_calls);
                    first.get_or_insert(out);
                }
                Err(e) => {
                    error = Some(e);
                    break;
                }
            }
        }
        let out = match (error, first) {
            (None, Some(out)) => out,
            (err, _) => {
                let err = err.map(|e| e.to_string()).unwrap_or_else(|| "no run completed".into());
                warn!("{} failed: {err}", method.name());
                rows.push(failed(method, samples, err));
                continue;
            }
        };
        let mut row = BenchRow {
            method: method.name(),
            status: "ok",
            error: None,
            calls: Some(out.oracle_calls),
            wall_time_ms: Some(median_ms(&samples)),
            samples_ms: samples,
            ratio: None,
            insertion_auc: None,
            deletion_auc: None,
            insertion_normalized_auc: None,
            deletion_normalized_auc: None,
        };
        if !args.skip_metrics {
            let curves = insertion_curve(&x, &out.saliency, &mut oracle, args.step_frac, args.blur_sigma)
                .and_then(|ins| Ok((ins, deletion_curve(&x, &out.saliency, &mut oracle, args.step_frac)?)));
            match curves {
                Ok((ins, del)) => {
                    row.insertion_auc = Some(ins.auc);
                    row.deletion_auc = Some(del.auc);
                    row.insertion_normalized_auc = Some(ins.normalized_auc());
                    row.deletion_normalized_auc = Some(del.normalized_auc());
                }
                Err(e) => {
                    warn!("{} metrics failed: {e}", method.name());
                    rows.push(failed(method, row.samples_ms, format!("metrics: {e}")));
                    continue;
                }
            }
        }
        rows.push(row);
    }

    let costs: Vec<MethodCost> = rows
        .iter()
        .filter_map(|r| {
            let ms = r.wall_time_ms?;
            Some(MethodCost::new(r.method, r.calls?, Duration::from_secs_f64(ms / 1e3)))
        })
        .collect();
    let reference = if costs.is_empty() {
        None
    } else {
        let table = efficiency_report(&costs)?;
        for (row, eff) in rows.iter_mut().filter(|r| r.status == "ok").zip(&table.rows) {
            row.ratio = Some(eff.ratio);
        }
        Some(table.reference)
    };

    print_table(&rows, reference.as_deref());
    let any_failed = rows.iter().any(|r| r.status != "ok");
    if let Some(path) = &cfg.report {
        let report = BenchReport {
            command: "bench",
            input: input.display().to_string(),
            oracle: spec.to_string(),
            repeats: args.repeats,
            reference,
            rows,
        };
        write_json(&report, path)?;
    }
    Ok(if any_failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.prec$}"))
}

fn print_table(rows: &[BenchRow], reference: Option<&str>) {
    println!(
        "{:<10} {:>7} {:>9} {:>11} {:>9} {:>9} {:>9}",
        "method", "status", "calls", "median ms", "ratio", "ins auc", "del auc"
    );
    for r in rows {
        println!(
            "{:<10} {:>7} {:>9} {:>11} {:>9} {:>9} {:>9}",
            r.method,
            r.status,
            r.calls.map_or_else(|| "-".into(), |c| c.to_string()),
            opt(r.wall_time_ms, 2),
            r.ratio.map_or_else(|| "-".into(), |v| format!("{v:.2}x")),
            opt(r.insertion_normalized_auc, 3),
            opt(r.deletion_normalized_auc, 3),
        );
        if let Some(e) = &r.error {
            println!("  {}: {e}", r.method);
        }
    }
    if let Some(name) = reference {
        println!("ratios are calls relative to {name}; AUCs are min-max normalized");
    }
}
