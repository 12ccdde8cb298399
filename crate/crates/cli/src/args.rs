use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hipe_core::hipe::ThresholdMode;
use hipe_core::metrics::{DEFAULT_BLUR_SIGMA, DEFAULT_STEP_FRAC};
use hipe_core::substrate::SubstrateKind;

use crate::config::{Method, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "hipe", version, about = "Saliency maps for black-box scoring models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a saliency map for one input.
    Map(MapArgs),
    /// Score a saliency map with a causal metric or the pointing game.
    Eval(EvalArgs),
    /// Compare methods by oracle calls, wall time and causal AUCs.
    Bench(BenchArgs),
    /// Render an HFA map as a PNG heatmap.
    Render(RenderArgs),
    /// Serve a built-in proxy model over the scoring protocol.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// proxy:sum, proxy:weighted:<hfa>, proxy:multiclass:<hfa>[:class],
    /// proxy:const:<v>, exec:<command> or tcp:<host:port>.
    #[arg(long)]
    pub oracle: Option<String>,
    /// Class index forwarded to the oracle before scoring.
    #[arg(long)]
    pub target: Option<usize>,
    /// Number of oracle connections used to score each batch in parallel.
    #[arg(long)]
    pub oracle_workers: Option<usize>,
    /// Seconds to wait for an external oracle reply.
    #[arg(long)]
    pub oracle_timeout: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ThresholdArg {
    MidRange,
    Mean,
    Off,
}

impl From<ThresholdArg> for ThresholdMode {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::MidRange => ThresholdMode::MidRange,
            ThresholdArg::Mean => ThresholdMode::Mean,
            ThresholdArg::Off => ThresholdMode::Off,
        }
    }
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Randomized masking: number of masks.
    #[arg(long)]
    pub n_masks: Option<usize>,
    /// Randomized masking: side of the coarse grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Randomized masking: probability of keeping a grid cell.
    #[arg(long)]
    pub keep_prob: Option<f64>,
    /// Randomized masking: RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Occlusion: kernel side in pixels.
    #[arg(long)]
    pub kernel: Option<usize>,
    /// Occlusion: stride in pixels.
    #[arg(long)]
    pub stride: Option<usize>,
    /// local-mean, zero, blur:<sigma> or noise:<seed>:<amplitude>. Applies to
    /// hipe and occlusion.
    #[arg(long)]
    pub substrate: Option<SubstrateKind>,
    #[arg(long, value_enum)]
    pub threshold: Option<ThresholdArg>,
    /// Keep negative score changes instead of clipping them.
    #[arg(long)]
    pub signed: bool,
    #[arg(long)]
    pub max_levels: Option<usize>,
    /// Inputs per oracle request, for every method.
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// PNG image or HFA tensor.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub params: MethodArgs,
    #[arg(long)]
    pub out_map: Option<PathBuf>,
    #[arg(long)]
    pub out_png: Option<PathBuf>,
    /// Blend the heatmap over the input's luminance.
    #[arg(long)]
    pub overlay: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Insertion,
    Deletion,
    Pointing,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Insertion => "insertion",
            Metric::Deletion => "deletion",
            Metric::Pointing => "pointing",
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(value_enum)]
    pub metric: Metric,
    /// Saliency map (HFA).
    #[arg(long)]
    pub map: PathBuf,
    /// Input the map explains; needed for insertion and deletion.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub oracle: OracleArgs,
    /// Binary annotation mask (HFA) for the pointing game.
    #[arg(long)]
    pub region: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub tolerance: usize,
    #[arg(long, default_value_t = DEFAULT_STEP_FRAC)]
    pub step_frac: f64,
    #[arg(long, default_value_t = DEFAULT_BLUR_SIGMA)]
    pub blur_sigma: f32,
    /// Also score this many uniform random maps as a baseline.
    #[arg(long, default_value_t = 0)]
    pub random_baselines: usize,
    /// Seed for the random baseline maps.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub oracle: OracleArgs,
    #[command(flatten)]
    pub params: MethodArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "hipe,rise,occlusion")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = DEFAULT_STEP_FRAC)]
    pub step_frac: f64,
    #[arg(long, default_value_t = DEFAULT_BLUR_SIGMA)]
    pub blur_sigma: f32,
    /// Skip the insertion/deletion curves.
    #[arg(long)]
    pub skip_metrics: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// PNG or HFA image to blend under the heatmap.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// A proxy:* oracle spec.
    #[arg(long, default_value = "proxy:sum")]
    pub oracle: String,
    /// Accepted input shape, e.g. 3x224x224.
    #[arg(long, value_parser = parse_shape)]
    pub shape: (usize, usize, usize),
    #[arg(long)]
    pub target: Option<usize>,
    /// Listen on this TCP address instead of stdin/stdout.
    #[arg(long)]
    pub listen: Option<String>,
    /// Exit abruptly once this many tensors have been scored.
    #[arg(long, hide = true)]
    pub exit_after: Option<u64>,
}

pub fn parse_shape(s: &str) -> Result<(usize, usize, usize), String> {
    let dims: Vec<usize> = s
        .split('x')
        .map(|p| p.parse::<usize>().map_err(|_| format!("bad shape {s:?}, expected CxHxW")))
        .collect::<Result<_, _>>()?;
    match dims[..] {
        [c, h, w] if c > 0 && h > 0 && w > 0 => Ok((c, h, w)),
        _ => Err(format!("bad shape {s:?}, expected CxHxW with positive dims")),
    }
}

impl OracleArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(o) = &self.oracle {
            cfg.oracle = Some(o.clone());
        }
        if let Some(t) = self.target {
            cfg.target = Some(t);
        }
        if let Some(n) = self.oracle_workers {
            cfg.oracle_workers = n;
        }
        if let Some(t) = self.oracle_timeout {
            cfg.oracle_timeout_secs = t;
        }
    }
}

impl MethodArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let (h, r, o) = (&mut cfg.hipe, &mut cfg.rise, &mut cfg.occlusion);
        if let Some(v) = self.n_masks {
            r.n_masks = v;
        }
        if let Some(v) = self.grid {
            r.grid = v;
        }
        if let Some(v) = self.keep_prob {
            r.keep_prob = v;
        }
        if let Some(v) = self.seed {
            r.seed = v;
        }
        if let Some(v) = self.kernel {
            o.kernel = v;
        }
        if let Some(v) = self.stride {
            o.stride = v;
        }
        if let Some(v) = self.substrate {
            h.substrate = v;
            o.substrate = v;
        }
        if let Some(v) = self.threshold {
            h.threshold_mode = v.into();
        }
        if self.signed {
            h.signed_mode = true;
        }
        if let Some(v) = self.max_levels {
            h.max_levels = Some(v);
        }
        if let Some(v) = self.batch_size {
            h.batch_size = v;
            r.batch_size = v;
            o.batch_size = v;
        }
    }
}

impl MapArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        self.oracle.apply(&mut cfg);
        self.params.apply(&mut cfg);
        for (slot, flag) in [
            (&mut cfg.out_map, &self.out_map),
            (&mut cfg.out_png, &self.out_png),
            (&mut cfg.report, &self.report),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        Ok(cfg)
    }
}

impl BenchArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(p) = &self.input {
            cfg.input = Some(p.clone());
        }
        self.oracle.apply(&mut cfg);
        self.params.apply(&mut cfg);
        if self.report.is_some() {
            cfg.report.clone_from(&self.report);
        }
        Ok(cfg)
    }
}
