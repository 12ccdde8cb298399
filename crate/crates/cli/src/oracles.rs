use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, ensure, Context};
use hipe_core::oracle::{
    ConstantOracle, ExternalProcessOracle, MultiClassProxy, OracleEndpoint, OraclePool, ScoringOracle,
    WeightedSumProxy,
};
use hipe_core::tensor::load_array;

pub type BoxedOracle = Box<dyn ScoringOracle + Send>;

/// Marks an external oracle that could not be reached, so it exits like any
/// other oracle failure.
#[derive(Debug)]
pub struct OracleUnreachable(pub String);

impl fmt::Display for OracleUnreachable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot reach oracle {}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    Sum,
    Weighted(PathBuf),
    MultiClass(PathBuf, Option<usize>),
    Const(f64),
    Exec(String),
    Tcp(String),
}

impl FromStr for OracleSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (scheme, rest) = s.split_once(':').unwrap_or((s, ""));
        let spec = match scheme {
            "exec" if !rest.trim().is_empty() => OracleSpec::Exec(rest.to_string()),
            "tcp" if !rest.is_empty() => OracleSpec::Tcp(rest.to_string()),
            "proxy" => {
                let (name, arg) = rest.split_once(':').unwrap_or((rest, ""));
                match (name, arg) {
                    ("sum", "") => OracleSpec::Sum,
                    ("weighted", p) if !p.is_empty() => OracleSpec::Weighted(p.into()),
                    ("multiclass", p) if !p.is_empty() => match p.rsplit_once(':') {
                        Some((path, class)) if class.parse::<usize>().is_ok() => {
                            OracleSpec::MultiClass(path.into(), class.parse().ok())
                        }
                        _ => OracleSpec::MultiClass(p.into(), None),
                    },
                    ("const", v) => OracleSpec::Const(
                        v.parse().with_context(|| format!("bad constant in oracle spec {s:?}"))?,
                    ),
                    _ => bail!("unknown proxy oracle {s:?}"),
                }
            }
            _ => bail!(
                "bad oracle spec {s:?}; expected proxy:sum, proxy:weighted:<hfa>, \
                 proxy:multiclass:<hfa>[:class], proxy:const:<v>, exec:<command> or tcp:<addr>"
            ),
        };
        Ok(spec)
    }
}

impl OracleSpec {
    pub fn is_external(&self) -> bool {
        matches!(self, OracleSpec::Exec(_) | OracleSpec::Tcp(_))
    }

    /// Builds one in-process proxy for inputs of height `h` and width `w`.
    pub fn build_proxy(&self, h: usize, w: usize) -> anyhow::Result<BoxedOracle> {
        Ok(match self {
            OracleSpec::Sum => Box::new(WeightedSumProxy::uniform(h, w)),
            OracleSpec::Weighted(path) => {
                let weights = load_array(path)
                    .and_then(|a| a.into_field())
                    .with_context(|| format!("loading weights {}", path.display()))?;
                Box::new(WeightedSumProxy::new(weights))
            }
            OracleSpec::MultiClass(path, class) => {
                let heads = load_array(path)
                    .with_context(|| format!("loading class weights {}", path.display()))?
                    .into_tensor();
                Box::new(MultiClassProxy::from_tensor(&heads, class.unwrap_or(0))?)
            }
            OracleSpec::Const(v) => Box::new(ConstantOracle::new(*v)),
            OracleSpec::Exec(_) | OracleSpec::Tcp(_) => bail!("{self:?} is not an in-process proxy"),
        })
    }

    fn connect(&self, timeout: Duration) -> anyhow::Result<BoxedOracle> {
        let endpoint = match self {
            OracleSpec::Exec(cmd) => OracleEndpoint::Exec(cmd.clone()),
            OracleSpec::Tcp(addr) => OracleEndpoint::Tcp(addr.clone()),
            _ => bail!("{self:?} is not an external oracle"),
        };
        let oracle = ExternalProcessOracle::open(&endpoint, timeout)
            .map_err(|e| anyhow::Error::new(e).context(OracleUnreachable(format!("{endpoint:?}"))))?;
        Ok(Box::new(oracle))
    }
}

/// Opens `workers` connections (or proxy copies) behind one oracle and
/// selects `target` on all of them.
pub fn open_oracle(
    spec: &str,
    h: usize,
    w: usize,
    workers: usize,
    target: Option<usize>,
    timeout: Duration,
) -> anyhow::Result<BoxedOracle> {
    ensure!(workers >= 1, "--oracle-workers must be at least 1");
    let spec: OracleSpec = spec.parse()?;
    let mut pool = Vec::with_capacity(workers);
    for _ in 0..workers {
        pool.push(if spec.is_external() { spec.connect(timeout)? } else { spec.build_proxy(h, w)? });
    }
    let mut oracle: BoxedOracle =
        if workers == 1 { pool.pop().expect("one worker") } else { Box::new(OraclePool::new(pool)?) };
    if let Some(t) = target {
        oracle.set_target(t).with_context(|| format!("selecting target class {t}"))?;
    }
    Ok(oracle)
}
