//! Generator parameter grids, experiment files and instance documents.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use lotsizing::instance::{generate, GeneratorConfig, Substitution};
use lotsizing::Instance;
use serde::{Deserialize, Serialize};

/// Parameter names accepted by `--sweep` and in experiment files.
pub const PARAMS: [&str; 11] = [
    "eta",
    "tau",
    "rho",
    "tbo",
    "alpha",
    "K",
    "T",
    "omega",
    "substitution",
    "seed",
    "pool",
];

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Experiment file (TOML) with keys eta, tau, rho, tbo, alpha, K, T,
    /// omega, substitution, seed, pool. A list value sweeps that key.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base-case parameters (the default; kept for explicit scripts).
    #[arg(long)]
    pub base: bool,
    /// Sweep one parameter, e.g. `tbo=1,1.25,1.5`. Repeat for a product grid.
    #[arg(long, value_name = "KEY=V1,V2,..")]
    pub sweep: Vec<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub tbo: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of products.
    #[arg(short = 'K', long)]
    pub products: Option<usize>,
    /// Look-ahead horizon.
    #[arg(short = 'T', long)]
    pub horizon: Option<usize>,
    /// Scenario count of the chance-constrained policy.
    #[arg(long)]
    pub omega: Option<usize>,
    /// Substitution levels, comma separated (none, partial, full).
    #[arg(long, value_delimiter = ',')]
    pub substitution: Vec<Substitution>,
    /// Seed of the demand noise pool.
    #[arg(long)]
    pub pool_seed: Option<u64>,
    #[arg(long)]
    pub pool_size: Option<usize>,
    /// Accept tau < 1.
    #[arg(long)]
    pub allow_nonstandard: bool,
}

/// A scalar or a list of values in an experiment file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(toml::Value),
    Many(Vec<toml::Value>),
}

fn value_text(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Ordered list of (key, values); later entries override earlier ones.
#[derive(Debug, Clone, Default)]
pub struct Grid {
    axes: Vec<(String, Vec<String>)>,
    pub allow_nonstandard: bool,
}

impl Grid {
    fn set(&mut self, key: &str, values: Vec<String>) -> Result<()> {
        if !PARAMS.contains(&key) {
            bail!("unknown parameter `{key}` (expected one of {})", PARAMS.join(", "));
        }
        if values.is_empty() {
            bail!("parameter `{key}` has no values");
        }
        match self.axes.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = values,
            None => self.axes.push((key.to_string(), values)),
        }
        Ok(())
    }

    pub fn from_args(args: &GridArgs) -> Result<Self> {
        let mut grid = Grid {
            allow_nonstandard: args.allow_nonstandard,
            ..Grid::default()
        };
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let doc: BTreeMap<String, OneOrMany> =
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            for key in PARAMS {
                if let Some(v) = doc.get(key) {
                    let values = match v {
                        OneOrMany::One(v) => vec![value_text(v)],
                        OneOrMany::Many(vs) => vs.iter().map(value_text).collect(),
                    };
                    grid.set(key, values)?;
                }
            }
            if let Some(unknown) = doc.keys().find(|k| !PARAMS.contains(&k.as_str())) {
                bail!("{}: unknown key `{unknown}`", path.display());
            }
        }
        let single = [
            ("eta", args.eta.map(|v| v.to_string())),
            ("tau", args.tau.map(|v| v.to_string())),
            ("rho", args.rho.map(|v| v.to_string())),
            ("tbo", args.tbo.map(|v| v.to_string())),
            ("alpha", args.alpha.map(|v| v.to_string())),
            ("K", args.products.map(|v| v.to_string())),
            ("T", args.horizon.map(|v| v.to_string())),
            ("omega", args.omega.map(|v| v.to_string())),
            ("seed", args.pool_seed.map(|v| v.to_string())),
            ("pool", args.pool_size.map(|v| v.to_string())),
        ];
        for (key, v) in single {
            if let Some(v) = v {
                grid.set(key, vec![v])?;
            }
        }
        if !args.substitution.is_empty() {
            grid.set("substitution", args.substitution.iter().map(|s| s.to_string()).collect())?;
        }
        for sweep in &args.sweep {
            let (key, values) = sweep
                .split_once('=')
                .with_context(|| format!("sweep `{sweep}` is not KEY=V1,V2,.."))?;
            grid.set(key.trim(), values.split(',').map(|v| v.trim().to_string()).collect())?;
        }
        Ok(grid)
    }

    /// All configurations of the grid, the first axis varying slowest.
    pub fn configs(&self) -> Result<Vec<GeneratorConfig>> {
        let mut out = vec![GeneratorConfig {
            allow_nonstandard: self.allow_nonstandard,
            ..GeneratorConfig::default()
        }];
        for (key, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for cfg in &out {
                for v in values {
                    let mut c = cfg.clone();
                    apply(&mut c, key, v)?;
                    next.push(c);
                }
            }
            out = next;
        }
        for c in &out {
            c.check().with_context(|| format!("instance {}", instance_id(c)))?;
        }
        Ok(out)
    }
}

fn apply(c: &mut GeneratorConfig, key: &str, v: &str) -> Result<()> {
    let bad = || format!("bad value `{v}` for `{key}`");
    match key {
        "eta" => c.eta = v.parse().with_context(bad)?,
        "tau" => c.tau = v.parse().with_context(bad)?,
        "rho" => c.rho = v.parse().with_context(bad)?,
        "tbo" => c.tbo = v.parse().with_context(bad)?,
        "alpha" => c.alpha = v.parse().with_context(bad)?,
        "K" => c.products = v.parse().with_context(bad)?,
        "T" => c.horizon = v.parse().with_context(bad)?,
        "omega" => c.scenario_count = v.parse().with_context(bad)?,
        "seed" => c.seed = v.parse().with_context(bad)?,
        "pool" => c.pool_size = v.parse().with_context(bad)?,
        "substitution" => c.substitution = v.parse().map_err(anyhow::Error::msg).with_context(bad)?,
        _ => bail!("unknown parameter `{key}`"),
    }
    Ok(())
}

/// Stable name built from every generator parameter.
pub fn instance_id(c: &GeneratorConfig) -> String {
    format!(
        "K{}-T{}-eta{}-tau{}-rho{}-tbo{}-a{}-{}-w{}-s{}-m{}",
        c.products,
        c.horizon,
        c.eta,
        c.tau,
        c.rho,
        c.tbo,
        c.alpha,
        c.substitution,
        c.scenario_count,
        c.seed,
        c.pool_size
    )
}

/// Instance file written by `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub id: String,
    pub config: GeneratorConfig,
    pub instance: Instance,
}

impl InstanceDoc {
    pub fn generate(config: GeneratorConfig) -> Result<Self> {
        let id = instance_id(&config);
        let instance = generate(&config).with_context(|| format!("generating {id}"))?;
        Ok(Self { id, config, instance })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.json", self.id));
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
