//! `gen`: instance documents for a parameter grid.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use crate::grid::{Grid, GridArgs, InstanceDoc};
use crate::table::{write_csv, ManifestRow};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output directory; receives one JSON file per instance and manifest.csv.
    #[arg(long, default_value = "instances")]
    pub out: PathBuf,
}

pub fn run(args: &GenArgs) -> Result<Vec<ManifestRow>> {
    let configs = Grid::from_args(&args.grid)?.configs()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut manifest = Vec::with_capacity(configs.len());
    for config in configs {
        let doc = InstanceDoc::generate(config)?;
        let path = doc.write(&args.out)?;
        let c = &doc.config;
        manifest.push(ManifestRow {
            instance_id: doc.id.clone(),
            file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            products: c.products,
            horizon: c.horizon,
            eta: c.eta,
            tau: c.tau,
            rho: c.rho,
            tbo: c.tbo,
            alpha: c.alpha,
            substitution: c.substitution.to_string(),
            omega: c.scenario_count,
            seed: c.seed,
        });
    }
    write_csv(&args.out.join("manifest.csv"), &manifest)?;
    Ok(manifest)
}
