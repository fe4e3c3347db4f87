use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use qctriage::service::{serve, ReviewService, ServiceConfig, DEFAULT_CACHE_MB};

use crate::config::RunConfig;
use crate::Outcome;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// PNG cache capacity in MiB.
    #[arg(long, default_value_t = DEFAULT_CACHE_MB)]
    pub cache_mb: usize,
    /// Never take ledger write locks; verdict posts are refused.
    #[arg(long)]
    pub read_only: bool,
    /// Directory of review client assets served at `/`.
    #[arg(long)]
    pub ui: Option<PathBuf>,
}

pub fn run(config: &RunConfig, args: &Args) -> Result<Outcome> {
    let archive = config.archive()?;
    let mut sc = ServiceConfig::new(archive.root());
    sc.cache_bytes = args.cache_mb * 1024 * 1024;
    sc.read_only = args.read_only;
    let svc = Arc::new(ReviewService::open(sc)?);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")?;
    eprintln!("serving {} on http://{}", archive.root().display(), args.bind);
    rt.block_on(serve(svc, args.bind, args.ui.clone()))
        .with_context(|| format!("serving on {}", args.bind))?;
    Ok(Outcome::Done)
}
