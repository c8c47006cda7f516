use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use tracing_subscriber::EnvFilter;

use cfic_core::oracle::mock::{MockTokenSpace, Script, ScriptedOracle};
use cfic_core::oracle::{Oracle, RelevanceConfig, RelevanceOracle};
use cfic_server::{router, AppState};

/// Serves a mock oracle over HTTP.
#[derive(Debug, Parser)]
#[command(name = "cfic-server", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// mock:relevance | mock:scripted
    #[arg(long, default_value = "mock:relevance")]
    oracle: String,
    /// Script file for mock:scripted.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Require this bearer token on every request.
    #[arg(long, env = "CFIC_API_KEY")]
    api_key: Option<String>,
}

fn build_oracle(args: &Args) -> anyhow::Result<Arc<dyn Oracle>> {
    let space = Arc::new(MockTokenSpace::new());
    match args.oracle.as_str() {
        "mock:relevance" => Ok(Arc::new(RelevanceOracle::new(
            space,
            RelevanceConfig::default(),
        ))),
        "mock:scripted" => {
            let path = args
                .script
                .as_ref()
                .context("mock:scripted needs --script")?;
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let script: Script = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            Ok(Arc::new(ScriptedOracle::from_script(space, script)))
        }
        other => anyhow::bail!("unknown oracle `{other}`"),
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("CFIC_LOG").unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();
    let state = AppState {
        oracle: build_oracle(&args)?,
        api_key: args.api_key.clone().filter(|k| !k.is_empty()),
    };
    let listener = tokio::net::TcpListener::bind(&args.bind)
        .await
        .with_context(|| format!("binding {}", args.bind))?;
    tracing::info!(addr = %listener.local_addr()?, oracle = %args.oracle, "serving");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
