use std::fs;

use anyhow::{bail, Context, Result};
use praise_core::domain::ProductRecord;
use praise_core::gateway::{
    ApiCredential, Gateway, HttpBackend, ReplayBackend, Script, ScriptedBackend, API_KEY_ENV, DEFAULT_BASE_URL,
};

use crate::{BackendKind, PipelineArgs};

/// The key comes from `--api-key`, else the environment. Never from the
/// config file.
fn credential(args: &PipelineArgs) -> Result<ApiCredential> {
    if let Some(key) = &args.api_key {
        return Ok(key.clone());
    }
    match ApiCredential::from_env(API_KEY_ENV) {
        Some(key) => Ok(key),
        None => bail!("the live backend needs an API key: set {API_KEY_ENV} or pass --api-key"),
    }
}

pub fn build(args: &PipelineArgs, products: &[ProductRecord]) -> Result<Box<dyn Gateway>> {
    Ok(match args.backend {
        BackendKind::Live => {
            let base_url = args.base_url.as_deref().unwrap_or(DEFAULT_BASE_URL);
            Box::new(HttpBackend::new(base_url, credential(args)?).context("building HTTP client")?)
        }
        BackendKind::Replay => {
            let Some(dir) = &args.fixtures else { bail!("--backend replay needs --fixtures DIR") };
            let backend =
                ReplayBackend::from_dir(dir).with_context(|| format!("reading fixtures from {}", dir.display()))?;
            log::info!("loaded {} fixtures from {}", backend.len(), dir.display());
            Box::new(backend)
        }
        BackendKind::Scripted => {
            let Some(path) = &args.script else { bail!("--backend scripted needs --script FILE") };
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let script: Script = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Box::new(ScriptedBackend::new(products, &script))
        }
    })
}
