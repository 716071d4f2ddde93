//! Setting resolution: command-line flag, then the `--config` file, then
//! `VICE_STORE` (store path only), then the built-in default.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use circuitproof::kv::KvDoc;
use circuitproof::{Error, Result};

pub const STORE_ENV: &str = "VICE_STORE";

#[derive(Debug, Clone, Default)]
pub struct Config {
    file: KvDoc,
    env_store: Option<PathBuf>,
}

impl Config {
    pub fn load(path: Option<&Path>, env_store: Option<PathBuf>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
                KvDoc::parse(&text)?
            }
            None => KvDoc::new(),
        };
        Ok(Self { file, env_store })
    }

    pub fn from_env(path: Option<&Path>) -> Result<Self> {
        Self::load(path, std::env::var_os(STORE_ENV).map(PathBuf::from))
    }

    pub fn value<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.file.parse_value(key)?.unwrap_or(default)),
        }
    }

    pub fn store(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        flag.or_else(|| self.file.get("store").map(PathBuf::from))
            .or_else(|| self.env_store.clone())
            .ok_or_else(|| Error::Param(format!("no store given (use --store, `store =` in --config, or {STORE_ENV})")))
    }
}
