//! Breaker catalogs in TOML.
//!
//! ```toml
//! ratings_amps = [1250, 1600, 2000, 2500, 3150, 4000]
//! ```

use std::path::Path;

use gridflow_core::fault::BreakerCatalog;
use serde::Deserialize;

/// Environment variable naming a catalog file used when none is given.
pub const CATALOG_ENV: &str = "GRIDFLOW_CATALOG";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDoc {
    ratings_amps: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("catalog {path}: {message}")]
    Parse { path: String, message: String },
    #[error("catalog {path}: ratings must be non-empty, positive and distinct")]
    Invalid { path: String },
}

pub fn parse_catalog(text: &str, path: &str) -> Result<BreakerCatalog, CatalogError> {
    let doc: CatalogDoc = toml::from_str(text).map_err(|e| CatalogError::Parse {
        path: path.to_string(),
        message: e.message().to_string(),
    })?;
    BreakerCatalog::new(doc.ratings_amps).map_err(|_| CatalogError::Invalid { path: path.to_string() })
}

pub fn load_catalog(path: &Path) -> Result<BreakerCatalog, CatalogError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CatalogError::Io {
        path: shown.clone(),
        source: e,
    })?;
    parse_catalog(&text, &shown)
}

/// The explicit path if given, else `$GRIDFLOW_CATALOG`, else the default
/// ratings.
pub fn resolve_catalog(explicit: Option<&Path>) -> Result<BreakerCatalog, CatalogError> {
    if let Some(p) = explicit {
        return load_catalog(p);
    }
    match std::env::var_os(CATALOG_ENV) {
        Some(p) if !p.is_empty() => load_catalog(Path::new(&p)),
        _ => Ok(BreakerCatalog::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_catalog_is_the_default() {
        let text = include_str!("../cases/breakers.toml");
        assert_eq!(parse_catalog(text, "breakers.toml").unwrap(), BreakerCatalog::default());
    }

    #[test]
    fn rejects_bad_catalogs() {
        assert!(matches!(parse_catalog("ratings_amps = []", "x"), Err(CatalogError::Invalid { .. })));
        assert!(matches!(parse_catalog("ratings = [1]", "x"), Err(CatalogError::Parse { .. })));
        assert!(matches!(parse_catalog("ratings_amps = [1, 1]", "x"), Err(CatalogError::Invalid { .. })));
    }

    #[test]
    fn integers_and_floats_mix() {
        let c = parse_catalog("ratings_amps = [800, 1200.5]", "x").unwrap();
        assert_eq!(c.ratings(), &[800.0, 1200.5]);
    }
}
