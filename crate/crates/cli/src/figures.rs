//! Frozen figure parameter sets. The TOML files under `figures/` are
//! compiled in; `--config` runs any other file of the same shape.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::job::Job;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    pub id: String,
    pub caption: String,
    pub job: Job,
}

const BUILTIN: &[(&str, &str)] = &[
    ("fig2", include_str!("../figures/fig2.toml")),
    ("fig3", include_str!("../figures/fig3.toml")),
    ("fig4a", include_str!("../figures/fig4a.toml")),
    ("fig4b", include_str!("../figures/fig4b.toml")),
    ("fig5a", include_str!("../figures/fig5a.toml")),
    ("fig5b", include_str!("../figures/fig5b.toml")),
    ("fig6", include_str!("../figures/fig6.toml")),
    ("fig7", include_str!("../figures/fig7.toml")),
    ("fig8", include_str!("../figures/fig8.toml")),
    ("fig9a", include_str!("../figures/fig9a.toml")),
    ("fig9b", include_str!("../figures/fig9b.toml")),
    ("fig9c", include_str!("../figures/fig9c.toml")),
    ("fig10", include_str!("../figures/fig10.toml")),
];

pub fn ids() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(id, _)| *id)
}

fn parse(text: &str) -> CliResult<Figure> {
    Ok(toml::from_str(text)?)
}

/// The figure with this id or, for a multi-panel figure such as `fig9`,
/// every panel.
pub fn builtin(id: &str) -> CliResult<Vec<Figure>> {
    let id = id.to_ascii_lowercase();
    let exact: Vec<_> = BUILTIN.iter().filter(|(k, _)| *k == id).collect();
    let chosen = if exact.is_empty() {
        BUILTIN
            .iter()
            .filter(|(k, _)| {
                k.strip_prefix(id.as_str())
                    .is_some_and(|rest| rest.len() == 1 && rest.chars().all(|c| c.is_ascii_lowercase()))
            })
            .collect()
    } else {
        exact
    };
    if chosen.is_empty() {
        return Err(CliError::usage(format!(
            "unknown figure `{id}`; available: {}",
            ids().collect::<Vec<_>>().join(", ")
        )));
    }
    chosen.into_iter().map(|(_, text)| parse(text)).collect()
}

pub fn from_path(path: &Path) -> CliResult<Figure> {
    parse(&std::fs::read_to_string(path)?)
}

/// Written next to each figure CSV; `replay` re-runs it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub figure: String,
    pub caption: String,
    pub version: String,
    pub seed: Option<u64>,
    pub csv: String,
    pub job: Job,
}

impl Sidecar {
    pub fn new(figure: &Figure, csv: String) -> Self {
        Sidecar {
            figure: figure.id.clone(),
            caption: figure.caption.clone(),
            version: aloha_sic::VERSION.to_string(),
            seed: figure.job.seed(),
            csv,
            job: figure.job.clone(),
        }
    }
}
