use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::datalog::{io, Database};
use crate::putback::{DeriveConfig, PutStrategy};

use super::{DejimaError, PeerNetwork};

/// A network description: peers with initial data and links between them.
/// Read from TOML or JSON with the same shape.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    pub peers: Vec<PeerSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PeerSpec {
    pub name: String,
    /// CSV directory or JSON file; a peer without data starts empty.
    #[serde(default)]
    pub data: Option<String>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub peers: [String; 2],
    /// Strategy files, in the same order as `peers`.
    pub strategies: [String; 2],
    /// Peer that pulls the other side's table when the link opens.
    #[serde(default)]
    pub initiator: Option<String>,
}

/// Where topology paths point.
pub trait Resources {
    fn text(&self, path: &str) -> Result<String, DejimaError>;
    fn database(&self, path: &str) -> Result<Database, DejimaError>;
}

/// Paths relative to a directory on disk.
#[derive(Debug, Clone)]
pub struct DirResources(pub PathBuf);

impl Resources for DirResources {
    fn text(&self, path: &str) -> Result<String, DejimaError> {
        let p = self.0.join(path);
        std::fs::read_to_string(&p)
            .map_err(|e| DejimaError::Topology(format!("{}: {e}", p.display())))
    }

    fn database(&self, path: &str) -> Result<Database, DejimaError> {
        Ok(io::read_database(&self.0.join(path))?)
    }
}

impl Topology {
    pub fn from_toml(text: &str) -> Result<Self, DejimaError> {
        toml::from_str(text).map_err(|e| DejimaError::Topology(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, DejimaError> {
        serde_json::from_str(text).map_err(|e| DejimaError::Topology(e.to_string()))
    }

    /// Reads a `.json` or `.toml` file; its directory resolves relative paths.
    pub fn load(path: &Path) -> Result<(Self, DirResources), DejimaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DejimaError::Topology(format!("{}: {e}", path.display())))?;
        let topo = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text)?,
            _ => Self::from_toml(&text)?,
        };
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok((topo, DirResources(dir)))
    }

    /// Creates the peers, derives every link, and runs the initial
    /// synchronization of links that name an initiator, in file order.
    pub fn build(
        &self,
        res: &dyn Resources,
        cfg: &DeriveConfig,
    ) -> Result<PeerNetwork, DejimaError> {
        let mut net = PeerNetwork::new();
        for p in &self.peers {
            let base = match &p.data {
                Some(path) => res.database(path)?,
                None => Database::new(),
            };
            net.add_peer(&p.name, base)?;
        }
        for l in &self.links {
            let [a, b] = &l.peers;
            let load = |path: &str| -> Result<PutStrategy, DejimaError> {
                let name = Path::new(path)
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or(path);
                Ok(PutStrategy::parse(name, &res.text(path)?)?)
            };
            net.link(a, load(&l.strategies[0])?, b, load(&l.strategies[1])?, cfg)?;
        }
        for l in &self.links {
            if let Some(init) = &l.initiator {
                net.initial_sync(&l.peers[0], &l.peers[1], init)?;
            }
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let t = Topology::from_toml(
            "[[peers]]\nname = \"a\"\n[[peers]]\nname = \"b\"\ndata = \"x.json\"\n\
             [[links]]\npeers = [\"a\", \"b\"]\nstrategies = [\"p\", \"q\"]\n",
        )
        .unwrap();
        let j = Topology::from_json(
            r#"{"peers": [{"name": "a"}, {"name": "b", "data": "x.json"}],
                "links": [{"peers": ["a", "b"], "strategies": ["p", "q"]}]}"#,
        )
        .unwrap();
        assert_eq!(t, j);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(Topology::from_toml("[[peers]]\nname = \"a\"\ncolour = 1\n").is_err());
    }
}
