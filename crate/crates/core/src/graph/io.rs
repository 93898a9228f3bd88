//! JSON dataset container.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Graph, Splits, Task};
use crate::error::{Result, SrfError};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    /// Row-major features; an absent or empty list means `F = 0`.
    #[serde(default)]
    pub x: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_y: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFile {
    pub task: Task,
    pub num_classes: usize,
    pub graphs: Vec<GraphRecord>,
    #[serde(default)]
    pub splits: Splits,
}

fn parse_err(location: impl Into<String>, message: impl std::fmt::Display) -> SrfError {
    SrfError::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

impl GraphRecord {
    pub fn from_graph(g: &Graph) -> Self {
        Self {
            id: g.id.clone(),
            n: g.node_count(),
            edges: g.edges().iter().map(|&(a, b)| [a, b]).collect(),
            x: if g.feature_dim() == 0 {
                Vec::new()
            } else {
                g.features().to_rows()
            },
            y: g.graph_label,
            node_y: g.node_labels.clone(),
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        let loc = || format!("graph '{}'", self.id);
        let x = if self.x.is_empty() {
            Matrix::empty_rows(self.n)
        } else {
            if self.x.len() != self.n {
                return Err(parse_err(
                    loc(),
                    format!("{} feature rows for {} nodes", self.x.len(), self.n),
                ));
            }
            let width = self.x[0].len();
            if let Some(r) = self.x.iter().position(|r| r.len() != width) {
                return Err(parse_err(
                    loc(),
                    format!("ragged feature row {r}: expected {width} values"),
                ));
            }
            Matrix::from_rows(&self.x).map_err(|e| parse_err(loc(), e))?
        };
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|&[a, b]| (a, b)).collect();
        let mut g = Graph::new(self.id.clone(), self.n, &edges, x).map_err(|e| parse_err(loc(), e))?;
        g.graph_label = self.y;
        if let Some(labels) = &self.node_y {
            g = g.with_node_labels(labels.clone()).map_err(|e| parse_err(loc(), e))?;
        }
        Ok(g)
    }
}

impl DatasetFile {
    pub fn from_dataset(ds: &Dataset) -> Self {
        Self {
            task: ds.task,
            num_classes: ds.num_classes,
            graphs: ds.graphs.iter().map(GraphRecord::from_graph).collect(),
            splits: ds.splits.clone(),
        }
    }

    pub fn into_dataset(self) -> Result<Dataset> {
        let graphs = self
            .graphs
            .iter()
            .map(GraphRecord::to_graph)
            .collect::<Result<Vec<_>>>()?;
        let ds = Dataset {
            task: self.task,
            num_classes: self.num_classes,
            graphs,
            splits: self.splits,
        };
        ds.validate().map_err(|e| parse_err("dataset", e))?;
        Ok(ds)
    }
}

pub fn dataset_from_json(text: &str) -> Result<Dataset> {
    let file: DatasetFile = serde_json::from_str(text).map_err(|e| {
        parse_err(format!("line {} column {}", e.line(), e.column()), e)
    })?;
    file.into_dataset()
}

pub fn dataset_to_json(ds: &Dataset) -> Result<String> {
    Ok(serde_json::to_string(&DatasetFile::from_dataset(ds))?)
}

pub fn load_graph_json(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    dataset_from_json(&text).map_err(|e| match e {
        SrfError::Parse { location, message } => SrfError::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })
}

/// Writes to a sibling temp file and renames it into place.
pub fn save_graph_json(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    crate::write_atomic(path.as_ref(), dataset_to_json(ds)?.as_bytes())
}
