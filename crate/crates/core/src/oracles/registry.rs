//! Name registry for block families. Instance files select a family per
//! customer by its tag; [`BlockDesc::build`] turns a descriptor into a
//! trait object.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{BlockOracle, PathBlock, PathEdge, ProductBlock, ProductPart, ScaledSimplexBlock,
            VertexListBlock, ZeroBlock};

/// Registered block families: (tag, description). The tags double as the
/// `type` field of the instance file format.
pub const BLOCK_KINDS: &[(&str, &str)] = &[
    ("vertices", "convex hull of an explicit vertex list"),
    ("simplex", "scaled probability simplex c*Delta_m"),
    ("zero", "the singleton {0}"),
    ("product", "product of sub-blocks on disjoint resource windows"),
    ("paths", "s-t path polytope of a directed graph, scaled by demand"),
];

/// Serializable block descriptor; the `type` tag picks the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BlockDesc {
    Vertices {
        vertices: Vec<Vec<f64>>,
    },
    Simplex {
        scale: f64,
    },
    Zero,
    Product {
        parts: Vec<ProductPartDesc>,
    },
    Paths {
        edges: Vec<EdgeDesc>,
        source: usize,
        sink: usize,
        demand: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPartDesc {
    /// Resource indices (0-based) of the enclosing block this part covers.
    pub window: Vec<usize>,
    pub block: BlockDesc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDesc {
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<usize>,
}

impl BlockDesc {
    /// The registry tag of this descriptor.
    pub fn kind(&self) -> &'static str {
        match self {
            BlockDesc::Vertices { .. } => "vertices",
            BlockDesc::Simplex { .. } => "simplex",
            BlockDesc::Zero => "zero",
            BlockDesc::Product { .. } => "product",
            BlockDesc::Paths { .. } => "paths",
        }
    }

    /// Builds the oracle for a block spanning `num_resources` resources.
    pub fn build(&self, num_resources: usize) -> Result<Arc<dyn BlockOracle>> {
        match self {
            BlockDesc::Vertices { vertices } => {
                let block = VertexListBlock::new(vertices.clone())?;
                if block.num_resources() != num_resources {
                    return Err(Error::Input(format!(
                        "vertices block has length {}, expected {num_resources}",
                        block.num_resources()
                    )));
                }
                Ok(Arc::new(block))
            }
            BlockDesc::Simplex { scale } => {
                Ok(Arc::new(ScaledSimplexBlock::new(*scale, num_resources)?))
            }
            BlockDesc::Zero => Ok(Arc::new(ZeroBlock::new(num_resources))),
            BlockDesc::Product { parts } => {
                let mut built = Vec::with_capacity(parts.len());
                for part in parts {
                    built.push(ProductPart {
                        block: part.block.build(part.window.len())?,
                        window: part.window.clone(),
                    });
                }
                Ok(Arc::new(ProductBlock::new(built, num_resources)?))
            }
            BlockDesc::Paths {
                edges,
                source,
                sink,
                demand,
            } => {
                let edges = edges
                    .iter()
                    .map(|e| PathEdge {
                        from: e.from,
                        to: e.to,
                        resource: e.resource,
                    })
                    .collect();
                Ok(Arc::new(PathBlock::new(
                    edges,
                    *source,
                    *sink,
                    *demand,
                    num_resources,
                )?))
            }
        }
    }
}
