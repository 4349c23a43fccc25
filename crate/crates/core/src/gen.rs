//! Deterministic instance generators, each with declared ground-truth
//! metadata (lambda*, the decreasingly minimal element, local duality
//! certificates) for the audit suite. Closed-form lambda* declarations are
//! self-checked at generation time; generation fails loudly on mismatch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fileio::{CertDesc, InstanceFile, InstanceMetadata, FORMAT_VERSION};
use crate::model::{AllocationVector, Instance, LocalDualityCert};
use crate::oracles::registry::{EdgeDesc, ProductPartDesc};
use crate::oracles::BlockDesc;

/// A built instance together with its file descriptor and declared values.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub descriptor: InstanceFile,
    pub instance: Instance,
    pub declared_lambda_star: Option<f64>,
    pub declared_decmin: Option<AllocationVector>,
    pub declared_certs: Vec<LocalDualityCert>,
    pub provenance: String,
}

/// Builds the oracles and declared metadata from a descriptor. The one
/// construction path shared by generators and the CLI loader.
pub fn realize(descriptor: InstanceFile) -> Result<GeneratedInstance> {
    descriptor.validate_header()?;
    let m = descriptor.resources;
    let mut blocks = Vec::with_capacity(descriptor.blocks.len());
    for desc in &descriptor.blocks {
        blocks.push(desc.build(m)?);
    }
    let instance = Instance::new(m, descriptor.sigma, blocks)?;

    let meta = descriptor.metadata.clone().unwrap_or_default();
    let declared_lambda_star = meta.lambda_star;
    let declared_decmin = match meta.decmin {
        None => None,
        Some(v) => {
            if v.len() != m {
                return Err(Error::Input(format!(
                    "declared decmin has length {}, expected {m}",
                    v.len()
                )));
            }
            let alloc = AllocationVector::new(v);
            alloc.validate()?;
            Some(alloc)
        }
    };
    if let (Some(lambda), Some(decmin)) = (declared_lambda_star, &declared_decmin) {
        if (decmin.linf() - lambda).abs() > 1e-9 {
            return Err(Error::Input(format!(
                "declared decmin max {} != declared lambda* {lambda}",
                decmin.linf()
            )));
        }
    }
    let mut declared_certs = Vec::with_capacity(meta.certs.len());
    for c in &meta.certs {
        declared_certs.push(LocalDualityCert::new(c.subset.clone(), c.mu, m)?);
    }
    let provenance = meta.provenance.unwrap_or_else(|| "unspecified".into());
    Ok(GeneratedInstance {
        descriptor,
        instance,
        declared_lambda_star,
        declared_decmin,
        declared_certs,
        provenance,
    })
}

fn unit_prices(m: usize, r: usize) -> Vec<f64> {
    let mut y = vec![0.0; m];
    y[r] = 1.0;
    y
}

/// Adversarial single-customer instance: the hull of lambda = (1,1,0,...,0)
/// and v = (5/4, 0, m^{1/sqrt(eps)}, ..., m^{1/sqrt(eps)}). Its decreasingly
/// minimal element is lambda, yet the core algorithm run at epsilon drives
/// every coordinate close to 1.
pub fn gen_adversarial(m: usize, epsilon: f64) -> Result<GeneratedInstance> {
    if m < 3 {
        return Err(Error::Input(format!("adversarial generator needs m >= 3, got {m}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Input(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let tall = (m as f64).powf(1.0 / epsilon.sqrt());
    if !tall.is_finite() || tall > 1e300 {
        return Err(Error::Input(format!(
            "m^(1/sqrt(eps)) = {tall} is not representable; raise epsilon"
        )));
    }
    let mut lambda = vec![0.0; m];
    lambda[0] = 1.0;
    lambda[1] = 1.0;
    let mut v = vec![tall; m];
    v[0] = 1.25;
    v[1] = 0.0;

    let descriptor = InstanceFile {
        version: FORMAT_VERSION,
        resources: m,
        sigma: 1.0,
        blocks: vec![BlockDesc::Vertices {
            vertices: vec![lambda.clone(), v],
        }],
        metadata: Some(InstanceMetadata {
            lambda_star: Some(1.0),
            decmin: Some(lambda),
            certs: vec![],
            provenance: Some(format!("adversarial(m={m}, epsilon={epsilon})")),
        }),
    };
    let generated = realize(descriptor)?;

    // self-check lambda* = 1: pricing only resource 0 shows lambda* >= 1
    // (both vertices cost >= 1 there) and the feasible point lambda shows
    // lambda* <= 1
    let opt_at_e0 = generated.instance.blocks()[0]
        .exact_opt(&unit_prices(m, 0))
        .expect("vertex blocks are exact");
    if (opt_at_e0 - 1.0).abs() > 1e-12 {
        return Err(Error::Invariant(format!(
            "adversarial self-check failed: opt at e_0 is {opt_at_e0}, expected 1"
        )));
    }
    Ok(generated)
}

/// Composite lower-bound instance on 2m resources with n + 2 customers:
/// a caller-provided hard block with lambda* = 1 on the first window, the
/// scaled simplex m*Delta_m on the second (forcing m restricted calls per
/// phase), and n zero blocks (one standard call each per phase).
pub fn gen_lowerbound_composite(
    n: usize,
    m: usize,
    hard_block: Option<BlockDesc>,
) -> Result<GeneratedInstance> {
    if m == 0 {
        return Err(Error::Input("lowerbound generator needs m >= 1".into()));
    }
    let hard = hard_block.unwrap_or(BlockDesc::Vertices {
        vertices: vec![vec![1.0; m]],
    });
    // the hard block must span m resources and have optimum value 1 on them;
    // the default trivial width-1 block does
    let window1: Vec<usize> = (0..m).collect();
    let window2: Vec<usize> = (m..2 * m).collect();
    let customer1 = BlockDesc::Product {
        parts: vec![
            ProductPartDesc {
                window: window1.clone(),
                block: hard,
            },
            ProductPartDesc {
                window: window2.clone(),
                block: BlockDesc::Zero,
            },
        ],
    };
    let customer2 = BlockDesc::Product {
        parts: vec![
            ProductPartDesc {
                window: window1.clone(),
                block: BlockDesc::Zero,
            },
            ProductPartDesc {
                window: window2.clone(),
                block: BlockDesc::Simplex { scale: m as f64 },
            },
        ],
    };
    let mut blocks = vec![customer1, customer2];
    for _ in 0..n {
        blocks.push(BlockDesc::Zero);
    }
    let descriptor = InstanceFile {
        version: FORMAT_VERSION,
        resources: 2 * m,
        sigma: 1.0,
        blocks,
        metadata: Some(InstanceMetadata {
            lambda_star: Some(1.0),
            decmin: None,
            certs: vec![
                CertDesc {
                    subset: window1,
                    mu: 1.0,
                },
                CertDesc {
                    subset: window2,
                    mu: 1.0,
                },
            ],
            provenance: Some(format!("lowerbound(n={n}, m={m})")),
        }),
    };
    realize(descriptor)
}

/// Graph template for the cut-vertex flow generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutFlowTemplate {
    /// Two bundles of parallel edges joined at the cut vertex.
    Parallel { left: usize, right: usize },
    /// The 7-vertex, 10-edge network with cut vertex between two halves.
    Fig2,
}

/// Commodity instance on a network with a cut vertex: one path block per
/// commodity, all routing the same source-sink pair. Declares the two edge
/// windows and their per-half optima as local duality certificates.
pub fn gen_cut_vertex_flow(
    template: CutFlowTemplate,
    commodities: usize,
    demand: f64,
) -> Result<GeneratedInstance> {
    if !(demand > 0.0) || !demand.is_finite() {
        return Err(Error::Input(format!("demand {demand} must be positive")));
    }
    let (edges, source, sink, m, window1, window2, mu1, mu2, name) = match template {
        CutFlowTemplate::Parallel { left, right } => {
            if left == 0 || right == 0 {
                return Err(Error::Input("parallel template needs edges on both sides".into()));
            }
            let mut edges = Vec::new();
            for r in 0..left {
                edges.push(EdgeDesc { from: 0, to: 1, resource: Some(r) });
            }
            for r in 0..right {
                edges.push(EdgeDesc { from: 1, to: 2, resource: Some(left + r) });
            }
            let w1: Vec<usize> = (0..left).collect();
            let w2: Vec<usize> = (left..left + right).collect();
            let mu1 = commodities as f64 * demand / left as f64;
            let mu2 = commodities as f64 * demand / right as f64;
            (
                edges,
                0,
                2,
                left + right,
                w1,
                w2,
                mu1,
                mu2,
                format!("cutflow(parallel {left}+{right})"),
            )
        }
        CutFlowTemplate::Fig2 => {
            // vertices: A=0 B=1 C=2 D=3 E=4 F=5 G=6; D is the cut vertex.
            // undirected edges appear as arc pairs sharing one resource.
            let undirected = [
                (0, 1), // e1: A-B
                (1, 2), // e2: B-C
                (0, 2), // e3: A-C
                (0, 3), // e4: A-D
                (2, 3), // e5: C-D
                (3, 4), // e6: D-E
                (3, 5), // e7: D-F
                (4, 5), // e8: E-F
                (4, 6), // e9: E-G
                (5, 6), // e10: F-G
            ];
            let mut edges = Vec::new();
            for (r, &(u, v)) in undirected.iter().enumerate() {
                edges.push(EdgeDesc { from: u, to: v, resource: Some(r) });
                edges.push(EdgeDesc { from: v, to: u, resource: Some(r) });
            }
            let w1: Vec<usize> = (0..5).collect();
            let w2: Vec<usize> = (5..10).collect();
            // each half carries the whole flow across two edge-disjoint paths
            let mu = commodities as f64 * demand / 2.0;
            (edges, 1, 6, 10, w1, w2, mu, mu, "cutflow(fig2)".to_string())
        }
    };

    if commodities == 0 {
        // degenerate: no demand at all; represent as a single zero block
        let descriptor = InstanceFile {
            version: FORMAT_VERSION,
            resources: m,
            sigma: 1.0,
            blocks: vec![BlockDesc::Zero],
            metadata: Some(InstanceMetadata {
                lambda_star: Some(0.0),
                decmin: Some(vec![0.0; m]),
                certs: vec![],
                provenance: Some(format!("{name} empty commodity list")),
            }),
        };
        return realize(descriptor);
    }

    let block = BlockDesc::Paths {
        edges,
        source,
        sink,
        demand,
    };
    let descriptor = InstanceFile {
        version: FORMAT_VERSION,
        resources: m,
        sigma: 1.0,
        blocks: vec![block; commodities],
        metadata: Some(InstanceMetadata {
            lambda_star: Some(mu1.max(mu2)),
            decmin: None,
            certs: vec![
                CertDesc { subset: window1, mu: mu1 },
                CertDesc { subset: window2, mu: mu2 },
            ],
            provenance: Some(format!("{name} x{commodities} demand {demand}")),
        }),
    };
    realize(descriptor)
}

/// Product of part instances on concatenated resource windows. Parts must
/// have equal customer counts, or be single-customer (broadcast: the block
/// goes to customer 0 and the remaining customers get zero blocks on that
/// window, which preserves each part's Minkowski sum and hence its declared
/// optimum). Declares lambda* = max over parts, per-window certificates from
/// the parts' optima, and the concatenated decmin when all parts declare one.
pub fn gen_product(parts: &[GeneratedInstance]) -> Result<GeneratedInstance> {
    if parts.is_empty() {
        return Err(Error::Input("product generator needs at least one part".into()));
    }
    let n = parts.iter().map(|p| p.instance.num_customers()).max().unwrap();
    for (i, p) in parts.iter().enumerate() {
        let np = p.instance.num_customers();
        if np != n && np != 1 {
            return Err(Error::Input(format!(
                "part {i} has {np} customers; expected {n} or 1 (broadcast)"
            )));
        }
    }

    let total_m: usize = parts.iter().map(|p| p.instance.num_resources()).sum();
    let mut offsets = Vec::with_capacity(parts.len());
    let mut offset = 0;
    for p in parts {
        offsets.push(offset);
        offset += p.instance.num_resources();
    }

    let mut blocks = Vec::with_capacity(n);
    for c in 0..n {
        let mut product_parts = Vec::with_capacity(parts.len());
        for (i, p) in parts.iter().enumerate() {
            let m_i = p.instance.num_resources();
            let window: Vec<usize> = (offsets[i]..offsets[i] + m_i).collect();
            let sub = if p.instance.num_customers() == 1 && c > 0 {
                BlockDesc::Zero
            } else {
                p.descriptor.blocks[c.min(p.descriptor.blocks.len() - 1)].clone()
            };
            product_parts.push(ProductPartDesc { window, block: sub });
        }
        blocks.push(BlockDesc::Product { parts: product_parts });
    }

    let sigma = parts.iter().map(|p| p.instance.sigma()).fold(1.0, f64::max);
    let lambda = parts
        .iter()
        .map(|p| p.declared_lambda_star)
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max));
    let decmin = parts
        .iter()
        .map(|p| p.declared_decmin.as_ref().map(|d| d.entries().to_vec()))
        .collect::<Option<Vec<Vec<f64>>>>()
        .map(|vs| vs.concat());

    let mut certs = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let m_i = p.instance.num_resources();
        if let Some(l) = p.declared_lambda_star {
            certs.push(CertDesc {
                subset: (offsets[i]..offsets[i] + m_i).collect(),
                mu: l,
            });
        }
        // a part's own certificates stay valid, shifted into its window
        for c in &p.declared_certs {
            certs.push(CertDesc {
                subset: c.subset().iter().map(|&r| r + offsets[i]).collect(),
                mu: c.mu(),
            });
        }
    }

    let provenance = format!(
        "product[{}]",
        parts
            .iter()
            .map(|p| p.provenance.clone())
            .collect::<Vec<_>>()
            .join("; ")
    );
    let descriptor = InstanceFile {
        version: FORMAT_VERSION,
        resources: total_m,
        sigma,
        blocks,
        metadata: Some(InstanceMetadata {
            lambda_star: lambda,
            decmin,
            certs,
            provenance: Some(provenance),
        }),
    };
    realize(descriptor)
}

/// Reproducible pseudo-random vertex-hull instances (fuzzing substrate).
/// Ground truth is unknown by construction.
pub fn gen_random_vertex(
    n: usize,
    m: usize,
    vertices_per_block: usize,
    seed: u64,
    magnitude: f64,
) -> Result<GeneratedInstance> {
    if n == 0 || m == 0 || vertices_per_block == 0 {
        return Err(Error::Input("all counts must be >= 1".into()));
    }
    if !(magnitude > 0.0) || !magnitude.is_finite() {
        return Err(Error::Input(format!("magnitude {magnitude} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(n);
    for _ in 0..n {
        let vertices = (0..vertices_per_block)
            .map(|_| (0..m).map(|_| rng.gen::<f64>() * magnitude).collect())
            .collect();
        blocks.push(BlockDesc::Vertices { vertices });
    }
    let descriptor = InstanceFile {
        version: FORMAT_VERSION,
        resources: m,
        sigma: 1.0,
        blocks,
        metadata: Some(InstanceMetadata {
            lambda_star: None,
            decmin: None,
            certs: vec![],
            provenance: Some(format!(
                "random(n={n}, m={m}, k={vertices_per_block}, seed={seed}, magnitude={magnitude})"
            )),
        }),
    };
    realize(descriptor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adversarial_matches_construction() {
        let g = gen_adversarial(3, 0.003).unwrap();
        assert_eq!(g.instance.num_resources(), 3);
        assert_eq!(g.instance.num_customers(), 1);
        assert_eq!(g.declared_lambda_star, Some(1.0));
        assert_eq!(g.declared_decmin.unwrap().entries(), &[1.0, 1.0, 0.0]);
        let tall = 3.0_f64.powf(1.0 / 0.003_f64.sqrt());
        assert!(tall > 5.0e8 && tall < 5.3e8, "tall entry {tall}");
        match &g.descriptor.blocks[0] {
            BlockDesc::Vertices { vertices } => {
                assert_eq!(vertices[1][0], 1.25);
                assert_eq!(vertices[1][1], 0.0);
                assert!((vertices[1][2] - tall).abs() < 1.0);
            }
            _ => panic!("expected vertex block"),
        }
    }

    #[test]
    fn adversarial_rejects_small_m_and_tiny_epsilon() {
        assert!(gen_adversarial(2, 0.003).is_err());
        // m^(1/sqrt(eps)) overflows well before eps = 1e-6 at m = 10
        assert!(gen_adversarial(10, 1e-6).is_err());
    }

    #[test]
    fn lowerbound_layout() {
        let g = gen_lowerbound_composite(2, 4, None).unwrap();
        assert_eq!(g.instance.num_resources(), 8);
        assert_eq!(g.instance.num_customers(), 4);
        assert_eq!(g.declared_lambda_star, Some(1.0));
        assert_eq!(g.declared_certs.len(), 2);

        let g0 = gen_lowerbound_composite(0, 4, None).unwrap();
        assert_eq!(g0.instance.num_customers(), 2);
    }

    #[test]
    fn cutflow_examples() {
        let g = gen_cut_vertex_flow(CutFlowTemplate::Fig2, 1, 1.0).unwrap();
        assert_eq!(g.instance.num_resources(), 10);
        assert_eq!(g.declared_certs[0].subset(), &[0, 1, 2, 3, 4]);
        assert_eq!(g.declared_certs[1].subset(), &[5, 6, 7, 8, 9]);
        // unit prices: shortest B-G path has 4 edges
        let (_, cost) = g.instance.blocks()[0].evaluate(&[1.0; 10]);
        assert_eq!(cost, 4.0);

        let g = gen_cut_vertex_flow(
            CutFlowTemplate::Parallel { left: 2, right: 3 },
            1,
            1.0,
        )
        .unwrap();
        assert!((g.declared_certs[0].mu() - 0.5).abs() < 1e-12);
        assert!((g.declared_certs[1].mu() - 1.0 / 3.0).abs() < 1e-12);

        let g = gen_cut_vertex_flow(CutFlowTemplate::Fig2, 0, 1.0).unwrap();
        assert_eq!(g.declared_lambda_star, Some(0.0));
        assert_eq!(g.instance.num_customers(), 1);
    }

    #[test]
    fn product_declares_max_and_windows() {
        let a = gen_adversarial(3, 0.01).unwrap();
        let b = gen_adversarial(3, 0.01).unwrap();
        let g = gen_product(&[a, b]).unwrap();
        assert_eq!(g.instance.num_resources(), 6);
        assert_eq!(g.declared_lambda_star, Some(1.0));
        assert_eq!(g.declared_decmin.unwrap().len(), 6);
        assert!(g.declared_certs.len() >= 2);
    }

    #[test]
    fn random_is_deterministic_and_bounded() {
        let a = gen_random_vertex(2, 3, 2, 7, 1.0).unwrap();
        let b = gen_random_vertex(2, 3, 2, 7, 1.0).unwrap();
        assert_eq!(a.descriptor, b.descriptor);
        match &a.descriptor.blocks[0] {
            BlockDesc::Vertices { vertices } => {
                assert!(vertices.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
            }
            _ => panic!("expected vertices"),
        }
        let tiny = gen_random_vertex(1, 1, 1, 0, 2.0).unwrap();
        assert_eq!(tiny.instance.num_resources(), 1);
    }
}
