//! Initial-state generators for the epidemic model family.
//!
//! Builds populations over a type graph that declares an `Agent` node type
//! with a state attribute `s` covering `S` and `I`. When the type graph
//! declares the grid attribute `l`, agents are placed uniformly at random;
//! when it declares the `link` edge type, a contact network can be generated.
//! All randomness is drawn from one seeded generator in a fixed order
//! (infection seeding, then placement, then network), so a spec and seed pin
//! the state exactly.

use thiserror::Error;

use crate::graph::{check_typing, AttrDomain, AttrValue, InstanceGraph, TypeGraph};
use crate::rng::SplitMix64;

/// Contact-network generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkGen {
    /// No links.
    None,
    /// Every ordered pair gains a link independently with probability `p`.
    UniformRandom { p: f64 },
    /// Agent `i` links to its `d` clockwise neighbours `i+1 .. i+d`, so every
    /// agent has `2d` incident links.
    Ring { d: u32 },
}

/// Parameters of one generated initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub population: usize,
    pub infected: usize,
    /// Expected grid size; checked against the type graph's grid domain when
    /// present. `None` accepts whatever the type graph declares.
    pub grid: Option<u32>,
    pub network: NetworkGen,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    #[error("{infected} infected exceed the population of {population}")]
    TooManyInfected { infected: usize, population: usize },
    #[error("link probability {0} lies outside [0, 1]")]
    BadProbability(f64),
    #[error("ring degree {d} needs a population larger than {population}")]
    RingTooDense { d: u32, population: usize },
    #[error("type graph declares no `link` edge type, cannot generate a network")]
    NoLinkType,
    #[error("type graph declares grid size {declared}, spec expects {expected}")]
    GridMismatch { declared: u32, expected: u32 },
    #[error("type graph does not declare `Agent.s` over symbols including S and I")]
    UnsupportedTypeGraph,
}

/// Generate a population: exactly `infected` agents start as `I`, the rest as
/// `S`, placed on the grid and wired up as the spec asks. Deterministic under
/// the spec's seed; the result is well-typed over `tg`.
pub fn generate_init(spec: &InitSpec, tg: &TypeGraph) -> Result<InstanceGraph, InitError> {
    let state_domain = tg
        .domain("Agent", "s")
        .ok_or(InitError::UnsupportedTypeGraph)?;
    for required in ["S", "I"] {
        if !state_domain.contains(&AttrValue::Symbol(required.to_string())) {
            return Err(InitError::UnsupportedTypeGraph);
        }
    }
    if spec.infected > spec.population {
        return Err(InitError::TooManyInfected {
            infected: spec.infected,
            population: spec.population,
        });
    }
    let grid_size = match tg.domain("Agent", "l") {
        Some(AttrDomain::Grid { size }) => {
            if let Some(expected) = spec.grid {
                if *size != expected {
                    return Err(InitError::GridMismatch {
                        declared: *size,
                        expected,
                    });
                }
            }
            Some(*size)
        }
        _ => None,
    };
    let has_links = tg.edge_signature("link").is_some();
    match spec.network {
        NetworkGen::None => {}
        NetworkGen::UniformRandom { p } => {
            if !has_links {
                return Err(InitError::NoLinkType);
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(InitError::BadProbability(p));
            }
        }
        NetworkGen::Ring { d } => {
            if !has_links {
                return Err(InitError::NoLinkType);
            }
            if d as usize >= spec.population.max(1) {
                return Err(InitError::RingTooDense {
                    d,
                    population: spec.population,
                });
            }
        }
    }

    let mut rng = SplitMix64::new(spec.seed);
    let n = spec.population;

    // Partial Fisher-Yates over the agent indices picks the infected set.
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..spec.infected {
        let j = i + rng.next_below((n - i) as u64) as usize;
        order.swap(i, j);
    }
    let mut infected = vec![false; n];
    for &i in order.iter().take(spec.infected) {
        infected[i] = true;
    }

    let mut builder = InstanceGraph::builder();
    for (i, &is_infected) in infected.iter().enumerate() {
        let id = format!("a{i}");
        builder = builder.node(id.clone(), "Agent");
        let state = if is_infected { "I" } else { "S" };
        builder = builder.attr(id, "s", AttrValue::Symbol(state.to_string()));
    }
    if let Some(size) = grid_size {
        for i in 0..n {
            let x = rng.next_below(size as u64) as u32;
            let y = rng.next_below(size as u64) as u32;
            builder = builder.attr(format!("a{i}"), "l", AttrValue::Coord { x, y });
        }
    }

    let mut next_edge = 0usize;
    match spec.network {
        NetworkGen::None => {}
        NetworkGen::Ring { d } => {
            for i in 0..n {
                for j in 1..=d as usize {
                    builder = builder.edge(
                        format!("e{next_edge}"),
                        "link",
                        format!("a{i}"),
                        format!("a{}", (i + j) % n),
                    );
                    next_edge += 1;
                }
            }
        }
        NetworkGen::UniformRandom { p } => {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    if rng.next_f64() < p {
                        builder = builder.edge(
                            format!("e{next_edge}"),
                            "link",
                            format!("a{i}"),
                            format!("a{j}"),
                        );
                        next_edge += 1;
                    }
                }
            }
        }
    }

    let graph = builder.build().expect("generated ids are unique");
    debug_assert!(check_typing(&graph, tg).is_ok());
    Ok(graph)
}
