use crate::combinatorics::garden::{Garden, Loc};
use crate::error::{Error, Result};
use std::fmt;

/// Layer assignment for every node of a garden: `layers[tree][node]`.
///
/// Valid layerings are monotone down the tree (a child's layer never exceeds
/// its parent's) and give paired leaves equal layers.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Layering {
    layers: Vec<Vec<u32>>,
}

impl Layering {
    pub fn new(garden: &Garden, layers: Vec<Vec<u32>>) -> Result<Layering> {
        let l = Layering { layers };
        l.validate(garden)?;
        Ok(l)
    }

    /// Uniform layering: every node at the given layer.
    pub fn uniform(garden: &Garden, layer: u32) -> Layering {
        Layering {
            layers: garden
                .trees()
                .iter()
                .map(|t| vec![layer; t.node_count()])
                .collect(),
        }
    }

    pub fn validate(&self, garden: &Garden) -> Result<()> {
        if self.layers.len() != garden.width() {
            return Err(Error::invalid("layering width mismatch"));
        }
        for (ti, t) in garden.trees().iter().enumerate() {
            if self.layers[ti].len() != t.node_count() {
                return Err(Error::invalid("layering node count mismatch"));
            }
            for n in 0..t.node_count() {
                if let Some(p) = t.parent(n) {
                    if self.layers[ti][n] > self.layers[ti][p] {
                        return Err(Error::invalid(
                            "child layer exceeds parent layer",
                        ));
                    }
                }
            }
        }
        for (a, b) in garden.pairs() {
            if self.of(garden.leaf_loc(a)) != self.of(garden.leaf_loc(b)) {
                return Err(Error::invalid("paired leaves must share a layer"));
            }
        }
        Ok(())
    }

    pub fn of(&self, loc: Loc) -> u32 {
        self.layers[loc.tree][loc.node]
    }

    pub fn set(&mut self, loc: Loc, layer: u32) {
        self.layers[loc.tree][loc.node] = layer;
    }

    pub fn max_layer(&self) -> u32 {
        self.layers
            .iter()
            .flat_map(|v| v.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Layer of the parent of `loc`, or `root_default` for roots.
    pub fn parent_layer(&self, garden: &Garden, loc: Loc, root_default: u32) -> u32 {
        match garden.tree(loc.tree).parent(loc.node) {
            Some(p) => self.layers[loc.tree][p],
            None => root_default,
        }
    }

    pub fn per_tree(&self) -> &[Vec<u32>] {
        &self.layers
    }
}

/// All valid layerings of `garden` with every layer ≤ `max_layer`.
///
/// Recursion goes tree by tree, node by node in preorder (so each node's
/// parent is already assigned); leaf pairs are forced equal, which prunes
/// the search.
pub fn enumerate_layerings(garden: &Garden, max_layer: u32) -> Vec<Layering> {
    let mut out = Vec::new();
    let mut layers: Vec<Vec<u32>> = garden
        .trees()
        .iter()
        .map(|t| vec![u32::MAX; t.node_count()])
        .collect();
    let order: Vec<Loc> = garden
        .trees()
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..t.node_count()).map(move |n| Loc::new(ti, n)))
        .collect();
    rec(garden, &order, 0, max_layer, &mut layers, &mut out);
    out
}

fn rec(
    garden: &Garden,
    order: &[Loc],
    at: usize,
    max_layer: u32,
    layers: &mut Vec<Vec<u32>>,
    out: &mut Vec<Layering>,
) {
    if at == order.len() {
        out.push(Layering {
            layers: layers.clone(),
        });
        return;
    }
    let loc = order[at];
    let cap = match garden.tree(loc.tree).parent(loc.node) {
        Some(p) => layers[loc.tree][p],
        None => max_layer,
    };
    // A paired leaf whose partner is already assigned is forced.
    if let Some(leaf) = garden.leaf_index(loc) {
        let partner = garden.partner(leaf);
        if partner != leaf {
            let ploc = garden.leaf_loc(partner);
            let assigned = layers[ploc.tree][ploc.node];
            if assigned != u32::MAX {
                if assigned <= cap {
                    layers[loc.tree][loc.node] = assigned;
                    rec(garden, order, at + 1, max_layer, layers, out);
                    layers[loc.tree][loc.node] = u32::MAX;
                }
                return;
            }
        }
    }
    for v in 0..=cap {
        layers[loc.tree][loc.node] = v;
        rec(garden, order, at + 1, max_layer, layers, out);
    }
    layers[loc.tree][loc.node] = u32::MAX;
}

impl fmt::Display for Layering {
    /// `layers[0 0 1; 2]`: per-tree node layers in preorder.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("layers[")?;
        for (i, tree) in self.layers.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            for (j, l) in tree.iter().enumerate() {
                if j > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{l}")?;
            }
        }
        f.write_str("]")
    }
}

impl Layering {
    pub fn parse(garden: &Garden, s: &str) -> Result<Layering> {
        let body = s
            .trim()
            .strip_prefix("layers[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::Parse("layering must look like layers[...]".into()))?;
        let layers: Vec<Vec<u32>> = body
            .split(';')
            .map(|tree| {
                tree.split_whitespace()
                    .map(|tok| {
                        tok.parse::<u32>()
                            .map_err(|_| Error::Parse(format!("bad layer {tok:?}")))
                    })
                    .collect::<Result<Vec<u32>>>()
            })
            .collect::<Result<_>>()?;
        Layering::new(garden, layers)
    }
}
