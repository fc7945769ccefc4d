//! Momentum decorations of gardens on the integer lattice.
//!
//! A decoration assigns a d-dimensional integer vector to every node so that
//! at each branching node the children satisfy k1 − k2 + k3 = k, and the two
//! leaves of every pair carry equal vectors. Working in exact grid units
//! (multiples of 1/L, with the 1/L factor left to callers) keeps resonance
//! checks free of rounding.

use super::garden::{Garden, Loc};
use crate::error::{Error, Result};
use rand::Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoration {
    dim: usize,
    /// Vector per node, indexed [tree][node].
    k: Vec<Vec<Vec<i64>>>,
}

impl Decoration {
    /// Build from per-leaf vectors (by global leaf index), propagating values
    /// to branching nodes bottom-up. Paired leaves must be given equal
    /// vectors.
    pub fn from_leaf_values(g: &Garden, dim: usize, leaf_k: &[Vec<i64>]) -> Result<Decoration> {
        if leaf_k.len() != g.leaf_count() {
            return Err(Error::invalid(format!(
                "expected {} leaf vectors, got {}",
                g.leaf_count(),
                leaf_k.len()
            )));
        }
        if leaf_k.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("leaf vector with wrong dimension"));
        }
        for i in 0..g.leaf_count() {
            let p = g.partner(i);
            if leaf_k[i] != leaf_k[p] {
                return Err(Error::invalid(format!(
                    "paired leaves {i} and {p} carry different vectors"
                )));
            }
        }
        let mut k: Vec<Vec<Vec<i64>>> = g
            .trees()
            .iter()
            .map(|t| vec![vec![0i64; dim]; t.node_count()])
            .collect();
        for i in 0..g.leaf_count() {
            let loc = g.leaf_loc(i);
            k[loc.tree][loc.node] = leaf_k[i].clone();
        }
        for (ti, t) in g.trees().iter().enumerate() {
            // Children have larger preorder indices, so a reverse sweep sees
            // them before their parent.
            for n in (0..t.node_count()).rev() {
                if let Some(ch) = t.children(n) {
                    let v: Vec<i64> = (0..dim)
                        .map(|d| {
                            k[ti][ch[0]][d] - k[ti][ch[1]][d] + k[ti][ch[2]][d]
                        })
                        .collect();
                    k[ti][n] = v;
                }
            }
        }
        Ok(Decoration { dim, k })
    }

    /// Random decoration: one vector per leaf pair (shared by both leaves)
    /// plus one for the lone leaf, coordinates uniform in [-max_abs, max_abs].
    pub fn random<R: Rng + ?Sized>(g: &Garden, dim: usize, max_abs: i64, rng: &mut R) -> Decoration {
        let mut leaf_k = vec![Vec::new(); g.leaf_count()];
        for i in 0..g.leaf_count() {
            if !leaf_k[i].is_empty() {
                continue;
            }
            let v: Vec<i64> = (0..dim).map(|_| rng.gen_range(-max_abs..=max_abs)).collect();
            let p = g.partner(i);
            leaf_k[i] = v.clone();
            leaf_k[p] = v;
        }
        Decoration::from_leaf_values(g, dim, &leaf_k).expect("sampled values are consistent")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vector at a node.
    pub fn of(&self, loc: Loc) -> &[i64] {
        &self.k[loc.tree][loc.node]
    }

    /// Vector at the root of tree `t`.
    pub fn root(&self, t: usize) -> &[i64] {
        &self.k[t][0]
    }

    /// Check shape, branching-node conservation, and pair equality against a
    /// garden.
    pub fn validate(&self, g: &Garden) -> Result<()> {
        if self.k.len() != g.width() {
            return Err(Error::invalid("tree count mismatch"));
        }
        for (ti, t) in g.trees().iter().enumerate() {
            if self.k[ti].len() != t.node_count() {
                return Err(Error::invalid(format!("node count mismatch in tree {ti}")));
            }
            if self.k[ti].iter().any(|v| v.len() != self.dim) {
                return Err(Error::invalid("vector with wrong dimension"));
            }
            for n in 0..t.node_count() {
                if let Some(ch) = t.children(n) {
                    for d in 0..self.dim {
                        let s = self.k[ti][ch[0]][d] - self.k[ti][ch[1]][d]
                            + self.k[ti][ch[2]][d];
                        if s != self.k[ti][n][d] {
                            return Err(Error::invalid(format!(
                                "conservation fails at ({ti}, {n})"
                            )));
                        }
                    }
                }
            }
        }
        for i in 0..g.leaf_count() {
            let p = g.partner(i);
            if self.of(g.leaf_loc(i)) != self.of(g.leaf_loc(p)) {
                return Err(Error::invalid(format!(
                    "paired leaves {i} and {p} disagree"
                )));
            }
        }
        Ok(())
    }

    /// Resonance factor at a branching node:
    /// |k1|² − |k2|² + |k3|² − |k|², exact in grid units.
    pub fn omega(&self, g: &Garden, loc: Loc) -> Result<i64> {
        let ch = g
            .tree(loc.tree)
            .children(loc.node)
            .ok_or_else(|| Error::invalid("omega is defined at branching nodes"))?;
        let sq = |v: &[i64]| v.iter().map(|&x| x * x).sum::<i64>();
        Ok(sq(&self.k[loc.tree][ch[0]]) - sq(&self.k[loc.tree][ch[1]])
            + sq(&self.k[loc.tree][ch[2]])
            - sq(self.of(loc)))
    }

    /// Replace the vector at one node (no consistency is re-checked; used by
    /// transport constructions that re-validate afterwards).
    pub fn set(&mut self, loc: Loc, v: Vec<i64>) {
        self.k[loc.tree][loc.node] = v;
    }
}
