//! Decorations of molecules: exact integer momenta on bonds, with per-atom
//! linear and quadratic Kirchhoff sources.
//!
//! Each bond inherits the momentum of its garden node; at every atom v the
//! signed bond sum (outgoing minus incoming) gives the source c_v, and the
//! same sum of squared norms gives the quadratic source Γ_v. Interior atoms —
//! all four bonds present — have c_v = 0, and Γ_v reduces to the resonance
//! factor of the underlying branching node. A missing parent bond (tree root)
//! or a missing leaf-pair bond (leaf paired with a trivial tree's root, or
//! the lone leaf) shows up as an explicit boundary correction; both
//! predictions are cross-checked exhaustively in the tests.

use super::graph::{AtomId, BondId, BondLabel, Molecule};
use crate::combinatorics::decoration::Decoration;
use crate::combinatorics::garden::{Garden, Loc};
use crate::error::{Error, Result};
#[cfg(test)]
use crate::sign::Sign;
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoleculeDecoration {
    dim: usize,
    k: BTreeMap<BondId, Vec<i64>>,
    c: BTreeMap<AtomId, Vec<i64>>,
    gamma: BTreeMap<AtomId, i64>,
}

impl MoleculeDecoration {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Momentum on a bond.
    pub fn k(&self, b: BondId) -> &[i64] {
        &self.k[&b]
    }

    /// Linear Kirchhoff source at an atom: Σ ±k over its bonds, + outgoing.
    pub fn c(&self, a: AtomId) -> &[i64] {
        &self.c[&a]
    }

    /// Quadratic source at an atom: Σ ±|k|² over its bonds, + outgoing.
    pub fn gamma(&self, a: AtomId) -> i64 {
        self.gamma[&a]
    }
}

fn sq(v: &[i64]) -> i64 {
    v.iter().map(|&x| x * x).sum()
}

#[cfg(test)]
pub(crate) fn zeta(s: Sign) -> i64 {
    match s {
        Sign::Plus => 1,
        Sign::Minus => -1,
    }
}

/// Transfer a garden decoration onto the garden's molecule.
pub fn decorate_molecule(
    g: &Garden,
    m: &Molecule,
    dec: &Decoration,
) -> Result<MoleculeDecoration> {
    dec.validate(g)?;
    let dim = dec.dim();
    let mut k = BTreeMap::new();
    for (id, b) in m.bonds() {
        let (Some(mt), Some(mh)) = (b.m_tail, b.m_head) else {
            return Err(Error::invalid("bond without garden provenance"));
        };
        if dec.of(mt) != dec.of(mh) {
            return Err(Error::invalid(format!(
                "bond {id} endpoints disagree on momentum"
            )));
        }
        k.insert(id, dec.of(mt).to_vec());
    }
    let mut c = BTreeMap::new();
    let mut gamma = BTreeMap::new();
    for (a, _) in m.atoms() {
        let mut cv = vec![0i64; dim];
        let mut gv = 0i64;
        for id in m.incident(a) {
            let b = m.bond(id);
            let kv = &k[&id];
            if b.tail == a {
                for d in 0..dim {
                    cv[d] += kv[d];
                }
                gv += sq(kv);
            }
            if b.head == a {
                for d in 0..dim {
                    cv[d] -= kv[d];
                }
                gv -= sq(kv);
            }
        }
        c.insert(a, cv);
        gamma.insert(a, gv);
    }
    Ok(MoleculeDecoration { dim, k, c, gamma })
}

/// Leaf-side boundary data a molecule decoration cannot see: one vector per
/// tree root, plus the lone leaf's vector for paired trees.
#[derive(Clone, Debug)]
pub struct BoundaryValues {
    pub roots: Vec<Vec<i64>>,
    pub lone: Option<Vec<i64>>,
}

impl BoundaryValues {
    pub fn of(g: &Garden, dec: &Decoration) -> BoundaryValues {
        BoundaryValues {
            roots: (0..g.width()).map(|t| dec.root(t).to_vec()).collect(),
            lone: g.lone_leaf_loc().map(|l| dec.of(l).to_vec()),
        }
    }
}

/// Inverse transfer: rebuild the garden decoration from bond momenta plus the
/// boundary values. Fails if the data are not mutually consistent.
pub fn garden_decoration_from_molecule(
    g: &Garden,
    m: &Molecule,
    mdec: &MoleculeDecoration,
    boundary: &BoundaryValues,
) -> Result<Decoration> {
    let dim = mdec.dim();
    if boundary.roots.len() != g.width() {
        return Err(Error::invalid("one root vector per tree required"));
    }
    let mut leaf_k: Vec<Option<Vec<i64>>> = vec![None; g.leaf_count()];
    let mut assign = |i: usize, v: Vec<i64>| -> Result<()> {
        match &leaf_k[i] {
            Some(old) if *old != v => Err(Error::invalid(format!(
                "leaf {i} receives conflicting values"
            ))),
            _ => {
                leaf_k[i] = Some(v);
                Ok(())
            }
        }
    };
    // Roots of trivial trees are leaves; their partners copy the value.
    for (ti, t) in g.trees().iter().enumerate() {
        if t.is_trivial() {
            let i = g.leaf_index(Loc::new(ti, 0)).unwrap();
            assign(i, boundary.roots[ti].clone())?;
            let p = g.partner(i);
            assign(p, boundary.roots[ti].clone())?;
        }
    }
    if let Some(l) = g.lone_leaf_loc() {
        let v = boundary
            .lone
            .as_ref()
            .ok_or_else(|| Error::invalid("lone leaf value required"))?;
        assign(g.leaf_index(l).unwrap(), v.clone())?;
    }
    // Leaf-pair bonds carry both paired leaves' common value.
    for (id, b) in m.bonds() {
        if b.label != BondLabel::Lp {
            continue;
        }
        let v = mdec.k(id).to_vec();
        for end in [b.m_tail, b.m_head] {
            let l = end.ok_or_else(|| Error::invalid("bond without provenance"))?;
            assign(g.leaf_index(l).unwrap(), v.clone())?;
        }
    }
    let leaf_k: Vec<Vec<i64>> = leaf_k
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::invalid(format!("leaf {i} undetermined"))))
        .collect::<Result<_>>()?;
    let dec = Decoration::from_leaf_values(g, dim, &leaf_k)?;
    // Parent-child bond momenta and non-trivial root values must agree with
    // the propagated interior.
    for (id, b) in m.bonds() {
        if let BondLabel::Pc { .. } = b.label {
            if dec.of(b.m_tail.unwrap()) != mdec.k(id) {
                return Err(Error::invalid(format!(
                    "parent-child bond {id} disagrees with propagated interior"
                )));
            }
        }
    }
    for (ti, t) in g.trees().iter().enumerate() {
        if !t.is_trivial() && dec.root(ti) != boundary.roots[ti] {
            return Err(Error::invalid(format!("root {ti} disagrees")));
        }
    }
    Ok(dec)
}
