//! Ladders and the two bad vine shapes. A rung is a pair of atoms joined by
//! exactly two bonds; rungs chain into ladders through pairs of parallel
//! single bonds running in opposite directions (rails). A type-I vine is a
//! two-atom block whose σ is 2 (an opposite double bond); a type-II vine is a
//! maximal rung chain with one extra atom (joint) hooked to each end by two
//! opposite single rails.

use super::blocks::{is_block, Block};
use super::graph::{AtomId, Molecule};
use crate::error::{Error, Result};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ladder {
    /// Double-bond pairs in chain order, each pair smaller id first.
    pub rungs: Vec<(AtomId, AtomId)>,
}

impl Ladder {
    /// One less than the number of double bonds.
    pub fn length(&self) -> usize {
        self.rungs.len() - 1
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum VineKind {
    I,
    II,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vine {
    pub kind: VineKind,
    pub block: Block,
    /// Type II only: double-bond pairs in chain order. `joints.0` of the
    /// block attaches to `rungs[0]` and `joints.1` to the last rung.
    pub rungs: Vec<(AtomId, AtomId)>,
}

/// All atom pairs joined by exactly two bonds, in ascending order.
pub fn rungs(m: &Molecule) -> Vec<(AtomId, AtomId)> {
    let ids: Vec<AtomId> = m.atom_ids().collect();
    let mut out = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            if m.bonds_between(a, b).len() == 2 {
                out.push((a, b));
            }
        }
    }
    out
}

/// Two disjoint rungs chain when joined by exactly two single rails that are
/// vertex-disjoint on both sides and run in opposite directions.
fn rungs_chain(m: &Molecule, r1: (AtomId, AtomId), r2: (AtomId, AtomId)) -> bool {
    let s1 = BTreeSet::from([r1.0, r1.1]);
    let s2 = BTreeSet::from([r2.0, r2.1]);
    if !s1.is_disjoint(&s2) {
        return false;
    }
    let mut rails = Vec::new();
    for (_, b) in m.bonds() {
        let t1 = s1.contains(&b.tail) && s2.contains(&b.head);
        let t2 = s2.contains(&b.tail) && s1.contains(&b.head);
        if t1 || t2 {
            rails.push((b.tail, b.head));
        }
    }
    if rails.len() != 2 {
        return false;
    }
    let (x, y) = (rails[0], rails[1]);
    // Opposite directions across the two rungs.
    if s1.contains(&x.0) == s1.contains(&y.0) {
        return false;
    }
    // Vertex-disjoint rails: the four endpoints are all distinct.
    let ends: BTreeSet<AtomId> = [x.0, x.1, y.0, y.1].into();
    ends.len() == 4
}

/// Maximal chains in the rung adjacency graph, each a simple path (every rung
/// admits at most two chain partners, and a closed chain would form a
/// saturated component, which molecules exclude).
fn maximal_rung_paths(m: &Molecule) -> Vec<Vec<(AtomId, AtomId)>> {
    let rs = rungs(m);
    let n = rs.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if rungs_chain(m, rs[i], rs[j]) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut paths = Vec::new();
    for start in 0..n {
        if seen[start] || adj[start].len() > 1 {
            continue;
        }
        // Walk from one end of the path.
        let mut path = vec![start];
        seen[start] = true;
        let mut cur = start;
        loop {
            let next = adj[cur].iter().find(|&&j| !seen[j]).copied();
            match next {
                Some(j) => {
                    seen[j] = true;
                    path.push(j);
                    cur = j;
                }
                None => break,
            }
        }
        paths.push(path.into_iter().map(|i| rs[i]).collect());
    }
    paths
}

/// Maximal ladders (at least two rungs), oriented so the first rung carries
/// the smaller minimum atom id.
pub fn find_ladders(m: &Molecule) -> Vec<Ladder> {
    let mut out = Vec::new();
    for mut path in maximal_rung_paths(m) {
        if path.len() < 2 {
            continue;
        }
        if path.last().unwrap().0 < path[0].0 {
            path.reverse();
        }
        out.push(Ladder { rungs: path });
    }
    out.sort_by_key(|l| l.rungs[0]);
    out
}

/// Atoms outside the chain tied to both atoms of an end rung by exactly one
/// bond each, the two running in opposite directions.
fn joint_candidates(
    m: &Molecule,
    rung: (AtomId, AtomId),
    exclude: &BTreeSet<AtomId>,
) -> Vec<AtomId> {
    let mut out = Vec::new();
    for j in m.atom_ids() {
        if exclude.contains(&j) {
            continue;
        }
        let ba = m.bonds_between(j, rung.0);
        let bb = m.bonds_between(j, rung.1);
        if ba.len() != 1 || bb.len() != 1 {
            continue;
        }
        let out_a = m.bond(ba[0]).tail == j;
        let out_b = m.bond(bb[0]).tail == j;
        if out_a != out_b {
            out.push(j);
        }
    }
    out
}

/// Bad vines: type I (double-bond blocks) and type II (rung chains with a
/// joint at each end), every candidate checked against the block conditions.
/// Results are sorted by joints; each vine appears once.
pub fn find_vines(m: &Molecule) -> Vec<Vine> {
    let mut out = Vec::new();
    for (a, b) in rungs(m) {
        if let Some(block) = is_block(m, &BTreeSet::from([a, b])) {
            out.push(Vine {
                kind: VineKind::I,
                block,
                rungs: Vec::new(),
            });
        }
    }
    let mut seen_sets: BTreeSet<BTreeSet<AtomId>> = BTreeSet::new();
    for path in maximal_rung_paths(m) {
        let chain_atoms: BTreeSet<AtomId> =
            path.iter().flat_map(|&(a, b)| [a, b]).collect();
        let first = path[0];
        let last = *path.last().unwrap();
        for j1 in joint_candidates(m, first, &chain_atoms) {
            for j2 in joint_candidates(m, last, &chain_atoms) {
                if j1 == j2 {
                    continue;
                }
                let mut atoms = chain_atoms.clone();
                atoms.insert(j1);
                atoms.insert(j2);
                if !seen_sets.insert(atoms.clone()) {
                    continue;
                }
                let Some(block) = is_block(m, &atoms) else {
                    continue;
                };
                // Orient the chain from the smaller joint.
                let mut rungs = path.clone();
                if block.joints.0 == j2 {
                    rungs.reverse();
                }
                out.push(Vine {
                    kind: VineKind::II,
                    block,
                    rungs,
                });
            }
        }
    }
    out.sort_by(|x, y| x.block.joints.cmp(&y.block.joints).then(x.block.atoms.cmp(&y.block.atoms)));
    out
}

fn layer_of(m: &Molecule, a: AtomId) -> Result<u32> {
    m.atom(a)
        .layer
        .ok_or_else(|| Error::invalid("atom layers required for incoherency"))
}

/// Number of rungs whose two atoms sit in different layers.
pub fn ladder_incoherency(m: &Molecule, l: &Ladder) -> Result<usize> {
    let mut g = 0;
    for &(a, b) in &l.rungs {
        if layer_of(m, a)? != layer_of(m, b)? {
            g += 1;
        }
    }
    Ok(g)
}

/// Incoherency of a bad vine: its non-joint atoms split into the double-bond
/// pairs; count the split ones. Type I has no non-joint atoms.
pub fn vine_incoherency(m: &Molecule, v: &Vine) -> Result<usize> {
    match v.kind {
        VineKind::I => Ok(0),
        VineKind::II => {
            let mut g = 0;
            for &(a, b) in &v.rungs {
                if layer_of(m, a)? != layer_of(m, b)? {
                    g += 1;
                }
            }
            Ok(g)
        }
    }
}
