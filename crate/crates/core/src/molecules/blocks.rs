//! Blocks: connected atom groups in which every atom keeps all four bonds
//! inside the group except exactly two joints that keep one incoming and one
//! outgoing bond each. A block realizes in the source garden as either a
//! nested band between two comparable branching nodes (CL) or a pair of
//! disjoint bands (CN); CL blocks can be spliced out of the garden, which
//! contracts the block to a single atom in the molecule.

use super::graph::{Atom, AtomId, Molecule};
use crate::combinatorics::garden::{Garden, Loc};
use crate::combinatorics::tree::SignedTree;
use crate::error::{Error, Result};
use crate::sign::Sign;
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub atoms: BTreeSet<AtomId>,
    /// The two atoms with one in- and one out-bond inside the block, smaller
    /// id first.
    pub joints: (AtomId, AtomId),
    /// Number of bonds directly joining the two joints.
    pub sigma: u8,
}

/// Test a connected atom set for the block property and report joints and σ.
pub fn is_block(m: &Molecule, atoms: &BTreeSet<AtomId>) -> Option<Block> {
    if atoms.len() < 2 || !atoms.iter().all(|&a| m.has_atom(a)) {
        return None;
    }
    let mut joints = Vec::new();
    for &a in atoms {
        let (mut win, mut wout) = (0usize, 0usize);
        for id in m.incident(a) {
            let b = m.bond(id);
            if atoms.contains(&b.tail) && atoms.contains(&b.head) {
                if b.tail == a {
                    wout += 1;
                }
                if b.head == a {
                    win += 1;
                }
            }
        }
        match (win, wout) {
            (1, 1) => joints.push(a),
            (2, 2) => {}
            _ => return None,
        }
    }
    if joints.len() != 2 {
        return None;
    }
    // Induced subgraph must be connected.
    let start = *atoms.iter().next().unwrap();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for id in m.incident(v) {
            let b = m.bond(id);
            for w in [b.tail, b.head] {
                if atoms.contains(&w) && atoms.contains(&b.tail) && atoms.contains(&b.head)
                    && seen.insert(w)
                {
                    stack.push(w);
                }
            }
        }
    }
    if seen != *atoms {
        return None;
    }
    let sigma = m.bonds_between(joints[0], joints[1]).len() as u8;
    Some(Block {
        atoms: atoms.clone(),
        joints: (joints[0], joints[1]),
        sigma,
    })
}

/// All blocks of a small molecule by subset search (at most 16 atoms).
pub fn enumerate_blocks(m: &Molecule) -> Result<Vec<Block>> {
    let ids: Vec<AtomId> = m.atom_ids().collect();
    if ids.len() > 16 {
        return Err(Error::invalid("block enumeration is limited to 16 atoms"));
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << ids.len()) {
        if mask.count_ones() < 2 {
            continue;
        }
        let set: BTreeSet<AtomId> = ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &a)| a)
            .collect();
        if let Some(b) = is_block(m, &set) {
            out.push(b);
        }
    }
    Ok(out)
}

/// CL realization: the block spans the band between two comparable branching
/// nodes u1 (above) and u2 (below). u11 is the same-sign child of u1 whose
/// subtree stays out of the band; u21 (+) and u22 (−) are the two children of
/// u2 leading out of the block, u23 the remaining (same-sign) child whose
/// subtree closes up inside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClBlock {
    pub u1: Loc,
    pub u2: Loc,
    pub u11: Loc,
    pub u21: Loc,
    pub u22: Loc,
    pub u23: Loc,
    pub realization: BTreeSet<Loc>,
}

/// CN realization: two disjoint bands, one below each joint, with all leaves
/// paired across; u11 and u21 are the same-sign children whose subtrees stay
/// out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnBlock {
    pub u1: Loc,
    pub u2: Loc,
    pub u11: Loc,
    pub u21: Loc,
    pub realization: BTreeSet<Loc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockClass {
    Cl(ClBlock),
    Cn(CnBlock),
}

impl BlockClass {
    pub fn realization(&self) -> &BTreeSet<Loc> {
        match self {
            BlockClass::Cl(c) => &c.realization,
            BlockClass::Cn(c) => &c.realization,
        }
    }
}

fn desc_set(g: &Garden, l: Loc) -> BTreeSet<Loc> {
    g.tree(l.tree)
        .subtree_range(l.node)
        .map(|n| Loc::new(l.tree, n))
        .collect()
}

/// Same-sign (outer) children of a branching node.
fn outer_children(g: &Garden, l: Loc) -> [Loc; 2] {
    let ch = g.tree(l.tree).children(l.node).expect("branching node");
    [Loc::new(l.tree, ch[0]), Loc::new(l.tree, ch[2])]
}

/// The (+ child, − child, same-sign child) choices at a prospective lower
/// joint: the middle child's sign is forced, the two outer slots offer two
/// assignments.
fn lower_child_choices(g: &Garden, u2: Loc) -> [(Loc, Loc, Loc); 2] {
    let t = g.tree(u2.tree);
    let ch = t.children(u2.node).expect("branching node");
    let l = |n: usize| Loc::new(u2.tree, n);
    if t.sign_of(u2.node) == Sign::Plus {
        // slots (+,−,+): u22 is the middle; u21 one of the outers.
        [
            (l(ch[0]), l(ch[1]), l(ch[2])),
            (l(ch[2]), l(ch[1]), l(ch[0])),
        ]
    } else {
        // slots (−,+,−): u21 is the middle; u22 one of the outers.
        [
            (l(ch[1]), l(ch[0]), l(ch[2])),
            (l(ch[1]), l(ch[2]), l(ch[0])),
        ]
    }
}

fn realization_ok(
    g: &Garden,
    atom_nodes: &BTreeSet<Loc>,
    realization: &BTreeSet<Loc>,
) -> bool {
    let branching: BTreeSet<Loc> = realization
        .iter()
        .filter(|l| !g.tree(l.tree).is_leaf(l.node))
        .copied()
        .collect();
    if &branching != atom_nodes {
        return false;
    }
    realization.iter().all(|&l| {
        if !g.tree(l.tree).is_leaf(l.node) {
            return true;
        }
        let i = g.leaf_index(l).unwrap();
        let p = g.partner(i);
        p != i && realization.contains(&g.leaf_loc(p))
    })
}

/// Classify a block of the garden's molecule by reconstructing its garden
/// realization. Exactly one realization shape fits.
pub fn classify_block(g: &Garden, m: &Molecule, b: &Block) -> Result<BlockClass> {
    let node_of = |a: AtomId| -> Result<Loc> {
        m.atom(a)
            .node
            .ok_or_else(|| Error::invalid("block atom without garden provenance"))
    };
    let atom_nodes: BTreeSet<Loc> = b
        .atoms
        .iter()
        .map(|&a| node_of(a))
        .collect::<Result<_>>()?;
    let (ja, jb) = (node_of(b.joints.0)?, node_of(b.joints.1)?);
    let mut found: Vec<BlockClass> = Vec::new();

    // Nested candidates: ancestor joint on top.
    let comparable = |x: Loc, y: Loc| x.tree == y.tree && g.tree(x.tree).is_ancestor_or_self(x.node, y.node);
    for (u1, u2) in [(ja, jb), (jb, ja)] {
        if u1 == u2 || !comparable(u1, u2) {
            continue;
        }
        let t = g.tree(u1.tree);
        for u11 in outer_children(g, u1) {
            if t.is_ancestor_or_self(u11.node, u2.node) {
                continue;
            }
            for (u21, u22, u23) in lower_child_choices(g, u2) {
                let mut realization = desc_set(g, u1);
                for cut in [u11, u21, u22] {
                    for l in desc_set(g, cut) {
                        realization.remove(&l);
                    }
                }
                if realization_ok(g, &atom_nodes, &realization) {
                    found.push(BlockClass::Cl(ClBlock {
                        u1,
                        u2,
                        u11,
                        u21,
                        u22,
                        u23,
                        realization,
                    }));
                }
            }
        }
    }

    // Disjoint-band candidates; orient by preorder so each pair is tried once.
    let (u1, u2) = if ja <= jb { (ja, jb) } else { (jb, ja) };
    for u11 in outer_children(g, u1) {
        let cond1 = !comparable(u1, u2)
            || (u11.tree == u2.tree
                && g.tree(u11.tree).is_ancestor_or_self(u11.node, u2.node));
        if !cond1 {
            continue;
        }
        for u21 in outer_children(g, u2) {
            let cond2 = !comparable(u2, u1)
                || (u21.tree == u1.tree
                    && g.tree(u21.tree).is_ancestor_or_self(u21.node, u1.node));
            if !cond2 {
                continue;
            }
            let mut realization = BTreeSet::new();
            for (top, cut) in [(u1, u11), (u2, u21)] {
                let mut band = desc_set(g, top);
                for l in desc_set(g, cut) {
                    band.remove(&l);
                }
                realization.extend(band);
            }
            if realization_ok(g, &atom_nodes, &realization) {
                found.push(BlockClass::Cn(CnBlock {
                    u1,
                    u2,
                    u11,
                    u21,
                    realization,
                }));
            }
        }
    }

    found.dedup();
    match found.len() {
        1 => Ok(found.pop().unwrap()),
        0 => Err(Error::invalid("no garden realization fits the block")),
        n => Err(Error::invalid(format!(
            "ambiguous block realization ({n} candidates)"
        ))),
    }
}

pub struct Splice {
    pub garden: Garden,
    /// Surviving node of the original garden → its location in the spliced
    /// garden. Realization nodes other than u1 have no image.
    pub node_map: HashMap<Loc, Loc>,
}

/// Remove a CL block's band from the garden: the subtrees at u11, u21, u22
/// become the three children of u1, keeping u11's slot and placing u21/u22 by
/// sign. The block's atoms contract to the single atom at u1.
pub fn splice(g: &Garden, cl: &ClBlock) -> Result<Splice> {
    let t = g.tree(cl.u1.tree);
    let z1 = t.sign_of(cl.u1.node);
    let s11 = t
        .child_position(cl.u11.node)
        .ok_or_else(|| Error::invalid("u11 must be a child of u1"))?;
    if s11 == 1 {
        return Err(Error::invalid("u11 must be an outer child"));
    }
    // Slot assignment: middle slot takes the opposite-sign subtree.
    let (mid, outer) = match z1 {
        Sign::Plus => (cl.u22, cl.u21),
        Sign::Minus => (cl.u21, cl.u22),
    };
    let mut slots = [mid; 3];
    slots[s11] = cl.u11;
    slots[1] = mid;
    slots[if s11 == 0 { 2 } else { 0 }] = outer;
    let subs = slots.map(|l| t.subtree(l.node));
    let new_sub = SignedTree::graft(z1, [&subs[0], &subs[1], &subs[2]])?;
    let new_tree = t.replace_subtree(cl.u1.node, &new_sub)?;

    let old_range = t.subtree_range(cl.u1.node);
    let shrink = old_range.len() - new_sub.node_count();
    let mut node_map: HashMap<Loc, Loc> = HashMap::new();
    for (ti, tr) in g.trees().iter().enumerate() {
        if ti != cl.u1.tree {
            for n in 0..tr.node_count() {
                node_map.insert(Loc::new(ti, n), Loc::new(ti, n));
            }
        }
    }
    for n in 0..t.node_count() {
        if n < old_range.start {
            node_map.insert(Loc::new(cl.u1.tree, n), Loc::new(cl.u1.tree, n));
        } else if n >= old_range.end {
            node_map.insert(Loc::new(cl.u1.tree, n), Loc::new(cl.u1.tree, n - shrink));
        }
    }
    node_map.insert(cl.u1, cl.u1);
    let mut base = cl.u1.node + 1;
    for (slot, sub) in slots.iter().zip(&subs) {
        let r = t.subtree_range(slot.node);
        for (o, n) in r.enumerate() {
            node_map.insert(Loc::new(cl.u1.tree, n), Loc::new(cl.u1.tree, base + o));
        }
        base += sub.node_count();
    }

    let mut trees: Vec<SignedTree> = g.trees().to_vec();
    trees[cl.u1.tree] = new_tree;
    let mut new_global: HashMap<Loc, usize> = HashMap::new();
    let mut count = 0usize;
    for (ti, tr) in trees.iter().enumerate() {
        for n in tr.leaves() {
            new_global.insert(Loc::new(ti, n), count);
            count += 1;
        }
    }
    let mut pairing = vec![u32::MAX; count];
    for i in 0..g.leaf_count() {
        let Some(&nl) = node_map.get(&g.leaf_loc(i)) else {
            continue;
        };
        let pl = g.leaf_loc(g.partner(i));
        let npl = *node_map
            .get(&pl)
            .ok_or_else(|| Error::invalid("surviving leaf paired into the removed band"))?;
        pairing[new_global[&nl]] = new_global[&npl] as u32;
    }
    let garden = Garden::new(trees, pairing)?;
    Ok(Splice { garden, node_map })
}

/// Contract a classified CL block in the molecule itself: merge its atoms to
/// one atom standing at u1.
pub fn contract_block(m: &Molecule, b: &Block, cl: &ClBlock) -> Result<(Molecule, AtomId)> {
    m.merge_atoms(&b.atoms, Atom::at(cl.u1))
}
