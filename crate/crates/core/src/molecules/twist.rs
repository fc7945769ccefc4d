//! Garden-side classification of bad vines and the unit twist. A twist moves
//! the branching node 𝔲₂ of a vine to the slot of the leaf 𝔲₀ (the pair
//! partner of its same-sign child 𝔲₂₃), flipping its sign and swapping its
//! two outer subtrees; the vacated slot keeps a leaf paired with the new
//! child. The molecule is unchanged as a directed graph.

use super::blocks::{classify_block, splice, BlockClass, ClBlock, CnBlock, Splice};
use super::graph::Molecule;
use super::vines::{Vine, VineKind};
use crate::combinatorics::garden::{Garden, Loc};
use crate::combinatorics::tree::SignedTree;
use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VineCase {
    Ia,
    Ib,
    IIa,
    IIb,
    IIc,
    IId,
    IIe,
}

impl VineCase {
    /// What a unit twist turns this case into.
    pub fn twisted(self) -> VineCase {
        match self {
            VineCase::Ia => VineCase::Ib,
            VineCase::Ib => VineCase::Ia,
            VineCase::IIa => VineCase::IIb,
            VineCase::IIb => VineCase::IIa,
            VineCase::IIc => VineCase::IId,
            VineCase::IId => VineCase::IIc,
            VineCase::IIe => VineCase::IIe,
        }
    }

    /// Twistable cases: bad vines except IIe.
    pub fn is_core(self) -> bool {
        self != VineCase::IIe
    }
}

#[derive(Clone, Debug)]
pub struct ClassifiedVine {
    pub case: VineCase,
    pub cl: ClBlock,
    /// Pair partner of 𝔲₂₃ (absent for IIe, where 𝔲₂₃ is branching).
    pub u0: Option<Loc>,
    /// Nodes of the double-bond pair next to 𝔲₂ (type II only).
    pub u3: Option<Loc>,
    pub u4: Option<Loc>,
}

#[derive(Clone, Debug)]
pub enum VineClass {
    Cl(ClassifiedVine),
    Cn(CnBlock),
}

/// Work out how a bad vine sits in its garden: nested (CL) with one of the
/// six local shapes, or disjoint (CN).
pub fn classify_vine(g: &Garden, m: &Molecule, v: &Vine) -> Result<VineClass> {
    let cl = match classify_block(g, m, &v.block)? {
        BlockClass::Cn(cn) => return Ok(VineClass::Cn(cn)),
        BlockClass::Cl(cl) => cl,
    };
    let t = g.tree(cl.u2.tree);
    match v.kind {
        VineKind::I => {
            if !t.is_leaf(cl.u23.node) {
                return Err(Error::invalid("type-I vine with branching third child"));
            }
            if t.parent(cl.u2.node) != Some(cl.u1.node) {
                return Err(Error::invalid("type-I vine joints must be parent and child"));
            }
            let u0 = partner_loc(g, cl.u23)?;
            if t.parent(u0.node) != Some(cl.u1.node) {
                return Err(Error::invalid("type-I closing pair must return to the top joint"));
            }
            let p2 = t.child_position(cl.u2.node).unwrap();
            let p0 = t.child_position(u0.node).unwrap();
            let case = match (p2, p0) {
                (0 | 2, 1) => VineCase::Ia,
                (1, 0 | 2) => VineCase::Ib,
                _ => return Err(Error::invalid("type-I slots inconsistent")),
            };
            Ok(VineClass::Cl(ClassifiedVine {
                case,
                cl,
                u0: Some(u0),
                u3: None,
                u4: None,
            }))
        }
        VineKind::II => {
            // The rung next to the lower joint.
            let v2 = m
                .atom_by_node(cl.u2)
                .ok_or_else(|| Error::invalid("no atom at u2"))?;
            let rung = if v.block.joints.0 == v2 {
                v.rungs[0]
            } else if v.block.joints.1 == v2 {
                *v.rungs.last().unwrap()
            } else {
                return Err(Error::invalid("u2 is not a joint of the vine"));
            };
            let na = m.atom(rung.0).node.unwrap();
            let nb = m.atom(rung.1).node.unwrap();
            if !t.is_leaf(cl.u23.node) {
                // The same-sign child is itself the nearer rung node.
                let (u3, u4) = if cl.u23 == na {
                    (nb, na)
                } else if cl.u23 == nb {
                    (na, nb)
                } else {
                    return Err(Error::invalid("branching third child is not a rung node"));
                };
                return Ok(VineClass::Cl(ClassifiedVine {
                    case: VineCase::IIe,
                    cl,
                    u0: None,
                    u3: Some(u3),
                    u4: Some(u4),
                }));
            }
            let u0 = partner_loc(g, cl.u23)?;
            let parent2 = Loc::new(
                cl.u2.tree,
                t.parent(cl.u2.node)
                    .ok_or_else(|| Error::invalid("lower joint cannot be a root"))?,
            );
            let (p, o) = if parent2 == na {
                (na, nb)
            } else if parent2 == nb {
                (nb, na)
            } else {
                return Err(Error::invalid("u2 must hang from the adjacent rung"));
            };
            if t.parent(u0.node) != Some(o.node) {
                return Err(Error::invalid("closing pair must return to the far rung node"));
            }
            let (case, u3, u4) = if t.parent(o.node) == Some(p.node) {
                (VineCase::IId, p, o)
            } else if t.parent(p.node) == Some(o.node) {
                (VineCase::IIc, o, p)
            } else {
                // Incomparable rung nodes: name them by preorder, the earlier
                // one is u3; the case is read off from which one carries u2.
                let (first, second) = if na < nb { (na, nb) } else { (nb, na) };
                if p == second {
                    (VineCase::IIa, first, second)
                } else {
                    (VineCase::IIb, first, second)
                }
            };
            Ok(VineClass::Cl(ClassifiedVine {
                case,
                cl,
                u0: Some(u0),
                u3: Some(u3),
                u4: Some(u4),
            }))
        }
    }
}

fn partner_loc(g: &Garden, leaf: Loc) -> Result<Loc> {
    let i = g
        .leaf_index(leaf)
        .ok_or_else(|| Error::invalid("not a leaf"))?;
    let p = g.partner(i);
    if p == i {
        return Err(Error::invalid("lone leaf has no partner"));
    }
    Ok(g.leaf_loc(p))
}

#[derive(Clone, Debug)]
pub struct Twist {
    pub garden: Garden,
    /// Every node of the original garden → its location afterwards. Signs
    /// flip exactly at 𝔲₂, 𝔲₂₃ and 𝔲₀.
    pub node_map: HashMap<Loc, Loc>,
    pub case_before: VineCase,
}

/// Unit twist at a core CL vine.
pub fn twist(g: &Garden, m: &Molecule, v: &Vine) -> Result<Twist> {
    let cv = match classify_vine(g, m, v)? {
        VineClass::Cl(cv) => cv,
        VineClass::Cn(_) => return Err(Error::invalid("cannot twist a CN vine")),
    };
    if !cv.case.is_core() {
        return Err(Error::invalid("cannot twist a non-core vine"));
    }
    twist_classified(g, &cv)
}

pub fn twist_classified(g: &Garden, cv: &ClassifiedVine) -> Result<Twist> {
    let cl = &cv.cl;
    let u0 = cv.u0.expect("core vines have a closing leaf pair");
    let ti = cl.u2.tree;
    let t = g.tree(ti);
    let z2 = t.sign_of(cl.u2.node);

    // Rebuild the subtree of u2 with flipped root: u23's slot keeps a fresh
    // leaf, the outer subtrees trade slots (their signs stay, the slot signs
    // flipped under them).
    let p21 = t.child_position(cl.u21.node).unwrap();
    let p22 = t.child_position(cl.u22.node).unwrap();
    let p23 = t.child_position(cl.u23.node).unwrap();
    let fresh = SignedTree::trivial(-z2);
    let sub21 = t.subtree(cl.u21.node);
    let sub22 = t.subtree(cl.u22.node);
    let mut by_slot: [&SignedTree; 3] = [&fresh; 3];
    by_slot[p23] = &fresh;
    by_slot[p22] = &sub21;
    by_slot[p21] = &sub22;
    let sub_new = SignedTree::graft(-z2, by_slot)?;

    let r2 = t.subtree_range(cl.u2.node);
    let len = r2.len();
    debug_assert_eq!(sub_new.node_count(), len);
    let s0 = u0.node;
    let vacated = SignedTree::trivial(z2);
    let new_tree = if s0 < r2.start {
        let step = t.replace_subtree(cl.u2.node, &vacated)?;
        step.replace_subtree(s0, &sub_new)?
    } else if s0 >= r2.end {
        let step = t.replace_subtree(s0, &sub_new)?;
        step.replace_subtree(cl.u2.node, &vacated)?
    } else {
        return Err(Error::invalid("closing leaf inside the moved subtree"));
    };

    // Node map: the new subtree root lands where u0 was, the vacated slot
    // keeps a leaf standing for u0, everything else shifts by arithmetic.
    let mut node_map: HashMap<Loc, Loc> = HashMap::new();
    for (k, tr) in g.trees().iter().enumerate() {
        if k != ti {
            for n in 0..tr.node_count() {
                node_map.insert(Loc::new(k, n), Loc::new(k, n));
            }
        }
    }
    let (new_root, w) = if s0 < r2.start {
        (s0, r2.start + len - 1)
    } else {
        (s0 - (len - 1), r2.start)
    };
    for n in 0..t.node_count() {
        if r2.contains(&n) || n == s0 {
            continue;
        }
        let shifted = if s0 < r2.start {
            if n > s0 && n < r2.start {
                n + (len - 1)
            } else {
                n
            }
        } else if n >= r2.end && n < s0 {
            n - (len - 1)
        } else {
            n
        };
        node_map.insert(Loc::new(ti, n), Loc::new(ti, shifted));
    }
    node_map.insert(cl.u2, Loc::new(ti, new_root));
    node_map.insert(u0, Loc::new(ti, w));
    // Offsets of the three child blocks inside old and new subtrees.
    let new_offsets = {
        let mut off = [0usize; 3];
        let mut acc = 1usize;
        for (s, sub) in by_slot.iter().enumerate() {
            off[s] = acc;
            acc += sub.node_count();
        }
        off
    };
    node_map.insert(cl.u23, Loc::new(ti, new_root + new_offsets[p23]));
    for (c, new_slot) in [(cl.u21, p22), (cl.u22, p21)] {
        for (o, n) in t.subtree_range(c.node).enumerate() {
            node_map.insert(
                Loc::new(ti, n),
                Loc::new(ti, new_root + new_offsets[new_slot] + o),
            );
        }
    }

    let mut trees: Vec<SignedTree> = g.trees().to_vec();
    trees[ti] = new_tree;
    let mut new_global: HashMap<Loc, usize> = HashMap::new();
    let mut count = 0usize;
    for (k, tr) in trees.iter().enumerate() {
        for n in tr.leaves() {
            new_global.insert(Loc::new(k, n), count);
            count += 1;
        }
    }
    debug_assert_eq!(count, g.leaf_count());
    let mut pairing = vec![u32::MAX; count];
    for i in 0..g.leaf_count() {
        let nl = node_map[&g.leaf_loc(i)];
        let np = node_map[&g.leaf_loc(g.partner(i))];
        pairing[new_global[&nl]] = new_global[&np] as u32;
    }
    let garden = Garden::new(trees, pairing)?;
    Ok(Twist {
        garden,
        node_map,
        case_before: cv.case,
    })
}

/// Splice the vine out of the garden (it is a CL block).
pub fn splice_vine(g: &Garden, cv: &ClassifiedVine) -> Result<Splice> {
    splice(g, &cv.cl)
}
