//! Build the molecule of a garden.
//!
//! One atom per branching node. Every non-root branching node contributes a
//! parent-child bond whose direction follows the node's sign (into a − node,
//! out of a + node), and every leaf pair whose two leaves both hang from
//! branching nodes contributes a leaf-pair bond directed from the − leaf's
//! atom to the + leaf's atom. Pairs touching a trivial tree's root leaf and
//! the lone leaf produce no bond.

use super::graph::{Atom, Bond, BondLabel, Molecule};
use crate::combinatorics::garden::{Garden, Loc};
use crate::combinatorics::layering::Layering;
use crate::error::Result;
use crate::sign::Sign;
use std::collections::HashMap;

pub fn build_molecule(g: &Garden, layering: Option<&Layering>) -> Result<Molecule> {
    let mut m = Molecule::new();
    let mut atom_of: HashMap<Loc, u32> = HashMap::new();
    for (ti, t) in g.trees().iter().enumerate() {
        for n in t.branching_nodes() {
            let loc = Loc::new(ti, n);
            let mut a = Atom::at(loc);
            if let Some(lay) = layering {
                a.layer = Some(lay.of(loc));
            }
            atom_of.insert(loc, m.add_atom(a));
        }
    }
    for (ti, t) in g.trees().iter().enumerate() {
        for n in t.branching_nodes() {
            let Some(p) = t.parent(n) else {
                continue;
            };
            let w = Loc::new(ti, n);
            let (aw, ap) = (atom_of[&w], atom_of[&Loc::new(ti, p)]);
            let (tail, head, p_at_tail) = if t.sign_of(n) == Sign::Minus {
                (ap, aw, true)
            } else {
                (aw, ap, false)
            };
            m.add_bond(Bond {
                tail,
                head,
                label: BondLabel::Pc { p_at_tail },
                m_tail: Some(w),
                m_head: Some(w),
            })?;
        }
    }
    for (lp, lm) in g.pairs_signed() {
        let locp = g.leaf_loc(lp);
        let locm = g.leaf_loc(lm);
        let (Some(pp), Some(pm)) = (
            g.tree(locp.tree).parent(locp.node),
            g.tree(locm.tree).parent(locm.node),
        ) else {
            continue; // a root leaf of a trivial tree: no bond
        };
        m.add_bond(Bond {
            tail: atom_of[&Loc::new(locm.tree, pm)],
            head: atom_of[&Loc::new(locp.tree, pp)],
            label: BondLabel::Lp,
            m_tail: Some(locm),
            m_head: Some(locp),
        })?;
    }
    m.validate()?;
    Ok(m)
}
