//! Directed multigraphs of atoms and bonds.
//!
//! Atoms stand for branching nodes of a garden; bonds come in two kinds,
//! parent-child and leaf-pair, and carry the garden nodes whose momenta they
//! transport. Atom and bond ids are stable: removal never renumbers.

use crate::combinatorics::garden::Loc;
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub type AtomId = u32;
pub type BondId = u32;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum AtomMark {
    #[default]
    None,
    /// Split off without creating a new component.
    Alpha,
    /// Split off creating a new component.
    Beta,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Atom {
    /// Branching node this atom stands for, when built from a garden.
    pub node: Option<Loc>,
    pub layer: Option<u32>,
    pub mark: AtomMark,
}

impl Atom {
    pub fn at(node: Loc) -> Atom {
        Atom {
            node: Some(node),
            ..Atom::default()
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BondLabel {
    /// Parent-child bond; records which endpoint is the parent (P) side.
    Pc { p_at_tail: bool },
    /// Leaf-pair bond.
    Lp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bond {
    pub tail: AtomId,
    pub head: AtomId,
    pub label: BondLabel,
    /// Garden node carrying the bond momentum as read at the tail endpoint:
    /// the child branching node for parent-child bonds (same at both ends),
    /// the endpoint's own paired leaf for leaf-pair bonds.
    pub m_tail: Option<Loc>,
    /// Same, read at the head endpoint.
    pub m_head: Option<Loc>,
}

impl Bond {
    pub fn is_self_loop(&self) -> bool {
        self.tail == self.head
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Molecule {
    atoms: BTreeMap<AtomId, Atom>,
    bonds: BTreeMap<BondId, Bond>,
    next_atom: AtomId,
    next_bond: BondId,
}

impl Molecule {
    pub fn new() -> Molecule {
        Molecule::default()
    }

    pub fn add_atom(&mut self, a: Atom) -> AtomId {
        let id = self.next_atom;
        self.next_atom += 1;
        self.atoms.insert(id, a);
        id
    }

    pub fn add_bond(&mut self, b: Bond) -> Result<BondId> {
        if !self.atoms.contains_key(&b.tail) || !self.atoms.contains_key(&b.head) {
            return Err(Error::invalid("bond endpoint does not exist"));
        }
        let id = self.next_bond;
        self.next_bond += 1;
        self.bonds.insert(id, b);
        Ok(id)
    }

    pub fn remove_bond(&mut self, id: BondId) -> Option<Bond> {
        self.bonds.remove(&id)
    }

    /// Remove an atom; all its bonds must have been removed or re-pointed.
    pub fn remove_atom(&mut self, id: AtomId) -> Result<Atom> {
        if self.bonds.values().any(|b| b.tail == id || b.head == id) {
            return Err(Error::invalid("cannot remove an atom with bonds"));
        }
        self.atoms
            .remove(&id)
            .ok_or_else(|| Error::invalid("no such atom"))
    }

    pub fn atom(&self, id: AtomId) -> &Atom {
        &self.atoms[&id]
    }

    pub fn atom_mut(&mut self, id: AtomId) -> &mut Atom {
        self.atoms.get_mut(&id).expect("no such atom")
    }

    pub fn bond(&self, id: BondId) -> &Bond {
        &self.bonds[&id]
    }

    pub fn bond_mut(&mut self, id: BondId) -> &mut Bond {
        self.bonds.get_mut(&id).expect("no such bond")
    }

    pub fn has_atom(&self, id: AtomId) -> bool {
        self.atoms.contains_key(&id)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (AtomId, &Atom)> {
        self.atoms.iter().map(|(&id, a)| (id, a))
    }

    pub fn bonds(&self) -> impl Iterator<Item = (BondId, &Bond)> {
        self.bonds.iter().map(|(&id, b)| (id, b))
    }

    pub fn atom_ids(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.atoms.keys().copied()
    }

    pub fn bond_ids(&self) -> impl Iterator<Item = BondId> + '_ {
        self.bonds.keys().copied()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// Bonds incident to `a`, each listed once (self-loops included once).
    pub fn incident(&self, a: AtomId) -> Vec<BondId> {
        self.bonds
            .iter()
            .filter(|(_, b)| b.tail == a || b.head == a)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Out-degree; a self-loop contributes one.
    pub fn out_degree(&self, a: AtomId) -> usize {
        self.bonds.values().filter(|b| b.tail == a).count()
    }

    /// In-degree; a self-loop contributes one.
    pub fn in_degree(&self, a: AtomId) -> usize {
        self.bonds.values().filter(|b| b.head == a).count()
    }

    /// Total degree; a self-loop contributes two.
    pub fn degree(&self, a: AtomId) -> usize {
        self.out_degree(a) + self.in_degree(a)
    }

    /// Bonds with one endpoint at `a` and the other at `b` (self-loops when
    /// `a == b`).
    pub fn bonds_between(&self, a: AtomId, b: AtomId) -> Vec<BondId> {
        self.bonds
            .iter()
            .filter(|(_, bd)| {
                (bd.tail == a && bd.head == b) || (bd.tail == b && bd.head == a && a != b)
            })
            .map(|(&id, _)| id)
            .collect()
    }

    /// Connected components (bond direction ignored), each sorted.
    pub fn components(&self) -> Vec<BTreeSet<AtomId>> {
        let mut adj: BTreeMap<AtomId, Vec<AtomId>> =
            self.atoms.keys().map(|&a| (a, Vec::new())).collect();
        for b in self.bonds.values() {
            adj.get_mut(&b.tail).unwrap().push(b.head);
            adj.get_mut(&b.head).unwrap().push(b.tail);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in self.atoms.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                if !seen.insert(v) {
                    continue;
                }
                comp.insert(v);
                stack.extend(adj[&v].iter().copied());
            }
            out.push(comp);
        }
        out
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    /// Independent circuits: E − V + (number of components).
    pub fn circuit_rank(&self) -> usize {
        self.bond_count() + self.component_count() - self.atom_count()
    }

    /// Structural invariants of garden molecules: every atom has in- and
    /// out-degree at most 2, and no component is saturated (all degrees 4).
    pub fn validate(&self) -> Result<()> {
        for &a in self.atoms.keys() {
            if self.out_degree(a) > 2 || self.in_degree(a) > 2 {
                return Err(Error::invalid(format!(
                    "atom {a} exceeds in/out degree 2"
                )));
            }
        }
        for comp in self.components() {
            if !comp.is_empty() && comp.iter().all(|&a| self.degree(a) == 4) {
                return Err(Error::invalid("saturated component"));
            }
        }
        Ok(())
    }

    pub fn atom_by_node(&self, node: Loc) -> Option<AtomId> {
        self.atoms
            .iter()
            .find(|(_, a)| a.node == Some(node))
            .map(|(&id, _)| id)
    }

    /// Contract a group of atoms to a single fresh atom carrying `merged`:
    /// bonds inside the group disappear, bonds leaving it keep their ids,
    /// labels and momentum nodes. Returns the contracted molecule and the
    /// fresh atom's id.
    pub fn merge_atoms(&self, group: &BTreeSet<AtomId>, merged: Atom) -> Result<(Molecule, AtomId)> {
        if !group.iter().all(|a| self.atoms.contains_key(a)) {
            return Err(Error::invalid("group contains unknown atoms"));
        }
        let mut out = Molecule {
            atoms: BTreeMap::new(),
            bonds: BTreeMap::new(),
            next_atom: self.next_atom,
            next_bond: self.next_bond,
        };
        for (&id, a) in &self.atoms {
            if !group.contains(&id) {
                out.atoms.insert(id, a.clone());
            }
        }
        let rep = out.next_atom;
        out.next_atom += 1;
        out.atoms.insert(rep, merged);
        for (&id, b) in &self.bonds {
            let t_in = group.contains(&b.tail);
            let h_in = group.contains(&b.head);
            if t_in && h_in {
                continue;
            }
            let mut nb = b.clone();
            if t_in {
                nb.tail = rep;
            }
            if h_in {
                nb.head = rep;
            }
            out.bonds.insert(id, nb);
        }
        Ok((out, rep))
    }

    /// Graphviz text: atoms as `a<id>` with optional `layer`/`mark`
    /// attributes, bonds with `label` (PC or LP) and, for parent-child bonds,
    /// `p` naming the parent endpoint (tail or head).
    pub fn export_dot(&self) -> String {
        let mut s = String::from("digraph molecule {\n");
        for (&id, a) in &self.atoms {
            let mut attrs = Vec::new();
            if let Some(l) = a.layer {
                attrs.push(format!("layer={l}"));
            }
            match a.mark {
                AtomMark::None => {}
                AtomMark::Alpha => attrs.push("mark=alpha".into()),
                AtomMark::Beta => attrs.push("mark=beta".into()),
            }
            if attrs.is_empty() {
                let _ = writeln!(s, "  a{id};");
            } else {
                let _ = writeln!(s, "  a{id} [{}];", attrs.join(", "));
            }
        }
        for b in self.bonds.values() {
            let attrs = match b.label {
                BondLabel::Pc { p_at_tail: true } => "label=\"PC\", p=tail".to_string(),
                BondLabel::Pc { p_at_tail: false } => "label=\"PC\", p=head".to_string(),
                BondLabel::Lp => "label=\"LP\"".to_string(),
            };
            let _ = writeln!(s, "  a{} -> a{} [{}];", b.tail, b.head, attrs);
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> (Molecule, Vec<AtomId>) {
        let mut m = Molecule::new();
        let a: Vec<AtomId> = (0..3)
            .map(|i| m.add_atom(Atom::at(Loc::new(0, i))))
            .collect();
        m.add_bond(Bond {
            tail: a[0],
            head: a[1],
            label: BondLabel::Lp,
            m_tail: None,
            m_head: None,
        })
        .unwrap();
        m.add_bond(Bond {
            tail: a[1],
            head: a[2],
            label: BondLabel::Lp,
            m_tail: None,
            m_head: None,
        })
        .unwrap();
        m.add_bond(Bond {
            tail: a[2],
            head: a[0],
            label: BondLabel::Lp,
            m_tail: None,
            m_head: None,
        })
        .unwrap();
        (m, a)
    }

    #[test]
    fn degrees_components_and_rank() {
        let (mut m, a) = triangle();
        assert_eq!(m.degree(a[0]), 2);
        assert_eq!(m.out_degree(a[0]), 1);
        assert_eq!(m.component_count(), 1);
        assert_eq!(m.circuit_rank(), 1);
        let lone = m.add_atom(Atom::default());
        assert_eq!(m.component_count(), 2);
        assert_eq!(m.circuit_rank(), 1);
        // Self-loop: one in, one out, degree two.
        m.add_bond(Bond {
            tail: lone,
            head: lone,
            label: BondLabel::Lp,
            m_tail: None,
            m_head: None,
        })
        .unwrap();
        assert_eq!(m.degree(lone), 2);
        assert_eq!(m.in_degree(lone), 1);
        assert_eq!(m.circuit_rank(), 2);
        assert_eq!(m.bonds_between(lone, lone).len(), 1);
        assert_eq!(m.bonds_between(a[0], a[1]).len(), 1);
        m.validate().unwrap();
    }

    #[test]
    fn validate_rejects_saturated_component_and_high_degree() {
        let (mut m, a) = triangle();
        // Double every edge of the triangle: all atoms reach degree 4 and the
        // component saturates.
        for (t, h) in [(a[1], a[0]), (a[2], a[1]), (a[0], a[2])] {
            m.add_bond(Bond {
                tail: t,
                head: h,
                label: BondLabel::Lp,
                m_tail: None,
                m_head: None,
            })
            .unwrap();
        }
        assert!(m.validate().is_err());
        // Three outgoing bonds at one atom.
        let mut m2 = Molecule::new();
        let x = m2.add_atom(Atom::default());
        let y = m2.add_atom(Atom::default());
        for _ in 0..3 {
            m2.add_bond(Bond {
                tail: x,
                head: y,
                label: BondLabel::Lp,
                m_tail: None,
                m_head: None,
            })
            .unwrap();
        }
        assert!(m2.validate().is_err());
    }

    #[test]
    fn merge_contracts_internal_bonds_and_keeps_external_ids() {
        let (mut m, a) = triangle();
        let d = m.add_atom(Atom::default());
        let ext = m
            .add_bond(Bond {
                tail: a[0],
                head: d,
                label: BondLabel::Pc { p_at_tail: true },
                m_tail: Some(Loc::new(0, 5)),
                m_head: Some(Loc::new(0, 5)),
            })
            .unwrap();
        let group: BTreeSet<AtomId> = [a[0], a[1]].into_iter().collect();
        let (merged, rep) = m.merge_atoms(&group, Atom::default()).unwrap();
        assert_eq!(merged.atom_count(), 3);
        // a0-a1 bond gone; a1-a2 and a2-a0 re-pointed; external bond kept.
        assert_eq!(merged.bond_count(), 3);
        assert_eq!(merged.bond(ext).tail, rep);
        assert_eq!(merged.bond(ext).head, d);
        assert_eq!(merged.bond(ext).m_tail, Some(Loc::new(0, 5)));
        assert_eq!(merged.bonds_between(rep, a[2]).len(), 2);
        // Removing an atom requires detaching its bonds first.
        assert!(m.remove_atom(a[0]).is_err());
    }

    #[test]
    fn dot_export_lists_attributes() {
        let mut m = Molecule::new();
        let x = m.add_atom(Atom {
            node: None,
            layer: Some(3),
            mark: AtomMark::Alpha,
        });
        let y = m.add_atom(Atom::default());
        m.add_bond(Bond {
            tail: x,
            head: y,
            label: BondLabel::Pc { p_at_tail: false },
            m_tail: None,
            m_head: None,
        })
        .unwrap();
        let dot = m.export_dot();
        assert!(dot.contains("a0 [layer=3, mark=alpha];"));
        assert!(dot.contains("a0 -> a1 [label=\"PC\", p=head];"));
    }
}
