//! Cutting an atom along two opposite bonds: the atom splits into a half
//! carrying just those two bonds and a half carrying the rest, both marked
//! by whether the split created a new component (β) or not (α). The
//! quantity 4·atoms − 2·bonds − 2·marked is invariant under cuts.

use super::graph::{Atom, AtomId, AtomMark, BondId, Molecule};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CutOutcome {
    pub molecule: Molecule,
    /// Fresh atom carrying the two selected bonds.
    pub v1: AtomId,
    /// The original atom id, keeping every other bond (self-loops included).
    pub v2: AtomId,
    /// True when the cut created a new connected component.
    pub beta: bool,
}

/// Split atom `v` along bonds `l1`, `l2`, which must be distinct non-loop
/// bonds at `v` of opposite directions. `v` must not carry a mark already.
pub fn cut(m: &Molecule, v: AtomId, l1: BondId, l2: BondId) -> Result<CutOutcome> {
    if !m.has_atom(v) {
        return Err(Error::invalid("no such atom"));
    }
    if m.atom(v).mark != AtomMark::None {
        return Err(Error::invalid("atom is already a cut half"));
    }
    if l1 == l2 {
        return Err(Error::invalid("cut needs two distinct bonds"));
    }
    let (b1, b2) = (m.bond(l1), m.bond(l2));
    if b1.is_self_loop() || b2.is_self_loop() {
        return Err(Error::invalid("cut bonds must not be self-loops"));
    }
    let at_v_opposite = (b1.tail == v && b2.head == v) || (b2.tail == v && b1.head == v);
    if !at_v_opposite {
        return Err(Error::invalid(
            "cut bonds must meet at the atom with opposite directions",
        ));
    }

    let before = m.component_count();
    let mut out = m.clone();
    let half = Atom {
        node: m.atom(v).node,
        layer: m.atom(v).layer,
        mark: AtomMark::None,
    };
    let v1 = out.add_atom(half);
    for l in [l1, l2] {
        let b = out.bond_mut(l);
        if b.tail == v {
            b.tail = v1;
        } else {
            b.head = v1;
        }
    }
    let beta = out.component_count() > before;
    let mark = if beta { AtomMark::Beta } else { AtomMark::Alpha };
    out.atom_mut(v1).mark = mark;
    out.atom_mut(v).mark = mark;
    Ok(CutOutcome {
        molecule: out,
        v1,
        v2: v,
        beta,
    })
}

/// 4·atoms − 2·bonds − 2·(α- and β-marked atoms); cuts leave it unchanged.
pub fn cut_invariant(m: &Molecule) -> i64 {
    let marked = m
        .atoms()
        .filter(|(_, a)| a.mark != AtomMark::None)
        .count();
    4 * m.atom_count() as i64 - 2 * m.bond_count() as i64 - 2 * marked as i64
}

/// Every admissible cut at `v`: choices of one outgoing and one incoming
/// non-loop bond.
pub fn cut_choices(m: &Molecule, v: AtomId) -> Vec<(BondId, BondId)> {
    if m.atom(v).mark != AtomMark::None {
        return Vec::new();
    }
    let inc = m.incident(v);
    let outs: Vec<BondId> = inc
        .iter()
        .copied()
        .filter(|&id| !m.bond(id).is_self_loop() && m.bond(id).tail == v)
        .collect();
    let ins: Vec<BondId> = inc
        .iter()
        .copied()
        .filter(|&id| !m.bond(id).is_self_loop() && m.bond(id).head == v)
        .collect();
    let mut res = Vec::new();
    for &o in &outs {
        for &i in &ins {
            res.push((o, i));
        }
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::garden::enumerate_couples;
    use crate::molecules::build::build_molecule;
    use crate::molecules::graph::{Bond, BondLabel};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn lp(tail: AtomId, head: AtomId) -> Bond {
        Bond {
            tail,
            head,
            label: BondLabel::Lp,
            m_tail: None,
            m_head: None,
        }
    }

    #[test]
    fn path_midpoint_cut_isolates_and_marks_beta() {
        let mut m = Molecule::new();
        let a = m.add_atom(Atom::default());
        let b = m.add_atom(Atom::default());
        let c = m.add_atom(Atom::default());
        let ab = m.add_bond(lp(a, b)).unwrap();
        let bc = m.add_bond(lp(b, c)).unwrap();
        let out = cut(&m, b, bc, ab).unwrap();
        assert!(out.beta);
        assert_eq!(out.molecule.degree(out.v2), 0, "old half is isolated");
        assert_eq!(out.molecule.degree(out.v1), 2);
        assert_eq!(out.molecule.atom(out.v1).mark, AtomMark::Beta);
        assert_eq!(out.molecule.atom(out.v2).mark, AtomMark::Beta);
        assert_eq!(cut_invariant(&out.molecule), cut_invariant(&m));
        // A marked half cannot be cut again.
        assert!(cut(&out.molecule, out.v1, ab, bc).is_err());
    }

    #[test]
    fn cycle_backed_cut_marks_alpha() {
        // a=b double cycle, a=c double cycle, plus b→c keeping the two
        // cycles attached when a is split.
        let mut m = Molecule::new();
        let a = m.add_atom(Atom::default());
        let b = m.add_atom(Atom::default());
        let c = m.add_atom(Atom::default());
        let ab = m.add_bond(lp(a, b)).unwrap();
        let ba = m.add_bond(lp(b, a)).unwrap();
        let ac = m.add_bond(lp(a, c)).unwrap();
        let ca = m.add_bond(lp(c, a)).unwrap();
        m.add_bond(lp(b, c)).unwrap();
        let out = cut(&m, a, ab, ba).unwrap();
        assert!(!out.beta);
        assert_eq!(out.molecule.component_count(), 1);
        assert_eq!(out.molecule.atom(out.v1).mark, AtomMark::Alpha);
        assert_eq!(cut_invariant(&out.molecule), cut_invariant(&m));
        let _ = (ac, ca);
        // Without the b→c tether, splitting off the a=b cycle separates it
        // from the a=c cycle.
        let mut m2 = Molecule::new();
        let a = m2.add_atom(Atom::default());
        let b = m2.add_atom(Atom::default());
        let c = m2.add_atom(Atom::default());
        let ab = m2.add_bond(lp(a, b)).unwrap();
        let ba = m2.add_bond(lp(b, a)).unwrap();
        m2.add_bond(lp(a, c)).unwrap();
        m2.add_bond(lp(c, a)).unwrap();
        let out2 = cut(&m2, a, ab, ba).unwrap();
        assert!(out2.beta);
        assert_eq!(out2.molecule.component_count(), 2);
    }

    #[test]
    fn rejects_loops_same_direction_and_remote_bonds() {
        let mut m = Molecule::new();
        let a = m.add_atom(Atom::default());
        let b = m.add_atom(Atom::default());
        let c = m.add_atom(Atom::default());
        let loop_a = m.add_bond(lp(a, a)).unwrap();
        let ab = m.add_bond(lp(a, b)).unwrap();
        let ba = m.add_bond(lp(b, a)).unwrap();
        let bc = m.add_bond(lp(b, c)).unwrap();
        assert!(cut(&m, a, loop_a, ab).is_err());
        assert!(cut(&m, a, ab, ab).is_err());
        assert!(cut(&m, b, ba, bc).is_err(), "both leave b");
        assert!(cut(&m, c, ab, ba).is_err(), "bonds not at the atom");
    }

    /// Every admissible single cut on every small-couple molecule keeps the
    /// bond set intact, grows the atom count by one, preserves the invariant
    /// and still validates.
    #[test]
    fn exhaustive_single_cuts_on_small_couples() {
        let mut cuts = 0usize;
        for order in 1..=3usize {
            for g in enumerate_couples(order, 10_000).unwrap() {
                let m = build_molecule(&g, None).unwrap();
                let inv = cut_invariant(&m);
                for v in m.atom_ids() {
                    for (l1, l2) in cut_choices(&m, v) {
                        let out = cut(&m, v, l1, l2).unwrap();
                        let mm = &out.molecule;
                        assert_eq!(mm.atom_count(), m.atom_count() + 1);
                        assert_eq!(mm.bond_count(), m.bond_count());
                        for (id, bond) in m.bonds() {
                            assert_eq!(bond.label, mm.bond(id).label);
                            assert_eq!(bond.m_tail, mm.bond(id).m_tail);
                            assert_eq!(bond.m_head, mm.bond(id).m_head);
                        }
                        assert_eq!(
                            mm.incident(out.v1),
                            {
                                let mut s = vec![l1.min(l2), l1.max(l2)];
                                s.dedup();
                                s
                            }
                        );
                        assert_eq!(cut_invariant(mm), inv);
                        assert_eq!(
                            mm.component_count(),
                            m.component_count() + out.beta as usize
                        );
                        // α-cuts destroy a circuit, β-cuts do not.
                        let drop = if out.beta { 0 } else { 1 };
                        assert_eq!(mm.circuit_rank() + drop, m.circuit_rank());
                        mm.validate().unwrap();
                        cuts += 1;
                    }
                }
            }
        }
        assert!(cuts > 500);
    }

    /// Random maximal cutting sequences keep the invariant pinned at every
    /// step.
    #[test]
    fn iterated_cuts_preserve_the_invariant() {
        let mut rng = StdRng::seed_from_u64(31);
        for g in enumerate_couples(3, 10_000).unwrap().into_iter().step_by(7) {
            let mut m = build_molecule(&g, None).unwrap();
            let inv = cut_invariant(&m);
            loop {
                let options: Vec<(AtomId, BondId, BondId)> = m
                    .atom_ids()
                    .flat_map(|v| {
                        cut_choices(&m, v)
                            .into_iter()
                            .map(move |(a, b)| (v, a, b))
                    })
                    .collect();
                if options.is_empty() {
                    break;
                }
                let (v, l1, l2) = options[rng.gen_range(0..options.len())];
                let out = cut(&m, v, l1, l2).unwrap();
                m = out.molecule;
                assert_eq!(cut_invariant(&m), inv);
                m.validate().unwrap();
            }
            // Terminal states carry no unmarked atom with both an in- and an
            // out-bond.
            for v in m.atom_ids() {
                assert!(cut_choices(&m, v).is_empty());
            }
        }
    }
}
