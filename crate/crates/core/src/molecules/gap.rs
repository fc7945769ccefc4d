//! Gaps of decorated-molecule structures. At an atom with two opposite
//! bonds the gap is the difference of the outgoing and incoming momenta; a
//! block evaluates it at its joints (the two joints give exact negatives,
//! since interior atoms carry zero source), a ladder across any of its rail
//! pairs. Gaps classify as zero, small or large against the threshold
//! L^(−γ+η).

use super::blocks::Block;
use super::decorate::MoleculeDecoration;
use super::graph::{AtomId, BondId, Molecule};
use super::vines::{Ladder, Vine};
use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GapClass {
    /// r = 0.
    Zg,
    /// 0 < |r| ≤ L^(−γ+η).
    Sg,
    /// |r| > L^(−γ+η).
    Lg,
}

/// Gap of two opposite-direction bonds at an atom: outgoing minus incoming
/// momentum. Self-loops and parallel same-direction bonds are rejected.
pub fn gap_at(
    m: &Molecule,
    dec: &MoleculeDecoration,
    v: AtomId,
    l1: BondId,
    l2: BondId,
) -> Result<Vec<i64>> {
    if l1 == l2 {
        return Err(Error::invalid("gap needs two distinct bonds"));
    }
    let (b1, b2) = (m.bond(l1), m.bond(l2));
    if b1.is_self_loop() || b2.is_self_loop() {
        return Err(Error::invalid("gap bonds must not be self-loops"));
    }
    for b in [b1, b2] {
        if b.tail != v && b.head != v {
            return Err(Error::invalid("gap bonds must meet at the atom"));
        }
    }
    let (out, inc) = if b1.tail == v && b2.head == v {
        (l1, l2)
    } else if b2.tail == v && b1.head == v {
        (l2, l1)
    } else {
        return Err(Error::invalid("gap bonds must have opposite directions"));
    };
    let ko = dec.k(out);
    let ki = dec.k(inc);
    Ok(ko.iter().zip(ki).map(|(a, b)| a - b).collect())
}

/// The two in-block bonds at a block joint (one outgoing, one incoming).
fn joint_bonds(m: &Molecule, b: &Block, joint: AtomId) -> Result<(BondId, BondId)> {
    let mut within = Vec::new();
    for id in m.incident(joint) {
        let bd = m.bond(id);
        if b.atoms.contains(&bd.tail) && b.atoms.contains(&bd.head) {
            within.push(id);
        }
    }
    if within.len() != 2 {
        return Err(Error::invalid("joint must keep exactly two bonds in the block"));
    }
    Ok((within[0], within[1]))
}

/// Block gap, evaluated at the smaller-id joint. The other joint yields the
/// exact negative.
pub fn block_gap(m: &Molecule, dec: &MoleculeDecoration, b: &Block) -> Result<Vec<i64>> {
    let (l1, l2) = joint_bonds(m, b, b.joints.0)?;
    gap_at(m, dec, b.joints.0, l1, l2)
}

pub fn vine_gap(m: &Molecule, dec: &MoleculeDecoration, v: &Vine) -> Result<Vec<i64>> {
    block_gap(m, dec, &v.block)
}

/// Ladder gap from the rail pair between the first two rungs (forward rail
/// minus backward rail). Every other rail pair gives the same vector up to
/// sign.
pub fn ladder_gap(m: &Molecule, dec: &MoleculeDecoration, l: &Ladder) -> Result<Vec<i64>> {
    rail_gap(m, dec, l.rungs[0], l.rungs[1])
}

/// Gap across the two rails joining consecutive rungs.
pub fn rail_gap(
    m: &Molecule,
    dec: &MoleculeDecoration,
    r1: (AtomId, AtomId),
    r2: (AtomId, AtomId),
) -> Result<Vec<i64>> {
    let in1 = |a: AtomId| a == r1.0 || a == r1.1;
    let in2 = |a: AtomId| a == r2.0 || a == r2.1;
    let mut fwd = None;
    let mut bwd = None;
    for (id, bd) in m.bonds() {
        if in1(bd.tail) && in2(bd.head) {
            fwd = Some(id);
        } else if in2(bd.tail) && in1(bd.head) {
            bwd = Some(id);
        }
    }
    let (f, b) = match (fwd, bwd) {
        (Some(f), Some(b)) => (f, b),
        _ => return Err(Error::invalid("rungs are not joined by opposite rails")),
    };
    let kf = dec.k(f);
    let kb = dec.k(b);
    Ok(kf.iter().zip(kb).map(|(a, b)| a - b).collect())
}

/// Classify an integer-lattice gap vector (momenta are lattice points k·L)
/// against the small-gap threshold L^(−γ+η).
pub fn classify_gap(r: &[i64], l: f64, gamma: f64, eta: f64) -> GapClass {
    if r.iter().all(|&x| x == 0) {
        return GapClass::Zg;
    }
    let norm2: f64 = r.iter().map(|&x| (x as f64 / l).powi(2)).sum();
    let thresh = l.powf(-gamma + eta);
    if norm2.sqrt() <= thresh {
        GapClass::Sg
    } else {
        GapClass::Lg
    }
}

pub const DEFAULT_ETA: f64 = 0.05;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::decoration::Decoration;
    use crate::combinatorics::garden::{enumerate_couples, Garden, Loc};
    use crate::molecules::blocks::{enumerate_blocks, is_block};
    use crate::molecules::build::build_molecule;
    use crate::molecules::decorate::decorate_molecule;
    use crate::molecules::vines::find_ladders;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use std::collections::BTreeSet;

    fn neg(v: &[i64]) -> Vec<i64> {
        v.iter().map(|x| -x).collect()
    }

    /// Both joints of every block gap to exact negatives, and the joint gap
    /// equals the atom source minus the signed external momenta.
    #[test]
    fn block_gaps_are_antisymmetric_across_joints() {
        let mut rng = StdRng::seed_from_u64(21);
        let mut checked = 0usize;
        for order in 3..=4usize {
            for g in enumerate_couples(order, 100_000).unwrap() {
                let m = build_molecule(&g, None).unwrap();
                let blocks = enumerate_blocks(&m).unwrap();
                if blocks.is_empty() {
                    continue;
                }
                let dec = Decoration::random(&g, 2, 6, &mut rng);
                let mdec = decorate_molecule(&g, &m, &dec).unwrap();
                for b in &blocks {
                    let r0 = block_gap(&m, &mdec, b).unwrap();
                    let (l1, l2) = joint_bonds(&m, b, b.joints.1).unwrap();
                    let r1 = gap_at(&m, &mdec, b.joints.1, l1, l2).unwrap();
                    assert_eq!(r1, neg(&r0), "joint gaps must cancel in {g}");
                    // r = c_v − Σ ζ k over external bonds at the joint.
                    let v = b.joints.0;
                    let mut expect = mdec.c(v).to_vec();
                    for id in m.incident(v) {
                        let bd = m.bond(id);
                        if b.atoms.contains(&bd.tail) && b.atoms.contains(&bd.head) {
                            continue;
                        }
                        let k = mdec.k(id);
                        if bd.tail == v {
                            for (e, x) in expect.iter_mut().zip(k) {
                                *e -= x;
                            }
                        }
                        if bd.head == v {
                            for (e, x) in expect.iter_mut().zip(k) {
                                *e += x;
                            }
                        }
                    }
                    assert_eq!(r0, expect, "joint gap vs source formula in {g}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    /// Two blocks sharing one joint whose union is again a block all carry
    /// the same gap up to sign.
    #[test]
    fn concatenated_blocks_share_the_gap() {
        let mut rng = StdRng::seed_from_u64(22);
        let mut found = 0usize;
        for order in 3..=4usize {
            for g in enumerate_couples(order, 100_000).unwrap() {
                let m = build_molecule(&g, None).unwrap();
                let blocks = enumerate_blocks(&m).unwrap();
                if blocks.len() < 2 {
                    continue;
                }
                let dec = Decoration::random(&g, 2, 6, &mut rng);
                let mdec = decorate_molecule(&g, &m, &dec).unwrap();
                for (i, b1) in blocks.iter().enumerate() {
                    for b2 in &blocks[i + 1..] {
                        let shared: BTreeSet<AtomId> =
                            b1.atoms.intersection(&b2.atoms).copied().collect();
                        let j1: BTreeSet<AtomId> = [b1.joints.0, b1.joints.1].into();
                        let j2: BTreeSet<AtomId> = [b2.joints.0, b2.joints.1].into();
                        if shared.len() != 1 || !j1.contains(shared.iter().next().unwrap())
                            || !j2.contains(shared.iter().next().unwrap())
                        {
                            continue;
                        }
                        let union: BTreeSet<AtomId> =
                            b1.atoms.union(&b2.atoms).copied().collect();
                        let Some(bu) = is_block(&m, &union) else { continue };
                        let r1 = block_gap(&m, &mdec, b1).unwrap();
                        let r2 = block_gap(&m, &mdec, b2).unwrap();
                        let ru = block_gap(&m, &mdec, &bu).unwrap();
                        for r in [&r1, &r2] {
                            assert!(
                                **r == ru || **r == neg(&ru),
                                "component gap differs from chain gap in {g}"
                            );
                        }
                        found += 1;
                    }
                }
            }
        }
        assert!(found > 0, "no concatenated blocks encountered");
    }

    /// Nested chain couple whose molecule carries a three-rung ladder ending
    /// in a triple bond.
    fn ladder_fixture() -> Garden {
        "[+(.,(.,(.,(.,.,.),.),.),.); -(.,(.,(.,(.,.,.),.),.),.)]\
         {0-9, 1-10, 2-11, 3-12, 4-13, 5-14, 6-15, 7-16, 8-17}"
            .parse()
            .unwrap()
    }

    #[test]
    fn length_two_ladder_fixture_has_consistent_gap() {
        let g = ladder_fixture();
        let m = build_molecule(&g, None).unwrap();
        let ladders = find_ladders(&m);
        assert_eq!(ladders.len(), 1);
        let l = &ladders[0];
        assert_eq!(l.length(), 2);
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..5 {
            let dec = Decoration::random(&g, 3, 9, &mut rng);
            let mdec = decorate_molecule(&g, &m, &dec).unwrap();
            let r = ladder_gap(&m, &mdec, l).unwrap();
            // The gap equals the difference of the two chain node momenta
            // feeding the first rail pair.
            let m1 = Loc::new(0, 2);
            let m3 = Loc::new(1, 2);
            let expect: Vec<i64> = dec
                .of(m1)
                .iter()
                .zip(dec.of(m3))
                .map(|(a, b)| a - b)
                .collect();
            assert!(r == expect || r == neg(&expect));
            // Every consecutive rail pair agrees up to sign.
            for w in l.rungs.windows(2) {
                let rr = rail_gap(&m, &mdec, w[0], w[1]).unwrap();
                assert!(rr == r || rr == neg(&r), "rail gaps diverge");
            }
        }
    }

    #[test]
    fn classification_thresholds() {
        // L = 16, γ−η = 0.5: threshold is 1/4 in physical units.
        let (l, gamma, eta) = (16.0, 0.55, 0.05);
        assert_eq!(classify_gap(&[0, 0, 0], l, gamma, eta), GapClass::Zg);
        assert_eq!(classify_gap(&[4, 0, 0], l, gamma, eta), GapClass::Sg);
        assert_eq!(classify_gap(&[5, 0, 0], l, gamma, eta), GapClass::Lg);
        assert_eq!(classify_gap(&[1, 0, 0], l, gamma, eta), GapClass::Sg);
        assert_eq!(classify_gap(&[16, 16, 16], l, gamma, eta), GapClass::Lg);
    }

    #[test]
    fn ill_formed_gap_requests_are_rejected() {
        let g: Garden = "[+(.,.,.); -(.,.,.)]{0-3, 1-4, 2-5}".parse().unwrap();
        let m = build_molecule(&g, None).unwrap();
        let mut rng = StdRng::seed_from_u64(24);
        let dec = Decoration::random(&g, 2, 3, &mut rng);
        let mdec = decorate_molecule(&g, &m, &dec).unwrap();
        let ids: Vec<BondId> = m.bond_ids().collect();
        // The triple bond runs two bonds one way and one the other.
        let same: Vec<BondId> = ids
            .iter()
            .copied()
            .filter(|&id| m.bond(id).tail == m.bond(ids[0]).tail)
            .collect();
        if same.len() == 2 {
            assert!(gap_at(&m, &mdec, m.bond(same[0]).tail, same[0], same[1]).is_err());
        }
        assert!(gap_at(&m, &mdec, 0, ids[0], ids[0]).is_err());
        // Opposite pair works and classifies.
        let a = ids
            .iter()
            .copied()
            .find(|&id| m.bond(id).tail == 0)
            .unwrap();
        let b = ids
            .iter()
            .copied()
            .find(|&id| m.bond(id).head == 0)
            .unwrap();
        let r = gap_at(&m, &mdec, 0, a, b).unwrap();
        let _ = classify_gap(&r, 32.0, 0.55, DEFAULT_ETA);
    }
}
