use crate::combinatorics::garden::{Garden, Loc};
use crate::combinatorics::layering::Layering;
use crate::error::{Error, Result};

/// Layer-condition membership test for canonical layered gardens of depth
/// p+1 (couples included). A valid layering qualifies iff
///
/// (i) every node lies in a layer ≤ p, and
/// (ii) whenever the leaves of the subtrees at two distinct nodes n, n′ are
///     completely paired among themselves, max(L_n, L_n′) ≥ min of the two
///     parent layers, a root's parent layer counting as p.
///
/// The garden must be irreducible (couples always are).
pub fn is_canonical(garden: &Garden, layering: &Layering, p: u32) -> bool {
    if !garden.is_irreducible() || layering.validate(garden).is_err() {
        return false;
    }
    if layering.max_layer() > p {
        return false;
    }
    let masks = subtree_leaf_masks(garden);
    let partner_ok = |mask: u128| -> bool {
        let mut m = mask;
        while m != 0 {
            let l = m.trailing_zeros() as usize;
            m &= m - 1;
            let pa = garden.partner(l);
            if pa == l || mask & (1u128 << pa) == 0 {
                return false;
            }
        }
        true
    };
    let locs = all_locs(garden);
    for i in 0..locs.len() {
        for j in i + 1..locs.len() {
            let (a, b) = (locs[i], locs[j]);
            let (ma, mb) = (masks[i], masks[j]);
            if ma & mb != 0 {
                continue; // one subtree contains the other
            }
            if !partner_ok(ma | mb) {
                continue;
            }
            let la = layering.of(a);
            let lb = layering.of(b);
            let pa = layering.parent_layer(garden, a, p);
            let pb = layering.parent_layer(garden, b, p);
            if la.max(lb) < pa.min(pb) {
                return false;
            }
        }
    }
    true
}

fn all_locs(garden: &Garden) -> Vec<Loc> {
    garden
        .trees()
        .iter()
        .enumerate()
        .flat_map(|(ti, t)| (0..t.node_count()).map(move |n| Loc::new(ti, n)))
        .collect()
}

/// Bitmask of global leaf indices under each node, in `all_locs` order.
fn subtree_leaf_masks(garden: &Garden) -> Vec<u128> {
    assert!(garden.leaf_count() <= 128, "too many leaves for mask");
    let mut out = Vec::new();
    for (ti, t) in garden.trees().iter().enumerate() {
        // Compute per-tree via reverse preorder accumulation.
        let mut masks = vec![0u128; t.node_count()];
        for n in (0..t.node_count()).rev() {
            match t.children(n) {
                None => {
                    let l = garden.leaf_index(Loc::new(ti, n)).unwrap();
                    masks[n] = 1u128 << l;
                }
                Some([a, b, c]) => {
                    masks[n] = masks[a] | masks[b] | masks[c];
                }
            }
        }
        out.extend(masks);
    }
    out
}

/// All layerings turning `garden` into a canonical layered garden of depth
/// p+1, produced by the recursive construction:
///
/// choose an antichain U of nodes whose subtrees are self-paired and split
/// into irreducible groups of width ≥ 4; everything outside U sits at layer
/// p; each group recursively receives a depth-p layering. Depth 0 admits
/// nothing, so p = 0 forces U = ∅ (the all-zero layering).
pub fn enumerate_canonical_layerings(garden: &Garden, p: u32) -> Result<Vec<Layering>> {
    if !garden.is_irreducible() || garden.lone_leaf().is_some() {
        return Err(Error::invalid(
            "canonical layerings are defined for irreducible fully-paired gardens",
        ));
    }
    let mut out = Vec::new();
    let locs = all_locs(garden);
    let mut antichain = Vec::new();
    enumerate_antichains(garden, &locs, 0, &mut antichain, &mut |u| {
        if let Some(layerings) = layerings_for_antichain(garden, u, p)? {
            out.extend(layerings);
        }
        Ok(())
    })?;
    Ok(out)
}

fn enumerate_antichains(
    garden: &Garden,
    locs: &[Loc],
    at: usize,
    cur: &mut Vec<Loc>,
    f: &mut impl FnMut(&[Loc]) -> Result<()>,
) -> Result<()> {
    if at == locs.len() {
        return f(cur);
    }
    let loc = locs[at];
    // Skip (not in U).
    enumerate_antichains(garden, locs, at + 1, cur, f)?;
    // Include, unless an ancestor is already in U.
    let t = garden.tree(loc.tree);
    let has_ancestor = cur
        .iter()
        .any(|a| a.tree == loc.tree && t.is_ancestor_or_self(a.node, loc.node));
    if !has_ancestor {
        cur.push(loc);
        // Jump past this subtree: descendants cannot join the antichain.
        let end = t.subtree_range(loc.node).end;
        let mut next = at + 1;
        while next < locs.len() && locs[next].tree == loc.tree && locs[next].node < end {
            next += 1;
        }
        enumerate_antichains(garden, locs, next, cur, f)?;
        cur.pop();
    }
    Ok(())
}

/// Layerings with planting set `u`, or None if `u` is not admissible.
fn layerings_for_antichain(garden: &Garden, u: &[Loc], p: u32) -> Result<Option<Vec<Layering>>> {
    // Leaves under U must pair among themselves, all others among themselves.
    let under_u = |loc: Loc| -> bool {
        u.iter()
            .any(|a| a.tree == loc.tree && garden.tree(a.tree).is_ancestor_or_self(a.node, loc.node))
    };
    for (a, b) in garden.pairs() {
        if under_u(garden.leaf_loc(a)) != under_u(garden.leaf_loc(b)) {
            return Ok(None);
        }
    }
    if let Some(lone) = garden.lone_leaf() {
        if under_u(garden.leaf_loc(lone)) {
            return Ok(None);
        }
    }
    if u.is_empty() {
        // Whole garden at layer p... but only p contributes; the construction
        // for depth p+1 places the top structure exactly at layer p.
        return Ok(Some(vec![Layering::uniform(garden, p)]));
    }
    if p == 0 {
        return Ok(None); // no depth-0 gardens exist to plant
    }
    // Build H: the garden of subtrees at U (locs in sorted order).
    let mut u_sorted = u.to_vec();
    u_sorted.sort();
    let trees: Vec<_> = u_sorted
        .iter()
        .map(|&loc| garden.tree(loc.tree).subtree(loc.node))
        .collect();
    // Map garden leaves under U to H's global leaf numbering.
    let mut old_to_new = std::collections::HashMap::new();
    let mut count = 0usize;
    for (hi, &loc) in u_sorted.iter().enumerate() {
        let _ = hi;
        for leaf in trees[hi].leaves() {
            let old = garden
                .leaf_index(Loc::new(loc.tree, loc.node + leaf))
                .unwrap();
            old_to_new.insert(old, count);
            count += 1;
        }
    }
    let mut pairing = vec![0u32; count];
    for (&old, &new) in &old_to_new {
        pairing[new] = old_to_new[&garden.partner(old)] as u32;
    }
    let h = Garden::new(trees, pairing)?;
    let comps = h.components();
    if comps.iter().any(|c| c.len() < 4) {
        return Ok(None); // groups must be proper gardens (width ≥ 4)
    }
    // Side condition: no proper subset of garden trees has its top-leaf set
    // equal to a union of blocks (pairs at layer p and U-groups).
    if violates_side_condition(garden, &u_sorted, &comps, &under_u) {
        return Ok(None);
    }
    // Recursive layerings per component.
    let mut comp_layerings: Vec<Vec<Layering>> = Vec::new();
    for comp in &comps {
        let sub = h.sub_garden(comp)?;
        let ls = enumerate_canonical_layerings(&sub, p - 1)?;
        if ls.is_empty() {
            return Ok(None);
        }
        comp_layerings.push(ls);
    }
    // Assemble: everything outside U at layer p; component nodes from the
    // recursive layerings, mapped back through U locations.
    let mut assembled = Vec::new();
    let mut pick = vec![0usize; comps.len()];
    loop {
        let mut lay = Layering::uniform(garden, p);
        for (ci, comp) in comps.iter().enumerate() {
            let sub_lay = &comp_layerings[ci][pick[ci]];
            for (sub_ti, &h_tree) in comp.iter().enumerate() {
                let loc = u_sorted[h_tree];
                let per_tree = &sub_lay.per_tree()[sub_ti];
                for (n, &l) in per_tree.iter().enumerate() {
                    lay.set(Loc::new(loc.tree, loc.node + n), l);
                }
            }
        }
        debug_assert!(lay.validate(garden).is_ok());
        assembled.push(lay);
        // Advance the mixed-radix counter.
        let mut i = 0;
        loop {
            if i == pick.len() {
                return Ok(Some(assembled));
            }
            pick[i] += 1;
            if pick[i] < comp_layerings[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn violates_side_condition(
    garden: &Garden,
    u_sorted: &[Loc],
    comps: &[Vec<usize>],
    under_u: &impl Fn(Loc) -> bool,
) -> bool {
    // Top leaves: garden leaves not under U, plus U positions themselves.
    // Blocks: each non-U leaf pair; each component's set of U positions.
    // A block system is represented by which garden trees its members sit in;
    // the membership test only needs, per block, the set of trees it touches
    // and whether those are all inside/outside the candidate subset A.
    let width = garden.width();
    #[derive(Clone)]
    struct Block {
        trees: Vec<usize>,
    }
    let mut blocks = Vec::new();
    for (a, b) in garden.pairs() {
        let (la, lb) = (garden.leaf_loc(a), garden.leaf_loc(b));
        if !under_u(la) {
            blocks.push(Block {
                trees: vec![la.tree, lb.tree],
            });
        }
    }
    for comp in comps {
        blocks.push(Block {
            trees: comp.iter().map(|&hi| u_sorted[hi].tree).collect(),
        });
    }
    // For every proper nonempty subset A of trees: forbidden iff every block
    // is entirely inside or outside A. (Top-leaf sets per tree are unions of
    // the blocks' per-tree slices, so tree-level inside/outside is exact.)
    for mask in 1..(1u32 << width) - 1 {
        let inside = |t: usize| mask & (1 << t) != 0;
        let ok = blocks.iter().all(|b| {
            let ins = b.trees.iter().filter(|&&t| inside(t)).count();
            ins == 0 || ins == b.trees.len()
        });
        if ok {
            return true;
        }
    }
    false
}
