use crate::combinatorics::tree::{enumerate_trees, tree_census, SignedTree};
use crate::error::{Error, Result};
use crate::sign::Sign;
use num_complex::Complex64;
use std::fmt;

/// Position of a node inside a garden: tree index + preorder node id.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Loc {
    pub tree: usize,
    pub node: usize,
}

impl Loc {
    pub fn new(tree: usize, node: usize) -> Loc {
        Loc { tree, node }
    }
}

/// An ordered collection of signed trees whose leaves are matched into
/// opposite-sign pairs. Width-2 gardens are couples; a single tree with
/// exactly one unpaired ("lone") leaf is a paired tree.
///
/// The pairing is stored as an involution on global leaf indices (leaves
/// numbered tree-major, in preorder within each tree). A fixed point marks
/// the lone leaf and is only allowed for single-tree paired objects.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Garden {
    trees: Vec<SignedTree>,
    pairing: Vec<u32>,
    /// global leaf index -> location
    leaf_locs: Vec<Loc>,
    /// per tree: node id -> global leaf index (u32::MAX for branching nodes)
    leaf_of_node: Vec<Vec<u32>>,
}

impl Garden {
    pub fn new(trees: Vec<SignedTree>, pairing: Vec<u32>) -> Result<Garden> {
        let mut leaf_locs = Vec::new();
        let mut leaf_of_node = Vec::with_capacity(trees.len());
        for (ti, t) in trees.iter().enumerate() {
            let mut per_node = vec![u32::MAX; t.node_count()];
            for leaf in t.leaves() {
                per_node[leaf] = leaf_locs.len() as u32;
                leaf_locs.push(Loc::new(ti, leaf));
            }
            leaf_of_node.push(per_node);
        }
        let g = Garden {
            trees,
            pairing,
            leaf_locs,
            leaf_of_node,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let n = self.leaf_locs.len();
        if self.pairing.len() != n {
            return Err(Error::invalid("pairing length != number of leaves"));
        }
        let mut lone = 0usize;
        for i in 0..n {
            let j = self.pairing[i] as usize;
            if j >= n {
                return Err(Error::invalid("pairing index out of range"));
            }
            if self.pairing[j] as usize != i {
                return Err(Error::invalid("pairing is not an involution"));
            }
            if i == j {
                lone += 1;
            } else if self.leaf_sign(i) != -self.leaf_sign(j) {
                return Err(Error::invalid("paired leaves must have opposite signs"));
            }
        }
        match (self.trees.len(), lone) {
            (1, 1) => Ok(()),
            (w, 0) if w >= 2 && w % 2 == 0 => Ok(()),
            _ => Err(Error::invalid(
                "garden must be fully paired (even width) or a single paired tree with one lone leaf",
            )),
        }
    }

    /// Couple (T⁺, T⁻) from two trees of signs (+, −).
    pub fn couple(plus: SignedTree, minus: SignedTree, pairing: Vec<u32>) -> Result<Garden> {
        if plus.sign() != Sign::Plus || minus.sign() != Sign::Minus {
            return Err(Error::invalid("couple must have signature (+,-)"));
        }
        Garden::new(vec![plus, minus], pairing)
    }

    /// The couple of two trivial trees with their leaves paired.
    pub fn trivial_couple() -> Garden {
        Garden::couple(
            SignedTree::trivial(Sign::Plus),
            SignedTree::trivial(Sign::Minus),
            vec![1, 0],
        )
        .unwrap()
    }

    /// Single-tree paired object; `pairing` must fix exactly one leaf.
    pub fn paired_tree(tree: SignedTree, pairing: Vec<u32>) -> Result<Garden> {
        Garden::new(vec![tree], pairing)
    }

    pub fn trees(&self) -> &[SignedTree] {
        &self.trees
    }

    pub fn tree(&self, i: usize) -> &SignedTree {
        &self.trees[i]
    }

    pub fn width(&self) -> usize {
        self.trees.len()
    }

    pub fn order(&self) -> usize {
        self.trees.iter().map(|t| t.order()).sum()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_locs.len()
    }

    pub fn signature(&self) -> Vec<Sign> {
        self.trees.iter().map(|t| t.sign()).collect()
    }

    pub fn is_couple(&self) -> bool {
        self.trees.len() == 2 && self.lone_leaf().is_none()
    }

    pub fn is_paired_tree(&self) -> bool {
        self.trees.len() == 1
    }

    pub fn is_trivial(&self) -> bool {
        self.trees.iter().all(|t| t.is_trivial())
    }

    /// ζ(G) = Π over all branching nodes of (i ζ_n).
    pub fn zeta_product(&self) -> Complex64 {
        self.trees
            .iter()
            .map(|t| t.zeta_product())
            .fold(Complex64::new(1.0, 0.0), |a, b| a * b)
    }

    pub fn leaf_loc(&self, leaf: usize) -> Loc {
        self.leaf_locs[leaf]
    }

    /// Global leaf index of a leaf node at `loc`, if it is a leaf.
    pub fn leaf_index(&self, loc: Loc) -> Option<usize> {
        let v = self.leaf_of_node[loc.tree][loc.node];
        (v != u32::MAX).then_some(v as usize)
    }

    pub fn leaf_sign(&self, leaf: usize) -> Sign {
        let loc = self.leaf_locs[leaf];
        self.trees[loc.tree].sign_of(loc.node)
    }

    pub fn partner(&self, leaf: usize) -> usize {
        self.pairing[leaf] as usize
    }

    /// Global index of the unpaired leaf, if any.
    pub fn lone_leaf(&self) -> Option<usize> {
        (0..self.leaf_count()).find(|&i| self.pairing[i] as usize == i)
    }

    pub fn lone_leaf_loc(&self) -> Option<Loc> {
        self.lone_leaf().map(|i| self.leaf_locs[i])
    }

    /// Unordered pairs (smaller global index first), sorted.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.leaf_count() / 2);
        for i in 0..self.leaf_count() {
            let j = self.pairing[i] as usize;
            if i < j {
                out.push((i, j));
            }
        }
        out
    }

    /// Each pair as (+ leaf, − leaf).
    pub fn pairs_signed(&self) -> Vec<(usize, usize)> {
        self.pairs()
            .into_iter()
            .map(|(a, b)| {
                if self.leaf_sign(a) == Sign::Plus {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    }

    /// Partition of tree indices into irreducible components (pairing-connected
    /// groups of trees), each listed in increasing order.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let w = self.trees.len();
        let mut dsu: Vec<usize> = (0..w).collect();
        fn find(dsu: &mut Vec<usize>, x: usize) -> usize {
            if dsu[x] != x {
                let r = find(dsu, dsu[x]);
                dsu[x] = r;
            }
            dsu[x]
        }
        for (a, b) in self.pairs() {
            let (ta, tb) = (self.leaf_locs[a].tree, self.leaf_locs[b].tree);
            let (ra, rb) = (find(&mut dsu, ta), find(&mut dsu, tb));
            if ra != rb {
                dsu[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for t in 0..w {
            let r = find(&mut dsu, t);
            groups.entry(r).or_default().push(t);
        }
        groups.into_values().collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.components().len() == 1
    }

    /// True if every component is a couple (width 2).
    pub fn is_multi_couple(&self) -> bool {
        self.components().iter().all(|c| c.len() == 2)
    }

    /// The sub-garden spanned by the given tree indices. Fails if their
    /// leaves are not paired among themselves.
    pub fn sub_garden(&self, tree_indices: &[usize]) -> Result<Garden> {
        let mut new_idx = vec![usize::MAX; self.trees.len()];
        for (ni, &ti) in tree_indices.iter().enumerate() {
            new_idx[ti] = ni;
        }
        let trees: Vec<SignedTree> = tree_indices.iter().map(|&ti| self.trees[ti].clone()).collect();
        // Build the new global leaf numbering and remap the pairing.
        let mut old_to_new = std::collections::HashMap::new();
        let mut count = 0usize;
        for &ti in tree_indices {
            for leaf in self.trees[ti].leaves() {
                let old = self.leaf_index(Loc::new(ti, leaf)).unwrap();
                old_to_new.insert(old, count);
                count += 1;
            }
        }
        let mut pairing = vec![0u32; count];
        for (&old, &new) in &old_to_new {
            let p_old = self.pairing[old] as usize;
            let p_new = *old_to_new
                .get(&p_old)
                .ok_or_else(|| Error::invalid("selected trees are not self-paired"))?;
            pairing[new] = p_new as u32;
        }
        Garden::new(trees, pairing)
    }

    /// Conjugate of a couple: (T̄⁻, T̄⁺), or of a paired tree: T̄.
    pub fn conjugate(&self) -> Result<Garden> {
        if self.is_paired_tree() {
            return Garden::new(vec![self.trees[0].conjugate()], self.pairing.clone());
        }
        if !self.is_couple() {
            return Err(Error::invalid("conjugate is defined for couples and paired trees"));
        }
        let nt0 = self.trees[1].conjugate();
        let nt1 = self.trees[0].conjugate();
        let l0 = self.trees[0].leaf_count();
        let l1 = self.trees[1].leaf_count();
        // Old leaf index i in tree 0 becomes l1 + i; old l0 + j becomes j.
        let remap = |old: usize| -> usize {
            if old < l0 {
                l1 + old
            } else {
                old - l0
            }
        };
        let mut pairing = vec![0u32; l0 + l1];
        for old in 0..l0 + l1 {
            pairing[remap(old)] = remap(self.pairing[old] as usize) as u32;
        }
        Garden::new(vec![nt0, nt1], pairing)
    }

    // ----- embedded sub-objects -------------------------------------------

    /// True if the subtrees at `a` and `b` are disjoint and the union of
    /// their leaves is closed under the pairing (an embedded sub-couple;
    /// pairs internal to one subtree are allowed).
    pub fn is_embedded_sub_couple(&self, a: Loc, b: Loc) -> bool {
        if a == b {
            return false;
        }
        if a.tree == b.tree {
            let t = &self.trees[a.tree];
            if t.is_ancestor_or_self(a.node, b.node) || t.is_ancestor_or_self(b.node, a.node) {
                return false;
            }
        }
        let in_union = |leaf: usize| -> bool {
            let loc = self.leaf_locs[leaf];
            (loc.tree == a.tree && self.trees[a.tree].subtree_range(a.node).contains(&loc.node))
                || (loc.tree == b.tree
                    && self.trees[b.tree].subtree_range(b.node).contains(&loc.node))
        };
        for &side in &[a, b] {
            for node in self.trees[side.tree].subtree_range(side.node) {
                if let Some(leaf) = self.leaf_index(Loc::new(side.tree, node)) {
                    let p = self.partner(leaf);
                    if p == leaf || !in_union(p) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All embedded sub-couples (a, b) with sign(a) = +, a ≠ b, including
    /// plain leaf pairs (trivial sub-couples) and, for couples, the root pair.
    pub fn embedded_sub_couples(&self) -> Vec<(Loc, Loc)> {
        let mut locs = Vec::new();
        for (ti, t) in self.trees.iter().enumerate() {
            for n in 0..t.node_count() {
                locs.push(Loc::new(ti, n));
            }
        }
        let mut out = Vec::new();
        for &a in &locs {
            if self.trees[a.tree].sign_of(a.node) != Sign::Plus {
                continue;
            }
            for &b in &locs {
                if self.trees[b.tree].sign_of(b.node) == Sign::Plus {
                    continue;
                }
                if self.is_embedded_sub_couple(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Extract the embedded sub-couple at (a, b) as a standalone couple
    /// (tree at the +-signed loc first).
    pub fn extract_sub_couple(&self, a: Loc, b: Loc) -> Result<Garden> {
        if !self.is_embedded_sub_couple(a, b) {
            return Err(Error::invalid("not an embedded sub-couple"));
        }
        let (pa, pb) = if self.trees[a.tree].sign_of(a.node) == Sign::Plus {
            (a, b)
        } else {
            (b, a)
        };
        let tp = self.trees[pa.tree].subtree(pa.node);
        let tm = self.trees[pb.tree].subtree(pb.node);
        // Map garden leaves to the new couple's leaf numbering.
        let mut map = std::collections::HashMap::new();
        let mut idx = 0usize;
        for (loc, t) in [(pa, &tp), (pb, &tm)] {
            let base = loc.node;
            for leaf in t.leaves() {
                let old = self.leaf_index(Loc::new(loc.tree, base + leaf)).unwrap();
                map.insert(old, idx);
                idx += 1;
            }
        }
        let mut pairing = vec![0u32; idx];
        for (&old, &new) in &map {
            pairing[new] = map[&(self.partner(old))] as u32;
        }
        Garden::couple(tp, tm, pairing)
    }

    /// True if `desc` is a strict descendant of `anc` and the leaves of the
    /// subtree at `anc` outside the subtree at `desc` are paired together
    /// (an embedded sub-paired-tree "between" anc and desc).
    pub fn is_embedded_sub_paired_tree(&self, anc: Loc, desc: Loc) -> bool {
        if anc.tree != desc.tree || anc.node == desc.node {
            return false;
        }
        let t = &self.trees[anc.tree];
        if !t.is_ancestor_or_self(anc.node, desc.node) {
            return false;
        }
        let outer = t.subtree_range(anc.node);
        let inner = t.subtree_range(desc.node);
        for node in outer.clone() {
            if inner.contains(&node) {
                continue;
            }
            if let Some(leaf) = self.leaf_index(Loc::new(anc.tree, node)) {
                let p = self.partner(leaf);
                if p == leaf {
                    return false;
                }
                let ploc = self.leaf_locs[p];
                let inside =
                    ploc.tree == anc.tree && outer.contains(&ploc.node) && !inner.contains(&ploc.node);
                if !inside {
                    return false;
                }
            }
        }
        true
    }

    /// Extract the sub-paired-tree between `anc` and `desc`: the subtree at
    /// `anc` with the subtree at `desc` collapsed to the lone leaf.
    pub fn extract_sub_paired_tree(&self, anc: Loc, desc: Loc) -> Result<Garden> {
        if !self.is_embedded_sub_paired_tree(anc, desc) {
            return Err(Error::invalid("not an embedded sub-paired-tree"));
        }
        let t = &self.trees[anc.tree];
        let sub = t.subtree(anc.node);
        let desc_in_sub = desc.node - anc.node;
        let lone = SignedTree::trivial(sub.sign_of(desc_in_sub));
        let pruned = sub.replace_subtree(desc_in_sub, &lone)?;
        // Leaves of `pruned`: original leaves of sub outside desc, plus the
        // lone leaf at position desc_in_sub.
        let mut map = std::collections::HashMap::new();
        let mut lone_new = None;
        let mut idx = 0usize;
        for leaf in pruned.leaves() {
            if leaf == desc_in_sub {
                lone_new = Some(idx);
            } else {
                // Node ids after the removed range shift by (removed - 1).
                let removed = t.subtree_range(desc.node).len();
                let orig_in_sub = if leaf > desc_in_sub {
                    leaf + removed - 1
                } else {
                    leaf
                };
                let old = self
                    .leaf_index(Loc::new(anc.tree, anc.node + orig_in_sub))
                    .unwrap();
                map.insert(old, idx);
            }
            idx += 1;
        }
        let mut pairing = vec![0u32; idx];
        for (&old, &new) in &map {
            pairing[new] = map[&self.partner(old)] as u32;
        }
        let lone_new = lone_new.unwrap();
        pairing[lone_new] = lone_new as u32;
        Garden::paired_tree(pruned, pairing)
    }

    // ----- surgery ---------------------------------------------------------

    /// Replace the leaf pair containing global leaf `l` with the couple `q`:
    /// the + tree of `q` is planted at the +-signed leaf of the pair, the −
    /// tree at the other, and `q`'s internal pairing is inherited.
    pub fn replace_leaf_pair_with_couple(&self, l: usize, q: &Garden) -> Result<Garden> {
        if !q.is_couple() {
            return Err(Error::invalid("replacement must be a couple"));
        }
        let p = self.partner(l);
        if p == l {
            return Err(Error::invalid("cannot replace the lone leaf"));
        }
        let (lp, lm) = if self.leaf_sign(l) == Sign::Plus {
            (l, p)
        } else {
            (p, l)
        };
        let key = |loc: Loc| (loc.tree, loc.node);
        let loc_p = self.leaf_locs[lp];
        let loc_m = self.leaf_locs[lm];

        // Stable keys for every surviving leaf: garden leaves keep
        // ("old", global index); planted leaves get ("q", q leaf index).
        #[derive(PartialEq, Eq, Hash, Clone, Copy, Debug)]
        enum Key {
            Old(usize),
            New(usize),
        }

        let mut trees = self.trees.clone();
        // Plant in the tree holding the later preorder position first, so the
        // earlier node id stays valid when both leaves share a tree.
        let mut plants = [(loc_p, 0usize), (loc_m, 1usize)];
        plants.sort_by_key(|&(loc, _)| std::cmp::Reverse(key(loc)));
        // For leaf keying we need, per planted tree, the mapping new-node -> Key.
        let mut keyed: Vec<Vec<(usize, Key)>> = Vec::new(); // (node id, key) per tree
        for (ti, t) in self.trees.iter().enumerate() {
            let v = t
                .leaves()
                .into_iter()
                .map(|n| (n, Key::Old(self.leaf_index(Loc::new(ti, n)).unwrap())))
                .collect();
            keyed.push(v);
        }
        for &(loc, qi) in &plants {
            let repl = q.tree(qi);
            let new_tree = trees[loc.tree].replace_subtree(loc.node, repl)?;
            let range_len = 1usize; // replacing a leaf
            let shift = repl.node_count() as isize - range_len as isize;
            let q_leaf_base: usize = (0..qi).map(|i| q.tree(i).leaf_count()).sum();
            let mut new_keys = Vec::new();
            for &(node, k) in &keyed[loc.tree] {
                use std::cmp::Ordering::*;
                match node.cmp(&loc.node) {
                    Less => new_keys.push((node, k)),
                    Equal => {}
                    Greater => new_keys.push(((node as isize + shift) as usize, k)),
                }
            }
            for (j, leaf) in repl.leaves().into_iter().enumerate() {
                new_keys.push((loc.node + leaf, Key::New(q_leaf_base + j)));
            }
            new_keys.sort_unstable_by_key(|&(n, _)| n);
            keyed[loc.tree] = new_keys;
            trees[loc.tree] = new_tree;
        }
        // Rebuild global indices and pairing from keys.
        let mut key_to_new = std::collections::HashMap::new();
        let mut order = Vec::new();
        for keys in &keyed {
            for &(_, k) in keys {
                key_to_new.insert(k, order.len());
                order.push(k);
            }
        }
        let mut pairing = vec![0u32; order.len()];
        for (new, &k) in order.iter().enumerate() {
            let partner_key = match k {
                Key::Old(old) => Key::Old(self.partner(old)),
                Key::New(qleaf) => Key::New(q.partner(qleaf)),
            };
            pairing[new] = key_to_new[&partner_key] as u32;
        }
        Garden::new(trees, pairing)
    }

    /// Replace the node at `loc` with the paired tree `pt`: the subtree at
    /// `loc` is re-planted at `pt`'s lone leaf, and `pt`'s pairing is
    /// inherited. `pt`'s root sign must equal the sign at `loc`.
    pub fn replace_node_with_paired_tree(&self, loc: Loc, pt: &Garden) -> Result<Garden> {
        if !pt.is_paired_tree() {
            return Err(Error::invalid("replacement must be a paired tree"));
        }
        let old_tree = &self.trees[loc.tree];
        if pt.tree(0).sign() != old_tree.sign_of(loc.node) {
            return Err(Error::invalid("paired tree sign mismatch"));
        }
        let lone_node = pt.lone_leaf_loc().unwrap().node;
        let moved = old_tree.subtree(loc.node);
        let combined = pt.tree(0).replace_subtree(lone_node, &moved)?;
        let new_tree = old_tree.replace_subtree(loc.node, &combined)?;

        #[derive(PartialEq, Eq, Hash, Clone, Copy)]
        enum Key {
            Old(usize),
            New(usize),
        }
        let old_range = old_tree.subtree_range(loc.node);
        let grow = combined.node_count() - old_range.len();
        // node id in new_tree -> key
        let mut keyed: Vec<Vec<(usize, Key)>> = Vec::new();
        for (ti, t) in self.trees.iter().enumerate() {
            if ti != loc.tree {
                keyed.push(
                    t.leaves()
                        .into_iter()
                        .map(|n| (n, Key::Old(self.leaf_index(Loc::new(ti, n)).unwrap())))
                        .collect(),
                );
                continue;
            }
            let mut v: Vec<(usize, Key)> = Vec::new();
            for n in t.leaves() {
                let old = self.leaf_index(Loc::new(ti, n)).unwrap();
                if n < old_range.start {
                    v.push((n, Key::Old(old)));
                } else if n >= old_range.end {
                    v.push((n + grow, Key::Old(old)));
                } else {
                    // Leaf of the moved subtree: now sits under the planted
                    // lone-leaf position inside `combined`.
                    let in_sub = n - old_range.start;
                    v.push((loc.node + lone_node + in_sub, Key::Old(old)));
                }
            }
            // Leaves of pt other than the lone leaf.
            let lone_leaf_idx = pt.lone_leaf().unwrap();
            let lone_shift = moved.node_count() - 1;
            for (j, n) in pt.tree(0).leaves().into_iter().enumerate() {
                if j == lone_leaf_idx {
                    continue;
                }
                let new_node = if n > lone_node { n + lone_shift } else { n };
                v.push((loc.node + new_node, Key::New(j)));
            }
            v.sort_unstable_by_key(|&(n, _)| n);
            keyed.push(v);
        }
        let mut trees = self.trees.clone();
        trees[loc.tree] = new_tree;
        let mut key_to_new = std::collections::HashMap::new();
        let mut order = Vec::new();
        for keys in &keyed {
            for &(_, k) in keys {
                key_to_new.insert(k, order.len());
                order.push(k);
            }
        }
        let lone_leaf_idx = pt.lone_leaf().unwrap();
        let mut pairing = vec![0u32; order.len()];
        for (new, &k) in order.iter().enumerate() {
            let partner_key = match k {
                Key::Old(old) => Key::Old(self.partner(old)),
                Key::New(j) => {
                    let pj = pt.partner(j);
                    debug_assert_ne!(pj, lone_leaf_idx);
                    Key::New(pj)
                }
            };
            pairing[new] = key_to_new[&partner_key] as u32;
        }
        Garden::new(trees, pairing)
    }

    /// Inverse of `replace_leaf_pair_with_couple`: collapse the embedded
    /// sub-couple at (a, b) back to a single leaf pair.
    pub fn collapse_sub_couple(&self, a: Loc, b: Loc) -> Result<Garden> {
        if !self.is_embedded_sub_couple(a, b) {
            return Err(Error::invalid("not an embedded sub-couple"));
        }
        #[derive(PartialEq, Eq, Hash, Clone, Copy)]
        enum Key {
            Old(usize),
            FreshA,
            FreshB,
        }
        let mut plants: Vec<(Loc, Key)> = vec![(a, Key::FreshA), (b, Key::FreshB)];
        plants.sort_by_key(|&(loc, _)| std::cmp::Reverse((loc.tree, loc.node)));
        let mut trees = self.trees.clone();
        let mut keyed: Vec<Vec<(usize, Key)>> = Vec::new();
        for (ti, t) in self.trees.iter().enumerate() {
            keyed.push(
                t.leaves()
                    .into_iter()
                    .map(|n| (n, Key::Old(self.leaf_index(Loc::new(ti, n)).unwrap())))
                    .collect(),
            );
        }
        for &(loc, fresh) in &plants {
            let t = &trees[loc.tree];
            let range = t.subtree_range(loc.node);
            let repl = SignedTree::trivial(t.sign_of(loc.node));
            let new_tree = t.replace_subtree(loc.node, &repl)?;
            let shrink = range.len() - 1;
            let mut v = Vec::new();
            for &(n, k) in &keyed[loc.tree] {
                if n < range.start {
                    v.push((n, k));
                } else if n >= range.end {
                    v.push((n - shrink, k));
                }
            }
            v.push((loc.node, fresh));
            v.sort_unstable_by_key(|&(n, _)| n);
            keyed[loc.tree] = v;
            trees[loc.tree] = new_tree;
        }
        let mut key_to_new = std::collections::HashMap::new();
        let mut order = Vec::new();
        for keys in &keyed {
            for &(_, k) in keys {
                key_to_new.insert(k, order.len());
                order.push(k);
            }
        }
        let mut pairing = vec![0u32; order.len()];
        for (new, &k) in order.iter().enumerate() {
            let partner_key = match k {
                Key::Old(old) => Key::Old(self.partner(old)),
                Key::FreshA => Key::FreshB,
                Key::FreshB => Key::FreshA,
            };
            pairing[new] = key_to_new[&partner_key] as u32;
        }
        Garden::new(trees, pairing)
    }

    /// Inverse of `replace_node_with_paired_tree`: collapse the sub-paired-tree
    /// between `anc` and `desc`, keeping the subtree at `desc`.
    pub fn collapse_sub_paired_tree(&self, anc: Loc, desc: Loc) -> Result<Garden> {
        if !self.is_embedded_sub_paired_tree(anc, desc) {
            return Err(Error::invalid("not an embedded sub-paired-tree"));
        }
        let t = &self.trees[anc.tree];
        let kept = t.subtree(desc.node);
        let new_tree = t.replace_subtree(anc.node, &kept)?;
        #[derive(PartialEq, Eq, Hash, Clone, Copy)]
        enum Key {
            Old(usize),
        }
        let outer = t.subtree_range(anc.node);
        let inner = t.subtree_range(desc.node);
        let mut keyed: Vec<Vec<(usize, Key)>> = Vec::new();
        for (ti, tr) in self.trees.iter().enumerate() {
            if ti != anc.tree {
                keyed.push(
                    tr.leaves()
                        .into_iter()
                        .map(|n| (n, Key::Old(self.leaf_index(Loc::new(ti, n)).unwrap())))
                        .collect(),
                );
                continue;
            }
            let shrink = outer.len() - inner.len();
            let mut v = Vec::new();
            for n in tr.leaves() {
                let old = self.leaf_index(Loc::new(ti, n)).unwrap();
                if n < outer.start {
                    v.push((n, Key::Old(old)));
                } else if inner.contains(&n) {
                    v.push((anc.node + (n - inner.start), Key::Old(old)));
                } else if n >= outer.end {
                    v.push((n - shrink, Key::Old(old)));
                }
                // leaves in outer∖inner disappear (they were paired together)
            }
            v.sort_unstable_by_key(|&(n, _)| n);
            keyed.push(v);
        }
        let mut trees = self.trees.clone();
        trees[anc.tree] = new_tree;
        let mut key_to_new = std::collections::HashMap::new();
        let mut order = Vec::new();
        for keys in &keyed {
            for &(_, k) in keys {
                key_to_new.insert(k, order.len());
                order.push(k);
            }
        }
        let mut pairing = vec![0u32; order.len()];
        for (new, &k) in order.iter().enumerate() {
            let Key::Old(old) = k;
            pairing[new] = key_to_new[&Key::Old(self.partner(old))] as u32;
        }
        Garden::new(trees, pairing)
    }

    // ----- surgery with node correspondences --------------------------------

    /// `replace_leaf_pair_with_couple` plus the node correspondences: every
    /// surviving node of `self` and every node of `q` is located in the
    /// result. The two replaced leaves have no image.
    pub fn replace_leaf_pair_with_couple_mapped(
        &self,
        l: usize,
        q: &Garden,
    ) -> Result<(Garden, SurgeryMaps)> {
        let out = self.replace_leaf_pair_with_couple(l, q)?;
        let p = self.partner(l);
        let (lp, lm) = if self.leaf_sign(l) == Sign::Plus {
            (l, p)
        } else {
            (p, l)
        };
        let sites = [(self.leaf_locs[lp], 0usize), (self.leaf_locs[lm], 1usize)];
        let mut maps = SurgeryMaps::default();
        for (ti, t) in self.trees.iter().enumerate() {
            let mut here: Vec<(usize, usize)> = sites
                .iter()
                .filter(|(loc, _)| loc.tree == ti)
                .map(|&(loc, qi)| (loc.node, qi))
                .collect();
            here.sort_unstable();
            // Each site replaces one leaf by `q.tree(qi)`, shifting later nodes.
            let shift_before = |n: usize| -> usize {
                here.iter()
                    .take_while(|&&(r, _)| r < n)
                    .map(|&(_, qi)| q.tree(qi).node_count() - 1)
                    .sum()
            };
            for n in 0..t.node_count() {
                if here.iter().any(|&(r, _)| r == n) {
                    continue;
                }
                maps.node.insert(Loc::new(ti, n), Loc::new(ti, n + shift_before(n)));
            }
            for &(r, qi) in &here {
                let base = r + shift_before(r);
                for j in 0..q.tree(qi).node_count() {
                    maps.plant.insert(Loc::new(qi, j), Loc::new(ti, base + j));
                }
            }
        }
        Ok((out, maps))
    }

    /// `replace_node_with_paired_tree` plus node correspondences: all nodes of
    /// `self` survive (the subtree at `loc` moves under the plant), and every
    /// node of `pt` except its lone leaf is located in the result.
    pub fn replace_node_with_paired_tree_mapped(
        &self,
        loc: Loc,
        pt: &Garden,
    ) -> Result<(Garden, SurgeryMaps)> {
        let out = self.replace_node_with_paired_tree(loc, pt)?;
        let old_range = self.trees[loc.tree].subtree_range(loc.node);
        let lone_node = pt.lone_leaf_loc().unwrap().node;
        let moved_len = old_range.len();
        let grow = pt.tree(0).node_count() - 1;
        let mut maps = SurgeryMaps::default();
        for (ti, t) in self.trees.iter().enumerate() {
            for n in 0..t.node_count() {
                let new = if ti != loc.tree || n < old_range.start {
                    Loc::new(ti, n)
                } else if n >= old_range.end {
                    Loc::new(ti, n + grow)
                } else {
                    Loc::new(ti, loc.node + lone_node + (n - old_range.start))
                };
                maps.node.insert(Loc::new(ti, n), new);
            }
        }
        for j in 0..pt.tree(0).node_count() {
            if j == lone_node {
                continue;
            }
            let new_node = if j > lone_node { j + moved_len - 1 } else { j };
            maps.plant
                .insert(Loc::new(0, j), Loc::new(loc.tree, loc.node + new_node));
        }
        Ok((out, maps))
    }

    /// `collapse_sub_couple` plus node correspondences. The two leaves that
    /// replace the collapsed subtrees are reported in `fresh`, in argument
    /// order; nodes inside the collapsed subtrees have no image.
    pub fn collapse_sub_couple_mapped(&self, a: Loc, b: Loc) -> Result<(Garden, SurgeryMaps)> {
        let out = self.collapse_sub_couple(a, b)?;
        let cuts = [
            (a, self.trees[a.tree].subtree_range(a.node)),
            (b, self.trees[b.tree].subtree_range(b.node)),
        ];
        let mut maps = SurgeryMaps::default();
        for (ti, t) in self.trees.iter().enumerate() {
            let mut here: Vec<std::ops::Range<usize>> = cuts
                .iter()
                .filter(|(l, _)| l.tree == ti)
                .map(|(_, r)| r.clone())
                .collect();
            here.sort_by_key(|r| r.start);
            let new_of = |n: usize| -> usize {
                n - here
                    .iter()
                    .take_while(|r| r.end <= n)
                    .map(|r| r.len() - 1)
                    .sum::<usize>()
            };
            for n in 0..t.node_count() {
                if here.iter().any(|r| r.contains(&n)) {
                    continue;
                }
                maps.node.insert(Loc::new(ti, n), Loc::new(ti, new_of(n)));
            }
        }
        for (l, _) in &cuts {
            let shift: usize = cuts
                .iter()
                .filter(|(o, r)| o.tree == l.tree && r.end <= l.node)
                .map(|(_, r)| r.len() - 1)
                .sum();
            maps.fresh.push(Loc::new(l.tree, l.node - shift));
        }
        Ok((out, maps))
    }

    /// `collapse_sub_paired_tree` plus node correspondences: nodes of the kept
    /// subtree at `desc` relocate to `anc`'s position; band nodes between the
    /// two have no image.
    pub fn collapse_sub_paired_tree_mapped(
        &self,
        anc: Loc,
        desc: Loc,
    ) -> Result<(Garden, SurgeryMaps)> {
        let out = self.collapse_sub_paired_tree(anc, desc)?;
        let outer = self.trees[anc.tree].subtree_range(anc.node);
        let inner = self.trees[anc.tree].subtree_range(desc.node);
        let shrink = outer.len() - inner.len();
        let mut maps = SurgeryMaps::default();
        for (ti, t) in self.trees.iter().enumerate() {
            for n in 0..t.node_count() {
                let new = if ti != anc.tree || n < outer.start {
                    Loc::new(ti, n)
                } else if inner.contains(&n) {
                    Loc::new(ti, anc.node + (n - inner.start))
                } else if n >= outer.end {
                    Loc::new(ti, n - shrink)
                } else {
                    continue;
                };
                maps.node.insert(Loc::new(ti, n), new);
            }
        }
        Ok((out, maps))
    }
}

/// Node correspondences produced by a garden surgery operation.
#[derive(Clone, Debug, Default)]
pub struct SurgeryMaps {
    /// Surviving node of the original garden -> its location in the result.
    pub node: std::collections::HashMap<Loc, Loc>,
    /// Node of the inserted couple or paired tree -> location in the result.
    /// Empty for collapse operations.
    pub plant: std::collections::HashMap<Loc, Loc>,
    /// Leaves created by `collapse_sub_couple`, in argument order.
    pub fresh: Vec<Loc>,
}

// ----- enumeration ----------------------------------------------------------

fn perfect_matchings(plus: &[usize], minus: &[usize]) -> Vec<Vec<(usize, usize)>> {
    // All bijections plus -> minus, as pair lists.
    fn rec(
        plus: &[usize],
        minus: &mut Vec<usize>,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let i = cur.len();
        if i == plus.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..minus.len() {
            if !used[j] {
                used[j] = true;
                cur.push((plus[i], minus[j]));
                rec(plus, minus, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut minus = minus.to_vec();
    let mut used = vec![false; minus.len()];
    rec(plus, &mut minus, &mut used, &mut Vec::new(), &mut out);
    out
}

/// All gardens with the given signature and total order (tree orders summed),
/// enumerating every shape assignment and every pairing.
pub fn enumerate_gardens(signature: &[Sign], order: usize, cap: usize) -> Result<Vec<Garden>> {
    let width = signature.len();
    if width == 0 || width % 2 != 0 {
        return Err(Error::invalid("signature width must be even and positive"));
    }
    if signature.iter().filter(|s| s.is_plus()).count() != width / 2 {
        return Err(Error::invalid("signature must have half + signs"));
    }
    let mut out = Vec::new();
    // Compositions of `order` into `width` parts.
    let mut parts = vec![0usize; width];
    compose(order, 0, &mut parts, &mut |parts| {
        let tree_lists: Vec<Vec<SignedTree>> = parts
            .iter()
            .zip(signature)
            .map(|(&n, &s)| enumerate_trees(n, s, usize::MAX).unwrap())
            .collect();
        let mut pick = vec![0usize; width];
        cartesian(&tree_lists, 0, &mut pick, &mut |pick| {
            let trees: Vec<SignedTree> =
                pick.iter().enumerate().map(|(i, &j)| tree_lists[i][j].clone()).collect();
            push_pairings(trees, &mut out, cap)
        })
    })?;
    Ok(out)
}

/// All couples of the given total order: signature (+,−), every pairing.
pub fn enumerate_couples(order: usize, cap: usize) -> Result<Vec<Garden>> {
    enumerate_gardens(&[Sign::Plus, Sign::Minus], order, cap)
}

/// All paired trees of the given order and root sign (one lone leaf).
pub fn enumerate_paired_trees(order: usize, sign: Sign, cap: usize) -> Result<Vec<Garden>> {
    let mut out = Vec::new();
    for t in enumerate_trees(order, sign, usize::MAX)? {
        let leaves = t.leaves();
        let plus: Vec<usize> = (0..leaves.len())
            .filter(|&i| t.sign_of(leaves[i]) == Sign::Plus)
            .collect();
        let minus: Vec<usize> = (0..leaves.len())
            .filter(|&i| t.sign_of(leaves[i]) == Sign::Minus)
            .collect();
        let (with_lone, other) = if sign == Sign::Plus {
            (plus, minus)
        } else {
            (minus, plus)
        };
        for &lone in &with_lone {
            let rest: Vec<usize> = with_lone.iter().copied().filter(|&x| x != lone).collect();
            for m in perfect_matchings(&rest, &other) {
                let mut pairing = vec![0u32; leaves.len()];
                pairing[lone] = lone as u32;
                for (x, y) in m {
                    pairing[x] = y as u32;
                    pairing[y] = x as u32;
                }
                if out.len() >= cap {
                    return Err(Error::CapExceeded {
                        produced: out.len() + 1,
                        cap,
                    });
                }
                out.push(Garden::paired_tree(t.clone(), pairing)?);
            }
        }
    }
    Ok(out)
}

fn push_pairings(trees: Vec<SignedTree>, out: &mut Vec<Garden>, cap: usize) -> Result<()> {
    // Global leaf indices by sign.
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut idx = 0usize;
    for t in &trees {
        for leaf in t.leaves() {
            if t.sign_of(leaf) == Sign::Plus {
                plus.push(idx);
            } else {
                minus.push(idx);
            }
            idx += 1;
        }
    }
    for m in perfect_matchings(&plus, &minus) {
        let mut pairing = vec![0u32; idx];
        for (a, b) in m {
            pairing[a] = b as u32;
            pairing[b] = a as u32;
        }
        if out.len() >= cap {
            return Err(Error::CapExceeded {
                produced: out.len() + 1,
                cap,
            });
        }
        out.push(Garden::new(trees.clone(), pairing)?);
    }
    Ok(())
}

fn compose(
    total: usize,
    at: usize,
    parts: &mut Vec<usize>,
    f: &mut impl FnMut(&Vec<usize>) -> Result<()>,
) -> Result<()> {
    if at + 1 == parts.len() {
        parts[at] = total;
        return f(parts);
    }
    for v in 0..=total {
        parts[at] = v;
        compose(total - v, at + 1, parts, f)?;
    }
    Ok(())
}

fn cartesian<T>(
    lists: &[Vec<T>],
    at: usize,
    pick: &mut Vec<usize>,
    f: &mut impl FnMut(&Vec<usize>) -> Result<()>,
) -> Result<()> {
    if at == lists.len() {
        return f(pick);
    }
    for j in 0..lists[at].len() {
        pick[at] = j;
        cartesian(lists, at + 1, pick, f)?;
    }
    Ok(())
}

/// Number of couples of the given order (used as an enumeration oracle):
/// sum over tree-order splits of shape counts times (n+1)! pairings.
pub fn couple_census(order: usize) -> u128 {
    let mut total = 0u128;
    let fact = |m: u128| (1..=m).product::<u128>();
    for np in 0..=order {
        let nm = order - np;
        total += tree_census(np) * tree_census(nm) * fact(order as u128 + 1);
    }
    total
}

// ----- text form -------------------------------------------------------------

impl fmt::Display for Garden {
    /// `[T0; T1; ...]{a-b, c-d, e*}` with global leaf indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str("]{")?;
        let mut first = true;
        for (a, b) in self.pairs() {
            if !first {
                f.write_str(", ")?;
            }
            write!(f, "{a}-{b}")?;
            first = false;
        }
        if let Some(l) = self.lone_leaf() {
            if !first {
                f.write_str(", ")?;
            }
            write!(f, "{l}*")?;
        }
        f.write_str("}")
    }
}

impl std::str::FromStr for Garden {
    type Err = Error;
    fn from_str(s: &str) -> Result<Garden> {
        let s = s.trim();
        let open = s
            .strip_prefix('[')
            .ok_or_else(|| Error::Parse("garden must start with '['".into()))?;
        let close = open
            .find(']')
            .ok_or_else(|| Error::Parse("missing ']'".into()))?;
        let trees: Vec<SignedTree> = open[..close]
            .split(';')
            .map(|t| t.trim().parse())
            .collect::<Result<_>>()?;
        let rest = open[close + 1..].trim();
        let body = rest
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Parse("pairing must be wrapped in {}".into()))?;
        let n_leaves: usize = trees.iter().map(|t| t.leaf_count()).sum();
        let mut pairing = vec![u32::MAX; n_leaves];
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if let Some(lone) = item.strip_suffix('*') {
                let i: usize = lone
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad lone leaf {item:?}")))?;
                if i >= n_leaves {
                    return Err(Error::Parse("leaf index out of range".into()));
                }
                pairing[i] = i as u32;
            } else {
                let (a, b) = item
                    .split_once('-')
                    .ok_or_else(|| Error::Parse(format!("bad pair {item:?}")))?;
                let a: usize = a.trim().parse().map_err(|_| Error::Parse("bad index".into()))?;
                let b: usize = b.trim().parse().map_err(|_| Error::Parse("bad index".into()))?;
                if a >= n_leaves || b >= n_leaves {
                    return Err(Error::Parse("leaf index out of range".into()));
                }
                pairing[a] = b as u32;
                pairing[b] = a as u32;
            }
        }
        if pairing.iter().any(|&x| x == u32::MAX) {
            return Err(Error::Parse("pairing does not cover all leaves".into()));
        }
        Garden::new(trees, pairing)
    }
}
