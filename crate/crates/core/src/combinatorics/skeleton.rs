use crate::combinatorics::garden::{Garden, Loc};
use crate::combinatorics::regular::{
    decompose_regular_couple, decompose_regular_tree, is_mini_couple, is_mini_tree,
};
use crate::combinatorics::tree::SignedTree;
use crate::error::{Error, Result};
use crate::sign::Sign;
use std::collections::HashMap;

/// Prime skeleton of a garden: every embedded two-generation mini-object has
/// been collapsed away, leaving a prime garden plus the regular couple grown
/// at each of its leaf pairs and the regular paired tree grown at each of its
/// branching nodes (trivial plants included for uniformity).
#[derive(Clone, Debug)]
pub struct Skeleton {
    pub garden: Garden,
    /// Keyed by the + leaf's global index in `garden`, one entry per pair.
    pub couples: Vec<(usize, Garden)>,
    /// One entry per branching node of `garden`, plus one for the lone leaf
    /// when the garden is a paired tree (plants can grow above it too).
    pub trees: Vec<(Loc, Garden)>,
    /// For each node of `garden`: the original node heading the structure
    /// grown above it, and the original node it stands for (None for the
    /// fresh leaves left behind by couple collapses).
    pub origin: HashMap<Loc, (Loc, Option<Loc>)>,
}

/// First embedded mini-couple (u, v): branching nodes of opposite sign with
/// all-leaf children whose extraction is a mini-couple.
fn find_mini_couple(g: &Garden, pick_last: bool) -> Option<(Loc, Loc)> {
    let mut found = None;
    let shallow: Vec<Loc> = locs(g)
        .into_iter()
        .filter(|&l| {
            g.tree(l.tree)
                .children(l.node)
                .is_some_and(|ch| ch.iter().all(|&c| g.tree(l.tree).is_leaf(c)))
        })
        .collect();
    for &u in &shallow {
        if g.tree(u.tree).sign_of(u.node) != Sign::Plus {
            continue;
        }
        for &v in &shallow {
            if g.tree(v.tree).sign_of(v.node) != Sign::Minus
                || !g.is_embedded_sub_couple(u, v)
                || !is_mini_couple(&g.extract_sub_couple(u, v).unwrap())
            {
                continue;
            }
            if !pick_last {
                return Some((u, v));
            }
            found = Some((u, v));
        }
    }
    found
}

/// First embedded mini-tree (n, d): d's parent and grandparent are branching
/// with all other children leaves, and the band between n and d extracts to a
/// mini-tree.
fn find_mini_tree(g: &Garden, pick_last: bool) -> Option<(Loc, Loc)> {
    let mut found = None;
    for d in locs(g) {
        let t = g.tree(d.tree);
        let Some(n2) = t.parent(d.node) else { continue };
        let Some(n) = t.parent(n2) else { continue };
        let others_leaves = |node: usize, except: usize| {
            t.children(node)
                .unwrap()
                .iter()
                .all(|&c| c == except || t.is_leaf(c))
        };
        if !others_leaves(n, n2) || !others_leaves(n2, d.node) {
            continue;
        }
        let anc = Loc::new(d.tree, n);
        if !g.is_embedded_sub_paired_tree(anc, d)
            || !is_mini_tree(&g.extract_sub_paired_tree(anc, d).unwrap())
        {
            continue;
        }
        if !pick_last {
            return Some((anc, d));
        }
        found = Some((anc, d));
    }
    found
}

fn locs(g: &Garden) -> Vec<Loc> {
    let mut out = Vec::new();
    for (ti, t) in g.trees().iter().enumerate() {
        for n in 0..t.node_count() {
            out.push(Loc::new(ti, n));
        }
    }
    out
}

/// No embedded mini-couple or mini-tree.
pub fn is_prime(g: &Garden) -> bool {
    find_mini_couple(g, false).is_none() && find_mini_tree(g, false).is_none()
}

pub fn skeleton_decompose(g: &Garden) -> Result<Skeleton> {
    skeleton_with_strategy(g, false)
}

/// Provenance of a node of the working garden: `top` is the original node
/// heading the structure accumulated above it, `orig` the original node it
/// currently stands for (None for fresh pair leaves).
#[derive(Copy, Clone)]
struct Prov {
    top: Loc,
    orig: Option<Loc>,
}

fn skeleton_with_strategy(g: &Garden, pick_last: bool) -> Result<Skeleton> {
    let mut w = g.clone();
    let mut prov: HashMap<Loc, Prov> = locs(&w)
        .into_iter()
        .map(|l| {
            (
                l,
                Prov {
                    top: l,
                    orig: Some(l),
                },
            )
        })
        .collect();

    loop {
        if let Some((u, v)) = find_mini_couple(&w, pick_last) {
            let next = w.collapse_sub_couple(u, v)?;
            let mut np = HashMap::new();
            let ranges = [
                (u.tree, w.tree(u.tree).subtree_range(u.node)),
                (v.tree, w.tree(v.tree).subtree_range(v.node)),
            ];
            for (l, p) in &prov {
                if ranges
                    .iter()
                    .any(|(t, r)| l.tree == *t && r.contains(&l.node))
                {
                    continue;
                }
                let mut node = l.node;
                for (t, r) in &ranges {
                    if l.tree == *t && l.node >= r.end {
                        node -= r.len() - 1;
                    }
                }
                np.insert(Loc::new(l.tree, node), *p);
            }
            for (side, r) in [(u, &ranges[0].1), (v, &ranges[1].1)] {
                let mut node = side.node;
                for (t, r2) in &ranges {
                    if side.tree == *t && side.node >= r2.end {
                        node -= r2.len() - 1;
                    }
                }
                debug_assert!(r.contains(&side.node));
                np.insert(
                    Loc::new(side.tree, node),
                    Prov {
                        top: prov[&side].top,
                        orig: None,
                    },
                );
            }
            w = next;
            prov = np;
        } else if let Some((n, d)) = find_mini_tree(&w, pick_last) {
            let next = w.collapse_sub_paired_tree(n, d)?;
            let outer = w.tree(n.tree).subtree_range(n.node);
            let inner = w.tree(d.tree).subtree_range(d.node);
            let shrink = outer.len() - inner.len();
            let mut np = HashMap::new();
            for (l, p) in &prov {
                if l.tree != n.tree || l.node < outer.start {
                    np.insert(*l, *p);
                } else if inner.contains(&l.node) {
                    let new = Loc::new(l.tree, n.node + (l.node - inner.start));
                    if l.node == d.node {
                        // The re-planted node inherits the band's top.
                        np.insert(
                            new,
                            Prov {
                                top: prov[&n].top,
                                orig: p.orig,
                            },
                        );
                    } else {
                        np.insert(new, *p);
                    }
                } else if l.node >= outer.end {
                    np.insert(Loc::new(l.tree, l.node - shrink), *p);
                }
                // band nodes outside the kept subtree disappear
            }
            w = next;
            prov = np;
        } else {
            break;
        }
    }

    // Extract the planted objects from the original garden.
    let mut couples = Vec::new();
    for (a, b) in w.pairs_signed() {
        let (ta, tb) = (prov[&w.leaf_loc(a)].top, prov[&w.leaf_loc(b)].top);
        let q = g.extract_sub_couple(ta, tb)?;
        if decompose_regular_couple(&q).is_none() {
            return Err(Error::invalid(format!(
                "extracted couple at pair ({a}, {b}) is not regular: {q}"
            )));
        }
        couples.push((a, q));
    }
    let mut trees = Vec::new();
    let mut plant_sites: Vec<Loc> = Vec::new();
    for (ti, t) in w.trees().iter().enumerate() {
        for node in t.branching_nodes() {
            plant_sites.push(Loc::new(ti, node));
        }
    }
    plant_sites.extend(w.lone_leaf_loc());
    for l in plant_sites {
        let p = prov[&l];
        let orig = p.orig.expect("skeleton plant site lost its origin");
        let pt = if p.top == orig {
            trivial_paired_tree(w.tree(l.tree).sign_of(l.node))
        } else {
            g.extract_sub_paired_tree(p.top, orig)?
        };
        if decompose_regular_tree(&pt).is_none() {
            return Err(Error::invalid(format!(
                "extracted tree at {l:?} is not regular: {pt}"
            )));
        }
        trees.push((l, pt));
    }
    let origin = prov
        .iter()
        .map(|(&l, p)| (l, (p.top, p.orig)))
        .collect();
    Ok(Skeleton {
        garden: w,
        couples,
        trees,
        origin,
    })
}

fn trivial_paired_tree(sign: Sign) -> Garden {
    Garden::paired_tree(SignedTree::trivial(sign), vec![0]).unwrap()
}

// ----- reconstruction ---------------------------------------------------------

#[derive(Copy, Clone, PartialEq, Eq, Hash)]
enum Key {
    Lone,
    /// (pair id, leaf index within the planted couple)
    Pair(usize, usize),
    /// (skeleton branching node, leaf index within the planted tree)
    Tree(Loc, usize),
}

/// Provenance of one node of a reconstructed garden.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum NodeSource {
    /// A node of the skeleton garden itself: a branching node re-planted at
    /// the lone leaf of its tree, or the garden's own lone leaf.
    Skeleton(Loc),
    /// Node `node` of the paired tree planted at skeleton node `site`
    /// (never the plant's lone leaf, which the skeleton node occupies).
    Plant { site: Loc, node: usize },
    /// Node `node` on side `side` of the couple planted at pair `pair`
    /// (an index into `Skeleton::couples`).
    Couple { pair: usize, side: usize, node: usize },
}

pub struct Reconstruction {
    pub garden: Garden,
    /// Per tree, per node in preorder: where each rebuilt node came from.
    pub sources: Vec<Vec<NodeSource>>,
}

/// Rebuild the original garden from a skeleton: grow the planted tree above
/// each branching node and the planted couple in place of each leaf pair.
pub fn skeleton_reconstruct(sk: &Skeleton) -> Result<Garden> {
    Ok(skeleton_reconstruct_traced(sk)?.garden)
}

/// Reconstruction that also reports, for every node of the result, which
/// skeleton node or planted object it came from.
pub fn skeleton_reconstruct_traced(sk: &Skeleton) -> Result<Reconstruction> {
    let skg = &sk.garden;
    let pair_of_plus: HashMap<usize, usize> = sk
        .couples
        .iter()
        .enumerate()
        .map(|(i, &(plus, _))| (plus, i))
        .collect();
    let tree_at: HashMap<Loc, &Garden> = sk.trees.iter().map(|(l, t)| (*l, t)).collect();

    let mut trees = Vec::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut sources = Vec::new();
    for (ti, t) in skg.trees().iter().enumerate() {
        let mut shape = String::new();
        let mut src = Vec::new();
        render(
            sk,
            &pair_of_plus,
            &tree_at,
            Loc::new(ti, 0),
            &mut shape,
            &mut keys,
            &mut src,
        );
        let text = format!("{}{}", t.sign(), shape);
        let parsed = text.parse::<SignedTree>()?;
        // Nodes are emitted in the same preorder the parser assigns ids in.
        debug_assert_eq!(parsed.node_count(), src.len());
        trees.push(parsed);
        sources.push(src);
    }
    let mut key_to_idx = HashMap::new();
    for (i, &k) in keys.iter().enumerate() {
        key_to_idx.insert(k, i);
    }
    let mut pairing = vec![0u32; keys.len()];
    for (i, &k) in keys.iter().enumerate() {
        let partner = match k {
            Key::Lone => k,
            Key::Pair(p, j) => Key::Pair(p, sk.couples[p].1.partner(j)),
            Key::Tree(l, j) => Key::Tree(l, tree_at[&l].partner(j)),
        };
        pairing[i] = key_to_idx[&partner] as u32;
    }
    let garden = Garden::new(trees, pairing)?;
    Ok(Reconstruction { garden, sources })
}

/// Emit the shape (with plants expanded) of the skeleton subtree at `w`,
/// pushing leaf keys and node sources in preorder.
#[allow(clippy::too_many_arguments)]
fn render(
    sk: &Skeleton,
    pair_of_plus: &HashMap<usize, usize>,
    tree_at: &HashMap<Loc, &Garden>,
    w: Loc,
    out: &mut String,
    keys: &mut Vec<Key>,
    src: &mut Vec<NodeSource>,
) {
    let t = sk.garden.tree(w.tree);
    if t.is_leaf(w.node) {
        let idx = sk.garden.leaf_index(w).unwrap();
        let p = sk.garden.partner(idx);
        if p == idx {
            // Lone leaf; a plant may still have grown above it.
            if let Some(pt) = tree_at.get(&w) {
                let lone = pt.lone_leaf_loc().unwrap().node;
                render_plant(sk, pair_of_plus, tree_at, pt, lone, 0, w, true, out, keys, src);
            } else {
                out.push('.');
                keys.push(Key::Lone);
                src.push(NodeSource::Skeleton(w));
            }
            return;
        }
        let plus = if sk.garden.leaf_sign(idx) == Sign::Plus {
            idx
        } else {
            p
        };
        let pair = pair_of_plus[&plus];
        let q = &sk.couples[pair].1;
        let side = if sk.garden.leaf_sign(idx) == Sign::Plus {
            0
        } else {
            1
        };
        render_plain(q, side, 0, pair, out, keys, src);
    } else if let Some(pt) = tree_at.get(&w) {
        let lone = pt.lone_leaf_loc().unwrap().node;
        render_plant(sk, pair_of_plus, tree_at, pt, lone, 0, w, false, out, keys, src);
    } else {
        render_core(sk, pair_of_plus, tree_at, w, out, keys, src);
    }
}

/// The node at `w` itself, children rendered recursively.
fn render_core(
    sk: &Skeleton,
    pair_of_plus: &HashMap<usize, usize>,
    tree_at: &HashMap<Loc, &Garden>,
    w: Loc,
    out: &mut String,
    keys: &mut Vec<Key>,
    src: &mut Vec<NodeSource>,
) {
    let ch = sk.garden.tree(w.tree).children(w.node).unwrap();
    out.push('(');
    src.push(NodeSource::Skeleton(w));
    for (i, &c) in ch.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        render(sk, pair_of_plus, tree_at, Loc::new(w.tree, c), out, keys, src);
    }
    out.push(')');
}

/// Walk a planted paired tree; at its lone leaf, re-plant the skeleton node
/// (a branching core, or the garden's lone leaf itself).
#[allow(clippy::too_many_arguments)]
fn render_plant(
    sk: &Skeleton,
    pair_of_plus: &HashMap<usize, usize>,
    tree_at: &HashMap<Loc, &Garden>,
    pt: &Garden,
    lone: usize,
    node: usize,
    w: Loc,
    core_is_lone_leaf: bool,
    out: &mut String,
    keys: &mut Vec<Key>,
    src: &mut Vec<NodeSource>,
) {
    let t = pt.tree(0);
    if node == lone {
        if core_is_lone_leaf {
            out.push('.');
            keys.push(Key::Lone);
            src.push(NodeSource::Skeleton(w));
        } else {
            render_core(sk, pair_of_plus, tree_at, w, out, keys, src);
        }
        return;
    }
    if t.is_leaf(node) {
        out.push('.');
        keys.push(Key::Tree(w, pt.leaf_index(Loc::new(0, node)).unwrap()));
        src.push(NodeSource::Plant { site: w, node });
        return;
    }
    let ch = t.children(node).unwrap();
    out.push('(');
    src.push(NodeSource::Plant { site: w, node });
    for (i, &c) in ch.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        render_plant(
            sk,
            pair_of_plus,
            tree_at,
            pt,
            lone,
            c,
            w,
            core_is_lone_leaf,
            out,
            keys,
            src,
        );
    }
    out.push(')');
}

/// Walk one side of a planted couple, emitting pair keys.
fn render_plain(
    q: &Garden,
    side: usize,
    node: usize,
    pair: usize,
    out: &mut String,
    keys: &mut Vec<Key>,
    src: &mut Vec<NodeSource>,
) {
    let t = q.tree(side);
    if t.is_leaf(node) {
        out.push('.');
        keys.push(Key::Pair(pair, q.leaf_index(Loc::new(side, node)).unwrap()));
        src.push(NodeSource::Couple { pair, side, node });
        return;
    }
    let ch = t.children(node).unwrap();
    out.push('(');
    src.push(NodeSource::Couple { pair, side, node });
    for (i, &c) in ch.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        render_plain(q, side, c, pair, out, keys, src);
    }
    out.push(')');
}
