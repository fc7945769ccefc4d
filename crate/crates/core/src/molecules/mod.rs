//! Molecules: directed multigraphs distilled from gardens, and the surgery
//! toolkit that operates on them — Kirchhoff decorations, blocks and their
//! splicing, ladders and vines, twists, gap classification, and cuts.

pub mod blocks;
pub mod build;
pub mod cut;
pub mod decorate;
pub mod gap;
pub mod graph;
pub mod lf_twist;
pub mod twist;
pub mod vines;
pub mod wedge;

pub use blocks::{
    classify_block, contract_block, enumerate_blocks, is_block, splice, Block, BlockClass,
    ClBlock, CnBlock, Splice,
};
pub use lf_twist::{
    apply_layered_twist, layered_twist_replacements, layered_twist_site, layered_twist_sites,
    lf_twist, top_counts_per_tree, LayeredTwist, LayeredTwistSite,
};
pub use twist::{
    classify_vine, splice_vine, twist, twist_classified, ClassifiedVine, Twist, VineCase,
    VineClass,
};
pub use vines::{
    find_ladders, find_vines, ladder_incoherency, rungs, vine_incoherency, Ladder, Vine,
    VineKind,
};

pub use build::build_molecule;
pub use cut::{cut, cut_choices, cut_invariant, CutOutcome};
pub use gap::{
    block_gap, classify_gap, gap_at, ladder_gap, rail_gap, vine_gap, GapClass, DEFAULT_ETA,
};
pub use decorate::{decorate_molecule, garden_decoration_from_molecule, BoundaryValues, MoleculeDecoration};
pub use graph::{Atom, AtomId, AtomMark, Bond, BondId, BondLabel, Molecule};
pub use wedge::{wedge_basis, WedgeBasis};
