//! The solar-system / Rutherford-atom analogy.
//!
//! Base is the solar system, target the atom. Node ids follow the order of the
//! statements in the data files: atom ids are the usual figure numbers minus
//! one, solar ids are the figure numbers minus eight with the AND node at 10,
//! CAUSES at 11 and YELLOW at 12.

mod common;

use std::collections::BTreeSet;

use amn_core::encoding::{make_label_graphs, make_signature_graphs, EncodingConfig, ENTITY_TOKEN};
use amn_core::ir::{graph_from_json, graph_to_json, mapping_to_dot, parse_sexpr, Mapping};
use amn_core::matcher::{enumerate_hypotheses, solve_exact, solve_greedy, SearchBudget};
use amn_core::smt::{self, CorrSet};
use amn_core::{NodeId, RelGraph};
use common::oracle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn load(name: &str) -> RelGraph {
    let path = format!("{}/../../data/{name}.sexp", env!("CARGO_MANIFEST_DIR"));
    parse_sexpr(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn solar() -> RelGraph {
    load("solar")
}

fn atom() -> RelGraph {
    load("atom")
}

/// Solar node for a figure number.
fn s(fig: usize) -> NodeId {
    NodeId(match fig {
        8..=17 => fig - 8,
        18 => 11,
        19 => 12,
        _ => panic!("not a solar node"),
    })
}

/// Atom node for a figure number.
fn a(fig: usize) -> NodeId {
    assert!((1..=7).contains(&fig));
    NodeId(fig - 1)
}

const AND: NodeId = NodeId(10);

/// Builds a correspondence set from (atom, solar) figure-number pairs.
fn corr(pairs: &[(usize, usize)]) -> CorrSet {
    pairs.iter().map(|&(t, b)| (s(b), a(t))).collect()
}

fn full() -> CorrSet {
    corr(&[(1, 8), (2, 9), (3, 10), (4, 11), (5, 17), (6, 14), (7, 15)])
}

#[test]
fn parsed_node_counts() {
    let at = atom();
    assert_eq!((at.expression_count(), at.entity_count()), (5, 2));
    let so = solar();
    assert_eq!((so.expression_count(), so.entity_count()), (11, 2));
    let causes = so.node(s(18));
    assert_eq!(causes.label, "CAUSES");
    assert_eq!(causes.args.len(), 2);
    assert_eq!(so.node(causes.args[0]).label, "AND");
    assert_eq!(so.node(AND).args, vec![s(15), s(17)]);
}

#[test]
fn atom_topological_layers() {
    let layers = atom().topo_layers().unwrap();
    assert_eq!(layers, vec![vec![a(1), a(2)], vec![a(3), a(4), a(5), a(6)], vec![a(7)]]);
}

#[test]
fn rooted_subgraphs() {
    let sub = atom().rooted_subgraph(a(7)).unwrap();
    assert_eq!(sub, [a(7), a(3), a(4), a(1), a(2)].into_iter().collect());
    let so = solar();
    let sub = so.rooted_subgraph(s(18)).unwrap();
    let expected: BTreeSet<NodeId> =
        [18, 15, 17, 14, 10, 11, 8, 9].into_iter().map(s).chain([AND]).collect();
    assert_eq!(sub, expected);
    assert_eq!(sub, oracle::descendants(&so, s(18)));
    assert_eq!(so.rooted_subgraph(s(8)).unwrap().len(), 1);
}

#[test]
fn json_round_trip_and_dot_edges() {
    for g in [atom(), solar()] {
        assert_eq!(graph_from_json(&graph_to_json(&g)).unwrap(), g);
    }
    let m = solve_exact(&solar(), &atom(), &SearchBudget::default()).unwrap();
    let dot = mapping_to_dot(&solar(), &atom(), &m);
    assert_eq!(dot.matches("class=correspondence").count(), m.correspondences.len());
}

#[test]
fn one_to_one_examples() {
    let m = corr(&[(7, 15), (7, 16)]);
    assert_eq!(smt::check_one_to_one(&m).len(), 1);
    assert!(smt::check_one_to_one(&corr(&[(1, 8), (2, 9)])).is_empty());
    assert!(smt::check_one_to_one(&CorrSet::new()).is_empty());
}

#[test]
fn parallel_connectivity_examples() {
    let (b, t) = (solar(), atom());
    let pc = smt::check_parallel_connectivity(&b, &t, &corr(&[(7, 15), (3, 10), (4, 11)]));
    assert!(!pc.contains(&(s(15), a(7))));
    // the MASS pairs themselves need their entity arguments
    assert_eq!(pc.len(), 2);
    let closed = corr(&[(7, 15), (3, 10), (4, 11), (1, 8), (2, 9)]);
    assert!(smt::check_parallel_connectivity(&b, &t, &closed).is_empty());
    assert_eq!(smt::check_parallel_connectivity(&b, &t, &corr(&[(7, 15)])), vec![(s(15), a(7))]);
}

#[test]
fn crossed_ordered_arguments_violate() {
    let b = parse_sexpr("(GREATER a b)").unwrap();
    let t = parse_sexpr("(GREATER x y)").unwrap();
    let m: CorrSet = [(NodeId(2), NodeId(2)), (NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))].into();
    assert_eq!(smt::check_parallel_connectivity(&b, &t, &m), vec![(NodeId(2), NodeId(2))]);
    assert!(!oracle::error_free(&b, &t, &m));
}

#[test]
fn tiered_identicality_examples() {
    let weight = parse_sexpr(
        ":function MASS :function WEIGHT sun planet (GREATER (WEIGHT sun) (MASS planet))",
    )
    .unwrap();
    let t = atom();
    // base: sun0 planet1 WEIGHT(sun)2 MASS(planet)3 GREATER4
    let m: CorrSet = [
        (NodeId(4), a(7)),
        (NodeId(2), a(3)),
        (NodeId(3), a(4)),
        (NodeId(0), a(1)),
        (NodeId(1), a(2)),
    ]
    .into();
    assert!(smt::check_tiered_identicality(&weight, &t, &m).is_empty());
    assert!(smt::is_error_free(&weight, &t, &m));
    assert!(oracle::error_free(&weight, &t, &m));

    let (b, t) = (solar(), atom());
    assert_eq!(smt::check_tiered_identicality(&b, &t, &corr(&[(5, 14)])).len(), 1);
    assert_eq!(smt::check_tiered_identicality(&b, &t, &corr(&[(3, 12)])).len(), 1);
}

#[test]
fn degenerate_examples() {
    let (b, t) = (solar(), atom());
    assert_eq!(smt::find_degenerate(&b, &t, &corr(&[(1, 8)])), vec![(s(8), a(1))]);
    assert!(smt::find_degenerate(&b, &t, &corr(&[(1, 8), (5, 17)])).is_empty());
    assert!(smt::find_degenerate(&b, &t, &corr(&[(7, 15), (5, 17)])).is_empty());
}

#[test]
fn full_mapping_scores_eleven() {
    let (b, t) = (solar(), atom());
    let m = full();
    assert!(smt::is_error_free(&b, &t, &m));
    assert!(oracle::error_free(&b, &t, &m));
    let sc = smt::score(&b, &t, &m);
    assert_eq!(sc.total, 11);
    assert_eq!(sc.roots, corr(&[(7, 15), (5, 17), (6, 14)]));
    let mut sizes: Vec<u64> = sc.per_root.iter().map(|r| r.size).collect();
    sizes.sort();
    assert_eq!(sizes, vec![3, 3, 5]);
    assert_eq!(oracle::dfs_score(&b, &t, &m), 11);
}

#[test]
fn small_mapping_scores() {
    let (b, t) = (solar(), atom());
    assert_eq!(smt::score(&b, &t, &CorrSet::new()).total, 0);
    // MASS pairs without their entities are not parallel connected
    assert_eq!(smt::score(&b, &t, &corr(&[(3, 10), (4, 11)])).total, 0);
    let with_entities = corr(&[(3, 10), (4, 11), (1, 8), (2, 9)]);
    let sc = smt::score(&b, &t, &with_entities);
    assert_eq!(sc.total, 4);
    assert_eq!(sc.roots, corr(&[(3, 10), (4, 11)]));
}

#[test]
fn candidate_inferences_of_full_mapping() {
    let b = solar();
    let m = full();
    let ci = smt::candidate_inferences(&b, &m);
    assert!(ci.contains(&s(18)) && ci.contains(&AND));
    let expected: BTreeSet<NodeId> = [s(12), s(13), s(16), AND, s(18), s(19)].into();
    assert_eq!(ci, expected);
    assert_eq!(ci, oracle::ci_closure(&b, &m));
    assert!(smt::candidate_inferences(&b, &CorrSet::new()).is_empty());
}

#[test]
fn projection_of_causes() {
    let (b, t) = (solar(), atom());
    let p = smt::project_inference(&b, &t, &full(), s(18)).unwrap();
    // target ids are figure numbers minus one: AND([7],[5]), [6]
    assert_eq!(p.to_string(), "CAUSES(AND([6],[4]),[5])");
    assert_eq!(p.skolem_count(), 0);
    let text = p.render_in(&t);
    assert!(text.contains("ATTRACTS") && text.contains("REVOLVES-AROUND") && text.contains("GREATER"));
}

#[test]
fn hypotheses_of_the_pair() {
    let hyps: BTreeSet<(NodeId, NodeId)> = enumerate_hypotheses(&solar(), &atom())
        .into_iter()
        .map(|h| (h.base, h.target))
        .collect();
    assert!(hyps.contains(&(s(15), a(7))));
    assert!(hyps.contains(&(s(16), a(7))));
    assert!(!hyps.contains(&(s(14), a(5))));
    let independent: BTreeSet<_> = oracle::hypotheses(&solar(), &atom()).into_iter().collect();
    assert_eq!(hyps, independent);
}

#[test]
fn oracle_recovers_the_analogy() {
    let (b, t) = (solar(), atom());
    let m = solve_exact(&b, &t, &SearchBudget::default()).unwrap();
    assert_eq!(m.correspondences, full());
    assert_eq!(m.score, 11);
    assert!(m.inferences.contains(&s(18)));
    let g = solve_greedy(&b, &t);
    assert_eq!(g.correspondences, m.correspondences);
    let (best, _) = oracle::exhaustive_best(&b, &t);
    assert_eq!(best, 11);
}

#[test]
fn label_graph_shares_mass_label() {
    let (b, t) = (solar(), atom());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (lb, lt, assign) = make_label_graphs(&b, &t, &EncodingConfig::default(), &mut rng).unwrap();
    let mass = &lb.node(s(10)).label;
    for l in [&lb.node(s(11)).label, &lt.node(a(3)).label, &lt.node(a(4)).label] {
        assert_eq!(l, mass);
    }
    assert_ne!(&lb.node(s(12)).label, mass);
    assert_eq!(lb.node(s(8)).label, ENTITY_TOKEN);
    let labels: BTreeSet<&String> = assign.symbols.values().collect();
    assert_eq!(labels.len(), assign.symbols.len());
}

#[test]
fn signature_graph_identities() {
    let (b, t) = (solar(), atom());
    let (sb, st, assign) = make_signature_graphs(&b, &t, &EncodingConfig::default()).unwrap();
    let tok = &sb.node(s(17)).label;
    assert_eq!(&sb.node(s(14)).label, tok);
    assert_eq!(&st.node(a(5)).label, tok);
    assert_eq!(&st.node(a(6)).label, tok);
    let ids: BTreeSet<&String> = assign.base.values().chain(assign.target.values()).collect();
    assert_eq!(ids.len(), 4);
    assert_ne!(sb.node(s(8)).label, st.node(a(1)).label);
}

#[test]
fn mapping_validation() {
    let (b, t) = (solar(), atom());
    let mut m = Mapping { correspondences: full(), ..Default::default() };
    m.inferences = smt::candidate_inferences(&b, &m.correspondences);
    assert!(m.validate(&b, &t).is_ok());
    m.inferences.insert(s(8));
    assert!(m.validate(&b, &t).is_err());
}
