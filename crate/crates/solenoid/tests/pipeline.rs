//! End-to-end runs over the named fixtures, from sequence generation
//! through audits, solenoid probes and weight-cone certificates.

use solenoid::fixtures::{load_fixture, repeat_ab, theta_cycle, FixtureError};
use solenoid::graph_core::Point;
use solenoid::measure_cones::metric::delta_of;
use solenoid::measure_cones::{
    certify_unique_ergodicity, cone_approximation, evaluate_transverse_measure, perron_weights,
    veech_inequality_check, CertificateStatus,
};
use solenoid::ratio::{int, rat};
use solenoid::sequence_lab::audits::{audit_expanding, scan_full_mingling, scan_semi_normality};
use solenoid::sequence_lab::{AuditConfig, SplitSequence};
use solenoid::solenoid_scope::{
    compute_fiber, decompose_turn_transversal, scan_star_chains, trace_partial_leaf, LeafStatus,
    PointSpec, TurnSpec,
};
use solenoid::{FloatMatrix, IntMatrix, RatMatrix};

fn theta(depth: usize) -> SplitSequence {
    let mut s = theta_cycle().unwrap();
    s.extend_to(depth).unwrap();
    s
}

fn p_matrix() -> IntMatrix {
    IntMatrix::from_i64_rows(&[[2, 1, 2], [1, 1, 1], [3, 2, 4]])
}

#[test]
fn unknown_fixture_names_are_reported() {
    assert!(matches!(load_fixture("nope"), Err(FixtureError::UnknownFixture(n)) if n == "nope"));
}

#[test]
fn theta_cycle_is_semi_normal_with_the_period_window() {
    let s = theta(12);
    let (report, cert) = scan_semi_normality(&s, 12, &AuditConfig::default());
    assert!(report.is_verified());
    let cert = cert.unwrap();
    assert!(cert.exact);
    assert_eq!(cert.matrix(), p_matrix());
    assert_eq!(&cert.windows[..3], &[(-3, 0), (-6, -3), (-9, -6)]);
    assert_eq!(delta_of(&p_matrix().to_rational()), Some(rat(4, 1)));
    assert_eq!(
        delta_of(&RatMatrix::from_rows(vec![vec![int(1); 3]; 3])),
        Some(int(1))
    );
}

#[test]
fn theta_cycle_mingles_and_expands() {
    let s = theta(20);
    let cfg = AuditConfig::default();
    assert!(scan_full_mingling(&s, 20, &cfg).0.is_verified());
    assert!(audit_expanding(&s, 20, &cfg).is_verified());
}

#[test]
fn repeat_ab_neither_mingles_nor_is_semi_normal() {
    let mut s = repeat_ab().unwrap();
    s.extend_to(15).unwrap();
    let cfg = AuditConfig::default();
    assert!(!scan_full_mingling(&s, 15, &cfg).0.is_verified());
    assert!(scan_semi_normality(&s, 15, &cfg).1.is_none());
    let c = certify_unique_ergodicity(&s, 15, 1e-8).unwrap();
    assert!(matches!(c.status, CertificateStatus::LowerBoundDim { r } if r >= 2));
}

#[test]
fn period_cone_is_spanned_by_the_columns_of_p() {
    let s = theta(3);
    let c = cone_approximation(&s, 0, 3, false).unwrap();
    assert_eq!(c.generators, p_matrix().columns());
    assert_eq!(c.rank, 3);
}

#[test]
fn fold_segment_point_has_two_preimages() {
    let s = theta(1);
    let g = s.graph(0).unwrap();
    let c = g.natural().index_of_label("c").unwrap();
    let q = PointSpec::on_natural(&s, 0, c, &rat(1, 4)).unwrap();
    let t = compute_fiber(&s, &q, 1).unwrap();
    assert_eq!(t.leaf_count(1), 2);
    let below = s.graph(-1).unwrap();
    let mut found: Vec<(String, String)> = t.layers[1]
        .iter()
        .map(|&i| {
            let (e, pos) = below.natural_coords(&t.nodes[i].point.point).unwrap();
            (below.natural().labels()[e].clone(), pos.to_string())
        })
        .collect();
    found.sort();
    assert_eq!(
        found,
        [("a".into(), "1/4".into()), ("b".into(), "1/4".into())]
    );
}

#[test]
fn theta_leaf_runs_injectively_for_ten_crossings() {
    let s = theta(70);
    let g = s.graph(0).unwrap();
    for label in ["a", "b", "c"] {
        let e = g.natural().index_of_label(label).unwrap();
        let q = PointSpec::on_natural(&s, 0, e, &rat(1, 3)).unwrap();
        let r = trace_partial_leaf(&s, &q, 10, 70).unwrap();
        assert_eq!(r.status, LeafStatus::Injective { hops: 10 });
        assert!(r.depth <= 70);
    }
}

#[test]
fn v_chain_vertex_turns_stay_resolved_to_one_corner() {
    let s = theta(12);
    let (records, census) = scan_star_chains(&s, 12).unwrap();
    assert_eq!(census.candidates.len(), 1);
    let v = *records[census.candidates[0]].vertices.last().unwrap();
    let g = s.graph(0).unwrap();
    let star = g.star(v);
    let turn = TurnSpec::Vertex {
        level: 0,
        vertex: v,
        darts: (star[0], star[2]),
    };
    let d = decompose_turn_transversal(&s, &turn, &Point::Vertex(v), 6).unwrap();
    assert_eq!(d.unresolved, vec![1; 7]);
    assert!(d.pseudo_singular_candidate());
}

#[test]
fn edge_turn_in_c_is_worth_the_weight_of_c() {
    let s = theta(9);
    let ws = perron_weights(&s, 9).unwrap();
    let g = s.graph(0).unwrap();
    let c = g.natural().index_of_label("c").unwrap();
    let turn = TurnSpec::Edge {
        level: 0,
        edge: c,
        from: rat(2, 3),
        to: rat(3, 4),
    };
    for pos in [rat(7, 10), rat(11, 15)] {
        let q = g.point_at_natural(c, &pos);
        let e = evaluate_transverse_measure(&s, &ws, &turn, &q, 5).unwrap();
        assert_eq!(e.value, ws.last().unwrap().entries[c]);
        assert_eq!(e.remainder_bound, 0.0);
    }
}

#[test]
fn coinciding_vectors_give_the_trivial_case() {
    let b = FloatMatrix::from_i64_rows(&[[2, 1, 2], [1, 1, 1], [3, 2, 4]]);
    let u = [0.2, 0.3, 0.5];
    let c = veech_inequality_check(&b, 4.0, &u, &u).unwrap();
    assert_eq!((c.lhs, c.rhs, c.holds), (0.0, 0.0, true));
}

#[test]
fn every_fixture_certifies_with_consistent_bounds() {
    for name in ["THETA_CYCLE", "REPEAT_AB", "RANK3_SP"] {
        let mut s = load_fixture(name).unwrap();
        s.extend_to(15).unwrap();
        let c = certify_unique_ergodicity(&s, 15, 1e-8).unwrap();
        assert!(c.dim_bounds.consistent(), "{name}: {:?}", c.dim_bounds);
        assert_eq!(c.dim_bounds.coarse, 3 * (s.rank() - 1));
    }
}
