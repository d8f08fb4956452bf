mod common;

use common::*;
use cuspflow::complex::*;
use std::collections::BTreeMap;

#[test]
fn figure_eight_fixture() {
    let spec = parse_complex(FIGURE_EIGHT).unwrap();
    assert_eq!(spec.initial_metric(), Some(&[1.0, 1.0][..]));
    let c = build_complex(&spec).unwrap();
    assert_eq!((c.tet_count(), c.edge_count(), c.vertex_count()), (2, 2, 1));
    assert_eq!(c.valence_histogram(), BTreeMap::from([(6, 2)]));
    assert_eq!(c.constant_valence(), Some(6));
    assert_eq!(c.gauge().rank(), 1);
    assert_eq!(c.gauge().quotient_dim(), 1);
    for e in 0..2 {
        assert_eq!(c.endpoints(e), [0, 0]);
        assert_eq!(c.incidence().row(e), &[2]);
    }
}

#[test]
fn gieseking_fixture() {
    let c = gieseking();
    assert_eq!((c.tet_count(), c.edge_count(), c.vertex_count()), (1, 1, 1));
    assert_eq!(c.valences(), vec![6]);
    assert_eq!(c.quads().len(), 3);
}

#[test]
fn double_tet_fixture() {
    let c = double_tet();
    assert_eq!((c.tet_count(), c.edge_count(), c.vertex_count()), (2, 6, 4));
    assert_eq!(c.constant_valence(), Some(2));
    assert_eq!(c.gauge().rank(), 4);
    for e in 0..6 {
        let [a, b] = c.endpoints(e);
        assert_ne!(a, b);
    }
}

#[test]
fn fixtures_round_trip_through_display() {
    for src in [FIGURE_EIGHT, GIESEKING, DOUBLE_TET] {
        let spec = parse_complex(src).unwrap();
        assert_eq!(parse_complex(&spec.to_string()).unwrap(), spec);
    }
}

#[test]
fn open_face_is_reported() {
    let src = "tetrahedra 1\nglue 0 0 -> 0 1203\nglue 0 1 -> 0 2013\nglue 0 2 -> 0 0231\n";
    let spec = parse_complex(src).unwrap();
    match build_complex(&spec) {
        Err(ComplexError::Invalid(v)) => {
            assert!(
                v.contains(&Violation::OpenFace { tet: 0, face: 3 }),
                "{v:?}"
            );
        }
        other => panic!("expected violations, got {other:?}"),
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let err = parse_complex("# comment\ntetrahedra 1\nglue 0 0 -> 0 12x3\n").unwrap_err();
    assert_eq!(err.line, 3);
    assert!(matches!(err.kind, ParseErrorKind::MalformedPermutation(_)));
    let err = parse_complex("glue 0 0 -> 0 0123\n").unwrap_err();
    assert!(matches!(err.kind, ParseErrorKind::MissingHeader));
}

#[test]
fn random_gluings_satisfy_euler_relations() {
    for seed in 0..20 {
        let c = random_complex(seed);
        let total: usize = c.valences().iter().sum();
        assert_eq!(total, 6 * c.tet_count());
        assert_eq!(c.quads().len(), 3 * c.tet_count());
    }
}
