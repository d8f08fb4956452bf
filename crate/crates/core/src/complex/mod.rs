//! Combinatorics of closed pseudo 3-manifold triangulations.
//!
//! A triangulation is a set of tetrahedra whose faces are paired by vertex
//! permutations. Edge and vertex classes are the orbits of local edges and
//! local vertices under those face pairings.
//!
//! Local conventions used throughout the crate: the six local edges of a
//! tetrahedron are indexed in lexicographic order of their vertex pairs,
//! `01, 02, 03, 12, 13, 23`, so local edge `k` is opposite local edge `5 - k`
//! and the three quads are `{0, 5}`, `{1, 4}` and `{2, 3}`.

mod incidence;
mod parse;
mod union_find;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

pub use incidence::{Gauge, IncidenceMatrix};
pub use parse::{parse_complex, ParseError, ParseErrorKind};

use union_find::UnionFind;

/// Vertex pairs of the six local edges.
pub const EDGE_VERTICES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local edge pairs forming the three quads of a tetrahedron.
pub const QUAD_EDGES: [[usize; 2]; 3] = [[0, 5], [1, 4], [2, 3]];

/// Local index of the edge joining local vertices `i` and `j`.
pub fn local_edge_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(a != b && b < 4);
    match (a, b) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        _ => 5,
    }
}

/// Quad (0, 1 or 2) containing local edge `k`.
pub fn quad_of_edge(k: usize) -> usize {
    k.min(5 - k)
}

/// A permutation of the four vertex labels of a tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Perm([u8; 4]);

impl Perm {
    pub const IDENTITY: Perm = Perm([0, 1, 2, 3]);

    /// Returns `None` unless `images` is a bijection of `{0, 1, 2, 3}`.
    pub fn new(images: [u8; 4]) -> Option<Self> {
        let mut seen = [false; 4];
        for &x in &images {
            if x > 3 || seen[x as usize] {
                return None;
            }
            seen[x as usize] = true;
        }
        Some(Perm(images))
    }

    pub fn apply(self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn inverse(self) -> Self {
        let mut inv = [0u8; 4];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Perm(inv)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(self, other: Perm) -> Self {
        let mut out = [0u8; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0[other.0[i] as usize];
        }
        Perm(out)
    }

    pub fn is_odd(self) -> bool {
        let mut inversions = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                if self.0[i] > self.0[j] {
                    inversions += 1;
                }
            }
        }
        inversions % 2 == 1
    }

    pub fn images(self) -> [u8; 4] {
        self.0
    }

    pub(crate) fn all() -> impl Iterator<Item = Perm> {
        (0..4u8).flat_map(|a| {
            (0..4u8).flat_map(move |b| {
                (0..4u8).flat_map(move |c| (0..4u8).filter_map(move |d| Perm::new([a, b, c, d])))
            })
        })
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in self.0 {
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for Perm {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let bytes = s.as_bytes();
        if bytes.len() != 4 {
            return Err(());
        }
        let mut images = [0u8; 4];
        for (slot, &b) in images.iter_mut().zip(bytes) {
            if !(b'0'..=b'3').contains(&b) {
                return Err(());
            }
            *slot = b - b'0';
        }
        Perm::new(images).ok_or(())
    }
}

/// Where one face of a tetrahedron is glued.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceGluing {
    pub neighbor: usize,
    /// Maps vertex labels of this tetrahedron to vertex labels of `neighbor`.
    pub perm: Perm,
}

impl FaceGluing {
    /// Face of the neighbor that `face` is glued onto.
    pub fn target_face(&self, face: usize) -> usize {
        self.perm.apply(face)
    }
}

/// Raw face-pairing data, as read from a triangulation file.
#[derive(Debug, Clone, PartialEq)]
pub struct GluingSpec {
    faces: Vec<[Option<FaceGluing>; 4]>,
    initial_metric: Option<Vec<f64>>,
}

impl GluingSpec {
    /// A spec with `tet_count` tetrahedra and every face open.
    pub fn new(tet_count: usize) -> Self {
        Self {
            faces: vec![[None; 4]; tet_count],
            initial_metric: None,
        }
    }

    pub fn tet_count(&self) -> usize {
        self.faces.len()
    }

    pub fn gluing(&self, tet: usize, face: usize) -> Option<FaceGluing> {
        self.faces[tet][face]
    }

    /// Sets the single record for `(tet, face)`.
    pub fn set_gluing(&mut self, tet: usize, face: usize, gluing: Option<FaceGluing>) {
        self.faces[tet][face] = gluing;
    }

    /// Glues `(tet, face)` to `neighbor` and writes the inverse record too.
    pub fn glue_pair(&mut self, tet: usize, face: usize, neighbor: usize, perm: Perm) {
        self.faces[tet][face] = Some(FaceGluing { neighbor, perm });
        self.faces[neighbor][perm.apply(face)] = Some(FaceGluing {
            neighbor: tet,
            perm: perm.inverse(),
        });
    }

    pub fn initial_metric(&self) -> Option<&[f64]> {
        self.initial_metric.as_deref()
    }

    pub fn set_initial_metric(&mut self, metric: Option<Vec<f64>>) {
        self.initial_metric = metric;
    }

    /// A random closed pseudo-manifold: faces are paired uniformly at random
    /// and each pairing gets a uniformly random face-respecting permutation.
    pub fn random_closed<R: Rng + ?Sized>(tet_count: usize, rng: &mut R) -> Self {
        let mut spec = GluingSpec::new(tet_count);
        let mut faces: Vec<(usize, usize)> = (0..tet_count)
            .flat_map(|t| (0..4).map(move |f| (t, f)))
            .collect();
        faces.shuffle(rng);
        for pair in faces.chunks(2) {
            let (t, f) = pair[0];
            let (u, g) = pair[1];
            let candidates: Vec<Perm> = Perm::all().filter(|p| p.apply(f) == g).collect();
            let perm = candidates[rng.gen_range(0..candidates.len())];
            spec.glue_pair(t, f, u, perm);
        }
        spec
    }

    /// Rule violations; empty iff the spec describes a closed pseudo-manifold.
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// A broken gluing rule at one face.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OpenFace {
        tet: usize,
        face: usize,
    },
    NeighborOutOfRange {
        tet: usize,
        face: usize,
        neighbor: usize,
    },
    SelfGlued {
        tet: usize,
        face: usize,
    },
    NotInvolutive {
        tet: usize,
        face: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::OpenFace { tet, face } => {
                write!(f, "tet {tet} face {face}: open face (not glued)")
            }
            Violation::NeighborOutOfRange {
                tet,
                face,
                neighbor,
            } => {
                write!(f, "tet {tet} face {face}: neighbor {neighbor} out of range")
            }
            Violation::SelfGlued { tet, face } => {
                write!(f, "tet {tet} face {face}: face glued to itself")
            }
            Violation::NotInvolutive { tet, face } => {
                write!(f, "tet {tet} face {face}: not involutive (partner does not glue back by the inverse permutation)")
            }
        }
    }
}

/// Checks that every face is glued to a different face whose own record is
/// the inverse gluing.
pub fn validate(spec: &GluingSpec) -> Vec<Violation> {
    let n = spec.tet_count();
    let mut out = Vec::new();
    for tet in 0..n {
        for face in 0..4 {
            let Some(g) = spec.gluing(tet, face) else {
                out.push(Violation::OpenFace { tet, face });
                continue;
            };
            if g.neighbor >= n {
                out.push(Violation::NeighborOutOfRange {
                    tet,
                    face,
                    neighbor: g.neighbor,
                });
                continue;
            }
            let target = g.target_face(face);
            if g.neighbor == tet && target == face {
                out.push(Violation::SelfGlued { tet, face });
                continue;
            }
            // An open or out-of-range partner is reported at the partner.
            let Some(back) = spec.gluing(g.neighbor, target) else {
                continue;
            };
            if back.neighbor >= n {
                continue;
            }
            let points_back = back.neighbor == tet && back.target_face(target) == face;
            if !points_back {
                out.push(Violation::NotInvolutive { tet, face });
            } else if back.perm.compose(g.perm) != Perm::IDENTITY
                && (tet, face) < (g.neighbor, target)
            {
                // Mismatched pair: report once, at the smaller face.
                out.push(Violation::NotInvolutive { tet, face });
            }
        }
    }
    out
}

/// A local edge `(tet, k)` with `k` indexing [`EDGE_VERTICES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalEdge {
    pub tet: usize,
    pub edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalVertex {
    pub tet: usize,
    pub vertex: usize,
}

/// A pair of opposite edges in one tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quad {
    pub tet: usize,
    pub edges: [usize; 2],
}

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("triangulation has no tetrahedra")]
    Empty,
    #[error("invalid gluing ({} violation(s)); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

/// A validated triangulation with its edge and vertex classes.
#[derive(Debug, Clone)]
pub struct Complex {
    spec: GluingSpec,
    tet_edges: Vec<[usize; 6]>,
    tet_vertices: Vec<[usize; 4]>,
    edge_classes: Vec<Vec<LocalEdge>>,
    vertex_classes: Vec<Vec<LocalVertex>>,
    endpoints: Vec<[usize; 2]>,
    quads: Vec<Quad>,
    incidence: IncidenceMatrix,
    gauge: Gauge,
}

/// Builds the complex, computing edge and vertex orbits by union-find.
pub fn build_complex(spec: &GluingSpec) -> Result<Complex, ComplexError> {
    let faces = (0..spec.tet_count()).flat_map(|t| (0..4).map(move |f| (t, f)));
    build_in_order(spec, faces)
}

fn build_in_order(
    spec: &GluingSpec,
    order: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Complex, ComplexError> {
    let n_tets = spec.tet_count();
    if n_tets == 0 {
        return Err(ComplexError::Empty);
    }
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(ComplexError::Invalid(violations));
    }

    let mut edges = UnionFind::new(6 * n_tets);
    let mut vertices = UnionFind::new(4 * n_tets);
    for (tet, face) in order {
        let g = spec.gluing(tet, face).expect("validated");
        let face_vertices = (0..4).filter(|&v| v != face);
        for i in face_vertices.clone() {
            vertices.union(4 * tet + i, 4 * g.neighbor + g.perm.apply(i));
        }
        for i in face_vertices.clone() {
            for j in face_vertices.clone().filter(|&j| j > i) {
                let here = local_edge_index(i, j);
                let there = local_edge_index(g.perm.apply(i), g.perm.apply(j));
                edges.union(6 * tet + here, 6 * g.neighbor + there);
            }
        }
    }

    let (edge_labels, m) = edges.labels();
    let (vertex_labels, n) = vertices.labels();

    let mut edge_classes = vec![Vec::new(); m];
    let mut tet_edges = vec![[0usize; 6]; n_tets];
    for (id, &label) in edge_labels.iter().enumerate() {
        let (tet, edge) = (id / 6, id % 6);
        tet_edges[tet][edge] = label;
        edge_classes[label].push(LocalEdge { tet, edge });
    }
    let mut vertex_classes = vec![Vec::new(); n];
    let mut tet_vertices = vec![[0usize; 4]; n_tets];
    for (id, &label) in vertex_labels.iter().enumerate() {
        let (tet, vertex) = (id / 4, id % 4);
        tet_vertices[tet][vertex] = label;
        vertex_classes[label].push(LocalVertex { tet, vertex });
    }

    let endpoints: Vec<[usize; 2]> = edge_classes
        .iter()
        .map(|class| {
            let rep = class[0];
            let [i, j] = EDGE_VERTICES[rep.edge];
            let mut ends = [tet_vertices[rep.tet][i], tet_vertices[rep.tet][j]];
            ends.sort_unstable();
            ends
        })
        .collect();

    let quads = (0..n_tets)
        .flat_map(|tet| QUAD_EDGES.iter().map(move |&edges| Quad { tet, edges }))
        .collect();

    let incidence = IncidenceMatrix::from_endpoints(&endpoints, n);
    let gauge = Gauge::new(&incidence);

    Ok(Complex {
        spec: spec.clone(),
        tet_edges,
        tet_vertices,
        edge_classes,
        vertex_classes,
        endpoints,
        quads,
        incidence,
        gauge,
    })
}

impl Complex {
    pub fn spec(&self) -> &GluingSpec {
        &self.spec
    }

    pub fn tet_count(&self) -> usize {
        self.tet_edges.len()
    }

    /// Number of edge classes, `m`.
    pub fn edge_count(&self) -> usize {
        self.edge_classes.len()
    }

    /// Number of vertex classes, `n`.
    pub fn vertex_count(&self) -> usize {
        self.vertex_classes.len()
    }

    /// Edge class of each local edge of `tet`.
    pub fn tet_edges(&self, tet: usize) -> &[usize; 6] {
        &self.tet_edges[tet]
    }

    /// Vertex class of each local vertex of `tet`.
    pub fn tet_vertices(&self, tet: usize) -> &[usize; 4] {
        &self.tet_vertices[tet]
    }

    pub fn edge_class(&self, e: usize) -> &[LocalEdge] {
        &self.edge_classes[e]
    }

    pub fn vertex_class(&self, v: usize) -> &[LocalVertex] {
        &self.vertex_classes[v]
    }

    pub fn valence(&self, e: usize) -> usize {
        self.edge_classes[e].len()
    }

    pub fn valences(&self) -> Vec<usize> {
        self.edge_classes.iter().map(Vec::len).collect()
    }

    /// Valence → number of edge classes with that valence.
    pub fn valence_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for d in self.valences() {
            *hist.entry(d).or_insert(0) += 1;
        }
        hist
    }

    /// The common valence if every edge class has the same one.
    ///
    /// Constant valence is necessary for edge-transitivity but not
    /// sufficient; no automorphism search is attempted.
    pub fn constant_valence(&self) -> Option<usize> {
        let hist = self.valence_histogram();
        if hist.len() == 1 {
            hist.keys().next().copied()
        } else {
            None
        }
    }

    /// Endpoint vertex classes of edge class `e`, sorted; equal for loops.
    pub fn endpoints(&self, e: usize) -> [usize; 2] {
        self.endpoints[e]
    }

    pub fn quads(&self) -> &[Quad] {
        &self.quads
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.incidence
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    /// Restriction of an edge-class vector to the six local edges of `tet`.
    pub fn restrict(&self, tet: usize, l: &[f64]) -> [f64; 6] {
        self.tet_edges[tet].map(|e| l[e])
    }
}

/// `B`, computed from a complex.
pub fn incidence_matrix(c: &Complex) -> &IncidenceMatrix {
    c.incidence()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn figure_eight() -> GluingSpec {
        parse_complex(include_str!("../../../../data/figure8.tri")).unwrap()
    }

    #[test]
    fn perm_algebra() {
        let p: Perm = "1230".parse().unwrap();
        assert_eq!(p.inverse().to_string(), "3012");
        assert_eq!(p.compose(p.inverse()), Perm::IDENTITY);
        assert!(p.is_odd());
        assert!(!"1203".parse::<Perm>().unwrap().is_odd());
        assert!("0012".parse::<Perm>().is_err());
        assert_eq!(Perm::all().count(), 24);
    }

    #[test]
    fn quad_indexing() {
        for k in 0..6 {
            let [i, j] = EDGE_VERTICES[k];
            assert_eq!(local_edge_index(i, j), k);
            assert_eq!(local_edge_index(j, i), k);
            let [a, b] = EDGE_VERTICES[5 - k];
            assert!(![a, b].contains(&i) && ![a, b].contains(&j));
            assert_eq!(quad_of_edge(k), quad_of_edge(5 - k));
        }
    }

    #[test]
    fn valid_spec_has_no_violations() {
        assert!(figure_eight().validate().is_empty());
    }

    #[test]
    fn broken_return_gluing_is_one_violation() {
        let mut spec = figure_eight();
        spec.set_gluing(
            0,
            0,
            Some(FaceGluing {
                neighbor: 1,
                perm: "0213".parse().unwrap(),
            }),
        );
        assert_eq!(
            spec.validate(),
            vec![Violation::NotInvolutive { tet: 0, face: 0 }]
        );
    }

    #[test]
    fn open_face_is_one_violation() {
        let mut spec = figure_eight();
        spec.set_gluing(1, 3, None);
        assert_eq!(
            spec.validate(),
            vec![Violation::OpenFace { tet: 1, face: 3 }]
        );
        assert!(matches!(
            build_complex(&spec),
            Err(ComplexError::Invalid(v)) if v.len() == 1
        ));
    }

    #[test]
    fn self_glued_face() {
        let mut spec = GluingSpec::new(1);
        spec.glue_pair(0, 0, 0, "1023".parse().unwrap());
        spec.set_gluing(
            0,
            2,
            Some(FaceGluing {
                neighbor: 0,
                perm: "0132".parse().unwrap(),
            }),
        );
        spec.set_gluing(
            0,
            3,
            Some(FaceGluing {
                neighbor: 0,
                perm: "0123".parse().unwrap(),
            }),
        );
        let v = spec.validate();
        assert!(v.contains(&Violation::SelfGlued { tet: 0, face: 3 }));
        assert!(!v.contains(&Violation::SelfGlued { tet: 0, face: 2 }));
    }

    #[test]
    fn empty_spec_is_rejected() {
        assert!(matches!(
            build_complex(&GluingSpec::new(0)),
            Err(ComplexError::Empty)
        ));
    }

    #[test]
    fn figure_eight_structure() {
        let c = build_complex(&figure_eight()).unwrap();
        assert_eq!(c.edge_count(), 2);
        assert_eq!(c.vertex_count(), 1);
        assert_eq!(c.valences(), vec![6, 6]);
        assert_eq!(c.endpoints(0), [0, 0]);
        assert_eq!(c.endpoints(1), [0, 0]);
        assert_eq!(c.constant_valence(), Some(6));
        // Class 0 contains local edge (0, 01) by the representative rule.
        assert_eq!(c.tet_edges(0)[0], 0);
        assert_eq!(c.quads().len(), 6);
    }

    #[test]
    fn each_local_edge_in_one_quad() {
        let c = build_complex(&figure_eight()).unwrap();
        for t in 0..c.tet_count() {
            let mut seen = [0; 6];
            for q in c.quads().iter().filter(|q| q.tet == t) {
                for &k in &q.edges {
                    seen[k] += 1;
                }
                let [a, b] = q.edges;
                assert_eq!(a + b, 5);
            }
            assert_eq!(seen, [1; 6]);
        }
    }

    fn partition(c: &Complex) -> (Vec<[usize; 6]>, Vec<[usize; 4]>) {
        (c.tet_edges.clone(), c.tet_vertices.clone())
    }

    proptest! {
        #[test]
        fn orbits_independent_of_processing_order(seed in any::<u64>(), tets in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = GluingSpec::random_closed(tets, &mut rng);
            prop_assert!(spec.validate().is_empty());
            let mut order: Vec<(usize, usize)> =
                (0..tets).flat_map(|t| (0..4).map(move |f| (t, f))).collect();
            let forward = build_in_order(&spec, order.clone()).unwrap();
            order.shuffle(&mut rng);
            let shuffled = build_in_order(&spec, order).unwrap();
            prop_assert_eq!(partition(&forward), partition(&shuffled));
        }

        #[test]
        fn valences_sum_to_six_per_tet(seed in any::<u64>(), tets in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = build_complex(&GluingSpec::random_closed(tets, &mut rng)).unwrap();
            prop_assert_eq!(c.valences().iter().sum::<usize>(), 6 * tets);
            let corners: usize = (0..c.vertex_count()).map(|v| c.vertex_class(v).len()).sum();
            prop_assert_eq!(corners, 4 * tets);
        }
    }
}
