//! Graphs, graph states, local complementation, and the construction of the
//! code-plus-ancilla resource from the five-qubit linear cluster.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{cr, gates, kets, CVector, PureState, QuantumState, MAX_QUBITS};
use crate::pauli::{CliffordGate, Letter, PauliString, Phase};

/// Simple undirected graph on qubit labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphLiteral", into = "GraphLiteral")]
pub struct Graph {
    vertices: BTreeSet<u8>,
    edges: BTreeSet<(u8, u8)>,
}

/// Config-file form: `{"vertices": [1,2], "edges": [[1,2]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphLiteral {
    pub vertices: Vec<u8>,
    pub edges: Vec<[u8; 2]>,
}

impl TryFrom<GraphLiteral> for Graph {
    type Error = Error;
    fn try_from(lit: GraphLiteral) -> Result<Self> {
        Graph::new(lit.vertices, lit.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<Graph> for GraphLiteral {
    fn from(g: Graph) -> Self {
        GraphLiteral {
            vertices: g.vertices.into_iter().collect(),
            edges: g.edges.into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }
}

fn edge(a: u8, b: u8) -> (u8, u8) {
    (a.min(b), a.max(b))
}

impl Graph {
    pub fn new(
        vertices: impl IntoIterator<Item = u8>,
        edges: impl IntoIterator<Item = (u8, u8)>,
    ) -> Result<Self> {
        let vertices: BTreeSet<u8> = vertices.into_iter().collect();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on vertex {a}")));
            }
            for v in [a, b] {
                if !vertices.contains(&v) {
                    return Err(Error::UnknownQubit(v));
                }
            }
            set.insert(edge(a, b));
        }
        Ok(Self {
            vertices,
            edges: set,
        })
    }

    /// Linear cluster 1-2-3-4-5.
    pub fn path5() -> Self {
        Self::new(1..=5, [(1, 2), (2, 3), (3, 4), (4, 5)]).expect("valid literal")
    }

    /// Box cluster on {1,2,4,5}: the complete bipartite pairing {1,2}×{4,5}.
    pub fn box_graph() -> Self {
        Self::new([1, 2, 4, 5], [(1, 4), (1, 5), (2, 4), (2, 5)]).expect("valid literal")
    }

    /// Box cluster plus ancilla 3 joined to every code qubit.
    pub fn resource() -> Self {
        Self::new(
            1..=5,
            [
                (1, 4),
                (1, 5),
                (2, 4),
                (2, 5),
                (1, 3),
                (2, 3),
                (4, 3),
                (5, 3),
            ],
        )
        .expect("valid literal")
    }

    pub fn vertices(&self) -> impl Iterator<Item = u8> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_edge(&self, a: u8, b: u8) -> bool {
        self.edges.contains(&edge(a, b))
    }

    pub fn neighbors(&self, v: u8) -> Vec<u8> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    fn toggle(&mut self, a: u8, b: u8) {
        let e = edge(a, b);
        if !self.edges.remove(&e) {
            self.edges.insert(e);
        }
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        write!(f, "{{{}}}", edges.join(", "))
    }
}

/// `Π_edges CZ |+⟩^{⊗V}`, qubits in ascending label order.
pub fn graph_state(g: &Graph) -> Result<PureState> {
    if g.num_vertices() > MAX_QUBITS {
        return Err(Error::TooManyQubits(g.num_vertices()));
    }
    let ids: Vec<u8> = g.vertices().collect();
    let mut state = PureState::all_plus(&ids)?;
    let cz = gates::cz();
    for (a, b) in g.edges() {
        state = state.apply_unitary(&cz, &[a, b])?;
    }
    Ok(state)
}

/// `K_v = X_v ⊗_{n ∈ N(v)} Z_n`.
pub fn stabilizer_generator(g: &Graph, v: u8) -> PauliString {
    PauliString::from_letters(
        Phase::ONE,
        std::iter::once((v, Letter::X)).chain(g.neighbors(v).into_iter().map(|n| (n, Letter::Z))),
    )
}

/// One generator per vertex, in ascending vertex order.
pub fn stabilizer_generators(g: &Graph) -> Vec<PauliString> {
    g.vertices().map(|v| stabilizer_generator(g, v)).collect()
}

/// Complements the neighbourhood of `v`. The returned gates (√(−iX) on `v`,
/// √(iZ) on each neighbour) map `graph_state(g)` onto the state of the new
/// graph up to a global phase.
pub fn local_complement(g: &Graph, v: u8) -> Result<(Graph, Vec<CliffordGate>)> {
    if !g.vertices.contains(&v) {
        return Err(Error::UnknownQubit(v));
    }
    let nbrs = g.neighbors(v);
    let mut out = g.clone();
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            out.toggle(a, b);
        }
    }
    let mut unitary = vec![CliffordGate::B(v)];
    unitary.extend(nbrs.iter().map(|&n| CliffordGate::ADag(n)));
    Ok((out, unitary))
}

/// Breadth-first search for the shortest sequence of local complementations
/// (at most `max_len`) turning `from` into `to`.
pub fn find_lc_sequence(from: &Graph, to: &Graph, max_len: usize) -> Option<Vec<u8>> {
    let mut queue = VecDeque::from([(from.clone(), Vec::new())]);
    while let Some((g, seq)) = queue.pop_front() {
        if g == *to {
            return Some(seq);
        }
        if seq.len() == max_len {
            continue;
        }
        for v in g.vertices() {
            let (next, _) = local_complement(&g, v).expect("vertex exists");
            let mut s = seq.clone();
            s.push(v);
            queue.push_back((next, s));
        }
    }
    None
}

/// All graphs on {1,2,4,5} whose generators reproduce
/// `S₁ = Y₁Z₂Z₄Y₅ = K₁K₅`, `S₂ = Y₁Z₂Y₄Z₅ = K₁K₄` and `S₃ = Z₁Y₂Y₄Z₅ = K₄K₂`
/// exactly, phase included.
pub fn derive_box_edges() -> Vec<Graph> {
    let candidates: Vec<(u8, u8)> = vec![(1, 2), (1, 4), (1, 5), (2, 4), (2, 5), (4, 5)];
    let targets = crate::code412::syndrome_operators();
    (0u32..1 << candidates.len())
        .filter_map(|mask| {
            let edges = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &e)| e);
            let g = Graph::new([1, 2, 4, 5], edges).ok()?;
            let k = |v| stabilizer_generator(&g, v);
            let products = [k(1) * k(5), k(1) * k(4), k(4) * k(2)];
            (products == targets).then_some(g)
        })
        .collect()
}

/// The five-qubit linear cluster written out term by term:
/// `[(|+⟩|0⟩ + |−⟩|1⟩)|0⟩(|0⟩|+⟩ + |1⟩|−⟩) + (|+⟩|0⟩ − |−⟩|1⟩)|1⟩(|0⟩|+⟩ − |1⟩|−⟩)] / 2√2`.
pub fn build_linear_cluster5() -> PureState {
    use kets::*;
    let left = |s: f64| product(&[plus(), zero()]) + product(&[minus(), one()]) * cr(s);
    let right = |s: f64| product(&[zero(), plus()]) + product(&[one(), minus()]) * cr(s);
    let amps =
        product(&[left(1.0), zero(), right(1.0)]) + product(&[left(-1.0), one(), right(-1.0)]);
    PureState::from_ids(&[1, 2, 3, 4, 5], amps / cr(2.0 * 2f64.sqrt()))
        .expect("literal is normalized")
}

/// Local unitaries of the two complementation layers that turn the linear
/// cluster into the resource. The Z-type root acts as √(iZ) on neighbours of
/// the complemented vertex and the X-type root as √(−iX) on the vertex.
pub fn resource_lc_layers() -> [Vec<CliffordGate>; 2] {
    use CliffordGate::*;
    [
        vec![ADag(1), B(2), ADag(3), ADag(3), B(4), ADag(5)],
        vec![ADag(1), ADag(2), B(3), ADag(4), ADag(5)],
    ]
}

/// Vertices complemented by each layer of [`resource_lc_layers`].
pub const RESOURCE_LC_VERTICES: [&[u8]; 2] = [&[2, 4], &[3]];

/// Applies both layers of [`resource_lc_layers`] to [`build_linear_cluster5`].
pub fn build_resource() -> PureState {
    resource_lc_layers()
        .iter()
        .flatten()
        .try_fold(build_linear_cluster5(), |s, g| g.apply(&s))
        .expect("gates act on existing qubits")
}

/// `|ψ_res⟩` written out:
/// `[(|++⟩ + i|−−⟩)|−_y⟩(|++⟩ + i|−−⟩) + i(|++⟩ − i|−−⟩)|+_y⟩(|++⟩ − i|−−⟩)] / 2√2`.
pub fn explicit_resource_state() -> PureState {
    use kets::*;
    let pair = |s: f64| {
        product(&[plus(), plus()]) + product(&[minus(), minus()]) * crate::kernel::c(0.0, s)
    };
    let amps: CVector = product(&[pair(1.0), minus_y(), pair(1.0)])
        + product(&[pair(-1.0), plus_y(), pair(-1.0)]) * crate::kernel::c(0.0, 1.0);
    PureState::from_ids(&[1, 2, 3, 4, 5], amps / cr(2.0 * 2f64.sqrt()))
        .expect("literal is normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Observable;

    #[test]
    fn single_vertex_is_plus() {
        let g = Graph::new([1], []).unwrap();
        assert!(graph_state(&g).unwrap().equivalent(&PureState::plus(1)));
        assert_eq!(stabilizer_generators(&g), vec!["X1".parse().unwrap()]);
    }

    #[test]
    fn one_edge_state() {
        let g = Graph::new([1, 2], [(1, 2)]).unwrap();
        let want = (kets::product(&[kets::zero(), kets::plus()])
            + kets::product(&[kets::one(), kets::minus()]))
            / cr(2f64.sqrt());
        let want = PureState::from_ids(&[1, 2], want).unwrap();
        assert!(graph_state(&g).unwrap().equivalent(&want));
    }

    #[test]
    fn invalid_graphs() {
        assert!(Graph::new([1, 2], [(1, 1)]).is_err());
        assert!(matches!(
            Graph::new([1, 2], [(1, 3)]),
            Err(Error::UnknownQubit(3))
        ));
        let big = Graph::new(1..=7, []).unwrap();
        assert!(matches!(graph_state(&big), Err(Error::TooManyQubits(7))));
    }

    #[test]
    fn generator_examples() {
        assert_eq!(
            stabilizer_generator(&Graph::box_graph(), 1),
            "X1 Z4 Z5".parse().unwrap()
        );
        assert_eq!(
            stabilizer_generator(&Graph::path5(), 3),
            "Z2 X3 Z4".parse().unwrap()
        );
    }

    #[test]
    fn generators_stabilize_graph_states() {
        for g in [Graph::path5(), Graph::box_graph(), Graph::resource()] {
            let s = graph_state(&g).unwrap();
            for k in stabilizer_generators(&g) {
                let e = s.expectation(&k.to_observable().unwrap()).unwrap();
                assert!((e - 1.0).abs() < 1e-10, "{k} on {g}");
            }
        }
    }

    #[test]
    fn lc_on_single_edge_keeps_graph() {
        let g = Graph::new([1, 2], [(1, 2)]).unwrap();
        let (h, u) = local_complement(&g, 1).unwrap();
        assert_eq!(h, g);
        let s = u
            .iter()
            .try_fold(graph_state(&g).unwrap(), |s, gate| gate.apply(&s))
            .unwrap();
        assert!(s.equivalent(&graph_state(&h).unwrap()));
    }

    #[test]
    fn lc_triangle_gives_path() {
        let tri = Graph::new([1, 2, 3], [(1, 2), (2, 3), (1, 3)]).unwrap();
        for v in 1..=3 {
            let (h, _) = local_complement(&tri, v).unwrap();
            assert_eq!(h.edges().count(), 2);
            assert_eq!(h.neighbors(v).len(), 2);
        }
    }

    #[test]
    fn lc_is_involution_and_state_correct() {
        for g in [Graph::path5(), Graph::box_graph(), Graph::resource()] {
            let base = graph_state(&g).unwrap();
            for v in g.vertices() {
                let (h, u) = local_complement(&g, v).unwrap();
                let (back, _) = local_complement(&h, v).unwrap();
                assert_eq!(back, g);
                let mapped = u
                    .iter()
                    .try_fold(base.clone(), |s, gate| gate.apply(&s))
                    .unwrap();
                assert!(
                    mapped.equivalent(&graph_state(&h).unwrap()),
                    "LC at {v} of {g}"
                );
            }
        }
    }

    #[test]
    fn lc_search_reaches_resource() {
        let seq = find_lc_sequence(&Graph::path5(), &Graph::resource(), 3).unwrap();
        assert!(seq.len() <= 3);
        let mut g = Graph::path5();
        let mut s = graph_state(&g).unwrap();
        for v in &seq {
            let (h, u) = local_complement(&g, *v).unwrap();
            s = u.iter().try_fold(s, |s, gate| gate.apply(&s)).unwrap();
            g = h;
        }
        assert_eq!(g, Graph::resource());
        assert!(s.equivalent(&graph_state(&Graph::resource()).unwrap()));
        // the layered vertices used by the resource construction also work
        let mut g = Graph::path5();
        for v in RESOURCE_LC_VERTICES.iter().flat_map(|l| l.iter()) {
            g = local_complement(&g, *v).unwrap().0;
        }
        assert_eq!(g, Graph::resource());
    }

    #[test]
    fn linear_cluster_literal() {
        let lin = build_linear_cluster5();
        assert!((lin.norm() - 1.0).abs() < 1e-12);
        let path = graph_state(&Graph::path5()).unwrap();
        assert!(lin.equivalent(&path));
        let a0 = lin.amplitudes()[0];
        let p0 = path.amplitudes()[0];
        assert!(a0.im.abs() < 1e-12 && a0.re > 0.0);
        assert!((a0.re - 1.0 / 32f64.sqrt()).abs() < 1e-12);
        assert!((a0 - p0).norm() < 1e-12);
    }

    #[test]
    fn resource_matches_both_targets() {
        let r = build_resource();
        assert!(r.equivalent(&graph_state(&Graph::resource()).unwrap()));
        assert!(r.equivalent(&explicit_resource_state()));
        for k in stabilizer_generators(&Graph::resource()) {
            let e = r.expectation(&k.to_observable().unwrap()).unwrap();
            assert!((e - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn principal_roots_miss_the_resource() {
        // With √(−iZ) on the neighbours as well, the two layers produce a
        // state orthogonal to the resource.
        let swap = |g: &CliffordGate| match *g {
            CliffordGate::ADag(q) => CliffordGate::A(q),
            other => other,
        };
        let s = resource_lc_layers()
            .iter()
            .flatten()
            .map(swap)
            .try_fold(build_linear_cluster5(), |s, g| g.apply(&s))
            .unwrap();
        assert!(s.overlap(&explicit_resource_state()).unwrap() < 1e-9);
    }

    #[test]
    fn box_edges_are_unique() {
        let found = derive_box_edges();
        assert_eq!(found, vec![Graph::box_graph()]);
    }

    #[test]
    fn graph_literal_round_trip() {
        let json = serde_json::to_string(&Graph::resource()).unwrap();
        let back: Graph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Graph::resource());
        let bad = r#"{"vertices":[1,2],"edges":[[1,1]]}"#;
        assert!(serde_json::from_str::<Graph>(bad).is_err());
    }

    #[test]
    fn kernel_observable_on_resource() {
        let r = build_resource();
        let z3 = Observable::single(crate::kernel::Basis::Z, 3);
        assert!(r.expectation(&z3).unwrap().abs() < 1e-12);
    }
}
