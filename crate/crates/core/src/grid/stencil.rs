//! Neighborhoods, octant update groups and simplex enumeration.
//!
//! All offsets live in shifted integer coordinates: the node being updated
//! sits at the origin and every neighbor offset has sup-norm one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GridError, GridSpec, NodeState};

/// Integer offset of a neighbor relative to the updated node. 2D offsets
/// keep a zero third component.
pub type Offset = [i8; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilKind {
    Olim4,
    Olim8,
    Olim6,
    Olim18,
    Olim26,
    Olim3d,
}

impl StencilKind {
    pub fn dim(self) -> usize {
        match self {
            StencilKind::Olim4 | StencilKind::Olim8 => 2,
            _ => 3,
        }
    }

    pub fn is_bottom_up(self) -> bool {
        self == StencilKind::Olim3d
    }

    pub fn name(self) -> &'static str {
        match self {
            StencilKind::Olim4 => "olim4",
            StencilKind::Olim8 => "olim8",
            StencilKind::Olim6 => "olim6",
            StencilKind::Olim18 => "olim18",
            StencilKind::Olim26 => "olim26",
            StencilKind::Olim3d => "olim3d",
        }
    }

    /// Update groups used by default for the 3D top-down stencils.
    pub fn default_groups(self) -> Vec<UpdateGroup> {
        match self {
            StencilKind::Olim6 => vec![UpdateGroup::IVa],
            StencilKind::Olim18 => vec![UpdateGroup::I, UpdateGroup::IVa, UpdateGroup::IVb],
            StencilKind::Olim26 => vec![UpdateGroup::V],
            _ => Vec::new(),
        }
    }

    pub const ALL: [StencilKind; 6] = [
        StencilKind::Olim4,
        StencilKind::Olim8,
        StencilKind::Olim6,
        StencilKind::Olim18,
        StencilKind::Olim26,
        StencilKind::Olim3d,
    ];
}

impl fmt::Display for StencilKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StencilKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StencilKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown stencil '{s}' (expected olim4, olim8, olim6, olim18, olim26 or olim3d)"))
    }
}

/// Tetrahedron groups of one octant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateGroup {
    I,
    II,
    III,
    IVa,
    IVb,
    V,
    VIa,
    VIb,
    VII,
}

pub type GroupSelection = Vec<UpdateGroup>;

/// Canonical first-octant nodes. Nodes 0 to 5 alternate between axis and
/// edge offsets going around the octant, node 6 is the diagonal.
pub const OCTANT_NODES: [Offset; 7] = [[1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 1, 1], [0, 0, 1], [1, 0, 1], [1, 1, 1]];

impl UpdateGroup {
    pub const ALL: [UpdateGroup; 9] = [
        UpdateGroup::I,
        UpdateGroup::II,
        UpdateGroup::III,
        UpdateGroup::IVa,
        UpdateGroup::IVb,
        UpdateGroup::V,
        UpdateGroup::VIa,
        UpdateGroup::VIb,
        UpdateGroup::VII,
    ];

    /// Raw vertex-index triples of the group in the canonical octant,
    /// degenerate entries included.
    pub fn raw_entries(self) -> Vec<[usize; 3]> {
        let m = |k: usize| k % 6;
        let mut out: Vec<[usize; 3]> = match self {
            UpdateGroup::I => (0..6).map(|i| [i, m(i + 1), m(i + 2)]).collect(),
            UpdateGroup::II => (0..6).map(|i| [i, m(i + 1), m(i + 3)]).collect(),
            UpdateGroup::III => (0..6).map(|i| [i, m(i + 1), m(i + 4)]).collect(),
            UpdateGroup::IVa => vec![[0, 2, 4]],
            UpdateGroup::IVb => vec![[1, 3, 5]],
            UpdateGroup::V => (0..6).map(|i| [i, m(i + 1), 6]).collect(),
            UpdateGroup::VIa => vec![[0, 2, 6], [2, 4, 6], [4, 0, 6]],
            UpdateGroup::VIb => vec![[1, 3, 6], [3, 5, 6], [5, 1, 6]],
            UpdateGroup::VII => (0..3).map(|i| [i, i + 3, 6]).collect(),
        };
        let mut seen = Vec::new();
        out.retain(|t| {
            let mut key = *t;
            key.sort_unstable();
            if seen.contains(&key) {
                false
            } else {
                seen.push(key);
                true
            }
        });
        out
    }

    /// Nondegenerate tetrahedra of the group in the canonical octant.
    pub fn tetrahedra(self) -> Vec<[Offset; 3]> {
        self.raw_entries()
            .into_iter()
            .map(|[a, b, c]| [OCTANT_NODES[a], OCTANT_NODES[b], OCTANT_NODES[c]])
            .filter(|t| det3(t) != 0)
            .collect()
    }
}

impl FromStr for UpdateGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        UpdateGroup::ALL
            .into_iter()
            .find(|g| format!("{g:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown update group '{s}'"))
    }
}

pub(crate) fn det3(t: &[Offset; 3]) -> i32 {
    let [a, b, c] = t.map(|v| v.map(i32::from));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn cross_is_zero(a: Offset, b: Offset) -> bool {
    let [a, b] = [a, b].map(|v| v.map(i32::from));
    a[1] * b[2] - a[2] * b[1] == 0 && a[2] * b[0] - a[0] * b[2] == 0 && a[0] * b[1] - a[1] * b[0] == 0
}

/// Vertex offsets are linearly independent.
pub fn is_nondegenerate(verts: &[Offset]) -> bool {
    match verts {
        [a] => *a != [0, 0, 0],
        [a, b] => !cross_is_zero(*a, *b),
        [a, b, c] => det3(&[*a, *b, *c]) != 0,
        _ => false,
    }
}

fn l1(a: Offset, b: Offset) -> i32 {
    (0..3).map(|k| (i32::from(a[k]) - i32::from(b[k])).abs()).sum()
}

fn sup(a: Offset) -> i32 {
    a.iter().map(|v| i32::from(*v).abs()).max().unwrap_or(0)
}

fn reflect(v: Offset, signs: [i8; 3]) -> Offset {
    [v[0] * signs[0], v[1] * signs[1], v[2] * signs[2]]
}

fn sign_patterns(dim: usize) -> Vec<[i8; 3]> {
    let mut out = Vec::new();
    for m in 0..(1 << dim) {
        let mut s = [1i8; 3];
        for (k, sk) in s.iter_mut().enumerate().take(dim) {
            if m & (1 << k) != 0 {
                *sk = -1;
            }
        }
        out.push(s);
    }
    out
}

fn sorted_key<const K: usize>(mut v: [Offset; K]) -> [Offset; K] {
    v.sort_unstable();
    v
}

/// All 3^dim - 1 offsets with sup-norm one, in lexicographic order.
fn full_neighborhood(dim: usize) -> Vec<Offset> {
    let r = |on: bool| if on { -1..=1 } else { 0..=0 };
    let mut out = Vec::new();
    for i in -1i8..=1 {
        for j in -1i8..=1 {
            for k in r(dim == 3) {
                let o = [i, j, k];
                if o != [0, 0, 0] {
                    out.push(o);
                }
            }
        }
    }
    out
}

/// A simplex of neighbor offsets (one to three vertices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Simplex {
    verts: [Offset; 3],
    len: usize,
}

impl Simplex {
    pub fn new(verts: &[Offset]) -> Self {
        assert!((1..=3).contains(&verts.len()), "simplex needs 1 to 3 vertices");
        let mut v = [[0; 3]; 3];
        v[..verts.len()].copy_from_slice(verts);
        Simplex { verts: v, len: verts.len() }
    }

    pub fn vertices(&self) -> &[Offset] {
        &self.verts[..self.len]
    }

    /// Base dimension `d` (vertex count minus one).
    pub fn d(&self) -> usize {
        self.len - 1
    }

    pub fn contains(&self, o: Offset) -> bool {
        self.vertices().contains(&o)
    }
}

/// Precomputed neighborhood and update simplexes of one stencil.
///
/// Simplexes are stored as indices into `neighbors`. `tris_of[j]` and
/// `tets_of[j]` list the simplexes incident to neighbor `j`.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub kind: StencilKind,
    pub groups: GroupSelection,
    pub neighbors: Vec<Offset>,
    pub tris: Vec<[u8; 2]>,
    pub tets: Vec<[u8; 3]>,
    /// Triangle ids of the three faces of each tetrahedron.
    pub tet_faces: Vec<[u16; 3]>,
    pub tris_of: Vec<Vec<u16>>,
    pub tets_of: Vec<Vec<u16>>,
    /// Bottom-up second-vertex candidates per first vertex (olim3d only).
    pub bu_tri: Vec<Vec<u8>>,
    /// Bottom-up third-vertex candidates per ordered pair `j * len + k`.
    pub bu_tet: Vec<Vec<u8>>,
}

impl Stencil {
    pub fn new(kind: StencilKind) -> Self {
        Stencil::with_groups(kind, kind.default_groups())
    }

    /// Builds a 3D top-down stencil from an arbitrary group combination. The
    /// groups are ignored for 2D and bottom-up stencils.
    pub fn with_groups(kind: StencilKind, groups: GroupSelection) -> Self {
        let dim = kind.dim();
        let signs = sign_patterns(dim);
        let mut tri_set: Vec<[Offset; 2]> = Vec::new();
        let mut tet_set: Vec<[Offset; 3]> = Vec::new();
        let push_tri = |t: [Offset; 2], set: &mut Vec<[Offset; 2]>| {
            let key = sorted_key(t);
            if !set.contains(&key) {
                set.push(key);
            }
        };

        let neighbors: Vec<Offset> = match kind {
            StencilKind::Olim4 => vec![[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]],
            StencilKind::Olim6 => {
                vec![[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]]
            }
            StencilKind::Olim18 => full_neighborhood(3).into_iter().filter(|o| sup_l1(*o) <= 2).collect(),
            StencilKind::Olim8 | StencilKind::Olim26 | StencilKind::Olim3d => full_neighborhood(dim),
        };
        let mut neighbors = neighbors;

        match kind {
            StencilKind::Olim4 | StencilKind::Olim8 => {
                let quadrant: Vec<[Offset; 2]> = if kind == StencilKind::Olim4 {
                    vec![[[1, 0, 0], [0, 1, 0]]]
                } else {
                    vec![[[1, 0, 0], [1, 1, 0]], [[1, 1, 0], [0, 1, 0]]]
                };
                for s in &signs {
                    for t in &quadrant {
                        push_tri([reflect(t[0], *s), reflect(t[1], *s)], &mut tri_set);
                    }
                }
            }
            StencilKind::Olim3d => {}
            _ => {
                for s in &signs {
                    for g in &groups {
                        for t in g.tetrahedra() {
                            let r = sorted_key(t.map(|v| reflect(v, *s)));
                            if !tet_set.contains(&r) {
                                tet_set.push(r);
                            }
                        }
                    }
                }
                for t in &tet_set {
                    for v in t {
                        if !neighbors.contains(v) {
                            neighbors.push(*v);
                        }
                    }
                    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                        push_tri([t[a], t[b]], &mut tri_set);
                    }
                }
            }
        }

        let idx = |o: &Offset| neighbors.iter().position(|n| n == o).unwrap() as u8;
        let tris: Vec<[u8; 2]> = tri_set.iter().map(|t| [idx(&t[0]), idx(&t[1])]).collect();
        let tets: Vec<[u8; 3]> = tet_set.iter().map(|t| [idx(&t[0]), idx(&t[1]), idx(&t[2])]).collect();
        let tri_id = |a: u8, b: u8| {
            tris.iter().position(|t| (t[0] == a && t[1] == b) || (t[0] == b && t[1] == a)).unwrap() as u16
        };
        let tet_faces = tets.iter().map(|t| [tri_id(t[0], t[1]), tri_id(t[0], t[2]), tri_id(t[1], t[2])]).collect();

        let n = neighbors.len();
        let mut tris_of = vec![Vec::new(); n];
        for (i, t) in tris.iter().enumerate() {
            for &v in t {
                tris_of[v as usize].push(i as u16);
            }
        }
        let mut tets_of = vec![Vec::new(); n];
        for (i, t) in tets.iter().enumerate() {
            for &v in t {
                tets_of[v as usize].push(i as u16);
            }
        }

        let (mut bu_tri, mut bu_tet) = (Vec::new(), Vec::new());
        if kind.is_bottom_up() {
            let pos = |o: Offset| neighbors.iter().position(|n| *n == o).unwrap() as u8;
            for &p0 in &neighbors {
                bu_tri.push(scan_second(p0).into_iter().map(pos).collect());
            }
            for &p0 in &neighbors {
                for &p1 in &neighbors {
                    let c = if p0 == p1 { Vec::new() } else { scan_third(p0, p1) };
                    bu_tet.push(c.into_iter().map(pos).collect());
                }
            }
        }
        Stencil {
            kind,
            groups: if kind.dim() == 3 && !kind.is_bottom_up() { groups } else { Vec::new() },
            neighbors,
            tris,
            tets,
            tet_faces,
            tris_of,
            tets_of,
            bu_tri,
            bu_tet,
        }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn neighbor_index(&self, o: Offset) -> Option<usize> {
        self.neighbors.iter().position(|n| *n == o)
    }

    /// Every update simplex of the stencil (lines, triangles, tetrahedra).
    pub fn all_simplexes(&self) -> Vec<Simplex> {
        let nb = &self.neighbors;
        let mut out: Vec<Simplex> = nb.iter().map(|o| Simplex::new(&[*o])).collect();
        out.extend(self.tris.iter().map(|t| Simplex::new(&[nb[t[0] as usize], nb[t[1] as usize]])));
        out.extend(self.tets.iter().map(|t| Simplex::new(&[nb[t[0] as usize], nb[t[1] as usize], nb[t[2] as usize]])));
        out
    }
}

fn sup_l1(o: Offset) -> i32 {
    o.iter().map(|v| i32::from(*v).abs()).sum()
}

fn scan_second(p0: Offset) -> Vec<Offset> {
    full_neighborhood(3).into_iter().filter(|&p1| p1 != p0 && sup(p1) == 1 && l1(p0, p1) <= 1).collect()
}

fn scan_third(p0: Offset, p1: Offset) -> Vec<Offset> {
    full_neighborhood(3)
        .into_iter()
        .filter(|&p2| {
            p2 != p0 && p2 != p1 && sup(p2) == 1 && l1(p0, p2) <= 2 && l1(p1, p2) <= 2 && det3(&[p0, p1, p2]) != 0
        })
        .collect()
}

/// Candidate offsets for the next vertex of a bottom-up update, given the
/// `d` vertices already chosen (`d` must be 1 or 2).
pub fn bottom_up_candidates(d: usize, chosen: &[Offset]) -> Result<Vec<Offset>, GridError> {
    if chosen.len() != d {
        return Err(GridError::Contract(format!("expected {d} chosen vertices, got {}", chosen.len())));
    }
    if chosen.iter().any(|&p| sup(p) != 1) {
        return Err(GridError::Contract("chosen vertices must have sup-norm one".into()));
    }
    match d {
        1 => Ok(scan_second(chosen[0])),
        2 => Ok(scan_third(chosen[0], chosen[1])),
        _ => Err(GridError::Contract(format!("bottom-up step d must be 1 or 2, got {d}"))),
    }
}

/// Update simplexes for a trial node `p_hat` after `p_new` became valid,
/// bucketed by base dimension: `out[d]` holds the simplexes with `d + 1`
/// vertices. Each simplex contains `p_new`, lies in the stencil and has only
/// valid, in-bounds vertices.
pub fn enumerate_top_down_simplexes(
    stencil: &Stencil,
    spec: &GridSpec,
    p_hat: &[usize],
    p_new: Offset,
    states: &[NodeState],
) -> Result<Vec<Vec<Simplex>>, GridError> {
    let mut idx = [0usize; 3];
    if p_hat.len() != spec.dim || p_hat.iter().zip(&spec.shape).any(|(i, n)| i >= n) {
        return Err(GridError::OutOfBounds { index: p_hat.to_vec(), shape: spec.shape.clone() });
    }
    idx[..spec.dim].copy_from_slice(p_hat);
    let j = stencil
        .neighbor_index(p_new)
        .ok_or_else(|| GridError::Contract(format!("{p_new:?} is not a neighbor in {}", stencil.kind)))?;
    let valid = |k: usize| {
        spec.offset_node(idx, stencil.neighbors[k]).map(|lin| states[lin] == NodeState::Valid).unwrap_or(false)
    };
    let nb = &stencil.neighbors;
    let mut out = vec![Vec::new(); stencil.dim()];
    if !valid(j) {
        return Ok(out);
    }
    out[0].push(Simplex::new(&[p_new]));
    for &t in &stencil.tris_of[j] {
        let [a, b] = stencil.tris[t as usize].map(usize::from);
        if valid(a) && valid(b) {
            out[1].push(Simplex::new(&[nb[a], nb[b]]));
        }
    }
    if stencil.dim() == 3 {
        for &t in &stencil.tets_of[j] {
            let [a, b, c] = stencil.tets[t as usize].map(usize::from);
            if valid(a) && valid(b) && valid(c) {
                out[2].push(Simplex::new(&[nb[a], nb[b], nb[c]]));
            }
        }
    }
    Ok(out)
}
