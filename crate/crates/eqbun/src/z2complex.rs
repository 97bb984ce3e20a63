//! Finite simplicial complexes with a simplicial involution.
//!
//! A complex is stored through its maximal simplices; faces are implicit.
//! Validation enforces the cell dichotomy used everywhere downstream: every
//! simplex is either pointwise fixed by the involution or contains no vertex
//! together with its (distinct) image.  Simplices that are invariant as a set
//! without being pointwise fixed — or that contain a free vertex pair — are
//! rejected with advice to subdivide.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Raw, name-based description of a complex, as found in input files.
#[derive(Debug, Clone, PartialEq)]
pub struct RawComplex {
    pub vertices: Vec<String>,
    pub maximal_simplices: Vec<Vec<String>>,
    /// Vertex map as (from, to) pairs; omitted vertices are fixed.
    pub involution: Vec<(String, String)>,
    pub subcomplex_a: Vec<Vec<String>>,
}

/// Max dimensions of fixed and free simplices outside the marked subcomplex;
/// `-1` when the respective set is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimensionProfile {
    pub d0: i64,
    pub d1: i64,
}

/// A validated finite involutive simplicial complex with a marked
/// τ-invariant subcomplex `A` (possibly empty).
#[derive(Debug, Clone)]
pub struct InvolutiveComplex {
    names: Vec<String>,
    tau: Vec<usize>,
    maximal: Vec<Vec<usize>>,
    marked_maximal: Vec<Vec<usize>>,
    fixed_vertex: Vec<bool>,
    /// Total vertex order compatible with the involution on every simplex;
    /// used for the staircase product triangulation.
    staircase_rank: Vec<usize>,
    /// Maximal simplices containing each vertex.
    incidence: Vec<Vec<u32>>,
    marked_incidence: Vec<Vec<u32>>,
}

impl PartialEq for InvolutiveComplex {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.tau == other.tau
            && self.maximal == other.maximal
            && self.marked_maximal == other.marked_maximal
    }
}

fn normalize_family(simplices: impl IntoIterator<Item = Vec<usize>>) -> Vec<Vec<usize>> {
    let mut sorted: BTreeSet<Vec<usize>> = simplices
        .into_iter()
        .map(|mut s| {
            s.sort_unstable();
            s.dedup();
            s
        })
        .filter(|s| !s.is_empty())
        .collect();
    // drop proper faces of other members
    let all: Vec<Vec<usize>> = sorted.iter().cloned().collect();
    sorted.retain(|s| {
        !all.iter().any(|t| t.len() > s.len() && s.iter().all(|v| t.binary_search(v).is_ok()))
    });
    sorted.into_iter().collect()
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|v| big.binary_search(v).is_ok())
}

impl InvolutiveComplex {
    /// Build and validate from index-based parts.  `maximal` and `marked`
    /// need not be normalized.
    pub fn from_parts(
        names: Vec<String>,
        tau: Vec<usize>,
        maximal: Vec<Vec<usize>>,
        marked: Vec<Vec<usize>>,
    ) -> Result<InvolutiveComplex> {
        let n = names.len();
        if tau.len() != n {
            return Err(Error::ParseError("involution table length != vertex count".into()));
        }
        {
            let mut seen: BTreeSet<&str> = BTreeSet::new();
            for name in &names {
                if !seen.insert(name) {
                    return Err(Error::ParseError(format!("duplicate vertex id `{name}`")));
                }
            }
        }
        for (v, &image) in tau.iter().enumerate() {
            if image >= n || tau[image] != v {
                return Err(Error::NonInvolutive { vertex: names[v].clone() });
            }
        }
        for simplex in maximal.iter().chain(marked.iter()) {
            for &v in simplex {
                if v >= n {
                    return Err(Error::ParseError("simplex references unknown vertex".into()));
                }
            }
        }

        let mut maximal = normalize_family(maximal);
        // isolated vertices count as 0-dimensional maximal simplices
        let mut covered = vec![false; n];
        for simplex in &maximal {
            for &v in simplex {
                covered[v] = true;
            }
        }
        for v in 0..n {
            if !covered[v] {
                maximal.push(vec![v]);
            }
        }
        let maximal = normalize_family(maximal);
        let marked_maximal = normalize_family(marked);

        let fixed_vertex: Vec<bool> = (0..n).map(|v| tau[v] == v).collect();

        let build_incidence = |family: &[Vec<usize>]| -> Vec<Vec<u32>> {
            let mut inc = vec![Vec::new(); n];
            for (i, simplex) in family.iter().enumerate() {
                for &v in simplex {
                    inc[v].push(i as u32);
                }
            }
            inc
        };
        let incidence = build_incidence(&maximal);
        let marked_incidence = build_incidence(&marked_maximal);

        // staircase order: orbits sorted by representative, fixed/representative
        // vertices before their partners
        let mut key: Vec<(usize, usize)> = (0..n).map(|v| (v.min(tau[v]), usize::from(v > tau[v]))).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| key[v]);
        let mut staircase_rank = vec![0usize; n];
        for (rank, &v) in order.iter().enumerate() {
            staircase_rank[v] = rank;
        }
        key.clear();

        let complex = InvolutiveComplex {
            names,
            tau,
            maximal,
            marked_maximal,
            fixed_vertex,
            staircase_rank,
            incidence,
            marked_incidence,
        };
        complex.check_invariants()?;
        Ok(complex)
    }

    fn check_invariants(&self) -> Result<()> {
        for simplex in &self.maximal {
            let image = self.tau_simplex(simplex);
            if !self.contains_simplex(&image) {
                return Err(Error::NotSimplicial { simplex: self.simplex_names(simplex) });
            }
            let has_moved = simplex.iter().any(|&v| !self.fixed_vertex[v]);
            if has_moved {
                for &v in simplex {
                    let w = self.tau[v];
                    if w != v && simplex.binary_search(&w).is_ok() {
                        return Err(Error::MixedOrbitSimplex {
                            simplex: self.simplex_names(simplex),
                        });
                    }
                    if self.fixed_vertex[v] {
                        continue;
                    }
                }
            }
        }
        for simplex in &self.marked_maximal {
            if !self.contains_simplex(simplex) {
                return Err(Error::SubcomplexInvalid {
                    reason: format!("{:?} is not a simplex of the complex", self.simplex_names(simplex)),
                });
            }
            let image = self.tau_simplex(simplex);
            if !self.in_marked(&image) {
                return Err(Error::SubcomplexInvalid {
                    reason: format!("image of {:?} leaves the subcomplex", self.simplex_names(simplex)),
                });
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name_of(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn tau(&self, v: usize) -> usize {
        self.tau[v]
    }

    pub fn tau_table(&self) -> &[usize] {
        &self.tau
    }

    pub fn is_fixed_vertex(&self, v: usize) -> bool {
        self.fixed_vertex[v]
    }

    pub fn has_fixed_vertex(&self) -> bool {
        self.fixed_vertex.iter().any(|&f| f)
    }

    pub fn maximal_simplices(&self) -> &[Vec<usize>] {
        &self.maximal
    }

    pub fn marked_maximal_simplices(&self) -> &[Vec<usize>] {
        &self.marked_maximal
    }

    pub fn staircase_rank(&self, v: usize) -> usize {
        self.staircase_rank[v]
    }

    pub fn simplex_names(&self, simplex: &[usize]) -> Vec<String> {
        simplex.iter().map(|&v| self.names[v].clone()).collect()
    }

    pub fn tau_simplex(&self, simplex: &[usize]) -> Vec<usize> {
        let mut image: Vec<usize> = simplex.iter().map(|&v| self.tau[v]).collect();
        image.sort_unstable();
        image
    }

    fn family_contains(&self, family: &[Vec<usize>], incidence: &[Vec<u32>], simplex: &[usize]) -> bool {
        if simplex.is_empty() {
            return false;
        }
        let v0 = simplex[0];
        if v0 >= incidence.len() {
            return false;
        }
        incidence[v0].iter().any(|&i| is_subset(simplex, &family[i as usize]))
    }

    pub fn contains_simplex(&self, simplex: &[usize]) -> bool {
        self.family_contains(&self.maximal, &self.incidence, simplex)
    }

    /// Membership in the marked subcomplex `A`.
    pub fn in_marked(&self, simplex: &[usize]) -> bool {
        self.family_contains(&self.marked_maximal, &self.marked_incidence, simplex)
    }

    pub fn simplex_is_fixed(&self, simplex: &[usize]) -> bool {
        simplex.iter().all(|&v| self.fixed_vertex[v])
    }

    /// Max dimension over all simplices.
    pub fn dimension(&self) -> i64 {
        self.maximal.iter().map(|s| s.len() as i64 - 1).max().unwrap_or(-1)
    }

    /// Dimension profile (d0, d1) of the pair `(X, A)`.
    pub fn dimensions(&self) -> DimensionProfile {
        let mut d0 = -1i64;
        let mut d1 = -1i64;
        for simplex in &self.maximal {
            let fixed_face: Vec<usize> =
                simplex.iter().copied().filter(|&v| self.fixed_vertex[v]).collect();
            if !fixed_face.is_empty() && !self.in_marked(&fixed_face) {
                d0 = d0.max(fixed_face.len() as i64 - 1);
            }
            let free = simplex.iter().any(|&v| !self.fixed_vertex[v]);
            if free && !self.in_marked(simplex) {
                d1 = d1.max(simplex.len() as i64 - 1);
            }
        }
        DimensionProfile { d0, d1 }
    }

    /// All distinct simplices of dimension at most `dim`, sorted.
    pub fn cells_up_to_dim(&self, dim: usize) -> Vec<Vec<usize>> {
        let mut out: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut buf = Vec::new();
        for simplex in &self.maximal {
            subsets_up_to(simplex, dim + 1, &mut buf, &mut out);
        }
        out.into_iter().collect()
    }

    /// The subcomplex of pointwise-fixed simplices, with the identity
    /// involution and `A ∩ X^τ` as its marked part.
    pub fn fixed_subcomplex(&self) -> Subcomplex {
        let vertices: Vec<usize> =
            (0..self.vertex_count()).filter(|&v| self.fixed_vertex[v]).collect();
        let index_of: BTreeMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let remap = |simplex: &[usize]| -> Vec<usize> {
            simplex.iter().filter_map(|v| index_of.get(v).copied()).collect()
        };
        let maximal: Vec<Vec<usize>> = self
            .maximal
            .iter()
            .map(|s| {
                let fixed: Vec<usize> =
                    s.iter().copied().filter(|&v| self.fixed_vertex[v]).collect();
                remap(&fixed)
            })
            .filter(|s| !s.is_empty())
            .collect();
        let marked: Vec<Vec<usize>> = self
            .marked_maximal
            .iter()
            .map(|s| {
                let fixed: Vec<usize> =
                    s.iter().copied().filter(|&v| self.fixed_vertex[v]).collect();
                remap(&fixed)
            })
            .filter(|s| !s.is_empty())
            .collect();
        let names = vertices.iter().map(|&v| self.names[v].clone()).collect();
        let tau = (0..vertices.len()).collect();
        let complex = InvolutiveComplex::from_parts(names, tau, maximal, marked)
            .expect("fixed subcomplex of a valid complex is valid");
        Subcomplex { complex, vertex_map: vertices }
    }

    /// The marked subcomplex `A` as a standalone complex (with empty marked
    /// part of its own).
    pub fn marked_subcomplex(&self) -> Subcomplex {
        let mut present: BTreeSet<usize> = BTreeSet::new();
        for simplex in &self.marked_maximal {
            present.extend(simplex.iter().copied());
        }
        let vertices: Vec<usize> = present.into_iter().collect();
        let index_of: BTreeMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let names = vertices.iter().map(|&v| self.names[v].clone()).collect();
        let tau = vertices.iter().map(|&v| index_of[&self.tau[v]]).collect();
        let maximal = self
            .marked_maximal
            .iter()
            .map(|s| s.iter().map(|v| index_of[v]).collect())
            .collect();
        let complex = InvolutiveComplex::from_parts(names, tau, maximal, Vec::new())
            .expect("marked subcomplex of a valid complex is valid");
        Subcomplex { complex, vertex_map: vertices }
    }

    /// Prism triangulation of `X × [0, 1]` with the involution acting on the
    /// first factor, marked with `B = X × ∂I ∪ A × I`.
    pub fn cylinder(&self) -> CylinderPair {
        let n = self.vertex_count();
        let mut names = Vec::with_capacity(2 * n);
        for level in 0..2 {
            for name in &self.names {
                names.push(format!("{name}@{level}"));
            }
        }
        let tau: Vec<usize> = (0..2 * n).map(|v| self.tau[v % n] + n * (v / n)).collect();

        let mut maximal = Vec::new();
        let mut marked = Vec::new();
        for simplex in &self.maximal {
            for prism in self.prism_simplices(simplex, n) {
                maximal.push(prism);
            }
            marked.push(simplex.clone());
            marked.push(simplex.iter().map(|&v| v + n).collect());
        }
        for simplex in &self.marked_maximal {
            for prism in self.prism_simplices(simplex, n) {
                marked.push(prism);
            }
        }
        let y = InvolutiveComplex::from_parts(names, tau, maximal, marked)
            .expect("cylinder of a valid complex is valid");
        CylinderPair { y, base_vertices: n }
    }

    /// Staircase decomposition of `simplex × I` with level-1 copies shifted
    /// by `n`; the vertex order follows the involution-compatible rank, so
    /// the result is again equivariant.
    fn prism_simplices(&self, simplex: &[usize], n: usize) -> Vec<Vec<usize>> {
        let mut ordered: Vec<usize> = simplex.to_vec();
        ordered.sort_by_key(|&v| self.staircase_rank[v]);
        let p = ordered.len();
        let mut out = Vec::with_capacity(p);
        for i in 0..p {
            let mut cell = Vec::with_capacity(p + 1);
            for &v in &ordered[..=i] {
                cell.push(v);
            }
            for &v in &ordered[i..] {
                cell.push(v + n);
            }
            cell.sort_unstable();
            out.push(cell);
        }
        out
    }

    /// Barycentric subdivision; valid whenever the involution is simplicial,
    /// and always satisfies the cell dichotomy afterwards.
    pub fn barycentric_subdivision(&self) -> InvolutiveComplex {
        let top_dim = self.dimension().max(0) as usize;
        let faces = self.cells_up_to_dim(top_dim);
        subdivision_from_faces(&self.names, &self.tau, &faces, &self.maximal, &self.marked_maximal)
            .expect("subdivision of a valid complex is valid")
    }
}

fn subsets_up_to(
    simplex: &[usize],
    max_len: usize,
    buf: &mut Vec<usize>,
    out: &mut BTreeSet<Vec<usize>>,
) {
    fn rec(
        simplex: &[usize],
        start: usize,
        max_len: usize,
        buf: &mut Vec<usize>,
        out: &mut BTreeSet<Vec<usize>>,
    ) {
        if !buf.is_empty() {
            out.insert(buf.clone());
        }
        if buf.len() == max_len {
            return;
        }
        for i in start..simplex.len() {
            buf.push(simplex[i]);
            rec(simplex, i + 1, max_len, buf, out);
            buf.pop();
        }
    }
    buf.clear();
    rec(simplex, 0, max_len, buf, out);
}

fn subdivision_from_faces(
    names: &[String],
    tau: &[usize],
    faces: &[Vec<usize>],
    maximal: &[Vec<usize>],
    marked: &[Vec<usize>],
) -> Result<InvolutiveComplex> {
    let index_of: BTreeMap<&Vec<usize>, usize> =
        faces.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let face_names: Vec<String> = faces
        .iter()
        .map(|f| f.iter().map(|&v| names[v].as_str()).collect::<Vec<_>>().join("+"))
        .collect();
    let face_tau: Vec<usize> = faces
        .iter()
        .map(|f| {
            let mut image: Vec<usize> = f.iter().map(|&v| tau[v]).collect();
            image.sort_unstable();
            index_of[&image]
        })
        .collect();

    // maximal chains of faces of sigma <-> permutations of its vertices
    let chains_of = |sigma: &Vec<usize>| -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = sigma.clone();
        permutations(&mut perm, 0, &mut |order: &[usize]| {
            let mut chain = Vec::with_capacity(order.len());
            let mut prefix: Vec<usize> = Vec::with_capacity(order.len());
            for &v in order {
                prefix.push(v);
                let mut key = prefix.clone();
                key.sort_unstable();
                chain.push(index_of[&key]);
            }
            chain.sort_unstable();
            out.push(chain);
        });
        out
    };

    let new_maximal: Vec<Vec<usize>> = maximal.iter().flat_map(chains_of).collect();
    let new_marked: Vec<Vec<usize>> = marked.iter().flat_map(chains_of).collect();
    InvolutiveComplex::from_parts(face_names, face_tau, new_maximal, new_marked)
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// A subcomplex presented as its own complex plus the injection of its
/// vertices into the parent.
#[derive(Debug, Clone)]
pub struct Subcomplex {
    pub complex: InvolutiveComplex,
    pub vertex_map: Vec<usize>,
}

/// `Y = X × I` with involution `τ × id` and marked part
/// `B = X × ∂I ∪ A × I`.
#[derive(Debug, Clone)]
pub struct CylinderPair {
    pub y: InvolutiveComplex,
    base_vertices: usize,
}

impl CylinderPair {
    pub fn base_vertex_count(&self) -> usize {
        self.base_vertices
    }

    pub fn bottom(&self, v: usize) -> usize {
        v
    }

    pub fn top(&self, v: usize) -> usize {
        v + self.base_vertices
    }

    /// Base vertex and level (0 or 1) of a cylinder vertex.
    pub fn split_vertex(&self, y_vertex: usize) -> (usize, usize) {
        (y_vertex % self.base_vertices, y_vertex / self.base_vertices)
    }
}

/// Validate a raw description into an [`InvolutiveComplex`].
pub fn validate_complex(raw: &RawComplex) -> Result<InvolutiveComplex> {
    let index_of: BTreeMap<&str, usize> =
        raw.vertices.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    if index_of.len() != raw.vertices.len() {
        return Err(Error::ParseError("duplicate vertex ids".into()));
    }
    let mut tau: Vec<usize> = (0..raw.vertices.len()).collect();
    for (from, to) in &raw.involution {
        let &f = index_of
            .get(from.as_str())
            .ok_or_else(|| Error::ParseError(format!("involution references unknown vertex `{from}`")))?;
        let &t = index_of
            .get(to.as_str())
            .ok_or_else(|| Error::ParseError(format!("involution references unknown vertex `{to}`")))?;
        tau[f] = t;
    }
    let lookup_simplex = |simplex: &Vec<String>| -> Result<Vec<usize>> {
        simplex
            .iter()
            .map(|name| {
                index_of
                    .get(name.as_str())
                    .copied()
                    .ok_or_else(|| Error::ParseError(format!("simplex references unknown vertex `{name}`")))
            })
            .collect()
    };
    let maximal: Vec<Vec<usize>> =
        raw.maximal_simplices.iter().map(lookup_simplex).collect::<Result<_>>()?;
    let marked: Vec<Vec<usize>> =
        raw.subcomplex_a.iter().map(lookup_simplex).collect::<Result<_>>()?;
    InvolutiveComplex::from_parts(raw.vertices.clone(), tau, maximal, marked)
}

/// Barycentric subdivision at the raw level, for descriptions that fail the
/// free-orbit condition and must be subdivided before validation.
pub fn subdivide_raw(raw: &RawComplex) -> Result<RawComplex> {
    // only involution well-formedness and simpliciality are needed here
    let index_of: BTreeMap<&str, usize> =
        raw.vertices.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut tau: Vec<usize> = (0..raw.vertices.len()).collect();
    for (from, to) in &raw.involution {
        let (&f, &t) = match (index_of.get(from.as_str()), index_of.get(to.as_str())) {
            (Some(f), Some(t)) => (f, t),
            _ => return Err(Error::ParseError("involution references unknown vertex".into())),
        };
        tau[f] = t;
    }
    for (v, &w) in tau.iter().enumerate() {
        if tau[w] != v {
            return Err(Error::NonInvolutive { vertex: raw.vertices[v].clone() });
        }
    }
    let to_indices = |simplex: &Vec<String>| -> Result<Vec<usize>> {
        let mut s: Vec<usize> = simplex
            .iter()
            .map(|n| {
                index_of
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::ParseError(format!("unknown vertex `{n}`")))
            })
            .collect::<Result<_>>()?;
        s.sort_unstable();
        s.dedup();
        Ok(s)
    };
    let maximal: Vec<Vec<usize>> =
        raw.maximal_simplices.iter().map(to_indices).collect::<Result<_>>()?;
    let marked: Vec<Vec<usize>> = raw.subcomplex_a.iter().map(to_indices).collect::<Result<_>>()?;
    let maximal = normalize_family(maximal);
    let marked = normalize_family(marked);

    let mut faces: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut buf = Vec::new();
    let top = maximal.iter().map(|s| s.len()).max().unwrap_or(0);
    for simplex in &maximal {
        subsets_up_to(simplex, top, &mut buf, &mut faces);
    }
    for simplex in &faces {
        let mut image: Vec<usize> = simplex.iter().map(|&v| tau[v]).collect();
        image.sort_unstable();
        if !faces.contains(&image) {
            return Err(Error::NotSimplicial {
                simplex: simplex.iter().map(|&v| raw.vertices[v].clone()).collect(),
            });
        }
    }
    let faces: Vec<Vec<usize>> = faces.into_iter().collect();
    let index_of_face: BTreeMap<&Vec<usize>, usize> =
        faces.iter().enumerate().map(|(i, f)| (f, i)).collect();
    let face_name = |f: &Vec<usize>| -> String {
        f.iter().map(|&v| raw.vertices[v].as_str()).collect::<Vec<_>>().join("+")
    };
    let vertices: Vec<String> = faces.iter().map(face_name).collect();
    let involution: Vec<(String, String)> = faces
        .iter()
        .map(|f| {
            let mut image: Vec<usize> = f.iter().map(|&v| tau[v]).collect();
            image.sort_unstable();
            (face_name(f), vertices[index_of_face[&image]].clone())
        })
        .collect();
    let chains_of = |sigma: &Vec<usize>| -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut perm = sigma.clone();
        permutations(&mut perm, 0, &mut |order: &[usize]| {
            let mut prefix: Vec<usize> = Vec::new();
            let mut chain = Vec::new();
            for &v in order {
                prefix.push(v);
                let mut key = prefix.clone();
                key.sort_unstable();
                chain.push(vertices[index_of_face[&key]].clone());
            }
            out.push(chain);
        });
        out
    };
    Ok(RawComplex {
        vertices: vertices.clone(),
        maximal_simplices: maximal.iter().flat_map(&chains_of).collect(),
        involution,
        subcomplex_a: marked.iter().flat_map(&chains_of).collect(),
    })
}

/// Which involution a torus carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusInvolution {
    /// Coordinatewise inversion `z -> conj(z)`; 2^d fixed vertices.
    Conjugation,
    /// Half-period translation of the first coordinate; free.
    FreeShift,
}

/// Equivariant staircase triangulation of the `d`-torus with `m` vertices per
/// circle (`m` even, at least 4).
pub fn build_torus_with_resolution(
    d: usize,
    involution: TorusInvolution,
    m: usize,
) -> Result<InvolutiveComplex> {
    if d == 0 || d > 4 {
        return Err(Error::UnsupportedDimension { d });
    }
    if m < 4 || m % 2 != 0 {
        return Err(Error::UnsupportedResolution { m });
    }
    let total = m.pow(d as u32);
    let index = |coords: &[usize]| -> usize {
        coords.iter().fold(0, |acc, &c| acc * m + (c % m))
    };
    let mut names = Vec::with_capacity(total);
    let mut coords = vec![0usize; d];
    for i in 0..total {
        let mut rest = i;
        for slot in (0..d).rev() {
            coords[slot] = rest % m;
            rest /= m;
        }
        names.push(coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("-"));
    }
    let tau: Vec<usize> = (0..total)
        .map(|i| {
            let mut rest = i;
            let mut c = vec![0usize; d];
            for slot in (0..d).rev() {
                c[slot] = rest % m;
                rest /= m;
            }
            match involution {
                TorusInvolution::Conjugation => {
                    for x in &mut c {
                        *x = (m - *x) % m;
                    }
                }
                TorusInvolution::FreeShift => {
                    c[0] = (c[0] + m / 2) % m;
                }
            }
            index(&c)
        })
        .collect();

    let mut maximal = Vec::with_capacity(total * (1..=d).product::<usize>());
    let mut axes: Vec<usize> = (0..d).collect();
    let mut base = vec![0usize; d];
    for i in 0..total {
        let mut rest = i;
        for slot in (0..d).rev() {
            base[slot] = rest % m;
            rest /= m;
        }
        permutations(&mut axes, 0, &mut |order: &[usize]| {
            let mut cell = Vec::with_capacity(d + 1);
            let mut point = base.clone();
            cell.push(index(&point));
            for &axis in order {
                point[axis] = (point[axis] + 1) % m;
                cell.push(index(&point));
            }
            cell.sort_unstable();
            maximal.push(cell);
        });
    }
    InvolutiveComplex::from_parts(names, tau, maximal, Vec::new())
}

/// Equivariant triangulation of the torus at the default desk-scale
/// resolution (4 vertices per circle).
pub fn build_torus(d: usize, involution: TorusInvolution) -> Result<InvolutiveComplex> {
    build_torus_with_resolution(d, involution, 4)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(
        vertices: &[&str],
        maximal: &[&[&str]],
        involution: &[(&str, &str)],
        marked: &[&[&str]],
    ) -> RawComplex {
        RawComplex {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            maximal_simplices: maximal
                .iter()
                .map(|s| s.iter().map(|v| v.to_string()).collect())
                .collect(),
            involution: involution.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            subcomplex_a: marked
                .iter()
                .map(|s| s.iter().map(|v| v.to_string()).collect())
                .collect(),
        }
    }

    #[test]
    fn single_vertex_identity_is_valid() {
        let complex = validate_complex(&raw(&["p"], &[&["p"]], &[], &[])).unwrap();
        assert_eq!(complex.vertex_count(), 1);
        assert_eq!(complex.dimensions(), DimensionProfile { d0: 0, d1: -1 });
    }

    #[test]
    fn swapped_edge_is_mixed() {
        let result = validate_complex(&raw(
            &["a", "b"],
            &[&["a", "b"]],
            &[("a", "b"), ("b", "a")],
            &[],
        ));
        assert!(matches!(result, Err(Error::MixedOrbitSimplex { .. })));
    }

    #[test]
    fn subdividing_a_swapped_edge_makes_it_valid() {
        let bad = raw(&["a", "b"], &[&["a", "b"]], &[("a", "b"), ("b", "a")], &[]);
        let subdivided = subdivide_raw(&bad).unwrap();
        let complex = validate_complex(&subdivided).unwrap();
        // midpoint is fixed, two edges swapped
        assert_eq!(complex.vertex_count(), 3);
        assert_eq!(complex.dimensions(), DimensionProfile { d0: 0, d1: 1 });
    }

    #[test]
    fn hexagonal_circle_with_antipodal_map_is_free() {
        let vertices: Vec<String> = (0..6).map(|i| i.to_string()).collect();
        let names: Vec<&str> = vertices.iter().map(|s| s.as_str()).collect();
        let edges: Vec<Vec<&str>> =
            (0..6).map(|i| vec![names[i], names[(i + 1) % 6]]).collect();
        let edge_refs: Vec<&[&str]> = edges.iter().map(|e| e.as_slice()).collect();
        let invol: Vec<(&str, &str)> = (0..6).map(|i| (names[i], names[(i + 3) % 6])).collect();
        let complex = validate_complex(&raw(&names, &edge_refs, &invol, &[])).unwrap();
        // all 12 simplices are free: no fixed vertices at all
        assert!(!complex.has_fixed_vertex());
        assert_eq!(complex.dimensions(), DimensionProfile { d0: -1, d1: 1 });
        let cells = complex.cells_up_to_dim(1);
        assert_eq!(cells.len(), 12);
        for cell in &cells {
            assert!(!complex.simplex_is_fixed(cell));
            let image = complex.tau_simplex(cell);
            assert!(cell.iter().all(|v| !image.contains(v)));
        }
    }

    #[test]
    fn torus_profiles_match_conjugation_geometry() {
        for d in 1..=4 {
            let torus = build_torus(d, TorusInvolution::Conjugation).unwrap();
            assert_eq!(torus.dimensions(), DimensionProfile { d0: 0, d1: d as i64 });
            let fixed = torus.fixed_subcomplex();
            assert_eq!(fixed.complex.vertex_count(), 1 << d);
        }
    }

    #[test]
    fn torus_two_has_four_fixed_vertices_with_unit_coordinates() {
        let torus = build_torus(2, TorusInvolution::Conjugation).unwrap();
        let fixed = torus.fixed_subcomplex();
        let mut names: Vec<&str> =
            fixed.complex.names().iter().map(|s| s.as_str()).collect();
        names.sort_unstable();
        assert_eq!(names, vec!["0-0", "0-2", "2-0", "2-2"]);
    }

    #[test]
    fn free_shift_und_circle_examples() {
        let torus = build_torus(1, TorusInvolution::FreeShift).unwrap();
        assert!(!torus.has_fixed_vertex());
        assert_eq!(torus.dimensions(), DimensionProfile { d0: -1, d1: 1 });
        assert!(torus.fixed_subcomplex().complex.vertex_count() == 0);

        let circle = build_torus(1, TorusInvolution::Conjugation).unwrap();
        let fixed = circle.fixed_subcomplex();
        let mut names: Vec<&str> = fixed.complex.names().iter().map(|s| s.as_str()).collect();
        names.sort_unstable();
        // the two fixed points of conjugation: angle 0 (z = 1) and half turn (z = -1)
        assert_eq!(names, vec!["0", "2"]);
    }

    #[test]
    fn fixed_subcomplex_is_idempotent_with_identity_involution() {
        let torus = build_torus(2, TorusInvolution::Conjugation).unwrap();
        let fixed = torus.fixed_subcomplex();
        let again = fixed.complex.fixed_subcomplex();
        assert_eq!(again.complex, fixed.complex);
        for v in 0..fixed.complex.vertex_count() {
            assert_eq!(fixed.complex.tau(v), v);
        }
    }

    #[test]
    fn full_complex_under_identity_involution() {
        let complex = validate_complex(&raw(
            &["a", "b", "c"],
            &[&["a", "b", "c"]],
            &[],
            &[],
        ))
        .unwrap();
        let fixed = complex.fixed_subcomplex();
        assert_eq!(fixed.complex, complex);
        assert_eq!(complex.dimensions(), DimensionProfile { d0: 2, d1: -1 });
    }

    #[test]
    fn cylinder_shifts_profile_by_one() {
        let point = validate_complex(&raw(&["p"], &[&["p"]], &[], &[])).unwrap();
        let pair = point.cylinder();
        assert_eq!(pair.y.vertex_count(), 2);
        assert_eq!(pair.y.maximal_simplices(), &[vec![0, 1]]);
        // B = two endpoints; the fixed edge lies outside B
        assert_eq!(pair.y.dimensions(), DimensionProfile { d0: 1, d1: -1 });

        let circle = build_torus(1, TorusInvolution::FreeShift).unwrap();
        let annulus = circle.cylinder();
        assert_eq!(annulus.y.dimensions(), DimensionProfile { d0: -1, d1: 2 });
        for v in 0..annulus.y.vertex_count() {
            assert_ne!(annulus.y.tau(v), v);
        }

        let torus = build_torus(2, TorusInvolution::Conjugation).unwrap();
        let pair = torus.cylinder();
        assert_eq!(pair.y.dimensions(), DimensionProfile { d0: 1, d1: 3 });
    }

    #[test]
    fn subdivision_preserves_the_dimension_profile() {
        let torus = build_torus(2, TorusInvolution::Conjugation).unwrap();
        let subdivided = torus.barycentric_subdivision();
        assert_eq!(subdivided.dimensions(), torus.dimensions());

        let circle = build_torus(1, TorusInvolution::FreeShift).unwrap();
        let subdivided = circle.barycentric_subdivision();
        assert_eq!(subdivided.dimensions(), circle.dimensions());
        // 4 vertices + 4 edge midpoints
        assert_eq!(subdivided.vertex_count(), 8);
    }

    #[test]
    fn marked_subcomplex_relative_profile() {
        // T^1 with A = both fixed vertices
        let circle = build_torus(1, TorusInvolution::Conjugation).unwrap();
        let a0 = circle.vertex_by_name("0").unwrap();
        let a2 = circle.vertex_by_name("2").unwrap();
        let complex = InvolutiveComplex::from_parts(
            circle.names().to_vec(),
            circle.tau_table().to_vec(),
            circle.maximal_simplices().to_vec(),
            vec![vec![a0], vec![a2]],
        )
        .unwrap();
        assert_eq!(complex.dimensions(), DimensionProfile { d0: -1, d1: 1 });
        let a = complex.marked_subcomplex();
        assert_eq!(a.complex.vertex_count(), 2);
    }
}
