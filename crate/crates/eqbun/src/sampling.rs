//! Barycentric sample lattices on simplices and piecewise-linear evaluation.
//!
//! Sampled objects (sections, morphisms, certified gaps) live on the lattice
//! of barycentric coordinates with a fixed denominator `r` per simplex.  A
//! lattice point is stored in reduced form, so the same geometric point has
//! one key independent of which simplex or resolution produced it.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::linalg::CMatrix;

/// A point of a simplicial complex in reduced barycentric coordinates:
/// strictly positive weights `parts[i].1 / den` on the vertices `parts[i].0`.
///
/// `parts` is sorted by vertex and the gcd of all numerators and the
/// denominator is 1, so equality of keys is equality of points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SamplePoint {
    pub den: u32,
    pub parts: Vec<(usize, u32)>,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SamplePoint {
    /// Build from per-vertex numerators over a common denominator; zero
    /// weights are dropped and the fraction is reduced.
    pub fn new(den: u32, weights: impl IntoIterator<Item = (usize, u32)>) -> SamplePoint {
        let mut parts: Vec<(usize, u32)> = weights.into_iter().filter(|&(_, w)| w > 0).collect();
        parts.sort_unstable();
        let mut g = den;
        for &(_, w) in &parts {
            g = gcd(g, w);
        }
        if g > 1 {
            for part in &mut parts {
                part.1 /= g;
            }
        }
        SamplePoint { den: den / g.max(1), parts }
    }

    pub fn vertex(v: usize) -> SamplePoint {
        SamplePoint { den: 1, parts: vec![(v, 1)] }
    }

    /// The simplex carrying the point in its interior.
    pub fn support(&self) -> Vec<usize> {
        self.parts.iter().map(|&(v, _)| v).collect()
    }

    pub fn is_vertex(&self) -> Option<usize> {
        if self.parts.len() == 1 {
            Some(self.parts[0].0)
        } else {
            None
        }
    }

    /// Push the point forward along a vertex map.
    pub fn map_vertices(&self, map: impl Fn(usize) -> usize) -> SamplePoint {
        SamplePoint::new(self.den, self.parts.iter().map(|&(v, w)| (map(v), w)))
    }

    /// Barycentric weight of vertex `v` as a float.
    pub fn weight_of(&self, v: usize) -> f64 {
        for &(u, w) in &self.parts {
            if u == v {
                return w as f64 / self.den as f64;
            }
        }
        0.0
    }

    /// Short human-readable form `v*w|v*w/den`.
    pub fn label(&self, names: &[String]) -> String {
        let body: Vec<String> = self
            .parts
            .iter()
            .map(|&(v, w)| format!("{}*{}", names.get(v).map(|s| s.as_str()).unwrap_or("?"), w))
            .collect();
        format!("{}/{}", body.join("|"), self.den)
    }
}

/// All compositions of `total` into `parts` nonnegative summands.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; parts];
    fn rec(idx: usize, left: u32, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if idx + 1 == current.len() {
            current[idx] = left;
            out.push(current.clone());
            return;
        }
        for take in 0..=left {
            current[idx] = take;
            rec(idx + 1, left - take, current, out);
        }
    }
    if parts > 0 {
        rec(0, total, &mut current, &mut out);
    }
    out
}

/// Lattice of a simplex at resolution `r`: all points with barycentric
/// numerators summing to `r`.
pub fn lattice_points(simplex: &[usize], r: u32) -> Vec<SamplePoint> {
    compositions(r, simplex.len())
        .into_iter()
        .map(|nums| SamplePoint::new(r, simplex.iter().copied().zip(nums)))
        .collect()
}

/// Interior lattice points (all weights positive).  Empty when
/// `dim(simplex) >= r`.
pub fn interior_lattice_points(simplex: &[usize], r: u32) -> Vec<SamplePoint> {
    lattice_points(simplex, r)
        .into_iter()
        .filter(|p| p.parts.len() == simplex.len())
        .collect()
}

/// Deduplicated lattice of a family of simplices.
pub fn lattice_of_family<'a>(
    simplices: impl IntoIterator<Item = &'a Vec<usize>>,
    r: u32,
) -> Vec<SamplePoint> {
    let mut set = BTreeSet::new();
    for simplex in simplices {
        for p in lattice_points(simplex, r) {
            set.insert(p);
        }
    }
    set.into_iter().collect()
}

/// Exact barycentric coordinates `num[i]/den` on an ordered vertex list,
/// scaled so that `sum(num) = r * den` (coordinates of the `r`-dilated
/// simplex).
#[derive(Debug, Clone)]
pub struct DilatedPoint {
    pub num: Vec<i64>,
    pub den: i64,
}

impl DilatedPoint {
    pub fn from_sample(point: &SamplePoint, simplex: &[usize], r: u32) -> Option<DilatedPoint> {
        // point.den divides some multiple; rescale numerators to denominator
        // point.den, then to the dilated scale with den = point.den / gcd.
        let mut num = vec![0i64; simplex.len()];
        for &(v, w) in &point.parts {
            let pos = simplex.iter().position(|&u| u == v)?;
            num[pos] = w as i64 * r as i64;
        }
        Some(DilatedPoint { num, den: point.den as i64 })
    }

    fn reduce(mut self) -> DilatedPoint {
        fn gcd64(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd64(b, a % b)
            }
        }
        let mut g = self.den;
        for &n in &self.num {
            g = gcd64(g, n);
        }
        if g > 1 {
            for n in &mut self.num {
                *n /= g;
            }
            self.den /= g;
        }
        self
    }

    /// Radial decomposition around the barycenter: returns `(t, boundary)`
    /// with the point equal to `(1-t) * barycenter + t * boundary`, or
    /// `None` at the barycenter itself.
    pub fn radial_from_barycenter(&self, r: u32) -> Option<(f64, DilatedPoint)> {
        let p1 = self.num.len() as i64;
        let m = *self.num.iter().min().unwrap();
        let rb = r as i64 * self.den;
        let t_num = rb - p1 * m;
        if t_num == 0 {
            return None;
        }
        let boundary = DilatedPoint {
            num: self.num.iter().map(|&a| r as i64 * (a - m)).collect(),
            den: t_num,
        }
        .reduce();
        Some((t_num as f64 / rb as f64, boundary))
    }
}

/// Piecewise-linear evaluation of lattice data at an arbitrary rational point
/// of a simplex, using the staircase (Freudenthal) triangulation of the
/// `r`-dilated lattice.
///
/// `lookup` receives reduced lattice points supported on `simplex`.
pub fn pl_evaluate(
    simplex: &[usize],
    r: u32,
    point: &DilatedPoint,
    lookup: &mut dyn FnMut(&SamplePoint) -> Option<CMatrix>,
) -> Option<CMatrix> {
    let p1 = simplex.len();
    let den = point.den;
    debug_assert_eq!(point.num.iter().sum::<i64>(), r as i64 * den);
    // cumulative coordinates c_j = sum_{l >= j} x_l
    let mut cum = vec![0i64; p1 + 1];
    for j in (0..p1).rev() {
        cum[j] = cum[j + 1] + point.num[j];
    }
    let floor: Vec<i64> = cum.iter().map(|&c| c.div_euclid(den)).collect();
    let frac: Vec<i64> = cum.iter().map(|&c| c.rem_euclid(den)).collect();
    // indices 1..p1-1... cum index range 0..p1; index 0 has frac 0 by the sum
    // constraint, index p1 is the constant 0.
    let mut order: Vec<usize> = (1..p1).filter(|&j| frac[j] > 0).collect();
    order.sort_by(|&a, &b| frac[b].cmp(&frac[a]).then(a.cmp(&b)));

    let to_sample = |cumulative: &[i64]| -> SamplePoint {
        let mut weights = Vec::with_capacity(p1);
        for j in 0..p1 {
            let x = cumulative[j] - cumulative[j + 1];
            debug_assert!(x >= 0);
            weights.push((simplex[j], x as u32));
        }
        SamplePoint::new(r, weights)
    };

    let mut result: Option<CMatrix> = None;
    let mut acc = |weight: f64, point: &SamplePoint, lookup: &mut dyn FnMut(&SamplePoint) -> Option<CMatrix>| -> Option<()> {
        if weight == 0.0 {
            return Some(());
        }
        let value = lookup(point)? * Complex64::new(weight, 0.0);
        match &mut result {
            Some(total) => *total += value,
            None => result = Some(value),
        }
        Some(())
    };

    let mut cumulative = floor;
    let mut prev_frac = den;
    for (step, &j) in order.iter().enumerate() {
        let w = (prev_frac - frac[j]) as f64 / den as f64;
        acc(w, &to_sample(&cumulative), lookup)?;
        cumulative[j] += 1;
        prev_frac = frac[j];
        if step + 1 == order.len() {
            let w_last = frac[j] as f64 / den as f64;
            acc(w_last, &to_sample(&cumulative), lookup)?;
        }
    }
    if order.is_empty() {
        acc(1.0, &to_sample(&cumulative), lookup)?;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use num_complex::Complex64;

    #[test]
    fn sample_point_reduces() {
        let a = SamplePoint::new(4, vec![(3, 2), (1, 2)]);
        let b = SamplePoint::new(2, vec![(1, 1), (3, 1)]);
        assert_eq!(a, b);
        assert_eq!(a.den, 2);
        let v = SamplePoint::new(4, vec![(7, 4)]);
        assert_eq!(v, SamplePoint::vertex(7));
    }

    #[test]
    fn lattice_count_matches_binomial() {
        // C(p + r, p) points on a p-simplex at resolution r
        let pts = lattice_points(&[0, 1, 2], 4);
        assert_eq!(pts.len(), 15);
        let interior = interior_lattice_points(&[0, 1, 2], 4);
        assert_eq!(interior.len(), 3); // compositions of 4 into 3 positive parts
        assert!(interior_lattice_points(&[0, 1, 2], 2).is_empty());
    }

    #[test]
    fn shared_face_points_deduplicate() {
        let all = lattice_of_family([vec![0, 1, 2], vec![1, 2, 3]].iter(), 2);
        // 6 + 6 points with the edge {1,2} lattice (3 points) shared once
        assert_eq!(all.len(), 9);
    }

    fn linear_lookup(point: &SamplePoint) -> Option<CMatrix> {
        // affine test function f = sum_v coeff(v) * weight(v)
        let mut value = 0.0;
        for &(v, w) in &point.parts {
            value += (1.0 + v as f64 * 2.5) * w as f64 / point.den as f64;
        }
        Some(CMatrix::from_element(1, 1, Complex64::new(value, 0.0)))
    }

    #[test]
    fn pl_evaluation_is_exact_on_affine_data() {
        let simplex = vec![0, 1, 2];
        // point (1/5, 3/10, 1/2) scaled to the 3-dilated simplex: den 10, sum 30
        let point = DilatedPoint { num: vec![6, 9, 15], den: 10 };
        let got = pl_evaluate(&simplex, 3, &point, &mut |p| linear_lookup(p)).unwrap();
        let expect = 0.2 * 1.0 + 0.3 * 3.5 + 0.5 * 6.0;
        assert!((got[(0, 0)].re - expect).abs() < 1e-12);
    }

    #[test]
    fn pl_evaluation_matches_lattice_values_at_lattice_points() {
        let simplex = vec![2, 5, 9];
        for point in lattice_points(&simplex, 3) {
            let dilated = DilatedPoint::from_sample(&point, &simplex, 3).unwrap();
            let got = pl_evaluate(&simplex, 3, &dilated, &mut |p| linear_lookup(p)).unwrap();
            let direct = linear_lookup(&point).unwrap();
            assert!((got[(0, 0)].re - direct[(0, 0)].re).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_decomposition_reconstructs_point() {
        let point = DilatedPoint { num: vec![3, 1, 1, 1], den: 1 }; // r = 6, p = 3
        let (t, boundary) = point.radial_from_barycenter(6).unwrap();
        assert!(boundary.num.iter().any(|&n| n == 0));
        for j in 0..4 {
            let b = boundary.num[j] as f64 / boundary.den as f64;
            let x = point.num[j] as f64 / point.den as f64;
            let bary = 6.0 / 4.0;
            assert!(((1.0 - t) * bary + t * b - x).abs() < 1e-12);
        }
    }
}
