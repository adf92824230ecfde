//! Level-set extraction by marching squares, plus the polygon predicates the
//! topology checks need (closure, simplicity, containment, area).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::GridField;

/// A polyline in the `(z, r)` plane. Closed polylines do not repeat the first
/// point at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Polyline {
    fn segments(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.points.len();
        let m = if self.closed { n } else { n.saturating_sub(1) };
        (0..m).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments()
            .map(|(a, b)| ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt())
            .sum()
    }

    /// Signed shoelace area (closed polylines only; 0 otherwise).
    pub fn signed_area(&self) -> f64 {
        if !self.closed {
            return 0.0;
        }
        0.5 * self.segments().map(|(a, b)| a.0 * b.1 - b.0 * a.1).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Vertex average.
    pub fn centroid(&self) -> (f64, f64) {
        let n = self.points.len().max(1) as f64;
        let (sz, sr) = self
            .points
            .iter()
            .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        (sz / n, sr / n)
    }

    /// Winding number of the closed polyline around `p`.
    pub fn winding_number(&self, p: (f64, f64)) -> i32 {
        if !self.closed {
            return 0;
        }
        let mut wn = 0;
        for (a, b) in self.segments() {
            let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
            if a.1 <= p.1 {
                if b.1 > p.1 && cross > 0.0 {
                    wn += 1;
                }
            } else if b.1 <= p.1 && cross < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        self.winding_number(p) != 0
    }

    /// No two non-adjacent segments intersect.
    pub fn is_simple(&self) -> bool {
        let segs: Vec<_> = self.segments().collect();
        let n = segs.len();
        for a in 0..n {
            for b in a + 1..n {
                let adjacent = b == a + 1 || (self.closed && a == 0 && b == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(segs[a], segs[b]) {
                    return false;
                }
            }
        }
        true
    }

    /// Every vertex of `inner` lies strictly inside `self` and the curves do not cross.
    pub fn strictly_contains(&self, inner: &Polyline) -> bool {
        if !self.closed || !inner.closed {
            return false;
        }
        if !inner.points.iter().all(|p| self.contains(*p)) {
            return false;
        }
        for s in self.segments() {
            for t in inner.segments() {
                if segments_intersect(s, t) {
                    return false;
                }
            }
        }
        true
    }

    /// Largest distance from `p` to a vertex.
    pub fn max_distance_to(&self, p: (f64, f64)) -> f64 {
        self.points
            .iter()
            .map(|q| ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_intersect(s: ((f64, f64), (f64, f64)), t: ((f64, f64), (f64, f64))) -> bool {
    let (p1, p2) = s;
    let (q1, q2) = t;
    // quick reject on bounding boxes
    if p1.0.max(p2.0) < q1.0.min(q2.0)
        || q1.0.max(q2.0) < p1.0.min(p2.0)
        || p1.1.max(p2.1) < q1.1.min(q2.1)
        || q1.1.max(q2.1) < p1.1.min(p2.1)
    {
        return false;
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Crossing point on a lattice edge, identified by the edge so that adjacent
/// cells produce bit-identical points.
type EdgeKey = usize;

/// Extracts `{field = level}` as polylines. Values strictly above `level`
/// count as inside; saddle cells are resolved by the cell-centre average.
pub fn marching_squares(field: &GridField, level: f64) -> Vec<Polyline> {
    let g = field.grid;
    let above = |i: usize, j: usize| field.at(i, j) > level;
    let point = |key: EdgeKey| -> (f64, f64) {
        let node = key / 2;
        let (i, j) = (node % g.nz, node / g.nz);
        let (i2, j2) = if key.is_multiple_of(2) { (i + 1, j) } else { (i, j + 1) };
        let (a, b) = (field.at(i, j), field.at(i2, j2));
        let t = ((level - a) / (b - a)).clamp(0.0, 1.0);
        let (z0, r0) = (g.z(i), g.r(j));
        let (z1, r1) = (g.z(i2), g.r(j2));
        (z0 + t * (z1 - z0), r0 + t * (r1 - r0))
    };
    let zedge = |i: usize, j: usize| 2 * g.idx(i, j);
    let redge = |i: usize, j: usize| 2 * g.idx(i, j) + 1;

    let mut segs: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for j in 0..g.nr - 1 {
        for i in 0..g.nz - 1 {
            let c = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let n_above = c.iter().filter(|b| **b).count();
            if n_above == 0 || n_above == 4 {
                continue;
            }
            // edges in cyclic order: bottom (c0-c1), right (c1-c2), top (c2-c3), left (c3-c0)
            let edges = [zedge(i, j), redge(i + 1, j), zedge(i, j + 1), redge(i, j)];
            let crossing: Vec<usize> = (0..4).filter(|&e| c[e] != c[(e + 1) % 4]).collect();
            if crossing.len() == 2 {
                segs.push((edges[crossing[0]], edges[crossing[1]]));
            } else {
                let centre = 0.25
                    * (field.at(i, j) + field.at(i + 1, j) + field.at(i + 1, j + 1) + field.at(i, j + 1))
                    > level;
                // isolate the corners whose class differs from the centre; corner k sits
                // between edges k-1 and k
                for k in 0..4 {
                    if c[k] != centre {
                        segs.push((edges[(k + 3) % 4], edges[k]));
                    }
                }
            }
        }
    }

    let mut adj: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segs.iter().enumerate() {
        adj.entry(a).or_default().push(s);
        adj.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let other = |s: usize, key: EdgeKey| if segs[s].0 == key { segs[s].1 } else { segs[s].0 };
    let next_unused = |key: EdgeKey, used: &Vec<bool>| -> Option<usize> {
        adj.get(&key)?.iter().copied().find(|s| !used[*s])
    };

    // open chains start at edges with a single segment (domain boundary)
    let mut starts: Vec<EdgeKey> = adj
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, _)| *k)
        .collect();
    starts.sort_unstable();
    let closed_starts: Vec<EdgeKey> = {
        let mut k: Vec<EdgeKey> = segs.iter().map(|s| s.0).collect();
        k.sort_unstable();
        k
    };
    for (is_open, list) in [(true, starts), (false, closed_starts)] {
        for start in list {
            let Some(first) = next_unused(start, &used) else {
                continue;
            };
            let mut keys = vec![start];
            let mut cur = start;
            let mut s = first;
            loop {
                used[s] = true;
                cur = other(s, cur);
                if cur == start {
                    break;
                }
                keys.push(cur);
                match next_unused(cur, &used) {
                    Some(n) => s = n,
                    None => break,
                }
            }
            let closed = !is_open && cur == start;
            out.push(Polyline {
                points: keys.into_iter().map(point).collect(),
                closed,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxiGrid;

    #[test]
    fn circle_contour() {
        let g = AxiGrid::new(2.0, 2.0, 81, 41).unwrap();
        let f = GridField::sample(g, |z, r| 1.0 - (z * z + (r - 1.0).powi(2)));
        let cs = marching_squares(&f, 0.75);
        assert_eq!(cs.len(), 1);
        let c = &cs[0];
        assert!(c.closed && c.is_simple());
        let area = c.area();
        let exact = std::f64::consts::PI * 0.25;
        // chords of a polygon inscribed at spacing 0.05 lose O(h²) area
        assert!((area - exact).abs() < 5e-3, "{area}");
        assert!(c.contains((0.0, 1.0)));
        assert!(!c.contains((0.0, 1.6)));
        assert_eq!(c.winding_number((0.0, 1.0)).abs(), 1);
    }

    #[test]
    fn nested_levels() {
        let g = AxiGrid::new(2.0, 2.0, 81, 41).unwrap();
        let f = GridField::sample(g, |z, r| 1.0 - (z * z + 2.0 * (r - 1.0).powi(2)));
        let outer = &marching_squares(&f, 0.5)[0];
        let inner = &marching_squares(&f, 0.8)[0];
        assert!(outer.strictly_contains(inner));
        assert!(!inner.strictly_contains(outer));
    }

    #[test]
    fn open_contour_reaching_boundary() {
        let g = AxiGrid::new(1.0, 1.0, 11, 11).unwrap();
        let f = GridField::sample(g, |z, _| z);
        let cs = marching_squares(&f, 0.05);
        assert_eq!(cs.len(), 1);
        assert!(!cs[0].closed);
        assert_eq!(cs[0].points.len(), 11);
    }

    #[test]
    fn empty_and_saddle() {
        let g = AxiGrid::new(1.0, 1.0, 11, 11).unwrap();
        let f = GridField::sample(g, |z, r| z * (r - 0.5));
        assert!(marching_squares(&f, 10.0).is_empty());
        // two hyperbola branches near the saddle, never merged into a crossing
        let cs = marching_squares(&f, 0.01);
        assert!(cs.iter().all(|c| c.is_simple()));
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn self_intersection_detected() {
        let bow = Polyline {
            points: vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)],
            closed: true,
        };
        assert!(!bow.is_simple());
        let sq = Polyline {
            points: vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
            closed: true,
        };
        assert!(sq.is_simple());
        assert!((sq.area() - 1.0).abs() < 1e-15);
    }
}
