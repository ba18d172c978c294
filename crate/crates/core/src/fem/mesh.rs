use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BeamGeometry, PatchGeometry};

/// A 1D mesh of two-node elements `[x_e, x_{e+1}]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    nodes: Vec<f64>,
    /// Node indices sitting exactly on the patch edges `a` and `b`.
    patch_nodes: Option<(usize, usize)>,
}

impl Mesh {
    /// Builds a mesh from explicit node coordinates.
    pub fn from_nodes(nodes: Vec<f64>, patch: Option<&PatchGeometry>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::TooFewElements {
                min: 2,
                got: nodes.len().saturating_sub(1),
            });
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::MeshSpecMismatch(
                "node coordinates must be strictly increasing".into(),
            ));
        }
        let patch_nodes = match patch {
            None => None,
            Some(p) => {
                let a = nodes.iter().position(|&x| x == p.start);
                let b = nodes.iter().position(|&x| x == p.end);
                match (a, b) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => {
                        return Err(Error::MeshSpecMismatch(format!(
                            "patch edges {} and {} must be mesh nodes",
                            p.start, p.end
                        )))
                    }
                }
            }
        };
        Ok(Self { nodes, patch_nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn min_element_length(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_length(e))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn patch_nodes(&self) -> Option<(usize, usize)> {
        self.patch_nodes
    }

    /// Elements covered by the patch, as a half-open range.
    pub fn patch_elements(&self) -> Option<std::ops::Range<usize>> {
        self.patch_nodes.map(|(a, b)| a..b)
    }

    pub fn in_patch(&self, e: usize) -> bool {
        self.patch_elements().is_some_and(|r| r.contains(&e))
    }

    /// Maps a physical coordinate to `(element, xi)`. Points on a node go to
    /// the element on their left, except `x = x_0`.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.n_elements();
        if x < self.nodes[0] || x > self.nodes[n] {
            return None;
        }
        let e = match self.nodes.partition_point(|&xn| xn < x) {
            0 => 0,
            k => (k - 1).min(n - 1),
        };
        let (x0, x1) = self.element(e);
        Some((e, (2.0 * x - x0 - x1) / (x1 - x0)))
    }
}

/// Builds a mesh with `n_elements` elements. Patch geometries get uniform
/// spacing on each of `[0,a]`, `[a,b]`, `[b,L]` so that both patch edges are
/// nodes.
pub fn build_mesh(geometry: &BeamGeometry, n_elements: usize, with_patch: bool) -> Result<Mesh> {
    let l = geometry.length;
    match (with_patch, geometry.patch.as_ref()) {
        (true, Some(p)) => {
            if n_elements < 4 {
                return Err(Error::TooFewElements {
                    min: 4,
                    got: n_elements,
                });
            }
            let lengths = [p.start, p.end - p.start, l - p.end];
            let counts = split_counts(&lengths, n_elements);
            let bounds = [0.0, p.start, p.end, l];
            let mut nodes = Vec::with_capacity(n_elements + 1);
            for (s, &count) in counts.iter().enumerate() {
                let (x0, x1) = (bounds[s], bounds[s + 1]);
                for k in 0..count {
                    nodes.push(if k == 0 {
                        x0
                    } else {
                        x0 + (x1 - x0) * k as f64 / count as f64
                    });
                }
            }
            nodes.push(l);
            Mesh::from_nodes(nodes, Some(p))
        }
        (true, None) => Err(Error::MeshSpecMismatch(
            "patch mesh requested without patch geometry".into(),
        )),
        (false, _) => {
            if n_elements < 2 {
                return Err(Error::TooFewElements {
                    min: 2,
                    got: n_elements,
                });
            }
            let nodes = (0..=n_elements)
                .map(|k| {
                    if k == n_elements {
                        l
                    } else {
                        l * k as f64 / n_elements as f64
                    }
                })
                .collect();
            Mesh::from_nodes(nodes, None)
        }
    }
}

/// Distributes `total` elements over segments proportionally to their length,
/// at least one per segment, largest remainders first.
fn split_counts(lengths: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = lengths.iter().sum();
    let free = total - lengths.len();
    let ideal: Vec<f64> = lengths.iter().map(|l| l / sum * free as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| 1 + x.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = ideal[i] - ideal[i].floor();
        let rj = ideal[j] - ideal[j].floor();
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().cycle() {
        if assigned >= total {
            break;
        }
        counts[i] += 1;
        assigned += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch_geometry(a: f64, b: f64) -> BeamGeometry {
        BeamGeometry::with_patch(
            1.0,
            PatchGeometry {
                core_half_thickness: 0.1,
                patch_thickness: 0.01,
                start: a,
                end: b,
            },
        )
    }

    #[test]
    fn uniform_single_beam_mesh() {
        let m = build_mesh(&BeamGeometry::single(1.0, 0.1), 4, false).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn patch_edges_are_nodes() {
        let m = build_mesh(&patch_geometry(0.3, 0.7), 10, true).unwrap();
        assert!(m.nodes().contains(&0.3));
        assert!(m.nodes().contains(&0.7));
        assert_eq!(m.n_elements(), 10);
        let (a, b) = m.patch_nodes().unwrap();
        assert_eq!((a, b), (3, 7));
        assert!(m.in_patch(3) && m.in_patch(6) && !m.in_patch(7) && !m.in_patch(2));
    }

    #[test]
    fn too_few_elements() {
        let g = BeamGeometry::single(1.0, 0.1);
        assert!(matches!(
            build_mesh(&g, 1, false),
            Err(Error::TooFewElements { .. })
        ));
        assert!(matches!(
            build_mesh(&patch_geometry(0.3, 0.7), 3, true),
            Err(Error::TooFewElements { .. })
        ));
    }

    #[test]
    fn short_segments_still_get_an_element() {
        let m = build_mesh(&patch_geometry(0.01, 0.99), 4, true).unwrap();
        assert_eq!(m.n_elements(), 4);
        assert!(m.min_element_length() > 0.0);
        assert_eq!(m.patch_nodes(), Some((1, 3)));
    }

    #[test]
    fn locate_points() {
        let m = build_mesh(&BeamGeometry::single(1.0, 0.1), 4, false).unwrap();
        assert_eq!(m.locate(0.0), Some((0, -1.0)));
        assert_eq!(m.locate(1.0), Some((3, 1.0)));
        assert_eq!(m.locate(0.5), Some((1, 1.0)));
        let (e, xi) = m.locate(0.625).unwrap();
        assert_eq!(e, 2);
        assert!(xi.abs() < 1e-15);
        assert_eq!(m.locate(1.5), None);
    }
}
