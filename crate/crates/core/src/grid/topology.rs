use std::collections::HashMap;

use super::{Axis, CellId, EdgeId, SdfGrid};
use crate::scalar::Real;

/// Every grid edge whose endpoints differ in sign (after zero snapping),
/// ordered by axis, then `k`, `j`, `i`.
pub fn find_interesting_edges<T: Real>(grid: &SdfGrid<T>) -> Vec<EdgeId> {
    let dims = grid.dims();
    let mut out = Vec::new();
    for axis in Axis::ALL {
        let a = axis.index();
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let base = [i, j, k];
                    if base[a] + 1 >= dims[a] {
                        continue;
                    }
                    let e = EdgeId::new(axis, base);
                    if grid.is_inside(base) != grid.is_inside(e.tip()) {
                        out.push(e);
                    }
                }
            }
        }
    }
    out
}

/// Edge/cell incidence for the interesting part of a grid.
///
/// Edges and cells are addressed by their position in [`Incidence::edges`]
/// and [`Incidence::cells`]; both vectors are sorted.
#[derive(Debug, Clone)]
pub struct Incidence {
    pub edges: Vec<EdgeId>,
    pub cells: Vec<CellId>,
    /// Per edge, the incident cells in counter-clockwise ring order
    /// (see [`SdfGrid::edge_ring`]); `None` outside the grid.
    pub edge_cells: Vec<[Option<usize>; 4]>,
    /// Per cell, its interesting edges in ascending order.
    pub cell_edges: Vec<Vec<usize>>,
    cell_lookup: HashMap<CellId, usize>,
    edge_lookup: HashMap<EdgeId, usize>,
}

impl Incidence {
    pub fn cell_index(&self, c: &CellId) -> Option<usize> {
        self.cell_lookup.get(c).copied()
    }

    pub fn edge_index(&self, e: &EdgeId) -> Option<usize> {
        self.edge_lookup.get(e).copied()
    }

    /// Number of grid cells around edge `e` (4 in the interior).
    pub fn ring_size(&self, e: usize) -> usize {
        self.edge_cells[e].iter().flatten().count()
    }

    pub fn is_interior_edge(&self, e: usize) -> bool {
        self.ring_size(e) == 4
    }

    pub fn interior_edge_count(&self) -> usize {
        (0..self.edges.len()).filter(|&e| self.is_interior_edge(e)).count()
    }
}

/// Tags every cell containing an interesting edge and builds the
/// edge-to-cells and cell-to-edges maps.
pub fn find_interesting_cells<T: Real>(grid: &SdfGrid<T>, edges: &[EdgeId]) -> Incidence {
    let mut edges = edges.to_vec();
    edges.sort();
    edges.dedup();

    let mut cells: Vec<CellId> = edges
        .iter()
        .flat_map(|e| grid.edge_ring(e).into_iter().flatten())
        .collect();
    cells.sort();
    cells.dedup();

    let cell_lookup: HashMap<CellId, usize> = cells.iter().enumerate().map(|(n, &c)| (c, n)).collect();
    let edge_lookup: HashMap<EdgeId, usize> = edges.iter().enumerate().map(|(n, &e)| (e, n)).collect();

    let mut cell_edges = vec![Vec::new(); cells.len()];
    let edge_cells = edges
        .iter()
        .enumerate()
        .map(|(ei, e)| {
            let ring = grid.edge_ring(e);
            let mut slots = [None; 4];
            for (slot, c) in ring.iter().enumerate() {
                if let Some(c) = c {
                    let ci = cell_lookup[c];
                    cell_edges[ci].push(ei);
                    slots[slot] = Some(ci);
                }
            }
            slots
        })
        .collect();

    Incidence {
        edges,
        cells,
        edge_cells,
        cell_edges,
        cell_lookup,
        edge_lookup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Vec3;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn sphere_grid(n: usize, r: f64) -> SdfGrid<f64> {
        let h = 1.0 / (n - 1) as f64;
        SdfGrid::from_fn([n, n, n], Vec3::zeros(), h, |p| (p - Vec3::new(0.5, 0.5, 0.5)).norm() - r).unwrap()
    }

    // exhaustive scan: walk node pairs directly
    fn brute_edges(g: &SdfGrid<f64>) -> BTreeSet<(usize, [usize; 3])> {
        let d = g.dims();
        let mut out = BTreeSet::new();
        for k in 0..d[2] {
            for j in 0..d[1] {
                for i in 0..d[0] {
                    for a in 0..3 {
                        let mut t = [i, j, k];
                        t[a] += 1;
                        if t[a] >= d[a] {
                            continue;
                        }
                        let s0 = if g.value([i, j, k]) == 0.0 { -1.0 } else { g.value([i, j, k]) };
                        let s1 = if g.value(t) == 0.0 { -1.0 } else { g.value(t) };
                        if s0 * s1 < 0.0 {
                            out.insert((a, [i, j, k]));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn all_positive_has_no_edges() {
        let g = SdfGrid::<f64>::new([3, 3, 3], Vec3::zeros(), 1.0, vec![1.0; 27]).unwrap();
        assert!(find_interesting_edges(&g).is_empty());
    }

    #[test]
    fn single_negative_corner() {
        let mut v = vec![1.0; 8];
        v[0] = -1.0;
        let g = SdfGrid::<f64>::new([2, 2, 2], Vec3::zeros(), 1.0, v).unwrap();
        let edges = find_interesting_edges(&g);
        assert_eq!(edges.len(), 3);
        assert!(edges.iter().all(|e| e.base == [0, 0, 0]));
        assert_eq!(edges[0].axis, Axis::X);
        assert_eq!(edges[2].axis, Axis::Z);
    }

    #[test]
    fn sphere_edges_match_exhaustive_scan() {
        let g = sphere_grid(16, 0.31);
        let fast: BTreeSet<_> = find_interesting_edges(&g).iter().map(|e| (e.axis.index(), e.base)).collect();
        assert_eq!(fast, brute_edges(&g));
        assert!(!fast.is_empty());
    }

    #[test]
    fn edges_are_sorted() {
        let g = sphere_grid(10, 0.3);
        let e = find_interesting_edges(&g);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn interior_edge_has_four_cells() {
        let mut v = vec![1.0; 64];
        let g0 = SdfGrid::<f64>::new([4, 4, 4], Vec3::zeros(), 1.0, v.clone()).unwrap();
        // isolate one interesting edge: node (1,1,1) and (2,1,1) differ, craft values
        v[g0.flat_index([1, 1, 1])] = -1.0;
        let g = SdfGrid::new([4, 4, 4], Vec3::zeros(), 1.0, v).unwrap();
        let e = EdgeId::new(Axis::X, [1, 1, 1]);
        let inc = find_interesting_cells(&g, &[e]);
        assert_eq!(inc.cells.len(), 4);
        assert!(inc.is_interior_edge(0));
    }

    #[test]
    fn boundary_edge_has_two_cells() {
        let g = SdfGrid::<f64>::new([4, 4, 4], Vec3::zeros(), 1.0, vec![1.0; 64]).unwrap();
        let e = EdgeId::new(Axis::X, [1, 0, 2]);
        let inc = find_interesting_cells(&g, &[e]);
        assert_eq!(inc.cells.len(), 2);
        assert_eq!(inc.ring_size(0), 2);
    }

    #[test]
    fn sphere_cell_structure() {
        let g = sphere_grid(16, 0.33);
        let inc = find_interesting_cells(&g, &find_interesting_edges(&g));
        for (ci, c) in inc.cells.iter().enumerate() {
            assert!(!inc.cell_edges[ci].is_empty());
            for &e in &inc.cell_edges[ci] {
                assert!(c.edges().contains(&inc.edges[e]));
            }
        }
    }

    // recompute incidence by visiting every cell and its 12 edges
    fn brute_incidence(g: &SdfGrid<f64>) -> (BTreeMap<EdgeId, BTreeSet<CellId>>, BTreeMap<CellId, BTreeSet<EdgeId>>) {
        let interesting: BTreeSet<(usize, [usize; 3])> = brute_edges(g);
        let cd = g.cell_dims();
        let mut e2c: BTreeMap<EdgeId, BTreeSet<CellId>> = BTreeMap::new();
        let mut c2e: BTreeMap<CellId, BTreeSet<EdgeId>> = BTreeMap::new();
        for k in 0..cd[2] {
            for j in 0..cd[1] {
                for i in 0..cd[0] {
                    let c = CellId([i, j, k]);
                    for e in c.edges() {
                        if interesting.contains(&(e.axis.index(), e.base)) {
                            e2c.entry(e).or_default().insert(c);
                            c2e.entry(c).or_default().insert(e);
                        }
                    }
                }
            }
        }
        (e2c, c2e)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn incidence_matches_brute_force(
            n in 2usize..=8,
            vals in prop::collection::vec(-1.0f64..1.0, 512),
            scale in 0.001f64..1000.0,
        ) {
            let values: Vec<f64> = vals[..n * n * n].to_vec();
            let g = SdfGrid::new([n, n, n], Vec3::zeros(), 1.0, values.clone()).unwrap();
            let edges = find_interesting_edges(&g);
            let inc = find_interesting_cells(&g, &edges);
            let (e2c, c2e) = brute_incidence(&g);
            prop_assert_eq!(inc.edges.len(), e2c.len());
            prop_assert_eq!(inc.cells.len(), c2e.len());
            for (ei, e) in inc.edges.iter().enumerate() {
                let got: BTreeSet<CellId> = inc.edge_cells[ei].iter().flatten().map(|&c| inc.cells[c]).collect();
                prop_assert_eq!(&got, &e2c[e]);
            }
            for (ci, c) in inc.cells.iter().enumerate() {
                let got: BTreeSet<EdgeId> = inc.cell_edges[ci].iter().map(|&e| inc.edges[e]).collect();
                prop_assert_eq!(&got, &c2e[c]);
            }

            let scaled = SdfGrid::new([n, n, n], Vec3::zeros(), 1.0, values.iter().map(|v| v * scale).collect()).unwrap();
            prop_assert_eq!(find_interesting_edges(&scaled), edges);
        }
    }
}
