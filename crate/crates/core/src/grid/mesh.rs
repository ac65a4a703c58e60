use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DistanceData, DomainDescriptor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeClass {
    /// Unknown of the discrete problem: `d > h_trunc`.
    Interior,
    /// Dirichlet node of the truncation layer: `0 < d <= h_trunc`, next to an interior node.
    Layer,
    Exterior,
}

/// Uniform Cartesian grid over the bounding box with nodes classified against
/// the truncated domain `{d > h_trunc}`.
///
/// The spacing is isotropic: `h = (longest box extent) / (resolution - 1)`,
/// with a node at the domain center. With `mirror` set only the nonnegative
/// orthant (relative to the center) is stored and the stencil reflects across
/// each coordinate plane; this is exact for the built-in shapes, which are
/// symmetric in every axis.
#[derive(Clone, Debug)]
pub struct MaskedGrid {
    domain: DomainDescriptor,
    resolution: usize,
    spacing: f64,
    h_trunc: f64,
    mirror: bool,
    half_counts: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    class: Vec<NodeClass>,
    geometry: Vec<Option<DistanceData>>,
    interior: Vec<usize>,
    layer: Vec<usize>,
}

impl MaskedGrid {
    pub fn build(domain: &DomainDescriptor, resolution: usize, h_trunc: f64, mirror: bool) -> Result<Self> {
        if resolution < 17 || resolution % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be odd and at least 17, got {resolution}"
            )));
        }
        let n = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let spacing = Self::spacing_for(domain, resolution);
        let r0 = domain.r0();
        if !(h_trunc >= spacing && h_trunc < 0.25 * r0) {
            return Err(Error::InvalidArgument(format!(
                "h_trunc = {h_trunc} must satisfy h_grid = {spacing} <= h_trunc < r0/4 = {}",
                0.25 * r0
            )));
        }
        let center = domain.center();
        let half_counts: Vec<usize> = (0..n)
            .map(|i| {
                let half = (hi[i] - center[i]).min(center[i] - lo[i]);
                (half / spacing + 1e-9).floor() as usize
            })
            .collect();
        let dims: Vec<usize> = half_counts
            .iter()
            .map(|&k| if mirror { k + 1 } else { 2 * k + 1 })
            .collect();
        let mut strides = vec![1; n];
        for i in (0..n - 1).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let total = strides[0] * dims[0];

        let mut grid = Self {
            domain: domain.clone(),
            resolution,
            spacing,
            h_trunc,
            mirror,
            half_counts,
            dims,
            strides,
            class: Vec::new(),
            geometry: Vec::new(),
            interior: Vec::new(),
            layer: Vec::new(),
        };
        let geometry: Vec<Option<DistanceData>> = (0..total)
            .into_par_iter()
            .map(|id| {
                let x = grid.position(id);
                if domain.phi(&x) >= 0.0 {
                    Ok(None)
                } else {
                    domain.signed_distance(&x).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let inside = |id: usize| geometry[id].as_ref().is_some_and(|g| g.d > 0.0);
        // A rounding tie at d = h_trunc = h_grid can put a stencil neighbor
        // on the boundary; such nodes join the layer instead.
        let deep: Vec<bool> = (0..total)
            .map(|id| {
                geometry[id].as_ref().is_some_and(|g| g.d > h_trunc)
                    && grid.neighbors(id).all(|nb| nb.is_some_and(inside))
            })
            .collect();
        let mut class = vec![NodeClass::Exterior; total];
        for id in 0..total {
            if deep[id] {
                class[id] = NodeClass::Interior;
            } else if inside(id)
                && grid.neighbors(id).any(|nb| nb.is_some_and(|nb| deep[nb]))
            {
                class[id] = NodeClass::Layer;
            }
        }
        grid.geometry = geometry
            .into_iter()
            .zip(&class)
            .map(|(g, c)| if *c == NodeClass::Exterior { None } else { g })
            .collect();
        grid.interior = (0..total).filter(|&i| class[i] == NodeClass::Interior).collect();
        grid.layer = (0..total).filter(|&i| class[i] == NodeClass::Layer).collect();
        grid.class = class;
        if grid.interior.is_empty() {
            return Err(Error::Unresolved);
        }
        Ok(grid)
    }

    /// Isotropic spacing: the longest bounding-box side over `resolution - 1` cells.
    pub fn spacing_for(domain: &DomainDescriptor, resolution: usize) -> f64 {
        let (lo, hi) = domain.bounding_box();
        let longest = lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max);
        longest / resolution.saturating_sub(1).max(1) as f64
    }

    pub fn domain(&self) -> &DomainDescriptor {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn h_trunc(&self) -> f64 {
        self.h_trunc
    }

    pub fn mirror(&self) -> bool {
        self.mirror
    }

    /// Stored node counts per axis.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    pub fn class(&self, id: usize) -> NodeClass {
        self.class[id]
    }

    pub fn distance_data(&self, id: usize) -> Option<&DistanceData> {
        self.geometry[id].as_ref()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn layer_nodes(&self) -> &[usize] {
        &self.layer
    }

    /// Lattice offsets from the center, in units of the spacing.
    pub fn lattice(&self, id: usize) -> Vec<i64> {
        let mut rem = id;
        (0..self.dim())
            .map(|a| {
                let j = rem / self.strides[a];
                rem %= self.strides[a];
                if self.mirror {
                    j as i64
                } else {
                    j as i64 - self.half_counts[a] as i64
                }
            })
            .collect()
    }

    pub fn position(&self, id: usize) -> Vec<f64> {
        let c = self.domain.center();
        self.lattice(id)
            .iter()
            .enumerate()
            .map(|(a, &k)| c[a] + k as f64 * self.spacing)
            .collect()
    }

    /// Node id for lattice offsets, reflecting negative offsets when mirrored.
    pub fn node_at(&self, lattice: &[i64]) -> Option<usize> {
        let mut id = 0;
        for (a, &k) in lattice.iter().enumerate() {
            let j = if self.mirror {
                k.unsigned_abs() as usize
            } else {
                let j = k + self.half_counts[a] as i64;
                if j < 0 {
                    return None;
                }
                j as usize
            };
            if j >= self.dims[a] {
                return None;
            }
            id += j * self.strides[a];
        }
        Some(id)
    }

    /// Neighbor along `axis` in direction `step` (+1 or -1).
    pub fn neighbor(&self, id: usize, axis: usize, step: i64) -> Option<usize> {
        let j = ((id / self.strides[axis]) % self.dims[axis]) as i64;
        let t = j + step;
        let t = if self.mirror && t < 0 { -t } else { t };
        if t < 0 || t >= self.dims[axis] as i64 {
            return None;
        }
        Some((id as i64 + (t - j) * self.strides[axis] as i64) as usize)
    }

    /// The `2n` stencil neighbors, ordered (axis 0 -, axis 0 +, axis 1 -, ...).
    pub fn neighbors(&self, id: usize) -> impl Iterator<Item = Option<usize>> + '_ {
        (0..self.dim()).flat_map(move |a| [self.neighbor(id, a, -1), self.neighbor(id, a, 1)])
    }

    /// Number of full-grid nodes represented by a stored node.
    pub fn multiplicity(&self, id: usize) -> usize {
        if !self.mirror {
            return 1;
        }
        self.lattice(id).iter().map(|&k| if k == 0 { 1 } else { 2 }).product()
    }

    /// Full (unmirrored) node counts per axis.
    pub fn full_dims(&self) -> Vec<usize> {
        self.half_counts.iter().map(|k| 2 * k + 1).collect()
    }

    /// Full-grid origin (the lowest corner node).
    pub fn origin(&self) -> Vec<f64> {
        let c = self.domain.center();
        (0..self.dim())
            .map(|a| c[a] - self.half_counts[a] as f64 * self.spacing)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> DomainDescriptor {
        DomainDescriptor::ball(vec![0.0; 3], 1.0).unwrap()
    }

    #[test]
    fn interior_count_matches_lattice_scan() {
        let g = MaskedGrid::build(&ball(), 33, 0.1, false).unwrap();
        let h = 2.0 / 32.0;
        let mut count = 0;
        for i in -16i64..=16 {
            for j in -16i64..=16 {
                for k in -16i64..=16 {
                    let r = ((i * i + j * j + k * k) as f64).sqrt() * h;
                    if 1.0 - r > 0.1 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(g.interior_nodes().len(), count);
    }

    #[test]
    fn mirrored_grid_matches_full_grid() {
        let full = MaskedGrid::build(&ball(), 33, 0.1, false).unwrap();
        let half = MaskedGrid::build(&ball(), 33, 0.1, true).unwrap();
        let weighted: usize = half.interior_nodes().iter().map(|&i| half.multiplicity(i)).sum();
        assert_eq!(weighted, full.interior_nodes().len());
        let id = half.node_at(&[0, 3, 1]).unwrap();
        assert_eq!(half.neighbor(id, 0, -1), half.node_at(&[1, 3, 1]));
    }

    #[test]
    fn stencils_stay_in_the_solved_region() {
        let g = MaskedGrid::build(&ball(), 33, 0.0625, true).unwrap();
        let h = g.spacing();
        for &id in g.interior_nodes() {
            for nb in g.neighbors(id) {
                assert_ne!(g.class(nb.unwrap()), NodeClass::Exterior);
            }
        }
        for &id in g.layer_nodes() {
            let d = g.distance_data(id).unwrap().d;
            assert!((d - g.h_trunc()).abs() <= h * 3f64.sqrt());
        }
    }

    #[test]
    fn deep_truncation_is_rejected() {
        let err = MaskedGrid::build(&ball(), 33, 0.5, false).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let g = MaskedGrid::build(&ball(), 33, 0.2, false).unwrap();
        for &id in g.interior_nodes() {
            let x = g.position(id);
            assert!(x.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.8);
        }
    }

    #[test]
    fn shell_interior_avoids_both_collars() {
        let dom = DomainDescriptor::shell(vec![0.0; 3], 0.5, 1.0).unwrap();
        let g = MaskedGrid::build(&dom, 65, 0.05, true).unwrap();
        for &id in g.interior_nodes() {
            let r = g.position(id).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(r >= 0.55 && r <= 0.95, "r = {r}");
        }
    }
}
