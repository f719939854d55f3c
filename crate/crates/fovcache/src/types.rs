//! Domain types shared across the library: the tile grid, network topology,
//! per-slot demand and caching matrices, and the per-slot metrics record.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equirectangular tile partition of a 360° frame plus the viewport size.
///
/// Tiles are indexed row-major: tile `f = row * n_cols + col`. Columns span
/// longitude `[-180°, 180°)`, rows span latitude `[-90°, 90°]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TileGrid {
    pub n_cols: usize,
    pub n_rows: usize,
    pub fov_width_deg: f64,
    pub fov_height_deg: f64,
}

impl TileGrid {
    pub fn new(n_cols: usize, n_rows: usize, fov_width_deg: f64, fov_height_deg: f64) -> Result<Self> {
        let grid = Self { n_cols, n_rows, fov_width_deg, fov_height_deg };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cols < 1 || self.n_rows < 1 {
            return Err(Error::InvalidConfig("tile grid must have at least one row and column".into()));
        }
        if !(self.fov_width_deg > 0.0 && self.fov_width_deg <= 360.0) {
            return Err(Error::InvalidConfig(format!("fov width {} outside (0, 360]", self.fov_width_deg)));
        }
        if !(self.fov_height_deg > 0.0 && self.fov_height_deg <= 180.0) {
            return Err(Error::InvalidConfig(format!("fov height {} outside (0, 180]", self.fov_height_deg)));
        }
        Ok(())
    }

    /// Total number of tiles.
    pub fn n_tiles(&self) -> usize {
        self.n_cols * self.n_rows
    }

    /// Width of one tile column in degrees.
    pub fn tile_width_deg(&self) -> f64 {
        360.0 / self.n_cols as f64
    }

    /// Height of one tile row in degrees.
    pub fn tile_height_deg(&self) -> f64 {
        180.0 / self.n_rows as f64
    }

    /// Area of one tile on the equirectangular plane, in square degrees.
    pub fn tile_area(&self) -> f64 {
        self.tile_width_deg() * self.tile_height_deg()
    }

    /// Viewport area in square degrees.
    pub fn fov_area(&self) -> f64 {
        self.fov_width_deg * self.fov_height_deg
    }

    /// Tile-to-viewport size ratio.
    pub fn tile_size_ratio(&self) -> f64 {
        self.tile_area() / self.fov_area()
    }
}

/// User-to-base-station association, possibly changing per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Association {
    /// One BS index per user, fixed for the whole run.
    Static(Vec<usize>),
    /// A schedule of association maps; slot `t` uses entry `t % len`.
    Schedule(Vec<Vec<usize>>),
}

impl Association {
    /// Round-robin static association of `n_users` over `n_bs` stations.
    pub fn round_robin(n_users: usize, n_bs: usize) -> Self {
        Association::Static((0..n_users).map(|u| u % n_bs).collect())
    }

    pub fn map_at(&self, slot: usize) -> &[usize] {
        match self {
            Association::Static(m) => m,
            Association::Schedule(ms) => &ms[slot % ms.len()],
        }
    }

    pub fn bs_of(&self, user: usize, slot: usize) -> usize {
        self.map_at(slot)[user]
    }
}

/// Network of base stations serving a shared user population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub n_bs: usize,
    pub n_users: usize,
    /// Neighbor sets per BS; irreflexive and symmetric.
    pub neighbors: Vec<Vec<usize>>,
    pub association: Association,
    /// Cache budget per BS, in content units.
    pub cache_capacity: Vec<f64>,
}

impl Topology {
    /// Fully-connected topology with round-robin user association and a
    /// uniform cache budget.
    pub fn complete(n_bs: usize, n_users: usize, cache_capacity: f64) -> Result<Self> {
        let neighbors = (0..n_bs)
            .map(|b| (0..n_bs).filter(|&o| o != b).collect())
            .collect();
        let topo = Self {
            n_bs,
            n_users,
            neighbors,
            association: Association::round_robin(n_users, n_bs),
            cache_capacity: vec![cache_capacity; n_bs],
        };
        topo.validate()?;
        Ok(topo)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 || self.n_users == 0 {
            return Err(Error::InvalidConfig("topology needs at least one BS and one user".into()));
        }
        if self.neighbors.len() != self.n_bs {
            return Err(Error::InvalidConfig("neighbor list length != n_bs".into()));
        }
        if self.cache_capacity.len() != self.n_bs {
            return Err(Error::InvalidConfig("cache capacity length != n_bs".into()));
        }
        for (b, ns) in self.neighbors.iter().enumerate() {
            for &n in ns {
                if n == b {
                    return Err(Error::InvalidConfig(format!("BS {b} lists itself as neighbor")));
                }
                if n >= self.n_bs {
                    return Err(Error::InvalidConfig(format!("BS {b} lists unknown neighbor {n}")));
                }
                if !self.neighbors[n].contains(&b) {
                    return Err(Error::InvalidConfig(format!("neighbor relation not symmetric: {b} -> {n}")));
                }
            }
        }
        for &c in &self.cache_capacity {
            if c < 1.0 {
                return Err(Error::InvalidConfig(format!("cache capacity {c} < 1")));
            }
        }
        let check_map = |m: &[usize]| -> Result<()> {
            if m.len() != self.n_users {
                return Err(Error::InvalidConfig("association map length != n_users".into()));
            }
            for &b in m {
                if b >= self.n_bs {
                    return Err(Error::InvalidConfig(format!("association targets unknown BS {b}")));
                }
            }
            Ok(())
        };
        match &self.association {
            Association::Static(m) => check_map(m)?,
            Association::Schedule(ms) => {
                if ms.is_empty() {
                    return Err(Error::InvalidConfig("empty association schedule".into()));
                }
                for m in ms {
                    check_map(m)?;
                }
            }
        }
        Ok(())
    }

    /// Users associated with BS `b` at `slot`.
    pub fn users_of(&self, b: usize, slot: usize) -> Vec<usize> {
        self.association
            .map_at(slot)
            .iter()
            .enumerate()
            .filter(|(_, &bs)| bs == b)
            .map(|(u, _)| u)
            .collect()
    }

    /// Neighborhood of BS `b` with `b` itself first; the aggregation order
    /// used by weight tensors.
    pub fn members_of(&self, b: usize) -> Vec<usize> {
        let mut m = vec![b];
        m.extend(self.neighbors[b].iter().copied());
        m
    }
}

/// Per-BS, per-slot demand intensities, one row per user, one column per tile.
/// Rows of users not associated with `bs` are all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandMatrix {
    pub values: Array2<f64>,
    pub slot: usize,
    pub bs: usize,
}

impl DemandMatrix {
    pub fn new(values: Array2<f64>, slot: usize, bs: usize) -> Self {
        Self { values, slot, bs }
    }

    pub fn n_users(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_tiles(&self) -> usize {
        self.values.ncols()
    }

    /// Total demand over all users and tiles.
    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    pub fn validate(&self, topology: &Topology) -> Result<()> {
        if self.values.nrows() != topology.n_users {
            return Err(Error::DimensionMismatch(format!(
                "demand rows {} != users {}",
                self.values.nrows(),
                topology.n_users
            )));
        }
        let assoc = topology.association.map_at(self.slot);
        for (u, row) in self.values.rows().into_iter().enumerate() {
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!("demand {v} outside [0,1]")));
                }
                if assoc[u] != self.bs && v != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "user {u} not associated with BS {} but has demand",
                        self.bs
                    )));
                }
            }
        }
        Ok(())
    }

    /// Masks a global demand matrix down to the rows associated with `bs`.
    pub fn restrict(global: &Array2<f64>, topology: &Topology, bs: usize, slot: usize) -> Self {
        let mut values = global.clone();
        let assoc = topology.association.map_at(slot);
        for (u, mut row) in values.rows_mut().into_iter().enumerate() {
            if assoc[u] != bs {
                row.fill(0.0);
            }
        }
        Self { values, slot, bs }
    }
}

/// Cache-allocation intensities in `[0,1]` per (user, tile), subject to the
/// BS budget `sum <= C_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CachingStrategy {
    pub values: Array2<f64>,
    pub slot: usize,
    pub bs: usize,
}

impl CachingStrategy {
    pub fn new(values: Array2<f64>, slot: usize, bs: usize) -> Self {
        Self { values, slot, bs }
    }

    pub fn zeros(n_users: usize, n_tiles: usize, slot: usize, bs: usize) -> Self {
        Self::new(Array2::zeros((n_users, n_tiles)), slot, bs)
    }

    pub fn validate(&self, budget: f64, tol: f64) -> Result<()> {
        for &v in self.values.iter() {
            if !(-tol..=1.0 + tol).contains(&v) {
                return Err(Error::InvalidArgument(format!("strategy entry {v} outside [0,1]")));
            }
        }
        let total = self.values.sum();
        if total > budget + tol {
            return Err(Error::InvalidArgument(format!("strategy mass {total} exceeds budget {budget}")));
        }
        Ok(())
    }
}

/// Per-slot diagnostics recorded for one BS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub slot: usize,
    pub bs: usize,
    pub cache_hit: f64,
    pub avg_delay: f64,
    pub regret: f64,
    pub pac_error: f64,
    pub loss: f64,
    pub grad_bits_sent: u64,
    /// Set when the delay constraint had an empty intersection this slot.
    pub infeasible: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn grid_counts_and_ratio() {
        let g = TileGrid::new(6, 4, 100.0, 100.0).unwrap();
        assert_eq!(g.n_tiles(), 24);
        assert!((g.tile_width_deg() - 60.0).abs() < 1e-12);
        assert!((g.tile_height_deg() - 45.0).abs() < 1e-12);
        assert!((g.tile_size_ratio() - 0.27).abs() < 1e-12);
        let g2 = TileGrid::new(8, 6, 100.0, 100.0).unwrap();
        assert!((g2.tile_size_ratio() - 0.135).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_dimensions() {
        assert!(TileGrid::new(0, 4, 100.0, 100.0).is_err());
        assert!(TileGrid::new(6, 4, 0.0, 100.0).is_err());
        assert!(TileGrid::new(6, 4, 100.0, 200.0).is_err());
    }

    #[test]
    fn topology_complete_is_symmetric() {
        let t = Topology::complete(3, 8, 10.0).unwrap();
        assert_eq!(t.neighbors[0], vec![1, 2]);
        assert_eq!(t.users_of(0, 0), vec![0, 3, 6]);
        assert_eq!(t.users_of(2, 0), vec![2, 5]);
        assert_eq!(t.members_of(1), vec![1, 0, 2]);
    }

    #[test]
    fn topology_rejects_asymmetric_neighbors() {
        let mut t = Topology::complete(3, 6, 10.0).unwrap();
        t.neighbors[0] = vec![1];
        assert!(t.validate().is_err());
    }

    #[test]
    fn demand_restrict_masks_foreign_rows() {
        let topo = Topology::complete(2, 4, 10.0).unwrap();
        let global = array![[0.5, 0.1], [0.2, 0.3], [0.4, 0.0], [0.9, 0.9]];
        let d0 = DemandMatrix::restrict(&global, &topo, 0, 0);
        assert_eq!(d0.values[[0, 0]], 0.5);
        assert_eq!(d0.values[[1, 0]], 0.0);
        assert_eq!(d0.values[[2, 0]], 0.4);
        d0.validate(&topo).unwrap();
        let d1 = DemandMatrix::restrict(&global, &topo, 1, 0);
        assert_eq!(d1.values[[1, 1]], 0.3);
        assert_eq!(d1.values[[0, 1]], 0.0);
    }

    #[test]
    fn strategy_budget_check() {
        let s = CachingStrategy::new(array![[0.5, 0.6], [0.7, 0.2]], 0, 0);
        assert!(s.validate(2.0, 1e-9).is_ok());
        assert!(s.validate(1.5, 1e-9).is_err());
    }
}
