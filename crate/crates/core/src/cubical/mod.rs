//! Closed cubical complexes of voxel sets: cell counts, Euler characteristic,
//! connected components and Betti numbers.
//!
//! Solids use three-dimensional cells. Single-layer grids can instead be read
//! as planar regions ([`Embedding::Planar`]) whose complex lives in the z = 0
//! plane, giving χ = n₀ − n₁ + n₂.

pub(crate) mod cells;
mod label;

pub use label::{label_components, Connectivity, Labeling};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;
use cells::{vertex_mask, VertexTables, PLANAR, SOLID};

/// How a grid is read as a cell complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    Solid,
    /// Single-layer grid read as a region of the plane.
    Planar,
}

impl Embedding {
    pub(crate) fn tables(self) -> &'static VertexTables {
        match self {
            Embedding::Solid => &SOLID,
            Embedding::Planar => &PLANAR,
        }
    }

    pub(crate) fn check(self, g: &VoxelGrid) -> Result<()> {
        if self == Embedding::Planar && g.dims()[2] != 1 {
            return Err(Error::InvalidGrid(format!(
                "planar analysis needs a single layer, got dims {:?}",
                g.dims()
            )));
        }
        Ok(())
    }

    /// Vertex lattice extents.
    pub(crate) fn vertex_dims(self, dims: [usize; 3]) -> [usize; 3] {
        match self {
            Embedding::Solid => dims.map(|d| d + 1),
            Embedding::Planar => [dims[0] + 1, dims[1] + 1, 1],
        }
    }
}

/// A cell: minimal lattice corner plus the axes it spans (bit `a` for axis `a`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub corner: [u32; 3],
    pub extent: u8,
}

impl Cell {
    pub fn dim(&self) -> usize {
        self.extent.count_ones() as usize
    }
}

/// Cell counts `[n₀, n₁, n₂, n₃]` of a closed complex, optionally with the
/// explicit sorted cell list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubicalComplex {
    pub counts: [usize; 4],
    #[serde(skip)]
    pub cells: Option<Vec<Cell>>,
}

impl CubicalComplex {
    pub fn empty() -> Self {
        CubicalComplex { counts: [0; 4], cells: Some(Vec::new()) }
    }

    pub fn from_counts(counts: [usize; 4]) -> Self {
        CubicalComplex { counts, cells: None }
    }

    /// Builds a complex from an arbitrary cell list.
    pub fn from_cells(mut cells: Vec<Cell>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        let mut counts = [0; 4];
        for c in &cells {
            counts[c.dim()] += 1;
        }
        CubicalComplex { counts, cells: Some(cells) }
    }

    /// χ = n₀ − n₁ + n₂ − n₃.
    pub fn euler(&self) -> i64 {
        let [a, b, c, d] = self.counts.map(|v| v as i64);
        a - b + c - d
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }
}

/// Cell counts of the closure of the occupied voxels.
pub fn complex_of(g: &VoxelGrid) -> CubicalComplex {
    complex_of_in(g, Embedding::Solid).expect("solid embedding accepts any grid")
}

pub fn complex_of_in(g: &VoxelGrid, embedding: Embedding) -> Result<CubicalComplex> {
    embedding.check(g)?;
    let t = embedding.tables();
    let vd = embedding.vertex_dims(g.dims());
    let counts = (0..vd[2])
        .into_par_iter()
        .map(|z| {
            let mut acc = [0usize; 4];
            for y in 0..vd[1] {
                for x in 0..vd[0] {
                    let m = vertex_mask(t.k, [x as i64, y as i64, z as i64], |p| g.get_signed(p));
                    for (a, c) in acc.iter_mut().zip(t.counts[m as usize]) {
                        *a += c as usize;
                    }
                }
            }
            acc
        })
        .reduce(|| [0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    Ok(CubicalComplex::from_counts(counts))
}

/// Closure complex with its explicit cell list.
pub fn complex_with_cells(g: &VoxelGrid, embedding: Embedding) -> Result<CubicalComplex> {
    embedding.check(g)?;
    let t = embedding.tables();
    let vd = embedding.vertex_dims(g.dims());
    let mut cells = Vec::new();
    for z in 0..vd[2] {
        for y in 0..vd[1] {
            for x in 0..vd[0] {
                let m = vertex_mask(t.k, [x as i64, y as i64, z as i64], |p| g.get_signed(p));
                for (e, &inc) in t.incident.iter().enumerate() {
                    if m & inc != 0 {
                        cells.push(Cell { corner: [x as u32, y as u32, z as u32], extent: e as u8 });
                    }
                }
            }
        }
    }
    Ok(CubicalComplex::from_cells(cells))
}

pub fn euler(c: &CubicalComplex) -> i64 {
    c.euler()
}

/// Euler characteristic of the closed voxel set.
pub fn euler_of(g: &VoxelGrid, embedding: Embedding) -> Result<i64> {
    Ok(complex_of_in(g, embedding)?.euler())
}

/// Cellwise intersection of two explicit complexes.
pub fn intersect_complexes(a: &CubicalComplex, b: &CubicalComplex) -> Result<CubicalComplex> {
    let (Some(ca), Some(cb)) = (&a.cells, &b.cells) else {
        return Err(Error::Internal("intersect_complexes needs explicit cell lists".into()));
    };
    let mut out = Vec::with_capacity(ca.len().min(cb.len()));
    let (mut i, mut j) = (0, 0);
    while i < ca.len() && j < cb.len() {
        match ca[i].cmp(&cb[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(ca[i]);
                i += 1;
                j += 1;
            }
        }
    }
    Ok(CubicalComplex::from_cells(out))
}

/// Euler characteristic and Betti numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub chi: i64,
    pub b0: usize,
    pub b1: usize,
    pub b2: usize,
}

/// Betti numbers of a solid: β₀ from vertex-26 components, β₂ from face-6
/// complement components that do not reach the frame boundary, and β₁ from
/// the Euler relation.
pub fn betti(g: &VoxelGrid) -> TopologySummary {
    betti_in(g, Embedding::Solid).expect("solid embedding accepts any grid")
}

pub fn betti_in(g: &VoxelGrid, embedding: Embedding) -> Result<TopologySummary> {
    let chi = euler_of(g, embedding)?;
    let b0 = label_components(g, Connectivity::Vertex26).count;
    let b2 = match embedding {
        Embedding::Solid => bounded_complement_components(g),
        Embedding::Planar => 0,
    };
    let b1 = b0 as i64 + b2 as i64 - chi;
    if b1 < 0 {
        return Err(Error::Internal(format!("negative β₁ from χ={chi}, β₀={b0}, β₂={b2}")));
    }
    Ok(TopologySummary { chi, b0, b1: b1 as usize, b2 })
}

fn bounded_complement_components(g: &VoxelGrid) -> usize {
    let comp = g.complement();
    let l = label_components(&comp, Connectivity::Face6);
    let f = g.frame();
    let [nx, ny, nz] = f.dims;
    let mut touches = vec![false; l.count + 1];
    for i in comp.occupied() {
        let [x, y, z] = f.coords(i);
        if x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz {
            touches[l.labels[i] as usize] = true;
        }
    }
    touches[1..].iter().filter(|&&t| !t).count()
}
