use std::collections::VecDeque;

use super::{BinaryMask, Result, VolOpsError};

/// Voxel adjacency: faces (6), faces+edges (18), faces+edges+corners (26).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Six,
    Eighteen,
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Option<Self> {
        match n {
            6 => Some(Connectivity::Six),
            18 => Some(Connectivity::Eighteen),
            26 => Some(Connectivity::TwentySix),
            _ => None,
        }
    }

    pub fn count(self) -> u32 {
        match self {
            Connectivity::Six => 6,
            Connectivity::Eighteen => 18,
            Connectivity::TwentySix => 26,
        }
    }

    pub fn offsets(self) -> Vec<[i64; 3]> {
        let max_nonzero = match self {
            Connectivity::Six => 1,
            Connectivity::Eighteen => 2,
            Connectivity::TwentySix => 3,
        };
        let mut out = Vec::new();
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let nz = (dx != 0) as u32 + (dy != 0) as u32 + (dz != 0) as u32;
                    if nz >= 1 && nz <= max_nonzero {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

/// Component labels, 0 for background and 1..=L ordered by decreasing size.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelField {
    pub dims: [usize; 3],
    pub labels: Vec<u32>,
    /// `component_sizes[l - 1]` is the voxel count of label `l`.
    pub component_sizes: Vec<usize>,
}

impl LabelField {
    pub fn label_count(&self) -> usize {
        self.component_sizes.len()
    }

    pub fn size_of(&self, label: u32) -> Option<usize> {
        label
            .checked_sub(1)
            .and_then(|l| self.component_sizes.get(l as usize).copied())
    }
}

/// Labels the connected foreground components of `mask`.
///
/// Labels are ordered by decreasing size; equal sizes are ordered by the
/// smallest flat index in the component.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelField {
    let [nx, ny, nz] = mask.dims();
    let offsets = connectivity.offsets();
    let bits = mask.bits();

    // Provisional labels in scan order, so provisional label order is the
    // order of each component's first voxel.
    let mut provisional = vec![0u32; bits.len()];
    let mut sizes: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..bits.len() {
        if !bits[start] || provisional[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        provisional[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(idx) = queue.pop_front() {
            size += 1;
            let i = (idx % nx) as i64;
            let j = ((idx / nx) % ny) as i64;
            let k = (idx / (nx * ny)) as i64;
            for o in &offsets {
                let (x, y, z) = (i + o[0], j + o[1], k + o[2]);
                if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
                    continue;
                }
                let n = x as usize + nx * (y as usize + ny * z as usize);
                if bits[n] && provisional[n] == 0 {
                    provisional[n] = label;
                    queue.push_back(n);
                }
            }
        }
        sizes.push(size);
    }

    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // Stable sort keeps first-voxel order among ties.
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));
    let mut remap = vec![0u32; sizes.len() + 1];
    for (rank, &old) in order.iter().enumerate() {
        remap[old + 1] = rank as u32 + 1;
    }
    let labels = provisional.iter().map(|&l| remap[l as usize]).collect();
    let component_sizes = order.iter().map(|&old| sizes[old]).collect();
    LabelField {
        dims: mask.dims(),
        labels,
        component_sizes,
    }
}

/// Keeps only the largest connected component.
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> Result<BinaryMask> {
    let field = connected_components(mask, connectivity);
    if field.label_count() == 0 {
        return Err(VolOpsError::EmptyMask);
    }
    let bits = field.labels.iter().map(|&l| l == 1).collect();
    BinaryMask::new(mask.dims(), mask.voxel_size(), bits)
}
