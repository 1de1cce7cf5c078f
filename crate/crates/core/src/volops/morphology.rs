use super::BinaryMask;

/// Offsets of the discrete Euclidean ball: dx² + dy² + dz² ≤ r².
pub fn ball_offsets(radius: usize) -> Vec<[i64; 3]> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy + dz * dz <= r * r {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

fn shifted(dims: [usize; 3], idx: usize, o: &[i64; 3]) -> Option<usize> {
    let [nx, ny, nz] = dims;
    let x = (idx % nx) as i64 + o[0];
    let y = ((idx / nx) % ny) as i64 + o[1];
    let z = (idx / (nx * ny)) as i64 + o[2];
    if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
        None
    } else {
        Some(x as usize + nx * (y as usize + ny * z as usize))
    }
}

/// Dilation by the radius-`radius` ball; voxels beyond the grid are dropped.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let offsets = ball_offsets(radius);
    let dims = mask.dims();
    let mut out = vec![false; mask.len()];
    for (idx, _) in mask.bits().iter().enumerate().filter(|(_, b)| **b) {
        for o in &offsets {
            if let Some(n) = shifted(dims, idx, o) {
                out[n] = true;
            }
        }
    }
    BinaryMask::new(dims, mask.voxel_size(), out).expect("same dims")
}

/// Erosion by the radius-`radius` ball; beyond the grid counts as background.
pub fn erode(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let offsets = ball_offsets(radius);
    let dims = mask.dims();
    let bits = mask.bits();
    let out = (0..mask.len())
        .map(|idx| {
            bits[idx]
                && offsets
                    .iter()
                    .all(|o| shifted(dims, idx, o).is_some_and(|n| bits[n]))
        })
        .collect();
    BinaryMask::new(dims, mask.voxel_size(), out).expect("same dims")
}

/// Closing (dilation then erosion) by the radius-`radius` ball.
///
/// Computed on a grid padded by `radius`, so the result equals the closing of
/// the mask embedded in an infinite background, cropped back to the grid.
pub fn morphological_close(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let padded = mask.padded(radius);
    erode(&dilate(&padded, radius), radius).cropped(radius)
}
