use std::collections::VecDeque;

use super::{BinaryMask, ImagingError};

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];
const NEIGHBORS_4: [(isize, isize); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// Flood from every seed over pixels whose membership equals `value`,
/// marking them in `visited`. Returns the visited pixel indices.
fn flood(
    mask: &BinaryMask,
    value: bool,
    seeds: impl IntoIterator<Item = usize>,
    neighbors: &[(isize, isize)],
    visited: &mut [bool],
) -> Vec<usize> {
    let (w, h) = mask.dims();
    let cells = mask.membership();
    let mut queue = VecDeque::new();
    let mut reached = Vec::new();
    for seed in seeds {
        if cells[seed] == value && !visited[seed] {
            visited[seed] = true;
            queue.push_back(seed);
        }
    }
    while let Some(i) = queue.pop_front() {
        reached.push(i);
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for &(dx, dy) in neighbors {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if cells[j] == value && !visited[j] {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    reached
}

/// Keep only the largest 8-connected foreground component.
///
/// Equal-sized components are resolved in favor of the one whose first pixel
/// comes first in row-major order.
pub fn largest_component(mask: &BinaryMask) -> Result<BinaryMask, ImagingError> {
    let (w, h) = mask.dims();
    let mut visited = vec![false; w * h];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..w * h {
        if !mask.membership()[start] || visited[start] {
            continue;
        }
        let component = flood(mask, true, [start], &NEIGHBORS_8, &mut visited);
        if component.len() > best.len() {
            best = component;
        }
    }
    if best.is_empty() {
        return Err(ImagingError::EmptyMask);
    }
    let mut membership = vec![false; w * h];
    for i in best {
        membership[i] = true;
    }
    BinaryMask::new(w, h, membership)
}

/// Fill background regions that are not 4-connected to the image border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let border = (0..w)
        .flat_map(|x| [x, (h - 1) * w + x])
        .chain((0..h).flat_map(|y| [y * w, y * w + w - 1]));
    let mut outside = vec![false; w * h];
    flood(mask, false, border, &NEIGHBORS_4, &mut outside);
    let membership = mask
        .membership()
        .iter()
        .zip(&outside)
        .map(|(&fg, &out)| fg || !out)
        .collect();
    BinaryMask::new(w, h, membership).expect("dimensions unchanged")
}
