use super::BitMask;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

/// Pixel count and inclusive bounding box of one component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComponentStats {
    pub pixels: usize,
    pub min_row: usize,
    pub max_row: usize,
    pub min_col: usize,
    pub max_col: usize,
}

/// Labels 1..=count, 0 for background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabels {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
    stats: Vec<ComponentStats>,
}

impl ComponentLabels {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn stats(&self, id: u32) -> Result<&ComponentStats> {
        if id == 0 || id > self.count {
            return Err(Error::UnknownComponent { id, count: self.count });
        }
        Ok(&self.stats[id as usize - 1])
    }

    /// Mask of a single component.
    pub fn component_mask(&self, id: u32) -> Result<BitMask> {
        self.stats(id)?;
        let bits = self.labels.iter().map(|&l| l == id).collect();
        BitMask::from_bits(self.width, self.height, bits)
    }
}

/// Labels connected set pixels. Components are numbered in the row-major
/// order of their first pixel.
pub fn connected_components(mask: &BitMask, connectivity: Connectivity) -> ComponentLabels {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut stats = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 0u32;

    let offsets: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
        Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
    };

    for start in 0..w * h {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        let mut st = ComponentStats {
            pixels: 0,
            min_row: start / w,
            max_row: start / w,
            min_col: start % w,
            max_col: start % w,
        };
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (r, c) = (idx / w, idx % w);
            st.pixels += 1;
            st.min_row = st.min_row.min(r);
            st.max_row = st.max_row.max(r);
            st.min_col = st.min_col.min(c);
            st.max_col = st.max_col.max(c);
            for &(dr, dc) in offsets {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let nidx = nr as usize * w + nc as usize;
                if mask.bits()[nidx] && labels[nidx] == 0 {
                    labels[nidx] = next;
                    stack.push(nidx);
                }
            }
        }
        stats.push(st);
    }

    ComponentLabels { width: w, height: h, labels, count: next, stats }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blocks() {
        let m = BitMask::from_ascii(&["##..##", "##..##", "......"]).unwrap();
        let l = connected_components(&m, Connectivity::Eight);
        assert_eq!(l.count(), 2);
        assert_eq!(l.get(0, 0), 1);
        assert_eq!(l.get(1, 5), 2);
        assert_eq!(l.stats(2).unwrap().pixels, 4);
    }

    #[test]
    fn empty_mask() {
        let m = BitMask::new(4, 4).unwrap();
        assert_eq!(connected_components(&m, Connectivity::Four).count(), 0);
    }

    #[test]
    fn diagonal_connectivity() {
        let m = BitMask::from_ascii(&["#.", ".#"]).unwrap();
        assert_eq!(connected_components(&m, Connectivity::Eight).count(), 1);
        assert_eq!(connected_components(&m, Connectivity::Four).count(), 2);
    }

    #[test]
    fn numbering_follows_first_pixel() {
        // The component touching row 0 later in the row still gets id 2.
        let m = BitMask::from_ascii(&["#..#", "#..#", "####", "...."]).unwrap();
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!(l.count(), 1);
        let m = BitMask::from_ascii(&["..#", "#..", "#.."]).unwrap();
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!((l.get(0, 2), l.get(1, 0)), (1, 2));
        assert!(matches!(l.stats(3), Err(Error::UnknownComponent { id: 3, count: 2 })));
    }
}
