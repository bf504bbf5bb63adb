//! Exact Euclidean distance transform (separable lower-envelope method).

use super::{BitMask, FloatMap};

/// For each set pixel, the Euclidean distance from its center to the
/// nearest unset pixel center; zero on unset pixels. Pixels beyond the grid
/// count as unset, so the result is always finite.
pub fn distance_transform(mask: &BitMask) -> FloatMap {
    let sq = squared_distance_transform(mask);
    let values = sq.into_iter().map(f64::sqrt).collect();
    FloatMap::from_values(mask.width(), mask.height(), values).expect("shape preserved")
}

pub(crate) fn squared_distance_transform(mask: &BitMask) -> Vec<f64> {
    // Pad by one unset pixel on every side.
    let (w, h) = (mask.width() + 2, mask.height() + 2);
    let inf = ((w * w + h * h) as f64) * 4.0;
    let mut grid = vec![0.0f64; w * h];
    for i in 0..mask.height() {
        for j in 0..mask.width() {
            if mask.get(i, j) {
                grid[(i + 1) * w + j + 1] = inf;
            }
        }
    }

    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];

    for j in 0..w {
        for i in 0..h {
            f[i] = grid[i * w + j];
        }
        lower_envelope(&f[..h], &mut d[..h], &mut v, &mut z);
        for i in 0..h {
            grid[i * w + j] = d[i];
        }
    }
    for i in 0..h {
        f[..w].copy_from_slice(&grid[i * w..(i + 1) * w]);
        lower_envelope(&f[..w], &mut d[..w], &mut v, &mut z);
        grid[i * w..(i + 1) * w].copy_from_slice(&d[..w]);
    }

    let mut out = Vec::with_capacity(mask.width() * mask.height());
    for i in 0..mask.height() {
        out.extend_from_slice(&grid[(i + 1) * w + 1..(i + 1) * w + 1 + mask.width()]);
    }
    out
}

/// 1-D squared distance transform of sampled function `f`:
/// `d[q] = min_p (q - p)^2 + f[p]`.
fn lower_envelope(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        loop {
            let p = v[k];
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= z[k] {
                // k > 0 here: z[0] is -inf.
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        *dq = (qf - p) * (qf - p) + f[v[k]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_unset_is_zero() {
        let m = BitMask::new(5, 4).unwrap();
        assert!(distance_transform(&m).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn isolated_pixel_is_one() {
        let m = BitMask::from_ascii(&["...", ".#.", "..."]).unwrap();
        let d = distance_transform(&m);
        assert_eq!(d.get(1, 1), 1.0);
        assert_eq!(d.get(0, 0), 0.0);
    }

    #[test]
    fn border_counts_as_background() {
        let m = BitMask::from_ascii(&["#####", "#####", "#####", "#####", "#####"]).unwrap();
        let d = distance_transform(&m);
        assert_eq!(d.get(2, 2), 3.0);
        assert_eq!(d.get(0, 0), 1.0);
    }

    #[test]
    fn diagonal_distance() {
        let m = BitMask::from_ascii(&["#######", "#######", "#######", "###.###", "#######", "#######", "#######"])
            .unwrap();
        let d = distance_transform(&m);
        assert!((d.get(2, 2) - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(d.get(3, 1), 2.0);
    }
}
