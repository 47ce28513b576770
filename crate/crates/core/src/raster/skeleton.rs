//! Zhang–Suen thinning.
//!
//! Candidates of each sub-iteration are collected in parallel, as in the
//! classic formulation, and then deleted one at a time after re-checking the
//! deletion rule against the partially thinned image. A pixel with exactly
//! one 0→1 transition around its ring and 2..=6 foreground neighbors is a
//! simple point, so sequential deletion never splits or removes a component
//! (the parallel form erases 2x2 blocks).

use super::BinaryMask;

pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut img = mask.clone();
    let (w, h) = (img.width(), img.height());
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut candidates = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if img.get(x, y) && deletable(&img, x, y, pass) {
                        candidates.push((x, y));
                    }
                }
            }
            for (x, y) in candidates {
                if deletable(&img, x, y, pass) {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}

fn deletable(img: &BinaryMask, x: usize, y: usize, pass: usize) -> bool {
    let (x, y) = (x as i64, y as i64);
    // P2..P9 clockwise starting north.
    let p = [
        img.get_signed(x, y - 1),
        img.get_signed(x + 1, y - 1),
        img.get_signed(x + 1, y),
        img.get_signed(x + 1, y + 1),
        img.get_signed(x, y + 1),
        img.get_signed(x - 1, y + 1),
        img.get_signed(x - 1, y),
        img.get_signed(x - 1, y - 1),
    ];
    let b = p.iter().filter(|v| **v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    if a != 1 {
        return false;
    }
    let (n, e, s, wv) = (p[0], p[2], p[4], p[6]);
    if pass == 0 {
        !(n && e && s) && !(e && s && wv)
    } else {
        !(n && e && wv) && !(n && s && wv)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{connected_components, Connectivity};
    use super::*;

    fn count8(m: &BinaryMask) -> usize {
        connected_components(m, Connectivity::Eight).count
    }

    #[test]
    fn thin_line_unchanged() {
        let m = BinaryMask::from_fn(12, 5, |x, y| y == 2 && (1..11).contains(&x));
        assert_eq!(skeletonize(&m), m);
        let d = BinaryMask::from_fn(8, 8, |x, y| x == y);
        assert_eq!(skeletonize(&d), d);
    }

    #[test]
    fn filled_square_stays_connected() {
        let m = BinaryMask::from_fn(13, 13, |x, y| (2..11).contains(&x) && (2..11).contains(&y));
        let s = skeletonize(&m);
        assert!(s.count() > 0 && s.count() < m.count());
        assert_eq!(count8(&s), 1);
        assert!(s.bits().iter().zip(m.bits()).all(|(a, b)| !*a || *b));
    }

    #[test]
    fn two_by_two_block_survives() {
        let m = BinaryMask::from_fn(4, 4, |x, y| (1..3).contains(&x) && (1..3).contains(&y));
        let s = skeletonize(&m);
        assert_eq!(count8(&s), 1);
        assert_eq!(skeletonize(&s), s);
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::empty(6, 6);
        assert_eq!(skeletonize(&m), m);
    }
}
