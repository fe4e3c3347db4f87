use serde::Serialize;

use super::{Affine, Volume};

/// Anatomical direction a voxel axis increases towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisCode {
    R,
    L,
    A,
    P,
    S,
    I,
}

fn dominant(col: [f64; 3]) -> usize {
    let mut best = 0;
    for w in 1..3 {
        if col[w].abs() > col[best].abs() {
            best = w;
        }
    }
    best
}

/// Orientation code per voxel axis, taken from the world axis with the
/// largest absolute direction cosine.
pub fn axis_codes(affine: &Affine) -> [AxisCode; 3] {
    [0, 1, 2].map(|c| {
        let col = affine.column(c);
        let w = dominant(col);
        let positive = col[w] >= 0.0;
        match (w, positive) {
            (0, true) => AxisCode::R,
            (0, false) => AxisCode::L,
            (1, true) => AxisCode::A,
            (1, false) => AxisCode::P,
            (_, true) => AxisCode::S,
            (_, false) => AxisCode::I,
        }
    })
}

/// Permutes and flips voxel axes so that voxel axis `w` runs along world
/// axis `w` in the positive direction. The voxel-to-world mapping of every
/// voxel is preserved.
///
/// If the affine is singular or two voxel axes share a dominant world axis,
/// the input is returned unchanged with a warning attached and it stays
/// non-canonical.
pub fn canonical_orient(v: Volume) -> Volume {
    let affine = *v.affine();
    if affine.determinant().abs() < 1e-12 {
        return v.with_warning("degenerate affine: determinant is zero".into());
    }

    // source voxel axis for each world axis
    let mut source = [usize::MAX; 3];
    let mut flip = [false; 3];
    for a in 0..3 {
        let col = affine.column(a);
        let w = dominant(col);
        if source[w] != usize::MAX {
            return v.with_warning(format!(
                "degenerate affine: voxel axes {} and {a} both map to world axis {w}",
                source[w]
            ));
        }
        source[w] = a;
        flip[w] = col[w] < 0.0;
    }

    let old = v.dims3();
    let new_dims = [0, 1, 2].map(|w| old[source[w]]);
    let nt = v.time_points();

    let mut m = Affine::identity();
    let mut translation = [affine.0[0][3], affine.0[1][3], affine.0[2][3]];
    for w in 0..3 {
        let a = source[w];
        let col = affine.column(a);
        let sign = if flip[w] { -1.0 } else { 1.0 };
        for r in 0..3 {
            m.0[r][w] = sign * col[r];
        }
        if flip[w] {
            let extent = (old[a] - 1) as f64;
            for r in 0..3 {
                translation[r] += col[r] * extent;
            }
        }
    }
    for r in 0..3 {
        m.0[r][3] = translation[r];
    }

    let identity = (0..3).all(|w| source[w] == w && !flip[w]);
    if identity {
        return v.mark_canonical();
    }

    let mut data = Vec::with_capacity(v.data().len());
    let mut src = [0usize; 3];
    for t in 0..nt {
        for k in 0..new_dims[2] {
            for j in 0..new_dims[1] {
                for i in 0..new_dims[0] {
                    let n = [i, j, k];
                    for w in 0..3 {
                        let a = source[w];
                        src[a] = if flip[w] { old[a] - 1 - n[w] } else { n[w] };
                    }
                    data.push(v.get(src[0], src[1], src[2], t));
                }
            }
        }
    }
    let mut shape = new_dims.to_vec();
    if v.shape().len() == 4 {
        shape.push(nt);
    }
    v.rebuild(shape, data, m).mark_canonical()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_unchanged() {
        let v = Volume::from_fn(&[3, 4, 5], Affine::identity(), |i, j, k, _| {
            (100 * i + 10 * j + k) as f64
        });
        let c = canonical_orient(v.clone());
        assert!(c.is_canonical());
        assert_eq!(c.data(), v.data());
        assert_eq!(c.affine(), v.affine());
        assert_eq!(c.orientation(), [AxisCode::R, AxisCode::A, AxisCode::S]);
    }

    #[test]
    fn degenerate_affine_is_flagged() {
        let mut a = Affine::identity();
        a.0[0][1] = 1.0;
        a.0[1][1] = 0.0;
        let v = Volume::from_fn(&[2, 2, 2], a, |_, _, _, _| 0.0);
        let c = canonical_orient(v);
        assert!(!c.is_canonical());
        assert_eq!(c.warnings().len(), 1);
    }

    #[test]
    fn lps_codes() {
        let mut a = Affine::identity();
        a.0[0][0] = -1.0;
        a.0[1][1] = -1.0;
        assert_eq!(axis_codes(&a), [AxisCode::L, AxisCode::P, AxisCode::S]);
    }
}
