use crate::scalar::Scalar;

use super::structure::{apply, centroid_of, dist2};
use super::{FoldError, Structure};

/// Rigid transform `p -> rotation * p + translation` that maps a mobile
/// structure onto a reference, with the resulting RMSD.
#[derive(Debug, Clone, PartialEq)]
pub struct Superposition<T> {
    pub rotation: [[T; 3]; 3],
    pub translation: [T; 3],
    pub rmsd: T,
}

impl<T: Scalar> Superposition<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: [z; 3],
            rmsd: z,
        }
    }

    pub fn apply(&self, p: &[T; 3]) -> [T; 3] {
        apply(&self.rotation, &self.translation, p)
    }

    pub fn determinant(&self) -> T {
        let r = &self.rotation;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }
}

/// Least-squares superposition of `mobile` onto `reference` over all residues.
pub fn kabsch_superpose<T: Scalar>(
    reference: &Structure<T>,
    mobile: &Structure<T>,
) -> Result<Superposition<T>, FoldError> {
    check_lengths(reference, mobile)?;
    let all: Vec<usize> = (0..reference.len()).collect();
    Ok(fit_subset(reference, mobile, &all))
}

/// Fits on the residues in `subset` only; the RMSD is reported over all residues.
pub fn kabsch_superpose_subset<T: Scalar>(
    reference: &Structure<T>,
    mobile: &Structure<T>,
    subset: &[usize],
) -> Result<Superposition<T>, FoldError> {
    check_lengths(reference, mobile)?;
    Ok(fit_subset(reference, mobile, subset))
}

fn check_lengths<T: Scalar>(a: &Structure<T>, b: &Structure<T>) -> Result<(), FoldError> {
    if a.len() != b.len() {
        return Err(FoldError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

pub(crate) fn fit_subset<T: Scalar>(
    reference: &Structure<T>,
    mobile: &Structure<T>,
    subset: &[usize],
) -> Superposition<T> {
    let a = reference.coords();
    let b = mobile.coords();
    let ca = centroid_of(subset.iter().map(|&i| &a[i]));
    let cb = centroid_of(subset.iter().map(|&i| &b[i]));

    // Correlation s[j][k] = sum over residues of mobile_j * reference_k (centered).
    let mut s = [[T::zero(); 3]; 3];
    let mut spread_a = T::zero();
    let mut spread_b = T::zero();
    for &i in subset {
        let pa = [a[i][0] - ca[0], a[i][1] - ca[1], a[i][2] - ca[2]];
        let pb = [b[i][0] - cb[0], b[i][1] - cb[1], b[i][2] - cb[2]];
        for j in 0..3 {
            for k in 0..3 {
                s[j][k] = s[j][k] + pb[j] * pa[k];
            }
        }
        spread_a = spread_a + pa.iter().map(|&x| x * x).sum::<T>();
        spread_b = spread_b + pb.iter().map(|&x| x * x).sum::<T>();
    }

    let scale = T::one() + ca.iter().chain(cb.iter()).map(|x| x.abs()).fold(T::zero(), T::max);
    let tiny = T::epsilon() * T::lit(64.0) * scale * scale;
    let rotation = if spread_a <= tiny || spread_b <= tiny {
        Superposition::identity().rotation
    } else {
        rotation_from_correlation(&s)
    };

    let rc = apply(&rotation, &[T::zero(); 3], &cb);
    let translation = [ca[0] - rc[0], ca[1] - rc[1], ca[2] - rc[2]];
    let sum: T = a
        .iter()
        .zip(b)
        .map(|(pa, pb)| dist2(pa, &apply(&rotation, &translation, pb)))
        .sum();
    Superposition {
        rotation,
        translation,
        rmsd: (sum / T::lit(a.len() as f64)).sqrt(),
    }
}

/// Optimal proper rotation via the unit quaternion maximizing the alignment
/// (top eigenvector of the symmetric 4x4 key matrix).
fn rotation_from_correlation<T: Scalar>(s: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let (sxx, sxy, sxz) = (s[0][0], s[0][1], s[0][2]);
    let (syx, syy, syz) = (s[1][0], s[1][1], s[1][2]);
    let (szx, szy, szz) = (s[2][0], s[2][1], s[2][2]);
    let n = [
        [sxx + syy + szz, syz - szy, szx - sxz, sxy - syx],
        [syz - szy, sxx - syy - szz, sxy + syx, szx + sxz],
        [szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy],
        [sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz],
    ];
    let q = top_eigenvector(n);
    let norm = q.iter().map(|&x| x * x).sum::<T>().sqrt();
    let [w, x, y, z] = q.map(|v| v / norm);
    let two = T::lit(2.0);
    [
        [
            w * w + x * x - y * y - z * z,
            two * (x * y - w * z),
            two * (x * z + w * y),
        ],
        [
            two * (x * y + w * z),
            w * w - x * x + y * y - z * z,
            two * (y * z - w * x),
        ],
        [
            two * (x * z - w * y),
            two * (y * z + w * x),
            w * w - x * x - y * y + z * z,
        ],
    ]
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 4x4 matrix; returns the
/// eigenvector of the largest eigenvalue.
fn top_eigenvector<T: Scalar>(mut a: [[T; 4]; 4]) -> [T; 4] {
    let mut v = [[T::zero(); 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let frob: T = a.iter().flatten().map(|&x| x * x).sum::<T>().sqrt();
    for _sweep in 0..64 {
        let off: T = (0..4)
            .flat_map(|p| (0..4).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum::<T>()
            .sqrt();
        if off <= T::epsilon() * frob * T::lit(1e-2) || off == T::zero() {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let sn = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - sn * akq;
                    a[k][q] = sn * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - sn * aqk;
                    a[q][k] = sn * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - sn * vkq;
                    row[q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let best = (0..4)
        .max_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    [v[0][best], v[1][best], v[2][best], v[3][best]]
}
