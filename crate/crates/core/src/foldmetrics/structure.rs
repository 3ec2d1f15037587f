use crate::scalar::Scalar;
use crate::tensor::Tensor;

use super::FoldError;

/// Alpha-carbon coordinates, one `[x, y, z]` per residue.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure<T> {
    coords: Vec<[T; 3]>,
}

impl<T: Scalar> Structure<T> {
    pub fn new(coords: Vec<[T; 3]>) -> Result<Self, FoldError> {
        if coords.is_empty() {
            return Err(FoldError::Empty);
        }
        if let Some(index) = coords
            .iter()
            .position(|p| p.iter().any(|x| !x.is_finite()))
        {
            return Err(FoldError::NonFinite { index });
        }
        Ok(Self { coords })
    }

    /// From a `3 x l` coordinate matrix.
    pub fn from_tensor(t: &Tensor<T>) -> Result<Self, FoldError> {
        if t.rows() != 3 {
            return Err(FoldError::BadShape {
                rows: t.rows(),
                cols: t.cols(),
            });
        }
        Self::new(
            (0..t.cols())
                .map(|c| [t.get(0, c), t.get(1, c), t.get(2, c)])
                .collect(),
        )
    }

    /// As a `3 x l` coordinate matrix.
    pub fn to_tensor(&self) -> Tensor<T> {
        Tensor::from_fn(3, self.len(), |r, c| self.coords[c][r])
    }

    pub fn coords(&self) -> &[[T; 3]] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn centroid(&self) -> [T; 3] {
        centroid_of(self.coords.iter())
    }

    /// Applies `p -> R p + t` to every residue.
    pub fn transformed(&self, rotation: &[[T; 3]; 3], translation: &[T; 3]) -> Self {
        Self {
            coords: self
                .coords
                .iter()
                .map(|p| apply(rotation, translation, p))
                .collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Structure<U> {
        Structure {
            coords: self
                .coords
                .iter()
                .map(|p| p.map(|x| U::lit(x.as_f64())))
                .collect(),
        }
    }
}

pub(crate) fn centroid_of<'a, T: Scalar>(points: impl Iterator<Item = &'a [T; 3]>) -> [T; 3] {
    let mut c = [T::zero(); 3];
    let mut n = 0usize;
    for p in points {
        for k in 0..3 {
            c[k] = c[k] + p[k];
        }
        n += 1;
    }
    let n = T::lit(n.max(1) as f64);
    c.map(|x| x / n)
}

pub(crate) fn apply<T: Scalar>(r: &[[T; 3]; 3], t: &[T; 3], p: &[T; 3]) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for i in 0..3 {
        out[i] = r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i];
    }
    out
}

pub(crate) fn dist2<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}
