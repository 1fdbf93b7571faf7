//! JSON wire format for complex matrices.
//!
//! A matrix serializes as `{"dim": n, "re": [...], "im": [...]}` with
//! row-major flattening; rectangular matrices use `"rows"`/`"cols"` instead
//! of `"dim"`. Real and imaginary parts are separate flat arrays so files
//! stay diffable and language-neutral.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, CMat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    /// Encode a matrix (row-major; square matrices carry `dim`, rectangular
    /// ones `rows`/`cols`).
    pub fn from_cmat(m: &CMat) -> Self {
        let (r, c) = m.shape();
        let mut re = Vec::with_capacity(r * c);
        let mut im = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        if r == c {
            Self {
                dim: Some(r),
                rows: None,
                cols: None,
                re,
                im,
            }
        } else {
            Self {
                dim: None,
                rows: Some(r),
                cols: Some(c),
                re,
                im,
            }
        }
    }

    fn shape(&self) -> Result<(usize, usize)> {
        match (self.dim, self.rows, self.cols) {
            (Some(d), None, None) => Ok((d, d)),
            (None, Some(r), Some(c)) => Ok((r, c)),
            _ => Err(Error::Config(
                "matrix must carry either \"dim\" or both \"rows\" and \"cols\"".into(),
            )),
        }
    }

    /// Decode back into a matrix, validating the payload lengths.
    pub fn to_cmat(&self) -> Result<CMat> {
        let (r, c) = self.shape()?;
        let n = r * c;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Config(format!(
                "matrix payload has {} re / {} im entries but shape {}x{} needs {}",
                self.re.len(),
                self.im.len(),
                r,
                c,
                n
            )));
        }
        Ok(CMat::from_fn(r, c, |i, j| {
            let k = i * c + j;
            C64::new(self.re[k], self.im[k])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn row_major_order_is_pinned() {
        let m = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 2.), c(3., 0.), c(4., 0.)]);
        let j = MatrixJson::from_cmat(&m);
        assert_eq!(j.dim, Some(2));
        assert_eq!(j.re, vec![1., 0., 3., 4.]);
        assert_eq!(j.im, vec![0., 2., 0., 0.]);
    }

    #[test]
    fn round_trips_square_and_rectangular() {
        let sq = CMat::from_fn(3, 3, |i, j| c(i as f64, j as f64 * 0.5));
        assert_eq!(MatrixJson::from_cmat(&sq).to_cmat().unwrap(), sq);
        let rect = CMat::from_fn(2, 5, |i, j| c((i + j) as f64, -(j as f64)));
        let enc = MatrixJson::from_cmat(&rect);
        assert_eq!(enc.dim, None);
        assert_eq!(enc.rows, Some(2));
        assert_eq!(enc.to_cmat().unwrap(), rect);
    }

    #[test]
    fn json_text_round_trip() {
        let m = CMat::from_fn(2, 2, |i, j| c(0.1 + i as f64, 0.25 * j as f64));
        let text = serde_json::to_string(&MatrixJson::from_cmat(&m)).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_cmat().unwrap(), m);
    }

    #[test]
    fn rejects_inconsistent_payload() {
        let bad = MatrixJson {
            dim: Some(2),
            rows: None,
            cols: None,
            re: vec![1.0, 2.0, 3.0],
            im: vec![0.0; 4],
        };
        assert!(matches!(bad.to_cmat(), Err(Error::Config(_))));
        let no_shape = MatrixJson {
            dim: None,
            rows: Some(2),
            cols: None,
            re: vec![0.0; 4],
            im: vec![0.0; 4],
        };
        assert!(matches!(no_shape.to_cmat(), Err(Error::Config(_))));
    }
}
