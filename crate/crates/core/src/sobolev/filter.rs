use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse_core::CsrMatrix;

/// Taps `q_0..q_K` of a polynomial graph filter `Q(S) = Σ_k q_k S^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterCoefficients<T> {
    taps: Vec<T>,
}

impl<T: Scalar> FilterCoefficients<T> {
    pub fn new(taps: Vec<T>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidArgument("a filter needs at least q_0".into()));
        }
        if taps.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidArgument("filter taps must be finite".into()));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    /// Filter order `K`.
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }
}

/// `Σ_k q_k S^k x`, built from repeated shifts of `x`; `S^k` is never formed.
pub fn apply_polynomial_filter<T: Scalar>(
    s: &CsrMatrix<T>,
    q: &FilterCoefficients<T>,
    x: &[T],
) -> Result<Vec<T>> {
    if !s.is_square() || s.n_cols() != x.len() {
        return Err(Error::DimensionMismatch {
            op: "polynomial filter",
            left: s.shape(),
            right: (x.len(), 1),
        });
    }
    let taps = q.taps();
    let mut out: Vec<T> = x.iter().map(|&v| taps[0] * v).collect();
    let mut shifted = x.to_vec();
    for &qk in &taps[1..] {
        shifted = s.spmv(&shifted)?;
        for (o, &v) in out.iter_mut().zip(&shifted) {
            *o += qk * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::Graph;

    fn p2() -> CsrMatrix<f64> {
        Graph::from_edges(2, vec![(0, 1, 1.0)])
            .unwrap()
            .adjacency()
            .clone()
    }

    #[test]
    fn small_filters() {
        let s = p2();
        let x = [0.3, -2.0];
        let id = FilterCoefficients::new(vec![1.0]).unwrap();
        assert_eq!(apply_polynomial_filter(&s, &id, &x).unwrap(), x.to_vec());
        let shift = FilterCoefficients::new(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            apply_polynomial_filter(&s, &shift, &x).unwrap(),
            vec![-2.0, 0.3]
        );
        let both = FilterCoefficients::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(
            apply_polynomial_filter(&s, &both, &[1.0, 0.0]).unwrap(),
            vec![1.0, 1.0]
        );
    }

    #[test]
    fn matches_dense_polynomial() {
        let g =
            Graph::from_edges(4, vec![(0, 1, 0.5), (1, 2, 1.5), (2, 3, 0.2), (0, 3, 1.0)]).unwrap();
        let s = g.adjacency();
        let q = FilterCoefficients::new(vec![0.5, -1.0, 0.25, 2.0]).unwrap();
        let x = [1.0, 2.0, -1.0, 0.5];
        let got = apply_polynomial_filter(s, &q, &x).unwrap();
        let mut want = vec![0.0f64; 4];
        for (k, &qk) in q.taps().iter().enumerate() {
            let sk = s.matrix_power_dense(k.max(1) as u32).unwrap();
            let term = if k == 0 {
                x.to_vec()
            } else {
                sk.matvec(&x).unwrap()
            };
            for (w, t) in want.iter_mut().zip(term) {
                *w += qk * t;
            }
        }
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FilterCoefficients::<f64>::new(vec![]).is_err());
        assert!(FilterCoefficients::new(vec![f64::NAN]).is_err());
        let q = FilterCoefficients::new(vec![1.0]).unwrap();
        assert!(apply_polynomial_filter(&p2(), &q, &[1.0]).is_err());
    }
}
