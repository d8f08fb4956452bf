use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Edge/vertex incidence `B`: `B[e, v]` counts endpoints of edge class `e`
/// at vertex class `v`, so loops contribute 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl IncidenceMatrix {
    pub(crate) fn from_endpoints(endpoints: &[[usize; 2]], cols: usize) -> Self {
        let rows = endpoints.len();
        let mut entries = vec![0u8; rows * cols];
        for (e, ends) in endpoints.iter().enumerate() {
            for &v in ends {
                entries[e * cols + v] += 1;
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, e: usize, v: usize) -> u8 {
        self.entries[e * self.cols + v]
    }

    pub fn row(&self, e: usize) -> &[u8] {
        &self.entries[e * self.cols..(e + 1) * self.cols]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |e, v| f64::from(self.get(e, v)))
    }

    /// `B w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|e| {
                self.row(e)
                    .iter()
                    .zip(w)
                    .map(|(&b, &x)| f64::from(b) * x)
                    .sum()
            })
            .collect()
    }
}

/// Relative singular-value cutoff for the rank of `B`.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Orthogonal splitting `R^E = col(B) ⊕ col(B)^⊥`.
///
/// `col(B)` is the orbit direction of the vertex action; its complement is
/// the quotient on which all iterates are normalised.
#[derive(Debug, Clone)]
pub struct Gauge {
    rank: usize,
    range_projector: DMatrix<f64>,
    quotient_basis: DMatrix<f64>,
}

impl Gauge {
    pub fn new(b: &IncidenceMatrix) -> Self {
        let m = b.rows();
        let bm = b.to_dmatrix();
        let svd = bm.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cutoff = RANK_TOLERANCE * sigma_max;
        let kept: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > cutoff)
            .collect();
        let rank = kept.len();
        let range_basis = u.select_columns(&kept);
        let range_projector = &range_basis * range_basis.transpose();

        let complement = DMatrix::identity(m, m) - &range_projector;
        let eig = SymmetricEigen::new(complement);
        let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        let quotient_basis = eig.eigenvectors.select_columns(&keep);

        Self {
            rank,
            range_projector,
            quotient_basis,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Dimension of the quotient `R^E / col(B)`.
    pub fn quotient_dim(&self) -> usize {
        self.quotient_basis.ncols()
    }

    /// Orthogonal projector onto `col(B)`.
    pub fn range_projector(&self) -> &DMatrix<f64> {
        &self.range_projector
    }

    /// Orthonormal basis of `col(B)^⊥`, one column per direction.
    pub fn quotient_basis(&self) -> &DMatrix<f64> {
        &self.quotient_basis
    }

    /// Component of `l` orthogonal to `col(B)`.
    pub fn project_quotient(&self, l: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(l);
        let p = &v - &self.range_projector * &v;
        p.iter().copied().collect()
    }

    /// Component of `l` inside `col(B)`.
    pub fn project_range(&self, l: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(l);
        (&self.range_projector * v).iter().copied().collect()
    }
}
