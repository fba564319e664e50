use nalgebra::{DMatrix, DVector};

use crate::geometry::{ChartPoint, Christoffels, FoliatedModel};

/// Euclidean `ℝ^q × ℝ^p` (or the flat torus when `periodic`), with leaves the
/// second factor: coordinates `(n_1..n_q, l_1..l_p)` and `E = span{∂_{l_i}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductModel {
    q: usize,
    p: usize,
    periodic: bool,
}

impl ProductModel {
    /// # Panics
    ///
    /// If either factor has dimension zero.
    pub fn new(q: usize, p: usize) -> Self {
        assert!(q >= 1 && p >= 1, "both factors need positive dimension");
        Self {
            q,
            p,
            periodic: false,
        }
    }

    pub fn periodic(mut self, periodic: bool) -> Self {
        self.periodic = periodic;
        self
    }

    pub fn transverse_dim(&self) -> usize {
        self.q
    }
}

impl Default for ProductModel {
    fn default() -> Self {
        Self::new(1, 1)
    }
}

impl FoliatedModel for ProductModel {
    fn id(&self) -> String {
        format!("product(q={},p={})", self.q, self.p)
    }

    fn dim(&self) -> usize {
        self.q + self.p
    }

    fn leaf_dim(&self) -> usize {
        self.p
    }

    fn metric(&self, _x: &ChartPoint) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }

    fn e_frame(&self, _x: &ChartPoint) -> Vec<DVector<f64>> {
        let n = self.dim();
        (0..self.p)
            .map(|i| DVector::from_fn(n, |k, _| if k == self.q + i { 1.0 } else { 0.0 }))
            .collect()
    }

    fn analytic_christoffels(&self, _x: &ChartPoint) -> Option<Christoffels> {
        Some(Christoffels::zeros(self.dim()))
    }

    fn periodic_mask(&self) -> Vec<bool> {
        vec![self.periodic; self.dim()]
    }

    fn leaf_flow(&self, x: &ChartPoint, t: f64) -> Option<ChartPoint> {
        (self.p == 1).then(|| x.offset(&self.e_frame(x)[0], t))
    }

    fn is_flat_chart(&self) -> bool {
        true
    }
}
