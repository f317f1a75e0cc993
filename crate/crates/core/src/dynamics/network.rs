//! Augmented network used during transients: the transmission admittance
//! matrix plus constant-impedance loads, machine transient reactances and
//! fault shunts, factorised once per topology change.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{build_ybus, NetworkCase};

pub(crate) struct AugmentedNetwork {
    lu: Lu<usize, Complex64>,
    n: usize,
}

impl AugmentedNetwork {
    pub(crate) fn factor(case: &NetworkCase, shunts: &[Complex64], t: f64) -> Result<Self> {
        let y = build_ybus(case);
        let n = y.dim();
        let mut trip: Vec<Triplet<usize, usize, Complex64>> =
            y.triplets().into_iter().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        for (i, s) in shunts.iter().enumerate() {
            trip.push(Triplet::new(i, i, *s));
        }
        let m = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &trip)
            .map_err(|_| Error::SingularNetwork { t })?;
        let lu = m.sp_lu().map_err(|_| Error::SingularNetwork { t })?;
        Ok(AugmentedNetwork { lu, n })
    }

    pub(crate) fn solve(&self, injections: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let mut b = Mat::<Complex64>::from_fn(self.n, 1, |i, _| injections[i]);
        self.lu.solve_in_place(b.as_mut());
        let v: Vec<Complex64> = (0..self.n).map(|i| b[(i, 0)]).collect();
        if v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::SingularNetwork { t });
        }
        Ok(v)
    }
}
