//! Linear time-invariant model `dw/dt = A w + B_c u_c + B_g u_d`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::statespace::{FomModel, StateLayout};

#[derive(Clone, Debug)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub bc: DMatrix<f64>,
    pub bg: DMatrix<f64>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, bc: DMatrix<f64>, bg: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        for (what, got) in [("A columns", a.ncols()), ("B_c rows", bc.nrows()), ("B_g rows", bg.nrows())] {
            if got != n {
                return Err(Error::Dimension { what, expected: n, got });
            }
        }
        Ok(Self { a, bc, bg })
    }

    fn eval<T>(&self, w: &[T], uc: &[T], ud: &[T], out: &mut [T], lift: impl Fn(f64) -> T)
    where
        T: Copy + std::ops::Mul<Output = T> + std::ops::AddAssign + Default,
    {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = T::default();
            for (j, x) in w.iter().enumerate() {
                acc += lift(self.a[(i, j)]) * *x;
            }
            for (j, x) in uc.iter().enumerate() {
                acc += lift(self.bc[(i, j)]) * *x;
            }
            for (j, x) in ud.iter().enumerate() {
                acc += lift(self.bg[(i, j)]) * *x;
            }
            *o = acc;
        }
    }
}

impl FomModel for LinearModel {
    fn name(&self) -> &str {
        "linear"
    }

    fn layout(&self) -> StateLayout {
        StateLayout {
            n_f: 0,
            n_s: self.a.nrows(),
            n_r: 0,
            n_c: self.bc.ncols(),
            n_d: self.bg.ncols(),
        }
    }

    fn residual_real(&self, w: &[f64], uc: &[f64], ud: &[f64], out: &mut [f64]) {
        self.eval(w, uc, ud, out, |x| x)
    }

    fn residual_complex(&self, w: &[Complex64], uc: &[Complex64], ud: &[Complex64], out: &mut [Complex64]) {
        self.eval(w, uc, ud, out, |x| Complex64::new(x, 0.0))
    }

    fn output_names(&self) -> Vec<String> {
        (0..self.a.nrows()).map(|i| format!("w{i}")).collect()
    }

    fn outputs(&self, w: &[f64], _uc: &[f64], _ud: &[f64]) -> Vec<f64> {
        w.to_vec()
    }

    fn describe(&self) -> String {
        format!("linear\nA={:?}\nBc={:?}\nBg={:?}", self.a.as_slice(), self.bc.as_slice(), self.bg.as_slice())
    }

    fn input_matrices(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((self.bc.clone(), self.bg.clone()))
    }
}
