//! Polynomial residuals with exact derivatives, used to check the
//! finite-difference interaction operators.

use num_complex::Complex64;
use rand::Rng;

use crate::scalar::Scalar;
use crate::statespace::{FomModel, StateLayout};

/// `coeff * prod_j w_j^powers[j]`, contributing to residual row `row`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub row: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval<T: Scalar>(&self, w: &[T]) -> T {
        let mut acc = T::from_real(self.coeff);
        for (x, &p) in w.iter().zip(&self.powers) {
            for _ in 0..p {
                acc *= *x;
            }
        }
        acc
    }

    /// Mixed partial derivative with respect to the listed state indices
    /// (repeats allowed), evaluated at `w`.
    pub fn partial(&self, wrt: &[usize], w: &[f64]) -> f64 {
        let mut powers = self.powers.clone();
        let mut c = self.coeff;
        for &j in wrt {
            if powers[j] == 0 {
                return 0.0;
            }
            c *= powers[j] as f64;
            powers[j] -= 1;
        }
        powers.iter().zip(w).fold(c, |acc, (&p, &x)| acc * x.powi(p as i32))
    }
}

/// `dw_i/dt = sum of monomials on row i` with no inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialModel {
    pub n: usize,
    pub terms: Vec<Monomial>,
}

impl PolynomialModel {
    pub fn new(n: usize, terms: Vec<Monomial>) -> Self {
        debug_assert!(terms.iter().all(|t| t.row < n && t.powers.len() == n));
        Self { n, terms }
    }

    /// Random system of total degree at most `max_degree`, with a stable
    /// diagonal linear part so the Jacobian at the origin is well conditioned.
    pub fn random<R: Rng>(rng: &mut R, n: usize, max_degree: u32, terms_per_row: usize) -> Self {
        let mut terms = Vec::new();
        for row in 0..n {
            let mut powers = vec![0; n];
            powers[row] = 1;
            terms.push(Monomial {
                row,
                coeff: -rng.random_range(0.5..3.0),
                powers,
            });
            for _ in 0..terms_per_row {
                let degree = rng.random_range(1..=max_degree);
                let mut powers = vec![0; n];
                for _ in 0..degree {
                    powers[rng.random_range(0..n)] += 1;
                }
                terms.push(Monomial {
                    row,
                    coeff: rng.random_range(-1.0..1.0),
                    powers,
                });
            }
        }
        Self { n, terms }
    }

    fn eval<T: Scalar>(&self, w: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for t in &self.terms {
            out[t.row] += t.eval(w);
        }
    }

    /// Exact `d^k R_row / dw_{wrt[0]} ... dw_{wrt[k-1]}` at `w`.
    pub fn partial(&self, row: usize, wrt: &[usize], w: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.row == row)
            .map(|t| t.partial(wrt, w))
            .sum()
    }
}

impl FomModel for PolynomialModel {
    fn name(&self) -> &str {
        "polynomial"
    }

    fn layout(&self) -> StateLayout {
        StateLayout {
            n_f: 0,
            n_s: self.n,
            n_r: 0,
            n_c: 0,
            n_d: 0,
        }
    }

    fn residual_real(&self, w: &[f64], _uc: &[f64], _ud: &[f64], out: &mut [f64]) {
        self.eval(w, out)
    }

    fn residual_complex(&self, w: &[Complex64], _uc: &[Complex64], _ud: &[Complex64], out: &mut [Complex64]) {
        self.eval(w, out)
    }

    fn output_names(&self) -> Vec<String> {
        (0..self.n).map(|i| format!("w{i}")).collect()
    }

    fn outputs(&self, w: &[f64], _uc: &[f64], _ud: &[f64]) -> Vec<f64> {
        w.to_vec()
    }

    fn describe(&self) -> String {
        let mut s = format!("polynomial n={}\n", self.n);
        for t in &self.terms {
            s.push_str(&format!("{} {:e} {:?}\n", t.row, t.coeff, t.powers));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partials_of_cube() {
        let m = Monomial {
            row: 0,
            coeff: 1.0,
            powers: vec![3],
        };
        assert_eq!(m.partial(&[0, 0, 0], &[0.7]), 6.0);
        assert!((m.partial(&[0, 0], &[0.5]) - 3.0).abs() < 1e-15);
        assert_eq!(m.partial(&[0, 0, 0, 0], &[0.5]), 0.0);
    }
}
