//! Seeded antithetic direction designs on S^{n-1}.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::QuadratureError;
use crate::special::sphere_area;

/// Largest dimension supported by the n-dimensional integrator.
pub const MAX_DIM: usize = 8;

/// Directions `y_1, -y_1, y_2, -y_2, ...` on the unit sphere.
///
/// For n = 1 the sphere is `{1, -1}` and the design is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDesign {
    n: usize,
    directions: Vec<Vec<f64>>,
}

impl SphereDesign {
    pub fn new(n: usize, nodes: usize, seed: u64) -> Result<Self, QuadratureError> {
        if n == 0 {
            return Err(QuadratureError::InvalidDimension(n));
        }
        if n > MAX_DIM {
            return Err(QuadratureError::InvalidSpec(format!("dimension {n} exceeds supported maximum {MAX_DIM}")));
        }
        if n == 1 {
            return Ok(SphereDesign { n, directions: vec![vec![1.0], vec![-1.0]] });
        }
        let pairs = (nodes / 2).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut directions = Vec::with_capacity(2 * pairs);
        while directions.len() < 2 * pairs {
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = y.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            let y: Vec<f64> = y.iter().map(|c| c / norm).collect();
            let anti: Vec<f64> = y.iter().map(|c| -c).collect();
            directions.push(y);
            directions.push(anti);
        }
        Ok(SphereDesign { n, directions })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn area(&self) -> f64 {
        sphere_area(self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antithetic_and_unit_length() {
        let d = SphereDesign::new(3, 64, 7).unwrap();
        assert_eq!(d.directions().len(), 64);
        for pair in d.directions().chunks(2) {
            let norm: f64 = pair[0].iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-14);
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                assert_eq!(*a, -*b);
            }
        }
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        assert_eq!(SphereDesign::new(4, 32, 11).unwrap(), SphereDesign::new(4, 32, 11).unwrap());
        assert_ne!(SphereDesign::new(4, 32, 11).unwrap(), SphereDesign::new(4, 32, 12).unwrap());
    }

    #[test]
    fn one_dimensional_sphere_is_exact() {
        let d = SphereDesign::new(1, 1000, 3).unwrap();
        assert_eq!(d.directions(), &[vec![1.0], vec![-1.0]]);
    }
}
