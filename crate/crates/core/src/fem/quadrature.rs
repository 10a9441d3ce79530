use crate::error::{MhdError, Result};

/// Symmetric quadrature rule on the reference triangle. Weights include the
/// reference area, so they sum to 1/2.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub degree: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

pub const MAX_DEGREE: usize = 6;

impl QuadratureRule {
    /// Cheapest tabulated rule exact for polynomials of at least `min_degree`.
    pub fn with_degree(min_degree: usize) -> Result<Self> {
        let mut rule = QuadratureRule {
            degree: 0,
            points: Vec::new(),
            weights: Vec::new(),
        };
        match min_degree {
            0 | 1 => {
                rule.degree = 1;
                rule.push_orbit(1.0, 1.0 / 3.0, 1.0 / 3.0);
            }
            2 => {
                rule.degree = 2;
                rule.push_orbit(1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0);
            }
            3 | 4 => {
                rule.degree = 4;
                rule.push_orbit(0.223381589678011, 0.445948490915965, 0.445948490915965);
                rule.push_orbit(0.109951743655322, 0.091576213509771, 0.091576213509771);
            }
            5 => {
                rule.degree = 5;
                rule.push_orbit(0.225, 1.0 / 3.0, 1.0 / 3.0);
                rule.push_orbit(0.132394152788506, 0.470142064105115, 0.470142064105115);
                rule.push_orbit(0.125939180544827, 0.101286507323456, 0.101286507323456);
            }
            6 => {
                rule.degree = 6;
                rule.push_orbit(0.116786275726379, 0.249286745170910, 0.249286745170910);
                rule.push_orbit(0.050844906370207, 0.063089014491502, 0.063089014491502);
                rule.push_orbit(0.082851075618374, 0.053145049844817, 0.310352451033784);
            }
            d => return Err(MhdError::UnsupportedQuadrature(d, MAX_DEGREE)),
        }
        // Tabulated weights are relative to unit area; renormalize so that
        // constants integrate exactly despite 15-digit coefficients.
        let total: f64 = rule.weights.iter().sum();
        for w in &mut rule.weights {
            *w *= 0.5 / total;
        }
        Ok(rule)
    }

    /// Adds all distinct permutations of the barycentric point `(a, b, 1-a-b)`.
    fn push_orbit(&mut self, weight: f64, a: f64, b: f64) {
        let c = 1.0 - a - b;
        let mut perms: Vec<[f64; 2]> = Vec::with_capacity(6);
        for [x, y] in [[a, b], [b, c], [c, a], [b, a], [a, c], [c, b]] {
            if !perms.iter().any(|p| (p[0] - x).abs() < 1e-14 && (p[1] - y).abs() < 1e-14) {
                perms.push([x, y]);
            }
        }
        for p in perms {
            self.points.push(p);
            self.weights.push(weight);
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[0], p[1]))
            .sum()
    }
}
