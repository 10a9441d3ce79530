use super::dofmap::{DofMap, SpaceKind};
use crate::error::{MhdError, Result};

/// Coefficient vector of a discrete function. Constrained entries are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVec {
    kind: SpaceKind,
    values: Vec<f64>,
}

impl FieldVec {
    pub fn zeros(map: &DofMap) -> Self {
        FieldVec {
            kind: map.kind(),
            values: vec![0.0; map.num_dofs()],
        }
    }

    pub fn from_values(map: &DofMap, values: Vec<f64>) -> Result<Self> {
        if values.len() != map.num_dofs() {
            return Err(MhdError::Dimension(format!(
                "{} coefficients for a space with {} DOFs",
                values.len(),
                map.num_dofs()
            )));
        }
        Ok(FieldVec { kind: map.kind(), values })
    }

    /// Builds a field from its free entries; constrained entries are zero.
    pub fn from_free(map: &DofMap, free: &[f64]) -> Self {
        FieldVec {
            kind: map.kind(),
            values: map.extend(free),
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &FieldVec, b: f64) -> FieldVec {
        debug_assert_eq!(self.kind, other.kind);
        FieldVec {
            kind: self.kind,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Zeroes constrained entries and returns the largest value removed.
    pub fn clamp_constraints(&mut self, map: &DofMap) -> f64 {
        let mut delta = 0.0f64;
        for (dof, v) in self.values.iter_mut().enumerate() {
            if map.is_constrained(dof) {
                delta = delta.max(v.abs());
                *v = 0.0;
            }
        }
        delta
    }
}

/// Nodal interpolant of a scalar function; constrained DOFs are zeroed.
pub fn interpolate_scalar(map: &DofMap, f: impl Fn(f64, f64) -> f64) -> FieldVec {
    assert_eq!(map.components(), 1, "scalar interpolation into a vector space");
    let values = map.node_coords().iter().map(|&[x, y]| f(x, y)).collect();
    FieldVec { kind: map.kind(), values }
}

/// Nodal interpolant of a vector function; constrained DOFs are zeroed.
pub fn interpolate_vector(map: &DofMap, f: impl Fn(f64, f64) -> [f64; 2]) -> FieldVec {
    assert_eq!(map.components(), 2, "vector interpolation into a scalar space");
    let mut field = interpolate_vector_unclamped(map, f);
    field.clamp_constraints(map);
    field
}

pub(crate) fn interpolate_vector_unclamped(
    map: &DofMap,
    f: impl Fn(f64, f64) -> [f64; 2],
) -> FieldVec {
    let values = map
        .node_coords()
        .iter()
        .flat_map(|&[x, y]| f(x, y))
        .collect();
    FieldVec { kind: map.kind(), values }
}
