//! Element-loop assembly of the bilinear and trilinear forms of the scheme.
//!
//! Every kernel emits its full local matrix, zeros included, so that the
//! sparsity pattern of an operator depends only on the DOF maps. Per-step
//! operators are then assembled straight into a cached pattern.

use std::sync::Arc;

use crate::fem::calculus::{cross_vv, dot};
use crate::fem::{
    AffineMap, DofMap, ElementKind, FieldVec, QuadratureRule, ReferenceElement, SpaceKind, Tabulation,
    ASSEMBLY_QUADRATURE_DEGREE,
};
use crate::linsolve::SparseMatrix;

/// Geometry and physical basis derivatives of one triangle at the
/// quadrature points.
pub struct ElementData<'a> {
    pub triangle: usize,
    /// Quadrature weight times Jacobian determinant.
    pub jw: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    p1: &'a Tabulation,
    p2: &'a Tabulation,
    p1_grads: Vec<[[f64; 2]; 3]>,
    p2_grads: Vec<[[f64; 2]; 6]>,
}

impl ElementData<'_> {
    pub fn num_points(&self) -> usize {
        self.jw.len()
    }

    pub fn value(&self, kind: ElementKind, q: usize, a: usize) -> f64 {
        match kind {
            ElementKind::P1 => self.p1.values[q][a],
            ElementKind::P2 => self.p2.values[q][a],
        }
    }

    pub fn grad(&self, kind: ElementKind, q: usize, a: usize) -> [f64; 2] {
        match kind {
            ElementKind::P1 => self.p1_grads[q][a],
            ElementKind::P2 => self.p2_grads[q][a],
        }
    }

    /// Value and gradient rows `[∇f_x, ∇f_y]` of a vector P2 field.
    pub fn eval_vector(&self, map: &DofMap, field: &FieldVec, q: usize) -> ([f64; 2], [[f64; 2]; 2]) {
        let v = field.values();
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for (a, &node) in map.element_nodes(self.triangle).iter().enumerate() {
            let phi = self.p2.values[q][a];
            let g = self.p2_grads[q][a];
            for c in 0..2 {
                let coef = v[2 * node + c];
                val[c] += coef * phi;
                grad[c][0] += coef * g[0];
                grad[c][1] += coef * g[1];
            }
        }
        (val, grad)
    }

    /// Value of a scalar field.
    pub fn eval_scalar(&self, map: &DofMap, field: &FieldVec, q: usize) -> f64 {
        let kind = map.kind().element();
        map.element_nodes(self.triangle)
            .iter()
            .enumerate()
            .map(|(a, &node)| field.values()[node] * self.value(kind, q, a))
            .sum()
    }
}

/// Reference tabulations shared by all element loops.
pub struct Integrator {
    rule: QuadratureRule,
    p1: Tabulation,
    p2: Tabulation,
}

impl Integrator {
    pub fn new(degree: usize) -> Self {
        let rule = QuadratureRule::with_degree(degree).expect("supported quadrature degree");
        let p1 = ReferenceElement::new(ElementKind::P1).tabulate(&rule.points);
        let p2 = ReferenceElement::new(ElementKind::P2).tabulate(&rule.points);
        Integrator { rule, p1, p2 }
    }

    pub fn element(&self, coords: [[f64; 2]; 3], triangle: usize) -> ElementData<'_> {
        let affine = AffineMap::new(coords);
        let nq = self.rule.len();
        let mut p1_grads = Vec::with_capacity(nq);
        let mut p2_grads = Vec::with_capacity(nq);
        for q in 0..nq {
            let mut g1 = [[0.0; 2]; 3];
            for (a, g) in g1.iter_mut().enumerate() {
                *g = affine.grad(self.p1.grads[q][a]);
            }
            let mut g2 = [[0.0; 2]; 6];
            for (a, g) in g2.iter_mut().enumerate() {
                *g = affine.grad(self.p2.grads[q][a]);
            }
            p1_grads.push(g1);
            p2_grads.push(g2);
        }
        ElementData {
            triangle,
            jw: self.rule.weights.iter().map(|w| w * affine.det()).collect(),
            points: self.rule.points.iter().map(|&p| affine.map(p)).collect(),
            p1: &self.p1,
            p2: &self.p2,
            p1_grads,
            p2_grads,
        }
    }
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::new(ASSEMBLY_QUADRATURE_DEGREE)
    }
}

/// Generic element loop. `kernel` fills the row-major local matrix
/// (`rows.element_dofs × cols.element_dofs`). With a `pattern`, entries are
/// added into a copy of it instead of going through a coordinate list.
pub fn assemble_matrix(
    rows: &DofMap,
    cols: &DofMap,
    pattern: Option<&SparseMatrix>,
    mut kernel: impl FnMut(&ElementData, &mut [f64]),
) -> SparseMatrix {
    assert!(Arc::ptr_eq(rows.mesh(), cols.mesh()), "spaces live on different meshes");
    let mesh = rows.mesh();
    let integrator = Integrator::default();
    let nr = rows.nodes_per_element() * rows.components();
    let nc = cols.nodes_per_element() * cols.components();
    let mut local = vec![0.0; nr * nc];

    let mut triplets = Vec::new();
    let mut target = pattern.map(|p| {
        assert_eq!((p.nrows(), p.ncols()), (rows.num_dofs(), cols.num_dofs()));
        p.zeroed()
    });
    if target.is_none() {
        triplets.reserve(mesh.num_triangles() * nr * nc);
    }
    for t in 0..mesh.num_triangles() {
        let el = integrator.element(mesh.triangle_coords(t), t);
        local.iter_mut().for_each(|v| *v = 0.0);
        kernel(&el, &mut local);
        let rd = rows.element_dofs(t);
        let cd = cols.element_dofs(t);
        for (i, &gi) in rd.iter().enumerate() {
            for (j, &gj) in cd.iter().enumerate() {
                let v = local[i * nc + j];
                match target.as_mut() {
                    Some(m) => m.add_at(gi, gj, v),
                    None => triplets.push((gi, gj, v)),
                }
            }
        }
    }
    target.unwrap_or_else(|| SparseMatrix::from_triplets(rows.num_dofs(), cols.num_dofs(), &triplets))
}

/// L² Gram matrix of a scalar or vector space.
pub fn assemble_mass(map: &DofMap) -> SparseMatrix {
    let kind = map.kind().element();
    let n = map.nodes_per_element();
    let nc = map.components();
    let width = n * nc;
    assemble_matrix(map, map, None, |el, local| {
        for q in 0..el.num_points() {
            for a in 0..n {
                let pa = el.value(kind, q, a);
                for b in 0..n {
                    let v = el.jw[q] * (pa * el.value(kind, q, b));
                    for c in 0..nc {
                        local[(a * nc + c) * width + b * nc + c] += v;
                    }
                }
            }
        }
    })
}

/// `ν ∫ ∇φ_i : ∇φ_j` on a vector P2 space.
pub fn assemble_gradgrad(map: &DofMap, nu: f64) -> SparseMatrix {
    assert_eq!(map.components(), 2);
    assemble_matrix(map, map, None, |el, local| {
        for q in 0..el.num_points() {
            for a in 0..6 {
                let ga = el.grad(ElementKind::P2, q, a);
                for b in 0..6 {
                    let v = nu * el.jw[q] * dot(ga, el.grad(ElementKind::P2, q, b));
                    local[(2 * a) * 12 + 2 * b] += v;
                    local[(2 * a + 1) * 12 + 2 * b + 1] += v;
                }
            }
        }
    })
}

/// Curl and divergence of the vector basis function `φ_a e_c`.
#[inline]
fn curl_div_of(grad: [f64; 2], c: usize) -> (f64, f64) {
    if c == 0 {
        (-grad[1], grad[0])
    } else {
        (grad[0], grad[1])
    }
}

/// `σ⁻¹ ∫ (∇×φ_i)(∇×φ_j) + (∇·φ_i)(∇·φ_j)` on a vector P2 space.
pub fn assemble_curl_div(map: &DofMap, sigma_inv: f64) -> SparseMatrix {
    assert_eq!(map.components(), 2);
    assemble_matrix(map, map, None, |el, local| {
        for q in 0..el.num_points() {
            let w = sigma_inv * el.jw[q];
            for i in 0..12 {
                let (ci, di) = curl_div_of(el.grad(ElementKind::P2, q, i / 2), i % 2);
                for j in 0..12 {
                    let (cj, dj) = curl_div_of(el.grad(ElementKind::P2, q, j / 2), j % 2);
                    local[i * 12 + j] += w * (ci * cj + di * dj);
                }
            }
        }
    })
}

/// `B[q, v] = ∫ (∇·φ_v) ψ_q`, pressure rows and velocity columns.
pub fn assemble_div(velocity: &DofMap, pressure: &DofMap) -> SparseMatrix {
    assert_eq!(velocity.components(), 2);
    assert_eq!(pressure.kind(), SpaceKind::ScalarP1);
    assemble_matrix(pressure, velocity, None, |el, local| {
        for q in 0..el.num_points() {
            for r in 0..3 {
                let psi = el.jw[q] * el.value(ElementKind::P1, q, r);
                for j in 0..12 {
                    let g = el.grad(ElementKind::P2, q, j / 2);
                    local[r * 12 + j] += psi * g[j % 2];
                }
            }
        }
    })
}

/// Skew convection matrix `N(a)[w, v] = ½ ∫ (a·∇φ_v)·φ_w − (a·∇φ_w)·φ_v`.
///
/// Each local entry is computed once and mirrored with the opposite sign,
/// so `N = −Nᵀ` holds bit for bit.
pub fn assemble_convection(map: &DofMap, advecting: &FieldVec, pattern: Option<&SparseMatrix>) -> SparseMatrix {
    assert_eq!(map.components(), 2);
    assert_eq!(advecting.len(), map.num_dofs());
    assemble_matrix(map, map, pattern, |el, local| {
        let mut scalar = [[0.0f64; 6]; 6];
        for q in 0..el.num_points() {
            let (a, _) = el.eval_vector(map, advecting, q);
            let mut adv = [0.0; 6];
            let mut phi = [0.0; 6];
            for b in 0..6 {
                adv[b] = dot(a, el.grad(ElementKind::P2, q, b));
                phi[b] = el.value(ElementKind::P2, q, b);
            }
            for i in 0..6 {
                for j in i + 1..6 {
                    scalar[i][j] += 0.5 * el.jw[q] * (adv[j] * phi[i] - adv[i] * phi[j]);
                }
            }
        }
        for i in 0..6 {
            for j in i + 1..6 {
                let v = scalar[i][j];
                for c in 0..2 {
                    local[(2 * i + c) * 12 + 2 * j + c] = v;
                    local[(2 * j + c) * 12 + 2 * i + c] = -v;
                }
            }
        }
    })
}

/// Coupling kernel `G(b)[a, i] = μ ∫ (φ^u_i × b)(∇×φ^H_a)`, magnetic rows
/// and velocity columns. The induction equation uses `−G`, the momentum
/// equation `+Gᵀ`.
pub fn assemble_coupling(
    magnetic: &DofMap,
    velocity: &DofMap,
    field: &FieldVec,
    mu: f64,
    pattern: Option<&SparseMatrix>,
) -> SparseMatrix {
    assert_eq!(field.len(), magnetic.num_dofs());
    assemble_matrix(magnetic, velocity, pattern, |el, local| {
        for q in 0..el.num_points() {
            let (b, _) = el.eval_vector(magnetic, field, q);
            let w = mu * el.jw[q];
            // e_x × b = b_y, e_y × b = −b_x
            let cross = [cross_vv([1.0, 0.0], b), cross_vv([0.0, 1.0], b)];
            for i in 0..12 {
                let (curl_h, _) = curl_div_of(el.grad(ElementKind::P2, q, i / 2), i % 2);
                for j in 0..12 {
                    let phi = el.value(ElementKind::P2, q, j / 2);
                    local[i * 12 + j] += w * curl_h * phi * cross[j % 2];
                }
            }
        }
    })
}

/// `∫ f · φ_i` on a vector space; constrained entries are left in place and
/// dropped at restriction.
pub fn assemble_load(map: &DofMap, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    assert_eq!(map.components(), 2);
    let mesh = map.mesh();
    let integrator = Integrator::default();
    let mut out = vec![0.0; map.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let el = integrator.element(mesh.triangle_coords(t), t);
        let nodes = map.element_nodes(t);
        for q in 0..el.num_points() {
            let [x, y] = el.points[q];
            let fv = f(x, y);
            for (a, &node) in nodes.iter().enumerate() {
                let w = el.jw[q] * el.value(ElementKind::P2, q, a);
                out[2 * node] += w * fv[0];
                out[2 * node + 1] += w * fv[1];
            }
        }
    }
    out
}

/// `∫ ψ_q` for every scalar basis function; `mᵀ p` is the integral of `p`.
pub fn assemble_mean_weights(map: &DofMap) -> Vec<f64> {
    assert_eq!(map.components(), 1);
    let mesh = map.mesh();
    let kind = map.kind().element();
    let integrator = Integrator::default();
    let mut out = vec![0.0; map.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let el = integrator.element(mesh.triangle_coords(t), t);
        for q in 0..el.num_points() {
            for (a, &node) in map.element_nodes(t).iter().enumerate() {
                out[node] += el.jw[q] * el.value(kind, q, a);
            }
        }
    }
    out
}

/// Physical coefficients of the scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysParams {
    pub mu: f64,
    pub sigma: f64,
    pub nu: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams { mu: 1.0, sigma: 1.0, nu: 1.0 }
    }
}

/// The time-independent operators of the scheme plus cached patterns for
/// the ones rebuilt every step. All matrices live on full DOF numberings.
#[derive(Debug)]
pub struct AssembledForms {
    pub velocity: Arc<DofMap>,
    pub magnetic: Arc<DofMap>,
    pub pressure: Arc<DofMap>,
    pub params: PhysParams,
    pub mass_u: SparseMatrix,
    pub mass_h: SparseMatrix,
    /// ν-weighted.
    pub grad: SparseMatrix,
    /// σ⁻¹-weighted curl–curl plus div–div.
    pub curl_div: SparseMatrix,
    pub div: SparseMatrix,
    /// `∫ ψ_q` over the pressure space.
    pub pressure_mean: Vec<f64>,
    convection_pattern: SparseMatrix,
    coupling_pattern: SparseMatrix,
}

impl AssembledForms {
    pub fn new(mesh: Arc<crate::mesh::Mesh>, params: PhysParams) -> Self {
        let velocity = Arc::new(DofMap::new(mesh.clone(), SpaceKind::VELOCITY));
        let magnetic = Arc::new(DofMap::new(mesh.clone(), SpaceKind::MAGNETIC));
        let pressure = Arc::new(DofMap::new(mesh, SpaceKind::PRESSURE));
        let zero_u = FieldVec::zeros(&velocity);
        let zero_h = FieldVec::zeros(&magnetic);
        AssembledForms {
            mass_u: assemble_mass(&velocity),
            mass_h: assemble_mass(&magnetic),
            grad: assemble_gradgrad(&velocity, params.nu),
            curl_div: assemble_curl_div(&magnetic, 1.0 / params.sigma),
            div: assemble_div(&velocity, &pressure),
            pressure_mean: assemble_mean_weights(&pressure),
            convection_pattern: assemble_convection(&velocity, &zero_u, None),
            coupling_pattern: assemble_coupling(&magnetic, &velocity, &zero_h, params.mu, None),
            velocity,
            magnetic,
            pressure,
            params,
        }
    }

    pub fn convection(&self, advecting: &FieldVec) -> SparseMatrix {
        assemble_convection(&self.velocity, advecting, Some(&self.convection_pattern))
    }

    pub fn coupling(&self, field: &FieldVec) -> SparseMatrix {
        assemble_coupling(
            &self.magnetic,
            &self.velocity,
            field,
            self.params.mu,
            Some(&self.coupling_pattern),
        )
    }
}
