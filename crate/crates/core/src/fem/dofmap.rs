use std::sync::Arc;

use super::element::{ElementKind, ReferenceElement};
use crate::mesh::{Mesh, Sides};

/// Essential boundary condition carried by a vector space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    None,
    /// Both components vanish on ∂Ω (velocity).
    Dirichlet,
    /// The tangential component vanishes on ∂Ω (magnetic field, `H × n = 0`).
    Tangential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Continuous P1. As the pressure space the zero-mean condition is
    /// imposed by the solver, not by nodal constraints.
    ScalarP1,
    ScalarP2,
    VectorP2(Constraint),
}

impl SpaceKind {
    pub const PRESSURE: SpaceKind = SpaceKind::ScalarP1;
    pub const VELOCITY: SpaceKind = SpaceKind::VectorP2(Constraint::Dirichlet);
    pub const MAGNETIC: SpaceKind = SpaceKind::VectorP2(Constraint::Tangential);

    pub fn element(self) -> ElementKind {
        match self {
            SpaceKind::ScalarP1 => ElementKind::P1,
            _ => ElementKind::P2,
        }
    }

    pub fn components(self) -> usize {
        match self {
            SpaceKind::VectorP2(_) => 2,
            _ => 1,
        }
    }
}

/// Global numbering of a Lagrange space over a mesh.
///
/// Nodes are the mesh vertices followed (for P2) by the edge midpoints in
/// edge order. Vector components are interleaved: `dof = 2 * node + comp`.
#[derive(Clone, Debug)]
pub struct DofMap {
    mesh: Arc<Mesh>,
    kind: SpaceKind,
    node_coords: Vec<[f64; 2]>,
    node_sides: Vec<Sides>,
    /// Element-to-node table, `nodes_per_element` entries per triangle.
    element_nodes: Vec<usize>,
    constrained: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind) -> Self {
        let element = kind.element();
        let nv = mesh.num_vertices();
        let mut node_coords: Vec<[f64; 2]> = mesh.vertices().to_vec();
        let mut node_sides: Vec<Sides> = mesh.vertex_sides().to_vec();
        if element == ElementKind::P2 {
            for e in 0..mesh.num_edges() {
                node_coords.push(mesh.edge_midpoint(e));
                node_sides.push(mesh.edge_sides()[e]);
            }
        }

        let npe = element.num_nodes();
        let mut element_nodes = Vec::with_capacity(npe * mesh.num_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            element_nodes.extend_from_slice(tri);
            if element == ElementKind::P2 {
                element_nodes.extend(mesh.triangle_edges()[t].iter().map(|&e| nv + e));
            }
        }

        let ncomp = kind.components();
        let mut constrained = vec![false; node_coords.len() * ncomp];
        if let SpaceKind::VectorP2(c) = kind {
            for (node, sides) in node_sides.iter().enumerate() {
                let (cx, cy) = match c {
                    Constraint::None => (false, false),
                    Constraint::Dirichlet => (sides.is_boundary(), sides.is_boundary()),
                    // tangential component: x on horizontal sides, y on vertical ones
                    Constraint::Tangential => (sides.on_horizontal(), sides.on_vertical()),
                };
                constrained[2 * node] = cx;
                constrained[2 * node + 1] = cy;
            }
        }

        let mut free_index = vec![None; constrained.len()];
        let mut free_dofs = Vec::new();
        for (dof, &c) in constrained.iter().enumerate() {
            if !c {
                free_index[dof] = Some(free_dofs.len());
                free_dofs.push(dof);
            }
        }

        DofMap {
            mesh,
            kind,
            node_coords,
            node_sides,
            element_nodes,
            constrained,
            free_index,
            free_dofs,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn reference(&self) -> ReferenceElement {
        ReferenceElement::new(self.kind.element())
    }

    pub fn components(&self) -> usize {
        self.kind.components()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.constrained.len()
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn num_constrained(&self) -> usize {
        self.num_dofs() - self.num_free()
    }

    pub fn nodes_per_element(&self) -> usize {
        self.kind.element().num_nodes()
    }

    pub fn element_nodes(&self, t: usize) -> &[usize] {
        let npe = self.nodes_per_element();
        &self.element_nodes[t * npe..(t + 1) * npe]
    }

    /// Global DOF numbers of element `t`, ordered `(local node, component)`.
    pub fn element_dofs(&self, t: usize) -> Vec<usize> {
        let ncomp = self.components();
        self.element_nodes(t)
            .iter()
            .flat_map(|&n| (0..ncomp).map(move |c| n * ncomp + c))
            .collect()
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    pub fn node_sides(&self) -> &[Sides] {
        &self.node_sides
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Gathers the free entries of a full coefficient vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    /// Scatters free entries into a full vector with zero constrained values.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_dofs()];
        for (&d, &v) in self.free_dofs.iter().zip(free) {
            full[d] = v;
        }
        full
    }

    /// True when both maps number the same space on the same mesh.
    pub fn same_space(&self, other: &DofMap) -> bool {
        self.kind == other.kind && Arc::ptr_eq(&self.mesh, &other.mesh)
    }
}
