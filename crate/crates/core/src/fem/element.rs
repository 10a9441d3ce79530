/// Polynomial degree of a Lagrange element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1,
    P2,
}

impl ElementKind {
    pub fn num_nodes(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
        }
    }
}

/// Lagrange element on the reference triangle `(0,0), (1,0), (0,1)`.
///
/// P2 nodes are the three vertices followed by the midpoints of the edges
/// `v0v1`, `v1v2`, `v2v0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceElement {
    kind: ElementKind,
}

const P2_NODES: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [0.5, 0.0],
    [0.5, 0.5],
    [0.0, 0.5],
];

impl ReferenceElement {
    pub fn new(kind: ElementKind) -> Self {
        ReferenceElement { kind }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.kind.num_nodes()
    }

    pub fn nodes(&self) -> &'static [[f64; 2]] {
        &P2_NODES[..self.num_nodes()]
    }

    /// Basis values and reference gradients at `p`.
    pub fn eval(&self, p: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
        let [xi, eta] = p;
        let l0 = 1.0 - xi - eta;
        let (l1, l2) = (xi, eta);
        // gradients of the barycentric coordinates
        let g0 = [-1.0, -1.0];
        let g1 = [1.0, 0.0];
        let g2 = [0.0, 1.0];
        match self.kind {
            ElementKind::P1 => (vec![l0, l1, l2], vec![g0, g1, g2]),
            ElementKind::P2 => {
                let vertex = |l: f64, g: [f64; 2]| (l * (2.0 * l - 1.0), scale(g, 4.0 * l - 1.0));
                let edge = |la: f64, ga: [f64; 2], lb: f64, gb: [f64; 2]| {
                    (
                        4.0 * la * lb,
                        [4.0 * (ga[0] * lb + la * gb[0]), 4.0 * (ga[1] * lb + la * gb[1])],
                    )
                };
                let parts = [
                    vertex(l0, g0),
                    vertex(l1, g1),
                    vertex(l2, g2),
                    edge(l0, g0, l1, g1),
                    edge(l1, g1, l2, g2),
                    edge(l2, g2, l0, g0),
                ];
                (
                    parts.iter().map(|p| p.0).collect(),
                    parts.iter().map(|p| p.1).collect(),
                )
            }
        }
    }

    /// Evaluates the basis at every point of a rule.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> Tabulation {
        let mut values = Vec::with_capacity(points.len());
        let mut grads = Vec::with_capacity(points.len());
        for &p in points {
            let (v, g) = self.eval(p);
            values.push(v);
            grads.push(g);
        }
        Tabulation { values, grads }
    }
}

fn scale(g: [f64; 2], s: f64) -> [f64; 2] {
    [g[0] * s, g[1] * s]
}

/// Basis values and reference gradients at a fixed set of points,
/// indexed `[point][basis]`.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

/// Affine map from the reference triangle onto a mesh triangle.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    origin: [f64; 2],
    jac: [[f64; 2]; 2],
    det: f64,
    inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(coords: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = coords;
        let jac = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // J^{-T}
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        AffineMap { origin: p0, jac, det, inv_t }
    }

    /// Jacobian determinant, twice the triangle area for positive orientation.
    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn map(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.origin[0] + self.jac[0][0] * p[0] + self.jac[0][1] * p[1],
            self.origin[1] + self.jac[1][0] * p[0] + self.jac[1][1] * p[1],
        ]
    }

    /// Pulls a reference gradient back to physical coordinates: `J^{-T} ĝ`.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}
