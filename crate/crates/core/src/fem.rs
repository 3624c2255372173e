//! P1 Galerkin discretisation of `F(u) = -div(μ(|∇u|²)∇u) - g` with
//! homogeneous Dirichlet conditions.
//!
//! Gradients of P1 fields are constant per element, so the residual,
//! Jacobian, potential and stiffness terms are integrated exactly. Only the
//! load vector, which involves the smooth exact solution, needs quadrature.

use thiserror::Error;

use crate::linalg::{dot, SparseMatrix};
use crate::mesh::{ElementGeometry, Mesh, MeshError};
use crate::models::{DiffusionModel, ExactSolution, ManufacturedProblem, StructuralConstants};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("coefficient vector has length {actual}, expected {expected} interior DOFs")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Quadrature on a triangle in barycentric coordinates; weights sum to one
/// and are scaled by the element area at use.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadratureRule {
    /// Three edge midpoints, equal weights; exact for quadratics.
    pub fn edge_midpoint() -> Self {
        Self {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Seven-point rule exact for quintics.
    pub fn seven_point() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let b1 = (9.0 + 2.0 * s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let b2 = (9.0 - 2.0 * s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        Self {
            points: vec![
                [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
                [b1, a1, a1],
                [a1, b1, a1],
                [a1, a1, b1],
                [b2, a2, a2],
                [a2, b2, a2],
                [a2, a2, b2],
            ],
            weights: vec![9.0 / 40.0, w1, w1, w1, w2, w2, w2],
            degree: 5,
        }
    }

    /// Integral of `f` over the triangle with the given corners.
    pub fn integrate(&self, corners: [[f64; 2]; 3], area: f64, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (b, w) in self.points.iter().zip(&self.weights) {
            let [x, y] = barycentric_to_cartesian(corners, *b);
            acc += w * f(x, y);
        }
        area * acc
    }
}

fn barycentric_to_cartesian(corners: [[f64; 2]; 3], b: [f64; 3]) -> [f64; 2] {
    [
        b[0] * corners[0][0] + b[1] * corners[1][0] + b[2] * corners[2][0],
        b[0] * corners[0][1] + b[1] * corners[1][1] + b[2] * corners[2][1],
    ]
}

/// Load vector `⟨g, φᵢ⟩ = ∫ μ(|∇u⋆|²)∇u⋆·∇φᵢ` for a source manufactured
/// weakly from `exact`.
pub fn load_vector<E: ExactSolution>(
    mesh: &Mesh,
    model: &DiffusionModel,
    exact: &E,
    rule: &QuadratureRule,
) -> Result<Vec<f64>, FemError> {
    load_vector_with(mesh, model, rule, |_, [x, y]| exact.grad(x, y))
}

/// Load vector for an arbitrary gradient field `grad(element, point)`.
/// The element index lets callers supply fields that are only piecewise
/// smooth, such as gradients of other finite-element functions.
pub fn load_vector_with(
    mesh: &Mesh,
    model: &DiffusionModel,
    rule: &QuadratureRule,
    grad: impl Fn(usize, [f64; 2]) -> [f64; 2],
) -> Result<Vec<f64>, FemError> {
    let mut load = vec![0.0; mesh.n_interior()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let geom = mesh.element_geometry(t)?;
        let corners = mesh.corners(t);
        let mut flux = [0.0; 2];
        for (b, w) in rule.points.iter().zip(&rule.weights) {
            let p = barycentric_to_cartesian(corners, *b);
            let g = grad(t, p);
            let m = model.mu(g[0] * g[0] + g[1] * g[1]);
            flux[0] += w * m * g[0];
            flux[1] += w * m * g[1];
        }
        for (k, &v) in tri.iter().enumerate() {
            if let Some(i) = mesh.interior_index(v) {
                load[i] += geom.area * (flux[0] * geom.grads[k][0] + flux[1] * geom.grads[k][1]);
            }
        }
    }
    Ok(load)
}

/// Element data cached for assembly: geometry, DOF numbers of the corners,
/// and the CSR slots of the 3x3 local block.
#[derive(Debug, Clone)]
struct Element {
    geom: ElementGeometry,
    dofs: [Option<usize>; 3],
    slots: [[Option<usize>; 3]; 3],
}

/// A fully assembled discrete problem on a fixed mesh and model.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    mesh: Mesh,
    model: DiffusionModel,
    constants: StructuralConstants,
    load: Vec<f64>,
    elements: Vec<Element>,
    stiffness: SparseMatrix,
}

impl DiscreteProblem {
    pub fn new(mesh: Mesh, model: DiffusionModel, load: Vec<f64>) -> Result<Self, FemError> {
        if load.len() != mesh.n_interior() {
            return Err(FemError::DimensionMismatch {
                expected: mesh.n_interior(),
                actual: load.len(),
            });
        }
        let mut partial = Vec::with_capacity(mesh.n_triangles());
        let mut triplets = Vec::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let geom = mesh.element_geometry(t)?;
            let dofs = tri.map(|v| mesh.interior_index(v));
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (dofs[a], dofs[b]) {
                        let g = geom.area * dot(&geom.grads[a], &geom.grads[b]);
                        triplets.push((i, j, g));
                    }
                }
            }
            partial.push((geom, dofs));
        }
        let stiffness = SparseMatrix::from_triplets(mesh.n_interior(), &triplets)
            .expect("interior DOF indices are in range");
        let elements = partial
            .into_iter()
            .map(|(geom, dofs)| {
                let mut slots = [[None; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(i), Some(j)) = (dofs[a], dofs[b]) {
                            slots[a][b] = stiffness.slot(i, j);
                        }
                    }
                }
                Element { geom, dofs, slots }
            })
            .collect();
        Ok(Self {
            constants: model.constants(),
            mesh,
            model,
            load,
            elements,
            stiffness,
        })
    }

    /// Builds the problem whose source is manufactured from `problem.exact`.
    pub fn manufactured<E: ExactSolution>(
        mesh: Mesh,
        problem: &ManufacturedProblem<E>,
        rule: &QuadratureRule,
    ) -> Result<Self, FemError> {
        let load = load_vector(&mesh, &problem.model, &problem.exact, rule)?;
        Self::new(mesh, problem.model, load)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    pub fn constants(&self) -> &StructuralConstants {
        &self.constants
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_interior()
    }

    /// Unweighted stiffness matrix `Sᵢⱼ = ∫ ∇φⱼ·∇φᵢ`.
    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    fn check_len(&self, u: &[f64]) -> Result<(), FemError> {
        if u.len() != self.n_dofs() {
            return Err(FemError::DimensionMismatch {
                expected: self.n_dofs(),
                actual: u.len(),
            });
        }
        Ok(())
    }

    fn gradient(el: &Element, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (k, dof) in el.dofs.iter().enumerate() {
            if let Some(i) = dof {
                g[0] += u[*i] * el.geom.grads[k][0];
                g[1] += u[*i] * el.geom.grads[k][1];
            }
        }
        g
    }

    /// Constant gradient of the P1 field `u` on element `t`.
    pub fn element_gradient(&self, t: usize, u: &[f64]) -> Result<[f64; 2], FemError> {
        self.check_len(u)?;
        Ok(Self::gradient(&self.elements[t], u))
    }

    /// Coefficient vector of the functional `F(u)` tested against every
    /// interior hat function.
    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>, FemError> {
        self.check_len(u)?;
        let mut r = vec![0.0; self.n_dofs()];
        for el in &self.elements {
            let g = Self::gradient(el, u);
            let m = self.model.mu(g[0] * g[0] + g[1] * g[1]);
            for (k, dof) in el.dofs.iter().enumerate() {
                if let Some(i) = dof {
                    r[*i] += el.geom.area * m * dot(&g, &el.geom.grads[k]);
                }
            }
        }
        for (ri, li) in r.iter_mut().zip(&self.load) {
            *ri -= li;
        }
        Ok(r)
    }

    fn assemble(&self, u: &[f64], with_derivative: bool) -> SparseMatrix {
        let mut a = self.stiffness.clone();
        a.values_mut().iter_mut().for_each(|v| *v = 0.0);
        let values = a.values_mut();
        for el in &self.elements {
            let g = Self::gradient(el, u);
            let q = g[0] * g[0] + g[1] * g[1];
            let m = self.model.mu(q);
            let dm = if with_derivative { self.model.mu_prime(q) } else { 0.0 };
            let gu: [f64; 3] = std::array::from_fn(|k| dot(&g, &el.geom.grads[k]));
            for a_loc in 0..3 {
                for b_loc in 0..3 {
                    if let Some(slot) = el.slots[a_loc][b_loc] {
                        let lin = m * dot(&el.geom.grads[a_loc], &el.geom.grads[b_loc]);
                        values[slot] += el.geom.area * (lin + 2.0 * dm * gu[a_loc] * gu[b_loc]);
                    }
                }
            }
        }
        a
    }

    /// Gateaux derivative `F′(u)`:
    /// `Aᵢⱼ = Σ_T |T| [μ(q)∇φⱼ·∇φᵢ + 2μ′(q)(∇u·∇φⱼ)(∇u·∇φᵢ)]`, `q = |∇u|²`.
    pub fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, FemError> {
        self.check_len(u)?;
        Ok(self.assemble(u, true))
    }

    /// Frozen-coefficient matrix `Σ_T |T| μ(|∇u|²)∇φⱼ·∇φᵢ` used by the
    /// Kačanov iteration.
    pub fn frozen_matrix(&self, u: &[f64]) -> Result<SparseMatrix, FemError> {
        self.check_len(u)?;
        Ok(self.assemble(u, false))
    }

    /// `H(u) = ∫ ψ(|∇u|²) − ⟨g, u⟩`.
    pub fn potential(&self, u: &[f64]) -> Result<f64, FemError> {
        self.check_len(u)?;
        let mut h = 0.0;
        for el in &self.elements {
            let g = Self::gradient(el, u);
            h += el.geom.area * self.model.psi(g[0] * g[0] + g[1] * g[1]);
        }
        Ok(h - dot(&self.load, u))
    }

    /// `H(u + w) − H(u)`, accumulated element by element from
    /// `|∇(u+w)|² − |∇u|² = ∇w·(2∇u + ∇w)`. Unlike the difference of two
    /// [`potential`](Self::potential) calls, this stays accurate when `w` is
    /// tiny compared with `u`.
    pub fn potential_change(&self, u: &[f64], w: &[f64]) -> Result<f64, FemError> {
        self.check_len(u)?;
        self.check_len(w)?;
        let mut dh = 0.0;
        for el in &self.elements {
            let g = Self::gradient(el, u);
            let dg = Self::gradient(el, w);
            let q = g[0] * g[0] + g[1] * g[1];
            let dq = dg[0] * (2.0 * g[0] + dg[0]) + dg[1] * (2.0 * g[1] + dg[1]);
            dh += el.geom.area * self.model.psi_increment(q, dq);
        }
        Ok(dh - dot(&self.load, w))
    }

    /// `‖u‖_X = (∫ |∇u|²)^½`.
    pub fn energy_norm(&self, u: &[f64]) -> Result<f64, FemError> {
        self.check_len(u)?;
        let sq = self.stiffness.quadratic_form(u).expect("length checked");
        Ok(sq.max(0.0).sqrt())
    }

    /// `(u, v)_X = ∫ ∇u·∇v`.
    pub fn energy_inner(&self, u: &[f64], v: &[f64]) -> Result<f64, FemError> {
        self.check_len(u)?;
        self.check_len(v)?;
        Ok(self.stiffness.bilinear_form(u, v).expect("length checked"))
    }
}
