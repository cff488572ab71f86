//! Benchmark PDE problems: operators, data, collocation grids and reference
//! solutions.
//!
//! | name                   | equation                                | domain           |
//! |------------------------|-----------------------------------------|------------------|
//! | `heat`                 | `u_t − u_xx/4 = 0`                      | `(x,t) ∈ [0,1]²` |
//! | `laplace2d`            | `Δu = 0`                                | `[0,1]²`         |
//! | `laplace5d`            | `Δu = 0`                                | `[0,1]⁵`         |
//! | `burgers1d`            | `u_t + u u_x − (0.01/π) u_xx = 0`       | `[−1,1]×[0,1]`   |
//! | `nonlinear-poisson-k1` | `−Δu + u³ = f`                          | `[0,1]²`         |
//! | `allen-cahn`           | `u_t − 1e-4 u_xx + 5u³ − 5u = 0`        | `[−1,1]×[0,1]`   |
//!
//! Boundary rows hold Dirichlet data on the listed faces (and the `t = 0`
//! slice for evolution problems). Allen–Cahn replaces the spatial faces by
//! paired periodicity rows on the value and the slope.

pub mod allen_cahn;
pub mod burgers;
pub mod closed_form;
pub mod operators;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::JetModel;
use crate::error::{Error, Result};
pub use closed_form::ClosedForm;
pub use operators::PointOperator;

pub const PROBLEM_NAMES: [&str; 6] = [
    "heat",
    "laplace2d",
    "laplace5d",
    "burgers1d",
    "nonlinear-poisson-k1",
    "allen-cahn",
];

const BURGERS_FIXTURE: &str = include_str!("../../data/burgers1d_reference.csv");
const ALLEN_CAHN_FIXTURE: &str = include_str!("../../data/allen_cahn_reference.csv");

/// Collocation grid sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Interior points per axis.
    pub counts: Vec<usize>,
    /// Points per free axis on each boundary face.
    pub boundary: usize,
    /// Points per axis of the error-metric grid (closed-form problems);
    /// defaults to 50 up to two dimensions and 6 above.
    #[serde(default)]
    pub reference: Option<usize>,
}

/// Upper bound on the size of a generated error-metric grid.
pub const MAX_REFERENCE_POINTS: usize = 1_000_000;

fn default_reference(dim: usize) -> usize {
    if dim <= 2 {
        50
    } else {
        6
    }
}

impl GridSpec {
    pub fn uniform(dim: usize, interior: usize, boundary: usize) -> Self {
        Self {
            counts: vec![interior; dim],
            boundary,
            reference: None,
        }
    }

    /// Default grid of a named problem.
    pub fn default_for(name: &str) -> Result<Self> {
        let dim = problem_dim(name)?;
        Ok(if dim == 5 {
            Self {
                counts: vec![8; 5],
                boundary: 4,
                reference: None,
            }
        } else {
            Self::uniform(dim, 32, 32)
        })
    }

    pub fn reference_per_axis(&self) -> usize {
        self.reference.unwrap_or_else(|| default_reference(self.counts.len()))
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.counts.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "grid axis counts",
                expected: dim,
                actual: self.counts.len(),
            });
        }
        let reference = self.reference_per_axis();
        if self.counts.iter().any(|&c| c < 2) || self.boundary < 2 || reference < 2 {
            return Err(Error::InvalidParameter(
                "grid counts must be at least 2 per axis".into(),
            ));
        }
        if (reference as f64).powi(dim as i32) > MAX_REFERENCE_POINTS as f64 {
            return Err(Error::InvalidParameter(format!(
                "reference grid {reference}^{dim} exceeds {MAX_REFERENCE_POINTS} points"
            )));
        }
        Ok(())
    }
}

/// One residual row: `op[u](point) − op[u](partner) − target`, where the
/// partner term is present only for paired (periodic) constraints.
#[derive(Clone)]
pub struct CollocationRow {
    pub op: Arc<dyn PointOperator>,
    pub point: Vec<f64>,
    pub partner: Option<Vec<f64>>,
    pub target: f64,
}

impl fmt::Debug for CollocationRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CollocationRow")
            .field("op", &self.op.name())
            .field("point", &self.point)
            .field("partner", &self.partner)
            .field("target", &self.target)
            .finish()
    }
}

impl CollocationRow {
    pub fn new(op: Arc<dyn PointOperator>, point: Vec<f64>, target: f64) -> Self {
        Self {
            op,
            point,
            partner: None,
            target,
        }
    }

    pub fn paired(op: Arc<dyn PointOperator>, point: Vec<f64>, partner: Vec<f64>) -> Self {
        Self {
            op,
            point,
            partner: Some(partner),
            target: 0.0,
        }
    }

    /// Unscaled residual of this row for a model.
    pub fn residual(&self, model: &dyn JetModel, params: &[f64]) -> f64 {
        let mut value = self.op.apply(&model.jet(params, &self.point), &self.point);
        if let Some(partner) = &self.partner {
            value -= self.op.apply(&model.jet(params, partner), partner);
        }
        value - self.target
    }

    /// Unscaled residual and its parameter gradient (added into `grad`).
    pub fn linearize(&self, model: &dyn JetModel, params: &[f64], grad: &mut [f64]) -> f64 {
        let jet = model.jet(params, &self.point);
        let mut value = self.op.apply(&jet, &self.point);
        model.pullback(params, &self.point, &self.op.cotangent(&jet, &self.point), grad);
        if let Some(partner) = &self.partner {
            let jet = model.jet(params, partner);
            value -= self.op.apply(&jet, partner);
            let cot = self.op.cotangent(&jet, partner).scaled(-1.0);
            model.pullback(params, partner, &cot, grad);
        }
        value - self.target
    }
}

/// Dense evaluation grid with reference values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGrid {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ReferenceGrid {
    /// Parses a `coordinates…, value` CSV table with a header row.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut values = Vec::new();
        let mut width = None;
        for (line_no, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let fields = fields.map_err(|e| {
                Error::InvalidParameter(format!("reference table line {}: {e}", line_no + 1))
            })?;
            if fields.len() < 2 || width.is_some_and(|w| w != fields.len()) {
                return Err(Error::InvalidParameter(format!(
                    "reference table line {} has {} columns",
                    line_no + 1,
                    fields.len()
                )));
            }
            width = Some(fields.len());
            let (value, coords) = fields.split_last().unwrap();
            points.push(coords.to_vec());
            values.push(*value);
        }
        Ok(Self { points, values })
    }

    pub fn to_csv(&self, axis_names: &[&str]) -> String {
        let mut out = axis_names.join(",");
        out.push_str(",value\n");
        for (p, v) in self.points.iter().zip(&self.values) {
            for c in p {
                out.push_str(&format!("{c:.17e},"));
            }
            out.push_str(&format!("{v:.17e}\n"));
        }
        out
    }
}

/// A PDE posed on collocation points.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub name: String,
    pub input_dim: usize,
    pub domain: Vec<(f64, f64)>,
    pub interior_op: Arc<dyn PointOperator>,
    pub interior: Vec<CollocationRow>,
    pub boundary: Vec<CollocationRow>,
    pub exact: Option<ClosedForm>,
    pub reference: Option<ReferenceGrid>,
    /// Points per axis when sampling `exact` for error metrics.
    pub reference_points: usize,
}

impl PdeProblem {
    /// A problem with interior rows `D[u](x_i) = f_i` and arbitrary
    /// boundary rows.
    pub fn custom(
        name: &str,
        domain: Vec<(f64, f64)>,
        interior_op: Arc<dyn PointOperator>,
        interior: Vec<(Vec<f64>, f64)>,
        boundary: Vec<CollocationRow>,
    ) -> Self {
        let interior = interior
            .into_iter()
            .map(|(p, f)| CollocationRow::new(interior_op.clone(), p, f))
            .collect();
        let dim = domain.len();
        Self {
            name: name.to_string(),
            input_dim: dim,
            domain,
            interior_op,
            interior,
            boundary,
            exact: None,
            reference: None,
            reference_points: default_reference(dim),
        }
    }

    pub fn with_exact(mut self, exact: ClosedForm) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_reference(mut self, reference: ReferenceGrid) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    /// Total number of residual rows `S = S_D + S_B`.
    pub fn sample_count(&self) -> usize {
        self.interior.len() + self.boundary.len()
    }

    /// All rows with their block weight `1/√S_block`, interior first.
    pub fn weighted_rows(&self) -> impl Iterator<Item = (&CollocationRow, f64)> + '_ {
        let wi = block_weight(self.interior.len());
        let wb = block_weight(self.boundary.len());
        self.interior
            .iter()
            .map(move |r| (r, wi))
            .chain(self.boundary.iter().map(move |r| (r, wb)))
    }

    /// Highest derivative order over all rows.
    pub fn max_order(&self) -> usize {
        self.interior
            .iter()
            .chain(&self.boundary)
            .map(|r| r.op.order())
            .max()
            .unwrap_or(0)
    }

    /// Error-metric grid at the problem's own resolution.
    pub fn default_reference_grid(&self) -> Result<ReferenceGrid> {
        self.reference_grid(self.reference_points)
    }

    /// Evaluation grid for error metrics: the stored reference table, or
    /// the exact solution sampled on a uniform grid.
    pub fn reference_grid(&self, per_axis: usize) -> Result<ReferenceGrid> {
        if let Some(reference) = &self.reference {
            return Ok(reference.clone());
        }
        let exact = self
            .exact
            .ok_or_else(|| Error::MissingReference(self.name.clone()))?;
        let points = tensor_grid(&self.domain, &vec![per_axis.max(2); self.input_dim]);
        let values = points.iter().map(|p| exact.value(p)).collect();
        Ok(ReferenceGrid { points, values })
    }
}

fn block_weight(rows: usize) -> f64 {
    if rows == 0 {
        0.0
    } else {
        1.0 / (rows as f64).sqrt()
    }
}

fn problem_dim(name: &str) -> Result<usize> {
    match name {
        "heat" | "laplace2d" | "burgers1d" | "nonlinear-poisson-k1" | "allen-cahn" => Ok(2),
        "laplace5d" => Ok(5),
        _ => Err(Error::UnknownProblem {
            name: name.to_string(),
            valid: PROBLEM_NAMES.join(", "),
        }),
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Cartesian product of per-axis `linspace`s, last axis fastest.
pub fn tensor_grid(domain: &[(f64, f64)], counts: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .zip(counts)
        .map(|(&(lo, hi), &n)| linspace(lo, hi, n))
        .collect();
    let mut points = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    points
}

/// Points on the face `x_axis = value` of a box, `n` per free axis.
pub fn face_points(domain: &[(f64, f64)], axis: usize, value: f64, n: usize) -> Vec<Vec<f64>> {
    let free: Vec<(f64, f64)> = domain
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != axis)
        .map(|(_, &b)| b)
        .collect();
    tensor_grid(&free, &vec![n; free.len()])
        .into_iter()
        .map(|mut p| {
            p.insert(axis, value);
            p
        })
        .collect()
}

fn dirichlet_rows(points: Vec<Vec<f64>>, data: ClosedForm) -> Vec<CollocationRow> {
    let op: Arc<dyn PointOperator> = Arc::new(operators::Identity);
    points
        .into_iter()
        .map(|p| {
            let g = data.value(&p);
            CollocationRow::new(op.clone(), p, g)
        })
        .collect()
}

fn interior_rows(
    op: &Arc<dyn PointOperator>,
    domain: &[(f64, f64)],
    grid: &GridSpec,
    source: ClosedForm,
) -> Vec<CollocationRow> {
    tensor_grid(domain, &grid.counts)
        .into_iter()
        .map(|p| {
            let f = source.value(&p);
            CollocationRow::new(op.clone(), p, f)
        })
        .collect()
}

/// Builds a named benchmark problem on the given grid.
pub fn build_problem(name: &str, grid: &GridSpec) -> Result<PdeProblem> {
    let dim = problem_dim(name)?;
    grid.validate(dim)?;
    let nb = grid.boundary;

    let problem = match name {
        "heat" => {
            let domain = vec![(0.0, 1.0), (0.0, 1.0)];
            let exact = ClosedForm::HeatDecay { diffusivity: 0.25 };
            let op: Arc<dyn PointOperator> = Arc::new(operators::Heat { diffusivity: 0.25 });
            let mut boundary_pts = face_points(&domain, 0, 0.0, nb);
            boundary_pts.extend(face_points(&domain, 0, 1.0, nb));
            boundary_pts.extend(face_points(&domain, 1, 0.0, nb));
            PdeProblem {
                interior: interior_rows(&op, &domain, grid, ClosedForm::Zero),
                boundary: dirichlet_rows(boundary_pts, exact),
                interior_op: op,
                name: name.into(),
                input_dim: 2,
                domain,
                exact: Some(exact),
                reference: None,
                reference_points: grid.reference_per_axis(),
            }
        }
        "laplace2d" | "laplace5d" | "nonlinear-poisson-k1" => {
            let domain = vec![(0.0, 1.0); dim];
            let (op, exact, source): (Arc<dyn PointOperator>, _, _) = match name {
                "laplace2d" => (Arc::new(operators::Laplacian), ClosedForm::LaplaceSinh, ClosedForm::Zero),
                "laplace5d" => (
                    Arc::new(operators::Laplacian),
                    ClosedForm::PairwiseProducts,
                    ClosedForm::Zero,
                ),
                _ => (
                    Arc::new(operators::CubicPoisson),
                    ClosedForm::SineProduct,
                    ClosedForm::CubicPoissonSource,
                ),
            };
            let mut boundary_pts = Vec::new();
            for axis in 0..dim {
                boundary_pts.extend(face_points(&domain, axis, 0.0, nb));
                boundary_pts.extend(face_points(&domain, axis, 1.0, nb));
            }
            PdeProblem {
                interior: interior_rows(&op, &domain, grid, source),
                boundary: dirichlet_rows(boundary_pts, exact),
                interior_op: op,
                name: name.into(),
                input_dim: dim,
                domain,
                exact: Some(exact),
                reference: None,
                reference_points: grid.reference_per_axis(),
            }
        }
        "burgers1d" => {
            let domain = vec![(-1.0, 1.0), (0.0, 1.0)];
            let op: Arc<dyn PointOperator> = Arc::new(operators::Burgers {
                viscosity: burgers::BURGERS_VISCOSITY,
            });
            let mut boundary = dirichlet_rows(face_points(&domain, 0, -1.0, nb), ClosedForm::Zero);
            boundary.extend(dirichlet_rows(face_points(&domain, 0, 1.0, nb), ClosedForm::Zero));
            boundary.extend(dirichlet_rows(face_points(&domain, 1, 0.0, nb), ClosedForm::NegSine));
            PdeProblem {
                interior: interior_rows(&op, &domain, grid, ClosedForm::Zero),
                boundary,
                interior_op: op,
                name: name.into(),
                input_dim: 2,
                domain,
                exact: None,
                reference: Some(ReferenceGrid::from_csv(BURGERS_FIXTURE)?),
                reference_points: grid.reference_per_axis(),
            }
        }
        "allen-cahn" => {
            let domain = vec![(-1.0, 1.0), (0.0, 1.0)];
            let op: Arc<dyn PointOperator> = Arc::new(operators::AllenCahn {
                diffusion: allen_cahn::ALLEN_CAHN_DIFFUSION,
                reaction: allen_cahn::ALLEN_CAHN_REACTION,
            });
            let mut boundary =
                dirichlet_rows(face_points(&domain, 1, 0.0, nb), ClosedForm::SquaredCosine);
            let value: Arc<dyn PointOperator> = Arc::new(operators::Identity);
            let slope: Arc<dyn PointOperator> = Arc::new(operators::AxisSlope { axis: 0 });
            for t in linspace(0.0, 1.0, nb) {
                boundary.push(CollocationRow::paired(value.clone(), vec![-1.0, t], vec![1.0, t]));
            }
            for t in linspace(0.0, 1.0, nb) {
                boundary.push(CollocationRow::paired(slope.clone(), vec![-1.0, t], vec![1.0, t]));
            }
            PdeProblem {
                interior: interior_rows(&op, &domain, grid, ClosedForm::Zero),
                boundary,
                interior_op: op,
                name: name.into(),
                input_dim: 2,
                domain,
                exact: None,
                reference: Some(ReferenceGrid::from_csv(ALLEN_CAHN_FIXTURE)?),
                reference_points: grid.reference_per_axis(),
            }
        }
        _ => unreachable!("problem_dim validated the name"),
    };
    Ok(problem)
}

/// `‖u_θ − u*‖ / ‖u*‖` over the reference grid with uniform weights.
pub fn relative_l2_error(
    problem: &PdeProblem,
    model: &dyn JetModel,
    params: &[f64],
    per_axis: usize,
) -> Result<f64> {
    let grid = problem.reference_grid(per_axis)?;
    Ok(relative_l2_on(&grid, |x| model.jet(params, x).value))
}

/// Relative L2 error of an arbitrary predictor on a reference grid.
pub fn relative_l2_on(grid: &ReferenceGrid, predict: impl Fn(&[f64]) -> f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, &v) in grid.points.iter().zip(&grid.values) {
        let e = predict(p) - v;
        num += e * e;
        den += v * v;
    }
    (num / den).sqrt()
}

/// Builds the Burgers reference table on `x_count × t_count` nodes.
pub fn burgers_reference_grid(x_count: usize, t_count: usize) -> ReferenceGrid {
    let points = tensor_grid(&[(-1.0, 1.0), (0.0, 1.0)], &[x_count, t_count]);
    let values = points
        .iter()
        .map(|p| burgers::burgers_reference(p[0], p[1]))
        .collect();
    ReferenceGrid { points, values }
}

/// Builds the Allen–Cahn reference table: spectral solution with `modes`
/// nodes and step `dt`, keeping every `stride`-th node at `t_count` times.
pub fn allen_cahn_reference_grid(modes: usize, dt: f64, stride: usize, t_count: usize) -> ReferenceGrid {
    let times = linspace(0.0, 1.0, t_count);
    let snaps = allen_cahn::allen_cahn_snapshots(modes, dt, &times);
    let nodes = allen_cahn::fourier_nodes(modes);
    let mut points = Vec::new();
    let mut values = Vec::new();
    for j in (0..modes).step_by(stride) {
        for (k, &t) in times.iter().enumerate() {
            points.push(vec![nodes[j], t]);
            values.push(snaps[k][j]);
        }
    }
    ReferenceGrid { points, values }
}
