//! Desk-scale test problems on the unit square.
//!
//! Parameters live on the nodes of a uniform `n_side × n_side` grid with
//! spacing `h = 1/(n_side − 1)`, flattened as `index = j·n_side + i` for the
//! node at `(i·h, j·h)`. Homogeneous Neumann conditions use ghost-node
//! reflection; the resulting 5-point Laplacian is symmetric after scaling
//! by the trapezoidal node areas.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::completion::BayesModel;
use crate::error::{Error, Result};
use crate::linalg::orthonormalize;
use crate::operator::{LinearMap, LinearOperator};
use crate::rsvd::gaussian_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2D {
    pub n_side: usize,
}

impl Grid2D {
    pub fn new(n_side: usize) -> Result<Self> {
        if n_side < 3 {
            return Err(Error::Domain(format!("grid needs at least 3 nodes per side, got {n_side}")));
        }
        Ok(Self { n_side })
    }

    pub fn n(&self) -> usize {
        self.n_side * self.n_side
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_side - 1) as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_side + i
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx % self.n_side) as f64 * h, (idx / self.n_side) as f64 * h)
    }

    /// Nearest node to `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> usize {
        let h = self.spacing();
        let clamp = |t: f64| ((t / h).round().max(0.0) as usize).min(self.n_side - 1);
        self.index(clamp(x), clamp(y))
    }

    fn edge_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n_side - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Trapezoidal dual-cell area of every node; sums to 1.
    pub fn node_areas(&self) -> Vec<f64> {
        let h2 = self.spacing().powi(2);
        (0..self.n())
            .map(|idx| h2 * self.edge_weight(idx % self.n_side) * self.edge_weight(idx / self.n_side))
            .collect()
    }

    /// Node values of `f(x, y)`.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> DVector<f64> {
        DVector::from_fn(self.n(), |idx, _| {
            let (x, y) = self.coords(idx);
            f(x, y)
        })
    }
}

/// Sparse rows `(column, value)`.
type SparseRows = Vec<Vec<(usize, f64)>>;

/// 5-point Laplacian with Neumann ghost-node reflection.
fn neumann_laplacian(grid: &Grid2D) -> SparseRows {
    let ns = grid.n_side;
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    let mut rows = Vec::with_capacity(grid.n());
    for j in 0..ns {
        for i in 0..ns {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
            row.push((grid.index(i, j), -4.0 * inv_h2));
            let mut push = |c: usize, v: f64| match row.iter_mut().find(|(col, _)| *col == c) {
                Some(e) => e.1 += v,
                None => row.push((c, v)),
            };
            // reflected neighbours: ghost at -1 mirrors 1, ghost at ns mirrors ns-2
            let left = if i == 0 { 1 } else { i - 1 };
            let right = if i == ns - 1 { ns - 2 } else { i + 1 };
            let down = if j == 0 { 1 } else { j - 1 };
            let up = if j == ns - 1 { ns - 2 } else { j + 1 };
            push(grid.index(left, j), inv_h2);
            push(grid.index(right, j), inv_h2);
            push(grid.index(i, down), inv_h2);
            push(grid.index(i, up), inv_h2);
            rows.push(row);
        }
    }
    rows
}

fn sparse_mul(rows: &SparseRows, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|r| r.iter().map(|&(c, v)| v * x[c]).sum()))
}

/// Banded LU without pivoting, for diagonally dominant grid operators.
#[derive(Debug, Clone)]
struct BandedLu {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedLu {
    fn width(&self) -> usize {
        2 * self.bw + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * self.width() + (j + self.bw - i)]
    }

    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let w = self.width();
        &mut self.band[i * w + (j + self.bw - i)]
    }

    fn factor(n: usize, bw: usize, rows: &SparseRows) -> Result<Self> {
        let mut lu = BandedLu { n, bw, band: vec![0.0; n * (2 * bw + 1)] };
        for (i, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                if c.abs_diff(i) > bw {
                    return Err(Error::Dimension("entry outside band".into()));
                }
                *lu.at_mut(i, c) += v;
            }
        }
        for k in 0..n {
            let piv = lu.at(k, k);
            if piv.abs() < 1e-300 {
                return Err(Error::Singular(format!("zero pivot at row {k}")));
            }
            let end = (k + bw + 1).min(n);
            for i in k + 1..end {
                let l = lu.at(i, k) / piv;
                *lu.at_mut(i, k) = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..end {
                    let ukj = lu.at(k, j);
                    *lu.at_mut(i, j) -= l * ukj;
                }
            }
        }
        Ok(lu)
    }

    /// Stored entries of row `i` for columns `lo..hi`.
    fn row(&self, i: usize, lo: usize, hi: usize) -> &[f64] {
        let base = i * self.width() + self.bw - i;
        &self.band[base + lo..base + hi]
    }

    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut x = r.clone();
        let xs = x.as_mut_slice();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let dot: f64 = self.row(i, lo, i).iter().zip(&xs[lo..i]).map(|(a, b)| a * b).sum();
            xs[i] -= dot;
        }
        for i in (0..n).rev() {
            let hi = (i + bw + 1).min(n);
            let dot: f64 = self.row(i, i + 1, hi).iter().zip(&xs[i + 1..hi]).map(|(a, b)| a * b).sum();
            xs[i] = (xs[i] - dot) / self.at(i, i);
        }
        x
    }

    fn solve_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        let (n, bw) = (self.n, self.bw);
        let mut x = r.clone();
        let xs = x.as_mut_slice();
        // Uᵀ z = r, eliminating with rows of U
        for i in 0..n {
            let zi = xs[i] / self.at(i, i);
            xs[i] = zi;
            let hi = (i + bw + 1).min(n);
            for (xj, u) in xs[i + 1..hi].iter_mut().zip(self.row(i, i + 1, hi)) {
                *xj -= u * zi;
            }
        }
        // Lᵀ x = z, eliminating with rows of L
        for i in (0..n).rev() {
            let xi = xs[i];
            let lo = i.saturating_sub(bw);
            for (xk, l) in xs[lo..i].iter_mut().zip(self.row(i, lo, i)) {
                *xk -= l * xi;
            }
        }
        x
    }
}

/// Candidate sensor locations snapped to grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLayout {
    pub points: Vec<(f64, f64)>,
    pub nodes: Vec<usize>,
}

impl SensorLayout {
    pub fn from_points(grid: &Grid2D, points: Vec<(f64, f64)>) -> Result<Self> {
        let mut nodes = Vec::with_capacity(points.len());
        for &(x, y) in &points {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(Error::Domain(format!("sensor ({x}, {y}) lies outside the unit square")));
            }
            nodes.push(grid.nearest(x, y));
        }
        let mut uniq = nodes.clone();
        uniq.sort_unstable();
        uniq.dedup();
        if uniq.len() != nodes.len() {
            return Err(Error::Domain("two sensors snap to the same grid node".into()));
        }
        if nodes.len() > grid.n() {
            return Err(Error::Dimension("more sensors than grid nodes".into()));
        }
        Ok(Self { points, nodes })
    }

    /// Uniform `per_side × per_side` interior lattice at `(i + ½)/per_side`.
    pub fn lattice(grid: &Grid2D, per_side: usize) -> Result<Self> {
        let pts = (0..per_side)
            .flat_map(|j| {
                (0..per_side).map(move |i| {
                    ((i as f64 + 0.5) / per_side as f64, (j as f64 + 0.5) / per_side as f64)
                })
            })
            .collect();
        Self::from_points(grid, pts)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

struct HeatMap {
    n: usize,
    steps: usize,
    step: BandedLu,
    sensors: Vec<usize>,
}

impl LinearMap for HeatMap {
    fn out_dim(&self) -> usize {
        self.sensors.len()
    }
    fn in_dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut u = x.clone();
        for _ in 0..self.steps {
            u = self.step.solve(&u);
        }
        DVector::from_iterator(self.sensors.len(), self.sensors.iter().map(|&s| u[s]))
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.n);
        for (&s, &val) in self.sensors.iter().zip(y.iter()) {
            v[s] += val;
        }
        for _ in 0..self.steps {
            v = self.step.solve_transpose(&v);
        }
        v
    }
}

/// Initial condition → sensor readings at time `final_time` for
/// `∂u/∂t = Δu` with Neumann boundaries, implicit Euler with `steps` steps.
pub fn build_heat2d(
    grid: &Grid2D,
    layout: &SensorLayout,
    final_time: f64,
    steps: usize,
) -> Result<LinearOperator> {
    if steps == 0 || !(final_time > 0.0) {
        return Err(Error::Domain("heat model needs steps >= 1 and T > 0".into()));
    }
    let dt = final_time / steps as f64;
    let lap = neumann_laplacian(grid);
    let system: SparseRows = lap
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&(c, v)| (c, if c == i { 1.0 - dt * v } else { -dt * v }))
                .collect()
        })
        .collect();
    let step = BandedLu::factor(grid.n(), grid.n_side, &system)?;
    Ok(LinearOperator::new(HeatMap { n: grid.n(), steps, step, sensors: layout.nodes.clone() }))
}

struct RowMap {
    n: usize,
    rows: SparseRows,
}

impl LinearMap for RowMap {
    fn out_dim(&self) -> usize {
        self.rows.len()
    }
    fn in_dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        sparse_mul(&self.rows, x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            for &(c, v) in row {
                out[c] += v * yi;
            }
        }
        out
    }
}

/// Elliptical zone with foci `a`, `b` and minor-axis length `width`.
#[derive(Debug, Clone, Copy)]
pub struct FresnelZone {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub width: f64,
}

impl FresnelZone {
    /// Sum of focal distances on the boundary of the ellipse.
    pub fn major_length(&self) -> f64 {
        let c = dist(self.a, self.b) / 2.0;
        let semi_minor = self.width / 2.0;
        2.0 * (c * c + semi_minor * semi_minor).sqrt()
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        dist(p, self.a) + dist(p, self.b) <= self.major_length()
    }
}

fn dist(p: (f64, f64), q: (f64, f64)) -> f64 {
    ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
}

/// Default zone width: 5% of the domain diameter.
pub fn default_zone_width() -> f64 {
    0.05 * std::f64::consts::SQRT_2
}

/// Travel times from one source to each receiver: row `j` integrates the
/// attenuation over the Fresnel zone of pair `(source, receiver_j)` with
/// node-area quadrature.
pub fn build_tomo2d(
    grid: &Grid2D,
    source: (f64, f64),
    receivers: &[(f64, f64)],
    zone_width: f64,
) -> Result<LinearOperator> {
    if !(zone_width > 0.0) {
        return Err(Error::Domain(format!("zone width must be positive, got {zone_width}")));
    }
    for (i, r) in receivers.iter().enumerate() {
        if receivers[..i].iter().any(|q| dist(*q, *r) < 1e-12) {
            return Err(Error::Domain(format!("receiver {i} duplicates an earlier receiver")));
        }
    }
    let areas = grid.node_areas();
    let mut rows = Vec::with_capacity(receivers.len());
    for (j, &rcv) in receivers.iter().enumerate() {
        let zone = FresnelZone { a: source, b: rcv, width: zone_width };
        let row: Vec<(usize, f64)> = (0..grid.n())
            .filter(|&c| zone.contains(grid.coords(c)))
            .map(|c| (c, areas[c]))
            .collect();
        if row.is_empty() {
            return Err(Error::Domain(format!("Fresnel zone of receiver {j} contains no grid node")));
        }
        rows.push(row);
    }
    Ok(LinearOperator::new(RowMap { n: grid.n(), rows }))
}

/// `count` receivers, half uniformly on the left edge and half on the top.
pub fn boundary_receivers(count: usize) -> Vec<(f64, f64)> {
    let left = count.div_ceil(2);
    let top = count - left;
    let mut out: Vec<(f64, f64)> = (0..left).map(|i| (0.0, (i as f64 + 0.5) / left as f64)).collect();
    out.extend((0..top).map(|i| ((i as f64 + 0.5) / top as f64, 1.0)));
    out
}

/// `A = U diag(spectrum) Vᵀ` (`n × m`) with seeded orthonormal `U`, `V`.
pub fn build_synthetic(n: usize, m: usize, spectrum: &[f64], seed: u64) -> Result<DMatrix<f64>> {
    let r = spectrum.len();
    if r == 0 || r > n.min(m) {
        return Err(Error::Dimension(format!("spectrum length {r} must lie in 1..={}", n.min(m))));
    }
    if spectrum.iter().any(|s| !(*s > 0.0)) || spectrum.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Domain("spectrum must be positive and nonincreasing".into()));
    }
    let u = orthonormalize(&gaussian_matrix(n, r, 1.0, seed)?);
    let v = orthonormalize(&gaussian_matrix(m, r, 1.0, seed.wrapping_add(0x9e37_79b9))?);
    Ok(u * DMatrix::from_diagonal(&DVector::from_column_slice(spectrum)) * v.transpose())
}

struct PriorFactorMap {
    stiffness: BandedLu,
    sqrt_mass: Vec<f64>,
    scale: f64,
}

impl LinearMap for PriorFactorMap {
    fn out_dim(&self) -> usize {
        self.sqrt_mass.len()
    }
    fn in_dim(&self) -> usize {
        self.sqrt_mass.len()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mx = DVector::from_iterator(x.len(), x.iter().zip(&self.sqrt_mass).map(|(a, b)| a * b));
        self.stiffness.solve(&mx) * self.scale
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let k = self.stiffness.solve_transpose(y);
        DVector::from_iterator(k.len(), k.iter().zip(&self.sqrt_mass).map(|(a, b)| a * b * self.scale))
    }
}

struct PrecisionMap {
    stiffness: SparseRows,
    mass: Vec<f64>,
    alpha: f64,
}

impl LinearMap for PrecisionMap {
    fn out_dim(&self) -> usize {
        self.mass.len()
    }
    fn in_dim(&self) -> usize {
        self.mass.len()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let kx = sparse_mul(&self.stiffness, x);
        let scaled = DVector::from_iterator(kx.len(), kx.iter().zip(&self.mass).map(|(a, m)| a / m));
        sparse_mul(&self.stiffness, &scaled) * self.alpha
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.apply(y)
    }
}

/// Gaussian prior with precision `α K M⁻¹ K`, `K` the stiffness matrix of
/// `−Δ + κ²` and `M` the lumped mass.
#[derive(Debug, Clone)]
pub struct Prior {
    /// `G = α^{−1/2} K⁻¹ M^{1/2}`, so `GGᵀ = Γ_pr`.
    pub factor: LinearOperator,
    /// `Γ_pr⁻¹ = α K M⁻¹ K`.
    pub precision: LinearOperator,
    pub kappa2: f64,
    pub alpha: f64,
}

pub fn build_prior(grid: &Grid2D, kappa2: f64, alpha: f64) -> Result<Prior> {
    if !(kappa2 > 0.0) || !(alpha > 0.0) {
        return Err(Error::Domain(format!("need kappa2 > 0 and alpha > 0, got {kappa2}, {alpha}")));
    }
    let mass = grid.node_areas();
    let lap = neumann_laplacian(grid);
    let stiffness: SparseRows = lap
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&(c, v)| (c, mass[i] * (if c == i { kappa2 - v } else { -v })))
                .collect()
        })
        .collect();
    let lu = BandedLu::factor(grid.n(), grid.n_side, &stiffness)?;
    let factor = LinearOperator::new(PriorFactorMap {
        stiffness: lu,
        sqrt_mass: mass.iter().map(|m| m.sqrt()).collect(),
        scale: 1.0 / alpha.sqrt(),
    });
    let precision = LinearOperator::new(PrecisionMap { stiffness, mass, alpha });
    Ok(Prior { factor, precision, kappa2, alpha })
}

/// Franke's test function on the unit square.
pub fn franke(x: f64, y: f64) -> f64 {
    let (a, b) = (9.0 * x, 9.0 * y);
    0.75 * (-((a - 2.0).powi(2) + (b - 2.0).powi(2)) / 4.0).exp()
        + 0.75 * (-(a + 1.0).powi(2) / 49.0 - (b + 1.0) / 10.0).exp()
        + 0.5 * (-((a - 7.0).powi(2) + (b - 3.0).powi(2)) / 4.0).exp()
        - 0.2 * (-(a - 4.0).powi(2) - (b - 7.0).powi(2)).exp()
}

/// Smooth attenuation phantom: background plus two Gaussian inclusions.
pub fn blob_phantom(x: f64, y: f64) -> f64 {
    let g = |cx: f64, cy: f64, r: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * r * r)).exp();
    0.2 + 0.8 * g(0.35, 0.6, 0.12) + 0.5 * g(0.7, 0.3, 0.08)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyData {
    pub clean: DVector<f64>,
    pub data: DVector<f64>,
    /// Noise standard deviation `noise_pct · ‖clean‖₂ / √m`.
    pub eta: f64,
}

/// Noisy observations `F·truth + η z` with `z` standard normal.
pub fn generate_data(
    forward: &LinearOperator,
    truth: &DVector<f64>,
    noise_pct: f64,
    seed: u64,
) -> Result<NoisyData> {
    if !(noise_pct >= 0.0) {
        return Err(Error::Domain(format!("noise level must be nonnegative, got {noise_pct}")));
    }
    let clean = forward.apply(truth);
    let m = clean.len() as f64;
    let norm = clean.norm();
    if noise_pct > 0.0 && norm == 0.0 {
        return Err(Error::Domain("clean data is zero; relative noise is undefined".into()));
    }
    let eta = noise_pct * norm / m.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = DVector::from_fn(clean.len(), |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let data = if eta > 0.0 { &clean + noise * eta } else { clean.clone() };
    Ok(NoisyData { clean, data, eta })
}

/// Heat instance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatSpec {
    pub n_side: usize,
    pub final_time: f64,
    pub steps: usize,
    pub sensors_per_side: usize,
}

impl Default for HeatSpec {
    fn default() -> Self {
        Self { n_side: 33, final_time: 0.01, steps: 100, sensors_per_side: 10 }
    }
}

/// Tomography instance parameters; `zone_width = None` uses [`default_zone_width`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomoSpec {
    pub n_side: usize,
    pub receivers: usize,
    pub zone_width: Option<f64>,
    pub source: (f64, f64),
}

impl Default for TomoSpec {
    fn default() -> Self {
        Self { n_side: 33, receivers: 128, zone_width: None, source: (1.0, 0.5) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSpec {
    pub kappa2: f64,
    pub alpha: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { kappa2: 80.0, alpha: 0.1 }
    }
}

/// A grid-based inverse problem: forward model, prior and true parameter.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub grid: Grid2D,
    pub forward: LinearOperator,
    pub prior: Prior,
    pub truth: DVector<f64>,
    pub sensor_points: Vec<(f64, f64)>,
}

impl Instance {
    pub fn m(&self) -> usize {
        self.forward.out_dim()
    }

    /// Zero-mean Bayesian model whose noise level is fixed by drawing data
    /// from the true parameter.
    pub fn bayes_model(&self, noise_pct: f64, seed: u64) -> Result<(BayesModel, NoisyData)> {
        let data = generate_data(&self.forward, &self.truth, noise_pct, seed)?;
        let model = BayesModel::new(
            self.forward.clone(),
            self.prior.factor.clone(),
            self.prior.precision.clone(),
            DVector::zeros(self.grid.n()),
            data.eta,
        )?;
        Ok((model, data))
    }
}

/// Heat-equation instance with Franke's function as the initial condition.
pub fn heat_instance(spec: &HeatSpec, prior: &PriorSpec) -> Result<Instance> {
    let grid = Grid2D::new(spec.n_side)?;
    let layout = SensorLayout::lattice(&grid, spec.sensors_per_side)?;
    Ok(Instance {
        name: "heat".into(),
        grid,
        forward: build_heat2d(&grid, &layout, spec.final_time, spec.steps)?,
        prior: build_prior(&grid, prior.kappa2, prior.alpha)?,
        truth: grid.sample(franke),
        sensor_points: layout.points,
    })
}

/// Single-source tomography instance with the blob phantom as truth.
pub fn tomo_instance(spec: &TomoSpec, prior: &PriorSpec) -> Result<Instance> {
    let grid = Grid2D::new(spec.n_side)?;
    let receivers = boundary_receivers(spec.receivers);
    let width = spec.zone_width.unwrap_or_else(default_zone_width);
    Ok(Instance {
        name: "tomo".into(),
        grid,
        forward: build_tomo2d(&grid, spec.source, &receivers, width)?,
        prior: build_prior(&grid, prior.kappa2, prior.alpha)?,
        truth: grid.sample(blob_phantom),
        sensor_points: receivers,
    })
}
