//! Experiment drivers behind the subcommands.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use oedcss::completion::{complete_data, completion_bound, relative_error, BayesModel, DataSpaceMap};
use oedcss::criteria::{evaluate_design, exhaustive_optimum, hybrid_factor, raf_constant, BoundReport};
use oedcss::linalg::{inverse_spectral_norm, phi_d_of_matrix, qf_factor};
use oedcss::models::{build_synthetic, heat_instance, tomo_instance};
use oedcss::operator::{densify, LinearOperator, PreconditionedOperator};
use oedcss::rsvd::{exact_svd_dense, gaussian_matrix, residual_spectrum_dense, SketchConfig, SvdFactors};
use oedcss::selection::{
    default_samples, gks_select, greedy_select, hybrid_select, raf_select, random_select, v11, HybridConfig, Method,
    PivotRule, SvdBackend,
};

use crate::config::{ExperimentConfig, ProblemConfig};
use crate::record::{RandomSummary, RunRecord, SweepSummary};

/// Largest candidate count for which the exhaustive optimum is reported.
pub const EXHAUSTIVE_MAX_M: usize = 12;
/// Failure probability used for the RAF worst-case factor.
pub const RAF_DELTA: f64 = 0.1;
/// Distortion parameter used for the hybrid worst-case factor.
pub const HYBRID_EPS: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] oedcss::Error),
    #[error("{0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Check(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

/// A fully built experiment: Bayesian model, data and cached factorizations.
pub struct Problem {
    pub name: &'static str,
    pub model: BayesModel,
    pub pre: PreconditionedOperator,
    pub truth: DVector<f64>,
    pub data: DVector<f64>,
    /// `A = η⁻¹GFᵀ` when it fits under the densification guard.
    pub dense: Option<DMatrix<f64>>,
    map: DataSpaceMap,
    exact: HashMap<usize, SvdFactors>,
}

impl Problem {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, RunError> {
        let (name, model, truth, data) = match &cfg.problem {
            ProblemConfig::Heat(spec) => {
                let inst = heat_instance(spec, &cfg.prior)?;
                let (model, data) = inst.bayes_model(cfg.noise_pct, cfg.data_seed)?;
                ("heat", model, inst.truth, data.data)
            }
            ProblemConfig::Tomo(spec) => {
                let inst = tomo_instance(spec, &cfg.prior)?;
                let (model, data) = inst.bayes_model(cfg.noise_pct, cfg.data_seed)?;
                ("tomo", model, inst.truth, data.data)
            }
            ProblemConfig::Synthetic(spec) => {
                // F = Aᵀ, G = I, η = 1, so that η⁻¹GFᵀ is exactly A
                let a = build_synthetic(spec.n, spec.m, &spec.spectrum, spec.seed)?;
                let model = BayesModel::new(
                    LinearOperator::from_dense(a.transpose()),
                    LinearOperator::identity(spec.n),
                    LinearOperator::identity(spec.n),
                    DVector::zeros(spec.n),
                    1.0,
                )?;
                let truth = DVector::from_column_slice(gaussian_matrix(spec.n, 1, 1.0, cfg.data_seed)?.as_slice());
                let noise = DVector::from_column_slice(gaussian_matrix(spec.m, 1, 1.0, cfg.data_seed ^ 0x5eed)?.as_slice());
                let data = model.forward.apply(&truth) + noise;
                ("synthetic", model, truth, data)
            }
        };
        let pre = model.preconditioned()?;
        let dense = match densify(&pre.op) {
            Ok(a) => Some(a),
            Err(oedcss::Error::SizeGuard(_)) => None,
            Err(e) => return Err(e.into()),
        };
        let map = DataSpaceMap::new(&model)?;
        Ok(Self { name, model, pre, truth, data, dense, map, exact: HashMap::new() })
    }

    pub fn m(&self) -> usize {
        self.pre.op.in_dim()
    }

    pub fn n(&self) -> usize {
        self.pre.op.out_dim()
    }

    fn exact(&mut self, k: usize) -> Result<Option<&SvdFactors>, RunError> {
        let Some(a) = &self.dense else { return Ok(None) };
        if !self.exact.contains_key(&k) {
            self.exact.insert(k, exact_svd_dense(a, k)?);
        }
        Ok(self.exact.get(&k))
    }

    fn backend(&self, cfg: &ExperimentConfig, k: usize, seed: u64) -> SvdBackend {
        if cfg.svd.exact {
            return SvdBackend::Exact;
        }
        let p = cfg.svd.p.min(self.n().min(self.m()).saturating_sub(k));
        SvdBackend::Randomized(SketchConfig::new(k).with_p(p).with_q(cfg.svd.q).with_seed(seed))
    }

    fn phi(&self, indices: &[usize]) -> Result<f64, RunError> {
        Ok(match &self.dense {
            Some(a) => evaluate_design(a, indices)?,
            None => {
                let mut c = DMatrix::zeros(self.n(), indices.len());
                for (col, &j) in indices.iter().enumerate() {
                    c.set_column(col, &self.pre.op.column(j));
                }
                phi_d_of_matrix(&c)?
            }
        })
    }

    /// Relative error of the MAP point computed from the sensors in `indices`.
    fn map_error(&self, indices: &[usize]) -> Result<f64, RunError> {
        let obs = DVector::from_iterator(indices.len(), indices.iter().map(|&i| self.data[i]));
        Ok(relative_error(&self.map.estimate_subset(indices, &obs)?, &self.truth)?)
    }
}

/// What to compute for each cell besides the selection itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct Extras {
    pub completion: bool,
}

fn check_k(problem: &Problem, k: usize) -> Result<(), RunError> {
    if k > problem.m() {
        return Err(RunError::Config(format!("k = {k} exceeds the {} candidate sensors of {}", problem.m(), problem.name)));
    }
    Ok(())
}

/// Worst-case amplification the method's theory supplies, if any.
fn worst_case_factor(cfg: &ExperimentConfig, problem: &Problem, method: Method, k: usize) -> Result<Option<f64>, RunError> {
    let PivotRule::Srrqr { f } = cfg.pivot else { return Ok(None) };
    let m = problem.m();
    Ok(match method {
        Method::Gks => Some(qf_factor(m, k, f)?),
        Method::Raf if cfg.svd.p >= 2 => {
            Some(qf_factor(m, k, f)? * raf_constant(problem.n(), k + cfg.svd.p, cfg.svd.p, RAF_DELTA)?)
        }
        Method::Hybrid => {
            let s = cfg.hybrid.samples.unwrap_or_else(|| default_samples(k, m));
            Some(hybrid_factor(m, s, k, f, HYBRID_EPS)?)
        }
        _ => None,
    })
}

pub fn run_cell(
    problem: &mut Problem,
    cfg: &ExperimentConfig,
    method: Method,
    k: usize,
    seed: u64,
    extras: Extras,
) -> Result<RunRecord, RunError> {
    let m = problem.m();
    let k = if method == Method::Full { m } else { k };
    check_k(problem, k)?;
    let backend = problem.backend(cfg, k, seed);
    let before = problem.pre.model_counts();
    let start = Instant::now();
    let selection = match method {
        Method::Gks => gks_select(&problem.pre.op, k, &backend, cfg.pivot)?,
        Method::Raf => raf_select(&problem.pre.op, k, cfg.svd.p, seed, cfg.pivot)?,
        Method::Hybrid => {
            let hc = HybridConfig { samples: cfg.hybrid.samples, beta: cfg.hybrid.beta, pivot: cfg.pivot };
            hybrid_select(&problem.pre.op, k, &backend, &hc, seed)?
        }
        Method::Greedy => greedy_select(&problem.pre.op, k)?,
        Method::Random => random_select(m, k, seed)?,
        Method::Full => oedcss::SelectionResult {
            indices: (0..m).collect(),
            weights: None,
            method: Method::Full,
            diagnostics: Default::default(),
        },
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let used = problem.pre.model_counts().since(before);
    let indices = selection.indices;

    let mut rec = RunRecord {
        problem: problem.name.to_string(),
        method: method.to_string(),
        k,
        seed,
        phi_d: problem.phi(&indices)?,
        rel_error: Some(problem.map_error(&indices)?),
        forward_applies: used.forward,
        adjoint_applies: used.adjoint,
        wall_ms,
        ..Default::default()
    };

    if method != Method::Full {
        let worst = worst_case_factor(cfg, problem, method, k)?;
        if let (Some(a), Some(exact)) = (problem.dense.clone(), problem.exact(k)?) {
            let report = BoundReport::evaluate(&a, exact, &indices, worst)?;
            rec.v11_inv_norm = Some(report.v11_inv_norm);
            rec.phi_full = Some(report.phi_full);
            rec.phi_sigma_k = Some(report.phi_sigma_k);
            rec.phi_lower_gks = Some(report.phi_lower_gks);
            rec.phi_lower_combined = Some(report.phi_lower_combined);
            rec.worst_case_factor = worst;
            rec.phi_lower_worst_case = report.phi_lower_qf;
            let h = report.holds;
            rec.bounds_hold = Some(h.lower_gks && h.lower_combined && h.selected_le_sigma_k && h.sigma_k_le_full);
            rec.worst_case_holds = worst.map(|_| h.lower_qf);
            if m <= EXHAUSTIVE_MAX_M {
                rec.phi_opt = Some(exhaustive_optimum(&a, k)?.1);
            }
        }
    } else if let Some(a) = &problem.dense {
        rec.phi_full = Some(evaluate_design(a, &indices)?);
    }

    if extras.completion {
        complete_cell(problem, cfg, &mut rec, &indices, seed)?;
    }
    rec.indices = indices;
    Ok(rec)
}

fn complete_cell(
    problem: &mut Problem,
    cfg: &ExperimentConfig,
    rec: &mut RunRecord,
    indices: &[usize],
    seed: u64,
) -> Result<(), RunError> {
    let k = indices.len();
    let factors = problem.backend(cfg, k, seed).factors(&problem.pre.op, k)?;
    let res = complete_data(&factors.v_k, indices, &problem.data)?;
    let pd = DVector::from_column_slice(&res.completed);
    rec.completion_error = res.rel_error;
    let full = problem.map.estimate(&problem.data)?;
    rec.approx_map_error = Some(relative_error(&problem.map.estimate(&pd)?, &full)?);
    if k < problem.m() {
        if let Some(a) = &problem.dense {
            let tail = residual_spectrum_dense(a, &factors);
            let amp = inverse_spectral_norm(&v11(&factors.v_k, indices))?;
            let mu_norm = problem.model.prior_norm(&problem.model.mu_pr);
            rec.completion_bound = Some(completion_bound(&tail, amp, mu_norm, problem.m(), k)?);
        }
    }
    Ok(())
}

fn sorted(mut records: Vec<RunRecord>) -> Vec<RunRecord> {
    records.sort_by_key(|r| r.sort_key());
    records
}

/// One record per `(method, k, seed)`.
pub fn run_select(cfg: &ExperimentConfig, extras: Extras) -> Result<Vec<RunRecord>, RunError> {
    let mut problem = Problem::build(cfg)?;
    let mut out = Vec::new();
    for &method in &cfg.run.methods {
        for k in cfg.ks() {
            for seed in cfg.seeds() {
                out.push(run_cell(&mut problem, cfg, method, k, seed, extras)?);
            }
        }
    }
    Ok(sorted(out))
}

/// Per-k records plus a per-(method, seed) trend summary. Greedy designs are
/// nested, so a decreasing `φ_D` along the sweep is reported as a failure.
pub fn run_sweep_k(cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, Vec<SweepSummary>), RunError> {
    let records = run_select(cfg, Extras::default())?;
    let mut summaries = Vec::new();
    for &method in &cfg.run.methods {
        for seed in cfg.seeds() {
            let cells: Vec<&RunRecord> =
                records.iter().filter(|r| r.method == method.as_str() && r.seed == seed).collect();
            let (Some(first), Some(last)) = (cells.first(), cells.last()) else { continue };
            summaries.push(SweepSummary {
                method: method.to_string(),
                seed,
                k_first: first.k,
                k_last: last.k,
                phi_first: first.phi_d,
                phi_last: last.phi_d,
                phi_nondecreasing: cells.windows(2).all(|w| w[1].phi_d >= w[0].phi_d - 1e-10),
                rel_error_first: first.rel_error,
                rel_error_last: last.rel_error,
            });
        }
    }
    Ok((records, summaries))
}

pub fn check_sweep(summaries: &[SweepSummary]) -> Result<(), RunError> {
    let broken: Vec<String> = summaries
        .iter()
        .filter(|s| s.method == Method::Greedy.as_str() && !s.phi_nondecreasing)
        .map(|s| format!("seed {}", s.seed))
        .collect();
    if broken.is_empty() {
        Ok(())
    } else {
        Err(RunError::Check(format!("greedy φ_D decreased along the sweep ({})", broken.join(", "))))
    }
}

/// The configured methods against `run.random_designs` uniform designs.
pub fn run_compare_random(cfg: &ExperimentConfig) -> Result<(Vec<RunRecord>, Vec<RandomSummary>), RunError> {
    let mut problem = Problem::build(cfg)?;
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for k in cfg.ks() {
        let randoms: Vec<RunRecord> = (0..cfg.run.random_designs)
            .map(|s| run_cell(&mut problem, cfg, Method::Random, k, s, Extras::default()))
            .collect::<Result<_, _>>()?;
        for &method in cfg.run.methods.iter().filter(|m| **m != Method::Random) {
            for seed in cfg.seeds() {
                let rec = run_cell(&mut problem, cfg, method, k, seed, Extras::default())?;
                let tol = 1e-10 * (1.0 + rec.phi_d.abs());
                summaries.push(RandomSummary {
                    method: method.to_string(),
                    k,
                    seed,
                    phi_d: rec.phi_d,
                    designs: randoms.len(),
                    beaten: randoms.iter().filter(|r| r.phi_d < rec.phi_d - tol).count(),
                    ties: randoms.iter().filter(|r| (r.phi_d - rec.phi_d).abs() <= tol).count(),
                });
                records.push(rec);
            }
        }
        records.extend(randoms);
    }
    Ok((sorted(records), summaries))
}

pub fn run_complete(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, RunError> {
    run_select(cfg, Extras { completion: true })
}

/// Records with every bound evaluated; fails if a deterministic bound is violated.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>, RunError> {
    let records = run_select(cfg, Extras::default())?;
    if records.iter().any(|r| r.method != Method::Full.as_str() && r.bounds_hold.is_none()) {
        return Err(RunError::Check("bounds need the dense operator, which exceeds the size guard".into()));
    }
    Ok(records)
}

pub fn check_bounds(records: &[RunRecord]) -> Result<(), RunError> {
    let broken: Vec<String> = records
        .iter()
        .filter(|r| r.bounds_hold == Some(false))
        .map(|r| format!("{} k={} seed={}", r.method, r.k, r.seed))
        .collect();
    if broken.is_empty() {
        Ok(())
    } else {
        Err(RunError::Check(format!("deterministic bound violated: {}", broken.join(", "))))
    }
}
