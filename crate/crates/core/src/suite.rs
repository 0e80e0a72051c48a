//! Verification suites: default solutions per geometry, dispatch by
//! estimate id, configuration, and report assembly.

use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

use crate::cutoff::{cutoff_report, ProfileKind};
use crate::discrete::{gaussian_initial, solve_heat, RadialField, RadialGrid};
use crate::error::{Error, Result};
use crate::estimates::{
    bernstein_laplacian_fit, bernstein_t_stability, bochner_residuals, closed_manifold_laplacian_margin,
    doubling_fit, f_evolution_check, hamilton_gradient_margin, kernel_laplacian_bound, kotschwar_gradient_fit,
    li_yau_fit, main_laplacian_margin, p_function_check, random_samples, sharpness_scan, EstimateReport,
    FEvolutionOptions, Fitted, Location, SamplingPlan, SharpnessScan,
};
use crate::exec::Execution;
use crate::geometry::{GeometryKind, ModelGeometry};
use crate::kernels::{shifted_solution, BoundedSolution, KernelModel, SPHERE_T_MIN};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every estimate id understood by the suite.
pub const ESTIMATE_IDS: [&str; 12] = [
    "eq1.1",
    "eq1.2-fit",
    "eq1.4",
    "thm1.3",
    "thm2.1-fit",
    "thm2.4-fit",
    "lem2.3",
    "bochner",
    "p-function",
    "liyau-fit",
    "doubling",
    "cutoff-fit",
];

/// Ids that produce a fitted constant.
pub const FIT_IDS: [&str; 8] =
    ["eq1.2-fit", "thm1.3", "thm2.1-fit", "thm2.4-fit", "lem2.3", "liyau-fit", "doubling", "cutoff-fit"];

pub fn check_estimate_id(id: &str) -> Result<()> {
    if ESTIMATE_IDS.contains(&id) {
        Ok(())
    } else {
        Err(Error::UnknownEstimate(id.to_string()))
    }
}

/// Default initial time `t0` of the shifted solution on `geom`.
pub fn default_t0(geom: &ModelGeometry) -> f64 {
    match geom.kind {
        GeometryKind::FlatTorus { .. } => 0.5,
        GeometryKind::SphereS2 => 0.05,
        GeometryKind::WarpedSurface { .. } => 0.01,
        _ => 1.0,
    }
}

/// Default radial solve on a warped surface: `h_r = 5e-3`, `h_t = 5e-4`,
/// snapshots every `0.01` from `t = 0.01` to `2.01`.
pub fn default_grid(geom: &ModelGeometry) -> Option<RadialGrid> {
    match geom.kind {
        GeometryKind::WarpedSurface { r_max, .. } => Some(RadialGrid {
            r_max,
            n_r: (r_max / 5e-3).round() as usize + 1,
            t_start: 0.01,
            t_end: 2.01,
            n_t: 4000,
            record_every: 20,
        }),
        _ => None,
    }
}

/// Everything a suite run depends on. Equal configs give identical reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub geometry: ModelGeometry,
    pub estimates: Vec<String>,
    pub plan: SamplingPlan,
    pub t0: f64,
    pub grid: Option<RadialGrid>,
    pub cutoff_profile: ProfileKind,
    pub cutoff_grid: usize,
    pub bochner_samples: usize,
    pub seed: u64,
    pub c_star: Option<f64>,
    pub rate: Option<f64>,
    pub sharpness_distance: f64,
    pub sharpness_t_min: f64,
    pub sharpness_t_max: f64,
    pub sharpness_per_decade: usize,
}

impl SuiteConfig {
    pub fn new(geometry: ModelGeometry) -> Self {
        Self {
            geometry,
            estimates: Vec::new(),
            plan: SamplingPlan::default_for(&geometry),
            t0: default_t0(&geometry),
            grid: default_grid(&geometry),
            cutoff_profile: ProfileKind::default(),
            cutoff_grid: 2000,
            bochner_samples: 1000,
            seed: 0x5eed,
            c_star: None,
            rate: None,
            sharpness_distance: 1.0,
            sharpness_t_min: 1e-4,
            sharpness_t_max: 1e-1,
            sharpness_per_decade: 4,
        }
    }

    /// Apply one `key = value` setting. `geometry` is handled by the caller
    /// because it resets the geometry-dependent defaults.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{key}: expected a number, got '{v}'")))
        };
        let int = |v: &str| -> Result<usize> {
            v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("{key}: expected an integer, got '{v}'")))
        };
        let value = value.trim();
        match key.trim() {
            "estimates" => {
                let ids: Vec<String> =
                    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                for id in &ids {
                    check_estimate_id(id)?;
                }
                self.estimates = ids;
            }
            "plan.t_min" => self.plan.t_min = num(value)?,
            "plan.t_max" => self.plan.t_max = num(value)?,
            "plan.per_decade" => self.plan.per_decade = int(value)?,
            "plan.radius" => self.plan.radius = num(value)?,
            "plan.step" => self.plan.step = num(value)?,
            "delta" | "plan.delta" => self.plan.delta = num(value)?,
            "epsilon" | "plan.epsilon" => {
                self.plan.epsilons = value.split(',').map(num).collect::<Result<Vec<_>>>()?;
            }
            "t0" => self.t0 = num(value)?,
            "cutoff.profile" => self.cutoff_profile = value.parse()?,
            "cutoff.grid" => self.cutoff_grid = int(value)?,
            "bochner.samples" => self.bochner_samples = int(value)?,
            "seed" => self.seed = value.parse().map_err(|_| Error::Parse(format!("seed: bad integer '{value}'")))?,
            "c_star" => self.c_star = Some(num(value)?),
            "rate" => self.rate = Some(num(value)?),
            "sharpness.d" => self.sharpness_distance = num(value)?,
            "sharpness.t_min" => self.sharpness_t_min = num(value)?,
            "sharpness.t_max" => self.sharpness_t_max = num(value)?,
            "sharpness.per_decade" => self.sharpness_per_decade = int(value)?,
            k if k.starts_with("solver.") => {
                let grid = self.grid.as_mut().ok_or_else(|| {
                    Error::Parse(format!("{k}: solver settings apply to warped surfaces only"))
                })?;
                match k {
                    "solver.n_r" => grid.n_r = int(value)?,
                    "solver.n_t" => grid.n_t = int(value)?,
                    "solver.t_start" => grid.t_start = num(value)?,
                    "solver.t_end" => grid.t_end = num(value)?,
                    "solver.record_every" => grid.record_every = int(value)?,
                    _ => return Err(Error::Parse(format!("unknown setting '{k}'"))),
                }
            }
            other => return Err(Error::Parse(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }

    pub fn plan_hash(&self) -> String {
        self.plan.hash(&self.geometry)
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if !(self.t0 > 0.0) {
            return Err(Error::Domain(format!("t0 must be positive, got {}", self.t0)));
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Solve-once cache for the discrete field of a warped surface.
pub struct Suite {
    pub config: SuiteConfig,
    field: OnceLock<Arc<RadialField>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteError {
    pub estimate_id: String,
    pub message: String,
    /// `hypothesis`, `config`, or `data`.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub artifact_version: String,
    pub geometry: String,
    pub plan_hash: String,
    pub results: Vec<EstimateReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<SuiteError>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.results.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Error category used for exit codes: data-integrity errors count as
/// failed margins, everything else as a hypothesis or configuration error.
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Hypothesis(_) | Error::CurvatureViolation(_) | Error::NotApplicable(_) | Error::Precondition(_) => {
            "hypothesis"
        }
        Error::DataIntegrity(_) => "data",
        _ => "config",
    }
}

/// One row of the constant-fit table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub estimate_id: String,
    pub constant: String,
    pub geometry: String,
    pub value: f64,
    pub binding: Option<Location>,
    pub plan_hash: String,
    pub value_refined: f64,
}

impl FitRow {
    pub const CSV_HEADER: &'static str = "estimate_id,constant,geometry,fitted,binding_coords,binding_t,plan_hash,value_1x,value_2x";

    pub fn to_csv(&self) -> String {
        let (coords, t) = match &self.binding {
            Some(b) => (
                b.coords.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(" "),
                format!("{}", b.t),
            ),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{:.6},{},{},{},{},{}",
            self.estimate_id,
            self.constant,
            self.geometry,
            self.value,
            coords,
            t,
            self.plan_hash,
            self.value,
            self.value_refined
        )
    }
}

impl Suite {
    pub fn new(config: SuiteConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, field: OnceLock::new() })
    }

    pub fn geometry(&self) -> &ModelGeometry {
        &self.config.geometry
    }

    fn execution(&self) -> Execution {
        self.config.plan.execution
    }

    /// The discrete field of a warped surface, solved on first use.
    pub fn field(&self) -> Result<Arc<RadialField>> {
        if let Some(f) = self.field.get() {
            return Ok(f.clone());
        }
        let GeometryKind::WarpedSurface { warp, .. } = self.geometry().kind else {
            return Err(Error::NotApplicable(format!("{} has closed-form kernels", self.geometry().key())));
        };
        let grid = self.config.grid.expect("warped configs carry a grid");
        let field = Arc::new(solve_heat(&grid, warp, gaussian_initial(grid.t_start))?);
        Ok(self.field.get_or_init(|| field).clone())
    }

    pub fn kernel_model(&self) -> Result<KernelModel> {
        let geom = *self.geometry();
        Ok(match geom.kind {
            GeometryKind::WarpedSurface { .. } => KernelModel::Discrete(self.field()?),
            _ => KernelModel::Analytic { geom, source: geom.origin() },
        })
    }

    /// The shifted solution `H(x, o, s + t0)`.
    pub fn solution(&self) -> Result<BoundedSolution> {
        self.solution_at(self.config.t0)
    }

    fn solution_at(&self, t0: f64) -> Result<BoundedSolution> {
        let geom = *self.geometry();
        match geom.kind {
            GeometryKind::WarpedSurface { .. } => Ok(BoundedSolution::from_field(self.field()?)),
            _ => shifted_solution(&geom, &geom.origin(), t0),
        }
    }

    /// Shifted solutions with `t0 ∈ {t0/2, t0, 2t0}` (a single member on warped surfaces).
    pub fn family(&self) -> Result<Vec<BoundedSolution>> {
        if matches!(self.geometry().kind, GeometryKind::WarpedSurface { .. }) {
            return Ok(vec![self.solution()?]);
        }
        [0.5, 1.0, 2.0].iter().map(|f| self.solution_at(self.config.t0 * f)).collect()
    }

    /// Run one estimate; the P-function yields one report per epsilon.
    pub fn run(&self, id: &str) -> Result<Vec<EstimateReport>> {
        Ok(match id {
            "p-function" => {
                let sol = self.solution()?;
                let mut out = Vec::new();
                for &eps in &self.config.plan.epsilons {
                    out.push(p_function_check(&sol, eps, &self.config.plan)?);
                }
                out
            }
            "eq1.1" => vec![hamilton_gradient_margin(&self.solution()?, &self.config.plan)?],
            "eq1.4" => vec![main_laplacian_margin(&self.solution()?, &self.config.plan)?],
            "bochner" => {
                let sol = self.solution()?;
                let samples = random_samples(&sol, &self.config.plan, self.config.bochner_samples, self.config.seed)?;
                vec![bochner_residuals(&sol, &samples, self.execution())?.to_report(self.geometry())]
            }
            _ => vec![self.fit(id, &self.config.plan)?.report],
        })
    }

    /// Plan for estimates sampled at kernel times: the sphere series is only
    /// evaluated for `t >= SPHERE_T_MIN`.
    pub fn kernel_plan(&self, plan: &SamplingPlan) -> SamplingPlan {
        match self.geometry().kind {
            GeometryKind::SphereS2 if plan.t_min < SPHERE_T_MIN => {
                SamplingPlan { t_min: SPHERE_T_MIN, t_max: plan.t_max.max(SPHERE_T_MIN), ..plan.clone() }
            }
            _ => plan.clone(),
        }
    }

    /// Run a fit-mode estimate on the given plan.
    pub fn fit(&self, id: &str, plan: &SamplingPlan) -> Result<Fitted> {
        check_estimate_id(id)?;
        let delta = plan.delta;
        match id {
            "eq1.2-fit" => closed_manifold_laplacian_margin(&self.solution()?, plan),
            "thm1.3" => kernel_laplacian_bound(&self.kernel_model()?, delta, &self.kernel_plan(plan)),
            "thm2.1-fit" => kotschwar_gradient_fit(&self.family()?, plan),
            "thm2.4-fit" => {
                let family = self.family()?;
                let mut fitted = bernstein_laplacian_fit(&family, plan)?;
                if family.iter().all(|s| s.kernel.has_third_derivatives()) {
                    let (short, long) = bernstein_t_stability(&family, plan, 10.0)?;
                    fitted.report.diagnostics.insert("horizon_drift".into(), (long - short).abs() / short.max(1e-300));
                }
                Ok(fitted)
            }
            "lem2.3" => f_evolution_check(
                &self.solution()?,
                plan,
                FEvolutionOptions { c_star: self.config.c_star, c: self.config.rate },
            ),
            "liyau-fit" => li_yau_fit(&self.kernel_model()?, delta, &self.kernel_plan(plan)),
            "doubling" => doubling_fit(self.geometry(), &self.geometry().origin(), plan),
            "cutoff-fit" => {
                let (report, fit) =
                    cutoff_report(self.config.cutoff_profile, self.geometry().dim, self.config.cutoff_grid, plan.execution)?;
                Ok(Fitted { report, fit: fit.fit })
            }
            other => Err(Error::Parse(format!("'{other}' is not a fit-mode estimate"))),
        }
    }

    /// Fit at the configured plan and at its refinement.
    pub fn fit_row(&self, id: &str) -> Result<FitRow> {
        if !FIT_IDS.contains(&id) {
            check_estimate_id(id)?;
            return Err(Error::Parse(format!("'{id}' is not a fit-mode estimate")));
        }
        let coarse = self.fit(id, &self.config.plan)?;
        let refined = if id == "cutoff-fit" {
            let (_, f) = cutoff_report(
                self.config.cutoff_profile,
                self.geometry().dim,
                2 * self.config.cutoff_grid,
                self.execution(),
            )?;
            f.fit.value
        } else {
            self.fit(id, &self.config.plan.refined())?.fit.value
        };
        Ok(FitRow {
            estimate_id: id.to_string(),
            constant: coarse.fit.name.label().to_string(),
            geometry: self.geometry().key(),
            value: coarse.fit.value,
            binding: coarse.fit.binding,
            plan_hash: self.config.plan_hash(),
            value_refined: refined,
        })
    }

    /// Run every configured estimate, collecting errors instead of stopping.
    pub fn verify(&self) -> Report {
        let mut report = Report {
            artifact_version: ARTIFACT_VERSION.to_string(),
            geometry: self.geometry().key(),
            plan_hash: self.config.plan_hash(),
            results: Vec::new(),
            errors: Vec::new(),
        };
        for id in &self.config.estimates {
            match self.run(id) {
                Ok(r) => report.results.extend(r),
                Err(e) => report.errors.push(SuiteError {
                    estimate_id: id.clone(),
                    message: e.to_string(),
                    kind: error_kind(&e).to_string(),
                }),
            }
        }
        report
    }

    /// Sharpness scan of the kernel Laplacian bound with the assembled constant.
    pub fn sharpness(&self) -> Result<SharpnessScan> {
        let plan = self.kernel_plan(&self.config.plan);
        let fitted = kernel_laplacian_bound(&self.kernel_model()?, plan.delta, &plan)?;
        let c = fitted.report.diagnostics["assembled_C"];
        let cfg = &self.config;
        let times = SamplingPlan::new(cfg.sharpness_t_min, cfg.sharpness_t_max, cfg.sharpness_per_decade, 0.0, 1.0)
            .times()
            .into_iter()
            .rev()
            .collect::<Vec<_>>();
        sharpness_scan(self.geometry(), cfg.sharpness_distance, cfg.plan.delta, &times, c)
    }
}
