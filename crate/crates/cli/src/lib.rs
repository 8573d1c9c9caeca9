//! Experiment harness: one flat JSON config per run, structured JSON
//! plus a flat CSV of headline numbers per record.
//!
//! Reruns of an identical `(config, seed)` reproduce every non-timing
//! field byte for byte; output files are written atomically (tmp +
//! rename).

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use starball::gap::{ConstantsConfig, PipelineBudgets, PipelineParams};
use starball::geometry::{estimate_constants, quasi_triangle_check, BodySpec};
use starball::mc;
use starball::smallball::{self, SystemSpec};
use starball::{esseen, gap, hyperplane, Error as CoreError, NoiseModel, VectorSystem};

/// Failures the harness distinguishes by exit code.
#[derive(Debug)]
pub enum HarnessError {
    /// Bad or missing configuration (exit code 1). Carries a pointer to
    /// the offending field.
    Validation(String),
    /// A module ran out of its enumeration/grid/sample budget (exit 2).
    Budget(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Validation(m) => write!(f, "validation error: {m}"),
            HarnessError::Budget(m) => write!(f, "budget exhausted: {m}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<CoreError> for HarnessError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::BudgetExceeded(m) => HarnessError::Budget(m),
            other => HarnessError::Validation(other.to_string()),
        }
    }
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Budget(_) => 2,
        }
    }
}

fn missing(field: &str, experiment: &str) -> HarnessError {
    HarnessError::Validation(format!("config field `{field}` is required for {experiment}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SharpLo,
    EsseenAudit,
    LemmaTv,
    Hyperplane,
    GapPipeline,
    BodyConstants,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SharpLo => "sharp-lo",
            ExperimentKind::EsseenAudit => "esseen-audit",
            ExperimentKind::LemmaTv => "lemma-tv",
            ExperimentKind::Hyperplane => "hyperplane",
            ExperimentKind::GapPipeline => "gap-pipeline",
            ExperimentKind::BodyConstants => "body-constants",
        }
    }
}

/// Random-system generator: gaussian directions scaled by `scale`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub body: BodySpec,
    pub noise: NoiseModel,
    pub seed: u64,
}

fn default_scale() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<(VectorSystem, NoiseModel), HarnessError> {
        let body = self.body.build()?;
        let mut rng = mc::block_rng(self.seed, 0);
        let vectors: Vec<Vec<f64>> = (0..self.n)
            .map(|_| {
                mc::gaussian_vec(&mut rng, self.d)
                    .into_iter()
                    .map(|c| c * self.scale)
                    .collect()
            })
            .collect();
        let system = VectorSystem::new(vectors, self.r, body)?;
        Ok((system, self.noise.clone()))
    }
}

/// One flat config document per run. Unknown fields are rejected so
/// misspelled keys fail loudly instead of falling back to defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,

    // sharp-lo
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,

    // body-constants
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<BodySpec>,

    // a system, given explicitly or generated
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,

    // hyperplane
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,

    // lemma-tv grids
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ws: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,

    // esseen-audit extras
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub euclidean_epsilon: Option<f64>,

    // gap-pipeline
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_prime: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<PipelineBudgets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsConfig>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_samples() -> usize {
    100_000
}

fn default_quad_points() -> usize {
    1 << 17
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Validation(e.to_string()))
    }

    fn build_system(&self) -> Result<(VectorSystem, NoiseModel), HarnessError> {
        match (&self.system, &self.generator) {
            (Some(spec), _) => {
                if spec.vectors.is_empty() {
                    return Err(HarnessError::Validation(
                        "config field `system.vectors` must be nonempty".into(),
                    ));
                }
                Ok(spec.build()?)
            }
            (None, Some(generator)) => generator.build(),
            (None, None) => Err(missing("system (or generator)", self.experiment.name())),
        }
    }
}

/// Reproducible record of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub outputs: serde_json::Value,
    /// `(name, value)` pairs, one CSV column each, traceable to
    /// `outputs`.
    pub headline: Vec<(String, f64)>,
    pub version: String,
    /// Excluded from determinism comparisons.
    pub wall_time_ms: u128,
}

impl RunRecord {
    /// CSV with the fixed per-experiment header and one data row.
    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.headline.iter().map(|(k, _)| k.as_str()).collect();
        let row: Vec<String> = self.headline.iter().map(|(_, v)| format!("{v}")).collect();
        format!("{}\n{}\n", header.join(","), row.join(","))
    }

    /// JSON with the timing field zeroed, for determinism comparisons.
    pub fn normalized_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("record serializes");
        v["wall_time_ms"] = json!(0);
        v
    }
}

/// Dispatch one experiment.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord, HarnessError> {
    let start = Instant::now();
    let (outputs, headline) = match config.experiment {
        ExperimentKind::SharpLo => run_sharp_lo(config)?,
        ExperimentKind::EsseenAudit => run_esseen_audit(config)?,
        ExperimentKind::LemmaTv => run_lemma_tv(config)?,
        ExperimentKind::Hyperplane => run_hyperplane(config)?,
        ExperimentKind::GapPipeline => run_gap_pipeline(config)?,
        ExperimentKind::BodyConstants => run_body_constants(config)?,
    };
    Ok(RunRecord {
        experiment: config.experiment.name().to_string(),
        config: config.clone(),
        seed: config.seed,
        outputs,
        headline,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: start.elapsed().as_millis(),
    })
}

/// Run many configs independently; one failure does not abort the rest.
pub fn batch(configs: &[ExperimentConfig]) -> Vec<Result<RunRecord, HarnessError>> {
    configs.iter().map(run).collect()
}

type Outputs = (serde_json::Value, Vec<(String, f64)>);

fn run_sharp_lo(config: &ExperimentConfig) -> Result<Outputs, HarnessError> {
    let n = config.n.ok_or_else(|| missing("n", "sharp-lo"))?;
    let r = config.r.ok_or_else(|| missing("R", "sharp-lo"))?;
    let report = smallball::sharp_lo_report(n, r)?;
    let headline = vec![
        ("rho".to_string(), report.rho_canonical),
        ("bound".to_string(), report.bound),
        ("ratio".to_string(), report.ratio),
    ];
    Ok((serde_json::to_value(&report).unwrap(), headline))
}

fn run_body_constants(config: &ExperimentConfig) -> Result<Outputs, HarnessError> {
    let spec = config
        .body
        .as_ref()
        .ok_or_else(|| missing("body", "body-constants"))?;
    let body = spec.build()?;
    let constants = estimate_constants(&body, config.samples, config.seed)?;
    let worst_ratio = quasi_triangle_check(&body, 10_000, mc::derive_seed(config.seed, 77))?;
    let outputs = json!({
        "constants": constants,
        "quasi_triangle": {
            "max_observed_ratio": worst_ratio,
            "quasi_constant": body.quasi_constant(),
            "trials": 10_000,
        },
    });
    let headline = vec![
        ("mu".to_string(), constants.mu),
        ("gamma".to_string(), constants.gamma),
        ("kappa".to_string(), constants.kappa),
        ("se_mu".to_string(), constants.se_mu),
        ("se_gamma".to_string(), constants.se_gamma),
        ("quasi_triangle_ratio".to_string(), worst_ratio),
    ];
    Ok((outputs, headline))
}

fn run_esseen_audit(config: &ExperimentConfig) -> Result<Outputs, HarnessError> {
    let (system, model) = config.build_system()?;
    let samples = config.samples;
    let constants = estimate_constants(system.body(), samples.max(100_000), config.seed)?;
    let bound_k = esseen::esseen_bound(&system, &model, &constants, samples, config.seed)?;
    let bound_eta =
        esseen::esseen_eta_bound(&system, &model, &constants, samples, mc::derive_seed(config.seed, 1))?;
    let rho = smallball::atoms(&system, &model)
        .and_then(|dist| smallball::rho_exact(&dist, system.body(), system.r()))
        .ok();
    let euclidean = match config.euclidean_epsilon {
        Some(eps) => Some(esseen::esseen_euclidean_bound(
            &system,
            &model,
            eps,
            1.0,
            samples,
            mc::derive_seed(config.seed, 2),
        )?),
        None => None,
    };
    let rho_value = rho.as_ref().map(|r| r.rho).unwrap_or(f64::NAN);
    let mut headline = vec![
        ("rho".to_string(), rho_value),
        ("bound_k".to_string(), bound_k.value),
        ("bound_k_se".to_string(), bound_k.std_error),
        ("bound_eta".to_string(), bound_eta.value),
        ("bound_eta_se".to_string(), bound_eta.std_error),
        ("kappa".to_string(), constants.kappa),
    ];
    if rho_value.is_finite() {
        headline.push(("slack_k".to_string(), bound_k.value - rho_value));
    }
    let outputs = json!({
        "constants": constants,
        "rho": rho,
        "bound_k": bound_k,
        "bound_eta": bound_eta,
        "euclidean": euclidean,
    });
    Ok((outputs, headline))
}

fn run_lemma_tv(config: &ExperimentConfig) -> Result<Outputs, HarnessError> {
    let lambdas = config
        .lambdas
        .clone()
        .unwrap_or_else(|| vec![0.01, 0.1, 1.0, 10.0, 100.0]);
    let ws = config.ws.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    let alphas = config
        .alphas
        .clone()
        .unwrap_or_else(|| vec![0.0, 1.0, PI / 3.0]);
    let mut rows = Vec::new();
    let mut all_hold = true;
    let mut min_margin = f64::INFINITY;
    for &lambda in &lambdas {
        for &w in &ws {
            for &alpha in &alphas {
                let check = esseen::lemma_tv_check(lambda, w, alpha, config.quad_points)?;
                all_hold &= check.holds;
                min_margin = min_margin.min(check.rhs - check.lhs);
                rows.push(check);
            }
        }
    }
    let headline = vec![
        ("cells".to_string(), rows.len() as f64),
        ("all_hold".to_string(), f64::from(all_hold as u8)),
        ("min_margin".to_string(), min_margin),
    ];
    Ok((json!({ "rows": rows }), headline))
}

fn run_hyperplane(config: &ExperimentConfig) -> Result<Outputs, HarnessError> {
    let (system, model) = config.build_system()?;
    let k = config.k.unwrap_or(0);
    let report = hyperplane::best_hyperplane(system.vectors(), k, system.r())?;
    let basis = hyperplane::extract_separated_basis(system.vectors(), system.r());
    let check = hyperplane::verify_integral_bound(&system, &model, k, config.samples, config.seed)?;
    let headline = vec![
        ("objective".to_string(), report.objective),
        ("near_count".to_string(), report.near_count as f64),
        ("basis_depth".to_string(), basis.achieved_depth as f64),
        ("i_estimate".to_string(), check.i_estimate),
        ("bound_rhs".to_string(), check.rhs),
        ("hypothesis".to_string(), f64::from(check.hypothesis_holds as u8)),
        ("inequality".to_string(), f64::from(check.inequality_holds as u8)),
    ];
    let outputs = json!({
        "best_hyperplane": report,
        "separated_basis": basis,
        "integral_bound_check": check,
    });
    Ok((outputs, headline))
}

fn run_gap_pipeline(config: &ExperimentConfig) -> Result<Outputs, HarnessError> {
    let (system, model) = config.build_system()?;
    let a_exponent = config.a_exponent.ok_or_else(|| missing("A", "gap-pipeline"))?;
    let epsilon = config.epsilon.ok_or_else(|| missing("epsilon", "gap-pipeline"))?;
    let n_prime = config.n_prime.ok_or_else(|| missing("n_prime", "gap-pipeline"))?;
    let mut params = PipelineParams::new(a_exponent, epsilon, n_prime);
    if let Some(n_grid) = config.n_grid {
        params.n_grid = n_grid;
    }
    if let Some(r_max) = config.r_max {
        params.r_max = r_max;
    }
    params.rho = config.rho;
    if let Some(budgets) = &config.budgets {
        params.budgets = budgets.clone();
    }
    if let Some(constants) = &config.constants {
        params.constants = constants.clone();
    }
    params.mc_samples = config.samples.max(100_000);
    let report = gap::approximation_pipeline(&system, &model, &params, config.seed)?;
    let v = &report.verification;
    let headline = vec![
        ("rho".to_string(), report.rho),
        ("m".to_string(), report.level_set.m as f64),
        ("k".to_string(), report.k_choice.k as f64),
        ("rank".to_string(), v.part1.rank as f64),
        ("cardinality".to_string(), v.part1.cardinality),
        ("part1_rank_holds".to_string(), f64::from(v.part1.rank_holds as u8)),
        ("part1_card_holds".to_string(), f64::from(v.part1.cardinality_holds as u8)),
        ("part2_holds".to_string(), f64::from(v.part2.holds as u8)),
        ("part3_holds".to_string(), f64::from(v.part3.holds as u8)),
        ("part4_holds".to_string(), f64::from(v.part4.holds as u8)),
        ("findings".to_string(), report.findings.len() as f64),
    ];
    Ok((serde_json::to_value(&report).unwrap(), headline))
}

/// Write the record as `<stem>.json` and `<stem>.csv` under `dir`,
/// atomically (tmp file + rename).
pub fn write_record(record: &RunRecord, dir: &Path, stem: &str) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join(format!("{stem}.json"));
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_tmp = dir.join(format!(".{stem}.json.tmp"));
    let csv_tmp = dir.join(format!(".{stem}.csv.tmp"));
    std::fs::write(&json_tmp, serde_json::to_string_pretty(record)?)?;
    std::fs::rename(&json_tmp, &json_path)?;
    std::fs::write(&csv_tmp, record.to_csv())?;
    std::fs::rename(&csv_tmp, &csv_path)?;
    Ok((json_path, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sharp_lo_config() -> ExperimentConfig {
        ExperimentConfig::from_json(r#"{"experiment":"sharp-lo","n":10,"R":0.5}"#).unwrap()
    }

    #[test]
    fn sharp_lo_headline_row() {
        let record = run(&sharp_lo_config()).unwrap();
        assert_eq!(record.headline[0], ("rho".to_string(), 0.24609375));
        assert_eq!(record.headline[1].1, 0.24609375);
        assert_eq!(record.headline[2].1, 1.0);
        let csv = record.to_csv();
        assert!(csv.starts_with("rho,bound,ratio\n"));
        assert!(csv.contains("0.24609375,0.24609375,1"));
    }

    #[test]
    fn validation_errors_point_at_fields() {
        let cfg = ExperimentConfig::from_json(r#"{"experiment":"sharp-lo"}"#).unwrap();
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err, HarnessError::Validation(ref m) if m.contains("`n`")));
        assert_eq!(err.exit_code(), 1);

        // empty vector list
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"hyperplane","system":{"vectors":[],"R":1.0,
                "body":{"kind":"lp","p":2.0,"d":2},"noise":{"kind":"bernoulli"}}}"#,
        )
        .unwrap();
        let err = run(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn budget_maps_to_exit_code_2() {
        // 30 bernoulli vectors: 2^30 assignments exceed the atom budget,
        // and no rho is supplied.
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"gap-pipeline","A":1.0,"epsilon":0.5,"n_prime":5,
                "generator":{"n":30,"d":1,"R":1.0,"seed":1,
                   "body":{"kind":"lp","p":2.0,"d":1},"noise":{"kind":"bernoulli"}}}"#,
        )
        .unwrap();
        let err = run(&cfg).unwrap_err();
        assert!(matches!(err, HarnessError::Budget(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn records_are_deterministic() {
        let a = run(&sharp_lo_config()).unwrap();
        let b = run(&sharp_lo_config()).unwrap();
        assert_eq!(a.normalized_json(), b.normalized_json());
    }

    #[test]
    fn batch_isolates_failures() {
        let good = sharp_lo_config();
        let bad = ExperimentConfig::from_json(r#"{"experiment":"sharp-lo","n":0,"R":1.0}"#).unwrap();
        let results = batch(&[good.clone(), bad, good]);
        assert_eq!(results.len(), 3);
        assert!(results[0].is_ok());
        assert!(results[1].is_err());
        assert!(results[2].is_ok());
        // duplicate configs give identical non-timing records
        let x = results[0].as_ref().unwrap().normalized_json();
        let y = results[2].as_ref().unwrap().normalized_json();
        assert_eq!(x, y);
    }

    #[test]
    fn lemma_tv_default_grid() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"lemma-tv","quad_points":131072}"#,
        )
        .unwrap();
        let record = run(&cfg).unwrap();
        assert_eq!(record.headline[0].1, 45.0);
        assert_eq!(record.headline[1].1, 1.0); // all_hold
    }

    #[test]
    fn body_constants_experiment() {
        let cfg = ExperimentConfig::from_json(
            r#"{"experiment":"body-constants","samples":200000,"seed":3,
                "body":{"kind":"lp","p":2.0,"d":2}}"#,
        )
        .unwrap();
        let record = run(&cfg).unwrap();
        let mu = record.headline.iter().find(|(k, _)| k == "mu").unwrap().1;
        assert!((mu - PI).abs() < 1e-12); // closed form for lp balls
    }
}
