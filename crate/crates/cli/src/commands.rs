use crate::config::{from_table, set_key, DetectorKind, FileConfig, Method, ModelName};
use crate::error::{CliError, Result};
use crate::output::{num, Report};
use dmc_cpns::cpnsdist::{exact_integral_pmf, ExactIntegralOptions};
use dmc_cpns::detector::{noise_pmf, AnalysisOptions, ThresholdResult};
use dmc_cpns::highrate::{cumulants, default_k_max};
use dmc_cpns::pmf::poisson_upper_index;
use dmc_cpns::simulate::{mc_run, pbs_run, BerEstimate, PbsConfig};
use dmc_cpns::{DetectorSpec, Error, LinkAnalysis, Pmf, SystemConfig};
use serde::Serialize;
use toml::Value;

/// Largest event count the exact-integral oracle is asked to handle.
const EXACT_EVENT_LIMIT: usize = 8;

#[derive(Serialize)]
pub struct NamedPmf {
    pub model: ModelName,
    pub masses: Vec<f64>,
    pub tail_bound: f64,
}

#[derive(Serialize)]
pub struct DistOut {
    pub pmfs: Vec<NamedPmf>,
}

fn model_pmf(cfg: &FileConfig, model: ModelName) -> Result<Pmf> {
    if model != ModelName::ExactIntegral {
        let opts = AnalysisOptions {
            tail_tol: cfg.dist.tail_tol,
            ..AnalysisOptions::default()
        };
        return Ok(noise_pmf(&cfg.system_with(model)?, &opts)?);
    }
    let cpns = cfg.cpns()?;
    let opts = ExactIntegralOptions::default();
    let n_max = poisson_upper_index(cpns.event_rate * cpns.window(), opts.event_tail_tol)?;
    if n_max > EXACT_EVENT_LIMIT {
        return Err(Error::Infeasible(format!(
            "the exact integral needs up to {n_max} events (limit {EXACT_EVENT_LIMIT}) at lambda_e K = {}",
            cpns.event_rate * cpns.window()
        ))
        .into());
    }
    let k_max = match cfg.dist.k_max {
        Some(k) => k,
        None => default_k_max(cumulants(&cpns)?),
    };
    Ok(exact_integral_pmf(&cpns, k_max, n_max, opts)?.order_statistics)
}

pub fn dist(cfg: &FileConfig) -> Result<Report<DistOut>> {
    let cfg = cfg.resolve()?;
    let models = if cfg.dist.models.is_empty() {
        vec![cfg.noise.model]
    } else {
        cfg.dist.models.clone()
    };
    let pmfs = models
        .iter()
        .map(|&m| model_pmf(&cfg, m))
        .collect::<Result<Vec<_>>>()?;
    let len = pmfs.iter().map(|p| p.k_max() + 1).max().unwrap_or(0);
    let rows = (0..len)
        .map(|k| std::iter::once(k.to_string()).chain(pmfs.iter().map(|p| num(p.mass(k)))).collect())
        .collect();
    let mut columns = vec!["k"];
    columns.extend(models.iter().map(|m| m.as_str()));
    let out = DistOut {
        pmfs: models
            .iter()
            .zip(pmfs)
            .map(|(&model, p)| NamedPmf {
                model,
                tail_bound: p.tail_bound(),
                masses: p.into_masses(),
            })
            .collect(),
    };
    Ok(Report {
        command: "dist",
        config: cfg,
        seed: None,
        columns,
        rows,
        result: out,
    })
}

#[derive(Serialize)]
pub struct Mtd {
    pub detector: DetectorSpec,
    pub ber: f64,
}

#[derive(Serialize)]
pub struct CurveOut {
    pub optimum: ThresholdResult,
    pub mtd: Mtd,
    pub curve: Vec<(usize, f64)>,
}

fn mtd(la: &LinkAnalysis) -> Mtd {
    let detector = la.decision_regions(la.k_max());
    Mtd {
        ber: la.ber_of(&detector),
        detector,
    }
}

pub fn ber_curve(cfg: &FileConfig) -> Result<Report<CurveOut>> {
    let cfg = cfg.resolve()?;
    let la = LinkAnalysis::new(&cfg.system()?)?;
    let zeta_max = cfg.detector.zeta_max.unwrap_or(la.k_max() + 1);
    let curve = la.ber_curve(zeta_max).samples;
    Ok(Report {
        command: "ber-curve",
        seed: None,
        columns: vec!["zeta", "ber"],
        rows: curve.iter().map(|(z, b)| vec![z.to_string(), num(*b)]).collect(),
        result: CurveOut {
            optimum: la.optimal_threshold(cfg.detector.search),
            mtd: mtd(&la),
            curve,
        },
        config: cfg,
    })
}

#[derive(Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub optimum: ThresholdResult,
    pub mtd: Mtd,
}

#[derive(Serialize)]
pub struct SweepOut {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
}

/// `base` with `key` set to `x`, as float or, failing that, integer.
fn with_value(base: &FileConfig, key: &str, x: f64) -> Result<FileConfig> {
    let mut last = None;
    let mut candidates = vec![Value::Float(x)];
    if x.fract() == 0.0 && x.abs() < 9e15 {
        candidates.push(Value::Integer(x as i64));
    }
    for v in candidates {
        let mut t = base.to_table();
        set_key(&mut t, key, v).map_err(|m| CliError::Override(key.into(), m))?;
        match from_table(t, || format!("sweep {key} = {x}")) {
            Ok(c) => return Ok(c),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one candidate"))
}

pub fn sweep(cfg: &FileConfig) -> Result<Report<SweepOut>> {
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section with parameter and values".into()))?;
    let mut points = Vec::new();
    for &v in &spec.values {
        let mut c = with_value(cfg, &spec.parameter, v)?;
        if spec.per_event_rate {
            c = with_value(&c, &spec.parameter, v / c.cpns.event_rate_per_s)?;
        }
        let la = LinkAnalysis::new(&c.resolve()?.system()?)?;
        points.push(SweepPoint {
            value: v,
            optimum: la.optimal_threshold(cfg.detector.search),
            mtd: mtd(&la),
        });
    }
    let rows = points
        .iter()
        .map(|p| {
            vec![
                num(p.value),
                p.optimum.zeta.to_string(),
                num(p.optimum.ber),
                p.optimum.unimodal.to_string(),
                p.mtd.detector.regions().to_string(),
                num(p.mtd.ber),
            ]
        })
        .collect();
    Ok(Report {
        command: "sweep",
        config: cfg.resolve()?,
        seed: None,
        columns: vec!["value", "zeta", "ber_std", "unimodal", "regions", "ber_mtd"],
        rows,
        result: SweepOut {
            parameter: spec.parameter,
            points,
        },
    })
}

#[derive(Serialize)]
pub struct SimOut {
    pub method: Method,
    pub detector: DetectorSpec,
    pub errors: u64,
    pub trials: u64,
    pub ber: f64,
    pub ci95: (f64, f64),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis_ber: Option<f64>,
}

/// Detector fixed before the run, with its analytical BER when computed.
fn choose_detector(cfg: &FileConfig, sys: &SystemConfig) -> Result<(DetectorSpec, Option<f64>)> {
    if let Some(z) = cfg.detector.zeta {
        return Ok((DetectorSpec::single(z), None));
    }
    let la = LinkAnalysis::new(sys)?;
    Ok(match cfg.detector.kind {
        DetectorKind::Std => {
            let o = la.optimal_threshold(cfg.detector.search);
            (DetectorSpec::single(o.zeta), Some(o.ber))
        }
        DetectorKind::Mtd => {
            let m = mtd(&la);
            (m.detector, Some(m.ber))
        }
    })
}

fn run_sim(cfg: &FileConfig, sys: &SystemConfig, det: &DetectorSpec) -> Result<BerEstimate> {
    let s = &cfg.simulate;
    Ok(match s.method {
        Method::Mc => mc_run(sys, s.n_bits, s.seed, det)?,
        Method::Pbs => {
            let mut p = PbsConfig::new(*sys, s.dt_s, s.n_bits, s.seed);
            p.mode = s.pbs_mode;
            p.retirement = s.retirement;
            p.population_cap = s.population_cap;
            if let Some(w) = s.warmup_slots {
                p.warmup_slots = w;
            }
            pbs_run(&p, det)?
        }
    })
}

pub fn simulate(cfg: &FileConfig) -> Result<Report<SimOut>> {
    let cfg = cfg.resolve()?;
    let sys = cfg.system()?;
    let (detector, analysis_ber) = choose_detector(&cfg, &sys)?;
    let est = run_sim(&cfg, &sys, &detector)?;
    let out = SimOut {
        method: cfg.simulate.method,
        detector,
        errors: est.errors,
        trials: est.trials,
        ber: est.ber,
        ci95: est.ci95,
        analysis_ber,
    };
    let row = vec![
        format!("{:?}", out.method).to_lowercase(),
        out.errors.to_string(),
        out.trials.to_string(),
        num(out.ber),
        num(out.ci95.0),
        num(out.ci95.1),
        out.analysis_ber.map(num).unwrap_or_default(),
    ];
    Ok(Report {
        command: "simulate",
        seed: Some(cfg.simulate.seed),
        config: cfg,
        columns: vec!["method", "errors", "trials", "ber", "ci_lo", "ci_hi", "analysis_ber"],
        rows: vec![row],
        result: out,
    })
}

#[derive(Serialize)]
pub struct CompareOut {
    pub analysis: ThresholdResult,
    pub baseline_mean: f64,
    pub baseline: ThresholdResult,
    /// True BER of the baseline's threshold on the CPNS channel.
    pub baseline_threshold_ber: f64,
    pub simulation: SimOut,
}

pub fn compare(cfg: &FileConfig) -> Result<Report<CompareOut>> {
    let cfg = cfg.resolve()?;
    let sys = cfg.system()?;
    let la = LinkAnalysis::new(&sys)?;
    let analysis = la.optimal_threshold(cfg.detector.search);
    let base_sys = cfg.system_with(ModelName::HomogeneousPoisson)?;
    let baseline = LinkAnalysis::new(&base_sys)?.optimal_threshold(cfg.detector.search);
    let baseline_mean = match base_sys.noise {
        dmc_cpns::NoiseModel::HomogeneousPoisson { mean } => mean,
        _ => unreachable!("baseline is homogeneous"),
    };
    let det = DetectorSpec::single(analysis.zeta);
    let est = run_sim(&cfg, &sys, &det)?;
    let out = CompareOut {
        analysis,
        baseline_mean,
        baseline_threshold_ber: la.ber(baseline.zeta),
        baseline,
        simulation: SimOut {
            method: cfg.simulate.method,
            detector: det,
            errors: est.errors,
            trials: est.trials,
            ber: est.ber,
            ci95: est.ci95,
            analysis_ber: Some(analysis.ber),
        },
    };
    let sim_label = format!("simulation_{:?}", out.simulation.method).to_lowercase();
    let rows = vec![
        vec!["analysis".into(), out.analysis.zeta.to_string(), num(out.analysis.ber), String::new(), String::new()],
        vec!["baseline".into(), out.baseline.zeta.to_string(), num(out.baseline.ber), String::new(), String::new()],
        vec![
            "baseline_threshold".into(),
            out.baseline.zeta.to_string(),
            num(out.baseline_threshold_ber),
            String::new(),
            String::new(),
        ],
        vec![
            sim_label,
            out.analysis.zeta.to_string(),
            num(est.ber),
            num(est.ci95.0),
            num(est.ci95.1),
        ],
    ];
    Ok(Report {
        command: "compare",
        seed: Some(cfg.simulate.seed),
        config: cfg,
        columns: vec!["label", "zeta", "ber", "ci_lo", "ci_hi"],
        rows,
        result: out,
    })
}
