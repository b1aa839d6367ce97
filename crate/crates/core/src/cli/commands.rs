use std::path::Path;

use serde_json::{json, Value};

use super::{
    AlphaArg, CertifyArgs, DataArgs, GenDataArgs, GridArgs, LandscapeArgs, NgdArgs, SaturationArgs,
    SourceArgs, TiltedArgs,
};
use crate::data::{
    dataset_to_csv_string, normalize_features, read_dataset_csv, sample_gmm, GmmSpec, GmmSpecJson,
    Preset,
};
use crate::error::{Error, Result};
use crate::information::{
    arimoto_cond_entropy, discrete_alpha_risk, min_alpha_risk, tilted_posterior, DiscreteJoint,
    Posterior,
};
use crate::loss::{check_radius, lambda_strong, lipschitz_c, lipschitz_l, Alpha};
use crate::ngd::{iteration_budget, ngd_run, projected_gd, trace_csv, NgdConfig, RiskObjective};
use crate::numerics::{min_eigen_sym, RngState, Vector};
use crate::risk::{fmt17, landscape_scan, saturation_sups, Dataset, GridSpec, MASK_SLACK};
use crate::slqc::{
    estimate_i, evolution_csv, evolve_bounds, sample_ball, strong_convexity_modulus, window_endpoint,
    EvolutionOptions, SlqcChecker, SlqcParams, SweepSummary,
};

const DEFAULT_SEED: u64 = 42;
const FIGURE_N: usize = 100_000;
const CERTIFY_N: usize = 5_000;
const DEFAULT_GRID_COUNT: usize = 41;
/// Bound checks in the saturation table allow this much rounding.
const BOUND_TOL: f64 = 1e-9;

// child streams of the command seed; the root stream samples the dataset
const THETA1_STREAM: u64 = 1;
const SWEEP_STREAM: u64 = 2;
const I_STREAM: u64 = 3;

const NORMALIZATION: &str = "features divided by the largest raw norm (global rescale into the unit ball)";

/// A file to be written under the output directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Output {
    fn text(name: String, s: String) -> Self {
        Output { name, bytes: s.into_bytes() }
    }

    fn json(name: String, v: &Value) -> Self {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        Output::text(name, s)
    }
}

struct Source {
    spec: GmmSpec<f64>,
    label: String,
    preset: Option<Preset>,
}

fn resolve_source(src: &SourceArgs, default_preset: Preset) -> Result<Source> {
    let given = [src.preset.is_some(), src.spec_file.is_some(), src.spec.is_some()];
    if given.iter().filter(|&&g| g).count() > 1 {
        return Err(Error::usage("give at most one of preset, spec_file and spec"));
    }
    let from_json = |j: &GmmSpecJson| GmmSpec::try_from(j);
    if let Some(path) = &src.spec_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let j: GmmSpecJson = serde_json::from_str(&text)
            .map_err(|e| Error::usage(format!("mixture file {}: {e}", path.display())))?;
        return Ok(Source {
            spec: from_json(&j)?,
            label: "custom".into(),
            preset: None,
        });
    }
    if let Some(j) = &src.spec {
        return Ok(Source {
            spec: from_json(j)?,
            label: "custom".into(),
            preset: None,
        });
    }
    let p = src.preset.unwrap_or(default_preset);
    Ok(Source {
        spec: p.spec(),
        label: p.name().into(),
        preset: Some(p),
    })
}

/// A dataset together with everything needed to regenerate it.
struct Loaded {
    data: Dataset<f64>,
    id: String,
    preset: Option<Preset>,
    seed: u64,
    meta: Vec<(String, String)>,
    description: Value,
}

fn load_data(args: &DataArgs, default_preset: Preset, default_n: usize) -> Result<Loaded> {
    let src = &args.source;
    let seed = src.seed.unwrap_or(DEFAULT_SEED);
    if let Some(path) = &args.data {
        if src.preset.is_some() || src.spec_file.is_some() || src.spec.is_some() || src.n.is_some() {
            return Err(Error::usage("--data excludes --preset, --spec-file, spec and --n"));
        }
        let data = read_dataset_csv(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into());
        let meta = vec![
            ("dataset".into(), id.clone()),
            ("source".into(), format!("file {}", path.display())),
            ("n".into(), data.len().to_string()),
            ("seed".into(), seed.to_string()),
        ];
        let description = json!({
            "id": id,
            "file": path.display().to_string(),
            "n": data.len(),
            "seed": seed,
        });
        return Ok(Loaded {
            data,
            id,
            preset: None,
            seed,
            meta,
            description,
        });
    }
    let source = resolve_source(src, default_preset)?;
    let n = src.n.unwrap_or(default_n);
    let raw = sample_gmm(&source.spec, n, &mut RngState::new(seed))?;
    let (data, record) = normalize_features(&raw)?;
    let id = format!("{}_n{n}_seed{seed}", source.label);
    let spec_json = source.spec.to_json();
    let mut meta = vec![
        ("dataset".into(), id.clone()),
        ("source".into(), source.label.clone()),
        ("n".into(), n.to_string()),
        ("seed".into(), seed.to_string()),
        ("scale".into(), fmt17(record.scale)),
        ("normalization".into(), NORMALIZATION.into()),
        ("gmm".into(), serde_json::to_string(&spec_json).expect("spec serializes")),
        ("risk".into(), format!("empirical mean over {n} seeded samples")),
    ];
    let note = source.preset.and_then(Preset::note);
    if let Some(note) = note {
        meta.push(("note".into(), note.into()));
    }
    let description = json!({
        "id": id,
        "source": source.label,
        "n": n,
        "seed": seed,
        "scale": record.scale,
        "normalization": NORMALIZATION,
        "gmm": spec_json,
        "note": note,
    });
    Ok(Loaded {
        data,
        id,
        preset: source.preset,
        seed,
        meta,
        description,
    })
}

fn radius(r: Option<f64>, preset: Option<Preset>) -> Result<f64> {
    let r = r.unwrap_or_else(|| preset.map_or(5.0, Preset::default_radius));
    check_radius(r)?;
    Ok(r)
}

fn grid(args: &GridArgs, r: f64) -> Result<GridSpec<f64>> {
    let min = args.grid_min.unwrap_or(-r);
    let max = args.grid_max.unwrap_or(r);
    let count = args.grid_count.unwrap_or(DEFAULT_GRID_COUNT);
    GridSpec::square(2, min, max, count, (!args.no_mask).then_some(r))
}

fn require_2d(data: &Dataset<f64>) -> Result<()> {
    if data.dim() != 2 {
        return Err(Error::usage(format!(
            "grid output needs 2-D features, the dataset has dimension {}",
            data.dim()
        )));
    }
    Ok(())
}

fn alphas_or(list: &Option<Vec<AlphaArg>>, default: Vec<Alpha<f64>>) -> Result<Vec<Alpha<f64>>> {
    let out: Vec<Alpha<f64>> = match list {
        Some(l) => l.iter().map(|a| a.0).collect(),
        None => default,
    };
    if out.is_empty() {
        return Err(Error::usage("alpha list is empty"));
    }
    Ok(out)
}

fn point(v: &[f64], dim: usize, r: f64, what: &str) -> Result<Vector<f64>> {
    if v.len() != dim {
        return Err(Error::usage(format!("{what} has {} entries, the data has dimension {dim}", v.len())));
    }
    let p = Vector::from_slice(v)?;
    if p.norm() > r + MASK_SLACK {
        return Err(Error::usage(format!("{what} has norm {}, outside the ball of radius {r}", p.norm())));
    }
    Ok(p)
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::usage(format!("{what} must be positive and finite, got {v}")))
    }
}

/// The given kappa, else `C_{r,α}`, which is only a certified constant for `α <= 1`.
fn kappa_for(alpha: Alpha<f64>, r: f64, given: Option<f64>) -> Result<f64> {
    match given {
        Some(k) => positive(k, "kappa"),
        None if alpha.at_most_one() => lipschitz_c(alpha, r),
        None => Err(Error::usage(format!(
            "no certified default kappa for alpha = {alpha} > 1; pass --kappa"
        ))),
    }
}

fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn alpha_json(a: Alpha<f64>) -> Value {
    match a {
        Alpha::Finite(v) => json!(v),
        Alpha::Infinity => json!("inf"),
    }
}

pub fn cmd_gen_data(args: &GenDataArgs) -> Result<Vec<Output>> {
    let data_args = DataArgs {
        data: None,
        source: args.source.clone(),
    };
    let loaded = load_data(&data_args, Preset::Fig2, FIGURE_N)?;
    let name = args.name.clone().unwrap_or_else(|| loaded.id.clone());
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(Error::usage(format!("output name {name:?} must be a plain file stem")));
    }
    let mut sidecar = loaded.description.clone();
    sidecar["csv"] = json!(format!("{name}.csv"));
    Ok(vec![
        Output::text(format!("{name}.csv"), dataset_to_csv_string(&loaded.data)),
        Output::json(format!("{name}.json"), &sidecar),
    ])
}

pub fn cmd_landscape(args: &LandscapeArgs) -> Result<Vec<Output>> {
    let loaded = load_data(&args.data, Preset::Fig1, FIGURE_N)?;
    require_2d(&loaded.data)?;
    let r = radius(args.r, loaded.preset)?;
    let g = grid(&args.grid, r)?;
    let default = loaded.preset.map_or_else(|| vec![Alpha::one()], Preset::figure_alphas);
    let alphas = alphas_or(&args.alphas, default)?;
    alphas
        .into_iter()
        .map(|alpha| {
            let mut table = landscape_scan(alpha, &g, &loaded.data)?;
            table.metadata = loaded.meta.clone();
            let axis = g.axes()[0];
            table.metadata.push((
                "grid".into(),
                format!("{}x{} over [{}, {}]^2", axis.count, axis.count, axis.min, axis.max),
            ));
            Ok(Output::text(
                format!("landscape_{}_alpha{alpha}.csv", loaded.id),
                table.to_csv_string(),
            ))
        })
        .collect()
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<Vec<Output>> {
    let alpha = args.alpha.map_or(Alpha::one(), |a| a.0);
    let epsilon0 = positive(args.epsilon0.unwrap_or(0.4), "epsilon0")?;
    let sweep = args.sweep.unwrap_or(1000);
    let i_budget = args.i_budget.unwrap_or(10_000);
    if i_budget == 0 {
        return Err(Error::usage("--i-budget must be at least 1"));
    }
    let safety = args.safety_factor.unwrap_or(1.0);
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::usage(format!("--safety-factor must lie in (0, 1], got {safety}")));
    }
    let ref_steps = args.ref_steps.unwrap_or(20_000);
    let ref_step = positive(args.ref_step.unwrap_or(0.1), "ref_step")?;
    if let Some(k) = args.kappa {
        positive(k, "kappa")?;
    }

    let loaded = load_data(&args.data, Preset::Fig2, CERTIFY_N)?;
    let data = &loaded.data;
    let r = radius(args.r, loaded.preset)?;
    let d = data.dim();
    let mut notes: Vec<String> = vec![
        "all risks are empirical means over the dataset; population quantities are not computed".into(),
    ];

    let sigma_hat = data.second_moment();
    let lmin = min_eigen_sym(&sigma_hat)?;
    let strong = if alpha.at_most_one() {
        json!({
            "lambda": lambda_strong(alpha, r)?,
            "modulus": strong_convexity_modulus(alpha, r, &sigma_hat)?,
        })
    } else {
        json!({ "skipped": format!("strong convexity is certified only for alpha <= 1, got {alpha}") })
    };
    let kappa = kappa_for(alpha, r, args.kappa)?;
    let c = if alpha.at_most_one() {
        json!(lipschitz_c(alpha, r)?)
    } else {
        json!({ "skipped": format!("the Lipschitz constant C is certified only for alpha <= 1, got {alpha}") })
    };
    let objective = RiskObjective { alpha, data };

    let (theta0, theta0_source) = match &args.theta0 {
        Some(v) => (point(v, d, r, "theta0")?, "given".to_string()),
        None => {
            let (t, _) = projected_gd(&objective, &Vector::zeros(d), ref_step, ref_steps, r)?;
            (t, format!("projected gradient descent, {ref_steps} steps of size {ref_step} from 0"))
        }
    };
    let params = SlqcParams::new(epsilon0, kappa, theta0.clone())?;
    let checker = SlqcChecker::new(alpha, params.clone(), data, r)?;
    let root = RngState::new(loaded.seed);
    let thetas = sample_ball(&mut root.child(SWEEP_STREAM), sweep, d, r);
    let verdicts = checker.check_all(&thetas)?;
    let summary = SweepSummary::from_verdicts(&verdicts);

    let i_est = estimate_i(alpha, epsilon0, r, &theta0, data, i_budget, &root.child(I_STREAM))?;
    notes.push("estimated I is an upper estimate of the gradient infimum, from the empirical risk".into());

    let mut outputs = Vec::new();
    let evolution = match alpha {
        Alpha::Finite(a0) if a0 >= 1.0 && i_est.value.is_infinite() && !args.accept_unbounded => json!({
            "skipped": format!(
                "no sampled point has a risk gap above epsilon0 = {epsilon0}, so I is the empty-set \
                 value inf; pass --accept-unbounded to tabulate the unbounded window"
            ),
        }),
        Alpha::Finite(a0) if a0 >= 1.0 => {
            let i_eff = i_est.value * safety;
            let end = window_endpoint(a0, epsilon0, kappa, r, i_eff);
            let alphas = match &args.evolution_alphas {
                Some(l) => l.iter().map(|a| a.0).collect(),
                None => {
                    let step = if end.is_finite() { end / 5.0 } else { 0.1 };
                    (0..=10).map(|k| Alpha::Finite(a0 + step * k as f64)).collect::<Vec<_>>()
                }
            };
            let opts = EvolutionOptions {
                safety_factor: safety,
                accept_unbounded: args.accept_unbounded,
            };
            let rows = evolve_bounds(alpha, epsilon0, kappa, r, i_est.value, &alphas, opts)?;
            outputs.push(Output::text(
                format!("evolution_{}_alpha{alpha}.csv", loaded.id),
                evolution_csv(&rows),
            ));
            json!({
                "alpha0": a0,
                "kappa0": kappa,
                "window_endpoint": json_f64(end),
                "rows": rows.iter().map(|row| json!({
                    "alpha": alpha_json(row.alpha),
                    "epsilon": row.epsilon,
                    "rho": row.rho,
                    "in_window": row.in_window,
                })).collect::<Vec<_>>(),
            })
        }
        _ => json!({ "skipped": format!("the evolution bound needs a finite alpha0 >= 1, got {alpha}") }),
    };

    let mut sweep_json = json!({
        "epsilon": epsilon0,
        "kappa": kappa,
        "rho": params.rho(),
        "theta0": theta0.as_slice(),
        "theta0_source": theta0_source,
        "summary": summary,
    });
    if args.points {
        sweep_json["points"] = verdicts
            .iter()
            .map(|v| {
                json!({
                    "theta": v.point.as_slice(),
                    "verdict": v.satisfied_by,
                    "value_gap": v.diagnostics.value_gap,
                    "inner": v.diagnostics.inner,
                    "rho_grad_norm": v.diagnostics.rho_grad_norm,
                    "interior": v.diagnostics.interior,
                })
            })
            .collect();
    }
    let report = json!({
        "alpha": alpha_json(alpha),
        "r": r,
        "epsilon0": epsilon0,
        "dataset": loaded.description,
        "sigma_hat": sigma_hat.rows(),
        "sigma_hat_min_eigenvalue": lmin,
        "strong_convexity": strong,
        "lipschitz_c": c,
        "estimated_i_upper": {
            "value": json_f64(i_est.value),
            "qualifying": i_est.qualifying,
            "budget": i_est.budget,
            "safety_factor": safety,
        },
        "evolution": evolution,
        "slqc_sweep": sweep_json,
        "notes": notes,
    });
    outputs.insert(0, Output::json(format!("certify_{}_alpha{alpha}.json", loaded.id), &report));
    Ok(outputs)
}

pub fn cmd_ngd(args: &NgdArgs) -> Result<Vec<Output>> {
    let alpha = args.alpha.map_or(Alpha::one(), |a| a.0);
    let epsilon = positive(args.epsilon.unwrap_or(0.05), "epsilon")?;
    if let Some(e) = args.eta {
        positive(e, "eta")?;
    }
    if let Some(k) = args.kappa {
        positive(k, "kappa")?;
    }
    if args.iters == Some(0) {
        return Err(Error::usage("--iters must be at least 1"));
    }
    let ref_steps = args.ref_steps.unwrap_or(100_000);
    let ref_step = positive(args.ref_step.unwrap_or(0.1), "ref_step")?;

    let loaded = load_data(&args.data, Preset::Fig2, CERTIFY_N)?;
    let data = &loaded.data;
    let r = radius(args.r, loaded.preset)?;
    let d = data.dim();
    let kappa = kappa_for(alpha, r, args.kappa)?;
    let eta = args.eta.unwrap_or(epsilon / kappa);
    let theta1 = match &args.theta1 {
        Some(v) => point(v, d, r, "theta1")?,
        None => RngState::new(loaded.seed).child(THETA1_STREAM).uniform_in_ball(d, r),
    };
    let objective = RiskObjective { alpha, data };
    let (reference, ref_value) = projected_gd(&objective, &Vector::zeros(d), ref_step, ref_steps, r)?;
    let dist = theta1.distance(&reference);
    let budget = iteration_budget(epsilon, kappa, dist)?;
    let iters = args.iters.unwrap_or(budget);
    let config = NgdConfig::new(eta, iters, Some(r), args.trace)?;
    let res = ngd_run(&objective, &theta1, &config)?;
    let gap = res.best_value - ref_value;

    let summary = json!({
        "alpha": alpha_json(alpha),
        "r": r,
        "epsilon": epsilon,
        "kappa": kappa,
        "eta": eta,
        "iterations": iters,
        "budget": budget,
        "theta1": theta1.as_slice(),
        "reference": {
            "theta": reference.as_slice(),
            "value": ref_value,
            "steps": ref_steps,
            "step": ref_step,
            "note": "best point of projected gradient descent within the ball of radius r, standing in for the global minimizer",
        },
        "best_theta": res.best_theta.as_slice(),
        "best_value": res.best_value,
        "best_index": res.best_index,
        "final_theta": res.final_theta.as_slice(),
        "stop_reason": res.stop_reason.to_string(),
        "gap": gap,
        "gap_within_epsilon": gap <= epsilon,
        "dataset": loaded.description,
    });
    let mut out = vec![Output::json(format!("ngd_{}_alpha{alpha}.json", loaded.id), &summary)];
    if let Some(trace) = &res.trace {
        out.push(Output::text(format!("ngd_trace_{}_alpha{alpha}.csv", loaded.id), trace_csv(trace)));
    }
    Ok(out)
}

pub fn cmd_saturation(args: &SaturationArgs) -> Result<Vec<Output>> {
    let default = vec![1.0, 2.0, 4.0, 10.0]
        .into_iter()
        .map(Alpha::Finite)
        .chain([Alpha::Infinity])
        .collect();
    let alphas = alphas_or(&args.alphas, default)?;
    if let Some(a) = alphas.iter().find(|a| !a.is_infinite() && a.value() < 1.0) {
        return Err(Error::usage(format!("saturation orders must lie in [1, inf], got {a}")));
    }
    let loaded = load_data(&args.data, Preset::Fig3, FIGURE_N)?;
    require_2d(&loaded.data)?;
    let r = radius(args.r, loaded.preset)?;
    let g = grid(&args.grid, r)?;
    let sups = saturation_sups(Alpha::Infinity, &alphas, &g, &loaded.data)?;
    let l = lipschitz_l(r);
    let mut s = String::new();
    s.push_str("# reference=inf\n");
    s.push_str(&format!("# r={r}\n# lipschitz_l={}\n", fmt17(l)));
    for (k, v) in &loaded.meta {
        s.push_str(&format!("# {k}={v}\n"));
    }
    let axis = g.axes()[0];
    s.push_str(&format!("# grid={}x{} over [{}, {}]^2\n", axis.count, axis.count, axis.min, axis.max));
    s.push_str("alpha,sup_distance,bound,pass\n");
    for (alpha, sup) in alphas.iter().zip(&sups) {
        let bound = l * alpha.reciprocal();
        let pass = *sup <= bound + BOUND_TOL;
        s.push_str(&format!("{alpha},{},{},{pass}\n", fmt17(*sup), fmt17(bound)));
    }
    Ok(vec![Output::text(format!("saturation_{}.csv", loaded.id), s)])
}

pub fn cmd_tilted(args: &TiltedArgs) -> Result<Vec<Output>> {
    let path = args
        .joint
        .as_deref()
        .ok_or_else(|| Error::usage("--joint is required"))?;
    let alphas = alphas_or(
        &args.alphas,
        vec![Alpha::Finite(0.5), Alpha::one(), Alpha::Finite(2.0), Alpha::Infinity],
    )?;
    let joint = DiscreteJoint::<f64>::read_csv(path)?;
    let posterior = args.posterior.as_deref().map(Posterior::<f64>::read_csv).transpose()?;
    let rows_of = |x: usize| joint.row(x).to_vec();
    let results = alphas
        .iter()
        .map(|&alpha| {
            let t = tilted_posterior(&joint, alpha);
            let scored = posterior
                .as_ref()
                .map(|q| discrete_alpha_risk(&joint, q, alpha))
                .transpose()?;
            Ok(json!({
                "alpha": alpha_json(alpha),
                "arimoto_entropy": json_f64(arimoto_cond_entropy(&joint, alpha)),
                "min_risk": json_f64(min_alpha_risk(&joint, alpha)),
                "tilted_posterior": t.rows(),
                "risk_at_tilted": json_f64(discrete_alpha_risk(&joint, &t, alpha)?),
                "posterior_risk": scored.map(json_f64),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let undefined = tilted_posterior(&joint, Alpha::one()).undefined_rows().to_vec();
    let report = json!({
        "joint": (0..joint.nx()).map(rows_of).collect::<Vec<_>>(),
        "undefined_rows": undefined,
        "units": "nats",
        "results": results,
    });
    Ok(vec![Output::json(format!("tilted_{}.json", stem(path)), &report)])
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "joint".into())
}
