use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sampler_core::analysis::{random_polynomial, AnalyticFunction, SpaceParams};
use sampler_core::bounds::{bound_report, calibrate, BoundConfig, Experiment, REFERENCE_R0};
use sampler_core::fock::{default_truncation, fock_covered, fock_optimal_constant_p2, fock_overlap};
use sampler_core::geometry::phb_double;
use sampler_core::region::{builtin_region, density as region_density, density_at, Region};
use sampler_core::remez::fit_remez_constant;
use sampler_core::sampling::{
    classify, extremal_search, local_masses, measured_overlaps, optimal_constant_p2, verify_with_masses, SamplingResult,
};
use sampler_core::{BoundConfig64, Point64};

use crate::output::{Artifacts, Table, SCHEMA_VERSION};
use crate::{Knobs, ReportArgs};

pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: "io",
            message: message.into(),
        }
    }

    pub fn csv(e: csv::Error) -> Self {
        Self::io(e.to_string())
    }
}

impl From<sampler_core::Error> for CliError {
    fn from(e: sampler_core::Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

type Res<T> = Result<T, CliError>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn load_region(spec: &str) -> Res<Region<f64>> {
    let path = Path::new(spec);
    if path.is_file() {
        Ok(Region::from_json_str(&read(path)?)?)
    } else {
        Ok(builtin_region(spec)?)
    }
}

fn region_of(k: &Knobs) -> Res<Region<f64>> {
    load_region(k.region.as_deref().ok_or_else(|| CliError::usage("--region is required"))?)
}

fn bound_config(path: Option<&Path>) -> Res<BoundConfig64> {
    match path {
        Some(p) => Ok(BoundConfig::from_json_str(&read(p)?)?),
        None => Ok(BoundConfig::default()),
    }
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> Res<T> {
    v.ok_or_else(|| CliError::usage(format!("--{flag} is required")))
}

fn single_s(k: &Knobs) -> Res<Option<f64>> {
    match k.s.as_slice() {
        [] => Ok(None),
        [s] => Ok(Some(*s)),
        _ => Err(CliError::usage("--s takes a single value here")),
    }
}

fn envelope(command: &str, knobs: Value, cfg: &BoundConfig64, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "knobs": knobs,
        "bound_config": cfg,
        "result": result,
    })
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn density(k: &Knobs) -> Res<Artifacts> {
    let region = region_of(k)?;
    let r = required(k.r, "r")?;
    let resolution = k.resolution.unwrap_or(64);
    let cfg = bound_config(k.bound_config.as_deref())?;
    let report = region_density(&region, r, resolution)?;
    let center = density_at(&region, Point64::new(0.0, 0.0), r);
    let mut table = Table::new(vec![
        "region",
        "r",
        "gamma_hat",
        "argmin_re",
        "argmin_im",
        "grid_resolution",
        "center_ratio",
    ]);
    table.push(vec![
        region.label.clone(),
        fmt(r),
        fmt(report.gamma_hat),
        fmt(report.argmin_center.re),
        fmt(report.argmin_center.im),
        report.grid_resolution.to_string(),
        fmt(center),
    ]);
    let knobs = json!({ "region": region.label, "r": r, "resolution": resolution });
    let result = json!({ "density": report, "center_ratio": center, "gamma_is_grid_upper_bound": true });
    Ok(Artifacts {
        json: envelope("density", knobs, &cfg, result),
        csv: Some(table),
        out: k.out.clone(),
    })
}

fn measured_constant(
    region: &Region<f64>,
    degree: usize,
    params: SpaceParams<f64>,
    restarts: usize,
    seed: u64,
) -> Res<SamplingResult<f64>> {
    if params.p == 2.0 {
        Ok(optimal_constant_p2(region, degree, params.alpha)?)
    } else {
        Ok(extremal_search(region, degree, params, restarts, seed)?)
    }
}

pub fn constant(k: &Knobs) -> Res<Artifacts> {
    let region = region_of(k)?;
    let degree = required(k.degree, "degree")?;
    let params = SpaceParams::new(k.p.unwrap_or(2.0), k.alpha.unwrap_or(0.0))?;
    let restarts = k.restarts.unwrap_or(4);
    let cfg = bound_config(k.bound_config.as_deref())?;
    let result = measured_constant(&region, degree, params, restarts, k.seed)?;
    let mut table = Table::new(vec!["degree", "c_hat"]);
    if params.p == 2.0 {
        for d in 0..=degree {
            table.push(vec![d.to_string(), fmt(optimal_constant_p2(&region, d, params.alpha)?.c_hat)]);
        }
    } else {
        table.push(vec![degree.to_string(), fmt(result.c_hat)]);
    }
    let method = if params.p == 2.0 {
        "generalized_eigenvalue"
    } else {
        "extremal_search"
    };
    let knobs = json!({
        "region": region.label,
        "degree": degree,
        "p": params.p,
        "alpha": params.alpha,
        "restarts": restarts,
        "seed": k.seed,
    });
    let out = json!({ "method": method, "sampling": result });
    Ok(Artifacts {
        json: envelope("constant", knobs, &cfg, out),
        csv: Some(table),
        out: k.out.clone(),
    })
}

const BOUND_HEADER: [&str; 10] = [
    "region",
    "gamma_hat",
    "r",
    "c_measured",
    "c_lower_theory",
    "c_upper_necessary",
    "luecking_overlay",
    "lower_ok",
    "upper_ok",
    "gamma_is_grid_upper_bound",
];

fn bound_row(label: &str, rep: &sampler_core::bounds::BoundReport<f64>) -> Vec<String> {
    let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
    vec![
        label.to_string(),
        fmt(rep.gamma),
        fmt(rep.r),
        rep.c_measured.map(fmt).unwrap_or_default(),
        fmt(rep.c_lower_theory),
        fmt(rep.c_upper_necessary),
        fmt(rep.luecking_overlay),
        flag(rep.lower_ok),
        flag(rep.upper_ok),
        rep.gamma_is_grid_upper_bound.to_string(),
    ]
}

pub fn bound(k: &Knobs) -> Res<Artifacts> {
    let region = region_of(k)?;
    let r = required(k.r, "r")?;
    let degree = k.degree.unwrap_or(20);
    let resolution = k.resolution.unwrap_or(128);
    let restarts = k.restarts.unwrap_or(4);
    let params = SpaceParams::new(k.p.unwrap_or(2.0), k.alpha.unwrap_or(0.0))?;
    let cfg = bound_config(k.bound_config.as_deref())?;
    let dens = region_density(&region, r, resolution)?;
    let sampling = measured_constant(&region, degree, params, restarts, k.seed)?;
    let rep = bound_report(dens.gamma_hat, r, params, &cfg, REFERENCE_R0, Some(sampling.c_hat))?;
    let mut table = Table::new(BOUND_HEADER.to_vec());
    table.push(bound_row(&region.label, &rep));
    let knobs = json!({
        "region": region.label,
        "r": r,
        "degree": degree,
        "p": params.p,
        "alpha": params.alpha,
        "resolution": resolution,
        "restarts": restarts,
        "seed": k.seed,
        "r0": REFERENCE_R0,
    });
    let result = json!({ "region": region.label, "density": dens, "sampling": sampling, "bound": rep });
    Ok(Artifacts {
        json: envelope("bound", knobs, &cfg, result),
        csv: Some(table),
        out: k.out.clone(),
    })
}

pub fn gooddisks(k: &Knobs) -> Res<Artifacts> {
    let params = SpaceParams::new(k.p.unwrap_or(2.0), k.alpha.unwrap_or(0.0))?;
    let f = match &k.function {
        Some(path) => AnalyticFunction::from_json_str(&read(path)?)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(k.seed);
            random_polynomial(&mut rng, k.degree.unwrap_or(5))
        }
    };
    let s = single_s(k)?.unwrap_or(REFERENCE_R0);
    let t = match k.t {
        Some(t) => t,
        None => phb_double(phb_double(s)?)?,
    };
    let c = k.c.unwrap_or(0.5);
    let n_max = k.n_max.unwrap_or(8);
    let cfg = bound_config(k.bound_config.as_deref())?;
    let overlaps = measured_overlaps(s, t, n_max)?;
    let masses = local_masses(&f, params, s, t, n_max)?;
    let rep = verify_with_masses(&f, params, &masses, overlaps, s, t, c, n_max)?;
    let total: f64 = sampler_core::analysis::pth_power_integral(&f, params, None)?;
    let set = classify(&masses, rep.k, params.p, s, t, total);
    let mut table = Table::new(vec!["n", "k", "mass_s", "mass_t", "good"]);
    for m in &masses {
        let good = set.indices.binary_search(&m.index).is_ok();
        table.push(vec![
            m.index.n.to_string(),
            m.index.k.to_string(),
            fmt(m.mass_s / total),
            fmt(m.mass_t / total),
            good.to_string(),
        ]);
    }
    let knobs = json!({
        "p": params.p,
        "alpha": params.alpha,
        "s": s,
        "t": t,
        "c": c,
        "n_max": n_max,
        "seed": k.seed,
        "function": k.function,
    });
    let result = json!({ "function": f, "report": rep, "passed": rep.passed(), "good_disks": set });
    Ok(Artifacts {
        json: envelope("gooddisks", knobs, &cfg, result),
        csv: Some(table),
        out: k.out.clone(),
    })
}

pub fn remez(k: &Knobs) -> Res<Artifacts> {
    let max_degree = k.degree.unwrap_or(8);
    let fractions = if k.s.is_empty() { vec![0.05, 0.1, 0.2, 0.4] } else { k.s.clone() };
    let radius = k.r.unwrap_or(1.0);
    let restarts = k.restarts.unwrap_or(3);
    let cfg = bound_config(k.bound_config.as_deref())?;
    let degrees: Vec<usize> = (1..=max_degree).collect();
    let fit = fit_remez_constant(&degrees, &fractions, radius, restarts, k.seed)?;
    let calibrated = calibrate("remez", &fit.experiments(), &cfg)?;
    let mut table = Table::new(vec!["degree", "s", "boundary_sup", "bound"]);
    for smp in &fit.samples {
        let bound = (fit.c_fitted * radius * radius / smp.s).powi(smp.degree as i32);
        table.push(vec![smp.degree.to_string(), fmt(smp.s), fmt(smp.boundary_sup), fmt(bound)]);
    }
    let knobs = json!({
        "max_degree": max_degree,
        "s_fractions": fractions,
        "domain_radius": radius,
        "restarts": restarts,
        "seed": k.seed,
    });
    let result = json!({ "fit": fit, "all_under_bound": fit.all_under_bound() });
    Ok(Artifacts {
        json: envelope("remez", knobs, &calibrated, result),
        csv: Some(table),
        out: k.out.clone(),
    })
}

pub fn fock(k: &Knobs) -> Res<Artifacts> {
    let region = region_of(k)?;
    let degree = k.degree.unwrap_or(10);
    let alpha = k.alpha.unwrap_or(1.0);
    let p = k.p.unwrap_or(2.0);
    if p != 2.0 {
        return Err(CliError::usage("fock sampling constants are computed for --p 2 only"));
    }
    let r = k.r.unwrap_or(2.0);
    let window = r.ceil() as usize + 1;
    let cfg = bound_config(k.bound_config.as_deref())?;
    let truncation = default_truncation(p, alpha, degree).max(region.max_radius());
    let mut table = Table::new(vec!["degree", "c_hat"]);
    for d in 0..=degree {
        table.push(vec![
            d.to_string(),
            fmt(fock_optimal_constant_p2(&region, d, alpha, truncation)?.c_hat),
        ]);
    }
    let result = fock_optimal_constant_p2(&region, degree, alpha, truncation)?;
    let overlap = fock_overlap(r, window)?;
    let knobs = json!({
        "region": region.label,
        "degree": degree,
        "p": p,
        "alpha": alpha,
        "r": r,
        "window": window,
        "truncation_radius": truncation,
    });
    let out = json!({
        "sampling": result,
        "overlap": overlap,
        "overlap_over_r2": overlap as f64 / (r * r),
        "covered": fock_covered(r, window)?,
    });
    Ok(Artifacts {
        json: envelope("fock", knobs, &cfg, out),
        csv: Some(table),
        out: k.out.clone(),
    })
}

struct Row {
    label: String,
    gamma: f64,
    r: f64,
    params: SpaceParams<f64>,
    c_measured: f64,
}

fn parse_row(path: &Path) -> Res<Row> {
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| CliError {
        kind: "json",
        message: format!("{}: {e}", path.display()),
    })?;
    let schema = |msg: &str| CliError {
        kind: "schema",
        message: format!("{}: {msg}", path.display()),
    };
    if v["schema_version"] != json!(SCHEMA_VERSION) {
        return Err(schema(&format!("schema_version must be {SCHEMA_VERSION}")));
    }
    if v["command"] != json!("bound") {
        return Err(schema("only `bound` results can be combined"));
    }
    let b = &v["result"]["bound"];
    let num = |x: &Value, what: &str| x.as_f64().ok_or_else(|| schema(&format!("missing {what}")));
    let params: SpaceParams<f64> = serde_json::from_value(b["params"].clone()).map_err(|_| schema("missing params"))?;
    Ok(Row {
        label: v["result"]["region"].as_str().unwrap_or_default().to_string(),
        gamma: num(&b["gamma"], "gamma")?,
        r: num(&b["r"], "r")?,
        params,
        c_measured: num(&b["c_measured"], "c_measured")?,
    })
}

pub fn report(a: &ReportArgs) -> Res<Artifacts> {
    if a.inputs.is_empty() {
        return Err(CliError::usage("report needs at least one result file"));
    }
    let rows: Vec<Row> = a.inputs.iter().map(|p| parse_row(p)).collect::<Res<_>>()?;
    let mut cfg = bound_config(a.bound_config.as_deref())?;
    if a.calibrate {
        let experiments: Vec<Experiment<f64>> = rows
            .iter()
            .map(|r| Experiment::Sampling {
                gamma: r.gamma,
                r: r.r,
                params: r.params,
                c_measured: r.c_measured,
            })
            .collect();
        cfg = calibrate("report", &experiments, &cfg)?;
    }
    let mut table = Table::new(BOUND_HEADER.to_vec());
    let mut reports = Vec::with_capacity(rows.len());
    for row in &rows {
        let rep = bound_report(row.gamma, row.r, row.params, &cfg, REFERENCE_R0, Some(row.c_measured))?;
        table.push(bound_row(&row.label, &rep));
        reports.push(json!({ "region": row.label, "bound": rep }));
    }
    let consistent = reports
        .iter()
        .all(|r| r["bound"]["lower_ok"] == json!(true) && r["bound"]["upper_ok"] == json!(true));
    let knobs = json!({ "inputs": a.inputs, "calibrate": a.calibrate, "r0": REFERENCE_R0 });
    let result = json!({ "rows": reports, "all_consistent": consistent });
    Ok(Artifacts {
        json: envelope("report", knobs, &cfg, result),
        csv: Some(table),
        out: a.out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_and_missing_files() {
        assert_eq!(load_region("grating(3,0.5)").ok().unwrap().sectors.len(), 3);
        let err = load_region("/no/such/region.json").err().unwrap();
        assert_eq!(err.kind, "unknown_region");
    }

    #[test]
    fn default_config_embeds_provenance() {
        let cfg = bound_config(None).ok().unwrap();
        let v = envelope("density", json!({}), &cfg, json!(null));
        assert_eq!(v["bound_config"]["k_nec"]["provenance"], "default-1");
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
    }
}
