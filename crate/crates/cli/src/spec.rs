//! Parsers for the compact textual specifications accepted on the command
//! line: Hamiltonian generators, contact scalings, and surface metrics.

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::Matrix2;
use reeblab::modelforms::{build_model, locate_torus, ModelForm};
use reeblab::perturbation::{adapted_coordinates, PerturbedForm};
use reeblab::s3flow::ContactScaling;
use reeblab::sphere_geodesics::SurfaceMetric;
use reeblab::sympath::HamiltonianLoop;
use reeblab::twistcone::HomotopyClass;
use std::collections::BTreeMap;

/// Split `head:key=v,key=v` into the head and a key-value map.
fn split_spec(s: &str) -> (String, BTreeMap<String, String>) {
    let mut parts = s.splitn(2, ':');
    let head = parts.next().unwrap_or_default().to_lowercase();
    let mut map = BTreeMap::new();
    if let Some(rest) = parts.next() {
        for kv in rest.split(',') {
            if let Some((k, v)) = kv.split_once('=') {
                map.insert(k.trim().to_lowercase(), v.trim().to_string());
            } else if !kv.trim().is_empty() {
                map.insert(format!("_{}", map.len()), kv.trim().to_string());
            }
        }
    }
    (head, map)
}

fn need_f64(map: &BTreeMap<String, String>, key: &str, what: &str) -> Result<f64> {
    map.get(key)
        .ok_or_else(|| anyhow!("{what}: missing field `{key}`"))?
        .parse::<f64>()
        .with_context(|| format!("{what}: field `{key}` is not a number"))
}

fn need_i64(map: &BTreeMap<String, String>, key: &str, what: &str) -> Result<i64> {
    map.get(key)
        .ok_or_else(|| anyhow!("{what}: missing field `{key}`"))?
        .parse::<i64>()
        .with_context(|| format!("{what}: field `{key}` is not an integer"))
}

/// Parse a generator spec:
/// - `rotation:alpha=0.3`
/// - `constant:s11=..,s12=..,s22=..`
/// - `poshyp:a=..,l=..` / `neghyp:a=..,l=..`
/// - `trig:s11=c0:a1:b1;s12=...;s22=...` (semicolon-separated entries,
///   colon-separated coefficients `c0, a1, b1, a2, b2, ...`)
/// - `csv:path` with rows `t,S11,S12,S22`
pub fn parse_generator(s: &str) -> Result<HamiltonianLoop> {
    let what = "generator";
    if let Some(rest) = s.strip_prefix("trig:") {
        let mut entries: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for entry in rest.split(';') {
            let (k, v) = entry
                .split_once('=')
                .ok_or_else(|| anyhow!("{what}: trig entry `{entry}` lacks `=`"))?;
            let coeffs = v
                .split(':')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("{what}: bad trig coefficients in `{entry}`"))?;
            entries.insert(k.trim().to_lowercase(), coeffs);
        }
        let get = |k: &str| entries.get(k).cloned().unwrap_or_default();
        return HamiltonianLoop::trig(get("s11"), get("s12"), get("s22"))
            .map_err(|e| anyhow!("{what}: {e}"));
    }
    if let Some(path) = s.strip_prefix("csv:") {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("{what}: cannot read `{path}`"))?;
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("{what}: bad row {} in `{path}`", ln + 1))?;
            if cols.len() != 4 {
                bail!("{what}: row {} in `{path}` must have 4 columns", ln + 1);
            }
            rows.push((cols[0], cols[1], cols[2], cols[3]));
        }
        return HamiltonianLoop::from_samples(rows).map_err(|e| anyhow!("{what}: {e}"));
    }
    let (head, map) = split_spec(s);
    match head.as_str() {
        "rotation" => Ok(HamiltonianLoop::rotation(need_f64(&map, "alpha", what)?)),
        "constant" => {
            let m = Matrix2::new(
                need_f64(&map, "s11", what)?,
                need_f64(&map, "s12", what)?,
                need_f64(&map, "s12", what)?,
                need_f64(&map, "s22", what)?,
            );
            HamiltonianLoop::constant(m).map_err(|e| anyhow!("{what}: {e}"))
        }
        "poshyp" => Ok(HamiltonianLoop::positive_hyperbolic(
            need_f64(&map, "a", what)?,
            need_i64(&map, "l", what)?,
        )),
        "neghyp" => Ok(HamiltonianLoop::negative_hyperbolic(
            need_f64(&map, "a", what)?,
            need_i64(&map, "l", what)?,
        )),
        other => bail!("{what}: unknown kind `{other}`"),
    }
}

/// Parsed contact form plus the data needed to echo it.
pub struct FormSpec {
    pub scaling: ContactScaling,
    pub model: Option<ModelForm>,
    pub perturbed: Option<PerturbedForm>,
    pub echo: String,
}

/// Parse a form spec:
/// - `unit`
/// - `model:theta0=..,theta1=..`
/// - `perturbed:theta0=..,theta1=..,p=..,q=..,epsilon=..`
/// - `file:path` where the file holds one of the above on a single line
pub fn parse_form(s: &str) -> Result<FormSpec> {
    if let Some(path) = s.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("form: cannot read `{path}`"))?;
        return parse_form(text.trim());
    }
    let what = "form";
    let (head, map) = split_spec(s);
    match head.as_str() {
        "unit" => Ok(FormSpec {
            scaling: ContactScaling::Unit,
            model: None,
            perturbed: None,
            echo: "unit".into(),
        }),
        "model" => {
            let t0 = need_f64(&map, "theta0", what)?;
            let t1 = need_f64(&map, "theta1", what)?;
            let model = build_model(t0, t1)?;
            Ok(FormSpec {
                scaling: ContactScaling::Model(model.clone()),
                model: Some(model),
                perturbed: None,
                echo: s.to_string(),
            })
        }
        "perturbed" => {
            let t0 = need_f64(&map, "theta0", what)?;
            let t1 = need_f64(&map, "theta1", what)?;
            let p = need_i64(&map, "p", what)?;
            let q = need_i64(&map, "q", what)?;
            let eps = need_f64(&map, "epsilon", what)?;
            let model = build_model(t0, t1)?;
            let torus = locate_torus(&model, HomotopyClass::new(p, q))?;
            let coords = adapted_coordinates(&model, &torus)?;
            let pert = PerturbedForm::new(coords, eps)?;
            Ok(FormSpec {
                scaling: ContactScaling::Perturbed {
                    model: model.clone(),
                    pert: pert.clone(),
                },
                model: Some(model),
                perturbed: Some(pert),
                echo: s.to_string(),
            })
        }
        other => bail!("{what}: unknown kind `{other}`"),
    }
}

/// Parse a metric spec: `round`, `spheroid:a,c` (polar semi-axis `a`,
/// equatorial radius `c`), or `profile:path` with TOML arrays `rho`, `zeta`.
pub fn parse_metric(s: &str) -> Result<SurfaceMetric> {
    if s == "round" {
        return Ok(SurfaceMetric::Round);
    }
    if let Some(rest) = s.strip_prefix("spheroid:") {
        let parts: Vec<f64> = rest
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .context("metric: spheroid takes `a,c`")?;
        if parts.len() != 2 {
            bail!("metric: spheroid takes exactly two numbers `a,c`");
        }
        return Ok(SurfaceMetric::Spheroid {
            a: parts[0],
            c: parts[1],
        });
    }
    if let Some(path) = s.strip_prefix("profile:") {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("metric: cannot read `{path}`"))?;
        let table: toml::Table = text.parse().context("metric: profile file is not TOML")?;
        let arr = |key: &str| -> Result<Vec<f64>> {
            table
                .get(key)
                .and_then(|v| v.as_array())
                .ok_or_else(|| anyhow!("metric: profile file lacks array `{key}`"))?
                .iter()
                .map(|v| v.as_float().ok_or_else(|| anyhow!("metric: `{key}` holds a non-number")))
                .collect()
        };
        return Ok(SurfaceMetric::RevolutionProfile {
            rho: arr("rho")?,
            zeta: arr("zeta")?,
        });
    }
    bail!("metric: unknown spec `{s}` (expected round | spheroid:a,c | profile:path)")
}
