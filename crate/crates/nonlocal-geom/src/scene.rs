//! JSON formats: scenes (`{"set": {"name", "params"}, "dim"}`), kernels
//! (`{"kind", "s", "profile"}`), and quadrature configs.

use crate::kernels::KernelSpec;
use crate::quad::QuadConfig;
use crate::sets::{sparse_dust, RegionSet, SparseDustParams};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("json parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown canonical set name `{0}`")]
    UnknownName(String),
    #[error("unknown kernel kind `{0}`")]
    UnknownKind(String),
    #[error("missing parameter `{0}`")]
    MissingParam(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    BadParam { name: &'static str, reason: String },
    #[error(transparent)]
    Set(#[from] crate::sets::SetError),
    #[error(transparent)]
    Kernel(#[from] crate::kernels::KernelError),
}

#[derive(Debug, Deserialize)]
pub struct SceneFile {
    pub dim: usize,
    pub set: SetSpec,
}

#[derive(Debug, Deserialize)]
pub struct SetSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub complement: bool,
}

fn get_f64(params: &Value, key: &'static str) -> Result<f64, SceneError> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or(SceneError::MissingParam(key))
}

fn get_f64_or(params: &Value, key: &str, default: f64) -> f64 {
    params.get(key).and_then(Value::as_f64).unwrap_or(default)
}

fn get_vec(params: &Value, key: &'static str, dim: usize) -> Result<Vec<f64>, SceneError> {
    match params.get(key) {
        None => Err(SceneError::MissingParam(key)),
        Some(v) => {
            let arr: Vec<f64> = v
                .as_array()
                .ok_or(SceneError::BadParam {
                    name: key,
                    reason: "expected an array".into(),
                })?
                .iter()
                .map(|x| x.as_f64().unwrap_or(f64::NAN))
                .collect();
            if arr.len() != dim || arr.iter().any(|x| !x.is_finite()) {
                return Err(SceneError::BadParam {
                    name: key,
                    reason: format!("expected {dim} finite entries"),
                });
            }
            Ok(arr)
        }
    }
}

fn unit_e1(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    v
}

/// Construct a canonical set by name. The vocabulary is fixed: halfSpace,
/// ball, ballComplement, slab, periodicSlab, coneSector, sparseDust.
pub fn canonical_set(name: &str, dim: usize, params: &Value) -> Result<RegionSet, SceneError> {
    let set = match name {
        "halfSpace" => RegionSet::half_space(
            get_vec(params, "normal", dim).unwrap_or_else(|_| unit_e1(dim)),
            get_f64_or(params, "offset", 0.0),
        )?,
        "ball" => RegionSet::ball(
            get_vec(params, "center", dim).unwrap_or_else(|_| vec![0.0; dim]),
            get_f64_or(params, "radius", 1.0),
        )?,
        "ballComplement" => RegionSet::ball_complement(
            get_vec(params, "center", dim).unwrap_or_else(|_| vec![0.0; dim]),
            get_f64_or(params, "radius", 1.0),
        )?,
        "slab" => RegionSet::slab(
            dim,
            get_f64_or(params, "axis", 0.0) as usize,
            get_f64_or(params, "lo", 0.0),
            get_f64_or(params, "hi", 1.0),
        )?,
        "periodicSlab" => RegionSet::periodic_slab(dim, get_f64(params, "delta")?)?,
        "coneSector" => RegionSet::cone_sector(
            get_vec(params, "axis", dim).unwrap_or_else(|_| unit_e1(dim)),
            get_f64(params, "halfAngle")?,
        )?,
        "sparseDust" => {
            let mut p = SparseDustParams::new(
                dim,
                get_f64(params, "target")?,
                get_f64(params, "scale")?,
                get_f64_or(params, "seed", 0.0) as u64,
            );
            p.domain_radius = get_f64_or(params, "domainRadius", p.domain_radius);
            p.max_grains = get_f64_or(params, "maxGrains", p.max_grains as f64) as usize;
            sparse_dust(&p)?
        }
        other => return Err(SceneError::UnknownName(other.to_string())),
    };
    Ok(set)
}

pub fn parse_scene(text: &str) -> Result<RegionSet, SceneError> {
    let file: SceneFile = serde_json::from_str(text)?;
    let set = canonical_set(&file.set.name, file.dim, &file.set.params)?;
    Ok(if file.set.complement {
        set.complement()
    } else {
        set
    })
}

#[derive(Debug, Deserialize)]
struct KernelFile {
    kind: String,
    s: f64,
    dim: usize,
    #[serde(default)]
    profile: Value,
}

pub fn parse_kernel(text: &str) -> Result<KernelSpec, SceneError> {
    let file: KernelFile = serde_json::from_str(text)?;
    match file.kind.as_str() {
        "fractional" => Ok(KernelSpec::fractional(file.dim, file.s)?),
        "anisotropic" => {
            let coeffs = file
                .profile
                .get("cosine")
                .and_then(Value::as_array)
                .ok_or(SceneError::MissingParam("profile.cosine"))?
                .iter()
                .map(|v| v.as_f64().unwrap_or(f64::NAN))
                .collect::<Vec<f64>>();
            let axis = get_vec(&file.profile, "axis", file.dim)
                .unwrap_or_else(|_| unit_e1(file.dim));
            Ok(KernelSpec::anisotropic_cosine(file.dim, file.s, axis, coeffs)?)
        }
        other => Err(SceneError::UnknownKind(other.to_string())),
    }
}

pub fn parse_quad_config(text: &str) -> Result<QuadConfig, SceneError> {
    Ok(serde_json::from_str(text)?)
}
