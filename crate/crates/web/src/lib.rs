//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; failures become a JS exception
//! carrying the error message.

use serde_json::json;
use wasm_bindgen::prelude::*;

use modforms::{delta, dims, forms};

/// Largest level accepted by the basis export; the page stays responsive below it.
pub const MAX_BASIS_LEVEL: u64 = 60;
pub const MAX_BASIS_K: i64 = 12;
pub const MAX_EXPANSION: usize = 400;

pub fn delta_report(level: u64, expand: usize) -> Result<String, String> {
    if expand > MAX_EXPANSION {
        return Err(format!("expansion limited to {MAX_EXPANSION} coefficients"));
    }
    let unit = delta::delta_unit(level).map_err(|e| e.to_string())?;
    let report = unit.report((expand > 0).then_some(expand)).map_err(|e| e.to_string())?;
    let mut v = serde_json::to_value(report).map_err(|e| e.to_string())?;
    v["quotient"] = json!(unit.quotient.to_string());
    v["strong_unit"] = json!(unit.quotient.is_strong_unit().map_err(|e| e.to_string())?);
    Ok(v.to_string())
}

pub fn dimension_table(level: u64, kmax: i64) -> Result<String, String> {
    let rho = delta::rho(level).map_err(|e| e.to_string())?;
    let nu = delta::nu(level).map_err(|e| e.to_string())?;
    let profile = dims::profile(level).map_err(|e| e.to_string())?;
    let rows = (1..=kmax)
        .map(|k| -> Result<_, dims::DimError> {
            Ok(json!({
                "k": k,
                "weight": 2 * k,
                "dim_M": profile.dim_m(k)?,
                "dim_S": profile.dim_s(k)?,
                "dim_E": profile.dim_e(k)?,
                "diff": profile.dim_m(k + rho / 2)? - profile.dim_m(k)?,
            }))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(json!({"schema": 1, "N": level, "rho": rho, "nu": nu, "profile": profile, "rows": rows}).to_string())
}

pub fn basis(level: u64, k: i64) -> Result<String, String> {
    if level > MAX_BASIS_LEVEL || k > MAX_BASIS_K {
        return Err(format!(
            "the demo computes bases for N <= {MAX_BASIS_LEVEL} and k <= {MAX_BASIS_K}"
        ));
    }
    let prec = forms::precision_policy(level, k, 2).map_err(|e| e.to_string())?;
    let b = forms::structured_basis(level, k, prec).map_err(|e| e.to_string())?;
    let mut v = serde_json::to_value(b.dump()).map_err(|e| e.to_string())?;
    let rendered: Vec<String> = b.elements.iter().map(|e| e.series.to_string()).collect();
    v["rendered"] = json!(rendered);
    Ok(v.to_string())
}

#[wasm_bindgen]
pub fn delta_unit_json(level: u32, expand: u32) -> Result<String, JsValue> {
    delta_report(level.into(), expand as usize).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn dimension_table_json(level: u32, kmax: u32) -> Result<String, JsValue> {
    dimension_table(level.into(), kmax.into()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn basis_json(level: u32, k: u32) -> Result<String, JsValue> {
    basis(level.into(), k.into()).map_err(|e| JsValue::from_str(&e))
}
