//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Two operations are exported: a pair-score surface comparing a Siamese ELM
//! with an ELM on concatenated inputs, and a held-out ROC curve on synthetic
//! cohorts.

pub mod demo;

use wasm_bindgen::prelude::*;

use selm_core::selm::SiameseCondition;

pub use demo::{Roc, Surface};

fn js(e: selm_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn condition(name: &str) -> Result<SiameseCondition, JsError> {
    name.parse().map_err(js)
}

/// `condition` is one of sum, dist, mult, mean; `kernel` is cosine or euclidean.
#[wasm_bindgen]
pub fn pair_surface(condition_name: &str, kernel: &str, resolution: usize, seed: u32) -> Result<Surface, JsError> {
    let kernel = demo::parse_kernel(kernel).map_err(js)?;
    demo::pair_surface(condition(condition_name)?, kernel, resolution, u64::from(seed)).map_err(js)
}

/// `method` is `distance` or a Siamese condition name.
#[wasm_bindgen]
pub fn roc(method: &str, noise: f64, hidden_pct: f64, seed: u32) -> Result<Roc, JsError> {
    let cond = match method {
        "distance" => None,
        other => Some(condition(other)?),
    };
    demo::roc_demo(noise, cond, hidden_pct, u64::from(seed)).map_err(js)
}
