//! Sweep files: a base configuration and the axes to vary.
//!
//! ```toml
//! [axes]
//! seeds = 30
//! enabled = [true, false]
//! t_est = [5, 10]
//! sigma_pla = [0.1, 1.0]
//!
//! [base]
//! schema_version = 1
//! scenario = "junction"
//! ```

use anyhow::{Context, Result};
use serde::Deserialize;

use trustsim_core::config::ExperimentConfig;
use trustsim_core::costs::PlannerMode;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Axes {
    seeds: u64,
    #[serde(default)]
    seed_start: u64,
    #[serde(default)]
    enabled: Vec<bool>,
    #[serde(default)]
    t_est: Vec<usize>,
    #[serde(default)]
    mode: Vec<PlannerMode>,
    #[serde(default)]
    scenario: Vec<String>,
    #[serde(default)]
    sigma_pla: Vec<f64>,
}

fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

/// All configurations of the sweep, in a fixed order. Disabled runs do not
/// depend on the estimation horizon and appear once per other setting.
pub fn expand(text: &str, overrides: &[String]) -> Result<Vec<ExperimentConfig>> {
    let mut doc: toml::Table = toml::from_str(text).context("parsing sweep file")?;
    let axes: Axes = doc
        .remove("axes")
        .context("sweep file needs an [axes] table")?
        .try_into()
        .context("parsing [axes]")?;
    let base = doc
        .remove("base")
        .context("sweep file needs a [base] table")?;
    if let Some(key) = doc.keys().next() {
        anyhow::bail!("unknown top-level key `{key}` in sweep file");
    }
    let base_text = toml::to_string(&base)?;
    let base = ExperimentConfig::from_toml_with(&base_text, overrides)?;

    let mut out = Vec::new();
    for scenario in or_base(&axes.scenario, base.scenario.clone()) {
        for mode in or_base(&axes.mode, base.mode) {
            for sigma_pla in or_base(&axes.sigma_pla, base.planner.sigma_pla) {
                for enabled in or_base(&axes.enabled, base.trustmhe.enabled) {
                    let horizons = or_base(&axes.t_est, base.trustmhe.t_est);
                    let horizons = if enabled {
                        horizons
                    } else {
                        vec![base.trustmhe.t_est]
                    };
                    for t_est in horizons {
                        for seed in axes.seed_start..axes.seed_start + axes.seeds {
                            let mut c = base.clone();
                            c.scenario = scenario.clone();
                            c.mode = mode;
                            c.planner.sigma_pla = sigma_pla;
                            c.trustmhe.enabled = enabled;
                            c.trustmhe.t_est = t_est;
                            c.seed = seed;
                            c.validate()?;
                            out.push(c);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
[axes]
seeds = 3
seed_start = 10
enabled = [true, false]
t_est = [2, 5]

[base]
schema_version = 1
scenario = "junction"
"#;

    #[test]
    fn expansion_order_and_count() {
        let c = expand(SWEEP, &[]).unwrap();
        assert_eq!(c.len(), 3 * 2 + 3);
        assert_eq!((c[0].trustmhe.t_est, c[0].seed), (2, 10));
        assert_eq!((c[3].trustmhe.t_est, c[3].seed), (5, 10));
        assert!(c[6..].iter().all(|c| !c.trustmhe.enabled));
    }

    #[test]
    fn overrides_apply_to_base() {
        let c = expand(SWEEP, &["mode=aggressive".into()]).unwrap();
        assert!(c.iter().all(|c| c.mode == PlannerMode::Aggressive));
    }

    #[test]
    fn sigma_axis_multiplies_runs() {
        let text = SWEEP.replace("[base]", "sigma_pla = [0.1, 1.0]\n\n[base]");
        let c = expand(&text, &[]).unwrap();
        assert_eq!(c.len(), 2 * 9);
        assert!(c[..9].iter().all(|c| c.planner.sigma_pla == 0.1));
        assert!(c[9..].iter().all(|c| c.planner.sigma_pla == 1.0));
    }

    #[test]
    fn rejects_unknown_sections() {
        assert!(expand(&format!("{SWEEP}\n[extra]\na = 1\n"), &[]).is_err());
        assert!(expand("[base]\nschema_version = 1\nscenario = \"junction\"\n", &[]).is_err());
    }
}
