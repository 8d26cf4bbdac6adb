//! Experiment-config parsing and small CLI argument grammars.
//!
//! Configs are single JSON files that fully determine a run, seed included.
//! Unknown keys are rejected (no silent hyperparameter typos) and type errors
//! carry the offending key path.

use std::path::Path;

use streameval::harness::{ExperimentConfig, SweepAxis, SweepParam};
use streameval::synth::BurstLaw;
use streameval::{Error, Result};

/// Reads, parses, and validates an experiment config file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a config from JSON text; exposed separately so the effective-config
/// echo can be round-tripped.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| Error::Config(format!("at {}: {}", e.path(), e.inner())))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes the effective config; parsing the result yields the identical
/// config.
pub fn config_echo(cfg: &ExperimentConfig) -> String {
    let mut s = serde_json::to_string_pretty(cfg).expect("config serializes");
    s.push('\n');
    s
}

/// Parses a burst-law argument: `fixed:L` or `geometric:MEAN`.
pub fn parse_burst(arg: &str) -> Result<BurstLaw> {
    let (law, value) = arg
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("burst law `{arg}` is not LAW:VALUE")))?;
    match law {
        "fixed" => value
            .parse::<usize>()
            .map(BurstLaw::Fixed)
            .map_err(|e| Error::Config(format!("bad fixed burst length `{value}`: {e}"))),
        "geometric" => value
            .parse::<f64>()
            .map(BurstLaw::Geometric)
            .map_err(|e| Error::Config(format!("bad geometric burst mean `{value}`: {e}"))),
        other => Err(Error::Config(format!(
            "unknown burst law `{other}`, expected fixed or geometric"
        ))),
    }
}

/// Parses a sweep axis argument: `lr=0.0005,0.005,0.05` or `wd=0,1e-4,1e-2`.
pub fn parse_axis(arg: &str) -> Result<SweepAxis> {
    let (name, values) = arg
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("axis `{arg}` is not PARAM=v1,v2,...")))?;
    let param = match name {
        "lr" | "learning_rate" => SweepParam::LearningRate,
        "wd" | "weight_decay" => SweepParam::WeightDecay,
        other => {
            return Err(Error::Config(format!(
                "unknown sweep parameter `{other}`, expected lr or wd"
            )))
        }
    };
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad axis value `{v}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::Config("axis needs at least one value".into()));
    }
    Ok(SweepAxis { param, values })
}

/// Parses a comma-separated list of non-negative integers (grid arguments).
pub fn parse_usize_grid(arg: &str) -> Result<Vec<usize>> {
    arg.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad grid value `{v}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use streameval::buffer::SamplerKind;
    use streameval::learners::LearnerKind;

    const MINIMAL: &str = r#"{
        "stream": {"synthetic": {"num_classes": 4, "feature_dim": 4, "length": 64,
                                 "burst": {"fixed": 4}, "seed": 1}},
        "learner": {"kind": "fc_only"}
    }"#;

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        assert_eq!(cfg.learner.kind, LearnerKind::FcOnly);
        assert_eq!(cfg.learner.learning_rate, 0.005);
        assert_eq!(cfg.learner.weight_decay, 1e-4);
        assert_eq!(cfg.learner.gamma, 16.0);
        assert_eq!(cfg.protocol.batch_size, 64);
        assert_eq!(cfg.protocol.shift, 0);
        assert_eq!(cfg.budget.units_per_step, 1.0);
        assert_eq!(cfg.sampler, SamplerKind::Uniform);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = MINIMAL.replace("\"kind\": \"fc_only\"", "\"kind\": \"fc_only\", \"learning_rte\": 0.1");
        let err = parse_config_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("learning_rte"), "message was: {msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn type_mismatch_names_the_key_path() {
        let bad = MINIMAL.replace("\"num_classes\": 4", "\"num_classes\": \"four\"");
        let msg = parse_config_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("num_classes"), "message was: {msg}");
    }

    #[test]
    fn negative_learning_rate_is_rejected() {
        let bad = MINIMAL.replace("\"kind\": \"fc_only\"", "\"kind\": \"fc_only\", \"learning_rate\": -1.0");
        assert!(parse_config_str(&bad).is_err());
    }

    #[test]
    fn echo_round_trips_to_an_identical_config() {
        let cfg = parse_config_str(MINIMAL).unwrap();
        let echoed = parse_config_str(&config_echo(&cfg)).unwrap();
        assert_eq!(cfg, echoed);
    }

    #[test]
    fn burst_and_axis_grammars() {
        assert_eq!(parse_burst("fixed:16").unwrap(), BurstLaw::Fixed(16));
        assert_eq!(
            parse_burst("geometric:8.5").unwrap(),
            BurstLaw::Geometric(8.5)
        );
        assert!(parse_burst("fixed").is_err());
        assert!(parse_burst("poisson:3").is_err());

        let axis = parse_axis("lr=0.0005,0.005,0.05").unwrap();
        assert_eq!(axis.param, SweepParam::LearningRate);
        assert_eq!(axis.values, vec![0.0005, 0.005, 0.05]);
        let axis = parse_axis("wd=0,1e-4").unwrap();
        assert_eq!(axis.param, SweepParam::WeightDecay);
        assert!(parse_axis("momentum=0.9").is_err());
        assert!(parse_axis("lr=abc").is_err());

        assert_eq!(parse_usize_grid("0,1,2,4").unwrap(), vec![0, 1, 2, 4]);
        assert!(parse_usize_grid("1,x").is_err());
    }
}
