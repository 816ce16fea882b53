//! Instance descriptor: the JSON document that names a grid tensor, a
//! prompt, and a budget for one selection run. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::cues::{McOption, PromptSpec, TaskHint};
use crate::error::{Error, Result};
use crate::model::HyperParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDescriptor {
    pub grid: GridRef,
    pub prompt: PromptDescriptor,
    pub budget: BudgetRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<HyperParamsPatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRef {
    pub rows: usize,
    pub cols: usize,
    pub tensor_key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetRef {
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptDescriptor {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<OptionDescriptor>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_hint: Option<TaskHint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_phrase: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionDescriptor {
    pub letter: String,
    pub text: String,
}

impl PromptDescriptor {
    pub fn to_prompt_spec(&self) -> Result<PromptSpec> {
        let options = match &self.options {
            None => None,
            Some(raw) => {
                let mut options = Vec::with_capacity(raw.len());
                for o in raw {
                    let mut chars = o.letter.chars();
                    let letter = match (chars.next(), chars.next()) {
                        (Some(c), None) => c,
                        _ => {
                            return Err(Error::invalid(format!(
                                "option letter {:?} must be a single character",
                                o.letter
                            )))
                        }
                    };
                    options.push(McOption {
                        letter,
                        text: o.text.clone(),
                    });
                }
                Some(options)
            }
        };
        let prompt = PromptSpec {
            question: self.question.clone(),
            options,
            task_hint: self.task_hint,
            target_phrase: self.target_phrase.clone(),
        };
        prompt.validate()?;
        Ok(prompt)
    }
}

/// Partial hyperparameter overrides; unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParamsPatch {
    pub heads: Option<usize>,
    pub sensing_dim: Option<usize>,
    pub nonzeros_visual: Option<usize>,
    pub nonzeros_text: Option<usize>,
    pub nonzeros_mask: Option<usize>,
    pub active_heads: Option<usize>,
    pub gate_temperature: Option<f64>,
    pub seed: Option<u64>,
    pub window: Option<usize>,
    pub scaffold_per_window: Option<usize>,
    pub lock_radius: Option<usize>,
    pub spatial_bandwidth: Option<f64>,
    pub local_weight: Option<f64>,
    pub redundancy_weight: Option<f64>,
    pub jump_fraction: Option<f64>,
    pub coverage_balance: Option<f64>,
    pub uncertainty_weight: Option<f64>,
    pub coverage_penalty: Option<f64>,
    pub pool_multiplier: Option<f64>,
    pub merge_threshold: Option<f64>,
    pub relevance_floor: Option<f64>,
    pub use_odor_cue: Option<bool>,
    pub use_multi_cue: Option<bool>,
    pub use_lockon: Option<bool>,
    pub use_rescue: Option<bool>,
}

macro_rules! apply_fields {
    ($patch:expr, $hp:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(value) = $patch.$field {
            $hp.$field = value;
        })+
    };
}

impl HyperParamsPatch {
    pub fn apply(&self, mut hp: HyperParams) -> HyperParams {
        apply_fields!(
            self,
            hp,
            heads,
            sensing_dim,
            nonzeros_visual,
            nonzeros_text,
            nonzeros_mask,
            active_heads,
            gate_temperature,
            seed,
            window,
            scaffold_per_window,
            lock_radius,
            spatial_bandwidth,
            local_weight,
            redundancy_weight,
            jump_fraction,
            coverage_balance,
            uncertainty_weight,
            coverage_penalty,
            pool_multiplier,
            merge_threshold,
            relevance_floor,
            use_odor_cue,
            use_multi_cue,
            use_rescue,
        );
        if let Some(value) = self.use_lockon {
            hp.use_lockon = value;
        }
        hp
    }
}

impl InstanceDescriptor {
    pub fn from_json(json: &str) -> Result<Self> {
        let descriptor: InstanceDescriptor =
            serde_json::from_str(json).map_err(|e| Error::malformed(format!("instance: {e}")))?;
        descriptor.validate()?;
        Ok(descriptor)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.rows == 0 || self.grid.cols == 0 {
            return Err(Error::malformed(
                "instance grid dimensions must be positive",
            ));
        }
        if !(self.budget.ratio > 0.0 && self.budget.ratio <= 1.0) {
            return Err(Error::malformed(format!(
                "instance budget ratio {} outside (0, 1]",
                self.budget.ratio
            )));
        }
        self.prompt
            .to_prompt_spec()
            .map_err(|e| Error::malformed(e.to_string()))?;
        Ok(())
    }

    /// Hyperparameters with this instance's overrides applied.
    pub fn hyperparams(&self) -> HyperParams {
        match &self.params {
            Some(patch) => patch.apply(HyperParams::default()),
            None => HyperParams::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{
        "grid": {"rows": 4, "cols": 4, "tensor_key": "tokens"},
        "prompt": {"question": "What is red?"},
        "budget": {"ratio": 0.5}
    }"#;

    #[test]
    fn parses_minimal_instance() {
        let inst = InstanceDescriptor::from_json(VALID).unwrap();
        assert_eq!(inst.grid.tensor_key, "tokens");
        assert_eq!(inst.hyperparams(), HyperParams::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = VALID.replace("\"budget\"", "\"extra\": 1, \"budget\"");
        assert!(InstanceDescriptor::from_json(&bad).is_err());
    }

    #[test]
    fn bad_ratio_rejected() {
        let bad = VALID.replace("0.5", "1.5");
        assert!(InstanceDescriptor::from_json(&bad).is_err());
    }

    #[test]
    fn params_patch_applies() {
        let json = r#"{
            "grid": {"rows": 4, "cols": 4, "tensor_key": "tokens"},
            "prompt": {"question": "What is red?"},
            "budget": {"ratio": 0.5},
            "params": {"window": 3, "use_rescue": false}
        }"#;
        let inst = InstanceDescriptor::from_json(json).unwrap();
        let hp = inst.hyperparams();
        assert_eq!(hp.window, 3);
        assert!(!hp.use_rescue);
        assert_eq!(hp.heads, 16);
    }

    #[test]
    fn options_parse_to_prompt() {
        let json = r#"{
            "grid": {"rows": 4, "cols": 4, "tensor_key": "tokens"},
            "prompt": {
                "question": "Which animal?",
                "options": [
                    {"letter": "A", "text": "cat"},
                    {"letter": "B", "text": "dog"}
                ],
                "task_hint": "verification"
            },
            "budget": {"ratio": 0.5}
        }"#;
        let inst = InstanceDescriptor::from_json(json).unwrap();
        let prompt = inst.prompt.to_prompt_spec().unwrap();
        assert_eq!(prompt.options.as_ref().unwrap().len(), 2);
        assert_eq!(prompt.task_hint, Some(TaskHint::Verification));
    }

    #[test]
    fn multicharacter_letter_rejected() {
        let json = r#"{
            "grid": {"rows": 4, "cols": 4, "tensor_key": "tokens"},
            "prompt": {
                "question": "Which?",
                "options": [
                    {"letter": "AB", "text": "cat"},
                    {"letter": "C", "text": "dog"}
                ]
            },
            "budget": {"ratio": 0.5}
        }"#;
        assert!(InstanceDescriptor::from_json(json).is_err());
    }
}
