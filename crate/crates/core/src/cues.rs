//! Cue construction: prompt parsing, templates, and the target-phrase
//! heuristic that turns a question into the cue set driving the odor field.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::model::{Cue, CueKind, CueSet, HyperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskHint {
    OcrDetail,
    Counting,
    SpatialRelation,
    Verification,
}

/// One multiple-choice option.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McOption {
    pub letter: char,
    pub text: String,
}

/// Caller-facing description of a prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub question: String,
    pub options: Option<Vec<McOption>>,
    pub task_hint: Option<TaskHint>,
    /// Overrides the extracted target phrase when set.
    pub target_phrase: Option<String>,
}

impl PromptSpec {
    pub fn open(question: impl Into<String>) -> Self {
        PromptSpec {
            question: question.into(),
            options: None,
            task_hint: None,
            target_phrase: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.question.trim().is_empty() {
            return Err(Error::invalid("prompt question must be non-empty"));
        }
        if let Some(options) = &self.options {
            if options.len() < 2 {
                return Err(Error::invalid(
                    "multiple-choice prompts need at least 2 options",
                ));
            }
            let mut letters: Vec<char> = options.iter().map(|o| o.letter).collect();
            letters.sort_unstable();
            letters.dedup();
            if letters.len() != options.len() {
                return Err(Error::invalid("option letters must be distinct"));
            }
        }
        Ok(())
    }
}

/// Fixed template wordings. Cue semantics only matter with a real embedding
/// table; with the hash embedder any fixed text serves as a stable key.
pub mod templates {
    use super::TaskHint;

    pub fn global(question: &str) -> String {
        format!("describe the image region relevant to: {question}")
    }

    pub fn target(phrase: &str) -> String {
        format!("find {phrase} in the image")
    }

    pub fn task(hint: TaskHint) -> &'static str {
        match hint {
            TaskHint::OcrDetail => "read the exact text, numbers, and fine details in the image",
            TaskHint::Counting => "count how many of the queried objects appear in the image",
            TaskHint::SpatialRelation => {
                "determine where objects are relative to each other in the image"
            }
            TaskHint::Verification => "check whether the stated claim matches the image",
        }
    }

    pub fn option(letter: char, text: &str) -> String {
        format!("the answer is {letter}: {text}")
    }
}

/// Words dropped by the target-phrase heuristic: interrogatives, articles,
/// auxiliaries, prepositions, and bare pronouns.
pub const STOP_WORDS: &[&str] = &[
    // interrogatives
    "what", "which", "who", "whom", "whose", "where", "when", "why", "how", // articles
    "a", "an", "the", // auxiliaries and copulas
    "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "done", "can",
    "could", "will", "would", "shall", "should", "may", "might", "must", "has", "have", "had",
    // prepositions
    "in", "on", "at", "of", "to", "for", "with", "from", "by", "about", "into", "onto", "over",
    "under", "between", "behind", "above", "below", "near", "within", "through", "during",
    // pronouns and demonstratives
    "it", "its", "this", "that", "these", "those", "there", "he", "she", "they", "him", "her",
    "his", "their", "them", "you", "your", "i", "we", "us", "our", "me", "my",
];

/// Keeps the content words of a question as a lowercase phrase; absent when
/// every word is stopped.
pub fn extract_target_phrase(question: &str) -> Option<String> {
    let cleaned: String = question
        .to_lowercase()
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    let kept: Vec<&str> = cleaned
        .split_whitespace()
        .filter(|w| !STOP_WORDS.contains(w))
        .collect();
    if kept.is_empty() {
        None
    } else {
        Some(kept.join(" "))
    }
}

/// Applies the cue ablation switches to an already-built cue set.
///
/// With `use_multi_cue` off only the global cue survives (option cues
/// included in the drop); with `use_odor_cue` off every remaining cue
/// vector is replaced by the all-equal constant vector, making the field
/// prompt-agnostic while later stages run unchanged.
pub fn apply_cue_ablations(set: &CueSet, hp: &HyperParams) -> Result<CueSet> {
    if hp.use_odor_cue && hp.use_multi_cue {
        return Ok(set.clone());
    }
    let dim_t = set.dim_t();
    let mut cues: Vec<Cue> = if hp.use_multi_cue {
        set.cues().to_vec()
    } else {
        vec![set.global_cue().clone()]
    };
    let mut option_cues: Vec<Cue> = if hp.use_multi_cue {
        set.option_cues().to_vec()
    } else {
        Vec::new()
    };
    if !hp.use_odor_cue {
        cues = vec![Cue::constant(CueKind::Global, dim_t, "constant")?];
        option_cues = option_cues
            .iter()
            .map(|c| Cue::constant(CueKind::Option, dim_t, c.label.clone()))
            .collect::<Result<Vec<_>>>()?;
    }
    CueSet::new(cues, option_cues)
}

/// Builds the cue set for a prompt.
///
/// The global cue averages the raw question embedding with its template
/// embedding; target and task cues are added when available. The ablation
/// switches are applied on the result via [`apply_cue_ablations`].
pub fn build_cues(
    prompt: &PromptSpec,
    provider: &EmbeddingProvider,
    hp: &HyperParams,
) -> Result<CueSet> {
    prompt.validate()?;
    let question = prompt.question.trim();

    let e_question = provider.embed(question)?;
    let e_template = provider.embed(&templates::global(question))?;
    let global: Vec<f64> = e_question
        .iter()
        .zip(&e_template)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let mut cues = vec![Cue::new(CueKind::Global, global, "global")?];

    let phrase = prompt
        .target_phrase
        .clone()
        .filter(|p| !p.trim().is_empty())
        .or_else(|| extract_target_phrase(question));
    if let Some(phrase) = phrase {
        let v = provider.embed(&templates::target(&phrase))?;
        cues.push(Cue::new(CueKind::Target, v, "target")?);
    }
    if let Some(hint) = prompt.task_hint {
        let v = provider.embed(templates::task(hint))?;
        cues.push(Cue::new(CueKind::Task, v, "task")?);
    }

    let mut option_cues = Vec::new();
    if let Some(options) = &prompt.options {
        for option in options {
            let v = provider.embed(&templates::option(option.letter, &option.text))?;
            option_cues.push(Cue::new(CueKind::Option, v, option.letter.to_string())?);
        }
    }

    apply_cue_ablations(&CueSet::new(cues, option_cues)?, hp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PromptKind;

    fn provider() -> EmbeddingProvider {
        EmbeddingProvider::desk_hash(32).unwrap()
    }

    #[test]
    fn target_phrase_keeps_content_words() {
        assert_eq!(
            extract_target_phrase("What color cape is the woman wearing?").as_deref(),
            Some("color cape woman wearing")
        );
    }

    #[test]
    fn target_phrase_absent_when_all_stopped() {
        assert_eq!(extract_target_phrase("Is it?"), None);
        assert_eq!(extract_target_phrase(""), None);
        assert_eq!(extract_target_phrase("?!"), None);
    }

    #[test]
    fn open_prompt_gets_global_and_target() {
        let prompt = PromptSpec::open("What color cape is the woman wearing?");
        let set = build_cues(&prompt, &provider(), &HyperParams::default()).unwrap();
        let kinds: Vec<CueKind> = set.cues().iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![CueKind::Global, CueKind::Target]);
        assert_eq!(set.prompt_kind, PromptKind::OpenEnded);
    }

    #[test]
    fn task_hint_adds_task_cue() {
        let mut prompt = PromptSpec::open("How many dogs?");
        prompt.task_hint = Some(TaskHint::Counting);
        let set = build_cues(&prompt, &provider(), &HyperParams::default()).unwrap();
        assert!(set.cues().iter().any(|c| c.kind == CueKind::Task));
    }

    #[test]
    fn four_options_give_four_option_cues() {
        let mut prompt = PromptSpec::open("Which animal is shown?");
        prompt.options = Some(vec![
            McOption {
                letter: 'A',
                text: "cat".into(),
            },
            McOption {
                letter: 'B',
                text: "dog".into(),
            },
            McOption {
                letter: 'C',
                text: "bird".into(),
            },
            McOption {
                letter: 'D',
                text: "fish".into(),
            },
        ]);
        let set = build_cues(&prompt, &provider(), &HyperParams::default()).unwrap();
        assert_eq!(set.option_cues().len(), 4);
        assert_eq!(set.prompt_kind, PromptKind::MultipleChoice);
    }

    #[test]
    fn multi_cue_off_keeps_only_global() {
        let mut hp = HyperParams::default();
        hp.use_multi_cue = false;
        let mut prompt = PromptSpec::open("Which animal is shown in the picture?");
        prompt.task_hint = Some(TaskHint::Verification);
        prompt.options = Some(vec![
            McOption {
                letter: 'A',
                text: "cat".into(),
            },
            McOption {
                letter: 'B',
                text: "dog".into(),
            },
        ]);
        let set = build_cues(&prompt, &provider(), &hp).unwrap();
        assert_eq!(set.cues().len(), 1);
        assert_eq!(set.cues()[0].kind, CueKind::Global);
        assert!(set.option_cues().is_empty());
    }

    #[test]
    fn odor_cue_off_yields_constant_cue() {
        let mut hp = HyperParams::default();
        hp.use_odor_cue = false;
        let a = build_cues(&PromptSpec::open("What is red?"), &provider(), &hp).unwrap();
        let b = build_cues(&PromptSpec::open("Count the sheep"), &provider(), &hp).unwrap();
        assert_eq!(a.cues().len(), 1);
        assert_eq!(a.cues()[0].vector(), b.cues()[0].vector());
        let first = a.cues()[0].vector()[0];
        assert!(a.cues()[0]
            .vector()
            .iter()
            .all(|&x| (x - first).abs() < 1e-12));
    }

    #[test]
    fn global_cue_independent_of_target_phrase() {
        let question = "What color cape is the woman wearing?";
        let with = build_cues(
            &PromptSpec::open(question),
            &provider(),
            &HyperParams::default(),
        )
        .unwrap();
        let mut prompt = PromptSpec::open(question);
        prompt.target_phrase = Some("cape".into());
        let without = build_cues(&prompt, &provider(), &HyperParams::default()).unwrap();
        assert_eq!(with.global_cue().vector(), without.global_cue().vector());
    }

    #[test]
    fn target_override_wins_over_extraction() {
        let mut prompt = PromptSpec::open("What color cape is the woman wearing?");
        prompt.target_phrase = Some("cape".into());
        let set = build_cues(&prompt, &provider(), &HyperParams::default()).unwrap();
        let expected = provider().embed(&templates::target("cape")).unwrap();
        let target = set
            .cues()
            .iter()
            .find(|c| c.kind == CueKind::Target)
            .unwrap();
        assert_eq!(target.vector(), expected.as_slice());
    }

    #[test]
    fn empty_question_rejected() {
        let err = build_cues(
            &PromptSpec::open("  "),
            &provider(),
            &HyperParams::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn duplicate_letters_rejected() {
        let mut prompt = PromptSpec::open("Which?");
        prompt.options = Some(vec![
            McOption {
                letter: 'A',
                text: "x".into(),
            },
            McOption {
                letter: 'A',
                text: "y".into(),
            },
        ]);
        assert!(build_cues(&prompt, &provider(), &HyperParams::default()).is_err());
    }
}
