//! Seeded generator for small SNLI-schema corpora.
//!
//! Sentences come from fixed templates over a closed vocabulary. The train
//! split carries injected label noise and a slice of hedged hypotheses whose
//! label is a coin flip between entailment and neutral, so its data map has
//! easy, ambiguous and hard regions. Dev and test add one premise frame the
//! train split never uses. Guids are prefixed by split name and therefore
//! disjoint across splits.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DatasetSplit, Label, Sample, SplitKind};
use crate::rng;

const SUBJECTS: [&str; 12] = [
    "man", "woman", "boy", "girl", "dog", "child", "worker", "player", "musician", "tourist", "chef", "student",
];
const ADJECTIVES: [&str; 12] = [
    "tall", "young", "old", "smiling", "tired", "happy", "small", "busy", "quiet", "strong", "curious", "calm",
];
const VERBS: [&str; 12] = [
    "running", "sitting", "eating", "sleeping", "swimming", "dancing", "reading", "singing", "cooking", "climbing",
    "walking", "painting",
];
const PLACES: [&str; 10] = [
    "park", "beach", "street", "kitchen", "field", "library", "stadium", "market", "garden", "station",
];
/// Paraphrases of each verb, index-aligned with `VERBS`.
const PARAPHRASES: [[&str; 2]; 12] = [
    ["jogging", "sprinting"],
    ["seated", "resting"],
    ["dining", "snacking"],
    ["napping", "dozing"],
    ["paddling", "bathing"],
    ["twirling", "grooving"],
    ["studying", "browsing"],
    ["humming", "chanting"],
    ["baking", "grilling"],
    ["scaling", "ascending"],
    ["strolling", "wandering"],
    ["sketching", "drawing"],
];
const SUBTLE_CONTRADICTIONS: [&str; 6] = ["motionless", "absent", "elsewhere", "unconscious", "bedridden", "missing"];
const SUBTLE_NEUTRALS: [&str; 6] = ["professionally", "reluctantly", "competitively", "secretly", "proudly", "nervously"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub seed: u64,
    /// Fraction of train samples whose gold label is replaced by a wrong one.
    pub label_noise: f64,
    /// Label noise applied to dev and test.
    pub eval_label_noise: f64,
    /// Fraction of samples with a hedged, coin-flip-labeled hypothesis.
    pub hedged: f64,
    /// Fraction of correctly labeled samples whose label rests on a
    /// paraphrase or a rare cue word instead of a repeated template.
    pub subtle: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            train: 20_000,
            dev: 5_000,
            test: 5_000,
            seed: 0,
            label_noise: 0.12,
            eval_label_noise: 0.02,
            hedged: 0.08,
            subtle: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub train: DatasetSplit,
    pub dev: DatasetSplit,
    pub test: DatasetSplit,
}

fn pick<'a>(r: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[r.gen_range(0..words.len())]
}

fn pick_other<'a>(r: &mut ChaCha8Rng, words: &[&'a str], not: &str) -> &'a str {
    loop {
        let w = pick(r, words);
        if w != not {
            return w;
        }
    }
}

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "An"
    } else {
        "A"
    }
}

fn sample(r: &mut ChaCha8Rng, guid: String, held_out_frame: bool, config: &SynthConfig, noise: f64) -> Sample {
    let subj = pick(r, &SUBJECTS);
    let adj = pick(r, &ADJECTIVES);
    let verb_idx = r.gen_range(0..VERBS.len());
    let verb = VERBS[verb_idx];
    let place = pick(r, &PLACES);
    let frames = if held_out_frame { 3 } else { 2 };
    let premise = match r.gen_range(0..frames) {
        0 => format!("{} {adj} {subj} is {verb} in the {place}.", article(adj)),
        1 => format!("There is {} {adj} {subj} {verb} at the {place}.", article(adj).to_lowercase()),
        _ => format!("In the {place}, {} {adj} {subj} is {verb}.", article(adj).to_lowercase()),
    };

    let (hypothesis, mut label) = if r.gen_bool(config.hedged) {
        let label = if r.gen_bool(0.5) { Label::Entailment } else { Label::Neutral };
        (format!("{} {subj} might be {verb} somewhere.", article(subj)), label)
    } else if r.gen_bool(config.subtle) {
        let label = Label::ALL[r.gen_range(0..3)];
        let a = article(subj);
        let para = PARAPHRASES[verb_idx][r.gen_range(0..2)];
        let h = match label {
            Label::Entailment => format!("{a} {subj} is {para}."),
            Label::Contradiction => format!("{a} {subj} is {}.", pick(r, &SUBTLE_CONTRADICTIONS)),
            Label::Neutral => format!("{a} {subj} is {para} {}.", pick(r, &SUBTLE_NEUTRALS)),
        };
        (h, label)
    } else {
        let label = Label::ALL[r.gen_range(0..3)];
        let a = article(subj);
        let h = match (label, r.gen_range(0..3)) {
            (Label::Entailment, 0) => format!("{a} {subj} is {verb}."),
            (Label::Entailment, 1) => format!("{a} {subj} is in the {place}."),
            (Label::Entailment, _) => format!("Someone is {verb} in the {place}."),
            (Label::Contradiction, 0) => format!("{a} {subj} is {}.", pick_other(r, &VERBS, verb)),
            (Label::Contradiction, 1) => format!("Nobody is {verb}."),
            (Label::Contradiction, _) => format!("{a} {subj} is in the {}.", pick_other(r, &PLACES, place)),
            (Label::Neutral, 0) => format!("{a} {subj} is {verb} with a friend."),
            (Label::Neutral, 1) => format!("The {subj} is {verb} for a competition."),
            (Label::Neutral, _) => format!("The {subj} is {verb} because it is sunny."),
        };
        (h, label)
    };
    if r.gen_bool(noise) {
        let shift = r.gen_range(1..3);
        label = Label::ALL[(label.index() + shift) % 3];
    }
    Sample {
        guid,
        sentence1: premise,
        sentence2: hypothesis,
        gold_label: label,
    }
}

fn split(kind: SplitKind, prefix: &str, n: usize, config: &SynthConfig) -> DatasetSplit {
    let mut r = rng::rng(rng::derive_seed_str(config.seed, prefix));
    let held_out = kind != SplitKind::Train;
    let noise = if held_out { config.eval_label_noise } else { config.label_noise };
    let samples = (0..n)
        .map(|i| sample(&mut r, format!("{prefix}-{i:06}"), held_out, config, noise))
        .collect();
    DatasetSplit::new(kind, samples)
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    SynthCorpus {
        train: split(SplitKind::Train, "train", config.train, config),
        dev: split(SplitKind::Dev, "dev", config.dev, config),
        test: split(SplitKind::Test, "test", config.test, config),
    }
}
