//! Ranking by training dynamics and the subset recipes built from rankings.
//!
//! Fractions are exact rationals so quota sizes are `floor(num * N / den)`
//! with no floating-point drift: a one-third component over 2,000 samples
//! always claims 666.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::dataset::DatasetSplit;
use crate::dynamics::TrainingDynamics;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    EasyToLearn,
    HardToLearn,
    Ambiguous,
    Random,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::EasyToLearn => "easy_to_learn",
            Category::HardToLearn => "hard_to_learn",
            Category::Ambiguous => "ambiguous",
            Category::Random => "random",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy_to_learn" => Ok(Category::EasyToLearn),
            "hard_to_learn" => Ok(Category::HardToLearn),
            "ambiguous" => Ok(Category::Ambiguous),
            "random" => Ok(Category::Random),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

/// Exact fraction in (0, 1], kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Fraction {
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Config(format!("fraction {num}/{den} not in (0, 1]")));
        }
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(self * n)`.
    pub fn quota(self, n: usize) -> usize {
        (u128::from(self.num) * n as u128 / u128::from(self.den)) as usize
    }

    /// Whether the fractions sum to at most one.
    pub fn sum_at_most_one(fractions: impl IntoIterator<Item = Fraction>) -> bool {
        // Work over the lcm of denominators in u128; denominators here are small.
        let fs: Vec<Fraction> = fractions.into_iter().collect();
        let mut lcm: u128 = 1;
        for f in &fs {
            let d = u128::from(f.den);
            let g = {
                let (mut a, mut b) = (lcm, d);
                while b != 0 {
                    (a, b) = (b, a % b);
                }
                a
            };
            lcm = match (lcm / g).checked_mul(d) {
                Some(v) => v,
                None => return fs.iter().map(|f| f.value()).sum::<f64>() <= 1.0,
            };
        }
        let total: u128 = fs.iter().map(|f| u128::from(f.num) * (lcm / u128::from(f.den))).sum();
        total <= lcm
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    /// Accepts `a/b` or a decimal such as `0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("invalid fraction `{s}`"));
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse().map_err(|_| bad())?;
            let den = b.trim().parse().map_err(|_| bad())?;
            return Fraction::new(num, den);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) || s.is_empty() {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_v: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_v)).ok_or_else(bad)?;
        Fraction::new(num, den)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Float(f64),
            Int(u64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            Raw::Float(f) => format!("{f}"),
            Raw::Int(i) => i.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub category: Category,
    pub fraction: Fraction,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSpec {
    pub name: String,
    pub components: Vec<Component>,
    /// When set, the materialized subset is shuffled with this seed instead
    /// of keeping the original sample order.
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
}

impl SubsetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::Config(format!("subset `{}` has no components", self.name)));
        }
        if !Fraction::sum_at_most_one(self.components.iter().map(|c| c.fraction)) {
            return Err(Error::Config(format!("subset `{}` fractions sum past 1", self.name)));
        }
        Ok(())
    }

    pub fn total_fraction(&self) -> f64 {
        self.components.iter().map(|c| c.fraction.value()).sum()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SubsetSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Orders every guid by the category's key. Ties break by ascending guid;
/// `seed` is only used for [`Category::Random`].
pub fn rank(dynamics: &[TrainingDynamics], category: Category, seed: u64) -> Vec<String> {
    let mut items: Vec<&TrainingDynamics> = dynamics.iter().collect();
    match category {
        Category::EasyToLearn => {
            items.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then_with(|| a.guid.cmp(&b.guid)))
        }
        Category::HardToLearn => {
            items.sort_by(|a, b| a.confidence.total_cmp(&b.confidence).then_with(|| a.guid.cmp(&b.guid)))
        }
        Category::Ambiguous => {
            items.sort_by(|a, b| b.variability.total_cmp(&a.variability).then_with(|| a.guid.cmp(&b.guid)))
        }
        Category::Random => {
            items.sort_by(|a, b| a.guid.cmp(&b.guid));
            rng::shuffle(&mut items, seed);
        }
    }
    items.into_iter().map(|d| d.guid.clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectedSample {
    pub guid: String,
    pub component_index: usize,
    pub category: Category,
}

/// Selected guids in claim order, each tagged with the component that
/// claimed it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Selection {
    pub entries: Vec<SelectedSample>,
}

impl Selection {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn guids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.guid.as_str())
    }

    pub fn count_for(&self, component: usize) -> usize {
        self.entries.iter().filter(|e| e.component_index == component).count()
    }
}

fn component_seed(seed: u64, spec: &SubsetSpec, index: usize) -> u64 {
    rng::derive_seed_str(seed, &format!("{}#{index}", spec.name))
}

/// Claims `floor(fraction * N)` guids per component, in component order.
/// A guid already claimed by an earlier component is skipped and the quota
/// is filled from further down the same ranking.
pub fn select(spec: &SubsetSpec, dynamics: &[TrainingDynamics], seed: u64) -> Result<Selection> {
    spec.validate()?;
    let n = dynamics.len();
    let mut claimed: HashSet<String> = HashSet::with_capacity(n);
    let mut selection = Selection::default();
    for (index, component) in spec.components.iter().enumerate() {
        let quota = component.fraction.quota(n);
        let mut taken = 0;
        for guid in rank(dynamics, component.category, component_seed(seed, spec, index)) {
            if taken == quota {
                break;
            }
            if claimed.insert(guid.clone()) {
                selection.entries.push(SelectedSample {
                    guid,
                    component_index: index,
                    category: component.category,
                });
                taken += 1;
            }
        }
        if taken < quota {
            return Err(Error::Selection {
                component: index,
                category: component.category.to_string(),
                shortfall: quota - taken,
            });
        }
    }
    Ok(selection)
}

/// The selected samples of `train`, in their original order or shuffled
/// with `order_seed`.
pub fn materialize<'a>(
    selection: impl IntoIterator<Item = &'a str>,
    train: &DatasetSplit,
    order_seed: Option<u64>,
) -> Result<DatasetSplit> {
    let position: HashMap<&str, usize> = train.guids().enumerate().map(|(i, g)| (g, i)).collect();
    let mut picked = Vec::new();
    let mut seen = HashSet::new();
    for guid in selection {
        let i = *position
            .get(guid)
            .ok_or_else(|| Error::Data(format!("selected guid {guid} is not in the train split")))?;
        if seen.insert(i) {
            picked.push(i);
        }
    }
    picked.sort_unstable();
    if let Some(seed) = order_seed {
        rng::shuffle(&mut picked, seed);
    }
    Ok(DatasetSplit::new(
        train.kind,
        picked.into_iter().map(|i| train.samples[i].clone()).collect(),
    ))
}

fn spec(name: &str, components: &[(Category, u64, u64)], shuffle_seed: Option<u64>) -> SubsetSpec {
    SubsetSpec {
        name: name.to_string(),
        components: components
            .iter()
            .map(|&(category, num, den)| Component {
                category,
                fraction: Fraction::new(num, den).expect("static fraction"),
            })
            .collect(),
        shuffle_seed,
    }
}

pub const RECIPE_NAMES: [&str; 9] = [
    "full-shuffled",
    "random-33",
    "easy-33",
    "hard-33",
    "ambiguous-33",
    "easy+hard",
    "easy+ambiguous",
    "hard+ambiguous",
    "easy+hard+ambiguous",
];

/// The nine standard subsets: the shuffled full set, a random third, the top
/// third of each category, each pair of categories at one sixth apiece, and
/// all three categories at one ninth apiece.
pub fn nine_recipes(seed: u64) -> Vec<SubsetSpec> {
    use Category::*;
    vec![
        spec(RECIPE_NAMES[0], &[(Random, 1, 1)], Some(rng::derive_seed_str(seed, "full-shuffled/order"))),
        spec(RECIPE_NAMES[1], &[(Random, 1, 3)], None),
        spec(RECIPE_NAMES[2], &[(EasyToLearn, 1, 3)], None),
        spec(RECIPE_NAMES[3], &[(HardToLearn, 1, 3)], None),
        spec(RECIPE_NAMES[4], &[(Ambiguous, 1, 3)], None),
        spec(RECIPE_NAMES[5], &[(EasyToLearn, 1, 6), (HardToLearn, 1, 6)], None),
        spec(RECIPE_NAMES[6], &[(EasyToLearn, 1, 6), (Ambiguous, 1, 6)], None),
        spec(RECIPE_NAMES[7], &[(HardToLearn, 1, 6), (Ambiguous, 1, 6)], None),
        spec(RECIPE_NAMES[8], &[(EasyToLearn, 1, 9), (HardToLearn, 1, 9), (Ambiguous, 1, 9)], None),
    ]
}

pub fn recipe(name: &str, seed: u64) -> Option<SubsetSpec> {
    nine_recipes(seed).into_iter().find(|s| s.name == name)
}

pub const MANIFEST_HEADER: &str = "guid\tcomponent_index\tcategory";

pub fn write_manifest<W: Write>(selection: &Selection, mut out: W) -> Result<()> {
    let mut text = String::from(MANIFEST_HEADER);
    text.push('\n');
    for e in &selection.entries {
        text.push_str(&format!("{}\t{}\t{}\n", e.guid, e.component_index, e.category));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn parse_manifest<R: Read>(input: R) -> Result<Selection> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(MANIFEST_HEADER) {
        return Err(Error::Parse { line: 1, message: format!("expected header `{MANIFEST_HEADER}`") });
    }
    let mut selection = Selection::default();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let bad = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 columns, found {}", fields.len())));
        }
        selection.entries.push(SelectedSample {
            guid: fields[0].to_string(),
            component_index: fields[1].parse().map_err(|_| bad("invalid component index".into()))?,
            category: fields[2].parse().map_err(bad)?,
        });
    }
    Ok(selection)
}
