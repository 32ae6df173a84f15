//! Player profiles built from Likert questionnaire answers.
//!
//! A profile has four factors in `[0, 1]`: familiarity with the game (`f`),
//! gaming experience (`gE`), preference to explore (`pE`) and persistence
//! (`p`). Agents only ever look at the binarized form, where a factor is
//! high when strictly above 0.5.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;

/// Values at or below this are "low"; strictly above are "high".
pub const THRESHOLD: f64 = 0.5;

pub const LIKERT_MIN: i64 = 1;
pub const LIKERT_MAX: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    #[serde(rename = "f")]
    Familiarity,
    #[serde(rename = "gE")]
    GamingExperience,
    #[serde(rename = "pE")]
    PreferenceToExplore,
    #[serde(rename = "p")]
    Persistence,
}

impl Factor {
    pub const ALL: [Factor; 4] = [
        Factor::Familiarity,
        Factor::GamingExperience,
        Factor::PreferenceToExplore,
        Factor::Persistence,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Factor::Familiarity => "f",
            Factor::GamingExperience => "gE",
            Factor::PreferenceToExplore => "pE",
            Factor::Persistence => "p",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub text: String,
    pub factor: Factor,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Questionnaire {
    pub statements: Vec<Statement>,
}

impl Questionnaire {
    /// The ten profile statements, in presentation order.
    pub fn standard() -> Self {
        use Factor::*;
        use Polarity::*;
        let rows: [(&str, Factor, Polarity); 10] = [
            ("My familiarity with the text-based game \"Anchorhead\" is", Familiarity, Positive),
            ("My gaming experience is", GamingExperience, Positive),
            ("I think about the consequences of my actions when playing", GamingExperience, Positive),
            ("I complete one quest at a time", GamingExperience, Negative),
            ("I explore all the places, elements and characters of the virtual world", PreferenceToExplore, Positive),
            ("I complete all quests, including those that aren't necessary to finish the game", PreferenceToExplore, Positive),
            ("I only do what is necessary to pass a level or complete a quest", PreferenceToExplore, Negative),
            ("If I fail a quest, I repeat it until I complete it", Persistence, Positive),
            ("I defer my other activities if I'm stuck on a task or mission while playing", Persistence, Positive),
            ("I give up on quests if I find more appealing ones", Persistence, Negative),
        ];
        Self {
            statements: rows
                .into_iter()
                .map(|(text, factor, polarity)| Statement {
                    text: text.to_owned(),
                    factor,
                    polarity,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

/// Answers on a 1 (strongly disagree) to 5 (strongly agree) scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct LikertResponse {
    answers: Vec<u8>,
}

impl TryFrom<Vec<i64>> for LikertResponse {
    type Error = ProfileError;

    fn try_from(answers: Vec<i64>) -> Result<Self, Self::Error> {
        Self::new(answers)
    }
}

impl From<LikertResponse> for Vec<i64> {
    fn from(r: LikertResponse) -> Self {
        r.answers.into_iter().map(i64::from).collect()
    }
}

impl LikertResponse {
    pub fn new(answers: Vec<i64>) -> Result<Self, ProfileError> {
        let answers = answers
            .into_iter()
            .enumerate()
            .map(|(index, value)| check_likert(index, value))
            .collect::<Result<_, _>>()?;
        Ok(Self { answers })
    }

    pub fn answers(&self) -> &[u8] {
        &self.answers
    }
}

fn check_likert(index: usize, value: i64) -> Result<u8, ProfileError> {
    if (LIKERT_MIN..=LIKERT_MAX).contains(&value) {
        Ok(value as u8)
    } else {
        Err(ProfileError::OutOfRange { index, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct PlayerProfile {
    pub f: f64,
    #[serde(rename = "gE")]
    pub g_e: f64,
    #[serde(rename = "pE")]
    pub p_e: f64,
    pub p: f64,
}

#[derive(Deserialize)]
struct RawProfile {
    f: f64,
    #[serde(rename = "gE")]
    g_e: f64,
    #[serde(rename = "pE")]
    p_e: f64,
    p: f64,
}

impl TryFrom<RawProfile> for PlayerProfile {
    type Error = ProfileError;

    fn try_from(raw: RawProfile) -> Result<Self, Self::Error> {
        PlayerProfile::new(raw.f, raw.g_e, raw.p_e, raw.p)
    }
}

impl PlayerProfile {
    pub fn new(f: f64, g_e: f64, p_e: f64, p: f64) -> Result<Self, ProfileError> {
        let profile = Self { f, g_e, p_e, p };
        for factor in Factor::ALL {
            let value = profile.get(factor);
            if !(0.0..=1.0).contains(&value) {
                return Err(ProfileError::FactorOutOfRange {
                    factor: factor.symbol(),
                    value,
                });
            }
        }
        Ok(profile)
    }

    pub fn get(&self, factor: Factor) -> f64 {
        match factor {
            Factor::Familiarity => self.f,
            Factor::GamingExperience => self.g_e,
            Factor::PreferenceToExplore => self.p_e,
            Factor::Persistence => self.p,
        }
    }

    pub fn with(mut self, factor: Factor, value: f64) -> Result<Self, ProfileError> {
        match factor {
            Factor::Familiarity => self.f = value,
            Factor::GamingExperience => self.g_e = value,
            Factor::PreferenceToExplore => self.p_e = value,
            Factor::Persistence => self.p = value,
        }
        Self::new(self.f, self.g_e, self.p_e, self.p)
    }

    /// Replaces the Likert-derived familiarity with a yes/no answer.
    pub fn with_boolean_familiarity(mut self, familiar: bool) -> Self {
        self.f = if familiar { 1.0 } else { 0.0 };
        self
    }

    pub fn binarize(&self) -> BinaryProfile {
        binarize(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    High,
}

impl Level {
    pub fn of(value: f64) -> Self {
        if value > THRESHOLD {
            Level::High
        } else {
            Level::Low
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Level::Low => 0,
            Level::High => 1,
        }
    }
}

/// Profile with each factor reduced to 0 (low) or 1 (high). Ordering is
/// lexicographic over `(f, gE, pE, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBits", into = "RawBits")]
pub struct BinaryProfile {
    bits: [u8; 4],
}

#[derive(Serialize, Deserialize)]
struct RawBits {
    f: u8,
    #[serde(rename = "gE")]
    g_e: u8,
    #[serde(rename = "pE")]
    p_e: u8,
    p: u8,
}

impl TryFrom<RawBits> for BinaryProfile {
    type Error = ProfileError;

    fn try_from(raw: RawBits) -> Result<Self, Self::Error> {
        let bits = [raw.f, raw.g_e, raw.p_e, raw.p];
        if bits.iter().any(|&b| b > 1) {
            return Err(ProfileError::BadBits(format!("{bits:?}")));
        }
        Ok(Self { bits })
    }
}

impl From<BinaryProfile> for RawBits {
    fn from(b: BinaryProfile) -> Self {
        let [f, g_e, p_e, p] = b.bits;
        RawBits { f, g_e, p_e, p }
    }
}

impl BinaryProfile {
    pub fn from_levels(f: Level, g_e: Level, p_e: Level, p: Level) -> Self {
        Self {
            bits: [f.bit(), g_e.bit(), p_e.bit(), p.bit()],
        }
    }

    pub fn level(&self, factor: Factor) -> Level {
        let idx = Factor::ALL.iter().position(|&f| f == factor).unwrap_or(0);
        if self.bits[idx] == 1 {
            Level::High
        } else {
            Level::Low
        }
    }

    pub fn is_high(&self, factor: Factor) -> bool {
        self.level(factor) == Level::High
    }

    pub fn bits(&self) -> [u8; 4] {
        self.bits
    }

    /// Extreme profile (every factor 0.0 or 1.0) with this binarization.
    pub fn to_profile(&self) -> PlayerProfile {
        let [f, g_e, p_e, p] = self.bits.map(f64::from);
        PlayerProfile { f, g_e, p_e, p }
    }
}

impl fmt::Display for BinaryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryProfile {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits: Vec<u8> = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' ' | '{' | '}'))
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(ProfileError::BadBits(s.to_owned())),
            })
            .collect::<Result<_, _>>()?;
        let bits: [u8; 4] = digits
            .try_into()
            .map_err(|_| ProfileError::BadBits(s.to_owned()))?;
        Ok(Self { bits })
    }
}

/// Linear scaling of two positive answers and one negative answer onto
/// `[0, 1]`: the raw score `p1 + p2 - n1` spans `-3..=9`.
pub fn normalize_factor(p1: i64, p2: i64, n1: i64) -> Result<f64, ProfileError> {
    check_likert(0, p1)?;
    check_likert(1, p2)?;
    check_likert(2, n1)?;
    Ok((p1 + p2 - n1 + 3) as f64 / 12.0)
}

/// Single-statement factor (familiarity): `(answer - 1) / 4`.
pub fn normalize_single(answer: i64) -> Result<f64, ProfileError> {
    check_likert(0, answer)?;
    Ok((answer - LIKERT_MIN) as f64 / (LIKERT_MAX - LIKERT_MIN) as f64)
}

pub fn build_profile(
    questionnaire: &Questionnaire,
    response: &LikertResponse,
) -> Result<PlayerProfile, ProfileError> {
    if questionnaire.len() != response.answers.len() {
        return Err(ProfileError::LengthMismatch {
            expected: questionnaire.len(),
            actual: response.answers.len(),
        });
    }
    let mut values = [0.0; 4];
    for (slot, factor) in Factor::ALL.into_iter().enumerate() {
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for (statement, &answer) in questionnaire.statements.iter().zip(&response.answers) {
            if statement.factor != factor {
                continue;
            }
            match statement.polarity {
                Polarity::Positive => positives.push(i64::from(answer)),
                Polarity::Negative => negatives.push(i64::from(answer)),
            }
        }
        values[slot] = match (positives.as_slice(), negatives.as_slice()) {
            ([p1, p2], [n1]) => normalize_factor(*p1, *p2, *n1)?,
            ([single], []) => normalize_single(*single)?,
            _ => {
                return Err(ProfileError::LengthMismatch {
                    expected: 3,
                    actual: positives.len() + negatives.len(),
                })
            }
        };
    }
    PlayerProfile::new(values[0], values[1], values[2], values[3])
}

pub fn binarize(profile: &PlayerProfile) -> BinaryProfile {
    BinaryProfile::from_levels(
        Level::of(profile.f),
        Level::of(profile.g_e),
        Level::of(profile.p_e),
        Level::of(profile.p),
    )
}

/// Raises familiarity to 1.0 on replays (`game_index >= 2`) when it was
/// below 0.5; everything else is carried over.
pub fn apply_replay_rule(
    profile: PlayerProfile,
    game_index: u32,
) -> Result<PlayerProfile, ProfileError> {
    match game_index {
        0 => Err(ProfileError::ZeroGameIndex),
        1 => Ok(profile),
        _ if profile.f < THRESHOLD => Ok(PlayerProfile { f: 1.0, ..profile }),
        _ => Ok(profile),
    }
}

/// All sixteen binary profiles from 0000 to 1111.
pub fn enumerate_binary_profiles() -> Vec<BinaryProfile> {
    (0u8..16)
        .map(|n| BinaryProfile {
            bits: [(n >> 3) & 1, (n >> 2) & 1, (n >> 1) & 1, n & 1],
        })
        .collect()
}

/// Profile as exported to clients and files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileExport {
    #[serde(flatten)]
    pub profile: PlayerProfile,
    pub binarized: BinaryProfile,
}

impl From<PlayerProfile> for ProfileExport {
    fn from(profile: PlayerProfile) -> Self {
        Self {
            binarized: binarize(&profile),
            profile,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_spot_values() {
        assert_eq!(normalize_factor(5, 5, 1).unwrap(), 1.0);
        assert_eq!(normalize_factor(1, 1, 5).unwrap(), 0.0);
        assert_eq!(normalize_factor(4, 3, 2).unwrap(), 8.0 / 12.0);
        assert!(normalize_factor(0, 3, 2).is_err());
        assert!(normalize_factor(3, 3, 6).is_err());
    }

    #[test]
    fn normalize_is_bounded_and_monotone_over_all_triples() {
        for p1 in 1..=5 {
            for p2 in 1..=5 {
                for n1 in 1..=5 {
                    let v = normalize_factor(p1, p2, n1).unwrap();
                    assert!((0.0..=1.0).contains(&v));
                    if p1 < 5 {
                        assert!(normalize_factor(p1 + 1, p2, n1).unwrap() >= v);
                    }
                    if p2 < 5 {
                        assert!(normalize_factor(p1, p2 + 1, n1).unwrap() >= v);
                    }
                    if n1 < 5 {
                        assert!(normalize_factor(p1, p2, n1 + 1).unwrap() <= v);
                    }
                }
            }
        }
    }

    #[test]
    fn standard_questionnaire_shape() {
        let q = Questionnaire::standard();
        assert_eq!(q.len(), 10);
        let count = |f: Factor, pol: Polarity| {
            q.statements
                .iter()
                .filter(|s| s.factor == f && s.polarity == pol)
                .count()
        };
        assert_eq!(count(Factor::Familiarity, Polarity::Positive), 1);
        assert_eq!(count(Factor::Familiarity, Polarity::Negative), 0);
        for f in [
            Factor::GamingExperience,
            Factor::PreferenceToExplore,
            Factor::Persistence,
        ] {
            assert_eq!(count(f, Polarity::Positive), 2);
            assert_eq!(count(f, Polarity::Negative), 1);
        }
    }

    #[test]
    fn build_profile_extremes_and_midpoint() {
        let q = Questionnaire::standard();
        let max = LikertResponse::new(vec![5, 5, 5, 1, 5, 5, 1, 5, 5, 1]).unwrap();
        let p = build_profile(&q, &max).unwrap();
        assert_eq!((p.f, p.g_e, p.p_e, p.p), (1.0, 1.0, 1.0, 1.0));

        let mid = LikertResponse::new(vec![3; 10]).unwrap();
        let p = build_profile(&q, &mid).unwrap();
        assert_eq!((p.f, p.g_e, p.p_e, p.p), (0.5, 0.5, 0.5, 0.5));

        let pe_all_five = LikertResponse::new(vec![3, 3, 3, 3, 5, 5, 5, 3, 3, 3]).unwrap();
        let p = build_profile(&q, &pe_all_five).unwrap();
        assert_eq!(p.p_e, 8.0 / 12.0);
    }

    #[test]
    fn build_profile_rejects_wrong_length() {
        let q = Questionnaire::standard();
        let short = LikertResponse::new(vec![3; 9]).unwrap();
        assert_eq!(
            build_profile(&q, &short),
            Err(ProfileError::LengthMismatch {
                expected: 10,
                actual: 9
            })
        );
        assert!(LikertResponse::new(vec![3, 3, 6]).is_err());
    }

    #[test]
    fn binarize_boundary() {
        let at = PlayerProfile::new(0.5, 0.5000001, 0.0, 1.0).unwrap();
        let b = binarize(&at);
        assert_eq!(b.bits(), [0, 1, 0, 1]);
        let zero = PlayerProfile::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(binarize(&zero).bits(), [0, 0, 0, 0]);
    }

    #[test]
    fn replay_rule() {
        let p = PlayerProfile::new(0.4, 0.2, 0.3, 0.9).unwrap();
        assert_eq!(apply_replay_rule(p, 2).unwrap().f, 1.0);
        assert_eq!(apply_replay_rule(p, 2).unwrap().p, 0.9);
        assert_eq!(apply_replay_rule(p, 1).unwrap().f, 0.4);
        let familiar = PlayerProfile { f: 0.7, ..p };
        assert_eq!(apply_replay_rule(familiar, 2).unwrap().f, 0.7);
        assert_eq!(apply_replay_rule(p, 0), Err(ProfileError::ZeroGameIndex));
    }

    #[test]
    fn sixteen_binary_profiles_in_order() {
        let all = enumerate_binary_profiles();
        assert_eq!(all.len(), 16);
        assert_eq!(all[0].bits(), [0, 0, 0, 0]);
        assert_eq!(all[1].bits(), [0, 0, 0, 1]);
        assert_eq!(all[15].bits(), [1, 1, 1, 1]);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, all);
    }

    #[test]
    fn binary_profile_text_and_json() {
        let b: BinaryProfile = "0101".parse().unwrap();
        assert_eq!(b.to_string(), "0101");
        assert_eq!("{0,1,0,1}".parse::<BinaryProfile>().unwrap(), b);
        assert!("012".parse::<BinaryProfile>().is_err());
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, r#"{"f":0,"gE":1,"pE":0,"p":1}"#);
        assert_eq!(serde_json::from_str::<BinaryProfile>(&json).unwrap(), b);
    }

    #[test]
    fn profile_json_rejects_out_of_range() {
        assert!(serde_json::from_str::<PlayerProfile>(r#"{"f":1.2,"gE":0,"pE":0,"p":0}"#).is_err());
        let export = ProfileExport::from(PlayerProfile::new(0.25, 0.75, 0.5, 1.0).unwrap());
        let json = serde_json::to_value(&export).unwrap();
        assert_eq!(json["gE"], 0.75);
        assert_eq!(json["binarized"]["gE"], 1);
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0f64..=1.0
    }

    proptest! {
        #[test]
        fn binarize_is_idempotent(f in unit(), g in unit(), e in unit(), p in unit()) {
            let b = binarize(&PlayerProfile::new(f, g, e, p).unwrap());
            prop_assert_eq!(binarize(&b.to_profile()), b);
        }

        #[test]
        fn replay_rule_is_idempotent(f in unit(), idx in 2u32..10) {
            let p = PlayerProfile::new(f, 0.5, 0.5, 0.5).unwrap();
            let once = apply_replay_rule(p, idx).unwrap();
            prop_assert_eq!(apply_replay_rule(once, idx).unwrap(), once);
        }
    }
}
