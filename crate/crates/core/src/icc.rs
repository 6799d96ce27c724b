//! Launch messages: basic attributes plus typed extra parameters.

use std::fmt;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::{Driver, DriverError, LaunchResult};
use crate::scene::md5_hex;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IccError {
    #[error("unknown extra type `{0}`")]
    UnknownExtraType(String),
    #[error("launch message has an empty target activity")]
    EmptyTarget,
    #[error("extra `{key}` value `{value}` is not a valid {ty}")]
    InvalidValue {
        key: String,
        ty: ExtraType,
        value: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ExtraType {
    String,
    Char,
    Boolean,
    Number,
    Phone,
    Date,
    Time,
    Email,
}

impl ExtraType {
    pub const ALL: [ExtraType; 8] = [
        Self::String,
        Self::Char,
        Self::Boolean,
        Self::Number,
        Self::Phone,
        Self::Date,
        Self::Time,
        Self::Email,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::String => "STRING",
            Self::Char => "CHAR",
            Self::Boolean => "BOOLEAN",
            Self::Number => "NUMBER",
            Self::Phone => "PHONE",
            Self::Date => "DATE",
            Self::Time => "TIME",
            Self::Email => "EMAIL",
        }
    }

    /// Maps an editable widget's declared `inputType` to a value format.
    /// Unknown or absent input types are filled as plain text.
    pub fn from_input_type(input_type: &str) -> Self {
        let t = input_type.to_ascii_lowercase();
        if t.contains("email") {
            Self::Email
        } else if t.contains("phone") {
            Self::Phone
        } else if t.contains("datetime") || t == "date" {
            Self::Date
        } else if t == "time" {
            Self::Time
        } else if t.starts_with("number") {
            Self::Number
        } else {
            Self::String
        }
    }

    /// Whether `value` is well formed for this type.
    pub fn accepts(self, value: &str) -> bool {
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        match self {
            Self::String => true,
            Self::Char => value.chars().count() == 1,
            Self::Boolean => value == "true" || value == "false",
            Self::Number => value.parse::<i64>().is_ok(),
            Self::Phone => {
                let d = value.strip_prefix('+').unwrap_or(value);
                digits(d) && (7..=15).contains(&d.len())
            }
            Self::Date => parse_date(value).is_some(),
            Self::Time => match value.split_once(':') {
                Some((h, m)) if h.len() == 2 && m.len() == 2 && digits(h) && digits(m) => {
                    h.parse::<u8>().is_ok_and(|h| h < 24) && m.parse::<u8>().is_ok_and(|m| m < 60)
                }
                _ => false,
            },
            Self::Email => match value.split_once('@') {
                Some((local, domain)) => {
                    !local.is_empty()
                        && !value.contains(char::is_whitespace)
                        && !domain.contains('@')
                        && domain.split('.').count() >= 2
                        && domain.split('.').all(|p| !p.is_empty())
                }
                None => false,
            },
        }
    }
}

impl fmt::Display for ExtraType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtraType {
    type Err = IccError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == upper)
            .ok_or_else(|| IccError::UnknownExtraType(s.to_string()))
    }
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 0,
    }
}

fn parse_date(s: &str) -> Option<(u32, u32, u32)> {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    let num = |r: std::ops::Range<usize>| -> Option<u32> {
        let part = &s[r];
        part.bytes().all(|c| c.is_ascii_digit()).then(|| part.parse().ok())?
    };
    let (y, m, d) = (num(0..4)?, num(5..7)?, num(8..10)?);
    (d >= 1 && d <= days_in_month(y, m)).then_some((y, m, d))
}

/// Derives a stable per-purpose seed from a run seed and a label path.
pub fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut key = base.to_string();
    for p in parts {
        key.push('\u{1f}');
        key.push_str(p);
    }
    let hex = md5_hex(key.as_bytes());
    u64::from_str_radix(&hex[..16], 16).expect("md5 hex digest")
}

/// Generates a well-formed value of `ty`; fixed seeds give fixed values.
pub fn generate_value(ty: ExtraType, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters = |n: usize, rng: &mut ChaCha8Rng| -> String {
        (0..n).map(|_| char::from(b'a' + rng.random_range(0..26u8))).collect()
    };
    match ty {
        ExtraType::String => letters(8, &mut rng),
        ExtraType::Char => {
            let c = rng.random_range(0..52u8);
            char::from(if c < 26 { b'a' + c } else { b'A' + c - 26 }).to_string()
        }
        ExtraType::Boolean => rng.random_bool(0.5).to_string(),
        ExtraType::Number => rng.random_range(0..=10_000u32).to_string(),
        ExtraType::Phone => (0..11)
            .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
            .collect(),
        ExtraType::Date => {
            let year = rng.random_range(1970..=2037u32);
            let month = rng.random_range(1..=12u32);
            let day = rng.random_range(1..=days_in_month(year, month));
            format!("{year:04}-{month:02}-{day:02}")
        }
        ExtraType::Time => format!(
            "{:02}:{:02}",
            rng.random_range(0..24u32),
            rng.random_range(0..60u32)
        ),
        ExtraType::Email => format!("{}@example.com", letters(8, &mut rng)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extra {
    pub key: String,
    #[serde(rename = "type")]
    pub ty: ExtraType,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IccMessage {
    pub target_activity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_uri: Option<String>,
    #[serde(default)]
    pub extras: Vec<Extra>,
}

impl IccMessage {
    pub fn new(target_activity: impl Into<String>, extras: Vec<Extra>) -> Result<Self, IccError> {
        let msg = Self {
            target_activity: target_activity.into(),
            action: None,
            category: None,
            data_uri: None,
            extras,
        };
        msg.validate()?;
        Ok(msg)
    }

    pub fn validate(&self) -> Result<(), IccError> {
        if self.target_activity.is_empty() {
            return Err(IccError::EmptyTarget);
        }
        for e in &self.extras {
            if !e.ty.accepts(&e.value) {
                return Err(IccError::InvalidValue {
                    key: e.key.clone(),
                    ty: e.ty,
                    value: e.value.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn extra(&self, key: &str) -> Option<&Extra> {
        self.extras.iter().find(|e| e.key == key)
    }
}

/// Statically collected launch information for one activity. Extra types
/// are kept as the raw strings the collector reported.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IccSpec {
    pub target_activity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_uri: Option<String>,
    #[serde(default)]
    pub extras: Vec<ExtraSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraSpec {
    pub key: String,
    #[serde(rename = "type")]
    pub ty: String,
}

/// Builds one launch message per spec, generating a single value for each
/// required extra.
pub fn build_icc(spec: &IccSpec, seed: u64) -> Result<IccMessage, IccError> {
    let extras = spec
        .extras
        .iter()
        .map(|e| {
            let ty: ExtraType = e.ty.parse()?;
            let value = generate_value(ty, derive_seed(seed, &[&spec.target_activity, &e.key]));
            Ok(Extra {
                key: e.key.clone(),
                ty,
                value,
            })
        })
        .collect::<Result<Vec<_>, IccError>>()?;
    let msg = IccMessage {
        target_activity: spec.target_activity.clone(),
        action: spec.action.clone(),
        category: spec.category.clone(),
        data_uri: spec.data_uri.clone(),
        extras,
    };
    msg.validate()?;
    Ok(msg)
}

/// Launches `icc.target_activity` straight from the driver.
pub fn direct_launch<D: Driver + ?Sized>(
    driver: &mut D,
    icc: &IccMessage,
) -> Result<LaunchResult, DriverError> {
    let result = driver.launch_activity(icc)?;
    if result.success {
        let dump = driver.current_dump()?;
        if dump.activity.as_deref() != Some(icc.target_activity.as_str()) {
            return Err(DriverError::Failure(format!(
                "launch of {} reported success but {:?} is in front",
                icc.target_activity, dump.activity
            )));
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_domain() {
        for seed in 0..50 {
            let v = generate_value(ExtraType::Boolean, seed);
            assert!(v == "true" || v == "false");
        }
    }

    #[test]
    fn phone_seed_42() {
        let re = regex::Regex::new(r"^[0-9]{11}$").unwrap();
        let v = generate_value(ExtraType::Phone, 42);
        assert!(re.is_match(&v), "{v}");
        assert_eq!(v, generate_value(ExtraType::Phone, 42));
    }

    #[test]
    fn date_seed_7_is_a_calendar_date() {
        let re = regex::Regex::new(r"^\d{4}-\d{2}-\d{2}$").unwrap();
        let v = generate_value(ExtraType::Date, 7);
        assert!(re.is_match(&v), "{v}");
        assert!(chrono::NaiveDate::parse_from_str(&v, "%Y-%m-%d").is_ok(), "{v}");
    }

    #[test]
    fn every_type_accepts_its_own_values() {
        let patterns = [
            (ExtraType::String, r"^[a-z]{8}$"),
            (ExtraType::Char, r"^[A-Za-z]$"),
            (ExtraType::Boolean, r"^(true|false)$"),
            (ExtraType::Number, r"^[0-9]+$"),
            (ExtraType::Phone, r"^[0-9]{11}$"),
            (ExtraType::Date, r"^\d{4}-\d{2}-\d{2}$"),
            (ExtraType::Time, r"^([01]\d|2[0-3]):[0-5]\d$"),
            (ExtraType::Email, r"^[a-z]{8}@example\.com$"),
        ];
        for (ty, pat) in patterns {
            let re = regex::Regex::new(pat).unwrap();
            for seed in 0..300 {
                let v = generate_value(ty, seed);
                assert!(re.is_match(&v), "{ty} seed {seed}: {v}");
                assert!(ty.accepts(&v), "{ty} rejects own value {v}");
            }
        }
        for seed in 0..2000 {
            let v = generate_value(ExtraType::Date, seed);
            assert!(chrono::NaiveDate::parse_from_str(&v, "%Y-%m-%d").is_ok(), "{v}");
            let n: u32 = generate_value(ExtraType::Number, seed).parse().unwrap();
            assert!(n <= 10_000);
        }
    }

    #[test]
    fn date_validation_matches_calendar() {
        // chrono as the independent calendar
        for y in [1900u32, 1999, 2000, 2023, 2024] {
            for m in 0..=13u32 {
                for d in 0..=32u32 {
                    let s = format!("{y:04}-{m:02}-{d:02}");
                    let oracle = chrono::NaiveDate::from_ymd_opt(y as i32, m, d).is_some();
                    assert_eq!(ExtraType::Date.accepts(&s), oracle, "{s}");
                }
            }
        }
    }

    #[test]
    fn rejects_malformed_values() {
        assert!(!ExtraType::Char.accepts("ab"));
        assert!(!ExtraType::Boolean.accepts("yes"));
        assert!(!ExtraType::Number.accepts("12a"));
        assert!(!ExtraType::Phone.accepts("12-34"));
        assert!(!ExtraType::Time.accepts("24:00"));
        assert!(!ExtraType::Time.accepts("9:30"));
        assert!(!ExtraType::Email.accepts("nobody"));
        assert!(!ExtraType::Email.accepts("a@b"));
    }

    #[test]
    fn input_type_mapping() {
        assert_eq!(ExtraType::from_input_type("phone"), ExtraType::Phone);
        assert_eq!(ExtraType::from_input_type("textEmailAddress"), ExtraType::Email);
        assert_eq!(ExtraType::from_input_type("numberDecimal"), ExtraType::Number);
        assert_eq!(ExtraType::from_input_type("date"), ExtraType::Date);
        assert_eq!(ExtraType::from_input_type("time"), ExtraType::Time);
        assert_eq!(ExtraType::from_input_type(""), ExtraType::String);
    }

    fn spec(extras: &[(&str, &str)]) -> IccSpec {
        IccSpec {
            target_activity: "com.ex.Detail".into(),
            action: Some("android.intent.action.VIEW".into()),
            extras: extras
                .iter()
                .map(|(k, t)| ExtraSpec {
                    key: (*k).into(),
                    ty: (*t).into(),
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn build_without_extras() {
        let msg = build_icc(&spec(&[]), 1).unwrap();
        assert!(msg.extras.is_empty());
        assert_eq!(msg.action.as_deref(), Some("android.intent.action.VIEW"));
        assert_eq!(msg.target_activity, "com.ex.Detail");
    }

    #[test]
    fn build_preserves_keys() {
        let msg = build_icc(&spec(&[("uid", "STRING"), ("flag", "BOOLEAN")]), 1).unwrap();
        let keys: Vec<_> = msg.extras.iter().map(|e| (e.key.as_str(), e.ty)).collect();
        assert_eq!(keys, [("uid", ExtraType::String), ("flag", ExtraType::Boolean)]);
        assert_eq!(msg, build_icc(&spec(&[("uid", "STRING"), ("flag", "BOOLEAN")]), 1).unwrap());
    }

    #[test]
    fn build_rejects_unknown_type() {
        assert_eq!(
            build_icc(&spec(&[("p", "PARCELABLE")]), 1),
            Err(IccError::UnknownExtraType("PARCELABLE".into()))
        );
    }

    #[test]
    fn message_invariants() {
        assert_eq!(IccMessage::new("", vec![]), Err(IccError::EmptyTarget));
        let bad = Extra {
            key: "n".into(),
            ty: ExtraType::Number,
            value: "x".into(),
        };
        assert!(matches!(IccMessage::new("A", vec![bad]), Err(IccError::InvalidValue { .. })));
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_ne!(derive_seed(1, &["a"]), derive_seed(1, &["b"]));
        assert_eq!(derive_seed(1, &["a", "b"]), derive_seed(1, &["a", "b"]));
    }
}
