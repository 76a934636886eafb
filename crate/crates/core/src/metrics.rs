//! Standard accuracy, minimal pair accuracy, prior bias and unknown rate.
//!
//! Every percentage is a [`Ratio`] of exact counts. Display rounds to one
//! decimal, half up, using integer arithmetic only. A ratio with a zero
//! denominator is absent and prints as `NA`, never as 0%.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Gender, PairLink, ProfessionStereotype, SentenceId};
use crate::morpho::GenderLabel;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no outcomes to score")]
    Empty,
    #[error("{0} has a neutral gold gender but a gendered set was expected")]
    NotGendered(SentenceId),
    #[error("{0} has a gendered gold label but the neutral set was expected")]
    NotNeutral(SentenceId),
    #[error("pair {pair}: no outcome for {id}")]
    MissingOutcome { pair: String, id: SentenceId },
    #[error("no gender realizations detected")]
    NoneDetected,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Result of gender extraction for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderOutcome {
    pub record_id: SentenceId,
    pub gold_gender: Gender,
    pub label: GenderLabel,
    /// Defined for gendered gold labels only. Unknown is never correct.
    pub correct: Option<bool>,
    /// Target token indices of the aligned entity.
    pub span: Vec<usize>,
}

impl GenderOutcome {
    pub fn new(record_id: SentenceId, gold_gender: Gender, label: GenderLabel, span: Vec<usize>) -> Self {
        let correct = gold_gender.is_gendered().then(|| label.matches(gold_gender));
        GenderOutcome { record_id, gold_gender, label, correct, span }
    }

    fn is_correct(&self) -> bool {
        self.correct == Some(true)
    }
}

/// `num / den` as a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        debug_assert!(num <= den);
        Ratio { num, den }
    }

    pub fn is_absent(&self) -> bool {
        self.den == 0
    }

    /// Percentage in tenths, rounded half up. `None` when absent.
    pub fn tenths(&self) -> Option<u64> {
        if self.den == 0 {
            return None;
        }
        // round(1000 * num / den) = floor((2000 * num + den) / (2 * den))
        Some((2000 * self.num as u128 + self.den as u128).div_euclid(2 * self.den as u128) as u64)
    }

    pub fn percent(&self) -> Option<f64> {
        (self.den > 0).then(|| 100.0 * self.num as f64 / self.den as f64)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tenths() {
            Some(t) => write!(f, "{}.{}", t / 10, t % 10),
            None => f.write_str("NA"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StandardAccuracy {
    pub overall: Ratio,
    pub masc: Ratio,
    pub fem: Ratio,
}

/// Share of correct outcomes overall and per gold gender. Unknown counts
/// as an error.
pub fn standard_accuracy(outcomes: &[GenderOutcome]) -> Result<StandardAccuracy, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut acc = StandardAccuracy::default();
    for o in outcomes {
        let stratum = match o.gold_gender {
            Gender::Male => &mut acc.masc,
            Gender::Female => &mut acc.fem,
            Gender::Neutral => return Err(MetricsError::NotGendered(o.record_id.clone())),
        };
        let hit = o.is_correct() as u64;
        stratum.den += 1;
        stratum.num += hit;
        acc.overall.den += 1;
        acc.overall.num += hit;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairAccuracy {
    pub mpa: Ratio,
    /// Accurate pairs whose profession is stereotypically feminine.
    pub pro_f: Ratio,
    pub pro_m: Ratio,
    /// Key hashes of the accurate pairs, in input order.
    pub accurate: Vec<String>,
}

/// A pair is accurate when both variants are correct.
pub fn minimal_pair_accuracy(
    pairs: &[PairLink],
    outcomes: &HashMap<SentenceId, GenderOutcome>,
) -> Result<PairAccuracy, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut out = PairAccuracy::default();
    let (mut f, mut m) = (0, 0);
    for p in pairs {
        let get = |id: &SentenceId| {
            outcomes.get(id).ok_or_else(|| MetricsError::MissingOutcome { pair: p.key_hash.clone(), id: id.clone() })
        };
        let male = get(&p.male_id)?;
        let female = get(&p.female_id)?;
        out.mpa.den += 1;
        if male.is_correct() && female.is_correct() {
            out.mpa.num += 1;
            out.accurate.push(p.key_hash.clone());
            match p.stereotype {
                ProfessionStereotype::ProF => f += 1,
                ProfessionStereotype::ProM => m += 1,
            }
        }
    }
    out.pro_f = Ratio::new(f, out.mpa.num);
    out.pro_m = Ratio::new(m, out.mpa.num);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PriorBias {
    pub masc: Ratio,
    pub fem: Ratio,
    /// Outcomes labelled masculine or feminine.
    pub detected: u64,
    pub unknown: u64,
}

/// Masculine/feminine split over the neutral set, Unknown excluded.
pub fn prior_bias(neutral: &[GenderOutcome]) -> Result<PriorBias, MetricsError> {
    let mut pb = PriorBias::default();
    let (mut m, mut f) = (0, 0);
    for o in neutral {
        if o.gold_gender != Gender::Neutral {
            return Err(MetricsError::NotNeutral(o.record_id.clone()));
        }
        match o.label {
            GenderLabel::Masculine => m += 1,
            GenderLabel::Feminine => f += 1,
            GenderLabel::Unknown => pb.unknown += 1,
        }
    }
    pb.detected = m + f;
    if pb.detected == 0 {
        return Err(MetricsError::NoneDetected);
    }
    pb.masc = Ratio::new(m, pb.detected);
    pb.fem = Ratio::new(f, pb.detected);
    Ok(pb)
}

pub fn unknown_rate(outcomes: &[GenderOutcome]) -> Result<Ratio, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::Empty);
    }
    let unknown = outcomes.iter().filter(|o| o.label == GenderLabel::Unknown).count();
    Ok(Ratio::new(unknown as u64, outcomes.len() as u64))
}

/// Everything a run measured. Sections that were not computed are `None`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub standard: Option<StandardAccuracy>,
    pub unknown_rate: Option<Ratio>,
    pub pairs: Option<PairAccuracy>,
    pub prior: Option<PriorBias>,
}

const RATIO_KEYS: &[&str] = &[
    "overall_acc",
    "masc_acc",
    "fem_acc",
    "unknown_rate",
    "mpa",
    "pro_f_share",
    "pro_m_share",
    "prior_masc",
    "prior_fem",
];

impl MetricsReport {
    fn ratios(&self) -> Vec<(&'static str, Option<Ratio>)> {
        let s = self.standard.as_ref();
        let p = self.pairs.as_ref();
        let b = self.prior.as_ref();
        vec![
            ("overall_acc", s.map(|s| s.overall)),
            ("masc_acc", s.map(|s| s.masc)),
            ("fem_acc", s.map(|s| s.fem)),
            ("unknown_rate", self.unknown_rate),
            ("mpa", p.map(|p| p.mpa)),
            ("pro_f_share", p.map(|p| p.pro_f)),
            ("pro_m_share", p.map(|p| p.pro_m)),
            ("prior_masc", b.map(|b| b.masc)),
            ("prior_fem", b.map(|b| b.fem)),
        ]
    }

    /// `key=value` lines: each percentage followed by its two counts.
    pub fn to_machine(&self) -> String {
        let mut out = String::new();
        for (key, r) in self.ratios() {
            match r {
                Some(r) => out.push_str(&format!("{key}={r}\n{key}_num={}\n{key}_den={}\n", r.num, r.den)),
                None => out.push_str(&format!("{key}=NA\n{key}_num=NA\n{key}_den=NA\n")),
            }
        }
        let unknown = self.prior.map(|b| b.unknown.to_string()).unwrap_or_else(|| "NA".into());
        out.push_str(&format!("prior_unknown={unknown}\n"));
        let accurate = self.pairs.as_ref().map(|p| p.accurate.join(",")).unwrap_or_else(|| "NA".into());
        out.push_str(&format!("accurate_pairs={accurate}\n"));
        out
    }

    /// Inverse of [`MetricsReport::to_machine`]. Percentages are recomputed
    /// from counts and checked against the printed values.
    pub fn parse_machine(text: &str) -> Result<Self, MetricsError> {
        let mut kv = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| MetricsError::Format { line: n + 1, message: "expected key=value".into() })?;
            kv.insert(k.trim().to_string(), (n + 1, v.trim().to_string()));
        }
        let missing = |k: &str| MetricsError::Format { line: 0, message: format!("missing key `{k}`") };
        let mut ratios: HashMap<&str, Option<Ratio>> = HashMap::new();
        for &key in RATIO_KEYS {
            let (line, shown) = kv.get(key).ok_or_else(|| missing(key))?;
            let num = &kv.get(&format!("{key}_num")).ok_or_else(|| missing(key))?.1;
            let den = &kv.get(&format!("{key}_den")).ok_or_else(|| missing(key))?.1;
            let r = if num == "NA" {
                None
            } else {
                let parse = |s: &str| {
                    s.parse::<u64>()
                        .map_err(|_| MetricsError::Format { line: *line, message: format!("bad count `{s}`") })
                };
                Some(Ratio { num: parse(num)?, den: parse(den)? })
            };
            let expect = r.map(|r| r.to_string()).unwrap_or_else(|| "NA".into());
            if &expect != shown {
                return Err(MetricsError::Format {
                    line: *line,
                    message: format!("{key}={shown} disagrees with its counts ({expect})"),
                });
            }
            ratios.insert(key, r);
        }
        let both =
            |a: &str, b: &str, c: &str| -> Option<(Ratio, Ratio, Ratio)> { Some((ratios[a]?, ratios[b]?, ratios[c]?)) };
        let standard = both("overall_acc", "masc_acc", "fem_acc").map(|(overall, masc, fem)| StandardAccuracy {
            overall,
            masc,
            fem,
        });
        let accurate = &kv.get("accurate_pairs").ok_or_else(|| missing("accurate_pairs"))?.1;
        let pairs = both("mpa", "pro_f_share", "pro_m_share").map(|(mpa, pro_f, pro_m)| PairAccuracy {
            mpa,
            pro_f,
            pro_m,
            accurate: accurate.split(',').filter(|s| !s.is_empty()).map(String::from).collect(),
        });
        let prior = match (ratios["prior_masc"], ratios["prior_fem"]) {
            (Some(masc), Some(fem)) => {
                let u = &kv.get("prior_unknown").ok_or_else(|| missing("prior_unknown"))?;
                let unknown =
                    u.1.parse().map_err(|_| MetricsError::Format { line: u.0, message: "bad prior_unknown".into() })?;
                Some(PriorBias { masc, fem, detected: masc.den, unknown })
            }
            _ => None,
        };
        Ok(MetricsReport { standard, unknown_rate: ratios["unknown_rate"], pairs, prior })
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let label = |k: &'static str| -> &'static str {
            match k {
                "overall_acc" => "Overall accuracy",
                "masc_acc" => "Masculine accuracy",
                "fem_acc" => "Feminine accuracy",
                "unknown_rate" => "Unknown rate",
                "mpa" => "Minimal pair accuracy",
                "pro_f_share" => "  Pro-F share",
                "pro_m_share" => "  Pro-M share",
                "prior_masc" => "Prior bias masculine",
                "prior_fem" => "Prior bias feminine",
                _ => k,
            }
        };
        let mut out = format!("{:<24} {:>7} {:>14}\n", "Metric", "%", "count");
        for (key, r) in self.ratios() {
            let Some(r) = r else { continue };
            let pct = if r.is_absent() { "NA".to_string() } else { format!("{r}%") };
            out.push_str(&format!("{:<24} {:>7} {:>14}\n", label(key), pct, format!("{}/{}", r.num, r.den)));
        }
        if let Some(b) = self.prior {
            out.push_str(&format!("{:<24} {:>7} {:>14}\n", "Prior bias unknown", "", b.unknown));
        }
        out
    }
}

fn format_span(span: &[usize]) -> String {
    if span.is_empty() {
        "-".into()
    } else {
        span.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Outcome file: `id<TAB>gold<TAB>label<TAB>correct<TAB>span`.
pub fn format_outcomes(outcomes: &[GenderOutcome]) -> String {
    outcomes
        .iter()
        .map(|o| {
            let correct = match o.correct {
                Some(c) => c.to_string(),
                None => "NA".into(),
            };
            format!("{}\t{}\t{}\t{}\t{}\n", o.record_id, o.gold_gender, o.label, correct, format_span(&o.span))
        })
        .collect()
}

pub fn parse_outcomes(text: &str) -> Result<Vec<GenderOutcome>, MetricsError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| MetricsError::Format { line: n + 1, message };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", f.len())));
        }
        let gold = Gender::from_str(f[1]).map_err(|g| bad(format!("bad gender `{g}`")))?;
        let label = GenderLabel::from_str(f[2]).map_err(|l| bad(format!("bad label `{l}`")))?;
        let span = if f[4] == "-" {
            Vec::new()
        } else {
            f[4].split(',')
                .map(|s| s.parse().map_err(|_| bad(format!("bad span `{}`", f[4]))))
                .collect::<Result<_, _>>()?
        };
        let o = GenderOutcome::new(SentenceId::from(f[0]), gold, label, span);
        let stated = match f[3] {
            "true" => Some(true),
            "false" => Some(false),
            "NA" => None,
            other => return Err(bad(format!("bad correct flag `{other}`"))),
        };
        if stated != o.correct {
            return Err(bad(format!("correct flag `{}` contradicts gold and label", f[3])));
        }
        out.push(o);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(id: &str, gold: Gender, label: GenderLabel) -> GenderOutcome {
        GenderOutcome::new(id.into(), gold, label, vec![1])
    }

    fn ratio_str(num: u64, den: u64) -> String {
        Ratio::new(num, den).to_string()
    }

    #[test]
    fn rounding() {
        assert_eq!(ratio_str(1901, 3888), "48.9");
        assert_eq!(ratio_str(365, 3888), "9.4");
        assert_eq!(ratio_str(1, 8), "12.5");
        assert_eq!(ratio_str(1, 16), "6.3"); // 6.25 rounds up
        assert_eq!(ratio_str(0, 5), "0.0");
        assert_eq!(ratio_str(0, 0), "NA");
    }

    #[test]
    fn standard_accuracy_example() {
        use GenderLabel::*;
        let mut v = Vec::new();
        for k in 0..5 {
            v.push(outcome(&format!("m:{k}"), Gender::Male, if k < 4 { Masculine } else { Feminine }));
            v.push(outcome(&format!("f:{k}"), Gender::Female, if k < 2 { Feminine } else { Unknown }));
        }
        let a = standard_accuracy(&v).unwrap();
        assert_eq!(
            (a.overall.to_string(), a.masc.to_string(), a.fem.to_string()),
            ("60.0".into(), "80.0".into(), "40.0".into())
        );
        let only_m: Vec<_> = v.iter().filter(|o| o.gold_gender == Gender::Male).cloned().collect();
        assert!(standard_accuracy(&only_m).unwrap().fem.is_absent());
        assert_eq!(standard_accuracy(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn pair_accuracy_example() {
        use GenderLabel::*;
        let mut outcomes = HashMap::new();
        let mut pairs = Vec::new();
        for k in 0..4 {
            let (m, f) = (SentenceId::from(format!("m:{k}").as_str()), SentenceId::from(format!("f:{k}").as_str()));
            let fl = if k == 0 { Feminine } else { Masculine };
            outcomes.insert(m.clone(), GenderOutcome::new(m.clone(), Gender::Male, Masculine, vec![]));
            outcomes.insert(f.clone(), GenderOutcome::new(f.clone(), Gender::Female, fl, vec![]));
            let stereotype = if k % 2 == 0 { ProfessionStereotype::ProF } else { ProfessionStereotype::ProM };
            pairs.push(PairLink { key_hash: format!("k{k}"), male_id: m, female_id: f, stereotype });
        }
        let r = minimal_pair_accuracy(&pairs, &outcomes).unwrap();
        assert_eq!(
            (r.mpa.to_string(), r.pro_f.to_string(), r.pro_m.to_string()),
            ("25.0".into(), "100.0".into(), "0.0".into())
        );
        assert_eq!(r.accurate, vec!["k0"]);

        outcomes.insert("f:0".into(), GenderOutcome::new("f:0".into(), Gender::Female, Unknown, vec![]));
        let r = minimal_pair_accuracy(&pairs, &outcomes).unwrap();
        assert_eq!(r.mpa.to_string(), "0.0");
        assert!(r.pro_f.is_absent() && r.pro_m.is_absent());

        outcomes.remove(&SentenceId::from("m:2"));
        assert_eq!(
            minimal_pair_accuracy(&pairs, &outcomes),
            Err(MetricsError::MissingOutcome { pair: "k2".into(), id: "m:2".into() })
        );
    }

    fn neutral(m: usize, f: usize, u: usize) -> Vec<GenderOutcome> {
        let labels = [(m, GenderLabel::Masculine), (f, GenderLabel::Feminine), (u, GenderLabel::Unknown)];
        labels.iter().flat_map(|&(n, l)| (0..n).map(move |k| outcome(&format!("n:{k}"), Gender::Neutral, l))).collect()
    }

    #[test]
    fn prior_bias_examples() {
        let pb = prior_bias(&neutral(853, 147, 200)).unwrap();
        assert_eq!((pb.masc.to_string(), pb.fem.to_string(), pb.detected), ("85.3".into(), "14.7".into(), 1000));
        let pb = prior_bias(&neutral(3, 1, 96)).unwrap();
        assert_eq!((pb.masc.to_string(), pb.fem.to_string()), ("75.0".into(), "25.0".into()));
        assert_eq!(prior_bias(&neutral(0, 0, 5)), Err(MetricsError::NoneDetected));
        let gendered = vec![outcome("x:1", Gender::Male, GenderLabel::Masculine)];
        assert!(matches!(prior_bias(&gendered), Err(MetricsError::NotNeutral(_))));
    }

    #[test]
    fn unknown_rate_examples() {
        assert_eq!(unknown_rate(&neutral(18, 0, 2)).unwrap().to_string(), "10.0");
        assert_eq!(unknown_rate(&neutral(1, 0, 0)).unwrap().to_string(), "0.0");
        assert_eq!(unknown_rate(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn correct_flag_rules() {
        assert_eq!(outcome("a:1", Gender::Male, GenderLabel::Unknown).correct, Some(false));
        assert_eq!(outcome("a:1", Gender::Neutral, GenderLabel::Masculine).correct, None);
    }

    #[test]
    fn machine_report_roundtrip() {
        let report = MetricsReport {
            standard: Some(StandardAccuracy {
                overall: Ratio::new(6, 10),
                masc: Ratio::new(4, 5),
                fem: Ratio::new(2, 5),
            }),
            unknown_rate: Some(Ratio::new(1, 10)),
            pairs: Some(PairAccuracy {
                mpa: Ratio::new(0, 3),
                pro_f: Ratio::new(0, 0),
                pro_m: Ratio::new(0, 0),
                accurate: vec![],
            }),
            prior: None,
        };
        let text = report.to_machine();
        assert!(text.contains("masc_acc=80.0\nmasc_acc_num=4\nmasc_acc_den=5\n"));
        assert!(text.contains("pro_f_share=NA\n"));
        assert!(text.contains("prior_masc=NA\n"));
        assert_eq!(MetricsReport::parse_machine(&text).unwrap(), report);
        let tampered = text.replace("masc_acc=80.0", "masc_acc=81.0");
        assert!(MetricsReport::parse_machine(&tampered).is_err());
        assert!(report.to_table().contains("Masculine accuracy"));
    }

    #[test]
    fn outcome_file_roundtrip() {
        let v = vec![
            GenderOutcome::new("en:1".into(), Gender::Male, GenderLabel::Feminine, vec![3, 4]),
            GenderOutcome::new("en:2".into(), Gender::Neutral, GenderLabel::Unknown, vec![]),
        ];
        let text = format_outcomes(&v);
        assert_eq!(text, "en:1\tmale\tfeminine\tfalse\t3,4\nen:2\tneutral\tunknown\tNA\t-\n");
        assert_eq!(parse_outcomes(&text).unwrap(), v);
        assert!(parse_outcomes("en:1\tmale\tfeminine\ttrue\t3\n").is_err());
    }
}
