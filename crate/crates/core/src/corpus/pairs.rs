//! Minimal pairs: two records identical up to the gender of their pronouns.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::pronouns;
use super::{CorpusError, Gender, ProfessionStereotype, SentenceId, SentenceRecord, StereotypeLexicon};

/// Gender-erased token sequence plus the entity index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairingKey {
    pub entity_index: usize,
    pub tokens: Vec<String>,
}

impl PairingKey {
    pub fn of(record: &SentenceRecord) -> Self {
        let tokens = record.tokens();
        let erased = (0..tokens.len())
            .map(|i| match pronouns::classify(&tokens, i) {
                Some(hit) => {
                    let a = crate::text::Affixed::split(tokens[i]);
                    format!("{}{}{}", a.prefix, hit.placeholder(), a.suffix)
                }
                None => tokens[i].to_lowercase(),
            })
            .collect();
        PairingKey { entity_index: record.entity_index, tokens: erased }
    }

    /// Stable short hash, the first 16 hex digits of SHA-256.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.entity_index.to_string().as_bytes());
        h.update(b"\t");
        h.update(self.tokens.join(" ").as_bytes());
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for PairingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.tokens.join(" "), self.entity_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalPair {
    pub key: PairingKey,
    pub male_variant: SentenceRecord,
    pub female_variant: SentenceRecord,
    pub profession: String,
    pub stereotype_of_profession: ProfessionStereotype,
}

impl MinimalPair {
    pub fn link(&self) -> PairLink {
        PairLink {
            key_hash: self.key.hash(),
            male_id: self.male_variant.id.clone(),
            female_id: self.female_variant.id.clone(),
            stereotype: self.stereotype_of_profession,
        }
    }
}

/// The serialized form of a pair: ids only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLink {
    pub key_hash: String,
    pub male_id: SentenceId,
    pub female_id: SentenceId,
    pub stereotype: ProfessionStereotype,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnpairedReason {
    /// No record of the other gender shares the key.
    NoCounterpart,
    /// The profession has no entry in the stereotype lexicon.
    NoStereotype,
    /// The two variants carry no gendered pronoun and are identical.
    NoCue,
}

impl fmt::Display for UnpairedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnpairedReason::NoCounterpart => "no_counterpart",
            UnpairedReason::NoStereotype => "no_stereotype",
            UnpairedReason::NoCue => "no_cue",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    /// Sorted by male variant id.
    pub pairs: Vec<MinimalPair>,
    /// Sorted by id.
    pub unpaired: Vec<(SentenceId, UnpairedReason)>,
}

impl PairSet {
    pub fn links(&self) -> Vec<PairLink> {
        self.pairs.iter().map(MinimalPair::link).collect()
    }
}

/// Group gendered records into minimal pairs.
///
/// Every key with exactly one male and one female record yields a pair;
/// everything else is reported unpaired. Two records with the same key and
/// the same gender make the key ambiguous, which is an error.
pub fn build_minimal_pairs(records: &[SentenceRecord], lexicon: &StereotypeLexicon) -> Result<PairSet, CorpusError> {
    let mut groups: BTreeMap<PairingKey, (Vec<&SentenceRecord>, Vec<&SentenceRecord>)> = BTreeMap::new();
    for r in records {
        let slot = groups.entry(PairingKey::of(r)).or_default();
        match r.gold_gender {
            Gender::Male => slot.0.push(r),
            Gender::Female => slot.1.push(r),
            Gender::Neutral => return Err(CorpusError::NeutralRecord(r.id.clone())),
        }
    }

    let mut set = PairSet::default();
    for (key, (males, females)) in groups {
        for same in [&males, &females] {
            if same.len() > 1 {
                let mut ids: Vec<SentenceId> = same.iter().map(|r| r.id.clone()).collect();
                ids.sort();
                return Err(CorpusError::AmbiguousKey { key: key.to_string(), ids });
            }
        }
        match (males.first(), females.first()) {
            (Some(m), Some(f)) => {
                let reason = if m.sentence.to_lowercase() == f.sentence.to_lowercase() {
                    Some(UnpairedReason::NoCue)
                } else if lexicon.get(&m.profession_key()).is_none() {
                    Some(UnpairedReason::NoStereotype)
                } else {
                    None
                };
                match reason {
                    Some(reason) => {
                        set.unpaired.push((m.id.clone(), reason));
                        set.unpaired.push((f.id.clone(), reason));
                    }
                    None => set.pairs.push(MinimalPair {
                        stereotype_of_profession: lexicon.get(&m.profession_key()).expect("checked above"),
                        profession: m.profession.clone(),
                        male_variant: (*m).clone(),
                        female_variant: (*f).clone(),
                        key,
                    }),
                }
            }
            (Some(one), None) | (None, Some(one)) => {
                set.unpaired.push((one.id.clone(), UnpairedReason::NoCounterpart));
            }
            (None, None) => unreachable!("groups are created on insert"),
        }
    }
    set.pairs.sort_by(|a, b| a.male_variant.id.cmp(&b.male_variant.id));
    set.unpaired.sort();
    Ok(set)
}

impl PartialOrd for UnpairedReason {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UnpairedReason {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (*self as u8).cmp(&(*other as u8))
    }
}

/// One pair per line: key hash, male id, female id, stereotype class.
pub fn format_pairs(links: &[PairLink]) -> String {
    links.iter().map(|l| format!("{}\t{}\t{}\t{}\n", l.key_hash, l.male_id, l.female_id, l.stereotype)).collect()
}

pub fn parse_pairs(text: &str) -> Result<Vec<PairLink>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::PairFormat { line: n + 1, message };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        out.push(PairLink {
            key_hash: f[0].to_string(),
            male_id: SentenceId::from(f[1]),
            female_id: SentenceId::from(f[2]),
            stereotype: f[3].parse().map_err(err)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_challenge_str, GenderColumn};

    const FIG4: &str = "female\t5\tThe analyst consulted with the librarian because she knows a lot about books.\tlibrarian\n\
                        male\t5\tThe analyst consulted with the librarian because he knows a lot about books.\tlibrarian";

    fn lex() -> StereotypeLexicon {
        StereotypeLexicon::parse("librarian\tProF\nanalyst\tProM\nnurse\tProF").unwrap()
    }

    #[test]
    fn librarian_pair() {
        let recs = parse_challenge_str(FIG4, "s", GenderColumn::Gendered).unwrap();
        let set = build_minimal_pairs(&recs, &lex()).unwrap();
        assert_eq!(set.pairs.len(), 1);
        assert!(set.unpaired.is_empty());
        let p = &set.pairs[0];
        assert_eq!(p.stereotype_of_profession, ProfessionStereotype::ProF);
        assert_eq!(p.male_variant.id.as_str(), "s:2");
        assert_eq!(p.female_variant.id.as_str(), "s:1");
        assert_eq!(p.key.hash().len(), 16);
    }

    #[test]
    fn single_record_is_unpaired() {
        let recs = parse_challenge_str(FIG4.lines().next().unwrap(), "s", GenderColumn::Gendered).unwrap();
        let set = build_minimal_pairs(&recs, &lex()).unwrap();
        assert!(set.pairs.is_empty());
        assert_eq!(set.unpaired, vec![(SentenceId::from("s:1"), UnpairedReason::NoCounterpart)]);
    }

    #[test]
    fn role_categories_must_match() {
        // "him" (object) must not pair with "her" used as a determiner
        let text = "male\t1\tThe nurse thanked him for the help.\tnurse\n\
                    female\t1\tThe nurse thanked her friend for the help.\tnurse";
        let recs = parse_challenge_str(text, "s", GenderColumn::Gendered).unwrap();
        let set = build_minimal_pairs(&recs, &lex()).unwrap();
        assert!(set.pairs.is_empty());
        assert_eq!(set.unpaired.len(), 2);
        let text = "male\t1\tThe nurse thanked him for the help.\tnurse\n\
                    female\t1\tThe nurse thanked her for the help.\tnurse";
        let recs = parse_challenge_str(text, "s", GenderColumn::Gendered).unwrap();
        assert_eq!(build_minimal_pairs(&recs, &lex()).unwrap().pairs.len(), 1);
    }

    #[test]
    fn duplicate_same_gender_is_ambiguous() {
        let text = format!(
            "{FIG4}\nmale\t5\tThe analyst consulted with the librarian because he knows a lot about books.\tlibrarian"
        );
        let recs = parse_challenge_str(&text, "s", GenderColumn::Gendered).unwrap();
        match build_minimal_pairs(&recs, &lex()) {
            Err(CorpusError::AmbiguousKey { ids, .. }) => {
                assert_eq!(ids, vec![SentenceId::from("s:2"), SentenceId::from("s:3")]);
            }
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn missing_stereotype_reported() {
        let recs = parse_challenge_str(FIG4, "s", GenderColumn::Gendered).unwrap();
        let set = build_minimal_pairs(&recs, &StereotypeLexicon::default()).unwrap();
        assert!(set.pairs.is_empty());
        assert!(set.unpaired.iter().all(|(_, r)| *r == UnpairedReason::NoStereotype));
    }

    #[test]
    fn pair_file_roundtrip() {
        let recs = parse_challenge_str(FIG4, "s", GenderColumn::Gendered).unwrap();
        let links = build_minimal_pairs(&recs, &lex()).unwrap().links();
        let text = format_pairs(&links);
        assert_eq!(parse_pairs(&text).unwrap(), links);
        assert!(parse_pairs("a\tb\tc").is_err());
    }
}
