//! Bundled data files. Every one of them can be overridden from the CLI.

/// English profession to ProF/ProM, compiled from the bundled pro subset.
pub const STEREOTYPES: &str = include_str!("../data/stereotypes.tsv");

/// Pronoun rewrite and agreement rules for the neutralizer.
pub const NEUTRALIZER_RULES: &str = include_str!("../data/neutralizer_rules.tsv");

/// Italian profession lexicon: `lemma<TAB>masc_forms<TAB>fem_forms<TAB>epicene`.
pub const IT_PROFESSIONS: &str = include_str!("../data/it_professions.tsv");

/// Italian article table: `form<TAB>masculine|feminine|elided`.
pub const IT_ARTICLES: &str = include_str!("../data/it_articles.tsv");

/// English profession to Italian lemma.
pub const PROFESSION_MAP: &str = include_str!("../data/profession_map.tsv");
