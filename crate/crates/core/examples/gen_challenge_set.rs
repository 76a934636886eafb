//! Regenerates the bundled synthetic challenge set and stereotype lexicon.
//!
//! ```text
//! cargo run --example gen_challenge_set -- [data_dir]
//! ```
//!
//! Writes `winomt/en_pro.txt`, `winomt/en_anti.txt`, `winomt/en.txt` and
//! `stereotypes.tsv` under `data_dir` (default: the crate's `data/`).
//! Output is fully deterministic.

use std::fs;
use std::path::PathBuf;

use mtgender::corpus::{format_challenge_set, parse_challenge_str, GenderColumn, StereotypeLexicon};

const PRO_F: &[&str] = &[
    "attendant",
    "cashier",
    "teacher",
    "nurse",
    "assistant",
    "secretary",
    "auditor",
    "cleaner",
    "receptionist",
    "clerk",
    "counselor",
    "designer",
    "hairdresser",
    "writer",
    "housekeeper",
    "baker",
    "accountant",
    "editor",
    "librarian",
    "tailor",
    "dietitian",
    "nanny",
];

const PRO_M: &[&str] = &[
    "driver",
    "supervisor",
    "janitor",
    "cook",
    "mover",
    "laborer",
    "construction worker",
    "chief",
    "developer",
    "carpenter",
    "manager",
    "lawyer",
    "farmer",
    "salesperson",
    "physician",
    "guard",
    "analyst",
    "mechanic",
    "sheriff",
    "CEO",
    "engineer",
    "programmer",
];

/// Extra professions for the participant-style sentences.
const EXTRA: &[&str] = &[
    "technician",
    "paramedic",
    "pharmacist",
    "surgeon",
    "chemist",
    "plumber",
    "electrician",
    "firefighter",
    "architect",
    "bartender",
    "scientist",
    "instructor",
    "therapist",
    "veterinarian",
    "psychologist",
    "inspector",
];

const PARTICIPANTS: &[&str] = &["customer", "patient", "client", "student", "visitor", "passenger"];

// {P} target, {Q} secondary entity, pronoun slots refer to {P}:
// {S} subject, {Sc} capitalized subject, {O} object, {D} determiner,
// {PS} possessive pronoun, {R} reflexive.
const TWO_ENTITY: &[&str] = &[
    "The {P} asked the {Q} for help because {S} was late.",
    "The {Q} called the {P} because {S} is always on time.",
    "The {P} thanked the {Q} because {S} needs the report.",
    "The {P} met the {Q} and {S} has a new plan.",
    "The {Q} helped the {P} because {S} does not know the rules.",
    "The {P} told the {Q} that {S} watches the news every night.",
    "The {P} waved at the {Q} and {S} tries to smile.",
    "The {Q} warned the {P} that {S} often goes home early.",
    "The {P} hired the {Q} because {S} never fixes anything.",
    "The {Q} paid the {P} because {S} carries the heavy boxes.",
    "The {P} hugged the {Q} because {S} misses the old office.",
    "The {Q} praised the {P} because {S} was honest.",
    "The {P} visited the {Q} to cut {D} hair.",
    "The {Q} gave the file to the {P} and thanked {O}.",
    "The {P} argued with the {Q} about {D} own salary.",
    "The {Q} waited for the {P} and asked {O} about the delay.",
    "The {P} said to the {Q} that the idea was {PS}.",
    "The {Q} borrowed a pen from the {P} because the desk was {PS}.",
    "The {P} blamed {R} and apologized to the {Q}.",
    "{Sc} is the {P} who called the {Q} yesterday.",
    "The {P} laughed at the {Q} because {S} thinks the joke is bad.",
    "The {Q} emailed the {P} because {S} wants a meeting.",
    "The {P} shouted at the {Q} since {S} was angry.",
    "The {Q} interviewed the {P} and liked {D} answers.",
    "The {P} refused to help the {Q} because {S} had no time.",
    "The {Q} called the {P} but {S}'s busy today.",
    "The {P} called the {Q} after {S} finished the work.",
    "The {Q} trusted the {P} because {S} always keeps promises.",
    "The {P} avoided the {Q} because {S} hates long talks.",
    "The {Q} respected the {P} for {D} patience.",
    "The {P} smiled at the {Q} and {S} teaches a class every day.",
    "The {Q} visited the {P} to thank {O} for the gift.",
    "The {P} asked the {Q} to check {D} schedule.",
    "The {Q} admired the {P} because {S} pushes hard every day.",
    "The {P} taught {R} to code while the {Q} watched.",
    "The {Q} met the {P} while {S} relaxes after lunch.",
];

const PARTICIPANT: &[&str] = &[
    "The {P} told the {Q} that {S} would be late.",
    "The {Q} asked the {P} whether {S} could help.",
    "The {P} gave the {Q} a form because {S} needed a signature.",
    "The {Q} thanked the {P} for {D} advice.",
    "The {P} met the {Q} before {S} left the building.",
    "The {Q} waited while the {P} finished {D} shift.",
];

fn pronoun(slot: &str, female: bool) -> &'static str {
    match (slot, female) {
        ("S", false) => "he",
        ("S", true) => "she",
        ("Sc", false) => "He",
        ("Sc", true) => "She",
        ("O", false) => "him",
        ("O", true) => "her",
        ("D", false) => "his",
        ("D", true) => "her",
        ("PS", false) => "his",
        ("PS", true) => "hers",
        ("R", false) => "himself",
        ("R", true) => "herself",
        _ => panic!("unknown slot {slot}"),
    }
}

/// Render a template; returns the sentence and the whitespace-token indices
/// of the last word of `{P}` and `{Q}`.
fn render(template: &str, p: &str, q: &str, female: bool) -> (String, usize, usize) {
    let mut words: Vec<String> = Vec::new();
    let (mut ip, mut iq) = (None, None);
    for tok in template.split_whitespace() {
        let open = tok.find('{');
        let close = tok.find('}');
        let (Some(a), Some(b)) = (open, close) else {
            words.push(tok.to_string());
            continue;
        };
        let (pre, slot, post) = (&tok[..a], &tok[a + 1..b], &tok[b + 1..]);
        match slot {
            "P" | "Q" => {
                let name = if slot == "P" { p } else { q };
                words.extend(name.split_whitespace().map(String::from));
                let last = words.len() - 1;
                words[last] = format!("{pre}{}{post}", words[last]);
                if slot == "P" {
                    ip = Some(last);
                } else {
                    iq = Some(last);
                }
            }
            s => words.push(format!("{pre}{}{post}", pronoun(s, female))),
        }
    }
    (words.join(" "), ip.expect("template has {P}"), iq.expect("template has {Q}"))
}

fn line(female: bool, idx: usize, sentence: &str, profession: &str, secondary: usize) -> String {
    let g = if female { "female" } else { "male" };
    format!("{g}\t{idx}\t{sentence}\t{profession}\t{secondary}\n")
}

fn main() {
    let data_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    let winomt = data_dir.join("winomt");
    fs::create_dir_all(&winomt).expect("create output dir");

    let profs: Vec<(&str, bool)> = PRO_F.iter().map(|p| (*p, true)).chain(PRO_M.iter().map(|p| (*p, false))).collect();
    let mut pro = String::new();
    let mut anti = String::new();
    for (i, &(p, fem_stereo)) in profs.iter().enumerate() {
        for (k, t) in TWO_ENTITY.iter().enumerate() {
            let mut j = (i + 1 + k * 7) % profs.len();
            if j == i {
                j = (j + 1) % profs.len();
            }
            let q = profs[j].0;
            let (s, ip, iq) = render(t, p, q, fem_stereo);
            pro.push_str(&line(fem_stereo, ip, &s, p, iq));
            let (s, ip, iq) = render(t, p, q, !fem_stereo);
            anti.push_str(&line(!fem_stereo, ip, &s, p, iq));
        }
    }

    let mut participant = String::new();
    let all: Vec<&str> = profs.iter().map(|p| p.0).chain(EXTRA.iter().copied()).collect();
    for (i, p) in all.iter().enumerate() {
        for (k, t) in PARTICIPANT.iter().enumerate() {
            let x = PARTICIPANTS[(i + k) % PARTICIPANTS.len()];
            for female in [false, true] {
                let (s, ip, iq) = render(t, p, x, female);
                participant.push_str(&line(female, ip, &s, p, iq));
            }
        }
    }

    let pro_records = parse_challenge_str(&pro, "en_pro", GenderColumn::Gendered).expect("generated pro set parses");
    let lexicon = StereotypeLexicon::from_pro_subset(&pro_records).expect("consistent stereotypes");
    let regular = format!("{pro}{anti}{participant}");
    // round-trip through the parser so the files are canonical
    let canon = |text: &str, name: &str| {
        format_challenge_set(&parse_challenge_str(text, name, GenderColumn::Gendered).expect("generated set parses"))
    };
    fs::write(winomt.join("en_pro.txt"), canon(&pro, "en_pro")).expect("write");
    fs::write(winomt.join("en_anti.txt"), canon(&anti, "en_anti")).expect("write");
    fs::write(winomt.join("en.txt"), canon(&regular, "en")).expect("write");
    fs::write(data_dir.join("stereotypes.tsv"), lexicon.to_text()).expect("write");
    eprintln!(
        "pro {} / anti {} / regular {} sentences, {} stereotyped professions",
        pro.lines().count(),
        anti.lines().count(),
        regular.lines().count(),
        lexicon.len()
    );
}
