//! Writes the synthetic treebank under `data/`.
//!
//! Sentences come from a small English-like grammar. Most attachments are
//! lexically determined (verb transitivity, preposition attachment site);
//! 15% of prepositional attachments flip and 3% of POS tags are replaced,
//! which keeps the data from being trivially separable. Every tree is
//! projective with a single root.
//!
//! Usage: `cargo run --example gen_corpus -- <output-dir>`

use std::fs;
use std::path::PathBuf;

use bistparse::treebank::{write_conll, Sentence, Token};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DETERMINERS: &[&str] = &["the", "a", "every", "this", "that", "some"];
const NOUNS: &[&str] = &[
    "dog", "cat", "teacher", "student", "farmer", "river", "city", "letter", "book", "garden", "window", "doctor",
    "child", "friend", "road", "house", "table", "bird", "song", "storm", "ship", "market", "painter", "village",
    "story", "bridge", "lamp", "horse", "pilot", "engine", "kitchen", "soldier", "island", "forest", "mountain",
    "queen", "baker", "stone", "mirror", "clock", "singer", "cousin", "neighbor", "tower", "wall", "field", "boat",
    "poet", "judge", "nurse",
];
const ADJECTIVES: &[&str] = &[
    "old", "young", "quiet", "red", "small", "large", "happy", "dark", "bright", "cold", "warm", "strange", "tired",
    "clever", "green", "heavy", "empty", "gentle", "famous", "narrow",
];
const TRANSITIVE: &[&str] = &[
    "saw", "found", "liked", "painted", "built", "carried", "opened", "watched", "wrote", "followed", "visited",
    "cleaned", "fixed", "sold", "bought", "heard", "helped", "called", "moved", "chased",
];
const INTRANSITIVE: &[&str] = &[
    "slept", "laughed", "arrived", "waited", "smiled", "danced", "fell", "cried", "left", "rested", "shouted",
    "paused", "wandered", "vanished", "returned",
];
const COMPLEMENT: &[&str] = &["said", "believed", "knew", "thought", "claimed", "hoped"];
const MODALS: &[&str] = &["will", "can", "must", "might", "should"];
const ADVERBS: &[&str] = &[
    "quickly",
    "slowly",
    "often",
    "quietly",
    "again",
    "today",
    "yesterday",
    "happily",
];
/// Prepositions heading modifiers of nouns.
const NOUN_PREPS: &[&str] = &["of", "from", "near", "beside"];
/// Prepositions heading modifiers of verbs.
const VERB_PREPS: &[&str] = &["with", "in", "on", "after", "during", "through"];

#[derive(Default)]
struct Builder {
    tokens: Vec<(String, &'static str, usize, &'static str)>,
}

impl Builder {
    /// Appends a token and returns its 1-based index.
    fn push(&mut self, form: &str, pos: &'static str) -> usize {
        self.tokens.push((form.to_string(), pos, 0, "_"));
        self.tokens.len()
    }

    fn attach(&mut self, dependent: usize, head: usize, label: &'static str) {
        let t = &mut self.tokens[dependent - 1];
        t.2 = head;
        t.3 = label;
    }

    fn sentence(self) -> Sentence {
        Sentence::new(
            self.tokens
                .into_iter()
                .map(|(form, pos, head, label)| Token::new(form, pos).with_head(head, label))
                .collect(),
        )
    }
}

fn pick<'a, R: Rng>(rng: &mut R, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("non-empty word list")
}

fn noun_phrase<R: Rng>(b: &mut Builder, rng: &mut R, depth: usize) -> usize {
    let mut deps = Vec::new();
    if rng.gen_bool(0.85) {
        deps.push((b.push(pick(rng, DETERMINERS), "DT"), "det"));
    }
    let adjectives = [0, 0, 1, 1, 2].choose(rng).copied().unwrap_or(0);
    for _ in 0..adjectives {
        deps.push((b.push(pick(rng, ADJECTIVES), "JJ"), "amod"));
    }
    let noun = if rng.gen_bool(0.2) {
        b.push(&format!("{}s", pick(rng, NOUNS)), "NNS")
    } else {
        b.push(pick(rng, NOUNS), "NN")
    };
    for (d, label) in deps {
        b.attach(d, noun, label);
    }
    if depth < 2 && rng.gen_bool(0.25) {
        let prep = b.push(pick(rng, NOUN_PREPS), "IN");
        b.attach(prep, noun, "prep");
        let object = noun_phrase(b, rng, depth + 1);
        b.attach(object, prep, "pobj");
    }
    if depth < 2 && rng.gen_bool(0.12) {
        relative_clause(b, rng, noun, depth + 1);
    }
    noun
}

/// Noun phrase optionally coordinated with a second one.
fn coordinated_noun_phrase<R: Rng>(b: &mut Builder, rng: &mut R, depth: usize) -> usize {
    let first = noun_phrase(b, rng, depth);
    if depth < 2 && rng.gen_bool(0.1) {
        let cc = b.push("and", "CC");
        b.attach(cc, first, "cc");
        let second = noun_phrase(b, rng, depth + 1);
        b.attach(second, first, "conj");
    }
    first
}

/// `that` + clause missing its subject or object, attached to `noun`.
fn relative_clause<R: Rng>(b: &mut Builder, rng: &mut R, noun: usize, depth: usize) {
    let pronoun = b.push("that", "WDT");
    let verb = if rng.gen_bool(0.5) {
        verb_phrase(b, rng, pronoun, depth + 1)
    } else {
        let subject = noun_phrase(b, rng, depth + 1);
        let verb = b.push(pick(rng, TRANSITIVE), "VBD");
        b.attach(subject, verb, "nsubj");
        b.attach(pronoun, verb, "dobj");
        verb
    };
    b.attach(verb, noun, "rcmod");
}

/// Verb phrase whose subject was already pushed; returns the verb.
fn verb_phrase<R: Rng>(b: &mut Builder, rng: &mut R, subject: usize, depth: usize) -> usize {
    let aux = rng.gen_bool(0.25).then(|| b.push(pick(rng, MODALS), "MD"));
    let pre_adverb = rng.gen_bool(0.1).then(|| b.push(pick(rng, ADVERBS), "RB"));
    let kind = rng.gen_range(0..10);
    let verb = if kind < 5 {
        b.push(pick(rng, TRANSITIVE), "VBD")
    } else if kind < 8 || depth >= 2 {
        b.push(pick(rng, INTRANSITIVE), "VBD")
    } else {
        b.push(pick(rng, COMPLEMENT), "VBD")
    };
    b.attach(subject, verb, "nsubj");
    if let Some(a) = aux {
        b.attach(a, verb, "aux");
    }
    if let Some(a) = pre_adverb {
        b.attach(a, verb, "advmod");
    }
    let form = b.tokens[verb - 1].0.clone();
    let mut object = None;
    if TRANSITIVE.contains(&form.as_str()) {
        let o = coordinated_noun_phrase(b, rng, depth);
        b.attach(o, verb, "dobj");
        object = Some(o);
    }
    if rng.gen_bool(0.35) {
        // The preposition decides the site; a minority of attachments flip.
        let noun_prep = object.is_some() && rng.gen_bool(0.4);
        let word = if noun_prep {
            pick(rng, NOUN_PREPS)
        } else {
            pick(rng, VERB_PREPS)
        };
        let prep = b.push(word, "IN");
        let mut site = if noun_prep { object.unwrap_or(verb) } else { verb };
        if let Some(o) = object {
            if rng.gen_bool(0.15) {
                site = if site == verb { o } else { verb };
            }
        }
        b.attach(prep, site, "prep");
        let pobj = noun_phrase(b, rng, depth + 1);
        b.attach(pobj, prep, "pobj");
    }
    if rng.gen_bool(0.2) {
        let adverb = b.push(pick(rng, ADVERBS), "RB");
        b.attach(adverb, verb, "advmod");
    }
    if COMPLEMENT.contains(&form.as_str()) {
        let mark = b.push("that", "IN");
        let inner_subject = noun_phrase(b, rng, depth + 1);
        let inner = verb_phrase(b, rng, inner_subject, depth + 1);
        b.attach(mark, inner, "mark");
        b.attach(inner, verb, "ccomp");
    } else if depth == 0 && rng.gen_bool(0.15) {
        let comma = rng.gen_bool(0.5).then(|| b.push(",", ","));
        let cc = b.push("and", "CC");
        let second_subject = noun_phrase(b, rng, depth + 1);
        let second = verb_phrase(b, rng, second_subject, depth + 1);
        if let Some(c) = comma {
            b.attach(c, verb, "punct");
        }
        b.attach(cc, verb, "cc");
        b.attach(second, verb, "conj");
    }
    verb
}

const TAGS: &[&str] = &["DT", "JJ", "NN", "NNS", "VBD", "MD", "RB", "IN", "CC", "WDT"];

fn sentence<R: Rng>(rng: &mut R) -> Sentence {
    let mut b = Builder::default();
    let fronted = rng.gen_bool(0.15).then(|| {
        let adverb = b.push(pick(rng, ADVERBS), "RB");
        let comma = rng.gen_bool(0.6).then(|| b.push(",", ","));
        (adverb, comma)
    });
    let subject = coordinated_noun_phrase(&mut b, rng, 0);
    let verb = verb_phrase(&mut b, rng, subject, 0);
    b.attach(verb, 0, "root");
    if let Some((adverb, comma)) = fronted {
        b.attach(adverb, verb, "advmod");
        if let Some(c) = comma {
            b.attach(c, verb, "punct");
        }
    }
    let stop = b.push(".", ".");
    b.attach(stop, verb, "punct");
    // Tagging noise: a few words carry a wrong POS tag.
    for token in &mut b.tokens {
        if token.1 != "." && token.1 != "," && rng.gen_bool(0.03) {
            token.1 = pick(rng, TAGS);
        }
    }
    b.sentence()
}

fn corpus(seed: u64, size: usize) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| sentence(&mut rng)).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"));
    fs::create_dir_all(&out)?;
    let splits = [
        ("sample50.conll", corpus(50, 50)),
        ("train1k.conll", corpus(1000, 1000)),
        ("dev200.conll", corpus(200, 200)),
    ];
    for (name, sentences) in &splits {
        for s in sentences {
            let tree = s.gold_tree().expect("generated tokens carry heads");
            assert!(tree.is_projective(), "generator produced a non-projective tree");
        }
        write_conll(out.join(name), sentences, None)?;
        let tokens: usize = sentences.iter().map(Sentence::len).sum();
        println!("{}: {} sentences, {} tokens", name, sentences.len(), tokens);
    }
    Ok(())
}
