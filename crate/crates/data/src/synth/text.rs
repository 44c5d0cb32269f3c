//! Question bank and answer templates, built from the model vocabulary.

struct Template {
    dimension: &'static str,
    question: &'static str,
    subject: &'static str,
    adjective: &'static str,
    positive: &'static str,
    negative: &'static str,
    noun: &'static str,
}

const BANK: [Template; 13] = [
    t("accessibility", "how accessible is this street", "the street", "accessible", "good connectivity", "poor connectivity", "connectivity"),
    t("cleanliness", "how clean is this street", "the street", "clean", "green space", "busy traffic", "space"),
    t("perceived_safety", "how safe is this street", "the street", "safe", "bright quiet space", "dark noisy space", "safety"),
    t("visual_richness", "how rich is the visual space", "the street", "rich", "lively visual space", "poor visual space", "visual space"),
    t("commercial_convenience", "how convenient is this street", "the street", "convenient", "many shops", "few shops", "commercial space"),
    t("overall_satisfaction", "how satisfying is this street overall", "the street", "satisfying", "pleasant walk", "poor walk", "comfortable space"),
    t("sidewalk_width", "how wide is the sidewalk", "the sidewalk", "wide", "comfortable walk", "narrow walk", "width"),
    t("roadway_width", "how wide is the road lane", "the road lane", "wide", "many cars", "few cars", "lane width"),
    t("greening_level", "how green is this street", "the street", "green", "many trees", "few trees", "greenery"),
    t("motorization", "how busy is the traffic", "the traffic", "busy", "many cars", "few cars", "motorization"),
    t("commercial_density", "how high is the commercial density", "the commercial density", "high", "many shops", "few shops", "density"),
    t("sky_openness", "how open is the sky", "the sky", "open", "bright open space", "dark narrow space", "sky"),
    t("public_facilities", "how good is the public facilities", "the public facilities", "good", "many amenities", "few amenities", "amenities"),
];

const fn t(
    dimension: &'static str,
    question: &'static str,
    subject: &'static str,
    adjective: &'static str,
    positive: &'static str,
    negative: &'static str,
    noun: &'static str,
) -> Template {
    Template { dimension, question, subject, adjective, positive, negative, noun }
}

fn template(dimension: &str) -> &'static Template {
    BANK.iter().find(|t| t.dimension == dimension).unwrap_or(&BANK[5])
}

pub fn question(dimension: &str) -> &'static str {
    template(dimension).question
}

/// `(intensifier, tail)` for a score in thirds of `[lo, hi]`.
fn level(t: &Template, score: f64, lo: f64, hi: f64) -> (&'static str, String) {
    let third = (hi - lo) / 3.0;
    if score >= lo + 2.0 * third {
        ("very", t.positive.to_string())
    } else if score >= lo + third {
        ("somewhat", format!("moderate {}", t.noun))
    } else {
        ("not", t.negative.to_string())
    }
}

pub fn answer_text(dimension: &str, score: f64, lo: f64, hi: f64) -> String {
    let t = template(dimension);
    let (how, tail) = level(t, score, lo, hi);
    format!("{} feels {how} {} with {tail}", t.subject, t.adjective)
}

/// Reserve phrasing of the same answer.
pub fn alternate_answer(dimension: &str, score: f64, lo: f64, hi: f64) -> String {
    let t = template(dimension);
    let (how, tail) = level(t, score, lo, hi);
    format!("{how} {} here and {tail}", t.adjective)
}
