//! Small reference datasets used by tests, examples and the CLI demo.

use crate::graph::{text, ErGraph, Triple};

pub const BANKING_TSV: &str = include_str!("../tests/data/banking.tsv");
pub const BANKING_EXTENSION_TSV: &str = include_str!("../tests/data/banking_extension.tsv");
pub const EVOLUTION_TSV: &str = include_str!("../tests/data/evolution.tsv");

/// Vendors, offers and reviews: three subject variables linked by two
/// relationship variables.
pub const VENDOR_OFFER_REVIEW_QUERY: &str = "select ?name ?product ?rating
where {
  ?vendor @type 'vendor'.
  ?vendor @country 'Australia'.
  ?vendor @name ?name.
  ?offer offered-by ?vendor.
  ?offer @product ?product.
  ?offer @delivery-days ?days.
  ?review review-of ?offer.
  ?review @rating ?rating.
  ?review @text ?text.
  FILTER (?days <= 15)
}";

pub const MESSAGE_QUERY: &str = "select ?m
where {
  ?m @type message.
  ?m @requestsize ?x.
  ?m @responsesize ?y.
  ?m @timestamp ?t.
  FILTER (?x=?y && ?t > '2017-12-01T00:00:00.000Z' && ?t < '2017-12-31T00:00:00.000Z'). }";

pub fn parse_tsv(source: &str) -> Vec<Triple> {
    source
        .lines()
        .filter(|l| !text::is_skippable(l))
        .map(|l| text::parse_line(l).expect("fixture line is well formed"))
        .collect()
}

/// The six relationship edges of the loan scenario, without attributes.
pub fn banking_core_triples() -> Vec<Triple> {
    parse_tsv(BANKING_TSV)
        .into_iter()
        .filter(|t| !t.is_attribute())
        .collect()
}

pub fn banking() -> ErGraph {
    ErGraph::build(parse_tsv(BANKING_TSV)).expect("banking fixture is acyclic")
}

/// Banking graph plus a second work item assigned to `Staff-2`.
pub fn banking_extended() -> ErGraph {
    let mut triples = parse_tsv(BANKING_TSV);
    triples.extend(parse_tsv(BANKING_EXTENSION_TSV));
    ErGraph::build(triples).expect("extended banking fixture is acyclic")
}

/// Two versions of a loan document connected by three activity paths.
pub fn evolution() -> ErGraph {
    ErGraph::build(parse_tsv(EVOLUTION_TSV)).expect("evolution fixture is acyclic")
}

/// Deterministic vendor/offer/review data. Roughly half the vendors are
/// Australian and offer delivery days cycle through 1..=30.
pub fn vendor_offer_review_triples(
    vendors: usize,
    offers_per_vendor: usize,
    reviews_per_offer: usize,
) -> Vec<Triple> {
    let mut out = Vec::new();
    for v in 0..vendors {
        let vendor = format!("vendor-{v}");
        out.push(Triple::attr(&vendor, "type", "vendor"));
        let country = if v % 2 == 0 { "Australia" } else { "New-Zealand" };
        out.push(Triple::attr(&vendor, "country", country));
        out.push(Triple::attr(&vendor, "name", &format!("Bank {v}")));
        for o in 0..offers_per_vendor {
            let offer = format!("offer-{v}-{o}");
            out.push(Triple::link(&offer, "offered-by", &vendor));
            let product = ["home-loan", "business-loan", "fixed-rate", "variable-rate"][o % 4];
            out.push(Triple::attr(&offer, "product", product));
            out.push(Triple::attr(&offer, "delivery-days", &((v * 7 + o * 3) % 30 + 1).to_string()));
            for r in 0..reviews_per_offer {
                let review = format!("review-{v}-{o}-{r}");
                out.push(Triple::link(&review, "review-of", &offer));
                out.push(Triple::attr(&review, "rating", &((v + o + r) % 5 + 1).to_string()));
                out.push(Triple::attr(&review, "text", &format!("review {r} of {offer}")));
            }
        }
    }
    out
}
