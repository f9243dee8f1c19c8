//! Exhaustive duality classification of the 256 pair mechanisms.
//!
//! A pair mechanism is a map `{0,1}^2 -> {0,1}^2`; two mechanisms `f` and
//! `g` are dual when the disjointness of `y` from `f(x)` always forces the
//! disjointness of `g(y)` from `x`, and vice versa.  This example sweeps
//! all 256 mechanisms, prints every dual pair, and shows how the three
//! conjugation symmetries act on the catalog.
//!
//! ```text
//! cargo run --example classify_catalog
//! ```

use ipsdual::mechanism::{classify_all, BasicMechanism};

fn main() {
    let catalog = classify_all();
    println!(
        "mechanisms with a dual partner: {} (of 256), self-dual: {}",
        catalog.with_dual_count(),
        catalog.self_dual_count()
    );

    println!("\nunordered dual pairs (truth tables list f(00), f(01), f(10), f(11)):");
    for (f, g) in catalog.unordered_pairs() {
        let marker = if f == g { "  [self-dual]" } else { "" };
        println!("  {:3} ~ {:3}   {}  |  {}{marker}", f.code(), g.code(), f, g);
    }

    println!("\nnamed mechanisms:");
    for name in BasicMechanism::canonical_names() {
        let m = BasicMechanism::canonical(name).unwrap();
        match catalog.dual_of(m) {
            Some(d) if d == m => println!("  {name:18} {m}   dual: itself"),
            Some(d) => println!("  {name:18} {m}   dual: {d}"),
            None => println!("  {name:18} {m}   dual: none"),
        }
    }

    // The catalog is closed under the two basic conjugations: if (f, g) is a
    // dual pair, so are (f†, g†) and (f̂, ĝ†).
    let r = BasicMechanism::resampling();
    let c = BasicMechanism::coalescent();
    assert_eq!(catalog.dual_of(r), Some(c));
    assert_eq!(catalog.dual_of(r.dagger()), Some(c.dagger()));
    assert_eq!(catalog.dual_of(r.hat()), Some(c.hat_dagger()));
    println!("\nsymmetry closure spot-checked on the resampling/coalescent pair.");
}
