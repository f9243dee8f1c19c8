//! The 256 two-site pair mechanisms, their symmetries, and their duality
//! structure.
//!
//! A mechanism is a map `f: {0,1}^2 -> {0,1}^2`.  When an arrow event for `f`
//! fires along the ordered pair `(i, j)`, the pair of site values
//! `(x_i, x_j)` is replaced by `f(x_i, x_j)`.  There are `4^4 = 256` such
//! maps; each fits in one byte (two output bits per input state), which makes
//! exhaustive search over mechanisms and mechanism pairs trivial.
//!
//! Two mechanisms `f` and `g` are *dual* when, for every pair of states
//! `x, y`:
//!
//! * `y ∧ f(x)† = (0,0)` implies `g(y) ∧ x† = (0,0)`, and
//! * `x ∧ g(y)† = (0,0)` implies `f(x) ∧ y† = (0,0)`,
//!
//! where `∧` is the componentwise minimum and `(a,b)† = (b,a)`.  An
//! equivalent single-line characterization is
//! `y ∧ f(x) = (0,0)  ⇔  g†(y) ∧ x = (0,0)` for all `x, y`; the predicate
//! [`BasicMechanism::is_dual_to`] evaluates **both** forms and asserts they
//! agree, so the two formulations cross-check each other on every call.
//!
//! Duality is preserved by three involutions on mechanisms (see
//! [`BasicMechanism::dagger`], [`BasicMechanism::hat`], and
//! [`BasicMechanism::hat_dagger`]): if `(f, g)` is a dual pair then so are
//! `(f†, g†)`, `(f̂, ĝ†)`, and `(f̂†, ĝ)`.  [`classify_all`] enumerates all
//! 256 mechanisms and records each one's dual partner; exhaustive search
//! shows a mechanism has at most one.

use std::fmt;

/// A pair of site values `(first, second)` in `{0,1}^2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PairState {
    pub first: bool,
    pub second: bool,
}

impl PairState {
    pub const fn new(first: bool, second: bool) -> Self {
        Self { first, second }
    }

    /// Build from `0/1` integers; anything nonzero counts as `1`.
    pub const fn of(first: u8, second: u8) -> Self {
        Self::new(first != 0, second != 0)
    }

    /// Index in `0..4`, with the first component as the high bit, so the
    /// states in index order are `(0,0), (0,1), (1,0), (1,1)`.
    pub const fn index(self) -> usize {
        (self.first as usize) << 1 | self.second as usize
    }

    pub const fn from_index(i: usize) -> Self {
        Self::new(i & 0b10 != 0, i & 0b01 != 0)
    }

    /// All four states in index order.
    pub fn all() -> [Self; 4] {
        [0, 1, 2, 3].map(Self::from_index)
    }

    /// The swap `(a,b)† = (b,a)`.
    pub const fn swapped(self) -> Self {
        Self::new(self.second, self.first)
    }

    /// Componentwise minimum (logical AND).
    pub const fn meet(self, other: Self) -> Self {
        Self::new(self.first & other.first, self.second & other.second)
    }

    pub const fn is_zero(self) -> bool {
        !self.first && !self.second
    }

    /// Number of ones in the pair.
    pub const fn ones(self) -> u8 {
        self.first as u8 + self.second as u8
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first as u8, self.second as u8)
    }
}

/// A map `{0,1}^2 -> {0,1}^2`, stored as one byte.
///
/// Bits `2k..2k+2` of the code hold the output state index for input index
/// `k` (see [`PairState::index`]).  The byte encoding gives a canonical total
/// order on mechanisms, used wherever output must be deterministic.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicMechanism {
    code: u8,
}

impl BasicMechanism {
    pub const fn from_code(code: u8) -> Self {
        Self { code }
    }

    pub const fn code(self) -> u8 {
        self.code
    }

    /// Build from the output table listed in input index order
    /// `(0,0), (0,1), (1,0), (1,1)`.
    pub fn from_table(table: [PairState; 4]) -> Self {
        let mut code = 0u8;
        for (k, out) in table.iter().enumerate() {
            code |= (out.index() as u8) << (2 * k);
        }
        Self { code }
    }

    pub fn table(self) -> [PairState; 4] {
        [0, 1, 2, 3].map(|k| PairState::from_index((self.code >> (2 * k)) as usize & 0b11))
    }

    pub fn apply(self, x: PairState) -> PairState {
        PairState::from_index((self.code >> (2 * x.index())) as usize & 0b11)
    }

    /// All 256 mechanisms in code order.
    pub fn all() -> impl Iterator<Item = Self> {
        (0..=255u8).map(Self::from_code)
    }

    /// Change in the total number of ones when `f` is applied, indexed by
    /// input state index.
    pub fn count_effect(self) -> [i8; 4] {
        let t = self.table();
        [0, 1, 2, 3].map(|k| t[k].ones() as i8 - PairState::from_index(k).ones() as i8)
    }

    /// `f†(x) = (f(x†))†`: conjugation by the swap on both sides.
    pub fn dagger(self) -> Self {
        Self::from_table(
            [0, 1, 2, 3].map(|k| self.apply(PairState::from_index(k).swapped()).swapped()),
        )
    }

    /// `f̂(x) = f(x†)`: swap on the input side only.
    pub fn hat(self) -> Self {
        Self::from_table([0, 1, 2, 3].map(|k| self.apply(PairState::from_index(k).swapped())))
    }

    /// `f̂†(x) = f(x)†`: swap on the output side only.  Equal to
    /// `f.hat().dagger()`.
    pub fn hat_dagger(self) -> Self {
        Self::from_table([0, 1, 2, 3].map(|k| self.apply(PairState::from_index(k)).swapped()))
    }

    /// Duality predicate.
    ///
    /// Evaluates the two-implication definition and the single-equivalence
    /// characterization over all 16 state pairs and asserts that they agree
    /// before returning, so every call cross-checks the two formulations.
    pub fn is_dual_to(self, g: BasicMechanism) -> bool {
        let f = self;
        let mut by_definition = true;
        for x in PairState::all() {
            for y in PairState::all() {
                if y.meet(f.apply(x).swapped()).is_zero()
                    && !g.apply(y).meet(x.swapped()).is_zero()
                {
                    by_definition = false;
                }
                if x.meet(g.apply(y).swapped()).is_zero()
                    && !f.apply(x).meet(y.swapped()).is_zero()
                {
                    by_definition = false;
                }
            }
        }

        let g_dagger = g.dagger();
        let mut by_equivalence = true;
        for x in PairState::all() {
            for y in PairState::all() {
                if y.meet(f.apply(x)).is_zero() != g_dagger.apply(y).meet(x).is_zero() {
                    by_equivalence = false;
                }
            }
        }

        assert_eq!(
            by_definition, by_equivalence,
            "duality definition and its equivalence disagree for f={f}, g={g}"
        );
        by_definition
    }

    /// Every mechanism dual to `self`, in code order.  Exhaustive search
    /// shows this has at most one element; [`classify_all`] relies on that.
    pub fn duals(self) -> Vec<BasicMechanism> {
        Self::all().filter(|g| self.is_dual_to(*g)).collect()
    }

    // ---- the seven named mechanisms -------------------------------------

    /// Resampling: the second site copies the first.
    /// `(a, b) -> (a, a)`.
    pub fn resampling() -> Self {
        Self::from_table([
            PairState::of(0, 0),
            PairState::of(0, 0),
            PairState::of(1, 1),
            PairState::of(1, 1),
        ])
    }

    /// Coalescent: a particle at the first site moves onto the second,
    /// coalescing if one is already there.
    /// `(0,b) -> (0,b)`, `(1,b) -> (0,1)`.
    pub fn coalescent() -> Self {
        Self::from_table([
            PairState::of(0, 0),
            PairState::of(0, 1),
            PairState::of(0, 1),
            PairState::of(0, 1),
        ])
    }

    /// Pure birth: a particle at the first site puts a child on the second.
    /// `(0,b) -> (0,b)`, `(1,b) -> (1,1)`.
    pub fn pure_birth() -> Self {
        Self::from_table([
            PairState::of(0, 0),
            PairState::of(0, 1),
            PairState::of(1, 1),
            PairState::of(1, 1),
        ])
    }

    /// Death/coalescent: the second site is cleared and a particle at the
    /// first site moves onto it.
    /// `(0,b) -> (0,0)`, `(1,b) -> (0,1)`.
    pub fn death_coalescent() -> Self {
        Self::from_table([
            PairState::of(0, 0),
            PairState::of(0, 0),
            PairState::of(0, 1),
            PairState::of(0, 1),
        ])
    }

    /// The identity map.
    pub fn identity() -> Self {
        Self::from_table(PairState::all())
    }

    /// Everything maps to `(0,0)`.
    pub fn constant_zero() -> Self {
        Self::from_table([PairState::of(0, 0); 4])
    }

    /// Every state except `(0,0)` maps to `(1,1)`.
    pub fn all_to_ones() -> Self {
        Self::from_table([
            PairState::of(0, 0),
            PairState::of(1, 1),
            PairState::of(1, 1),
            PairState::of(1, 1),
        ])
    }

    /// Look up a named mechanism; `None` for an unknown name.
    pub fn canonical(name: &str) -> Option<Self> {
        Some(match name {
            "resampling" => Self::resampling(),
            "coalescent" => Self::coalescent(),
            "pure_birth" => Self::pure_birth(),
            "death_coalescent" => Self::death_coalescent(),
            "identity" => Self::identity(),
            "constant_zero" => Self::constant_zero(),
            "all_to_ones" => Self::all_to_ones(),
            _ => return None,
        })
    }

    /// Names accepted by [`BasicMechanism::canonical`], in a fixed order.
    pub fn canonical_names() -> [&'static str; 7] {
        [
            "resampling",
            "coalescent",
            "pure_birth",
            "death_coalescent",
            "identity",
            "constant_zero",
            "all_to_ones",
        ]
    }
}

impl fmt::Display for BasicMechanism {
    /// Output states for inputs `(0,0), (0,1), (1,0), (1,1)`, e.g. the
    /// resampling mechanism prints as `00,00,11,11`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.table();
        for (k, out) in t.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}{}", out.first as u8, out.second as u8)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BasicMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasicMechanism({self})")
    }
}

/// Result of classifying all 256 mechanisms by exhaustive search.
#[derive(Clone, Debug)]
pub struct DualityCatalog {
    /// One entry `(f, g)` per mechanism `f` that has a dual, in `f` code
    /// order; `g` is its unique dual partner.
    entries: Vec<(BasicMechanism, BasicMechanism)>,
}

/// Classify every mechanism: brute-force the duality predicate over all
/// `256 x 256` ordered pairs and record each mechanism's dual partner.
///
/// Uniqueness of the partner is a result of the search, not an assumption;
/// the constructor asserts it.
pub fn classify_all() -> DualityCatalog {
    let mut entries = Vec::new();
    for f in BasicMechanism::all() {
        let duals = f.duals();
        assert!(
            duals.len() <= 1,
            "mechanism {f} has {} duals; expected at most one",
            duals.len()
        );
        if let Some(&g) = duals.first() {
            entries.push((f, g));
        }
    }
    DualityCatalog { entries }
}

impl DualityCatalog {
    /// `(f, unique dual of f)` for every `f` that has a dual, sorted by the
    /// byte code of `f`.
    pub fn entries(&self) -> &[(BasicMechanism, BasicMechanism)] {
        &self.entries
    }

    /// Number of mechanisms that have a dual.
    pub fn with_dual_count(&self) -> usize {
        self.entries.len()
    }

    /// Number of mechanisms that are their own dual.
    pub fn self_dual_count(&self) -> usize {
        self.entries.iter().filter(|(f, g)| f == g).count()
    }

    /// The dual partner of `f`, if it has one.
    pub fn dual_of(&self, f: BasicMechanism) -> Option<BasicMechanism> {
        self.entries
            .binary_search_by_key(&f.code(), |(m, _)| m.code())
            .ok()
            .map(|i| self.entries[i].1)
    }

    /// The unordered pairs `{f, g}` in the catalog, each reported once as
    /// `(min, max)` by byte code.
    pub fn unordered_pairs(&self) -> Vec<(BasicMechanism, BasicMechanism)> {
        let mut pairs: Vec<_> = self
            .entries
            .iter()
            .map(|&(f, g)| if f.code() <= g.code() { (f, g) } else { (g, f) })
            .collect();
        pairs.sort();
        pairs.dedup();
        pairs
    }
}
