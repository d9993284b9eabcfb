//! Computational toolkit for free products of two groups: exact reduced-word
//! arithmetic, quotient graphs of the ambient tree with Kurosh rank,
//! generating sets for intersections with ⟨G₀, H₀⟩, truncated positive cones
//! of left-preorders, and exact piecewise-linear dynamics on the line
//! producing non-isolation witnesses.

pub mod factor;
pub mod words;
pub mod bass_serre;
pub mod intersect;
pub mod preorders;
pub mod dynamics;
pub mod input;
pub mod rng;
pub mod acceptance;

pub use factor::{FactorElem, FactorGroup, Side, SubgroupDescriptor};
pub use words::{FreeProduct, SymmetricSet, Syllable, Word};
