pub mod classic;
pub mod driver;
pub mod lang;
pub mod linmap;
pub mod lp;
pub mod mapinfer;
pub mod potential;

pub type Rational = num_rational::BigRational;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/language.md")]
    struct Language;
    #[doc = include_str!("../../../book/src/potential.md")]
    struct Potential;
    #[doc = include_str!("../../../book/src/linear-maps.md")]
    struct LinearMaps;
    #[doc = include_str!("../../../book/src/inference.md")]
    struct Inference;
    #[doc = include_str!("../../../book/src/classic.md")]
    struct Classic;
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    struct Benchmarks;
}
