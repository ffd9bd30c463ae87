//! Orlicz-space Hardy and Sobolev-type inequalities for the Gaussian measure,
//! checked numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod functionals;
pub mod hardy;
pub mod landau_kolmogorov;
pub mod mazya;
pub mod nfunc;
pub mod optimize;
pub mod quadrature;
pub mod report;
pub mod sharpness;
pub mod special;
pub mod suite;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/nfunctions.md")]
    mod nfunctions {}
    #[doc = include_str!("../../../book/src/measure.md")]
    mod measure {}
    #[doc = include_str!("../../../book/src/hardy.md")]
    mod hardy {}
    #[doc = include_str!("../../../book/src/sharpness.md")]
    mod sharpness {}
    #[doc = include_str!("../../../book/src/mazya.md")]
    mod mazya {}
    #[doc = include_str!("../../../book/src/landau_kolmogorov.md")]
    mod landau_kolmogorov {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
