// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acf;
pub mod bands;
pub mod bartlett;
pub mod error;
pub mod io;
pub mod normal;
pub mod plot;
pub mod portmanteau;
pub mod quantile;
pub mod regression;
pub mod report;
pub mod sim;
