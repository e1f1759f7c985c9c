//! Cost-free types as linear maps: derivation, constraint generation, checking and inference.

mod constraints;
mod derive;
mod ho;
mod infer;
mod units;
mod wf;

pub use constraints::{fun_constraints, Family, FunConstraints, Tagged};
pub use derive::{CFType, Ctx, DeriveError, DeriveResult, Deriver, FunSig};
pub use infer::{
    check_function, conserves, infer_function, infer_program, Analysis, AnalysisError, FunReport, FunStatus,
    InferConfig, LpStats, Objective,
};
pub use ho::expand_higher_order;
pub use units::{collect_units, Unit, Units};
pub use wf::{check_wf, check_wf_with};

#[cfg(test)]
mod tests;
