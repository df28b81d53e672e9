pub mod casedata;
pub mod cli;
pub mod linalg;
pub mod lra;
pub mod pce;
pub mod polybasis;
pub mod ppf;
pub mod powerflow;
pub mod randinputs;
pub mod rng;
