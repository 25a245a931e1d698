//! Command-line front end and file formats for the AB-system deformation
//! toolkit: solution evaluation, flatness verification, NHD/QID runs, charge
//! extraction and figure-data emission, with reproducible run manifests.

pub mod csvout;
pub mod figures;
pub mod report;
pub mod runspec;

pub use report::RunManifest;
