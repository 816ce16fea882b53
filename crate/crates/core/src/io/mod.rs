//! File formats: the F3T tensor container, PGM/PPM heatmaps, the instance
//! descriptor, and CSV report tables.

pub mod f3t;
pub mod image;
pub mod instance;
pub mod report;
