pub mod alignment;
pub mod conflicts;
pub mod enrichment;
pub mod ontology;
pub mod policy;
pub mod resolution;
pub mod session;
pub mod similarity;
pub mod sop;
