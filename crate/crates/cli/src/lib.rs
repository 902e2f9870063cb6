//! PLY ingestion helpers shared by the `lsrn` binary and its tests.

pub mod ingest;
pub mod ply;
