pub mod corpus;
pub mod execution;
pub mod groupoid;
pub mod linalg;
pub mod logic;
pub mod measurement;
pub mod projects;
pub mod sampling;
pub mod suites;
