//! Empty by design: the build script emits the link directives for the
//! system OpenBLAS, and dependents only need this crate present in the
//! graph for those directives to apply.
