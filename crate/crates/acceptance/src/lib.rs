//! Holds the `acceptance` test target. Kept in its own package so that the
//! library, binary and CLI tests of `cfsat` run before it.
