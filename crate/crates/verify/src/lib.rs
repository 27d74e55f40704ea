//! Holds the `acceptance` test target only. It runs after the unit and
//! integration suites of the other crates so a failing criterion does not hide
//! their results.
