//! Holds the `acceptance` test target. It lives in its own package so the
//! long-running, data-dependent checks run after every other suite.
