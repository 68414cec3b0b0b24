//! Holds the `acceptance` test target. It lives in its own package so it runs after every
//! other test binary in the workspace.
