//! Named built-in families.
