//! Placeholder; implemented module by module.
