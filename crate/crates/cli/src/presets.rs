//! Scenario configurations shipped with the binary.

pub const ALL: [(&str, &str); 6] = [
    ("gamma_r2_steady", include_str!("../presets/gamma_r2_steady.toml")),
    ("gamma_b3_drift", include_str!("../presets/gamma_b3_drift.toml")),
    ("gamma_bmo_drift", include_str!("../presets/gamma_bmo_drift.toml")),
    ("ns_rigid_rotation", include_str!("../presets/ns_rigid_rotation.toml")),
    ("ns_swirl_decay", include_str!("../presets/ns_swirl_decay.toml")),
    ("verify_suite_full", include_str!("../presets/verify_suite_full.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    ALL.iter().map(|(n, _)| *n)
}
