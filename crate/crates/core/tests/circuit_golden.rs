//! Text dumps of compiled circuits compared against checked-in files.
//! Set `W4_UPDATE_GOLDEN=1` to regenerate them.

use std::f64::consts::PI;
use std::path::PathBuf;

use w4_core::circuit::{Circuit, DeterministicInteraction, RandomUnitarySpec};
use w4_core::linalg::BlochAxis;
use w4_core::protocol::{
    build_protocol_circuit, FreeEvolution, InitialTarget, Interaction, ProtocolConfig, RotationAxis,
};

fn check(name: &str, text: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    if std::env::var_os("W4_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, text).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    assert_eq!(text, want, "golden mismatch for {name}");
    let parsed = Circuit::from_text(text).unwrap();
    assert_eq!(
        parsed
            .to_text()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .count(),
        text.lines().filter(|l| !l.starts_with('#')).count()
    );
}

#[test]
fn case1a_circuit() {
    let cfg = ProtocolConfig::new(
        InitialTarget::Pure {
            axis: BlochAxis::Minus,
        },
        FreeEvolution::rotation(RotationAxis::Z, 3.0 * PI / 8.0),
        Interaction::Deterministic {
            spec: DeterministicInteraction::XzIyx,
        },
    );
    let pc = build_protocol_circuit(&cfg).unwrap();
    check("case1a.txt", &pc.scheduled().to_text());
}

#[test]
fn case3_circuit() {
    let cfg = ProtocolConfig::new(
        InitialTarget::Pure {
            axis: BlochAxis::One,
        },
        FreeEvolution::Identity,
        Interaction::Random {
            spec: RandomUnitarySpec::from_seed(7),
        },
    );
    let pc = build_protocol_circuit(&cfg).unwrap();
    assert_eq!(pc.depth().depth_double, 12);
    check("case3_seed7.txt", &pc.scheduled().to_text());
}
