#![allow(dead_code)]

pub mod dijkstra;
pub mod gradcheck;
pub mod op_checks;
pub mod golden;
pub mod model_check;

/// Desk-scale M_synthetic checkpoint kept as a regression fixture.
pub fn fixture_params() -> pacer::model::ModelParams {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/m_synthetic.pacr");
    pacer::model::load_checkpoint(&path, &pacer::model::NetworkSpec::default()).unwrap()
}
