use hemonet_core::model::{default_network, load_network, NetworkFile, DEFAULT_NETWORK_JSON};
use hemonet_core::netflow::validate_network;
use hemonet_core::Error;

#[test]
fn file_round_trip_preserves_network() {
    let net = default_network();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    std::fs::write(&path, NetworkFile::from_network(&net).to_json_pretty()).unwrap();
    let back = load_network(&path).unwrap();
    for (a, b) in net.segments().iter().zip(back.segments()) {
        assert_eq!(a.id, b.id);
        assert!((a.flow / b.flow - 1.0).abs() < 1e-12);
        assert!((a.volume / b.volume - 1.0).abs() < 1e-12);
    }
    assert!(back.notes.is_empty(), "reconciled flows are stored consistently");
    assert!(validate_network(&back).pass);
}

#[test]
fn missing_file_reports_path() {
    match load_network(std::path::Path::new("/no/such/net.json")) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("net.json")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_edge_is_config_error() {
    let text = DEFAULT_NETWORK_JSON.replacen("\"legs\",\n      \"inferior_vena_cava\"", "\"legs\",\n      \"tail\"", 1);
    assert_ne!(text, DEFAULT_NETWORK_JSON);
    assert!(matches!(NetworkFile::from_json(&text).unwrap().into_network(), Err(Error::Config(_))));
}
