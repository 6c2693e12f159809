#![no_main]

use libfuzzer_sys::fuzz_target;
use meshbench::triangulation::TriMesh;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = TriMesh::parse(text) {
        let again = TriMesh::parse(&m.to_text()).expect("written mesh parses");
        assert_eq!(m, again);
        let _ = m.local_delaunay_violations();
    }
});
