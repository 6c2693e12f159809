#![no_main]

use libfuzzer_sys::fuzz_target;
use meshbench::Polygon;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = Polygon::parse(text) {
        let again = Polygon::parse(&p.to_text()).expect("written polygon parses");
        assert_eq!(p.vertices(), again.vertices());
        let _ = p.scale_to_unit();
    }
});
