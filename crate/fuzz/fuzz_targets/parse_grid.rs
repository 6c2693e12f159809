#![no_main]

use libfuzzer_sys::fuzz_target;
use meshbench::StructuredGrid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = StructuredGrid::parse(text) {
        let again = StructuredGrid::parse(&g.to_text()).expect("written grid parses");
        assert_eq!(g.points(), again.points());
        assert_eq!((g.m(), g.n()), (again.m(), again.n()));
    }
});
