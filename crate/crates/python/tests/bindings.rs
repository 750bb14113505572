use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(signal_codes_py::signal_codes_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("sc", module).unwrap();
        let src = CString::new(code).unwrap();
        if let Err(e) = py.run(&src, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn minimum_distance_and_spectrum() {
    run(r#"
f = sc.Pattern("table1:2")
md = sc.min_distance(f, n_max=8)
assert abs(md["d2_min"] - 17.33) < 0.01 and md["n_min"] == 3
rep = sc.search_spectrum(f, 19.0, n_max=6)
assert rep["complete"] and len(rep["events"]) > 0
assert sc.cartesian_spectrum(3) == ([4, 20, 96], [4, 4, 0])
"#);
}

#[test]
fn shape_decode_round_trip() {
    run(r#"
g = sc.Pattern.fir([1, 0.5 + 0.3j])
data = [complex(2 * (k % 4) - 3, 2 * ((k // 4) % 4) - 3) for k in range(60)]
for kind in ("tomlinson", "flexible", "nested"):
    out = sc.shape(g, data, m=4, scheme_kind=kind, m_alg=4)
    assert sc.unshape(g, out["b"], m=4, scheme_kind=kind) == data
    r = sc.decode(g, out["x"], out["tail"], 0.05, m=4, x_range_test=(kind != "nested"))
    assert r["b"] == out["b"], kind
"#);
}

#[test]
fn errors_become_python_exceptions() {
    run(r#"
for call in (lambda: sc.Pattern("nope"),
             lambda: sc.Pattern.fir([2, 1]),
             lambda: sc.shape(sc.Pattern("identity"), [2 + 0j]),
             lambda: sc.decode(sc.Pattern("identity"), [1j], [], 0.1, decoder="viterbi")):
    try:
        call()
    except ValueError:
        continue
    raise AssertionError("no error raised")
"#);
}
