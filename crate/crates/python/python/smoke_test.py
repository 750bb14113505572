"""Smoke test for the Python bindings.

Build first:

    cargo build -p signal-codes-py --features extension-module --release

then run `python3 crates/python/python/smoke_test.py`. The script imports
`signal_codes` if it is installed and otherwise loads the library straight
from the cargo target directory.
"""

import importlib.machinery
import importlib.util
import os
import pathlib
import sys


def load():
    try:
        import signal_codes

        return signal_codes
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parents[3]
    candidates = [os.environ.get("SIGNAL_CODES_LIB")] + [
        str(root / "target" / profile / name)
        for profile in ("release", "debug")
        for name in ("libsignal_codes_py.so", "libsignal_codes_py.dylib", "signal_codes_py.dll")
    ]
    for path in filter(None, candidates):
        if os.path.exists(path):
            loader = importlib.machinery.ExtensionFileLoader("signal_codes", path)
            spec = importlib.util.spec_from_loader("signal_codes", loader)
            mod = importlib.util.module_from_spec(spec)
            loader.exec_module(mod)
            return mod
    sys.exit("signal_codes extension not found; build it first")


def main():
    sc = load()
    print("signal_codes", sc.__version__)

    f = sc.Pattern("table1:1")
    assert f.order == 2 and f.is_minimum_phase()
    md = sc.min_distance(f, n_max=8)
    assert abs(md["d2_min"] - 14.81) < 0.01 and md["n_min"] == 3, md
    event = [complex(re, im) for re, im in md["event"]]
    assert abs(f.error_weight(event) - md["d2_min"]) < 1e-9

    rep = sc.search_spectrum(f, 18.0, n_max=8)
    bf = sc.search_spectrum(f, 18.0, n_max=8, d2_tail=8.0)
    assert rep["events"] == bf["events"] and rep["complete"]

    a, b = sc.cartesian_spectrum(4)
    assert a == [4, 20, 96, 468] and b == [4, 4, 0, 4]

    g = sc.Pattern("table1:4")
    data = [complex(2 * (k % 8) - 7, 2 * ((3 * k) % 8) - 7) for k in range(200)]
    out = sc.shape(g, data, m=8)
    assert all(-8 <= x.real < 8 and -8 <= x.imag < 8 for x in out["x"])
    assert sc.unshape(g, out["b"], m=8) == data
    assert sc.decompress_tail(g, out["tail_packed"]) == out["tail"]

    sigma2 = sc.snr_to_sigma2(24.0, 2 * 8**2 / 3)
    y = sc.awgn(out["x"], sigma2, seed=3)
    for decoder in ("stack", "bidir"):
        r = sc.decode(g, y, out["tail"], sigma2, m=8, decoder=decoder)
        assert r["b"] == out["b"], decoder
        assert r["stats"]["entries_processed"] >= 200

    cap = sc.uniform_capacity(8, 19.1)
    assert 5.9 < cap < 6.1, cap
    assert abs(sc.gaussian_capacity(10 * __import__("math").log10(63)) - 6.0) < 1e-9

    sim = sc.simulate('{"block_len": 100, "blocks": 4, "snr_db": [24.0]}')
    assert sim["points"][0]["frames"] == 4

    try:
        sc.Pattern("table1:9")
    except ValueError:
        pass
    else:
        raise AssertionError("bad pattern accepted")
    print("ok")


if __name__ == "__main__":
    main()
