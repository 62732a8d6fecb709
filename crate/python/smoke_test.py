"""Smoke test for the pyskinbath extension.

Build and copy the module next to this file first:

    cargo build --release -p skinbath-python --features extension-module
    cp target/release/libpyskinbath.so python/pyskinbath.so
    python3 python/smoke_test.py
"""

import json
import math
import tempfile
from pathlib import Path

import pyskinbath as sb


def test_lattice():
    lat = sb.Lattice(20, 10.0, 5.0)
    assert lat.t_r == 15.0 and lat.t_l == 5.0
    assert abs(lat.beta - math.sqrt(3.0)) < 1e-15
    assert lat.regime() == "convectively unstable"
    assert len(lat.obc_modes()) == 18
    lossy = sb.Lattice(100, 10.0, 5.0, loss=10.0)
    assert lossy.regime() == "stable"
    assert max(e.imag for e in lossy.pbc_spectrum(64)) <= 1e-12


def test_small_emitter_decay():
    system = sb.System(sb.Lattice(600, 10.0, 5.0), [sb.Emitter("b", [(300, 0.2)])])
    run = system.simulate("b", 30.0, 31)
    ln_p = run["ln_populations"]["b"]
    rate = -(ln_p[30] - ln_p[2]) / 28.0
    assert abs(rate / (0.04 / math.sqrt(75.0)) - 1.0) < 0.05


def test_self_energy_and_bound_state():
    beta = math.sqrt(3.0)
    assert abs(sb.sigma(0.0, 1.0, beta ** -2, 2, 15.0, 5.0)) < 1e-12
    system = sb.System(sb.Lattice(60, 20.0, 10.0), [sb.Emitter("b", [(29, 1.0)])])
    state = system.bound_state()
    assert state["converged"] and state["residual"] < 1e-8


def test_invalid_input():
    try:
        sb.Lattice(10, 1.0, 0.5, boundary="twisted")
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")


def test_run_scenario():
    config = {
        "lattice": {"M": 20, "nu": 10.0, "gamma": 5.0},
        "emitters": [{"label": "b", "couplings": [{"site": 8, "strength": 1.0}]}],
    }
    with tempfile.TemporaryDirectory() as out:
        files = sb.run_scenario("spectrum", json.dumps(config), out)
        assert "spectrum.csv" in files
        manifest = json.loads((Path(out) / "manifest.json").read_text())
        assert manifest["status"] == "ok"


def test_pseudosphere():
    assert abs(sb.curvature(math.sqrt(3.0)) - 4.0 * math.log(math.sqrt(3.0)) ** 2) < 1e-12
    assert all(abs(p[3]) < 1e-10 for p in sb.pseudosphere(1.0, 8, 8))


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
