import json
import math

import numpy as np
import pytest

import pyppr


def fpu():
    return pyppr.FpuSystem(3, 50.0)


def test_energy_transform_norm_is_hamiltonian():
    sys = fpu()
    u = pyppr.fpu_initial_state(sys)
    v = pyppr.energy_transform(sys, u)
    assert len(v) == 13
    assert math.isclose(float(np.dot(v, v)), pyppr.hamiltonian(sys, u), rel_tol=1e-13)


def test_pinv_round_trip():
    sys = fpu()
    u = pyppr.fpu_initial_state(sys)
    v = pyppr.energy_transform(sys, u)
    w = pyppr.energy_transform_pinv(sys, v, u, mode="energy_shell")
    assert np.allclose(w.concat(), u.concat(), atol=1e-12)


def test_dimension_error_is_typed():
    with pytest.raises(pyppr.DimensionError):
        pyppr.energy_transform(fpu(), pyppr.PhaseState([0.0], [0.0]))
    assert issubclass(pyppr.ConfigError, pyppr.PprError)


def test_harmonic_oscillator_css4_matches_exact_flow():
    sys = pyppr.HarmonicOscillator()
    u = pyppr.advance(sys, pyppr.PhaseState([0.0], [1.0]), 1.0, {"scheme": "css4", "h": "2^-8"})
    assert abs(u.q[0] - math.cos(1.0)) < 1e-9
    assert abs(u.p[0] + math.sin(1.0)) < 1e-9


def test_procrustes_recovers_rotation():
    rng = np.random.default_rng(0)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    coarse = rng.standard_normal((5, 40))
    r = pyppr.solve_procrustes(q @ coarse, coarse)
    assert np.abs(r["omega"] - q).max() < 1e-12
    assert r["full_rank"]


def test_parareal_converges_at_k_equals_n():
    sys = fpu()
    out = pyppr.parareal(sys, pyppr.fpu_initial_state(sys), N=4, K=4, dt=0.5,
                         coarse={"scheme": "css4", "h": "2^-6"},
                         fine={"scheme": "css4", "h": "2^-8"}, mode="procrustes")
    traj = np.asarray(out["traj_err"])
    assert traj.shape == (5, 5)
    assert np.nanmax(traj[4]) < 1e-12


def test_resnet_checkpoint_round_trip():
    net = pyppr.ResNet.he_init(2, 16, 2, 7)
    text = pyppr.serialize_checkpoint(net)
    back = pyppr.parse_checkpoint(text)
    assert np.array_equal(back.theta, net.theta)
    u = pyppr.PhaseState([0.1, 0.2], [0.3, 0.4])
    assert back.forward(u) == net.forward(u)


def test_run_command_writes_manifest(tmp_path):
    cfg = {"system": {"system": "fpu", "m": 3, "omega": 50}, "dt": 0.5, "N": 2,
           "solver": {"scheme": "vv", "h": "2^-7"}}
    pyppr.run_command("sim", json.dumps(cfg), str(tmp_path))
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for f in manifest["files"]:
        assert pyppr.sha256_hex((tmp_path / f["path"]).read_bytes().decode()) == f["sha256"]
    with pytest.raises(pyppr.ConfigError):
        pyppr.run_command("nope", json.dumps(cfg), str(tmp_path))
