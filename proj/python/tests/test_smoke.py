import json
import pathlib

import numpy as np
import pytest

import locrb


@pytest.fixture(scope="module")
def tiny():
    model = locrb.Model(locrb.Problem.preset("tiny-channels"))
    basis, reports = model.train(seed=5)
    return model, basis, reports


def test_presets():
    assert "paper-channels" in locrb.preset_names()
    p = locrb.Problem.preset("paper-channels")
    assert (p.nx, p.ny, p.m, p.q) == (8, 8, 32, 7)
    assert p.mu_star == [6.0] * 7
    with pytest.raises(locrb.ConfigError):
        locrb.Problem.preset("nope")


def test_config_round_trip():
    p = locrb.Problem.preset("tiny-channels")
    q = locrb.Problem.from_config(p.to_config())
    assert json.dumps(q.to_config(), sort_keys=True) == json.dumps(p.to_config(), sort_keys=True)
    with pytest.raises(locrb.ConfigError):
        locrb.Problem.from_config({"preset": "tiny-channels", "colour": 1})


def test_presets_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema_path = pathlib.Path(__file__).resolve().parents[2] / "schemas" / "problem.schema.json"
    schema = json.loads(schema_path.read_text())
    for name in locrb.preset_names():
        jsonschema.validate(locrb.Problem.preset(name).to_config(), schema)


def test_fom_shapes_and_parameters():
    model = locrb.Model(locrb.Problem.preset("tiny-channels"))
    u = model.solve_fom([5.0, 5.0, 5.0])
    assert u.shape == (9, 25)
    assert model.num_dofs == u.size
    with pytest.raises(locrb.ParameterError):
        model.solve_fom([3.0, 5.0, 5.0])
    assert model.coercivity_lb([5.0, 5.0, 5.0]) > 0


def test_training(tiny):
    model, basis, reports = tiny
    assert len(reports) == 9
    assert basis.counts("pou") == [4] * 9
    assert basis.seed == 5
    for T in range(9):
        assert basis.orthonormality_error(T) < 1e-8
        assert basis.vectors(T).shape == (25, basis.sizes[T])


def test_adaptive_solve(tiny):
    model, basis, _ = tiny
    mu = [4.0, 6.0, 4.0]
    out = model.adaptive_solve(basis, mu, stop="true-error:1e-3")
    assert out["converged"]
    assert out["log"][-1]["true_error"] <= 1e-3
    assert out["basis"].total_size >= basis.total_size
    u = model.solve_fom(mu)
    err = np.linalg.norm(out["u_rb"] - u) / np.linalg.norm(u)
    assert err < 1e-2

    est = model.estimate(out["basis"], mu)
    assert est["estimate"] > 0
    assert len(est["indicators"]) == 9


def test_basis_file(tiny, tmp_path):
    model, basis, _ = tiny
    path = str(tmp_path / "b.lrb")
    model.save_basis(basis, path)
    back = model.load_basis(path)
    assert back.sizes == basis.sizes
    assert np.array_equal(back.vectors(4), basis.vectors(4))
    other = locrb.Problem.from_config({"preset": "tiny-channels", "penalty": 20})
    with pytest.raises(locrb.ConfigError):
        locrb.Model(other).load_basis(path)


def test_mark():
    assert locrb.mark([0.1, 0.5, 0.2, 0.5], 0.5) == [1]
    assert locrb.mark([0.1, 0.5, 0.2, 0.5], 0.5, linear=True) == [1, 3]
    assert locrb.mark([0.0, 0.0], 0.5) == []


def test_cli(tmp_path):
    code, out, _ = locrb.run_cli(["offline", "--preset", "tiny-channels", "--out", str(tmp_path / "off")])
    assert code == 0
    assert "basis vectors" in out
    manifest = json.loads((tmp_path / "off" / "manifest.json").read_text())
    assert set(manifest["files"]) >= {"basis.lrb", "manifest.json"}
    code, _, _ = locrb.run_cli(["offline", "--out", str(tmp_path / "x")])
    assert code == 2
