import numpy as np
import pytest

from poselift.body import (
    BodyModelError,
    BodyParams,
    capsule_person,
    forward,
    load_body,
    load_params,
    save_body,
    save_params,
)

from helpers import cached_model


def test_body_round_trip_bitwise(tmp_path):
    model = cached_model()
    p1 = tmp_path / "a.pbdy"
    p2 = tmp_path / "b.pbdy"
    save_body(model, p1)
    loaded = load_body(p1)
    # storage is float32: the reload equals the float32 cast of the source
    assert np.array_equal(loaded.template_vertices,
                          model.template_vertices.astype("<f4").astype(np.float64))
    assert np.array_equal(loaded.faces, model.faces)
    assert np.array_equal(loaded.parents, model.parents)
    assert loaded.lambda_joints == model.lambda_joints
    assert np.array_equal(loaded.delta_signs, model.delta_signs)
    assert loaded.joint_names == model.joint_names
    save_body(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_loaded_body_poses_like_source(tmp_path):
    model = cached_model()
    path = tmp_path / "m.pbdy"
    save_body(model, path)
    loaded = load_body(path)
    rng = np.random.default_rng(0)
    params = BodyParams(rot6d=rng.standard_normal(6), trans=rng.standard_normal(3),
                        theta=rng.standard_normal(32) * 0.5,
                        phi=rng.standard_normal(10) * 0.5)
    va, ja = forward(model, params)
    vb, jb = forward(loaded, params)
    # float32 asset quantization only
    assert np.abs(va - vb).max() < 1e-5
    assert np.abs(ja - jb).max() < 1e-5


def test_body_load_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.pbdy"
    p.write_bytes(b"XXXX" + bytes(64))
    with pytest.raises(BodyModelError):
        load_body(p)


def test_body_load_rejects_wrong_dims(tmp_path):
    model = capsule_person(seed=0)
    p = tmp_path / "m.pbdy"
    save_body(model, p)
    blob = bytearray(p.read_bytes())
    blob[16] = 99  # corrupt the joint-count field
    p.write_bytes(bytes(blob))
    with pytest.raises(BodyModelError):
        load_body(p)


def test_params_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(1)
    params = BodyParams(rot6d=rng.standard_normal(6), trans=rng.standard_normal(3),
                        theta=rng.standard_normal(32), phi=rng.standard_normal(10))
    p1 = tmp_path / "a.params"
    p2 = tmp_path / "b.params"
    save_params(params, p1)
    loaded, extras = load_params(p1)
    assert np.array_equal(loaded.rot6d, params.rot6d)
    assert np.array_equal(loaded.trans, params.trans)
    assert np.array_equal(loaded.theta, params.theta)
    assert np.array_equal(loaded.phi, params.phi)
    assert extras == {}
    save_params(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_params_extras_round_trip(tmp_path):
    params = BodyParams()
    weights = np.array([0.9, 0.25, 1.0])
    energies = {"pf": 12.5, "total": 13.75}
    path = tmp_path / "x.params"
    save_params(params, path, view_weights=weights, energies=energies)
    _, extras = load_params(path)
    assert np.array_equal(extras["view_weights"], weights)
    assert extras["energies"] == energies


def test_params_load_rejects_missing_header(tmp_path):
    p = tmp_path / "h.params"
    p.write_text("rot6d 1 0 0 0 1 0\n")
    with pytest.raises(BodyModelError):
        load_params(p)


def test_params_load_rejects_missing_record(tmp_path):
    p = tmp_path / "m.params"
    p.write_text("# poselift params v1\nrot6d 1 0 0 0 1 0\ntrans 0 0 0\n")
    with pytest.raises(BodyModelError):
        load_params(p)


def test_params_load_rejects_unknown_record(tmp_path):
    p = tmp_path / "u.params"
    save_params(BodyParams(), p)
    p.write_text(p.read_text() + "mystery 1 2 3\n")
    with pytest.raises(BodyModelError):
        load_params(p)


def test_params_load_rejects_wrong_arity(tmp_path):
    p = tmp_path / "a.params"
    p.write_text("# poselift params v1\nrot6d 1 0 0\ntrans 0 0 0\n"
                 "theta " + " ".join(["0"] * 32) + "\nphi " + " ".join(["0"] * 10) + "\n")
    with pytest.raises(BodyModelError):
        load_params(p)
