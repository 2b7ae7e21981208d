import numpy as np
import pytest

from poselift.body import BodyParams
from poselift.hypotheses import (
    LAYOUTS,
    HypothesisError,
    JointMap,
    PoseHypothesis,
    get_joint_map,
    load_hypotheses,
    save_hypotheses,
    synth_hypotheses,
)
from poselift.scene import look_at, project
from poselift.body import forward

from helpers import cached_model


def ring_cameras(k, target, d=2.0, z=1.0):
    cams = []
    for i in range(k):
        a = 2 * np.pi * i / k
        eye = np.asarray(target) + [d * np.cos(a), d * np.sin(a), z]
        cams.append(look_at(eye, target, view_id=i))
    return cams


def test_known_layouts_present():
    assert set(LAYOUTS) == {"body22", "coco17"}
    assert get_joint_map("coco17").n_detector_joints == 17
    assert get_joint_map("body22").n_detector_joints == 22


def test_unknown_layout_raises():
    with pytest.raises(HypothesisError):
        get_joint_map("openpose25")


def test_coco17_map_injective_and_in_range():
    jm = get_joint_map("coco17")
    body = jm.body_indices
    det = jm.detector_indices
    assert len(set(body.tolist())) == len(body)
    assert ((det >= 0) & (det < 17)).all()
    assert ((body >= 0) & (body < 22)).all()
    # eyes and ears (detector 1..4) have no body counterpart
    assert not set(det.tolist()) & {1, 2, 3, 4}


def test_joint_map_validation():
    with pytest.raises(HypothesisError):
        JointMap("dup", 4, ((0, 5), (1, 5)))
    with pytest.raises(HypothesisError):
        JointMap("det_oor", 2, ((2, 5),))
    with pytest.raises(HypothesisError):
        JointMap("body_oor", 4, ((0, 22),))


def test_hypothesis_validation():
    ok = PoseHypothesis(0, np.zeros((17, 2)), np.ones(17))
    assert ok.layout_id == "coco17"
    with pytest.raises(HypothesisError):
        PoseHypothesis(0, np.zeros((16, 2)), np.ones(16))  # wrong joint count
    with pytest.raises(HypothesisError):
        PoseHypothesis(0, np.zeros((17, 2)), np.full(17, 1.5))  # confidence > 1
    with pytest.raises(HypothesisError):
        PoseHypothesis(0, np.full((17, 2), np.nan), np.ones(17))
    with pytest.raises(HypothesisError):
        PoseHypothesis(0, np.zeros((17, 2)), np.ones(16))  # length mismatch


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    hyps = [
        PoseHypothesis(3, rng.uniform(0, 512, (17, 2)), rng.uniform(0, 1, 17)),
        PoseHypothesis(7, rng.uniform(0, 512, (22, 2)), rng.uniform(0, 1, 22),
                       layout_id="body22", width=640, height=480),
    ]
    p1 = tmp_path / "a.txt"
    p2 = tmp_path / "b.txt"
    save_hypotheses(hyps, p1)
    loaded = load_hypotheses(p1)
    assert [h.view_id for h in loaded] == [3, 7]
    for a, b in zip(hyps, loaded):
        assert np.array_equal(a.joints2d, b.joints2d)
        assert np.array_equal(a.confidence, b.confidence)
        assert a.layout_id == b.layout_id
        assert (a.width, a.height) == (b.width, b.height)
    save_hypotheses(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("hello\n")
    with pytest.raises(HypothesisError):
        load_hypotheses(p)


def test_load_rejects_joint_count_mismatch(tmp_path):
    p = tmp_path / "n.txt"
    p.write_text("# poselift hypotheses v1\nhypothesis 0\nlayout coco17\n"
                 "joints 17\nj 1.0 2.0 0.5\n")
    with pytest.raises(HypothesisError):
        load_hypotheses(p)


def test_load_rejects_malformed_number(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("# poselift hypotheses v1\nhypothesis 0\njoints 1\nj 1.0 oops 0.5\n")
    with pytest.raises(HypothesisError):
        load_hypotheses(p)


def test_load_rejects_record_before_hypothesis(tmp_path):
    p = tmp_path / "o.txt"
    p.write_text("# poselift hypotheses v1\nsize 512 512\n")
    with pytest.raises(HypothesisError):
        load_hypotheses(p)


def test_load_rejects_unknown_record(tmp_path):
    p = tmp_path / "u.txt"
    p.write_text("# poselift hypotheses v1\nhypothesis 0\nwibble 3\n")
    with pytest.raises(HypothesisError):
        load_hypotheses(p)


def test_synth_projects_ground_truth_exactly():
    model = cached_model()
    gt = BodyParams(trans=np.array([0.0, 0.0, 1.0]))
    cams = ring_cameras(4, [0.0, 0.0, 1.0])
    hyps = synth_hypotheses(model, gt, cams, noise_px=0.0, layout_id="body22")
    _, joints = forward(model, gt)
    for cam, h in zip(cams, hyps):
        px, valid = project(cam, joints)
        assert np.array_equal(h.joints2d[valid], px[valid])
        assert np.array_equal(h.confidence, valid.astype(np.float64))


def test_synth_deterministic():
    model = cached_model()
    gt = BodyParams(trans=np.array([0.0, 0.0, 1.0]))
    cams = ring_cameras(4, [0.0, 0.0, 1.0])
    a = synth_hypotheses(model, gt, cams, noise_px=2.0, seed=9)
    b = synth_hypotheses(model, gt, cams, noise_px=2.0, seed=9)
    c = synth_hypotheses(model, gt, cams, noise_px=2.0, seed=10)
    for ha, hb in zip(a, b):
        assert np.array_equal(ha.joints2d, hb.joints2d)
    assert any(not np.array_equal(ha.joints2d, hc.joints2d) for ha, hc in zip(a, c))


def test_synth_noise_statistics():
    # displacement from the noiseless projection should be N(0, noise_px^2)
    model = cached_model()
    gt = BodyParams(trans=np.array([0.0, 0.0, 1.0]))
    cams = ring_cameras(8, [0.0, 0.0, 1.0])
    sigma = 2.0
    clean = synth_hypotheses(model, gt, cams, noise_px=0.0, layout_id="body22")
    deltas = []
    for seed in range(8):
        noisy = synth_hypotheses(model, gt, cams, noise_px=sigma, seed=seed,
                                 layout_id="body22")
        for hc, hn in zip(clean, noisy):
            deltas.append((hn.joints2d - hc.joints2d).ravel())
    deltas = np.concatenate(deltas)  # 8 seeds x 8 views x 22 joints x 2 = 2816
    assert abs(float(deltas.mean())) < 0.15
    assert abs(float(deltas.std()) - sigma) / sigma < 0.1


def test_synth_outlier_views_differ_from_truth():
    model = cached_model()
    gt = BodyParams(trans=np.array([0.0, 0.0, 1.0]))
    cams = ring_cameras(6, [0.0, 0.0, 1.0])
    hyps = synth_hypotheses(model, gt, cams, noise_px=0.0, outlier_views=(1, 4),
                            layout_id="body22")
    clean = synth_hypotheses(model, gt, cams, noise_px=0.0, layout_id="body22")
    for h, c in zip(hyps, clean):
        same = np.allclose(h.joints2d[c.confidence > 0], c.joints2d[c.confidence > 0],
                           atol=1.0)
        if h.view_id in (1, 4):
            assert not same
        else:
            assert same


def test_synth_coco17_drops_unmapped_joints():
    model = cached_model()
    gt = BodyParams(trans=np.array([0.0, 0.0, 1.0]))
    cams = ring_cameras(2, [0.0, 0.0, 1.0])
    hyps = synth_hypotheses(model, gt, cams, layout_id="coco17")
    for h in hyps:
        assert len(h.joints2d) == 17
        assert (h.confidence[[1, 2, 3, 4]] == 0.0).all()  # eyes, ears


def test_synth_requires_cameras():
    with pytest.raises(HypothesisError):
        synth_hypotheses(cached_model(), BodyParams(), [])
