import json

import numpy as np
import pytest

from restain.errors import ProfileFormatError, ProfileNotFoundError
from restain.profiles import (
    builtin_profile,
    complete_residual,
    default_profile,
    load_profile,
    resolve_profile,
    rotate_profile,
    save_profile,
)


def test_save_load_round_trip(tmp_path, her2_profile):
    path = tmp_path / "p.json"
    save_profile(her2_profile, path)
    loaded = load_profile(path)
    assert loaded.domain_id == her2_profile.domain_id
    assert loaded.stain_matrix.stain_names == her2_profile.stain_matrix.stain_names
    assert np.allclose(loaded.stain_matrix.columns, her2_profile.stain_matrix.columns, atol=1e-12)
    assert np.array_equal(loaded.white_point, her2_profile.white_point)


def test_non_unit_vector_warns_and_normalizes(tmp_path):
    data = {
        "domain_id": "x",
        "white_point": [255.0, 255.0, 255.0],
        "stains": [
            {"name": "hematoxylin", "od_vector": [1.3, 1.4, 0.6]},  # norm ~2
            {"name": "dab", "od_vector": [0.269, 0.568, 0.776]},
        ],
    }
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data))
    with pytest.warns(UserWarning, match="deviates from 1"):
        profile = load_profile(path)
    assert np.allclose(np.linalg.norm(profile.stain_matrix.columns, axis=0), 1.0)


def test_malformed_profile_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(ProfileFormatError):
        load_profile(path)
    path.write_text(json.dumps({"domain_id": "x"}))
    with pytest.raises(ProfileFormatError):
        load_profile(path)


def test_missing_profile_distinct_error(tmp_path):
    with pytest.raises(ProfileNotFoundError):
        load_profile(tmp_path / "absent.json")
    with pytest.raises(ProfileNotFoundError):
        builtin_profile("no-such-builtin")


def test_rotate_profile_moves_dyes_by_exact_angle(her2_profile):
    angle = 0.05
    rotated = rotate_profile(her2_profile, angle, seed=4)
    for i, name in enumerate(her2_profile.stain_matrix.stain_names):
        cos = float(
            her2_profile.stain_matrix.columns[:, i] @ rotated.stain_matrix.columns[:, i]
        )
        if name == "residual":
            assert cos > np.cos(2 * angle)  # re-completed from the rotated dyes
        else:
            assert cos == pytest.approx(np.cos(angle), abs=1e-12)
    assert np.all(rotated.stain_matrix.columns >= 0)


def test_rotate_profile_deterministic(her2_profile):
    a = rotate_profile(her2_profile, 0.03, seed=9)
    b = rotate_profile(her2_profile, 0.03, seed=9)
    assert np.array_equal(a.stain_matrix.columns, b.stain_matrix.columns)


def test_complete_residual_nonnegative_unit():
    r = complete_residual(np.array([0.65, 0.70, 0.29]), np.array([0.27, 0.57, 0.78]))
    assert np.all(r >= 0)
    assert np.linalg.norm(r) == pytest.approx(1.0, abs=1e-12)


def test_resolve_prefers_path_then_dir_then_builtin(tmp_path, her2_profile):
    pdir = tmp_path / "profiles"
    pdir.mkdir()
    save_profile(rotate_profile(her2_profile, 0.01, seed=1, domain_id="named"), pdir / "named.json")
    assert resolve_profile(str(pdir / "named.json")).domain_id == "named"
    assert resolve_profile("named", profile_dir=str(pdir)).domain_id == "named"
    assert resolve_profile("her2-default").domain_id == "her2-default"
    with pytest.raises(ProfileNotFoundError):
        resolve_profile("nowhere", profile_dir=str(pdir))


def test_builtin_brand_pair_is_close_but_distinct():
    a = builtin_profile("her2-brand-a")
    b = builtin_profile("her2-brand-b")
    assert a.domain_id != b.domain_id
    cos = np.sum(a.stain_matrix.columns * b.stain_matrix.columns, axis=0)
    assert np.all(cos > 0.995)  # nearby domains
    assert not np.array_equal(a.stain_matrix.columns, b.stain_matrix.columns)


def test_default_profile_matrix_well_conditioned():
    m = default_profile().stain_matrix
    assert np.linalg.cond(m.columns) < 25.0
