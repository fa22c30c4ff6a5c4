import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usris.channel import (SPEED_OF_LIGHT, ChannelSet, los_entry, los_matrix, read_matrix, synthesize,
                           ula_positions, wavelength, write_channels, write_matrix)
from usris.errors import SingularityError
from usris.geometry import FLAT, FoldConfiguration, SurfaceSpec, angle_set_for, apply_fold


def test_wavelength():
    # 299792458 / 2.5e9, exact decimal
    assert wavelength(2.5e9) == pytest.approx(0.1199169832, rel=1e-15)
    assert wavelength(SPEED_OF_LIGHT) == 1.0
    assert wavelength(2 * SPEED_OF_LIGHT) == 0.5
    with pytest.raises(ValueError):
        wavelength(0.0)


def test_los_entry_direct_substitution():
    lam = 0.12
    e = los_entry((0, 0, 0), (lam, 0, 0), lam)
    assert abs(e) == pytest.approx(1 / (4 * math.pi), rel=1e-14)
    assert abs(cmath.phase(e)) < 1e-12 or abs(abs(cmath.phase(e)) - 2 * math.pi) < 1e-12
    e = los_entry((0, 0, 0), (0, lam / 2, 0), lam)
    assert abs(e) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert abs(abs(cmath.phase(e)) - math.pi) < 1e-9


def test_los_entry_far_link_magnitude():
    # 0.1199 / (4 pi 10), mpmath
    assert abs(los_entry((0, 0, 0), (0, 10, 0), 0.1199)) == pytest.approx(9.541338838359125e-4, rel=1e-13)


def test_los_entry_singular():
    with pytest.raises(SingularityError):
        los_entry((1, 2, 3), (1, 2, 3), 0.1)


def test_los_matrix_names_offending_pair():
    with pytest.raises(SingularityError, match="rx 1 coincides with tx 0"):
        los_matrix(np.array([[0.0, 0, 0]]), np.array([[1.0, 0, 0], [0.0, 0, 0]]), 0.1)


def _scenario(fold=FLAT, layers=3, rows=2, cols=2, lam=0.12):
    spec = SurfaceSpec(layers, rows, cols, lam / 4, 0.02)
    user = ula_positions(2, (0, 0, 0), lam / 2)
    bs = ula_positions(3, (0, 10, 0), lam / 2)
    return spec, user, bs, synthesize(user, apply_fold(spec, fold), bs, lam)


def test_shapes_and_entries():
    spec, user, bs, ch = _scenario()
    N = spec.n_grid
    assert ch.h[0].shape == (N, 2)
    assert all(h.shape == (N, N) for h in ch.h[1:])
    assert ch.g.shape == (N, 3)
    for mat in (*ch.h, ch.g):
        assert np.all(np.isfinite(mat)) and np.all(mat != 0)


def test_entries_follow_definition():
    spec, user, bs, ch = _scenario()
    pos = apply_fold(spec, FLAT).positions
    lam = 0.12
    assert ch.h[0][3, 1] == pytest.approx(los_entry(user[1], pos[0, 3], lam), rel=1e-12)
    assert ch.h[2][1, 2] == pytest.approx(los_entry(pos[1, 2], pos[2, 1], lam), rel=1e-12)
    assert ch.g[2, 0] == pytest.approx(los_entry(pos[2, 2], bs[0], lam), rel=1e-12)


def test_single_element_layers_on_axis():
    lam, D = 0.12, 0.02
    pos = np.array([[[0.0, D, 0.0]], [[0.0, 2 * D, 0.0]]])
    ch = synthesize([[0, 0, 0]], pos, [[0, 10, 0]], lam)
    assert ch.h[1].shape == (1, 1)
    assert abs(ch.h[1][0, 0]) == pytest.approx(lam / (4 * math.pi * D), rel=1e-14)


def test_translation_invariance():
    spec, user, bs, ch = _scenario()
    pos = apply_fold(spec, FLAT).positions
    t = np.array([3.3, -1.7, 0.25])
    moved = synthesize(user + t, pos + t, bs + t, 0.12)
    for a, b in zip((*ch.h, ch.g), (*moved.h, moved.g)):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.floats(-5, 5))
def test_isometry_invariance(a, b, shift):
    spec, user, bs, ch = _scenario()
    pos = apply_fold(spec, FLAT).positions
    ca, sa, cb, sb = math.cos(a), math.sin(a), math.cos(b), math.sin(b)
    R = np.array([[ca, -sa, 0], [sa, ca, 0], [0, 0, 1]]) @ np.array([[1, 0, 0], [0, cb, -sb], [0, sb, cb]])
    t = np.array([shift, -shift, 0.5 * shift])
    moved = synthesize(user @ R.T + t, pos @ R.T + t, bs @ R.T + t, 0.12)
    for x, y in zip((*ch.h, ch.g), (*moved.h, moved.g)):
        # exp(-j 2 pi d / lam) with d ~ 10 m amplifies distance rounding by ~500
        np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)


def test_magnitude_and_phase_laws():
    spec, user, bs, ch = _scenario()
    pos = apply_fold(spec, FLAT).positions
    lam = 0.12
    pairs = [(user, pos[0], ch.h[0]), (pos[0], pos[1], ch.h[1]), (pos[1], pos[2], ch.h[2]), (bs, pos[2], ch.g)]
    for tx, rx, mat in pairs:
        d = np.linalg.norm(rx[:, None] - tx[None], axis=-1)
        np.testing.assert_allclose(np.abs(mat) * 4 * np.pi * d / lam, 1.0, rtol=1e-12)
        wrapped = np.angle(mat * np.exp(2j * np.pi * d / lam))
        assert np.max(np.abs(wrapped)) < 1e-9


def test_monotone_attenuation():
    lam = 0.12
    tx = np.array([[0.0, 0, 0], [0.03, 0, 0]])
    rx = np.array([[0.0, 0.5, 0], [0.1, 0.7, 0.2]])
    base = np.abs(los_matrix(tx, rx, lam))
    stretched = np.abs(los_matrix(1.5 * tx, 1.5 * rx, lam))
    assert np.all(stretched < base)


def test_fold_changes_bs_channel():
    spec = SurfaceSpec(2, 2, 2, 0.03, 0.02)
    angles = angle_set_for(spec, 3)
    _, _, _, flat = _scenario(FLAT, layers=2)
    _, _, _, folded = _scenario(FoldConfiguration(angles.angles[2], angles.angles[0]), layers=2)
    rel = np.abs(folded.g - flat.g) / np.abs(flat.g)
    assert rel.max() > 1e-9


def test_ula_centered():
    pos = ula_positions(4, (1.0, 2.0, 3.0), 0.5)
    np.testing.assert_allclose(pos.mean(axis=0), [1, 2, 3])
    np.testing.assert_allclose(np.diff(pos[:, 0]), 0.5)


def test_matrix_dump_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    m = rng.standard_normal((3, 4)) * 1e-7 + 1j * rng.standard_normal((3, 4))
    write_matrix(m, tmp_path / "m.txt")
    assert (tmp_path / "m.txt").read_text().splitlines()[0] == "3 4"
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.txt"), m)


def test_write_channels(tmp_path):
    *_, ch = _scenario()
    paths = write_channels(ch, tmp_path)
    assert [p.name for p in paths] == ["h1.txt", "h2.txt", "h3.txt", "g.txt"]
    np.testing.assert_array_equal(read_matrix(tmp_path / "g.txt"), ch.g)
    assert isinstance(ch, ChannelSet) and ch.layers == 3
