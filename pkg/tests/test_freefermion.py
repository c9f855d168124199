import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypchain.freefermion import (
    FermionModel,
    assemble,
    central_window,
    diagonalize,
    half_filled_gap,
    inverse_participation_ratio,
    ladder_spread,
    open_chain_levels,
    positive_log_spacings,
    shift_overlap,
    spectrum_tsv,
)
from hypchain.profiles import ChainSpec, DeformationProfile


def spectrum(half, kind="exp", lam=0.0, gap=0.0, t=1.0):
    return diagonalize(assemble(ChainSpec(half), DeformationProfile(kind, lam), FermionModel(t, gap)))


def test_two_sites():
    m = assemble(ChainSpec(0), DeformationProfile("uniform"), FermionModel())
    np.testing.assert_array_equal(m.dense(), [[0, -1], [-1, 0]])
    s = diagonalize(m)
    np.testing.assert_allclose(s.eigenvalues, [-1, 1], atol=1e-15)
    np.testing.assert_allclose(np.abs(s.eigenvectors), np.full((2, 2), 1 / math.sqrt(2)), atol=1e-15)


def test_staggered_diagonal():
    d = assemble(ChainSpec(1), DeformationProfile("uniform"), FermionModel(staggered_gap=0.5)).diagonal
    # end sites carry one bond term, interior sites two
    np.testing.assert_allclose(d, [-0.25, 0.5, -0.5, 0.25])


@pytest.mark.parametrize("n", [10, 50, 200])
def test_open_chain_dispersion(n):
    s = spectrum(n // 2 - 1, "uniform")
    np.testing.assert_allclose(s.eigenvalues, open_chain_levels(n), atol=1e-10)
    np.testing.assert_allclose(s.eigenvectors.T @ s.eigenvectors, np.eye(n), atol=1e-10)


def test_unsupported_kind():
    with pytest.raises(ValueError):
        assemble(ChainSpec(2), DeformationProfile("sinh", 0.1), FermionModel())
    with pytest.raises(ValueError):
        FermionModel(hopping=0.0)
    with pytest.raises(ValueError):
        FermionModel(staggered_gap=-1.0)


@pytest.mark.parametrize("half,lam", [(7, 0.5), (24, 0.5)])
def test_ladder_ratio_is_twice_lambda(half, lam):
    # finite chains pick one dimer covering, so consecutive positive levels
    # differ by e^{2 lambda}
    sp = positive_log_spacings(spectrum(half, "exp", lam))
    interior = sp[1:-1] if half < 10 else central_window(sp, 0.5)
    np.testing.assert_allclose(np.exp(interior), math.exp(2 * lam), rtol=0.05)


def test_ladder_spread_on_200_sites():
    for lam in (0.3, 0.5):
        w = central_window(positive_log_spacings(spectrum(99, "exp", lam)), 0.2)
        assert ladder_spread(w, 2 * lam) < 1e-9
        assert ladder_spread(w, lam) == pytest.approx(1.0, abs=1e-9)


def test_ipr_localization():
    s = spectrum(49, "exp", 0.5)
    u = spectrum(49, "uniform")
    k = 50
    assert inverse_participation_ratio(s.eigenvectors[:, k]) >= 5 * inverse_participation_ratio(u.eigenvectors[:, k])
    assert inverse_participation_ratio(np.eye(10)[3]) == 1.0
    assert inverse_participation_ratio(np.full(16, 0.25)) == pytest.approx(1 / 16)
    with pytest.raises(ValueError):
        inverse_participation_ratio(np.ones(4))


def test_shift_overlap():
    assert shift_overlap(np.eye(9)[4]) == 0.0
    assert shift_overlap(np.full(16, 0.25)) == pytest.approx(15 / 16)
    assert shift_overlap(np.full(16, 0.25), direction=-1) == pytest.approx(15 / 16)
    s = spectrum(49, "exp", 0.5)
    bulk = np.flatnonzero(s.eigenvalues > 0)[10:40]
    for i in bulk:
        v = s.eigenvectors[:, i]
        assert abs(shift_overlap(v, distance=2)) < 0.1
        assert abs(shift_overlap(v)) > 0.5
    with pytest.raises(ValueError):
        shift_overlap(np.eye(3)[0], direction=2)


def test_half_filled_gap():
    g50 = half_filled_gap(spectrum(24, "uniform"))
    g200 = half_filled_gap(spectrum(99, "uniform"))
    assert g200 < g50 and g200 * 200 == pytest.approx(g50 * 50, rel=0.05)
    assert half_filled_gap(spectrum(99, "uniform", gap=0.5)) > 0.25
    assert half_filled_gap(spectrum(49, "exp", 0.3, gap=0.5)) > 0
    with pytest.raises(ValueError):
        half_filled_gap(np.arange(5.0))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["uniform", "exp", "cosh"]), st.floats(0.0, 0.6), st.integers(1, 60))
def test_particle_hole_symmetry(kind, lam, half):
    e = spectrum(half, kind, lam).eigenvalues
    np.testing.assert_allclose(e, -e[::-1], atol=1e-10 * max(1.0, np.abs(e).max()))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["uniform", "exp", "cosh"]), st.floats(0.0, 1.0), st.floats(0.0, 2.0), st.integers(0, 40))
def test_assembly_is_symmetric_tridiagonal(kind, lam, gap, half):
    d = assemble(ChainSpec(half), DeformationProfile(kind, lam), FermionModel(1.0, gap)).dense()
    assert np.array_equal(d, d.T)
    assert np.count_nonzero(np.triu(d, 2)) == 0


def test_spectrum_tsv():
    lines = spectrum_tsv(spectrum(1, "uniform")).splitlines()
    assert lines[0] == "level_index\tenergy\tipr\tshift_overlap"
    assert len(lines) == 5
    assert all(float(x) == float(x) for x in lines[1].split("\t"))
