import numpy as np
import pytest

from hypchain.dmrg import (
    DmrgParams,
    UnconvergedError,
    center_entropy,
    measure_bond_correlations,
    measure_center_correlations,
    run_dmrg,
    sweep_once,
    sweep_to_convergence,
    warmup,
)
from hypchain.profiles import BondModel, ChainSpec, DeformationProfile

J1 = BondModel()


def run(half, lam, **kw):
    kw.setdefault("m_max", 64)
    return run_dmrg(ChainSpec(half), DeformationProfile("cosh", lam), J1, DmrgParams(**kw))


@pytest.fixture(scope="module")
def twelve_uniform():
    return run(5, 0.0, energy_tol=1e-10)


def test_two_site_chain():
    st = run(0, 0.0)
    assert st.energy == pytest.approx(-0.75, abs=1e-14)
    np.testing.assert_allclose(measure_bond_correlations(st).y, [-0.25], atol=1e-14)


def test_four_site_warmup_is_exact(oracle):
    st = warmup(ChainSpec(1), DeformationProfile("uniform"), J1, DmrgParams(m_max=16))
    assert st.energy == pytest.approx(oracle["four_site_uniform_sector"][0], abs=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.1])
def test_warmup_plus_one_sweep(oracle, lam):
    p = DmrgParams(m_max=64, m_start=64)
    st = warmup(ChainSpec(5), DeformationProfile("cosh", lam), J1, p)
    e = sweep_once(st, 64)
    ref = oracle["chains"][f"12_{lam:g}"]["energies"][0]
    assert abs(e - ref) <= 1e-8 * abs(ref)


def test_twelve_site_uniform(oracle, twelve_uniform):
    rec = oracle["chains"]["12_0"]
    st = twelve_uniform
    assert st.converged
    assert abs(st.energy - rec["energies"][0]) <= 1e-8 * abs(rec["energies"][0])
    np.testing.assert_allclose(measure_bond_correlations(st).y, rec["bond_zz"], atol=1e-6)
    cc = measure_center_correlations(st)
    np.testing.assert_allclose(cc.x, 2 * np.arange(6) + 1)
    np.testing.assert_allclose(cc.y, -np.array(rec["center_zz"]), atol=1e-6)


def test_sixteen_site_cosh(oracle):
    rec = oracle["chains"]["16_0.2"]
    st = run(7, 0.2)
    assert abs(st.energy - rec["energies"][0]) <= 1e-7 * abs(rec["energies"][0])
    spec = st.dm_spectrum_per_cut[st.center]
    np.testing.assert_allclose(spec[:8], rec["center_spectrum"], atol=1e-8)
    assert center_entropy(st) == pytest.approx(rec["center_entropy"], abs=1e-6)


def test_variational_in_m(oracle):
    ref = oracle["chains"]["16_0"]["energies"][0]
    gaps = []
    for m in (4, 8, 16):
        st = run(7, 0.0, m_max=m, m_start=m)
        assert st.energy >= ref - 1e-10
        gaps.append(st.energy - ref)
    assert gaps[0] > gaps[1] > gaps[2] >= 0


def test_center_term_matches_bond_series(twelve_uniform):
    st = twelve_uniform
    bonds = measure_bond_correlations(st)
    cc = measure_center_correlations(st, j_max=2)
    assert -cc.y[0] == pytest.approx(bonds.y[st.center], abs=1e-14)
    assert len(cc) == 3
    with pytest.raises(ValueError):
        measure_center_correlations(st, j_max=6)


def test_reflection_symmetry():
    st = run(7, 0.3)
    y = measure_bond_correlations(st).y
    np.testing.assert_allclose(y, y[::-1], atol=1e-5)


def test_spectra_and_truncation_bookkeeping():
    st = run(9, 0.1, m_max=16, m_start=16)
    for cut, spec in st.dm_spectrum_per_cut.items():
        assert abs(spec.sum() - 1) < 1e-10
        assert np.all(np.diff(spec) <= 1e-15)
    for err in st.truncation_error_per_cut.values():
        assert 0 <= err <= 1


def test_deformation_lowers_center_truncation():
    c = 9
    t0 = run(c, 0.0, m_max=8, m_start=8).truncation_error_per_cut[c]
    t1 = run(c, 0.1, m_max=8, m_start=8).truncation_error_per_cut[c]
    assert t1 < t0


def test_unconverged_refusal():
    st = run(5, 0.1, m_max=16, n_sweeps=1)
    assert not st.converged
    with pytest.raises(UnconvergedError):
        measure_bond_correlations(st)
    assert measure_bond_correlations(st, force=True).y.size == 11


def test_strong_deformation_dimerizes():
    st = run(9, 2.0, m_max=32)
    y = measure_bond_correlations(st).y
    interior = y[5:-5]
    assert np.min(interior) < -0.24
    assert np.max(interior) > -0.05


def test_convergence_is_relative(oracle):
    st = run(7, 1.0, energy_tol=1e-12)
    ref = oracle["chains"]["16_1"]["energies"][0]
    assert st.converged
    assert abs(st.energy - ref) <= 1e-10 * abs(ref)


def test_deterministic_rerun():
    a, b = run(6, 0.2, m_max=24), run(6, 0.2, m_max=24)
    assert a.energy_history == b.energy_history
    assert np.array_equal(a.psi, b.psi)


def test_params_validation():
    for bad in ({"m_max": 1}, {"n_sweeps": 0}, {"energy_tol": 0.0}, {"m_start": 1}):
        with pytest.raises(ValueError):
            DmrgParams(**bad)
    p = DmrgParams(m_max=100, m_start=16)
    assert [p.m_for_sweep(i) for i in range(5)] == [16, 32, 64, 100, 100]


def test_sweep_to_convergence_continues():
    st = warmup(ChainSpec(5), DeformationProfile("cosh", 0.5), J1, DmrgParams(m_max=32, n_sweeps=2))
    st = sweep_to_convergence(st)
    assert st.sweeps_done == 2
    st = sweep_to_convergence(st, DmrgParams(m_max=32, n_sweeps=6))
    assert st.converged and st.sweeps_done <= 6


def test_center_survives_extreme_grading():
    # bonds reach ~1e52 at the ends; the center must not notice how far out
    # the chain continues once the outer dimers have decoupled
    near = measure_bond_correlations(run(45, 2.0, m_max=16)).y
    far = measure_bond_correlations(run(61, 2.0, m_max=16)).y
    np.testing.assert_allclose(far[61 - 5 : 61 + 6], near[45 - 5 : 45 + 6], atol=1e-6)
    assert abs(near[45]) < 0.05 and near[44] < -0.24
