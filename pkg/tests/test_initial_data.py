import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from fraccl.initial_data import (FluxModel, SignedBVInitial, cdf_v0, gamma_at, initial_profile,
                                 normalize, riemann_datum, sample_positions, two_bump_scale,
                                 unit_riemann_datum)

SEC42 = SignedBVInitial(atoms=((-3, 1), (-2, -1), (2, 1), (3, -1)))


def test_normalize_section_datum():
    init, flux = normalize(SEC42, FluxModel.burgers())
    assert SEC42.tv_raw == 4
    assert [m for _, m in init.atoms] == [0.25, -0.25, 0.25, -0.25]
    u = np.linspace(-1, 1, 11)
    assert np.allclose(flux.A(u), (4 * u) ** 2 / 2 / 4)
    assert flux.sup_abs_Aprime == pytest.approx(4.0)


def test_normalize_already_normalized():
    raw = SignedBVInitial(atoms=((0.0, 1.0),))
    init, flux = normalize(raw, FluxModel.burgers())
    assert init == raw and flux == FluxModel.burgers()


def test_normalize_with_offset():
    raw = SignedBVInitial(atoms=((0.0, 2.0),), offset_a=1.0)
    init, flux = normalize(raw, FluxModel.burgers())
    assert init.atoms == ((0.0, 1.0),) and init.offset_a == 0.0
    x = np.linspace(-1, 1, 7)
    assert np.allclose(flux.A(x), (1 + 2 * x) ** 2 / 2 / 2)
    assert np.allclose(flux.dA(x), 1 + 2 * x)


def test_normalize_rejects_constant():
    with pytest.raises(ValueError):
        SignedBVInitial()


def test_invalid_data_rejected():
    with pytest.raises(ValueError):
        SignedBVInitial(atoms=((0.0, 0.0),))
    with pytest.raises(ValueError):
        SignedBVInitial(pieces=((0, 1, 1), (0.5, 2, 1)))
    with pytest.raises(ValueError):
        SignedBVInitial(atoms=((0.5, 1),), pieces=((0, 1, 1),))
    with pytest.raises(ValueError):
        SignedBVInitial(pieces=((1, 0, 1),))


def test_sample_point_mass():
    x = sample_positions(SignedBVInitial(atoms=((0.0, 1.0),)), 5, np.random.default_rng(0))
    assert list(x) == [0, 0, 0, 0, 0]
    assert sample_positions(unit_riemann_datum(), 0, np.random.default_rng(0)).size == 0


def test_sample_atom_fractions():
    init = SignedBVInitial(atoms=((-3, .25), (-2, .25), (2, .25), (3, .25)))
    x = sample_positions(init, 100_000, np.random.default_rng(1))
    for loc in (-3, -2, 2, 3):
        assert abs(np.mean(x == loc) - 0.25) <= 0.01


def test_sample_uniform_piece_ks():
    init = SignedBVInitial(pieces=((0.0, 1.0, 1.0),))
    x = sample_positions(init, 100_000, np.random.default_rng(2))
    assert stats.kstest(x, "uniform").statistic <= 0.01


def test_stratified_sampling_balances_signs():
    init = unit_riemann_datum()
    x = sample_positions(init, 1000, np.random.default_rng(3), stratified=True)
    assert int(np.sum(gamma_at(init, x))) == 0


def test_gamma_examples():
    init, _ = normalize(SEC42, FluxModel.burgers())
    assert gamma_at(init, -3) == 1 and gamma_at(init, -2) == -1
    assert gamma_at(SignedBVInitial(pieces=((0, 1, 1),)), 0.5) == 1
    with pytest.raises(ValueError):
        gamma_at(init, 0.0)


def test_cdf_examples():
    init, _ = normalize(SEC42, FluxModel.burgers())
    assert cdf_v0(init, -2.5) == pytest.approx(0.25)
    assert cdf_v0(SEC42, -2.5) == pytest.approx(1.0)
    assert cdf_v0(init, 0.0) == 0.0
    assert cdf_v0(init, -1e9) == 0.0
    assert cdf_v0(init, -3.0) == 0.25   # right-continuous, inclusive


def test_riemann_datum_profile():
    p = initial_profile(riemann_datum(1.0))
    assert p(-2.5) == 1 and p(2.5) == -1 and p(0) == 0 and p(-2) == 0
    assert two_bump_scale(riemann_datum(0.25)) == 0.25
    assert two_bump_scale(SEC42) is None


def test_flux_derivative_and_sup():
    f = FluxModel.polynomial([0.3, -1.0, 0.0, 2.0, 0.5])
    u = np.linspace(-1, 1, 10_000)
    assert f.sup_abs_Aprime >= np.max(np.abs(f.dA(u))) - 1e-12
    x = u[np.abs(u) > 0.05]
    d = 1e-5
    fd = (f.A(x + d) - f.A(x - d)) / (2 * d)
    assert np.max(np.abs(fd - f.dA(x)) / np.maximum(np.abs(f.dA(x)), 1e-3)) <= 1e-6


atoms_st = st.lists(st.tuples(st.integers(-20, 20), st.sampled_from([-2.0, -0.5, 0.5, 1.0, 3.0])),
                    min_size=1, max_size=6, unique_by=lambda a: a[0])


@settings(max_examples=50, deadline=None)
@given(atoms=atoms_st, a=st.floats(-3, 3))
def test_normalized_tv_is_one_and_profile_matches(atoms, a):
    raw = SignedBVInitial(atoms=tuple((float(x), m) for x, m in atoms),
                          pieces=((30.0, 31.5, -0.7),), offset_a=a)
    init, _ = normalize(raw, FluxModel.burgers())
    assert abs(init.tv_raw - 1) <= 1e-12 and init.is_normalized
    xs = np.linspace(-25, 35, 301)
    assert np.allclose(initial_profile(raw)(xs), cdf_v0(raw, xs))
    x = sample_positions(init, 200, np.random.default_rng(0))
    gamma_at(init, x)   # defined at every sample
