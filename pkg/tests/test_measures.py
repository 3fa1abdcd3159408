import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatnorm.lipschitz import (LipschitzError, affine_map, constant, constant_map, hat_function,
                                piecewise_linear_1d, tent_family_function)
from flatnorm.measures import (DensityMeasure1D, MeasureError, add, consolidate, dirac, is_canonical,
                               jordan, mass_outside_neighborhood, measure, measure_from_json,
                               measure_to_json, pair, pair_density, pushforward, sawtooth_g, scale,
                               sinusoid_density, subtract, total_mass, tv_norm, zero_measure)
from flatnorm.metric_space import SpaceError, euclidean, matrix_space, naturals, unit_interval

R = euclidean(1)
I = unit_interval()
PI2 = 1 / math.pi ** 2


def atoms_of(mu):
    return [(p, w) for p, w in consolidate(mu).atoms]


def test_consolidate_examples():
    assert atoms_of(measure(R, [(0, 2.0), (0, -0.5)])) == [(0.0, 1.5)]
    assert len(consolidate(measure(R, [(0, 1.0), (0, -1.0)]))) == 0
    mu = consolidate(measure(R, [(1, 1.0), (0, 2.0)]))
    assert consolidate(mu).atoms == mu.atoms
    assert is_canonical(mu)
    assert not is_canonical(measure(R, [(0, 1.0), (0, 1.0)]))


def test_consolidate_tolerance_and_kinds():
    mu = measure(R, [(0.0, 1.0), (1e-13, 1.0), (1.0, 1.0)])
    assert atoms_of(mu) == [(0.0, 2.0), (1.0, 1.0)]
    R2 = euclidean(2)
    assert len(consolidate(measure(R2, [((0, 0), 1), ((0, 1e-13), 1), ((0, 1), 1)]))) == 2
    N = naturals()
    assert atoms_of(measure(N, [(3, 1.0), (3, 2.0), (1, 1.0)])) == [(1, 1.0), (3, 3.0)]


def test_jordan_examples():
    plus, minus = jordan(measure(R, [(0, 2.0), (1, -1.0)]))
    assert plus.atoms == [(0.0, 2.0)] and minus.atoms == [(1.0, 1.0)]
    plus, minus = jordan(dirac(R, 3.0))
    assert plus.atoms == [(3.0, 1.0)] and len(minus) == 0
    n = 4
    plus, minus = jordan(measure(R, [(n, 1.0), (n + 1 / n, -1.0)]))
    assert plus.atoms == [(4.0, 1.0)] and minus.atoms == [(4.25, 1.0)]


def test_tv_examples():
    assert tv_norm(measure(R, [(0, 2.0), (1, -1.0)])) == 3.0
    assert tv_norm(zero_measure(R)) == 0.0
    assert tv_norm(measure(R, [(0, 0.25), (1, 0.75)])) == 1.0


def test_pair_examples():
    f = hat_function(R, 1.0, [0.0])
    assert pair(dirac(R, 0.5), f) == f(0.5)
    assert pair(measure(R, [(0, 2.0), (1, -1.0)]), f) == 2.0
    mu = measure(R, [(0, 2.0), (1, -0.5), (4, 0.25)])
    assert pair(mu, constant(R, 1.0)) == total_mass(mu) == 1.75
    with pytest.raises(SpaceError):
        pair(mu, constant(naturals(), 1.0))


def test_linear_examples():
    mu = measure(R, [(0, 1.0), (2, -3.0)])
    assert len(add(mu, scale(mu, -1))) == 0
    assert scale(dirac(R, 0), 3).atoms == [(0.0, 3.0)]
    assert len(subtract(dirac(R, 0), dirac(R, 0))) == 0
    assert (mu - mu).atoms == [] and (2 * mu).atoms == [(0.0, 2.0), (2.0, -6.0)]
    with pytest.raises(SpaceError):
        add(mu, dirac(naturals(), 1))


def test_pushforward_examples():
    assert pushforward(dirac(R, 1.0), affine_map(R, 0.5)).atoms == [(0.5, 1.0)]
    mu = measure(R, [(0, 1.0), (2, -3.0), (5, 0.5)])
    assert pushforward(mu, constant_map(R, 7.0)).atoms == [(7.0, -1.5)]
    assert len(pushforward(measure(R, [(-1, 1.0), (1, -1.0)]), abs)) == 0
    with pytest.raises(SpaceError):
        pushforward(dirac(I, 0.8), affine_map(I, 2.0))


def test_mass_outside_examples():
    assert mass_outside_neighborhood(measure(R, [(0, 1), (0.5, -2)]), [0.0, 0.5], 0.0) == 0.0
    assert mass_outside_neighborhood(dirac(R, 5), [0], 1) == 1.0
    assert mass_outside_neighborhood(measure(R, [(0, 1), (3, 1), (10, -1)]), [0], 4) == 1.0
    with pytest.raises(SpaceError):
        mass_outside_neighborhood(dirac(R, 0), [], 1)


signed_atoms = st.lists(st.tuples(st.integers(-20, 20), st.floats(-5, 5, allow_nan=False)), max_size=12)


@settings(max_examples=100, deadline=None)
@given(signed_atoms, signed_atoms)
def test_measure_invariants(a, b):
    mu = measure(R, [(x / 4, w) for x, w in a])
    nu = measure(R, [(x / 4, w) for x, w in b])
    plus, minus = jordan(mu)
    assert tv_norm(mu) == pytest.approx(tv_norm(plus) + tv_norm(minus), abs=1e-12)
    assert not set(p for p, _ in plus.atoms) & set(p for p, _ in minus.atoms)
    back = subtract(add(mu, nu), nu)
    np.testing.assert_allclose(pair(back, hat_function(R, 1.0, [0.0])),
                               pair(mu, hat_function(R, 1.0, [0.0])), atol=1e-9)
    assert tv_norm(back) == pytest.approx(tv_norm(mu), abs=1e-9)
    phi = affine_map(R, 0.5, 1.0)
    image = pushforward(mu, phi)
    assert total_mass(image) == pytest.approx(total_mass(mu), abs=1e-12)
    assert tv_norm(image) == pytest.approx(tv_norm(mu), abs=1e-12)
    assert tv_norm(pushforward(mu, lambda x: abs(x))) <= tv_norm(mu) + 1e-12
    f = tent_family_function(R, [0.0, 1.0], [0.5, 1.0], 0.7)
    assert abs(pair(mu, f)) <= f.declared_sup * tv_norm(mu) + 1e-12


def test_json_round_trip():
    spaces = [(R, [(0.25, 1.5), (-3.0, -0.1)]),
              (euclidean(2), [((0.0, 1.0), 2.0), ((3.0, -1.0), -1.0)]),
              (I, [(0.5, 0.3)]),
              (naturals(), [(0, 1.0), (7, -2.5)]),
              (matrix_space([[0, 2], [2, 0]], ["a", "b"]), [("a", 1.0), ("b", -1.0)])]
    for sp, atoms in spaces:
        mu = consolidate(measure(sp, atoms))
        obj = measure_to_json(mu)
        assert all(isinstance(a["weight"], str) for a in obj["atoms"])
        back = measure_from_json(obj)
        assert back.atoms == mu.atoms


def test_json_errors():
    with pytest.raises(MeasureError, match="space"):
        measure_from_json({"atoms": []})
    with pytest.raises(MeasureError, match=r"atoms\[0\]"):
        measure_from_json({"space": {"kind": "euclidean", "dim": 1}, "atoms": [{"point": [0]}]})
    with pytest.raises(MeasureError, match=r"atoms\[0\].weight"):
        measure_from_json({"space": {"kind": "euclidean", "dim": 1}, "atoms": [{"point": [0], "weight": "x"}]})
    with pytest.raises(MeasureError, match=r"atoms\[0\].point"):
        measure_from_json({"space": {"kind": "euclidean", "dim": 2}, "atoms": [{"point": [0], "weight": "1"}]})


# -- densities -------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 8, 64])
def test_sawtooth_pairing_is_inverse_pi_squared(n):
    assert abs(pair_density(sinusoid_density(n), sawtooth_g(n)) - PI2) <= 1e-12


def test_sawtooth_examples():
    g = sawtooth_g(1)
    assert g(0.25) == 0.25 and g(0.5) == 0.0 and g(0.75) == -0.25
    for n in (1, 5):
        assert sawtooth_g(n).bl_bound == 1 + 1 / (4 * n)
    with pytest.raises(LipschitzError):
        sawtooth_g(0)


def test_density_constant_and_tv():
    for n in (1, 3, 10):
        assert abs(pair_density(sinusoid_density(n), constant(I, 1.0))) <= 1e-12
        assert abs(tv_norm(sinusoid_density(n)) - 2 * n / math.pi) <= 1e-9


def test_symmetric_hat_pairs_to_zero():
    f = hat_function(I, 1.0, [0.5])
    vals = [pair_density(sinusoid_density(n), f) for n in range(1, 65)]
    assert max(abs(v) for v in vals) <= 1e-12


@pytest.mark.parametrize("f", [
    sawtooth_g(3),
    hat_function(I, 0.3, [0.37]),
    tent_family_function(I, [0.21, 0.66], [1.0, 0.5], 0.17),
    piecewise_linear_1d(I, [[0, 0.2], [0.4, -0.3], [1, 0.9]]),
])
@pytest.mark.parametrize("n", [1, 4, 16])
def test_exact_matches_quadrature(f, n):
    mu = sinusoid_density(n)
    exact = pair_density(mu, f, method="exact")
    quad = pair_density(mu, f, tol=1e-10, method="quadrature")
    assert abs(exact - quad) <= 1e-7


def test_generic_density():
    mu = DensityMeasure1D(lambda x: 3 * x ** 2)
    with pytest.raises(MeasureError, match="frequency"):
        pair_density(mu, constant(I, 1.0))
    mu = DensityMeasure1D(lambda x: 3 * x ** 2, frequency_hint=1.0)
    assert pair_density(mu, constant(I, 1.0)) == pytest.approx(1.0, abs=1e-10)
    assert tv_norm(mu) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(MeasureError):
        pair_density(mu, constant(I, 1.0), tol=0)
    with pytest.raises(MeasureError):
        pair_density(mu, constant(I, 1.0), method="exact")
