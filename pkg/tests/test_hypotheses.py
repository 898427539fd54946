import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexlap.conjugate import weight
from hexlap.hypotheses import (ProfileSpec, annulus_maxima, bracket, check_basic, check_derived, check_H3k,
                               derived_values, edge_average, edge_function, golden_profile, h3_consistent,
                               h3_values, J_map, site_function, telescoping_factor, trend_consistent)
from hexlap.lattice import Site, Tag
from hexlap.operators import MetricField, PotentialField


def test_J_map_examples():
    assert J_map(1, 1, 1, Site(4, 7, Tag.P1)) == (Site(5, 7, Tag.P2),)
    assert J_map(1, 2, 1, Site(4, 7, Tag.P2)) == (Site(4, 6, Tag.P1),)
    assert J_map(2, 2, 0, Site(4, 7, Tag.P1)) == (Site(4, 7, Tag.P2), Site(4, 7, Tag.P1))
    assert J_map(3, 0, 5, Site(-2, 3, Tag.P2)) == (Site(-2, 3, Tag.P1),) + (Site(-2, 3, Tag.P2),) * 2


def test_J_map_rejects_bad_indices():
    for args in ((0, 1, 0), (1, 3, 0), (1, 1, -1)):
        with pytest.raises(ValueError):
            J_map(*args, Site(0, 0, Tag.P1))


def test_bracket():
    assert np.isclose(bracket(0), np.sqrt(0.5))
    assert np.isclose(bracket(3), np.sqrt(9.5))


def test_constant_field_has_zero_H3():
    const = lambda sites: np.full(np.shape(sites[0][0]), 0.7)
    for k in (1, 2):
        reps = check_H3k(const, k, 0.5, 16)
        assert all(r.sup == 0 for r in reps.values())


def test_alternating_field_is_inconsistent():
    alt = ProfileSpec("Oscillatory", 1.0, 0.0, 0.5, frequency=(np.pi, 0.0))
    assert not h3_consistent(check_H3k(site_function(alt), 1, 0.5, 32))


def test_golden_profile_consistent():
    mf, V = golden_profile()
    assert all(r.consistent for r in check_basic(mf, V, 32).values())
    assert h3_consistent(check_H3k(site_function(mf.eta), 1, 0.5, 32))
    assert h3_consistent(check_H3k(edge_function(mf.eps), 2, 0.5, 32))


def test_metric_below_minus_one_fails_H0():
    mf = MetricField(lambda n1, n2, t: np.full(np.shape(n1), -1.5))
    assert not check_basic(mf, None, 16)["H0"].consistent


def test_decaying_negative_metric_passes_H0():
    mf = MetricField(lambda n1, n2, t: -0.5 / weight(n1, n2))
    rep = check_basic(mf, PotentialField(), 16)
    assert rep["H0"].consistent and rep["H0"].extra["inf"] > -1


def test_window_radius_minimum():
    with pytest.raises(ValueError):
        check_H3k(lambda s: 0.0, 1, 0.5, 4)


def test_annulus_maxima_and_trend():
    n = np.arange(-8, 9)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    vals = 1.0 / (1 + np.maximum(abs(n1), abs(n2)))
    tr = annulus_maxima(vals, 8)
    assert tr[0] == 1.0 and trend_consistent(tr)
    assert not trend_consistent([1, 1, 1, 1, 1, 2, 3, 4])
    assert not trend_consistent([1, 0.5, 20, 0.1])


def test_zero_field_derived_hypotheses():
    zero = lambda sites: np.zeros(np.shape(sites[0][0]))
    vals = derived_values(zero, 1, 0.5, 16)
    assert all(np.all(v == 0) for v in vals.values())
    assert all(r.consistent for r in check_derived(zero, 1, 0.5, 16).values())


def test_telescoping_factor():
    assert np.isclose(telescoping_factor(1.0), 3 + 2 * np.sqrt(2))


@given(st.floats(0.05, 0.8), st.floats(1.6, 3.0), st.sampled_from(["PowerLaw", "Oscillatory"]))
def test_telescoping_bound_holds(a, delta, kind):
    G = site_function(ProfileSpec(kind, a, delta, 0.5, seed=3))
    rep = check_derived(G, 1, 0.5, 16)["bound"]
    assert rep.sup <= rep.extra["bound"] + 1e-15


def test_h3_monotone_in_window():
    G = site_function(golden_profile()[0].eta)
    sups = [h3_values(G, 1, 0.5, R).max() for R in (8, 16, 32)]
    assert sups[0] <= sups[1] <= sups[2]


def test_edge_average_symmetric():
    eps = edge_average(lambda n1, n2, t: n1 + 2.0 * n2)
    assert eps(1, 2, Tag.P1, 3, 0, Tag.P2) == eps(3, 0, Tag.P2, 1, 2, Tag.P1) == 0.5 * 4.0


def test_profile_spec_roundtrip_and_validation():
    p = ProfileSpec("Oscillatory", 0.2, 2.0, frequency=(1.0, 0.5))
    assert ProfileSpec.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        ProfileSpec("Gaussian", 1, 1)
    with pytest.raises(ValueError):
        ProfileSpec.from_dict({"kind": "PowerLaw", "a": 1, "delta": 1, "colour": 2})
    bump = ProfileSpec("CompactBump", 1.0, 3.0)
    assert bump(0, 0) == 1.0 and bump(3, 0) == 0.0
