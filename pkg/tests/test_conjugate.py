import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexlap.conjugate import (TABLE_KEYS, A_F_apply, CoeffTable, MismatchError, SupportError, a1_matrix,
                              a2_matrix, adjointness_defect, alpha_mismatches, alpha_tables,
                              conjugate_matrix, conjugate_position_apply, div_V, field_V, hat_A_apply,
                              hat_A_display, interior_mask, intertwining_defect, long_form, operator_polys,
                              padd, pmul, poly, spectral_grad, verify_alpha, weight, weight_apply,
                              weight_field)
from hexlap.lattice import Box, Site, Tag
from hexlap.symbol import momentum_grid

K = 2 * np.pi / 3


def test_listed_coefficients():
    a = alpha_tables()
    assert a.value((0, 0), (0, 0)) == 2
    assert a.value((1, 1), (-1, 0)) == 4
    assert a.value((0, 0), (-2, 0)) == a.value((0, 0), (0, -2)) == 19
    assert a.value((0, 0), (1, -1)) == a.value((0, 0), (-1, 1)) == 24


def test_table_support_and_prefactors():
    a = alpha_tables()
    for key in TABLE_KEYS:
        assert all(max(abs(i), abs(j)) <= 3 for i, j in a.support(key))
    assert a.prefactor[(0, 0)] == -5j / 8
    assert all(a.prefactor[k] == 5j / 2 for k in TABLE_KEYS[1:])


def test_csv_roundtrip(tmp_path):
    a = alpha_tables()
    a.to_csv(tmp_path / "a.csv")
    assert CoeffTable.from_csv(tmp_path / "a.csv").alpha == a.alpha


def test_position_tables_match_long_form():
    bad = alpha_mismatches(alpha_tables())
    assert not [b for b in bad if b.key != (0, 0)]


@pytest.mark.xfail(strict=True, raises=MismatchError,
                   reason="printed Q-free list sums to 324; the long-form bracket sums to 432")
def test_q_free_table_matches_long_form():
    verify_alpha()


def test_q_free_mismatch_is_reported_at_first_cell():
    with pytest.raises(MismatchError) as e:
        verify_alpha()
    assert (e.value.key, e.value.ij) == ((0, 0), (-3, 1))
    assert sum(1 for b in alpha_mismatches(alpha_tables()) if b.key == (0, 0)) == 20


def test_long_form_bracket_sum():
    assert sum(long_form()["R"].values()) == 432
    assert sum(alpha_tables()[(0, 0)].values()) == 324


@given(st.integers(-3, 3), st.integers(-3, 3), st.sampled_from([1, -1]))
def test_single_mutation_is_reported(i, j, d):
    t = alpha_tables().mutated((1, 0), (i, j), d)
    assert any(b.key == (1, 0) and b.ij == (i, j) for b in alpha_mismatches(t))


def test_polynomial_product_by_hand():
    p = pmul(poly((1, 1, 0)), poly((2, 0, 1)), poly((1, 0, 0), (-1, -1, 0)))
    assert p == {(1, 1): 2, (0, 1): -2}
    assert padd(poly((1, 0, 0)), poly((-1, 0, 0))) == {}


def test_conjugate_matrix_hermitian():
    A = conjugate_matrix(Box(12, "dirichlet"))
    assert abs(A - A.conj().T).max() == 0


def test_adjointness_on_interior_data():
    assert adjointness_defect(Box(20, "dirichlet"), trials=10) < 1e-10


def test_symmetry_of_position_action(rng):
    box = Box(20, "dirichlet")
    mask = interior_mask(box)
    f = np.where(mask, rng.normal(size=box.shape) + 1j * rng.normal(size=box.shape), 0)
    g = np.where(mask, rng.normal(size=box.shape) + 1j * rng.normal(size=box.shape), 0)
    lhs = np.vdot(g, conjugate_position_apply(f, box))
    rhs = np.vdot(conjugate_position_apply(g, box), f)
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)


def test_delta_column_by_hand():
    box = Box(16, "dirichlet")
    c = box.N // 2
    q1, q2 = 2, -1
    f = box.delta(Site(c + q1, c + q2, Tag.P1))
    out = conjugate_position_apply(f, box)[1]
    P = operator_polys()
    for (a, b) in set(P["R"]) | set(P["Q1"]) | set(P["Q2"]):
        want = P["R"].get((a, b), 0) + q1 * P["Q1"].get((a, b), 0) + q2 * P["Q2"].get((a, b), 0)
        assert np.isclose(out[c + q1 + a, c + q2 + b], want)


def test_support_error_near_boundary():
    box = Box(12, "dirichlet")
    with pytest.raises(SupportError):
        conjugate_position_apply(box.delta(Site(1, 5, Tag.P1)), box)


def test_weight_domination(rng):
    ratios = []
    for N in (24, 48):
        box = Box(N, "dirichlet")
        A = conjugate_matrix(box)
        mask = interior_mask(box)
        w = weight_field(box)
        best = 0.0
        for _ in range(100):
            f = np.where(mask, rng.normal(size=box.shape), 0).ravel()
            best = max(best, np.linalg.norm(A @ f) / np.linalg.norm(w.ravel() * f))
        ratios.append(best)
    assert np.isfinite(ratios).all()
    assert ratios[1] < 2 * ratios[0]


def test_a2_is_adjoint_of_a1_away_from_edges():
    box = Box(14, "dirichlet")
    idx = np.flatnonzero(interior_mask(box, 3)[0].ravel())
    gap = (a2_matrix(box) - a1_matrix(box).conj().T)[idx][:, idx]
    assert abs(gap).max() < 1e-12


def test_fourier_intertwining():
    assert intertwining_defect(Box(24, "dirichlet")) < 1e-8


def test_fourier_intertwining_with_printed_q_free_table_fails():
    assert intertwining_defect(Box(24, "dirichlet"), source="table") > 1e-2


def test_hat_A_on_constant_and_both_branches():
    M = 256
    X1, X2 = momentum_grid(M)
    one = np.ones_like(X1, dtype=complex)
    assert np.allclose(hat_A_apply(one, X1, X2), 0.5j * div_V(X1, X2))
    assert np.allclose(hat_A_display(one, X1, X2) - hat_A_apply(one, X1, X2), 0.5j * div_V(X1, X2))
    g = np.exp(1j * (X1 - X2))
    V = field_V(X1, X2)
    div_Vg = spectral_grad(V[0] * g)[0] + spectral_grad(V[1] * g)[1]
    symmetric = 0.5j * ((V * spectral_grad(g)).sum(0) + div_Vg)
    assert np.abs(symmetric - hat_A_apply(g, X1, X2)).max() < 1e-3 * np.abs(symmetric).max()


def test_A_F_vanishes_at_dirac_points():
    x1, x2 = np.array([[K, -K]]), np.array([[-K, K]])
    g = np.ones_like(x1, dtype=complex)
    o1, o2 = A_F_apply(g, g, x1, x2)
    assert np.all(o1 == 0) and np.all(o2 == 0)


def test_weight_examples(rng):
    assert np.isclose(weight(0, 0), np.sqrt(2))
    box = Box(9, "dirichlet")
    f = rng.normal(size=box.shape)
    assert np.array_equal(weight_apply(0, f, box), f)
    assert np.allclose(weight_apply(-0.7, weight_apply(0.7, f, box), box), f, atol=1e-12)
    assert weight_field(box).min() >= np.sqrt(2) - 1e-15
