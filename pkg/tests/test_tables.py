import pytest
from hypothesis import given, settings, strategies as st

from hexlap import tables
from hexlap.conjugate import TABLE_KEYS, alpha_tables
from hexlap.tables import (ErrataError, GoldenMismatch, IdentityViolation, build_index_sets, definition_chain_ok,
                           detection_rate, detects, diff_tables, emit_tables, golden_rows, load_errata,
                           load_transcription, records_to_csv, regenerate, resolve, s_values, sum_rows,
                           verify_structure, verify_sum_identities)


@pytest.fixture(scope="module")
def fam():
    return build_index_sets(alpha_tables())


def _check(fam, name, key):
    return next(c for c in verify_structure(fam) if c.name == name and c.key == key)


def test_listed_index_sets(fam):
    assert fam[(0, 1)][7] == {(-2, 1)}
    assert fam[(1, 0)][8] == {(0, -2)}
    assert fam[(0, 1)][5] == {(-2, 0), (-2, -1), (-2, 1), (-2, 2)}


def test_definition_chains(fam):
    assert definition_chain_ok(fam)


def test_I9_empty_except_q_free_cross_term(fam):
    for key in ((0, 0), (1, 0), (0, 1)):
        assert not fam[key][9]
    assert fam[(1, 1)][9] == {(1, 0)}


@pytest.mark.xfail(strict=True, reason="(1,1) has (1,0) in I9")
def test_I9_empty_for_all_tables(fam):
    assert all(not fam[k][9] for k in TABLE_KEYS)


@pytest.mark.xfail(strict=True, reason="(-2,0) in I5 of (0,1) meets none of the three alternatives")
def test_point2_for_listed_set(fam):
    assert _check(fam, "point2", (0, 1)).passed


def test_point2_witness(fam):
    assert _check(fam, "point2", (0, 1)).witness == (-2, 0)


def test_unknown_selector():
    with pytest.raises(ValueError):
        build_index_sets(alpha_tables(), selector="other")


@pytest.mark.parametrize("key,kind,ij,expected", [
    ((0, 0), "Q1", (0, 0), (12, 12)),
    ((0, 1), "Q1", (0, 1), (-14, 14)),
    ((1, 1), "Q1", (-1, 1), (14, -14)),
    ((1, 0), "Q1", (2, 0), (-8, 8)),
    ((0, 0), "Q2", (2, 0), (5, 5)),
    ((0, 0), "Q3", (0, -2), (42, 42)),
])
def test_listed_sum_values(key, kind, ij, expected):
    assert s_values(alpha_tables(), key, kind, *ij) == expected


def test_all_identities_hold_exactly():
    rows = verify_sum_identities(alpha_tables())
    assert rows and all(isinstance(r.S1, int) for r in rows)
    assert all(r.S1 == (-1) ** max(r.l1, r.l2) * r.S2 for r in rows)


def test_identity_violation_names_row():
    bad = alpha_tables().mutated((0, 0), (0, 0), 1)
    with pytest.raises(IdentityViolation) as e:
        verify_sum_identities(bad)
    assert e.value.row.key == (0, 0)


def test_rows_follow_caption_sets(fam):
    levels = {"Q1": 0, "Q2": 1, "Q3": 2, "Q9": 4}
    for r in sum_rows(alpha_tables(), fam):
        assert (r.i, r.j) in fam[r.key][levels[r.kind]]


def test_golden_zero_diff():
    assert diff_tables(regenerate(), golden_rows()) == []
    records = emit_tables()
    assert all(r["match"] == 1 for r in records)
    text = records_to_csv(records)
    assert text.splitlines()[0] == "l1,l2,i,j,kind,S1,S2,match"
    assert len(text.splitlines()) == len(records) + 1


def test_every_erratum_is_needed():
    rows, errata = load_transcription(), load_errata()
    regen = regenerate()
    assert errata
    for k in range(len(errata)):
        try:
            assert diff_tables(regen, resolve(rows, errata[:k] + errata[k + 1:]))
        except ErrataError:
            pass


def test_emit_raises_on_mismatch():
    with pytest.raises(GoldenMismatch):
        emit_tables(alpha_tables().mutated((1, 0), (2, 0), 1))


def test_q_free_corruption_detected():
    base = set(detects(alpha_tables()))
    assert set(detects(alpha_tables().mutated((0, 0), (0, 0), 1))) - base


def test_mutation_sweep_detects_everything():
    sweep = tables.mutation_sweep()
    assert len(sweep) == 4 * 49 * 2
    assert detection_rate(sweep) == 1.0


@settings(max_examples=25)
@given(st.sampled_from(TABLE_KEYS), st.integers(-3, 3), st.integers(-3, 3), st.sampled_from([1, -1, 7]))
def test_single_mutation_flagged(key, i, j, d):
    base = set(detects(alpha_tables()))
    assert set(detects(alpha_tables().mutated(key, (i, j), d))) - base
