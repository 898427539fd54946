"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import pytest

from hexlap import acceptance, lap
from hexlap.lattice import Box


@pytest.fixture
def report(capsys):
    def emit(outcome, failing):
        tail = f" failing: {', '.join(failing)}" if failing else ""
        with capsys.disabled():
            print(f"\n{'FAIL' if failing else 'PASS'} criterion {outcome.number} ({outcome.title})"
                  f" [{outcome.seconds:.1f}s]{tail}")
    return emit


def _gate(report, outcome, checks):
    failing = [k for k, v in checks.items() if not v]
    report(outcome, failing)
    assert not failing, f"failing clauses: {failing}; metrics: " + \
        str({k: v for k, v in outcome.metrics.items() if k not in ("curves", "record", "trace")})


def test_criterion_1_symbol_oracle_spectrum(report):
    o = acceptance.criterion_1()
    checks = {f"N={N}": o.metrics[f"mismatch_N{N}"] < 1e-10 for N in (8, 16, 32)}
    checks["runtime"] = o.seconds < 30
    _gate(report, o, checks)


def test_criterion_2_thresholds(report):
    o = acceptance.criterion_2()
    checks = {"thresholds": sorted(o.metrics["thresholds"]) == [-1.0, -1 / 3, 0.0, 1 / 3, 1.0],
              "nine_points": o.clauses["nine_points"],
              "gradient": o.metrics["gradient_max"] < 1e-10,
              "values": set(o.metrics["values"]) == {1.0, 3.0}}
    _gate(report, o, checks)


def test_criterion_3_alpha_table_integrity(report):
    o = acceptance.criterion_3()
    checks = {"expansion": all(v == 0 for v in o.metrics["expansion_mismatches"].values()),
              "I9_empty": o.clauses["I9_empty"],
              "point3_inclusion": o.clauses["point3_inclusion"],
              "identities": o.clauses["identities"],
              "golden": o.metrics["golden_diffs"] == 0,
              "mutations": o.metrics["detection_rate"] == 1.0,
              "runtime": o.seconds < 5}
    _gate(report, o, checks)


def test_criterion_4_commutator_identity(report):
    o = acceptance.criterion_4()
    checks = {"commutator": o.metrics["commutator_M128"] < 1e-8,
              "intertwining": o.metrics["intertwining"] < 1e-8,
              "adjointness": o.metrics["adjointness"] < 1e-10}
    _gate(report, o, checks)


def test_criterion_5_mourre_positivity(report):
    o = acceptance.criterion_5()
    cs = [c for _, c in o.metrics["curve"]]
    checks = {"c_symbol_positive": o.metrics["c_symbol"] > 0,
              "c_matrix": o.metrics["c_matrix"] >= 0.5 * o.metrics["c_symbol"],
              "degeneration": all(b < a for a, b in zip(cs, cs[1:])),
              "distances": [d for d, _ in o.metrics["curve"]] == [0.2, 0.1, 0.05, 0.025],
              "runtime": o.seconds < 120}
    _gate(report, o, checks)


def test_criterion_6_perturbed_stability(report):
    o = acceptance.criterion_6()
    c0 = o.metrics["c_unperturbed"]
    gaps = [abs(r["c_matrix"] - c0) for r in o.metrics["theta_sweep"]]
    near, far = o.metrics["Di_rows"]
    checks = {"sigma_ess": o.metrics["outliers"][0] == o.metrics["outliers"][1],
              "unitarity": o.metrics["unitarity"] < 1e-12,
              "conjugation": o.metrics["conjugation"] < 1e-12,
              "Di_decay": far < near,
              "theta_monotone": all(b < a for a, b in zip(gaps, gaps[1:]))}
    _gate(report, o, checks)


def test_criterion_7_lap_contrast(report):
    o = acceptance.criterion_7(N=48, s=0.6)
    curves = o.metrics["curves"]
    bulk = [c for c in curves if c.lam in (0.5, 0.6, 0.7)]
    edge = [c for c in curves if abs(c.lam - 1 / 3) == pytest.approx(0.01)]
    checks = {"bulk_plateau": len(bulk) == 3 and all(c.plateau_flag for c in bulk),
              "threshold_growing": len(edge) == 2 and not any(c.plateau_flag for c in edge),
              "floor": all(c.rhos[-1] >= lap.rho_floor(48) * (1 - 1e-12) for c in curves),
              "runtime": o.seconds < 300}
    _gate(report, o, checks)


def test_criterion_8_dynamics(report):
    o = acceptance.criterion_8()
    rec, tr = o.metrics["record"], o.metrics["trace"]
    checks = {"unitarity": o.metrics["unitarity_t100"] < 1e-8,
              "saturation": rec.tail_fraction < 0.05 and rec.window <= lap.return_time(Box(96, "dirichlet")),
              "pointwise": tr.late_max < 0.2 * tr.values[0],
              "runtime": o.seconds < 600}
    _gate(report, o, checks)


def test_criterion_9_hypothesis_checkers(report):
    o = acceptance.criterion_9(R=64)
    checks = {k: o.clauses[k] for k in ("basic", "H3_1", "H3_2", "alternating_rejected", "J_map")}
    _gate(report, o, checks)
