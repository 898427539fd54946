"""``hexlap`` command line.

Exit codes: 0 pass, 1 verification failure, 2 config error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import acceptance, lap, mourre, plotting, tables
from .config import SCHEMA_VERSION, ConfigError, RunConfig, load, output_dir
from .conjugate import alpha_tables
from .hypotheses import check_basic, check_derived, check_H3k, edge_function, fields_from_specs, site_function
from .lattice import Box
from .operators import MetricField, hamiltonian, laplacian_hex
from .symbol import band_energies, thresholds

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SPECTRUM_TOL = 1e-10
SOLVER_ERRORS = (lap.SolverStall, mourre.EmptyPreimage, mourre.DegenerateProjection, np.linalg.LinAlgError)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def write_json(path: Path, payload: dict) -> Path:
    body = {"schema_version": SCHEMA_VERSION, **_plain(payload)}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")
    return path


def write_csv(path: Path, header: list, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return path


def _fields(cfg: RunConfig):
    if not cfg.perturbed:
        return MetricField.trivial(), None
    return fields_from_specs(cfg.eta, cfg.V, cfg.eps_factor)


def _operator(cfg: RunConfig, box: Box):
    if not cfg.perturbed:
        return laplacian_hex().assemble(box, hermitian_hint=True)
    mf, V = _fields(cfg)
    return hamiltonian(mf, V, box)


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    box = Box(cfg.N, cfg.bc)
    H = _operator(cfg, box)
    w = np.linalg.eigvalsh(H.dense())
    write_csv(out / "eigenvalues.csv", ["index", "eigenvalue", "outside_band"],
              [(i, float(x), int(abs(x) > 1 + 1e-12)) for i, x in enumerate(w)])
    oracle = band_energies(cfg.N) if (box.periodic and not cfg.perturbed) else None
    mismatch = float(np.abs(w - oracle).max()) if oracle is not None else None
    write_json(out / "spectrum.json", {
        "N": cfg.N, "bc": cfg.bc, "perturbed": cfg.perturbed, "dimension": int(w.size),
        "oracle_mismatch": mismatch, "outside_band": int((np.abs(w) > 1 + 1e-12).sum()),
        "outliers": int((np.abs(w) > 1 + lap.OUTLIER_DELTA).sum()),
        "min": float(w[0]), "max": float(w[-1])})
    plotting.spectrum(w, oracle, out / "spectrum.png")
    print(f"spectrum N={cfg.N} {cfg.bc}: oracle mismatch {mismatch}")
    return EXIT_FAIL if mismatch is not None and mismatch > SPECTRUM_TOL else EXIT_PASS


def cmd_mourre(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    box = Box(cfg.N, "dirichlet")
    from .conjugate import conjugate_matrix
    H, A = _operator(cfg, box), conjugate_matrix(box)
    reports = [mourre.mourre_check(H, A, I, box, cfg.M) for I in cfg.intervals]
    curve = mourre.degeneration_curve(1 / 3, M=cfg.M)
    write_json(out / "mourre.json", {
        "perturbed": cfg.perturbed,
        "reports": [json.loads(r.to_json()) | {"passes": r.passes} for r in reports],
        "degeneration": [{"distance": d, "c_symbol": c} for d, c in curve]})
    plotting.degeneration(curve, out / "degeneration.png")
    for r in reports:
        print(f"interval {r.interval}: c_symbol={r.c_symbol:.6g} c_matrix={r.c_matrix:.6g} rank={r.rank}")
    return EXIT_PASS if all(r.passes for r in reports) else EXIT_FAIL


def cmd_lap(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    box = Box(cfg.lap_N, "dirichlet")
    H = _operator(cfg, box)
    lams, skipped = list(cfg.lambdas), []
    if cfg.perturbed:
        ev = lap.outlier_eigenvalues(_operator(cfg, Box(32, "periodic")), 0.0)
        lams = lap.avoid_eigenvalues(cfg.lambdas, ev)
        skipped = sorted(set(cfg.lambdas) - set(lams))
    rhos = lap.rho_grid(box.N, cfg.rho_points, cfg.rho_start)
    curves = [lap.rho_sweep(H, l, cfg.s, rhos, jobs=jobs) for l in lams]
    (out / "resolvent.csv").parent.mkdir(parents=True, exist_ok=True)
    (out / "resolvent.csv").write_text(lap.curves_to_csv(curves))
    verdicts = []
    for c in curves:
        d = min(abs(c.lam - t) for t in thresholds())
        expect = d >= 0.05
        verdicts.append({**c.summary(), "threshold_distance": d, "expect_plateau": expect,
                         "as_expected": c.plateau_flag == expect})
    write_json(out / "lap.json", {"N": box.N, "rho_floor": lap.rho_floor(box.N), "skipped": skipped,
                                  "plateau_slope": lap.PLATEAU_SLOPE, "curves": verdicts})
    plotting.resolvent_curves(curves, out / "resolvent.png")
    for v in verdicts:
        print(f"lambda={v['lam']:.4f} slope={v['slope']:.3f} plateau={v['plateau_flag']} "
              f"expected={v['expect_plateau']}")
    return EXIT_PASS if all(v["as_expected"] for v in verdicts) else EXIT_FAIL


def cmd_evolve(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    box = Box(cfg.evolve_N, "dirichlet")
    H = _operator(cfg, box)
    f = lap.localized_state(box)
    defect = lap.unitarity_defect(H, lap.localized_state(box, width=3.0), min(100.0, cfg.horizon))
    I = cfg.intervals[0]
    rec = lap.propagation_integral(H, I, f, cfg.s, cfg.horizon, cfg.dt)
    times = np.arange(0.0, cfg.decay_horizon + cfg.dt / 2, cfg.dt)
    tr = lap.pointwise_decay(H, f, lap.centre(box), times)
    write_csv(out / "propagation.csv", ["T", "integral"], [(r["T"], r["integral"]) for r in rec.rows()])
    write_csv(out / "decay.csv", ["t", "amplitude"], [(r["t"], r["amplitude"]) for r in tr.rows()])
    write_json(out / "evolve.json", {"N": box.N, "unitarity_defect": defect,
                                     "propagation": rec.summary(),
                                     "return_time": lap.return_time(box),
                                     "decay": {"early_max": tr.early_max, "late_max": tr.late_max,
                                               "decays": tr.decays}})
    plotting.propagation(rec, out / "propagation.png")
    plotting.decay_trace(tr, out / "decay.png")
    print(f"unitarity {defect:.2e}; tail fraction {rec.tail_fraction:.4f} on [0, {rec.window:g}]; "
          f"late/early {tr.late_max:.3g}/{tr.early_max:.3g}")
    ok = defect < 1e-8 and rec.saturation_flag and tr.decays
    return EXIT_PASS if ok else EXIT_FAIL


def _parse_mutation(text: str):
    try:
        l1, l2, i, j, d = (int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError("--mutate", f"expected L1,L2,I,J,DELTA, got {text!r}") from None
    if (l1, l2) not in ((0, 0), (1, 0), (0, 1), (1, 1)):
        raise ConfigError("--mutate", f"table key must be in {{0,1}}^2, got ({l1},{l2})")
    return (l1, l2), (i, j), d


def cmd_tables(cfg: RunConfig, out: Path, jobs: int = 1, mutate=None) -> int:
    pristine = alpha_tables()
    table = pristine
    if mutate:
        key, ij, d = _parse_mutation(mutate)
        table = pristine.mutated(key, ij, d)
    golden = tables.golden_rows()
    diffs = tables.diff_tables(tables.regenerate(table), golden)
    fam = tables.build_index_sets(table)
    structure = [c.line() for c in tables.verify_structure(fam)]
    violations = [r for r in tables.sum_rows(table, fam) if not r.holds]
    flags = sorted(set(tables.detects(table, golden)) - set(tables.detects(pristine, golden)))
    records = []
    try:
        records = tables.emit_tables(table, golden)
    except tables.GoldenMismatch:
        pass
    (out / "tables.csv").parent.mkdir(parents=True, exist_ok=True)
    (out / "tables.csv").write_text(tables.records_to_csv(records))
    errata = resources.files("hexlap").joinpath("data/PAPER_ERRATA").read_text()
    (out / "PAPER_ERRATA").write_text(errata)
    write_json(out / "tables.json", {"mutation": mutate, "golden_diffs": [d.line() for d in diffs],
                                     "identity_violations": len(violations), "structure": structure,
                                     "new_flags": flags, "rows": len(records)})
    print(f"tables: {len(records)} rows, {len(diffs)} diffs, {len(violations)} identity violations")
    return EXIT_FAIL if (diffs or violations or flags) else EXIT_PASS


def cmd_hypotheses(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    mf, V = _fields(cfg)
    R, g = cfg.R, cfg.gamma
    reps = dict(check_basic(mf, V, R))
    reps.update({f"eta:{k}": r for k, r in check_H3k(site_function(mf.eta), 1, g, R).items()})
    if V is not None:
        reps.update({f"V:{k}": r for k, r in check_H3k(site_function(V.V), 1, g, R).items()})
    reps.update({f"eps:{k}": r for k, r in check_H3k(edge_function(mf.eps), 2, g, R).items()})
    derived = {f"eta:{k}": r for k, r in check_derived(site_function(mf.eta), 1, g, R).items()}
    derived.update({f"eps:{k}": r for k, r in check_derived(edge_function(mf.eps), 2, g, R).items()})
    write_json(out / "hypotheses.json", {"R": R, "gamma": g,
                                         "primary": {k: r.to_dict() for k, r in reps.items()},
                                         "derived": {k: r.to_dict() for k, r in derived.items()}})
    plotting.hypothesis_trends(reps, out / "hypotheses.png")
    for r in reps.values():
        print(r.line())
    return EXIT_PASS if all(r.consistent for r in reps.values()) else EXIT_FAIL


def _outcome_json(o: acceptance.Outcome) -> dict:
    skip = {"curves", "record", "trace"}
    return {"number": o.number, "title": o.title, "passed": o.passed,
            "clauses": o.clauses, "metrics": {k: v for k, v in o.metrics.items() if k not in skip}}


def cmd_verify_all(cfg: RunConfig, out: Path, jobs: int = 1, only=None) -> int:
    outcomes = acceptance.run_all(jobs=jobs, only=only)
    for o in outcomes:
        print(o.line(), f"[{o.seconds:.1f}s]")
        if "curves" in o.metrics:
            plotting.resolvent_curves(o.metrics["curves"], out / "criterion7_resolvent.png")
            (out / "criterion7_resolvent.csv").write_text(lap.curves_to_csv(o.metrics["curves"]))
        if "record" in o.metrics:
            plotting.propagation(o.metrics["record"], out / "criterion8_propagation.png")
            plotting.decay_trace(o.metrics["trace"], out / "criterion8_decay.png")
    write_json(out / "acceptance.json", {"criteria": [_outcome_json(o) for o in outcomes]})
    return EXIT_PASS if all(o.passed for o in outcomes) else EXIT_FAIL


COMMANDS = {"spectrum": cmd_spectrum, "mourre": cmd_mourre, "lap": cmd_lap, "evolve": cmd_evolve,
            "tables": cmd_tables, "hypotheses": cmd_hypotheses, "verify-all": cmd_verify_all}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hexlap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML or JSON run config (default: shipped golden config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker cap")
        sp.add_argument("--out", help="output directory (overrides OUTPUT_DIR and the config)")
        if name == "tables":
            sp.add_argument("--mutate", metavar="L1,L2,I,J,DELTA", help="inject one alpha mutation")
        if name == "verify-all":
            sp.add_argument("--only", type=int, nargs="+", choices=range(1, 10), help="criteria to run")
    return p


def _fail(out, code: int, kind: str, exc: Exception, field_name=None) -> int:
    payload = {"schema_version": SCHEMA_VERSION, "error": kind, "message": str(exc)}
    if field_name:
        payload["field"] = field_name
    text = json.dumps(payload, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or os.environ.get("OUTPUT_DIR")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be at least 1")
        cfg = load(args.config)
        out = output_dir(cfg, args.out)
        out.mkdir(parents=True, exist_ok=True)
        extra = {}
        if args.command == "tables":
            extra["mutate"] = args.mutate
        if args.command == "verify-all":
            extra["only"] = args.only
        return COMMANDS[args.command](cfg, out, args.jobs, **extra)
    except ConfigError as exc:
        return _fail(out, EXIT_CONFIG, "config", exc, exc.field)
    except SOLVER_ERRORS as exc:
        return _fail(out, EXIT_SOLVER, "solver", exc)


if __name__ == "__main__":
    sys.exit(main())
