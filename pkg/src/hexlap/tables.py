"""Index sets, integer sum identities and the transcribed S-value tables.

Everything here is exact integer arithmetic on the coefficient tables of
:mod:`hexlap.conjugate`.
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from .conjugate import TABLE_KEYS, CoeffTable, alpha_tables

# ---------------------------------------------------------------------------
# index sets


@dataclass(frozen=True)
class IndexSetFamily:
    """``sets[key][k]`` is ``I^k`` for ``k = 0..9``; ``I3min``/``I7min`` are the
    min(l1,l2)-dependent selectors."""

    sets: dict
    I3min: dict
    I7min: dict

    def __getitem__(self, key) -> list:
        return self.sets[key]


def build_index_sets(table: CoeffTable, selector: str = "displayed") -> IndexSetFamily:
    """Construct ``I^0..I^9`` from the support of each alpha table.

    ``I^2`` tests ``(i, j+1)`` against all of ``I^0``; this is the reading under
    which the listed example sets and the ``I^2`` tables agree. ``selector``
    picks how ``I^{7+min}`` is formed: ``"displayed"`` uses the selector formula
    literally, ``"named"`` takes ``I^7`` when ``min(l) = 0`` and ``I^8`` otherwise.
    """
    if selector not in ("displayed", "named"):
        raise ValueError(f"unknown selector {selector!r}")
    sets, s3, s7 = {}, {}, {}
    for key in TABLE_KEYS:
        I0 = frozenset(table.support(key))

        def out(*pts):
            return all(p not in I0 for p in pts)

        I1 = {p for p in I0 if out((p[0] + 1, p[1]))}
        I2 = {p for p in I0 if out((p[0], p[1] + 1))}
        I3 = {p for p in I0 if out((-p[0], -p[1]))}
        I4 = {p for p in I0 if out((-p[0] - 1, -p[1]))}
        I5 = {p for p in I0 if out((-p[0], -p[1] - 1))}
        I6 = {p for p in I2 if out((p[0] - 1, p[1] + 1))}
        I7 = {p for p in I3 if out((-p[0] - 1, -p[1]), (-p[0], -p[1] - 1))}
        I8 = {p for p in I4 if out((-p[0] - 2, -p[1]), (-p[0] - 1, -p[1] - 1))}
        I9 = {p for p in I5 if out((-p[0] - 1, -p[1] - 1), (-p[0], -p[1] - 2),
                                   (p[0], p[1] + 1), (p[0] + 1, p[1] + 1))}
        mn = min(key)
        sel3 = {p for p in I0 if out((-p[0] - mn, -p[1]))}
        if selector == "displayed":
            sel7 = {p for p in sel3
                    if (p[0] - 1 - mn, -p[1]) not in I1 and (p[0] - mn, -p[1] - 1) not in I2}
        else:
            sel7 = I8 if mn else I7
        sets[key] = [frozenset(s) for s in (I0, I1, I2, I3, I4, I5, I6, I7, I8, I9)]
        s3[key], s7[key] = frozenset(sel3), frozenset(sel7)
    return IndexSetFamily(sets, s3, s7)


def definition_chain_ok(fam: IndexSetFamily) -> bool:
    for I in fam.sets.values():
        if not (I[1] <= I[0] and I[2] <= I[0] and I[6] <= I[2]
                and I[7] <= I[3] and I[8] <= I[4] and I[9] <= I[5]):
            return False
    return True


# ---------------------------------------------------------------------------
# structural points


@dataclass
class CheckResult:
    name: str
    key: tuple
    passed: bool
    witness: Optional[tuple] = None

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        extra = "" if self.witness is None else f" witness={self.witness}"
        return f"{state} {self.name} l={self.key}{extra}"


def verify_structure(fam: IndexSetFamily) -> list[CheckResult]:
    out = []
    for key in TABLE_KEYS:
        I = fam.sets[key]
        mn = min(key)
        s3 = fam.I3min[key]

        bad = None
        for i, j in sorted(I[4 - mn]):
            if not ((-i - 2 + mn, -j) in I[1] or (-i - 1 + mn, -j - 1) in I[2]
                    or (-i - mn + 1, j) in s3):
                bad = (i, j)
                break
        out.append(CheckResult("point1", key, bad is None, bad))

        bad = None
        for i, j in sorted(I[5]):
            if not ((-i - 1, -j - 1) in I[1] or (-i, -j - 2) in I[2] or (-i - 1, -j + 1) in I[4]):
                bad = (i, j)
                break
        out.append(CheckResult("point2", key, bad is None, bad))

        out.append(CheckResult("I9_empty", key, not I[9], min(I[9]) if I[9] else None))
        cover = I[1] | I[2] | I[8 - mn]
        extra = sorted(fam.I7min[key] - cover)
        out.append(CheckResult("point3_inclusion", key, not extra, extra[0] if extra else None))
    return out


# ---------------------------------------------------------------------------
# sum identities

# Index triples (as functions of (i, j)) entering S1 and S2 for each identity.
IDENTITIES = {
    "Q1": (0, (lambda i, j: [(i, j), (i - 1, j), (i, j - 1)]),
           (lambda i, j: [(-i, -j), (-i - 1, -j), (-i, -j - 1)])),
    "Q2": (1, (lambda i, j: [(i, j), (i + 1, j), (i + 1, j - 1)]),
           (lambda i, j: [(-i - 1, -j), (-i - 2, -j), (-i - 1, -j - 1)])),
    "Q3": (2, (lambda i, j: [(i, j), (i, j + 1), (i - 1, j + 1)]),
           (lambda i, j: [(-i, -j - 1), (-i - 1, -j - 1), (-i, -j - 2)])),
    "Q9": (4, (lambda i, j: [(i, j), (i + 1, j), (i + 1, j - 1)]),
           (lambda i, j: [(-i - 1, -j), (-i - 2, -j), (-i - 1, -j - 1)])),
}
KINDS = tuple(IDENTITIES)


@dataclass(frozen=True)
class SumRow:
    l1: int
    l2: int
    i: int
    j: int
    kind: str
    S1: int
    S2: int

    @property
    def key(self) -> tuple:
        return (self.l1, self.l2)

    @property
    def sign(self) -> int:
        return (-1) ** max(self.l1, self.l2)

    @property
    def holds(self) -> bool:
        return self.S1 == self.sign * self.S2

    @property
    def ident(self) -> tuple:
        return (self.l1, self.l2, self.kind, self.i, self.j)


class IdentityViolation(AssertionError):
    def __init__(self, row: SumRow):
        self.row = row
        super().__init__(f"{row.kind} fails for l=({row.l1},{row.l2}) at (i,j)=({row.i},{row.j}): "
                         f"S1={row.S1}, S2={row.S2}")


def s_values(table: CoeffTable, key: tuple, kind: str, i: int, j: int) -> tuple:
    """``(S1, S2)`` of identity ``kind`` at ``(i, j)``, regardless of index-set membership."""
    _, left, right = IDENTITIES[kind]
    a = table[key]
    return (sum(a.get(p, 0) for p in left(i, j)), sum(a.get(p, 0) for p in right(i, j)))


def sum_rows(table: CoeffTable, fam: Optional[IndexSetFamily] = None) -> list[SumRow]:
    fam = fam or build_index_sets(table)
    rows = []
    for key in TABLE_KEYS:
        a = table[key]
        for kind, (level, left, right) in IDENTITIES.items():
            for i, j in sorted(fam.sets[key][level]):
                S1 = sum(a.get(p, 0) for p in left(i, j))
                S2 = sum(a.get(p, 0) for p in right(i, j))
                rows.append(SumRow(*key, i, j, kind, S1, S2))
    return rows


def verify_sum_identities(table: CoeffTable, fam: Optional[IndexSetFamily] = None) -> list[SumRow]:
    rows = sum_rows(table, fam)
    for r in rows:
        if not r.holds:
            raise IdentityViolation(r)
    return rows


# ---------------------------------------------------------------------------
# golden S-value tables

# Transcribed tables in order: identity kind and the (l1, l2) named in each caption.
CAPTIONS = {
    "5": ("Q1", (0, 0)), "6": ("Q1", (0, 1)), "7": ("Q1", (1, 0)), "8": ("Q1", (1, 1)),
    "9": ("Q2", (0, 0)), "10": ("Q2", (1, 0)), "11": ("Q2", (1, 1)), "12": ("Q2", (0, 1)),
    "13": ("Q3", (0, 0)), "14": ("Q3", (1, 0)), "15": ("Q3", (0, 1)), "16": ("Q3", (1, 1)),
    "17a": ("Q9", (0, 0)), "17b": ("Q9", (1, 0)), "17c": ("Q9", (0, 1)), "17d": ("Q9", (1, 1)),
}


@dataclass(frozen=True)
class TranscribedRow:
    table: str
    kind: str
    l1: int
    l2: int
    i: int
    j: int
    S1: int
    S2: int


def _data(name: str):
    return (resources.files("hexlap") / "data" / name).open()


def load_transcription() -> list[TranscribedRow]:
    """Transcribed rows exactly as printed, labelled with their caption's (l1, l2)."""
    rows = []
    with _data("appendix_tables.csv") as fh:
        for r in csv.DictReader(fh):
            kind, (l1, l2) = CAPTIONS[r["table"]]
            rows.append(TranscribedRow(r["table"], kind, l1, l2, int(r["i"]), int(r["j"]),
                                 int(r["S1"]), int(r["S2"])))
    return rows


@dataclass(frozen=True)
class Erratum:
    table: str
    action: str  # relabel | value | drop | dedupe | drop_table | add
    fields: dict
    note: str

    def line(self) -> str:
        kv = " ".join(f"{k}={v}" for k, v in self.fields.items())
        return f"table={self.table} action={self.action} {kv} | {self.note}"


_ERRATUM = re.compile(r"^table=(\S+) action=(\S+)((?: \w+=\S+)*) \| (.*)$")


def parse_errata(text: str) -> list[Erratum]:
    out = []
    for line in text.splitlines():
        m = _ERRATUM.match(line.strip())
        if not m:
            continue
        fields = dict(kv.split("=", 1) for kv in m.group(3).split())
        out.append(Erratum(m.group(1), m.group(2), fields, m.group(4)))
    return out


def load_errata() -> list[Erratum]:
    with _data("PAPER_ERRATA") as fh:
        return parse_errata(fh.read())


def _pair(s: str) -> tuple:
    a, b = s.strip("()").split(",")
    return int(a), int(b)


class ErrataError(ValueError):
    pass


def resolve(rows: list[TranscribedRow], errata: list[Erratum]) -> dict:
    """Apply errata to the literal transcription.

    Returns ``{(l1, l2, kind, i, j): (S1, S2)}``, the golden expectation. A row
    printed twice must be covered by a ``dedupe`` entry.
    """
    relabel = {e.table: _pair(e.fields["l"]) for e in errata if e.action == "relabel"}
    dropped_tables = {e.table for e in errata if e.action == "drop_table"}
    drops = {(e.table, _pair(e.fields["ij"])) for e in errata if e.action == "drop"}
    dedupe = {(e.table, _pair(e.fields["ij"])) for e in errata if e.action == "dedupe"}
    values = {(e.table, _pair(e.fields["ij"])): _pair(e.fields["S"])
              for e in errata if e.action == "value"}
    golden: dict = {}
    seen = set()
    for r in rows:
        ij = (r.i, r.j)
        if r.table in dropped_tables or (r.table, ij) in drops:
            continue
        if (r.table, ij) in seen:
            if (r.table, ij) not in dedupe:
                raise ErrataError(f"table {r.table} repeats row {ij} without a dedupe entry")
            continue
        seen.add((r.table, ij))
        l1, l2 = relabel.get(r.table, (r.l1, r.l2))
        S = values.get((r.table, ij), (r.S1, r.S2))
        golden[(l1, l2, r.kind, r.i, r.j)] = S
    for e in errata:
        if e.action == "add":
            kind = e.fields.get("kind", CAPTIONS[e.table][0])
            l = _pair(e.fields["l"]) if "l" in e.fields else relabel.get(e.table, CAPTIONS[e.table][1])
            i, j = _pair(e.fields["ij"])
            golden[(*l, kind, i, j)] = _pair(e.fields["S"])
    return golden


def golden_rows() -> dict:
    return resolve(load_transcription(), load_errata())


@dataclass
class TableDiff:
    ident: tuple
    regenerated: Optional[tuple]
    golden: Optional[tuple]

    def line(self) -> str:
        l1, l2, kind, i, j = self.ident
        return (f"l=({l1},{l2}) {kind} (i,j)=({i},{j}): regenerated={self.regenerated} "
                f"golden={self.golden}")


class GoldenMismatch(AssertionError):
    def __init__(self, diffs: list[TableDiff]):
        self.diffs = diffs
        super().__init__("S-value tables differ from golden:\n" + "\n".join(d.line() for d in diffs))


def regenerate(table: Optional[CoeffTable] = None) -> dict:
    rows = sum_rows(table or alpha_tables())
    return {r.ident: (r.S1, r.S2) for r in rows}


def diff_tables(regen: dict, golden: dict) -> list[TableDiff]:
    out = []
    for ident in sorted(set(regen) | set(golden), key=_ident_order):
        a, b = regen.get(ident), golden.get(ident)
        if a != b:
            out.append(TableDiff(ident, a, b))
    return out


def _ident_order(ident):
    l1, l2, kind, i, j = ident
    return (KINDS.index(kind), TABLE_KEYS.index((l1, l2)), i, j)


def emit_tables(table: Optional[CoeffTable] = None, golden: Optional[dict] = None) -> list[dict]:
    """Regenerate every S row and compare with the golden transcription.

    Returns CSV-ready records ``l1,l2,i,j,kind,S1,S2,match``; raises
    :class:`GoldenMismatch` when any row differs or is missing/extra.
    """
    regen = regenerate(table)
    golden = golden_rows() if golden is None else golden
    diffs = diff_tables(regen, golden)
    records = [
        {"l1": k[0], "l2": k[1], "i": k[3], "j": k[4], "kind": k[2],
         "S1": v[0], "S2": v[1], "match": int(golden.get(k) == v)}
        for k, v in sorted(regen.items(), key=lambda kv: _ident_order(kv[0]))
    ]
    if diffs:
        raise GoldenMismatch(diffs)
    return records


def records_to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["l1", "l2", "i", "j", "kind", "S1", "S2", "match"],
                       lineterminator="\n")
    w.writeheader()
    w.writerows(records)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# mutation harness


def detects(table: CoeffTable, golden: Optional[dict] = None) -> list[str]:
    """Names of the checks that flag ``table`` as different from pristine."""
    golden = golden_rows() if golden is None else golden
    fam = build_index_sets(table)
    flags = []
    if not definition_chain_ok(fam):
        flags.append("definition_chain")
    if not all(c.passed for c in verify_structure(fam)):
        flags.append("structure")
    if not all(r.holds for r in sum_rows(table, fam)):
        flags.append("identities")
    if diff_tables(regenerate(table), golden):
        flags.append("golden")
    return flags


def mutation_sweep(table: Optional[CoeffTable] = None, radius: int = 3) -> dict:
    """Flip each alpha entry in ``[-radius, radius]^2`` by +1 and -1.

    Returns ``{(key, (i, j), delta): [detecting checks]}``.
    """
    table = table or alpha_tables()
    golden = golden_rows()
    out = {}
    for key in TABLE_KEYS:
        for i in range(-radius, radius + 1):
            for j in range(-radius, radius + 1):
                for delta in (1, -1):
                    out[(key, (i, j), delta)] = detects(table.mutated(key, (i, j), delta), golden)
    return out


def detection_rate(sweep: dict, table: Optional[CoeffTable] = None) -> float:
    """Fraction of mutations raising a flag that the pristine table does not raise."""
    baseline = set(detects(table or alpha_tables()))
    hits = sum(1 for flags in sweep.values() if set(flags) - baseline)
    return hits / len(sweep)
