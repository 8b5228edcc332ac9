"""Leverage-point identification for absolute-value state estimation.

A row h_j is flagged when some N-1 other rows admit a unit null vector v
with

    s = sum_{i != j} |h_i . v|   <=   |h_j . v| = q,

meaning a single bad measurement on row j can drag the whole fit.  The test
reads only the model matrix, never the measurements, so its output is
independent of any gross errors in z.

Enumeration is exhaustive over row subsets, evaluated in lexicographic
order with batched SVDs.  ``detect_all`` first splits the model into
connected blocks of the row-support graph: rows in one block are orthogonal
to null directions of another, so per-block detection provably yields the
same verdicts while shrinking the combinatorics from C(M-1, N-1) to the
per-block counts.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyPartition,
    IndexOutOfRange,
    InvalidArgument,
    ParseError,
    RankDeficient,
)
from .model import MeasurementModel, RANK_TOL_FACTOR, validate_model

LEVERAGE = "leverage"
BOUNDARY = "boundary"
CLEAN = "clean"

_CHUNK = 1024
_MARGIN_EPS = 1e-12
_SIGN_TOL = 1e-9

DEFAULT_BOUNDARY_TOL = 1e-9
DEFAULT_STRICT_MARGIN = 1e-6


def combination_count(m: int, n: int) -> int:
    """Exact number of candidate bases per row: C(m-1, n-1).

    Arbitrary-precision; this is the quantity that explodes for large
    systems and motivates partitioning.
    """
    if not (isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise InvalidArgument("m and n must be integers")
    if not m >= n >= 1:
        raise InvalidArgument(f"need m >= n >= 1, got m={m}, n={n}")
    return math.comb(int(m) - 1, int(n) - 1)


@dataclass(frozen=True)
class LeverageWitness:
    """Certificate that a row passes the inequality test.

    basis holds the row indices whose null vector is v; s and q are the two
    sides of the inequality recomputed over every other row of the model
    the detection ran on.
    """

    row_index: int
    basis: tuple[int, ...]
    v: np.ndarray
    s: float
    q: float

    def margin(self) -> float:
        return (self.q - self.s) / max(self.q, _MARGIN_EPS)


@dataclass
class LeverageReport:
    """Per-row classification plus enumeration bookkeeping.

    exhaustive is False as soon as any row stopped early, either on its
    first witness or on the per-row budget; budget-truncated rows with no
    witness are additionally listed as inconclusive.
    """

    labels: tuple[str, ...]
    verdicts: list[str]
    witnesses: dict[int, LeverageWitness]
    combos_examined: int
    combos_skipped_degenerate: int
    exhaustive: bool
    inconclusive: frozenset[int] = frozenset()
    notes: list[str] = field(default_factory=list)

    def flagged_rows(self) -> list[int]:
        return [i for i, v in enumerate(self.verdicts) if v in (LEVERAGE, BOUNDARY)]

    def to_dict(self) -> dict:
        rows = []
        for i, verdict in enumerate(self.verdicts):
            entry = {"index": i, "label": self.labels[i], "verdict": verdict}
            if i in self.inconclusive:
                entry["inconclusive_within_budget"] = True
            w = self.witnesses.get(i)
            if w is not None:
                entry["witness"] = {
                    "basis": list(w.basis),
                    "v": [float(x) for x in w.v],
                    "s": w.s,
                    "q": w.q,
                }
            rows.append(entry)
        return {
            "rows": rows,
            "combos_examined": self.combos_examined,
            "combos_skipped_degenerate": self.combos_skipped_degenerate,
            "exhaustive": self.exhaustive,
            "notes": list(self.notes),
        }

    def render_table(self) -> str:
        width = max(len(s) for s in self.labels + ("measurement",))
        lines = [f"{'measurement':<{width}}  {'verdict':<9}  {'s':>10}  {'q':>10}"]
        for i, verdict in enumerate(self.verdicts):
            w = self.witnesses.get(i)
            s = f"{w.s:.4g}" if w else "-"
            q = f"{w.q:.4g}" if w else "-"
            mark = " (inconclusive within budget)" if i in self.inconclusive else ""
            lines.append(f"{self.labels[i]:<{width}}  {verdict:<9}  {s:>10}  {q:>10}{mark}")
        lines.append(
            f"examined {self.combos_examined} bases, skipped {self.combos_skipped_degenerate} "
            f"degenerate, exhaustive={self.exhaustive}"
        )
        lines.extend(self.notes)
        return "\n".join(lines)


@dataclass
class RowScan:
    """Outcome of scanning one row's candidate bases."""

    witness: Optional[LeverageWitness]
    best_margin: float
    examined: int
    skipped: int
    truncated: bool
    stopped_early: bool


def _batched_null_vectors(bases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Null vectors and rank-validity flags for a stack of (n-1, n) bases."""
    k, n = bases.shape[1], bases.shape[2]
    if k == 0:
        return np.ones((bases.shape[0], 1)), np.ones(bases.shape[0], dtype=bool)
    s, vt = np.linalg.svd(bases)[1:]
    smax = s[:, 0]
    ok = (smax > 0) & (s[:, -1] > n * smax * RANK_TOL_FACTOR)
    v = vt[:, -1, :].copy()
    # Sign convention: first component above the noise floor is positive.
    lead = np.argmax(np.abs(v) > _SIGN_TOL, axis=1)
    flip = v[np.arange(v.shape[0]), lead] < 0
    v[flip] *= -1.0
    return v, ok


def _scan_row(h: np.ndarray, j: int, boundary_tol: float, strict_margin: float,
              budget: Optional[int], early_exit: bool) -> RowScan:
    """Enumerate (n-1)-subsets of the other rows in lexicographic order."""
    m, n = h.shape
    pool = [i for i in range(m) if i != j]
    combos = itertools.combinations(pool, n - 1)
    examined = 0
    skipped = 0
    witness = None
    best_margin = -np.inf
    truncated = False
    stopped = False
    remaining = None if budget is None else int(budget)

    while True:
        take = _CHUNK if remaining is None else min(_CHUNK, remaining)
        if take == 0:
            truncated = next(combos, None) is not None
            break
        chunk = list(itertools.islice(combos, take))
        if not chunk:
            break
        subsets = np.array(chunk, dtype=int).reshape(len(chunk), n - 1)
        v, ok = _batched_null_vectors(h[subsets])
        proj = np.abs(v @ h.T)  # (K, m)
        q = proj[:, j]
        s = proj.sum(axis=1) - q
        if remaining is not None:
            remaining -= len(chunk)

        examined += int(ok.sum())
        skipped += int(len(chunk) - ok.sum())
        margins = np.where(ok, (q - s) / np.maximum(q, _MARGIN_EPS), -np.inf)
        if margins.size:
            best_margin = max(best_margin, float(margins.max()))

        qualify = ok & (s <= q + boundary_tol)
        if witness is None and qualify.any():
            k = int(np.argmax(qualify))
            witness = LeverageWitness(
                row_index=j,
                basis=tuple(int(b) for b in subsets[k]),
                v=v[k].copy(),
                s=float(s[k]),
                q=float(q[k]),
            )
            if early_exit:
                # Drop the bases already pulled into this chunk but not yet
                # needed; counters only cover what was actually evaluated.
                extra = len(chunk) - k - 1
                examined -= int(ok[k + 1:].sum())
                skipped -= int(extra - ok[k + 1:].sum())
                stopped = next(combos, None) is not None or extra > 0
                break
    return RowScan(witness, best_margin, examined, skipped, truncated, stopped)


def classify(witness: Optional[LeverageWitness],
             strict_margin: float = DEFAULT_STRICT_MARGIN) -> str:
    if witness is None:
        return CLEAN
    if witness.s <= witness.q - strict_margin * max(1.0, witness.q):
        return LEVERAGE
    return BOUNDARY


def detect_row(model: MeasurementModel, j: int,
               boundary_tol: float = DEFAULT_BOUNDARY_TOL,
               strict_margin: float = DEFAULT_STRICT_MARGIN,
               budget: Optional[int] = None) -> Optional[LeverageWitness]:
    """First witness (in lexicographic basis order) that row j is flagged.

    Returns None when no subset of N-1 other rows qualifies.  Subsets whose
    rank falls below N-1 have no usable null direction and are skipped.
    """
    validate_model(model)
    if not 0 <= j < model.m:
        raise IndexOutOfRange(f"row {j} outside 0..{model.m - 1}")
    scan = _scan_row(model.h, j, boundary_tol, strict_margin, budget, early_exit=True)
    return scan.witness


def leverage_margin(model: MeasurementModel, j: int) -> tuple[float, Optional[LeverageWitness]]:
    """Best (q - s)/max(q, eps) over all valid bases, with the witness if flagged.

    Positive margins mean the inequality holds strictly for some basis;
    values near zero sit on the boundary between the two classes.
    """
    validate_model(model)
    if not 0 <= j < model.m:
        raise IndexOutOfRange(f"row {j} outside 0..{model.m - 1}")
    scan = _scan_row(model.h, j, DEFAULT_BOUNDARY_TOL, DEFAULT_STRICT_MARGIN,
                     budget=None, early_exit=False)
    return scan.best_margin, scan.witness


def _support_components(h: np.ndarray) -> list[tuple[list[int], list[int]]]:
    """Connected blocks of the bipartite row/column support graph."""
    m, n = h.shape
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(m):
        cols = np.flatnonzero(h[i])
        for c in cols[1:]:
            ra, rb = find(int(cols[0])), find(int(c))
            if ra != rb:
                parent[rb] = ra
    groups: dict[int, list[int]] = {}
    for c in range(n):
        groups.setdefault(find(c), []).append(c)
    comps = []
    for cols in groups.values():
        col_set = set(cols)
        rows = [i for i in range(m) if any(int(c) in col_set for c in np.flatnonzero(h[i]))]
        comps.append((rows, sorted(cols)))
    comps.sort(key=lambda rc: rc[1][0])
    return comps


def detect_all(model: MeasurementModel, budget: Optional[int] = None,
               boundary_tol: float = DEFAULT_BOUNDARY_TOL,
               strict_margin: float = DEFAULT_STRICT_MARGIN,
               early_exit: bool = True, decompose: bool = True,
               threads: Optional[int] = None) -> LeverageReport:
    """Classify every row of the model.

    With decompose=True (default), detection runs per connected block of
    the support graph; witnesses then carry the block-local basis (null
    vectors are re-embedded with zeros on the other blocks), and the
    inequality values are identical to a whole-model scan.  Rows with empty
    support belong to no block and are reported clean.
    """
    validate_model(model)
    h = model.h
    m, n = h.shape
    if decompose:
        comps = _support_components(h)
    else:
        comps = [(list(range(m)), list(range(n)))]

    row_home: dict[int, tuple[np.ndarray, list[int], list[int], int]] = {}
    for rows, cols in comps:
        sub = h[np.ix_(rows, cols)]
        for local_j, global_j in enumerate(rows):
            row_home[global_j] = (sub, rows, cols, local_j)

    def scan_one(j: int) -> Optional[RowScan]:
        if j not in row_home:
            return None
        sub, rows, cols, local_j = row_home[j]
        return _scan_row(sub, local_j, boundary_tol, strict_margin, budget, early_exit)

    order = list(range(m))
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scans = list(pool.map(scan_one, order))
    else:
        scans = [scan_one(j) for j in order]

    verdicts = []
    witnesses: dict[int, LeverageWitness] = {}
    examined = 0
    skipped = 0
    exhaustive = True
    inconclusive = set()
    for j, scan in zip(order, scans):
        if scan is None:  # zero row: no support, cannot dominate any direction
            verdicts.append(CLEAN)
            continue
        examined += scan.examined
        skipped += scan.skipped
        if scan.truncated or scan.stopped_early:
            exhaustive = False
        if scan.truncated and scan.witness is None:
            inconclusive.add(j)
        w = scan.witness
        if w is not None:
            _, rows, cols, _ = row_home[j]
            v_full = np.zeros(n)
            v_full[cols] = w.v
            w = LeverageWitness(
                row_index=j,
                basis=tuple(rows[b] for b in w.basis),
                v=v_full,
                s=w.s,
                q=w.q,
            )
            witnesses[j] = w
        verdicts.append(classify(w, strict_margin))

    return LeverageReport(
        labels=model.labels,
        verdicts=verdicts,
        witnesses=witnesses,
        combos_examined=examined,
        combos_skipped_degenerate=skipped,
        exhaustive=exhaustive,
        inconclusive=frozenset(inconclusive),
    )


# ---------------------------------------------------------------------------
# Partitioned detection.
# ---------------------------------------------------------------------------


@dataclass
class Partition:
    """A named subset of measurements analyzed as its own submodel.

    state_columns is derived from the selected rows' support.  When the
    induced submatrix is column-rank deficient through a pure translation
    gauge (typically an angle block whose reference bus lies outside the
    partition), the lowest-indexed column of each unseen group is dropped,
    which installs a local reference; every drop is recorded.  Any other
    deficiency rejects the partition.
    """

    name: str
    measurement_indices: tuple[int, ...]
    state_columns: Optional[tuple[int, ...]] = None
    dropped_columns: tuple[int, ...] = ()


def resolve_partition(model: MeasurementModel, partition: Partition) -> Partition:
    rows = tuple(dict.fromkeys(int(i) for i in partition.measurement_indices))
    if len(rows) == 0:
        raise EmptyPartition(f"partition {partition.name!r} selects no measurements")
    for i in rows:
        if not 0 <= i < model.m:
            raise IndexOutOfRange(f"partition {partition.name!r}: row {i} out of range")
    support = np.flatnonzero(np.any(model.h[list(rows)] != 0, axis=0))
    cols = [int(c) for c in support]
    dropped: list[int] = []
    while True:
        if not cols:
            raise RankDeficient(0, 1, f"partition {partition.name!r} has no usable state columns")
        sub = model.h[np.ix_(list(rows), cols)]
        s = np.linalg.svd(sub, compute_uv=False)
        tol = max(sub.shape) * s[0] * RANK_TOL_FACTOR if s[0] > 0 else 0.0
        rank = int(np.count_nonzero(s > tol))
        if rank == len(cols):
            break
        # A deficiency is repairable only when it is a pure translation
        # gauge: a support-graph column group whose common shift no selected
        # row can see (every row sums to zero over the group), meaning the
        # partition lost its reference for that group.  Dropping the
        # group's lowest-indexed column installs a local reference.
        cand = None
        atol = 1e-9 * max(1.0, float(np.abs(sub).max()))
        for _, comp_cols in _support_components(sub):
            group_sums = sub[:, comp_cols].sum(axis=1)
            if np.max(np.abs(group_sums)) <= atol:
                cand = int(comp_cols[0])
                break
        if cand is None:
            raise RankDeficient(rank, len(cols),
                                f"partition {partition.name!r}: not a gauge deficiency")
        dropped.append(cols[cand])
        del cols[cand]
    return Partition(
        name=partition.name,
        measurement_indices=rows,
        state_columns=tuple(cols),
        dropped_columns=tuple(dropped),
    )


@dataclass
class PartitionedReport:
    """Per-partition reports plus the conservative merge across them."""

    labels: tuple[str, ...]
    partition_reports: list[tuple[Partition, LeverageReport]]
    merged_verdicts: dict[str, str]
    consistency_notes: list[str]
    unanalyzed: tuple[str, ...]

    def merged_flagged(self) -> list[str]:
        return [lab for lab, v in self.merged_verdicts.items() if v in (LEVERAGE, BOUNDARY)]

    def to_dict(self) -> dict:
        return {
            "partitions": [
                {
                    "name": part.name,
                    "measurements": [self.labels[i] for i in part.measurement_indices],
                    "state_columns": list(part.state_columns or ()),
                    "dropped_columns": list(part.dropped_columns),
                    "report": rep.to_dict(),
                }
                for part, rep in self.partition_reports
            ],
            "merged_verdicts": dict(self.merged_verdicts),
            "consistency_notes": list(self.consistency_notes),
            "unanalyzed": list(self.unanalyzed),
        }

    def render_table(self) -> str:
        width = max(len(s) for s in self.labels + ("measurement",))
        names = [part.name for part, _ in self.partition_reports]
        head = f"{'measurement':<{width}}  " + "  ".join(f"{nm:<9}" for nm in names) + "  merged"
        lines = [head]
        per_label = {}
        for part, rep in self.partition_reports:
            for local, global_i in enumerate(part.measurement_indices):
                per_label.setdefault(self.labels[global_i], {})[part.name] = rep.verdicts[local]
        for lab in self.labels:
            cells = [per_label.get(lab, {}).get(nm, "-") for nm in names]
            merged = self.merged_verdicts.get(lab, "unanalyzed")
            lines.append(f"{lab:<{width}}  " + "  ".join(f"{c:<9}" for c in cells) + f"  {merged}")
        lines.extend(self.consistency_notes)
        return "\n".join(lines)


_RANKING = {LEVERAGE: 2, BOUNDARY: 1, CLEAN: 0}


def detect_partitioned(model: MeasurementModel, partitions: Sequence[Partition],
                       budget: Optional[int] = None,
                       boundary_tol: float = DEFAULT_BOUNDARY_TOL,
                       strict_margin: float = DEFAULT_STRICT_MARGIN,
                       threads: Optional[int] = None) -> PartitionedReport:
    """Run detection per partition and merge conservatively.

    A row flagged in any partition containing it stays flagged in the
    merge; rows classified differently across partitions are listed in the
    consistency notes for manual comparison.
    """
    if not partitions:
        raise EmptyPartition("no partitions supplied")
    resolved = [resolve_partition(model, p) for p in partitions]
    reports: list[tuple[Partition, LeverageReport]] = []
    notes: list[str] = []
    for part in resolved:
        sub = model.submodel(part.measurement_indices, part.state_columns)
        if part.dropped_columns:
            names = [
                model.state_labels[c] if model.state_labels else str(c)
                for c in part.dropped_columns
            ]
            notes.append(
                f"partition {part.name!r}: re-referenced by dropping column(s) {', '.join(names)}"
            )
        try:
            rep = detect_all(sub, budget=budget, boundary_tol=boundary_tol,
                             strict_margin=strict_margin, threads=threads)
        except RankDeficient as err:
            raise RankDeficient(err.rank, err.needed, f"partition {part.name!r}") from None
        reports.append((part, rep))

    merged: dict[str, str] = {}
    seen: dict[str, dict[str, str]] = {}
    for part, rep in reports:
        for local, global_i in enumerate(part.measurement_indices):
            lab = model.labels[global_i]
            verdict = rep.verdicts[local]
            seen.setdefault(lab, {})[part.name] = verdict
            if lab not in merged or _RANKING[verdict] > _RANKING[merged[lab]]:
                merged[lab] = verdict
    for lab, by_part in seen.items():
        if len(set(by_part.values())) > 1:
            detail = ", ".join(f"{nm}: {v}" for nm, v in by_part.items())
            notes.append(f"inconsistent classification for {lab}: {detail}")
    unanalyzed = tuple(lab for lab in model.labels if lab not in merged)
    return PartitionedReport(
        labels=model.labels,
        partition_reports=reports,
        merged_verdicts=merged,
        consistency_notes=notes,
        unanalyzed=unanalyzed,
    )


def partitions_from_dict(doc: dict, model: MeasurementModel) -> list[Partition]:
    """Parse ``{"partitions": [{"name", "measurements": [label-or-index]}]}``."""
    if not isinstance(doc, dict) or "partitions" not in doc:
        raise ParseError("partition document must contain a 'partitions' array")
    out = []
    for entry in doc["partitions"]:
        if not isinstance(entry, dict) or "name" not in entry or "measurements" not in entry:
            raise ParseError("each partition needs 'name' and 'measurements'")
        indices = []
        for item in entry["measurements"]:
            if isinstance(item, bool):
                raise ParseError(f"bad measurement reference {item!r}")
            if isinstance(item, int):
                indices.append(item)
            elif isinstance(item, str):
                indices.append(model.row_index(item))
            else:
                raise ParseError(f"bad measurement reference {item!r}")
        out.append(Partition(name=str(entry["name"]), measurement_indices=tuple(indices)))
    return out


def load_partitions(path, model: MeasurementModel) -> list[Partition]:
    with open(path) as fh:
        doc = json.load(fh)
    return partitions_from_dict(doc, model)
