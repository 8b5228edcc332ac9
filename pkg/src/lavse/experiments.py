"""Experiment runners that check the package against bundled reference results.

The reference data reproduced here comes with the two benchmark systems:

* a direction sweep of the inequality test over the 3-bus model (five null
  directions, both sides of the inequality for every row),
* projection-statistics results for the same model,
* the partitioned leverage classification of the 14-bus system,
* a randomized extra-row study that cross-validates the detector verdict
  against actual estimate deviation under a gross error.

Known misprints in the bundled direction-sweep table are handled through an
explicit errata list, and the comparison harness demonstrates the misprint
from the table's own internal sum identity rather than assuming it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lav import solve_lav
from .leverage import (
    BOUNDARY,
    CLEAN,
    LEVERAGE,
    Partition,
    PartitionedReport,
    detect_partitioned,
    detect_row,
    leverage_margin,
)
from .model import MeasurementModel
from .power import GrossErrorSpec, fixture_model, inject_gross_errors
from .projstats import compute_ps

# ---------------------------------------------------------------------------
# Reference data for the 3-bus direction sweep.
#
# The published table labels its columns (s, q) in the opposite order to the
# inequality's definition: the printed "s" column holds |h_j . v| and the
# printed "q" column holds sum_{i != j} |h_i . v|.  The comparison below
# maps the columns accordingly and keeps the inequality-side naming.
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_SQRT221 = math.sqrt(221.0)

SWEEP_DIRECTIONS: tuple[tuple[float, float], ...] = (
    (1 / _SQRT2, 1 / _SQRT2),
    (0.0, 1.0),
    (1.0, 0.0),
    (10 / _SQRT221, 11 / _SQRT221),   # printed rounded as (0.673; 0.74)
    (-1 / _SQRT2, 1 / _SQRT2),
)

# Printed (s-column, q-column) pairs, row-major over the 7 rows, one tuple
# of 7 pairs per direction.
SWEEP_PRINTED: tuple[tuple[tuple[float, float], ...], ...] = (
    ((0.0, 4.95), (0.707, 4.24), (0.707, 4.24), (0.707, 4.24),
     (0.707, 4.24), (0.707, 4.24), (1.414, 3.536)),
    ((10.0, 13.0), (0.0, 23.0), (0.0, 23.0), (1.0, 22.0),
     (1.0, 22.0), (10.0, 13.0), (1.0, 22.0)),
    ((10.0, 14.0), (1.0, 23.0), (1.0, 23.0), (0.0, 24.0),
     (0.0, 24.0), (11.0, 13.0), (1.0, 23.0)),
    ((0.672, 4.24), (0.672, 4.24), (0.672, 4.24), (0.74, 4.17),
     (0.74, 4.17), (0.0, 4.911), (1.413, 3.498)),
    ((1.141, 1.768), (0.707, 3.111), (0.707, 3.111), (0.707, 3.111),
     (0.707, 3.111), (1.485, 1.697), (0.0, 3.182)),
)

# Misprints in the last printed direction: every value >= 10 was printed
# with the decimal point shifted one place left, and the first row's s-cell
# additionally transposes 1.414 into 1.141.  Corrected values below are the
# printed digits un-shifted (and un-transposed); the sum-identity check in
# ``sweep_column_consistency`` substantiates the correction.
SWEEP_ERRATA: dict[tuple[int, int, str], tuple[float, str]] = {
    (0, 4, "s"): (14.14, "printed 1.141: transposed digits of 1.414, decimal shifted"),
    (0, 4, "q"): (17.68, "printed 1.768: decimal shifted"),
    (1, 4, "q"): (31.11, "printed 3.111: decimal shifted"),
    (2, 4, "q"): (31.11, "printed 3.111: decimal shifted"),
    (3, 4, "q"): (31.11, "printed 3.111: decimal shifted"),
    (4, 4, "q"): (31.11, "printed 3.111: decimal shifted"),
    (5, 4, "s"): (14.85, "printed 1.485: decimal shifted"),
    (5, 4, "q"): (16.97, "printed 1.697: decimal shifted"),
    (6, 4, "q"): (31.82, "printed 3.182: decimal shifted"),
}

SWEEP_TOL = 1e-2

# ---------------------------------------------------------------------------
# Reference projection-statistics results (3-bus): PS value, cutoff, dof.
# The PS values are reproduced for display only; the variant behind them is
# not derivable, so the check is classification-level.
# ---------------------------------------------------------------------------

PS_REFERENCE: tuple[tuple[float, float, int], ...] = (
    (16.77, 7.378, 2),
    (0.839, 5.024, 1),
    (0.839, 5.024, 1),
    (0.839, 5.024, 1),
    (0.839, 5.024, 1),
    (17.609, 7.378, 2),
    (1.677, 7.378, 2),
)
PS_REFERENCE_FLAGGED = (0, 5)

# ---------------------------------------------------------------------------
# Reference 14-bus partitioned classification: per measurement, whether its
# reference run was biased by a gross error, and the verdict in each
# partition ("LP" = leverage point, "clean" = analyzed and unflagged,
# None = not a member of that partition).
# ---------------------------------------------------------------------------

IEEE14_REFERENCE: tuple[tuple[str, bool, Optional[str], Optional[str]], ...] = (
    ("|V1|", False, "clean", None),
    ("P_inj3", True, "LP", None),
    ("Q_inj3", True, "LP", None),
    ("P_inj2", True, "LP", None),
    ("Q_inj2", True, "LP", None),
    ("P_inj1", False, "clean", None),
    ("Q_inj1", False, "clean", None),
    ("P_inj4", True, "LP", None),
    ("Q_inj4", True, "LP", None),
    ("P_flow5-4", True, "LP", None),
    ("Q_flow5-4", True, "LP", None),
    ("P_flow2-3", False, "clean", None),
    ("Q_flow2-3", False, "clean", None),
    ("P_flow1-2", False, "clean", None),
    ("Q_flow1-2", False, "clean", None),
    ("P_flow2-5", False, "clean", None),
    ("Q_flow2-5", False, "clean", None),
    ("P_inj14", True, None, "LP"),
    ("Q_inj14", True, None, "LP"),
    ("P_inj10", False, None, "clean"),
    ("Q_inj10", False, None, "clean"),
    ("P_inj8", True, "LP", "LP"),
    ("Q_inj8", False, "clean", "clean"),
    ("P_inj12", True, None, "LP"),
    ("Q_inj12", True, None, "LP"),
    ("P_inj13", False, None, "clean"),
    ("Q_inj13", False, None, "clean"),
    ("P_flow12-13", False, None, "clean"),
    ("Q_flow12-13", False, None, "clean"),
    ("P_flow13-14", False, None, "clean"),
    ("Q_flow13-14", False, None, "clean"),
    ("P_flow6-13", False, None, "clean"),
    ("Q_flow6-13", False, None, "clean"),
    ("P_flow10-9", False, None, "clean"),
    ("Q_flow10-9", False, None, "clean"),
    ("P_flow11-10", False, None, "clean"),
    ("Q_flow11-10", False, None, "clean"),
    ("P_flow6-11", True, None, "LP"),
    ("Q_flow6-11", True, None, "LP"),
    ("P_flow9-7", True, "LP", "LP"),
    ("Q_flow9-7", True, "LP", "LP"),
    ("P_flow7-8", False, "LP", "LP"),
    ("Q_flow7-8", False, "clean", "clean"),
    ("|V8|", False, "clean", "LP"),
)

# A witness with |s - q| within this relative band of q counts as an exact
# tie; ties sit on the boundary between the strict and non-strict reading
# of the inequality and are compatible with either reference verdict.
TIE_TOL = 1e-9


# ---------------------------------------------------------------------------
# Direction sweep.
# ---------------------------------------------------------------------------


@dataclass
class SweepCell:
    row: int
    direction: int
    lemma_s: float                # sum_{i != j} |h_i . v|
    lemma_q: float                # |h_j . v|
    printed_s: float              # printed cell feeding lemma_q (column swap)
    printed_q: float              # printed cell feeding lemma_s
    target_s: float               # after errata correction
    target_q: float
    erratum: Optional[str]
    match: bool


@dataclass
class SweepResult:
    cells: list[SweepCell]
    printed_consistency: list[float]     # per direction, max sum-identity violation
    corrected_consistency: list[float]
    errata_applied: list[tuple[int, int, str]]
    passed: bool

    def mismatches(self) -> list[SweepCell]:
        return [c for c in self.cells if not c.match]

    def render(self) -> str:
        lines = ["row  direction                lemma_s    lemma_q   printed(s,q)    match"]
        for c in self.cells:
            d = SWEEP_DIRECTIONS[c.direction]
            note = f"  [{c.erratum}]" if c.erratum else ""
            lines.append(
                f"h{c.row + 1}   ({d[0]: .3f},{d[1]: .3f})   {c.lemma_s:8.4g}   {c.lemma_q:8.4g}"
                f"   ({c.printed_s:.4g}, {c.printed_q:.4g})   {'ok' if c.match else 'MISMATCH'}{note}"
            )
        lines.append(f"printed sum-identity violation per direction: "
                     f"{[round(x, 3) for x in self.printed_consistency]}")
        lines.append(f"after errata correction:                      "
                     f"{[round(x, 3) for x in self.corrected_consistency]}")
        lines.append(f"PASS: {self.passed}")
        return "\n".join(lines)


def sweep_values(model: MeasurementModel, direction) -> tuple[np.ndarray, np.ndarray]:
    """(lemma_s, lemma_q) per row for one direction."""
    v = np.asarray(direction, dtype=float)
    proj = np.abs(model.h @ v)
    total = proj.sum()
    return total - proj, proj


def sweep_column_consistency(pairs: Sequence[tuple[float, float]]) -> float:
    """Max violation of the identity q_j = sum_k(s_k) - s_j within a column.

    Each column of the printed table must satisfy it up to rounding; the
    misprinted column violates it by more than a factor-of-rounding amount,
    which is how the errata are substantiated without external data.
    """
    s_col = [p[0] for p in pairs]
    total = sum(s_col)
    return max(abs(q - (total - s)) for s, q in pairs)


def reproduce_table4(model: Optional[MeasurementModel] = None) -> SweepResult:
    """Compare the 3-bus direction sweep against the printed reference."""
    model = model or fixture_model("threebus-dc")
    cells: list[SweepCell] = []
    errata_applied = []
    for k in range(len(SWEEP_DIRECTIONS)):
        lemma_s, lemma_q = sweep_values(model, SWEEP_DIRECTIONS[k])
        for j in range(model.m):
            printed_s, printed_q = SWEEP_PRINTED[k][j]
            target_s, target_q = printed_s, printed_q
            notes = []
            if (j, k, "s") in SWEEP_ERRATA:
                target_s, note = SWEEP_ERRATA[(j, k, "s")]
                notes.append(note)
                errata_applied.append((j, k, "s"))
            if (j, k, "q") in SWEEP_ERRATA:
                target_q, note = SWEEP_ERRATA[(j, k, "q")]
                notes.append(note)
                errata_applied.append((j, k, "q"))
            match = (abs(lemma_q[j] - target_s) <= SWEEP_TOL + 1e-12
                     and abs(lemma_s[j] - target_q) <= SWEEP_TOL + 1e-12)
            cells.append(SweepCell(
                row=j, direction=k,
                lemma_s=float(lemma_s[j]), lemma_q=float(lemma_q[j]),
                printed_s=printed_s, printed_q=printed_q,
                target_s=target_s, target_q=target_q,
                erratum="; ".join(notes) or None, match=match,
            ))

    printed_consistency = [sweep_column_consistency(SWEEP_PRINTED[k])
                           for k in range(len(SWEEP_DIRECTIONS))]
    corrected = []
    for k in range(len(SWEEP_DIRECTIONS)):
        pairs = []
        for j in range(model.m):
            s_t = SWEEP_ERRATA.get((j, k, "s"), (SWEEP_PRINTED[k][j][0],))[0]
            q_t = SWEEP_ERRATA.get((j, k, "q"), (SWEEP_PRINTED[k][j][1],))[0]
            pairs.append((s_t, q_t))
        corrected.append(sweep_column_consistency(pairs))

    # The correction is legitimate only if the printed misprinted column
    # really breaks the sum identity while the corrected one restores it.
    errata_justified = (
        max(printed_consistency[:4]) <= 0.05
        and printed_consistency[4] >= 1.0
        and max(corrected) <= 0.05
    )
    passed = errata_justified and all(c.match for c in cells)
    return SweepResult(cells, printed_consistency, corrected,
                       errata_applied, passed)


# ---------------------------------------------------------------------------
# Projection statistics comparison.
# ---------------------------------------------------------------------------


@dataclass
class PSComparison:
    labels: tuple[str, ...]
    computed_ps: np.ndarray
    computed_cutoff: np.ndarray
    computed_dof: np.ndarray
    computed_flagged: tuple[int, ...]
    reference_ps: tuple[float, ...]
    reference_flagged: tuple[int, ...]
    variant: str
    passed: bool

    def render(self) -> str:
        lines = ["measurement   ours_PS   ref_PS   cutoff  d  flagged(ours/ref)"]
        for i, lab in enumerate(self.labels):
            lines.append(
                f"{lab:<12} {self.computed_ps[i]:9.4g} {self.reference_ps[i]:8.4g}"
                f" {self.computed_cutoff[i]:8.4g} {self.computed_dof[i]:2d}"
                f"  {'yes' if i in self.computed_flagged else 'no'}/"
                f"{'yes' if i in self.reference_flagged else 'no'}"
            )
        lines.append("note: PS values are variant-dependent and compared at the "
                     "classification level only; cutoffs and dof are exact")
        lines.append(f"PASS: {self.passed}")
        return "\n".join(lines)


def reproduce_table2(model: Optional[MeasurementModel] = None) -> PSComparison:
    """Classification-level check of projection statistics on the 3-bus model."""
    model = model or fixture_model("threebus-dc")
    report = compute_ps(model)
    flagged = tuple(int(i) for i in np.flatnonzero(report.flagged))
    ref_ps = tuple(row[0] for row in PS_REFERENCE)
    ref_cutoff = np.array([row[1] for row in PS_REFERENCE])
    ref_dof = np.array([row[2] for row in PS_REFERENCE])
    passed = (
        flagged == PS_REFERENCE_FLAGGED
        and np.array_equal(report.dof, ref_dof)
        and np.all(np.abs(np.round(report.cutoff, 3) - ref_cutoff) <= 5e-4)
    )
    return PSComparison(
        labels=model.labels,
        computed_ps=report.ps,
        computed_cutoff=report.cutoff,
        computed_dof=report.dof,
        computed_flagged=flagged,
        reference_ps=ref_ps,
        reference_flagged=PS_REFERENCE_FLAGGED,
        variant=report.variant,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# 14-bus partitioned classification comparison.
# ---------------------------------------------------------------------------


@dataclass
class Ieee14Row:
    label: str
    biased: bool
    reference: dict[str, Optional[str]]     # partition -> "LP"/"clean"/None
    ours: dict[str, Optional[str]]          # partition -> verdict/None
    merged_reference_flagged: bool
    merged_ours: str
    exact_tie: bool
    outcome: str                            # "match" / "tie" / "mismatch"


@dataclass
class Ieee14Result:
    rows: list[Ieee14Row]
    report: PartitionedReport
    agreement_conservative: float    # boundary counted as flagged
    agreement_strict: float          # only leverage counted as flagged
    agreement_tie_aware: float       # exact-tie boundary rows match either verdict
    strict_false_positives: list[str]
    strict_false_negatives: list[str]
    non_tie_boundaries: list[str]
    data_independent: bool
    passed: bool

    def render(self) -> str:
        lines = ["measurement   ref(blue/red)        ours(blue/red)           outcome"]
        for r in self.rows:
            ref = f"{r.reference.get('blue') or '.':<6}/{r.reference.get('red') or '.':<6}"
            got = f"{r.ours.get('blue') or '.':<9}/{r.ours.get('red') or '.':<9}"
            lines.append(f"{r.label:<13} {ref:<20} {got:<24} {r.outcome}")
        lines.append(f"agreement: conservative={self.agreement_conservative:.3f} "
                     f"strict={self.agreement_strict:.3f} tie-aware={self.agreement_tie_aware:.3f}")
        lines.append(f"strict false positives: {self.strict_false_positives or 'none'}")
        lines.append(f"strict false negatives: {self.strict_false_negatives or 'none'}")
        lines.append(f"flags invariant under injected gross errors: {self.data_independent}")
        lines.extend(self.report.consistency_notes)
        lines.append(f"PASS: {self.passed}")
        return "\n".join(lines)


def ieee14_partitions(model: MeasurementModel) -> list[Partition]:
    """Blue/red membership derived from the bundled reference classification."""
    blue = tuple(i for i, row in enumerate(IEEE14_REFERENCE) if row[2] is not None)
    red = tuple(i for i, row in enumerate(IEEE14_REFERENCE) if row[3] is not None)
    assert tuple(r[0] for r in IEEE14_REFERENCE) == model.labels
    return [Partition("blue", blue), Partition("red", red)]


def reproduce_table1(model: Optional[MeasurementModel] = None,
                     partitions: Optional[Sequence[Partition]] = None,
                     gross_error: float = 10.0) -> Ieee14Result:
    """Partitioned detection on the 14-bus model against its reference verdicts.

    Agreement is reported under three mappings of the three-way verdict to
    the reference's binary one.  Exact-tie boundary rows (s equals q to
    machine precision) are knife-edge cases: the strict form of the
    inequality rejects them and the non-strict form accepts them, so under
    the tie-aware count they are compatible with either reference verdict.
    The data-independence check re-runs detection after injecting gross
    errors on every reference-biased row and requires identical verdicts.
    """
    model = model or fixture_model("ieee14-dc")
    partitions = list(partitions) if partitions is not None else ieee14_partitions(model)
    report = detect_partitioned(model, partitions)

    ours: dict[str, dict[str, str]] = {}
    ties: dict[str, bool] = {}
    for part, rep in report.partition_reports:
        for local, gi in enumerate(part.measurement_indices):
            lab = model.labels[gi]
            verdict = rep.verdicts[local]
            ours.setdefault(lab, {})[part.name] = verdict
            if verdict == BOUNDARY:
                w = rep.witnesses[local]
                tie = abs(w.s - w.q) <= TIE_TOL * max(1.0, w.q)
                ties[lab] = ties.get(lab, True) and tie

    rows: list[Ieee14Row] = []
    cons_hits = strict_hits = tie_hits = 0
    strict_fp: list[str] = []
    strict_fn: list[str] = []
    non_tie: list[str] = []
    for label, biased, ref_blue, ref_red in IEEE14_REFERENCE:
        ref = {"blue": ref_blue, "red": ref_red}
        got = ours.get(label, {})
        ref_flag = "LP" in (ref_blue, ref_red)
        verdicts = set(got.values())
        merged = (LEVERAGE if LEVERAGE in verdicts
                  else BOUNDARY if BOUNDARY in verdicts
                  else CLEAN)
        conservative_flag = merged in (LEVERAGE, BOUNDARY)
        strict_flag = merged == LEVERAGE
        exact_tie = merged == BOUNDARY and ties.get(label, False)

        if conservative_flag == ref_flag:
            cons_hits += 1
        if strict_flag == ref_flag:
            strict_hits += 1
        if merged == BOUNDARY:
            if not exact_tie:
                non_tie.append(label)
                outcome = "mismatch"
            else:
                tie_hits += 1
                outcome = "tie" if strict_flag != ref_flag or conservative_flag != ref_flag else "match"
        elif strict_flag == ref_flag:
            tie_hits += 1
            outcome = "match"
        else:
            outcome = "mismatch"
            if strict_flag and not ref_flag:
                strict_fp.append(label)
            if ref_flag and not strict_flag:
                strict_fn.append(label)

        rows.append(Ieee14Row(
            label=label, biased=biased, reference=ref, ours=got,
            merged_reference_flagged=ref_flag, merged_ours=merged,
            exact_tie=exact_tie, outcome=outcome,
        ))

    n = len(IEEE14_REFERENCE)
    corrupted = inject_gross_errors(
        model, [GrossErrorSpec(label, gross_error)
                for label, biased, _, _ in IEEE14_REFERENCE if biased])
    report2 = detect_partitioned(corrupted, partitions)
    data_independent = all(
        r1.verdicts == r2.verdicts
        for (_, r1), (_, r2) in zip(report.partition_reports, report2.partition_reports)
    )

    agreement_tie_aware = tie_hits / n
    passed = (
        data_independent
        and agreement_tie_aware >= 0.9
        and not strict_fp
        and not strict_fn
        and not non_tie
    )
    return Ieee14Result(
        rows=rows,
        report=report,
        agreement_conservative=cons_hits / n,
        agreement_strict=strict_hits / n,
        agreement_tie_aware=agreement_tie_aware,
        strict_false_positives=strict_fp,
        strict_false_negatives=strict_fn,
        non_tie_boundaries=non_tie,
        data_independent=data_independent,
        passed=passed,
    )


# ---------------------------------------------------------------------------
# Randomized extra-row study.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCConfig:
    """Configuration of the random extra-row study.

    A random row is appended to the 3-bus matrix, measurements are
    synthesized from random states, a gross error is added to the extra
    row's measurement, and the detector's verdict on that row is compared
    with whether the estimate actually deviates from the generating states.
    """

    trials: int
    seed: int
    row_mean: float = 0.0
    row_variance: float = 30.0
    state_variance: float = 1.0
    gross_error: float = 10.0
    boundary_band: float = 0.05
    deviation_tol: float = 0.1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.row_variance <= 0 or self.state_variance <= 0:
            raise ValueError("variances must be positive")


@dataclass
class MCTrialRecord:
    extra_row: np.ndarray
    detector_flagged: bool
    lav_deviated: bool
    s_q_margin: float
    near_boundary: bool
    skipped: bool = False


def single_trial(base: MeasurementModel, extra_row, theta_true,
                 cfg: MCConfig) -> MCTrialRecord:
    """Run one augmented-model trial; pure given its inputs."""
    extra_row = np.asarray(extra_row, dtype=float)
    theta_true = np.asarray(theta_true, dtype=float)
    if not np.any(extra_row):
        return MCTrialRecord(extra_row, False, False, float("nan"), False, skipped=True)

    h_aug = np.vstack([base.h, extra_row])
    labels = base.labels + ("extra_row",)
    z = h_aug @ theta_true
    z[-1] += cfg.gross_error
    aug = MeasurementModel(h_aug, z, labels)

    j = aug.m - 1
    witness = detect_row(aug, j)
    margin, _ = leverage_margin(aug, j)
    solution = solve_lav(aug)
    deviated = bool(np.max(np.abs(solution.theta_hat - theta_true)) > cfg.deviation_tol)
    return MCTrialRecord(
        extra_row=extra_row,
        detector_flagged=witness is not None,
        lav_deviated=deviated,
        s_q_margin=margin,
        near_boundary=abs(margin) < cfg.boundary_band,
    )


def run_monte_carlo(base: Optional[MeasurementModel], cfg: MCConfig,
                    csv_path=None) -> list[MCTrialRecord]:
    """Seeded trials of ``single_trial``; optionally emits a CSV.

    CSV columns: h81, h82, flagged, deviated, margin.  Skipped trials
    (identically zero extra row, probability zero under the Gaussian draw)
    are kept in the returned list but omitted from the CSV.
    """
    base = base or fixture_model("threebus-dc")
    rng = np.random.default_rng(cfg.seed)
    records = []
    for _ in range(cfg.trials):
        extra = rng.normal(cfg.row_mean, math.sqrt(cfg.row_variance), size=base.n)
        theta = rng.normal(0.0, math.sqrt(cfg.state_variance), size=base.n)
        records.append(single_trial(base, extra, theta, cfg))
    if csv_path is not None:
        write_mc_csv(records, cfg, csv_path)
    return records


def write_mc_csv(records: Sequence[MCTrialRecord], cfg: MCConfig, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# trials={cfg.trials} seed={cfg.seed} row_variance={cfg.row_variance} "
                 f"state_variance={cfg.state_variance} gross_error={cfg.gross_error} "
                 f"deviation_tol={cfg.deviation_tol} boundary_band={cfg.boundary_band}\n")
        writer = csv.writer(fh)
        writer.writerow(["h81", "h82", "flagged", "deviated", "margin"])
        for rec in records:
            if rec.skipped:
                continue
            writer.writerow([
                f"{rec.extra_row[0]:.17g}", f"{rec.extra_row[1]:.17g}",
                int(rec.detector_flagged), int(rec.lav_deviated),
                f"{rec.s_q_margin:.17g}",
            ])


def agreement_rate(records: Sequence[MCTrialRecord]) -> float:
    """Fraction of detector/deviation agreement outside the boundary band."""
    eligible = [r for r in records if not r.skipped and not r.near_boundary]
    if not eligible:
        return float("nan")
    hits = sum(r.detector_flagged == r.lav_deviated for r in eligible)
    return hits / len(eligible)


@dataclass
class MCResult:
    records: list[MCTrialRecord]
    agreement: float
    eligible: int
    passed: bool

    def render(self) -> str:
        flagged = sum(r.detector_flagged for r in self.records if not r.skipped)
        deviated = sum(r.lav_deviated for r in self.records if not r.skipped)
        return "\n".join([
            f"trials: {len(self.records)} (flagged {flagged}, deviated {deviated})",
            f"agreement outside boundary band: {self.agreement:.4f} over {self.eligible} trials",
            f"PASS: {self.passed}",
        ])


def reproduce_mc(trials: int = 2000, seed: int = 20260809,
                 csv_path=None) -> MCResult:
    """Detector-vs-deviation agreement >= 95% outside a 5% boundary band."""
    cfg = MCConfig(trials=trials, seed=seed)
    records = run_monte_carlo(None, cfg, csv_path=csv_path)
    eligible = [r for r in records if not r.skipped and not r.near_boundary]
    agreement = agreement_rate(records)
    return MCResult(records, agreement, len(eligible), passed=agreement >= 0.95)
