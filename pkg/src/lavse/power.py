"""Power-network descriptions and measurement-model builders.

Two builders are provided.  The DC builder produces the classical
decoupled linearization: active-power rows couple bus angles through line
susceptances 1/x, reactive/voltage rows mirror that structure on the
magnitude block, and the reference bus angle column is removed.  The PMU
builder expresses current phasor measurements in rectangular coordinates,
where the relation to the voltage phasors is exactly linear for lossless
lines, and yields a block-diagonal matrix (real currents against imaginary
voltages, and vice versa).

Bundled fixtures: ``threebus-dc``, ``threebus-pmu`` and ``ieee14-dc``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DisconnectedBus,
    InvalidArgument,
    ParseError,
    UnsupportedKind,
)
from .model import MeasurementModel

DC_KINDS = {"pflow", "qflow", "pinj", "qinj", "vmag"}
PMU_KINDS = {"iflow_re", "iflow_im", "iinj_re", "iinj_im", "vre", "vim"}
_FLOW_KINDS = {"pflow", "qflow", "iflow_re", "iflow_im"}
_BUS_KINDS = {"pinj", "qinj", "vmag", "iinj_re", "iinj_im", "vre", "vim"}

FIXTURES = ("threebus-dc", "threebus-pmu", "ieee14-dc")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    x: float
    r: float = 0.0


@dataclass(frozen=True)
class MeasurementSpec:
    kind: str
    label: str
    bus: Optional[int] = None
    from_bus: Optional[int] = None
    to_bus: Optional[int] = None


@dataclass(frozen=True)
class GrossErrorSpec:
    label: str
    magnitude: float


@dataclass
class NetworkModel:
    """Buses, lines and measurement points of a study network."""

    buses: list[int]
    reference_bus: int
    lines: list[Line]
    measurements: list[MeasurementSpec]

    def __post_init__(self):
        bus_set = set(self.buses)
        if len(bus_set) != len(self.buses):
            raise InvalidArgument("bus ids must be unique")
        if self.reference_bus not in bus_set:
            raise InvalidArgument(f"reference bus {self.reference_bus} not in bus list")
        for ln in self.lines:
            if ln.from_bus not in bus_set or ln.to_bus not in bus_set:
                raise InvalidArgument(f"line {ln.from_bus}-{ln.to_bus} references unknown bus")
            if not ln.x > 0:
                raise InvalidArgument(f"line {ln.from_bus}-{ln.to_bus} needs x > 0")
        labels = [spec.label for spec in self.measurements]
        if len(set(labels)) != len(labels):
            raise InvalidArgument("measurement labels must be unique")
        for spec in self.measurements:
            if spec.kind in _FLOW_KINDS:
                if spec.from_bus is None or spec.to_bus is None:
                    raise InvalidArgument(f"{spec.label}: flow measurements need from/to buses")
                if self._line_between(spec.from_bus, spec.to_bus) is None:
                    raise InvalidArgument(f"{spec.label}: no line between "
                                          f"{spec.from_bus} and {spec.to_bus}")
            elif spec.kind in _BUS_KINDS:
                if spec.bus is None or spec.bus not in bus_set:
                    raise InvalidArgument(f"{spec.label}: unknown bus {spec.bus}")
            else:
                raise InvalidArgument(f"{spec.label}: unknown measurement kind {spec.kind!r}")

    def _line_between(self, a: int, b: int) -> Optional[Line]:
        for ln in self.lines:
            if {ln.from_bus, ln.to_bus} == {a, b}:
                return ln
        return None

    def incident_lines(self, bus: int) -> list[Line]:
        return [ln for ln in self.lines if bus in (ln.from_bus, ln.to_bus)]


def _check_connected_buses(net: NetworkModel) -> None:
    for bus in net.buses:
        if not net.incident_lines(bus):
            raise DisconnectedBus(f"bus {bus} has no incident line")


def _synthesize_z(h: np.ndarray, states) -> np.ndarray:
    if states is None:
        return np.zeros(h.shape[0])
    states = np.asarray(states, dtype=float).reshape(-1)
    if states.shape != (h.shape[1],):
        raise DimensionMismatch(
            f"states vector has length {states.shape[0]}, expected {h.shape[1]}")
    return h @ states


def build_dc_model(net: NetworkModel, states=None) -> MeasurementModel:
    """Decoupled linear model for P/Q/voltage-magnitude measurements.

    Flow i->j contributes +1/x at the sending bus column and -1/x at the
    receiving one; an injection row is literally the sum of the flow rows
    leaving its bus.  Angle columns omit the reference bus, magnitude
    columns keep every bus (voltage measurements pin the level).  z is
    synthesized as H @ states when states are supplied, else zeros.
    """
    bad = [s.label for s in net.measurements if s.kind not in DC_KINDS]
    if bad:
        raise UnsupportedKind(f"not a DC measurement kind: {', '.join(bad)}")
    _check_connected_buses(net)

    want_theta = any(s.kind in ("pflow", "pinj") for s in net.measurements)
    want_vm = any(s.kind in ("qflow", "qinj", "vmag") for s in net.measurements)
    theta_buses = [b for b in net.buses if b != net.reference_bus] if want_theta else []
    vm_buses = list(net.buses) if want_vm else []
    theta_col = {b: i for i, b in enumerate(theta_buses)}
    vm_col = {b: len(theta_buses) + i for i, b in enumerate(vm_buses)}
    n = len(theta_buses) + len(vm_buses)

    def flow_row(f: int, t: int, block: dict[int, int]) -> np.ndarray:
        ln = net._line_between(f, t)
        row = np.zeros(n)
        b = 1.0 / ln.x
        if f in block:
            row[block[f]] += b
        if t in block:
            row[block[t]] -= b
        return row

    rows = []
    for spec in net.measurements:
        if spec.kind == "pflow":
            rows.append(flow_row(spec.from_bus, spec.to_bus, theta_col))
        elif spec.kind == "qflow":
            rows.append(flow_row(spec.from_bus, spec.to_bus, vm_col))
        elif spec.kind in ("pinj", "qinj"):
            block = theta_col if spec.kind == "pinj" else vm_col
            row = np.zeros(n)
            for ln in net.incident_lines(spec.bus):
                other = ln.to_bus if ln.from_bus == spec.bus else ln.from_bus
                row += flow_row(spec.bus, other, block)
            rows.append(row)
        else:  # vmag
            row = np.zeros(n)
            row[vm_col[spec.bus]] = 1.0
            rows.append(row)

    h = np.array(rows)
    labels = tuple(s.label for s in net.measurements)
    state_labels = tuple(f"theta_{b}" for b in theta_buses) + tuple(f"vm_{b}" for b in vm_buses)
    return MeasurementModel(h, _synthesize_z(h, states), labels,
                            true_states=states, state_labels=state_labels)


def build_pmu_model(net: NetworkModel, states=None) -> MeasurementModel:
    """Exactly linear phasor model in rectangular coordinates.

    For lossless lines a current flow received at bus i from bus j is
    (V_j - V_i) / (j x); its real part therefore reads imaginary voltage
    differences and its imaginary part real voltage differences, so the
    model splits into two decoupled blocks.  Injections sum the incident
    flows; voltage component measurements are identity rows.  Rows are
    ordered imaginary-voltage block first, preserving input order inside
    each block.
    """
    bad = [s.label for s in net.measurements if s.kind not in PMU_KINDS]
    if bad:
        raise UnsupportedKind(f"not a PMU measurement kind: {', '.join(bad)}")
    _check_connected_buses(net)
    im_model, re_model = pmu_blocks(net)

    n1 = 0 if im_model is None else im_model.n
    n2 = 0 if re_model is None else re_model.n
    blocks = [b for b in (im_model, re_model) if b is not None]
    h = np.zeros((sum(b.m for b in blocks), n1 + n2))
    row0 = 0
    if im_model is not None:
        h[:im_model.m, :n1] = im_model.h
        row0 = im_model.m
    if re_model is not None:
        h[row0:, n1:] = re_model.h
    labels = tuple(lab for b in blocks for lab in b.labels)
    state_labels = tuple(lab for b in blocks for lab in (b.state_labels or ()))
    return MeasurementModel(h, _synthesize_z(h, states), labels,
                            true_states=states, state_labels=state_labels)


def pmu_blocks(net: NetworkModel) -> tuple[Optional[MeasurementModel], Optional[MeasurementModel]]:
    """The two decoupled submodels of ``build_pmu_model``.

    Returns (imaginary-voltage block, real-voltage block); a block with no
    measurements is returned as None.
    """
    im_specs = [s for s in net.measurements if s.kind in ("vim", "iflow_re", "iinj_re")]
    re_specs = [s for s in net.measurements if s.kind in ("vre", "iflow_im", "iinj_im")]

    def build_block(specs: list[MeasurementSpec], part: str) -> Optional[MeasurementModel]:
        if not specs:
            return None
        col = {b: i for i, b in enumerate(net.buses)}
        n = len(net.buses)
        # Received-current convention: flow f->t reads (V_t - V_f)/x on the
        # imaginary block and (V_f - V_t)/x on the real one.
        sign = 1.0 if part == "im" else -1.0

        def flow_row(f: int, t: int) -> np.ndarray:
            ln = net._line_between(f, t)
            row = np.zeros(n)
            b = 1.0 / ln.x
            row[col[t]] += sign * b
            row[col[f]] -= sign * b
            return row

        rows = []
        for spec in specs:
            if spec.kind in ("vim", "vre"):
                row = np.zeros(n)
                row[col[spec.bus]] = 1.0
                rows.append(row)
            elif spec.kind in ("iflow_re", "iflow_im"):
                rows.append(flow_row(spec.from_bus, spec.to_bus))
            else:  # injections: sum of received flows at the bus
                row = np.zeros(n)
                for ln in net.incident_lines(spec.bus):
                    other = ln.to_bus if ln.from_bus == spec.bus else ln.from_bus
                    row += flow_row(spec.bus, other)
                rows.append(row)
        suffix = "_im" if part == "im" else "_re"
        state_labels = tuple(f"v{b}{suffix}" for b in net.buses)
        h = np.array(rows)
        return MeasurementModel(h, np.zeros(len(rows)), tuple(s.label for s in specs),
                                state_labels=state_labels)

    return build_block(im_specs, "im"), build_block(re_specs, "re")


def inject_gross_errors(model: MeasurementModel,
                        errors: Sequence[GrossErrorSpec]) -> MeasurementModel:
    """Copy of the model with additive errors applied to z; H is untouched."""
    z = model.z.copy()
    for err in errors:
        z[model.row_index(err.label)] += err.magnitude
    return model.with_z(z)


# ---------------------------------------------------------------------------
# Network file format and bundled fixtures.
# ---------------------------------------------------------------------------


def network_to_dict(net: NetworkModel) -> dict:
    meas = []
    for s in net.measurements:
        entry = {"kind": s.kind, "label": s.label}
        if s.bus is not None:
            entry["bus"] = s.bus
        if s.from_bus is not None:
            entry["from"] = s.from_bus
            entry["to"] = s.to_bus
        meas.append(entry)
    return {
        "buses": list(net.buses),
        "reference": net.reference_bus,
        "lines": [{"from": ln.from_bus, "to": ln.to_bus, "x": ln.x, "r": ln.r}
                  for ln in net.lines],
        "measurements": meas,
    }


def network_from_dict(doc: dict) -> NetworkModel:
    if not isinstance(doc, dict):
        raise ParseError("network document must be a JSON object")
    for key in ("buses", "reference", "lines", "measurements"):
        if key not in doc:
            raise ParseError(f"network document missing field {key!r}")
    try:
        lines = [Line(int(d["from"]), int(d["to"]), float(d["x"]), float(d.get("r", 0.0)))
                 for d in doc["lines"]]
        measurements = [
            MeasurementSpec(
                kind=str(d["kind"]),
                label=str(d["label"]),
                bus=None if d.get("bus") is None else int(d["bus"]),
                from_bus=None if d.get("from") is None else int(d["from"]),
                to_bus=None if d.get("to") is None else int(d["to"]),
            )
            for d in doc["measurements"]
        ]
        return NetworkModel(
            buses=[int(b) for b in doc["buses"]],
            reference_bus=int(doc["reference"]),
            lines=lines,
            measurements=measurements,
        )
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, InvalidArgument):
            raise
        raise ParseError(f"bad network document: {err}") from None


def load_network(path) -> NetworkModel:
    with open(path) as fh:
        doc = json.load(fh)
    return network_from_dict(doc)


def save_network(net: NetworkModel, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=2) + "\n")


def fixture_network(name: str) -> NetworkModel:
    """Load a bundled network by name (see FIXTURES)."""
    if name not in FIXTURES:
        raise InvalidArgument(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    fname = name.replace("-", "_") + ".json"
    with resources.files("lavse.data").joinpath(fname).open() as fh:
        return network_from_dict(json.load(fh))


def fixture_model(name: str, states=None) -> MeasurementModel:
    """Build the measurement model of a bundled fixture."""
    net = fixture_network(name)
    if name.endswith("-pmu"):
        return build_pmu_model(net, states)
    return build_dc_model(net, states)
