"""Joint-sparse signal ensembles with full-common, partial-common and
innovation components.

An ensemble of ``J`` length-``N`` signals is built from sparse components.
Each component is measured by a set of sensors: the full common component by
all of them, a partial common component by a strict subset of size >= 2, and
an innovation component by exactly one sensor.  Sensor indices and support
indices are 0-based throughout.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

FULL_COMMON = "full-common"
PARTIAL_COMMON = "partial-common"
INNOVATION = "innovation"

# values closer to zero than this are redrawn so that "nonzero" is testable
MIN_VALUE_MAGNITUDE = 1e-12


def _as_sensor_tuple(sensors: Iterable[int], num_sensors: int) -> tuple[int, ...]:
    out = tuple(sorted(int(j) for j in sensors))
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate sensor indices in {out}")
    if out and (out[0] < 0 or out[-1] >= num_sensors):
        raise ValueError(f"sensor indices {out} out of range for {num_sensors} sensors")
    return out


@dataclass(frozen=True)
class Component:
    """One information component: its kind and the sensors measuring it."""

    kind: str
    sensors: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in (FULL_COMMON, PARTIAL_COMMON, INNOVATION):
            raise ValueError(f"unknown component kind {self.kind!r}")
        object.__setattr__(self, "sensors", tuple(sorted(self.sensors)))

    @property
    def is_shared(self) -> bool:
        """True for components measured by more than one sensor."""
        return self.kind != INNOVATION


class GroupLabel(enum.Enum):
    """Relation of a component's sensor group to a sensor subset.

    EXCLUSIVE: every measuring sensor lies inside the subset, so the
    component can only be recovered from the subset's measurements.
    SHARED: the sensor group straddles the subset boundary.
    UNRELATED: no measuring sensor lies inside the subset.
    """

    EXCLUSIVE = 1
    SHARED = 2
    UNRELATED = 3


def classify_component(component: Component, gamma: Iterable[int], num_sensors: int) -> GroupLabel:
    """Classify a component against the sensor subset ``gamma``."""
    g = _as_sensor_tuple(gamma, num_sensors)
    inter = set(component.sensors) & set(g)
    if inter == set(component.sensors):
        return GroupLabel.EXCLUSIVE
    if not inter:
        return GroupLabel.UNRELATED
    return GroupLabel.SHARED


@dataclass(frozen=True)
class CorrelationStructure:
    """Which sensor groups share information: at most one full common
    component, any number of distinct partial common groups, and exactly one
    innovation per sensor.

    ``components`` is kept in canonical order: full common first (if
    present), then partial commons in declaration order, then innovations by
    sensor index.  Column layouts elsewhere rely on this order.
    """

    num_sensors: int
    signal_length: int
    components: tuple[Component, ...]

    @property
    def partial_sets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(c.sensors for c in self.components if c.kind == PARTIAL_COMMON)

    @property
    def has_full_common(self) -> bool:
        return any(c.kind == FULL_COMMON for c in self.components)

    @property
    def shared_sets(self) -> tuple[tuple[int, ...], ...]:
        """Sensor groups of all shared (non-innovation) components."""
        return tuple(c.sensors for c in self.components if c.is_shared)


def build_structure(
    num_sensors: int,
    signal_length: int,
    partial_sets: Sequence[Iterable[int]] = (),
    include_full_common: bool = False,
) -> CorrelationStructure:
    """Assemble a correlation structure from its sensor groups.

    Each partial set must satisfy ``1 < len(set) < num_sensors`` and the sets
    must be pairwise distinct.
    """
    if num_sensors < 2:
        raise ValueError(f"need at least 2 sensors, got {num_sensors}")
    if signal_length < 1:
        raise ValueError(f"signal length must be positive, got {signal_length}")
    comps: list[Component] = []
    if include_full_common:
        comps.append(Component(FULL_COMMON, tuple(range(num_sensors))))
    seen: set[tuple[int, ...]] = set()
    for raw in partial_sets:
        s = _as_sensor_tuple(raw, num_sensors)
        if not 1 < len(s) < num_sensors:
            raise ValueError(
                f"partial common set {s} must contain more than one sensor "
                f"and fewer than all {num_sensors}"
            )
        if s in seen:
            raise ValueError(f"duplicate partial common set {s}")
        seen.add(s)
        comps.append(Component(PARTIAL_COMMON, s))
    for j in range(num_sensors):
        comps.append(Component(INNOVATION, (j,)))
    return CorrelationStructure(num_sensors, signal_length, tuple(comps))


@dataclass(frozen=True)
class ComponentSignal:
    """A component's sparse content: support indices and aligned values."""

    component: Component
    support: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(s) for s in self.support))
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if len(self.support) != values.shape[0]:
            raise ValueError("support and values must have equal length")
        if len(set(self.support)) != len(self.support):
            raise ValueError("support indices must be distinct")
        if values.size and np.min(np.abs(values)) <= 0.0:
            raise ValueError("component values must be nonzero")

    @property
    def sparsity(self) -> int:
        return len(self.support)

    def dense(self, signal_length: int) -> np.ndarray:
        out = np.zeros(signal_length)
        if self.support:
            out[list(self.support)] = self.values
        return out


@dataclass(frozen=True)
class SignalEnsemble:
    """Ground truth for one trial: the structure, the per-component sparse
    content, and the assembled per-sensor signals (``num_sensors x N``)."""

    structure: CorrelationStructure
    components: tuple[ComponentSignal, ...]
    signals: np.ndarray = field(repr=False)

    @property
    def sparsities(self) -> tuple[int, ...]:
        return tuple(c.sparsity for c in self.components)

    @property
    def total_sparsity(self) -> int:
        """Total number of stacked unknowns across all components."""
        return sum(self.sparsities)

    @property
    def stacked_signal(self) -> np.ndarray:
        """All sensor signals concatenated into one vector."""
        return self.signals.reshape(-1)


def assemble_signals(
    components: Sequence[ComponentSignal], num_sensors: int, signal_length: int
) -> np.ndarray:
    """Sum each component's dense signal into every sensor that measures it."""
    signals = np.zeros((num_sensors, signal_length))
    for cs in components:
        dense = cs.dense(signal_length)
        for j in cs.component.sensors:
            signals[j] += dense
    return signals


def _draw_values(rng: np.random.Generator, count: int) -> np.ndarray:
    values = rng.standard_normal(count)
    while count and np.min(np.abs(values)) < MIN_VALUE_MAGNITUDE:
        tiny = np.abs(values) < MIN_VALUE_MAGNITUDE
        values[tiny] = rng.standard_normal(int(np.sum(tiny)))
    return values


def generate_ensemble(
    structure: CorrelationStructure,
    sparsities: Sequence[int] | Mapping[Component, int],
    rng: np.random.Generator,
) -> SignalEnsemble:
    """Draw a random ensemble: each component's support is a uniform random
    subset of the index range (drawn independently per component, so
    cross-component collisions can occur) and values are standard Gaussian.

    ``sparsities`` is either a sequence aligned with ``structure.components``
    or a mapping from component to count.
    """
    if isinstance(sparsities, Mapping):
        counts = [int(sparsities.get(c, 0)) for c in structure.components]
    else:
        counts = [int(k) for k in sparsities]
        if len(counts) != len(structure.components):
            raise ValueError(
                f"expected {len(structure.components)} sparsities, got {len(counts)}"
            )
    n = structure.signal_length
    comps = []
    for comp, k in zip(structure.components, counts):
        if not 0 <= k <= n:
            raise ValueError(f"sparsity {k} outside [0, {n}] for {comp}")
        support = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        comps.append(ComponentSignal(comp, support, _draw_values(rng, k)))
    signals = assemble_signals(comps, structure.num_sensors, n)
    return SignalEnsemble(structure, tuple(comps), signals)


def ensemble_from_supports(
    structure: CorrelationStructure,
    supports: Sequence[Iterable[int]],
    values: Sequence[Sequence[float]] | None = None,
    rng: np.random.Generator | None = None,
) -> SignalEnsemble:
    """Build an ensemble from explicit supports, for constructing targeted
    overlap patterns.  Values are taken from ``values`` when given, otherwise
    drawn standard Gaussian from ``rng``."""
    if len(supports) != len(structure.components):
        raise ValueError(
            f"expected {len(structure.components)} supports, got {len(supports)}"
        )
    comps = []
    for i, (comp, sup) in enumerate(zip(structure.components, supports)):
        sup = tuple(sorted(int(s) for s in sup))
        if sup and (sup[0] < 0 or sup[-1] >= structure.signal_length):
            raise ValueError(f"support {sup} out of range")
        if values is not None:
            vals = np.asarray(values[i], dtype=float)
        elif rng is not None:
            vals = _draw_values(rng, len(sup))
        else:
            raise ValueError("provide either explicit values or an rng")
        comps.append(ComponentSignal(comp, sup, vals))
    signals = assemble_signals(comps, structure.num_sensors, structure.signal_length)
    return SignalEnsemble(structure, tuple(comps), signals)


@dataclass(frozen=True)
class LocationMap:
    """Support encoding of a stacked ensemble: ``stacked_signal = P @ theta``.

    ``matrix`` has one column per (component, support index) pair, holding a
    1 in row ``j * N + n`` for every sensor ``j`` measuring the component.
    Columns follow the canonical component order; ``column_slices`` gives
    each component's contiguous column range.
    """

    matrix: np.ndarray = field(repr=False)
    column_slices: tuple[slice, ...]
    columns: tuple[tuple[int, int], ...]  # (component index, support position)

    @property
    def total_columns(self) -> int:
        return self.matrix.shape[1]


def joint_location_map(ensemble: SignalEnsemble) -> LocationMap:
    """Build the stacked location matrix for an ensemble's true supports."""
    n = ensemble.structure.signal_length
    j_count = ensemble.structure.num_sensors
    total = ensemble.total_sparsity
    matrix = np.zeros((j_count * n, total))
    slices = []
    columns = []
    col = 0
    for ci, cs in enumerate(ensemble.components):
        start = col
        for pos, idx in enumerate(cs.support):
            for j in cs.component.sensors:
                matrix[j * n + idx, col] = 1.0
            columns.append((ci, pos))
            col += 1
        slices.append(slice(start, col))
    return LocationMap(matrix, tuple(slices), tuple(columns))


def stacked_values(ensemble: SignalEnsemble) -> np.ndarray:
    """The value vector aligned with :func:`joint_location_map` columns."""
    if not ensemble.components:
        return np.zeros(0)
    return np.concatenate([cs.values for cs in ensemble.components])
