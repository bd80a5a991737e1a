"""Combinatorial measurement bounds for joint-sparse ensembles.

For every sensor subset, recovery needs at least as many measurements inside
the subset as the sparsity of the components exclusive to it, plus the
overlap sizes of the shared components straddling its boundary.  An index of
a shared component "overlaps" when, at every sensor outside the subset that
measures the component, some other component occupies the same index, so the
outside measurements cannot isolate it.

Innovations and partial commons can block a shared component's index; the
full common component never acts as a blocker, it is only ever blocked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import lstsq

from .model import (
    FULL_COMMON,
    INNOVATION,
    PARTIAL_COMMON,
    Component,
    CorrelationStructure,
    GroupLabel,
    LocationMap,
    SignalEnsemble,
    classify_component,
)

MAX_ENUMERATED_SENSORS = 24


class AmbiguousSolution(Exception):
    """The measurement operator restricted to the true supports is rank
    deficient, so the stacked values are not uniquely determined."""


@dataclass(frozen=True)
class SupportProfile:
    """Supports of every component of a structure, with the counting
    helpers the subset conditions need."""

    structure: CorrelationStructure
    supports: tuple[frozenset[int], ...]

    @classmethod
    def from_ensemble(cls, ensemble: SignalEnsemble) -> "SupportProfile":
        return cls(
            ensemble.structure,
            tuple(frozenset(cs.support) for cs in ensemble.components),
        )

    @classmethod
    def from_supports(
        cls, structure: CorrelationStructure, supports: Sequence[Iterable[int]]
    ) -> "SupportProfile":
        if len(supports) != len(structure.components):
            raise ValueError(
                f"expected {len(structure.components)} supports, got {len(supports)}"
            )
        return cls(structure, tuple(frozenset(int(i) for i in s) for s in supports))

    @property
    def components(self) -> tuple[Component, ...]:
        return self.structure.components

    def sparsity(self, component: Component) -> int:
        return len(self.supports[self.components.index(component)])

    def support(self, component: Component) -> frozenset[int]:
        return self.supports[self.components.index(component)]

    @property
    def total_sparsity(self) -> int:
        return sum(len(s) for s in self.supports)

    def full_common(self) -> Component | None:
        for c in self.components:
            if c.kind == FULL_COMMON:
                return c
        return None

    def innovation_sparsity(self, sensor: int) -> int:
        for c, s in zip(self.components, self.supports):
            if c.kind == INNOVATION and c.sensors == (sensor,):
                return len(s)
        raise ValueError(f"no innovation component for sensor {sensor}")


def blocked_at(
    index: int,
    sensor: int,
    excluding: Component | Iterable[Component],
    profile: SupportProfile,
) -> bool:
    """True iff some component other than ``excluding``, measured by
    ``sensor``, has ``index`` in its support."""
    if isinstance(excluding, Component):
        excluded = (excluding,)
    else:
        excluded = tuple(excluding)
    for comp, support in zip(profile.components, profile.supports):
        if comp in excluded:
            continue
        if sensor in comp.sensors and index in support:
            return True
    return False


def full_common_overlap(gamma: Iterable[int], profile: SupportProfile) -> int:
    """Overlap size of the full common component for sensor subset ``gamma``:
    the number of its support indices blocked by other components at every
    sensor outside ``gamma``.  By definition the full subset yields the full
    sparsity and the empty subset yields zero."""
    full = profile.full_common()
    if full is None:
        return 0
    j_all = set(range(profile.structure.num_sensors))
    g = set(int(j) for j in gamma)
    if g == j_all:
        return profile.sparsity(full)
    if not g:
        return 0
    outside = j_all - g
    count = 0
    for n in profile.support(full):
        if all(blocked_at(n, j, full, profile) for j in outside):
            count += 1
    return count


def partial_common_overlap(
    pi: Iterable[int], gamma: Iterable[int], profile: SupportProfile
) -> int:
    """Overlap size of the partial common component with sensor group ``pi``
    for subset ``gamma``: the number of its support indices blocked at every
    group sensor outside ``gamma``.  Blockers are innovations and other
    partial commons; the full common component does not block."""
    pi_t = tuple(sorted(int(j) for j in pi))
    comp = None
    for c in profile.components:
        if c.kind == PARTIAL_COMMON and c.sensors == pi_t:
            comp = c
            break
    if comp is None:
        raise ValueError(f"no partial common component with sensors {pi_t}")
    j_all = set(range(profile.structure.num_sensors))
    g = set(int(j) for j in gamma)
    if g == j_all:
        return profile.sparsity(comp)
    if not g:
        return 0
    outside = set(pi_t) - g
    full = profile.full_common()
    excluded = (comp,) if full is None else (comp, full)
    count = 0
    for n in profile.support(comp):
        if all(blocked_at(n, j, excluded, profile) for j in outside):
            count += 1
    return count


def required_measurements(gamma: Iterable[int], profile: SupportProfile) -> int:
    """Measurements the subset ``gamma`` must hold: overlap of the full
    common, overlap of every straddling partial common, full sparsity of
    every partial common exclusive to ``gamma``, and the innovation
    sparsities of its sensors."""
    j_count = profile.structure.num_sensors
    g = tuple(sorted(set(int(j) for j in gamma)))
    total = full_common_overlap(g, profile)
    for comp in profile.components:
        if comp.kind != PARTIAL_COMMON:
            continue
        label = classify_component(comp, g, j_count)
        if label is GroupLabel.EXCLUSIVE:
            total += profile.sparsity(comp)
        elif label is GroupLabel.SHARED:
            total += partial_common_overlap(comp.sensors, g, profile)
    for j in g:
        total += profile.innovation_sparsity(j)
    return total


@dataclass(frozen=True)
class SubsetRequirement:
    sensors: tuple[int, ...]
    required: int
    available: int

    @property
    def satisfied(self) -> bool:
        return self.available >= self.required


@dataclass(frozen=True)
class FeasibilityReport:
    """Result of checking a measurement tuple against every sensor subset."""

    table: tuple[SubsetRequirement, ...]
    violations: tuple[SubsetRequirement, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations


def check_measurement_tuple(
    measurements: Sequence[int],
    profile: SupportProfile,
    unknown_support_margin: bool = False,
) -> FeasibilityReport:
    """Evaluate the subset condition for all ``2^J`` sensor subsets.

    With ``unknown_support_margin`` the requirement grows by the subset size,
    the extra price quoted for recovery without knowing the support layout.
    """
    j_count = profile.structure.num_sensors
    if len(measurements) != j_count:
        raise ValueError(f"expected {j_count} measurement counts")
    if j_count > MAX_ENUMERATED_SENSORS:
        raise ValueError(
            f"subset enumeration limited to {MAX_ENUMERATED_SENSORS} sensors"
        )
    ms = [int(m) for m in measurements]
    rows = []
    violations = []
    for size in range(j_count + 1):
        for gamma in combinations(range(j_count), size):
            required = required_measurements(gamma, profile)
            if unknown_support_margin:
                required += len(gamma)
            available = sum(ms[j] for j in gamma)
            row = SubsetRequirement(gamma, required, available)
            rows.append(row)
            if not row.satisfied:
                violations.append(row)
    return FeasibilityReport(tuple(rows), tuple(violations))


def min_uniform_measurement(
    profile: SupportProfile, unknown_support_margin: bool = False
) -> int:
    """Smallest per-sensor count ``M`` for which the uniform tuple
    ``(M, ..., M)`` passes the subset check, by binary search (feasibility is
    monotone in ``M``)."""
    j_count = profile.structure.num_sensors

    def feasible(m: int) -> bool:
        return check_measurement_tuple(
            [m] * j_count, profile, unknown_support_margin
        ).feasible

    lo, hi = 0, max(1, profile.total_sparsity + (j_count if unknown_support_margin else 0))
    if feasible(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def restricted_operator(
    matrices: Sequence[np.ndarray], location_map: LocationMap
) -> np.ndarray:
    """The measurement operator restricted to the true stacked supports:
    block-diagonal measurement times location matrix."""
    n = matrices[0].shape[1]
    total_rows = sum(phi.shape[0] for phi in matrices)
    out = np.zeros((total_rows, location_map.total_columns))
    row = 0
    for j, phi in enumerate(matrices):
        m = phi.shape[0]
        out[row : row + m, :] = phi @ location_map.matrix[j * n : (j + 1) * n, :]
        row += m
    return out


def rank_probe(matrices: Sequence[np.ndarray], location_map: LocationMap) -> bool:
    """Numerically test whether the restricted operator has full column
    rank (smallest singular value above ``1e-9`` times the largest)."""
    op = restricted_operator(matrices, location_map)
    if op.shape[1] == 0:
        return True
    if op.shape[0] < op.shape[1]:
        return False
    sv = np.linalg.svd(op, compute_uv=False)
    return bool(sv[-1] > 1e-9 * sv[0])


def recover_known_support(
    observed: np.ndarray,
    matrices: Sequence[np.ndarray],
    location_map: LocationMap,
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares recovery with the true support layout known.

    Returns the stacked value vector and the reassembled stacked signal.
    Raises :class:`AmbiguousSolution` when the restricted operator is rank
    deficient or the residual is inconsistent with an exact solution.
    """
    op = restricted_operator(matrices, location_map)
    d = op.shape[1]
    if d == 0:
        return np.zeros(0), np.zeros(location_map.matrix.shape[0])
    if op.shape[0] < d:
        raise AmbiguousSolution(
            f"{op.shape[0]} equations cannot determine {d} unknowns"
        )
    theta, _, rank, _ = lstsq(op, observed)
    if rank < d:
        raise AmbiguousSolution(f"restricted operator has rank {rank} < {d}")
    resid = op @ theta - observed
    y_norm = float(np.linalg.norm(observed))
    if float(np.linalg.norm(resid)) > 1e-8 * max(y_norm, 1e-300):
        raise AmbiguousSolution("residual too large for an exact solution")
    return theta, location_map.matrix @ theta
