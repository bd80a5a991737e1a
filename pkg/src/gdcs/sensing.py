"""Gaussian measurement matrices, compression, and hypothesis-expanded
measurement operators for joint recovery.

The expanded operator prepends one shared column block per hypothesized
sensor group to the block diagonal of the per-sensor matrices.  A shared
block holds sensor ``j``'s matrix in its rows iff ``j`` belongs to the
group, and zeros elsewhere, so a single shared unknown vector can explain
measurements at all sensors in the group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import SignalEnsemble


def draw_measurement_matrices(
    signal_length: int, measurements: Sequence[int], rng: np.random.Generator
) -> list[np.ndarray]:
    """Draw one Gaussian matrix per sensor with entry variance ``1 / M_j``."""
    matrices = []
    for m_j in measurements:
        m_j = int(m_j)
        if m_j < 1:
            raise ValueError(f"each sensor needs at least one measurement, got {m_j}")
        matrices.append(rng.standard_normal((m_j, signal_length)) / np.sqrt(m_j))
    return matrices


def compress(ensemble: SignalEnsemble, matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Stack the per-sensor measurements ``y_j = Phi_j x_j``."""
    j_count = ensemble.structure.num_sensors
    if len(matrices) != j_count:
        raise ValueError(f"expected {j_count} matrices, got {len(matrices)}")
    parts = []
    for j, phi in enumerate(matrices):
        if phi.shape[1] != ensemble.structure.signal_length:
            raise ValueError(
                f"matrix {j} has {phi.shape[1]} columns, "
                f"signal length is {ensemble.structure.signal_length}"
            )
        parts.append(phi @ ensemble.signals[j])
    return np.concatenate(parts)


@dataclass(frozen=True)
class MeasurementSet:
    """Per-sensor matrices plus the observed stacked measurements."""

    matrices: tuple[np.ndarray, ...]
    observed: np.ndarray = field(repr=False)

    @property
    def measurements(self) -> tuple[int, ...]:
        return tuple(phi.shape[0] for phi in self.matrices)

    @property
    def signal_length(self) -> int:
        return self.matrices[0].shape[1]


def measure(
    ensemble: SignalEnsemble, measurements: Sequence[int], rng: np.random.Generator
) -> MeasurementSet:
    """Draw matrices and compress an ensemble in one step."""
    matrices = draw_measurement_matrices(
        ensemble.structure.signal_length, measurements, rng
    )
    return MeasurementSet(tuple(matrices), compress(ensemble, matrices))


@dataclass(frozen=True)
class ExpandedMatrix:
    """Measurement operator with hypothesized shared blocks.

    Columns are laid out as ``[shared block 0 | ... | shared block h-1 |
    block diagonal]``, each block ``signal_length`` wide.  ``shared_sets``
    records which sensors are active in each shared block; all slicing of
    stacked solutions must go through :meth:`shared_slice` /
    :meth:`innovation_slice` rather than positional arithmetic.
    """

    matrix: np.ndarray = field(repr=False)
    shared_sets: tuple[tuple[int, ...], ...]
    num_sensors: int
    signal_length: int
    measurements: tuple[int, ...]

    @property
    def num_shared(self) -> int:
        return len(self.shared_sets)

    @property
    def total_columns(self) -> int:
        return (self.num_shared + self.num_sensors) * self.signal_length

    def shared_slice(self, block: int) -> slice:
        if not 0 <= block < self.num_shared:
            raise IndexError(f"no shared block {block}")
        n = self.signal_length
        return slice(block * n, (block + 1) * n)

    def innovation_slice(self, sensor: int) -> slice:
        if not 0 <= sensor < self.num_sensors:
            raise IndexError(f"no sensor {sensor}")
        n = self.signal_length
        start = (self.num_shared + sensor) * n
        return slice(start, start + n)

    def row_slice(self, sensor: int) -> slice:
        start = sum(self.measurements[:sensor])
        return slice(start, start + self.measurements[sensor])

    def assemble(self, solution: np.ndarray) -> np.ndarray:
        """Reassemble per-sensor signals from a stacked solution: each
        sensor's signal is its innovation slice plus every shared slice it
        is active in."""
        signals = np.zeros((self.num_sensors, self.signal_length))
        for j in range(self.num_sensors):
            signals[j] = solution[self.innovation_slice(j)]
        for b, sensors in enumerate(self.shared_sets):
            block = solution[self.shared_slice(b)]
            for j in sensors:
                signals[j] += block
        return signals


def build_expanded_matrix(
    matrices: Sequence[np.ndarray], hypothesis: Sequence[Iterable[int]]
) -> ExpandedMatrix:
    """Build the expanded operator for a sequence of hypothesized sensor
    groups.  An empty hypothesis yields the pure block diagonal used for
    separate recovery."""
    j_count = len(matrices)
    n = matrices[0].shape[1]
    ms = tuple(phi.shape[0] for phi in matrices)
    shared_sets = []
    for group in hypothesis:
        s = tuple(sorted(int(j) for j in group))
        if not s:
            raise ValueError("hypothesized sensor set may not be empty")
        if s[0] < 0 or s[-1] >= j_count:
            raise ValueError(f"sensor set {s} out of range for {j_count} sensors")
        shared_sets.append(s)
    h = len(shared_sets)
    total_rows = sum(ms)
    matrix = np.zeros((total_rows, (h + j_count) * n))
    row = 0
    for j, phi in enumerate(matrices):
        rows = slice(row, row + ms[j])
        for b, sensors in enumerate(shared_sets):
            if j in sensors:
                matrix[rows, b * n : (b + 1) * n] = phi
        matrix[rows, (h + j) * n : (h + j + 1) * n] = phi
        row += ms[j]
    return ExpandedMatrix(matrix, tuple(shared_sets), j_count, n, ms)


def zero_sensor_block(expanded: ExpandedMatrix, sensor: int, block: int = 0) -> ExpandedMatrix:
    """Zero one sensor's rows inside a shared block, removing it from the
    block's active set.  The sensor must currently be active there."""
    sensors = expanded.shared_sets[block]
    if sensor not in sensors:
        raise ValueError(f"sensor {sensor} is not active in shared block {block}")
    matrix = expanded.matrix.copy()
    matrix[expanded.row_slice(sensor), expanded.shared_slice(block)] = 0.0
    new_sets = list(expanded.shared_sets)
    new_sets[block] = tuple(j for j in sensors if j != sensor)
    return ExpandedMatrix(
        matrix,
        tuple(new_sets),
        expanded.num_sensors,
        expanded.signal_length,
        expanded.measurements,
    )
