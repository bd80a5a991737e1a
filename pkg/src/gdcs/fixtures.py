"""JSON fixtures for ensembles and measurement sets.

Schema (all arrays are plain JSON lists; floats round-trip exactly):

ensemble fixture::

    {"J": <sensor count>, "N": <signal length>,
     "components": [{"kind": "full-common" | "partial-common" | "innovation",
                     "sensors": [..0-based..],
                     "support": [..0-based..],
                     "values": [..floats..]}, ...]}

measurement fixture::

    {"J": ..., "N": ..., "M": [per-sensor row counts],
     "matrices": [[[row], ...], ...], "Y": [floats]}

Assembled signals are recomputed on load; they are a pure function of the
components.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .model import (
    FULL_COMMON,
    INNOVATION,
    PARTIAL_COMMON,
    Component,
    ComponentSignal,
    CorrelationStructure,
    SignalEnsemble,
    assemble_signals,
)
from .sensing import MeasurementSet


def ensemble_to_dict(ensemble: SignalEnsemble) -> dict[str, Any]:
    return {
        "J": ensemble.structure.num_sensors,
        "N": ensemble.structure.signal_length,
        "components": [
            {
                "kind": cs.component.kind,
                "sensors": list(cs.component.sensors),
                "support": list(cs.support),
                "values": cs.values.tolist(),
            }
            for cs in ensemble.components
        ],
    }


def ensemble_from_dict(doc: dict[str, Any]) -> SignalEnsemble:
    j_count = int(doc["J"])
    n = int(doc["N"])
    comps = []
    kinds = []
    for entry in doc["components"]:
        kind = entry["kind"]
        if kind not in (FULL_COMMON, PARTIAL_COMMON, INNOVATION):
            raise ValueError(f"unknown component kind {kind!r}")
        component = Component(kind, tuple(int(j) for j in entry["sensors"]))
        kinds.append(component)
        comps.append(
            ComponentSignal(
                component,
                tuple(int(i) for i in entry["support"]),
                np.asarray(entry["values"], dtype=float),
            )
        )
    structure = CorrelationStructure(j_count, n, tuple(kinds))
    signals = assemble_signals(comps, j_count, n)
    return SignalEnsemble(structure, tuple(comps), signals)


def measurements_to_dict(measurements: MeasurementSet) -> dict[str, Any]:
    return {
        "J": len(measurements.matrices),
        "N": measurements.signal_length,
        "M": list(measurements.measurements),
        "matrices": [phi.tolist() for phi in measurements.matrices],
        "Y": measurements.observed.tolist(),
    }


def measurements_from_dict(doc: dict[str, Any]) -> MeasurementSet:
    matrices = tuple(np.asarray(phi, dtype=float) for phi in doc["matrices"])
    observed = np.asarray(doc["Y"], dtype=float)
    ms = MeasurementSet(matrices, observed)
    if list(ms.measurements) != [int(m) for m in doc["M"]]:
        raise ValueError("matrix shapes disagree with the recorded row counts")
    return ms


def write_json(doc: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_json(path: str | Path) -> dict[str, Any]:
    return json.loads(Path(path).read_text())


def save_ensemble(ensemble: SignalEnsemble, path: str | Path) -> None:
    write_json(ensemble_to_dict(ensemble), path)


def load_ensemble(path: str | Path) -> SignalEnsemble:
    return ensemble_from_dict(read_json(path))


def save_measurements(measurements: MeasurementSet, path: str | Path) -> None:
    write_json(measurements_to_dict(measurements), path)


def load_measurements(path: str | Path) -> MeasurementSet:
    return measurements_from_dict(read_json(path))
