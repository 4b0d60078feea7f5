"""Measurement serialization.

JSON files hold either a POVM or an instrument. Every matrix entry is a
``[re, im]`` pair of decimal numbers so files stay exact, diffable, and
language-neutral. A handful of built-in measurements are available by
name instead of a path.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from . import qcore
from .errors import InvalidMeasurement, MalformedFile
from .qcore import Instrument, Povm


def _matrix_to_json(m: np.ndarray):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(m)]


def _matrix_from_json(rows, what: str) -> np.ndarray:
    try:
        arr = np.array(
            [[complex(e[0], e[1]) for e in row] for row in rows], dtype=complex
        )
    except (TypeError, IndexError, ValueError) as exc:
        raise MalformedFile(f"{what}: entries must be [re, im] pairs") from exc
    if arr.ndim != 2:
        raise MalformedFile(f"{what}: expected a matrix")
    return arr


def save_measurement(obj: Union[Povm, Instrument], path) -> None:
    if isinstance(obj, Povm):
        doc = {
            "kind": "povm",
            "dim": obj.dim,
            "outcomes": obj.outcomes,
            "elements": [_matrix_to_json(e) for e in obj.elements],
        }
    elif isinstance(obj, Instrument):
        doc = {
            "kind": "instrument",
            "dim": obj.dim_in,
            "outcomes": obj.outcomes,
            "elements": [[_matrix_to_json(k) for k in g] for g in obj.kraus],
        }
    else:
        raise MalformedFile(f"cannot serialise {type(obj).__name__}")
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def _builtin(name: str):
    if name == "trine":
        return qcore.trine_povm()
    if name == "degenerate-qutrit":
        return qcore.degenerate_qutrit_povm()
    if name.startswith("noisy-z:"):
        parts = name.split(":", 1)[1].split(",")
        if len(parts) != 2:
            raise MalformedFile(f"expected noisy-z:p,q, got {name!r}")
        return qcore.noisy_z_povm(float(parts[0]), float(parts[1]))
    if name.startswith("vn:"):
        return qcore.von_neumann_povm(int(name.split(":", 1)[1]))
    return None


def load_measurement(path_or_name: str) -> Union[Povm, Instrument]:
    """Load a measurement from a JSON file or a built-in name.

    Built-ins: "trine", "noisy-z:p,q", "vn:d", "degenerate-qutrit".
    POVMs are validated on load; a failing file is rejected with the
    validation report attached.
    """
    builtin = _builtin(str(path_or_name))
    if builtin is not None:
        return builtin
    p = Path(path_or_name)
    if not p.exists():
        raise MalformedFile(f"no such file or built-in: {path_or_name!r}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedFile(f"{path_or_name}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "kind" not in doc:
        raise MalformedFile(f"{path_or_name}: missing 'kind'")
    kind = doc["kind"]
    try:
        dim = int(doc["dim"])
        outcomes = int(doc["outcomes"])
        elements = doc["elements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"{path_or_name}: missing or bad header field") from exc
    if not isinstance(elements, list) or len(elements) != outcomes:
        raise MalformedFile(f"{path_or_name}: 'elements' must list each outcome")

    if kind == "povm":
        mats = [_matrix_from_json(e, f"element {a}") for a, e in enumerate(elements)]
        if any(m.shape != (dim, dim) for m in mats):
            raise MalformedFile(f"{path_or_name}: element shape != ({dim}, {dim})")
        povm = Povm(tuple(mats))
        report = qcore.validate_povm(povm)
        if not report.ok:
            raise InvalidMeasurement(
                f"{path_or_name}: " + "; ".join(report.violations), report=report
            )
        return povm
    if kind == "instrument":
        groups = []
        for a, group in enumerate(elements):
            if not isinstance(group, list) or not group:
                raise MalformedFile(f"{path_or_name}: outcome {a} needs Kraus list")
            groups.append(
                tuple(
                    _matrix_from_json(k, f"outcome {a} Kraus {j}")
                    for j, k in enumerate(group)
                )
            )
        inst = Instrument(tuple(groups))
        if inst.dim_in != dim:
            raise MalformedFile(f"{path_or_name}: Kraus input dim != {dim}")
        defect = inst.normalization_defect()
        if defect > 1e-9:
            report = qcore.validate_povm(qcore.induced_povm(inst))
            raise InvalidMeasurement(
                f"{path_or_name}: Kraus normalisation defect {defect:.3e}",
                report=report,
            )
        return inst
    raise MalformedFile(f"{path_or_name}: unknown kind {kind!r}")
