"""JSON documents for channels, Choi states and POVMs.

Matrices use the row-major ``[[[re, im], ...], ...]`` layout of
:func:`condstates.linalg.matrix_to_json`.

Channel file::

    {"in_dim": 2, "out_dim": 2, "in_label": "A", "out_label": "B",
     "kraus": [<matrix>, ...]}

Choi file (matrix laid out on ``in (x) out``)::

    {"in_dim": 2, "out_dim": 2, "convention": "jamiolkowski" | "choi",
     "matrix": <matrix>}

POVM file: a list of ``[label, <matrix>]`` pairs, or an object
``{"region": "B", "elements": [[label, <matrix>], ...]}``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from condstates import linalg
from condstates.channels import ChoiState, KrausChannel
from condstates.errors import MalformedInputError
from condstates.measurement import Povm
from condstates.regions import CompositeRegion, LabeledOperator, RegionSpec


def read_json(path: str | Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise MalformedInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path} is not valid JSON: {exc}") from exc


def require(doc: Any, key: str, kind: type | tuple[type, ...], where: str = "document") -> Any:
    if not isinstance(doc, dict):
        raise MalformedInputError(f"{where} must be a JSON object")
    if key not in doc:
        raise MalformedInputError(f"{where} is missing {key!r}")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise MalformedInputError(f"{where}: {key!r} has the wrong type")
    return value


def _positive_int(doc: dict, key: str, where: str) -> int:
    v = require(doc, key, int, where)
    if v < 1:
        raise MalformedInputError(f"{where}: {key!r} must be positive")
    return v


def channel_to_json(ch: KrausChannel) -> dict:
    return {
        "in_dim": ch.in_region.dim,
        "out_dim": ch.out_region.dim,
        "in_label": ch.in_region.label,
        "out_label": ch.out_region.label,
        "kraus": [linalg.matrix_to_json(k) for k in ch.kraus],
    }


def channel_from_json(doc: Any) -> KrausChannel:
    in_dim = _positive_int(doc, "in_dim", "channel")
    out_dim = _positive_int(doc, "out_dim", "channel")
    kraus = [linalg.matrix_from_json(k, square=False) for k in require(doc, "kraus", list, "channel")]
    for k in kraus:
        if k.shape != (out_dim, in_dim):
            raise MalformedInputError(f"Kraus operator of shape {k.shape}, expected {(out_dim, in_dim)}")
    return KrausChannel(
        RegionSpec(str(doc.get("in_label", "A")), in_dim),
        RegionSpec(str(doc.get("out_label", "B")), out_dim),
        tuple(kraus),
    )


def choi_to_json(s: ChoiState) -> dict:
    return {
        "in_dim": s.in_region.dim,
        "out_dim": s.out_region.dim,
        "in_label": s.in_label,
        "out_label": s.out_label,
        "convention": s.convention,
        "matrix": linalg.matrix_to_json(s.matrix),
    }


def choi_from_json(doc: Any) -> ChoiState:
    in_dim = _positive_int(doc, "in_dim", "choi file")
    out_dim = _positive_int(doc, "out_dim", "choi file")
    convention = require(doc, "convention", str, "choi file")
    if convention not in ("jamiolkowski", "choi"):
        raise MalformedInputError(f"unknown convention {convention!r}")
    m = linalg.matrix_from_json(require(doc, "matrix", list, "choi file"))
    if m.shape[0] != in_dim * out_dim:
        raise MalformedInputError(f"matrix dim {m.shape[0]} does not equal in_dim * out_dim")
    in_label = str(doc.get("in_label", "A"))
    out_label = str(doc.get("out_label", "B"))
    if in_label == out_label:
        raise MalformedInputError("in_label and out_label must differ")
    region = CompositeRegion((RegionSpec(in_label, in_dim), RegionSpec(out_label, out_dim)))
    return ChoiState(LabeledOperator(region, m), in_label, out_label, convention)


def povm_elements_from_json(data: Any) -> list[tuple[str, linalg.Matrix]]:
    if not isinstance(data, list) or not data:
        raise MalformedInputError("POVM elements must be a non-empty list of [label, matrix] pairs")
    out = []
    for item in data:
        if isinstance(item, dict):
            label, effect = require(item, "label", str, "POVM element"), require(item, "effect", list, "POVM element")
        elif isinstance(item, list) and len(item) == 2 and isinstance(item[0], str):
            label, effect = item
        else:
            raise MalformedInputError(f"POVM element {item!r} is not a [label, matrix] pair")
        out.append((label, linalg.matrix_from_json(effect)))
    return out


def povm_from_json(doc: Any, region: RegionSpec | None = None) -> Povm:
    """Parse a POVM document; ``region`` overrides any region named in the file."""
    if isinstance(doc, dict):
        elements = povm_elements_from_json(require(doc, "elements", list, "POVM"))
        label = str(doc.get("region", "B"))
    else:
        elements = povm_elements_from_json(doc)
        label = "B"
    if region is None:
        region = RegionSpec(label, elements[0][1].shape[0])
    return Povm.from_effects(region, elements)


def povm_to_json(p: Povm) -> dict:
    return {
        "region": p.region.label,
        "elements": [[lab, linalg.matrix_to_json(e)] for lab, e in p.elements],
    }
