"""State, factorization and report files.

State files are UTF-8 JSON objects::

    {"kind": "pure", "dim": 2, "data": [[1, 0], [0, 0]], "name": "e0"}

``kind`` is one of ``pure``, ``density``, ``operator``, ``unitary`` or
``projector_family``.  Every complex number is an ``[re, im]`` pair; ``data``
is a vector for ``pure``, a ``dim x dim`` matrix for the operator kinds and a
list of such matrices for ``projector_family``.

Factorization files hold ``{"d1": 2, "d2": 2, "alignment": "identity"}`` or
an explicit alignment matrix in the same pair encoding.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import operators
from .errors import InvariantViolation, ParseError
from .factorization import Factorization, standard_factorization

KINDS = ("pure", "density", "operator", "unitary", "projector_family")


@dataclasses.dataclass(frozen=True)
class LoadedValue:
    kind: str
    dim: int
    value: Any
    name: str | None
    description: str | None
    digest: str
    labels: tuple[str, ...] | None = None


def sha256_bytes(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _complex(entry, where: str) -> complex:
    if (
        not isinstance(entry, list)
        or len(entry) != 2
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
    ):
        raise ParseError("expected an [re, im] pair of numbers", where)
    return complex(float(entry[0]), float(entry[1]))


def _vector(data, dim: int, where: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != dim:
        raise ParseError(f"expected a list of {dim} complex entries", where)
    return np.array([_complex(e, f"{where}[{i}]") for i, e in enumerate(data)], dtype=complex)


def _matrix(data, dim: int, where: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != dim:
        raise ParseError(f"expected {dim} rows", where)
    return np.array([_vector(row, dim, f"{where}[{i}]") for i, row in enumerate(data)])


def _load_json(raw: bytes, source: str) -> Any:
    try:
        return json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc.reason}", f"{source}@byte{exc.start}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"{source}:{exc.lineno}:{exc.colno}") from exc


def parse_state_bytes(raw: bytes, source: str = "<input>", normalize: bool = False) -> LoadedValue:
    """Parse and validate a state file's contents.

    Values are kept exactly as written unless ``normalize`` is set, in which
    case pure states are scaled to unit norm and density matrices to unit
    trace.
    """
    doc = _load_json(raw, source)
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", source)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ParseError(f"kind must be one of {', '.join(KINDS)}", f"{source}.kind")
    dim = doc.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError("dim must be a positive integer", f"{source}.dim")
    if "data" not in doc:
        raise ParseError("missing data", source)
    data = doc["data"]
    where = f"{source}.data"
    labels = None
    if kind == "pure":
        value = operators.state_vector(_vector(data, dim, where), normalize=normalize)
    elif kind == "projector_family":
        if not isinstance(data, list):
            raise ParseError("expected a list of matrices", where)
        mats = []
        for k, m in enumerate(data):
            try:
                mats.append(operators.projector(_matrix(m, dim, f"{where}[{k}]")))
            except InvariantViolation as exc:
                raise InvariantViolation(f"{exc.invariant} (member {k})", exc.residual) from exc
        value = tuple(mats)
        if "labels" in doc:
            raw_labels = doc["labels"]
            if not isinstance(raw_labels, list) or len(raw_labels) != len(mats) or not all(
                isinstance(x, str) for x in raw_labels
            ):
                raise ParseError("labels must be one string per matrix", f"{source}.labels")
            labels = tuple(raw_labels)
    else:
        m = _matrix(data, dim, where)
        if kind == "density":
            if normalize:
                tr = np.trace(m).real
                if tr <= 0:
                    raise InvariantViolation("trace = 1", abs(tr - 1), "cannot normalize nonpositive trace")
                m = m / tr
            value = operators.density_matrix(m)
        elif kind == "operator":
            value = operators.hermitian(m)
        else:
            value = operators.unitary(m)
    return LoadedValue(kind, dim, value, doc.get("name"), doc.get("description"), sha256_bytes(raw), labels)


def parse_state_file(path: str | os.PathLike, normalize: bool = False) -> LoadedValue:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", str(p)) from exc
    return parse_state_bytes(raw, str(p), normalize)


def parse_factorization_bytes(raw: bytes, source: str = "<fact>") -> Factorization:
    doc = _load_json(raw, source)
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", source)
    d1, d2 = doc.get("d1"), doc.get("d2")
    for key, v in (("d1", d1), ("d2", d2)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ParseError(f"{key} must be a positive integer", f"{source}.{key}")
    align = doc.get("alignment", "identity")
    if align == "identity":
        return standard_factorization(d1, d2)
    return Factorization(d1, d2, operators.unitary(_matrix(align, d1 * d2, f"{source}.alignment")))


def parse_factorization_file(path: str | os.PathLike) -> Factorization:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", str(p)) from exc
    return parse_factorization_bytes(raw, str(p))


def encode_complex(a) -> Any:
    """Nested lists of ``[re, im]`` pairs for any complex array."""
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def state_document(kind: str, value, name: str | None = None, description: str | None = None, labels=None) -> dict:
    if kind == "projector_family":
        data = [encode_complex(m) for m in value]
        dim = int(np.asarray(value[0]).shape[0])
    else:
        data = encode_complex(value)
        dim = int(np.asarray(value).shape[0])
    doc: dict[str, Any] = {"kind": kind, "dim": dim, "data": data}
    if name is not None:
        doc["name"] = name
    if description is not None:
        doc["description"] = description
    if labels is not None:
        doc["labels"] = list(labels)
    return doc


REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "inputs", "configuration", "results", "summary"],
    "properties": {
        "command": {"type": "string"},
        "inputs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["role", "path", "sha256"],
                "properties": {
                    "role": {"type": "string"},
                    "path": {"type": "string"},
                    "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
        "configuration": {"type": "object"},
        "results": {"type": "object"},
        "summary": {
            "type": "object",
            "required": ["passed"],
            "properties": {"passed": {"type": "boolean"}, "failures": {"type": "array", "items": {"type": "string"}}},
        },
        "timestamp": {"type": "string"},
    },
}


def to_jsonable(obj: Any) -> Any:
    """Convert numpy values, enums and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_complex(obj)
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def validate_report(doc: dict) -> None:
    jsonschema.validate(doc, REPORT_SCHEMA)


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads_report(text: str) -> dict:
    doc = json.loads(text)
    validate_report(doc)
    return doc


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory and rename."""
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
