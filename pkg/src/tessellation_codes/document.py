"""Structured code-spec documents (YAML).

Numeric fields are kept as text so that symbolic values such as
``acos(1/3)/2`` survive a round trip unchanged.  Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .codespec import CodeSpec, SpecError, Truncation, eval_expr
from .logical import FAMILIES, is_unitary

SCHEMA = "tessellation-code/1"

_TOP = {"schema", "name", "tessellation", "logical", "identifications", "matrices", "relations", "seed",
        "sigma", "orientation", "scale", "truncation", "render", "expected"}
_REQUIRED = {"schema", "name", "tessellation", "logical", "identifications", "seed"}
RENDER_KEYS = {"size", "labels", "cells", "edges", "radius"}
EXPECTED_KEYS = {"resolution", "order", "violations", "printed_relations", "notes", "lowest_pairs",
                 "correctable_radius", "optimal_seed"}
PROVENANCE = {"paper", "derived", "paper-printed"}


def _check_keys(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise SpecError(f"{where} must be a mapping")
    extra = set(d) - allowed
    if extra:
        raise SpecError(f"unknown field(s) in {where}: {', '.join(sorted(extra))}")


def _complex_text(z: complex) -> str:
    return repr(complex(z))


def _parse_complex(v) -> complex:
    try:
        return complex(str(v).replace(" ", ""))
    except ValueError as exc:
        raise SpecError(f"bad complex number {v!r}") from exc


def spec_to_doc(spec: CodeSpec, render: dict | None = None, expected: dict | None = None) -> dict:
    doc: dict[str, Any] = {
        "schema": SCHEMA,
        "name": spec.name,
        "tessellation": list(spec.pqr),
        "logical": {"family": spec.family, "dim": spec.dim},
        "identifications": {g: w for g, w in spec.identifications},
    }
    if spec.matrices:
        doc["matrices"] = {n: [[_complex_text(z) for z in row] for row in rows] for n, rows in spec.matrices}
    doc["relations"] = list(spec.relations)
    doc["seed"] = list(spec.seed)
    if spec.sigma is not None:
        doc["sigma"] = [_complex_text(z) for z in spec.sigma]
    doc["orientation"] = spec.orientation
    doc["scale"] = spec.scale
    doc["truncation"] = {"radius": spec.truncation.radius, "max_word_length": spec.truncation.max_word_length}
    if render:
        doc["render"] = dict(render)
    if expected:
        doc["expected"] = expected
    return doc


def _check_expected(exp: dict):
    _check_keys(exp, EXPECTED_KEYS, "expected")

    def tagged(v, where):
        items = v if isinstance(v, list) else [v]
        for it in items:
            if not isinstance(it, dict) or it.get("source") not in PROVENANCE:
                raise SpecError(f"expected.{where} entries need a source tag in {sorted(PROVENANCE)}")

    for key, v in exp.items():
        if key != "notes":
            tagged(v, key)


def doc_to_spec(doc: dict) -> tuple[CodeSpec, dict, dict]:
    """Validate a parsed document and return (spec, render options, expected)."""
    _check_keys(doc, _TOP, "document")
    missing = _REQUIRED - set(doc)
    if missing:
        raise SpecError(f"missing field(s): {', '.join(sorted(missing))}")
    if doc["schema"] != SCHEMA:
        raise SpecError(f"unsupported schema {doc['schema']!r} (expected {SCHEMA})")
    pqr = doc["tessellation"]
    if not (isinstance(pqr, list) and len(pqr) == 3 and all(isinstance(v, int) and v >= 2 for v in pqr)):
        raise SpecError("tessellation must be three integers >= 2")
    logical = doc["logical"]
    _check_keys(logical, {"family", "dim"}, "logical")
    family, dim = logical.get("family"), logical.get("dim")
    if family not in FAMILIES and family != "explicit":
        raise SpecError(f"unknown logical family {family!r}")
    if not isinstance(dim, int) or dim < 2:
        raise SpecError("logical dimension must be an integer >= 2")
    ids = doc["identifications"]
    _check_keys(ids, {"A", "B", "C"}, "identifications")
    if set(ids) != {"A", "B", "C"}:
        raise SpecError("identifications need A, B and C")
    matrices = []
    for name, rows in (doc.get("matrices") or {}).items():
        M = np.array([[_parse_complex(z) for z in row] for row in rows], dtype=complex)
        if M.shape != (dim, dim) or not is_unitary(M, 1e-10):
            raise SpecError(f"matrix {name!r} is not a {dim}x{dim} unitary")
        matrices.append((str(name), tuple(tuple(complex(z) for z in row) for row in M)))
    seed = doc["seed"]
    if not (isinstance(seed, list) and len(seed) == 2):
        raise SpecError("seed must be two coordinates")
    for s in seed:
        eval_expr(s)
    sigma = doc.get("sigma")
    if sigma is not None:
        sigma = tuple(_parse_complex(z) for z in sigma)
    trunc = doc.get("truncation") or {}
    _check_keys(trunc, {"radius", "max_word_length"}, "truncation")
    render = doc.get("render") or {}
    _check_keys(render, RENDER_KEYS, "render")
    expected = doc.get("expected") or {}
    if expected:
        _check_expected(expected)
    rel = doc.get("relations") or []
    if not all(isinstance(r, str) for r in rel):
        raise SpecError("relations must be words")
    spec = CodeSpec(
        name=str(doc["name"]), pqr=tuple(pqr), family=family, dim=dim,
        identifications=tuple((g, str(ids[g])) for g in ("A", "B", "C")),
        relations=tuple(rel), seed=tuple(str(s) for s in seed), sigma=sigma,
        matrices=tuple(matrices), orientation=int(doc.get("orientation", 1)), scale=str(doc.get("scale", "1")),
        truncation=Truncation(float(trunc.get("radius", 0.0)), int(trunc.get("max_word_length", 64))))
    spec.rep   # validates the identifications
    return spec, render, expected


def dump_document(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True, default_flow_style=None)


def parse_document(text: str) -> dict:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("document must be a mapping")
    return doc


def load_spec(path: str | Path) -> tuple[CodeSpec, dict, dict]:
    return doc_to_spec(parse_document(Path(path).read_text()))


def save_spec(path: str | Path, spec: CodeSpec, render: dict | None = None, expected: dict | None = None):
    Path(path).write_text(dump_document(spec_to_doc(spec, render, expected)))
