"""JSON persistence for trained models.

Probabilities are written with 17 significant digits so a save/load cycle
reproduces every float exactly and save -> load -> save is byte-stable.
"""

from __future__ import annotations

import hashlib
import json
from typing import Optional

import numpy as np

from .errors import ModelValidationError
from .model import ActionAlphabet, EncodedCorpus, HmmModel

FORMAT_VERSION = 1


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _vector(v) -> str:
    return "[" + ", ".join(_num(x) for x in v) + "]"


def _matrix(m, indent: str) -> str:
    rows = [indent + "  " + _vector(r) for r in m]
    return "[\n" + ",\n".join(rows) + "\n" + indent + "]"


def dumps(model: HmmModel, provenance: Optional[dict] = None) -> str:
    head = json.dumps(
        {"format_version": FORMAT_VERSION, "alphabet": list(model.alphabet.symbols), "M": model.n_states}
    )[1:-1]
    prov = json.dumps(provenance or {}, sort_keys=True, indent=2).replace("\n", "\n  ")
    return (
        "{\n  "
        + head.replace(', "', ',\n  "')
        + ",\n"
        + f'  "prior": {_vector(model.prior)},\n'
        + f'  "transition": {_matrix(model.transition, "  ")},\n'
        + f'  "emission": {_matrix(model.emission, "  ")},\n'
        + f'  "provenance": {prov}\n'
        + "}\n"
    )


def from_dict(data: dict) -> tuple:
    """Validate a decoded model file; returns ``(model, provenance)``."""
    if not isinstance(data, dict):
        raise ModelValidationError("model file must contain a JSON object")
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelValidationError(f"unsupported format_version {version!r}")
    for key in ("alphabet", "M", "prior", "transition", "emission"):
        if key not in data:
            raise ModelValidationError(f"model file is missing {key!r}")
    try:
        alphabet = ActionAlphabet(tuple(data["alphabet"]))
    except (TypeError, ValueError) as exc:
        raise ModelValidationError(f"bad alphabet: {exc}") from None
    try:
        prior = np.array(data["prior"], dtype=float)
        transition = np.array(data["transition"], dtype=float)
        emission = np.array(data["emission"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelValidationError(f"non-numeric parameters: {exc}") from None
    model = HmmModel(alphabet, prior, transition, emission)
    if data["M"] != model.n_states:
        raise ModelValidationError(f"M={data['M']!r} does not match the prior length {model.n_states}")
    provenance = data.get("provenance") or {}
    if not isinstance(provenance, dict):
        raise ModelValidationError("provenance must be an object")
    return model, provenance


def loads(text: str) -> tuple:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelValidationError(f"model file is not valid JSON: {exc}") from None
    return from_dict(data)


def save(model: HmmModel, path, provenance: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model, provenance))


def load(path) -> tuple:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def corpus_digest(corpus: EncodedCorpus) -> str:
    h = hashlib.sha256()
    h.update(",".join(corpus.alphabet.symbols).encode())
    for seq in corpus.sequences:
        h.update(b"\n" + seq.session_id.encode() + b":")
        h.update(np.asarray(seq.observations, dtype="<i8").tobytes())
    return h.hexdigest()
