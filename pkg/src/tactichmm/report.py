"""Turning a trained model into readable tactic summaries.

Tactics are displayed as ``S1 .. SM`` (1-based) while every function works
with 0-based state indices.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple

import numpy as np

from .errors import ModelValidationError
from .model import HmmModel

DEFAULT_THRESHOLD = 0.05
DIFFUSE = "(diffuse)"
MAX_ALIGN_STATES = 8


def tactic_name(i: int) -> str:
    return f"S{i + 1}"


def _check_threshold(threshold):
    if not 0 <= threshold < 1:
        raise ValueError(f"threshold must lie in [0, 1), got {threshold}")


def prune_emissions(model: HmmModel, threshold: float = DEFAULT_THRESHOLD) -> list:
    """Per tactic, the ``(action, p)`` pairs with ``p >= threshold``, largest first.

    Probabilities are returned exactly as stored; nothing is renormalized.
    """
    _check_threshold(threshold)
    table = []
    for row in model.emission:
        # stable sort keeps alphabet order among equal probabilities
        order = sorted(range(len(row)), key=lambda k: -row[k])
        table.append([(model.alphabet.symbols[k], float(row[k])) for k in order if row[k] >= threshold])
    return table


def label_tactics(model: HmmModel, threshold: float = DEFAULT_THRESHOLD) -> list:
    """Label each tactic by its retained actions, e.g. ``"W+T"``."""
    return ["+".join(a for a, _ in kept) or DIFFUSE for kept in prune_emissions(model, threshold)]


def dominant_path(model: HmmModel) -> list:
    """Greedy walk: start at the most likely first tactic, follow row maxima.

    The walk stops before revisiting a tactic.  ``np.argmax`` returns the
    first maximum, so ties go to the lower index.
    """
    path = [int(np.argmax(model.prior))]
    seen = set(path)
    while True:
        nxt = int(np.argmax(model.transition[path[-1]]))
        if nxt in seen:
            return path
        path.append(nxt)
        seen.add(nxt)


def luminance(p: float) -> int:
    """Grey level for probability ``p``: 255 is white (p=0), 0 is black (p=1)."""
    return int(math.floor(255.0 * (1.0 - float(p)) + 0.5))


def _check_row_stochastic(matrix, atol=1e-6):
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ModelValidationError(f"transition matrix must be square, got shape {m.shape}")
    if np.any(m < 0) or np.any(m > 1) or not np.all(np.isfinite(m)):
        raise ModelValidationError("transition entries must lie in [0, 1]")
    dev = np.abs(m.sum(axis=1) - 1.0)
    if np.any(dev > atol):
        raise ModelValidationError(f"row {int(np.argmax(dev))} of the transition matrix does not sum to 1")
    return m


def heatmap_svg(transition, cell: int = 48, labels=None) -> str:
    """SVG grid of the transition matrix, rows = source tactic, columns = destination."""
    m = _check_row_stochastic(transition)
    n = m.shape[0]
    labels = labels or [tactic_name(i) for i in range(n)]
    margin = 40
    size = margin + n * cell
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="rgb(255,255,255)"/>',
    ]
    for i in range(n):
        y = margin + i * cell + cell // 2
        x = margin + i * cell + cell // 2
        out.append(f'<text x="{margin // 2}" y="{y}" text-anchor="middle" dominant-baseline="middle" font-size="12">{labels[i]}</text>')
        out.append(f'<text x="{x}" y="{margin // 2}" text-anchor="middle" dominant-baseline="middle" font-size="12">{labels[i]}</text>')
    for i in range(n):
        for j in range(n):
            g = luminance(m[i, j])
            out.append(
                f'<rect x="{margin + j * cell}" y="{margin + i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({g},{g},{g})" stroke="rgb(200,200,200)" data-from="{i}" data-to="{j}" '
                f'data-p="{m[i, j]:.6f}"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap_text(transition) -> str:
    m = _check_row_stochastic(transition)
    n = m.shape[0]
    names = [tactic_name(i) for i in range(n)]
    lines = ["from\\to " + " ".join(f"{s:>6}" for s in names)]
    for i in range(n):
        lines.append(f"{names[i]:<7} " + " ".join(f"{m[i, j]:6.3f}" for j in range(n)))
    return "\n".join(lines) + "\n"


def render_heatmap(transition, output=None, format: str = "svg") -> str:
    """Render the transition matrix as SVG or text; also writes to ``output`` if given.

    ``output`` may be a path or a writable file object (text or binary).
    """
    if format == "svg":
        rendered = heatmap_svg(transition)
    elif format == "text":
        rendered = heatmap_text(transition)
    else:
        raise ValueError(f"heatmap format must be 'svg' or 'text', got {format!r}")
    if output is None:
        return rendered
    if isinstance(output, (str, bytes)) or hasattr(output, "__fspath__"):
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    elif isinstance(output, (io.RawIOBase, io.BufferedIOBase)):
        output.write(rendered.encode("utf-8"))
    else:
        output.write(rendered)
    return rendered


class Alignment(NamedTuple):
    """``permutation[i]`` is the state of model B matched to state ``i`` of model A."""

    permutation: tuple
    residual: float
    transition_distance: float


def align(model_a: HmmModel, model_b: HmmModel, transition_weight: float = 0.0) -> Alignment:
    """Relabel ``model_b`` to best match ``model_a`` by exhaustive search.

    The objective is the total L1 distance between emission matrices, plus
    ``transition_weight`` times the transition L1 distance.  A small positive
    weight separates tactics whose emissions are nearly identical.  The
    lexicographically first optimal permutation is returned, so a model
    aligned against itself yields the identity.  ``residual`` is always the
    emission distance alone.
    """
    if model_a.alphabet != model_b.alphabet:
        raise ValueError("models have different alphabets")
    if model_a.n_states != model_b.n_states:
        raise ValueError(f"models have different state counts ({model_a.n_states} vs {model_b.n_states})")
    M = model_a.n_states
    if M > MAX_ALIGN_STATES:
        raise ValueError(f"exhaustive alignment is limited to {MAX_ALIGN_STATES} states, got {M}")
    cost = np.abs(model_a.emission[:, None, :] - model_b.emission[None, :, :]).sum(axis=2)
    perms = np.array(list(permutations(range(M))), dtype=np.intp)
    totals = cost[np.arange(M), perms].sum(axis=1)
    objective = totals
    if transition_weight:
        tb = model_b.transition[perms[:, :, None], perms[:, None, :]]
        objective = totals + transition_weight * np.abs(tb - model_a.transition).sum(axis=(1, 2))
    k = int(np.argmin(objective))
    perm = perms[k]
    aligned = model_b.permuted(perm)
    tdist = float(np.abs(aligned.transition - model_a.transition).sum())
    return Alignment(tuple(int(p) for p in perm), float(totals[k]), tdist)


@dataclass(frozen=True)
class TacticReport:
    """Readable summary of a trained model."""

    pruned_emissions: list
    transition: np.ndarray
    dominant_path: list
    labels: list
    threshold: float
    alphabet: tuple = ()

    @property
    def path_line(self) -> str:
        return " -> ".join(tactic_name(i) for i in self.dominant_path)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "alphabet": list(self.alphabet),
            "tactics": [
                {
                    "name": tactic_name(i),
                    "label": self.labels[i],
                    "emissions": {a: p for a, p in kept},
                }
                for i, kept in enumerate(self.pruned_emissions)
            ],
            "transition": self.transition.tolist(),
            "dominant_path": [tactic_name(i) for i in self.dominant_path],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        syms = list(self.alphabet)
        lines = [f"Emission probabilities (entries below {self.threshold:g} omitted)"]
        lines.append("tactic  " + " ".join(f"{s:>6}" for s in syms) + "  label")
        for i, kept in enumerate(self.pruned_emissions):
            cells = dict(kept)
            row = " ".join(f"{cells[s]:6.3f}" if s in cells else f"{'':>6}" for s in syms)
            lines.append(f"{tactic_name(i):<7} {row}  {self.labels[i]}")
        lines.append("")
        lines.append("Transition probabilities (row = from, column = to)")
        lines.append(heatmap_text(self.transition).rstrip("\n"))
        lines.append("")
        lines.append(f"dominant path: {self.path_line}")
        return "\n".join(lines) + "\n"


def build_report(model: HmmModel, threshold: float = DEFAULT_THRESHOLD) -> TacticReport:
    return TacticReport(
        pruned_emissions=prune_emissions(model, threshold),
        transition=np.array(model.transition),
        dominant_path=dominant_path(model),
        labels=label_tactics(model, threshold),
        threshold=float(threshold),
        alphabet=model.alphabet.symbols,
    )
