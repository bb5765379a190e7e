"""Benchmark inputs: the running-example ontology, linear query sequences,
random Erdős–Rényi ABoxes and clause-count tables."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .dl import CQ, ABox, Atom, TBox, normalize, parse_tbox
from .errors import OutOfRange
from .pipeline import METHODS, rewrite

RNG_NAME = "numpy PCG64"

EXAMPLE_TBOX_TEXT = """\
A sub ex P
ex P sub A
P rsub S
P rsub R-
B sub ex Q
ex Q sub B
Q rsub R
Q rsub S-
"""

SEQUENCES = {
    1: "RRSRSRSRRSRRSSR",
    2: "SRRRRRSRSRRRRRR",
    3: "SRRSSRSRSRRSRRSS",
}


def example_ontology() -> TBox:
    return normalize(parse_tbox(EXAMPLE_TBOX_TEXT))


EXAMPLE_CHAIN = "RSRRSRR"


def chain_query(letters: str) -> CQ:
    """Chain ``L1(x0,x1), ..., Ln(x(n-1),xn)`` with both endpoints as answers."""
    if not letters:
        raise OutOfRange("a chain query needs at least one atom")
    atoms = [Atom(c, (f"x{i}", f"x{i + 1}")) for i, c in enumerate(letters)]
    return CQ(atoms, ["x0", f"x{len(letters)}"])


def example_query() -> CQ:
    """The 7-atom running example chain over ``x0 .. x7``."""
    return chain_query(EXAMPLE_CHAIN)


def linear_query(sequence: int, n: int) -> CQ:
    """Prefix of length ``n`` of a benchmark sequence, as a chain query."""
    if sequence not in SEQUENCES:
        raise OutOfRange(f"unknown sequence {sequence}")
    letters = SEQUENCES[sequence]
    if not 1 <= n <= len(letters):
        raise OutOfRange(f"sequence {sequence} has prefixes of length 1..{len(letters)}")
    return chain_query(letters[:n])


def gen_er_abox(V: int, p: float, q: float, seed: int, chunk: int = 256) -> ABox:
    """Directed G(V, p) graph over ``R`` plus independent ``A`` and ``B`` labels with probability ``q``."""
    if V < 1:
        raise OutOfRange("V must be positive")
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise OutOfRange("probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    names = [f"v{i}" for i in range(V)]
    roles = []
    for start in range(0, V, chunk):
        rows = min(chunk, V - start)
        hits = rng.random((rows, V - 1)) < p
        for r, c in zip(*np.nonzero(hits)):
            i = start + int(r)
            j = int(c) + (1 if c >= i else 0)
            roles.append(("R", names[i], names[j]))
    concepts = [("A", names[i]) for i in np.nonzero(rng.random(V) < q)[0]]
    concepts += [("B", names[i]) for i in np.nonzero(rng.random(V) < q)[0]]
    return ABox(concepts, roles)


def expected_counts(V: int, p: float, q: float) -> dict[str, tuple[float, float]]:
    """Mean and standard deviation of the role and concept fact counts."""
    pairs = V * (V - 1)
    return {
        "roles": (p * pairs, math.sqrt(pairs * p * (1 - p))),
        "concepts": (2 * q * V, math.sqrt(2 * V * q * (1 - q))),
    }


def format_dataset(abox: ABox, V: int, p: float, q: float, seed: int) -> str:
    header = [
        f"# generator: Erdos-Renyi V={V} p={p} q={q} seed={seed}",
        f"# rng: {RNG_NAME}",
    ]
    lines = [f"{c}({a})" for c, a in sorted(abox.concept_facts)]
    lines += [f"{r}({a},{b})" for r, a, b in sorted(abox.role_facts, key=lambda f: (f[0], int(f[1][1:]), int(f[2][1:])))]
    return "\n".join(header + lines) + "\n"


def clause_counts(methods: Sequence[str], sequence: int, n_max: int) -> list[list[int]]:
    tbox = example_ontology()
    rows = []
    for n in range(1, n_max + 1):
        cq = linear_query(sequence, n)
        rows.append([n] + [len(rewrite(m, tbox, cq)) for m in methods])
    return rows


def stats_table(methods: Sequence[str], sequence: int, n_max: int) -> str:
    """CSV of clause counts over H-complete ABoxes, one row per query length."""
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", *methods])
    writer.writerows(clause_counts(methods, sequence, n_max))
    return buf.getvalue()


def write_table(path: str | Path, methods: Sequence[str], sequence: int, n_max: int) -> Path:
    """Write the CSV and a bar chart with the same stem; returns the chart path."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    text = stats_table(methods, sequence, n_max)
    path.write_text(text)
    rows = list(csv.reader(io.StringIO(text)))[1:]
    png = path.with_suffix(".png")
    fig, ax = plt.subplots(figsize=(7, 3.5))
    width = 0.8 / max(len(methods), 1)
    xs = np.arange(1, len(rows) + 1)
    for k, m in enumerate(methods):
        ax.bar(xs + (k - (len(methods) - 1) / 2) * width, [int(r[k + 1]) for r in rows], width, label=m)
    ax.set_xlabel("query size (atoms)")
    ax.set_ylabel("clauses")
    ax.set_title(f"Rewriting size, sequence {sequence}")
    if rows:
        ax.set_xticks(xs)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png, dpi=120)
    plt.close(fig)
    return png
