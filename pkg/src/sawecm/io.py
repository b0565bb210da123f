"""File formats: rule JSON, family and snapshot CSV, sparsity and summary dumps.

Rules store 1-based point indices. Family CSV layout::

    M,k
    W_1,...,W_M
    n_1                      # column count of block 1
    <M rows of n_1 values>
    n_2
    ...

Snapshot CSV starts with a ``M,P`` header line followed by M rows of P values.
"""

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParseError
from .saw import AdaptiveRule, SubspaceFamily

__all__ = [
    "RuleFile",
    "SCHEMA_VERSION",
    "rule_to_file",
    "emit_rule",
    "parse_rule",
    "write_rule",
    "read_rule",
    "emit_family",
    "parse_family",
    "write_family",
    "read_family",
    "read_snapshots",
    "write_snapshots",
    "write_sparsity",
    "write_summary",
    "atomic_write",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RuleFile:
    """Serializable rule: ``indices`` are 1-based and strictly increasing."""

    M: int
    k: int
    indices: tuple
    weights: tuple
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        idx = list(self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ParseError("rule indices must be strictly increasing")
        if idx and (idx[0] < 1 or idx[-1] > self.M):
            raise ParseError(f"rule indices must lie in [1, {self.M}]")
        if len(self.weights) != self.k:
            raise ParseError(f"expected {self.k} weight arrays, got {len(self.weights)}")
        for w in self.weights:
            if len(w) != len(idx):
                raise ParseError("every weight array needs one entry per index")

    def to_rule(self):
        return AdaptiveRule(
            indices=np.asarray(self.indices, dtype=int) - 1,
            weights=np.asarray(self.weights, dtype=float).reshape(self.k, len(self.indices)),
            mode_counts=tuple(self.metadata.get("mode_counts", ())),
            strategy=self.metadata.get("strategy", ""),
        )


def rule_to_file(rule, M, metadata=None):
    meta = {"strategy": rule.strategy, "mode_counts": [int(m) for m in rule.mode_counts]}
    meta.update(metadata or {})
    return RuleFile(
        M=int(M),
        k=int(rule.n_subspaces),
        indices=tuple(int(i) + 1 for i in rule.indices),
        weights=tuple(tuple(float(x) for x in row) for row in rule.weights),
        metadata=meta,
    )


def emit_rule(rf):
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    doc = {
        "schema_version": rf.schema_version,
        "M": rf.M,
        "k": rf.k,
        "indices": list(rf.indices),
        "weights": [list(w) for w in rf.weights],
        "metadata": rf.metadata,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def parse_rule(text):
    try:
        doc = json.loads(text)
        rf = RuleFile(
            M=int(doc["M"]),
            k=int(doc["k"]),
            indices=tuple(int(i) for i in doc["indices"]),
            weights=tuple(tuple(float(x) for x in w) for w in doc["weights"]),
            metadata=dict(doc.get("metadata", {})),
            schema_version=int(doc.get("schema_version", SCHEMA_VERSION)),
        )
    except ParseError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed rule file: {exc}") from exc
    if rf.schema_version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {rf.schema_version}")
    return rf


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rule(path, rf):
    atomic_write(path, emit_rule(rf))


def read_rule(path):
    with open(path) as fh:
        return parse_rule(fh.read())


def _fmt(x):
    return repr(float(x))


def emit_family(family):
    out = io.StringIO()
    M, k = family.n_points, family.n_subspaces
    out.write(f"{M},{k}\n")
    out.write(",".join(_fmt(w) for w in family.full_weights) + "\n")
    for A in family.sample_matrices:
        out.write(f"{A.shape[1]}\n")
        for row in A:
            out.write(",".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def _floats(row, lineno, expected=None):
    try:
        vals = [float(v) for v in row]
    except ValueError as exc:
        raise ParseError(f"line {lineno}: {exc}") from exc
    if expected is not None and len(vals) != expected:
        raise ParseError(f"line {lineno}: expected {expected} values, got {len(vals)}")
    if not np.all(np.isfinite(vals)):
        raise ParseError(f"line {lineno}: non-finite value")
    return vals


def _header(row, lineno, names):
    if len(row) != 2:
        raise ParseError(f"line {lineno}: header must be '{names}'")
    try:
        a, b = (int(v) for v in row)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: header must be '{names}'") from exc
    if a < 1 or b < 1:
        raise ParseError(f"line {lineno}: '{names}' must be positive")
    return a, b


def parse_family(text, **family_options):
    """Parse family CSV text into a :class:`SubspaceFamily`.

    Raises
    ------
    ParseError
        On any structural or numeric problem.
    """
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty family file")
    M, k = _header(rows[0], 1, "M,k")
    if len(rows) < 2:
        raise ParseError("missing weight line")
    W = np.array(_floats(rows[1], 2, M))
    if np.any(W <= 0):
        raise ParseError("line 2: weights must be strictly positive")
    pos = 2
    mats = []
    for i in range(k):
        if pos >= len(rows):
            raise ParseError(f"block {i + 1}: missing column-count line")
        try:
            (n,) = (int(v) for v in rows[pos])
        except ValueError as exc:
            raise ParseError(f"line {pos + 1}: expected a single column count") from exc
        if n < 1:
            raise ParseError(f"line {pos + 1}: column count must be positive")
        block = rows[pos + 1 : pos + 1 + M]
        if len(block) != M:
            raise ParseError(f"block {i + 1}: expected {M} rows, got {len(block)}")
        mats.append(
            np.array([_floats(r, pos + 2 + j, n) for j, r in enumerate(block)])
        )
        pos += 1 + M
    if pos != len(rows):
        raise ParseError(f"trailing content after {k} blocks (line {pos + 1})")
    return SubspaceFamily(mats, W, **family_options)


def write_family(path, family):
    atomic_write(path, emit_family(family))


def read_family(path, **family_options):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    return parse_family(text, **family_options)


def write_snapshots(path, snapshots):
    D = np.asarray(snapshots, dtype=float)
    if str(path).endswith(".npy"):
        np.save(path, D)
        return
    lines = [f"{D.shape[0]},{D.shape[1]}"]
    lines += [",".join(_fmt(v) for v in row) for row in D]
    atomic_write(path, "\n".join(lines) + "\n")


def read_snapshots(path):
    """Snapshot matrix (row = spatial point, column = snapshot) from .npy or CSV."""
    if str(path).endswith(".npy"):
        D = np.load(path)
        if D.ndim != 2:
            raise ParseError("snapshot array must be two-dimensional")
        return D.astype(float)
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError("empty snapshot file")
    M, P = _header(rows[0], 1, "M,P")
    if len(rows) - 1 != M:
        raise ParseError(f"expected {M} rows, got {len(rows) - 1}")
    return np.array([_floats(r, j + 2, P) for j, r in enumerate(rows[1:])])


def write_sparsity(path, rule, M):
    """k x M 0/1 occupancy CSV with a leading strategy column."""
    occ = rule.sparsity(M)
    lines = ["strategy,subspace," + ",".join(str(g + 1) for g in range(M))]
    for i, row in enumerate(occ):
        lines.append(f"{rule.strategy},{i + 1}," + ",".join(str(int(v)) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def write_summary(path, rows):
    """Summary CSV: one row per strategy (dicts with matching keys)."""
    if not rows:
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    atomic_write(path, buf.getvalue())
