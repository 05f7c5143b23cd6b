"""Synthetic datasets and plain-text matrix I/O."""
from __future__ import annotations

import csv
import hashlib
import io
import os
import tempfile
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .densities import Case
from .tweedie import TweedieModel, tweedie_sample

__all__ = [
    "Kind",
    "DatasetSpec",
    "gen_dataset",
    "block_labels",
    "read_matrix",
    "write_matrix",
    "atomic_write_text",
    "fingerprint",
]


class Kind(str, Enum):
    TWEEDIE_SCALAR = "tweedie_scalar"
    MULTINOMIAL = "multinomial"
    BLOCK_MATRIX = "block_matrix"
    FROM_FILE = "from_file"


_DEFAULTS = {
    Kind.TWEEDIE_SCALAR: {"case": "gaussian", "mu": 10.0, "phi": 1.0, "n": 10_000},
    Kind.MULTINOMIAL: {"dim": 1000, "trials": 10_000_000},
    Kind.BLOCK_MATRIX: {"blocks": [[30, 20], [20, 10]], "high": 10.0, "noise": 1.0},
    Kind.FROM_FILE: {"path": None, "format": None},
}


@dataclass(frozen=True)
class DatasetSpec:
    """A dataset recipe: ``kind`` plus kind-specific parameters.

    Missing parameters take the defaults of the corresponding experiment.
    """

    kind: Kind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = Kind(self.kind)
        unknown = set(self.params) - set(_DEFAULTS[kind])
        if unknown:
            raise ValueError(f"unknown parameters for {kind.value}: {sorted(unknown)}")
        merged = {**_DEFAULTS[kind], **self.params}
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", merged)
        self._validate()

    def _validate(self):
        p = self.params
        if self.kind is Kind.TWEEDIE_SCALAR:
            Case(p["case"])
            if not (p["mu"] > 0 and p["phi"] > 0 and int(p["n"]) > 0):
                raise ValueError("mu, phi and n must be positive")
        elif self.kind is Kind.MULTINOMIAL:
            if int(p["dim"]) < 1 or int(p["trials"]) < 1:
                raise ValueError("dim and trials must be positive")
        elif self.kind is Kind.BLOCK_MATRIX:
            if not p["blocks"] or any(int(r) < 1 or int(c) < 1 for r, c in p["blocks"]):
                raise ValueError("block sizes must be positive")
            if p["high"] < 0 or p["noise"] <= 0:
                raise ValueError("block amplitude must be >= 0 and noise > 0")
        elif not p["path"]:
            raise ValueError("from_file needs a path")


def gen_dataset(spec: DatasetSpec, seed: int = 0) -> np.ndarray:
    """Generate the dataset described by ``spec``; deterministic in ``seed``."""
    p = spec.params
    if spec.kind is Kind.TWEEDIE_SCALAR:
        case = Case(p["case"])
        return tweedie_sample(TweedieModel(p["mu"], p["phi"], case.p), int(p["n"]), seed)
    rng = np.random.default_rng(seed)
    if spec.kind is Kind.MULTINOMIAL:
        # normalized iid uniform draws, not a Dirichlet(1) sample
        prob = rng.random(int(p["dim"]))
        prob /= prob.sum()
        return rng.multinomial(int(p["trials"]), prob).astype(float)
    if spec.kind is Kind.BLOCK_MATRIX:
        blocks = [(int(r), int(c)) for r, c in p["blocks"]]
        F = sum(r for r, _ in blocks)
        N = sum(c for _, c in blocks)
        V = np.zeros((F, N))
        r0 = c0 = 0
        for r, c in blocks:
            V[r0:r0 + r, c0:c0 + c] = rng.uniform(0.0, p["high"], (r, c))
            r0 += r
            c0 += c
        # (0, noise] keeps every entry strictly positive
        return V + p["noise"] * (1.0 - rng.random((F, N)))
    return read_matrix(p["path"], p["format"])


def block_labels(spec: DatasetSpec) -> np.ndarray:
    """Row-cluster labels of a block matrix."""
    if spec.kind is not Kind.BLOCK_MATRIX:
        raise ValueError("labels exist only for block matrices")
    return np.concatenate([np.full(int(r), k) for k, (r, _) in enumerate(spec.params["blocks"])])


# -- matrix I/O --------------------------------------------------------------

def _delimiter(path, fmt):
    if fmt is None:
        fmt = "tsv" if str(path).lower().endswith((".tsv", ".tab")) else "csv"
    fmt = fmt.lower()
    if fmt not in ("csv", "tsv"):
        raise ValueError(f"unknown matrix format {fmt!r}")
    return "\t" if fmt == "tsv" else ","


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_matrix(path, format=None) -> np.ndarray:
    """Read a rectangular numeric CSV/TSV file (optional single header row)."""
    delim = _delimiter(path, format)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh, delimiter=delim), start=1)
                if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    if not all(_is_number(c.strip()) for c in rows[0][1]):
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: header but no data")
    width = len(rows[0][1])
    out = np.empty((len(rows), width))
    for k, (line, row) in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: line {line} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                out[k, j] = float(cell.strip())
            except ValueError:
                raise ValueError(f"{path}: line {line}, field {j + 1}: not a number: {cell!r}") from None
    return out


def _format_matrix(M, delim):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    buf = io.StringIO()
    for row in M:
        buf.write(delim.join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temporary file and an atomic rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, M, format=None):
    """Write a matrix (vectors become one column) with round-trip precision."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    atomic_write_text(path, _format_matrix(M, _delimiter(path, format)))


def fingerprint(M) -> dict:
    M = np.ascontiguousarray(np.asarray(M, dtype=float))
    return {"shape": list(M.shape), "sha256": hashlib.sha256(M.tobytes()).hexdigest()}
