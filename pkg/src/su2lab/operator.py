"""Labeled Hermitian operators over a digitized basis."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ValidityError

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class OperatorMatrix:
    """A square operator together with the label of every basis state.

    ``matrix`` may be a dense array or a scipy sparse matrix; builders keep
    large operators sparse and densify on request.
    """

    matrix: Any
    labels: tuple = ()

    def __post_init__(self):
        shape = self.matrix.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise DimensionError(f"operator must be square, got {shape}")
        if self.labels and len(self.labels) != shape[0]:
            raise DimensionError("label count does not match dimension")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            if self.dim > DENSE_LIMIT:
                raise DimensionError(f"refusing to densify dimension {self.dim} > {DENSE_LIMIT}")
            return self.matrix.toarray()
        return np.asarray(self.matrix)

    def sparse(self) -> sp.csr_matrix:
        return sp.csr_matrix(self.matrix)

    def hermiticity_residual(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        if sp.issparse(diff):
            return float(abs(diff).max()) if diff.nnz else 0.0
        return float(np.max(np.abs(diff))) if diff.size else 0.0

    def check_hermitian(self, tol: float = 1e-10) -> None:
        r = self.hermiticity_residual()
        if r > tol:
            raise ValidityError(f"operator is not Hermitian (residual {r:.3e})")

    def __array__(self, dtype=None, copy=None):
        arr = self.dense()
        return arr.astype(dtype) if dtype is not None else arr

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.matrix + other.matrix, self.labels or other.labels)

    def expectation(self, psi: np.ndarray) -> float:
        psi = np.asarray(psi)
        return float(np.real(np.vdot(psi, self.matrix @ psi)))

    def save_binary(self, path) -> None:
        """Header line of JSON, then row-major little-endian complex128 data."""
        arr = np.ascontiguousarray(self.dense(), dtype="<c16")
        header = {"dim": self.dim, "dtype": "complex128", "order": "C", "labels": [list(map(_plain, l)) if isinstance(l, tuple) else _plain(l) for l in self.labels]}
        with open(path, "wb") as fh:
            fh.write((json.dumps(header) + "\n").encode())
            fh.write(arr.tobytes())

    @classmethod
    def load_binary(cls, path) -> "OperatorMatrix":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode())
            data = np.frombuffer(fh.read(), dtype="<c16")
        n = header["dim"]
        labels = tuple(tuple(l) if isinstance(l, list) else l for l in header["labels"])
        return cls(data.reshape(n, n).copy(), labels)


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def as_matrix(op) -> Any:
    """Underlying matrix of an OperatorMatrix, or the argument itself."""
    return op.matrix if isinstance(op, OperatorMatrix) else op


def labels_of(op, default: Sequence = ()) -> tuple:
    return op.labels if isinstance(op, OperatorMatrix) else tuple(default)
