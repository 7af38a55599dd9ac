"""Eigenanalysis, precision metrics, cutoff scans and the Mathieu bound."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh

from .digitize import TWO_PI, DigitizationConfig, omega_max_analytic
from .errors import NumericError, ValidityError
from .hamiltonian import build_mixed
from .operator import DENSE_LIMIT, OperatorMatrix, as_matrix, labels_of
from .parallel import worker_count


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple = ()
    provenance: dict = field(default_factory=dict)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude amplitude of each column real and positive."""
    out = np.array(vecs, dtype=complex, copy=True)
    for j in range(out.shape[1]):
        col = out[:, j]
        k = int(np.argmax(np.abs(col) - 1e-12 * np.arange(col.size)))
        out[:, j] = col * (abs(col[k]) / col[k])
    if np.allclose(out.imag, 0.0, atol=1e-14):
        return out.real
    return out


def eigensolve(H, k: int = 1, tol: float = 1e-12, provenance: dict | None = None) -> SpectrumResult:
    """Lowest ``k`` eigenpairs of a Hermitian operator.

    Dense ``eigh`` up to dimension 4096, Lanczos (``eigsh``) above that with
    a fixed start vector so repeated calls agree bit for bit.
    """
    m = as_matrix(H)
    op = H if isinstance(H, OperatorMatrix) else OperatorMatrix(m)
    op.check_hermitian()
    n = op.dim
    if not 1 <= k <= n:
        raise ValidityError(f"k must lie in [1, {n}]")
    if n <= DENSE_LIMIT or k >= n - 1:
        dense = m.toarray() if sp.issparse(m) else np.asarray(m)
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        v0 = np.ones(n) / math.sqrt(n)
        vals, vecs = eigsh(sp.csr_matrix(m), k=k, which="SA", tol=tol, v0=v0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        res = np.linalg.norm(m @ vecs - vecs * vals, axis=0)
        scale = max(1.0, float(abs(sp.csr_matrix(m)).sum(axis=1).max()))
        if np.any(res > 1e-7 * scale):
            raise NumericError(f"eigsh residual {res.max():.2e} too large")
    return SpectrumResult(np.asarray(vals), _fix_phases(vecs), labels_of(H), dict(provenance or {}))


def precision_eps0(E_prime: float, E_ref: float) -> float:
    """Relative ground-energy error ``|1 - E'/E_ref|``."""
    if E_ref == 0:
        raise ZeroDivisionError("reference energy is zero")
    return abs(1.0 - E_prime / E_ref)


def ground_energy(cfg: DigitizationConfig, drop_first_derivatives: bool = False) -> float:
    return eigensolve(build_mixed(cfg, drop_first_derivatives).total, 1).ground_energy


@lru_cache(maxsize=32)
def oracle_ground_energy(g: float, n_q: int = 6, nu_max: int = 3, derivative_spacing: str = "interior") -> float:
    """High-resolution reference ``E0*`` (default N=64, nu_max=3, automatic cutoff)."""
    cfg = DigitizationConfig(g, n_q, nu_max, "auto", derivative_spacing)
    return ground_energy(cfg)


@dataclass(frozen=True)
class ScanResult:
    omega_max: np.ndarray
    energies: np.ndarray
    abs_derivative: np.ndarray  # on omega_max[1:-1]
    argmin: float
    argmin_index: int  # index into omega_max

    def to_csv(self) -> str:
        lines = ["omega_max,E0,absdEdomega"]
        d = np.concatenate([[np.nan], self.abs_derivative, [np.nan]])
        for w, e, de in zip(self.omega_max, self.energies, d):
            lines.append(f"{w:.17g},{e:.17g},{'' if np.isnan(de) else f'{de:.17g}'}")
        return "\n".join(lines) + "\n"


def scan_omega_max(
    g: float,
    N: int,
    omega_range: tuple[float, float] | None = None,
    steps: int = 61,
    drop_first_derivatives: bool = False,
    nu_max: int = 1,
    workers: int | None = None,
) -> ScanResult:
    """Ground energy versus cutoff and the stationary point of ``|dE0/domega_max|``.

    The default range spans 0.5x to 1.6x of :func:`omega_max_analytic`,
    clipped at ``2 pi``.
    """
    if steps < 5:
        raise ValidityError("a scan needs at least 5 samples")
    if omega_range is None:
        w0 = omega_max_analytic(g, N)
        omega_range = (0.5 * w0, min(1.6 * w0, TWO_PI))
    lo, hi = map(float, omega_range)
    if not (0 < lo < hi <= TWO_PI + 1e-12):
        raise ValidityError(f"degenerate or invalid range ({lo}, {hi})")
    ws = np.linspace(lo, min(hi, TWO_PI), steps)

    def one(w):
        cfg = DigitizationConfig(g, nu_max=nu_max, omega_max=float(w), n_q=None, n_omega=N)
        return ground_energy(cfg, drop_first_derivatives)

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        energies = np.array(list(pool.map(one, ws)))
    deriv = np.abs((energies[2:] - energies[:-2]) / (ws[2:] - ws[:-2]))
    i = int(np.argmin(deriv)) + 1
    return ScanResult(ws, energies, deriv, float(ws[i]), i)


def mathieu_b2(q: float, order: int = 40, tol: float = 1e-13, max_order: int = 10240) -> float:
    """Characteristic value ``b_2(q)`` of the odd, period-pi Mathieu function.

    Lowest eigenvalue of the tridiagonal matrix with diagonal ``(2k)^2`` and
    off-diagonal ``q`` (k = 1..order).  The order is doubled until the value
    changes by less than ``tol`` relative, since large ``|q|`` needs more
    than 40 terms.
    """
    def lowest(K):
        k = np.arange(1, K + 1, dtype=float)
        return float(eigh_tridiagonal(4.0 * k**2, np.full(K - 1, float(q)), eigvals_only=True, select="i", select_range=(0, 0))[0])

    K = max(order, 2)
    prev = lowest(K)
    while K < max_order:
        K *= 2
        cur = lowest(K)
        floor = 64 * np.finfo(float).eps * 4.0 * K * K  # attainable accuracy at this order
        if abs(cur - prev) <= max(tol * max(1.0, abs(cur)), floor):
            return cur
        prev = cur
    raise NumericError(f"b2({q}) did not converge by order {max_order}")


def mathieu_bound(g: float) -> float:
    """Variational energy ``(g^4 b2(-8/g^4) - 4 g^4 + 16) / (4 g^2)`` of the product ansatz."""
    if g <= 0:
        raise ValidityError("g must be positive")
    g4 = g**4
    return (g4 * mathieu_b2(-8.0 / g4) - 4.0 * g4 + 16.0) / (4.0 * g * g)


def nu_projector_weights(cfg: DigitizationConfig, nu_min: int = 2) -> np.ndarray:
    """Indicator over mixed-basis rows with ``nu >= nu_min``."""
    block = cfg.N**2
    w = np.zeros((cfg.nu_max + 1) * block)
    w[nu_min * block :] = 1.0
    return w


def leakage(state, cfg: DigitizationConfig) -> float:
    """Weight ``<Pi_{nu>1}>`` outside the ``nu in {0, 1}`` sector."""
    psi = np.asarray(getattr(state, "amplitudes", state))
    if psi.size != (cfg.nu_max + 1) * cfg.N**2:
        raise ValidityError("state dimension does not match the configuration")
    if cfg.nu_max < 2:
        warnings.warn("nu_max < 2: leakage is identically zero", stacklevel=2)
        return 0.0
    p = np.abs(psi) ** 2
    return float(np.dot(nu_projector_weights(cfg), p) / p.sum())
