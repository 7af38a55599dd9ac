"""Two-qubit gate estimates for both synthesis pipelines."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from ..pauli import PauliDecomposition, truncate_fraction
from .diffop import mpo_cx_count


@dataclass(frozen=True)
class ResourceReport:
    delta: float
    retained_strings: int
    pauli_cx_bound: int  # sum of 2(w-1) over retained strings, one Trotter step
    n_q: int | None = None
    dst_nominal: int | None = None
    mpo_cx: int | None = None
    mixed_derivative_cx: int | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def resource_estimate(dec: PauliDecomposition, delta: float = 0.0, n_q: int | None = None) -> ResourceReport:
    """CX counts: Pauli pipeline bound and formula counts for the diff-op pipeline.

    The Pauli bound counts each retained string once, as in a first-order
    step.  ``n_q`` (omitted means no diff-op entries) adds the nominal DST
    count ``n_q**2`` and, for ``n_q >= 3``, the MPO count
    ``9 n_q^2 - 33 n_q + 34`` and its square for the interleaved mixed term.
    """
    kept, _ = truncate_fraction(dec, delta)
    terms = kept.non_identity()
    bound = sum(2 * (P.weight - 1) for P, _ in terms)
    dst = mpo = mixed = None
    if n_q is not None:
        dst = n_q * n_q
        if n_q >= 3:
            mpo = mpo_cx_count(n_q)
            mixed = mpo * mpo
    return ResourceReport(delta, len(terms), bound, n_q, dst, mpo, mixed)
