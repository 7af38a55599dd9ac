"""Noisy execution and the mitigation chain.

Noise model: a two-qubit depolarizing channel after every CX (optionally
preceded by a coherent over-rotation ``exp(-i eps Z_c X_t)``) and
independent readout bit flips.  Single-qubit gates are noiseless.

Mitigation: Pauli twirling of every CX, readout twirling with random X
masks and classical correction, a mitigation circuit whose exact output is
known (Cliffordized for a single step, forward-then-backward otherwise),
renormalization of each Z string by the ratio of exact to measured
mitigation values, and a bootstrap over twirls.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import Circuit, Gate, mitigation_circuit, trotter_pauli
from .digitize import DigitizationConfig
from .errors import QubitBudgetError, ValidityError
from .parallel import child_seeds, rng_for, worker_count
from .pauli import PauliDecomposition, PauliString
from .sim import apply, apply_gate, apply_matrix, table_schedule

MAX_DM_QUBITS = 10
ODR_EPS = 1e-3


@dataclass(frozen=True)
class NoiseModel:
    """Error rates; ``p_ro_01`` / ``p_ro_10`` override ``p_ro`` per direction."""

    p2: float = 0.0
    p_ro: float = 0.0
    seed: int | None = None
    p_ro_01: float | None = None  # probability of reading 1 when the bit is 0
    p_ro_10: float | None = None
    cx_overrotation: float = 0.0

    def __post_init__(self):
        for name in ("p2", "p_ro", "p_ro_01", "p_ro_10"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v < 0.5:
                raise ValidityError(f"{name} must lie in [0, 0.5)")
        if not math.isfinite(self.cx_overrotation):
            raise ValidityError("cx_overrotation must be finite")

    @property
    def flip01(self) -> float:
        return self.p_ro if self.p_ro_01 is None else self.p_ro_01

    @property
    def flip10(self) -> float:
        return self.p_ro if self.p_ro_10 is None else self.p_ro_10

    def confusion(self) -> np.ndarray:
        """Column-stochastic ``P(read | true)`` for one qubit."""
        a, b = self.flip01, self.flip10
        return np.array([[1 - a, b], [a, 1 - b]])


# ---------------------------------------------------------------------------
# density-matrix execution


def _depolarize(t: np.ndarray, n: int, a: int, b: int, p: float) -> np.ndarray:
    if p == 0.0:
        return t
    src = [a, b, n + a, n + b]
    moved = np.moveaxis(t, src, [-4, -3, -2, -1])
    red = np.einsum("...ijij->...", moved)
    mixed = red[..., None, None, None, None] * (np.einsum("ik,jl->ijkl", np.eye(2), np.eye(2)) / 4.0)
    out = (1.0 - p) * moved + p * mixed
    return np.moveaxis(out, [-4, -3, -2, -1], src)


def _overrotation(eps: float) -> np.ndarray:
    zx = np.kron(np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    return np.cos(eps) * np.eye(4) - 1j * np.sin(eps) * zx


def density_matrix(circ: Circuit, noise: NoiseModel, psi0=None) -> np.ndarray:
    """Final density matrix of ``circ`` under the gate noise of ``noise``."""
    n = circ.n_qubits
    if n > MAX_DM_QUBITS:
        raise QubitBudgetError(f"{n} qubits exceed the density-matrix budget of {MAX_DM_QUBITS}")
    psi = np.zeros(1 << n, dtype=complex)
    if psi0 is None:
        psi[0] = 1.0
    else:
        psi[:] = np.asarray(getattr(psi0, "amplitudes", psi0))
    t = np.outer(psi, psi.conj()).reshape((2,) * (2 * n))
    over = _overrotation(noise.cx_overrotation) if noise.cx_overrotation else None
    for g in circ.gates:
        t = apply_gate(t, g)
        t = apply_gate(t, g, offset=n, conj=True)
        if g.kind == "cx":
            if over is not None:
                t = apply_matrix(t, over, list(g.qubits))
                t = apply_matrix(t, over.conj(), [n + q for q in g.qubits])
            t = _depolarize(t, n, g.qubits[0], g.qubits[1], noise.p2)
    return t.reshape(1 << n, 1 << n)


def global_depolarizing(rho: np.ndarray, p: float) -> np.ndarray:
    """``p rho + (1 - p) I / d``: traceless expectations scale by ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValidityError("p must lie in [0, 1]")
    d = rho.shape[0]
    return p * rho + (1.0 - p) * np.eye(d) / d


# ---------------------------------------------------------------------------
# measurement


def _z_strings(obs: PauliDecomposition) -> tuple[float, list[PauliString], np.ndarray]:
    strings, coeffs = [], []
    for P, c in obs.non_identity():
        if P.x:
            raise ValidityError(f"observable term {P.label} is not a Z string")
        strings.append(P)
        coeffs.append(c)
    return obs.identity_coefficient, strings, np.array(coeffs)


def _parity_signs(strings: list[PauliString], n: int) -> np.ndarray:
    """``signs[s, x] = (-1)^{popcount(x & mask_s)}`` with qubit 0 as MSB."""
    x = np.arange(1 << n)
    out = np.empty((len(strings), 1 << n))
    for i, P in enumerate(strings):
        bits = np.zeros(1 << n, dtype=np.int64)
        for q in P.support():
            bits ^= (x >> (n - 1 - q)) & 1
        out[i] = 1 - 2 * bits
    return out


def _readout(probs: np.ndarray, n: int, noise: NoiseModel) -> np.ndarray:
    if noise.flip01 == 0.0 and noise.flip10 == 0.0:
        return probs
    t = probs.reshape((2,) * n)
    c = noise.confusion()
    for q in range(n):
        t = apply_matrix(t, c, [q])
    return t.reshape(-1)


def measure_strings(
    probs: np.ndarray,
    strings: list[PauliString],
    noise: NoiseModel,
    rng: np.random.Generator,
    trex: int = 8,
    shots: int | None = 100,
) -> np.ndarray:
    """Readout-twirled estimates of each Z string.

    For each of ``trex`` random masks the state is flipped on the masked
    qubits, read out through the confusion channel, and the recorded bits
    are flipped back.  ``shots=None`` uses exact outcome probabilities.
    """
    n = int(probs.size).bit_length() - 1
    signs = _parity_signs(strings, n)
    idx = np.arange(1 << n)
    acc = np.zeros(len(strings))
    for _ in range(max(trex, 1)):
        mask = int(rng.integers(0, 1 << n)) if trex > 0 else 0
        flipped = probs[idx ^ mask]  # state after X on the mask
        read = _readout(flipped, n, noise)
        read = np.clip(read, 0.0, None)
        read = read / read.sum()
        if shots is not None:
            read = rng.multinomial(shots, read) / shots
        corrected = read[idx ^ mask]  # undo the mask classically
        acc += signs @ corrected
    return acc / max(trex, 1)


# ---------------------------------------------------------------------------
# circuit transformations

_PAULI_GATES = ("i", "x", "y", "z")


def _cx_conjugate(pc: int, pt: int) -> tuple[int, int]:
    """Image of ``P_c x P_t`` under CX (phases dropped); 0=I,1=X,2=Y,3=Z."""
    xc, zc = pc in (1, 2), pc in (2, 3)
    xt, zt = pt in (1, 2), pt in (2, 3)
    xc2, zc2, xt2, zt2 = xc, zc ^ zt, xt ^ xc, zt

    def code(x, z):
        return {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(int(x), int(z))]

    return code(xc2, zc2), code(xt2, zt2)


def pauli_twirl(circ: Circuit, seed) -> Circuit:
    """Sandwich every CX between random Paulis that leave it invariant."""
    if any(g.kind in ("macro", "crz") for g in circ.gates):
        raise ValidityError("expand macros and controlled rotations before twirling")
    rng = rng_for(seed)
    out: list[Gate] = []
    for g in circ.gates:
        if g.kind != "cx":
            out.append(g)
            continue
        c, t = g.qubits
        pc, pt = (int(v) for v in rng.integers(0, 4, size=2))
        qc, qt = _cx_conjugate(pc, pt)
        for p, q in ((pc, c), (pt, t)):
            if p:
                out.append(Gate(_PAULI_GATES[p], (q,)))
        out.append(g)
        for p, q in ((qc, c), (qt, t)):
            if p:
                out.append(Gate(_PAULI_GATES[p], (q,)))
    res = circ.copy(out)
    res.metadata["twirled"] = True
    return res


def _round_quarter(theta: float) -> float:
    k = math.floor(abs(theta) / (math.pi / 2) + 0.5)
    return math.copysign(k * math.pi / 2, theta) if k else 0.0


def cliffordize(circ: Circuit) -> Circuit:
    """Round every RZ angle to the nearest multiple of ``pi/2`` (halves away from zero)."""
    out = [Gate("rz", g.qubits, (_round_quarter(g.params[0]),)) if g.kind == "rz" else g for g in circ.gates]
    res = circ.copy(out)
    res.metadata["cliffordized"] = True
    return res


# ---------------------------------------------------------------------------
# estimators


def odr(raw_phys: float, raw_mit: float, true_mit: float) -> float:
    """Renormalized estimate ``raw_phys * true_mit / raw_mit``."""
    if abs(raw_mit) <= ODR_EPS:
        raise ValidityError("mitigation circuit yields <O> ~ 0; renormalization is inapplicable")
    return raw_phys * true_mit / raw_mit


def bootstrap(samples, n_resamples: int = 1000, seed=None) -> tuple[float, float]:
    """Mean and standard deviation of resampled means."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValidityError("bootstrap needs at least two samples")
    if n_resamples < 100:
        raise ValidityError("use at least 100 resamples")
    rng = rng_for(seed)
    means = x[rng.integers(0, x.size, size=(n_resamples, x.size))].mean(axis=1)
    return float(means.mean()), float(means.std())


def noisy_string_values(
    circ: Circuit,
    strings: list[PauliString],
    noise: NoiseModel,
    seed,
    trex: int = 8,
    shots: int | None = 100,
    twirl: bool = True,
    psi0=None,
) -> np.ndarray:
    """One Pauli twirl: per-string readout-twirled estimates."""
    s_twirl, s_meas = np.random.SeedSequence(seed).spawn(2) if not isinstance(seed, np.random.SeedSequence) else seed.spawn(2)
    c = pauli_twirl(circ, s_twirl) if twirl else circ
    rho = density_matrix(c, noise, psi0)
    probs = np.clip(np.real(np.diag(rho)), 0.0, None)
    return measure_strings(probs / probs.sum(), strings, noise, rng_for(s_meas), trex, shots)


def noisy_expectation(
    circ: Circuit,
    obs: PauliDecomposition,
    noise: NoiseModel,
    twirls: int = 20,
    shots: int | None = 100,
    seed=None,
    trex: int = 8,
    workers: int | None = None,
) -> tuple[float, np.ndarray]:
    """Mean of ``obs`` over twirls, and the per-twirl values."""
    if circ.n_qubits > MAX_DM_QUBITS:
        raise QubitBudgetError(f"{circ.n_qubits} qubits exceed the density-matrix budget")
    c0, strings, coeffs = _z_strings(obs)
    seeds = child_seeds(seed if seed is not None else noise.seed, twirls)
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        per = list(pool.map(lambda s: noisy_string_values(circ, strings, noise, s, trex, shots, twirls > 0), seeds))
    vals = np.array([c0 + coeffs @ v for v in per])
    return float(vals.mean()), vals


def exact_strings(circ: Circuit, strings: list[PauliString], psi0=None) -> np.ndarray:
    n = circ.n_qubits
    psi = np.zeros(1 << n, dtype=complex)
    if psi0 is None:
        psi[0] = 1.0
    else:
        psi[:] = np.asarray(getattr(psi0, "amplitudes", psi0))
    out = apply(circ, psi)
    p = np.abs(out.amplitudes) ** 2
    return _parity_signs(strings, n) @ p


@dataclass
class MitigatedEstimate:
    """Result of the chain at one time point.

    ``raw_phys``, ``raw_mit`` and ``true_mit`` are observable totals.
    ``renormalized`` applies the ratio string by string; for a single
    traceless string it reduces to ``raw_phys * true_mit / raw_mit``.
    """

    t: float
    raw_phys: float
    raw_mit: float
    true_mit: float
    renormalized: float
    stderr: float
    twirls: int
    shots: int | None
    trex: int
    ideal: float | None = None
    per_twirl: list = field(default_factory=list)
    mitigation: str = ""
    noise: dict = field(default_factory=dict)
    seed: int | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d.update(p2=self.noise.get("p2"), p_ro=self.noise.get("p_ro"))
        return json.dumps(d, sort_keys=True, default=float)


def choose_mitigation(phys: Circuit, dec: PauliDecomposition, t: float, order: int, steps: int, delta: float, cfg) -> tuple[Circuit, str]:
    """Cliffordized copy for one step, forward-then-backward for two or more."""
    if steps == 1:
        return cliffordize(phys), "cliffordized"
    if steps % 2:
        raise ValidityError("odd step counts above one have no identity mitigation circuit")
    return mitigation_circuit(dec, t, order, steps, delta, cfg), "inverse-half"


def run_mitigated(
    dec: PauliDecomposition,
    obs: PauliDecomposition,
    t: float,
    noise: NoiseModel,
    *,
    cfg: DigitizationConfig | None = None,
    delta: float = 0.66,
    order: int = 2,
    steps: int | None = None,
    twirls: int = 20,
    trex: int = 8,
    shots: int | None = 100,
    seed: int | None = None,
    n_resamples: int = 1000,
    workers: int | None = None,
) -> MitigatedEstimate:
    """Physics and mitigation circuits under noise, renormalized per twirl."""
    if twirls < 2:
        raise ValidityError("need at least two twirls for error bars")
    steps = table_schedule(t) if steps is None else steps
    phys = trotter_pauli(dec, t, order, steps, delta, cfg)
    mit, kind = choose_mitigation(phys, dec, t, order, steps, delta, cfg)
    c0, strings, coeffs = _z_strings(obs)
    true_s = exact_strings(mit, strings)
    ideal = float(c0 + coeffs @ exact_strings(phys, strings))
    master = seed if seed is not None else noise.seed
    s_phys, s_mit, s_boot = np.random.SeedSequence(master).spawn(3)
    ph_seeds, mi_seeds = s_phys.spawn(twirls), s_mit.spawn(twirls)

    def one(i):
        rp = noisy_string_values(phys, strings, noise, ph_seeds[i], trex, shots)
        rm = noisy_string_values(mit, strings, noise, mi_seeds[i], trex, shots)
        return rp, rm

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        pairs = list(pool.map(one, range(twirls)))
    per = []
    for rp, rm in pairs:
        ren = np.array([odr(a, b, c) for a, b, c in zip(rp, rm, true_s)])
        per.append(float(c0 + coeffs @ ren))
    mean, err = bootstrap(per, n_resamples, s_boot)
    raw_p = np.mean([c0 + coeffs @ rp for rp, _ in pairs])
    raw_m = np.mean([c0 + coeffs @ rm for _, rm in pairs])
    return MitigatedEstimate(
        t=t,
        raw_phys=float(raw_p),
        raw_mit=float(raw_m),
        true_mit=float(c0 + coeffs @ true_s),
        renormalized=mean,
        stderr=err,
        twirls=twirls,
        shots=shots,
        trex=trex,
        ideal=ideal,
        per_twirl=per,
        mitigation=kind,
        noise=asdict(noise),
        seed=master,
    )
