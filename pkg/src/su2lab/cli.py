"""Command-line front end.

Every command writes its machine-readable output into ``--out`` together
with a ``<name>.json`` sidecar holding the configuration, seed and argv.
Files are written as ``<name>.partial`` and renamed on success, so an
interrupted run leaves clearly marked partial output behind.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericError, Su2LabError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _omega(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a number") from None


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi") from None
    return lo, hi


def _common(p: argparse.ArgumentParser, grid: bool = True) -> None:
    p.add_argument("--g", type=float, required=True, help="gauge coupling")
    if grid:
        p.add_argument("--nq", type=int, default=None, help="qubits per omega register (default 2)")
        p.add_argument("--nu-max", type=int, default=None, help="largest Legendre index (default 1)")
        p.add_argument("--omega-max", type=_omega, default="auto")
        p.add_argument("--spacing", choices=("interior", "cell"), default="interior", help="central-difference step convention")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("."))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="su2lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="lowest eigenvalues")
    _common(p)
    p.add_argument("--basis", choices=("mixed", "irrep"), default="mixed")
    p.add_argument("--jmax", type=float, default=None, help="largest J (irrep basis)")
    p.add_argument("--strong-coupling", action="store_true", help="electric part only")
    p.add_argument("-k", type=int, default=12)

    p = sub.add_parser("scan-omega", help="ground energy versus omega_max")
    _common(p, grid=False)
    p.add_argument("--n-omega", type=int, required=True, help="grid points per angle")
    p.add_argument("--nu-max", type=int, default=1)
    p.add_argument("--range", type=_range, default=None, dest="omega_range")
    p.add_argument("--steps", type=int, default=61)
    p.add_argument("--keep-first-derivatives", action="store_true")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("decompose", help="Pauli decomposition of an operator")
    _common(p)
    p.add_argument("--operator", choices=("h", "hb", "he"), default="h")
    p.add_argument("--threshold", type=float, default=0.0)

    p = sub.add_parser("circuit", help="export a Trotter circuit")
    _common(p)
    p.add_argument("--pipeline", choices=("pauli", "diffop"), default="pauli")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--order", type=int, choices=(1, 2), default=2)
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--peephole", action="store_true")
    p.add_argument("--expand", action="store_true", help="expand controlled rotations")

    p = sub.add_parser("evolve", help="observable time series")
    _common(p)
    p.add_argument("--mode", choices=("exact-expm", "trotter-ideal"), default="trotter-ideal")
    p.add_argument("--pipeline", choices=("pauli", "diffop"), default="pauli")
    p.add_argument("--times", default="0.1:0.6:0.1")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--order", type=int, choices=(1, 2), default=2)
    p.add_argument("--steps", default="table", help="'table' or an integer")
    p.add_argument("--initial", choices=("zero", "low5"), default="zero")

    p = sub.add_parser("noisy-run", help="noisy simulation with mitigation")
    _common(p)
    p.add_argument("--times", default="0.1:0.6:0.1")
    p.add_argument("--delta", type=float, default=0.66)
    p.add_argument("--p2", type=float, default=0.005)
    p.add_argument("--p-ro", type=float, default=0.01)
    p.add_argument("--twirls", type=int, default=20)
    p.add_argument("--trex", type=int, default=8)
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("resources", help="two-qubit gate estimates")
    _common(p)
    p.add_argument("--delta", type=float, default=0.0)
    return ap


# ---------------------------------------------------------------------------


def _cfg(args):
    from .digitize import DigitizationConfig

    nq = 2 if args.nq is None else args.nq
    nu = 1 if args.nu_max is None else args.nu_max
    return DigitizationConfig(args.g, nq, nu, args.omega_max, args.spacing)


class _Outputs:
    """Writes ``.partial`` files and renames them once the command succeeds."""

    def __init__(self, out: Path):
        out.mkdir(parents=True, exist_ok=True)
        self.out = out
        self.pending: list[tuple[Path, Path]] = []

    def write(self, name: str, text: str) -> Path:
        final = self.out / name
        part = final.with_name(final.name + ".partial")
        part.write_text(text)
        self.pending.append((part, final))
        return final

    def sidecar(self, name: str, args, extra: dict | None = None) -> None:
        info = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
        info.update(extra or {})
        info["version"] = __version__
        self.write(name + ".json", json.dumps(info, sort_keys=True, indent=2, default=_json_default) + "\n")

    def commit(self) -> None:
        for part, final in self.pending:
            os.replace(part, final)
        self.pending.clear()


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _g17(x: float) -> str:
    return f"{float(x):.17g}"


def cmd_spectrum(args, out: _Outputs) -> str:
    from .hamiltonian import build_irrep, build_mixed
    from .spectrum import eigensolve

    if args.basis == "irrep":
        if args.nq is not None or args.nu_max is not None or args.omega_max != "auto":
            raise UsageError("--basis irrep does not take --nq, --nu-max or --omega-max")
        if args.jmax is None:
            raise UsageError("--basis irrep needs --jmax")
        H = build_irrep(args.g, args.jmax)
        op = H.electric if args.strong_coupling else H.total
        labels = [f"{float(a)}/{float(b)}/{c}" for a, b, c in H.labels]
    else:
        if args.jmax is not None:
            raise UsageError("--jmax only applies to --basis irrep")
        cfg = _cfg(args)
        H = build_mixed(cfg)
        op = H.electric if args.strong_coupling else H.total
        labels = None
    k = min(args.k, op.dim)
    res = eigensolve(op, k)
    rows = ["index,energy"] + [f"{i},{_g17(e)}" for i, e in enumerate(res.eigenvalues)]
    out.write("spectrum.csv", "\n".join(rows) + "\n")
    out.sidecar("spectrum.csv", args, {"dim": op.dim, "basis_labels": labels})
    return "E: " + " ".join(f"{e:.4g}" for e in res.eigenvalues)


def cmd_scan(args, out: _Outputs) -> str:
    from .spectrum import scan_omega_max

    res = scan_omega_max(
        args.g,
        args.n_omega,
        args.omega_range,
        args.steps,
        drop_first_derivatives=not args.keep_first_derivatives,
        nu_max=args.nu_max,
        workers=args.workers,
    )
    out.write("scan.csv", res.to_csv())
    out.sidecar("scan.csv", args, {"argmin": res.argmin})
    return f"argmin |dE0/domega_max| at omega_max = {res.argmin:.4g}"


def cmd_decompose(args, out: _Outputs) -> str:
    from .hamiltonian import build_mixed, magnetic_observable, pauli_decomposition
    from .pauli import truncate

    cfg = _cfg(args)
    if args.threshold < 0:
        raise UsageError("--threshold must be non-negative")
    if args.operator == "hb":
        _, dec = magnetic_observable(cfg)
    else:
        H = build_mixed(cfg)
        dec = pauli_decomposition(H.total if args.operator == "h" else H.electric, cfg)
    kept, delta = truncate(dec, args.threshold)
    out.write("decomposition.txt", kept.to_text())
    out.sidecar("decomposition.txt", args, {"delta": delta, "terms": len(kept)})
    return f"{len(kept)} terms kept, delta = {delta:.4g}"


def _circuit(args, t: float):
    from .circuit import expand_crz, peephole_cancel, trotter_diffop, trotter_pauli
    from .hamiltonian import build_mixed, pauli_decomposition

    cfg = _cfg(args)
    if args.pipeline == "diffop":
        if args.delta:
            raise UsageError("--delta applies to the pauli pipeline only")
        circ = trotter_diffop(cfg, t, args.steps, args.order)
    else:
        dec = pauli_decomposition(build_mixed(cfg).total, cfg)
        circ = trotter_pauli(dec, t, args.order, args.steps, args.delta, cfg)
    if args.expand:
        circ = expand_crz(circ)
    if args.peephole:
        circ = peephole_cancel(circ)
    return circ


def cmd_circuit(args, out: _Outputs) -> str:
    circ = _circuit(args, args.t)
    out.write("circuit.txt", circ.to_text())
    out.sidecar("circuit.txt", args, {"cx": circ.cx_count(), "gates": len(circ.gates)})
    return f"{len(circ.gates)} gates, {circ.cx_count()} CX, depth {circ.depth()}"


def _steps(text: str):
    if text == "table":
        return "table"
    try:
        n = int(text)
    except ValueError:
        raise UsageError("--steps must be 'table' or an integer") from None
    if n < 1:
        raise UsageError("--steps must be positive")
    return n


def cmd_evolve(args, out: _Outputs) -> str:
    from .hamiltonian import build_mixed, magnetic_observable, pauli_decomposition
    from .sim import observable_series, prepare_low_energy

    cfg = _cfg(args)
    if args.mode == "exact-expm" and args.delta:
        raise UsageError("--delta has no effect with --mode exact-expm")
    H = build_mixed(cfg)
    obs, _ = magnetic_observable(cfg)
    psi0 = prepare_low_energy(H.total, 5) if args.initial == "low5" else None
    if args.mode == "exact-expm":
        rec = observable_series("exact-expm", cfg, obs, args.times, H=H.total, psi0=psi0)
    else:
        Hsrc = pauli_decomposition(H.total, cfg) if args.pipeline == "pauli" else None
        rec = observable_series(
            "trotter-ideal", cfg, obs, args.times, H=Hsrc, psi0=psi0, delta=args.delta, order=args.order, steps=_steps(args.steps), pipeline=args.pipeline
        )
    out.write("evolve.csv", rec.to_csv())
    out.sidecar("evolve.csv", args, rec.provenance)
    return " ".join(f"{t:.4g}:{v:.4g}" for t, v in zip(rec.times, rec.values))


def cmd_noisy(args, out: _Outputs) -> str:
    from .hamiltonian import build_mixed, magnetic_observable, pauli_decomposition
    from .mitigate import NoiseModel, run_mitigated
    from .parallel import child_seeds
    from .sim import RunRecord, parse_times

    cfg = _cfg(args)
    dec = pauli_decomposition(build_mixed(cfg).total, cfg)
    _, hb = magnetic_observable(cfg)
    noise = NoiseModel(args.p2, args.p_ro, args.seed)
    times = parse_times(args.times)
    seeds = [int(s.generate_state(1)[0]) for s in child_seeds(args.seed, len(times))]
    reports, vals, errs = [], [], []
    for t, s in zip(times, seeds):
        est = run_mitigated(dec, hb, float(t), noise, cfg=cfg, delta=args.delta, twirls=args.twirls, trex=args.trex, shots=args.shots, seed=s, workers=args.workers)
        reports.append(json.loads(est.to_json()))
        vals.append(est.renormalized)
        errs.append(est.stderr)
    rec = RunRecord(times, np.array(vals), "noisy-mitigated", np.array(errs), {"seeds": seeds})
    out.write("noisy.csv", rec.to_csv())
    out.write("noisy_points.json", json.dumps(reports, indent=2, sort_keys=True) + "\n")
    out.sidecar("noisy.csv", args, {"seeds": seeds})
    return " ".join(f"{t:.4g}:{v:.4g}({e:.2g})" for t, v, e in zip(times, vals, errs))


def cmd_resources(args, out: _Outputs) -> str:
    from .circuit import resource_estimate
    from .hamiltonian import build_mixed, pauli_decomposition

    cfg = _cfg(args)
    dec = pauli_decomposition(build_mixed(cfg).total, cfg)
    rep = resource_estimate(dec, args.delta, cfg.n_q)
    out.write("resources.json", json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n")
    out.sidecar("resources.json", args)
    return f"{rep.retained_strings} strings, CX bound {rep.pauli_cx_bound}"


COMMANDS = {
    "spectrum": cmd_spectrum,
    "scan-omega": cmd_scan,
    "decompose": cmd_decompose,
    "circuit": cmd_circuit,
    "evolve": cmd_evolve,
    "noisy-run": cmd_noisy,
    "resources": cmd_resources,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = None
    try:
        out = _Outputs(args.out)
        summary = COMMANDS[args.command](args, out)
        out.commit()
    except KeyboardInterrupt:
        print("interrupted; partial outputs left as *.partial", file=sys.stderr)
        return 130
    except (UsageError, Su2LabError, ValueError) as exc:
        if isinstance(exc, NumericError):
            print(f"numeric failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"su2lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
