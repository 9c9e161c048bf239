"""Command-line front end: one subcommand per module, deterministic output.

Every command reads flat key-value flags (matrices enter as inline JSON in
the {"rows", "cols", "data"} schema), runs a single module operation, and
emits JSON (default) or CSV.  Numeric experiments report their tolerance
or tail bound next to the values.  Runs with identical argv are
byte-identical: all randomness flows through --seed (default 0).

Exit codes: 0 success, 2 invalid input (including unknown flags or
subcommands, with usage on stderr), 3 numerical failure (including any
NaN that would otherwise reach the output).  Errors are mirrored as
machine-readable JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .serialize import (complex_pair, matrix_from_json, to_csv_bytes,
                        to_json_bytes)

__all__ = ["RunConfig", "run", "main", "emit"]

_SUBCOMMANDS = ("fock", "weyl", "grassmann", "evolve", "decohere", "lfunc",
                "statmech", "gns")


@dataclass(frozen=True)
class RunConfig:
    """Common plumbing shared by every subcommand."""

    subcommand: str
    action: str
    seed: int = 0
    out: str | None = None
    fmt: str = "json"
    tol: float | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.subcommand not in _SUBCOMMANDS:
            raise ValidationError(f"unknown subcommand {self.subcommand!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        if self.fmt not in ("json", "csv"):
            raise ValidationError(f"unknown format {self.fmt!r}")
        if self.threads is not None and self.threads < 1:
            raise ValidationError("thread count must be >= 1")


def emit(payload: dict, fmt: str, header=None, rows=None) -> bytes:
    """Render a result dict (JSON) or its tabular form (CSV) to bytes."""
    if fmt == "json":
        return to_json_bytes(payload)
    if header is None:
        raise ValidationError("this command has no CSV form")
    return to_csv_bytes(header, rows or [])


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated floats: {text!r}") \
            from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated integers: {text!r}") \
            from exc


def _beta_range(text: str) -> np.ndarray:
    """Either a single value or an inclusive start:stop:step range."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError("beta range must look like start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValidationError("beta range needs step > 0 and stop >= start")
        return np.arange(start, stop + 0.5 * step, step)
    return np.array([float(text)])


def _json_matrix(text: str) -> np.ndarray:
    try:
        return matrix_from_json(json.loads(text))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"bad inline JSON matrix: {exc}") from exc


# ---------------------------------------------------------------------------
# per-module handlers; each returns (payload, csv_header, csv_rows)


def _cmd_fock_spectrum(args, cfg):
    from .fock import FockSpec, quadratic_hamiltonian, \
        quadratic_hamiltonian_diagonal

    spec = FockSpec(statistics=args.stat, cutoffs=tuple(_ints(args.cutoffs)),
                    hbar=args.hbar)
    eps = _floats(args.eps)
    dense = np.linalg.eigvalsh(quadratic_hamiltonian(spec, eps))
    expected = np.sort(np.diag(quadratic_hamiltonian_diagonal(spec, eps))
                       .real)
    gap = float(np.abs(dense - expected).max())
    payload = {
        "spec": spec.to_json(),
        "eigenvalues": [float(v) for v in dense],
        "occupation_energies": [float(v) for v in expected],
        "max_gap": gap,
        "tolerance": 1e-12,
    }
    rows = [(i, float(v), float(e))
            for i, (v, e) in enumerate(zip(dense, expected))]
    return payload, ("index", "eigenvalue", "occupation_energy"), rows


def _cmd_fock_poisson(args, cfg):
    from .fock import FockSpec, poisson_eigen_defect

    spec = FockSpec(statistics="bose", cutoffs=tuple(_ints(args.cutoffs)),
                    hbar=args.hbar)
    f = [complex(x) for x in _floats(args.f)]
    reports = [poisson_eigen_defect(spec, f, k)
               for k in range(1, spec.modes + 1)]
    payload = {
        "spec": spec.to_json(),
        "f": [complex_pair(z) for z in f],
        "defects": [r.defect for r in reports],
        "tail_bounds": [r.tail_bound for r in reports],
    }
    rows = [(k + 1, r.defect, r.tail_bound) for k, r in enumerate(reports)]
    return payload, ("mode", "defect", "tail_bound"), rows


def _cmd_weyl_check(args, cfg):
    from .weyl_clifford import poly, product

    rng = np.random.default_rng(np.random.Philox(cfg.seed))
    modes = args.modes
    rows = []
    worst = 0.0
    for trial in range(args.trials):
        polys = []
        for _ in range(3):
            terms = {}
            for _ in range(args.terms):
                bits_c = rng.integers(0, 2, size=modes)
                bits_a = rng.integers(0, 2, size=modes)
                if args.stat == "bose":
                    key = (tuple(int(x) for x in bits_c),
                           tuple(int(x) for x in bits_a))
                else:
                    key = (int(np.dot(bits_c, 1 << np.arange(modes))),
                           int(np.dot(bits_a, 1 << np.arange(modes))))
                coeff = complex(int(rng.integers(-3, 4)),
                                int(rng.integers(-3, 4)))
                terms[key] = terms.get(key, 0j) + coeff
            polys.append(poly(args.stat, modes, terms, hbar=args.hbar))
        a, b, c = polys
        cap = 6 * modes + 6
        left = product(product(a, b, degree_cap=cap), c, degree_cap=cap)
        right = product(a, product(b, c, degree_cap=cap), degree_cap=cap)
        keys = set(left.terms) | set(right.terms)
        defect = max((abs(left.terms.get(k, 0j) - right.terms.get(k, 0j))
                      for k in keys), default=0.0)
        worst = max(worst, defect)
        rows.append((trial, defect))
    payload = {
        "statistics": args.stat,
        "modes": modes,
        "trials": args.trials,
        "max_associativity_defect": worst,
        "tolerance": 0.0,
    }
    return payload, ("trial", "associativity_defect"), rows


def _cmd_grassmann_eval(args, cfg):
    from .grassmann import berezin_integral, format_element, parse_expression

    element = parse_expression(args.expression, n=args.modes)
    payload = {
        "expression": args.expression,
        "result": format_element(element),
        "generators": element.n,
        "berezin_integral": complex_pair(berezin_integral(element)),
    }
    rows = [(format_element(element),)]
    return payload, ("result",), rows


def _cmd_evolve_trotter(args, cfg):
    from .evolution import trotter_order
    from .fock import FockSpec
    from .weyl_clifford import canonical_quadratures

    spec = FockSpec(statistics="bose", cutoffs=(args.cutoff,), hbar=args.hbar)
    q, p = canonical_quadratures(spec)
    factors = [-0.5j * (p @ p), -0.5j * (q @ q)]
    report = trotter_order(factors, args.t, _ints(args.n))
    payload = {
        "cutoff": args.cutoff,
        "t": args.t,
        "errors": {str(n): e for n, e in report.errors.items()},
        "order": report.order,
        "expected_order": 1.0,
        "tolerance": 0.2 if cfg.tol is None else cfg.tol,
    }
    if abs(report.order - 1.0) > payload["tolerance"]:
        raise NumericalError(
            f"measured splitting order {report.order:.3f} is outside "
            f"1 +- {payload['tolerance']}")
    rows = sorted((int(n), e) for n, e in report.errors.items())
    return payload, ("slices", "error"), rows


def _default_two_level():
    def family(lam, g):
        g = np.asarray(g, dtype=float)
        zero = np.zeros_like(g)
        top = 1.0 + lam * g
        return np.stack([
            np.stack([zero, zero], axis=-1),
            np.stack([zero, top], axis=-1),
        ], axis=-2).astype(complex)

    def path(s):
        s = np.asarray(s, dtype=float)
        return 4.0 * s * (1.0 - s)

    return family, path


def _cmd_decohere_sweep(args, cfg):
    from .decoherence import PerturbationEnsemble, average_density

    family, path = _default_two_level()
    k0 = np.full((2, 2), 0.5, dtype=complex)
    rows = []
    entries = []
    for alpha in _floats(args.alpha):
        ensemble = PerturbationEnsemble(
            family=family, path=path, alpha=alpha,
            lam_low=-args.lam, lam_high=args.lam,
            trials=args.trials, seed=cfg.seed)
        report = average_density(ensemble, k0, threads=cfg.threads)
        stderr = float(np.max(report.mc_stderr - np.diag(
            np.diag(report.mc_stderr))))
        rows.append((alpha, report.offdiag_norm, stderr))
        entries.append({
            "alpha": alpha,
            "offdiag_norm": report.offdiag_norm,
            "mc_stderr": stderr,
            "trials": report.trials,
        })
    payload = {
        "model": "two-level bump drive, uniform perturbation",
        "lam_window": [-args.lam, args.lam],
        "seed": cfg.seed,
        "results": entries,
    }
    return payload, ("alpha", "offdiag_norm", "mc_stderr"), rows


def _cmd_lfunc_green(args, cfg):
    from .lfunctional import two_point_green

    if args.n <= 0:
        raise ValidationError("need a positive occupation for a pole fit")
    taus = np.arange(0.0, args.window, args.dt)
    res = two_point_green([args.n], [args.eps], taus, mode=1,
                          hbar=args.hbar, resolution=cfg.tol)
    payload = {
        "n": args.n,
        "eps": args.eps,
        "pole": res.pole,
        "resolution": res.resolution,
        "pole_gap": abs(res.pole - args.eps),
        "kms_ratio": complex_pair(res.kms_ratio()),
        "samples": len(taus),
    }
    rows = [(float(t), float(g.real), float(g.imag))
            for t, g in zip(res.taus, res.g_less)]
    return payload, ("tau", "re_g", "im_g"), rows


def _cmd_lfunc_sweep(args, cfg):
    from .lfunctional import hbar_sweep

    result = hbar_sweep(hbars=tuple(_floats(args.hbars)), t=args.t,
                        steps=args.steps)
    payload = {
        "hbars": list(result.hbars),
        "gaps": list(result.gaps),
        "slope": result.slope,
        "expected_slope": 2.0,
        "tolerance": 0.3 if cfg.tol is None else cfg.tol,
    }
    rows = list(zip(result.hbars, result.gaps))
    return payload, ("hbar", "gap"), rows


def _cmd_statmech_sweep(args, cfg):
    from .statmech import free_gas

    eps = _floats(args.eps)
    betas = _beta_range(args.beta)
    rows = []
    for beta in betas:
        gas = free_gas(eps, float(beta), args.stat)
        s = float(beta) * gas.energy + gas.log_z
        f = -gas.log_z / float(beta)
        rows.append((float(beta), gas.z, gas.energy, s, f,
                     *[float(n) for n in gas.occupations]))
    header = ("beta", "Z", "E", "S", "F",
              *[f"n_{k + 1}" for k in range(len(eps))])
    payload = {
        "statistics": args.stat,
        "eps": eps,
        "columns": list(header),
        "rows": [list(r) for r in rows],
        "note": "closed-form ideal gas; no truncation tail",
    }
    return payload, header, rows


def _cmd_gns_construct(args, cfg):
    from .geometry_gns import (AlgebraState, gns_construct,
                               induced_hamiltonian)

    state = AlgebraState(_json_matrix(args.rho))
    tol = 1e-10 if cfg.tol is None else cfg.tol
    result = gns_construct(state, rank_tol=tol)
    payload = {"state": state.to_json(), "gns": result.to_json()}
    rows = [("dimension", result.dimension),
            ("carrier_dim", result.carrier_dim),
            ("homomorphism_defect", result.homomorphism_defect),
            ("involution_defect", result.involution_defect),
            ("expectation_defect", result.expectation_defect)]
    if args.h is not None:
        induced = induced_hamiltonian(state, _json_matrix(args.h))
        payload["induced"] = {
            "energy": induced.energy,
            "spectrum": [float(v) for v in induced.spectrum],
            "theta_defect": induced.theta_defect,
        }
        rows.append(("energy", induced.energy))
        rows.extend((f"spectrum_{i}", float(v))
                    for i, v in enumerate(induced.spectrum))
    return payload, ("quantity", "value"), rows


# ---------------------------------------------------------------------------
# wiring


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", dest="fmt", choices=("json", "csv"),
                        default="json")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--threads", type=int, default=None)

    parser = argparse.ArgumentParser(
        prog="qtoolkit",
        description="finite-dimensional quantum algebra workbench")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    fock = subs.add_parser("fock").add_subparsers(dest="action",
                                                  required=True)
    p = fock.add_parser("spectrum", parents=[common])
    p.add_argument("--stat", choices=("bose", "fermi"), default="bose")
    p.add_argument("--cutoffs", default="3,3")
    p.add_argument("--eps", default="1.0,2.0")
    p.add_argument("--hbar", type=float, default=1.0)
    p.set_defaults(handler=_cmd_fock_spectrum)
    p = fock.add_parser("poisson", parents=[common])
    p.add_argument("--cutoffs", default="40")
    p.add_argument("--f", default="0.5")
    p.add_argument("--hbar", type=float, default=1.0)
    p.set_defaults(handler=_cmd_fock_poisson)

    weyl = subs.add_parser("weyl").add_subparsers(dest="action",
                                                  required=True)
    p = weyl.add_parser("check", parents=[common])
    p.add_argument("--stat", choices=("bose", "fermi"), default="bose")
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--terms", type=int, default=4)
    p.add_argument("--hbar", type=float, default=1.0)
    p.set_defaults(handler=_cmd_weyl_check)

    grassmann = subs.add_parser("grassmann").add_subparsers(dest="action",
                                                            required=True)
    p = grassmann.add_parser("eval", parents=[common])
    p.add_argument("expression")
    p.add_argument("--modes", type=int, default=None)
    p.set_defaults(handler=_cmd_grassmann_eval)

    evolve = subs.add_parser("evolve").add_subparsers(dest="action",
                                                      required=True)
    p = evolve.add_parser("trotter", parents=[common])
    p.add_argument("--cutoff", type=int, default=20)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n", default="16,32,64,128")
    p.add_argument("--hbar", type=float, default=1.0)
    p.set_defaults(handler=_cmd_evolve_trotter)

    decohere = subs.add_parser("decohere").add_subparsers(dest="action",
                                                          required=True)
    p = decohere.add_parser("sweep", parents=[common])
    p.add_argument("--alpha", default="1e-1,1e-2")
    p.add_argument("--lam", type=float, default=0.3)
    p.add_argument("--trials", type=int, default=4096)
    p.set_defaults(handler=_cmd_decohere_sweep)

    lfunc = subs.add_parser("lfunc").add_subparsers(dest="action",
                                                    required=True)
    p = lfunc.add_parser("green", parents=[common])
    p.add_argument("--n", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.7)
    p.add_argument("--window", type=float, default=200.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--hbar", type=float, default=1.0)
    p.set_defaults(handler=_cmd_lfunc_green)
    p = lfunc.add_parser("sweep", parents=[common])
    p.add_argument("--hbars", default="1e-1,1e-2,1e-3")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=48)
    p.set_defaults(handler=_cmd_lfunc_sweep)

    statmech = subs.add_parser("statmech").add_subparsers(dest="action",
                                                          required=True)
    p = statmech.add_parser("sweep", parents=[common])
    p.add_argument("--eps", default="1.0")
    p.add_argument("--stat", choices=("bose", "fermi"), default="fermi")
    p.add_argument("--beta", default="1.0")
    p.set_defaults(handler=_cmd_statmech_sweep)

    gns = subs.add_parser("gns").add_subparsers(dest="action", required=True)
    p = gns.add_parser("construct", parents=[common])
    p.add_argument("--rho", required=True)
    p.add_argument("--h", default=None)
    p.set_defaults(handler=_cmd_gns_construct)

    return parser


def run(argv) -> int:
    """Execute one command line; returns the exit code (never raises)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig(subcommand=args.subcommand, action=args.action,
                        seed=args.seed, out=args.out, fmt=args.fmt,
                        tol=args.tol, threads=args.threads)
        payload, header, rows = args.handler(args, cfg)
        data = emit(payload, cfg.fmt, header, rows)
        if cfg.out:
            with open(cfg.out, "wb") as sink:
                sink.write(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        return 0
    except ValidationError as exc:
        _print_error("validation", exc)
        return 2
    except NumericalError as exc:
        _print_error("numerical", exc)
        return 3


def _print_error(kind: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc)}) + "\n")
    sys.stderr.flush()


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
