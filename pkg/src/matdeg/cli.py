"""Command-line interface: ``matdeg <command> ...``.

Every command prints one JSON document (or CSV with ``--format csv``).
Outputs carry ``schema_version``; the ``timestamp`` block is the only part
that changes between identical runs.  Contract violations exit with status
2 and a JSON error object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import approxdeg, estimators, hardness, witness
from .funcspace import cheb_fit, parse_function
from .sparsemat import SparseHermitian, norm1, random_sparse_hermitian
from .tridiag import TridiagMatrix, entry_f

SCHEMA_VERSION = 1
BENCH_COLUMNS = ("family", "parameter", "degree", "dimension", "queries_o1", "queries_o2",
                 "error")
DEFAULT_SEED = 20240417


class CLIError(Exception):
    """A user-facing contract violation."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    seed: int = DEFAULT_SEED
    out: str | None = None
    format: str = "json"


# --- helpers --------------------------------------------------------------------

def _stamp(t0: float) -> dict:
    return {"utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "wall_time": round(time.perf_counter() - t0, 6)}


def _emit(payload: dict | list, cfg: RunConfig, columns=None) -> str:
    if cfg.format == "csv":
        rows = payload if isinstance(payload, list) else [
            {k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
        cols = columns or list(rows[0].keys())
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _function(spec: str | None):
    if not spec:
        raise CLIError("--function is required")
    try:
        return parse_function(spec)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read {path}: {exc}") from exc


def poly_for_function(f, eps: float, max_degree: int = 200):
    """Smallest-degree Chebyshev interpolant within eps/4 of f on a dense grid."""
    x = np.linspace(-1, 1, 4001)
    fx = f(x)
    for d in range(max_degree + 1):
        p = cheb_fit(f, d)
        if np.max(np.abs(p(x) - fx)) <= eps / 4:
            return estimators.PolySpec.from_cheb(p)
    raise CLIError(f"no interpolant within {eps / 4} up to degree {max_degree}")


def _poly_arg(text: str) -> estimators.PolySpec:
    try:
        return estimators.PolySpec(np.array([float(c) for c in text.split(",")]))
    except ValueError as exc:
        raise CLIError(f"bad --poly {text!r}") from exc


# --- commands ----------------------------------------------------------------

def cmd_approx_degree(args, cfg: RunConfig) -> dict:
    f = _function(args.function)
    try:
        d, ba = approxdeg.approx_degree(f, args.eps, args.parity)
    except (approxdeg.DegreeCapExceeded, approxdeg.RemezConvergenceError) as exc:
        raise CLIError(str(exc)) from exc
    return {"function": f.label, "eps": args.eps, "parity": args.parity, "d": d,
            "val": ba.error, "refs": ba.refs.tolist(), "coeffs": ba.poly.coeffs.tolist()}


def cmd_witness(args, cfg: RunConfig) -> dict:
    if args.action == "build":
        f = _function(args.function)
        build = witness.build_odd_witness if args.parity == "odd" else witness.build_even_witness
        cert = build(f, args.eps)
        return {"certificate": cert.to_dict()}
    if args.action == "verify":
        if not args.certificate:
            raise CLIError("--certificate is required")
        cert = witness.WitnessCertificate.from_dict(_load_json(args.certificate)["certificate"])
        f = _function(args.function) if args.function else None
        ok, problems = witness.verify(cert, f)
        if not ok:
            raise CLIError("certificate rejected: " + "; ".join(problems))
        return {"verified": True, "function": cert.function, "n": cert.n,
                "claimed_value": cert.claimed_value}
    # certify
    f = _function(args.function)
    if args.nff:
        A = witness.nff_matrix(args.nff)
    elif args.matrix:
        A = TridiagMatrix.from_dict(_load_json(args.matrix))
    else:
        raise CLIError("certify needs --nff M or --matrix FILE")
    i, j = witness.entry_indices(A.n, args.parity)
    bound = witness.certify_lower_bound(A, f, args.eps, args.parity)
    return {"function": f.label, "eps": args.eps, "parity": args.parity, "n": A.n,
            "entry": entry_f(A, f, i, j), "lower_bound": bound}


def _load_matrix(path: str | None) -> SparseHermitian:
    if not path:
        raise CLIError("--matrix is required")
    try:
        return SparseHermitian.from_dict(_load_json(path))
    except (KeyError, ValueError) as exc:
        raise CLIError(f"bad matrix file {path}: {exc}") from exc


def cmd_estimate(args, cfg: RunConfig) -> dict:
    A = _load_matrix(args.matrix)
    if args.poly:
        target = _poly_arg(args.poly)
        label = f"poly:{args.poly}"
    else:
        target = _function(args.function)
        label = target.label
    i, j = args.i, args.j
    if not (1 <= i <= A.n and 1 <= j <= A.n):
        raise CLIError(f"indices ({i}, {j}) outside 1..{A.n}")
    method = args.method
    if method == "oracle":
        value = estimators.dense_entry(A, target, i, j)
        return {"method": "oracle", "function": label, "value": float(np.real(value))}
    if method == "contour":
        if args.poly:
            raise CLIError("contour needs an analytic --function")
        Lam = args.Lam if args.Lam else norm1(A)
        lam = args.lam if args.lam else float(np.linalg.norm(A.dense(), 2))
        try:
            rep = estimators.contour_estimate(A, target, lam, Lam, args.eps, args.fail_prob,
                                              i, j, rng_seed=cfg.seed, norm1=Lam)
        except ValueError as exc:
            raise CLIError(str(exc)) from exc
    else:
        P = target if args.poly else poly_for_function(target, args.eps)
        if method == "exact":
            counter = estimators.QueryCounter()
            try:
                value = estimators.exact_entry(A, P, i, j, counter)
            except estimators.BudgetExceeded as exc:
                raise CLIError(str(exc)) from exc
            rep = estimators.EstimateReport(value, 0.0, 0, counter, "exact", cfg.seed)
        else:
            rep = estimators.walk_estimate(A, P, i, j, args.eps, args.fail_prob, cfg.seed)
    out = rep.to_dict()
    out.pop("wall_time", None)
    out["function"] = label
    return out


def cmd_hardness(args, cfg: RunConfig) -> dict:
    if args.action == "gen":
        rng = np.random.default_rng(cfg.seed)
        f = _function(args.function)
        n = args.n
        if args.kind == "parity":
            bits = rng.integers(0, 2, n)
            size = n + 3 if args.even_variant else n + 1
            w = witness.witness_matrix_of_size(f, size).matrix.offdiag
            payload = {"bits": bits.tolist(), "weights": w.tolist(),
                       "even_variant": bool(args.even_variant)}
        elif args.kind == "forrelation":
            inst = hardness.random_forrelation(n, rng)
            payload = inst.to_dict()
            N = 3 * (n + 1)
            payload["weights"] = witness.witness_matrix_of_size(f, N).matrix.offdiag.tolist()
        else:
            D = 2
            Us = []
            for _ in range(n):
                q, _ = np.linalg.qr(rng.normal(size=(D, D)))
                Us.append(q)
            w = witness.witness_matrix_of_size(f, n + 1).matrix.offdiag
            payload = hardness.ClockInstance(tuple(Us), w, None, D).to_dict()
        bundle = hardness.HardnessBundle(args.kind, payload, args.function)
        return json.loads(bundle.to_json())
    if not args.bundle:
        raise CLIError("--bundle is required")
    return verify_bundle(hardness.HardnessBundle.from_json(Path(args.bundle).read_text()))


def verify_bundle(bundle: hardness.HardnessBundle, tol: float = 1e-8) -> dict:
    f = parse_function(bundle.function)
    p = bundle.payload
    if bundle.kind == "parity":
        inst = hardness.instance_from_payload("parity", p)
        entry = inst.entry(f)
        expected = inst.path_value(f) if inst.parity == 1 else 0.0
        residual = abs(entry - expected)
        res = {"parity": inst.parity, "entry": entry, "expected": expected}
    elif bundle.kind == "forrelation":
        inst = hardness.instance_from_payload("forrelation", p)
        lhs, rhs, residual = hardness.forrelation_identity_check(inst, f, p["weights"])
        res = {"phi": inst.phi, "lhs": lhs.real, "rhs": rhs.real}
        if abs(inst.phi - p.get("phi", inst.phi)) > tol:
            raise CLIError("stored phi does not match the truth tables")
    elif bundle.kind == "clock":
        inst = hardness.instance_from_payload("clock", p)
        F = hardness.dense_function(inst.hamiltonian.dense(), f)
        Psi = inst.history_states()
        lhs = complex(Psi[:, -1].conj() @ F @ Psi[:, 0])
        rhs = entry_f(inst.reduced(), f, 1, inst.N)
        residual = abs(lhs - rhs)
        res = {"history_entry": lhs.real, "tridiagonal_entry": rhs}
    else:
        raise CLIError(f"unknown bundle kind {bundle.kind!r}")
    res.update({"kind": bundle.kind, "residual": float(residual), "ok": bool(residual <= tol)})
    if not res["ok"]:
        raise CLIError(f"identity residual {residual:.3g} exceeds {tol}")
    return res


def _bench_rows(args, cfg: RunConfig) -> list[dict]:
    sweep = [float(s) for s in args.sweep.split(",")] if args.sweep else None
    rows = []
    if args.family == "witness-sin":
        for t in sweep or [4, 8, 12, 16, 20, 24, 28, 32]:
            cert = witness.build_odd_witness(parse_function(f"sin:t={t:g}"), args.eps)
            rows.append({"family": args.family, "parameter": t, "degree": cert.degree_d,
                         "dimension": cert.n, "queries_o1": 0, "queries_o2": 0,
                         "error": abs(cert.achieved_value - cert.claimed_value)})
    elif args.family == "exact":
        A = random_sparse_hermitian(64, 4, cfg.seed, target_norm1=1.0)
        for d in sweep or [2, 3, 4, 5, 6]:
            d = int(d)
            P = estimators.PolySpec(np.r_[np.zeros(d), 1.0])
            counter = estimators.QueryCounter()
            v = estimators.exact_entry(A, P, 1, 2, counter)
            ref = estimators.dense_entry(A, P, 1, 2)
            rows.append({"family": args.family, "parameter": d, "degree": d, "dimension": A.n,
                         "queries_o1": counter.o1, "queries_o2": counter.o2,
                         "error": abs(v - ref)})
    elif args.family == "walk":
        A = random_sparse_hermitian(64, 4, cfg.seed, target_norm1=0.5)
        for t in sweep or [1, 2, 3, 4]:
            f = parse_function(f"sin:t={t:g}")
            P = poly_for_function(f, args.eps)
            rep = estimators.walk_estimate(A, P, 1, 2, args.eps, args.fail_prob, cfg.seed,
                                           norm1=0.5)
            rows.append({"family": args.family, "parameter": t, "degree": P.degree,
                         "dimension": A.n, "queries_o1": rep.queries.o1,
                         "queries_o2": rep.queries.o2,
                         "error": abs(rep.value - estimators.dense_entry(A, f, 1, 2))})
    else:
        raise CLIError(f"unknown bench family {args.family!r}")
    return rows


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="matdeg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("approx-degree", parents=[common], help="eps-approximate degree")
    a.add_argument("--function", required=True)
    a.add_argument("--eps", type=float, required=True)
    a.add_argument("--parity", choices=("none", "odd", "even"), default="none")

    w = sub.add_parser("witness", parents=[common], help="witness matrices")
    w.add_argument("action", choices=("build", "verify", "certify"))
    w.add_argument("--function")
    w.add_argument("--eps", type=float, default=0.25)
    w.add_argument("--parity", choices=("odd", "even"), default="odd")
    w.add_argument("--certificate")
    w.add_argument("--matrix", help="tridiagonal matrix JSON for certify")
    w.add_argument("--nff", type=int, help="use the size-2m no-fast-forwarding matrix")

    e = sub.add_parser("estimate", parents=[common], help="estimate <i|f(A)|j>")
    e.add_argument("--matrix", required=True)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--function")
    g.add_argument("--poly", help="monomial coefficients a0,a1,...")
    e.add_argument("--i", type=int, required=True)
    e.add_argument("--j", type=int, required=True)
    e.add_argument("--method", choices=("exact", "walk", "contour", "oracle"), default="walk")
    e.add_argument("--eps", type=float, default=0.05)
    e.add_argument("--fail-prob", type=float, default=1 / 3)
    e.add_argument("--lam", type=float, help="upper bound on ||A|| (contour)")
    e.add_argument("--Lam", type=float, help="contour radius, default ||A||_1")

    h = sub.add_parser("hardness", parents=[common], help="reduction instances")
    h.add_argument("action", choices=("gen", "verify"))
    h.add_argument("--kind", choices=("parity", "forrelation", "clock"), default="parity")
    h.add_argument("--n", type=int, default=4)
    h.add_argument("--function", default="sin:t=5")
    h.add_argument("--even-variant", action="store_true")
    h.add_argument("--bundle")

    b = sub.add_parser("bench", parents=[common], help="scaling sweeps (CSV)")
    b.add_argument("--family", choices=("witness-sin", "exact", "walk"), required=True)
    b.add_argument("--sweep", help="comma-separated parameter values")
    b.add_argument("--eps", type=float, default=0.25)
    b.add_argument("--fail-prob", type=float, default=1 / 3)
    return p


HANDLERS = {
    "approx-degree": cmd_approx_degree,
    "witness": cmd_witness,
    "estimate": cmd_estimate,
    "hardness": cmd_hardness,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.seed, args.out, args.format)
    t0 = time.perf_counter()
    try:
        if args.command == "bench":
            rows = _bench_rows(args, cfg)
            if cfg.format == "json":
                _emit({"schema_version": SCHEMA_VERSION, "command": "bench",
                       "columns": list(BENCH_COLUMNS), "rows": rows,
                       "timestamp": _stamp(t0)}, cfg)
            else:
                _emit(rows, cfg, BENCH_COLUMNS)
            return 0
        result = HANDLERS[args.command](args, cfg)
    except (CLIError, ValueError, RuntimeError, IndexError) as exc:
        err = {"schema_version": SCHEMA_VERSION, "command": args.command,
               "error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stdout.write(json.dumps(err, indent=2, sort_keys=True) + "\n")
        return 2
    payload = {"schema_version": SCHEMA_VERSION, "command": args.command, "seed": cfg.seed}
    payload.update(result)
    payload["timestamp"] = _stamp(t0)
    _emit(payload, cfg)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
