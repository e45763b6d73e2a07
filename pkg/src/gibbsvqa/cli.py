"""Command-line front end: ``gibbsvqa {prepare,sweep,tfd,shots,resources}``.

Exit codes: 0 success, 2 usage, 3 input, 4 capacity, 5 invariant failure.
JSON outputs carry ``schema_version`` 1, a fixed key order and floats written
with 17 significant digits; the ``timestamp`` key is the only field that may
differ between identical runs and is left out of :func:`canonical_hash`.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from .ansatz import build_gibbs_pqc, build_tfd_circuit, census, resource_counts
from .errors import GibbsVQAError, InputError, InvalidArgumentError
from .hamiltonian import build_xy_hamiltonian, exact_spectrum, to_dense
from .metrics import relative_entropy, trace_distance, uhlmann_fidelity
from .quantumstate import partial_trace
from .shotscale import alpha_sweep, write_alpha_csv
from .vqa import FreeEnergyObjective, evaluate_cost_sampled, multistart_optimize

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ("n", "beta", "gamma", "h", "best_fidelity", "best_free_energy",
                 "exact_free_energy", "iterations")
DEFAULT_BETAS = (0.2, 1.0, 5.0)
DEFAULT_GAMMAS = (0.1, 0.5, 0.9)
DEFAULT_SHOT_BETAS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
GROUND_GAP_TOL = 1e-9


# -- serialization ----------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(doc) -> str:
    """Canonical JSON text: insertion key order, 17-digit floats, NaN/inf as null."""
    return _encode(doc, 2, 0) + "\n"


def canonical_hash(doc_or_text) -> str:
    """SHA-256 of the canonical form with the ``timestamp`` key removed."""
    doc = json.loads(doc_or_text) if isinstance(doc_or_text, str) else doc_or_text
    if isinstance(doc, dict):
        doc = {k: v for k, v in doc.items() if k != "timestamp"}
    return hashlib.sha256(dumps(doc).encode()).hexdigest()


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _emit(text: str, output: str | None) -> None:
    if output in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {output}: {exc}") from exc


# -- argument helpers ---------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("list is empty")
    return vals


def _add_model(p: argparse.ArgumentParser, n_required: bool = True) -> None:
    p.add_argument("--n", type=int, required=n_required, help="number of system qubits")
    p.add_argument("--beta", type=float, default=1.0, help="inverse temperature (0 = maximize entropy)")
    p.add_argument("--gamma", type=float, default=0.5, help="XY anisotropy")
    p.add_argument("--h", type=float, default=0.5, help="transverse field")


def _add_optim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layers-a", type=int, default=None, help="ancilla layers (default n-1)")
    p.add_argument("--layers-s", type=int, default=None, help="system layers (default n-1)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=("statevector", "sampled"), default="statevector")
    p.add_argument("--shots", type=int, default=None, help="shots for --mode sampled")
    p.add_argument("--selector", choices=("free_energy", "fidelity"), default="free_energy")
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gibbsvqa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="multistart Gibbs-state preparation for one instance")
    _add_model(p)
    _add_optim(p)
    p.add_argument("--output", default=None, help="JSON path (default stdout)")
    p.add_argument("--trace", default=None, help="CSV of per-run convergence traces")

    p = sub.add_parser("sweep", help="prepare over a (n, beta, gamma) grid; writes CSV")
    p.add_argument("--n", dest="n_list", type=_int_list, default=[2, 3])
    p.add_argument("--beta", dest="beta_list", type=_float_list, default=list(DEFAULT_BETAS))
    p.add_argument("--gamma", dest="gamma_list", type=_float_list, default=list(DEFAULT_GAMMAS))
    p.add_argument("--h", type=float, default=0.5)
    _add_optim(p)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("tfd", help="thermofield-double circuit from a prepare result")
    p.add_argument("--params", required=True, help="JSON written by 'prepare'")
    p.add_argument("--output", default=None)

    p = sub.add_parser("shots", help="power-law exponents of the normalized c_v")
    p.add_argument("--gamma", dest="gamma_list", type=_float_list, default=[0.5])
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--beta", dest="beta_list", type=_float_list, default=list(DEFAULT_SHOT_BETAS))
    p.add_argument("--n-min", type=int, default=8)
    p.add_argument("--n-max", type=int, default=12)
    p.add_argument("--k", type=int, default=51)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("resources", help="formula vs census resource counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--layers-a", type=int, default=None)
    p.add_argument("--layers-s", type=int, default=None)
    p.add_argument("--json", action="store_true", help="JSON instead of a text table")
    p.add_argument("--output", default=None)
    return parser


def _layers(args, n: int) -> tuple[int, int]:
    la = n - 1 if args.layers_a is None else args.layers_a
    ls = n - 1 if args.layers_s is None else args.layers_s
    return la, ls


def _check_optim(args) -> None:
    if args.runs < 1:
        raise InvalidArgumentError("--runs must be >= 1")
    if args.jobs < 1:
        raise InvalidArgumentError("--jobs must be >= 1")
    if args.mode == "sampled" and (args.shots is None or args.shots < 1):
        raise InvalidArgumentError("--mode sampled needs --shots >= 1")


# -- prepare ------------------------------------------------------------------------

def prepare_document(n, beta, gamma, h, layers_a, layers_s, runs, seed, mode="statevector",
                     shots=None, selector="free_energy", jobs=1, keep_trace=False) -> dict:
    if n < 1:
        raise InvalidArgumentError("--n must be >= 1")
    H = build_xy_hamiltonian(n, gamma, h)
    res = multistart_optimize(H, beta, layers_a, layers_s, runs=runs, seed=seed,
                              selector=selector, jobs=jobs, keep_trace=keep_trace)
    obj = FreeEnergyObjective(H, beta, n, layers_a, layers_s)
    best = res.best
    x = best.final_parameters
    theta, phi = obj.split(x)
    rho = obj.system_state(x)
    spec = exact_spectrum(obj.h_dense, beta)
    v = spec.eigenvectors
    rho_exact = (v * spec.boltzmann_probs) @ v.conj().T
    try:
        rel = relative_entropy(rho, rho_exact)
    except GibbsVQAError:
        rel = None
    ground = v[:, 0]
    bd = best.final_cost

    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "prepare",
        "config": {
            "n": n, "beta": float(beta), "gamma": float(gamma), "h": float(h),
            "layers_a": layers_a, "layers_s": layers_s, "runs": runs, "seed": seed,
            "mode": mode, "shots": shots, "selector": selector,
        },
        "exact": {
            "free_energy": None if beta == 0 else spec.free_energy(),
            "log_partition_function": spec.log_partition_function,
            "ground_energy": float(spec.energies[0]),
            "ground_degenerate": bool(len(spec.energies) > 1
                                      and spec.energies[1] - spec.energies[0] < GROUND_GAP_TOL),
        },
        "best": {
            "run": res.best_index,
            "theta": theta,
            "phi": phi,
            "free_energy": bd.free_energy,
            "energy": bd.energy_term,
            "entropy": bd.entropy_term,
            "fidelity": uhlmann_fidelity(rho, rho_exact),
            "trace_distance": trace_distance(rho, rho_exact),
            "relative_entropy": rel,
            "ground_state_fidelity": float(np.real(ground.conj() @ rho @ ground)),
            "iterations": best.iterations,
            "converged": best.converged,
            "ancilla_probabilities": bd.probabilities,
        },
        "runs": [
            {"run": r, "final_cost": run.final_value, "fidelity": run.fidelity,
             "iterations": run.iterations, "converged": run.converged, "message": run.message}
            for r, run in enumerate(res.runs)
        ],
    }
    if mode == "sampled":
        sb = evaluate_cost_sampled(obj, x, shots, seed)
        doc["sampled"] = {"shots": shots, "free_energy": sb.free_energy, "energy": sb.energy_term,
                          "entropy": sb.entropy_term, "frequencies": sb.probabilities}
    if keep_trace:
        doc["_traces"] = [run.trace for run in res.runs]
    doc["timestamp"] = _timestamp()
    return doc


def trace_csv(traces) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("run", "iteration", "cost", "gradient_norm"))
    for r, trace in enumerate(traces):
        for it, cost, gnorm in trace:
            w.writerow((r, it, _fmt_float(cost), _fmt_float(gnorm)))
    return buf.getvalue()


def cmd_prepare(args) -> int:
    _check_optim(args)
    la, ls = _layers(args, args.n)
    doc = prepare_document(args.n, args.beta, args.gamma, args.h, la, ls, args.runs, args.seed,
                           args.mode, args.shots, args.selector, args.jobs,
                           keep_trace=args.trace is not None)
    traces = doc.pop("_traces", None)
    _emit(dumps(doc), args.output)
    if traces is not None:
        _emit(trace_csv(traces), args.trace)
    return 0


# -- sweep --------------------------------------------------------------------------

def _sweep_point(task):
    n, beta, gamma, h, la, ls, runs, seed, selector = task
    H = build_xy_hamiltonian(n, gamma, h)
    res = multistart_optimize(H, beta, la, ls, runs=runs, seed=seed, selector=selector)
    best = res.best
    return (n, beta, gamma, h, res.best_fidelity, best.final_cost.free_energy,
            res.exact_free_energy, best.iterations)


def cmd_sweep(args) -> int:
    _check_optim(args)
    tasks = []
    for n in args.n_list:
        la, ls = _layers(args, n)
        for gamma in args.gamma_list:
            for beta in args.beta_list:
                tasks.append((n, beta, gamma, args.h, la, ls, args.runs, args.seed, args.selector))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for row in rows:
        w.writerow(["" if v is None else _fmt_float(v) if isinstance(v, float) else v for v in row])
    _emit(buf.getvalue(), args.output)
    return 0


# -- tfd ----------------------------------------------------------------------------

def load_prepare(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read parameter file {path}: {exc}") from exc
    try:
        cfg = doc["config"]
        n, la, ls = int(cfg["n"]), int(cfg["layers_a"]), int(cfg["layers_s"])
        theta = np.asarray(doc["best"]["theta"], dtype=float)
        phi = np.asarray(doc["best"]["phi"], dtype=float)
        float(cfg["beta"]), float(cfg["gamma"]), float(cfg["h"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"parameter file {path} is missing fields: {exc}") from exc
    if theta.shape != (n * (la + 1),) or phi.shape != (2 * n * ls,):
        raise InputError(
            f"parameter shapes {theta.shape}, {phi.shape} do not match n={n}, "
            f"layers_a={la}, layers_s={ls}"
        )
    return doc


def tfd_document(doc: dict) -> dict:
    cfg = doc["config"]
    n, la, ls = int(cfg["n"]), int(cfg["layers_a"]), int(cfg["layers_s"])
    beta, gamma, h = float(cfg["beta"]), float(cfg["gamma"]), float(cfg["h"])
    theta = np.asarray(doc["best"]["theta"], dtype=float)
    phi = np.asarray(doc["best"]["phi"], dtype=float)
    x = np.concatenate([theta, phi])

    H = build_xy_hamiltonian(n, gamma, h)
    psi = build_tfd_circuit(n, la, ls).run(x)
    rho_a = partial_trace(psi, range(n))
    rho_s = partial_trace(psi, range(n, 2 * n))
    rho_exact = exact_spectrum(to_dense(H), beta)
    v = rho_exact.eigenvectors
    gibbs = (v * rho_exact.boltzmann_probs) @ v.conj().T
    obj = FreeEnergyObjective(H, beta, n, la, ls)
    bd = obj.breakdown(x)
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "tfd",
        "config": {k: cfg[k] for k in ("n", "beta", "gamma", "h", "layers_a", "layers_s", "seed")
                   if k in cfg},
        "fidelity_ancilla_vs_exact": uhlmann_fidelity(rho_a, gibbs),
        "fidelity_system_vs_exact": uhlmann_fidelity(rho_s, gibbs),
        "fidelity_mutual": uhlmann_fidelity(rho_a, rho_s),
        "trace_distance_mutual": trace_distance(rho_a, rho_s),
        "free_energy_resimulated": bd.free_energy,
        "free_energy_recorded": doc["best"].get("free_energy"),
        "timestamp": _timestamp(),
    }
    return out


def cmd_tfd(args) -> int:
    _emit(dumps(tfd_document(load_prepare(args.params))), args.output)
    return 0


# -- shots --------------------------------------------------------------------------

def cmd_shots(args) -> int:
    if args.n_max - args.n_min < 2:
        raise InvalidArgumentError("--n-min..--n-max must span at least 3 sizes")
    rows = alpha_sweep(args.gamma_list, args.h, args.beta_list,
                       range(args.n_min, args.n_max + 1), args.k)
    for gamma, beta, fit in rows:
        if fit.i == 0 and not fit.power_law_preferred:
            print(f"warning: gamma={gamma} beta={beta}: data look exponential in n "
                  f"(r2 power law {fit.r_squared:.4f}, exponential "
                  f"{fit.exponential_r_squared:.4f}); alpha is not meaningful",
                  file=sys.stderr)
    buf = io.StringIO()
    write_alpha_csv(rows, buf)
    _emit(buf.getvalue(), args.output)
    return 0


# -- resources ----------------------------------------------------------------------

RESOURCE_FIELDS = ("parameters", "cnot_gates", "sqrt_x_gates", "circuit_depth")


def resources_document(n: int, la: int, ls: int) -> dict:
    actual = census(build_gibbs_pqc(n, la, ls))
    formula = resource_counts(n, la, ls)
    applicable = formula.formulas_applicable
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "resources",
        "config": {"n": n, "layers_a": la, "layers_s": ls},
        "formulas_applicable": applicable,
        "formula": {f: getattr(formula, f) for f in RESOURCE_FIELDS} if applicable else None,
        "census": {f: getattr(actual, f) for f in RESOURCE_FIELDS},
        "agree": (all(getattr(formula, f) == getattr(actual, f) for f in RESOURCE_FIELDS)
                  if applicable else None),
    }


def cmd_resources(args) -> int:
    if args.n < 2:
        raise InvalidArgumentError("--n must be >= 2")
    la, ls = _layers(args, args.n)
    doc = resources_document(args.n, la, ls)
    if args.json:
        text = dumps(doc)
    else:
        lines = [f"n={args.n} layers_a={la} layers_s={ls}",
                 f"{'quantity':<14}{'formula':>10}{'census':>10}"]
        for f in RESOURCE_FIELDS:
            form = doc["formula"][f] if doc["formula"] else "-"
            lines.append(f"{f:<14}{form!s:>10}{doc['census'][f]:>10}")
        if not doc["formulas_applicable"]:
            lines.append("formulas inapplicable (n > 2 required)")
        elif not doc["agree"]:
            lines.append("MISMATCH between formula and census")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return 5 if doc["agree"] is False else 0


COMMANDS = {
    "prepare": cmd_prepare,
    "sweep": cmd_sweep,
    "tfd": cmd_tfd,
    "shots": cmd_shots,
    "resources": cmd_resources,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return COMMANDS[args.command](args)
    except GibbsVQAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
