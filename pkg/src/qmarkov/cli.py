"""Command-line front end: ``qmc validate | spectrum | evolve | compare``.

Every subcommand reads a JSON chain specification (see
``qmarkov/data/chain_spec.schema.json``). Tables are written as CSV (default)
or JSON; both carry the same ``%.17g`` number strings, and the output depends
only on the specification bytes and the flags.

Exit codes: 0 success, 1 validation or numerical failure, 2 usage or parse
error (including malformed JSON and out-of-range parameters).
"""

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import List, Optional, Sequence

import jsonschema
import numpy as np

from . import __version__
from .chain import (
    DEFAULT_TOL,
    SYMMETRY_TOL,
    EigenSystem,
    Graph,
    MarkovChain,
    eigendecompose,
    hamiltonian,
    numerical_system,
    simple_random_walk,
    validate_chain,
)
from .evolution import (
    STATE_TOL,
    check_state,
    classical_convergence_bound,
    classical_evolve_spectral,
    long_time_average_matrix,
    measurement_distribution,
    quantum_evolve,
    total_variation,
)
from .families import SolvableFamily, family_from_dict

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad input detected before any numerics run (exit code 2)."""


class NumericFailure(Exception):
    """A computed quantity violated its tolerance (exit code 1)."""


def load_schema() -> dict:
    text = resources.files("qmarkov").joinpath("data/chain_spec.schema.json").read_text()
    return json.loads(text)


@dataclass
class LoadedSpec:
    raw: bytes
    spec: dict
    chain: MarkovChain
    family: Optional[SolvableFamily] = None

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.raw).hexdigest()

    def system(self) -> EigenSystem:
        # closed forms are complete only on a finite vertex set
        if self.family is not None and not self.family.truncated:
            return self.family.build()
        return numerical_system(self.chain)


def load_spec(path: str) -> LoadedSpec:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        spec = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(spec), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise UsageError(f"{path}: schema violation at {where}: {err.message}")
    try:
        return _build(raw, spec)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _build(raw: bytes, spec: dict) -> LoadedSpec:
    if "family" in spec:
        family = family_from_dict(spec)
        return LoadedSpec(raw, spec, family.chain(), family)
    if "graph" in spec:
        g = spec["graph"]
        edges = [tuple(e) for e in g["edges"]]
        graph = Graph(g["n_vertices"], edges) if "n_vertices" in g else Graph.from_edges(edges)
        return LoadedSpec(raw, spec, simple_random_walk(graph))
    m = spec["matrix"]
    K = np.array(m["K"], dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("matrix K must be square")
    return LoadedSpec(raw, spec, MarkovChain.from_matrix(K, m["pi"]))


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if not math.isfinite(v):
        raise NumericFailure(f"non-finite value {v} in output")
    return "%.17g" % v


@dataclass
class ResultTable:
    columns: List[str]
    rows: List[list] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def render(self, fmt_name: str) -> str:
        cells = [[fmt(v) for v in row] for row in self.rows]
        meta = {k: fmt(v) if isinstance(v, float) else v for k, v in self.metadata.items()}
        if fmt_name == "csv":
            lines = [f"# {k}: {v}" for k, v in meta.items()]
            lines.append(",".join(self.columns))
            lines.extend(",".join(row) for row in cells)
            return "\n".join(lines) + "\n"
        # numbers are emitted as the same literal tokens as in the CSV
        row_text = []
        for row, raw_row in zip(cells, self.rows):
            tokens = []
            for token, v in zip(row, raw_row):
                if v is None:
                    tokens.append("null")
                elif isinstance(v, str):
                    tokens.append(json.dumps(v))
                else:
                    tokens.append(token)
            row_text.append("    [" + ", ".join(tokens) + "]")
        body = ",\n".join(row_text)
        return (
            "{\n"
            f'  "metadata": {json.dumps(meta, sort_keys=False)},\n'
            f'  "columns": {json.dumps(self.columns)},\n'
            '  "rows": [\n' + body + ("\n" if row_text else "") + "  ]\n}\n"
        )


def _thread_count() -> Optional[int]:
    raw = os.environ.get("QMC_THREADS", "").strip()
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"QMC_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise UsageError("QMC_THREADS must be nonnegative")
    return n or None


def _map_steps(func, steps: Sequence[int]) -> list:
    # executor.map keeps input order, so output does not depend on scheduling
    with ThreadPoolExecutor(max_workers=_thread_count()) as pool:
        return list(pool.map(func, steps))


def _metadata(loaded: LoadedSpec, system_source: Optional[str], tol: float) -> dict:
    window = loaded.chain.window
    meta = {
        "qmarkov_version": __version__,
        "spec_sha256": loaded.sha256,
        "chain": loaded.chain.label,
        "size": loaded.chain.size,
        "window": window.kind,
    }
    if system_source is not None:
        meta["spectral_source"] = system_source
    meta["tolerance"] = tol
    meta["truncation_budget"] = window.budget
    return meta


def _check_valid(loaded: LoadedSpec, tol: float) -> None:
    report = validate_chain(loaded.chain.K, loaded.chain.pi, tol)
    if not report.passed:
        raise NumericFailure("chain fails validation:\n" + "\n".join(report.lines()))


def cmd_validate(args) -> int:
    loaded = load_spec(args.spec)
    tol = loaded.chain.window.tolerance(args.tol)
    report = validate_chain(loaded.chain.K, loaded.chain.pi, tol)
    out = sys.stdout
    out.write(f"spec_sha256           {loaded.sha256}\n")
    out.write(f"chain                 {loaded.chain.label} ({loaded.chain.size} vertices)\n")
    if loaded.chain.window.kind == "truncated":
        out.write(f"truncation_budget     {loaded.chain.window.budget:.3e}\n")
    for line in report.lines():
        out.write(line + "\n")
    return EXIT_OK if report.passed else EXIT_FAIL


def spectrum_table(loaded: LoadedSpec, compare: bool, tol: float) -> ResultTable:
    family = loaded.family
    if family is not None:
        spec = family.spectral(loaded.chain.window)
        columns = ["n", "kappa", "energy", "d_sq"]
        rows = [
            [n, k, 1.0 - k, d * d]
            for n, (k, d) in enumerate(zip(spec.kappa, spec.norm_consts))
        ]
    else:
        spec = eigendecompose(hamiltonian(loaded.chain), SYMMETRY_TOL)
        columns = ["n", "kappa", "energy"]
        rows = [[n, k, 1.0 - k] for n, k in enumerate(spec.kappa)]
    meta = _metadata(loaded, spec.source, tol)
    if compare:
        numerical = np.sort(eigendecompose(hamiltonian(loaded.chain)).kappa)[::-1]
        # match by rank: both lists descending in kappa
        order = np.argsort(-np.asarray(spec.kappa), kind="stable")
        matched = np.empty_like(numerical)
        matched[order] = numerical
        columns += ["kappa_numerical", "deviation"]
        for row, kn in zip(rows, matched):
            row += [kn, abs(row[1] - kn)]
        meta["max_deviation"] = float(np.max(np.abs(np.asarray(spec.kappa) - matched)))
    return ResultTable(columns, rows, meta)


def cmd_spectrum(args) -> int:
    loaded = load_spec(args.spec)
    tol = loaded.chain.window.tolerance(args.tol)
    table = spectrum_table(loaded, args.compare, tol)
    _emit(table, args)
    if args.compare and table.metadata["max_deviation"] > args.compare_tol:
        sys.stderr.write(
            f"max deviation {table.metadata['max_deviation']:.3e} exceeds {args.compare_tol:.3e}\n"
        )
        return EXIT_FAIL
    return EXIT_OK


def _initial_vector(args, size: int, quantum: bool) -> np.ndarray:
    if args.init is not None:
        try:
            with open(args.init, "rb") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read {args.init}: {exc.strerror}") from exc
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise UsageError(f"{args.init}: malformed JSON: {exc}") from exc
        return _parse_vector(data, size, quantum)
    y = args.start
    if not 0 <= y < size:
        raise UsageError(f"start vertex {y} outside 0..{size - 1}")
    v = np.zeros(size, dtype=complex if quantum else float)
    v[y] = 1.0
    return v


def _parse_vector(data, size: int, quantum: bool) -> np.ndarray:
    if not isinstance(data, list) or len(data) != size:
        raise UsageError(f"initial vector must be a list of {size} entries")
    out = []
    for entry in data:
        if quantum and isinstance(entry, list) and len(entry) == 2:
            re, im = entry
        else:
            re, im = entry, 0
        for part in (re, im):
            if isinstance(part, bool) or not isinstance(part, (int, float)):
                raise UsageError(f"initial vector entry {entry!r} is not numeric")
        if not quantum and im:
            raise UsageError("classical initial distribution must be real")
        out.append(complex(re, im) if quantum else float(re))
    return np.array(out)


def evolve_table(loaded: LoadedSpec, mode: str, init: np.ndarray, steps: int, tol: float) -> ResultTable:
    system = loaded.system()
    size = system.size
    if mode == "classical":
        if np.any(init.real < -tol) or abs(init.sum() - 1.0) > tol:
            raise NumericFailure(f"initial distribution is not normalised (sum {init.sum():.17g})")

        def one(l):
            return classical_evolve_spectral(system, init, l)

    else:
        try:
            psi0 = check_state(init, size, max(tol, STATE_TOL))
        except ValueError as exc:
            raise NumericFailure(str(exc)) from exc

        def one(l):
            psi = quantum_evolve(system, psi0, l)
            return psi.real**2 + psi.imag**2

    blocks = _map_steps(one, range(steps + 1))
    rows = []
    budget = max(tol, STATE_TOL) if mode == "quantum" else tol
    for l, values in enumerate(blocks):
        defect = abs(float(values.sum()) - 1.0)
        if defect > budget:
            raise NumericFailure(f"step {l}: normalisation defect {defect:.3e} exceeds {budget:.3e}")
        rows.extend([l, x, v] for x, v in enumerate(values))
    meta = _metadata(loaded, system.spectral.source, tol)
    meta["mode"] = mode
    meta["steps"] = steps
    return ResultTable(["step", "x", "value"], rows, meta)


def cmd_evolve(args) -> int:
    loaded = load_spec(args.spec)
    tol = loaded.chain.window.tolerance(args.tol)
    _check_valid(loaded, tol)
    quantum = args.mode == "quantum"
    init = _initial_vector(args, loaded.chain.size, quantum)
    table = evolve_table(loaded, args.mode, init, args.steps, tol)
    if args.init is None:
        table.metadata["from"] = args.start
    _emit(table, args)
    return EXIT_OK


def compare_table(loaded: LoadedSpec, y: int, steps: int, tol: float) -> ResultTable:
    system = loaded.system()
    size = system.size
    if not 0 <= y < size:
        raise UsageError(f"start vertex {y} outside 0..{size - 1}")
    pi = system.chain.pi
    p0 = np.zeros(size)
    p0[y] = 1.0
    lta = long_time_average_matrix(system)[:, y]

    def one(l):
        p = classical_evolve_spectral(system, p0, l)
        q = measurement_distribution(system, y, l)
        return (
            total_variation(p, pi),
            0.5 * classical_convergence_bound(system, p0, l),
            total_variation(q, lta),
        )

    results = _map_steps(one, range(steps + 1))
    rows = []
    for l, (tv_c, bound, tv_q) in enumerate(results):
        rows.append(["tv_classical", l, None, tv_c])
        rows.append(["tv_classical_bound", l, None, bound])
        rows.append(["tv_quantum", l, None, tv_q])
    rows.extend(["long_time_average", None, x, v] for x, v in enumerate(lta))
    meta = _metadata(loaded, system.spectral.source, tol)
    meta["from"] = y
    meta["steps"] = steps
    return ResultTable(["quantity", "step", "x", "value"], rows, meta)


def cmd_compare(args) -> int:
    loaded = load_spec(args.spec)
    tol = loaded.chain.window.tolerance(args.tol)
    _check_valid(loaded, tol)
    _emit(compare_table(loaded, args.start, args.steps, tol), args)
    return EXIT_OK


def _emit(table: ResultTable, args) -> None:
    text = table.render(args.format)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmc", description="Classical and quantum walks on reversible Markov chains."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, table=True):
        p.add_argument("spec", help="chain specification (JSON)")
        p.add_argument(
            "--tol", type=_positive_float, default=DEFAULT_TOL,
            help="validation tolerance (default %(default)g; widened to the truncation budget)",
        )
        if table:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
            p.add_argument("--out", help="write the table here instead of stdout")

    p = sub.add_parser("validate", help="check stochasticity, reversibility and connectivity")
    common(p, table=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spectrum", help="eigenvalues and normalisation constants")
    common(p)
    p.add_argument("--compare", action="store_true", help="add numerical eigenvalues")
    p.add_argument(
        "--compare-tol", type=_positive_float, default=1e-9,
        help="fail when the max deviation exceeds this (default %(default)g)",
    )
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("evolve", help="classical distributions or quantum measurement probabilities")
    common(p)
    p.add_argument("--mode", choices=("classical", "quantum"), default="classical")
    start = p.add_mutually_exclusive_group(required=True)
    start.add_argument("--from", dest="start", type=_nonneg_int, help="start vertex")
    start.add_argument(
        "--init", help="JSON list: a distribution, or amplitudes as numbers or [re, im] pairs"
    )
    p.add_argument("--steps", type=_nonneg_int, required=True)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("compare", help="distance to equilibrium, classical vs quantum")
    common(p)
    p.add_argument("--from", dest="start", type=_nonneg_int, required=True)
    p.add_argument("--steps", type=_nonneg_int, required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"qmc: error: {exc}\n")
        return EXIT_USAGE
    except (NumericFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"qmc: failure: {exc}\n")
        return EXIT_FAIL
    except ValueError as exc:
        sys.stderr.write(f"qmc: failure: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
