"""Command-line entry point: ``lftrecover <subcommand> ...``.

Exit codes: 0 on success, 1 on invalid input, 2 on numerical failure (a
JSON diagnostic is written and its path printed to stderr).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import experiment as ex
from .exceptions import DimensionMismatch, DimensionOrder, LftRecoverError, ParseError
from .interpolation import InterpSpec, compute_rtim, spec_from_dict
from .lft import LftPlant, plant_from_dict, transfer_value
from .recoverability import SamplingPlan, check_recoverability_sampled
from .recovery import RecoveryConfig, build_problem, recover
from .robustness import check_robustness

__all__ = ["main", "load_config", "RunConfig", "bundled_path"]

log = logging.getLogger(__name__)

# Perturbations whose cost traces are written as representative examples.
REPRESENTATIVE_EPS = (
    (1.9477e-2, 7.9221e-3, 4.4740e-3, -3.6647e-2),
    (2.5656e-2, -4.8425e-2, -1.6932e-1, 1.5780e-4),
    (-2.7062e-1, -4.2597e-2, -4.7609e-2, 1.2500e-1),
    (8.7601e-2, -2.8810e-1, 1.8755e-1, 5.4091e-2),
)


def bundled_path(name: str) -> Path:
    """Path of a fixture shipped with the package (``example_plant.json``, ``xi0.json``, ``xi1.json``)."""
    return Path(str(resources.files("lftrecover") / "data" / name))


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Options shared by the subcommands."""

    plant_path: Path | None = None
    spec_path: Path | None = None
    output_dir: Path = Path(".")
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)


def _read_json(path: Path, what: str):
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"{what} file not found: {path}", field=what)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} file {path} is not valid JSON: {exc}", field=what) from exc


def _load_plant(path) -> LftPlant:
    return plant_from_dict(_read_json(path, "plant"))


def _load_spec(path) -> InterpSpec:
    return spec_from_dict(_read_json(path, "spec"))


def load_config(path):
    """Read a run configuration document.

    The document holds ``plant`` and ``spec`` (file paths relative to the
    config file, or inline objects) plus optional ``output_dir``, ``seed``,
    ``tolerances`` and ``options``.

    Returns
    -------
    plant : LftPlant
    spec : InterpSpec
    run : RunConfig

    Raises
    ------
    ParseError
        Missing file, invalid JSON or missing field.
    DimensionMismatch
        A matrix block is malformed; ``block`` names it.
    """
    path = Path(path)
    doc = _read_json(path, "config")
    if not isinstance(doc, dict):
        raise ParseError("config must be a JSON object", field="config")
    objs = {}
    paths = {}
    for key, loader in (("plant", plant_from_dict), ("spec", spec_from_dict)):
        if key not in doc:
            raise ParseError(f"config lacks {key!r}", field=key)
        val = doc[key]
        if isinstance(val, str):
            p = (path.parent / val).resolve()
            paths[key] = p
            objs[key] = loader(_read_json(p, key))
        elif isinstance(val, dict):
            objs[key] = loader(val)
        else:
            raise ParseError(f"{key!r} must be a path or an object", field=key)
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ParseError("seed must be an integer", field="seed")
    run = RunConfig(
        plant_path=paths.get("plant"), spec_path=paths.get("spec"),
        output_dir=(path.parent / doc.get("output_dir", ".")).resolve(), seed=seed,
        tolerances=dict(doc.get("tolerances", {})), options=dict(doc.get("options", {})),
    )
    return objs["plant"], objs["spec"], run


def _vector(text: str, what: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise ParseError(f"{what} must be comma-separated numbers, got {text!r}", field=what) from exc
    if not vals:
        raise ParseError(f"{what} is empty", field=what)
    return np.array(vals)


def _matrix_arg(text: str, what: str) -> np.ndarray:
    """Inline ``a,b;c,d`` or a CSV file path."""
    p = Path(text)
    if p.is_file():
        with p.open() as fh:
            rows = [r for r in csv.reader(fh) if r]
        text = ";".join(",".join(r) for r in rows)
    rows = [_vector(r, what) for r in text.split(";") if r.strip()]
    if len({r.size for r in rows}) != 1:
        raise DimensionMismatch(f"{what} has rows of unequal length", block=what)
    return np.vstack(rows)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x))


# --------------------------------------------------------------------------
# subcommands


def cmd_rtim(args) -> int:
    plant, spec = _load_plant(args.plant), _load_spec(args.spec)
    gamma = compute_rtim(plant, _vector(args.theta, "theta"), spec).gamma
    print("Gamma =")
    print(np.array2string(gamma, precision=12, max_line_width=200))
    print("csv:")
    for row in gamma:
        print(",".join(_fmt(v) for v in row))
    return 0


def cmd_check(args) -> int:
    plant, spec = _load_plant(args.plant), _load_spec(args.spec)
    plan = SamplingPlan(args.n_theta, args.n_phi, args.mu_t, args.seed)
    v = check_recoverability_sampled(plant, spec, plan)
    print(f"verdict: {v.verdict} min_ratio={v.min_ratio:.6g} failed_thetas={len(v.failed_thetas)} "
          f"empty_left_null={v.n_empty_left_null} vacuous={v.n_vacuous} resampled={v.n_resampled}")
    out = Path(args.out_dir) / "min_ratios.csv"
    m = plant.n_theta
    _write_csv(out, ["sample"] + [f"theta{i + 1}" for i in range(m)] + ["min_ratio", "passed"],
               [[k, *map(_fmt, th), _fmt(r), int(ok)] for k, (th, r, ok) in enumerate(v.per_theta)])
    print(f"per-theta minimum ratios: {out}")
    return 0


def _recovery_cfg(args, n_theta) -> RecoveryConfig:
    init = _vector(args.init, "init") if args.init else None
    if init is not None and init.size != n_theta:
        raise DimensionMismatch(f"--init has {init.size} values, plant has {n_theta} parameters", block="init")
    return RecoveryConfig(lambda1=args.lambda1, lambda2=args.lambda2, step=args.step, eps_it=args.eps,
                          max_iter=args.max_iter, init_theta=init, seed=args.seed)


def _trace_rows(res):
    return [[k, _fmt(j), _fmt(e), _fmt(s[0]), _fmt(s[1])]
            for k, (j, e, s) in enumerate(zip(res.cost_trace, res.e_norm_trace, res.sigma_trace))]


TRACE_HEADER = ["iter", "J", "e_norm", "sigma1_R", "sigma2_R"]


def cmd_recover(args) -> int:
    plant, spec = _load_plant(args.plant), _load_spec(args.spec)
    gamma = _matrix_arg(args.gamma, "gamma")
    cfg = _recovery_cfg(args, plant.n_theta)
    res = recover(build_problem(plant, spec, gamma), cfg)
    print("theta_hat: " + ",".join(_fmt(v) for v in res.theta_hat))
    print(f"final_cost: {res.cost_trace[-1]!r}")
    print(f"iterations: {res.iterations} converged: {res.converged}")
    if args.trace_out:
        _write_csv(Path(args.trace_out), TRACE_HEADER, _trace_rows(res))
    return 0


def cmd_robustness(args) -> int:
    plant, spec = _load_plant(args.plant), _load_spec(args.spec)
    rep = check_robustness(plant, _vector(args.theta, "theta"), spec)
    print(f"robust: {rep.robust}")
    print(f"kappa: {'n/a' if rep.amplification is None else repr(rep.amplification)}")
    print(f"condition_matrix_rank: {rep.condition_matrix_rank}")
    print("dims: " + json.dumps({k: list(v) if isinstance(v, tuple) else v for k, v in rep.dims.items()}))
    return 0


def cmd_reproduce(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = ex.ExamplePlantParams()
    plant = ex.build_example_plant(params)
    designs = ex.build_xi_designs(args.sigma, (args.omega1, args.omega01, args.omega02))
    cfg = _recovery_cfg(args, 2)
    records = ex.run_monte_carlo(plant, designs["spec0"], designs["spec1"], cfg, args.trials,
                                 args.noise_std, args.seed, params.theta, n_jobs=args.jobs)
    rows = [r.as_row() for r in ex.sort_by_eps_norm(records)]
    _write_csv(out / "trials.csv", list(rows[0]), [list(r.values()) for r in rows])
    table = ex.bin_table(records)
    edges = table["edges"]
    labels = [f"[{a:g},{b:g})" for a, b in zip(edges[:-1], edges[1:])] + ["overflow", "sum"]
    _write_csv(out / "bins.csv", ["row"] + labels,
               [[k] + table[k] + [table["row_sums"][k]] for k in ("r_zeta_lt_1", "r_omega_lt_1", "total")])
    omegas = np.linspace(0.05, 20.0, 400)
    mags = [abs(transfer_value(plant, params.theta, 1j * w)[0, 0]) for w in omegas]
    _write_csv(out / "freq_response.csv", ["omega", "magnitude"],
               [[_fmt(w), _fmt(m)] for w, m in zip(omegas, mags)])
    traces = out / "cost_traces"
    gammas = {k: compute_rtim(plant, params.theta, s).gamma for k, s in designs.items()}
    for i, eps in enumerate(REPRESENTATIVE_EPS):
        for k, tag in (("spec0", "values"), ("spec1", "derivative")):
            res = recover(build_problem(plant, designs[k], gammas[k] * (1 + np.array(eps))), cfg)
            _write_csv(traces / f"trace{i + 1}_{tag}.csv", TRACE_HEADER, _trace_rows(res))
    frac = ex.ratio_fractions(records)
    summary = {"trials": args.trials, "noise_std": args.noise_std, "seed": args.seed, **frac,
               "not_converged": sum(not all(r.converged) for r in records)}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return 0


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_plant_spec(p, required=True):
    p.add_argument("--plant", required=required, help="plant JSON (blocks A_xx..D_yv, P list, theta_box)")
    p.add_argument("--spec", required=required, help='stimulus JSON with "Xi" and "Pi"')


def _add_recovery_flags(p, init_default=None):
    p.add_argument("--lambda1", type=float, default=2.0, help="weight of the rank penalty block (default 2.0)")
    p.add_argument("--lambda2", type=float, default=10.0, help="nuclear-norm threshold (default 10.0)")
    p.add_argument("--step", type=float, default=0.05, help="gradient step size (default 0.05)")
    p.add_argument("--eps", type=float, default=1e-10, help="stop when |J_k - J_(k-1)| <= eps (default 1e-10)")
    p.add_argument("--max-iter", type=int, default=2500, help="iteration cap (default 2500)")
    p.add_argument("--init", default=init_default,
                   help="initial theta, comma separated (default: %(default)s; box midpoint when unset)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lftrecover", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rtim", help="compute the RTIM Gamma at a parameter value")
    _add_plant_spec(p)
    p.add_argument("--theta", required=True, help="parameter value, comma separated")
    p.set_defaults(func=cmd_rtim)

    p = sub.add_parser("check", help="randomized recoverability test over the parameter box")
    _add_plant_spec(p)
    p.add_argument("--n-theta", type=int, default=50, help="parameter samples (default 50)")
    p.add_argument("--n-phi", type=int, default=50, help="phi samples per parameter sample (default 50)")
    p.add_argument("--mu-t", type=float, default=1e-8, help="pass threshold on ||lhs||^2/||phi||^2 (default 1e-8)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out-dir", default=".", help="directory for min_ratios.csv (default .)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("recover", help="recover theta from an RTIM estimate")
    _add_plant_spec(p)
    p.add_argument("--gamma", required=True, help="RTIM as a CSV file or inline rows 'a,b,...;c,d,...'")
    _add_recovery_flags(p)
    p.add_argument("--trace-out", help="write iter,J,e_norm,sigma1_R,sigma2_R to this CSV")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("robustness", help="robustness flag and error amplification factor")
    _add_plant_spec(p)
    p.add_argument("--theta", required=True, help="parameter value, comma separated")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser(
        "reproduce-example",
        help="noise study on the bundled fourth-order example",
        description="Plant k=6, r_z=2, zeta_z=0.2, omega_z=8, r_p1=3, r_p2=5 with true "
                    "(zeta_p, omega_p)=(0.1, 5) and box [0.01,1]x[1,10].",
    )
    p.add_argument("--trials", type=int, default=300, help="number of noisy trials (default 300)")
    p.add_argument("--noise-std", type=float, default=0.17, help="std of the multiplicative RTIM noise (default 0.17)")
    p.add_argument("--out-dir", default="example_output", help="output directory (default example_output)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes; 0 = one per CPU (default 1)")
    p.add_argument("--sigma", type=float, default=-0.05, help="real part of every sampling point (default -0.05)")
    p.add_argument("--omega1", type=float, default=4.4799, help="derivative design frequency (default 4.4799)")
    p.add_argument("--omega01", type=float, default=4.4179, help="first value-only frequency (default 4.4179)")
    p.add_argument("--omega02", type=float, default=4.5306, help="second value-only frequency (default 4.5306)")
    _add_recovery_flags(p, init_default="1,10")
    p.set_defaults(func=cmd_reproduce, seed=2024)
    for a in p._actions:
        if a.dest == "seed":
            a.default, a.help = 2024, "random seed (default 2024)"
    return parser


def _dump_failure(exc: Exception, argv) -> Path:
    state = getattr(exc, "state", None)
    doc = {"error": type(exc).__name__, "message": str(exc), "argv": list(argv)}
    if isinstance(state, dict):
        doc["state"] = {k: np.asarray(v).tolist() if isinstance(v, np.ndarray) else v for k, v in state.items()}
    fd, name = tempfile.mkstemp(prefix="lftrecover-failure-", suffix=".json")
    with open(fd, "w") as fh:
        json.dump(doc, fh, indent=2, default=str)
    return Path(name)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ParseError, DimensionMismatch, DimensionOrder, ValueError) as exc:
        where = getattr(exc, "field", None) or getattr(exc, "block", None)
        print(f"error{f' in {where}' if where else ''}: {exc}", file=sys.stderr)
        return 1
    except (LftRecoverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        path = _dump_failure(exc, argv)
        print(f"numerical failure: {exc}\ndiagnostics written to {path}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
