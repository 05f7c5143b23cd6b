"""Command-line interface: ``divsel {gen,select,nmf,pnmf}``.

Exit status: 0 on success, 1 for usage or input errors, 2 for numeric
failures.  Output files are written only after all computation succeeded,
each through a temporary file and an atomic rename.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from ._backend import BACKEND
from .datagen import DatasetSpec, Kind, atomic_write_text, fingerprint, gen_dataset, read_matrix, write_matrix
from .divergence import Family
from .estimators import PrecomputedFitter, ScalarFitter, SelectionGrid, select
from .factorization import FitConfig, Init, NmfFitter, PnmfFitter, nmf_alpha, nmf_beta, pnmf_gamma
from .quadrature import DEFAULT_ORDER, gauss_laguerre_rule
from .report import RunReport

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _grid_spec(text):
    try:
        lo, step, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:step:hi") from None
    return lo, step, hi


def _phi_spec(text):
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi:count") from None
    if not (0 < lo < hi and count >= 1):
        raise argparse.ArgumentTypeError("need 0 < lo < hi and count >= 1")
    return lo, hi, count


def build_parser():
    p = _Parser(prog="divsel", description="Select an information divergence by maximum EDA likelihood.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--kind", required=True, choices=[k.value for k in Kind if k is not Kind.FROM_FILE])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--case", default="gaussian", choices=["gaussian", "poisson", "gamma", "inverse_gaussian"])
    g.add_argument("--mu", type=float, default=10.0)
    g.add_argument("--phi", type=float, default=1.0)
    g.add_argument("--n", type=int, default=10_000, help="sample count (tweedie_scalar)")
    g.add_argument("--dim", type=int, default=1000)
    g.add_argument("--trials", type=int, default=10_000_000)
    g.add_argument("--mu-out", help="multinomial: also write the generating mean p*trials")

    s = sub.add_parser("select", help="select the divergence parameter")
    s.add_argument("--family", required=True, choices=[f.value for f in Family])
    s.add_argument("--data", required=True)
    s.add_argument("--model", default="scalar", choices=["scalar", "nmf", "pnmf", "precomputed"])
    s.add_argument("--mu", help="approximation matrix for --model precomputed")
    s.add_argument("--rank", type=int, default=2)
    s.add_argument("--iters", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--grid", type=_grid_spec, default=(-2.0, 0.05, 2.0), metavar="LO:STEP:HI")
    s.add_argument("--phi-grid", type=_phi_spec, default=(1e-4, 1e2, 40), metavar="LO:HI:COUNT")
    s.add_argument("--quad-order", type=int, default=DEFAULT_ORDER)
    s.add_argument("--estimator", default="medal", choices=["medal", "sm"])
    s.add_argument("--no-refine", action="store_true", help="skip golden-section refinement of phi")
    s.add_argument("--out", help="report JSON path")
    s.add_argument("--curve", help="curve CSV path")

    n = sub.add_parser("nmf", help="run beta- or alpha-NMF")
    n.add_argument("--data", required=True)
    n.add_argument("--family", default="beta", choices=["beta", "alpha"])
    n.add_argument("--param", type=float, required=True)
    n.add_argument("--rank", type=int, required=True)
    n.add_argument("--iters", type=int, default=100)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--mask")
    n.add_argument("--out-w", required=True)
    n.add_argument("--out-h", required=True)
    n.add_argument("--trace", help="objective trace CSV path")

    q = sub.add_parser("pnmf", help="run gamma-divergence projective NMF")
    q.add_argument("--data", required=True)
    q.add_argument("--param", type=float, required=True)
    q.add_argument("--rank", type=int, required=True)
    q.add_argument("--iters", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out-w", required=True)
    q.add_argument("--trace")
    return p


def _read(path):
    try:
        return read_matrix(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_gen(a):
    params = {}
    if a.kind == Kind.TWEEDIE_SCALAR.value:
        params = {"case": a.case, "mu": a.mu, "phi": a.phi, "n": a.n}
    elif a.kind == Kind.MULTINOMIAL.value:
        params = {"dim": a.dim, "trials": a.trials}
    spec = DatasetSpec(a.kind, params)
    data = gen_dataset(spec, a.seed)
    outputs = [(a.out, data)]
    if a.mu_out:
        if spec.kind is not Kind.MULTINOMIAL:
            raise UsageError("--mu-out applies to multinomial data only")
        prob = np.random.default_rng(a.seed).random(int(spec.params["dim"]))
        outputs.append((a.mu_out, prob / prob.sum() * spec.params["trials"]))
    for path, m in outputs:
        write_matrix(path, m)
    return EXIT_OK


def _format_curve(result):
    lines = ["param,profile_loglik,best_phi"]
    for p, ll, phi in zip(result.param_values, result.profile_loglik, result.per_point_phi):
        lines.append(f"{float(p)!r},{float(ll)!r},{float(phi)!r}")
    return "\n".join(lines) + "\n"


def _cmd_select(a):
    if not (a.out or a.curve):
        raise UsageError("nothing to write: give --out and/or --curve")
    x = _read(a.data)
    lo, step, hi = a.grid
    plo, phi_hi, pcount = a.phi_grid
    try:
        grid = SelectionGrid.from_ranges(lo, step, hi, plo, phi_hi, pcount)
        if a.family == "alpha":
            grid = SelectionGrid(grid.param_values[grid.param_values != 0], grid.phi_values)
        grid.validate_for(a.family)
        rule = gauss_laguerre_rule(a.quad_order)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = FitConfig(max_iters=a.iters, seed=a.seed)
    if a.model == "scalar":
        fitter, data = ScalarFitter(), x.ravel()
    elif a.model == "precomputed":
        if not a.mu:
            raise UsageError("--model precomputed needs --mu")
        mu = _read(a.mu)
        if mu.size != x.size:
            raise UsageError("--mu must have as many entries as --data")
        fitter, data = PrecomputedFitter(mu.reshape(x.shape)), x
        if x.shape[1] == 1:
            fitter, data = PrecomputedFitter(mu.ravel()), x.ravel()
    elif a.model == "nmf":
        if a.family not in ("beta", "alpha"):
            raise UsageError("--model nmf supports the beta and alpha families")
        fitter, data = NmfFitter(a.rank, cfg), x
    else:
        if a.family != "gamma":
            raise UsageError("--model pnmf supports the gamma family")
        fitter, data = PnmfFitter(a.rank, FitConfig(max_iters=a.iters, seed=a.seed, init=Init.EUCLIDEAN_WARM_START)), x
    if np.any(data <= 0):
        raise UsageError("data must be strictly positive for selection")
    t0 = time.perf_counter()
    kw = {"refine": not a.no_refine} if a.estimator == "medal" else {}
    result = select(data, fitter, grid, a.family, a.estimator, rule=rule if a.estimator == "medal" else None, **kw)
    elapsed = time.perf_counter() - t0
    report = RunReport(
        dataset={**fingerprint(x), "path": a.data},
        selection=result,
        config={
            "family": a.family,
            "estimator": a.estimator,
            "model": a.model,
            "rank": a.rank,
            "iters": a.iters,
            "seed": a.seed,
            "grid": list(a.grid),
            "phi_grid": [plo, phi_hi, pcount],
            "quad_order": a.quad_order,
            "refine": not a.no_refine,
            "backend": BACKEND,
            "version": __version__,
        },
        timing={"select_seconds": elapsed},
    )
    if a.curve:
        atomic_write_text(a.curve, _format_curve(result))
    if a.out:
        atomic_write_text(a.out, report.to_json())
    print(f"best {a.family} = {result.best_param:g} (phi = {result.best_phi:.6g})")
    return EXIT_OK


def _write_trace(path, trace):
    if path:
        atomic_write_text(path, "iteration,objective\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(trace)))


def _cmd_nmf(a):
    V = _read(a.data)
    mask = _read(a.mask) if a.mask else None
    try:
        cfg = FitConfig(max_iters=a.iters, seed=a.seed, mask=mask)
        fn = nmf_beta if a.family == "beta" else nmf_alpha
        model = fn(V, a.rank, a.param, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_matrix(a.out_w, model.W)
    write_matrix(a.out_h, model.H)
    _write_trace(a.trace, model.objective_trace.tolist())
    return EXIT_OK


def _cmd_pnmf(a):
    V = _read(a.data)
    try:
        cfg = FitConfig(max_iters=a.iters, seed=a.seed, init=Init.EUCLIDEAN_WARM_START)
        model = pnmf_gamma(V, a.rank, a.param, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_matrix(a.out_w, model.W)
    _write_trace(a.trace, model.objective_trace.tolist())
    return EXIT_OK


_VALUE_FLAGS = ("--grid", "--phi-grid", "--param")


def _glue_values(argv):
    # "--grid -2:0.05:2" would otherwise read the range as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


_COMMANDS = {"gen": _cmd_gen, "select": _cmd_select, "nmf": _cmd_nmf, "pnmf": _cmd_pnmf}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_values(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"divsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"divsel: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"divsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
