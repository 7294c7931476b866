"""Command-line front end.

Subcommands: estimate, sweep, local, synth, align, bias-predict.  Output is
CSV with '#' metadata lines (tool version, seed, config hash); sweep and
local can also write an SVG plot.  Options may come from a plain key=value
file given with --config; flags on the command line win.

Exit codes: 0 success, 2 input or parse error, 3 precondition violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError, NumericalError, PRDimError, PreconditionError
from .estimator import (
    Centering,
    Correction,
    EstimatorVariant,
    TrialPair,
    estimate_all_variants,
    estimate_dimensionality,
)
from .io import config_hash, ingest, read_vector, write_npy, write_table

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4

ESTIMATE_COLUMNS = (
    "variant,centering,noise_corrected,value,valid,t1,t2,t3,t4,t5,A,B,diagnostics"
)
SWEEP_COLUMNS = "P,Q,repetition,seed,variant,centering,noise_corrected,value,valid,A,B,diagnostics"
LOCAL_COLUMNS = "radius,variant,centering,noise_corrected,mean_gamma,median_gamma,n_valid,skipped_centers"
ALIGN_COLUMNS = "quantity,i,j,value"
BIAS_COLUMNS = "P,Q,variant,bias,variance"

EPILOG = f"""output columns:
  estimate      {ESTIMATE_COLUMNS}
  sweep         {SWEEP_COLUMNS}
  local         {LOCAL_COLUMNS}
  align         {ALIGN_COLUMNS}
                (quantity in kappa, gamma, cka, gamma_joint, gamma_align,
                 gamma_ortho, exd, weighted_mean_cka, decomposition_residual,
                 identity_residual)
  bias-predict  {BIAS_COLUMNS}
Invalid estimates have an empty value and valid=false.
exit codes: 0 ok, 2 input/parse error, 3 precondition violation, 4 numerical failure"""


class UsageError(InputError):
    pass


def _int_list(text):
    try:
        return [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def read_config(path) -> dict:
    """key=value lines; '#' starts a comment.  Keys use flag names (dashes or underscores)."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# -- parser --------------------------------------------------------------------


def _common(p, inputs=True):
    p.add_argument("--config", help="key=value file; command-line flags win")
    if inputs:
        p.add_argument("--input", help="matrix file (CSV or .npy)")
        p.add_argument("--format", choices=("csv", "npy"), help="default: from suffix")
        p.add_argument("--trial2", help="second-trial matrix; enables noise correction")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--seed", type=int, default=0)


def _variant_opts(p, default_variant="all", default_centering="task"):
    p.add_argument(
        "--variant", choices=("naive", "row", "col", "both", "all"), default=default_variant
    )
    p.add_argument("--centering", choices=("task", "neuron", "none"), default=default_centering)
    p.add_argument("--weights", help="per-sample weight vector file")


def _synth_opts(p):
    p.add_argument("--kind", choices=("linear", "rff"), default="linear")
    p.add_argument("--latent-dim", type=int, default=1)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--input-scale", type=float, default=1.0)
    p.add_argument("--noise-mode", choices=("additive", "multiplicative"), default="additive")
    p.add_argument("--on-sphere", action="store_true", help="linear only: latents on a sphere")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="prdim",
        description="Bias-corrected participation-ratio dimensionality estimates.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    top.add_argument("--version", action="version", version=f"prdim {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="all estimator variants on one matrix or trial pair")
    _common(p)
    _variant_opts(p)
    p.add_argument("--symmetrize", action="store_true", help="average both trial orderings")

    p = sub.add_parser("sweep", help="subsampling sweep over P and Q")
    _common(p)
    _variant_opts(p)
    p.add_argument("--grid-p", help="comma list of row counts (default: all rows)")
    p.add_argument("--grid-q", help="comma list of column counts (default: all columns)")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.add_argument("--plot", help="SVG output path")

    p = sub.add_parser("local", help="local dimensionality over a radius sweep")
    _common(p)
    _variant_opts(p, default_variant="both")
    p.add_argument("--radii", help="comma list, ascending (default: 8 radii up from the median 4-point radius)")
    p.add_argument("--metric", choices=("euclidean", "mahalanobis"), default="mahalanobis")
    p.add_argument("--k-neighbors", type=int, help="neighbours for the local metric (default min(P-1, 20))")
    p.add_argument("--plot", help="SVG output path")

    p = sub.add_parser("synth", help="generate a synthetic matrix or trial pair")
    _common(p, inputs=False)
    _synth_opts(p)
    p.add_argument("--P", type=int, required=False, default=None, dest="P")
    p.add_argument("--Q", type=int, required=False, default=None, dest="Q")
    p.add_argument("--out2", help="also write a second trial here")

    p = sub.add_parser("align", help="joint dimensionality and alignment of several manifolds")
    p.add_argument("--input", action="append", help="matrix file; repeat once per manifold")
    p.add_argument("--format", choices=("csv", "npy"))
    _common(p, inputs=False)
    _variant_opts(p, default_variant="naive", default_centering="none")

    p = sub.add_parser("bias-predict", help="predicted bias and variance from kernel moments")
    _common(p)
    _synth_opts(p)
    p.add_argument("--ref-size", type=int, default=2000, help="reference P = Q when synthesizing")
    p.add_argument("--grid-p", help="comma list of P")
    p.add_argument("--grid-q", help="comma list of Q")
    p.add_argument("--variant", choices=("naive", "both", "all"), default="all")
    return top


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        # re-parse with config values as defaults so explicit flags win
        for a in sub._actions:
            if a.dest in cfg:
                v = cfg[a.dest]
                if a.type is not None:
                    v = a.type(v)
                elif a.nargs == 0:
                    v = v.lower() in ("1", "true", "yes", "on")
                elif isinstance(a, argparse._AppendAction):
                    v = [s.strip() for s in v.split(",")]
                if a.choices is not None and v not in a.choices:
                    raise UsageError(f"config {a.dest}={v!r} not one of {sorted(a.choices)}")
                sub.set_defaults(**{a.dest: v})
        args = parser.parse_args(argv)
    return args


# -- helpers -------------------------------------------------------------------


def _load(args):
    if not args.input:
        raise UsageError("--input is required")
    a = ingest(args.input, args.format)
    if getattr(args, "trial2", None):
        return TrialPair(a, ingest(args.trial2, args.format))
    return a


def _weights(args):
    return read_vector(args.weights) if getattr(args, "weights", None) else None


def _corrections(args):
    if args.variant == "all":
        return list(Correction)
    return [Correction(args.variant)]


def _meta(args, extra=None):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "plot", "config")}
    meta = {
        "tool": f"prdim {__version__}",
        "command": args.command,
        "seed": args.seed,
        "config_hash": config_hash(cfg),
    }
    meta.update(extra or {})
    return meta


def _est_row(est):
    v = est.variant
    t = est.terms
    return (
        v.correction.value,
        v.centering.value,
        v.noise_corrected,
        est.value if est.valid else None,
        est.valid,
        t.t1,
        t.t2,
        t.t3,
        t.t4,
        t.t5,
        t.A,
        t.B,
        "; ".join(est.diagnostics),
    )


# -- subcommands ---------------------------------------------------------------


def cmd_estimate(args):
    data = _load(args)
    w = _weights(args)
    cen = Centering(args.centering)
    corr = _corrections(args)
    if len(corr) == 4:
        ests = list(estimate_all_variants(data, w, cen, args.symmetrize).values())
    else:
        ests = [
            estimate_dimensionality(data, EstimatorVariant(c, cen), w, args.symmetrize)
            for c in corr
        ]
    P, Q = data.shape
    write_table(
        args.out,
        ESTIMATE_COLUMNS.split(","),
        [_est_row(e) for e in ests],
        _meta(args, {"rows": P, "columns": Q}),
    )
    return EXIT_OK


def cmd_sweep(args):
    from .plot import emit_plot
    from .sweep import subsample_sweep

    if args.weights:
        raise UsageError("--weights is not supported for sweep")
    data = _load(args)
    P, Q = data.shape
    grid_p = _int_list(args.grid_p) if args.grid_p else [P]
    grid_q = _int_list(args.grid_q) if args.grid_q else [Q]
    res = subsample_sweep(
        data,
        grid_p,
        grid_q,
        args.reps,
        _corrections(args),
        args.seed,
        Centering(args.centering),
        n_jobs=args.jobs,
    )
    rows = []
    for r in res.records:
        e = r.estimate
        rows.append(
            (
                r.P,
                r.Q,
                r.repetition,
                r.seed,
                r.variant.correction.value,
                r.variant.centering.value,
                r.variant.noise_corrected,
                e.value if e.valid else None,
                e.valid,
                e.terms.A,
                e.terms.B,
                "; ".join(e.diagnostics),
            )
        )
    meta = {"grid_p": ",".join(map(str, grid_p)), "grid_q": ",".join(map(str, grid_q))}
    meta["reps"] = args.reps
    write_table(args.out, SWEEP_COLUMNS.split(","), rows, _meta(args, meta))
    if args.plot:
        emit_plot(res, args.plot)
    return EXIT_OK


def default_radii(distances, n=8):
    """Geometric grid from the radius where the median ball holds four points to the diameter."""
    from .local import smallest_admissible_radius

    lo = smallest_admissible_radius(distances)
    finite = distances[np.isfinite(distances)]
    hi = float(finite.max()) if finite.size else lo
    if not hi > lo:
        return [lo]
    return list(np.geomspace(lo, hi, n))


def cmd_local(args):
    from .local import BallSpec, pairwise_distances, radius_sweep, twonn
    from .plot import emit_plot

    if args.weights:
        raise UsageError("--weights is not supported for local; balls set the weights")
    data = _load(args)
    ball = BallSpec(metric=args.metric, k_neighbors=args.k_neighbors)
    base = data.mean() if isinstance(data, TrialPair) else data
    dist = pairwise_distances(base, ball)
    radii = _float_list(args.radii) if args.radii else default_radii(dist)
    cen = Centering(args.centering)
    variants = [EstimatorVariant(corr, cen) for corr in _corrections(args)]
    results = radius_sweep(data, ball, radii, variants, distances=dist)
    rows = []
    for res in results:
        v = res.variant
        paired = isinstance(data, TrialPair)
        rows.append(
            (
                res.radius,
                v.correction.value,
                v.centering.value,
                paired,
                res.mean_gamma,
                res.median_gamma,
                res.n_valid,
                res.skipped_centers,
            )
        )
    try:
        tn = twonn(base)
    except PRDimError as exc:
        tn = f"undefined ({exc})"
    meta = {"metric": args.metric, "twonn": tn}
    write_table(args.out, LOCAL_COLUMNS.split(","), rows, _meta(args, meta))
    if args.plot:
        emit_plot(results, args.plot)
    return EXIT_OK


def _spec(args):
    from .synth import PopulationSpec

    try:
        return PopulationSpec(
            kind=args.kind,
            latent_dim=args.latent_dim,
            noise_std=args.noise_std,
            input_scale=args.input_scale,
            noise_mode=args.noise_mode,
            latent_on_sphere=args.on_sphere,
        )
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None


def _save(a, path):
    if str(path).endswith(".npy"):
        write_npy(path, a)
    else:
        np.savetxt(path, a, fmt="%.17g", delimiter=",")


def cmd_synth(args):
    from .synth import generate, generate_trial_pair

    if args.P is None or args.Q is None:
        raise UsageError("--P and --Q are required")
    if args.P < 1 or args.Q < 1:
        raise PreconditionError("P and Q must be >= 1")
    if args.out == "-":
        raise UsageError("synth needs --out PATH (.npy or .csv)")
    spec = _spec(args)
    if args.out2:
        tp = generate_trial_pair(spec, args.P, args.Q, args.seed)
        _save(tp.trial1, args.out)
        _save(tp.trial2, args.out2)
    else:
        _save(generate(spec, args.P, args.Q, args.seed), args.out)
    return EXIT_OK


def cmd_align(args):
    from .analysis import alignment_report

    if not args.input or len(args.input) < 2:
        raise UsageError("align needs at least two --input files")
    mats = [ingest(p, args.format) for p in args.input]
    if args.variant == "all":
        raise UsageError("align takes a single --variant")
    rep = alignment_report(mats, EstimatorVariant(args.variant, args.centering))
    rows = []
    for i, (k, g) in enumerate(rep.per_manifold):
        rows.append(("kappa", i, None, k))
        rows.append(("gamma", i, None, g))
    n = len(mats)
    for i in range(n):
        for j in range(n):
            rows.append(("cka", i, j, rep.cka_matrix[i, j]))
    for name in (
        "gamma_joint",
        "gamma_align",
        "gamma_ortho",
        "exd",
        "weighted_mean_cka",
        "decomposition_residual",
        "identity_residual",
    ):
        rows.append((name, None, None, getattr(rep, name)))
    write_table(args.out, ALIGN_COLUMNS.split(","), rows, _meta(args, {"manifolds": n}))
    return EXIT_OK


def cmd_bias_predict(args):
    from .analysis import estimate_kernel_moments, predict_bias_variance
    from .synth import generate

    if args.input:
        ref = ingest(args.input, args.format)
        source = args.input
    else:
        ref = generate(_spec(args), args.ref_size, args.ref_size, args.seed)
        source = f"synth {args.kind} d={args.latent_dim} size={args.ref_size}"
    m = estimate_kernel_moments(ref)
    grid_p = _int_list(args.grid_p) if args.grid_p else [100]
    grid_q = _int_list(args.grid_q) if args.grid_q else grid_p
    variants = ("naive", "both") if args.variant == "all" else (args.variant,)
    rows = []
    for P in grid_p:
        for Q in grid_q:
            for v in variants:
                bias, var = predict_bias_variance(m, P, Q, v)
                rows.append((P, Q, v, bias, var))
    meta = {"reference": source}
    for k in ("c", "c_prime", "c_tilde", "c_tilde_prime", "psi", "psi_tilde", "gamma_pop"):
        meta[k] = "%.17g" % getattr(m, k)
    write_table(args.out, BIAS_COLUMNS.split(","), rows, _meta(args, meta))
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
    "local": cmd_local,
    "synth": cmd_synth,
    "align": cmd_align,
    "bias-predict": cmd_bias_predict,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except InputError as exc:
        print(f"prdim: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"prdim: i/o error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"prdim: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as exc:
        print(f"prdim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"prdim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
