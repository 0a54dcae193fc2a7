"""``formopt`` command line interface.

Subcommands: ``eval``, ``certify``, ``search``, ``analyze``, ``gen``, ``oracle``.
Every report is a JSON document embedding the run manifest; ``--pretty``
renders that same document as indented text.

Exit status: 0 success, 2 bad input, 3 unsupported request, 4 numerical
failure.
"""
import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from ._errors import UNSUPPORTED_CODES, FormoptError
from .certify import certify_point
from .forms import Form, UnitPoint, random_form
from .search import SearchConfig, find_critical, grid_oracle
from .spurious import analyze, ball_sphere_check
from .tolerances import ToleranceSet

EXIT_OK, EXIT_INPUT, EXIT_UNSUPPORTED, EXIT_NUMERIC = 0, 2, 3, 4

TOLERANCE_HELP = """\
tolerances (scale-aware defaults, overridden by the absolute flags):
  first order   1e-8 * (1 + ||grad f(x)||)         --fonc-tol
  eigenvalues   1e-7 * (1 + max|H_ij|)             --eig-tol
  determinant   1e-8 * (1 + max|H_ij|) ** n        --det-tol
  clustering    1e-6 * (1 + |global min estimate|)  --cluster-eps
"""


class InputError(Exception):
    pass


def _sig(v, digits=12):
    return float(f"{v:.{digits}g}")


def _read_form(path):
    if path is None:
        raise InputError("--form is required")
    if path == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"--form: cannot read {path}: {exc.strerror}") from None
    try:
        return Form.from_json(text)
    except FormoptError as exc:
        raise InputError(f"--form: {exc}") from None


def _parse_point(text, n):
    if text is None:
        raise InputError("--point is required")
    try:
        x = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise InputError(f"--point: cannot parse {text!r} as comma-separated numbers") from None
    if x.size != n or not np.all(np.isfinite(x)):
        raise InputError(f"--point: expected {n} finite coordinates, got {x.size}")
    norm = np.linalg.norm(x)
    if norm == 0:
        raise InputError("--point: zero vector is not on the sphere")
    if abs(norm - 1.0) > 1e-9:
        print(f"warning: --point has norm {norm:.12g}; normalizing onto the sphere", file=sys.stderr)
    return UnitPoint(x)


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FORMOPT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"FORMOPT_SEED: {env!r} is not an integer") from None


def _tolerances(args):
    try:
        return ToleranceSet(fonc_tol=args.fonc_tol, eig_tol=args.eig_tol, det_tol=args.det_tol)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _search_config(args):
    try:
        return SearchConfig(
            starts=args.starts, seed=_seed(args), max_iters=args.max_iters, n_jobs=args.jobs
        )
    except FormoptError as exc:
        raise InputError(str(exc)) from None


def _manifest(args, tols=None, cfg=None, **extra):
    data = {
        "command": args.command,
        "form_source": getattr(args, "form", None) or "",
        "tolerances": (tols or ToleranceSet()).to_dict(),
        "search_config": cfg.to_dict() if cfg is not None else None,
        "output": args.out,
        "version": __version__,
    }
    if extra:
        data["extra"] = extra
    return data


def cmd_eval(args):
    f = _read_form(args.form)
    tols = _tolerances(args)
    p = _parse_point(args.point, f.n)
    x = p.coords
    fx = float(f.evaluate(x))
    g = f.gradient(x)
    gn = float(np.linalg.norm(g))
    res = float(np.linalg.norm(g - f.d * fx * x))
    return {
        "manifest": _manifest(args, tols),
        "point": [_sig(v) for v in x],
        "f": _sig(fx),
        "gradient": [_sig(v) for v in g],
        "grad_norm": _sig(gn),
        "d_abs_f": _sig(f.d * abs(fx)),
        "fonc_residual": _sig(res),
        "fonc": res <= tols.fonc(gn),
    }


def cmd_certify(args):
    f = _read_form(args.form)
    tols = _tolerances(args)
    cert = certify_point(f, _parse_point(args.point, f.n), tols)
    return {"manifest": _manifest(args, tols), **cert.to_dict()}


def cmd_search(args):
    f = _read_form(args.form)
    tols, cfg = _tolerances(args), _search_config(args)
    cps = find_critical(f, cfg, tols)
    if not cps:
        raise ArithmeticError("every search start failed to reach a critical point")
    return {"manifest": _manifest(args, tols, cfg), "critical_points": [cp.to_dict() for cp in cps]}


def cmd_analyze(args):
    f = _read_form(args.form)
    tols, cfg = _tolerances(args), _search_config(args)
    if args.cluster_eps is not None and not args.cluster_eps > 0:
        raise InputError("--cluster-eps must be positive")
    cps = find_critical(f, cfg, tols)
    if not cps:
        raise ArithmeticError("every search start failed to reach a critical point")
    report = analyze(f, cps, args.cluster_eps, tols, cfg)
    ball = ball_sphere_check(f, cps, seed=cfg.seed)
    return {
        "manifest": _manifest(args, tols, cfg, cluster_eps=args.cluster_eps),
        **report.to_dict(),
        "critical_points": [cp.to_dict() for cp in cps],
        "ball_sphere": ball.to_dict(),
    }


def cmd_gen(args):
    seed = _seed(args)
    if args.n < 1 or args.d < 1:
        raise InputError("--n and --d must be >= 1")
    try:
        f = random_form(args.n, args.d, seed, args.scheme)
    except FormoptError as exc:
        raise InputError(f"--scheme: {exc}") from None
    return f.to_dict()


def cmd_oracle(args):
    f = _read_form(args.form)
    if args.resolution is not None and args.resolution < 3:
        raise InputError("--resolution must be >= 3")
    res = grid_oracle(f, args.resolution)
    return {"manifest": _manifest(args, resolution=args.resolution), **res.to_dict()}


COMMANDS = {
    "eval": cmd_eval,
    "certify": cmd_certify,
    "search": cmd_search,
    "analyze": cmd_analyze,
    "gen": cmd_gen,
    "oracle": cmd_oracle,
}


def _render(value, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v and not _is_flat_list(v):
                lines.append(f"{pad}{k}:")
                lines.extend(_render(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(value, list):
        for i, v in enumerate(value):
            if isinstance(v, (dict, list)) and not _is_flat_list(v):
                lines.append(f"{pad}[{i}]")
                lines.extend(_render(v, indent + 1))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(f"{pad}{_scalar(value)}")
    return lines


def _is_flat_list(v):
    return isinstance(v, list) and all(not isinstance(e, (dict, list)) for e in v)


def _scalar(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "(" + ", ".join(_scalar(e) for e in v) + ")"
    if v is None:
        return "-"
    if isinstance(v, dict):
        return "{}"
    return str(v)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--form", metavar="PATH", help="form JSON file ('-' for stdin)")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="pretty", action="store_false", help="JSON output (default)")
    fmt.add_argument("--pretty", dest="pretty", action="store_true", help="human-readable output")
    common.set_defaults(pretty=False)

    tol = argparse.ArgumentParser(add_help=False)
    tol.add_argument("--fonc-tol", type=float, metavar="X")
    tol.add_argument("--eig-tol", type=float, metavar="X")
    tol.add_argument("--det-tol", type=float, metavar="X")

    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--point", metavar="CSV", help="comma-separated coordinates")

    seed = argparse.ArgumentParser(add_help=False)
    seed.add_argument("--seed", type=int, metavar="N", help="defaults to $FORMOPT_SEED, then 0")

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--starts", type=int, metavar="N", help="random starts (default 200*n)")
    search.add_argument("--max-iters", type=int, default=1000, metavar="N")
    search.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads")

    parser = argparse.ArgumentParser(
        prog="formopt",
        description="Certify and enumerate local minima of forms on the unit sphere.",
        epilog=TOLERANCE_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    kw = {"formatter_class": argparse.RawDescriptionHelpFormatter, "epilog": TOLERANCE_HELP}
    sub.add_parser("eval", parents=[common, point, tol], help="print f, grad f, ||grad f|| and d|f|", **kw)
    sub.add_parser("certify", parents=[common, point, tol], help="certificate for one point", **kw)
    sub.add_parser("search", parents=[common, tol, seed, search], help="enumerate critical points", **kw)
    p = sub.add_parser(
        "analyze", parents=[common, tol, seed, search], help="spurious local minimum verdict", **kw
    )
    p.add_argument("--cluster-eps", type=float, metavar="X")
    p = sub.add_parser("gen", parents=[common, seed], help="random form to stdout")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--scheme", default="gaussian", help="'gaussian' or 'sparse:K'")
    p = sub.add_parser("oracle", parents=[common], help="grid oracle minima (n <= 3)")
    p.add_argument("--resolution", type=int, metavar="N")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FormoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED if exc.code in UNSUPPORTED_CODES else EXIT_INPUT
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    payload = _json_safe(payload)
    if args.pretty:
        text = "\n".join(_render(payload))
    else:
        text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
