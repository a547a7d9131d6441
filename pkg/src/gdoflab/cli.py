"""Command line front end.

Subcommands
-----------
curve     both GDoF curves over an alpha grid
simulate  finite-SNR convergence of the layered schemes
ais       aligned-set sizes and entropy gaps on the deterministic model
lemma2    entropy under two gain laws (density swap)

Every output file starts with a comment line holding the resolved
configuration (for JSON, a ``config`` field). ``simulate``, ``ais`` and
``lemma2`` exit with 1 when their check fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Sequence

from . import __version__
from .ais import (
    aligned_set_average,
    entropy_gap,
    entropy_lemma_first_bound,
    fit_slope,
    lemma2_density_swap,
)
from .channel import LAWS, ChannelBounds
from .detmodel import DetParams
from .gdof import (
    SystemParams,
    classify_regime,
    curve_sweep,
    gdof_finite_precision,
)
from .linksim import SCALINGS, estimate_gdof

SET_SLACK = 0.15
ENTROPY_SLACK = 0.10
EXPERIMENTS = ("sets", "entropy", "first")
# fields that only say where output goes; kept out of the header
_UNRECORDED = ("out", "plot", "config", "threads")


@dataclass
class RunConfig:
    command: str
    k: Optional[int] = None
    alpha: Optional[List[float]] = None
    alpha_min: float = 0.0
    alpha_max: Optional[float] = None
    alpha_step: float = 0.01
    p_exponents: List[float] = field(default_factory=lambda: [4.0, 6.0, 8.0, 10.0])
    pbar_grid: List[int] = field(default_factory=lambda: [16, 32, 64, 128, 256])
    delta1: float = 0.5
    delta2: float = 2.0
    trials: Optional[int] = None
    seed: int = 0
    format: str = "csv"
    out: Optional[str] = None
    plot: Optional[str] = None
    tolerance: Optional[float] = None
    threads: int = 1
    config: Optional[str] = None
    scaling: str = "layered"
    experiments: List[str] = field(default_factory=lambda: list(EXPERIMENTS))
    set_slack: float = SET_SLACK
    beta: Optional[float] = None
    law_a: str = "uniform"
    law_b: str = "triangular"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")
        if self.k is not None and self.k < 2:
            raise ValueError(f"--k must be >= 2, got {self.k}")
        if self.trials is not None and self.trials < 1:
            raise ValueError(f"--trials must be >= 1, got {self.trials}")
        if self.threads < 1:
            raise ValueError(f"--threads must be >= 1, got {self.threads}")
        if self.alpha_step <= 0:
            raise ValueError("--alpha-step must be positive")
        if self.tolerance is not None and self.tolerance < 0:
            raise ValueError("--tolerance must be nonnegative")
        if any(e not in EXPERIMENTS for e in self.experiments):
            raise ValueError(f"--experiments must be drawn from {EXPERIMENTS}")
        if any(int(p) != p or p < 2 for p in self.pbar_grid):
            raise ValueError("--pbar-grid entries must be integers >= 2")
        if self.command in ("ais", "lemma2") and len(self.pbar_grid) < 2:
            raise ValueError("--pbar-grid needs at least two values to fit a slope")
        ChannelBounds(self.delta1, self.delta2)

    def recorded(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in _UNRECORDED}


@dataclass
class Table:
    columns: List[str]
    rows: List[list]
    ok: bool = True
    message: str = ""


def _one_alpha(cfg: RunConfig, default: float) -> float:
    if not cfg.alpha:
        return default
    if len(cfg.alpha) != 1:
        raise ValueError(f"{cfg.command} takes a single --alpha")
    return cfg.alpha[0]


def alpha_grid(cfg: RunConfig, k: int) -> List[float]:
    if cfg.alpha:
        return list(cfg.alpha)
    hi = float(k + 1) if cfg.alpha_max is None else cfg.alpha_max
    lo, step = cfg.alpha_min, cfg.alpha_step
    if hi < lo:
        raise ValueError("--alpha-max must be >= --alpha-min")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def cmd_curve(cfg: RunConfig) -> Table:
    k = cfg.k or 3
    grid = alpha_grid(cfg, k)
    p = SystemParams(k, 0.0)
    fin = curve_sweep(p, grid, "finite")
    per = curve_sweep(p, grid, "perfect")
    rows = [[f.alpha, f.d_per_user, q.d_per_user, q.d_per_user - f.d_per_user, str(f.regime)]
            for f, q in zip(fin, per)]
    if cfg.plot:
        from .plotting import plot_curves
        plot_curves(grid, [f.d_per_user for f in fin], [q.d_per_user for q in per], k, cfg.plot)
    return Table(["alpha", "d_finite", "d_perfect", "gap", "regime"], rows)


def cmd_simulate(cfg: RunConfig) -> Table:
    k = cfg.k or 3
    p = SystemParams(k, _one_alpha(cfg, 0.6))
    tol = 0.1 if cfg.tolerance is None else cfg.tolerance
    b = ChannelBounds(cfg.delta1, cfg.delta2)
    target = gdof_finite_precision(p).d_per_user
    est = estimate_gdof(p, b, cfg.p_exponents, cfg.trials or 100, cfg.seed,
                        cfg.threads, cfg.scaling)
    rows = [[e.p_exponent, e.mean, e.std, target, abs(e.mean - target)] for e in est]
    final = rows[-1][-1]
    if cfg.plot:
        from .plotting import plot_convergence
        plot_convergence([e.p_exponent for e in est], [e.mean for e in est],
                         [e.std for e in est], target, cfg.plot)
    return Table(["p_exponent", "mean_rate", "std", "d_target", "gap"], rows,
                 ok=final <= tol,
                 message=f"final gap {final:.4f} (tolerance {tol}), regime {classify_regime(p)}")


def _slopes_so_far(x, y):
    return [fit_slope(x[: i + 1], y[: i + 1]) if i >= 1 else float("nan") for i in range(len(x))]


def cmd_ais(cfg: RunConfig) -> Table:
    k = cfg.k or 2
    a = _one_alpha(cfg, 0.5)
    tol = ENTROPY_SLACK if cfg.tolerance is None else cfg.tolerance
    b = ChannelBounds(cfg.delta1, cfg.delta2)
    draws = cfg.trials or 200
    grid = [int(v) for v in cfg.pbar_grid]
    x = [math.log2(v) for v in grid]
    nan = float("nan")
    cols = {c: [nan] * len(grid) for c in (
        "mean_set_size", "log2_mean_set_size", "set_slope_so_far",
        "h_y2_given_x1", "h_y1_given_x1", "entropy_gap", "gap_slope_so_far",
        "h_y1_minus_h_x", "first_slope_so_far")}
    set_bound = max(0.0, 1.0 - a)
    checks = []
    summary = {}
    series = {}
    if "sets" in cfg.experiments:
        st = [aligned_set_average(DetParams(v, a, k), b, draws, cfg.seed, threads=cfg.threads)
              for v in grid]
        cols["mean_set_size"] = [s.mean_set_size for s in st]
        cols["log2_mean_set_size"] = [math.log2(s.mean_set_size) for s in st]
        cols["set_slope_so_far"] = _slopes_so_far(x, cols["log2_mean_set_size"])
        slope = cols["set_slope_so_far"][-1]
        summary["set_slope_so_far"] = slope
        checks.append(("set-size slope", slope, set_bound + cfg.set_slack))
        series["log2 E|S|"] = (cols["log2_mean_set_size"], slope)
    if "entropy" in cfg.experiments:
        eg = [entropy_gap(DetParams(v, a, k), b, draws, cfg.seed, threads=cfg.threads)
              for v in grid]
        cols["h_y2_given_x1"] = [e.h_y2_given_x1 for e in eg]
        cols["h_y1_given_x1"] = [e.h_y1_given_x1 for e in eg]
        cols["entropy_gap"] = [e.gap for e in eg]
        cols["gap_slope_so_far"] = _slopes_so_far(x, cols["entropy_gap"])
        slope = cols["gap_slope_so_far"][-1]
        summary["gap_slope_so_far"] = slope
        checks.append(("entropy-gap slope", slope, set_bound + tol))
        series["H(Y2|X1) - H(Y1|X1)"] = (cols["entropy_gap"], slope)
    if "first" in cfg.experiments:
        fb = [entropy_lemma_first_bound(DetParams(v, a, k), b, draws, cfg.seed,
                                        threads=cfg.threads) for v in grid]
        cols["h_y1_minus_h_x"] = [f.diff for f in fb]
        cols["first_slope_so_far"] = _slopes_so_far(x, cols["h_y1_minus_h_x"])
        slope = cols["first_slope_so_far"][-1]
        summary["first_slope_so_far"] = slope
        checks.append(("H(Y1) - H(X) slope", slope, a + tol))
        series["H(Y1) - H(X)"] = (cols["h_y1_minus_h_x"], slope)

    names = ["p_bar", "mean_set_size", "set_slope_so_far", "set_bound_slope",
             "h_y2_given_x1", "h_y1_given_x1", "entropy_gap", "gap_slope_so_far",
             "gap_bound_slope", "h_y1_minus_h_x", "first_slope_so_far", "first_bound_slope"]
    bounds = {"set_bound_slope": set_bound, "gap_bound_slope": set_bound,
              "first_bound_slope": a}
    rows = []
    for i, v in enumerate(grid):
        row = {"p_bar": v, **bounds, **{c: vals[i] for c, vals in cols.items()}}
        rows.append([row.get(n, nan) for n in names])
    last = {"p_bar": "summary", **bounds, **summary}
    rows.append([last.get(n, nan) for n in names])
    if cfg.plot and series:
        from .plotting import plot_slopes
        plot_slopes(x, series, cfg.plot)
    ok = all(s <= lim for _, s, lim in checks)
    msg = "; ".join(f"{n} {s:.4f} (limit {lim:.4f})" for n, s, lim in checks)
    return Table(names, rows, ok=ok, message=msg)


def cmd_lemma2(cfg: RunConfig) -> Table:
    k = cfg.k or 2
    a = _one_alpha(cfg, 0.5)
    beta = a - 1.0 if cfg.beta is None else cfg.beta
    tol = ENTROPY_SLACK if cfg.tolerance is None else cfg.tolerance
    b = ChannelBounds(cfg.delta1, cfg.delta2)
    res = lemma2_density_swap(beta, a, k, cfg.pbar_grid, cfg.law_a, cfg.law_b, b,
                              cfg.trials or 100, cfg.seed)
    x = [math.log2(r.p_bar) for r in res.rows]
    so_far = _slopes_so_far(x, [r.abs_diff for r in res.rows])
    rows = [[r.p_bar, r.h_a, r.h_b, r.abs_diff, s] for r, s in zip(res.rows, so_far)]
    nan = float("nan")
    rows.append(["summary", nan, nan, nan, res.slope])
    if cfg.plot:
        from .plotting import plot_slopes
        plot_slopes(x, {f"H ({res.law_a})": ([r.h_a for r in res.rows], fit_slope(x, [r.h_a for r in res.rows])),
                        f"H ({res.law_b})": ([r.h_b for r in res.rows], fit_slope(x, [r.h_b for r in res.rows]))},
                    cfg.plot)
    return Table(["p_bar", "h_a", "h_b", "abs_diff", "slope_so_far"], rows,
                 ok=res.slope <= tol,
                 message=f"beta={beta}: slope of |H_A - H_B| {res.slope:.4f} (tolerance {tol})")


COMMANDS = {"curve": cmd_curve, "simulate": cmd_simulate, "ais": cmd_ais, "lemma2": cmd_lemma2}


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _json_cell(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def header(cfg: RunConfig) -> str:
    return f"gdoflab {__version__} {cfg.command} config={json.dumps(cfg.recorded(), sort_keys=True)}"


def render(table: Table, cfg: RunConfig) -> str:
    if cfg.format == "json":
        doc = {
            "config": cfg.recorded(),
            "command": cfg.command,
            "columns": table.columns,
            "rows": [{c: _json_cell(v) for c, v in zip(table.columns, row)} for row in table.rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write("# " + header(cfg) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    cfg.validate()
    table = COMMANDS[cfg.command](cfg)
    text = render(table, cfg)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if table.message:
        print(f"{cfg.command}: {'PASS' if table.ok else 'FAIL'}: {table.message}", file=sys.stderr)
    return 0 if table.ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def _floats(s: str) -> List[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _ints(s: str) -> List[int]:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def _names(s: str) -> List[str]:
    return [v.strip() for v in s.split(",") if v.strip()]


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes or underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gdoflab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--k", type=int, help="number of users")
    common.add_argument("--alpha", type=_floats, help="alpha value (curve: comma list)")
    common.add_argument("--delta1", type=float, default=0.5)
    common.add_argument("--delta2", type=float, default=2.0)
    common.add_argument("--trials", type=int, help="trials / channel draws")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--plot", help="figure path (.svg, .png, .pdf)")
    common.add_argument("--tolerance", type=float)
    common.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("curve", parents=[common], help="GDoF curves over an alpha grid")
    p.add_argument("--alpha-min", type=float, default=0.0)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--alpha-step", type=float, default=0.01)

    p = sub.add_parser("simulate", parents=[common], help="finite-SNR scheme simulation")
    p.add_argument("--p-exponents", type=_floats, default=[4.0, 6.0, 8.0, 10.0])
    p.add_argument("--scaling", choices=SCALINGS, default="layered")

    p = sub.add_parser("ais", parents=[common], help="aligned image sets and entropy gaps")
    p.add_argument("--pbar-grid", type=_ints, default=[16, 32, 64, 128, 256])
    p.add_argument("--experiments", type=_names, default=list(EXPERIMENTS),
                   help="comma list from sets,entropy,first")
    p.add_argument("--set-slack", type=float, default=SET_SLACK)

    p = sub.add_parser("lemma2", parents=[common], help="density-swap entropy check")
    p.add_argument("--pbar-grid", type=_ints, default=[16, 32, 64, 128, 256])
    p.add_argument("--beta", type=float, help="default alpha - 1")
    p.add_argument("--law-a", choices=LAWS, default="uniform")
    p.add_argument("--law-b", choices=LAWS, default="triangular")
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config_file(args.config)
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(values) - known)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**values)
        args = parser.parse_args(argv)
    kw = {f.name: getattr(args, f.name) for f in fields(RunConfig) if hasattr(args, f.name)}
    return RunConfig(**kw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except ValueError as exc:
        print(f"gdoflab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
