"""Command-line driver: parameter sweeps written as CSV tables.

Every subcommand is deterministic given its flags and ``--seed``; the thread
count (``--threads`` or ``RANDHILL_THREADS``) changes only the wall time.

Exit codes: 0 success, 2 bad arguments (including resonant af and an
unwritable ``--out``), 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    _large_q_guard,
    gamma_fokker_planck,
    gamma_infinite_q,
    gamma_large_q,
    gamma_small_q,
    stability_band_width,
)
from .errors import InvalidParameterError, NonFiniteError, ResonanceError, SingularAngleError
from .lyapunov import asymptotic_growth_rate, classical_growth_rate, growth_rate_grid, growth_rate_mc
from .model import (
    ConstantQ,
    CycleParams,
    FixedAf,
    ForcingModel,
    UniformAngle,
    UniformQ,
    moments_of,
)
from .moments import (
    g_moments_angle_avg,
    g_moments_fixed_angle,
    g_variance_full_periods,
    h_moments_angle_avg,
    h_moments_fixed_angle,
    mc_element_moments,
)
from .oscillator import PHASE_LAWS, ensemble_energy_growth, iterative_map_growth
from .table import SweepTable, loglog_slope

__all__ = [
    "main",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_moments",
    "run_fp_check",
    "run_map",
    "run_bands",
    "af_grid",
]

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


def af_grid(af_min: float, af_max: float, points: int) -> np.ndarray:
    """Evenly spaced af values, rounded so that grid points like 1, 4, 9 are exact."""
    if points < 2:
        raise InvalidParameterError("points must be >= 2")
    if not 0.0 < af_min < af_max:
        raise InvalidParameterError(f"need 0 < af_min < af_max, got {af_min}, {af_max}")
    step = (af_max - af_min) / (points - 1)
    return np.array([round(af_min + step * i, 10) for i in range(points)])


def log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2:
        raise InvalidParameterError("points must be >= 2")
    if not 0.0 < lo < hi:
        raise InvalidParameterError(f"need 0 < min < max, got {lo}, {hi}")
    return np.exp(np.linspace(math.log(lo), math.log(hi), points))


def dist_to_square(af: float) -> float:
    r = math.sqrt(af)
    return min(abs(af - n * n) for n in {max(1, math.floor(r)), max(1, math.ceil(r))})


def make_model(dist: str, q0: float, af: float) -> ForcingModel:
    if dist == "symmetric":
        return ForcingModel.symmetric(q0, af)
    if dist == "shifted":
        return ForcingModel.shifted(q0, af)
    if dist == "constant":
        return ForcingModel.constant(q0, af)
    raise InvalidParameterError(f"unknown --dist {dist!r}")


def _base_meta(command: str, **kw) -> dict:
    meta = {"command": command, "version": __version__}
    meta.update(kw)
    return meta


# --- figures ----------------------------------------------------------------


def run_fig1(
    q0_min=32.0, q0_max=4096.0, points=8, af=0.5, n_cycles=100_000, n_trials=16, seed=0, threads=None
) -> SweepTable:
    """Product estimate against the large-q and q -> infinity forms, paired per trial."""
    q0s = log_grid(q0_min, q0_max, points)
    if q0s[-1] / q0s[0] < 100.0 * (1 - 1e-12):
        raise InvalidParameterError("the q0 range must span at least two decades")
    models = [ForcingModel.shifted(float(q0), af) for q0 in q0s]
    # validate every point before the expensive part
    for m in models:
        _large_q_guard(m, "fig1")
    mc = growth_rate_grid(models, n_cycles, n_trials, seed, threads=threads)
    n_samples = n_cycles * n_trials
    thm = [gamma_large_q(m, n_samples, seed, n_trials=n_trials, threads=threads) for m in models]
    cor = [gamma_infinite_q(m, n_samples, seed, n_trials=n_trials, threads=threads) for m in models]
    g_mc = [e.gamma for e in mc]
    d21 = [abs(e.gamma - t.gamma) for e, t in zip(mc, thm)]
    dcor = [abs(e.gamma - c.gamma) for e, c in zip(mc, cor)]
    table = SweepTable(
        {
            "q0": [float(q) for q in q0s],
            "gamma_mc": g_mc,
            "gamma_mc_stderr": [e.stderr for e in mc],
            "gamma_thm21": [t.gamma for t in thm],
            "gamma_cor21": [c.gamma for c in cor],
            "diff21": d21,
            "diff_cor": dcor,
        },
        _base_meta(
            "fig1",
            model="dist=shifted af=" + repr(float(af)),
            af_note="af = 0.5 is an assumed default for this sweep",
            seed=seed,
            n_cycles=n_cycles,
            n_trials=n_trials,
            burn_in=100,
            pairing="approximations averaged over the same q draws as the product",
        ),
    )
    table.summary["slope_diff21"] = loglog_slope(q0s, d21)
    table.summary["slope_diff_cor"] = loglog_slope(q0s, dcor)
    return table


def cycles_for_ell(n_cycles: int, ell: int, scale: bool = True) -> int:
    """Cycle count for curve ``ell``; above 7 it grows 4x per step so the relative error bar stays flat."""
    return n_cycles * 4 ** max(0, ell - 7) if scale else n_cycles


def run_fig2(
    af_min=0.5,
    af_max=10.0,
    points=191,
    ells=(4, 5, 6, 7, 8),
    n_cycles=1_000_000,
    n_trials=16,
    seed=0,
    threads=None,
    scale_cycles=True,
) -> SweepTable:
    afs = af_grid(af_min, af_max, points)
    cols = {"af": [float(a) for a in afs], "dist_to_square": [dist_to_square(a) for a in afs]}
    meta = _base_meta(
        "fig2", dist="symmetric", seed=seed, n_trials=n_trials, burn_in=100, ells=",".join(map(str, ells))
    )
    for ell in ells:
        q0 = 10.0 / 2**ell
        nc = cycles_for_ell(n_cycles, ell, scale_cycles)
        meta[f"q0_l{ell}"] = q0
        meta[f"n_cycles_l{ell}"] = nc
        models = [ForcingModel.symmetric(q0, float(a)) for a in afs]
        est = growth_rate_grid(models, nc, n_trials, seed, threads=threads)
        cols[f"gamma_mc_l{ell}"] = [e.gamma for e in est]
        cols[f"stderr_l{ell}"] = [e.stderr for e in est]
        cols[f"gamma_thm31_l{ell}"] = [
            gamma_small_q(float(a), q0 * q0 / 3.0, check=False).gamma for a in afs
        ]
    return SweepTable(cols, meta)


def run_fig3(
    af_min=0.5,
    af_max=10.0,
    points=191,
    q0=2.5,
    n_cycles=100_000,
    n_trials=16,
    seed=0,
    n_samples=1_000_000,
    threads=None,
) -> SweepTable:
    afs = af_grid(af_min, af_max, points)
    models = [ForcingModel.symmetric(q0, float(a)) for a in afs]
    mc = growth_rate_grid(models, n_cycles, n_trials, seed, threads=threads)
    mean_q_sq = q0 * q0 / 3.0
    thm = [gamma_small_q(float(a), mean_q_sq, check=False).gamma for a in afs]
    inf = [asymptotic_growth_rate(m, n_samples, seed).gamma for m in models]
    cls = [classical_growth_rate(CycleParams(float(a), 0.5 * q0)) for a in afs]
    return SweepTable(
        {
            "af": [float(a) for a in afs],
            "gamma_mc": [e.gamma for e in mc],
            "gamma_mc_stderr": [e.stderr for e in mc],
            "gamma_thm31": thm,
            "gamma_inf": inf,
            "gamma_classical": cls,
            "dist_to_square": [dist_to_square(a) for a in afs],
        },
        _base_meta(
            "fig3",
            model=f"dist=symmetric q0={q0!r}",
            classical_q=0.5 * q0,
            gamma_inf="mean over cycles of log spectral radius (0 for elliptic cycles)",
            seed=seed,
            n_cycles=n_cycles,
            n_trials=n_trials,
            n_samples=n_samples,
            burn_in=100,
        ),
    )


# --- tables -----------------------------------------------------------------

_Q_LAWS = {
    "constant_1": (ConstantQ(1.0), 1.0, 1.0),
    "uniform_-1_1": (UniformQ(-1.0, 1.0), 0.0, 1.0 / 3.0),
    "uniform_0_3": (UniformQ(0.0, 3.0), 1.5, 3.0),
}


def _z(a: float, b: float, err: float) -> float:
    d = abs(a - b)
    if err > 0.0:
        return d / err
    return 0.0 if d <= 1e-12 * max(1.0, abs(a)) else math.inf


def run_moments(n=200_000, seed=0, phis=(0.5, 1.5, 2.0, math.pi / 2), gammas=(2 * math.pi, 4 * math.pi)):
    """Analytic element moments against the sampling oracle on a grid of laws."""
    rows = {k: [] for k in (
        "element", "law", "q_law", "param", "mean", "mc_mean", "z_mean",
        "mean_sq", "mc_mean_sq", "z_mean_sq", "variance", "mc_variance", "z_variance",
    )}

    def add(an, mc, qname, param):
        rows["element"].append(an.element)
        rows["law"].append(an.law)
        rows["q_law"].append(qname)
        rows["param"].append(float(param))
        for key, a, b, e in (
            ("mean", an.mean, mc.mean, mc.mean_stderr),
            ("mean_sq", an.mean_sq, mc.mean_sq, mc.mean_sq_stderr),
            ("variance", an.variance, mc.variance, mc.variance_stderr),
        ):
            rows[key].append(a)
            rows["mc_" + key].append(b)
            rows["z_" + key].append(_z(a, b, e))

    for qname, (law, m1, m2) in _Q_LAWS.items():
        for phi in phis:
            mh, mg = mc_element_moments(ForcingModel(law, FixedAf((phi / math.pi) ** 2)), n, seed)
            add(h_moments_fixed_angle(phi, m1, m2), mh, qname, phi)
            add(g_moments_fixed_angle(phi, m1, m2), mg, qname, phi)
        for G in gammas:
            mh, mg = mc_element_moments(ForcingModel(law, UniformAngle(G)), n, seed)
            add(h_moments_angle_avg(G, m1, m2), mh, qname, G)
            add(g_moments_angle_avg(G, m1, m2), mg, qname, G)

    table = SweepTable(rows, _base_meta("moments", n=n, seed=seed, param="phi for fixed_angle, Gamma otherwise"))
    big = 2.0 * math.pi * 1e4
    h_lim = h_moments_angle_avg(big, 0.0, 0.0)
    table.summary["max_z"] = max(max(rows[k]) for k in ("z_mean", "z_mean_sq", "z_variance"))
    table.summary["limit_gamma"] = big
    table.summary["limit_h_mean"] = h_lim.mean
    table.summary["limit_h_mean_sq"] = h_lim.mean_sq
    table.summary["limit_sigma_g_over_gamma"] = math.sqrt(g_variance_full_periods(big, 0.0, 0.0)) / big
    table.summary["sqrt6_over_6pi"] = math.sqrt(6.0) / (6.0 * math.pi)
    return table


def run_fp_check(q0=0.1, af=2.0, dist="symmetric", n_traj=4000, n_cycles=4000, seed=0,
                 mc_cycles=1_000_000, n_trials=16, threads=None) -> SweepTable:
    """Ensemble ``<y^2>`` growth against the diffusion rate and the product estimate."""
    model = make_model(dist, q0, af)
    res = ensemble_energy_growth(af, model, n_traj, n_cycles, seed)
    mean_q_sq = moments_of(model).mean_q_sq
    fp = gamma_fokker_planck(af, mean_q_sq).gamma
    thm = gamma_small_q(af, mean_q_sq, check=False).gamma
    mc = growth_rate_mc(model, mc_cycles, n_trials, seed, threads=threads)
    table = SweepTable(
        {"t": list(res.t), "mean_y2": list(res.mean_y2)},
        _base_meta("fp-check", model=model.to_config(), seed=seed, n_traj=n_traj, n_cycles=n_cycles,
                   fit="least squares of log <y^2> on t, first 10% of cycles dropped"),
    )
    s = table.summary
    s["rate"] = res.rate
    s["rate_stderr"] = res.stderr
    s["half_rate"] = res.half_rate
    s["predicted"] = res.predicted
    s["ratio_to_predicted"] = res.rate / res.predicted if res.predicted else math.nan
    s["gamma_fp"] = fp
    s["gamma_thm31"] = thm
    s["fp_over_thm31_leading"] = fp / (mean_q_sq / (8.0 * af)) if mean_q_sq else math.nan
    s["gamma_mc"] = mc.gamma
    s["gamma_mc_stderr"] = mc.stderr
    # amplitude rate per cycle against the product rate of y^2
    s["amplitude_per_cycle_over_2gamma_mc"] = res.half_rate * math.pi / (2.0 * mc.gamma) if mc.gamma else math.nan
    return table


def run_map(q0_min=0.01, q0_max=0.1, points=5, af=2.0, dist="symmetric", phase_law="uniform_averaged",
            n=200_000, seed=0) -> SweepTable:
    q0s = log_grid(q0_min, q0_max, points)
    est = [iterative_map_growth(make_model(dist, float(q0), af), n, seed, phase_law) for q0 in q0s]
    g = [e.gamma for e in est]
    table = SweepTable(
        {"q0": [float(q) for q in q0s], "gamma_map": g, "stderr": [e.stderr for e in est]},
        _base_meta("map", dist=dist, af=af, phase_law=phase_law, n=n, seed=seed),
    )
    table.summary["loglog_slope"] = loglog_slope(q0s, g)
    table.summary["semilog_slope"] = float(np.polyfit(np.log(q0s), np.asarray(g), 1)[0])
    return table


def run_bands(regime="small_q", dist="symmetric", q0=0.1, af=2.0, n_max=3) -> SweepTable:
    model = make_model(dist, q0, af)
    ns = list(range(1, n_max + 1))
    widths = [stability_band_width(n, model, regime) for n in ns]
    return SweepTable(
        {"n": ns, "af_center": [n * n for n in ns], "width": widths, "half_width": [0.5 * w for w in widths]},
        _base_meta("bands", regime=regime, model=model.to_config(), q_ref=moments_of(model).mean_abs_q,
                   q_ref_rule="mean |q| of the forcing law"),
    )


# --- argument parsing -------------------------------------------------------

_PLOTS = {
    "fig1": ("q0", ["diff21", "diff_cor"], True),
    "fig2": ("af", None, False),
    "fig3": ("af", ["gamma_mc", "gamma_thm31", "gamma_inf", "gamma_classical"], False),
    "fp-check": ("t", ["mean_y2"], False),
    "map": ("q0", ["gamma_map"], True),
    "bands": ("n", ["width"], False),
}

_PLOT_TEMPLATE = '''"""Line plot of {csv} (generated; needs matplotlib)."""
import csv
import matplotlib.pyplot as plt

with open({csv!r}) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
x = [float(r[{x!r}]) for r in rows]
for name in {ys!r} or [k for k in rows[0] if k.startswith("gamma_")]:
    plt.plot(x, [float(r[name]) for r in rows], label=name)
if {loglog!r}:
    plt.xscale("log")
    plt.yscale("log")
plt.xlabel({x!r})
plt.legend()
plt.savefig({png!r})
'''


def _write_plot_script(command: str, out: str) -> None:
    if command not in _PLOTS or out == "-":
        return
    x, ys, loglog = _PLOTS[command]
    Path(out + ".plot.py").write_text(
        _PLOT_TEMPLATE.format(csv=out, x=x, ys=ys, loglog=loglog, png=out + ".png"), encoding="utf-8"
    )


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _show_defaults(parser: argparse.ArgumentParser) -> None:
    """Add the default to the help text of every option that has one."""
    for action in parser._actions:
        d = action.default
        if not action.option_strings or d is None or d is False or d is argparse.SUPPRESS:
            continue
        if isinstance(d, tuple):
            d = ",".join(map(str, d))
        action.help = f"{action.help} (default: {d})" if action.help else f"default: {d}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randhill", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, cycles=None, trials=True):
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
        sp.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $RANDHILL_THREADS or 1)")
        sp.add_argument("--plot-script", action="store_true",
                        help="also write OUT.plot.py, a matplotlib script for the CSV")
        if cycles is not None:
            sp.add_argument("--cycles", type=_positive_int, default=cycles)
        if trials:
            sp.add_argument("--trials", type=_positive_int, default=16)

    sp = sub.add_parser("fig1", help="error of the large-q forms against q0")
    sp.add_argument("--af", type=float, default=0.5)
    sp.add_argument("--q0-min", type=float, default=32.0)
    sp.add_argument("--q0-max", type=float, default=4096.0)
    sp.add_argument("--points", type=_positive_int, default=8)
    common(sp, 100_000)

    sp = sub.add_parser("fig2", help="growth rate against af for q0 = 10/2^ell")
    sp.add_argument("--af-min", type=float, default=0.5)
    sp.add_argument("--af-max", type=float, default=10.0)
    sp.add_argument("--points", type=_positive_int, default=191)
    sp.add_argument("--ell", type=_int_list, default=(4, 5, 6, 7, 8))
    sp.add_argument("--no-scale-cycles", action="store_true",
                    help="use --cycles for every ell (default: x4 per ell above 7)")
    common(sp, 1_000_000)

    sp = sub.add_parser("fig3", help="product, small-q, asymptotic and classical rates against af")
    sp.add_argument("--af-min", type=float, default=0.5)
    sp.add_argument("--af-max", type=float, default=10.0)
    sp.add_argument("--points", type=_positive_int, default=191)
    sp.add_argument("--q0", type=float, default=2.5)
    sp.add_argument("--samples", type=_positive_int, default=1_000_000)
    common(sp, 100_000)

    sp = sub.add_parser("moments", help="analytic element moments against sampling")
    sp.add_argument("--samples", type=_positive_int, default=200_000)
    common(sp, trials=False)

    sp = sub.add_parser("fp-check", help="ensemble <y^2> growth against the diffusion rate")
    sp.add_argument("--q0", type=float, default=0.1)
    sp.add_argument("--af", type=float, default=2.0)
    sp.add_argument("--dist", choices=("symmetric", "shifted", "constant"), default="symmetric")
    sp.add_argument("--trajectories", type=_positive_int, default=4000)
    common(sp, 4000)

    sp = sub.add_parser("map", help="heuristic one-dimensional map rate against q0")
    sp.add_argument("--q0-min", type=float, default=0.01)
    sp.add_argument("--q0-max", type=float, default=0.1)
    sp.add_argument("--points", type=_positive_int, default=5)
    sp.add_argument("--af", type=float, default=2.0)
    sp.add_argument("--dist", choices=("symmetric", "shifted", "constant"), default="symmetric")
    sp.add_argument("--phase-law", choices=PHASE_LAWS, default="uniform_averaged")
    sp.add_argument("--samples", type=_positive_int, default=200_000)
    common(sp, trials=False)

    sp = sub.add_parser("bands", help="stability band widths around af = n^2")
    sp.add_argument("--regime", choices=("small_q", "large_q"), default="small_q")
    sp.add_argument("--dist", choices=("symmetric", "shifted", "constant"), default="symmetric")
    sp.add_argument("--q0", type=float, default=0.1)
    sp.add_argument("--af", type=float, default=2.0)
    sp.add_argument("--n-max", type=_positive_int, default=3)
    common(sp, trials=False)
    for sp in sub.choices.values():
        _show_defaults(sp)
    return p


def _dispatch(a) -> SweepTable:
    c = a.command
    if c == "fig1":
        return run_fig1(a.q0_min, a.q0_max, a.points, a.af, a.cycles, a.trials, a.seed, a.threads)
    if c == "fig2":
        return run_fig2(a.af_min, a.af_max, a.points, a.ell, a.cycles, a.trials, a.seed, a.threads,
                        not a.no_scale_cycles)
    if c == "fig3":
        return run_fig3(a.af_min, a.af_max, a.points, a.q0, a.cycles, a.trials, a.seed, a.samples, a.threads)
    if c == "moments":
        return run_moments(a.samples, a.seed)
    if c == "fp-check":
        return run_fp_check(a.q0, a.af, a.dist, a.trajectories, a.cycles, a.seed, threads=a.threads,
                            n_trials=a.trials)
    if c == "map":
        return run_map(a.q0_min, a.q0_max, a.points, a.af, a.dist, a.phase_law, a.samples, a.seed)
    if c == "bands":
        return run_bands(a.regime, a.dist, a.q0, a.af, a.n_max)
    raise InvalidParameterError(f"unknown command {c!r}")  # pragma: no cover


def _check_writable(out: str) -> None:
    if out == "-":
        return
    parent = Path(out).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK) or Path(out).is_dir():
        raise OSError(f"cannot write to {out!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    try:
        _check_writable(args.out)
        table = _dispatch(args)
        table.write(args.out)
        if args.plot_script:
            _write_plot_script(args.command, args.out)
    except (InvalidParameterError, ResonanceError, OSError) as exc:
        print(f"randhill {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteError, SingularAngleError, FloatingPointError, ArithmeticError) as exc:
        print(f"randhill {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out != "-" and args.command == "fig1":
        s = table.summary
        print(f"slope_diff21={s['slope_diff21']:.4f} slope_diff_cor={s['slope_diff_cor']:.4f}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
