"""Command-line front end: ``run``, ``analyze`` and ``compare``."""
import argparse
import logging
import os
import sys

import numpy as np

from .config import load_ini, output_options, parse_config
from .errors import GdremError
from .estimators import ESTIMATORS
from .excitation import classify_excitation, classify_trace, default_level, default_window
from .gdrem import GdremConfig
from .output import emit_plots, read_trace_csv, summary_metrics, write_summary, write_trace_csv
from .sim import run_scenario

log = logging.getLogger("gdrem_mrac")


class _Outputs:
    """Tracks written files so a failed command can remove them."""

    def __init__(self):
        self.paths = []

    def add(self, path):
        self.paths.append(path)
        return path

    def extend(self, paths):
        self.paths.extend(paths)

    def cleanup(self):
        for p in self.paths:
            try:
                os.remove(p)
            except OSError:
                pass


def _seedless(value):
    if value is not None:
        raise argparse.ArgumentTypeError("--seedless takes no value (the simulation has no randomness)")
    return True


def build_parser():
    parser = argparse.ArgumentParser(prog="gdrem-mrac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--case", type=int, choices=(1, 2, 3), help="built-in experiment case")
        src.add_argument("--config", metavar="PATH", help="INI scenario file")
        p.add_argument("--dt", type=float)
        p.add_argument("--t-final", type=float, dest="t_final")
        p.add_argument("--record-every", type=int, dest="record_every")
        p.add_argument("--out", metavar="DIR", help="output directory (default: [output] dir or .)")
        p.add_argument("--window", type=float, metavar="T", help="excitation window for the summary report")
        p.add_argument("--plots", action="store_true", help="also write vector plots")
        p.add_argument("--seedless", nargs="?", const=None, default=False, metavar="",
                       help="accepted for compatibility; takes no value")

    run = sub.add_parser("run", help="simulate one scenario")
    scenario_args(run)
    run.add_argument("--estimator", choices=ESTIMATORS)

    cmp_ = sub.add_parser("compare", help="simulate one scenario with several estimators")
    scenario_args(cmp_)
    cmp_.add_argument("--estimators", default="gdrem,gradient,rls", help="comma-separated list")

    ana = sub.add_parser("analyze", help="excitation report for an existing trace CSV")
    ana.add_argument("--trace", required=True, metavar="CSV")
    ana.add_argument("--window", type=float, required=True, metavar="T")
    ana.add_argument("--level", type=float, help="Gram eigenvalue level (default 1e-6*T)")
    ana.add_argument("--gain-threshold", type=float, dest="gain_threshold",
                     help="omega threshold for the kT estimate (default 1e-8**p)")
    ana.add_argument("--out", metavar="PATH", help="report file (default: next to the CSV)")
    ana.add_argument("--seedless", nargs="?", const=None, default=False, metavar="")
    return parser


def _check_seedless(args):
    if args.seedless is not False:
        _seedless(args.seedless)


def _scenario(args, estimator=None):
    overrides = {"dt": args.dt, "t_final": args.t_final, "record_every": args.record_every}
    if estimator:
        overrides["kind"] = estimator
    if args.config is None and args.case is None:
        raise GdremError("one of --case or --config is required")
    return parse_config(args.config, args.case, overrides)


def _out_dir(args):
    opts = output_options(load_ini(args.config)) if args.config else output_options(None)
    out = args.out or opts["dir"] or "."
    os.makedirs(out, exist_ok=True)
    return out, opts


def _report(trace, cfg, T):
    """Excitation verdict for the summary; ``None`` if the default window does not fit the trace."""
    explicit = T is not None
    T = T or default_window(cfg.system)
    try:
        return classify_trace(trace, T, default_level(T))
    except IndexError:
        if explicit:
            raise
        log.warning("trace shorter than two excitation windows of %g s; verdict skipped", T)
        return None


def cmd_run(args, outputs):
    cfg = _scenario(args, args.estimator)
    out, opts = _out_dir(args)
    log.info("running %s (%s), %d steps", cfg.label, cfg.estimator.kind, cfg.n_steps)
    trace = run_scenario(cfg)
    stem = cfg.label if cfg.estimator.kind == "gdrem" else f"{cfg.label}_{cfg.estimator.kind}"
    csv_path = outputs.add(os.path.join(out, f"{stem}.csv"))
    write_trace_csv(trace, csv_path)
    rep = _report(trace, cfg, args.window)
    extra = {"excitation_verdict": "n/a", "kT_estimate": None}
    if rep is not None:
        extra = {"excitation_verdict": rep.verdict, "kT_estimate": rep.kT_estimate}
    write_summary(trace, outputs.add(os.path.join(out, f"{stem}_summary.txt")), extra)
    if args.plots or opts["plots"]:
        outputs.extend(emit_plots(trace, out, stem, opts["plot_format"]))
    print(csv_path)
    return 0


def cmd_compare(args, outputs):
    kinds = [k.strip() for k in args.estimators.split(",") if k.strip()]
    bad = [k for k in kinds if k not in ESTIMATORS]
    if bad or not kinds:
        raise GdremError(f"--estimators: unknown estimator(s) {', '.join(bad) or '(empty)'}; choose from {', '.join(ESTIMATORS)}")
    out, opts = _out_dir(args)
    rows = []
    for kind in kinds:
        cfg = _scenario(args, kind)
        trace = run_scenario(cfg)
        path = outputs.add(os.path.join(out, f"{cfg.label}_{kind}.csv"))
        write_trace_csv(trace, path)
        if args.plots or opts["plots"]:
            outputs.extend(emit_plots(trace, out, f"{cfg.label}_{kind}", opts["plot_format"]))
        met = summary_metrics(trace)
        t = trace.t
        e1 = np.abs(trace.col("eref1"))
        late = e1[t >= min(2.0, t[-1])]
        rows.append((kind, met["norm_eref_final"], met["norm_Theta_err_final"], met["norm_theta_err_final"], float(late.max())))
    summary = outputs.add(os.path.join(out, f"{cfg.label}_compare.txt"))
    with open(summary, "w") as fh:
        fh.write("estimator norm_eref_final norm_Theta_err_final norm_theta_err_final sup_abs_eref1_after_2s\n")
        for r in rows:
            fh.write(f"{r[0]} {r[1]:.17g} {r[2]:.17g} {r[3]:.17g} {r[4]:.17g}\n")
    with open(summary) as fh:
        sys.stdout.write(fh.read())
    return 0


def cmd_analyze(args, outputs):
    trace = read_trace_csv(args.trace)
    thr = args.gain_threshold if args.gain_threshold is not None else GdremConfig().gain_threshold(trace.p)
    level = args.level if args.level is not None else default_level(args.window)
    rep = classify_excitation(trace.t, trace.block("phibar"), args.window, level,
                              omega=trace.col("omega"), gain_threshold=thr)
    path = args.out or os.path.splitext(args.trace)[0] + "_excitation.txt"
    outputs.add(path)
    with open(path, "w") as fh:
        fh.write(rep.to_text())
    print(f"verdict: {rep.verdict}")
    for t0, r in rep.rank_profile:
        print(f"t >= {t0:.4f}: rank {r}")
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "analyze": cmd_analyze}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    outputs = _Outputs()
    try:
        _check_seedless(args)
        return COMMANDS[args.command](args, outputs)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))
    except (GdremError, ValueError, OSError, IndexError, ArithmeticError) as exc:
        outputs.cleanup()
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
