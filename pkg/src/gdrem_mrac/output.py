"""Trace serialization (CSV, text summaries) and static plots."""
import csv
import os

import numpy as np

from .sim import Trace, csv_columns

PLOT_KINDS = ("states", "uncertainty", "control", "params")


def write_trace_csv(trace, path):
    """Write the CSV columns of ``trace`` with 17 significant digits."""
    names = csv_columns(trace.n, trace.m, trace.p)
    data = trace.csv_data
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return path


def infer_dims(header):
    """Recover ``(n, m, p)`` from a trace CSV header."""
    n = sum(1 for h in header if h.startswith("xref"))
    m = sum(1 for h in header if h.startswith("z") and h[1:].isdigit())
    p = sum(1 for h in header if h.startswith("phibar"))
    if header != csv_columns(n, m, p):
        raise ValueError("CSV header does not match the trace schema")
    return n, m, p


def read_trace_csv(path):
    """Inverse of :func:`write_trace_csv`; extra diagnostics are not restored."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = [[float(v) for v in r] for r in reader if r]
    n, m, p = infer_dims(header)
    data = np.array(rows, dtype=np.float64).reshape(-1, len(header))
    return Trace(data=data, n=n, m=m, p=p, meta={"source": str(path)})


def summary_metrics(trace):
    last = trace.data[-1]
    idx = {nm: i for i, nm in enumerate(trace.names)}
    e = np.array([last[idx[f"eref{i + 1}"]] for i in range(trace.n)])
    return {
        "t_last": float(last[0]),
        "norm_eref_final": float(np.linalg.norm(e)),
        "norm_Theta_err_final": float(last[idx["norm_Theta_err"]]),
        "norm_theta_err_final": float(last[idx["norm_theta_err"]]),
        "sup_norm_eref": float(np.linalg.norm(trace.block("eref"), axis=1).max()),
    }


def write_summary(trace, path, extra=None):
    lines = [f"{k}: {v}" for k, v in (trace.meta or {}).items() if k != "final_state"]
    lines += [f"{k}: {v:.17g}" for k, v in summary_metrics(trace).items()]
    if extra:
        lines += [f"{k}: {v}" for k, v in extra.items()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def emit_plots(trace, out_dir, prefix, fmt="svg"):
    """Four line plots: states, uncertainty, control, parameters.  Returns the file paths."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    t = trace.t
    paths = []

    def save(fig, kind):
        path = os.path.join(out_dir, f"{prefix}_{kind}.{fmt}")
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(t, trace.col("x1"), label="x1")
    ax.plot(t, trace.col("xref1"), "--", label="x1ref")
    ax.set_xlabel("t, s")
    ax.legend()
    save(fig, "states")

    fig, ax = plt.subplots(figsize=(7, 3.5))
    if trace.has("uncertainty1"):
        unc = trace.block("uncertainty")
    else:
        unc = np.full((len(trace), trace.m), np.nan)
    for j in range(trace.m):
        ax.plot(t, unc[:, j], label=f"theta^T Psi [{j + 1}]")
    ax.set_xlabel("t, s")
    ax.legend()
    save(fig, "uncertainty")

    fig, ax = plt.subplots(figsize=(7, 3.5))
    u = trace.block("u_ad") + trace.block("u_nd")
    for j in range(trace.m):
        ax.plot(t, u[:, j], label=f"u_ad + u_nd [{j + 1}]")
    ax.set_xlabel("t, s")
    ax.legend()
    save(fig, "control")

    fig, ax = plt.subplots(figsize=(7, 3.5))
    th, Th = trace.block("thetahat"), trace.block("Theta")
    for k in range(th.shape[1]):
        line = ax.plot(t, Th[:, k], "--", label=f"Theta {k + 1}")[0]
        ax.plot(t, th[:, k], color=line.get_color(), label=f"thetahat {k + 1}")
    ax.set_xlabel("t, s")
    ax.legend(fontsize="small", ncol=2)
    save(fig, "params")
    return paths
