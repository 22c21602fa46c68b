"""Report files: byte-stable JSON, delimited benchmark tables, and the
matplotlib figures rendered alongside them."""

from __future__ import annotations

import csv
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

from .driver import BENCH_COLUMNS
from .model import SolveReport


def write_report_json(report: SolveReport, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")


def render_convergence(report: SolveReport, path: str) -> None:
    """Lower/upper bound trajectory over the cutting-plane iterations."""
    iters = [entry["iteration"] for entry in report.cut_log]
    lbs = [entry["lb"] for entry in report.cut_log]
    ubs = [entry["ub"] for entry in report.cut_log]
    fig, ax = plt.subplots(figsize=(6, 4))
    if iters:
        ax.step(iters, lbs, where="post", label="lower bound", color="tab:blue")
        ax.step(iters, ubs, where="post", label="upper bound", color="tab:red")
        ax.legend()
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective bound")
    ax.set_title(f"convergence ({report.status}, gap {report.gap:.2e})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_bench_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in BENCH_COLUMNS})


def render_bench(rows: list[dict], path: str) -> None:
    """Grouped iteration counts per instance, one bar color per cut family."""
    ok = [r for r in rows if isinstance(r.get("iterations"), (int, float))]
    fig, ax = plt.subplots(figsize=(7, 4))
    if ok:
        labels = sorted({f"{r['name']} {r['size']} N={r['N']} s{r['seed']}" for r in ok})
        families = sorted({r["cuts"] for r in ok})
        width = 0.8 / max(len(families), 1)
        for fi, fam in enumerate(families):
            xs, ys = [], []
            for li, label in enumerate(labels):
                match = [r for r in ok if fam == r["cuts"] and
                         label == f"{r['name']} {r['size']} N={r['N']} s{r['seed']}"]
                if match:
                    xs.append(li + fi * width)
                    ys.append(match[0]["iterations"])
            ax.bar(xs, ys, width=width, label=fam)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(labels))])
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
        ax.legend(title="cuts")
    ax.set_ylabel("iterations")
    ax.set_title("cutting-plane iterations by cut family")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
