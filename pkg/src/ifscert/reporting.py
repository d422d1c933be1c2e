"""Report emission: JSON with a segregated header, RFC-4180 CSV, figures.

Reports are a JSON document with two top-level keys: ``header`` (timestamp,
tool version, command line -- anything run-specific) and ``body`` (the
deterministic payload).  For a fixed configuration and seed the serialized
body is byte-identical across runs; only the header varies.

CSV uses '.' as the decimal separator and CRLF-free default quoting via the
stdlib csv module.  Figures are rendered with the Agg backend next to the
delimited output.
"""

from __future__ import annotations

import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__  # noqa: E402
from .certifier import IntersectionCertificate  # noqa: E402


def make_header(command: str) -> dict:
    return {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "tool": "ifscert",
        "version": __version__,
        "command": command,
        "python": sys.version.split()[0],
    }


def write_report(path, body: dict, command: str) -> None:
    """JSON report; ``body`` must already be JSON-compatible and
    deterministic for a fixed configuration and seed."""
    doc = {"header": make_header(command), "body": body}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def body_bytes(body: dict) -> bytes:
    """Canonical bytes of a report body (used to check determinism)."""
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


# -- certificate ------------------------------------------------------------

CERT_CSV_HEADER = ["level", "case", "branch", "type_used", "type_next",
                   "ball_index", "hit_distance", "ball_radius",
                   "classification", "class_p", "class_margin", "grid_r",
                   "typed_grid_r"]


def certificate_rows(cert: IntersectionCertificate):
    for r in cert.records:
        yield [r.level, r.case, r.branch, r.type_used, r.type_next,
               " ".join(str(i) for i in r.ball_index), repr(r.hit_distance),
               repr(r.ball_radius), r.classification, r.class_p,
               repr(r.class_margin), repr(r.grid_r), repr(r.typed_grid_r)]


_CASE_COLOR = {"Case0": "tab:gray", "Case1": "tab:blue",
               "Case2": "tab:orange", "Case3": "tab:red"}


def plot_certificate(cert: IntersectionCertificate, path) -> None:
    """Per-level routing picture: normalized hit depth and drift margin."""
    if not cert.records:
        fig, ax = plt.subplots(figsize=(6, 3))
        ax.set_title("empty certificate")
        fig.savefig(path, dpi=110)
        plt.close(fig)
        return
    levels = [r.level for r in cert.records]
    rel_hit = [r.hit_distance / (r.ball_radius / 2) for r in cert.records]
    margins = [r.class_margin for r in cert.records]
    colors = [_CASE_COLOR.get(r.case, "k") for r in cert.records]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.scatter(levels, rel_hit, c=colors, s=18)
    ax1.axhline(1.0, color="k", lw=0.8, ls="--")
    ax1.set_ylabel("hit distance / middle radius")
    ax1.set_title(f"routing levels (depth {cert.depth}, "
                  f"{'passed' if cert.passed else 'failed'})")
    ax2.semilogy(levels, [max(m, 1e-18) for m in margins], "-", color="0.7", lw=0.8)
    ax2.scatter(levels, [max(m, 1e-18) for m in margins], c=colors, s=18)
    ax2.set_ylabel("classification margin")
    ax2.set_xlabel("level")
    handles = [plt.Line2D([], [], marker="o", ls="", color=c, label=k)
               for k, c in _CASE_COLOR.items()]
    ax1.legend(handles=handles, fontsize=8, ncol=4)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# -- correction checks ------------------------------------------------------

def plot_correction(report: dict, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    keys = ["violations_chain_a", "violations_chain_b", "violations_chain_c",
            "literal_property_i_failures"]
    vals = [report.get(k, 0) for k in keys]
    ax.bar(range(len(keys)), vals,
           color=["tab:blue", "tab:blue", "tab:blue", "tab:gray"])
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(["chain A", "chain B", "chain C", "literal (diag)"],
                       fontsize=8)
    ax.set_ylabel("violations")
    ax.set_title(f"membership chains over {report.get('samples', '?')} samples "
                 f"(x={report.get('x')}, {report.get('n_centers')} centers)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# -- pigeonhole walk --------------------------------------------------------

def plot_congruence(d, x0, k_show: int, path) -> None:
    """Fractional parts of the four walk coordinates over the first steps."""
    import numpy as np
    D, nums = d.walk_numerators()
    from .pigeonhole import _exact_start
    start = _exact_start(x0, D)
    ks = np.arange(k_show)
    fig, axes = plt.subplots(4, 1, figsize=(8, 7), sharex=True)
    for t, ax in enumerate(axes):
        frac = ((start[t] + ks * nums[t]) % D) / D
        ax.plot(ks, frac, ".", ms=2)
        ax.axhline(1 / (2 * d.m), color="r", lw=0.6)
        ax.axhline(1 - 1 / (2 * d.m), color="r", lw=0.6)
        ax.set_ylabel(f"frac x_k,{t + 1}")
    axes[-1].set_xlabel("step k")
    axes[0].set_title(f"walk residues, m={d.m}, beta={d.beta}")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# -- validation -------------------------------------------------------------

def validation_rows(report) -> list:
    return [[c.name, int(c.passed), repr(c.value), repr(c.threshold), c.detail]
            for c in report.conditions]


def plot_validation(report, path) -> None:
    names = [c.name for c in report.conditions]
    ok = [1 if c.passed else 0 for c in report.conditions]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.barh(range(len(names)), ok,
            color=["tab:green" if v else "tab:red" for v in ok])
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=9)
    ax.set_xlim(0, 1.2)
    ax.set_xticks([0, 1])
    ax.set_xticklabels(["fail", "pass"])
    ax.set_title(f"structural conditions ({report.mode} mode)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# -- sweeps ------------------------------------------------------------------

def plot_sweep(rows: list[dict], path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    seeds = [r["seed"] for r in rows]
    depth = [r["depth"] for r in rows]
    ok = [r["passed"] for r in rows]
    ax.scatter(seeds, depth, c=["tab:green" if v else "tab:red" for v in ok],
               s=24)
    ax.set_xlabel("seed")
    ax.set_ylabel("certified depth")
    rate = sum(ok) / len(ok) if ok else 0.0
    ax.set_title(f"certification sweep: {sum(ok)}/{len(ok)} passed "
                 f"({100 * rate:.0f}%)")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
