"""Figure rendering for the report path (headless, files only).

matplotlib is imported lazily with the Agg backend so that library users
who never render figures do not pay the import cost.
"""

from __future__ import annotations

import math


def _plt():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def save_history_figure(record, path) -> None:
    """Best objective value against evaluation count for one estimate run."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    if record.history:
        xs = [i for i, _ in record.history]
        ys = [v for _, v in record.history]
        ax.step(xs, ys, where="post")
        ax.scatter(xs, ys, s=12)
        if min(ys) > 0:
            ax.set_yscale("log")
    ax.set_xlabel("objective evaluations")
    ax.set_ylabel("best value")
    ax.set_title(
        f"estimate n={record.n} k={record.k} lambda={record.lam:g} "
        f"[{record.variant}]"
    )
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_constants_figure(tc, path) -> None:
    """Per-k estimate table behind c(n, delta) and c1(n, delta)."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 4))
    markers = {"pinch": "o", "weyl": "s"}
    for variant, entries in tc.per_k.items():
        ks = sorted(entries)
        eps = [entries[k][0] for k in ks]
        err = [3 * entries[k][1] for k in ks]
        ax.errorbar(ks, eps, yerr=err, marker=markers.get(variant, "x"),
                    capsize=3, label=variant)
    ax.set_xlabel("codimension k")
    ax.set_ylabel("estimated constant (upper bound)")
    ax.set_title(f"n={tc.n}, delta={tc.delta:g}")
    if any(v[0] > 0 for e in tc.per_k.values() for v in e.values()):
        ax.set_yscale("log")
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_report_figure(reports, path) -> None:
    """Grouped LHS terms against the RHS for a batch of inequality reports."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(reports)), 4))
    xs = range(len(reports))
    curv = [r.curvature_norm_integral for r in reports]
    pinch = [r.pinch_integral for r in reports]
    rhs = [r.rhs_total for r in reports]
    ax.bar(xs, curv, width=0.4, label="curvature-norm integral")
    ax.bar(xs, pinch, width=0.4, bottom=curv, label="pinch integral")
    ax.plot(xs, rhs, "k_", markersize=22, label="constant x Betti sum")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(
        [f"{r.member}\n{r.theorem}, d={r.delta:g}" for r in reports], fontsize=8
    )
    ax.set_ylabel("integral value")
    ax.grid(True, axis="y", alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_total_curvature_figure(tc, betti, member_name, path) -> None:
    """Index-wise curvature averages against the Betti numbers."""
    plt = _plt()
    n = len(tc.per_index) - 1
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = list(range(n + 1))
    width = 0.4
    ax.bar([x - width / 2 for x in xs], tc.per_index, width=width,
           yerr=[3 * e for e in tc.per_index_stderr], capsize=2,
           label="index-i curvature average")
    ax.bar([x + width / 2 for x in xs], betti, width=width, label="Betti number")
    ax.set_xlabel("index i")
    ax.set_xticks(xs)
    total_err = 3 * tc.total_stderr
    ax.set_title(
        f"{member_name}: total = {tc.total:.4f} +- {total_err:.4f}, "
        f"sum Betti = {sum(betti)}"
    )
    ax.grid(True, axis="y", alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def nice_limit(values) -> float:
    finite = [v for v in values if math.isfinite(v)]
    return 1.1 * max(finite) if finite else 1.0
