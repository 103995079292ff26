"""Figures rendered next to the delimited tables (opt-in via ``--figure``)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "savefig.dpi": 150,
    # fixed metadata keeps repeated renders byte-stable
    "svg.hashsalt": "freerider",
}


def _save(fig, path):
    metadata = {"Software": None} if str(path).endswith(".png") else None
    fig.savefig(path, bbox_inches="tight", metadata=metadata)
    plt.close(fig)


def plot_sweep(spec, rows, path):
    """Free-riding probability and total utility, NE vs optimum, over the swept parameter."""
    ok = [r for r in rows if r["status"] == "ok"]
    x = [r["value"] for r in ok]
    xlabel = "participation cost c" if spec.parameter == "cost" else "number of clients N"
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 3.8))
        ax1.plot(x, [r["ne_free_prob"] for r in ok], "o-", ms=3, label="Nash equilibrium")
        ax1.plot(x, [r["opt_free_prob"] for r in ok], "s--", ms=3, label="global optimum")
        ax1.set_xlabel(xlabel)
        ax1.set_ylabel("free-riding probability")
        ax1.set_ylim(-0.05, 1.05)
        ax1.legend()
        key = "total_utility" if spec.parameter == "cost" else "utility_per_client"
        ax2.plot(x, [r[f"ne_{key}"] for r in ok], "o-", ms=3, label="Nash equilibrium")
        ax2.plot(x, [r[f"opt_{key}"] for r in ok], "s--", ms=3, label="global optimum")
        ax2.set_xlabel(xlabel)
        ax2.set_ylabel(key.replace("_", " "))
        ax2.legend()
        fig.tight_layout()
        _save(fig, path)


def plot_trajectory(result, path, reference=None):
    """Empirical free-riding frequencies per round; dashed lines at ``reference``."""
    rounds = range(1, result.rounds + 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i in range(result.trajectory.shape[1]):
            (line,) = ax.plot(rounds, result.trajectory[:, i], label=f"client {i}")
            if reference is not None:
                ax.axhline(reference[i], ls="--", lw=0.9, color=line.get_color())
        ax.set_xscale("log")
        ax.set_xlabel("round")
        ax.set_ylabel("empirical free-riding probability")
        ax.set_ylim(-0.05, 1.05)
        ax.legend()
        _save(fig, path)


def plot_accuracy(table, path):
    keys = sorted(table.entries)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.errorbar(keys, [table.entries[k] for k in keys], yerr=[table.std.get(k, 0.0) for k in keys], fmt="o-", capsize=3)
        ax.set_xlabel("participants" if table.mode == "by_count" else "participant bitmask")
        ax.set_ylabel("global model accuracy")
        _save(fig, path)
