"""Static SVG figures of run outputs.

All writers use the Agg backend and strip the SVG date and random ids so
that identical data give identical files.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "svg.hashsalt": "csf3d",
    "svg.fonttype": "none",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (6.4, 4.0),
}


def _save(fig, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def energy_plot(rows, path):
    """``E``, ``Pi`` and ``D`` against ``tau`` on a log axis."""
    tau = np.array([r.tau for r in rows])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for key, label in (("E", "E"), ("Pi", r"$\Pi$"), ("D", "D")):
            vals = np.array([getattr(r, key) for r in rows])
            ax.semilogy(tau, np.maximum(vals, 1e-300), label=label)
        ax.set_xlabel(r"$\tau$")
        ax.legend()
        return _save(fig, path)


def residual_plot(rows, path):
    """``|dE/dtau + Pi + D| / E`` against ``tau``."""
    tau = np.array([r.tau for r in rows])
    rel = np.array([abs(r.residual) / r.E for r in rows])
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(tau, np.maximum(rel, 1e-300), color="k", lw=0.8)
        ax.set_xlabel(r"$\tau$")
        ax.set_ylabel("relative residual")
        return _save(fig, path)


def trajectory_plot(rows, path):
    """Length and maximum curvature against the run clock."""
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    with plt.rc_context(_STYLE):
        fig, (a1, a2) = plt.subplots(2, 1, sharex=True)
        a1.plot(arr[:, 0], arr[:, 1])
        a1.set_ylabel("length")
        a2.plot(arr[:, 0], arr[:, 2], color="C3")
        a2.set_ylabel("max curvature")
        a2.set_xlabel("clock")
        return _save(fig, path)


def convergence_plot(dtaus, residuals, path):
    """Max residual against ``dtau`` on log-log axes with a slope-2 guide."""
    d = np.asarray(dtaus, float)
    r = np.maximum(np.asarray(residuals, float), 1e-300)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.loglog(d, r, "o-", label="max |residual|")
        ax.loglog(d, r[0] * (d / d[0]) ** 2, "k--", lw=0.8, label="slope 2")
        ax.set_xlabel(r"$\Delta\tau$")
        ax.legend()
        return _save(fig, path)
