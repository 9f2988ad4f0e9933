"""Figures for the report command (written to files, never shown)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None, "CreationDate": None})
    plt.close(fig)
    return path


def beta1_convergence(estimate, path, target=None):
    r, ub = zip(*estimate.per_radius)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(r, ub, "o-", label="upper bound")
    if target is not None:
        ax.axhline(target, color="k", ls="--", lw=0.8, label="reference")
    ax.set_xlabel("radius")
    ax.set_ylabel(r"$\beta_1$ bound")
    ax.set_title(estimate.family, fontsize=9)
    ax.legend(fontsize=8)
    return _save(fig, path)


def onset_histograms(pc, pu, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    bins = np.linspace(0, 1, 65)
    for est, lab in ((pc, "spanning onset"), (pu, "uniqueness onset")):
        if est is not None and est.onsets is not None:
            ax.hist(est.onsets, bins=bins, alpha=0.6, label=f"{lab} (median {est.value:.3f})")
    ax.set_xlabel("p")
    ax.set_ylabel("replicates")
    ax.legend(fontsize=8)
    return _save(fig, path)


def degree_curves(curves, path, degree=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for c in curves:
        ax.errorbar(c.p_grid, c.mean_degree, yerr=3 * c.stderr, marker=".", capsize=2,
                    label=f"q={c.q:g} {c.boundary}")
    if degree is not None:
        ax.plot([0, 1], [0, degree], "k:", lw=0.8, label="deg * p")
    ax.set_xlabel("p")
    ax.set_ylabel("expected open degree")
    ax.legend(fontsize=8)
    return _save(fig, path)
