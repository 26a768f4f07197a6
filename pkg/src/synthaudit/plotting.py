"""Report figures. Rendered with the Agg backend and no timestamp metadata."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from sklearn.metrics import roc_curve  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def dcr_hist(srd: np.ndarray, rrd: np.ndarray, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    hi = float(max(np.max(srd, initial=0.0), np.max(rrd, initial=0.0)))
    bins = np.linspace(0.0, hi if hi > 0 else 1.0, 41)
    ax.hist(rrd, bins=bins, alpha=0.6, label="RRD", density=True)
    ax.hist(srd, bins=bins, alpha=0.6, label="SRD", density=True)
    ax.set_xlabel("distance to closest record")
    ax.set_ylabel("density")
    ax.legend()
    return _save(fig, path)


def dcr_ecdf(srd: np.ndarray, rrd: np.ndarray, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x in (("RRD", rrd), ("SRD", srd)):
        xs = np.sort(x)
        ax.step(xs, np.arange(1, len(xs) + 1) / len(xs), where="post", label=label)
    ax.set_xlabel("distance to closest record")
    ax.set_ylabel("cumulative share")
    ax.legend()
    return _save(fig, path)


def mia_roc(scores: Sequence[float], labels: Sequence[bool], path: Path, auc: Optional[float] = None) -> Path:
    fpr, tpr, _ = roc_curve(np.asarray(labels, dtype=bool), np.asarray(scores, dtype=float))
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(fpr, tpr, label="distance MIA" + (f" (AUC {auc:.3f})" if auc is not None else ""))
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", label="chance")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right")
    return _save(fig, path)


def attack_risks(risks: Dict[str, Dict[str, float]], path: Path) -> Path:
    """Bar chart of normalized risk with interval whiskers, one bar per (attack, baseline)."""
    labels = sorted(risks)
    vals = np.array([risks[k]["risk"] for k in labels])
    lo = vals - np.array([risks[k]["ci_low"] for k in labels])
    hi = np.array([risks[k]["ci_high"] for k in labels]) - vals
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(labels) + 2), 4))
    ax.bar(range(len(labels)), vals, yerr=[lo, hi], capsize=4)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("normalized risk")
    return _save(fig, path)
