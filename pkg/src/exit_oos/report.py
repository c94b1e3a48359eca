"""Figures from training metrics logs."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_metrics(path) -> list:
    records = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{n}: not a JSON record") from exc
    return records


def _series(runs: dict, field: str):
    for label, recs in runs.items():
        pts = [(r["iter"], r[field]) for r in recs if field in r]
        if pts:
            yield label, [p[0] for p in pts], [p[1] for p in pts]


def plot_exploitability(runs: dict, out, title: str = "Exploitability during training") -> Path | None:
    """Exploitability against iteration on log-log axes, one line per run."""
    series = list(_series(runs, "exploitability"))
    if not series:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in series:
        ax.plot(x, y, marker="o", markersize=3, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("Training iterations")
    ax.set_ylabel("Exploitability (chips)")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)


def plot_loss(runs: dict, out, window: int = 20) -> Path | None:
    series = list(_series(runs, "mean_loss"))
    if not series:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, x, y in series:
        ax.plot(x, y, alpha=0.35, label=f"{label}")
        if len(y) >= window:
            smooth = [sum(y[i - window + 1 : i + 1]) / window for i in range(window - 1, len(y))]
            ax.plot(x[window - 1 :], smooth, label=f"{label} ({window}-iter mean)")
    ax.set_xlabel("Training iterations")
    ax.set_ylabel("KL loss")
    ax.set_title("Training loss")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return Path(out)


def render(metrics_paths, out_dir, labels=None) -> list:
    """Write the exploitability and loss figures for one or more runs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_paths = [Path(p) for p in metrics_paths]
    labels = labels or [p.parent.name or str(p) for p in metrics_paths]
    runs = {lab: read_metrics(p) for lab, p in zip(labels, metrics_paths)}
    written = [plot_exploitability(runs, out_dir / "exploitability.png"), plot_loss(runs, out_dir / "loss.png")]
    return [p for p in written if p is not None]
