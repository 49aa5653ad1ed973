"""Figures and tables built from a results.csv file."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .core import ALL_VARIANTS, CetError, ModeVariant, Scenario, communication_load_rank
from .experiment import CSV_HEADER

__all__ = ["SchemaMismatch", "read_results", "accuracy_curves", "complexity_rows", "write_plots"]

COMPLEXITY_HEADER = ("variant", "flops_g", "memory_mb", "inference_ms")

# lightest communication first, matching the reference complexity table
TABLE_ORDER = tuple(sorted(ALL_VARIANTS, key=lambda v: (communication_load_rank(v), v.index)))


class SchemaMismatch(CetError):
    pass


def read_results(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != CSV_HEADER:
            raise SchemaMismatch(f"{path}: header does not match the results schema")
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(header):
                raise SchemaMismatch(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            rows.append(dict(zip(header, rec)))
    return rows


def accuracy_curves(rows) -> dict[Scenario, dict[ModeVariant, tuple[np.ndarray, np.ndarray]]]:
    """Mean accuracy per (scenario, variant) as (snr, acc) arrays sorted by SNR."""
    acc = defaultdict(list)
    for r in rows:
        try:
            key = (Scenario.from_text(r["scenario"]), ModeVariant.from_text(r["variant"]), float(r["snr_db"]))
            acc[key].append(float(r["accuracy"]))
        except (CetError, ValueError) as exc:
            raise SchemaMismatch(f"bad results row: {exc}") from None
    out: dict = defaultdict(dict)
    for (s, v, snr) in sorted(acc, key=lambda k: (k[0].value, k[1].index, k[2])):
        xs, ys = out[s].get(v, ([], []))
        xs.append(snr)
        ys.append(float(np.mean(acc[(s, v, snr)])))
        out[s][v] = (xs, ys)
    return {s: {v: (np.array(x), np.array(y)) for v, (x, y) in d.items()} for s, d in out.items()}


def complexity_rows(rows) -> list[tuple[str, str, str, str]]:
    by_variant = defaultdict(list)
    for r in rows:
        by_variant[r["variant"]].append((float(r["flops_g"]), float(r["memory_mb"]), float(r["inference_ms"])))
    out = []
    for v in TABLE_ORDER:
        vals = by_variant.get(v.to_text())
        if not vals:
            continue
        f, m, t = np.mean(np.array(vals), axis=0)
        out.append((v.to_text(), f"{f:.2e}", f"{m:.2e}", f"{t:.2e}"))
    return out


def write_plots(rows, out_dir: str | Path) -> list[Path]:
    """Write one accuracy-vs-SNR SVG per scenario plus complexity_table.csv."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    curves = accuracy_curves(rows)
    with matplotlib.rc_context({"svg.hashsalt": "cetsim", "svg.fonttype": "path"}):
        for scenario in sorted(curves, key=lambda s: s.value):
            fig, ax = plt.subplots(figsize=(6.4, 4.2))
            for v, (x, y) in sorted(curves[scenario].items(), key=lambda kv: kv[0].index):
                (line,) = ax.plot(x, y, marker="o", label=v.to_text())
                line.set_gid(f"series-{v.to_text()}")
            ax.set_xlabel("SNR (dB)")
            ax.set_ylabel("Top-1 beam accuracy")
            ax.set_title(f"{scenario.label} (scenario {scenario.value})")
            ax.set_ylim(0.0, 1.0)
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize="small", loc="lower right")
            path = out_dir / f"accuracy_vs_snr_{scenario.label.lower()}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    path = out_dir / "complexity_table.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPLEXITY_HEADER)
        w.writerows(complexity_rows(rows))
    written.append(path)
    return written
