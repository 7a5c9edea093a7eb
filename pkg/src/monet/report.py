"""Collect run traces and build results tables with pairwise rank tests."""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import adjust, auc, mann_whitney_u
from .benchmarks import BENCHMARKS
from .optimizers import read_trace_csv


@dataclass
class RunRecord:
    label: str
    benchmark: str
    seed: int
    checkpoints: np.ndarray
    normalizer: float

    @property
    def final(self) -> float:
        return float(self.checkpoints[-1, 1])

    @property
    def auc(self) -> float:
        return auc(self.checkpoints, self.normalizer)


def _record_from_manifest(path: Path) -> RunRecord | None:
    meta = json.loads(path.read_text())
    if meta.get("kind") != "run" or meta.get("status") != "ok":
        return None
    trace = path.with_name(meta["trace_file"])
    bench = meta["benchmark"]
    normalizer = BENCHMARKS[bench].normalizer if bench in BENCHMARKS else 1.0
    return RunRecord(meta.get("label", meta["algorithm"]), bench, int(meta["seed"]),
                     read_trace_csv(trace), normalizer)


def collect_runs(paths) -> list[RunRecord]:
    """Find run manifests (``seed_*.json``) under the given files or directories."""
    records = []
    for p in map(Path, paths):
        candidates = [p] if p.is_file() else sorted(p.rglob("seed_*.json"))
        for c in candidates:
            if c.suffix == ".csv":
                c = c.with_suffix(".json")
            rec = _record_from_manifest(c)
            if rec is not None:
                records.append(rec)
    return records


def _group(records):
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for r in records:
        groups.setdefault((r.benchmark, r.label), []).append(r)
    for runs in groups.values():
        runs.sort(key=lambda r: r.seed)
    return dict(sorted(groups.items()))


def summarize(records) -> list[dict]:
    """Mean and sample standard deviation of final fitness and AUC per (benchmark, label)."""
    rows = []
    for (bench, label), runs in _group(records).items():
        final = np.array([r.final for r in runs])
        areas = np.array([r.auc for r in runs])
        ddof = 1 if len(runs) > 1 else 0
        rows.append({
            "benchmark": bench,
            "algorithm": label,
            "seeds": len(runs),
            "final_mean": float(final.mean()),
            "final_std": float(final.std(ddof=ddof)),
            "auc_mean": float(areas.mean()),
            "auc_std": float(areas.std(ddof=ddof)),
        })
    return rows


def compare(records) -> list[dict]:
    """Two-sided pairwise tests on final fitness and AUC within each benchmark.

    All comparisons in the table form one family for the Holm correction.
    """
    groups = _group(records)
    by_bench: dict[str, dict[str, list[RunRecord]]] = {}
    for (bench, label), runs in groups.items():
        by_bench.setdefault(bench, {})[label] = runs
    rows, tests = [], []
    for bench, labels in by_bench.items():
        for a, b in itertools.combinations(sorted(labels), 2):
            for metric in ("final", "auc"):
                xa = [getattr(r, metric) for r in labels[a]]
                xb = [getattr(r, metric) for r in labels[b]]
                tests.append(mann_whitney_u(xa, xb))
                rows.append({"benchmark": bench, "metric": metric, "a": a, "b": b,
                             "mean_a": float(np.mean(xa)), "mean_b": float(np.mean(xb))})
    for row, res in zip(rows, adjust(tests)):
        row.update(u=res.u_statistic, p=res.p_value, p_holm=res.adjusted_p, method=res.method)
    return rows


def _write_csv(path: Path, rows: list[dict]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if not rows:
            fh.write("")
            return
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in row.items()})


def _fmt(mean, std, scale):
    digits = 1 if scale > 1 else 3
    return f"{mean:.{digits}f} ± {std:.{digits}f}"


def format_table(summary: list[dict], comparisons: list[dict]) -> str:
    """Plain-text table: final fitness and AUC as mean ± std, then adjusted p-values."""
    benches = sorted({r["benchmark"] for r in summary})
    labels = sorted({r["algorithm"] for r in summary})
    cell = {(r["benchmark"], r["algorithm"]): r for r in summary}
    width = 20
    lines = []
    for title, key in (("Final mean fitness", "final"), ("AUC (x1000 of normalised curve)", "auc")):
        lines.append(title)
        lines.append(" " * 16 + "".join(f"{b:>{width}}" for b in benches))
        for label in labels:
            parts = []
            for b in benches:
                r = cell.get((b, label))
                if r is None:
                    parts.append(f"{'-':>{width}}")
                    continue
                scale = BENCHMARKS[b].normalizer if (key == "final" and b in BENCHMARKS) else 1000
                parts.append(f"{_fmt(r[key + '_mean'], r[key + '_std'], scale):>{width}}")
            lines.append(f"{label:<16}" + "".join(parts))
        lines.append("")
    if comparisons:
        lines.append("Pairwise Mann-Whitney U (two-sided, Holm-adjusted)")
        for c in comparisons:
            lines.append(f"  {c['benchmark']:<9} {c['metric']:<6} {c['a']} vs {c['b']}: "
                         f"U={c['u']:.1f} p={c['p']:.4g} p_holm={c['p_holm']:.4g}")
    return "\n".join(lines) + "\n"


def write_report(records, out_dir, figures: bool = True) -> dict:
    """Write ``results.csv``, ``comparisons.csv``, ``results.txt`` and figures to ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarize(records)
    comparisons = compare(records)
    _write_csv(out_dir / "results.csv", summary)
    _write_csv(out_dir / "comparisons.csv", comparisons)
    text = format_table(summary, comparisons)
    (out_dir / "results.txt").write_text(text)
    written = {"results": out_dir / "results.csv", "comparisons": out_dir / "comparisons.csv",
               "table": out_dir / "results.txt", "figures": []}
    if figures and records:
        from .plotting import plot_final_boxes, plot_learning_curves

        for bench in sorted({r.benchmark for r in records}):
            runs = [r for r in records if r.benchmark == bench]
            written["figures"].append(plot_learning_curves(runs, out_dir / f"curves_{bench}.png"))
            written["figures"].append(plot_final_boxes(runs, out_dir / f"boxes_{bench}.png"))
    written["text"] = text
    return written
