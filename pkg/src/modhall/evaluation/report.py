"""Rendered experiment reports.

Reads the artifact tree produced by the pipeline (one directory per run,
keyed by config hash) and renders markdown comparison tables plus the
noise-sweep figure: accuracy and mean fake-class probability against the
noise grid, with the detected switch point marked. Runs that differ only
in seed are merged into per-seed columns with a mean column.
"""

from datetime import datetime, timezone
import glob
import json
import os

from ..errors import DependencyError

EVAL_DIRNAME = "eval"
MAIN_EVAL = "main.json"
SWEEP_EVAL = "sweep.json"
ABLATE_PREFIX = "ablate_"
REPORT_DIRNAME = "report"


def _read_json(path):
    with open(path) as f:
        return json.load(f)


class RunArtifacts:
    """One run directory's evaluation outputs."""

    def __init__(self, run_dir):
        self.run_dir = run_dir
        edir = os.path.join(run_dir, EVAL_DIRNAME)
        self.main = None
        self.sweep = None
        self.ablations = []
        mp = os.path.join(edir, MAIN_EVAL)
        if os.path.exists(mp):
            self.main = _read_json(mp)
        sp = os.path.join(edir, SWEEP_EVAL)
        if os.path.exists(sp):
            self.sweep = _read_json(sp)
        for path in sorted(glob.glob(os.path.join(edir, ABLATE_PREFIX + "*.json"))):
            self.ablations.append(_read_json(path))

    @property
    def empty(self):
        return self.main is None and self.sweep is None and not self.ablations

    def _meta(self, key, default=None):
        for doc in (self.main, self.sweep, *self.ablations):
            if doc is not None and key in doc:
                return doc[key]
        return default

    @property
    def seed(self):
        return self._meta("seed", 0)

    @property
    def config_hash(self):
        return self._meta("config_hash", "?" * 12)

    @property
    def group_key(self):
        # runs differing only in seed share this key
        return self._meta("group_hash", self.config_hash)


def collect_runs(root):
    """Run artifact sets under root (itself a run dir, or a dir of runs)."""
    if os.path.isdir(os.path.join(root, EVAL_DIRNAME)):
        candidates = [root]
    else:
        candidates = sorted(
            p for p in glob.glob(os.path.join(root, "*"))
            if os.path.isdir(os.path.join(p, EVAL_DIRNAME))
        )
    runs = [RunArtifacts(p) for p in candidates]
    return [r for r in runs if not r.empty]


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _table(headers, rows):
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    return "\n".join(lines)


def _main_table(runs):
    """Per-seed accuracy columns plus mean, one row per model."""
    runs = sorted(runs, key=lambda r: r.seed)
    order, families = [], {}
    for r in runs:
        for row in r.main.get("rows", []):
            if row["model"] not in order:
                order.append(row["model"])
                families[row["model"]] = row.get("family", "")
    headers = ["model", "family"] + [f"seed {r.seed}" for r in runs]
    if len(runs) > 1:
        headers.append("mean")
    headers.append("config")
    out = []
    for model in order:
        per_seed = []
        for r in runs:
            acc = next((row["acc"] for row in r.main.get("rows", [])
                        if row["model"] == model), None)
            per_seed.append(acc)
        row = [model, families[model]] + per_seed
        if len(runs) > 1:
            present = [a for a in per_seed if a is not None]
            row.append(sum(present) / len(present) if present else None)
        row.append(",".join(r.config_hash[:12] for r in runs))
        out.append(row)
    return _table(headers, out)


def _ablation_table(doc):
    headers = ["arm", "teacher acc", "hallucination acc", "real/fake acc",
               "p_fake", "config"]
    rows = [
        [r["arm"], r.get("teacher_acc"), r.get("hall_acc"),
         r.get("realfake_acc"), r.get("p_fake"),
         r.get("config_hash", "")[:12]]
        for r in doc.get("rows", [])
    ]
    return _table(headers, rows)


def _sweep_table(doc):
    headers = ["variance", "two-stream acc", "hallucinated fused acc",
               "p_fake", "config"]
    short = doc.get("config_hash", "")[:12]
    rows = [
        [r["variance"], r["two_stream_acc"], r["hall_fused_acc"], r["p_fake"], short]
        for r in doc.get("rows", [])
    ]
    if doc.get("void_row"):
        v = doc["void_row"]
        rows.append(["void", v["two_stream_acc"], v["hall_fused_acc"], v["p_fake"], short])
    return _table(headers, rows)


def render_sweep_plot(doc, path):
    """Accuracy and fake-probability curves on a shared noise axis."""
    from matplotlib.figure import Figure

    rows = list(doc["rows"])
    labels = [f"{r['variance']:g}" for r in rows]
    if doc.get("void_row"):
        rows.append(doc["void_row"])
        labels.append("void")
    xs = list(range(len(rows)))

    fig = Figure(figsize=(7.0, 4.2))
    ax = fig.add_subplot(111)
    ax.plot(xs, [r["two_stream_acc"] for r in rows], "o-", color="tab:blue",
            label="two-stream (A + noisy B)")
    ax.plot(xs, [r["hall_fused_acc"] for r in rows], "s--", color="tab:green",
            label="A + hallucination")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.set_xlabel("speckle noise variance")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.0)
    ax2 = ax.twinx()
    ax2.plot(xs, [r["p_fake"] for r in rows], "^:", color="tab:red",
             label="mean fake-class probability")
    ax2.set_ylabel("fake-class probability")
    ax2.set_ylim(0.0, 1.0)
    sp = doc.get("switch_point")
    if sp is not None:
        try:
            ax.axvline(x=labels.index(f"{sp:g}"), color="gray", linestyle="--",
                       linewidth=1, label="switch point")
        except ValueError:
            pass
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, loc="center left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def emit_report(root, out_dir=None, plot=True):
    """Render tables (and sweep plots) for every run found under root.

    Returns {"report": path, "plots": [paths]}. Raises DependencyError
    when no evaluation artifacts exist yet.
    """
    runs = collect_runs(root)
    if not runs:
        raise DependencyError(
            f"no evaluation artifacts under {root}: run the eval stage first"
        )
    if out_dir is None:
        out_dir = os.path.join(
            runs[0].run_dir if len(runs) == 1 else root, REPORT_DIRNAME
        )
    os.makedirs(out_dir, exist_ok=True)

    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%d %H:%M UTC")
    lines = ["# Experiment report", "", f"Generated {stamp}.", ""]
    plots = []

    groups = {}
    for r in runs:
        if r.main is not None:
            groups.setdefault(r.group_key, []).append(r)
    for key in sorted(groups):
        lines += ["## Main comparison", ""]
        if len(groups) > 1:
            lines += [f"Config family `{key[:12]}`:", ""]
        lines += [_main_table(groups[key]), ""]

    for r in runs:
        for doc in r.ablations:
            lines += [f"## Ablation: {doc.get('suite', '?')} (seed {r.seed})",
                      "", _ablation_table(doc), ""]

    for r in runs:
        if r.sweep is None:
            continue
        lines += [f"## Noise sweep (seed {r.seed})", "", _sweep_table(r.sweep), ""]
        sp = r.sweep.get("switch_point")
        lines += [f"Detected switch point: "
                  f"{'none' if sp is None else f'variance {sp:g}'}.", ""]
        if plot:
            png = os.path.join(out_dir, f"sweep_seed{r.seed}.png")
            render_sweep_plot(r.sweep, png)
            plots.append(png)
            lines += [f"![sweep](./{os.path.basename(png)})", ""]

    lines += ["## Provenance", ""]
    prov = [[os.path.basename(r.run_dir.rstrip(os.sep)), r.seed, r.config_hash]
            for r in runs]
    lines += [_table(["run", "seed", "config hash"], prov), ""]

    path = os.path.join(out_dir, "report.md")
    with open(path, "w") as f:
        f.write("\n".join(lines))
    return {"report": path, "plots": plots}
