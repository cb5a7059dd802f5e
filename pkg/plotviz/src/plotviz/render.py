"""Render convergence figures from benchmark CSV traces.

Input files follow the bench CSV schema (one row per iteration, including
adaptive retry rows, with cumulative work counters).  Each file becomes one
curve labeled by its (method, m); the y axis is the dual gradient norm on a
log scale, the x axis is selectable among work_units, wall_ns and k.
"""

from __future__ import annotations

import csv
import glob
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

REQUIRED_COLUMNS = ("k", "method", "m", "grad_dual_norm", "work_units", "wall_ns")
X_AXES = ("work_units", "wall_ns", "k")
X_LABELS = {
    "work_units": "gradient-equivalent work units",
    "wall_ns": "wall time (ns)",
    "k": "iteration",
}


class SchemaMismatch(ValueError):
    """An input CSV is missing a required column."""


class EmptyInput(ValueError):
    """No input files matched, or a matched file has no plottable rows."""


@dataclass
class PlotSpec:
    inputs: str | list[str]
    x_axes: list[str] = field(default_factory=lambda: ["work_units"])
    out: str | Path = "fig.png"

    def validate(self) -> None:
        for ax in self.x_axes:
            if ax not in X_AXES:
                raise ValueError(f"unknown x axis {ax!r}; expected one of {X_AXES}")
        if not self.x_axes:
            raise ValueError("at least one x axis required")


@dataclass
class Curve:
    path: Path
    method: str
    m: int
    series: dict  # column -> list of floats (rows with grad_dual_norm > 0)

    @property
    def label(self) -> str:
        return f"{self.method} m={self.m}"


def expand_inputs(inputs) -> list[Path]:
    patterns = [inputs] if isinstance(inputs, (str, Path)) else list(inputs)
    paths: list[Path] = []
    for pat in patterns:
        matched = sorted(glob.glob(str(pat)))
        paths.extend(Path(p) for p in matched)
    if not paths:
        raise EmptyInput(f"no input files match {patterns!r}")
    return paths


def load_curve(path: Path) -> Curve:
    """Parse one trace CSV; drops nonpositive gradient rows (log axis) with
    a warning.  Never modifies the file."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    dropped = 0
    series: dict = {c: [] for c in ("k", "grad_dual_norm", "work_units", "wall_ns")}
    for row in rows:
        y = float(row["grad_dual_norm"])
        if y <= 0.0:
            dropped += 1
            continue
        series["grad_dual_norm"].append(y)
        series["k"].append(int(row["k"]))
        series["work_units"].append(int(row["work_units"]))
        series["wall_ns"].append(int(row["wall_ns"]))
    if dropped:
        warnings.warn(f"{path}: dropped {dropped} rows with nonpositive "
                      "gradient norm (log axis)", stacklevel=2)
    if not series["grad_dual_norm"]:
        raise EmptyInput(f"{path}: no rows with positive gradient norm")
    return Curve(path=path, method=rows[0]["method"], m=int(rows[0]["m"]),
                 series=series)


def load_curves(inputs) -> list[Curve]:
    """All curves, sorted for a stable legend (by m, then method name)."""
    curves = [load_curve(p) for p in expand_inputs(inputs)]
    curves.sort(key=lambda c: (c.m, c.method))
    return curves


def _decade_limits(curves):
    ymin = min(min(c.series["grad_dual_norm"]) for c in curves)
    ymax = max(max(c.series["grad_dual_norm"]) for c in curves)
    return 10.0 ** math.floor(math.log10(ymin)), 10.0 ** math.ceil(math.log10(ymax))


def output_paths(out, x_axes) -> dict[str, Path]:
    """One output file per x axis; a single axis keeps the exact path."""
    out = Path(out)
    if len(x_axes) == 1:
        return {x_axes[0]: out}
    return {ax: out.with_name(f"{out.stem}_{ax}{out.suffix}") for ax in x_axes}


def render(spec: PlotSpec) -> list[Path]:
    """Write one figure per requested x axis; returns the file paths."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    spec.validate()
    curves = load_curves(spec.inputs)
    bottom, top = _decade_limits(curves)
    paths = output_paths(spec.out, spec.x_axes)
    written = []
    for ax_name in spec.x_axes:
        fig, ax = plt.subplots(figsize=(8.0, 5.0))
        for curve in curves:
            ax.plot(curve.series[ax_name], curve.series["grad_dual_norm"],
                    label=curve.label, linewidth=1.5)
        ax.set_yscale("log")
        ax.set_ylim(bottom, top)
        ax.set_xlabel(X_LABELS[ax_name])
        ax.set_ylabel("gradient dual norm")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        target = paths[ax_name]
        target.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    return written
