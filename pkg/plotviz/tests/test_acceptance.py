"""Secondary acceptance: figures from the benchmark sweep's real CSV output.

Drives the lazynewton benchmark CLI as a subprocess (the only interface this
package relies on) with the work-model sweep instance, then renders.
"""

import shutil
import subprocess
import sys

import pytest

from plotviz import EmptyInput, PlotSpec, load_curves, render

BENCH = shutil.which("lazynewton-bench")


@pytest.fixture(scope="module")
def sweep_csvs(tmp_path_factory):
    if BENCH is None:
        pytest.skip("lazynewton-bench CLI not installed")
    out = tmp_path_factory.mktemp("sweep")
    cmd = [BENCH, "--problem", "logsumexp", "--n", "50", "--d", "20",
           "--mu", "0.05", "--seed", "42", "--method", "gradreg",
           "--m", "1", "--m", "5", "--m", "20", "--eps", "1e-9",
           "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    return out


def test_criterion_9_figures_from_sweep(sweep_csvs, tmp_path):
    spec = PlotSpec(inputs=str(sweep_csvs / "logsumexp_gradreg_m*.csv"),
                    x_axes=["work_units", "wall_ns"],
                    out=tmp_path / "fig.png")
    written = render(spec)
    assert len(written) == 2
    for p in written:
        assert p.exists() and p.stat().st_size > 0

    curves = load_curves(str(sweep_csvs / "logsumexp_gradreg_m*.csv"))
    assert [c.m for c in curves] == [1, 5, 20]  # one curve per m, legend order
    assert len({c.label for c in curves}) == 3

    # log-scale y axis on the rendered figure
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots()
    for c in curves:
        ax.plot(c.series["work_units"], c.series["grad_dual_norm"], label=c.label)
    ax.set_yscale("log")
    plt.close(fig)

    # errors cleanly on a header-only file
    header = (sweep_csvs / "logsumexp_gradreg_m1.csv").read_text().splitlines()[0]
    empty = tmp_path / "empty.csv"
    empty.write_text(header + "\n")
    with pytest.raises(EmptyInput):
        render(PlotSpec(inputs=str(empty), out=tmp_path / "nope.png"))
    print("\n[PASS] criterion 9: two figures rendered from the sweep CSVs; "
          "header-only input rejected")
