"""Optional PNG charts for the stats command (matplotlib, headless)."""

from pathlib import Path

from src.stats.cpi import CpiComparison
from src.stats.distribution import DisabilityDistribution


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams.update({"font.family": "DejaVu Sans", "axes.unicode_minus": False})
    import matplotlib.pyplot as plt

    return plt


def plot_histogram(distribution: DisabilityDistribution, path: Path) -> Path:
    plt = _pyplot()
    histogram = distribution.histogram
    edges = histogram.bin_edges
    widths = [high - low for low, high in zip(edges, edges[1:])]

    fig, ax = plt.subplots(figsize=(7, 4), constrained_layout=True)
    ax.bar(edges[:-1], histogram.fractions, width=widths, align="edge", edgecolor="black")
    ax.set_xlabel("Disability percentage")
    ax.set_ylabel("Fraction of rulings")
    ax.set_title(f"Disability percentages (n={distribution.n})")
    ax.grid(True, axis="y", alpha=0.3)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_cpi_comparison(comparison: CpiComparison, path: Path) -> Path:
    """Monthly point value per CPI unit, indexed to the first shared month."""
    plt = _pyplot()
    labels = [f"{year}-{month:02d}" for year, month in (row.month for row in comparison.rows)]

    fig, ax = plt.subplots(figsize=(9, 4), constrained_layout=True)
    ax.plot(labels, [row.pv_indexed for row in comparison.rows], marker="o")
    ax.axhline(1.0, color="grey", linewidth=0.8, linestyle="--")
    title = f"Point value ({comparison.aggregate}) deflated by CPI"
    if comparison.correlation is not None:
        title += f", Pearson r = {comparison.correlation:.3f}"
    ax.set_title(title)
    ax.set_ylabel("Indexed value")
    ax.tick_params(axis="x", rotation=60)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
