import pathlib
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from shadowpolicy.utils import get_logger  # noqa: E402

from .reports import read_report  # noqa: E402

logger = get_logger(__name__)

# x and y columns of the plottable report kinds
PLOT_COLUMNS = {
    ("episode", "return"): "Episode return",
    ("step", "loss"): "Imitation loss",
}


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average; the first points average what is available."""
    if window < 1:
        raise ValueError("window must be at least 1")

    values = np.asarray(values, dtype=np.float64)
    if window == 1 or len(values) == 0:
        return values

    cumulative = np.cumsum(np.insert(values, 0, 0.0))
    counts = np.minimum(np.arange(1, len(values) + 1), window)
    starts = np.arange(1, len(values) + 1) - counts
    return (cumulative[1:] - cumulative[starts]) / counts


def plot_report(
    csv_path: Union[str, pathlib.Path],
    output_path: Union[str, pathlib.Path],
    window: int = 1,
    title: Optional[str] = None,
) -> pathlib.Path:
    """Render a training-curve or imitation-log CSV to an image file."""
    rows = read_report(csv_path)
    columns = tuple(rows[0]) if rows else ()

    for (x_column, y_column), label in PLOT_COLUMNS.items():
        if x_column in columns and y_column in columns:
            break
    else:
        raise ValueError("{} has no plottable columns".format(csv_path))

    x = np.array([float(row[x_column]) for row in rows])
    y = np.array([float(row[y_column]) for row in rows])

    fig, ax = plt.subplots(figsize=(8, 4.5))
    if window > 1:
        ax.plot(x, y, color="tab:blue", alpha=0.3, linewidth=0.8)
    ax.plot(x, moving_average(y, window), color="tab:blue", linewidth=1.5)
    ax.set_xlabel(x_column)
    ax.set_ylabel(label)
    ax.set_title(title or pathlib.Path(csv_path).stem)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()

    output_path = pathlib.Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(str(output_path), dpi=100)
    plt.close(fig)
    logger.info("Plot saved to {}".format(output_path))
    return output_path
