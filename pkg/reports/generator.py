"""Report generator: writes result tables as CSV and renders figure panels as SVG."""

import csv
import logging
import math
import os
from collections import OrderedDict

import matplotlib
matplotlib.use('Agg')  # Non-interactive backend
import matplotlib.pyplot as plt

import config

logger = logging.getLogger(__name__)

SERIES_COLORS = ['#0d6efd', '#dc3545', '#198754', '#fd7e14', '#6f42c1', '#0dcaf0', '#6c757d']


def format_value(value, digits=None):
    """Fixed formatting: integers as-is, floats to the configured significant digits."""
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        digits = digits or config.current().CSV_DIGITS
        return f"{value:.{digits}g}"
    return str(value)


def write_csv(path, table, digest, seed):
    """Write a ResultTable: a '# config_sha256=... seed=...' comment, the header, then rows.

    Returns:
        The path written.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"# config_sha256={digest} seed={'' if seed is None else seed}\n")
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_value(row[column]) for column in table.columns])
    logger.info("Wrote %d rows to %s", len(table.rows), path)
    return path


def read_csv(path):
    """Read a CSV written by write_csv.

    Returns:
        (comment line, list of row dicts with string values)
    """
    with open(path, 'r', encoding='utf-8', newline='') as f:
        comment = f.readline().rstrip('\n')
        return comment, list(csv.DictReader(f))


def _series(rows, x, y, series):
    """Group (x, y) points by series value, first occurrence of each (series, x) wins."""
    grouped = OrderedDict()
    for row in rows:
        key = row.get(series) if series else None
        xs, ys = grouped.setdefault(key, ([], []))
        value_x, value_y = row.get(x), row.get(y)
        if value_x is None or value_y is None or value_x in xs:
            continue
        xs.append(value_x)
        ys.append(value_y)
    return grouped


def render_svg(path, table, plot):
    """Render a line chart of a ResultTable.

    Args:
        path: output .svg path
        table: ResultTable
        plot: dict with 'x', 'y' (column or list of columns), optional 'series',
            'xlabel', 'ylabel', 'title'
    """
    matplotlib.rcParams['svg.hashsalt'] = 'tanglebounds'
    columns = plot['y'] if isinstance(plot['y'], list) else [plot['y']]
    fig, ax = plt.subplots(figsize=(6, 4))
    color = 0
    for column in columns:
        for key, (xs, ys) in _series(table.rows, plot['x'], column, plot.get('series')).items():
            points = sorted((a, b) for a, b in zip(xs, ys)
                            if isinstance(b, (int, float)) and not math.isnan(b))
            if not points:
                continue
            label = column if key is None else f"{plot.get('series')}={format_value(key, 4)}"
            if len(columns) > 1 and key is not None:
                label = f"{column}, {label}"
            ax.plot([p[0] for p in points], [p[1] for p in points], marker='o', markersize=2.5,
                    linewidth=1.5, color=SERIES_COLORS[color % len(SERIES_COLORS)], label=label)
            color += 1
    ax.set_xlabel(plot.get('xlabel', plot['x']))
    ax.set_ylabel(plot.get('ylabel', ', '.join(columns)))
    if plot.get('title'):
        ax.set_title(plot['title'])
    ax.spines['top'].set_visible(False)
    ax.spines['right'].set_visible(False)
    if color > 1:
        ax.legend(frameon=False, fontsize=8)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format='svg', bbox_inches='tight', metadata={'Date': None})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path
