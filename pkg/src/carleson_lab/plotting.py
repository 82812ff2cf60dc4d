"""Deterministic SVG rendering of DecayTables."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
from matplotlib.backends.backend_svg import FigureCanvasSVG  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .tables import DecayTable  # noqa: E402

STYLES = ("loglog", "loglinear")

_RC = {
    "svg.hashsalt": "carleson_lab",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def default_style(table: DecayTable) -> str:
    return "loglinear" if table.model == "exponential" else "loglog"


def emit_plot(table: DecayTable, style: str | None = None, title: str = "") -> str:
    """Render the normalized column against the parameter, with the fitted curve if any.

    ``loglog`` uses log axes on both sides, ``loglinear`` only on y.  The
    same table always yields the same bytes.
    """
    if len(table) == 0:
        raise ValueError("cannot plot an empty table")
    style = style or default_style(table)
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(5.0, 3.5))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        xs = table.column("param")
        ys = table.column("normalized")
        flagged = table.column("flagged")
        good = [(x, y) for x, y, f in zip(xs, ys, flagged) if not f and y > 0]
        bad = [(x, y) for x, y, f in zip(xs, ys, flagged) if f and y > 0]
        if good:
            ax.plot(*zip(*good), "o", color="C0", label=table.y_label)
        if bad:
            ax.plot(*zip(*bad), "x", color="C3", label="flagged")
        if table.fit is not None:
            lo, hi = min(xs), max(xs)
            grid = [lo + (hi - lo) * i / 64 for i in range(65)] if hi > lo else [lo]
            ax.plot(grid, list(table.fit.predict(grid)), "-", color="C1",
                    label=f"fit: rate {table.fit.rate:.3g}, R^2 {table.fit.r_squared:.3f}")
        if any(y > 0 for y in ys):
            ax.set_yscale("log")
        if style == "loglog" and min(xs) > 0:
            ax.set_xscale("log", base=2)
        ax.set_xlabel(table.x_label)
        ax.set_ylabel(table.y_label)
        if title:
            ax.set_title(title)
        ax.legend(loc="best", frameon=False)
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()
