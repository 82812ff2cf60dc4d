"""DecayTable: parameter sweeps with a fitted decay model, CSV round trip."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

CSV_COLUMNS = ("param", "raw", "normalized", "fitted_model", "residual", "flagged", "note")

# model name -> transform of the parameter used as regressor
_REGRESSORS = {
    "power": lambda x: np.log(x),
    "log_power": lambda x: np.log(np.log(x)),
    "exponential": lambda x: np.asarray(x, dtype=float) * math.log(2.0),
}


@dataclass(frozen=True)
class DecayRow:
    param: float
    raw: float
    normalized: float
    flagged: bool = False
    note: str = ""
    fitted: float = math.nan
    residual: float = math.nan


@dataclass(frozen=True)
class Fit:
    model: str
    rate: float  # decay rate: y ~ C * g(x)^{-rate}
    log_constant: float
    rms_residual: float
    r_squared: float
    used_rows: int

    def predict(self, x) -> np.ndarray:
        return np.exp(self.log_constant - self.rate * _REGRESSORS[self.model](np.asarray(x, dtype=float)))

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("model", "rate", "log_constant", "rms_residual",
                                             "r_squared", "used_rows")}


def fit_log_linear(x: Sequence[float], y: Sequence[float], model: str) -> Fit | None:
    """Least-squares fit of log y = c - rate * g(x); None with fewer than two usable points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0)
    if ok.sum() < 2:
        return None
    t = _REGRESSORS[model](x[ok])
    ly = np.log(y[ok])
    slope, icpt = np.polyfit(t, ly, 1)
    pred = icpt + slope * t
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return Fit(model, float(-slope), float(icpt), math.sqrt(ss_res / ok.sum()), r2, int(ok.sum()))


@dataclass(frozen=True)
class DecayTable:
    rows: tuple[DecayRow, ...]
    model: str = "none"
    x_label: str = "param"
    y_label: str = "normalized"
    fit: Fit | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: Iterable, model: str = "none", x_label: str = "param",
                  y_label: str = "normalized", meta: dict | None = None) -> "DecayTable":
        built = tuple(r if isinstance(r, DecayRow) else DecayRow(*r) for r in rows)
        table = cls(built, model, x_label, y_label, None, dict(meta or {}))
        return table.refit() if model != "none" else table

    def refit(self, values: Sequence[float] | None = None) -> "DecayTable":
        """Fit the model to the unflagged rows (``values`` overrides the normalized column)."""
        vals = [r.normalized for r in self.rows] if values is None else list(values)
        keep = [i for i, r in enumerate(self.rows) if not r.flagged]
        fit = fit_log_linear([self.rows[i].param for i in keep], [vals[i] for i in keep], self.model)
        rows = []
        for r, v in zip(self.rows, vals):
            if fit is None:
                rows.append(replace(r, fitted=math.nan, residual=math.nan))
                continue
            pred = float(fit.predict(r.param))
            res = math.log(v) - math.log(pred) if v > 0 else math.nan
            rows.append(replace(r, fitted=pred, residual=res))
        return replace(self, rows=tuple(rows), fit=fit)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r.param)), repr(float(r.raw)), repr(float(r.normalized)),
                        repr(float(r.fitted)), repr(float(r.residual)), int(r.flagged), r.note])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, model: str = "none", **kw) -> "DecayTable":
        rd = csv.DictReader(io.StringIO(text))
        rows = [DecayRow(float(d["param"]), float(d["raw"]), float(d["normalized"]),
                         bool(int(d["flagged"])), d["note"]) for d in rd]
        return cls.from_rows(rows, model=model, **kw)

    def to_dict(self) -> dict:
        return {"model": self.model, "x_label": self.x_label, "y_label": self.y_label,
                "fit": None if self.fit is None else self.fit.to_dict(), "meta": self.meta,
                "rows": len(self.rows)}
