"""Named, config-driven experiments with deterministic CSV / JSON / SVG reports.

A config file is TOML with an optional ``experiment`` name, an optional
``seed`` and a ``[params]`` table; any other key is an error.  Each
experiment declares its parameters in ``SCHEMAS`` together with defaults.
"""

from __future__ import annotations

import json
import logging
import math
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import arithmetic as ar
from . import expsum as es
from . import multiplier as mu
from . import operator as op
from .kernels import DyadicKernel, builtin_kernel, chi_sM
from .lattice import LatticeFunction
from .plotting import emit_plot
from .tables import DecayRow, DecayTable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

U64_MAX = 2**64 - 1


class ConfigError(ValueError):
    pass


class GuardError(ConfigError):
    pass


# --- schema -----------------------------------------------------------------------

_OPTIONAL = object()

# name -> (kind, default); kind in int, float, str, bool, ints, floats, strs
SCHEMAS: dict[str, dict[str, tuple[str, Any]]] = {
    "gauss-vanishing": {"q_max": ("int", 64), "d_values": ("ints", [1, 2]), "tol": ("float", 1e-12)},
    "gauss-modulus": {"q_max": ("int", 64), "modulus": ("int", 4), "residue": ("int", 0),
                      "tol": ("float", 1e-10)},
    "kernel-identity": {"s_values": ("ints", [1, 2, 3]), "alphas_per_class": ("int", 3), "M": ("float", 8.0),
                        "log2_grid": ("int", 22), "y_max": ("int", 64), "tol": ("float", 1e-6)},
    "factorization": {"s_values": ("ints", [1, 2, 3]), "alphas_per_class": ("int", 3), "M": ("float", 2.0),
                      "samples": ("int", 1000), "tol": ("float", 1e-10)},
    "multiplier-approx": {"j_min": ("int", 4), "j_max": ("int", 10), "q_max": ("int", 8),
                          "t_values": ("floats", [0.25, 0.5, 1.0, 2.0]), "nu_scales": ("floats", [0.0, 0.5]),
                          "kernel": ("str", "odd_power"), "tol": ("float", 1e-9), "max_ratio": ("float", 2.0)},
    "error-term-decay": {"j_min": ("int", 4), "j_max": ("int", 12), "lambdas": ("strs", ["0", "1/2", "1/3"]),
                         "M": ("float", 2.0), "kernel": ("str", "odd_power"), "tol": ("float", 1e-9),
                         "refine_tol": ("float", 0.05), "min_r2": ("float", 0.8)},
    "weyl-decay": {"xi": ("str", "golden"), "order": ("int", 2), "j_min": ("int", 5), "j_max": ("int", 12),
                   "eps": ("float", 0.1), "min_factor": ("float", 4.0)},
    "rademacher-menshov": {"trials": ("int", 10000), "r_values": ("floats", [1.0, 2.0, 3.0]),
                           "s_max": ("int", 6)},
    "carleson-exactness": {"J_trunc": ("int", 6), "eps": ("float", 1e-3), "N": ("int", 256), "d": ("int", 1),
                           "kernel": ("str", "odd_power"), "shift": ("int", 17), "lambda_offset": ("int", 5)},
    "parabola-fourier": {"N": ("int", 32), "fields": ("int", 5), "J_trunc": ("int", 4), "v_max": ("int", 8),
                         "tol": ("float", 1e-10)},
    "ttstar": {"j_min": ("int", 1), "j_max": ("int", 6), "lam": ("str", "golden"), "d": ("int", 1),
               "pair_samples": ("int", 2000), "tol_diag": ("float", 1e-12), "tol_match": ("float", 1e-10)},
    "exceptional-set": {"j_min": ("int", 4), "j_max": ("int", 8), "lam": ("str", "golden"), "kappa": ("float", 2.0),
                        "c0": ("float", 0.5), "delta0": ("float", _OPTIONAL), "d": ("int", 1),
                        "scaling": ("str", "dual"), "max_members_written": ("int", 1000)},
    "carleson-norm": {"op": ("str", "carleson"), "n_min": ("int", 6), "n_max": ("int", 10), "p": ("float", 2.0),
                      "trials": ("int", 20), "J_trunc": ("int", 6), "eps": ("float", 1e-3), "d": ("int", 1),
                      "check_reproducible": ("bool", True)},
}

RANDOMIZED = {"factorization", "rademacher-menshov", "carleson-exactness", "parabola-fourier", "ttstar",
              "carleson-norm"}

EXPERIMENTS = tuple(SCHEMAS)


def _coerce(name: str, kind: str, value):
    def bad():
        return ConfigError(f"parameter {name!r} must be of kind {kind}, got {value!r}")

    scalar = {"int": int, "float": float, "str": str, "bool": bool}
    if kind in scalar:
        if kind == "float" and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, bool) != (kind == "bool") or not isinstance(value, scalar[kind]):
            raise bad()
        return value
    if not isinstance(value, list):
        raise bad()
    return [_coerce(name, kind[:-1], v) for v in value]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    out: Path | None = None
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in SCHEMAS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        schema = SCHEMAS[self.experiment]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.experiment}: {', '.join(unknown)}")
        full = {}
        for name, (kind, default) in schema.items():
            if name in self.params:
                full[name] = _coerce(name, kind, self.params[name])
            else:
                full[name] = None if default is _OPTIONAL else default
        object.__setattr__(self, "params", full)
        if self.seed is not None and not (0 <= int(self.seed) <= U64_MAX):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if self.experiment in RANDOMIZED and self.seed is None:
            raise ConfigError(f"{self.experiment} is randomized and needs a seed")

    @classmethod
    def from_toml(cls, text: str, experiment: str | None = None, **overrides) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc
        unknown = sorted(set(data) - {"experiment", "seed", "params"})
        if unknown:
            raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
        name = data.get("experiment", experiment)
        if experiment is not None and name != experiment:
            raise ConfigError(f"config is for {name!r}, not {experiment!r}")
        if name is None:
            raise ConfigError("no experiment named")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("[params] must be a table")
        seed = data.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
            raise ConfigError("seed must be an integer")
        kw = {"seed": seed}
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(name, dict(params), **kw)

    def echo(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "threads": self.threads,
                "params": {k: v for k, v in self.params.items()}}


# --- reports ------------------------------------------------------------------------

@dataclass(frozen=True)
class Assertion:
    name: str
    passed: bool
    detail: str = ""
    vacuous: bool = False

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        vac = " (vacuous)" if self.vacuous else ""
        return f"{tag} {self.name}{vac}: {self.detail}"


@dataclass
class Report:
    config: dict
    version: dict
    tables: dict[str, DecayTable]
    assertions: list[Assertion]
    wall_clock: float
    artifacts: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def summary(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "passed": self.passed,
            "assertions": [{"name": a.name, "passed": a.passed, "detail": a.detail, "vacuous": a.vacuous}
                           for a in self.assertions],
            "tables": {k: _jsonable(t.to_dict()) for k, t in self.tables.items()},
            "wall_clock_seconds": self.wall_clock,
        }

    def write(self, out: Path) -> list[Path]:
        """CSV and SVG per table, JSON per artifact, and a report JSON; returns the paths."""
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        stem = self.config["experiment"]
        written = []
        for name, table in self.tables.items():
            p = out / f"{stem}__{name}.csv"
            p.write_text(table.to_csv())
            written.append(p)
            if len(table):
                p = out / f"{stem}__{name}.svg"
                p.write_text(emit_plot(table, title=f"{stem}: {name}"))
                written.append(p)
        for name, obj in self.artifacts.items():
            p = out / f"{stem}__{name}.json"
            p.write_text(json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n")
            written.append(p)
        p = out / f"{stem}__report.json"
        p.write_text(json.dumps(_jsonable(self.summary()), indent=1, sort_keys=True) + "\n")
        written.append(p)
        return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def version_info() -> dict:
    commit = None
    try:
        res = subprocess.run(["git", "rev-parse", "HEAD"], cwd=Path(__file__).resolve().parent,
                             capture_output=True, text=True, timeout=5)
        if res.returncode == 0:
            commit = res.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return {"package": "carleson_lab", "version": __version__, "commit": commit}


# --- helpers ---------------------------------------------------------------------

def _pmap(fn: Callable, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _guard(ok: bool, msg: str):
    if not ok:
        raise GuardError(msg)


def parse_real(text: str):
    """'golden' -> (sqrt 5 - 1)/2; 'a/b' or an integer -> Fraction; otherwise float."""
    t = text.strip()
    if t == "golden":
        return (math.sqrt(5.0) - 1.0) / 2.0
    try:
        return Fraction(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError as exc:
        raise ConfigError(f"cannot parse real number {text!r}") from exc


def _rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]))


def _kernel(name: str) -> DyadicKernel:
    try:
        return DyadicKernel(builtin_kernel(name, 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def sample_alphas(s: int, k: int) -> list[ar.ReducedRational]:
    """k elements of A_s: evenly spread members of A_s in [0, 1), padded with integer shifts."""
    members = ar.class_members(s)
    if k <= len(members):
        idx = sorted({round(i * (len(members) - 1) / max(1, k - 1)) for i in range(k)})
        picked = [members[i] for i in idx]
        i = 0
        while len(picked) < k:
            if members[i] not in picked:
                picked.append(members[i])
            i += 1
        return sorted(picked)
    out = []
    shift = 0
    while len(out) < k:
        for m in members:
            if len(out) < k:
                out.append(ar.ReducedRational(m.a + shift * m.q, m.q))
        shift += 1
    return out


def smooth_test_symbol(radius: float) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth profile (1 + 2 i t) exp(-t^2) with t = eta / radius."""
    def rule(eta):
        t = np.asarray(eta, dtype=float)[..., 0] / radius
        return (1.0 + 2.0j * t) * np.exp(-t * t)
    return rule


def _vacuous(name: str) -> Assertion:
    return Assertion(name, True, "empty range", vacuous=True)


# --- experiments -------------------------------------------------------------------

Result = tuple[dict[str, DecayTable], list[Assertion], dict[str, Any]]


def _gauss_vanishing(p, seed, threads) -> Result:
    _guard(p["q_max"] ** 1 <= es.COMPLETE_SUM_GUARD, "expsum.COMPLETE_SUM_GUARD")
    tables, worst_all, cases_all = {}, 0.0, 0
    for d in p["d_values"]:
        def one(q, d=d):
            worst, cases = 0.0, 0
            for a in range(q):
                if math.gcd(a, q) == 1:
                    continue
                for b in range(q):
                    if math.gcd(a, b, q) != 1:
                        continue
                    worst = max(worst, abs(es.gauss_sum(a, b, q, d)))
                    cases += 1
            return DecayRow(float(q), worst, worst, False, f"cases={cases}")
        rows = _pmap(one, range(1, p["q_max"] + 1), threads)
        tables[f"d{d}"] = DecayTable.from_rows(rows, x_label="q", y_label="max|S| over (a,q)>1")
        worst_all = max([worst_all] + [r.raw for r in rows])
        cases_all += sum(int(r.note.split("=")[1]) for r in rows)
    if cases_all == 0:
        return tables, [_vacuous("gauss-vanishing")], {}
    ok = worst_all < p["tol"]
    return tables, [Assertion("gauss-vanishing", ok, f"max |S| = {worst_all:.3e} over {cases_all} cases"
                                                      f" (tol {p['tol']:g})")], {}


def _gauss_modulus(p, seed, threads) -> Result:
    rows, law_err, obs_err, oracle_err = [], 0.0, 0.0, 0.0
    qs = [q for q in range(1, p["q_max"] + 1) if q % p["modulus"] == p["residue"] % p["modulus"]]
    for q in qs:
        mods = []
        for a in range(q):
            if math.gcd(a, q) != 1:
                continue
            S = es.gauss_sum(a, 0, q, 1)
            oracle_err = max(oracle_err, abs(S - es.complete_sum_direct(a, (0,), q, 1)))
            mods.append(abs(S))
        if not mods:
            continue
        law_err = max(law_err, max(abs(m - q ** -0.5) for m in mods))
        expected = observed_modulus(q)
        obs_err = max(obs_err, max(abs(m - expected) for m in mods))
        rows.append(DecayRow(float(q), max(mods), max(mods) * math.sqrt(q), False,
                             f"min={min(mods)!r}"))
    table = DecayTable.from_rows(rows, model="power", x_label="q", y_label="|S(a/q,0)| sqrt(q)")
    if not rows:
        return {"modulus": table}, [_vacuous("gauss-modulus")], {}
    tol = p["tol"]
    return {"modulus": table}, [
        Assertion("gauss-modulus law |S| = q^-1/2", law_err < tol, f"max deviation {law_err:.3e} (tol {tol:g})"),
        Assertion("gauss-modulus observed law", obs_err < tol, f"max deviation from observed_modulus {obs_err:.3e}"),
        Assertion("gauss-modulus oracle", oracle_err < tol, f"max |residue method - direct| {oracle_err:.3e}"),
    ], {}


def observed_modulus(q: int) -> float:
    """|S(a/q, 0)| for d = 1, n = 1, (a, q) = 1: sqrt(2/q), q^-1/2 or 0 by q mod 4."""
    if q % 4 == 0:
        return math.sqrt(2.0 / q)
    if q % 2:
        return q ** -0.5
    return 0.0


def _kernel_identity(p, seed, threads) -> Result:
    N = 2 ** p["log2_grid"]
    _guard(p["log2_grid"] <= 24, "kernel-identity log2_grid <= 24 (memory)")
    ys = np.arange(-p["y_max"], p["y_max"] + 1)
    xi = np.arange(N) / N
    rows, worst = [], 0.0
    for s in p["s_values"]:
        cut = chi_sM(s, p["M"])
        r = cut.support_radius
        _guard(2 * r * N >= 256, f"kernel-identity: grid 2^{p['log2_grid']} gives {2 * r * N:.1f} samples across"
                                 f" the chi_s support at s={s}, M={p['M']} (need 256)")
        rule = smooth_test_symbol(r)
        cont = mu.continuum_inverse_transform(rule, cut, ys)
        for alpha in sample_alphas(s, p["alphas_per_class"]):
            L = mu.arc_multiplier(s, alpha, p["M"], rule, xi)
            lat = mu.lattice_inverse_transform(L, ys)
            ph = np.exp(2j * np.pi * ((alpha.a * ys.astype(np.int64) ** 2) % alpha.q) / alpha.q)
            err = float(np.max(np.abs(lat - ph * cont)))
            worst = max(worst, err)
            rows.append(DecayRow(float(s), err, err / float(np.max(np.abs(cont))), False, f"alpha={alpha}"))
    table = DecayTable.from_rows(rows, x_label="s", y_label="max_y |lattice - continuum|")
    if not rows:
        return {"errors": table}, [_vacuous("kernel-identity")], {}
    return {"errors": table}, [Assertion("kernel-identity", worst < p["tol"],
                                         f"max error {worst:.3e} over |y| <= {p['y_max']} (tol {p['tol']:g})")], {}


def _factorization(p, seed, threads) -> Result:
    rows, worst = [], 0.0
    M = p["M"]
    for s in p["s_values"]:
        r = chi_sM(s, M).support_radius
        rule = smooth_test_symbol(r)
        for alpha in sample_alphas(s, p["alphas_per_class"]):
            rng = _rng(seed, s, alpha.a, alpha.q)
            k = p["samples"]
            near = rng.integers(0, alpha.q, k // 2) / alpha.q + rng.uniform(-1.1, 1.1, k // 2) * r
            xi = np.concatenate([rng.uniform(0.0, 1.0, k - k // 2), near])
            lhs = mu.arc_multiplier(s, alpha, M, rule, xi)
            rhs = mu.arc_multiplier(s, alpha, M, 1.0, xi) * mu.sharp_multiplier(s, rule, xi, M)
            err = float(np.max(np.abs(lhs - rhs)))
            worst = max(worst, err)
            rows.append(DecayRow(float(s), err, err, False, f"alpha={alpha} nonzero={int(np.count_nonzero(lhs))}"))
    table = DecayTable.from_rows(rows, x_label="s", y_label="max |L[m] - L[1] L#[m]|")
    if not rows:
        return {"errors": table}, [_vacuous("factorization")], {}
    return {"errors": table}, [Assertion("factorization", worst < p["tol"],
                                         f"max error {worst:.3e} (tol {p['tol']:g})")], {}


def approximation_constant(dk: DyadicKernel, j: int, q_max: int, t_values, nu_scales, d: int = 1,
                           tol: float = 1e-9) -> tuple[float, str, int]:
    """max residual / (q delta) over samples next to a neighbouring rational.

    Samples: lam = a/q + nu with nu = c 2^{-2dj}, xi = b/q +- (1/q - t 2^{-j}),
    delta the least admissible value.  Returns (C_j, worst sample, count).
    """
    worst, arg, count = 0.0, "", 0
    for q in range(1, q_max + 1):
        if q > 2 ** (j - 2):
            continue
        for a in range(q):
            if math.gcd(a, q) != 1:
                continue
            for b in range(q):
                for sgn in (1, -1):
                    for t in t_values:
                        for c in nu_scales:
                            eta = sgn * (1.0 / q - t * 2.0**-j)
                            nu = c * 2.0 ** (-2 * d * j)
                            delta = max(abs(eta), abs(nu) * 2.0 ** ((2 * d - 1) * j), 2.0**-j * (1 + 1e-3))
                            if delta >= 1:
                                continue
                            lam = Fraction(a, q) + Fraction(nu)
                            try:
                                res, qd = mu.approx_residual(dk, j, lam, b / q + eta, a, b, q, delta, d, tol)
                            except mu.PreconditionError:
                                continue
                            count += 1
                            if res / qd > worst:
                                worst, arg = res / qd, f"q={q} a={a} b={b} sign={sgn} t={t} c={c}"
    return worst, arg, count


def _multiplier_approx(p, seed, threads) -> Result:
    _guard(p["j_max"] <= mu.SYMBOL_GUARD_J, "multiplier.SYMBOL_GUARD_J")
    dk = _kernel(p["kernel"])
    js = list(range(p["j_min"], p["j_max"] + 1))
    res = _pmap(lambda j: approximation_constant(dk, j, p["q_max"], p["t_values"], p["nu_scales"], 1, p["tol"]),
                js, threads)
    rows = [DecayRow(float(j), c, c, count == 0, f"{arg} samples={count}") for j, (c, arg, count) in zip(js, res)]
    table = DecayTable.from_rows(rows, x_label="j", y_label="C_j = max residual/(q delta)")
    vals = [r.raw for r in rows if not r.flagged]
    if len(vals) < 1:
        return {"constants": table}, [_vacuous("multiplier-approx")], {}
    ratio = max(vals) / min(vals) if min(vals) > 0 else math.inf
    return {"constants": table}, [Assertion("multiplier-approx", ratio < p["max_ratio"],
                                            f"C_j in [{min(vals):.4g}, {max(vals):.4g}], ratio {ratio:.3f}"
                                            f" (limit {p['max_ratio']:g})")], {}


def error_term_sup(dk: DyadicKernel, j: int, lam, M: float, tol: float = 1e-9, refine: int = 1) -> float:
    """sup |E_{j,lam,M}| over a uniform grid of step 2^{-j-3}/refine plus local grids.

    The local grids cover |xi - beta| <= 2 r_s for every beta = b/q of an
    active class representative q, with 128 refine + 1 points each.
    """
    N = 2 ** (j + 3) * refine
    xi = np.arange(N) / N
    m = mu.discrete_symbol_grid(dk, j, lam, N)
    best = float(np.max(np.abs(mu.error_term(j, lam, M, xi, dk, 1, tol, symbol_values=m))))
    for s in mu.active_classes(j, M):
        alpha = mu.class_representative(s, lam, M)
        if alpha is None:
            continue
        r = chi_sM(s, M).support_radius
        for b in range(alpha.q):
            loc = b / alpha.q + np.linspace(-2 * r, 2 * r, 128 * refine + 1)
            best = max(best, float(np.max(np.abs(mu.error_term(j, lam, M, loc, dk, 1, tol)))))
    return best


def _error_term_decay(p, seed, threads) -> Result:
    _guard(p["j_max"] <= mu.SYMBOL_GUARD_J, "multiplier.SYMBOL_GUARD_J")
    dk = _kernel(p["kernel"])
    js = list(range(p["j_min"], p["j_max"] + 1))
    tables, checks = {}, []
    for text in p["lambdas"]:
        lam = parse_real(text)
        tag = "lambda_" + text.replace("/", "_").replace(".", "p").replace("-", "m")
        sup1 = _pmap(lambda j: error_term_sup(dk, j, lam, p["M"], p["tol"], 1), js, threads)
        sup2 = _pmap(lambda j: error_term_sup(dk, j, lam, p["M"], p["tol"], 2), js, threads)
        rows = [DecayRow(float(j), a, a, False, f"refined={b!r}") for j, a, b in zip(js, sup1, sup2)]
        table = DecayTable.from_rows(rows, model="exponential", x_label="j", y_label="sup |E_j|",
                                     meta={"lambda": text, "M": p["M"]})
        tables[tag] = table
        if len(js) < 2 or table.fit is None:
            checks.append(_vacuous(f"error-term-decay lambda={text}"))
            continue
        fit = table.fit
        checks.append(Assertion(f"error-term-decay lambda={text}", fit.rate > 0 and fit.r_squared > p["min_r2"],
                                f"rate {fit.rate:.4f} per j, R^2 {fit.r_squared:.4f} (need > 0, > {p['min_r2']:g})"))
        drift = max(abs(b / a - 1.0) for a, b in zip(sup1, sup2) if a > 0)
        checks.append(Assertion(f"error-term-decay refinement lambda={text}", drift < p["refine_tol"],
                                f"grid doubling changes sup by {drift:.3%}"))
    return tables, checks, {}


def naive_weyl_sum(xi: float, order: int, R: int) -> complex:
    """Oracle: sum_{x=1}^{R} exp(2 pi i xi x^order) with plain float phases."""
    return complex(sum(complex(math.cos(2 * math.pi * ((xi * x**order) % 1.0)),
                               math.sin(2 * math.pi * ((xi * x**order) % 1.0))) for x in range(1, R + 1)))


def _weyl_decay(p, seed, threads) -> Result:
    xi = parse_real(p["xi"])
    js = list(range(p["j_min"], p["j_max"] + 1))
    _guard(2 ** p["j_max"] <= es.WEYL_SUM_GUARD, "expsum.WEYL_SUM_GUARD")
    table = es.decay_probe_power(xi, p["order"], js, p["eps"])
    if len(table) < 2:
        return {"probe": table}, [_vacuous("weyl-decay")], {}
    first, last = table.rows[0].normalized, table.rows[-1].normalized
    factor = first / last if last > 0 else math.inf
    worst = 0.0
    for row in (table.rows[0], table.rows[-1]):
        R = int(row.param)
        worst = max(worst, abs(abs(naive_weyl_sum(float(xi), p["order"], R)) - row.raw) / R)
    return {"probe": table}, [
        Assertion("weyl-decay", factor >= p["min_factor"],
                  f"|S_R|/R drops by {factor:.3f} from R=2^{js[0]} to R=2^{js[-1]} (need >= {p['min_factor']:g})"),
        Assertion("weyl-decay oracle", worst < 1e-9, f"max |naive - probe| / R = {worst:.2e}"),
    ], {}


def _rademacher_menshov(p, seed, threads) -> Result:
    rng = _rng(seed)
    per_s = {s: [math.inf, math.inf, 0] for s in range(1, p["s_max"] + 1)}
    failures = 0
    for _ in range(p["trials"]):
        s = int(rng.integers(1, p["s_max"] + 1))
        r = float(p["r_values"][int(rng.integers(0, len(p["r_values"])))])
        a = rng.standard_normal(2**s + 1) + 1j * rng.standard_normal(2**s + 1)
        j, j0 = (int(v) for v in rng.integers(0, 2**s + 1, 2))
        rhs = op.rademacher_menshov_rhs(a, r, j, j0)
        lhs = float(abs(a[j]))
        if not lhs <= rhs:
            failures += 1
        st = per_s[s]
        st[0] = min(st[0], rhs - lhs)
        st[1] = min(st[1], lhs / rhs if rhs > 0 else 0.0)
        st[2] += 1
    rows = [DecayRow(float(s), v[0], v[1], v[2] == 0, f"trials={v[2]}") for s, v in per_s.items()]
    table = DecayTable.from_rows(rows, x_label="s", y_label="max |a_j| / RHS")
    if p["trials"] == 0:
        return {"slack": table}, [_vacuous("rademacher-menshov")], {}
    return {"slack": table}, [Assertion("rademacher-menshov", failures == 0,
                                        f"{failures} violations in {p['trials']} sequences")], {}


def _carleson_exactness(p, seed, threads) -> Result:
    K = builtin_kernel(p["kernel"], 1)
    J, eps, d = p["J_trunc"], p["eps"], p["d"]
    checks = []
    delta = op.carleson_apply(LatticeFunction.delta((1,)), K, d, J, eps)
    x = delta.coords()[..., 0]
    expect = np.where((x != 0) & (np.abs(x) <= 2**J), np.abs(K(np.where(x == 0, 1, x))), 0.0)
    checks.append(Assertion("carleson delta exactness", bool(np.array_equal(delta.values.real, expect))
                            and not np.any(delta.values.imag),
                            "C delta_0 == |K| 1_{0<|x|<=2^J} bit for bit"))
    rng = _rng(seed)
    N = p["N"]
    f = LatticeFunction((rng.standard_normal(N) + 1j * rng.standard_normal(N)) / math.sqrt(2), origin=(-(N // 2),))
    c1 = op.carleson_apply(f, K, d, J, eps, grid_factor=2)
    c2 = op.carleson_apply(f, K, d, J, eps, grid_factor=4)
    diff = np.abs(c1.values - c2.values)
    checks.append(Assertion("carleson grid doubling", float(diff.max()) <= eps,
                            f"max change {float(diff.max()):.3e} (eps {eps:g})"))
    ct = op.carleson_apply(f.translate((p["shift"],)), K, d, J, eps, grid_factor=2)
    checks.append(Assertion("carleson translation", bool(np.array_equal(ct.values, c1.values))
                            and ct.origin == tuple(o + p["shift"] for o in c1.origin), f"shift {p['shift']}"))
    co = op.carleson_apply(f, K, d, J, eps, grid_factor=2, lambda_offset=p["lambda_offset"])
    checks.append(Assertion("carleson integer lambda offset", bool(np.array_equal(co.values, c1.values)),
                            f"offset {p['lambda_offset']}"))
    xs = c1.coords()[..., 0]
    rows = [DecayRow(float(xv), float(v.real), float(dv), False, "") for xv, v, dv in zip(xs, c1.values, diff)]
    table = DecayTable.from_rows(rows, x_label="x", y_label="|C f (grid x2) - C f (grid x4)|")
    return {"doubling": table}, checks, {}


def _parabola_fourier(p, seed, threads) -> Result:
    N, rows, worst = p["N"], [], 0.0
    for i in range(p["fields"]):
        rng = _rng(seed, i)
        f = LatticeFunction(rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N)), torus=True)
        v_row = rng.integers(-p["v_max"], p["v_max"] + 1, N)
        v = np.repeat(v_row[:, None], N, axis=1)
        lhs = np.fft.fft(op.variable_parabola(f, v, p["J_trunc"]).values, axis=1)
        rhs = op.parabola_fourier_side(f, v_row, p["J_trunc"])
        err = float(np.max(np.abs(lhs - rhs)))
        worst = max(worst, err)
        rows.append(DecayRow(float(i), err, err / float(np.max(np.abs(lhs))), False, ""))
    table = DecayTable.from_rows(rows, x_label="field", y_label="max |F_2 H_v f - partial Fourier side|")
    if not rows:
        return {"errors": table}, [_vacuous("parabola-fourier")], {}
    return {"errors": table}, [Assertion("parabola-fourier", worst < p["tol"],
                                         f"max error {worst:.3e} (tol {p['tol']:g})")], {}


def _ttstar(p, seed, threads) -> Result:
    _guard(p["j_max"] <= op.TTSTAR_GUARD_J, "operator.TTSTAR_GUARD_J")
    dk = _kernel("odd_power")
    lam = parse_real(p["lam"])
    const = op.ModulationField.constant(lam)
    d = p["d"]
    rows, support_ok, diag_err, match_err, herm_err = [], True, 0.0, 0.0, 0.0
    for j in range(p["j_min"], p["j_max"] + 1):
        rng = _rng(seed, j)
        R3 = 2 ** (j + 3)
        field_vals = rng.uniform(0.0, 1.0, 2 * R3 + 1)
        var = op.ModulationField(field_vals, (-R3,))
        for fld in (const, var):
            xs, _, T = op.single_scale_matrix(j, fld, dk, d, radius_power=3)
            Ks = T @ T.conj().T
            outside = op.ball_indicator(xs, j + 2) == 0
            support_ok &= not np.any(Ks[outside, :]) and not np.any(Ks[:, outside])
            dg = np.diag(Ks)
            diag_err = max(diag_err, float(np.max(np.abs(dg.imag))), float(max(0.0, -dg.real.min())))
            pts = rng.integers(-R3, R3 + 1, (8, 2))
            for x, y in pts:
                v = op.ttstar_kernel(j, fld, [x], [y], dk, d)
                inside = abs(x) <= 2 ** (j + 2) and abs(y) <= 2 ** (j + 2)
                support_ok &= inside or v == 0
        xs, K = op.ttstar_matrix(j, const, dk, d)
        herm_err = max(herm_err, float(np.max(np.abs(K - K.conj().T))))
        m = xs.shape[0]
        pairs = [(a, b) for a in range(m) for b in range(m)] if m * m <= p["pair_samples"] else \
            [tuple(v) for v in rng.integers(0, m, (p["pair_samples"], 2))]
        err = max(abs(op.ttstar_kernel(j, const, xs[a], xs[b], dk, d) - K[a, b]) for a, b in pairs)
        match_err = max(match_err, err)
        rows.append(DecayRow(float(j), err, float(np.max(np.abs(np.diag(K)))), False, f"pairs={len(pairs)}"))
    table = DecayTable.from_rows(rows, x_label="j", y_label="max |pointwise - T T*|")
    if not rows:
        return {"ttstar": table}, [_vacuous("ttstar")], {}
    return {"ttstar": table}, [
        Assertion("ttstar support", bool(support_ok), "K# vanishes off B_{j+2} x B_{j+2}"),
        Assertion("ttstar diagonal", diag_err <= p["tol_diag"], f"max |Im| or negative part {diag_err:.2e}"),
        Assertion("ttstar matrix oracle", match_err <= p["tol_match"], f"max deviation {match_err:.2e}"),
        Assertion("ttstar hermitian", herm_err <= 1e-12, f"max |K - K^*| {herm_err:.2e}"),
    ], {}


def _exceptional_set(p, seed, threads) -> Result:
    _guard(p["j_max"] <= op.EXCEPTIONAL_GUARD_J, "operator.EXCEPTIONAL_GUARD_J")
    dk = _kernel("odd_power")
    lam = op.ModulationField.constant(parse_real(p["lam"]))
    js = list(range(p["j_min"], p["j_max"] + 1))
    sets = _pmap(lambda j: op.exceptional_set(j, lam, p["kappa"], p["c0"], dk, p["d"], p["delta0"], p["scaling"]),
                 js, threads)
    rows, art = [], {}
    cert_ok = True
    for E in sets:
        certs_good = all(c is not None and c[2] for c in E.certificates)
        cert_ok &= certs_good or E.flagged
        rows.append(DecayRow(float(E.j), float(E.cardinality), E.cardinality / 2.0**E.j, E.flagged,
                             f"threshold={E.threshold!r}"))
        recs = E.to_records()
        art[f"members_j{E.j}"] = {"j": E.j, "cardinality": E.cardinality, "threshold": E.threshold,
                                  "flagged": E.flagged, "written": min(len(recs), p["max_members_written"]),
                                  "members": recs[: p["max_members_written"]]}
    table = DecayTable.from_rows(rows, x_label="j", y_label="|E| / 2^j")
    if not rows:
        return {"sizes": table}, [_vacuous("exceptional-set")], art
    norm = [r.normalized for r in rows]
    mono = all(b <= a for a, b in zip(norm, norm[1:]))
    return {"sizes": table}, [
        Assertion("exceptional-set monotone", mono, "|E|/2^j = " + ", ".join(f"{v:.4g}" for v in norm)),
        Assertion("exceptional-set certificates", cert_ok,
                  f"{sum(r.flagged for r in rows)} of {len(rows)} rows flagged"),
    ], art


def _carleson_norm(p, seed, threads) -> Result:
    Ns = [2**e for e in range(p["n_min"], p["n_max"] + 1)]

    def table_once():
        parts = _pmap(lambda N: op.empirical_norm_ratio(p["op"], [N], p["p"], p["trials"], seed,
                                                        d=p["d"], J_trunc=p["J_trunc"], eps=p["eps"]), Ns, threads)
        rows, prev = [], None
        for t in parts:
            r = t.rows[0]
            rows.append(DecayRow(r.param, r.raw, r.normalized, False,
                                 "" if prev is None else f"growth={r.raw / prev!r}"))
            prev = r.raw
        return DecayTable.from_rows(rows, model="power", x_label="N", y_label="max ||op f||_p / ||f||_p",
                                    meta=parts[0].meta if parts else {})

    table = table_once()
    checks = []
    if not Ns:
        return {"norms": table}, [_vacuous("carleson-norm")], {}
    growth = [r.note for r in table.rows[1:]]
    checks.append(Assertion("carleson-norm growth reported", True, "; ".join(growth) or "single row"))
    if p["check_reproducible"]:
        again = table_once()
        checks.append(Assertion("carleson-norm reproducible", again.to_csv() == table.to_csv(),
                                "second run under the same seed gives identical CSV bytes"))
    return {"norms": table}, checks, {}


RUNNERS: dict[str, Callable] = {
    "gauss-vanishing": _gauss_vanishing,
    "gauss-modulus": _gauss_modulus,
    "kernel-identity": _kernel_identity,
    "factorization": _factorization,
    "multiplier-approx": _multiplier_approx,
    "error-term-decay": _error_term_decay,
    "weyl-decay": _weyl_decay,
    "rademacher-menshov": _rademacher_menshov,
    "carleson-exactness": _carleson_exactness,
    "parabola-fourier": _parabola_fourier,
    "ttstar": _ttstar,
    "exceptional-set": _exceptional_set,
    "carleson-norm": _carleson_norm,
}


def run_experiment(config: ExperimentConfig) -> Report:
    start = time.perf_counter()
    tables, assertions, artifacts = RUNNERS[config.experiment](config.params, config.seed, config.threads)
    report = Report(config.echo(), version_info(), tables, assertions, time.perf_counter() - start, artifacts)
    for a in assertions:
        log.info(a.line())
    if config.out is not None:
        report.write(config.out)
    return report
