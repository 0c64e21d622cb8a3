"""Mean-field experiments: convergence, hierarchy, deficit scaling, counterexample, lift sweep.

Each run returns an :class:`ExperimentResult` whose table is a pure function
of the experiment configuration and the seed. Rows are independent LP solves and may be computed
in worker processes; they are always collected in parameter order.
"""
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np

from . import __version__
from .costs import classify_positive_definite, parse_cost
from .definetti import df_tv_bound_check, random_exchangeable
from .io import canonical_json, sha256_bytes, svg_line_plot
from .lp import DEFAULT_TOL
from .measures import DiscreteMeasure, SupportGrid
from .mmot import DEFAULT_BUDGET, MmotProblem, check_budget, mean_field_value, solve_mmot
from .multiset import n_multisets
from .representability import hierarchy_value

KINDS = ("convergence", "hierarchy", "deficit_scaling", "counterexample", "df_bound_sweep")
SLACK = 1e-9
DEFAULT_SEED = 0x5EED_0F_C0FFEE


def parse_range(v):
    """``[2, 3, 5]``, ``"2..10"`` (inclusive) or ``{"start": 2, "stop": 10}`` (inclusive)."""
    if isinstance(v, str):
        lo, _, hi = v.partition("..")
        out = list(range(int(lo), int(hi) + 1))
    elif isinstance(v, dict):
        out = list(range(int(v["start"]), int(v["stop"]) + 1, int(v.get("step", 1))))
    else:
        out = [int(x) for x in v]
    if not out:
        raise ValueError("empty range")
    return out


def measure_from_spec(d, n=None):
    """``points``/``weights``, ``uniform`` (list of points), ``torus`` or ``rho`` (mass N)."""
    d = dict(d)
    if "torus" in d:
        t = d["torus"]
        grid = SupportGrid.torus(int(t["M"]), float(t["L"]), int(t.get("d", 1)))
    else:
        pts = d.get("points", d.get("uniform"))
        if pts is None:
            raise ValueError("measure needs 'points', 'uniform' or 'torus'")
        grid = SupportGrid(np.asarray(pts, dtype=np.float64))
    if "rho" in d:
        if n is None:
            raise ValueError("a density 'rho' needs the particle number n")
        rho = np.asarray(d["rho"], dtype=np.float64)
        if abs(rho.sum() - n) > 1e-9 * n:
            raise ValueError(f"rho integrates to {rho.sum()!r}, expected {n}")
        return DiscreteMeasure(grid, rho / n)
    if "weights" in d:
        return DiscreteMeasure(grid, d["weights"])
    return DiscreteMeasure(grid, np.full(grid.m, 1.0 / grid.m))


@dataclass
class ExperimentSpec:
    kind: str
    name: str = ""
    measure: dict = field(default_factory=lambda: {"uniform": [0.0, 1.0]})
    cost: str = "gaussian:s=0.7071067811865476"
    n_range: object = None
    k_range: object = None
    n: int = None
    sigma: float = 2.0
    samples: int = 20
    m: int = 3
    kappas: list = None
    formulation: str = "direct"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "hierarchy":
            if self.n is None or self.k_range is None:
                raise ValueError("hierarchy needs n and k_range")
            self.k_range = parse_range(self.k_range)
            if min(self.k_range) < 2:
                raise ValueError("k_range must start at 2 or more")
        else:
            self.n_range = parse_range(self.n_range if self.n_range is not None else "2..6")
            if min(self.n_range) < 2:
                raise ValueError("n_range must start at 2 or more")
        if self.formulation not in ("direct", "reduced"):
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if not self.name:
            self.name = self.kind

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        bad = sorted(set(d) - known)
        if bad:
            raise KeyError(f"unknown experiment keys: {', '.join(bad)}")
        return cls(**d)

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    def config_hash(self, seed):
        return sha256_bytes(canonical_json({"spec": self.to_dict(), "seed": seed}).encode())

    def check_budget(self, budget):
        if self.kind == "df_bound_sweep":
            return
        mu = measure_from_spec(self.measure, self.n)
        extra = mu.grid.m * (mu.grid.m + 1) // 2
        for p in self.k_range if self.kind == "hierarchy" else self.n_range:
            check_budget(n_multisets(mu.grid.m, p) + extra, budget, f"{self.name} at {p}")


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    columns: list
    rows: list
    checks: dict
    metadata: dict
    summary: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    extra_tables: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.checks.values())

    @property
    def failed_checks(self):
        return sorted(k for k, v in self.checks.items() if not v)

    def column(self, name):
        return [r[name] for r in self.rows]

    def to_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "columns": self.columns,
            "rows": self.rows,
            "checks": self.checks,
            "passed": self.passed,
            "summary": self.summary,
            "flags": self.flags,
            "metadata": self.metadata,
        }

    def tables(self):
        out = {self.spec.name: (self.columns, self.rows)}
        out.update(self.extra_tables)
        return out

    def plots(self):
        key = self.columns[0]
        xs = [float(r[key]) for r in self.rows]
        val = {"convergence": "F_N", "hierarchy": "V_sce_k", "deficit_scaling": "ratio",
               "counterexample": "F_N", "df_bound_sweep": "max_event_tv"}[self.spec.kind]
        ref = {"convergence": "mean_field", "hierarchy": "limit", "counterexample": "mean_field"}.get(self.spec.kind)
        hl = [(ref, float(self.rows[0][ref]))] if ref and self.rows else []
        series = {val: (xs, [float(r[val]) for r in self.rows])}
        if self.spec.kind == "df_bound_sweep":
            series["bound"] = (xs, [float(r["bound"]) for r in self.rows])
        if self.spec.kind == "deficit_scaling":
            hl = [("1", 1.0)]
        svg = svg_line_plot(series, title=self.spec.name, xlabel=key, ylabel=val, hlines=hl)
        return {self.spec.name: svg}


# -- worker -------------------------------------------------------------------------


def _solve_row(args):
    spec_dict, p, budget, tol = args
    spec = ExperimentSpec.from_dict(spec_dict)
    mu = measure_from_spec(spec.measure, spec.n)
    cost = parse_cost(spec.cost)
    t0 = time.perf_counter()
    if spec.kind == "hierarchy":
        v = hierarchy_value(mu, spec.n, p, cost, budget=budget, tol=tol)
    else:
        v = solve_mmot(MmotProblem(mu, p, cost, spec.formulation), budget, tol).value
    return v, time.perf_counter() - t0


def _map_rows(spec, params, budget, tol, jobs):
    tasks = [(spec.to_dict(), p, budget, tol) for p in params]
    jobs = max(1, min(jobs or 1, len(tasks)))
    if jobs == 1:
        return [_solve_row(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_solve_row, tasks))


def _metadata(spec, seed, tol):
    return {
        "version": __version__,
        "seed": seed,
        "tolerances": {"feas": tol.feas, "gap": tol.gap, "farkas": tol.farkas},
        "config_hash": spec.config_hash(seed),
    }


def _nondecreasing(xs, slack=SLACK):
    return all(b >= a - slack for a, b in zip(xs, xs[1:]))


def _positive_definite(cost, grid):
    """Grid verdict on a torus, otherwise the cost's own claim."""
    if grid.is_uniform_torus and not cost.singular_at_zero:
        return classify_positive_definite(cost, grid).label != "indefinite"
    return cost.claims_positive_definite


# -- experiments ------------------------------------------------------------------------


def run_convergence(spec, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL, jobs=1, seed=DEFAULT_SEED):
    mu = measure_from_spec(spec.measure)
    cost = parse_cost(spec.cost)
    spec.check_budget(budget)
    mf = mean_field_value(mu, cost)
    pd = _positive_definite(cost, mu.grid)
    out = _map_rows(spec, spec.n_range, budget, tol, jobs)
    rows, flags = [], []
    for N, (v, _) in zip(spec.n_range, out):
        gap = mf - v
        bound = cost.sup / N if cost.bounded and cost.sup is not None else None
        within = None if bound is None else gap <= bound + SLACK
        rows.append({"N": N, "F_N": v, "mean_field": mf, "gap": gap, "rate_bound": bound,
                     "within_rate": within, "mean_field_limit_claim": "yes" if pd else ""})
        if within is False:
            flags.append(f"N={N}: gap {gap!r} exceeds sup c / N")
    fs = [r["F_N"] for r in rows]
    checks = {"monotone": _nondecreasing(fs), "gap_nonnegative": all(r["gap"] >= -SLACK for r in rows)}
    if pd and cost.bounded:
        checks["rate"] = all(r["within_rate"] for r in rows)
    cols = ["N", "F_N", "mean_field", "gap", "rate_bound", "within_rate", "mean_field_limit_claim"]
    return ExperimentResult(spec, cols, rows, checks, _metadata(spec, seed, tol),
                            summary={"mean_field": mf, "positive_definite": pd}, flags=flags,
                            timings={"rows": [t for _, t in out]})


def run_hierarchy(spec, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL, jobs=1, seed=DEFAULT_SEED):
    """``V^{SCE,k} = C(N,2) * min int c dmu2`` over k-representable ``mu2``, ``mu = rho / N``."""
    N = spec.n
    mu = measure_from_spec(spec.measure, N)
    cost = parse_cost(spec.cost)
    spec.check_budget(budget)
    limit = comb(N, 2) * mean_field_value(mu, cost)
    out = _map_rows(spec, spec.k_range, budget, tol, jobs)
    rows = [{"k": k, "V_sce_k": v, "limit": limit, "gap": limit - v} for k, (v, _) in zip(spec.k_range, out)]
    vs = [r["V_sce_k"] for r in rows]
    checks = {"chain_monotone": _nondecreasing(vs),
              "gap_nonincreasing": all(b["gap"] <= a["gap"] + SLACK for a, b in zip(rows, rows[1:]))}
    summary = {"limit": limit}
    if N in spec.k_range:
        sce = comb(N, 2) * solve_mmot(MmotProblem(mu, N, cost), budget, tol).value
        at_n = rows[spec.k_range.index(N)]["V_sce_k"]
        summary["sce_value"] = sce
        checks["equals_sce_at_N"] = abs(at_n - sce) <= 1e-9 * max(1.0, abs(sce))
    return ExperimentResult(spec, ["k", "V_sce_k", "limit", "gap"], rows, checks,
                            _metadata(spec, seed, tol), summary=summary,
                            timings={"rows": [t for _, t in out]})


def fit_power_law(ns, ys):
    """Least squares of ``log y`` on ``log N`` over the upper half of the points.

    Returns ``(a, b, rms residual)`` for ``y ~ a N^b``; ``None`` with fewer than 2 usable points.
    """
    pts = [(n, y) for n, y in zip(ns, ys) if y > 0]
    pts = pts[len(pts) // 2 :]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(np.exp(coef[0])), float(coef[1]), res


def _deficit_rows(spec, budget, tol, jobs):
    mu = measure_from_spec(spec.measure)
    cost = parse_cost(spec.cost)
    mf = mean_field_value(mu, cost)
    out = _map_rows(spec, spec.n_range, budget, tol, jobs)
    rows = []
    for N, (F, _) in zip(spec.n_range, out):
        V = comb(N, 2) * F
        J = N * N / 2 * mf
        rows.append({"N": N, "V_sce_CN2": V, "J_N2_over_2": J, "ratio": V / J, "deficit": J - V,
                     "deficit_over_J": (J - V) / J})
    return rows, out


def run_deficit_scaling(spec, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL, jobs=1, seed=DEFAULT_SEED):
    """Ratio ``V_sce / J`` with ``V_sce = C(N,2) F_N`` and ``J = (N^2/2) * mean_field``.

    For a ``coulomb_cell`` cost, ``kappas`` reruns the table per self-interaction
    constant and adds a sensitivity table.
    """
    spec.check_budget(budget)
    rows, out = _deficit_rows(spec, budget, tol, jobs)
    ratios = [r["ratio"] for r in rows]
    checks = {
        "ratio_at_most_one": all(x <= 1 + SLACK for x in ratios),
        "ratio_nondecreasing": _nondecreasing(ratios),
        "deficit_normalized_in_unit_interval": all(-SLACK <= r["deficit_over_J"] <= 1 + SLACK for r in rows),
    }
    fit = fit_power_law([r["N"] for r in rows], [r["deficit"] for r in rows])
    summary = {"fit": None if fit is None else {"a": fit[0], "b": fit[1], "rms_residual": fit[2]}}
    extra = {}
    if spec.kappas:
        cost = parse_cost(spec.cost)
        if cost.name != "coulomb_cell":
            raise ValueError("kappas apply to the coulomb_cell cost only")
        sens = []
        for kappa in spec.kappas:
            s2 = ExperimentSpec.from_dict({**spec.to_dict(), "kappas": None,
                                           "cost": f"coulomb_cell:h={cost.params['h']!r},kappa={float(kappa)!r}"})
            r2, _ = _deficit_rows(s2, budget, tol, jobs)
            sens.append({"kappa": float(kappa), "N": r2[-1]["N"], "ratio": r2[-1]["ratio"],
                         "deficit": r2[-1]["deficit"]})
        extra[f"{spec.name}_kappa"] = (["kappa", "N", "ratio", "deficit"], sens)
        summary["kappa_ratio_spread"] = max(s["ratio"] for s in sens) - min(s["ratio"] for s in sens)
    cols = ["N", "V_sce_CN2", "J_N2_over_2", "ratio", "deficit", "deficit_over_J"]
    return ExperimentResult(spec, cols, rows, checks, _metadata(spec, seed, tol), summary=summary,
                            extra_tables=extra, timings={"rows": [t for _, t in out]})


def run_counterexample(spec, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL, jobs=1, seed=DEFAULT_SEED,
                       spectrum_grid=(64, 16.0)):
    """Truncated quadratic cost: zero at the origin, so the diagonal coupling costs nothing."""
    if spec.sigma <= 1:
        raise ValueError("sigma must exceed 1")
    spec = ExperimentSpec.from_dict({**spec.to_dict(), "cost": f"truncated_quadratic:sigma={float(spec.sigma)!r}"})
    cost = parse_cost(spec.cost)
    mu = measure_from_spec(spec.measure)
    spec.check_budget(budget)
    mf = mean_field_value(mu, cost)
    report = classify_positive_definite(cost, SupportGrid.torus(*spectrum_grid))
    out = _map_rows(spec, spec.n_range, budget, tol, jobs)
    rows = [{"N": N, "F_N": v, "mean_field": mf, "gap": mf - v, "independent_suboptimal": mf - v > SLACK}
            for N, (v, _) in zip(spec.n_range, out)]
    checks = {
        "cost_zero_at_origin": float(cost(np.zeros((1, mu.grid.d)))[0]) == 0.0,
        "grid_indefinite": report.label == "indefinite",
        "F_N_zero": all(abs(r["F_N"]) <= SLACK for r in rows),
    }
    w = mu.weights
    if np.count_nonzero(w) >= 2:
        checks["mean_field_positive"] = mf > 0
    flags = ["gap does not shrink with N: positivity of the cost spectrum fails"] if mf > SLACK else []
    return ExperimentResult(spec, ["N", "F_N", "mean_field", "gap", "independent_suboptimal"], rows, checks,
                            _metadata(spec, seed, tol),
                            summary={"mean_field": mf, "spectrum_min": report.min_coefficient,
                                     "spectrum_grid": list(spectrum_grid)}, flags=flags,
                            timings={"rows": [t for _, t in out]})


def df_bound_sweep(spec, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL, jobs=1, seed=DEFAULT_SEED):
    """Lift distance on ``samples`` random exchangeable measures per N, on ``m`` points."""
    rng = np.random.default_rng(seed)
    grid = SupportGrid.line(np.arange(float(spec.m)))
    rows = []
    t0 = time.perf_counter()
    for N in spec.n_range:
        res = [df_tv_bound_check(random_exchangeable(grid, N, rng, sparsity=rng.choice([None, 0.3])))
               for _ in range(spec.samples)]
        rows.append({"N": N, "samples": spec.samples, "max_event_tv": max(r.event_tv for r in res),
                     "bound": 1.0 / N, "all_passed": all(r.passed for r in res)})
    checks = {"bound_holds": all(r["all_passed"] for r in rows)}
    return ExperimentResult(spec, ["N", "samples", "max_event_tv", "bound", "all_passed"], rows, checks,
                            _metadata(spec, seed, tol), timings={"total": time.perf_counter() - t0})


RUNNERS = {
    "convergence": run_convergence,
    "hierarchy": run_hierarchy,
    "deficit_scaling": run_deficit_scaling,
    "counterexample": run_counterexample,
    "df_bound_sweep": df_bound_sweep,
}


def run_experiment(spec, budget=DEFAULT_BUDGET, tol=DEFAULT_TOL, jobs=None, seed=DEFAULT_SEED):
    jobs = jobs or os.cpu_count() or 1
    return RUNNERS[spec.kind](spec, budget=budget, tol=tol, jobs=jobs, seed=seed)
