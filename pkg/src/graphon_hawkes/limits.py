"""Desk-scale experiment harnesses for the long-run limit theorems.

Each harness returns an `ExperimentReport` whose samples are reproducible
from the model digest plus the seed: replications draw from per-index
substreams, and aggregation is a fixed-order reduction, so thread counts
never change the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .cluster_sim import ClusterEngine, simulate_process
from .errors import OutdegreeConditionError, UnstableModelError
from .model import ModelSpec
from .operators import (
    discretize_kernel,
    fclt_sigma,
    outdegree_norm,
    spectral_radius,
    stationary_rate,
)
from .rng import SplitStream


@dataclass(eq=False)
class ExperimentReport:
    name: str
    model_digest: str
    params: dict
    samples: dict[str, list]
    summary: dict
    passed: bool | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "model_digest": self.model_digest,
            "params": self.params,
            "summary": self.summary,
            "passed": self.passed,
            "notes": self.notes,
        }


def _pmap(fn, count: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _digest(spec: ModelSpec) -> str:
    from .config import model_digest

    return model_digest(spec)


def _box_mask(nodes: np.ndarray, box) -> np.ndarray:
    if box is None:
        return np.ones(nodes.shape[0], dtype=bool)
    lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
    return ((nodes >= lo) & (nodes <= hi)).all(axis=1)


def _operator_setup(spec: ModelSpec, box, n_op: int):
    grid = discretize_kernel(spec, n_op)
    est = spectral_radius(grid, max_power=48)
    if est.rho >= 1.0:
        raise UnstableModelError(f"rho estimate {est.rho:.4f} >= 1")
    rate = stationary_rate(grid, spec.baseline_on(grid.nodes), tol=1e-10)
    mask = _box_mask(grid.nodes, box)
    lam_a = float(np.sum(rate.values[mask] * grid.weights[mask]))
    return grid, est, rate, mask, lam_a


def _summary(samples: np.ndarray) -> dict:
    if samples.size == 0:
        return {"count": 0}
    qs = np.quantile(samples, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {
        "count": int(samples.size),
        "mean": float(samples.mean()),
        "sd": float(samples.std(ddof=1)) if samples.size > 1 else 0.0,
        "median": float(qs[2]),
        "quantiles": {"q05": float(qs[0]), "q25": float(qs[1]), "q50": float(qs[2]),
                      "q75": float(qs[3]), "q95": float(qs[4])},
    }


def flln_sup_statistic(times_in_a: np.ndarray, horizon: float, lam_a: float) -> float:
    """sup_v |N_{Tv}(A)/T - v lam_bar(A)|, evaluated exactly at event times."""
    t = np.sort(np.asarray(times_in_a, float))
    k = t.shape[0]
    vend = abs(k / horizon - lam_a)
    if k == 0:
        return max(vend, 0.0)
    vs = t / horizon
    counts = np.arange(1, k + 1)
    at_jump = np.abs(counts / horizon - vs * lam_a)
    before_jump = np.abs((counts - 1) / horizon - vs * lam_a)
    return float(max(at_jump.max(), before_jump.max(), vend))


def flln_experiment(
    spec: ModelSpec,
    box,
    horizon: float,
    reps: int,
    stream: SplitStream,
    threads: int = 1,
    n_op: int = 256,
    threshold_median: float | None = None,
) -> ExperimentReport:
    """FLLN check: sup-statistic samples against the stationary rate."""
    _, est, _, _, lam_a = _operator_setup(spec, box, n_op)
    engine = ClusterEngine(spec)

    def one(i: int) -> float:
        real = simulate_process(spec, horizon, stream.child(i), with_lifetimes=False,
                                engine=engine)
        sel = _box_mask(real.locations, box) if box is not None else slice(None)
        return flln_sup_statistic(real.times[sel], horizon, lam_a)

    samples = np.asarray(_pmap(one, reps, threads))
    summary = _summary(samples)
    summary["lam_bar_A"] = lam_a
    summary["rho"] = est.rho
    passed = None
    if threshold_median is not None:
        passed = bool(summary["median"] <= threshold_median)
    return ExperimentReport(
        name="flln",
        model_digest=_digest(spec),
        params={"T": horizon, "A": _box_param(box), "reps": reps, "seed": stream.describe()},
        samples={"sup_statistic": samples.tolist()},
        summary=summary,
        passed=passed,
    )


def _box_param(box):
    if box is None:
        return None
    return [list(np.atleast_1d(np.asarray(box[0], float)).astype(float)),
            list(np.atleast_1d(np.asarray(box[1], float)).astype(float))]


def divergence_experiment(
    spec: ModelSpec,
    box,
    t_list,
    reps: int,
    stream: SplitStream,
    cap: int = 300_000,
    threads: int = 1,
) -> ExperimentReport:
    """Supercritical growth scan: N_T(A)/T per horizon, censored at the cap."""
    engine = ClusterEngine(spec)
    samples: dict[str, list] = {}
    summary: dict = {"per_T": {}}
    notes: list[str] = []
    for ti, horizon in enumerate(t_list):
        def one(i: int):
            real = simulate_process(
                spec, horizon, stream.child(ti, i), with_lifetimes=False,
                cap=cap, engine=engine,
            )
            sel = _box_mask(real.locations, box) if box is not None else slice(None)
            n_a = int(np.count_nonzero(real.times[sel] <= horizon))
            return n_a / horizon, real.censored

        rows = _pmap(one, reps, threads)
        vals = np.asarray([r[0] for r in rows])
        cens = np.asarray([r[1] for r in rows])
        samples[f"rate_T{horizon:g}"] = vals.tolist()
        summary["per_T"][f"{horizon:g}"] = {
            "mean_rate": float(vals.mean()),
            "censored_fraction": float(cens.mean()),
        }
        if cens.all():
            notes.append(f"all-censored at T={horizon:g}")
    means = [summary["per_T"][f"{t:g}"]["mean_rate"] for t in t_list]
    summary["strictly_increasing"] = bool(
        all(b > a for a, b in zip(means, means[1:]))
    )
    return ExperimentReport(
        name="diverge",
        model_digest=_digest(spec),
        params={"T_list": [float(t) for t in t_list], "A": _box_param(box),
                "reps": reps, "cap": cap, "seed": stream.describe()},
        samples=samples,
        summary=summary,
        notes=notes,
    )


def _piecewise_constant(spec: ModelSpec) -> bool:
    fams_ok = spec.graphon.family in ("constant", "grid") and spec.baseline.family in (
        "constant",
        "grid",
        "affine",
    )
    interp_ok = spec.graphon.family != "grid" or spec.graphon.interp == "pw-constant"
    return bool(
        fams_ok
        and interp_ok
        and spec.baseline.family != "affine"
        and (spec.baseline.family != "grid" or spec.baseline.interp == "pw-constant")
    )


def fclt_experiment(
    spec: ModelSpec,
    box,
    horizon: float,
    reps: int,
    stream: SplitStream,
    burn_in: float = 0.0,
    threads: int = 1,
    n_op: int = 256,
    p_threshold: float = 0.001,
) -> ExperimentReport:
    """FCLT check: sqrt(T)-normalized window counts against N(0, sigma_A^2).

    Requires the outdegree condition |h|_1 sup_y int W(x,y) dx < 1.
    Stationarity is approximated by discarding [0, burn_in] and counting on
    (burn_in, burn_in + T].
    """
    deg = outdegree_norm(spec, min(n_op, 256))
    if deg >= 1.0:
        raise OutdegreeConditionError(
            f"|h|_1 sup-outdegree = {deg:.4f} >= 1; FCLT assumptions fail"
        )
    grid, est, rate, mask, lam_a = _operator_setup(spec, box, n_op)
    sigma = fclt_sigma(grid, rate, mask)
    engine = ClusterEngine(spec)
    total_t = burn_in + horizon

    def one(i: int) -> float:
        real = simulate_process(spec, total_t, stream.child(i), with_lifetimes=False,
                                engine=engine)
        sel = (real.times > burn_in) & (real.times <= total_t)
        if box is not None:
            sel &= _box_mask(real.locations, box)
        count = int(np.count_nonzero(sel))
        return math.sqrt(horizon) * (count / horizon - lam_a)

    samples = np.asarray(_pmap(one, reps, threads))
    summary = _summary(samples)
    summary.update(
        {
            "sigma_A": sigma,
            "sigma_label": (
                "exact-piecewise-constant" if _piecewise_constant(spec) else "extrapolated"
            ),
            "lam_bar_A": lam_a,
            "outdegree": deg,
            "rho": est.rho,
        }
    )
    passed = None
    notes = []
    if reps < 2:
        notes.append("test skipped: fewer than 2 replications")
    else:
        ks = stats.kstest(samples, "norm", args=(0.0, sigma))
        summary["ks_statistic"] = float(ks.statistic)
        summary["ks_pvalue"] = float(ks.pvalue)
        passed = bool(ks.pvalue > p_threshold)
    return ExperimentReport(
        name="fclt",
        model_digest=_digest(spec),
        params={"T": horizon, "burn_in": burn_in, "A": _box_param(box),
                "reps": reps, "seed": stream.describe()},
        samples={"normalized": samples.tolist()},
        summary=summary,
        passed=passed,
        notes=notes,
    )
