"""Exact simulation via the Poisson branching (cluster) representation.

Immigrants arrive as a homogeneous-in-time Poisson stream with spatial
density lambda_inf / alpha; an event at (t0, x0) with scalar mark xi spawns
children as an inhomogeneous Poisson process with spatial profile
b(z, x0) W(z, x0) and temporal profile h(t - t0).  Child delays invert
H(s)/H(tau); child locations are drawn from the normalized spatial profile.

Only linear (identity nonlinearity) models are supported here; nonlinear
rate functions go through the thinning simulator.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DegenerateDensityError,
    NoLifetimesError,
    RequiresThinningError,
)
from .events import Realization
from .model import ModelSpec
from .rng import SplitStream

DEFAULT_EVENT_CAP = 10**7


# ---------------------------------------------------------------------------
# Location sampling


def _inverse_cdf_1d(values: np.ndarray, lo: float, hi: float, u) -> np.ndarray:
    """Invert the piecewise-linear CDF of a midpoint-grid density (1-d)."""
    n = values.shape[0]
    width = (hi - lo) / n
    masses = values * width
    total = masses.sum()
    if total <= 0:
        raise DegenerateDensityError("cannot sample from an identically zero density")
    cum = np.cumsum(masses)
    u = np.asarray(u, float)
    target = u * total
    idx = np.searchsorted(cum, target, side="left")
    idx = np.clip(idx, 0, n - 1)
    prev = np.where(idx > 0, cum[idx - 1], 0.0)
    frac = np.where(masses[idx] > 0, (target - prev) / masses[idx], 0.0)
    return lo + (idx + np.clip(frac, 0.0, 1.0)) * width


def sample_location(density: np.ndarray, domain, u=None, rng=None) -> np.ndarray:
    """Draw point(s) from a nonnegative grid density on the domain.

    1-d uses inverse-CDF transform of the uniform variate(s) `u`; in higher
    dimensions points are drawn by acceptance-rejection against the sup of
    the density, which needs a Generator `rng`.
    """
    density = np.asarray(density, float)
    m = domain.dim
    if m == 1:
        if u is None:
            u = rng.random()
        pts = _inverse_cdf_1d(density, domain.lo[0], domain.hi[0], u)
        return np.atleast_1d(pts)[:, None] if np.ndim(u) else np.array([float(pts)])
    sup = density.max()
    if sup <= 0:
        raise DegenerateDensityError("cannot sample from an identically zero density")
    n = round(density.shape[0] ** (1.0 / m))
    nodes, _ = domain.grid(n)
    k = 1 if u is None or np.ndim(u) == 0 else len(u)
    out = np.empty((k, m))
    filled = 0
    while filled < k:
        batch = max(16, 2 * (k - filled))
        props = domain.uniform(rng, batch)
        cell = _nearest_value(density, props, domain, n)
        acc = rng.random(batch) <= cell / sup
        take = props[acc][: k - filled]
        out[filled : filled + take.shape[0]] = take
        filled += take.shape[0]
    return out[0] if (u is None or np.ndim(u) == 0) else out


def _nearest_value(values, pts, domain, n):
    counts = (n,) * domain.dim
    rel = (pts - domain.lo) / (domain.hi - domain.lo)
    idx = np.clip((rel * n).astype(int), 0, n - 1)
    flat = idx[:, 0]
    for a in range(1, domain.dim):
        flat = flat * n + idx[:, a]
    return values[flat]


# ---------------------------------------------------------------------------
# Engine: cached spatial structure of one model


class ClusterEngine:
    """Precomputed grids, offspring masses and location samplers for a model."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.domain = spec.domain
        self.nodes, self.weights = spec.std_grid
        self._columns: dict[tuple, tuple[float, np.ndarray | None]] = {}

        g, b = spec.graphon, spec.marks.b
        self._flat_offspring = g.family == "constant" and b.family == "constant"
        self._sep_offspring = (
            g.family == "rank-one" and b.family == "constant" and spec.domain.dim == 1
        )
        if self._flat_offspring:
            self._flat_mass = float(g.value) * float(b.value) * self.domain.volume
        if self._sep_offspring:
            prof = g.profile or None
            shape = (
                prof(self.nodes, self.domain)
                if prof is not None
                else np.prod(self.nodes, axis=1)
            )
            shape = np.maximum(shape, 0.0)
            self._sep_shape = shape
            self._sep_integral = float(np.sum(shape * self.weights))
            self._sep_profile = prof

        lam = spec.baseline_on(self.nodes)
        self._lam_vals = np.maximum(lam, 0.0)
        self._lam_const = spec.baseline.family == "constant"
        self.alpha = float(np.sum(self._lam_vals * self.weights))

    # -- immigrants ---------------------------------------------------------

    def sample_immigrant_locations(self, k: int, rng) -> np.ndarray:
        if k == 0:
            return np.empty((0, self.domain.dim))
        if self._lam_const:
            return self.domain.uniform(rng, k)
        if self.domain.dim == 1:
            pts = _inverse_cdf_1d(
                self._lam_vals, self.domain.lo[0], self.domain.hi[0], rng.random(k)
            )
            return pts[:, None]
        return sample_location(self._lam_vals, self.domain, u=np.empty(k), rng=rng)

    # -- offspring ----------------------------------------------------------

    def offspring_mass(self, xs: np.ndarray) -> np.ndarray:
        """Gamma(y) = int b(z, y) W(z, y) dz for each parent location y."""
        k = xs.shape[0]
        if self._flat_offspring:
            return np.full(k, self._flat_mass)
        if self._sep_offspring:
            g = self.spec.graphon
            prof_at = (
                self._sep_profile(xs, self.domain)
                if self._sep_profile is not None
                else np.prod(xs, axis=1)
            )
            b0 = float(self.spec.marks.b.value)
            return g.coeff * b0 * prof_at * self._sep_integral
        out = np.empty(k)
        for i in range(k):
            out[i] = self._column(xs[i])[0]
        return out

    def _column(self, y: np.ndarray):
        key = tuple(np.round(np.atleast_1d(y), 14))
        hit = self._columns.get(key)
        if hit is None:
            col = np.maximum(self.spec.excitation_column(self.nodes, y), 0.0)
            mass = float(np.sum(col * self.weights))
            hit = (mass, col)
            self._columns[key] = hit
        return hit

    def sample_offspring_locations(self, parent_xs, child_parent_idx, rng) -> np.ndarray:
        """Locations for children grouped by `child_parent_idx` into parent_xs rows."""
        total = child_parent_idx.shape[0]
        if total == 0:
            return np.empty((0, self.domain.dim))
        if self._flat_offspring:
            return self.domain.uniform(rng, total)
        if self._sep_offspring:
            pts = _inverse_cdf_1d(
                self._sep_shape, self.domain.lo[0], self.domain.hi[0], rng.random(total)
            )
            return pts[:, None]
        out = np.empty((total, self.domain.dim))
        order = np.argsort(child_parent_idx, kind="stable")
        sorted_idx = child_parent_idx[order]
        starts = np.searchsorted(sorted_idx, np.arange(parent_xs.shape[0]), side="left")
        ends = np.searchsorted(sorted_idx, np.arange(parent_xs.shape[0]), side="right")
        for p in range(parent_xs.shape[0]):
            span = order[starts[p] : ends[p]]
            if span.size == 0:
                continue
            _, col = self._column(parent_xs[p])
            if self.domain.dim == 1:
                pts = _inverse_cdf_1d(
                    col, self.domain.lo[0], self.domain.hi[0], rng.random(span.size)
                )
                out[span] = pts[:, None]
            else:
                out[span] = sample_location(
                    col, self.domain, u=np.empty(span.size), rng=rng
                )
        return out


# ---------------------------------------------------------------------------
# Branching growth (shared by single clusters, full processes and oracles)


def _grow(
    engine: ClusterEngine,
    t0: np.ndarray,
    x0: np.ndarray,
    xi0: np.ndarray,
    sim0: np.ndarray,
    gen0: int,
    horizon: float,
    rng,
    with_lifetimes: bool,
    budget: int,
):
    """Breadth-first branching from seed events; returns (arrays, censored).

    Seed events are included in the output.  `sim0` carries an opaque
    per-seed label (cluster or replication index) through to all offspring.
    Local parent indices refer to positions in the returned arrays; seeds
    get parent -1.
    """
    spec = engine.spec
    k0 = t0.shape[0]
    seeds_lt = (
        spec.lifetimes.sample(rng, k0) if with_lifetimes else np.full(k0, np.nan)
    )
    out_t = [t0]
    out_x = [x0]
    out_xi = [xi0]
    out_sim = [sim0]
    out_gen = [np.full(k0, gen0, dtype=np.int64)]
    out_par = [np.full(k0, -1, dtype=np.int64)]
    out_lt = [seeds_lt]

    censored = False
    n_out = k0
    cur_t, cur_x, cur_xi, cur_sim = t0, x0, xi0, sim0
    cur_base = 0  # index of current generation's first event in the output
    gen = gen0
    while cur_t.shape[0] > 0:
        tau = (
            np.full(cur_t.shape[0], np.inf)
            if math.isinf(horizon)
            else horizon - cur_t
        )
        h_mass = (
            np.full(cur_t.shape[0], spec.excitation.l1_norm)
            if math.isinf(horizon)
            else spec.excitation.H(np.maximum(tau, 0.0))
        )
        mu = cur_xi * engine.offspring_mass(cur_x) * h_mass
        counts = rng.poisson(mu)
        total = int(counts.sum())
        if total == 0:
            break
        if n_out + total > budget:
            keep = budget - n_out
            cum = np.cumsum(counts)
            cut = np.searchsorted(cum, keep, side="right")
            counts = counts.copy()
            counts[cut + 1 :] = 0
            if cut < counts.shape[0]:
                counts[cut] = max(0, keep - (cum[cut - 1] if cut > 0 else 0))
            total = int(counts.sum())
            censored = True
        rep = np.repeat(np.arange(cur_t.shape[0]), counts)
        q = 1.0 - rng.random(total)
        delays = spec.excitation.sample_delay(q, tau[rep])
        times = cur_t[rep] + delays
        locs = engine.sample_offspring_locations(cur_x, rep, rng)
        xis = spec.marks.sample_xi(rng, total)
        lts = (
            spec.lifetimes.sample(rng, total)
            if with_lifetimes
            else np.full(total, np.nan)
        )
        gen += 1
        out_t.append(times)
        out_x.append(locs)
        out_xi.append(xis)
        out_sim.append(cur_sim[rep])
        out_gen.append(np.full(total, gen, dtype=np.int64))
        out_par.append(cur_base + rep)
        out_lt.append(lts)
        cur_base = n_out
        n_out += total
        cur_t, cur_x, cur_xi, cur_sim = times, locs, xis, cur_sim[rep]
        if censored:
            break

    arrays = (
        np.concatenate(out_t),
        np.concatenate(out_x, axis=0),
        np.concatenate(out_xi),
        np.concatenate(out_sim),
        np.concatenate(out_gen),
        np.concatenate(out_par),
        np.concatenate(out_lt),
    )
    return arrays, censored


def _as_stream(rng) -> SplitStream:
    if isinstance(rng, SplitStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SplitStream(int(rng))
    raise TypeError("simulate_process needs a SplitStream or integer seed")


# ---------------------------------------------------------------------------
# Public operations


def simulate_process(
    spec: ModelSpec,
    horizon: float,
    rng,
    with_lifetimes: bool = True,
    cap: int = DEFAULT_EVENT_CAP,
    engine: ClusterEngine | None = None,
) -> Realization:
    """Simulate the linear process on [0, horizon] from an empty history.

    Clusters use per-immigrant counter-split substreams, so the result is
    bit-identical however clusters are scheduled.  Hitting the event cap
    returns a partial realization flagged `censored`.
    """
    if not spec.nonlinearity.is_identity:
        raise RequiresThinningError(
            "cluster simulation covers linear models only; use thinning"
        )
    stream = _as_stream(rng)
    engine = engine or ClusterEngine(spec)

    imm_gen = stream.child(0).generator()
    n_imm = imm_gen.poisson(engine.alpha * horizon)
    times = np.sort(horizon * (1.0 - imm_gen.random(n_imm)))
    locs = engine.sample_immigrant_locations(n_imm, imm_gen)
    xis = spec.marks.sample_xi(imm_gen, n_imm)

    cluster_seq = SplitStream(stream.seed, stream.path + (1,))
    base_bitgen = np.random.Philox(
        np.random.SeedSequence(entropy=cluster_seq.seed, spawn_key=cluster_seq.path)
    )

    chunks = []
    censored = False
    used = 0
    for i in range(n_imm):
        if used >= cap:
            censored = True
            break
        crng = np.random.Generator(base_bitgen.jumped(i + 1))
        arrays, cens = _grow(
            engine,
            times[i : i + 1],
            locs[i : i + 1],
            xis[i : i + 1],
            np.full(1, i, dtype=np.int64),
            0,
            horizon,
            crng,
            with_lifetimes,
            cap - used,
        )
        censored = censored or cens
        used += arrays[0].shape[0]
        chunks.append(arrays)

    return _assemble(spec, chunks, horizon, stream.describe(), censored)


def _assemble(spec, chunks, horizon, seed_info, censored) -> Realization:
    if not chunks:
        r = Realization.empty(spec.domain.dim, horizon, seed_info)
        r.censored = censored
        return r
    t = np.concatenate([c[0] for c in chunks])
    x = np.concatenate([c[1] for c in chunks], axis=0)
    xi = np.concatenate([c[2] for c in chunks])
    cl = np.concatenate([c[3] for c in chunks])
    gen = np.concatenate([c[4] for c in chunks])
    lt = np.concatenate([c[6] for c in chunks])
    # global parent pointers from per-chunk local ones
    par = []
    offset = 0
    for c in chunks:
        local = c[5]
        par.append(np.where(local < 0, -1, local + offset))
        offset += c[0].shape[0]
    par = np.concatenate(par)
    seq = np.arange(t.shape[0])
    order = np.lexsort((seq, cl, t))  # time first, cluster then sequence break ties
    inv = np.empty_like(order)
    inv[order] = np.arange(order.shape[0])
    new_par = np.where(par >= 0, inv[np.clip(par, 0, None)], -1)
    r = Realization(
        times=t[order],
        locations=x[order],
        generations=gen[order],
        parent_ids=new_par[order],
        mark_scalars=xi[order],
        lifetimes=lt[order],
        ids=np.arange(t.shape[0], dtype=np.int64),
        horizon=float(horizon),
        seed=seed_info,
        censored=censored,
    )
    return r


def simulate_cluster(
    x0,
    t0: float,
    spec: ModelSpec,
    horizon: float,
    rng,
    with_lifetimes: bool = True,
    cap: int = DEFAULT_EVENT_CAP,
    engine: ClusterEngine | None = None,
) -> Realization:
    """Simulate one cluster rooted at (t0, x0), root included.

    `horizon` may be inf only for stable models (the event cap still
    guards termination).
    """
    if not spec.nonlinearity.is_identity:
        raise RequiresThinningError(
            "cluster simulation covers linear models only; use thinning"
        )
    stream = _as_stream(rng)
    engine = engine or ClusterEngine(spec)
    gen = stream.generator()
    x0 = np.atleast_1d(np.asarray(x0, float))
    xi0 = spec.marks.sample_xi(gen, 1)
    arrays, censored = _grow(
        engine,
        np.array([float(t0)]),
        x0[None, :],
        xi0,
        np.zeros(1, dtype=np.int64),
        0,
        horizon,
        gen,
        with_lifetimes,
        cap,
    )
    return _assemble(spec, [arrays], horizon, stream.describe(), censored)


def population_count(real: Realization, t: float, box=None) -> int:
    """Q_t(A): events born by t and still alive at t with location in the box."""
    if not real.has_lifetimes():
        raise NoLifetimesError("population counts need lifetimes on every event")
    if len(real) == 0:
        return 0
    alive = (real.times <= t) & (t < real.times + real.lifetimes)
    if box is not None:
        lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
        alive &= ((real.locations >= lo) & (real.locations <= hi)).all(axis=1)
    return int(np.count_nonzero(alive))


def simulate_clusters_batched(
    spec: ModelSpec,
    roots_x: np.ndarray,
    horizon: float,
    rng: np.random.Generator,
    with_lifetimes: bool = True,
    cap: int = DEFAULT_EVENT_CAP,
    engine: ClusterEngine | None = None,
):
    """Grow many independent clusters at once (Monte Carlo oracles).

    All roots start at t=0; returns raw arrays (t, x, xi, sim_idx, gen,
    parent, lifetime) plus a censoring flag.  Uses a single generator, so
    it trades per-cluster reproducibility for batching speed.
    """
    engine = engine or ClusterEngine(spec)
    k = roots_x.shape[0]
    xi0 = spec.marks.sample_xi(rng, k)
    arrays, censored = _grow(
        engine,
        np.zeros(k),
        np.atleast_2d(roots_x),
        xi0,
        np.arange(k, dtype=np.int64),
        0,
        horizon,
        rng,
        with_lifetimes,
        cap,
    )
    return arrays, censored
