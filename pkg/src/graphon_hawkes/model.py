"""Model parameterization: domain, baseline, graphon, excitation, marks,
lifetimes, nonlinearity, and validation.

A model is a frozen `ModelSpec`; after `validate_model` returns an empty
report it is safe to share across workers.  All spatial functions evaluate
vectorized over arrays of points of shape (k, m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    InvalidParameterError,
    NegativeTimeError,
    OutOfDomainError,
)

DEFAULT_GRID_N = 512


# ---------------------------------------------------------------------------
# Domain


@dataclass(frozen=True, eq=False)
class SpatialDomain:
    """Compact hyperrectangle [lower, upper] in R^m."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo, up = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.ndim != 1 or lo.shape != up.shape:
            raise InvalidParameterError("domain bounds must be equal-length vectors")
        if not (np.isfinite(lo).all() and np.isfinite(up).all()):
            raise InvalidParameterError("domain bounds must be finite")
        if not (lo < up).all():
            raise InvalidParameterError("domain must satisfy lower < upper")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower, float)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.upper, float)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, x: np.ndarray) -> bool:
        x = np.atleast_1d(np.asarray(x, float))
        return bool((x >= self.lo - 1e-12).all() and (x <= self.hi + 1e-12).all())

    def grid(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Midpoint grid with n cells per axis: (nodes (n^m, m), weights (n^m,))."""
        axes = [
            self.lo[a] + (np.arange(n) + 0.5) * (self.hi[a] - self.lo[a]) / n
            for a in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=1)
        w = self.volume / n**self.dim
        return nodes, np.full(nodes.shape[0], w)

    def uniform(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lo + rng.random((size, self.dim)) * (self.hi - self.lo)


# ---------------------------------------------------------------------------
# Spatial profiles (functions X -> R) and pair functions (X^2 -> R)


@dataclass(frozen=True, eq=False)
class SpatialProfile:
    """Function on the domain: constant, affine, or grid-backed.

    grid values live on uniform per-axis cells (`axis_counts`), piecewise
    constant, or linearly interpolated between cell midpoints in 1-d.
    """

    family: str  # "constant" | "affine" | "identity" | "grid"
    value: float = 0.0
    intercept: float = 0.0
    slope: tuple[float, ...] = ()
    values: np.ndarray | None = None
    axis_counts: tuple[int, ...] = ()
    interp: str = "pw-constant"  # or "linear" (1-d grids)

    def __call__(self, pts: np.ndarray, domain: SpatialDomain) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        if self.family == "constant":
            return np.full(pts.shape[0], float(self.value))
        if self.family == "identity":
            # product of coordinates; reduces to a(x)=x in 1-d
            return np.prod(pts, axis=1)
        if self.family == "affine":
            slope = np.asarray(self.slope if self.slope else (0.0,) * domain.dim)
            return self.intercept + pts @ slope
        if self.family == "grid":
            return _grid_eval_profile(self, pts, domain)
        raise InvalidParameterError(f"unknown profile family {self.family!r}")


def _cell_index(pts, domain, counts):
    """Flat uniform-cell index of each point; clipped to the boundary cells."""
    counts = np.asarray(counts, int)
    rel = (pts - domain.lo) / (domain.hi - domain.lo)
    idx = np.clip((rel * counts).astype(int), 0, counts - 1)
    flat = idx[:, 0]
    for a in range(1, len(counts)):
        flat = flat * counts[a] + idx[:, a]
    return flat


def _grid_eval_profile(profile, pts, domain):
    vals = np.asarray(profile.values, float).ravel()
    counts = profile.axis_counts or (vals.size,)
    if profile.interp == "linear" and domain.dim == 1:
        n = counts[0]
        mids = domain.lo[0] + (np.arange(n) + 0.5) * (domain.hi[0] - domain.lo[0]) / n
        return np.interp(pts[:, 0], mids, vals)
    return vals[_cell_index(pts, domain, counts)]


@dataclass(frozen=True, eq=False)
class PairFunction:
    """Function on domain^2: constant, rank-one c*a(x)*a(y), or grid-backed."""

    family: str  # "constant" | "rank-one" | "grid"
    value: float = 0.0
    coeff: float = 1.0
    profile: SpatialProfile | None = None
    values: np.ndarray | None = None  # (ncells, ncells)
    axis_counts: tuple[int, ...] = ()
    interp: str = "pw-constant"  # or "bilinear" (1-d grids)

    def pairs(self, xs: np.ndarray, ys: np.ndarray, domain: SpatialDomain) -> np.ndarray:
        """Evaluate at matched point pairs; xs, ys of shape (k, m)."""
        xs = np.atleast_2d(np.asarray(xs, float))
        ys = np.atleast_2d(np.asarray(ys, float))
        if self.family == "constant":
            return np.full(xs.shape[0], float(self.value))
        if self.family == "rank-one":
            a = self.profile or SpatialProfile("identity")
            return self.coeff * a(xs, domain) * a(ys, domain)
        if self.family == "grid":
            return self._grid_pairs(xs, ys, domain)
        raise InvalidParameterError(f"unknown pair-function family {self.family!r}")

    def column(self, zs: np.ndarray, y: np.ndarray, domain: SpatialDomain) -> np.ndarray:
        """z -> F(z, y) for a single y over many z; shape (k,)."""
        zs = np.atleast_2d(np.asarray(zs, float))
        ys = np.broadcast_to(np.atleast_1d(y), (zs.shape[0], zs.shape[1]))
        return self.pairs(zs, ys, domain)

    def _grid_pairs(self, xs, ys, domain):
        vals = np.asarray(self.values, float)
        counts = self.axis_counts or (vals.shape[0],)
        if self.interp == "bilinear" and domain.dim == 1:
            n = counts[0]
            mids = domain.lo[0] + (np.arange(n) + 0.5) * (domain.hi[0] - domain.lo[0]) / n
            fi = np.clip(np.interp(xs[:, 0], mids, np.arange(n)), 0, n - 1)
            fj = np.clip(np.interp(ys[:, 0], mids, np.arange(n)), 0, n - 1)
            i0, j0 = fi.astype(int), fj.astype(int)
            i1, j1 = np.minimum(i0 + 1, n - 1), np.minimum(j0 + 1, n - 1)
            ti, tj = fi - i0, fj - j0
            return (
                vals[i0, j0] * (1 - ti) * (1 - tj)
                + vals[i1, j0] * ti * (1 - tj)
                + vals[i0, j1] * (1 - ti) * tj
                + vals[i1, j1] * ti * tj
            )
        i = _cell_index(xs, domain, counts)
        j = _cell_index(ys, domain, counts)
        return vals[i, j]

    def sup_bound(self) -> float:
        if self.family == "constant":
            return abs(float(self.value))
        if self.family == "grid":
            return float(np.max(np.abs(self.values)))
        return math.inf  # rank-one bound depends on the profile; probed in validate


# ---------------------------------------------------------------------------
# Excitation kernel


@dataclass(frozen=True, eq=False)
class ExcitationKernel:
    """Temporal excitation h >= 0 with recorded L1 mass.

    Analytic families are a normalized shape scaled by `l1`:
      exponential(rate):      h(t) = l1 * rate * exp(-rate t)
      power-law(p, cutoff c): h(t) = l1 * (p-1) c^(p-1) (c+t)^(-p)
    Table kernels are piecewise constant on [breaks[k], breaks[k+1]) and 0
    beyond the last breakpoint; their l1 is derived.
    """

    family: str  # "exponential" | "power-law" | "table"
    rate: float = 1.0
    exponent: float = 2.0
    cutoff: float = 1.0
    l1: float = 1.0
    breaks: np.ndarray | None = None  # (K+1,), starting at 0
    table_values: np.ndarray | None = None  # (K,)

    @cached_property
    def l1_norm(self) -> float:
        if self.family == "table":
            return float(np.sum(self.table_values * np.diff(self.breaks)))
        return float(self.l1)

    @cached_property
    def sup_norm(self) -> float:
        if self.family == "exponential":
            return self.l1 * self.rate
        if self.family == "power-law":
            return self.l1 * (self.exponent - 1) / self.cutoff
        return float(np.max(self.table_values)) if len(self.table_values) else 0.0

    def h(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        if self.family == "exponential":
            return self.l1 * self.rate * np.exp(-self.rate * t)
        if self.family == "power-law":
            p, c = self.exponent, self.cutoff
            return self.l1 * (p - 1) * c ** (p - 1) * (c + t) ** (-p)
        idx = np.searchsorted(self.breaks, t, side="right") - 1
        vals = np.where(
            (idx >= 0) & (idx < len(self.table_values)) & (t >= 0),
            np.asarray(self.table_values)[np.clip(idx, 0, len(self.table_values) - 1)],
            0.0,
        )
        return vals

    def h_envelope(self, t) -> np.ndarray:
        """Nonincreasing majorant of h; equals h for the monotone families."""
        if self.family != "table":
            return self.h(t)
        env = np.maximum.accumulate(np.asarray(self.table_values)[::-1])[::-1]
        idx = np.searchsorted(self.breaks, np.asarray(t, float), side="right") - 1
        out = np.where(
            (idx >= 0) & (idx < len(env)), env[np.clip(idx, 0, len(env) - 1)], 0.0
        )
        return np.where(np.asarray(t) < 0, env[0] if len(env) else 0.0, out)

    def H(self, u) -> np.ndarray:
        """Integrated excitation: H(u) = int_0^u h, nondecreasing, H(inf)=l1."""
        u = np.asarray(u, float)
        if np.any(u < 0):
            raise NegativeTimeError("integrated excitation requires u >= 0")
        if self.family == "exponential":
            return self.l1 * (1.0 - np.exp(-self.rate * u))
        if self.family == "power-law":
            p, c = self.exponent, self.cutoff
            return self.l1 * (1.0 - (c / (c + u)) ** (p - 1))
        widths = np.diff(self.breaks)
        cum = np.concatenate([[0.0], np.cumsum(self.table_values * widths)])
        idx = np.clip(np.searchsorted(self.breaks, u, side="right") - 1, 0, len(widths))
        base = cum[idx]
        inner = idx < len(widths)
        extra = np.where(
            inner,
            np.asarray(self.table_values)[np.clip(idx, 0, len(widths) - 1)]
            * (u - self.breaks[np.clip(idx, 0, len(widths) - 1)]),
            0.0,
        )
        return np.where(u >= self.breaks[-1], cum[-1], base + extra)

    def sample_delay(self, q: np.ndarray, tau) -> np.ndarray:
        """Invert s -> H(s)/H(tau) at probabilities q in (0, 1]."""
        q = np.asarray(q, float)
        tau = np.asarray(tau, float)
        if self.family == "exponential":
            full = 1.0 - np.exp(-self.rate * tau)
            return -np.log1p(-q * full) / self.rate
        if self.family == "power-law":
            p, c = self.exponent, self.cutoff
            full = 1.0 - (c / (c + tau)) ** (p - 1)
            return c * ((1.0 - q * full) ** (-1.0 / (p - 1)) - 1.0)
        # table: monotone bisection on H(s) - q H(tau), tolerance 1e-10 in time
        target = q * self.H(tau)
        lo = np.zeros_like(target)
        hi = np.minimum(np.broadcast_to(tau, target.shape).astype(float), self.breaks[-1])
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = self.H(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.max(hi - lo) < 1e-10:
                break
        return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Marks, lifetimes, nonlinearity


@dataclass(frozen=True, eq=False)
class MarkModel:
    """Separable marks B_xy = xi * b(x, y), xi drawn i.i.d. per event.

    Supported xi laws keep the Laplace transform closed-form:
      deterministic(a), exponential(mean), gamma(shape, scale).
    """

    kind: str = "unmarked"  # or "scaled-profile"
    profile: PairFunction = field(default_factory=lambda: PairFunction("constant", value=1.0))
    xi_family: str = "deterministic"
    xi_value: float = 1.0  # deterministic value / exponential mean / gamma scale
    xi_shape: float = 1.0  # gamma shape

    @property
    def b(self) -> PairFunction:
        if self.kind == "unmarked":
            return PairFunction("constant", value=1.0)
        return self.profile

    @property
    def mean_xi(self) -> float:
        if self.kind == "unmarked" or self.xi_family == "deterministic":
            return float(self.xi_value) if self.kind != "unmarked" else 1.0
        if self.xi_family == "exponential":
            return float(self.xi_value)
        if self.xi_family == "gamma":
            return float(self.xi_shape * self.xi_value)
        raise InvalidParameterError(f"unknown mark scalar family {self.xi_family!r}")

    def laplace_xi(self, s) -> np.ndarray:
        """L_xi(s) = E[exp(-s xi)] for s >= 0."""
        s = np.asarray(s, float)
        if self.kind == "unmarked":
            return np.exp(-s)
        if self.xi_family == "deterministic":
            return np.exp(-self.xi_value * s)
        if self.xi_family == "exponential":
            return 1.0 / (1.0 + self.xi_value * s)
        if self.xi_family == "gamma":
            return (1.0 + self.xi_value * s) ** (-self.xi_shape)
        raise InvalidParameterError(f"unknown mark scalar family {self.xi_family!r}")

    def sample_xi(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "unmarked" or self.xi_family == "deterministic":
            v = 1.0 if self.kind == "unmarked" else float(self.xi_value)
            return np.full(size, v)
        if self.xi_family == "exponential":
            return rng.exponential(self.xi_value, size)
        return rng.gamma(self.xi_shape, self.xi_value, size)


@dataclass(frozen=True, eq=False)
class LifetimeModel:
    """Event lifetimes: deterministic(tau) or exponential(rate)."""

    family: str = "exponential"
    tau: float = 1.0
    rate: float = 1.0

    def survival(self, u) -> np.ndarray:
        u = np.asarray(u, float)
        if self.family == "deterministic":
            return (u < self.tau).astype(float)
        return np.exp(-self.rate * u)

    def cdf(self, u) -> np.ndarray:
        return 1.0 - self.survival(u)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == "deterministic":
            return np.full(size, self.tau)
        return rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self) -> float:
        return self.tau if self.family == "deterministic" else 1.0 / self.rate


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Rate function f applied to baseline + excitation; Lipschitz, f >= 0."""

    family: str = "identity"
    cap: float = math.inf  # clipped-linear
    scale: float = 1.0  # sigmoid-scaled
    lipschitz: float = 1.0

    @property
    def is_identity(self) -> bool:
        return self.family == "identity"

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, float)
        if self.family == "identity":
            return u
        if self.family == "clipped-linear":
            return np.minimum(u, self.cap)
        if self.family == "sigmoid-scaled":
            return self.scale * np.tanh(u / self.scale)
        raise InvalidParameterError(f"unknown nonlinearity {self.family!r}")


# ---------------------------------------------------------------------------
# The assembled model


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Complete parameterization of a graphon Hawkes process.

    Immutable after construction; validate with `validate_model` before use.
    `grid_n` is the per-axis resolution of the standard evaluation grid.
    """

    domain: SpatialDomain
    baseline: SpatialProfile
    graphon: PairFunction
    excitation: ExcitationKernel
    marks: MarkModel = field(default_factory=MarkModel)
    lifetimes: LifetimeModel = field(default_factory=LifetimeModel)
    nonlinearity: Nonlinearity = field(default_factory=Nonlinearity)
    c_w: float = math.inf  # uniform bound C_W on the graphon
    symmetric: bool = False
    grid_n: int = DEFAULT_GRID_N
    tv_baseline: float | None = None
    tv_graphon: float | None = None

    @cached_property
    def std_grid(self) -> tuple[np.ndarray, np.ndarray]:
        return self.domain.grid(self.grid_n)

    @cached_property
    def alpha(self) -> float:
        """Total baseline mass, by quadrature on the standard grid."""
        nodes, w = self.std_grid
        return float(np.sum(self.baseline(nodes, self.domain) * w))

    def baseline_on(self, nodes: np.ndarray) -> np.ndarray:
        return self.baseline(nodes, self.domain)

    def excitation_column(self, zs: np.ndarray, y: np.ndarray) -> np.ndarray:
        """z -> b(z, y) W(z, y): the spatial offspring profile of a parent at y."""
        return self.marks.b.column(zs, y, self.domain) * self.graphon.column(
            zs, y, self.domain
        )

    @property
    def c_b(self) -> float:
        """C_B: uniform bound on E[B_xy] (mean scalar times the profile bound)."""
        b_sup = self.marks.b.sup_bound()
        if not math.isfinite(b_sup):
            nodes, _ = _probe_nodes(self.domain)
            xs, ys = _probe_pairs(nodes)
            b_sup = float(np.max(self.marks.b.pairs(xs, ys, self.domain)))
        return self.marks.mean_xi * b_sup

    def graphon_bound(self) -> float:
        if math.isfinite(self.c_w):
            return self.c_w
        w_sup = self.graphon.sup_bound()
        if not math.isfinite(w_sup):
            nodes, _ = _probe_nodes(self.domain)
            xs, ys = _probe_pairs(nodes)
            w_sup = float(np.max(self.graphon.pairs(xs, ys, self.domain)))
        return w_sup


def _probe_nodes(domain, n=33):
    return domain.grid(n)


def _probe_pairs(nodes, cap=4096):
    k = nodes.shape[0]
    idx = np.arange(k)
    if k * k > cap:
        idx = np.arange(0, k, max(1, math.ceil(k / math.sqrt(cap))))
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    return nodes[ii.ravel()], nodes[jj.ravel()]


# ---------------------------------------------------------------------------
# Operations


def validate_model(spec: ModelSpec) -> list[str]:
    """Check every type invariant on a deterministic probe grid.

    Returns a list of violation strings, empty iff the model is valid.
    Pure: identical specs produce identical reports.
    """
    report: list[str] = []
    nodes, _ = _probe_nodes(spec.domain)

    lam = spec.baseline(nodes, spec.domain)
    if not np.isfinite(lam).all():
        report.append("invalid-parameter: baseline not finite")
    elif (lam < 0).any():
        report.append("negativity: baseline")
    if not math.isfinite(spec.alpha):
        report.append("invalid-parameter: baseline mass not finite")

    xs, ys = _probe_pairs(nodes)
    wvals = spec.graphon.pairs(xs, ys, spec.domain)
    if not np.isfinite(wvals).all():
        report.append("invalid-parameter: graphon not finite")
    elif (wvals < 0).any():
        report.append("negativity: graphon")
    cw = spec.graphon_bound()
    if not math.isfinite(cw):
        report.append("invalid-parameter: graphon unbounded")
    elif np.isfinite(wvals).all() and (wvals > cw + 1e-9).any():
        report.append("invalid-parameter: graphon exceeds C_W")
    if spec.symmetric and np.isfinite(wvals).all():
        sym = spec.graphon.pairs(ys, xs, spec.domain)
        if np.max(np.abs(wvals - sym)) > 1e-9:
            report.append("invalid-parameter: graphon asymmetric")

    if not math.isfinite(spec.excitation.l1_norm) or spec.excitation.l1_norm < 0:
        report.append("invalid-parameter: excitation not L1")
    else:
        tprobe = np.linspace(0.0, 8.0 / max(spec.excitation.rate, 1e-12), 65)
        if spec.excitation.family == "table":
            tprobe = np.linspace(0.0, float(spec.excitation.breaks[-1]), 65)
        hv = spec.excitation.h(tprobe)
        if not np.isfinite(hv).all():
            report.append("invalid-parameter: excitation not finite")
        elif (hv < 0).any():
            report.append("negativity: excitation")

    bvals = spec.marks.b.pairs(xs, ys, spec.domain)
    if (bvals < 0).any():
        report.append("negativity: marks")
    if not math.isfinite(spec.c_b) or spec.marks.mean_xi < 0:
        report.append("invalid-parameter: marks C_B not finite")

    if spec.lifetimes.family == "deterministic" and spec.lifetimes.tau <= 0:
        report.append("invalid-parameter: lifetime tau must be positive")
    if spec.lifetimes.family == "exponential" and spec.lifetimes.rate <= 0:
        report.append("invalid-parameter: lifetime rate must be positive")

    f = spec.nonlinearity
    if not math.isfinite(f.lipschitz) or f.lipschitz < 0:
        report.append("invalid-parameter: nonlinearity Lipschitz constant")
    else:
        uprobe = np.linspace(0.0, 10.0, 41)
        fv = f(uprobe)
        if (fv < -1e-12).any():
            report.append("negativity: nonlinearity")

    return report


def eval_kernel_density(spec: ModelSpec, x, y) -> float:
    """c_x * E[B_xy] * W(x, y): the spatial kernel density of T_hom / ||h||_1."""
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    if not (spec.domain.contains(x) and spec.domain.contains(y)):
        raise OutOfDomainError("kernel density evaluated outside the domain")
    c = spec.nonlinearity.lipschitz
    eb = spec.marks.mean_xi * spec.marks.b.pairs(x[None, :], y[None, :], spec.domain)
    w = spec.graphon.pairs(x[None, :], y[None, :], spec.domain)
    return float(c * eb[0] * w[0])


def kernel_density_matrix(spec: ModelSpec, nodes: np.ndarray) -> np.ndarray:
    """c * E[B] * W at all node pairs; shape (k, k), rows=x, cols=y."""
    k = nodes.shape[0]
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    c = spec.nonlinearity.lipschitz
    eb = spec.marks.mean_xi * spec.marks.b.pairs(
        nodes[ii.ravel()], nodes[jj.ravel()], spec.domain
    )
    w = spec.graphon.pairs(nodes[ii.ravel()], nodes[jj.ravel()], spec.domain)
    return (c * eb * w).reshape(k, k)


def integrated_excitation(h: ExcitationKernel, u) -> np.ndarray | float:
    """H(u) = int_0^u h(v) dv."""
    out = h.H(u)
    return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out


# ---------------------------------------------------------------------------
# Convenience constructors used throughout tests and experiments


def constant_model(
    w: float = 0.5,
    lam: float = 1.0,
    beta: float = 1.0,
    l1: float = 1.0,
    lifetime_rate: float = 1.0,
    grid_n: int = DEFAULT_GRID_N,
) -> ModelSpec:
    """Homogeneous model on [0,1]: W=w, baseline=lam, h = l1*beta*e^(-beta t)."""
    return ModelSpec(
        domain=SpatialDomain((0.0,), (1.0,)),
        baseline=SpatialProfile("constant", value=lam),
        graphon=PairFunction("constant", value=w),
        excitation=ExcitationKernel("exponential", rate=beta, l1=l1),
        lifetimes=LifetimeModel("exponential", rate=lifetime_rate),
        c_w=w,
        symmetric=True,
        grid_n=grid_n,
        tv_baseline=0.0,
        tv_graphon=0.0,
    )


def rank_one_model(
    coeff: float = 1.5,
    lam: float = 1.0,
    grid_n: int = DEFAULT_GRID_N,
) -> ModelSpec:
    """W(x,y) = coeff * x * y on [0,1] with unit-mass exponential excitation."""
    return ModelSpec(
        domain=SpatialDomain((0.0,), (1.0,)),
        baseline=SpatialProfile("constant", value=lam),
        graphon=PairFunction("rank-one", coeff=coeff, profile=SpatialProfile("identity")),
        excitation=ExcitationKernel("exponential", rate=1.0, l1=1.0),
        c_w=coeff,
        symmetric=True,
        grid_n=grid_n,
        tv_baseline=0.0,
    )
