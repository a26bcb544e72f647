"""Event and realization containers plus NDJSON serialization.

Realizations are stored as structure-of-arrays for speed; `Event` objects
are materialized on demand.  NDJSON lines follow the wire format
{id, t, x: [...], gen, parent, xi, lifetime}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Event:
    """One marked spatiotemporal point."""

    id: int
    time: float
    location: tuple[float, ...]
    generation: int
    parent_id: int | None
    mark_scalar: float
    lifetime: float | None


@dataclass
class Realization:
    """Time-sorted collection of events on [0, horizon].

    `parent_ids` uses -1 for immigrants.  `lifetimes` holds NaN when the
    run was generated without lifetimes.  `censored` flags realizations
    truncated by the explosion guard.
    """

    times: np.ndarray
    locations: np.ndarray  # (n, m)
    generations: np.ndarray
    parent_ids: np.ndarray  # -1 for immigrants
    mark_scalars: np.ndarray
    lifetimes: np.ndarray
    ids: np.ndarray
    horizon: float
    seed: dict = field(default_factory=dict)
    censored: bool = False

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def dim(self) -> int:
        return int(self.locations.shape[1]) if self.locations.ndim == 2 else 1

    def has_lifetimes(self) -> bool:
        return len(self) == 0 or bool(np.isfinite(self.lifetimes).all())

    @property
    def events(self) -> list[Event]:
        out = []
        for i in range(len(self)):
            pid = int(self.parent_ids[i])
            lt = float(self.lifetimes[i])
            out.append(
                Event(
                    id=int(self.ids[i]),
                    time=float(self.times[i]),
                    location=tuple(float(v) for v in np.atleast_1d(self.locations[i])),
                    generation=int(self.generations[i]),
                    parent_id=None if pid < 0 else pid,
                    mark_scalar=float(self.mark_scalars[i]),
                    lifetime=None if math.isnan(lt) else lt,
                )
            )
        return out

    @classmethod
    def empty(cls, dim: int, horizon: float, seed: dict | None = None) -> "Realization":
        return cls(
            times=np.empty(0),
            locations=np.empty((0, dim)),
            generations=np.empty(0, dtype=np.int64),
            parent_ids=np.full(0, -1, dtype=np.int64),
            mark_scalars=np.empty(0),
            lifetimes=np.empty(0),
            ids=np.empty(0, dtype=np.int64),
            horizon=float(horizon),
            seed=seed or {},
        )

    def count_in(self, t: float, box=None) -> int:
        """Number of events with time <= t and location inside `box`."""
        sel = self.times <= t
        if box is not None:
            lo, hi = np.asarray(box[0], float), np.asarray(box[1], float)
            sel &= ((self.locations >= lo) & (self.locations <= hi)).all(axis=1)
        return int(np.count_nonzero(sel))

    def to_ndjson(self) -> str:
        lines = []
        for i in range(len(self)):
            pid = int(self.parent_ids[i])
            lt = float(self.lifetimes[i])
            rec = {
                "id": int(self.ids[i]),
                "t": float(self.times[i]),
                "x": [float(v) for v in np.atleast_1d(self.locations[i])],
                "gen": int(self.generations[i]),
                "parent": None if pid < 0 else pid,
                "xi": float(self.mark_scalars[i]),
                "lifetime": None if math.isnan(lt) else lt,
            }
            lines.append(json.dumps(rec, separators=(",", ":")))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_ndjson(cls, text: str, horizon: float = math.inf) -> "Realization":
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        n = len(recs)
        dim = len(recs[0]["x"]) if n else 1
        r = cls.empty(dim, horizon)
        if not n:
            return r
        r.times = np.array([x["t"] for x in recs], float)
        r.locations = np.array([x["x"] for x in recs], float)
        r.generations = np.array([x.get("gen", 0) for x in recs], np.int64)
        r.parent_ids = np.array(
            [-1 if x.get("parent") is None else x["parent"] for x in recs], np.int64
        )
        r.mark_scalars = np.array([x.get("xi", 1.0) for x in recs], float)
        r.lifetimes = np.array(
            [math.nan if x.get("lifetime") is None else x["lifetime"] for x in recs],
            float,
        )
        r.ids = np.array([x["id"] for x in recs], np.int64)
        return r
