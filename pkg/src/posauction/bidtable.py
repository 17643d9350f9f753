"""Equilibrium bid tables: sampled b*_j(v) on a value grid with monotone
piecewise-cubic evaluation, plus the text serialization used by the CLI.

File layout: one comment line, then ``n``, ``k``, ``betas``, ``dist`` and
``grid`` header entries, then one ``v b_1 ... b_k`` row per grid point.  Floats
are written with shortest round-trip formatting so that load/serialize is
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bayes import BayesSetting

_MAGIC = "# expressive-gfp equilibrium bid table"


@dataclass
class EquilibriumBidTable:
    grid: np.ndarray        # (G,) sorted values, grid[0] = 0, grid[-1] = v_bar
    bids: np.ndarray        # (G, k)
    n: int
    betas: np.ndarray       # (k,)
    dist_descriptor: str
    _interp: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        bids = np.asarray(self.bids, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least the two endpoints")
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if bids.shape != (grid.size, np.asarray(self.betas).size):
            raise ValueError("bid matrix shape must be (grid, positions)")
        self.grid = grid
        self.bids = bids
        self.betas = np.asarray(self.betas, dtype=float)

    @property
    def k(self) -> int:
        return self.betas.size

    def _interpolators(self):
        if self._interp is None:
            self._interp = [
                PchipInterpolator(self.grid, self.bids[:, j]) for j in range(self.k)
            ]
        return self._interp

    def evaluate(self, v):
        """Bid vectors at the given values: shape ``v.shape + (k,)``.

        Monotone cubic interpolation per slot, clamped into the invariant cone:
        non-negative, at most beta_j * v, and non-increasing across slots.
        """
        v = np.asarray(v, dtype=float)
        out = np.stack([interp(v) for interp in self._interpolators()], axis=-1)
        out = np.clip(out, 0.0, None)
        out = np.minimum(out, self.betas * v[..., None])
        return np.minimum.accumulate(out, axis=-1)

    def serialize(self) -> str:
        lines = [_MAGIC]
        lines.append(f"n {self.n}")
        lines.append(f"k {self.k}")
        lines.append("betas " + " ".join(repr(float(b)) for b in self.betas))
        lines.append(f"dist {self.dist_descriptor}")
        lines.append(f"grid {self.grid.size}")
        for g in range(self.grid.size):
            row = [repr(float(self.grid[g]))]
            row.extend(repr(float(b)) for b in self.bids[g])
            lines.append(" ".join(row))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.serialize())

    @classmethod
    def from_text(cls, text: str) -> "EquilibriumBidTable":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#"):
            raise ValueError("missing bid-table header comment")
        header = {}
        idx = 1
        for key in ("n", "k", "betas", "dist", "grid"):
            name, _, rest = lines[idx].partition(" ")
            if name != key:
                raise ValueError(f"expected header entry {key!r}, got {name!r}")
            header[key] = rest.strip()
            idx += 1
        n = int(header["n"])
        k = int(header["k"])
        betas = np.array([float(t) for t in header["betas"].split()])
        if betas.size != k:
            raise ValueError("betas length does not match k")
        gsize = int(header["grid"])
        rows = lines[idx:]
        if len(rows) != gsize:
            raise ValueError(f"expected {gsize} grid rows, found {len(rows)}")
        grid = np.empty(gsize)
        bids = np.empty((gsize, k))
        for g, row in enumerate(rows):
            parts = row.split()
            if len(parts) != k + 1:
                raise ValueError(f"grid row {g} has {len(parts)} columns, expected {k + 1}")
            grid[g] = float(parts[0])
            bids[g] = [float(t) for t in parts[1:]]
        return cls(grid=grid, bids=bids, n=n, betas=betas,
                   dist_descriptor=header["dist"])

    @classmethod
    def load(cls, path) -> "EquilibriumBidTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def tabulate_bstar(setting: BayesSetting, grid_size: int = 512) -> EquilibriumBidTable:
    """Sample b*_j over an even value grid including both endpoints.

    Column monotonicity is enforced on the sampled data (quadrature noise can
    dip by ~1e-12), which in turn makes the PCHIP evaluation monotone.
    """
    if grid_size < 2:
        raise ValueError("grid needs at least the two endpoints")
    grid = np.linspace(0.0, setting.dist.v_bar, grid_size)
    bids = np.empty((grid_size, setting.k))
    for g, v in enumerate(grid):
        for j in range(1, setting.k + 1):
            bids[g, j - 1] = setting.bstar(j, float(v))
    bids = np.maximum.accumulate(np.clip(bids, 0.0, None), axis=0)
    return EquilibriumBidTable(
        grid=grid,
        bids=bids,
        n=setting.n,
        betas=setting.curve.betas.copy(),
        dist_descriptor=setting.dist.descriptor(),
    )
