"""Value distributions on a bounded support and the normalized incomplete
moments Z_m that drive the closed-form equilibrium bids.

Every distribution exposes cdf/pdf/quantile (scalar or array), an
inverse-transform sampler fed by a caller-supplied RNG, and a text
``descriptor`` used in serialized artifacts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import kernels
from .quadrature import QuadratureConfig


class ValueDistribution:
    """Continuous i.i.d. value distribution supported on [0, v_bar]."""

    v_bar: float
    _family = None  # (name, params) advertised to the compiled quadrature

    def cdf(self, v):
        raise NotImplementedError

    def pdf(self, v):
        raise NotImplementedError

    def quantile(self, q):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform sampling; the RNG state is owned by the caller."""
        return self.quantile(rng.random(size))

    def breakpoints(self):
        """Interior points where the density is non-smooth; quadrature splits
        integrals there.  None for smooth families."""
        return None

    def descriptor(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(ValueDistribution):
    v_bar: float = 1.0

    def __post_init__(self):
        if not self.v_bar > 0:
            raise ValueError("v_bar must be positive")
        object.__setattr__(self, "_family", ("uniform", (self.v_bar,)))

    def cdf(self, v):
        return np.clip(np.asarray(v, dtype=float) / self.v_bar, 0.0, 1.0)[()]

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        return np.where((v >= 0.0) & (v <= self.v_bar), 1.0 / self.v_bar, 0.0)[()]

    def quantile(self, q):
        return np.asarray(q, dtype=float) * self.v_bar

    def descriptor(self) -> str:
        return f"uniform(v_bar={self.v_bar!r})"


@dataclass(frozen=True)
class Power(ValueDistribution):
    """F(v) = (v / v_bar)^a with shape a > 0."""

    v_bar: float = 1.0
    a: float = 2.0

    def __post_init__(self):
        if not self.v_bar > 0:
            raise ValueError("v_bar must be positive")
        if not self.a > 0:
            raise ValueError("shape a must be positive")
        object.__setattr__(self, "_family", ("power", (self.v_bar, self.a)))

    def cdf(self, v):
        w = np.clip(np.asarray(v, dtype=float) / self.v_bar, 0.0, 1.0)
        return (w**self.a)[()]

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = self.a * (v / self.v_bar) ** (self.a - 1.0) / self.v_bar
        inside = (v > 0.0) & (v <= self.v_bar)
        at_zero = 0.0 if self.a > 1.0 else (1.0 / self.v_bar if self.a == 1.0 else np.inf)
        return np.where(inside, raw, np.where(v == 0.0, at_zero, 0.0))[()]

    def quantile(self, q):
        return self.v_bar * np.asarray(q, dtype=float) ** (1.0 / self.a)

    def descriptor(self) -> str:
        return f"power(v_bar={self.v_bar!r}, a={self.a!r})"


@dataclass(frozen=True)
class TruncatedExponential(ValueDistribution):
    """Exponential with the given rate, truncated and renormalized to [0, v_bar]."""

    v_bar: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if not self.v_bar > 0:
            raise ValueError("v_bar must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        object.__setattr__(self, "_family", ("truncexp", (self.v_bar, self.rate)))

    def cdf(self, v):
        v = np.clip(np.asarray(v, dtype=float), 0.0, self.v_bar)
        return (np.expm1(-self.rate * v) / np.expm1(-self.rate * self.v_bar))[()]

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        norm = -np.expm1(-self.rate * self.v_bar)
        raw = self.rate * np.exp(-self.rate * v) / norm
        return np.where((v >= 0.0) & (v <= self.v_bar), raw, 0.0)[()]

    def quantile(self, q):
        q = np.asarray(q, dtype=float)
        return (-np.log1p(q * np.expm1(-self.rate * self.v_bar)) / self.rate)[()]

    def descriptor(self) -> str:
        return f"truncexp(v_bar={self.v_bar!r}, rate={self.rate!r})"


class EmpiricalCDF(ValueDistribution):
    """Piecewise-linear CDF loaded from a two-column ``value cdf`` text file.

    Knots must increase strictly in both columns, start at ``0 0`` and end at
    ``v_bar 1``.  The density is the piecewise-constant slope, so the
    distribution is continuous but has kinks at the knots.
    """

    def __init__(self, knots_v, knots_p, source: str = "inline"):
        knots_v = np.asarray(knots_v, dtype=float)
        knots_p = np.asarray(knots_p, dtype=float)
        if knots_v.ndim != 1 or knots_v.shape != knots_p.shape or knots_v.size < 2:
            raise ValueError("empirical CDF needs matching 1-D knot arrays, >= 2 rows")
        if not (np.all(np.diff(knots_v) > 0) and np.all(np.diff(knots_p) > 0)):
            raise ValueError("empirical CDF columns must be strictly increasing")
        if knots_v[0] != 0.0 or knots_p[0] != 0.0:
            raise ValueError("empirical CDF must start at the row '0 0'")
        if knots_p[-1] != 1.0:
            raise ValueError("empirical CDF must end with cdf value 1")
        self.knots_v = knots_v
        self.knots_p = knots_p
        self.v_bar = float(knots_v[-1])
        self.source = source
        self._slopes = np.diff(knots_p) / np.diff(knots_v)

    @classmethod
    def from_text(cls, text: str, source: str = "inline") -> "EmpiricalCDF":
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected two columns, got {len(parts)}")
            rows.append((float(parts[0]), float(parts[1])))
        if not rows:
            raise ValueError("empirical CDF file has no data rows")
        arr = np.asarray(rows)
        return cls(arr[:, 0], arr[:, 1], source=source)

    @classmethod
    def from_file(cls, path) -> "EmpiricalCDF":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), source=str(path))

    def cdf(self, v):
        return np.interp(np.asarray(v, dtype=float), self.knots_v, self.knots_p)[()]

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        idx = np.clip(
            np.searchsorted(self.knots_v, v, side="right") - 1, 0, self._slopes.size - 1
        )
        return np.where((v >= 0.0) & (v <= self.v_bar), self._slopes[idx], 0.0)[()]

    def quantile(self, q):
        return np.interp(np.asarray(q, dtype=float), self.knots_p, self.knots_v)[()]

    def breakpoints(self):
        return self.knots_v[1:-1]

    def descriptor(self) -> str:
        return f"empirical(path={self.source})"


_DESCRIPTOR_RE = re.compile(r"^\s*([a-z\-]+)\s*\((.*)\)\s*$")


def distribution_from_descriptor(text: str) -> ValueDistribution:
    """Rebuild a distribution from its ``descriptor()`` string."""
    m = _DESCRIPTOR_RE.match(text)
    if not m:
        raise ValueError(f"unparseable distribution descriptor: {text!r}")
    name, body = m.group(1), m.group(2)
    kwargs = {}
    if body.strip():
        for part in body.split(","):
            key, _, val = part.partition("=")
            kwargs[key.strip()] = val.strip()
    if name == "uniform":
        return Uniform(v_bar=float(kwargs.get("v_bar", 1.0)))
    if name == "power":
        return Power(v_bar=float(kwargs.get("v_bar", 1.0)), a=float(kwargs.get("a", 2.0)))
    if name == "truncexp":
        return TruncatedExponential(
            v_bar=float(kwargs.get("v_bar", 1.0)), rate=float(kwargs.get("rate", 1.0))
        )
    if name == "empirical":
        return EmpiricalCDF.from_file(kwargs["path"])
    raise ValueError(f"unknown distribution family {name!r}")


def z_function(m: int, v: float, dist: ValueDistribution,
               cfg: QuadratureConfig | None = None) -> float:
    """Z_m(v) = F(v)^(-m) * integral of F(u)^m over [0, v].

    Defined as 0 at v = 0 (the integrand is bounded by v, so the limit holds).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    v = float(v)
    if v < 0.0 or v > dist.v_bar * (1.0 + 1e-12):
        raise ValueError("v outside the support")
    if v == 0.0:
        return 0.0
    Fv = float(dist.cdf(v))
    if Fv <= 0.0:
        raise ValueError("support violation: F(v) = 0 for v > 0")
    return kernels.z_quadrature(dist, m, v, Fv, cfg or QuadratureConfig())


def z_derivative_identity_check(m: int, v: float, dist: ValueDistribution,
                                h: float, cfg: QuadratureConfig | None = None) -> float:
    """Residual of d/dv (v - Z_m(v)) = m * f(v)/F(v) * Z_m(v) by central difference.

    The identity is exact; the residual is pure finite-difference error, O(h^2)
    wherever the density is smooth.
    """
    if h <= 0.0:
        raise ValueError("step h must be positive")
    if v - h <= 0.0 or v + h > dist.v_bar:
        raise ValueError("v too close to the support boundary for the chosen h")
    cfg = cfg or QuadratureConfig()

    def g(t: float) -> float:
        return t - z_function(m, t, dist, cfg)

    lhs = (g(v + h) - g(v - h)) / (2.0 * h)
    rhs = m * float(dist.pdf(v)) / float(dist.cdf(v)) * z_function(m, v, dist, cfg)
    return abs(lhs - rhs)
