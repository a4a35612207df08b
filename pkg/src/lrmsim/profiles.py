"""Initial occupation profiles and their scale integrals.

A profile is a continuous, strictly positive function on a truncated domain
``[lo, hi]``, canonically represented piecewise-linearly.  Built-ins compile to
that representation (exactly for ``constant`` and ``ramp``, at a configurable
knot density for ``bump``).  The associated scale integral of the inverse
square profile is evaluated in closed form per segment.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, ScaleRangeError


@dataclass(frozen=True)
class OccupationProfile:
    kind: str
    domain: tuple[float, float]
    knots_x: np.ndarray = field(repr=False)
    knots_l: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kx, kl = np.asarray(self.knots_x, float), np.asarray(self.knots_l, float)
        if kx.ndim != 1 or kx.shape != kl.shape or len(kx) < 2:
            raise InvalidParameterError("profile needs >= 2 knots of matching shape")
        if np.any(np.diff(kx) <= 0.0):
            raise InvalidParameterError("profile knots must be strictly increasing in x")
        if np.any(kl <= 0.0):
            raise InvalidParameterError("profile must be positive at every knot")
        lo, hi = self.domain
        if not (lo < hi) or lo < kx[0] - 1e-12 or hi > kx[-1] + 1e-12:
            raise InvalidParameterError(f"domain {self.domain} not covered by knots [{kx[0]}, {kx[-1]}]")
        object.__setattr__(self, "knots_x", kx)
        object.__setattr__(self, "knots_l", kl)

    # -- evaluation ---------------------------------------------------------

    def value(self, x):
        """L0(x); linear between knots. Raises outside the domain."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
            raise InvalidParameterError(f"x outside profile domain {self.domain}")
        return np.interp(x, self.knots_x, self.knots_l)

    @property
    def is_unit(self) -> bool:
        return self.kind == "constant" and abs(self.params["c"] - 1.0) < 1e-15

    def min_value(self) -> float:
        lo, hi = self.domain
        inside = (self.knots_x >= lo) & (self.knots_x <= hi)
        cands = [self.value(lo), self.value(hi)]
        if inside.any():
            cands.append(self.knots_l[inside].min())
        return float(min(cands))

    def satisfies_nonexplosion(self):
        """Divergence of the inverse-square integrals on both half-lines.

        Decidable only for built-ins extended to all of R (they are bounded
        above, which is sufficient); user piecewise-linear profiles live on a
        truncated domain, so the answer is None (unknown).
        """
        return True if self.kind in ("constant", "bump", "ramp") else None

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        if self.kind == "pwl":
            return {
                "kind": "pwl",
                "knots": [[float(x), float(l)] for x, l in zip(self.knots_x, self.knots_l)],
                "domain": [float(self.domain[0]), float(self.domain[1])],
            }
        out = {"kind": self.kind, "domain": [float(self.domain[0]), float(self.domain[1])]}
        out.update(self.params)
        return out

    def profile_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def constant(c: float, domain=(-8.0, 8.0)) -> OccupationProfile:
    if c <= 0.0:
        raise InvalidParameterError(f"constant profile needs c > 0, got {c}")
    lo, hi = float(domain[0]), float(domain[1])
    return OccupationProfile("constant", (lo, hi), np.array([lo, hi]), np.array([c, c]), {"c": float(c)})


def unit(domain=(-8.0, 8.0)) -> OccupationProfile:
    return constant(1.0, domain)


def piecewise_linear(knots, domain=None) -> OccupationProfile:
    knots = sorted((float(x), float(l)) for x, l in knots)
    kx = np.array([k[0] for k in knots])
    kl = np.array([k[1] for k in knots])
    if domain is None:
        domain = (kx[0], kx[-1])
    return OccupationProfile("pwl", (float(domain[0]), float(domain[1])), kx, kl)


def bump(height=1.0, width=1.0, base=1.0, domain=(-8.0, 8.0), knots=513) -> OccupationProfile:
    """base + height * exp(-x^2 / (2 width^2)), compiled to a knot table."""
    if base <= 0.0 or width <= 0.0 or base + height <= 0.0:
        raise InvalidParameterError("bump profile must stay positive")
    lo, hi = float(domain[0]), float(domain[1])
    kx = np.linspace(lo, hi, int(knots))
    kl = base + height * np.exp(-(kx**2) / (2.0 * width**2))
    return OccupationProfile(
        "bump", (lo, hi), kx, kl,
        {"height": float(height), "width": float(width), "base": float(base), "knots": int(knots)},
    )


def ramp(left=1.0, right=2.0, x1=-1.0, x2=1.0, domain=(-8.0, 8.0)) -> OccupationProfile:
    """Plateau `left`, linear rise on [x1, x2], plateau `right`. Exact."""
    if x2 <= x1:
        raise InvalidParameterError("ramp needs x1 < x2")
    lo, hi = float(domain[0]), float(domain[1])
    kx = np.array([min(lo, x1) - 1.0, x1, x2, max(hi, x2) + 1.0])
    kl = np.array([left, left, right, right], dtype=float)
    return OccupationProfile(
        "ramp", (lo, hi), kx, kl,
        {"left": float(left), "right": float(right), "x1": float(x1), "x2": float(x2)},
    )


def from_json_dict(spec: dict) -> OccupationProfile:
    kind = spec.get("kind")
    domain = tuple(spec.get("domain", (-8.0, 8.0)))
    if kind == "constant":
        return constant(spec["c"], domain)
    if kind == "pwl":
        return piecewise_linear(spec["knots"], domain)
    if kind == "bump":
        return bump(spec.get("height", 1.0), spec.get("width", 1.0), spec.get("base", 1.0),
                    domain, spec.get("knots", 513))
    if kind == "ramp":
        return ramp(spec.get("left", 1.0), spec.get("right", 2.0), spec.get("x1", -1.0),
                    spec.get("x2", 1.0), domain)
    raise InvalidParameterError(f"unknown profile kind {kind!r}")


# -- lattice restriction ----------------------------------------------------

def lattice_indices(profile: OccupationProfile, n: int) -> tuple[int, int]:
    """Index range [i_min, i_max] of 2^-n Z inside the profile domain."""
    if n < 0:
        raise InvalidParameterError(f"mesh exponent must be >= 0, got {n}")
    lo, hi = profile.domain
    scale = 2.0**n
    i_min = int(math.ceil(lo * scale - 1e-9))
    i_max = int(math.floor(hi * scale + 1e-9))
    if i_min > i_max:
        raise InvalidParameterError(f"lattice 2^-{n} Z does not intersect domain {profile.domain}")
    return i_min, i_max


def lattice_restrict(profile: OccupationProfile, n: int):
    """Positions and values of L0 on 2^-n Z intersected with the domain."""
    i_min, i_max = lattice_indices(profile, n)
    positions = np.arange(i_min, i_max + 1) * 2.0**-n
    # clip fp spill at the very edge of the domain
    positions = np.clip(positions, profile.domain[0], profile.domain[1])
    return positions, profile.value(positions)


# -- scale tables -----------------------------------------------------------

@dataclass
class ScaleTable:
    """Strictly increasing scale function with exact per-segment evaluation.

    Two segment kinds:

    * ``inv_square`` - S'(x) = 1/L(x)^2 with L linear per segment (slope ``m``,
      left value ``a``); the integral and its inverse are closed-form.
    * ``linear`` - S linear between knots (used by environment scales built by
      trapezoid / edge sums).
    """

    xs: np.ndarray
    ss: np.ndarray
    x0: float
    seg_kind: str = "linear"
    seg_a: np.ndarray | None = None
    seg_m: np.ndarray | None = None

    def __post_init__(self):
        if np.any(np.diff(self.ss) <= 0.0):
            raise InvalidParameterError("scale table must be strictly increasing")

    @property
    def s_range(self) -> tuple[float, float]:
        return float(self.ss[0]), float(self.ss[-1])

    def _segment_of_x(self, x):
        return np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.xs[0] - 1e-9) or np.any(x > self.xs[-1] + 1e-9):
            raise ScaleRangeError(f"x outside scale table range [{self.xs[0]}, {self.xs[-1]}]")
        i = self._segment_of_x(x)
        d = x - self.xs[i]
        if self.seg_kind == "inv_square":
            a, m = self.seg_a[i], self.seg_m[i]
            out = self.ss[i] + d / (a * (a + m * d))
        else:
            slope = (self.ss[i + 1] - self.ss[i]) / (self.xs[i + 1] - self.xs[i])
            out = self.ss[i] + slope * d
        return out if out.ndim else float(out)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self.ss[0] - 1e-12) or np.any(y > self.ss[-1] + 1e-12):
            raise ScaleRangeError(f"y outside scale range [{self.ss[0]}, {self.ss[-1]}]")
        i = np.clip(np.searchsorted(self.ss, y, side="right") - 1, 0, len(self.ss) - 2)
        dy = y - self.ss[i]
        if self.seg_kind == "inv_square":
            a, m = self.seg_a[i], self.seg_m[i]
            out = self.xs[i] + dy * a * a / (1.0 - dy * a * m)
        else:
            slope = (self.xs[i + 1] - self.xs[i]) / (self.ss[i + 1] - self.ss[i])
            out = self.xs[i] + slope * dy
        return out if out.ndim else float(out)


def scale_s0(profile: OccupationProfile, x0: float = 0.0) -> ScaleTable:
    """Scale integral of 1/L0^2 anchored at x0, exact per pwl segment."""
    lo, hi = profile.domain
    if not (lo - 1e-12 <= x0 <= hi + 1e-12):
        raise InvalidParameterError(f"anchor x0={x0} outside domain {profile.domain}")
    kx, kl = profile.knots_x, profile.knots_l
    xs = np.unique(np.concatenate([kx, [lo, hi, x0]]))
    xs = xs[(xs >= lo - 1e-12) & (xs <= hi + 1e-12)]
    lvals = profile.value(xs)
    a = lvals[:-1]
    m = np.diff(lvals) / np.diff(xs)
    d = np.diff(xs)
    increments = d / (a * (a + m * d))
    ss = np.concatenate([[0.0], np.cumsum(increments)])
    anchor = ss[np.argmin(np.abs(xs - x0))]
    return ScaleTable(xs, ss - anchor, float(x0), "inv_square", a, m)


def invert_scale(table: ScaleTable, y: float) -> float:
    """Unique x with S(x) = y; ScaleRangeError signals domain truncation."""
    return table.inverse(y)
