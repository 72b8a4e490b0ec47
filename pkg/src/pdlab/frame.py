"""Modulation functions and Littlewood-Paley frames.

The radial profile is the integrated bump

    S(t) = int_0^t exp(-1/(tau(1-tau))) dtau / int_0^1 exp(-1/(tau(1-tau))) dtau

clamped to 0 on t<=0 and 1 on t>=1, so plateau values are attained exactly;
everything downstream that needs hard zeros or an exact partition of unity
relies on that clamping.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, GridSpec, fft_forward, fft_inverse

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    ti = t[inside]
    with np.errstate(over="ignore", divide="ignore"):
        out[inside] = np.exp(-1.0 / (ti * (1.0 - ti)))
    return out


def _bump_integral(t: np.ndarray) -> np.ndarray:
    # Gauss-Legendre on [0, t]; the integrand is analytic inside and flat to
    # all orders at both endpoints, so 96 nodes reach rounding accuracy.
    half = 0.5 * t[..., None]
    tau = half * (_GL_NODES + 1.0)
    return np.sum(_bump(tau) * _GL_WEIGHTS, axis=-1) * half[..., 0]


_BUMP_TOTAL = float(_bump_integral(np.asarray([1.0]))[0])


def smoothstep(t) -> np.ndarray:
    """Monotone C-infinity ramp, exactly 0 for t<=0 and exactly 1 for t>=1."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    out[t <= 0.0] = 0.0
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        out[mid] = np.clip(_bump_integral(t[mid]) / _BUMP_TOTAL, 0.0, 1.0)
    return out


@dataclass(frozen=True)
class ModulationFunction:
    """psi with psi=1 on |xi|<=r, psi=0 on |xi|>=R, radially non-increasing."""

    r: float
    R: float
    profile: str = "smoothstep"

    def __post_init__(self) -> None:
        if not (0 < self.r < self.R):
            raise ValueError(f"need 0 < r < R, got r={self.r}, R={self.R}")
        if self.R < 1:
            raise ValueError(f"need R >= 1, got R={self.R}")
        if self.profile != "smoothstep":
            raise ValueError(f"unknown profile {self.profile!r}")

    def radial(self, t) -> np.ndarray:
        """psi as a function of |xi|."""
        t = np.abs(np.asarray(t, dtype=float))
        return smoothstep((self.R - t) / (self.R - self.r))

    def __call__(self, xi) -> np.ndarray:
        """psi(xi) for frequency vectors xi, shape (..., n) or scalar radius."""
        xi = np.asarray(xi, dtype=float)
        return self.radial(xi if xi.ndim == 0 else np.linalg.norm(np.atleast_2d(xi), axis=-1))

    def corona(self, t) -> np.ndarray:
        """phi(|xi|) = psi(|xi|) - psi(2|xi|)."""
        t = np.abs(np.asarray(t, dtype=float))
        return self.radial(t) - self.radial(2.0 * t)


def make_modulation(r: float, R: float) -> ModulationFunction:
    return ModulationFunction(r=r, R=R)


def min_separation(psi: ModulationFunction) -> int:
    """Least integer h >= 2 with 2R < r*2^h."""
    h = 2
    while 2.0 * psi.R >= psi.r * 2.0**h:
        h += 1
    return h


@dataclass(frozen=True)
class LPFrame:
    """Dyadic frame: blocks Phi_0 = psi, Phi_j = phi(2^{-j} .) with phi = psi - psi(2 .)."""

    psi: ModulationFunction
    h: int = 3
    _block_cache: dict = field(default_factory=dict, hash=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.h < 2:
            raise ValueError("separation integer h must be >= 2")
        if not 2.0 * self.psi.R < self.psi.r * 2.0**self.h:
            raise ValueError(
                f"need 2R < r*2^h: 2*{self.psi.R} vs {self.psi.r}*2^{self.h}"
            )

    @property
    def r(self) -> float:
        return self.psi.r

    @property
    def R(self) -> float:
        return self.psi.R

    def block_radial(self, j: int, t) -> np.ndarray:
        """Phi_j on radii t; j=0 is the ball block psi."""
        if j == 0:
            return self.psi.radial(t)
        return self.psi.corona(np.asarray(t, dtype=float) * 2.0 ** (-j))

    def ball_radial(self, j: int, t) -> np.ndarray:
        """psi(2^{-j}|xi|)."""
        return self.psi.radial(np.asarray(t, dtype=float) * 2.0 ** (-j))

    def j_saturation(self, spec: GridSpec) -> int:
        """Smallest m with psi(2^{-m} eta) = 1 on the whole lattice."""
        m = 0
        while self.psi.r * 2.0**m < spec.nyquist_radius:
            m += 1
        return m

    def lattice_blocks(self, spec: GridSpec, j_max: int | None = None) -> list[np.ndarray]:
        """Tabulated Phi_0..Phi_{j_max}; cached per grid."""
        if j_max is None:
            j_max = self.j_saturation(spec)
        key = (spec.n, spec.N, j_max)
        if key not in self._block_cache:
            rad = spec.freq_radius()
            self._block_cache[key] = [self.block_radial(j, rad) for j in range(j_max + 1)]
        return self._block_cache[key]


def lp_blocks(frame: LPFrame, spec: GridSpec, j_max: int | None = None) -> list[np.ndarray]:
    """Multiplier tables Phi_0..Phi_{j_max} summing to 1 at every lattice eta.

    Raises if j_max is too small for the partition to close at high frequency.
    """
    sat = frame.j_saturation(spec)
    if j_max is None:
        j_max = sat
    elif j_max < sat:
        raise ValueError(
            f"j_max={j_max} insufficient: partition closes only from j_max={sat}"
        )
    return frame.lattice_blocks(spec, j_max)


def block_project(u: GridFunction, frame: LPFrame, j: int, kind: str = "corona") -> GridFunction:
    """u_j = phi(2^{-j}D)u (corona) or u^j = psi(2^{-j}D)u (ball); j<0 gives 0."""
    if j < 0:
        return GridFunction(u.spec, np.zeros(u.spec.shape, dtype=complex))
    rad = u.spec.freq_radius()
    if kind == "corona":
        mult = frame.block_radial(j, rad)
    elif kind == "ball":
        mult = frame.ball_radial(j, rad)
    else:
        raise ValueError(f"kind must be 'corona' or 'ball', got {kind!r}")
    c = fft_forward(u)
    return fft_inverse(type(c)(u.spec, c.coeffs * mult))


DEFAULT_FRAME = LPFrame(psi=ModulationFunction(r=1.0, R=2.0), h=3)
