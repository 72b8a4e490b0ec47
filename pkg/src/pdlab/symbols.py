"""Symbols a(x,eta) on the discrete torus: construction, modulation,
twisted-diagonal localization, seminorms, and adjoints.

A symbol is realized on a grid as a table over (x-axes..., eta-axes...).
The partial Fourier transform in x maps the table to a_hat(xi, eta) with
xi in the same shifted integer layout as eta; that transform is exact on
the lattice and is where every support statement is checked.

Frequency rows with a component at -N/2 are zeroed when constructing
symbols, so conjugate-symmetry bookkeeping never enters.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frame import LPFrame, ModulationFunction, smoothstep
from .grid import GridFunction, GridSpec

TABLE_ENTRY_GUARD = 1 << 22  # complex entries; 64 MiB of table
DENSE_MATRIX_GUARD = 4096  # N^n cap for dense operator matrices


# ---------------------------------------------------------------------------
# multi-indices and finite-difference stencils


def as_multiindex(alpha, n: int) -> tuple[int, ...]:
    if np.isscalar(alpha):
        alpha = (int(alpha),) + (0,) * (n - 1)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n or any(a < 0 for a in alpha):
        raise ValueError(f"bad multi-index {alpha} for n={n}")
    return alpha


def _difference_stencil(alpha: tuple[int, ...], h: float) -> list[tuple[np.ndarray, float]]:
    """Iterated central differences: offsets and weights for D^alpha."""
    n = len(alpha)
    terms: list[tuple[np.ndarray, float]] = [(np.zeros(n), 1.0)]
    for axis, order in enumerate(alpha):
        for _ in range(order):
            nxt: dict[tuple, float] = {}
            for off, w in terms:
                for sgn in (+1.0, -1.0):
                    o = off.copy()
                    o[axis] += sgn * h
                    key = tuple(o)
                    nxt[key] = nxt.get(key, 0.0) + w * sgn / (2.0 * h)
            terms = [(np.asarray(k), w) for k, w in nxt.items()]
    return terms


def nyquist_mask(spec: GridSpec) -> np.ndarray:
    """1 except on rows with a frequency component equal to -N/2."""
    mesh = spec.freq_mesh()
    mask = np.ones(spec.shape)
    for m in mesh:
        mask[m == -spec.N // 2] = 0.0
    return mask


# ---------------------------------------------------------------------------
# base class


class Symbol:
    """Base symbol: order d, optional twisted-diagonal flag, lattice table."""

    d: float = 0.0
    tdc_B: float | None = None

    def eval(self, x: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """a(x,eta) for x, eta arrays of shape (..., n); off-lattice eta allowed."""
        raise NotImplementedError(f"{type(self).__name__} has no continuum evaluator")

    @property
    def has_eval(self) -> bool:
        return type(self).eval is not Symbol.eval

    def separable_terms(self, spec: GridSpec) -> list[tuple[np.ndarray, np.ndarray]] | None:
        """Terms (m_j over the x-grid, g_j over the eta-lattice) if a(x,eta)
        = sum_j m_j(x) g_j(eta); None when no such structure is known."""
        return None

    def spectral_terms(self, spec: GridSpec) -> list[tuple[np.ndarray, np.ndarray]] | None:
        """Terms (mhat_j over the shifted xi-lattice, g_j over eta) with
        a_hat(xi,eta) = sum_j mhat_j(xi) g_j(eta); exact where possible."""
        terms = self.separable_terms(spec)
        if terms is None:
            return None
        return [
            (np.fft.fftshift(np.fft.fftn(m)) / spec.npoints, g) for m, g in terms
        ]

    def table(self, spec: GridSpec) -> np.ndarray:
        """Dense table, shape spec.shape + spec.shape (x-axes then eta-axes)."""
        if spec.npoints**2 > TABLE_ENTRY_GUARD:
            raise ValueError(
                f"table would hold {spec.npoints**2} entries "
                f"(> {TABLE_ENTRY_GUARD}); use the structured paths"
            )
        terms = self.separable_terms(spec)
        if terms is not None:
            out = np.zeros(spec.shape + spec.shape, dtype=complex)
            for m, g in terms:
                out += np.multiply.outer(m, g)
            return out
        if self.has_eval:
            xs, es = lattice_pairs(spec)
            return self.eval(xs, es)
        raise NotImplementedError(f"{type(self).__name__} cannot be tabulated")


def lattice_pairs(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast (x, eta) meshes of shape spec.shape + spec.shape + (n,)."""
    xm = np.stack(spec.coord_mesh(), axis=-1)  # shape + (n,)
    em = np.stack([m.astype(float) for m in spec.freq_mesh()], axis=-1)
    ones = (1,) * spec.n
    xs = xm.reshape(spec.shape + ones + (spec.n,))
    es = em.reshape(ones + spec.shape + (spec.n,))
    return np.broadcast_arrays(xs, es)


def partial_ft(table: np.ndarray, spec: GridSpec) -> np.ndarray:
    """a_hat(xi,eta): coefficient transform over the x-axes, shifted layout."""
    axes = tuple(range(spec.n))
    out = np.fft.fftn(table, axes=axes) / spec.npoints
    return np.fft.fftshift(out, axes=axes)


def partial_ift(ahat: np.ndarray, spec: GridSpec) -> np.ndarray:
    axes = tuple(range(spec.n))
    return np.fft.ifftn(np.fft.ifftshift(ahat, axes=axes), axes=axes) * spec.npoints


def _resolve_spec(a: Symbol, spec: GridSpec | None) -> GridSpec:
    if spec is not None:
        return spec
    owned = getattr(a, "spec", None)
    if owned is None:
        raise ValueError(f"{type(a).__name__} carries no grid; pass spec explicitly")
    return owned


@dataclass
class TabulatedSymbol(Symbol):
    """Symbol known only through its lattice table.

    ahat optionally carries the exact partial FT the table was built from,
    so spectral hard zeros survive chained operations without FFT noise.
    """

    spec: GridSpec
    _table: np.ndarray
    d: float = 0.0
    tdc_B: float | None = None
    ahat: np.ndarray | None = None

    def table(self, spec: GridSpec) -> np.ndarray:
        if spec != self.spec:
            raise ValueError(f"tabulated on {self.spec}, requested {spec}")
        return self._table


def symbol_partial_ft(a: Symbol, spec: GridSpec) -> np.ndarray:
    """a_hat(xi,eta), through the most exact route the symbol offers:
    a construction-time spectral table, exact per-term x-spectra, or an
    FFT of the dense table as the last resort."""
    cached = getattr(a, "ahat", None)
    if cached is not None and getattr(a, "spec", None) == spec:
        return cached
    terms = a.spectral_terms(spec)
    if terms is not None:
        if spec.npoints**2 > TABLE_ENTRY_GUARD:
            raise ValueError(
                f"spectral table would hold {spec.npoints**2} entries "
                f"(> {TABLE_ENTRY_GUARD}); use the structured paths"
            )
        out = np.zeros(spec.shape + spec.shape, dtype=complex)
        for mhat, g in terms:
            out += np.multiply.outer(mhat, g)
        return out
    return partial_ft(a.table(spec), spec)


@dataclass
class SeparableSymbol(Symbol):
    """a(x,eta) = sum_j m_j(x) g_j(eta) with tabulated factors."""

    spec: GridSpec
    terms: list[tuple[np.ndarray, np.ndarray]]
    d: float = 0.0
    tdc_B: float | None = None

    def separable_terms(self, spec: GridSpec) -> list[tuple[np.ndarray, np.ndarray]]:
        if spec != self.spec:
            raise ValueError(f"realized on {self.spec}, requested {spec}")
        return self.terms


class ConstantSymbol(Symbol):
    """a(x,eta) = c exactly (no Nyquist masking: the identity stays exact)."""

    def __init__(self, c: complex = 1.0, d: float = 0.0):
        self.c = complex(c)
        self.d = d
        self.tdc_B = 1.0  # x-independent symbols satisfy the condition trivially

    def eval(self, x, eta):
        x = np.asarray(x, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], np.asarray(eta, dtype=float).shape[:-1])
        return np.full(shape, self.c, dtype=complex)

    def separable_terms(self, spec: GridSpec):
        return [(np.full(spec.shape, self.c, dtype=complex), np.ones(spec.shape))]


# ---------------------------------------------------------------------------
# radial bump


@dataclass(frozen=True)
class RadialBump:
    """Smooth profile: 0 off [a0,a1], 1 on [b0,b1], optional zero of order
    zero_order at zero_at (profile ~ (|t-zero_at|/zero_width)^r nearby)."""

    a0: float = 0.75
    a1: float = 1.25
    b0: float = 0.9
    b1: float = 1.1
    zero_order: int = 0
    zero_at: float = 1.0
    zero_width: float = 0.1

    def __post_init__(self) -> None:
        if not (0.0 < self.a0 < self.b0 <= self.b1 < self.a1):
            raise ValueError("need 0 < a0 < b0 <= b1 < a1")
        if self.zero_order < 0:
            raise ValueError("zero order must be >= 0")
        if self.zero_order > 0 and not (self.a0 < self.zero_at < self.a1):
            raise ValueError("marked zero must lie inside the support")

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        up = smoothstep((t - self.a0) / (self.b0 - self.a0))
        down = smoothstep((self.a1 - t) / (self.a1 - self.b1))
        out = up * down
        if self.zero_order > 0:
            out = out * np.minimum(1.0, np.abs(t - self.zero_at) / self.zero_width) ** self.zero_order
        return out

    @property
    def overlap_count(self) -> int:
        """Max dyadic scales active at one radius: ceil(log2(a1/a0)) + 1."""
        return int(np.ceil(np.log2(self.a1 / self.a0))) + 1


DEFAULT_BUMP = RadialBump()  # support [3/4,5/4], plateau [9/10,11/10]


# ---------------------------------------------------------------------------
# Ching symbol


class ChingSymbol(Symbol):
    """a(x,eta) = sum_{j=0}^{j_max} 2^{jd} e^{-i 2^j theta.x} A(2^{-j}|eta|).

    theta is an integer lattice vector. When |theta| exceeds the bump's outer
    radius a1, every x-frequency -2^j theta clears the eta support by a fixed
    angle, which puts the symbol in the twisted-diagonal class with
    B = a1/(|theta| - a1); that flag is set automatically.
    """

    def __init__(self, d: float, theta, A: RadialBump = DEFAULT_BUMP, j_max: int = 8):
        theta = tuple(int(t) for t in np.atleast_1d(theta))
        if all(t == 0 for t in theta):
            raise ValueError("theta must be a nonzero lattice vector")
        if j_max < 0:
            raise ValueError("j_max must be >= 0")
        self.d = float(d)
        self.theta = theta
        self.A = A
        self.j_max = int(j_max)
        tnorm = float(np.linalg.norm(theta))
        self.tdc_B = A.a1 / (tnorm - A.a1) if tnorm > A.a1 else None

    @property
    def n(self) -> int:
        return len(self.theta)

    def validate_for(self, spec: GridSpec) -> None:
        if spec.n != self.n:
            raise ValueError(f"theta has {self.n} components but grid has n={spec.n}")
        reach = 2.0**self.j_max * max(self.A.a1, float(np.linalg.norm(self.theta)))
        if reach > spec.N / 2:
            raise ValueError(
                f"truncation 2^{self.j_max} overflows Nyquist: reach {reach} > {spec.N // 2}"
            )

    def eval(self, x, eta):
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        phase = sum(x[..., i] * self.theta[i] for i in range(self.n))
        enorm = np.linalg.norm(eta, axis=-1)
        out = np.zeros(np.broadcast_shapes(phase.shape, enorm.shape), dtype=complex)
        for j in range(self.j_max + 1):
            amp = self.A(enorm * 2.0**-j)
            if np.all(amp == 0.0):
                continue
            out = out + (2.0 ** (j * self.d) * amp) * np.exp(-1j * 2.0**j * phase)
        return out

    def spectral_terms(self, spec: GridSpec) -> list[tuple[np.ndarray, np.ndarray]]:
        """Exact x-spectra: term j is a delta of weight 2^{jd} at -2^j theta
        (folded mod N onto the lattice, exact for grid exponentials)."""
        self.validate_for(spec)
        rad = spec.freq_radius()
        nyq = nyquist_mask(spec)
        half = spec.N // 2
        terms = []
        for j in range(self.j_max + 1):
            g = self.A(rad * 2.0**-j) * nyq
            if not np.any(g):
                continue
            mhat = np.zeros(spec.shape, dtype=complex)
            idx = tuple((-(2**j) * t + half) % spec.N for t in self.theta)
            mhat[idx] = 2.0 ** (j * self.d)
            terms.append((mhat, g))
        return terms

    def separable_terms(self, spec: GridSpec) -> list[tuple[np.ndarray, np.ndarray]]:
        self.validate_for(spec)
        mesh = spec.coord_mesh()
        phase = sum(m * t for m, t in zip(mesh, self.theta))
        rad = spec.freq_radius()
        nyq = nyquist_mask(spec)
        terms = []
        for j in range(self.j_max + 1):
            g = self.A(rad * 2.0**-j) * nyq
            if not np.any(g):
                continue
            m = 2.0 ** (j * self.d) * np.exp(-1j * 2.0**j * phase)
            terms.append((m.astype(complex), g))
        return terms


def ching_symbol(
    d: float,
    theta,
    A: RadialBump = DEFAULT_BUMP,
    j_max: int = 8,
    spec: GridSpec | None = None,
) -> ChingSymbol:
    """Ching series symbol; validates the Nyquist truncation when spec given."""
    sym = ChingSymbol(d, theta, A, j_max)
    if spec is not None:
        sym.validate_for(spec)
    return sym


# ---------------------------------------------------------------------------
# elementary symbols


class ElementarySymbol(Symbol):
    """a(x,eta) = sum_j m_j(x) Phi_j(eta) with the frame's blocks."""

    def __init__(self, multipliers: list[GridFunction], frame: LPFrame, d: float = 0.0):
        if not multipliers:
            raise ValueError("need at least one multiplier")
        spec = multipliers[0].spec
        if any(m.spec != spec for m in multipliers):
            raise ValueError("all multipliers must share one grid")
        self.multipliers = list(multipliers)
        self.frame = frame
        self.spec = spec
        self.d = float(d)
        self.tdc_B = None

    def eval(self, x, eta):
        # x must sit on the multiplier grid; eta may be off-lattice
        x = np.asarray(x, dtype=float)
        eta = np.asarray(eta, dtype=float)
        idx = np.rint(x / self.spec.spacing).astype(int) % self.spec.N
        enorm = np.linalg.norm(eta, axis=-1)
        out = np.zeros(np.broadcast_shapes(idx.shape[:-1], enorm.shape), dtype=complex)
        for j, m in enumerate(self.multipliers):
            mv = m.values[tuple(idx[..., i] for i in range(self.spec.n))]
            out = out + mv * self.frame.block_radial(j, enorm)
        return out

    def separable_terms(self, spec: GridSpec) -> list[tuple[np.ndarray, np.ndarray]]:
        if spec != self.spec:
            raise ValueError(f"realized on {self.spec}, requested {spec}")
        nyq = nyquist_mask(spec)
        blocks = self.frame.lattice_blocks(spec, len(self.multipliers) - 1)
        return [
            (m.values, blocks[j] * nyq) for j, m in enumerate(self.multipliers)
        ]


# ---------------------------------------------------------------------------
# modulation (symbol side)


def modulate_symbol(
    a: Symbol, m: int, psi: ModulationFunction, spec: GridSpec | None = None
) -> Symbol:
    """b_m(x,eta) = [psi(2^{-m}D_x)a](x,eta) * psi(2^{-m}eta)."""
    spec = _resolve_spec(a, spec)
    scale = 2.0**-m
    mult = psi.radial(spec.freq_radius() * scale)
    saturated = bool(np.all(mult == 1.0))  # plateau covers the lattice: exact no-op
    terms = a.separable_terms(spec)
    if terms is not None:
        out_terms = []
        for mx, g in terms:
            if saturated:
                mx_f = mx
            else:
                chat = np.fft.fftshift(np.fft.fftn(mx)) / spec.npoints
                mx_f = np.fft.ifftn(np.fft.ifftshift(chat * mult)) * spec.npoints
            out_terms.append((mx_f, g * mult))
        return SeparableSymbol(spec, out_terms, d=a.d, tdc_B=a.tdc_B)
    tab = a.table(spec)
    if saturated:
        filtered = tab.copy()
    else:
        ahat = partial_ft(tab, spec)
        filtered = partial_ift(ahat * mult.reshape(spec.shape + (1,) * spec.n), spec)
    filtered = filtered * mult.reshape((1,) * spec.n + spec.shape)
    return TabulatedSymbol(spec, filtered, d=a.d, tdc_B=a.tdc_B)


# ---------------------------------------------------------------------------
# twisted-diagonal cutoff and localization


@dataclass(frozen=True)
class ChiCutoff:
    """chi(xi,eta) = theta1(|eta|) * theta2(|xi|/|eta|): vanishes for |eta|<=1
    and for |xi|>=|eta|, equals 1 on {|eta|>=2, 2|xi|<=|eta|}."""

    def from_radii(self, xi_norm, eta_norm) -> np.ndarray:
        xi_norm = np.asarray(xi_norm, dtype=float)
        eta_norm = np.asarray(eta_norm, dtype=float)
        t1 = smoothstep(eta_norm - 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(eta_norm > 0.0, xi_norm / np.maximum(eta_norm, 1e-300), np.inf)
        t2 = smoothstep(2.0 * (1.0 - ratio))
        return t1 * t2

    def __call__(self, xi, eta) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        return self.from_radii(np.linalg.norm(xi, axis=-1), np.linalg.norm(eta, axis=-1))


def build_chi() -> ChiCutoff:
    return ChiCutoff()


def _sum_radius_mesh(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """(|xi+eta|, |eta|) over the (xi, eta) product lattice."""
    f = spec.axis_freqs().astype(float)
    if spec.n == 1:
        s = f[:, None] + f[None, :]
        return np.abs(s), np.abs(f)[None, :]
    xi0, xi1 = np.meshgrid(f, f, indexing="ij")
    et0, et1 = np.meshgrid(f, f, indexing="ij")
    s0 = xi0[:, :, None, None] + et0[None, None, :, :]
    s1 = xi1[:, :, None, None] + et1[None, None, :, :]
    sum_rad = np.sqrt(s0**2 + s1**2)
    eta_rad = np.sqrt(et0**2 + et1**2)[None, None, :, :]
    return sum_rad, eta_rad


def localize_symbol(a: Symbol, eps: float, spec: GridSpec | None = None) -> TabulatedSymbol:
    """a_chi,eps with hat(a_chi,eps)(xi,eta) = a_hat(xi,eta) chi(xi+eta, eps*eta).

    The result's partial FT is exactly zero wherever 1+|xi+eta| > 2 eps |eta|.
    """
    spec = _resolve_spec(a, spec)
    if not (0.0 < eps <= 1.0):
        raise ValueError("eps must lie in (0, 1]")
    chi = build_chi()
    ahat = symbol_partial_ft(a, spec)
    sum_rad, eta_rad = _sum_radius_mesh(spec)
    masked = ahat * chi.from_radii(sum_rad, eps * eta_rad)
    return TabulatedSymbol(spec, partial_ift(masked, spec), d=a.d, ahat=masked)


def mask_twisted_diagonal(a: Symbol, B: float, spec: GridSpec | None = None) -> TabulatedSymbol:
    """Force the condition a_hat(xi,eta) = 0 where B(1+|xi+eta|) < |eta|."""
    spec = _resolve_spec(a, spec)
    if B < 1.0:
        raise ValueError("B must be >= 1")
    sum_rad, eta_rad = _sum_radius_mesh(spec)
    ahat = symbol_partial_ft(a, spec) * (B * (1.0 + sum_rad) >= eta_rad)
    return TabulatedSymbol(spec, partial_ift(ahat, spec), d=a.d, tdc_B=B, ahat=ahat)


@dataclass(frozen=True)
class TdcReport:
    holds: bool
    violation_mass: float
    B: float
    tau: float


def check_twisted_diagonal(
    a: Symbol, B: float, tau: float = 1e-10, spec: GridSpec | None = None
) -> TdcReport:
    """Relative squared mass of a_hat where B(|xi+eta|+1) < |eta|."""
    spec = _resolve_spec(a, spec)
    ahat = symbol_partial_ft(a, spec)
    sum_rad, eta_rad = _sum_radius_mesh(spec)
    forbidden = B * (sum_rad + 1.0) < eta_rad
    total = float(np.sum(np.abs(ahat) ** 2))
    if total == 0.0:
        return TdcReport(True, 0.0, B, tau)
    bad = float(np.sum(np.abs(ahat[forbidden]) ** 2))
    mass = bad / total
    return TdcReport(mass <= tau, mass, B, tau)


# ---------------------------------------------------------------------------
# seminorms


def symbol_seminorm(a: Symbol, alpha, beta, spec: GridSpec | None = None) -> float:
    """sup over sampled lattice (x,eta) of |D^alpha_eta D^beta_x a| / (1+|eta|)^{d-|a|+|b|}.

    Derivatives are iterated central differences: eta-step 0.5 through the
    continuum evaluator when available, else step 1 on the table; x-step is
    one grid spacing.  Points within max(2,|alpha|) cells of the frequency
    boundary are excluded from the sup.
    """
    spec = _resolve_spec(a, spec)
    alpha = as_multiindex(alpha, spec.n)
    beta = as_multiindex(beta, spec.n)
    if sum(alpha) + sum(beta) > 4:
        raise ValueError("finite-difference budget |alpha|+|beta| <= 4")

    margin = max(2, sum(alpha))
    half = spec.N // 2
    rad = spec.freq_radius()
    valid = np.ones(spec.shape, dtype=bool)
    for m in spec.freq_mesh():
        valid &= (m >= -half + margin) & (m <= half - 1 - margin)

    if a.has_eval:
        eta_step = 0.5
        xs, es = lattice_pairs(spec)
        stencil_e = _difference_stencil(alpha, eta_step)
        stencil_x = _difference_stencil(beta, spec.spacing)
        acc = np.zeros(spec.shape + spec.shape, dtype=complex)
        for eoff, ew in stencil_e:
            for xoff, xw in stencil_x:
                acc += (ew * xw) * a.eval(xs + xoff, es + eoff)
        diff = acc
    else:
        tab = a.table(spec)
        x_axes = tuple(range(spec.n))
        e_axes = tuple(range(spec.n, 2 * spec.n))
        diff = np.zeros_like(tab)
        # physical x-step = one grid spacing, eta-step = one lattice unit;
        # offsets convert to index rolls (roll by -k reads the value at +k)
        stencil_e = _difference_stencil(alpha, 1.0)
        stencil_x = _difference_stencil(beta, spec.spacing)
        for eoff, ew in stencil_e:
            for xoff, xw in stencil_x:
                xshift = [-int(round(o / spec.spacing)) for o in xoff]
                eshift = [-int(round(o)) for o in eoff]
                shifted = np.roll(tab, xshift, axis=x_axes)
                shifted = np.roll(shifted, eshift, axis=e_axes)
                diff += (ew * xw) * shifted

    weight = (1.0 + rad) ** (a.d - sum(alpha) + sum(beta))
    ratio = np.abs(diff) / weight.reshape((1,) * spec.n + spec.shape)
    sel = np.broadcast_to(valid.reshape((1,) * spec.n + spec.shape), ratio.shape)
    return float(ratio[sel].max()) if np.any(sel) else 0.0


# ---------------------------------------------------------------------------
# twisted-diagonal order estimation


@dataclass(frozen=True)
class SigmaFit:
    """Least-squares fit of log(value) against log(eps).

    values[i] = sup over dyadic R and grid x of
    R^{|alpha|-d} (sum_{R<=|eta|<=2R} |D^alpha_eta a_chi,eps|^2 / R^n)^{1/2};
    shell_values[i][R] keeps the un-normalized annulus L2 sup for each shell.
    sigma_hat = slope - n/2 + |alpha|, or +inf when fewer than two values
    are positive (hard-zero localizations).
    """

    alpha: tuple[int, ...]
    eps: tuple[float, ...]
    values: tuple[float, ...]
    shell_values: tuple[dict, ...]
    slope: float | None
    sigma_hat: float
    fit_points: int


def _dyadic_shells(spec: GridSpec, margin: int) -> list[tuple[int, np.ndarray]]:
    rad = spec.freq_radius()
    shells = []
    R = 1
    while 2 * R <= spec.N // 2 - margin:
        shells.append((R, (rad >= R) & (rad <= 2 * R)))
        R *= 2
    return shells


def _eta_difference(table: np.ndarray, alpha: tuple[int, ...], spec: GridSpec) -> np.ndarray:
    e_axes = tuple(range(spec.n, 2 * spec.n))
    out = np.zeros_like(table)
    for off, w in _difference_stencil(alpha, 1.0):
        shift = [-int(round(o)) for o in off]
        out += w * np.roll(table, shift, axis=e_axes)
    return out


def sigma_order_estimate(
    a: Symbol,
    alpha,
    eps_grid=(0.5, 0.25, 0.125, 0.0625),
    spec: GridSpec | None = None,
) -> SigmaFit:
    """Exponent of the localized-symbol decay in eps, per shell-normalized
    annulus L2 sups; see SigmaFit.  Shells within max(2,|alpha|) cells of
    the Nyquist boundary are dropped.
    """
    spec = _resolve_spec(a, spec)
    alpha = as_multiindex(alpha, spec.n)
    eps_grid = tuple(float(e) for e in eps_grid)
    if any(not (0.0 < e < 1.0) for e in eps_grid):
        raise ValueError("eps values must lie in (0,1)")
    margin = max(2, sum(alpha))
    shells = _dyadic_shells(spec, margin)
    if not shells:
        raise ValueError(f"grid too small for any dyadic shell with margin {margin}")

    from ._threads import pmap

    def one_eps(eps: float) -> tuple[float, dict]:
        tab = localize_symbol(a, eps, spec).table(spec)
        diff = _eta_difference(tab, alpha, spec) if sum(alpha) else tab
        sq = np.abs(diff) ** 2
        e_axes = tuple(range(spec.n, 2 * spec.n))
        per_shell = {}
        best = 0.0
        for R, mask in shells:
            sup_x = np.max(np.sum(sq * mask, axis=e_axes))
            raw = float(np.sqrt(sup_x))
            per_shell[R] = raw
            best = max(best, float(R) ** (sum(alpha) - a.d - spec.n / 2.0) * raw)
        return best, per_shell

    results = pmap(one_eps, eps_grid)
    values = tuple(r[0] for r in results)
    shell_values = tuple(r[1] for r in results)

    pts = [(e, v) for e, v in zip(eps_grid, values) if v > 0.0]
    if len(pts) < 2:
        return SigmaFit(alpha, eps_grid, values, shell_values, None, float("inf"), len(pts))
    le = np.log([p[0] for p in pts])
    lv = np.log([p[1] for p in pts])
    slope = float(np.polyfit(le, lv, 1)[0])
    sigma_hat = slope - spec.n / 2.0 + sum(alpha)
    return SigmaFit(alpha, eps_grid, values, shell_values, slope, sigma_hat, len(pts))


# ---------------------------------------------------------------------------
# adjoint via the dense operator matrix


def operator_matrix(a: Symbol, spec: GridSpec) -> np.ndarray:
    """Dense M with (a(x,D)u)(x_i) = sum_j M[i,j] u(x_j); flat C-order indices."""
    if spec.npoints > DENSE_MATRIX_GUARD:
        raise ValueError(f"dense matrix needs N^n <= {DENSE_MATRIX_GUARD}, got {spec.npoints}")
    tab = a.table(spec)
    e_axes = tuple(range(spec.n, 2 * spec.n))
    # G[x, z] = sum_eta a(x,eta) e^{i z.eta};  M[x,y] = G[x, x-y] / N^n
    G = np.fft.ifftn(np.fft.ifftshift(tab, axes=e_axes), axes=e_axes) * spec.npoints
    G = G.reshape(spec.npoints, spec.npoints)
    idx = np.arange(spec.N)
    diff_1d = (idx[:, None] - idx[None, :]) % spec.N
    if spec.n == 1:
        gather = diff_1d
    else:
        flat = diff_1d[:, None, :, None] * spec.N + diff_1d[None, :, None, :]
        gather = flat.reshape(spec.npoints, spec.npoints)
    rows = np.arange(spec.npoints)[:, None]
    return G[rows, gather] / spec.npoints


def matrix_to_symbol(M: np.ndarray, spec: GridSpec, d: float = 0.0) -> TabulatedSymbol:
    """Invert operator_matrix: b(x,eta) = e^{-ix.eta} (M e_eta)(x)."""
    y_axes = tuple(range(1, spec.n + 1))
    T = M.reshape((spec.npoints,) + spec.shape)
    # (M e_eta)(x) = sum_y M[x,y] e^{iy.eta}: inverse DFT along y, shifted
    F = np.fft.fftshift(np.fft.ifftn(T, axes=y_axes), axes=y_axes) * spec.npoints
    xm = np.stack(spec.coord_mesh(), axis=-1).reshape(spec.npoints, spec.n)
    em = np.stack([m.astype(float) for m in spec.freq_mesh()], axis=-1)
    out = np.empty_like(F)
    step = max(1, (1 << 20) // spec.npoints)
    for lo in range(0, spec.npoints, step):
        hi = min(lo + step, spec.npoints)
        dot = np.tensordot(xm[lo:hi], em, axes=([1], [spec.n]))
        out[lo:hi] = np.exp(-1j * dot) * F[lo:hi]
    return TabulatedSymbol(spec, out.reshape(spec.shape + spec.shape), d=d)


def adjoint_symbol_matrix(a: Symbol, spec: GridSpec) -> TabulatedSymbol:
    """Symbol of the adjoint for the weighted inner product (2pi/N)^n sum(u conj(v));
    the weight cancels, so this is the conjugate transpose of the matrix."""
    M = operator_matrix(a, spec)
    return matrix_to_symbol(M.conj().T, spec, d=a.d)


# ---------------------------------------------------------------------------
# binary table format


_PDSY_HEADER = struct.Struct("<4sIId")
_PDSY_MAGIC = b"PDSY"


def write_pdsy(a: Symbol, spec: GridSpec, path) -> None:
    tab = np.ascontiguousarray(a.table(spec), dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(_PDSY_HEADER.pack(_PDSY_MAGIC, spec.n, spec.N, float(a.d)))
        fh.write(tab.tobytes())


def read_pdsy(path) -> TabulatedSymbol:
    raw = Path(path).read_bytes()
    if len(raw) < _PDSY_HEADER.size or raw[:4] != _PDSY_MAGIC:
        raise ValueError(f"{path}: not a PDSY symbol file")
    _, n, N, d = _PDSY_HEADER.unpack_from(raw)
    spec = GridSpec(n=int(n), N=int(N))
    count = spec.npoints**2
    expected = _PDSY_HEADER.size + 16 * count
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    table = np.frombuffer(raw, dtype="<c16", offset=_PDSY_HEADER.size, count=count)
    return TabulatedSymbol(spec, table.reshape(spec.shape + spec.shape).copy(), d=float(d))


# ---------------------------------------------------------------------------
# constructors used by the CLI and experiment corpora


def random_elementary(
    spec: GridSpec,
    frame: LPFrame,
    J: int,
    d: float = 0.0,
    seed: int = 0,
    spread: float = 1.0,
) -> ElementarySymbol:
    """Random multiplier family with spectrum of m_j inside |xi| <= spread 2^j,
    sup-normalized then scaled by 2^{jd}: the discrete model of order-d
    type 1,1 growth."""
    from .grid import lp_norm, random_band_limited

    rng = np.random.default_rng(seed)
    mults = []
    for j in range(J + 1):
        radius = min(spread * 2.0**j, spec.N / 2 - 1)
        m = random_band_limited(spec, radius, rng)
        scale = 2.0 ** (j * d) / max(lp_norm(m, np.inf), 1e-300)
        mults.append(GridFunction(spec, m.values * scale))
    return ElementarySymbol(mults, frame, d=d)


def _parse_theta(text: str) -> tuple[int, ...]:
    text = text.strip()
    if "e" not in text:
        return (int(text),)
    parts = text.replace("-", "+-").split("+")
    vec = [0, 0]
    for p in parts:
        if not p:
            continue
        coeff, _, axis = p.partition("e")
        if axis not in ("1", "2"):
            raise ValueError(f"bad theta component {p!r}")
        c = {"": 1, "-": -1}.get(coeff, None)
        vec[int(axis) - 1] += int(coeff) if c is None else c
    return tuple(vec)


def parse_symbol_spec(text: str, spec: GridSpec, frame: LPFrame | None = None) -> Symbol:
    """Build a symbol from a CLI string.

    Forms: ching:d=0,theta=+1,jmax=8[,a0=..,a1=..,b0=..,b1=..,zr=..,zat=..,zw=..]
           elementary:seed=0,J=6[,d=0][,spread=1]
           elementary:file=manifest.json   (keys: d, multipliers=[pdgf paths])
           table:file=sym.pdsy
           const[:c=1]
    """
    from .frame import DEFAULT_FRAME
    from .grid import read_pdgf

    frame = frame if frame is not None else DEFAULT_FRAME
    kind, _, rest = text.partition(":")
    kv: dict[str, str] = {}
    if rest:
        for item in rest.split(","):
            k, _, v = item.partition("=")
            if not _ or not k:
                raise ValueError(f"bad symbol option {item!r} in {text!r}")
            kv[k.strip()] = v.strip()

    if kind == "const":
        return ConstantSymbol(complex(kv.get("c", "1")))
    if kind == "ching":
        bump_kw = {}
        for src, dst in (("a0", "a0"), ("a1", "a1"), ("b0", "b0"), ("b1", "b1"),
                         ("zat", "zero_at"), ("zw", "zero_width")):
            if src in kv:
                bump_kw[dst] = float(kv[src])
        if "zr" in kv:
            bump_kw["zero_order"] = int(kv["zr"])
        A = RadialBump(**bump_kw) if bump_kw else DEFAULT_BUMP
        return ching_symbol(
            d=float(kv.get("d", "0")),
            theta=_parse_theta(kv.get("theta", "+1")),
            A=A,
            j_max=int(kv.get("jmax", "8")),
            spec=spec,
        )
    if kind == "elementary":
        if "file" in kv:
            manifest = json.loads(Path(kv["file"]).read_text())
            base = Path(kv["file"]).parent
            mults = [read_pdgf(base / p) for p in manifest["multipliers"]]
            return ElementarySymbol(mults, frame, d=float(manifest.get("d", 0.0)))
        return random_elementary(
            spec,
            frame,
            J=int(kv.get("J", "6")),
            d=float(kv.get("d", "0")),
            seed=int(kv.get("seed", "0")),
            spread=float(kv.get("spread", "1")),
        )
    if kind == "table":
        if "file" not in kv:
            raise ValueError("table symbol needs file=...")
        sym = read_pdsy(kv["file"])
        if sym.spec != spec:
            raise ValueError(f"{kv['file']}: table is on {sym.spec}, expected {spec}")
        return sym
    raise ValueError(f"unknown symbol kind {kind!r} in {text!r}")
