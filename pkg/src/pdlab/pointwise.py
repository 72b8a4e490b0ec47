"""Peetre-type maximal functions, weighted-L1 symbol factors, and the
pointwise factorization bound with its derivative-sum and decay controls."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._threads import pmap
from .frame import ModulationFunction
from .grid import GridFunction, GridSpec, fft_forward, lp_norm
from .symbols import (
    Symbol,
    TabulatedSymbol,
    _eta_difference,
    _resolve_spec,
    partial_ift,
    symbol_partial_ft,
)

TWO_PI = 2.0 * np.pi

# Central differences of order k need a stencil of width k on the eta
# lattice; beyond this the stencil stops resolving anything near the
# cutoff support, so the derivative-sum bound refuses to go higher.
DERIVATIVE_BUDGET = 4

# Relative slack on the hard factorization gate; the only inexactness in
# the chain is spectral dust outside the cutoff plateau plus fp roundoff.
FACTORIZATION_SLACK = 1e-8


@dataclass(frozen=True)
class MaximalParams:
    """Weight exponent and spectral radius for the maximal-function family.

    The weight is (1 + R|y|)^{-N} over torus-centered offsets y, each axis
    reduced to [-pi, pi).  N_exp and R_spec must both be positive.
    """

    N_exp: float
    R_spec: float

    def __post_init__(self) -> None:
        if not self.N_exp > 0:
            raise ValueError(f"N_exp must be positive, got {self.N_exp}")
        if not self.R_spec > 0:
            raise ValueError(f"R_spec must be positive, got {self.R_spec}")


def spectral_radius(u: GridFunction, tau: float = 1e-10) -> float:
    """Largest |eta| whose coefficient power exceeds tau relative to the total."""
    c = fft_forward(u).coeffs
    power = np.abs(c) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    mask = power > tau * total
    return float(u.spec.freq_radius()[mask].max()) if mask.any() else 0.0


def default_maximal_params(u: GridFunction, tau: float = 1e-10) -> MaximalParams:
    """N = floor(n/2) + 1 and the smallest radius covering the tau-support."""
    return MaximalParams(u.spec.n // 2 + 1, max(1.0, spectral_radius(u, tau)))


def _centered_offsets(spec: GridSpec) -> np.ndarray:
    # displacement of grid offset d along one axis, as the representative
    # ((d + N/2) mod N - N/2) * spacing in [-pi, pi)
    idx = np.arange(spec.N)
    return (((idx + spec.N // 2) % spec.N) - spec.N // 2) * spec.spacing


def _offset_radius(spec: GridSpec) -> np.ndarray:
    ax = _centered_offsets(spec)
    if spec.n == 1:
        return np.abs(ax)
    mesh = np.meshgrid(*([ax] * spec.n), indexing="ij")
    return np.sqrt(sum(m**2 for m in mesh))


def peetre_maximal(u: GridFunction, p: MaximalParams) -> GridFunction:
    """u*(x) = max over grid offsets y of |u(x-y)| / (1 + R|y|)^N.

    The offset y = 0 carries weight exactly 1, so u* >= |u| pointwise
    without rounding.  Brute force over all npoints^2 pairs, chunked
    over x rows.
    """
    spec = u.spec
    absflat = np.abs(u.values).reshape(-1)
    wflat = (1.0 + p.R_spec * _offset_radius(spec)).reshape(-1) ** (-p.N_exp)

    flat = np.arange(spec.npoints)
    xi = np.unravel_index(flat, spec.shape)
    step = max(1, (1 << 24) // spec.npoints)
    chunks = [(lo, min(lo + step, spec.npoints)) for lo in range(0, spec.npoints, step)]

    def run(bounds: tuple[int, int]) -> np.ndarray:
        lo, hi = bounds
        comp = (xi[0][lo:hi, None] - xi[0][None, :]) % spec.N
        for axis in range(1, spec.n):
            comp = comp * spec.N + (xi[axis][lo:hi, None] - xi[axis][None, :]) % spec.N
        return np.max(absflat[comp] * wflat[None, :], axis=1)

    out = np.concatenate(pmap(run, chunks))
    return GridFunction(spec, out.reshape(spec.shape))


class AuxCutoff:
    """Radial cutoff chi(eta) = profile(|eta|/R) with its support and
    plateau radii (in units of R) known exactly up front."""

    def __init__(self, profile, support, plateau, tag: str):
        self.profile = profile
        self.support = (float(support[0]), float(support[1]))
        self.plateau = (float(plateau[0]), float(plateau[1]))
        self.tag = tag

    def values(self, spec: GridSpec, R: float) -> np.ndarray:
        return self.profile(spec.freq_radius() / R)

    def __repr__(self) -> str:
        return f"AuxCutoff({self.tag})"


def ball_cutoff(psi: ModulationFunction | None = None) -> AuxCutoff:
    """chi identically 1 on |eta| <= r R, vanishing outside |eta| <= R_psi R."""
    psi = psi if psi is not None else ModulationFunction(1.0, 2.0)
    return AuxCutoff(
        psi.radial, (0.0, psi.R), (0.0, psi.r), f"ball(r={psi.r:g},R={psi.R:g})"
    )


def corona_cutoff(psi: ModulationFunction | None = None) -> AuxCutoff:
    """chi supported on the annulus r/2 <= |eta|/R <= R_psi; it equals 1
    exactly where psi(t) = 1 and psi(2t) = 0, which for R_psi = 2r is the
    single radius |eta| = r R."""
    psi = psi if psi is not None else ModulationFunction(1.0, 2.0)
    return AuxCutoff(
        psi.corona,
        (psi.r / 2.0, psi.R),
        (psi.R / 2.0, psi.r),
        f"corona(r={psi.r:g},R={psi.R:g})",
    )


def as_cutoff(chi) -> AuxCutoff:
    """A plain modulation function means its plateau ball."""
    if chi is None:
        return ball_cutoff()
    if isinstance(chi, AuxCutoff):
        return chi
    if isinstance(chi, ModulationFunction):
        return ball_cutoff(chi)
    raise TypeError(f"expected AuxCutoff or ModulationFunction, got {type(chi).__name__}")


def symbol_factor(
    a: Symbol,
    p: MaximalParams,
    chi: AuxCutoff | None = None,
    spec: GridSpec | None = None,
) -> GridFunction:
    """F_a(x) = (2pi/N)^n sum_y (1 + R|y|)^N |k(x,y)| with
    k(x,y) = (2pi)^{-n} sum_eta a(x,eta) chi(eta) e^{i y.eta}.

    The y-sum runs over the same torus-centered offsets as peetre_maximal,
    so |a(x,D)u| <= F_a u* closes over exactly the lattice sums both
    sides are built from (Parseval on the offset sum).
    """
    chi = as_cutoff(chi)
    spec = _resolve_spec(a, spec)
    tab = a.table(spec).reshape((spec.npoints,) + spec.shape)
    chiv = chi.values(spec, p.R_spec)
    w = (1.0 + p.R_spec * _offset_radius(spec)) ** p.N_exp
    cell = (TWO_PI / spec.N) ** spec.n
    e_axes = tuple(range(1, spec.n + 1))

    filtered = tab * chiv[None]
    step = max(1, (1 << 22) // spec.npoints)
    chunks = [(lo, min(lo + step, spec.npoints)) for lo in range(0, spec.npoints, step)]

    def run(bounds: tuple[int, int]) -> np.ndarray:
        lo, hi = bounds
        rows = np.fft.ifftn(np.fft.ifftshift(filtered[lo:hi], axes=e_axes), axes=e_axes)
        k = rows * (spec.npoints / TWO_PI**spec.n)
        return cell * np.sum(np.abs(k) * w[None], axis=e_axes)

    out = np.concatenate(pmap(run, chunks))
    return GridFunction(spec, out.reshape(spec.shape))


@dataclass(frozen=True)
class FactorizationReport:
    params: MaximalParams
    max_ratio: float
    holds: bool
    factor_sup: float
    maximal_sup: float


def factorization_check(
    a: Symbol,
    u: GridFunction,
    p: MaximalParams | None = None,
    chi: AuxCutoff | None = None,
    tau: float = 1e-10,
) -> FactorizationReport:
    """Hard gate |a(x,D)u(x)| <= F_a(x) u*(x) at every grid point.

    Precondition: the tau-support of u-hat sits where chi is exactly 1.
    A spectrum escaping the plateau is raised as an error, never silently
    absorbed into the ratio.
    """
    from .operators import apply_auto

    spec = u.spec
    p = p if p is not None else default_maximal_params(u, tau)
    chi = as_cutoff(chi)

    power = np.abs(fft_forward(u).coeffs) ** 2
    total = float(power.sum())
    supp = power > tau * total if total > 0.0 else np.zeros(spec.shape, dtype=bool)
    chiv = chi.values(spec, p.R_spec)
    if np.any(supp & (chiv != 1.0)):
        worst = float(spec.freq_radius()[supp].max())
        raise ValueError(
            f"tau-support of u reaches |eta|={worst:g} where {chi!r} at "
            f"R={p.R_spec:g} is not identically 1"
        )

    lhs = np.abs(apply_auto(a, u).values)
    factor = symbol_factor(a, p, chi, spec).values.real
    maximal = peetre_maximal(u, p).values.real
    bound = factor * maximal
    pos = bound > 0.0
    ratio = float(np.max(lhs[pos] / bound[pos])) if pos.any() else 0.0
    if np.any(~pos & (lhs > 0.0)):
        ratio = float("inf")
    return FactorizationReport(
        params=p,
        max_ratio=ratio,
        holds=ratio <= 1.0 + FACTORIZATION_SLACK,
        factor_sup=float(factor.max()),
        maximal_sup=float(maximal.max()),
    )


def maximal_ratio(corpus, p_exp: float, N_exp: float, tau: float = 1e-10) -> float:
    """max over the corpus of ||u*||_p / ||u||_p, with R chosen per member
    as the smallest radius covering its tau-support.

    No integrability-line check here: the negative control below the line
    calls this directly to watch the ratio grow under refinement.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")

    def one(u: GridFunction) -> float:
        pr = MaximalParams(N_exp, max(1.0, spectral_radius(u, tau)))
        return lp_norm(peetre_maximal(u, pr), p_exp) / lp_norm(u, p_exp)

    return float(max(pmap(one, corpus)))


def maximal_lp_constant(corpus, p_exp: float, N_exp: float, tau: float = 1e-10) -> float:
    """Empirical constant in ||u*||_p <= C ||u||_p over the corpus.

    The weight exponent must clear the integrability line N > n/p, the
    regime where the constant stays bounded under grid refinement.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    line = corpus[0].spec.n / p_exp
    if not N_exp > line:
        raise ValueError(f"need N_exp > n/p = {line:g}, got {N_exp:g}")
    return maximal_ratio(corpus, p_exp, N_exp, tau)


def _least_integer_above(x: float) -> int:
    return int(math.floor(x)) + 1


def _multiindices(n: int, total: int) -> list[tuple[int, ...]]:
    if n == 1:
        return [(total,)]
    return [(i, total - i) for i in range(total + 1)]


def derivative_order(p: MaximalParams, n: int) -> int:
    """Least integer k > N + n/2, the derivative count of the bound below."""
    return _least_integer_above(p.N_exp + n / 2.0)


def mihlin_rhs(
    a: Symbol,
    p: MaximalParams,
    chi: AuxCutoff | None = None,
    spec: GridSpec | None = None,
) -> np.ndarray:
    """sum_{|alpha| <= k} (sum_{eta in R supp chi} |R^|alpha| D^alpha_eta a|^2
    / R^n)^{1/2} per x, with k the least integer above N + n/2 and the eta
    derivatives taken as unit-step central differences on the lattice."""
    chi = as_cutoff(chi)
    spec = _resolve_spec(a, spec)
    k = derivative_order(p, spec.n)
    if k > DERIVATIVE_BUDGET:
        raise ValueError(
            f"order {k} differences exceed the budget {DERIVATIVE_BUDGET}; "
            f"lower N_exp"
        )
    R = p.R_spec
    hi = chi.support[1] * R
    if hi + k > spec.N / 2:
        raise ValueError(
            f"cutoff support |eta| <= {hi:g} leaves no room for order-{k} "
            f"differences inside the band of N={spec.N}"
        )
    rad = spec.freq_radius()
    mask = (rad >= chi.support[0] * R) & (rad <= hi)
    tab = a.table(spec)
    e_axes = tuple(range(spec.n, 2 * spec.n))
    out = np.zeros(spec.shape)
    for total in range(k + 1):
        for alpha in _multiindices(spec.n, total):
            diff = _eta_difference(tab, alpha, spec) if total else tab
            sq = (np.abs(diff) ** 2) * mask
            out += R**total * np.sqrt(np.sum(sq, axis=e_axes) / R**spec.n)
    return out


def mihlin_ratio(
    a: Symbol,
    p: MaximalParams,
    chi: AuxCutoff | None = None,
    spec: GridSpec | None = None,
) -> float:
    """Smallest c with F_a <= c * mihlin_rhs everywhere (inf if the rhs
    vanishes where F_a does not)."""
    chi = as_cutoff(chi)
    spec = _resolve_spec(a, spec)
    factor = symbol_factor(a, p, chi, spec).values.real
    rhs = mihlin_rhs(a, p, chi, spec)
    pos = rhs > 0.0
    ratio = float(np.max(factor[pos] / rhs[pos])) if pos.any() else 0.0
    if np.any(~pos & (factor > 0.0)):
        ratio = float("inf")
    return ratio


@dataclass(frozen=True)
class MihlinReport:
    k: int
    c_used: float
    worst_ratio: float
    holds: bool


def mihlin_bound_check(
    a: Symbol,
    p: MaximalParams,
    c: float,
    chi: AuxCutoff | None = None,
    spec: GridSpec | None = None,
    slack: float = 0.01,
) -> MihlinReport:
    """F_a <= c * derivative-sum at every x, with relative slack on the
    fitted constant c (fit on one corpus, verify on another)."""
    spec = _resolve_spec(a, spec)
    ratio = mihlin_ratio(a, p, chi, spec)
    return MihlinReport(
        k=derivative_order(p, spec.n),
        c_used=float(c),
        worst_ratio=ratio,
        holds=ratio <= c * (1.0 + slack),
    )


@dataclass(frozen=True)
class ExponentFit:
    """Log-log slope of values against xs, over the strictly positive
    values only; slope is -inf with fewer than two of them.  cliff marks
    a positive value followed by an exact zero (a drop past every
    polynomial rate, which no finite slope reports)."""

    xs: tuple[float, ...]
    values: tuple[float, ...]
    slope: float
    fit_points: int
    cliff: bool


def _fit_exponent(xs, values) -> ExponentFit:
    xs = tuple(float(x) for x in xs)
    values = tuple(float(v) for v in values)
    cliff = any(
        values[i] > 0.0 and values[i + 1] == 0.0 for i in range(len(values) - 1)
    )
    pts = [(x, v) for x, v in zip(xs, values) if v > 0.0]
    if len(pts) < 2:
        return ExponentFit(xs, values, float("-inf"), len(pts), cliff)
    lx = np.log2([q[0] for q in pts])
    lv = np.log2([q[1] for q in pts])
    slope = float(np.polyfit(lx, lv, 1)[0])
    return ExponentFit(xs, values, slope, len(pts), cliff)


def fa_radius_exponent(
    a: Symbol,
    N_exp: float,
    radii,
    chi: AuxCutoff | None = None,
    spec: GridSpec | None = None,
) -> ExponentFit:
    """sup_x F_a(N,R;x) on a dyadic R sweep with the fitted log-log slope;
    a corona chi isolates the R^d growth of an order-d symbol."""
    chi = as_cutoff(chi)
    spec = _resolve_spec(a, spec)

    def one(R: float) -> float:
        pr = MaximalParams(N_exp, float(R))
        return float(symbol_factor(a, pr, chi, spec).values.real.max())

    return _fit_exponent(radii, pmap(one, list(radii)))


@dataclass(frozen=True)
class MomentDecayReport:
    M: int
    fit: ExponentFit
    step_drops: tuple[float, ...]
    holds: bool


def moment_decay_check(
    a: Symbol,
    p: MaximalParams,
    q_grid,
    M: int,
    phi=None,
    chi: AuxCutoff | None = None,
    spec: GridSpec | None = None,
) -> MomentDecayReport:
    """Decay of sup_x F over the x-high-passed family a_Q = phi(Q^{-1}D_x)a
    on a dyadic Q sweep; phi is radial and vanishes identically near 0.

    Passes when the fitted exponent is <= -M + 0.5, or on an exact-zero
    cliff: with a compactly supported chi, x-shells far above R_spec die
    exactly on the lattice, which is faster than any polynomial rate.
    step_drops holds log2(F(Q)/F(Q')) per consecutive positive Q (inf when
    the successor is exactly zero).
    """
    spec = _resolve_spec(a, spec)
    phi = phi if phi is not None else ModulationFunction(1.0, 2.0).corona
    if float(np.asarray(phi(np.array([0.0])))[0]) != 0.0:
        raise ValueError("phi must vanish at 0 (high-pass profile)")
    chi = as_cutoff(chi)
    ahat = symbol_partial_ft(a, spec)
    xrad = spec.freq_radius()

    def one(Q: float) -> float:
        mult = phi(xrad / float(Q)).reshape(spec.shape + (1,) * spec.n)
        masked = ahat * mult
        a_q = TabulatedSymbol(spec, partial_ift(masked, spec), d=a.d, ahat=masked)
        return float(symbol_factor(a_q, p, chi, spec).values.real.max())

    values = pmap(one, list(q_grid))
    fit = _fit_exponent(q_grid, values)
    drops = []
    for i in range(len(values) - 1):
        if values[i] > 0.0:
            drops.append(
                float("inf")
                if values[i + 1] == 0.0
                else float(np.log2(values[i] / values[i + 1]))
            )
    holds = fit.slope <= -M + 0.5 or fit.cliff
    return MomentDecayReport(
        M=int(M), fit=fit, step_drops=tuple(drops), holds=holds
    )


@dataclass(frozen=True)
class GrowthReport:
    ks: tuple[int, ...]
    sup_norms: tuple[float, ...]
    slope: float
    bound: float
    holds: bool


def cutoff_growth_check(
    a: Symbol,
    v: GridFunction,
    k_grid,
    N_exp: float = 0.0,
    Phi: AuxCutoff | None = None,
    Psi: AuxCutoff | None = None,
    slack: float = 0.5,
) -> GrowthReport:
    """Growth in k of sup |OP(Phi(2^{-k}D_x) a Psi(2^{-k}eta)) v|.

    Admissible slope: (N+d)_+ when supp Psi contains the origin, and N+d
    without the positive part when it does not.  On the torus the
    (1+|x|)^N target is bounded, so v bounded admits N_exp = 0; larger
    N_exp only loosens the bound.
    """
    from .operators import apply

    spec = v.spec
    ahat = symbol_partial_ft(a, spec)
    Phi = Phi if Phi is not None else corona_cutoff()
    Psi = Psi if Psi is not None else ball_cutoff()
    rad = spec.freq_radius()
    ks = [int(k) for k in k_grid]

    def one(k: int) -> float:
        scale = 2.0**k
        masked = ahat * Phi.profile(rad / scale).reshape(spec.shape + (1,) * spec.n)
        table = partial_ift(masked, spec) * Psi.profile(rad / scale)[
            (np.newaxis,) * spec.n
        ]
        return float(np.abs(apply(TabulatedSymbol(spec, table, d=a.d), v).values).max())

    sups = pmap(one, ks)
    fit = _fit_exponent([2.0**k for k in ks], sups)
    bound = max(0.0, N_exp + a.d) if Psi.support[0] == 0.0 else N_exp + a.d
    return GrowthReport(
        ks=tuple(ks),
        sup_norms=tuple(float(s) for s in sups),
        slope=fit.slope,
        bound=float(bound),
        holds=fit.slope <= bound + slack,
    )
