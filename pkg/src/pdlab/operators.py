"""Operator application on the grid, frequency-modulation limits, the
three-series paradifferential splitting, kernels, and support rules.

apply() is the definitional reference: a row-by-row quadrature of
sum_eta a(x,eta) c_eta e^{ix.eta} with phases computed on the fly.  The
structured paths (separable terms, cached cumulative tables) must agree
with it to 1e-10 and are what experiments run on large grids.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ._threads import pmap
from .frame import DEFAULT_FRAME, LPFrame, ModulationFunction
from .grid import GridFunction, GridSpec, SpectralFunction, fft_forward, fft_inverse, lp_norm
from .symbols import (
    Symbol,
    TABLE_ENTRY_GUARD,
    modulate_symbol,
    operator_matrix,
    partial_ift,
    symbol_partial_ft,
)

DIRECT_APPLY_GUARD = 16384

TWO_PI = 2.0 * np.pi

DEFAULT_PSI_FAMILY = (
    ModulationFunction(r=1.0, R=2.0),
    ModulationFunction(r=0.8, R=1.6),
)


def _flat_coords(spec: GridSpec) -> np.ndarray:
    return np.stack(spec.coord_mesh(), axis=-1).reshape(spec.npoints, spec.n)


def _flat_freqs(spec: GridSpec) -> np.ndarray:
    return np.stack([m.astype(float) for m in spec.freq_mesh()], axis=-1).reshape(
        spec.npoints, spec.n
    )


@functools.lru_cache(maxsize=4)
def _phase_matrix(spec: GridSpec) -> np.ndarray:
    """e^{ix.eta} over (flat x, flat eta); cached for the structured paths."""
    if spec.npoints**2 > TABLE_ENTRY_GUARD:
        raise ValueError(f"phase matrix too large for N^n = {spec.npoints}")
    dots = _flat_coords(spec) @ _flat_freqs(spec).T
    return np.exp(1j * dots)


def apply(a: Symbol, u: GridFunction) -> GridFunction:
    """Reference quadrature; exact on the lattice, cost O(N^{2n})."""
    spec = u.spec
    if spec.npoints > DIRECT_APPLY_GUARD:
        raise ValueError(
            f"direct apply needs N^n <= {DIRECT_APPLY_GUARD}, got {spec.npoints}; "
            "use apply_fast_elementary or the experiment drivers"
        )
    c = fft_forward(u).coeffs.reshape(-1)
    xm = _flat_coords(spec)
    em = _flat_freqs(spec)

    use_eval = a.has_eval and spec.npoints**2 > TABLE_ENTRY_GUARD
    tab = None if use_eval else a.table(spec).reshape(spec.npoints, spec.npoints)

    out = np.empty(spec.npoints, dtype=complex)
    step = max(1, (1 << 21) // spec.npoints)
    for lo in range(0, spec.npoints, step):
        hi = min(lo + step, spec.npoints)
        phases = np.exp(1j * (xm[lo:hi] @ em.T))
        if use_eval:
            rows = a.eval(xm[lo:hi, None, :], em[None, :, :])
        else:
            rows = tab[lo:hi]
        out[lo:hi] = (rows * phases) @ c
    return GridFunction(spec, out.reshape(spec.shape))


def apply_fast_elementary(a: Symbol, u: GridFunction) -> GridFunction:
    """sum_j m_j(x) (g_j(D)u)(x) for symbols with separable terms;
    cost O(J N^n log N)."""
    spec = u.spec
    terms = a.separable_terms(spec)
    if terms is None:
        raise ValueError(f"{type(a).__name__} has no separable structure")
    c = fft_forward(u).coeffs
    out = np.zeros(spec.shape, dtype=complex)
    for m, g in terms:
        out += m * fft_inverse(SpectralFunction(spec, c * g)).values
    return GridFunction(spec, out)


def apply_auto(a: Symbol, u: GridFunction) -> GridFunction:
    """Fast path when the symbol has structure, reference path otherwise."""
    if a.separable_terms(u.spec) is not None:
        return apply_fast_elementary(a, u)
    return apply(a, u)


def _apply_table_flat(tab2d: np.ndarray, cflat: np.ndarray, spec: GridSpec) -> np.ndarray:
    return ((tab2d * _phase_matrix(spec)) @ cflat).reshape(spec.shape)


# ---------------------------------------------------------------------------
# vanishing frequency modulation


def modulation_saturation(psi: ModulationFunction, spec: GridSpec) -> int:
    """Least m with psi(2^-m .) identically 1 on the frequency lattice."""
    m = 0
    while psi.r * 2.0**m < spec.nyquist_radius:
        m += 1
    return m


def vfm_apply(a: Symbol, u: GridFunction, psi: ModulationFunction, m: int) -> GridFunction:
    """OP(psi(2^{-m}D_x)a(x,eta) psi(2^{-m}eta)) u."""
    return apply_auto(modulate_symbol(a, m, psi, u.spec), u)


@dataclass
class VfmTrace:
    """Per-m modulation outputs for each auxiliary profile.

    On a fixed lattice every profile saturates: outputs for m >= m_sat are
    bit-identical, so cross_dev measures profile independence exactly.
    """

    spec: GridSpec
    tags: list[str]
    m_values: list[int]
    l2_norms: dict[str, list[float]]
    m_sat: dict[str, int]
    saturated: dict[str, GridFunction]
    cross_dev: float


def vfm_limit(
    a: Symbol,
    u: GridFunction,
    psis=DEFAULT_PSI_FAMILY,
    m_max: int | None = None,
) -> VfmTrace:
    if len(psis) < 2:
        raise ValueError("need at least two modulation functions to witness independence")
    spec = u.spec
    tags = [f"psi(r={p.r:g},R={p.R:g})" for p in psis]
    sats = {t: modulation_saturation(p, spec) for t, p in zip(tags, psis)}
    top = max(sats.values()) + 1 if m_max is None else m_max
    m_values = list(range(top + 1))
    norms: dict[str, list[float]] = {}
    saturated: dict[str, GridFunction] = {}
    for tag, psi in zip(tags, psis):
        ys = pmap(lambda m: vfm_apply(a, u, psi, m), m_values)
        norms[tag] = [lp_norm(y, 2) for y in ys]
        idx = min(sats[tag], len(ys) - 1)
        saturated[tag] = ys[idx]
    dev = 0.0
    vals = list(saturated.values())
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            dev = max(dev, float(np.max(np.abs(vals[i].values - vals[j].values))))
    return VfmTrace(spec, tags, m_values, norms, sats, saturated, dev)


@dataclass(frozen=True)
class RefinementReport:
    """Saturated vfm values across nested grids for one continuum input."""

    grid_sizes: tuple[int, ...]
    l2_norms: tuple[float, ...]
    growth_factors: tuple[float, ...]
    rel_changes: tuple[float, ...]
    diverging: bool
    cauchy: bool


def vfm_refinement(
    make_symbol,
    sample,
    specs,
    psis=DEFAULT_PSI_FAMILY,
) -> RefinementReport:
    """Fix a continuum input, realize it on each grid in specs (must be
    nested: each N divides the next), and compare saturated vfm outputs.

    diverging: L2 growth factor > 2 for two consecutive refinements.
    cauchy: relative nested-grid differences strictly decreasing.
    """
    specs = list(specs)
    if len(specs) < 2:
        raise ValueError("need at least two grids to compare")
    outputs = []
    for spec in specs:
        trace = vfm_limit(make_symbol(spec), sample(spec), psis)
        outputs.append(trace.saturated[trace.tags[0]])
    norms = tuple(lp_norm(y, 2) for y in outputs)
    growth = tuple(b / a if a > 0 else np.inf for a, b in zip(norms, norms[1:]))
    rel = []
    for coarse, fine in zip(outputs, outputs[1:]):
        stride = fine.spec.N // coarse.spec.N
        if stride * coarse.spec.N != fine.spec.N:
            raise ValueError("grids must be nested by integer factors")
        sl = (slice(None, None, stride),) * coarse.spec.n
        restricted = GridFunction(coarse.spec, np.ascontiguousarray(fine.values[sl]))
        denom = max(lp_norm(coarse, 2), 1e-300)
        rel.append(lp_norm(restricted - coarse, 2) / denom)
    diverging = any(g1 > 2.0 and g2 > 2.0 for g1, g2 in zip(growth, growth[1:]))
    if len(growth) == 1:
        diverging = growth[0] > 2.0
    cauchy = all(b < a for a, b in zip(rel, rel[1:])) if len(rel) >= 2 else False
    return RefinementReport(
        tuple(s.N for s in specs), norms, growth, tuple(rel), diverging, cauchy
    )


# ---------------------------------------------------------------------------
# paradifferential three-series splitting


@dataclass
class ParadiffTerms:
    """The three series evaluated on the lattice, with per-k summands.

    t1: sum_{k=h}^K a^{k-h}(x,D)u_k        (low symbol, high input)
    t2: sum_k (a^k - a^{k-h})(x,D)u_k + a_k(x,D)(u^{k-1} - u^{k-h})
    t3: sum_{j=h}^K a_j(x,D)u^{j-h}        (high symbol, low input)

    At the lattice saturation index K the union covers every block pair
    (j,k) exactly once, so t1+t2+t3 equals apply(a,u) up to rounding.
    """

    spec: GridSpec
    frame: LPFrame
    K: int
    t1: GridFunction
    t2: GridFunction
    t3: GridFunction
    t1_summands: dict[int, GridFunction] = field(repr=False, default_factory=dict)
    t2_summands: dict[int, GridFunction] = field(repr=False, default_factory=dict)
    t3_summands: dict[int, GridFunction] = field(repr=False, default_factory=dict)

    def total(self) -> GridFunction:
        return self.t1 + self.t2 + self.t3


def paradiff_split(a: Symbol, u: GridFunction, frame: LPFrame = DEFAULT_FRAME) -> ParadiffTerms:
    spec = u.spec
    K = frame.j_saturation(spec)
    h = frame.h
    rad = spec.freq_radius()

    # cumulative symbol tables A[m] = OP-table of psi(2^{-m}D_x)a; A[-1] = 0
    ahat = symbol_partial_ft(a, spec)
    xi_shape = spec.shape + (1,) * spec.n
    A: dict[int, np.ndarray] = {}
    for m in range(K + 1):
        mult = frame.ball_radial(m, rad).reshape(xi_shape)
        A[m] = partial_ift(ahat * mult, spec).reshape(spec.npoints, spec.npoints)
    zero_tab = np.zeros((spec.npoints, spec.npoints), dtype=complex)

    def A_at(m: int) -> np.ndarray:
        return A[m] if m >= 0 else zero_tab

    # cumulative input coefficients: ball[m] = coeffs of u^m
    c = fft_forward(u).coeffs
    blocks = frame.lattice_blocks(spec, K)
    ball: dict[int, np.ndarray] = {}
    acc = np.zeros(spec.shape)
    for m in range(K + 1):
        acc = acc + blocks[m]
        ball[m] = acc

    def u_ball(m: int) -> np.ndarray:
        if m < 0:
            return np.zeros(spec.shape, dtype=complex)
        return c * ball[m]

    def u_block(k: int) -> np.ndarray:
        return c * blocks[k]

    def run(tab: np.ndarray, coeffs: np.ndarray) -> GridFunction:
        return GridFunction(spec, _apply_table_flat(tab, coeffs.reshape(-1), spec))

    t1_parts = dict(
        zip(range(h, K + 1),
            pmap(lambda k: run(A_at(k - h), u_block(k)), range(h, K + 1)))
    )

    def t2_summand(k: int) -> GridFunction:
        first = run(A_at(k) - A_at(k - h), u_block(k))
        second = run(A_at(k) - A_at(k - 1), u_ball(k - 1) - u_ball(k - h))
        return first + second

    t2_parts = dict(zip(range(0, K + 1), pmap(t2_summand, range(0, K + 1))))

    t3_parts = dict(
        zip(range(h, K + 1),
            pmap(lambda j: run(A_at(j) - A_at(j - 1), u_ball(j - h)), range(h, K + 1)))
    )

    def series_sum(parts: dict[int, GridFunction]) -> GridFunction:
        out = np.zeros(spec.shape, dtype=complex)
        for k in sorted(parts):
            out = out + parts[k].values
        return GridFunction(spec, out)

    return ParadiffTerms(
        spec,
        frame,
        K,
        series_sum(t1_parts),
        series_sum(t2_parts),
        series_sum(t3_parts),
        t1_parts,
        t2_parts,
        t3_parts,
    )


# ---------------------------------------------------------------------------
# corona and ball containment


@dataclass(frozen=True)
class CoronaRow:
    series: str
    k: int
    lo: float
    hi: float
    mass: float
    outside_mass: float  # relative to the summand's own mass
    active: bool
    tdc_lo: float | None = None
    below_tdc_mass: float | None = None


@dataclass
class CoronaReport:
    rows: list[CoronaRow]
    max_outside: float
    mass_floor: float
    tdc_B: float | None
    eventual_tdc_ok: bool | None

    def active_rows(self) -> list[CoronaRow]:
        return [r for r in self.rows if r.active]


# a summand that is identically zero in exact arithmetic still carries fft
# noise (~1e-16 in amplitude), whose inside/outside split is meaningless;
# rows below this fraction of the largest summand mass are marked inactive
MASS_FLOOR = 1e-24


def corona_ball_report(
    terms: ParadiffTerms, B: float | None = None, floor: float = MASS_FLOOR
) -> CoronaReport:
    """Spectral containment of each summand.

    t1 and t3 summands live in the corona {R_h 2^k <= |xi| <= (5R/4) 2^k}
    with R_h = r/2 - R 2^{-h}; t2 summands live in the ball
    {|xi| <= 2R 2^k}, eventually bounded below by r 2^k / (2^{h+1} B)
    when the symbol satisfies the twisted diagonal condition with B.
    """
    frame = terms.frame
    spec = terms.spec
    r, R, h = frame.r, frame.R, frame.h
    R_h = r / 2.0 - R * 2.0**-h
    rad = spec.freq_radius()

    entries: list[tuple[str, int, float, float, np.ndarray]] = []
    for k, y in sorted(terms.t1_summands.items()):
        entries.append(("t1", k, R_h * 2.0**k, 1.25 * R * 2.0**k, fft_forward(y).coeffs))
    for k, y in sorted(terms.t3_summands.items()):
        entries.append(("t3", k, R_h * 2.0**k, 1.25 * R * 2.0**k, fft_forward(y).coeffs))
    for k, y in sorted(terms.t2_summands.items()):
        entries.append(("t2", k, 0.0, 2.0 * R * 2.0**k, fft_forward(y).coeffs))

    powers = [np.abs(c) ** 2 for *_rest, c in entries]
    totals = [float(p.sum()) for p in powers]
    mass_floor = floor * max(totals, default=0.0)

    rows: list[CoronaRow] = []
    below_flags: list[tuple[int, float]] = []
    for (series, k, lo, hi, _), power, total in zip(entries, powers, totals):
        active = total > mass_floor
        if total == 0.0:
            out = 0.0
        else:
            inside = (rad >= lo) & (rad <= hi)
            out = float(power[~inside].sum()) / total
        tdc_lo = None
        below = None
        if B is not None and series == "t2":
            tdc_lo = r * 2.0**k / (2.0 ** (h + 1) * B)
            if active:
                below = float(power[rad < tdc_lo].sum()) / total
                below_flags.append((k, below))
        rows.append(CoronaRow(series, k, lo, hi, total, out, active, tdc_lo, below))

    eventual = None
    if B is not None:
        # eventual containment: a suffix of the active summands with no mass
        # below the bound; inactive summands carry no evidence either way
        eventual = False
        for k0, _ in below_flags:
            tail = [b for k, b in below_flags if k >= k0]
            if tail and all(b <= 1e-10 for b in tail):
                eventual = True
                break

    max_outside = max((row.outside_mass for row in rows if row.active), default=0.0)
    return CoronaReport(rows, max_outside, mass_floor, B, eventual)


# ---------------------------------------------------------------------------
# kernels


def kernel(a: Symbol, spec: GridSpec | None = None) -> np.ndarray:
    """K[x,y] with apply(a,u)(x) = (2pi/N)^n sum_y K[x,y] u(y); exact."""
    if spec is None:
        spec = getattr(a, "spec", None)
        if spec is None:
            raise ValueError("pass spec for symbols without an attached grid")
    M = operator_matrix(a, spec)  # carries the N^n <= 4096 guard
    scale = spec.npoints / TWO_PI**spec.n
    return (M * scale).reshape(spec.shape + spec.shape)


def kernel_apply(K: np.ndarray, u: GridFunction) -> GridFunction:
    spec = u.spec
    flat = K.reshape(spec.npoints, spec.npoints) @ u.values.reshape(-1)
    return GridFunction(spec, (spec.spacing**spec.n) * flat.reshape(spec.shape))


def kernel_form(K: np.ndarray, v: GridFunction, u: GridFunction) -> complex:
    """<K, v (x) conj(u)> with the product measure: equals <a(x,D)u, v>."""
    spec = u.spec
    w = spec.spacing ** (2 * spec.n)
    outer = np.multiply.outer(np.conj(v.values).reshape(-1), u.values.reshape(-1))
    return complex(w * np.sum(K.reshape(spec.npoints, spec.npoints) * outer))


# ---------------------------------------------------------------------------
# support rules


def _tau_support(power: np.ndarray, tau: float) -> np.ndarray:
    total = power.sum()
    if total == 0.0:
        return np.zeros_like(power, dtype=bool)
    return power > tau * total


@dataclass(frozen=True)
class SupportReport:
    holds: bool
    violation_mass: float
    tau: float
    output_support: int
    allowed_support: int


def support_rule_check(a: Symbol, u: GridFunction, tau: float = 1e-8) -> SupportReport:
    """Spatial support rule: supp a(x,D)u within supp_tau K composed with
    supp_tau u; smooth cutoffs have global tails, so this is thresholded."""
    spec = u.spec
    K = kernel(a, spec).reshape(spec.npoints, spec.npoints)
    y = kernel_apply(K, u)
    u_supp = _tau_support(np.abs(u.values.reshape(-1)) ** 2, tau)
    K_supp = _tau_support(np.abs(K) ** 2, tau)
    reach = (K_supp & u_supp[None, :]).any(axis=1)
    y_power = np.abs(y.values.reshape(-1)) ** 2
    total = float(y_power.sum())
    viol = 0.0 if total == 0.0 else float(y_power[~reach].sum()) / total
    return SupportReport(viol <= tau, viol, tau, int(_tau_support(y_power, tau).sum()), int(reach.sum()))


def spectral_support_rule_check(a: Symbol, u: GridFunction, tau: float = 1e-10) -> SupportReport:
    """Frequency support rule: supp F(a(x,D)u) within the folded sumset
    {xi + eta : (xi,eta) in supp_tau a_hat, eta in supp_tau u_hat}."""
    spec = u.spec
    ahat = symbol_partial_ft(a, spec)
    c = fft_forward(u).coeffs
    a_supp = _tau_support(np.abs(ahat) ** 2, tau)
    u_supp = _tau_support(np.abs(c) ** 2, tau)
    pair_supp = a_supp & u_supp.reshape((1,) * spec.n + spec.shape)

    allowed = np.zeros(spec.shape, dtype=bool)
    half = spec.N // 2
    idx = np.nonzero(pair_supp)
    if idx[0].size:
        out_idx = tuple(
            ((idx[i] - half) + (idx[spec.n + i] - half) + half) % spec.N
            for i in range(spec.n)
        )
        allowed[out_idx] = True

    y = apply_auto(a, u)
    y_power = np.abs(fft_forward(y).coeffs) ** 2
    total = float(y_power.sum())
    viol = 0.0 if total == 0.0 else float(y_power[~allowed].sum()) / total
    return SupportReport(viol <= tau, viol, tau, int(_tau_support(y_power, tau).sum()), int(allowed.sum()))
