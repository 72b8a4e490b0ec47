"""Besov and Lizorkin-Triebel quasi-norms with their scale embeddings, plus
the vector maximal inequality, the dyadic summation lemma, and convergence
probes for block series under ball, corona, and asymmetric-corona spectral
conditions."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from ._threads import pmap
from .frame import DEFAULT_FRAME, LPFrame, lp_blocks
from .grid import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    fft_forward,
    fft_inverse,
    lp_norm,
)
from .pointwise import MaximalParams, peetre_maximal, spectral_radius

TWO_PI = 2.0 * math.pi

BESOV = "B"
TRIEBEL_LIZORKIN = "F"

_log = logging.getLogger("pdlab.spaces")


@dataclass(frozen=True)
class SpaceParams:
    """Parameters (s, p, q) of a dyadic smoothness space, with the frame
    whose blocks realize the quasi-norm.

    scale "B": (sum_j 2^{sjq} ||Phi_j(D)u||_p^q)^{1/q}.
    scale "F": ||(sum_j 2^{sjq} |Phi_j(D)u(.)|^q)^{1/q}||_p, p < inf only.
    """

    s: float
    p: float
    q: float
    scale: str = BESOV
    frame: LPFrame = DEFAULT_FRAME

    def __post_init__(self) -> None:
        if self.scale not in (BESOV, TRIEBEL_LIZORKIN):
            raise ValueError(f"scale must be 'B' or 'F', got {self.scale!r}")
        if not self.p > 0:
            raise ValueError(f"integral exponent p must be positive, got {self.p}")
        if not self.q > 0:
            raise ValueError(f"sum exponent q must be positive, got {self.q}")
        if self.scale == TRIEBEL_LIZORKIN and math.isinf(self.p):
            raise ValueError("p = inf is out of scope on the 'F' scale")


def parse_space(text: str, frame: LPFrame | None = None) -> SpaceParams:
    """Parse 'F:s=0.5,p=2,q=1' or 'B:s=-1,p=inf,q=inf' into SpaceParams."""
    scale, sep, rest = text.partition(":")
    scale = scale.strip()
    if not sep or scale not in (BESOV, TRIEBEL_LIZORKIN):
        raise ValueError(f"space must look like 'B:s=...,p=...,q=...', got {text!r}")
    fields: dict[str, float] = {}
    for item in rest.split(","):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq or key not in ("s", "p", "q"):
            raise ValueError(f"bad space field {item!r} in {text!r}")
        try:
            fields[key] = float(val)
        except ValueError as exc:
            raise ValueError(f"bad value for {key} in {text!r}") from exc
    for key in ("s", "p", "q"):
        if key not in fields:
            raise ValueError(f"space {text!r} is missing {key}")
    return SpaceParams(
        s=fields["s"], p=fields["p"], q=fields["q"], scale=scale,
        frame=frame if frame is not None else DEFAULT_FRAME,
    )


def format_space(sp: SpaceParams) -> str:
    return f"{sp.scale}:s={sp.s:g},p={sp.p:g},q={sp.q:g}"


def lp_block_fields(
    u: GridFunction, frame: LPFrame, j_max: int | None = None
) -> list[np.ndarray]:
    """Grid values of Phi_j(D)u for j = 0..j_max (default: the closing shell)."""
    c = fft_forward(u)
    blocks = lp_blocks(frame, u.spec, j_max)
    _log.debug(
        "block sum truncated at shell j_max=%d (Nyquist radius %.6g)",
        len(blocks) - 1, u.spec.nyquist_radius,
    )
    return [
        fft_inverse(SpectralFunction(u.spec, c.coeffs * mult)).values
        for mult in blocks
    ]


def _shell_weights(s: float, count: int) -> np.ndarray:
    return 2.0 ** (s * np.arange(count, dtype=float))


def _weighted_ellq(values: np.ndarray, q: float) -> float:
    """ell_q over the leading axis of a nonnegative array; sup for q = inf."""
    if math.isinf(q):
        return float(values.max(axis=0)) if values.ndim == 1 else values.max(axis=0)
    out = np.sum(values**q, axis=0) ** (1.0 / q)
    return float(out) if np.ndim(out) == 0 else out


def besov_norm(u: GridFunction, sp: SpaceParams) -> float:
    """(sum_j 2^{sjq} ||Phi_j(D)u||_p^q)^{1/q}; sup over j for q = inf."""
    if sp.scale != BESOV:
        raise ValueError("besov_norm needs scale 'B'")
    fields = lp_block_fields(u, sp.frame)
    terms = np.array([lp_norm(GridFunction(u.spec, f), sp.p) for f in fields])
    return float(_weighted_ellq(_shell_weights(sp.s, len(terms)) * terms, sp.q))


def triebel_norm(u: GridFunction, sp: SpaceParams) -> float:
    """||(sum_j 2^{sjq} |Phi_j(D)u(.)|^q)^{1/q}||_p."""
    if sp.scale != TRIEBEL_LIZORKIN:
        raise ValueError("triebel_norm needs scale 'F'")
    fields = lp_block_fields(u, sp.frame)
    stack = np.abs(np.stack(fields))
    w = _shell_weights(sp.s, len(fields)).reshape((len(fields),) + (1,) * u.spec.n)
    g = _weighted_ellq(w * stack, sp.q)
    return lp_norm(GridFunction(u.spec, g), sp.p)


def space_norm(u: GridFunction, sp: SpaceParams) -> float:
    if sp.scale == BESOV:
        return besov_norm(u, sp)
    return triebel_norm(u, sp)


def holder_norm(u: GridFunction, s: float) -> float:
    """sup|u| + sup_{y!=0} |u(x+y)-u(x)| / |y|^s with torus distances.

    The classical Hoelder quantity; meaningful for 0 < s < 1.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"classical Hoelder modulus needs 0 < s < 1, got {s}")
    spec = u.spec
    axis = (((np.arange(spec.N) + spec.N // 2) % spec.N) - spec.N // 2) * spec.spacing
    if spec.n == 1:
        rad = np.abs(axis)
    else:
        rad = np.hypot(axis[:, None], axis[None, :])
    vals = u.values
    best = 0.0
    for idx in np.ndindex(spec.shape):
        if rad[idx] == 0.0:
            continue
        shift = np.roll(vals, idx, axis=tuple(range(spec.n)))
        best = max(best, float(np.max(np.abs(shift - vals))) / rad[idx] ** s)
    return float(np.max(np.abs(vals))) + best


def _as_corpus(u_blocks) -> list[list[GridFunction]]:
    members = list(u_blocks)
    if not members:
        raise ValueError("empty corpus")
    if isinstance(members[0], GridFunction):
        return [members]
    return [list(m) for m in members]


def vector_maximal_check(
    u_blocks, p: float, q: float, N_exp: float, R: float = 1.0
) -> float:
    """Largest ratio ||(u_k*(N, R 2^k))_k||_{ell_q}||_p / ||(u_k)_k||_{ell_q}||_p.

    u_blocks: one block sequence, or a corpus of them.  Each u_k must have
    spectrum inside the ball of radius R 2^k; N_exp must exceed n/min(p,q).
    The p-th power of the returned ratio bounds the integral form of the
    inequality.
    """
    corpus = _as_corpus(u_blocks)
    spec = corpus[0][0].spec
    if math.isinf(p):
        raise ValueError("p = inf is out of scope; the lemma assumes p < inf")
    line = spec.n / min(p, q)
    if not N_exp > line:
        raise ValueError(
            f"need N_exp > n/min(p,q) = {line:g}, got N_exp = {N_exp:g}"
        )
    for blocks in corpus:
        for k, u in enumerate(blocks):
            rad = spectral_radius(u)
            if rad > R * 2.0**k + 1e-9:
                raise ValueError(
                    f"block {k}: spectrum reaches |eta| = {rad:g}, "
                    f"outside the ball of radius R*2^k = {R * 2.0 ** k:g}"
                )

    def one(blocks: list[GridFunction]) -> float:
        starred = np.stack([
            np.abs(peetre_maximal(u, MaximalParams(N_exp, R * 2.0**k)).values)
            for k, u in enumerate(blocks)
        ])
        plain = np.abs(np.stack([u.values for u in blocks]))
        lhs = lp_norm(GridFunction(spec, _weighted_ellq(starred, q)), p)
        rhs = lp_norm(GridFunction(spec, _weighted_ellq(plain, q)), p)
        if rhs == 0.0:
            return 0.0
        return lhs / rhs

    return float(max(pmap(one, corpus)))


def summation_lemma_check(
    s: float,
    q: float,
    b=None,
    count: int = 1000,
    length: int = 64,
    seed: int = 0,
) -> float:
    """Fitted c in sum_j 2^{sjq} (sum_{k<=j} |b_k|)^q <= c sum_j 2^{sjq} |b_j|^q.

    s < 0 required.  b: a corpus of sequences; omitted, `count` random
    nonnegative sequences of the given length are drawn.  q = inf compares
    the sup forms.  After fitting, every member is re-checked against
    c * 1.01; members with both sides zero contribute nothing.
    """
    if not s < 0:
        raise ValueError(f"summation lemma needs s < 0, got s = {s}")
    if not q > 0:
        raise ValueError(f"sum exponent q must be positive, got {q}")
    if b is None:
        rng = np.random.default_rng(seed)
        b = [rng.random(length) for _ in range(count)]
    corpus = [np.abs(np.asarray(seq, dtype=float)) for seq in b]

    def sides(bk: np.ndarray) -> tuple[float, float]:
        w = _shell_weights(s, len(bk))
        partial = np.cumsum(bk)
        if math.isinf(q):
            return float(np.max(w * partial)), float(np.max(w * bk))
        return float(np.sum((w * partial) ** q)), float(np.sum((w * bk) ** q))

    pairs = [sides(bk) for bk in corpus]
    ratios = [lhs / rhs for lhs, rhs in pairs if rhs > 0.0]
    fitted = max(ratios) if ratios else 0.0
    for lhs, rhs in pairs:
        if lhs > fitted * 1.01 * rhs + 1e-300:
            raise AssertionError("fitted constant fails its own corpus")
    return float(fitted)


@dataclass(frozen=True)
class EmbeddingReport:
    """Fitted constants for the scale embeddings on one corpus.

    sandwich_inner: max ||u||_F / ||u||_B at q = min(p,q).
    sandwich_outer: max ||u||_B at q = max(p,q) / ||u||_F.
    sobolev_constant: max ||u||_{F^{s1}_{p1,q}} / ||u||_{F^{s}_{p,q}} on the
    line s - n/p = s1 - n/p1 with p < p1.
    holder_band: (min, max) of holder_norm / besov(inf, inf) ratios, or None
    when s is outside (0, 1).
    """

    sp: SpaceParams
    p_target: float
    s_target: float
    sandwich_inner: float
    sandwich_outer: float
    sobolev_constant: float
    holder_band: tuple[float, float] | None
    holds: bool


def embedding_report(
    corpus,
    s: float = 0.5,
    p: float = 2.0,
    q: float = 1.0,
    p_target: float = 4.0,
    frame: LPFrame | None = None,
) -> EmbeddingReport:
    """Check B^s_{p,min(p,q)} -> F^s_{p,q} -> B^s_{p,max(p,q)} together with
    the Sobolev embedding along s - n/p = s1 - n/p1 and the agreement of the
    Hoelder quantity with the (inf, inf) Besov norm."""
    members = list(corpus)
    if not members:
        raise ValueError("empty corpus")
    if not p < p_target:
        raise ValueError(f"Sobolev embedding needs p < p_target, got {p} vs {p_target}")
    fr = frame if frame is not None else DEFAULT_FRAME
    n = members[0].spec.n
    sp_f = SpaceParams(s, p, q, TRIEBEL_LIZORKIN, fr)
    sp_lo = SpaceParams(s, p, min(p, q), BESOV, fr)
    sp_hi = SpaceParams(s, p, max(p, q), BESOV, fr)
    s_target = s - n / p + n / p_target
    sp_tgt = SpaceParams(s_target, p_target, q, TRIEBEL_LIZORKIN, fr)

    def ratios(u: GridFunction) -> tuple[float, float, float]:
        f = triebel_norm(u, sp_f)
        lo = besov_norm(u, sp_lo)
        hi = besov_norm(u, sp_hi)
        tgt = triebel_norm(u, sp_tgt)
        if f == 0.0:
            return 0.0, 0.0, 0.0
        return f / lo, hi / f, tgt / f

    rows = pmap(ratios, members)
    inner = max(r[0] for r in rows)
    outer = max(r[1] for r in rows)
    sob = max(r[2] for r in rows)

    band = None
    if 0.0 < s < 1.0:
        sp_inf = SpaceParams(s, math.inf, math.inf, BESOV, fr)
        hb = [holder_norm(u, s) / besov_norm(u, sp_inf) for u in members]
        band = (float(min(hb)), float(max(hb)))

    holds = (
        inner <= 1.0 + 1e-9
        and outer <= 1.0 + 1e-9
        and math.isfinite(sob)
        and (band is None or (band[0] > 0.0 and math.isfinite(band[1])))
    )
    return EmbeddingReport(
        sp=sp_f, p_target=p_target, s_target=s_target,
        sandwich_inner=float(inner), sandwich_outer=float(outer),
        sobolev_constant=float(sob), holder_band=band, holds=holds,
    )


BALL = "ball"
CORONA = "corona"
ASYMMETRIC = "asymmetric"

_SUPPORT_TAU = 1e-10


def _verify_block_spectra(
    blocks: list[GridFunction], mode: str, A: float, theta: float, J: int
) -> None:
    spec = blocks[0].spec
    rad = spec.freq_radius()
    for j, u in enumerate(blocks):
        c = np.abs(fft_forward(u).coeffs)
        top = c.max()
        if top == 0.0:
            continue
        live = c > _SUPPORT_TAU * top
        hi = float(rad[live].max())
        if hi > A * 2.0**j + 1e-9:
            raise ValueError(
                f"block {j}: spectrum reaches |xi| = {hi:g}, "
                f"outside |xi| <= A*2^j = {A * 2.0 ** j:g}"
            )
        if mode != BALL and j >= J:
            exponent = theta * j if mode == ASYMMETRIC else float(j)
            floor = 2.0**exponent / A
            lo = float(rad[live].min())
            if lo < floor - 1e-9:
                raise ValueError(
                    f"block {j}: spectrum reaches down to |xi| = {lo:g}, "
                    f"below the {mode} floor {floor:g}"
                )


@dataclass(frozen=True)
class CoronaSeriesReport:
    """Sum of a block series with its norm bound.

    block_bound is F of the series: ||(sum_j |2^{sj} u_j|^q)^{1/q}||_p on the
    'F' scale, (sum_j 2^{sjq} ||u_j||_p^q)^{1/q} on 'B'.  sum_norm is the
    quasi-norm of the sum at smoothness s_prime; ratio their quotient."""

    total: GridFunction
    mode: str
    A: float
    theta: float
    J: int
    sp: SpaceParams
    s_prime: float
    block_bound: float
    sum_norm: float
    ratio: float


def corona_series_sum(
    u_blocks,
    mode: str,
    sp: SpaceParams,
    A: float = 2.0,
    s_prime: float | None = None,
    theta: float = 1.0,
    J: int = 1,
) -> CoronaSeriesReport:
    """Sum a block series and compare its quasi-norm at smoothness s_prime
    with the block-side bound at smoothness sp.s.

    Spectral conditions are verified on the coefficients, not assumed:
      ball: |xi| <= A 2^j for every j;
      corona: additionally |xi| >= 2^j / A for j >= J;
      asymmetric: additionally |xi| >= 2^{theta j} / A for j >= J.
    Admissible s_prime: corona keeps s_prime = s for all s; ball needs
    s > max(0, n/p - n) and keeps s_prime = s; asymmetric needs
    s_prime < s - (1-theta)/theta * (max(0, n/p - n) - s)_+ with
    0 < theta < 1.
    """
    if mode not in (BALL, CORONA, ASYMMETRIC):
        raise ValueError(f"mode must be ball|corona|asymmetric, got {mode!r}")
    blocks = list(u_blocks)
    if not blocks:
        raise ValueError("empty block list")
    spec = blocks[0].spec
    n = spec.n
    if mode == ASYMMETRIC:
        if not 0.0 < theta < 1.0:
            raise ValueError(f"asymmetric mode needs 0 < theta < 1, got {theta}")
    else:
        theta = 1.0
    _verify_block_spectra(blocks, mode, A, theta, J)

    critical = max(0.0, n / sp.p - n)
    if mode == CORONA:
        if s_prime is None:
            s_prime = sp.s
        if s_prime > sp.s:
            raise ValueError(f"corona mode allows s_prime <= s = {sp.s:g}")
    elif mode == BALL:
        if not sp.s > critical:
            raise ValueError(
                f"ball mode needs s > max(0, n/p - n) = {critical:g}, got s = {sp.s:g}"
            )
        if sp.scale == TRIEBEL_LIZORKIN and not sp.q > n / (n + sp.s):
            raise ValueError(
                f"ball mode needs q > n/(n+s) = {n / (n + sp.s):g}, got q = {sp.q:g}"
            )
        if s_prime is None:
            s_prime = sp.s
        if s_prime > sp.s:
            raise ValueError(f"ball mode allows s_prime <= s = {sp.s:g}")
    else:
        allowed = sp.s - (1.0 - theta) / theta * max(0.0, critical - sp.s)
        if s_prime is None or not (
            s_prime < allowed or (s_prime == sp.s and sp.s > critical)
        ):
            raise ValueError(
                f"asymmetric mode needs s_prime < {allowed:g} "
                f"(got s_prime = {s_prime})"
            )

    total = blocks[0]
    for u in blocks[1:]:
        total = total + u

    count = len(blocks)
    w = _shell_weights(sp.s, count)
    if sp.scale == TRIEBEL_LIZORKIN:
        stack = np.abs(np.stack([u.values for u in blocks]))
        g = _weighted_ellq(w.reshape((count,) + (1,) * n) * stack, sp.q)
        block_bound = lp_norm(GridFunction(spec, g), sp.p)
    else:
        terms = np.array([lp_norm(u, sp.p) for u in blocks])
        block_bound = float(_weighted_ellq(w * terms, sp.q))

    sum_norm = space_norm(total, dataclasses.replace(sp, s=s_prime))
    ratio = math.inf if block_bound == 0.0 and sum_norm > 0.0 else (
        0.0 if block_bound == 0.0 else sum_norm / block_bound
    )
    return CoronaSeriesReport(
        total=total, mode=mode, A=A, theta=theta, J=J, sp=sp,
        s_prime=float(s_prime), block_bound=float(block_bound),
        sum_norm=float(sum_norm), ratio=float(ratio),
    )
