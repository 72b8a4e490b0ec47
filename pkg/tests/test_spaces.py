"""Dyadic smoothness-space checks: block-level norm oracles, scale identities,
embedding constants, the vector maximal inequality, the summation lemma, and
block-series convergence under ball / corona / asymmetric spectral conditions."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdlab.frame import DEFAULT_FRAME
from pdlab.grid import (
    GridFunction,
    GridSpec,
    SpectralFunction,
    fft_forward,
    fft_inverse,
    lp_norm,
    random_band_limited,
    single_mode,
    sobolev_norm,
)
from pdlab.pointwise import maximal_lp_constant, spectral_radius
from pdlab.spaces import (
    ASYMMETRIC,
    BALL,
    BESOV,
    CORONA,
    TRIEBEL_LIZORKIN,
    SpaceParams,
    besov_norm,
    corona_series_sum,
    embedding_report,
    format_space,
    holder_norm,
    lp_block_fields,
    parse_space,
    summation_lemma_check,
    triebel_norm,
    vector_maximal_check,
)

TWO_PI = 2.0 * math.pi


def rand_u(spec: GridSpec, band: float, seed: int) -> GridFunction:
    return random_band_limited(spec, band, np.random.default_rng(seed))


def lp_seq(u: GridFunction) -> list[GridFunction]:
    return [GridFunction(u.spec, f) for f in lp_block_fields(u, DEFAULT_FRAME)]


def annulus_noise(spec: GridSpec, lo: float, hi: float, rng) -> GridFunction:
    rad = spec.freq_radius()
    mask = (rad >= lo) & (rad <= hi)
    c = np.zeros(spec.shape, dtype=complex)
    k = int(mask.sum())
    c[mask] = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return fft_inverse(SpectralFunction(spec, c))


class TestSpaceParams:
    def test_triebel_rejects_p_inf(self):
        with pytest.raises(ValueError, match="inf"):
            SpaceParams(0.0, math.inf, 2.0, TRIEBEL_LIZORKIN)

    def test_besov_allows_p_inf(self):
        sp = SpaceParams(0.0, math.inf, math.inf, BESOV)
        assert math.isinf(sp.p)

    def test_exponents_must_be_positive(self):
        with pytest.raises(ValueError, match="p"):
            SpaceParams(0.0, 0.0, 2.0, BESOV)
        with pytest.raises(ValueError, match="q"):
            SpaceParams(0.0, 2.0, -1.0, BESOV)

    def test_unknown_scale_rejected(self):
        with pytest.raises(ValueError, match="scale"):
            SpaceParams(0.0, 2.0, 2.0, "X")

    def test_parse_space(self):
        sp = parse_space("F:s=0.5,p=2,q=1")
        assert sp == SpaceParams(0.5, 2.0, 1.0, TRIEBEL_LIZORKIN)
        sp = parse_space("B:s=-1,p=inf,q=inf")
        assert sp.scale == BESOV and math.isinf(sp.p) and math.isinf(sp.q)

    def test_parse_space_errors(self):
        with pytest.raises(ValueError, match="space"):
            parse_space("G:s=0,p=2,q=2")
        with pytest.raises(ValueError, match="missing q"):
            parse_space("B:s=0,p=2")
        with pytest.raises(ValueError, match="bad"):
            parse_space("B:s=0,p=2,q=two")

    def test_format_space_round_trips(self):
        sp = SpaceParams(-0.25, 2.0, math.inf, TRIEBEL_LIZORKIN)
        assert parse_space(format_space(sp)) == sp


class TestBesovNorm:
    def test_constant_function_uses_only_the_ball_block(self):
        spec = GridSpec(1, 64)
        u = GridFunction(spec, np.ones(64))
        for p in (1.0, 2.0, math.inf):
            got = besov_norm(u, SpaceParams(0.7, p, 1.5, BESOV))
            want = TWO_PI ** (0.0 if math.isinf(p) else 1.0 / p)
            assert got == pytest.approx(want, rel=1e-13)

    def test_wrong_scale_rejected(self):
        u = rand_u(GridSpec(1, 32), 8.0, 0)
        with pytest.raises(ValueError, match="'B'"):
            besov_norm(u, SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN))

    def test_mode4_lands_in_a_single_shell(self):
        # at |eta| = 4 the corona weights vanish exactly except at j = 2,
        # where the profile sits on its plateau
        w = [float(DEFAULT_FRAME.block_radial(j, np.array([4.0]))[0]) for j in range(6)]
        assert w[2] == 1.0
        assert all(w[j] == 0.0 for j in (0, 1, 3, 4, 5))
        spec = GridSpec(1, 64)
        u = single_mode(spec, 4)
        for q in (1.0, 3.0, math.inf):
            got = besov_norm(u, SpaceParams(0.5, 2.0, q, BESOV))
            assert got == pytest.approx(2.0 ** (0.5 * 2) * TWO_PI**0.5, rel=1e-12)

    def test_single_mode_matches_block_weight_oracle(self):
        spec = GridSpec(1, 64)
        u = single_mode(spec, 3)
        s, p = 0.5, 2.0
        weights = [
            float(DEFAULT_FRAME.block_radial(j, np.array([3.0]))[0])
            for j in range(DEFAULT_FRAME.j_saturation(spec) + 1)
        ]
        for q in (1.0, 2.5, math.inf):
            if math.isinf(q):
                combined = max(2.0 ** (s * j) * w for j, w in enumerate(weights))
            else:
                combined = sum(
                    (2.0 ** (s * j) * w) ** q for j, w in enumerate(weights)
                ) ** (1.0 / q)
            got = besov_norm(u, SpaceParams(s, p, q, BESOV))
            assert got == pytest.approx(combined * TWO_PI ** (1.0 / p), rel=1e-12)

    def test_smoothness_reweighting_is_algebraic(self):
        spec = GridSpec(1, 64)
        u = rand_u(spec, 20.0, 3)
        s, s2, p, q = 0.25, -1.0, 2.0, 1.5
        terms = np.array([
            lp_norm(GridFunction(spec, f), p) for f in lp_block_fields(u, DEFAULT_FRAME)
        ])
        j = np.arange(len(terms), dtype=float)
        hand = float(np.sum((2.0 ** ((s2 - s) * j) * 2.0 ** (s * j) * terms) ** q) ** (1.0 / q))
        got = besov_norm(u, SpaceParams(s2, p, q, BESOV))
        assert got == pytest.approx(hand, rel=1e-13)

    def test_q_inf_is_the_sup_over_shells(self):
        spec = GridSpec(1, 64)
        u = rand_u(spec, 20.0, 4)
        s, p = -0.5, 2.0
        terms = [
            lp_norm(GridFunction(spec, f), p) for f in lp_block_fields(u, DEFAULT_FRAME)
        ]
        hand = max(2.0 ** (s * j) * t for j, t in enumerate(terms))
        assert besov_norm(u, SpaceParams(s, p, math.inf, BESOV)) == hand


class TestTriebelNorm:
    def test_matches_besov_at_p_eq_q(self):
        spec = GridSpec(1, 64)
        u = rand_u(spec, 20.0, 1)
        for pq in (0.7, 1.0, 2.0, 3.5):
            b = besov_norm(u, SpaceParams(0.3, pq, pq, BESOV))
            f = triebel_norm(u, SpaceParams(0.3, pq, pq, TRIEBEL_LIZORKIN))
            assert f == pytest.approx(b, rel=1e-12)

    def test_wrong_scale_rejected(self):
        u = rand_u(GridSpec(1, 32), 8.0, 0)
        with pytest.raises(ValueError, match="'F'"):
            triebel_norm(u, SpaceParams(0.0, 2.0, 2.0, BESOV))

    def test_agrees_with_parseval_norm_up_to_partition_overlap(self):
        # s=0, p=q=2: the only gap to the exact H^0 norm is sum_j Phi_j^2,
        # which lies in [1/2, 1] because at most two shells overlap
        spec = GridSpec(1, 64)
        sp = SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN)
        lo, hi = 1.0 / math.sqrt(2.0), math.sqrt(2.0)
        for seed in range(50):
            u = rand_u(spec, 24.0, seed)
            ratio = triebel_norm(u, sp) / sobolev_norm(fft_forward(u), 0.0)
            assert lo <= ratio <= hi

    def test_single_mode_matches_block_weight_oracle(self):
        spec = GridSpec(1, 64)
        u = single_mode(spec, 3)
        s, p = 0.5, 2.0
        weights = [
            float(DEFAULT_FRAME.block_radial(j, np.array([3.0]))[0])
            for j in range(DEFAULT_FRAME.j_saturation(spec) + 1)
        ]
        for q in (1.5, math.inf):
            if math.isinf(q):
                combined = max(2.0 ** (s * j) * w for j, w in enumerate(weights))
            else:
                combined = sum(
                    (2.0 ** (s * j) * w) ** q for j, w in enumerate(weights)
                ) ** (1.0 / q)
            got = triebel_norm(u, SpaceParams(s, p, q, TRIEBEL_LIZORKIN))
            assert got == pytest.approx(combined * TWO_PI ** (1.0 / p), rel=1e-12)

    def test_constant_function(self):
        spec = GridSpec(1, 64)
        u = GridFunction(spec, np.ones(64))
        got = triebel_norm(u, SpaceParams(-0.3, 2.0, 1.0, TRIEBEL_LIZORKIN))
        assert got == pytest.approx(TWO_PI**0.5, rel=1e-13)

    def test_two_dimensional_grid(self):
        spec = GridSpec(2, 16)
        u = rand_u(spec, 6.0, 5)
        b = besov_norm(u, SpaceParams(0.5, 2.0, 2.0, BESOV))
        f = triebel_norm(u, SpaceParams(0.5, 2.0, 2.0, TRIEBEL_LIZORKIN))
        assert f == pytest.approx(b, rel=1e-12)


class TestNormInvariants:
    def test_power_of_two_scaling_is_bitwise(self):
        u = rand_u(GridSpec(1, 64), 20.0, 2)
        spb = SpaceParams(0.5, 2.0, 2.0, BESOV)
        spf = SpaceParams(0.5, 2.0, 2.0, TRIEBEL_LIZORKIN)
        assert besov_norm(u * 2.0, spb) == 2.0 * besov_norm(u, spb)
        assert triebel_norm(u * 2.0, spf) == 2.0 * triebel_norm(u, spf)

    def test_general_homogeneity(self):
        u = rand_u(GridSpec(1, 64), 20.0, 2)
        lam = 1.7 - 0.3j
        mod = abs(lam)
        spb = SpaceParams(-0.4, 2.5, 1.2, BESOV)
        spf = SpaceParams(-0.4, 2.5, 1.2, TRIEBEL_LIZORKIN)
        assert besov_norm(u * lam, spb) == pytest.approx(mod * besov_norm(u, spb), rel=1e-12)
        assert triebel_norm(u * lam, spf) == pytest.approx(mod * triebel_norm(u, spf), rel=1e-12)

    def test_lambda_subadditivity(self):
        spec = GridSpec(1, 64)
        for p, q in ((2.0, 2.0), (1.0, 0.5), (0.7, 3.0)):
            lam = min(1.0, p, q)
            for seed in range(10):
                u = rand_u(spec, 20.0, seed)
                v = rand_u(spec, 20.0, 100 + seed)
                for scale, norm in ((BESOV, besov_norm), (TRIEBEL_LIZORKIN, triebel_norm)):
                    sp = SpaceParams(0.3, p, q, scale)
                    lhs = norm(u + v, sp) ** lam
                    rhs = norm(u, sp) ** lam + norm(v, sp) ** lam
                    assert lhs <= rhs * (1.0 + 1e-12)

    def test_sum_exponent_monotonicity(self):
        # ell_q shrinks as q grows, so the norm is non-increasing in q
        u = rand_u(GridSpec(1, 64), 20.0, 6)
        for scale, norm in ((BESOV, besov_norm), (TRIEBEL_LIZORKIN, triebel_norm)):
            vals = [
                norm(u, SpaceParams(0.4, 2.0, q, scale)) for q in (1.0, 2.5, math.inf)
            ]
            assert vals[0] >= vals[1] * (1.0 - 1e-12)
            assert vals[1] >= vals[2] * (1.0 - 1e-12)

    @settings(max_examples=10, deadline=None)
    @given(
        s=st.floats(min_value=-2.0, max_value=2.0),
        pq=st.sampled_from([0.7, 1.0, 2.0, 3.5]),
        seed=st.integers(min_value=0, max_value=50),
    )
    def test_scales_agree_at_p_eq_q(self, s, pq, seed):
        u = rand_u(GridSpec(1, 32), 10.0, seed)
        b = besov_norm(u, SpaceParams(s, pq, pq, BESOV))
        f = triebel_norm(u, SpaceParams(s, pq, pq, TRIEBEL_LIZORKIN))
        assert f == pytest.approx(b, rel=1e-12)


class TestEmbeddingReport:
    def test_p_eq_q_sandwich_is_an_equality(self):
        corpus = [rand_u(GridSpec(1, 64), 16.0, s) for s in range(8)]
        rep = embedding_report(corpus, s=0.5, p=2.0, q=2.0, p_target=4.0)
        assert rep.sandwich_inner == pytest.approx(1.0, abs=1e-12)
        assert rep.sandwich_outer == pytest.approx(1.0, abs=1e-12)

    def test_sandwich_constants_stay_below_one(self):
        corpus = [rand_u(GridSpec(1, 64), 16.0, s) for s in range(12)]
        rep = embedding_report(corpus, s=0.5, p=2.0, q=1.0, p_target=4.0)
        assert rep.holds
        assert 0.0 < rep.sandwich_inner <= 1.0 + 1e-9
        assert 0.0 < rep.sandwich_outer <= 1.0 + 1e-9
        assert math.isfinite(rep.sobolev_constant)
        assert rep.s_target == pytest.approx(0.5 - 1.0 / 2.0 + 1.0 / 4.0)

    def test_fitted_constants_stable_under_grid_doubling(self):
        c64 = [rand_u(GridSpec(1, 64), 16.0, s) for s in range(12)]
        c128 = [rand_u(GridSpec(1, 128), 16.0, s) for s in range(12)]
        r64 = embedding_report(c64, s=0.5, p=2.0, q=1.0, p_target=4.0)
        r128 = embedding_report(c128, s=0.5, p=2.0, q=1.0, p_target=4.0)
        for a, b in (
            (r64.sandwich_inner, r128.sandwich_inner),
            (r64.sandwich_outer, r128.sandwich_outer),
            (r64.sobolev_constant, r128.sobolev_constant),
            (r64.holder_band[1], r128.holder_band[1]),
        ):
            assert 1.0 / 1.3 <= b / a <= 1.3

    def test_single_modes_give_exact_equalities(self):
        spec = GridSpec(1, 64)
        corpus = [single_mode(spec, 4), single_mode(spec, 0)]
        rep = embedding_report(corpus, s=0.5, p=2.0, q=1.0, p_target=4.0)
        assert abs(rep.sandwich_inner - 1.0) <= 1e-14
        assert abs(rep.sandwich_outer - 1.0) <= 1e-14

    def test_sobolev_line_needs_larger_target_exponent(self):
        corpus = [rand_u(GridSpec(1, 32), 8.0, 0)]
        with pytest.raises(ValueError, match="p_target"):
            embedding_report(corpus, s=0.5, p=2.0, q=1.0, p_target=2.0)

    def test_holder_band_only_inside_unit_interval(self):
        corpus = [rand_u(GridSpec(1, 32), 8.0, s) for s in range(3)]
        rep = embedding_report(corpus, s=1.5, p=2.0, q=1.0, p_target=4.0)
        assert rep.holder_band is None
        assert rep.holds

    def test_holder_norm_validates_smoothness(self):
        u = rand_u(GridSpec(1, 32), 8.0, 0)
        with pytest.raises(ValueError, match="0 < s < 1"):
            holder_norm(u, 1.2)


class TestVectorMaximal:
    def test_single_block_reduces_to_scalar_constant(self):
        u = rand_u(GridSpec(1, 64), 10.0, 7)
        rad = spectral_radius(u)
        got = vector_maximal_check([u], 2.0, 2.0, 1.0, R=rad)
        want = maximal_lp_constant([u], 2.0, 1.0)
        assert got == want

    def test_equal_single_modes_give_exactly_one(self):
        spec = GridSpec(1, 64)
        blocks = [single_mode(spec, 2) for _ in range(4)]
        c = vector_maximal_check(blocks, 2.0, 2.0, 1.0, R=2.0)
        assert c == 1.0
        assert c >= 1.0

    def test_exponent_line_enforced(self):
        u = single_mode(GridSpec(1, 32), 1)
        with pytest.raises(ValueError, match="n/min"):
            vector_maximal_check([u], 2.0, 2.0, 0.5, R=2.0)
        with pytest.raises(ValueError, match="n/min"):
            vector_maximal_check([u], 2.0, 0.4, 2.5, R=2.0)
        assert vector_maximal_check([u], 2.0, 0.4, 2.6, R=2.0) >= 1.0

    def test_p_inf_rejected(self):
        u = single_mode(GridSpec(1, 32), 1)
        with pytest.raises(ValueError, match="p = inf"):
            vector_maximal_check([u], math.inf, 2.0, 3.0, R=2.0)

    def test_band_violation_names_the_block(self):
        u = rand_u(GridSpec(1, 64), 10.0, 1)
        with pytest.raises(ValueError, match="block 0"):
            vector_maximal_check([u], 2.0, 2.0, 1.0, R=1.0)

    def test_lp_corpus_constant_stable_under_refinement(self):
        cs = []
        for N in (64, 128):
            corpus = [lp_seq(rand_u(GridSpec(1, N), 24.0, s)) for s in range(30)]
            cs.append(vector_maximal_check(corpus, 2.0, 2.0, 1.0, R=DEFAULT_FRAME.R))
        assert cs[0] >= 1.0 and cs[0] < 3.0
        assert 1.0 / 1.5 <= cs[1] / cs[0] <= 1.5

    def test_sup_over_blocks_variant(self):
        blocks = lp_seq(rand_u(GridSpec(1, 64), 24.0, 9))
        c = vector_maximal_check(blocks, 2.0, math.inf, 1.0, R=DEFAULT_FRAME.R)
        assert c >= 1.0 and math.isfinite(c)


class TestSummationLemma:
    def test_delta_sequence_ratio_is_two(self):
        delta = np.zeros(64)
        delta[0] = 1.0
        c = summation_lemma_check(-1.0, 1.0, b=[delta])
        assert c == pytest.approx(2.0, abs=1e-12)

    def test_zero_corpus_gives_zero(self):
        assert summation_lemma_check(-1.0, 1.0, b=[np.zeros(64)]) == 0.0

    def test_s_must_be_negative(self):
        with pytest.raises(ValueError, match="s < 0"):
            summation_lemma_check(0.0, 1.0)
        with pytest.raises(ValueError, match="s < 0"):
            summation_lemma_check(0.3, 2.0)

    def test_q_must_be_positive(self):
        with pytest.raises(ValueError, match="q"):
            summation_lemma_check(-1.0, 0.0)

    def test_q1_constant_is_the_geometric_sum(self):
        # at q = 1 the two sides relate by an exact resummation, so the
        # fitted constant is (1 - 2^s)^{-1} up to the length-64 tail
        c = summation_lemma_check(-0.5, 1.0)
        assert c == pytest.approx(1.0 / (1.0 - 2.0**-0.5), abs=1e-6)

    def test_q2_geometric_member_approaches_sharp_constant(self):
        rng = np.random.default_rng(0)
        geometric = 2.0 ** (0.5 * np.arange(64))
        corpus = [rng.random(64) for _ in range(1000)] + [geometric]
        c = summation_lemma_check(-0.5, 2.0, b=corpus)
        sharp = (1.0 - 2.0**-0.5) ** -2
        assert 0.85 * sharp <= c <= sharp * (1.0 + 1e-12)

    def test_q_inf_geometric_member_pins_the_constant(self):
        rng = np.random.default_rng(0)
        geometric = 2.0 ** (1.0 * np.arange(64))
        corpus = [rng.random(64) for _ in range(200)] + [geometric]
        c = summation_lemma_check(-1.0, math.inf, b=corpus)
        assert c == pytest.approx(2.0, abs=1e-12)
        c_random = summation_lemma_check(-1.0, math.inf, b=corpus[:-1])
        assert c_random <= 2.0 + 1e-12

    def test_signs_are_ignored(self):
        rng = np.random.default_rng(5)
        b = rng.standard_normal(64)
        assert summation_lemma_check(-0.7, 1.5, b=[b]) == summation_lemma_check(
            -0.7, 1.5, b=[np.abs(b)]
        )


class TestCoronaSeries:
    def test_lp_blocks_reconstruct_the_function(self):
        spec = GridSpec(1, 64)
        u = rand_u(spec, 20.0, 3)
        sp = SpaceParams(-0.5, 2.0, 2.0, TRIEBEL_LIZORKIN)
        rep = corona_series_sum(lp_seq(u), CORONA, sp, A=2.0)
        scale = float(np.max(np.abs(u.values)))
        assert np.max(np.abs(rep.total.values - u.values)) <= 1e-12 * scale
        assert rep.s_prime == sp.s
        # the sum's own shell fields are exactly the input blocks here
        assert rep.ratio == pytest.approx(1.0, rel=1e-12)

    def test_besov_scale_variant_reconstructs_too(self):
        spec = GridSpec(1, 64)
        u = rand_u(spec, 20.0, 8)
        sp = SpaceParams(0.3, 2.0, 1.0, BESOV)
        rep = corona_series_sum(lp_seq(u), CORONA, sp, A=2.0)
        assert rep.ratio == pytest.approx(1.0, rel=1e-12)

    def test_corona_floor_violation_rejected(self):
        spec = GridSpec(1, 64)
        blocks = lp_seq(rand_u(spec, 20.0, 3))
        leak = np.zeros(spec.shape, dtype=complex)
        leak[spec.N // 2] = 1.0  # zero frequency
        blocks[3] = blocks[3] + fft_inverse(SpectralFunction(spec, leak))
        with pytest.raises(ValueError, match="below the corona floor"):
            corona_series_sum(blocks, CORONA, SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN), A=2.0)

    def test_ball_ceiling_violation_rejected(self):
        spec = GridSpec(1, 64)
        blocks = [rand_u(spec, 10.0, 1)]
        with pytest.raises(ValueError, match="outside"):
            corona_series_sum(blocks, BALL, SpaceParams(0.5, 2.0, 2.0, TRIEBEL_LIZORKIN), A=2.0)

    def test_ball_mode_needs_supercritical_smoothness(self):
        spec = GridSpec(1, 64)
        blocks = [rand_u(spec, 2.0, 1)]
        with pytest.raises(ValueError, match="ball mode needs s >"):
            corona_series_sum(blocks, BALL, SpaceParams(-0.5, 2.0, 2.0, TRIEBEL_LIZORKIN), A=2.0)

    def test_ball_mode_constant_stable_under_refinement(self):
        def ball_blocks(spec: GridSpec, seed: int, j_max: int) -> list[GridFunction]:
            rng = np.random.default_rng(seed)
            return [
                annulus_noise(spec, 0.0, 2.0 * 2.0**j, rng) * 2.0 ** (-0.7 * j)
                for j in range(j_max + 1)
            ]

        sp = SpaceParams(0.5, 2.0, 2.0, TRIEBEL_LIZORKIN)
        tops = []
        for N, j_max in ((64, 4), (128, 5)):
            ratios = [
                corona_series_sum(ball_blocks(GridSpec(1, N), seed, j_max), BALL, sp, A=2.0).ratio
                for seed in range(8)
            ]
            assert all(0.0 < r < 2.0 for r in ratios)
            tops.append(max(ratios))
        assert 1.0 / 1.5 <= tops[1] / tops[0] <= 1.5

    def test_asymmetric_admissibility(self):
        spec = GridSpec(1, 64)
        blocks = [single_mode(spec, 1)]
        sp = SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN)
        with pytest.raises(ValueError, match="s_prime"):
            corona_series_sum(blocks, ASYMMETRIC, sp, A=2.0, s_prime=0.0, theta=0.5)
        with pytest.raises(ValueError, match="theta"):
            corona_series_sum(blocks, ASYMMETRIC, sp, A=2.0, s_prime=-0.1, theta=1.0)

    def test_asymmetric_shell_spread_corpus(self):
        # inner radius grows like 2^{j/2} only: the designed blocks spread
        # from shell j/2 up to shell j
        def asym_blocks(spec: GridSpec, seed: int, j_max: int) -> list[GridFunction]:
            rng = np.random.default_rng(seed)
            out = []
            for j in range(j_max + 1):
                lo = 2.0 ** (0.5 * j) / 2.0 if j >= 1 else 0.0
                out.append(annulus_noise(spec, lo, 2.0 * 2.0**j, rng) * 2.0 ** (-0.5 * j))
            return out

        sp = SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN)
        tops = []
        for N, j_max in ((64, 4), (128, 5)):
            reports = [
                corona_series_sum(
                    asym_blocks(GridSpec(1, N), seed, j_max), ASYMMETRIC, sp,
                    A=2.0, s_prime=-0.1, theta=0.5,
                )
                for seed in range(8)
            ]
            assert all(r.s_prime == -0.1 for r in reports)
            ratios = [r.ratio for r in reports]
            assert all(0.0 < r < 2.0 for r in ratios)
            tops.append(max(ratios))
        assert 1.0 / 1.5 <= tops[1] / tops[0] <= 1.5

    def test_corona_start_index_controls_the_floor(self):
        spec = GridSpec(1, 64)
        u = rand_u(spec, 20.0, 3)
        blocks = lp_seq(u)
        blocks[1] = rand_u(spec, 3.0, 99)  # reaches down to zero frequency
        sp = SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN)
        with pytest.raises(ValueError, match="block 1"):
            corona_series_sum(blocks, CORONA, sp, A=2.0, J=1)
        rep = corona_series_sum(blocks, CORONA, sp, A=2.0, J=2)
        assert math.isfinite(rep.ratio)

    def test_empty_and_unknown_mode_rejected(self):
        sp = SpaceParams(0.0, 2.0, 2.0, TRIEBEL_LIZORKIN)
        with pytest.raises(ValueError, match="empty"):
            corona_series_sum([], CORONA, sp)
        u = single_mode(GridSpec(1, 32), 1)
        with pytest.raises(ValueError, match="mode"):
            corona_series_sum([u], "shell", sp)
