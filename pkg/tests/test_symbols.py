"""Symbol construction, modulation, localization, seminorms, adjoints."""
import json

import numpy as np
import pytest

from pdlab.frame import DEFAULT_FRAME, make_modulation
from pdlab.grid import GridFunction, GridSpec, random_band_limited
from pdlab.symbols import (
    DEFAULT_BUMP,
    ChingSymbol,
    ConstantSymbol,
    RadialBump,
    SeparableSymbol,
    Symbol,
    TabulatedSymbol,
    _parse_theta,
    adjoint_symbol_matrix,
    as_multiindex,
    build_chi,
    check_twisted_diagonal,
    ching_symbol,
    lattice_pairs,
    localize_symbol,
    mask_twisted_diagonal,
    matrix_to_symbol,
    modulate_symbol,
    nyquist_mask,
    operator_matrix,
    parse_symbol_spec,
    partial_ft,
    random_elementary,
    read_pdsy,
    sigma_order_estimate,
    symbol_seminorm,
    write_pdsy,
)


def random_table_symbol(spec, seed=0, d=0.0):
    rng = np.random.default_rng(seed)
    shape = spec.shape + spec.shape
    tab = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return TabulatedSymbol(spec, tab, d=d)


class TestRadialBump:
    def test_plateau_and_support(self):
        A = DEFAULT_BUMP
        assert A(1.0) == 1.0
        assert A(0.9) == 1.0 and A(1.1) == 1.0
        assert A(0.75) == 0.0 and A(1.25) == 0.0
        assert A(0.5) == 0.0 and A(2.0) == 0.0
        t = np.linspace(0, 2, 4001)
        v = A(t)
        assert np.all(v >= 0.0) and np.all(v <= 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            RadialBump(a0=0.0, a1=1.25, b0=0.9, b1=1.1)
        with pytest.raises(ValueError):
            RadialBump(a0=0.75, a1=1.0, b0=0.9, b1=1.1)
        with pytest.raises(ValueError):
            RadialBump(zero_order=1, zero_at=2.0)

    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_zero_factor(self, r):
        A = RadialBump(zero_order=r)
        assert A(1.0) == 0.0
        # at half the window width inside the plateau the base profile is 1
        assert A(1.05) == pytest.approx(0.5**r, abs=1e-15)
        assert A(0.95) == pytest.approx(0.5**r, abs=1e-15)
        # outside the window the bump is unchanged
        assert A(1.1) == 1.0

    def test_overlap_count_default(self):
        # ceil(log2(5/3)) + 1
        assert DEFAULT_BUMP.overlap_count == 2


class TestChingSymbol:
    def test_single_active_term(self):
        # at |eta| = 2^j exactly only scale j fires and A = 1 there
        spec = GridSpec(n=1, N=64)
        a = ching_symbol(d=0.0, theta=1, j_max=4, spec=spec)
        x = spec.axis_coords().reshape(-1, 1)
        eta = np.full((spec.N, 1), 8.0)
        got = a.eval(x, eta)
        assert np.allclose(got, np.exp(-1j * 8 * x[:, 0]), atol=1e-14)

    def test_zero_frequency(self):
        a = ching_symbol(d=0.0, theta=1, j_max=4)
        assert a.eval(np.array([[0.3]]), np.array([[0.0]]))[0] == 0.0

    def test_term_sparsity(self):
        # default corona [3/4, 5/4] meets at most 2 dyadic scales per radius
        a = ching_symbol(d=0.0, theta=1, j_max=10)
        radii = np.linspace(0.1, 1500.0, 3000)
        active = np.zeros_like(radii)
        for j in range(a.j_max + 1):
            active += (a.A(radii * 2.0**-j) > 0.0).astype(float)
        assert active.max() <= 2

    def test_table_matches_eval_on_lattice(self):
        spec = GridSpec(n=1, N=64)
        a = ching_symbol(d=0.5, theta=1, j_max=4, spec=spec)
        xs, es = lattice_pairs(spec)
        assert np.allclose(a.table(spec), a.eval(xs, es), atol=1e-12)

    def test_table_matches_eval_2d(self):
        spec = GridSpec(n=2, N=16)
        a = ching_symbol(d=0.0, theta=(1, 0), j_max=2, spec=spec)
        xs, es = lattice_pairs(spec)
        assert np.allclose(a.table(spec), a.eval(xs, es), atol=1e-12)

    def test_truncation_overflow_rejected(self):
        spec = GridSpec(n=1, N=64)
        with pytest.raises(ValueError, match="Nyquist"):
            ching_symbol(d=0.0, theta=1, j_max=6, spec=spec)

    def test_tdc_flag(self):
        assert ching_symbol(d=0.0, theta=1).tdc_B is None
        a2 = ching_symbol(d=0.0, theta=2)
        assert a2.tdc_B == pytest.approx(1.25 / 0.75)

    def test_theta_validation(self):
        with pytest.raises(ValueError):
            ChingSymbol(d=0.0, theta=(0, 0))


class TestNyquistMask:
    def test_masked_rows(self):
        spec = GridSpec(n=2, N=16)
        mask = nyquist_mask(spec)
        freqs = spec.freq_mesh()
        on_row = (freqs[0] == -8) | (freqs[1] == -8)
        assert np.all(mask[on_row] == 0.0)
        assert np.all(mask[~on_row] == 1.0)

    def test_elementary_terms_masked(self):
        spec = GridSpec(n=1, N=32)
        a = random_elementary(spec, DEFAULT_FRAME, J=4, seed=1)
        for _, g in a.separable_terms(spec):
            assert g[0] == 0.0  # index 0 is eta = -N/2


class TestModulation:
    def test_x_independent_symbol(self):
        spec = GridSpec(n=1, N=32)
        g = np.exp(-0.1 * spec.axis_freqs().astype(float) ** 2)
        a = SeparableSymbol(spec, [(np.ones(spec.shape, dtype=complex), g)])
        psi = make_modulation(1.0, 2.0)
        m = 2
        b = modulate_symbol(a, m, psi)
        want = np.multiply.outer(np.ones(spec.N), g * psi.radial(np.abs(spec.axis_freqs()) / 2.0**m))
        assert np.allclose(b.table(spec), want, atol=1e-12)

    @pytest.mark.parametrize("build", ["separable", "table"])
    def test_saturation_exact(self, build):
        spec = GridSpec(n=1, N=32)
        if build == "separable":
            a = random_elementary(spec, DEFAULT_FRAME, J=3, seed=2)
        else:
            a = random_table_symbol(spec, seed=2)
        psi = make_modulation(1.0, 2.0)
        # plateau covers all |xi| <= 16 once 2^m >= 16
        m_sat = 4
        base = a.table(spec)
        devs = []
        for m in range(1, m_sat + 3):
            devs.append(np.max(np.abs(modulate_symbol(a, m, psi, spec).table(spec) - base)))
        for m in range(m_sat - 1, m_sat + 2):
            assert devs[m] == 0.0
        assert devs[0] > 0.0

    def test_x_spectrum_hard_zeros(self):
        spec = GridSpec(n=1, N=32)
        a = random_table_symbol(spec, seed=3)
        psi = make_modulation(1.0, 2.0)
        b = modulate_symbol(a, 1, psi, spec)
        bhat = partial_ft(b.table(spec), spec)
        dead = psi.radial(np.abs(spec.axis_freqs()) / 2.0) == 0.0
        assert np.max(np.abs(bhat[dead, :])) < 1e-13 * np.max(np.abs(bhat))


class TestChiCutoff:
    def test_plateau_point(self):
        chi = build_chi()
        assert chi(np.array([1.0, 0.0]), np.array([4.0, 0.0])) == 1.0

    def test_vanishing_regions(self):
        chi = build_chi()
        # |xi| >= |eta| dead
        assert chi.from_radii(5.0, 5.0) == 0.0
        assert chi.from_radii(7.0, 5.0) == 0.0
        # |eta| <= 1 dead
        assert chi.from_radii(0.1, 1.0) == 0.0
        assert chi.from_radii(0.0, 0.5) == 0.0

    def test_scale_invariance(self):
        chi = build_chi()
        rng = np.random.default_rng(0)
        xi = rng.uniform(0.0, 6.0, 200)
        eta = rng.uniform(2.0, 8.0, 200)
        for t in (1.0, 1.5, 3.0):
            assert np.allclose(chi.from_radii(t * xi, t * eta), chi.from_radii(xi, eta), atol=1e-12)


class TestLocalization:
    def test_support_rule_exact(self):
        spec = GridSpec(n=1, N=32)
        a = random_table_symbol(spec, seed=4)
        eps = 0.5
        loc = localize_symbol(a, eps, spec)
        ahat = partial_ft(loc.table(spec), spec)
        f = spec.axis_freqs().astype(float)
        s = np.abs(f[:, None] + f[None, :])
        forbidden = 1.0 + s > 2.0 * eps * np.abs(f)[None, :]
        total = np.sum(np.abs(ahat) ** 2)
        assert np.sum(np.abs(ahat[forbidden]) ** 2) < 1e-25 * total

    def test_strict_tdc_annihilates(self):
        spec = GridSpec(n=1, N=32)
        a = mask_twisted_diagonal(random_table_symbol(spec, seed=5), B=2.0)
        for eps in (0.25, 0.125):
            assert np.all(localize_symbol(a, eps, spec).table(spec) == 0.0)
        assert np.any(localize_symbol(a, 0.9, spec).table(spec) != 0.0)

    def test_ching_two_theta_annihilates(self):
        spec = GridSpec(n=1, N=64)
        a = ching_symbol(d=0.0, theta=2, j_max=4, spec=spec)
        # flagged B = 5/3, so eps <= 3/10 kills the localization
        assert a.tdc_B is not None
        eps = 1.0 / (2.0 * a.tdc_B)
        assert np.all(localize_symbol(a, eps, spec).table(spec) == 0.0)

    def test_antidiagonal_preserved_at_eps_one(self):
        spec = GridSpec(n=1, N=32)
        ahat = np.zeros((spec.N, spec.N), dtype=complex)
        i8 = spec.N // 2 + 8
        im8 = spec.N // 2 - 8
        ahat[im8, i8] = 1.0  # xi = -eta, |eta| = 8
        from pdlab.symbols import partial_ift

        a = TabulatedSymbol(spec, partial_ift(ahat, spec))
        loc = localize_symbol(a, 1.0, spec)
        got = partial_ft(loc.table(spec), spec)
        assert got[im8, i8] == pytest.approx(1.0, abs=1e-12)
        got[im8, i8] = 0.0
        assert np.max(np.abs(got)) < 1e-13

    def test_eps_range_validated(self):
        spec = GridSpec(n=1, N=32)
        a = random_table_symbol(spec)
        with pytest.raises(ValueError):
            localize_symbol(a, 0.0, spec)
        with pytest.raises(ValueError):
            localize_symbol(a, 1.5, spec)


class TestSeminorm:
    def test_constant(self):
        spec = GridSpec(n=1, N=32)
        a = ConstantSymbol(1.0)
        assert symbol_seminorm(a, 0, 0, spec) == pytest.approx(1.0, abs=1e-12)
        assert symbol_seminorm(a, 1, 0, spec) == pytest.approx(0.0, abs=1e-12)
        assert symbol_seminorm(a, 0, 2, spec) == pytest.approx(0.0, abs=1e-12)

    def test_budget(self):
        spec = GridSpec(n=1, N=32)
        with pytest.raises(ValueError):
            symbol_seminorm(ConstantSymbol(), 3, 2, spec)

    def test_oscillating_weighted_symbol(self):
        # a(x,eta) = e^{ix} (1+eta^2)^{1/2} of order 1: p00 = 1 at eta = 0,
        # p10 ~ sup |eta|/sqrt(1+eta^2) ~ 1
        spec = GridSpec(n=1, N=64)

        class Osc(Symbol):
            d = 1.0

            def eval(self, x, eta):
                x = np.asarray(x, dtype=float)
                eta = np.asarray(eta, dtype=float)
                return np.exp(1j * x[..., 0]) * np.sqrt(1.0 + eta[..., 0] ** 2)

        a = Osc()
        assert symbol_seminorm(a, 0, 0, spec) == pytest.approx(1.0, abs=1e-10)
        assert 0.9 <= symbol_seminorm(a, 1, 0, spec) <= 1.1
        # x-derivative multiplies by i, weight rises by one power
        p01 = symbol_seminorm(a, 0, 1, spec)
        assert 0.4 <= p01 <= 1.1

    def test_ching_x_derivatives_finite(self):
        spec = GridSpec(n=1, N=128)
        a = ching_symbol(d=0.0, theta=1, j_max=5, spec=spec)
        p00 = symbol_seminorm(a, 0, 0, spec)
        assert 0.9 <= p00 <= 2.1
        for beta in (1, 2):
            p = symbol_seminorm(a, 0, beta, spec)
            assert np.isfinite(p)
            assert p <= 10.0 * p00

    def test_tabulated_branch_matches_eval_branch(self):
        spec = GridSpec(n=1, N=64)
        a = ching_symbol(d=0.0, theta=1, j_max=3, spec=spec)
        tab = TabulatedSymbol(spec, a.table(spec), d=a.d)
        # x-differences are identical; eta steps differ (0.5 vs 1) so compare loosely
        for alpha, beta in ((0, 0), (0, 1)):
            pe = symbol_seminorm(a, alpha, beta, spec)
            pt = symbol_seminorm(tab, alpha, beta, spec)
            assert pt == pytest.approx(pe, rel=0.2)

    def test_multiindex_validation(self):
        assert as_multiindex(2, 1) == (2,)
        assert as_multiindex((1, 0), 2) == (1, 0)
        with pytest.raises(ValueError):
            as_multiindex((1,), 2)
        with pytest.raises(ValueError):
            as_multiindex(-1, 1)


class TestTwistedDiagonalCheck:
    def test_x_independent_always_holds(self):
        spec = GridSpec(n=1, N=32)
        g = np.exp(-0.05 * spec.axis_freqs().astype(float) ** 2)
        a = SeparableSymbol(spec, [(np.ones(spec.shape, dtype=complex), g)])
        rep = check_twisted_diagonal(a, B=1.0, tau=1e-10)
        assert rep.holds and rep.violation_mass == 0.0

    def test_plain_ching_fails_every_B(self):
        spec = GridSpec(n=1, N=128)
        a = ching_symbol(d=0.0, theta=1, j_max=5, spec=spec)
        for B in (1.0, 2.0, 4.0):
            rep = check_twisted_diagonal(a, B=B, tau=1e-10, spec=spec)
            assert not rep.holds
            assert rep.violation_mass > 1e-3

    def test_two_theta_variant_holds(self):
        spec = GridSpec(n=1, N=128)
        a = ching_symbol(d=0.0, theta=2, j_max=5, spec=spec)
        rep = check_twisted_diagonal(a, B=2.0, tau=1e-10, spec=spec)
        assert rep.holds and rep.violation_mass == 0.0

    def test_masked_symbol_holds(self):
        spec = GridSpec(n=1, N=32)
        a = mask_twisted_diagonal(random_table_symbol(spec, seed=6), B=2.0)
        rep = check_twisted_diagonal(a, B=2.0, tau=1e-10)
        assert rep.holds
        assert a.tdc_B == 2.0


class TestSigmaEstimate:
    def test_strict_tdc_reports_infinity(self):
        spec = GridSpec(n=1, N=64)
        a = mask_twisted_diagonal(random_table_symbol(spec, seed=7), B=2.0)
        fit = sigma_order_estimate(a, 0, eps_grid=(0.25, 0.125, 0.0625))
        assert fit.sigma_hat == float("inf")
        assert fit.values == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("r,tol", [(0, 0.75), (1, 0.75)])
    def test_ching_zero_order(self, r, tol):
        spec = GridSpec(n=1, N=256)
        A = RadialBump(zero_order=r)
        a = ching_symbol(d=0.0, theta=1, A=A, j_max=6, spec=spec)
        tab = TabulatedSymbol(spec, a.table(spec), d=0.0)
        fit = sigma_order_estimate(tab, 0)
        assert abs(fit.sigma_hat - r) <= tol

    def test_annulus_bound_stable_across_grids(self):
        # shell L2 values stay under C R^d (eps R)^{n/2 - |alpha|} with one C
        alpha = 0
        cs = []
        for N in (128, 256):
            spec = GridSpec(n=1, N=N)
            a = ching_symbol(d=0.0, theta=1, j_max=4, spec=spec)
            tab = TabulatedSymbol(spec, a.table(spec), d=0.0)
            fit = sigma_order_estimate(tab, alpha)
            best = 0.0
            for eps, shells in zip(fit.eps, fit.shell_values):
                for R, raw in shells.items():
                    bound = R**tab.d * (eps * R) ** (spec.n / 2.0 - alpha)
                    best = max(best, raw / bound)
            cs.append(best)
        assert abs(cs[1] - cs[0]) <= 0.2 * cs[0]

    def test_eps_validation(self):
        spec = GridSpec(n=1, N=32)
        with pytest.raises(ValueError):
            sigma_order_estimate(random_table_symbol(spec), 0, eps_grid=(1.0,))


class TestAdjoint:
    def test_identity_self_adjoint(self):
        spec = GridSpec(n=1, N=16)
        b = adjoint_symbol_matrix(ConstantSymbol(1.0), spec)
        assert np.allclose(b.table(spec), 1.0, atol=1e-12)

    def test_multiplication_conjugates(self):
        spec = GridSpec(n=1, N=16)
        rng = np.random.default_rng(8)
        m = rng.standard_normal(spec.N) + 1j * rng.standard_normal(spec.N)
        a = SeparableSymbol(spec, [(m, np.ones(spec.shape))])
        b = adjoint_symbol_matrix(a, spec)
        want = np.multiply.outer(np.conj(m), np.ones(spec.N))
        assert np.allclose(b.table(spec), want, atol=1e-12)

    @pytest.mark.parametrize("n,N", [(1, 16), (2, 8)])
    def test_involution(self, n, N):
        spec = GridSpec(n=n, N=N)
        a = random_table_symbol(spec, seed=9)
        bb = adjoint_symbol_matrix(adjoint_symbol_matrix(a, spec), spec)
        assert np.allclose(bb.table(spec), a.table(spec), atol=1e-10)

    @pytest.mark.parametrize("n,N", [(1, 16), (2, 8)])
    def test_hat_relation(self, n, N):
        # b_hat(xi,eta) = conj(a_hat(-xi, xi+eta)) with mod-N folding
        spec = GridSpec(n=n, N=N)
        a = random_table_symbol(spec, seed=10)
        ahat = partial_ft(a.table(spec), spec)
        bhat = partial_ft(adjoint_symbol_matrix(a, spec).table(spec), spec)
        half = N // 2
        f = spec.axis_freqs()

        def fold_idx(v):
            return (v + half) % N

        if n == 1:
            XI, ETA = np.meshgrid(f, f, indexing="ij")
            want = np.conj(ahat[fold_idx(-XI), fold_idx(XI + ETA)])
        else:
            X0, X1, E0, E1 = np.meshgrid(f, f, f, f, indexing="ij")
            want = np.conj(ahat[fold_idx(-X0), fold_idx(-X1), fold_idx(X0 + E0), fold_idx(X1 + E1)])
        assert np.allclose(bhat, want, atol=1e-10)

    def test_matrix_round_trip(self):
        spec = GridSpec(n=1, N=16)
        a = random_table_symbol(spec, seed=11)
        M = operator_matrix(a, spec)
        back = operator_matrix(matrix_to_symbol(M, spec), spec)
        assert np.allclose(back, M, atol=1e-12)

    def test_size_guard(self):
        spec = GridSpec(n=2, N=128)
        with pytest.raises(ValueError, match="dense"):
            operator_matrix(ConstantSymbol(), spec)

    def test_tdc_adjoint_support(self):
        # in-band two-theta symbol: adjoint support obeys |xi+eta| <= B(|eta|+1)
        spec = GridSpec(n=1, N=128)
        a = ching_symbol(d=0.0, theta=2, j_max=4, spec=spec)
        tab = TabulatedSymbol(spec, a.table(spec), d=0.0)
        bhat = partial_ft(adjoint_symbol_matrix(tab, spec).table(spec), spec)
        f = spec.axis_freqs().astype(float)
        s = np.abs(f[:, None] + f[None, :])
        B = a.tdc_B
        outside = s > B * (np.abs(f)[None, :] + 1.0)
        total = np.sum(np.abs(bhat) ** 2)
        assert np.sum(np.abs(bhat[outside]) ** 2) <= 1e-8 * total


class TestSerialization:
    def test_pdsy_round_trip(self, tmp_path):
        spec = GridSpec(n=1, N=16)
        a = random_table_symbol(spec, seed=12, d=0.75)
        path = tmp_path / "sym.pdsy"
        write_pdsy(a, spec, path)
        back = read_pdsy(path)
        assert back.spec == spec
        assert back.d == 0.75
        assert np.array_equal(back.table(spec), a.table(spec))

    def test_pdsy_bad_magic(self, tmp_path):
        path = tmp_path / "junk.pdsy"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValueError, match="PDSY"):
            read_pdsy(path)

    def test_pdsy_truncated(self, tmp_path):
        spec = GridSpec(n=1, N=16)
        path = tmp_path / "sym.pdsy"
        write_pdsy(random_table_symbol(spec), spec, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="bytes"):
            read_pdsy(path)


class TestParseSymbolSpec:
    def test_theta_forms(self):
        assert _parse_theta("+1") == (1,)
        assert _parse_theta("-1") == (-1,)
        assert _parse_theta("2") == (2,)
        assert _parse_theta("e1") == (1, 0)
        assert _parse_theta("-e2") == (0, -1)
        assert _parse_theta("2e1") == (2, 0)
        assert _parse_theta("e1-e2") == (1, -1)

    def test_ching_string(self):
        spec = GridSpec(n=1, N=64)
        a = parse_symbol_spec("ching:d=0,theta=+1,jmax=4", spec)
        assert isinstance(a, ChingSymbol)
        assert a.j_max == 4 and a.theta == (1,)

    def test_ching_with_zero_order(self):
        spec = GridSpec(n=1, N=128)
        a = parse_symbol_spec("ching:d=0,theta=+1,jmax=5,zr=2,zw=0.05", spec)
        assert a.A.zero_order == 2 and a.A.zero_width == 0.05

    def test_const(self):
        spec = GridSpec(n=1, N=16)
        a = parse_symbol_spec("const:c=2", spec)
        assert isinstance(a, ConstantSymbol) and a.c == 2.0

    def test_elementary_random(self):
        spec = GridSpec(n=1, N=32)
        a = parse_symbol_spec("elementary:seed=3,J=4", spec)
        assert len(a.multipliers) == 5

    def test_elementary_manifest(self, tmp_path):
        from pdlab.grid import write_pdgf

        spec = GridSpec(n=1, N=16)
        rng = np.random.default_rng(1)
        names = []
        for j in range(3):
            m = random_band_limited(spec, 2.0**j, rng)
            write_pdgf(m, tmp_path / f"m{j}.pdgf")
            names.append(f"m{j}.pdgf")
        manifest = tmp_path / "sym.json"
        manifest.write_text(json.dumps({"d": 0.0, "multipliers": names}))
        a = parse_symbol_spec(f"elementary:file={manifest}", spec)
        assert len(a.multipliers) == 3

    def test_table_file(self, tmp_path):
        spec = GridSpec(n=1, N=16)
        path = tmp_path / "sym.pdsy"
        write_pdsy(random_table_symbol(spec, seed=13), spec, path)
        a = parse_symbol_spec(f"table:file={path}", spec)
        assert a.spec == spec
        with pytest.raises(ValueError, match="expected"):
            parse_symbol_spec(f"table:file={path}", GridSpec(n=1, N=32))

    def test_bad_inputs(self):
        spec = GridSpec(n=1, N=16)
        with pytest.raises(ValueError, match="unknown symbol kind"):
            parse_symbol_spec("mystery:x=1", spec)
        with pytest.raises(ValueError, match="bad symbol option"):
            parse_symbol_spec("ching:d", spec)
