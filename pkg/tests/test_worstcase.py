import math

import numpy as np
import pytest

import wcs
from wcs import oracle
from wcs.errors import EpsOutOfRange
from wcs.rng import SplitMix64
from wcs.worstcase import _PhiTilter

ALL_SCENARIO_FAMILIES = [
    wcs.SmoothPhi(wcs.MODIFIED_CHI2),
    wcs.SmoothPhi(wcs.KL),
    wcs.TotalVariation(),
    wcs.Budgeted(),
    wcs.Combination(0.6),
    wcs.SymmetricBox(),
]


def eps_grid(s, family, k=50):
    """Grid inside the family's natural range (phi balls stay below saturation)."""
    if isinstance(family, wcs.SmoothPhi):
        srt = wcs.sort_desc(s)
        from wcs.worstcase import _saturation_divergence

        d_sat, _ = _saturation_divergence(family.phi, srt)
        hi = 0.9 * min(d_sat, 5.0)
    elif isinstance(family, wcs.TotalVariation):
        hi = 2.0
    elif isinstance(family, wcs.Budgeted):
        hi = float(np.max(1.0 / s.probs - 1.0))
    elif isinstance(family, wcs.Combination):
        hi = 1.0
    else:
        hi = 3.0
    return np.linspace(0.0, hi, k)


class TestChi2:
    def test_two_atom_example(self):
        s = wcs.validate([0, 10])
        r = wcs.wc_chi2(s, 0.02)
        assert r.value == pytest.approx(6.0, abs=1e-12)
        assert np.allclose(r.worst_q, [0.4, 0.6], atol=1e-12)
        member = lambda q: 0.5 * np.sum((q - s.probs) ** 2 / s.probs) <= 0.02 + 1e-12
        grid = oracle.brute_force_wc(s, member=member, resolution=1e-4)
        assert r.value == pytest.approx(grid, abs=1e-3)

    def test_three_atom_example(self):
        r = wcs.wc_chi2(wcs.validate([1, 5, 3]), 0.005)
        assert r.value == pytest.approx(3.163299, abs=1e-6)
        assert np.allclose(r.worst_q, [0.292509, 0.374158, 0.333333], atol=1e-6)

    def test_eps_zero(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_chi2(s, 0.0)
        assert r.value == pytest.approx(wcs.mean(s))
        assert np.array_equal(r.worst_q, s.probs)

    def test_closed_form_dual_satisfies_foc(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_chi2(s, 0.005)
        assert r.dual.c == pytest.approx(-wcs.mean(s))
        assert r.dual.delta == pytest.approx(math.sqrt(2 * 0.005 / wcs.variance(s)))

    def test_negative_eps_rejected(self):
        with pytest.raises(EpsOutOfRange):
            wcs.wc_chi2(wcs.validate([0, 1]), -0.1)


class TestSmoothPhi:
    def test_matches_chi2_everywhere(self):
        rng = SplitMix64(21)
        for _ in range(60):
            s = oracle.random_scenario(rng, 2, 5)
            eps = 2.0 * rng.uniform()
            a = wcs.wc_chi2(s, eps)
            b = wcs.wc_smooth_phi(s, wcs.MODIFIED_CHI2, eps)
            assert a.value == pytest.approx(b.value, abs=1e-8)
            assert np.allclose(a.worst_q, b.worst_q, atol=1e-7)

    def test_kl_against_independent_tilt_solve(self):
        # n=2 uniform: worst q = (1-t, t); solve the 1-d divergence equation
        def kl_gap(t):
            return t * math.log(2 * t) + (1 - t) * math.log(2 * (1 - t)) - 0.02

        lo, hi = 0.5 + 1e-12, 1 - 1e-12
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if kl_gap(mid) < 0:
                lo = mid
            else:
                hi = mid
        v_expected = 10 * 0.5 * (lo + hi)
        r = wcs.wc_smooth_phi(wcs.validate([0, 10]), wcs.KL, 0.02)
        assert r.value == pytest.approx(v_expected, abs=1e-9)
        assert r.value == pytest.approx(5.997, abs=1e-3)
        assert r.worst_q[1] == pytest.approx(0.5997, abs=1e-4)

    @pytest.mark.parametrize("phi", [wcs.MODIFIED_CHI2, wcs.KL], ids=lambda p: p.name)
    def test_small_eps_expansion(self, phi):
        s = wcs.validate([1, 5, 3], [0.2, 0.5, 0.3])
        eps = 1e-8
        rate = (wcs.wc_smooth_phi(s, phi, eps).value - wcs.mean(s)) / math.sqrt(eps)
        assert rate == pytest.approx(
            math.sqrt(2 * wcs.variance(s) / phi.curvature), rel=1e-3
        )

    @pytest.mark.parametrize("phi", [wcs.MODIFIED_CHI2, wcs.KL], ids=lambda p: p.name)
    def test_dual_certificate_residuals(self, phi):
        rng = SplitMix64(31)
        for _ in range(40):
            s = oracle.random_scenario(rng, 2, 5)
            eps = 1.5 * rng.uniform() + 1e-4
            r = wcs.wc_smooth_phi(s, phi, eps)
            if r.dual is None:  # saturated or degenerate
                continue
            srt = wcs.sort_desc(s)
            z = phi.inverse_clamped(r.dual.delta * (srt.costs_desc + r.dual.c))
            foc_c = math.fsum((srt.probs_desc * z).tolist()) - 1.0
            foc_delta = eps - phi.divergence(srt.probs_desc * z, srt.probs_desc)
            assert abs(foc_c) < 1e-9
            assert abs(foc_delta) < 1e-9

    def test_saturation_returns_max(self):
        s = wcs.validate([0, 10])
        r = wcs.wc_chi2(s, 5.0)  # max chi2 divergence toward the vertex is 0.5
        assert r.value == 10.0
        assert r.clamped
        r2 = wcs.wc_smooth_phi(s, wcs.KL, 10.0)  # KL saturation at ln 2
        assert r2.value == 10.0

    def test_generic_bisection_path_via_scaled_chi2(self):
        # phi(z) = (z-1)^2 has no analytic inner solve here; its ball of
        # radius eps equals the modified chi2 ball of radius eps/2
        from wcs.core import PhiFunction

        chi2_x2 = PhiFunction(
            name="chi2-times-two",
            value=lambda z: (np.asarray(z, dtype=float) - 1.0) ** 2,
            deriv=lambda z: 2.0 * (np.asarray(z, dtype=float) - 1.0),
            inv_deriv=lambda zeta: 1.0 + 0.5 * np.asarray(zeta, dtype=float),
            zeta_floor=-2.0,
            curvature=2.0,
        )
        rng = SplitMix64(51)
        for _ in range(15):
            s = oracle.random_scenario(rng, 2, 4)
            eps = 0.8 * rng.uniform() + 1e-3
            a = wcs.wc_smooth_phi(s, chi2_x2, eps)
            b = wcs.wc_chi2(s, eps / 2.0)
            assert a.value == pytest.approx(b.value, abs=1e-8)

    def test_eps_zero_dual(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_smooth_phi(s, wcs.KL, 0.0)
        assert r.dual.delta == 0.0
        assert r.dual.c == pytest.approx(-wcs.mean(s))

    def test_no_bracket_for_flat_pseudo_phi(self):
        from wcs.core import PhiFunction
        from wcs.errors import NoBracket

        # inverse derivative pinned at 1: the tilt never moves, divergence
        # stays 0, and the outer search must report the failed bracket
        # (value is +inf at 0 so the saturation shortcut stays out of play)
        flat = PhiFunction(
            name="flat",
            value=lambda z: np.where(np.asarray(z, dtype=float) > 0.0, 0.0, math.inf),
            deriv=lambda z: np.zeros_like(np.asarray(z, dtype=float)),
            inv_deriv=lambda zeta: np.ones_like(np.asarray(zeta, dtype=float)),
            zeta_floor=-math.inf,
            curvature=1.0,
        )
        with pytest.raises(NoBracket):
            wcs.wc_smooth_phi(wcs.validate([0, 10]), flat, 0.5)

    def test_single_atom_scenarios(self):
        s = wcs.validate([5.0])
        for fam in ALL_SCENARIO_FAMILIES:
            r = wcs.worst_case(s, fam, 0.3)
            assert r.degenerate and r.value == 5.0

    def test_inner_solvers_agree(self):
        rng = SplitMix64(41)
        for _ in range(40):
            s = oracle.random_scenario(rng, 2, 6)
            srt = wcs.sort_desc(s)
            for phi in (wcs.MODIFIED_CHI2, wcs.KL):
                tilter = _PhiTilter(phi, srt)
                for delta in (1e-4, 0.05, 0.7, 4.0):
                    ce = tilter._solve_c_exact(delta)
                    cb = tilter._solve_c_bisect(delta)
                    ze = phi.inverse_clamped(delta * (srt.costs_desc + ce))
                    zb = phi.inverse_clamped(delta * (srt.costs_desc + cb))
                    assert np.allclose(srt.probs_desc * ze, srt.probs_desc * zb, atol=1e-9)


class TestTv:
    def test_small_eps_example(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_tv(s, 0.2)
        assert r.value == pytest.approx(3.4, abs=1e-12)
        assert np.allclose(r.worst_q, [0.2333333, 0.4333333, 0.3333333], atol=1e-6)

    def test_large_eps_example(self):
        r = wcs.wc_tv(wcs.validate([1, 5, 3]), 1.0)
        assert r.value == pytest.approx(4.6666667, abs=1e-6)
        assert np.allclose(r.worst_q, [0.0, 0.8333333, 0.1666667], atol=1e-6)

    def test_eps_zero(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_tv(s, 0.0)
        assert r.value == pytest.approx(3.0)
        assert np.allclose(r.worst_q, s.probs)

    def test_eps_beyond_two_clamps(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_tv(s, 3.5)
        assert r.clamped
        assert r.value == pytest.approx(5.0)

    def test_negative_eps(self):
        with pytest.raises(EpsOutOfRange):
            wcs.wc_tv(wcs.validate([0, 1]), -0.5)

    def test_dual_optimality_small_eps(self):
        # strong LP duality: eps * max_i |f_i - theta| + mean = V for eps < min(p)
        rng = SplitMix64(61)
        for _ in range(50):
            s = oracle.random_scenario(rng, 2, 6)
            eps = 0.9 * float(np.min(s.probs)) * rng.uniform()
            if eps == 0.0:
                continue
            r = wcs.wc_tv(s, eps)
            dual_val = eps * float(np.max(np.abs(s.costs - r.dual.theta))) + wcs.mean(s)
            assert dual_val == pytest.approx(r.value, abs=1e-10)
            assert r.dual.lam == pytest.approx(
                float(np.max(np.abs(s.costs - r.dual.theta))), abs=1e-12
            )


class TestBudgeted:
    def test_two_atom_example(self):
        r = wcs.wc_budgeted(wcs.validate([0, 10]), 0.4)
        assert r.value == pytest.approx(7.0, abs=1e-12)
        assert np.allclose(r.worst_q, [0.3, 0.7], atol=1e-12)

    def test_three_atom_example(self):
        r = wcs.wc_budgeted(wcs.validate([1, 5, 3]), 0.5)
        assert r.value == pytest.approx(4.0, abs=1e-12)
        assert np.allclose(r.worst_q, [0.0, 0.5, 0.5], atol=1e-12)

    def test_eps_zero(self):
        s = wcs.validate([1, 5, 3])
        assert wcs.wc_budgeted(s, 0.0).value == pytest.approx(wcs.mean(s))

    def test_value_is_cvar_exactly(self):
        rng = SplitMix64(71)
        for _ in range(60):
            s = oracle.random_scenario(rng, 2, 6)
            eps = 3.0 * rng.uniform()
            e_eff = min(eps, float(np.max(1.0 / s.probs - 1.0)))
            assert wcs.wc_budgeted(s, eps).value == wcs.cvar(s, e_eff / (1.0 + e_eff))

    def test_clamps_at_saturation(self):
        s = wcs.validate([1, 5, 3], [0.2, 0.5, 0.3])
        r = wcs.wc_budgeted(s, 100.0)
        assert r.clamped
        assert r.value == pytest.approx(5.0)
        assert r.dual.slope == 0.0

    def test_slope_on_first_piece(self):
        s = wcs.validate([1, 5, 3])
        r = wcs.wc_budgeted(s, 0.2)
        assert r.dual.slope == pytest.approx(wcs.budgeted_sensitivity(s).value, abs=1e-12)


class TestCombination:
    def test_example(self):
        s = wcs.validate([0, 10])
        assert wcs.wc_combination(s, 0.5, 0.3).value == pytest.approx(6.5, abs=1e-12)
        assert wcs.wc_combination(s, 0.5, 0.0).value == pytest.approx(5.0)
        assert wcs.wc_combination(s, 0.5, 1.0).value == pytest.approx(10.0)

    def test_eps_range(self):
        with pytest.raises(EpsOutOfRange):
            wcs.wc_combination(wcs.validate([0, 1]), 0.5, 1.5)

    def test_slope_identity(self):
        rng = SplitMix64(81)
        for _ in range(40):
            s = oracle.random_scenario(rng, 2, 5)
            alpha = 0.95 * rng.uniform()
            dev = wcs.cvar_deviation(s, alpha)
            for eps in (0.2, 0.6, 1.0):
                quot = (wcs.wc_combination(s, alpha, eps).value - wcs.mean(s)) / eps
                assert quot == pytest.approx(dev, abs=1e-10)


class TestBox:
    def test_examples(self):
        s = wcs.validate([0, 10])
        assert wcs.wc_box(s, wcs.BoxParams(0.0, 2.0)).value == pytest.approx(10.0)
        assert wcs.wc_box_symmetric(s, 1.0).value == pytest.approx(7.5)
        assert wcs.wc_box(s, wcs.BoxParams(1.0, 1.0)).value == pytest.approx(5.0)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            wcs.BoxParams(1.2, 2.0)
        with pytest.raises(ValueError):
            wcs.BoxParams(0.5, 0.9)

    def test_symmetric_slope_at_zero(self):
        s = wcs.validate([1, 5, 3], [0.2, 0.5, 0.3])
        target = wcs.symmetric_box_sensitivity(s).value
        nu = 1e-7
        assert (wcs.wc_box_symmetric(s, nu).value - wcs.mean(s)) / nu == pytest.approx(
            target, rel=1e-5
        )


class TestWassersteinPl:
    def test_newsvendor_example(self):
        from wcs import dro

        params = dro.NewsvendorParams(r=10, c=2, q=0, s=4)
        curve = dro.demand_cost_curve(params, 15.0)
        for eps in (0.0, 0.1, 0.5, 2.0):
            r = wcs.wc_wasserstein_pl([10.0, 20.0], [0.5, 0.5], curve, eps)
            assert r.value == pytest.approx(-85.0 + 10.0 * eps, abs=1e-10)
            assert r.dual.lam == 10.0
        r = wcs.wc_wasserstein_pl([10.0, 20.0], [0.5, 0.5], curve, 0.3)
        assert r.dual.validity_radius == pytest.approx(5.0)
        assert r.dual.attained
        # transported plan reproduces the value exactly
        assert math.fsum((r.worst_q * r.support_costs).tolist()) == pytest.approx(
            r.value, abs=1e-10
        )

    def test_constant_cost(self):
        flat = wcs.PiecewiseLinearCost((), (0.0,), anchor=(0.0, 2.0))
        r = wcs.wc_wasserstein_pl([0.0, 3.0], [0.5, 0.5], flat, 1.0)
        assert r.degenerate
        assert r.value == pytest.approx(2.0)


class TestFamilyInvariants:
    @pytest.mark.parametrize(
        "family", ALL_SCENARIO_FAMILIES, ids=lambda f: type(f).__name__ + getattr(getattr(f, "phi", None), "name", "")
    )
    def test_value_function_shape(self, family):
        rng = SplitMix64(91)
        for _ in range(6):
            s = oracle.random_scenario(rng, 2, 5, min_prob=0.02)
            grid = eps_grid(s, family, k=50)
            vals = [wcs.worst_case(s, family, float(e)).value for e in grid]
            assert vals[0] == pytest.approx(wcs.mean(s), abs=1e-10)
            assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))  # non-decreasing
            diffs = np.diff(vals)
            assert all(b <= a + 1e-8 for a, b in zip(diffs, diffs[1:]))  # concave

    @pytest.mark.parametrize(
        "family", ALL_SCENARIO_FAMILIES, ids=lambda f: type(f).__name__ + getattr(getattr(f, "phi", None), "name", "")
    )
    def test_worst_q_feasible_and_consistent(self, family):
        rng = SplitMix64(92)
        for _ in range(12):
            s = oracle.random_scenario(rng, 2, 5, min_prob=0.02)
            for e in eps_grid(s, family, k=7)[1:]:
                r = wcs.worst_case(s, family, float(e))
                q = r.worst_q
                assert np.all(q >= 0.0)
                assert math.fsum(q.tolist()) == pytest.approx(1.0, abs=1e-10)
                assert math.fsum((q * s.costs).tolist()) == pytest.approx(
                    r.value, abs=1e-8 * (1 + abs(r.value))
                )
                e_eff = float(e)
                if isinstance(family, wcs.SmoothPhi) and not r.clamped:
                    assert family.phi.divergence(q, s.probs) <= e_eff + 1e-9
                elif isinstance(family, wcs.TotalVariation):
                    assert float(np.sum(np.abs(q - s.probs))) <= min(e_eff, 2.0) + 1e-9
                elif isinstance(family, wcs.Budgeted) and not r.clamped:
                    assert np.all(q <= (1.0 + e_eff) * s.probs + 1e-9)
                elif isinstance(family, wcs.Combination):
                    lo = (1.0 - e_eff) * s.probs
                    hi = lo + e_eff * s.probs / (1.0 - family.alpha)
                    assert np.all(q >= lo - 1e-9) and np.all(q <= hi + 1e-9)
                elif isinstance(family, wcs.SymmetricBox):
                    assert np.all(q >= s.probs / (1.0 + e_eff) - 1e-9)
                    assert np.all(q <= (1.0 + e_eff) * s.probs + 1e-9)

    @pytest.mark.parametrize(
        "family",
        [f for f in ALL_SCENARIO_FAMILIES if not isinstance(f, wcs.SmoothPhi)],
        ids=lambda f: type(f).__name__,
    )
    def test_average_sensitivity_below_closed_form_linear_growth(self, family):
        rng = SplitMix64(93)
        for _ in range(5):
            s = oracle.random_scenario(rng, 2, 4, min_prob=0.02)
            closed = wcs.worst_case_sensitivity(s, family).value
            grid = eps_grid(s, family, k=12)[1:]
            quots = [
                (wcs.worst_case(s, family, float(e)).value - wcs.mean(s)) / float(e)
                for e in grid
            ]
            assert all(q <= closed + 1e-6 * (1 + abs(closed)) for q in quots)
            assert all(b <= a + 1e-8 * (1 + abs(a)) for a, b in zip(quots, quots[1:]))

    @pytest.mark.parametrize("phi", [wcs.MODIFIED_CHI2, wcs.KL], ids=lambda p: p.name)
    def test_average_sensitivity_smooth_phi(self, phi):
        # for sqrt growth only the eps-normalized quotient is concavity-monotone;
        # the sqrt-normalized quotient converges to the closed form from either side
        rng = SplitMix64(94)
        family = wcs.SmoothPhi(phi)
        for _ in range(5):
            s = oracle.random_scenario(rng, 2, 4, min_prob=0.02)
            closed = wcs.smooth_phi_sensitivity(s, phi).value
            grid = eps_grid(s, family, k=12)[1:]
            lin = [
                (wcs.worst_case(s, family, float(e)).value - wcs.mean(s)) / float(e)
                for e in grid
            ]
            assert all(b <= a + 1e-8 * (1 + abs(a)) for a, b in zip(lin, lin[1:]))
            tiny = 1e-9
            quot = (wcs.worst_case(s, family, tiny).value - wcs.mean(s)) / math.sqrt(tiny)
            assert quot == pytest.approx(closed, rel=1e-3)

    @pytest.mark.parametrize(
        "family", ALL_SCENARIO_FAMILIES, ids=lambda f: type(f).__name__ + getattr(getattr(f, "phi", None), "name", "")
    )
    def test_constant_costs_degenerate(self, family):
        s = wcs.validate([3.5, 3.5, 3.5])
        r = wcs.worst_case(s, family, 0.5)
        assert r.degenerate
        assert r.value == pytest.approx(3.5)
        assert np.allclose(r.worst_q, s.probs)
