import math

import numpy as np
import pytest

from airsnet.mathkit import DomainError, gauss_laguerre, integrate_semi_infinite
from airsnet.mixgamma import (
    AccuracyError,
    InvalidDistributionError,
    LinkStats,
    MixtureGamma,
    cascaded_power_dist,
    direct_power_dist,
)
from conftest import rel_err

RULE = gauss_laguerre(20)


def unit_link(m):
    # distance 1 at reference gain 1: path loss exactly 1, so the mixture's
    # scale factor W/(amp_sq N^2) is 1 for amp_sq = N = 1
    return LinkStats.from_distance(m, 1.0, 3.0, 1.0)


def single(eps, beta, xi):
    return MixtureGamma(
        log_epsilon=np.array([math.log(eps)]),
        beta=np.array([float(beta)]),
        xi=np.array([float(xi)]),
    )


def product_mean_bruteforce(m1, m2):
    """Mean of X1*X2 (independent unit-mean Gammas) via its product density.

    f_Z(z) = int f1(u) f2(z/u) / u du, integrated against z numerically;
    nothing here reuses the mixture construction.
    """

    def f_z(z):
        def inner(u):
            x2 = z / u
            lf1 = m1 * math.log(m1) + (m1 - 1.0) * np.log(u) - m1 * u - math.lgamma(m1)
            lf2 = m2 * math.log(m2) + (m2 - 1.0) * np.log(x2) - m2 * x2 - math.lgamma(m2)
            return np.exp(lf1 + lf2) / u

        return integrate_semi_infinite(inner, 1e-9, max_panels=8192)

    return integrate_semi_infinite(
        lambda z: np.array([zz * f_z(zz) for zz in np.atleast_1d(z)]),
        1e-7,
        max_panels=8192,
    )


def product_cdf_bruteforce(z):
    """P(X1*X2 <= z) for unit-mean exponentials, by direct convolution."""
    return integrate_semi_infinite(
        lambda u: np.exp(-u) * (1.0 - np.exp(-z / u)), 1e-10, max_panels=8192
    )


class TestDirectPowerDist:
    def test_rayleigh_at_100m(self):
        link = LinkStats.from_distance(1.0, 100.0, 3.0, 1e-3)
        dist = direct_power_dist(link)
        assert dist.count == 1
        assert dist.beta[0] == 1.0
        assert dist.xi[0] == pytest.approx(1e9, rel=1e-12)
        assert dist.epsilon[0] == pytest.approx(1e9, rel=1e-12)
        assert dist.moment(1) == pytest.approx(1e-9, rel=1e-12)

    def test_unit_distance_shape_two(self):
        dist = direct_power_dist(unit_link(2.0))
        assert dist.beta[0] == 2.0
        assert dist.xi[0] == 2.0
        assert dist.epsilon[0] == pytest.approx(4.0, rel=1e-12)
        assert dist.moment(1) == pytest.approx(1.0, rel=1e-12)

    def test_mean_is_path_loss(self):
        link = LinkStats.from_distance(3.0, 50.0, 3.0, 1e-3)
        dist = direct_power_dist(link)
        assert rel_err(dist.moment(1), 1e-3 * 50.0**-3) < 1e-12

    @pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 4.0])
    def test_pdf_matches_gamma_density_pointwise(self, m):
        link = LinkStats.from_distance(m, 80.0, 3.0, 1e-3)
        dist = direct_power_dist(link)
        mean = dist.moment(1)
        xi = m * 80.0**3 / 1e-3
        for x in (0.1 * mean, mean, 10.0 * mean):
            ref = math.exp(
                m * math.log(xi) + (m - 1.0) * math.log(x) - xi * x - math.lgamma(m)
            )
            assert rel_err(dist.pdf(x), ref) < 1e-12

    def test_moments(self):
        link = LinkStats.from_distance(1.0, 10.0, 3.0, 1e-3)
        dist = direct_power_dist(link)
        mean = 1e-3 * 10.0**-3
        assert rel_err(dist.moment(2), 2.0 * mean**2) < 1e-12

    def test_link_invariants(self):
        with pytest.raises(DomainError):
            LinkStats.from_distance(0.3, 10.0, 3.0, 1e-3)
        with pytest.raises(DomainError):
            LinkStats.from_distance(1.0, -5.0, 3.0, 1e-3)
        link = LinkStats.from_distance(2.0, 37.0, 2.7, 1e-3)
        assert link.path_loss == 1e-3 * 37.0**-2.7


class TestCascadedPowerDist:
    def test_rayleigh_component_structure(self):
        mix = cascaded_power_dist(unit_link(1.0), unit_link(1.0), 1.0, 1, RULE)
        assert mix.count == 20
        assert np.all(mix.beta == 1.0)
        # exponent m_iu - m_bi - 1 = -1: eps_i proportional to w_i / t_i
        expected = RULE.weights / RULE.nodes
        assert np.allclose(mix.epsilon, expected, rtol=1e-12)
        assert np.allclose(mix.xi, 1.0 / RULE.nodes, rtol=1e-12)

    @pytest.mark.parametrize("m_bi,m_iu", [(1.0, 1.0), (2.0, 1.0), (2.0, 3.0)])
    def test_mean_against_product_density_oracle(self, m_bi, m_iu):
        # frozen behavior: the mixture mean equals the mean of the product of
        # two unit-mean Gamma powers (= 1) times amp_sq N^2 / W
        oracle = product_mean_bruteforce(m_bi, m_iu)
        mix = cascaded_power_dist(unit_link(m_bi), unit_link(m_iu), 1.0, 1, RULE)
        assert rel_err(mix.moment(1), oracle) < 1e-6

    def test_mean_scaling_with_physical_parameters(self):
        bi = LinkStats.from_distance(1.0, 100.0, 3.0, 1e-3)
        iu = LinkStats.from_distance(1.0, 30.0, 3.0, 1e-3)
        amp_sq, n = 2.0e5 / 64.0, 64
        mix = cascaded_power_dist(bi, iu, amp_sq, n, RULE)
        expected = amp_sq * n**2 * bi.path_loss * iu.path_loss
        assert rel_err(mix.moment(1), expected) < 1e-9

    @pytest.mark.parametrize("m_bi", [1.0, 2.0, 3.0])
    @pytest.mark.parametrize("m_iu", [1.0, 2.0, 3.0])
    def test_normalization_defect(self, m_bi, m_iu):
        mix = cascaded_power_dist(unit_link(m_bi), unit_link(m_iu), 1.0, 1, RULE)
        assert abs(mix.normalization_mass() - 1.0) <= 1e-4

    @pytest.mark.parametrize("m_bi", [1.0, 2.0, 3.0])
    @pytest.mark.parametrize("m_iu", [1.0, 2.0, 3.0])
    def test_defect_improves_with_order(self, m_bi, m_iu):
        # for integer shapes both defects sit at roundoff, hence the floor
        mix20 = cascaded_power_dist(unit_link(m_bi), unit_link(m_iu), 1.0, 1, RULE)
        mix10 = cascaded_power_dist(
            unit_link(m_bi), unit_link(m_iu), 1.0, 1, gauss_laguerre(10)
        )
        d20 = abs(mix20.normalization_mass() - 1.0)
        d10 = abs(mix10.normalization_mass() - 1.0)
        assert d20 <= d10 + 1e-13

    def test_defect_improvement_is_strict_off_integer(self):
        bi, iu = unit_link(1.5), unit_link(2.5)
        d20 = abs(cascaded_power_dist(bi, iu, 1.0, 1, RULE).normalization_mass() - 1.0)
        d10 = abs(
            cascaded_power_dist(bi, iu, 1.0, 1, gauss_laguerre(10)).normalization_mass()
            - 1.0
        )
        assert d20 < d10
        assert d20 <= 1e-4

    def test_cdf_at_bruteforce_median(self):
        # median of the product-of-two-exponentials law from direct convolution
        lo, hi = 1e-6, 50.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if product_cdf_bruteforce(mid) < 0.5:
                lo = mid
            else:
                hi = mid
        median = 0.5 * (lo + hi)
        mix = cascaded_power_dist(unit_link(1.0), unit_link(1.0), 1.0, 1, RULE)
        assert abs(mix.cdf(median) - 0.5) <= 0.01

    def test_coarse_rule_rejected(self):
        with pytest.raises(AccuracyError):
            cascaded_power_dist(unit_link(1.0), unit_link(1.0), 1.0, 1, gauss_laguerre(3))


class TestMixtureAlgebra:
    def test_pdf_exponential(self):
        assert rel_err(single(1, 1, 1).pdf(0.5), math.exp(-0.5)) < 1e-12

    def test_pdf_gamma_2_3(self):
        assert rel_err(single(9, 2, 3).pdf(1.0), 9.0 * math.exp(-3.0)) < 1e-12

    def test_pdf_domain(self):
        with pytest.raises(DomainError):
            single(1, 1, 1).pdf(0.0)

    def test_cascade_pdf_integrates_to_mass(self):
        bi = LinkStats.from_distance(1.0, 100.0, 3.0, 1e-3)
        iu = LinkStats.from_distance(1.0, 30.0, 3.0, 1e-3)
        mix = cascaded_power_dist(bi, iu, 2.0e5 / 64.0, 64, RULE)
        mass = integrate_semi_infinite(lambda x: mix.pdf(x), 1e-8, max_panels=16384)
        assert abs(mass - 1.0) <= 1e-4

    def test_laplace_at_zero_is_mass(self):
        mix = cascaded_power_dist(unit_link(2.0), unit_link(1.0), 1.0, 1, RULE)
        assert mix.laplace(0.0) == pytest.approx(mix.normalization_mass(), rel=1e-12)

    def test_laplace_exponential(self):
        assert single(1, 1, 1).laplace(1.0) == pytest.approx(0.5, rel=1e-12)

    def test_laplace_substitution(self):
        assert single(4, 2, 2).laplace(2.0) == pytest.approx(0.25, rel=1e-12)

    def test_laplace_decreasing(self):
        mix = cascaded_power_dist(unit_link(1.0), unit_link(2.0), 1.0, 1, RULE)
        values = [mix.laplace(s) for s in (0.0, 0.5, 1.0, 5.0, 50.0)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 < v <= 1.0 + 1e-4 for v in values)

    def test_moment_finite_through_four(self):
        mix = cascaded_power_dist(unit_link(1.0), unit_link(1.0), 1.0, 1, RULE)
        for ell in (1.0, 2.0, 3.0, 4.0):
            assert math.isfinite(mix.moment(ell))

    def test_moment_domain(self):
        with pytest.raises(DomainError):
            single(1, 1, 1).moment(0.0)


class TestSampling:
    def test_exponential_mean(self, rng):
        samples = single(1, 1, 1).sample(rng, 1_000_000)
        assert abs(samples.mean() - 1.0) < 0.003

    def test_gamma_4_2_mean(self, rng):
        samples = single(2.0**4 / math.gamma(4.0), 4, 2).sample(rng, 200_000)
        assert abs(samples.mean() - 2.0) < 0.01

    def test_cascade_sampling_matches_moments(self, rng):
        mix = cascaded_power_dist(unit_link(1.0), unit_link(1.0), 1.0, 1, RULE)
        n = 1_000_000
        samples = mix.sample(rng, n)
        for ell in (1.0, 2.0):
            target = mix.moment(ell)
            x = samples**ell
            se = x.std(ddof=1) / math.sqrt(n)
            assert abs(x.mean() - target) < 4.0 * se, ell

    def test_cascade_sampling_ks_against_own_cdf(self, rng):
        mix = cascaded_power_dist(unit_link(1.0), unit_link(1.0), 1.0, 1, RULE)
        n = 100_000
        samples = np.sort(mix.sample(rng, n))
        cdf = mix.cdf(samples)
        empirical_hi = np.arange(1, n + 1) / n
        empirical_lo = np.arange(0, n) / n
        ks = max(np.abs(cdf - empirical_hi).max(), np.abs(cdf - empirical_lo).max())
        assert ks <= 0.005

    def test_component_probabilities_renormalized(self):
        mix = cascaded_power_dist(unit_link(1.5), unit_link(2.5), 1.0, 1, RULE)
        probs = mix.component_probabilities()
        assert probs.sum() == pytest.approx(1.0, abs=1e-15)
        assert np.all(probs > 0)

    def test_unnormalized_distribution_rejected(self, rng):
        bad = single(5.0, 1, 1)  # mass 5, defect far beyond 1e-3
        with pytest.raises(InvalidDistributionError):
            bad.sample(rng, 10)

    def test_serialization_round_trip(self):
        mix = cascaded_power_dist(unit_link(1.0), unit_link(2.0), 1.0, 1, RULE)
        obj = mix.to_json_obj()
        assert len(obj) == 20
        assert obj[0].keys() == {"epsilon", "beta", "xi"}
        rebuilt = MixtureGamma(
            log_epsilon=np.log([c["epsilon"] for c in obj]),
            beta=np.array([c["beta"] for c in obj]),
            xi=np.array([c["xi"] for c in obj]),
        )
        assert rebuilt.moment(1) == pytest.approx(mix.moment(1), rel=1e-12)
