"""Closed-form and quadrature performance expressions.

Conditional SNR moments, the amplification-noise Laplace transform, mean SNR
(quadrature, closed form, and the Rayleigh special case), the passive
baseline, achievable rates, and the geometry-averaged metric.

Conventions baked in here (see README for the full discussion):

* the averaged amplification gain eta/N replaces the per-draw gain in all
  analytic expressions, with eta = P_F / (P_t eps d_BI^-alpha + sigma_F^2);
* the component rate xi_i multiplies BOTH the moment-kernel exponential and
  the noise-Laplace argument (the reading that reproduces the Rayleigh
  closed form exactly and matches the model-consistent Monte-Carlo oracle;
  the alternative reading stays available behind component_rate_in_noise);
* the amplified-noise law is path-loss-free on the reflector->user hop, i.e.
  noise = (eta/N) * N * sigma_F^2 * G with G a unit-mean Gamma(m_IU) power;
  the physical simulator keeps the path loss, and `validate` reports the
  resulting measured gap;
* distances are floored at 1 m (the reference distance of epsilon_ref).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, NetworkConfig
from .mathkit import (
    DomainError,
    exp_e1_scaled,
    integrate_interval_with_error,
    integrate_semi_infinite_with_error,
    ln_gamma,
)
from .mixgamma import LinkStats, MixtureGamma, cascaded_power_dist

__all__ = [
    "MetricResult",
    "UnsupportedParameterError",
    "averaged_amp_gain",
    "cascaded_mixture",
    "snr_moment_direct",
    "noise_laplace",
    "snr_moment_active",
    "mean_snr_integral",
    "mean_snr_closed",
    "mean_snr_rayleigh",
    "mean_snr_passive",
    "rate_direct",
    "rate_active",
    "average_metric",
    "region_weight_calibration",
    "region2_nearest_pdf_mass",
]

LOG2E = math.log2(math.e)
QUAD_TOL = 1e-8
REGION_TOL = 1e-6


class UnsupportedParameterError(ValueError):
    """The closed form does not cover this parameter point."""


@dataclass(frozen=True)
class MetricResult:
    value: float
    metric_kind: str
    method: str
    error_estimate: float

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")


def averaged_amp_gain(d_bi: float, cfg: NetworkConfig) -> float:
    """eta = P_F / (P_t eps d_BI^-alpha + sigma_F^2); avg amp gain is eta/N."""
    p = cfg.power
    zeta_bi = cfg.epsilon_ref * cfg.floored(d_bi) ** (-cfg.alpha)
    return p.p_f / (p.p_t * zeta_bi + p.sigma_f2)


def _links(d_bi: float, d_iu: float, cfg: NetworkConfig) -> tuple[LinkStats, LinkStats]:
    bi = LinkStats.from_distance(cfg.m_bi, cfg.floored(d_bi), cfg.alpha, cfg.epsilon_ref)
    iu = LinkStats.from_distance(cfg.m_iu, cfg.floored(d_iu), cfg.alpha, cfg.epsilon_ref)
    return bi, iu


def _w_product(d_bi: float, d_iu: float, cfg: NetworkConfig) -> float:
    bi, iu = _links(d_bi, d_iu, cfg)
    return 1.0 / (bi.path_loss * iu.path_loss)


def cascaded_mixture(d_bi: float, d_iu: float, cfg: NetworkConfig) -> MixtureGamma:
    """The cascaded-power mixture at floored distances with the averaged gain."""
    bi, iu = _links(d_bi, d_iu, cfg)
    eta = averaged_amp_gain(d_bi, cfg)
    n = cfg.geometry.n_elements
    return cascaded_power_dist(bi, iu, eta / n, n, cfg.rule())


def snr_moment_direct(ell: float, d_bu: float, cfg: NetworkConfig) -> float:
    """Direct-link conditional SNR moment of order ell.

    Gamma(m+ell)/Gamma(m) * (m d^alpha sigma^2 / (eps P_t))^-ell.
    """
    if not ell > 0:
        raise DomainError(f"moment order must be positive, got {ell}")
    d = cfg.floored(d_bu)
    m = cfg.m_bu
    scale = m * d**cfg.alpha * cfg.power.sigma2 / (cfg.epsilon_ref * cfg.power.p_t)
    return math.exp(ln_gamma(m + ell) - ln_gamma(m) - ell * math.log(scale))


def noise_laplace(z, xi_i: float, d_bi: float, d_iu: float, cfg: NetworkConfig,
                  component_rate_in_noise: bool = True):
    """Laplace transform of the amplified thermal noise at (scaled) argument z.

    (1 + z * (eta/N) N sigma_F^2 xi_i / (P_t m_IU))^-m_IU, with xi_i included
    by default (component_rate_in_noise=False drops it; kept as a diagnostic
    for the alternative typographic reading, which the MC oracle rejects).
    Value is in (0, 1], equals 1 at z = 0, and tends to 1 as sigma_F^2 -> 0.
    """
    arr = np.asarray(z, dtype=float)
    if np.any(arr < 0):
        raise DomainError("noise_laplace requires z >= 0")
    eta = averaged_amp_gain(d_bi, cfg)
    m = cfg.m_iu
    rate = eta * cfg.power.sigma_f2 / (cfg.power.p_t * m)
    if component_rate_in_noise:
        rate = rate * xi_i
    out = np.exp(-m * np.log1p(arr * rate))
    return float(out) if np.asarray(z).ndim == 0 else out


def _active_components(d_bi: float, d_iu: float, cfg: NetworkConfig):
    """Mixture masses and rates plus the noise-Laplace rate per component."""
    mix = cascaded_mixture(d_bi, d_iu, cfg)
    lgam_beta = np.array([math.lgamma(b) for b in mix.beta])
    masses = np.exp(mix.log_epsilon + lgam_beta - mix.beta * np.log(mix.xi))
    eta = averaged_amp_gain(d_bi, cfg)
    noise_rates = eta * cfg.power.sigma_f2 * mix.xi / (cfg.power.p_t * cfg.m_iu)
    decay = mix.xi * cfg.power.sigma2 / cfg.power.p_t
    return mix, masses, decay, noise_rates


def snr_moment_active(ell: float, d_bi: float, d_iu: float, cfg: NetworkConfig,
                      component_rate_in_noise: bool = True) -> float:
    """Amplified-link conditional SNR moment by semi-infinite quadrature.

    Integrates the mixture moment kernel against the noise Laplace transform:
    sum_i mass_i * Gamma(beta+ell)/(Gamma(beta) Gamma(ell)) *
    integral z^(ell-1) e^(-z xi_i sigma^2/P_t) L_i(z) dz.
    """
    if not ell > 0:
        raise DomainError(f"moment order must be positive, got {ell}")
    mix, masses, decay, noise_rates = _active_components(d_bi, d_iu, cfg)
    if not component_rate_in_noise:
        eta = averaged_amp_gain(d_bi, cfg)
        noise_rates = np.full_like(noise_rates,
                                   eta * cfg.power.sigma_f2 / (cfg.power.p_t * cfg.m_iu))
    m_iu = cfg.m_iu
    beta = float(mix.beta[0])
    coeff = math.exp(ln_gamma(beta + ell) - ln_gamma(beta) - ln_gamma(ell))
    weights = masses * coeff

    def kernel(zs: np.ndarray) -> np.ndarray:
        z = zs[:, None]
        terms = np.exp(-z * decay[None, :] - m_iu * np.log1p(z * noise_rates[None, :]))
        mixed = terms @ weights
        if ell != 1.0:
            mixed = mixed * zs ** (ell - 1.0)
        return mixed

    value, _ = integrate_semi_infinite_with_error(kernel, QUAD_TOL, max_panels=16384)
    return value


def mean_snr_integral(d_bi: float, d_iu: float, cfg: NetworkConfig) -> float:
    """Mean amplified-link SNR as the per-node integral sum.

    sum_i K_i phi_i with K_i = w_i t_i^(2m-1) m_BI^(1-m) (N P_t/(sigma_F^2 W))^m
    / Gamma(m) and phi_i = integral e^(-a_i z) (z + D_i)^-m dz, where
    a_i D_i = m_IU sigma^2/(eta sigma_F^2) for every node.
    """
    m = cfg.m_iu
    n = cfg.geometry.n_elements
    p = cfg.power
    rule = cfg.rule()
    w_big = _w_product(d_bi, d_iu, cfg)
    eta = averaged_amp_gain(d_bi, cfg)
    t = rule.nodes
    log_pref = m * math.log(n * p.p_t / (p.sigma_f2 * w_big))
    k_coeff = np.exp(
        np.log(rule.weights)
        + (2.0 * m - 1.0) * np.log(t)
        - ln_gamma(m)
        + (1.0 - m) * math.log(cfg.m_bi)
        + log_pref
    )
    a = cfg.m_bi * m * w_big * p.sigma2 / (t * eta * n * p.p_t)
    d_shift = n * p.p_t * t / (p.sigma_f2 * cfg.m_bi * w_big)

    total = 0.0
    for ki, ai, di in zip(k_coeff, a, d_shift):
        phi, _ = integrate_semi_infinite_with_error(
            lambda z: np.exp(-ai * z - m * np.log(z + di)), QUAD_TOL, max_panels=16384
        )
        total += ki * phi
    return total


def mean_snr_closed(d_bi: float, d_iu: float, cfg: NetworkConfig) -> float:
    """Closed-form mean amplified-link SNR for integer m_IU in 1..8.

    Applies the standard identity for integral e^(-a z)(z+D)^-m dz:
    (1/(m-1)!) [sum_{k=1}^{m-1} (k-1)! (-a)^(m-1-k) D^(-k)
                + (-a)^(m-1) e^(aD) E1(aD)],
    evaluated with the scaled exponential integral so the e^(aD) factor can
    never overflow. The alternating sum loses digits as m grows, which is why
    the closed form is capped at m_IU = 8 and the quadrature path stays the
    reference.
    """
    m_f = cfg.m_iu
    if abs(m_f - round(m_f)) > 1e-12 or not (1 <= round(m_f) <= 8):
        raise UnsupportedParameterError(
            f"closed form needs integer m_IU in 1..8, got {m_f}; use mean_snr_integral"
        )
    m = int(round(m_f))
    n = cfg.geometry.n_elements
    p = cfg.power
    rule = cfg.rule()
    w_big = _w_product(d_bi, d_iu, cfg)
    eta = averaged_amp_gain(d_bi, cfg)
    t = rule.nodes
    k_coeff = np.exp(
        np.log(rule.weights)
        + (2.0 * m - 1.0) * np.log(t)
        - ln_gamma(float(m))
        + (1.0 - m) * math.log(cfg.m_bi)
        + m * math.log(n * p.p_t / (p.sigma_f2 * w_big))
    )
    a = cfg.m_bi * m * w_big * p.sigma2 / (t * eta * n * p.p_t)
    d_shift = n * p.p_t * t / (p.sigma_f2 * cfg.m_bi * w_big)
    kappa = m * p.sigma2 / (eta * p.sigma_f2)  # = a_i * D_i, node-free

    e1_term = exp_e1_scaled(kappa)
    fact_m1 = math.factorial(m - 1)
    total = 0.0
    for ki, ai, di in zip(k_coeff, a, d_shift):
        acc = (-ai) ** (m - 1) * e1_term
        for k in range(1, m):
            acc += math.factorial(k - 1) * (-ai) ** (m - 1 - k) * di ** (-k)
        total += ki * acc / fact_m1
    return total


def mean_snr_rayleigh(d_bi, d_iu, cfg: NetworkConfig):
    """Mean amplified-link SNR for Rayleigh reflector->user fading (m_IU = 1).

    (N P_t / (W sigma_F^2)) e^(Psi/P_F) E1(Psi/P_F) with
    Psi = sigma^2 (P_t eps d_BI^-alpha + sigma_F^2) / sigma_F^2.
    Vectorizes over d_bi/d_iu arrays.
    """
    if cfg.m_iu != 1.0:
        raise UnsupportedParameterError("mean_snr_rayleigh requires m_IU = 1")
    p = cfg.power
    d_bi_f = np.maximum(np.asarray(d_bi, dtype=float), cfg.distance_floor)
    d_iu_f = np.maximum(np.asarray(d_iu, dtype=float), cfg.distance_floor)
    zeta_bi = cfg.epsilon_ref * d_bi_f ** (-cfg.alpha)
    zeta_iu = cfg.epsilon_ref * d_iu_f ** (-cfg.alpha)
    w_big = 1.0 / (zeta_bi * zeta_iu)
    psi = p.sigma2 * (p.p_t * zeta_bi + p.sigma_f2) / p.sigma_f2
    n = cfg.geometry.n_elements
    value = n * p.p_t / (w_big * p.sigma_f2) * exp_e1_scaled(psi / p.p_f)
    return float(value) if np.asarray(d_bi).ndim == 0 and np.asarray(d_iu).ndim == 0 else value


def mean_snr_passive(d_bi: float, d_iu: float, cfg: NetworkConfig) -> float:
    """Mean phase-only reflection SNR: N^2 sum_i w_i t_i^m P_t/(Gamma(m+1) sigma^2 W)."""
    rule = cfg.rule()
    m = cfg.m_iu
    w_big = _w_product(d_bi, d_iu, cfg)
    glsum = float(rule.weights @ rule.nodes**m)
    n = cfg.geometry.n_elements
    return n**2 * glsum * cfg.power.p_t / (math.gamma(m + 1.0) * cfg.power.sigma2 * w_big)


def _rate_kernel_direct(m: float, c: float):
    def kernel(z: np.ndarray) -> np.ndarray:
        q = -np.expm1(-m * np.log1p(z)) / z
        return q * np.exp(-c * z)

    return kernel


def rate_direct(d_bu: float, cfg: NetworkConfig) -> float:
    """Direct-link conditional achievable rate in bits/s/Hz.

    log2(e) * integral (1/z)(1 - (1+z)^-m_BU) e^(-c z) dz with
    c = m_BU d^alpha sigma^2 / (eps P_t).
    """
    d = cfg.floored(d_bu)
    c = cfg.m_bu * d**cfg.alpha * cfg.power.sigma2 / (cfg.epsilon_ref * cfg.power.p_t)
    value, _ = integrate_semi_infinite_with_error(
        _rate_kernel_direct(cfg.m_bu, c), QUAD_TOL, max_panels=16384
    )
    return LOG2E * value


def rate_active(d_bi: float, d_iu: float, cfg: NetworkConfig,
                component_rate_in_noise: bool = True) -> float:
    """Amplified-link conditional achievable rate in bits/s/Hz.

    log2(e) sum_i mass_i integral (1/z)(1-(1+z)^-beta) e^(-z xi_i sigma^2/P_t)
    L_i(z) dz, evaluated as one semi-infinite quadrature of the component sum.
    """
    mix, masses, decay, noise_rates = _active_components(d_bi, d_iu, cfg)
    if not component_rate_in_noise:
        eta = averaged_amp_gain(d_bi, cfg)
        noise_rates = np.full_like(noise_rates,
                                   eta * cfg.power.sigma_f2 / (cfg.power.p_t * cfg.m_iu))
    beta = float(mix.beta[0])
    m_iu = cfg.m_iu

    def kernel(zs: np.ndarray) -> np.ndarray:
        q = -np.expm1(-beta * np.log1p(zs)) / zs
        z = zs[:, None]
        terms = np.exp(-z * decay[None, :] - m_iu * np.log1p(z * noise_rates[None, :]))
        return q * (terms @ masses)

    value, _ = integrate_semi_infinite_with_error(kernel, QUAD_TOL, max_panels=16384)
    return LOG2E * value


def region2_nearest_pdf_mass(cfg: NetworkConfig) -> float:
    """Mass of the nearest-reflector distance PDF over (0, L).

    The density 2 pi lambda r e^(-lambda pi r^2) is used exactly as printed
    (not renormalized over the ring), so this diagnostic reports how far its
    truncation to the cell falls short of 1.
    """
    lam = cfg.geometry.lambda_irs
    return 1.0 - math.exp(-lam * math.pi * cfg.geometry.l**2)


def _conditional_metrics(metric_kind: str, ell: float, cfg: NetworkConfig):
    if metric_kind == "calibration":
        return (lambda d: 1.0), (lambda b, r: 1.0)
    if metric_kind == "snr_moment":
        return (
            lambda d: snr_moment_direct(ell, d, cfg),
            lambda b, r: snr_moment_active(ell, b, r, cfg),
        )
    if metric_kind in ("achievable_rate", "spatial_throughput"):
        return (
            lambda d: rate_direct(d, cfg),
            lambda b, r: rate_active(b, r, cfg),
        )
    raise ConfigError(f"unknown metric kind {metric_kind!r}")


def average_metric(metric_kind: str, cfg: NetworkConfig, ell: float = 1.0) -> MetricResult:
    """Position-averaged performance over the three-region decomposition.

    Region 1 (disc of radius L_in): the direct-link conditional metric
    against the radial density 2 pi d / S_t. Region 2 (the ring): the
    amplified-link metric with d_BI ~= d_BU and the nearest-reflector
    distance density over (0, L). Region 3 (beyond the ring): d_BI ~= L_out
    and d_IU ~= d_BU - L_out. Distances are floored at the 1 m reference, so
    each region splits at the floor kink. spatial_throughput additionally
    divides the positional rate average by the cell area.
    """
    geo = cfg.geometry
    if not (0.0 < geo.l_in < geo.l_out < geo.l):
        raise ConfigError("degenerate geometry: need 0 < l_in < l_out < l")
    c1, c2 = _conditional_metrics(metric_kind, ell, cfg)
    floor = cfg.distance_floor
    s_t = geo.s_total
    lam = geo.lambda_irs
    err_total = 0.0

    # Region 1: BS-served disc.
    r1 = c1(floor) * math.pi * min(floor, geo.l_in) ** 2 / s_t
    if geo.l_in > floor:
        val, err = integrate_interval_with_error(
            lambda d: np.array([c1(x) for x in np.atleast_1d(d)]) * d,
            floor, geo.l_in, REGION_TOL,
        )
        r1 += 2.0 * math.pi * val / s_t
        err_total += 2.0 * math.pi * err / s_t

    # Region 2: ring-served, nearest-reflector distance density in r.
    near_mass = 1.0 - math.exp(-lam * math.pi * floor**2)

    def inner_r(b: float) -> float:
        total = c2(b, floor) * near_mass
        val, err = integrate_interval_with_error(
            lambda r: np.array([c2(b, x) for x in np.atleast_1d(r)])
            * 2.0 * math.pi * lam * r * np.exp(-lam * math.pi * r * r),
            floor, geo.l, REGION_TOL,
        )
        return total + val

    val, err = integrate_interval_with_error(
        lambda b: np.array([inner_r(x) for x in np.atleast_1d(b)]) * b,
        geo.l_in, geo.l_out, REGION_TOL,
    )
    r2 = 2.0 * math.pi * val / s_t
    err_total += 2.0 * math.pi * err / s_t

    # Region 3: beyond the ring, d_IU = d_BU - L_out floored.
    split = min(geo.l_out + floor, geo.l)
    r3 = c2(geo.l_out, floor) * math.pi * (split**2 - geo.l_out**2) / s_t
    if geo.l > split:
        val, err = integrate_interval_with_error(
            lambda b: np.array([c2(geo.l_out, x - geo.l_out) for x in np.atleast_1d(b)])
            * b,
            split, geo.l, REGION_TOL,
        )
        r3 += 2.0 * math.pi * val / s_t
        err_total += 2.0 * math.pi * err / s_t

    value = r1 + r2 + r3
    kind = metric_kind if metric_kind != "snr_moment" else f"snr_moment({ell:g})"
    if metric_kind == "spatial_throughput":
        value /= s_t
        err_total /= s_t
    return MetricResult(
        value=value, metric_kind=kind, method="quadrature", error_estimate=err_total
    )


def region_weight_calibration(cfg: NetworkConfig) -> float:
    """average_metric with the constant-1 integrand; equals 1 for exact regions."""
    return average_metric("calibration", cfg).value
