"""Experiment dispatch: named sweeps, the validation gate, result rows.

Every experiment returns deterministic ResultRow lists (no timing data in
rows; wall time lives in the summary) plus a JSON-ready summary. `validate`
is the machine-checkable gate: its exit status is 0 iff every tolerance
check passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import analytic, simulate
from .config import ConfigError, ExperimentConfig
from .mathkit import gauss_laguerre, ln_gamma
from .mixgamma import LinkStats, direct_power_dist

__all__ = ["ResultRow", "run_experiment"]


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    swept_name: str
    swept_value: str
    metric: str
    method: str
    value: float
    std_error: float = 0.0


def _point_label(**kv) -> str:
    return "|".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in kv.items())


def _network_at(cfg: ExperimentConfig, m_iu=None, n=None, p_f=None):
    net = cfg.network
    if n is not None:
        net = replace(net, geometry=replace(net.geometry, n_elements=int(n)))
    if m_iu is not None:
        net = replace(net, m_iu=float(m_iu))
    if p_f is not None:
        net = replace(net, power=replace(net.power, p_f=float(p_f)))
    return net


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _check_glq(cfg: ExperimentConfig, rows, checks):
    worst_overall = 0.0
    for order in (1, 2, 5, 10, 20, 32):
        rule = gauss_laguerre(order)
        worst = 0.0
        for k in range(2 * order):
            approx = float(rule.weights @ rule.nodes**k)
            worst = max(worst, abs(approx - math.factorial(k)) / math.factorial(k))
        rows.append(ResultRow(cfg.experiment, "glq_order", str(order),
                              "glq_exactness_max_rel_err", "quadrature", worst))
        worst_overall = max(worst_overall, worst)
    node_err = max(
        abs(gauss_laguerre(2).nodes[0] - (2.0 - math.sqrt(2.0))),
        abs(gauss_laguerre(2).nodes[1] - (2.0 + math.sqrt(2.0))),
    )
    checks["glq_exactness"] = {
        "passed": bool(worst_overall <= 1e-9 and node_err <= 1e-12),
        "max_rel_err": worst_overall,
        "order2_node_err": node_err,
    }


def _check_direct_link_reductions(cfg: ExperimentConfig, rows, checks):
    net = cfg.network
    worst_pdf = 0.0
    worst_moment = 0.0
    for m in (0.5, 1.0, 2.0, 4.0):
        link = LinkStats.from_distance(m, cfg.d_bu, net.alpha, net.epsilon_ref)
        dist = direct_power_dist(link)
        mean = dist.moment(1)
        xi = m * cfg.d_bu**net.alpha / net.epsilon_ref
        for x in (0.1 * mean, mean, 10.0 * mean):
            ref = math.exp(m * math.log(xi) + (m - 1.0) * math.log(x) - xi * x - ln_gamma(m))
            worst_pdf = max(worst_pdf, abs(dist.pdf(x) - ref) / ref)
        net_m = replace(net, m_bu=m)
        got = analytic.snr_moment_direct(1.0, cfg.d_bu, net_m)
        expected = net.power.p_t * net.epsilon_ref * cfg.d_bu**-net.alpha / net.power.sigma2
        worst_moment = max(worst_moment, abs(got - expected) / expected)
    rows.append(ResultRow(cfg.experiment, "direct_gamma", "m_grid",
                          "pdf_pointwise_max_rel_err", "closed_form", worst_pdf))
    rows.append(ResultRow(cfg.experiment, "eq12_ell1", "m_grid",
                          "first_moment_max_rel_err", "closed_form", worst_moment))
    checks["direct_link_reductions"] = {
        "passed": bool(worst_pdf <= 1e-12 and worst_moment <= 1e-13),
        "pdf_max_rel_err": worst_pdf,
        "moment_max_rel_err": worst_moment,
    }


def _equivalence_grid(cfg: ExperimentConfig):
    for m_iu in cfg.validate_m_iu_list:
        for n in cfg.validate_n_list:
            for d_bi in cfg.validate_d_bi_list:
                for d_iu in cfg.validate_d_iu_list:
                    for p_f in cfg.validate_p_f_list:
                        yield m_iu, n, d_bi, d_iu, p_f


def _check_equivalence(cfg: ExperimentConfig, rows, checks):
    worst_cq = 0.0
    worst_ray = 0.0
    worst_l1 = 0.0
    for m_iu, n, d_bi, d_iu, p_f in _equivalence_grid(cfg):
        net = _network_at(cfg, m_iu=m_iu, n=n, p_f=p_f)
        label = _point_label(m_iu=m_iu, n=n, d_bi=d_bi, d_iu=d_iu, p_f=p_f)
        quad = analytic.mean_snr_integral(d_bi, d_iu, net)
        closed = analytic.mean_snr_closed(d_bi, d_iu, net)
        rel = abs(closed - quad) / quad
        worst_cq = max(worst_cq, rel)
        rows.append(ResultRow(cfg.experiment, "point", label, "mean_snr", "quadrature", quad))
        rows.append(ResultRow(cfg.experiment, "point", label, "mean_snr", "closed_form", closed))
        if m_iu == 1:
            ray = analytic.mean_snr_rayleigh(d_bi, d_iu, net)
            worst_ray = max(worst_ray, abs(ray - quad) / quad)
        route13 = analytic.snr_moment_active(1.0, d_bi, d_iu, net)
        worst_l1 = max(worst_l1, abs(route13 - quad) / quad)
    rows.append(ResultRow(cfg.experiment, "equivalence", "grid",
                          "closed_vs_quadrature_max_rel_err", "closed_form", worst_cq))
    rows.append(ResultRow(cfg.experiment, "equivalence", "grid",
                          "rayleigh_vs_quadrature_max_rel_err", "closed_form", worst_ray))
    rows.append(ResultRow(cfg.experiment, "equivalence", "grid",
                          "moment_route_max_rel_err", "quadrature", worst_l1))
    checks["closed_vs_quadrature"] = {
        "passed": bool(worst_cq <= cfg.tolerance and worst_ray <= cfg.tolerance),
        "max_rel_err": worst_cq,
        "rayleigh_max_rel_err": worst_ray,
    }
    checks["moment_route_consistency"] = {
        "passed": bool(worst_l1 <= 1e-7),
        "max_rel_err": worst_l1,
    }


def _check_model_mc(cfg: ExperimentConfig, rows, checks):
    worst_z = 0.0
    for m_iu, n, d_bi, d_iu, p_f in _equivalence_grid(cfg):
        if m_iu not in cfg.mc_m_iu_list:
            continue
        net = _network_at(cfg, m_iu=m_iu, n=n, p_f=p_f)
        label = _point_label(m_iu=m_iu, n=n, d_bi=d_bi, d_iu=d_iu, p_f=p_f)
        closed = analytic.mean_snr_closed(d_bi, d_iu, net)
        mc, se = simulate.model_snr_moment_mc(
            net, d_bi, d_iu, ell=1.0, n=cfg.n_mc_model, seed=cfg.seed
        )
        z = abs(mc - closed) / se if se > 0 else math.inf
        worst_z = max(worst_z, z)
        rows.append(ResultRow(cfg.experiment, "point", label, "mean_snr", "monte_carlo", mc, se))
    checks["model_mc_agreement"] = {"passed": bool(worst_z <= 3.0), "max_abs_z": worst_z}


def _check_physical_gap(cfg: ExperimentConfig, rows, checks):
    gaps = {}
    for n in (16, 64):
        net = _network_at(cfg, m_iu=1, n=n)
        phys, se = simulate.physical_snr_mc(
            net, cfg.d_bi, cfg.d_iu, n=cfg.n_mc_physical, seed=cfg.seed
        )
        eq17 = analytic.mean_snr_rayleigh(cfg.d_bi, cfg.d_iu, net)
        gap = abs(phys - eq17) / eq17
        gaps[n] = gap
        label = _point_label(m_iu=1, n=n, d_bi=cfg.d_bi, d_iu=cfg.d_iu)
        rows.append(ResultRow(cfg.experiment, "physical_gap", label,
                              "mean_snr_physical", "monte_carlo", phys, se))
        rows.append(ResultRow(cfg.experiment, "physical_gap", label,
                              "mean_snr", "closed_form", eq17))
        rows.append(ResultRow(cfg.experiment, "physical_gap", label,
                              "relative_gap", "monte_carlo", gap))
    checks["physical_gap_shrinks"] = {
        "passed": bool(gaps[64] < gaps[16]),
        "gap_n16": gaps[16],
        "gap_n64": gaps[64],
    }


def _check_passive(cfg: ExperimentConfig, rows, checks):
    net16 = _network_at(cfg, m_iu=1, n=16)
    net32 = _network_at(cfg, m_iu=1, n=32)
    v16 = analytic.mean_snr_passive(cfg.d_bi, cfg.d_iu, net16)
    v32 = analytic.mean_snr_passive(cfg.d_bi, cfg.d_iu, net32)
    quadruple_exact = (v32 == 4.0 * v16)
    rows.append(ResultRow(cfg.experiment, "passive_scaling", "n16_to_n32",
                          "quadrupling_ratio", "closed_form", v32 / v16))
    gaps = {}
    means = {}
    for n in (16, 64):
        net = _network_at(cfg, m_iu=1, n=n)
        phys, se = simulate.physical_snr_mc(
            net, cfg.d_bi, cfg.d_iu, n=cfg.n_mc_physical, seed=cfg.seed,
            irs_mode="passive",
        )
        eq18 = analytic.mean_snr_passive(cfg.d_bi, cfg.d_iu, net)
        gaps[n] = abs(phys - eq18) / eq18
        means[n] = phys
        label = _point_label(m_iu=1, n=n, d_bi=cfg.d_bi, d_iu=cfg.d_iu)
        rows.append(ResultRow(cfg.experiment, "passive_gap", label,
                              "mean_snr_physical", "monte_carlo", phys, se))
        rows.append(ResultRow(cfg.experiment, "passive_gap", label,
                              "mean_snr", "closed_form", eq18))
        rows.append(ResultRow(cfg.experiment, "passive_gap", label,
                              "relative_gap", "monte_carlo", gaps[n]))
    # scaling diagnostics: the measured growth exponent between the two sizes
    exponent = math.log(means[64] / means[16]) / math.log(4.0)
    checks["passive_baseline"] = {
        "passed": bool(quadruple_exact and gaps[64] < gaps[16]),
        "quadrupling_exact": bool(quadruple_exact),
        "gap_n16": gaps[16],
        "gap_n64": gaps[64],
        "gap_shrinks": bool(gaps[64] < gaps[16]),
        "mc_growth_exponent": exponent,
        "mc_ratio_64_over_16": means[64] / means[16],
    }


def _check_budget_shape(cfg: ExperimentConfig, rows, checks):
    net = _network_at(cfg, m_iu=1)
    grid = list(cfg.pf_grid)
    values = [analytic.mean_snr_rayleigh(cfg.d_bi, cfg.d_iu, _network_at(cfg, m_iu=1, p_f=p))
              for p in grid]
    for p, v in zip(grid, values):
        rows.append(ResultRow(cfg.experiment, "p_f_w", f"{p:g}", "mean_snr", "closed_form", v))
    increasing = all(a < b for a, b in zip(values, values[1:]))
    slopes = [(values[i + 1] - values[i]) / (grid[i + 1] - grid[i]) for i in range(len(grid) - 1)]
    slopes_decreasing = all(a > b for a, b in zip(slopes, slopes[1:]))
    checks["budget_shape"] = {
        "passed": bool(increasing and slopes_decreasing),
        "strictly_increasing": bool(increasing),
        "slopes_strictly_decreasing": bool(slopes_decreasing),
    }


def _run_validate(cfg: ExperimentConfig):
    rows: list[ResultRow] = []
    checks: dict = {}
    _check_glq(cfg, rows, checks)
    _check_direct_link_reductions(cfg, rows, checks)
    _check_equivalence(cfg, rows, checks)
    _check_model_mc(cfg, rows, checks)
    _check_physical_gap(cfg, rows, checks)
    _check_passive(cfg, rows, checks)
    _check_budget_shape(cfg, rows, checks)
    summary = {
        "checks": checks,
        "all_passed": bool(all(c["passed"] for c in checks.values())),
        "region2_nearest_pdf_mass": analytic.region2_nearest_pdf_mass(cfg.network),
    }
    exit_code = 0 if summary["all_passed"] else 1
    return rows, summary, exit_code


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _run_mean_snr_vs_pf(cfg: ExperimentConfig):
    rows: list[ResultRow] = []
    net0 = cfg.network
    integer_shape = abs(net0.m_iu - round(net0.m_iu)) < 1e-12 and 1 <= round(net0.m_iu) <= 8
    values = []
    for p_f in cfg.pf_grid:
        net = _network_at(cfg, p_f=p_f)
        label = f"{p_f:g}"
        quad = analytic.mean_snr_integral(cfg.d_bi, cfg.d_iu, net)
        values.append(quad)
        rows.append(ResultRow(cfg.experiment, "p_f_w", label, "mean_snr", "quadrature", quad))
        if integer_shape:
            closed = analytic.mean_snr_closed(cfg.d_bi, cfg.d_iu, net)
            rows.append(ResultRow(cfg.experiment, "p_f_w", label, "mean_snr", "closed_form", closed))
        mc, se = simulate.model_snr_moment_mc(
            net, cfg.d_bi, cfg.d_iu, ell=1.0, n=cfg.n_mc_model, seed=cfg.seed
        )
        rows.append(ResultRow(cfg.experiment, "p_f_w", label, "mean_snr", "monte_carlo", mc, se))
    grid = list(cfg.pf_grid)
    slopes = [(values[i + 1] - values[i]) / (grid[i + 1] - grid[i]) for i in range(len(grid) - 1)]
    summary = {
        "strictly_increasing": bool(all(a < b for a, b in zip(values, values[1:]))),
        "slopes_strictly_decreasing": bool(all(a > b for a, b in zip(slopes, slopes[1:]))),
    }
    return rows, summary, 0


def _run_density_sweep(cfg: ExperimentConfig):
    rows: list[ResultRow] = []
    summary: dict = {}
    for mode in ("active", "passive"):
        table = simulate.sweep_density(
            cfg.network,
            cfg.n_total_elements,
            cfg.density_m_list,
            policy="nearest",
            seed=cfg.seed,
            irs_mode=mode,
            p_f_total=cfg.p_f_total,
            n_drops=cfg.sweep_n_drops,
            n_fading=cfg.sweep_n_fading,
            threads=cfg.threads,
            power_budget=cfg.density_power_budget,
        )
        tp = []
        for entry in table:
            label = _point_label(mode=mode, m_irs=entry["m_irs"], n=entry["n_elements"])
            for metric in ("spatial_throughput", "achievable_rate", "snr_mean"):
                est = entry[metric]
                rows.append(ResultRow(cfg.experiment, "m_irs", label, metric,
                                      "monte_carlo", est.mean, est.std_error))
            tp.append(entry["spatial_throughput"])
        best = int(np.argmax([e.mean for e in tp]))
        m_list = list(cfg.density_m_list)

        def z_sep(i, j):
            return (tp[i].mean - tp[j].mean) / math.hypot(tp[i].std_error, tp[j].std_error)

        summary[mode] = {
            "power_budget": cfg.density_power_budget,
            "m_values": m_list,
            "throughput": [e.mean for e in tp],
            "std_error": [e.std_error for e in tp],
            "best_m": m_list[best],
            "z_vs_first": z_sep(best, 0),
            "z_vs_last": z_sep(best, len(m_list) - 1),
            "interior_max": bool(0 < best < len(m_list) - 1),
        }
    return rows, summary, 0


def _run_association_compare(cfg: ExperimentConfig):
    rows: list[ResultRow] = []
    summary: dict = {}
    for n in cfg.assoc_n_list:
        net = _network_at(cfg, n=n)
        estimates = {}
        for policy in ("nearest", "best_irs"):
            est = simulate.simulate_cell(
                net, policy=policy, n_drops=cfg.assoc_n_drops,
                n_fading=cfg.sweep_n_fading, seed=cfg.seed, threads=cfg.threads,
            )["spatial_throughput"]
            estimates[policy] = est
            rows.append(ResultRow(cfg.experiment, "n_elements",
                                  _point_label(n=n, policy=policy),
                                  "spatial_throughput", "monte_carlo",
                                  est.mean, est.std_error))
        ratio = estimates["nearest"].mean / estimates["best_irs"].mean
        rel_se = math.hypot(
            estimates["nearest"].std_error / estimates["nearest"].mean,
            estimates["best_irs"].std_error / estimates["best_irs"].mean,
        )
        summary[f"n{n}"] = {
            "ratio_nearest_over_best": ratio,
            "ratio_se": ratio * rel_se,
            "threshold": cfg.assoc_threshold,
            "meets_threshold": bool(ratio >= cfg.assoc_threshold),
        }
    return rows, summary, 0


def _run_ring_sweep(cfg: ExperimentConfig):
    rows: list[ResultRow] = []
    metric = cfg.ring_metric
    kind = "snr_moment" if metric == "snr_mean" else metric
    best = None
    for l_in in cfg.ring_l_in_grid:
        for l_out in cfg.ring_l_out_grid:
            if not (0.0 < l_in < l_out < cfg.network.geometry.l):
                continue
            net = replace(
                cfg.network,
                geometry=replace(cfg.network.geometry, l_in=l_in, l_out=l_out),
            )
            result = analytic.average_metric(kind, net, ell=1.0)
            label = _point_label(l_in=l_in, l_out=l_out)
            rows.append(ResultRow(cfg.experiment, "ring", label, result.metric_kind,
                                  "quadrature", result.value, result.error_estimate))
            if best is None or result.value > best[2]:
                best = (l_in, l_out, result.value)
    if not rows:
        raise ConfigError("ring grids produced no valid (l_in < l_out < l) pairs")
    summary = {"best_l_in": best[0], "best_l_out": best[1], "best_value": best[2],
               "metric": metric}
    return rows, summary, 0


def run_experiment(cfg: ExperimentConfig):
    """Dispatch one experiment; returns (rows, summary, exit_code)."""
    dispatch = {
        "validate": _run_validate,
        "mean-snr-vs-pf": _run_mean_snr_vs_pf,
        "density-sweep": _run_density_sweep,
        "association-compare": _run_association_compare,
        "ring-sweep": _run_ring_sweep,
    }
    if cfg.experiment not in dispatch:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    if cfg.experiment == "density-sweep":
        bad = [m for m in cfg.density_m_list if cfg.n_total_elements % m != 0]
        if bad:
            divisors = [d for d in range(1, cfg.n_total_elements + 1)
                        if cfg.n_total_elements % d == 0]
            raise ConfigError(
                f"density_m_list entries {bad} do not divide "
                f"n_total_elements={cfg.n_total_elements}; valid divisors: {divisors}"
            )
    return dispatch[cfg.experiment](cfg)
