"""Acceptance gate: one PASS/FAIL verdict per criterion.

The long-horizon runs are cached at module level so criteria sharing a run
(the no-outage comparison at the largest V) simulate it once. Verdicts are
printed as they are reached and repeated in the terminal summary.
"""

import time
from functools import cache

import numpy as np
import pytest

from conftest import VERDICTS
from oracles import comm_grid_optimum, local_grid_optimum, random_comm_instance
from rismec.allocator import comm_objective, kkt_residual, solve_local_cpu, solve_power_allocation
from rismec.channel import ChannelRealization, bin_frequencies, cascaded_cnr, draw_channel, pathloss
from rismec.cli import run_experiment
from rismec.controller import ControllerConfig, Scheme, SchemeOptions, configure_ris
from rismec.manifest import parse_manifest_text
from rismec.model import LN2, EdgeState, SlotDecision, SystemConfig, TaskArrival, eval_slot
from rismec.ris import (
    RisConfig,
    RisSearchSpace,
    greedy_optimize,
    lorentzian_response,
    max_amplitude,
    random_config,
)
from rismec.sim import ScenarioSpec, run_scenario, sweep_v

pytestmark = pytest.mark.slow

CFG = SystemConfig()
V_MAX = 100.0
V_SWEEP = (0.01, 0.1, 1.0, 10.0, 100.0)
SCHEMES = tuple(Scheme)


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[n] = line
    print(line)
    assert ok, line


def _ctrl(v=V_MAX, outage=False):
    return ControllerConfig(v=v, d_avg=0.1, d_max=0.11, epsilon=0.01, outage_constraint=outage)


@cache
def no_outage_run(scheme: Scheme, horizon: int = 100_000, seed: int = 0):
    return run_scenario(ScenarioSpec(CFG, _ctrl(), scheme, horizon=horizon, seed=seed))


@cache
def outage_run(horizon: int = 100_000):
    return run_scenario(ScenarioSpec(CFG, _ctrl(outage=True), Scheme.OPTIMIZED, horizon=horizon))


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_formulas_match_hand_evaluation():
    errs = {}
    # local delay and power for f = 0.5 GHz
    dec = SlotDecision(f_l=5e8, p_bins=np.full(16, 1e-3 / 16), ris=RisConfig.none())
    arrival = TaskArrival(w_l=5e5, a_bits=2e6, w_r=5e7)
    edge = EdgeState(0.5)
    cnr = np.full(16, 1e4)
    m = eval_slot(dec, arrival, edge, cnr, CFG, 0.11)
    rate = 16 * 1e6 * np.log2(1 + 1e4 * 1e-3 / 16)
    errs["d_l"] = _rel(m.d_l, 1e-3)
    errs["p_l"] = _rel(m.p_l, 1e-27 * 1.25e26)
    errs["rate"] = _rel(m.rate, rate)
    errs["d_u"] = _rel(m.d_u, 2e6 / rate)
    errs["d_r"] = _rel(m.d_r, 5e7 / 5e9)
    errs["d_tot"] = _rel(m.d_tot, 1e-3 + 2e6 / rate + 1e-2)
    errs["p_tot"] = _rel(m.p_tot, 0.125 + 1e-3)
    errs["noise"] = _rel(CFG.noise_power, 10 ** -17.4 / 1e3 * 1e6)
    f = bin_frequencies(CFG)
    errs["bins"] = max(_rel(f[0], 3.5e9 - 7.5e6), _rel(f[-1], 3.5e9 + 7.5e6))
    errs["pathloss"] = _rel(pathloss(10.0, 2, np.array([3.5e9]))[0],
                            (299_792_458.0 / (4 * np.pi * 3.5e9)) ** 2 / 100)
    # Lorentzian off resonance, by hand: S f^2 / (f0^2 - f^2 + j f0 f / (2 chi))
    f0, fx, chi, s = 3.5e9, 3.501e9, 50.0, 0.02
    hand = s * fx**2 / (f0**2 - fx**2 + 1j * f0 * fx / (2 * chi))
    errs["lorentz"] = abs(lorentzian_response(s, f0, chi, fx) - hand) / abs(hand)
    # one-element cascade with a resonant element: h_los + g h (-2 j chi s)
    ch = ChannelRealization(
        h_los=np.full(16, 1e-6 + 0j), g=np.full((16, 1), 2e-4 + 0j), h=np.full((16, 1), 1e-4j),
        freqs=np.full(16, f0),
    )
    ris = RisConfig("lorentzian", np.array([s]), np.array([f0]), np.array([chi]))
    total = 1e-6 + 2e-4 * 1e-4j * (-2j * chi * s)
    errs["cnr"] = _rel(cascaded_cnr(ch, ris, CFG)[0], abs(total) ** 2 / CFG.noise_power)
    resonance = lorentzian_response(s, f0, chi, f0)
    worst = max(errs.values())
    exact = resonance == -2j * chi * s
    verdict(1, worst <= 1e-12 and exact,
            f"max rel err {worst:.2e} ({max(errs, key=errs.get)}), resonance exact={exact}")


def test_solver_oracles():
    rng = np.random.default_rng(2)
    worst_gap, worst_kkt = 0.0, 0.0
    for i in range(100):
        B = 2 + i % 2
        cfg = SystemConfig(B=B, l_taps=1)
        cnr, a, k, v = random_comm_instance(rng, B)
        z = k * rng.uniform(0, 1)
        p = solve_power_allocation(cnr, a, k - z, z, v, cfg)
        got = comm_objective(p, cnr, a, k - z, z, v, cfg)
        grid = comm_grid_optimum(cnr, a, k, v, cfg.W, cfg.p_min, cfg.p_max,
                                 200, 200 if B == 2 else 80)
        worst_gap = max(worst_gap, (got - grid) / grid)
        worst_kkt = max(worst_kkt, kkt_residual(p, cnr, a, k - z, z, v, cfg))
    local_gap = 0.0
    for _ in range(20):
        w = rng.uniform(1e5, 1e6)
        y, v = 10 ** rng.uniform(-3, 2), 10 ** rng.uniform(-3, 3)
        f = solve_local_cpu(w, y, 0.0, v, CFG)
        obj = v * CFG.gamma * f**3 + y * w / f
        _, best = local_grid_optimum(w, y, v, CFG.gamma, CFG.f_l_min, CFG.f_l_max)
        local_gap = max(local_gap, (obj - best) / best)
    ok = worst_gap <= 5e-3 and worst_kkt <= 1e-6 and local_gap <= 1e-4
    verdict(2, ok, f"comm gap {worst_gap:.2e}, kkt {worst_kkt:.2e}, local gap {local_gap:.2e}")


def test_greedy_properties():
    rng = np.random.default_rng(3)
    space = RisSearchSpace()
    worst_drop, worst_amp = 0.0, 0.0
    for _ in range(50):
        ch = draw_channel(rng, CFG)
        config, trace = greedy_optimize(ch, space, CFG, return_trace=True)
        worst_drop = max(worst_drop, float(np.max(trace[:-1] - trace[1:]) / trace[-1]))
        for emitted in (config,
                        configure_ris(Scheme.FLAT, ch, CFG, SchemeOptions()),
                        random_config(rng, space, ch.freqs, CFG.n_elements)):
            worst_amp = max(worst_amp, max_amplitude(emitted, ch.freqs))
    # N = 1, 2 resonances x 4 quality factors: greedy vs every candidate and off
    cfg1 = SystemConfig(n_elements=1)
    mismatches = 0
    for _ in range(50):
        ch = draw_channel(rng, cfg1)
        small = RisSearchSpace(omega=tuple(ch.freqs[[3, 12]]))
        f_res, chi, s, _ = small.candidates(ch.freqs)
        options = [RisConfig("lorentzian", np.zeros(1), f_res[:1], chi[:1])] + [
            RisConfig("lorentzian", s[k:k + 1], f_res[k:k + 1], chi[k:k + 1]) for k in range(len(s))
        ]
        best = max(cascaded_cnr(ch, o, cfg1).sum() for o in options)
        got = cascaded_cnr(ch, greedy_optimize(ch, small, cfg1), cfg1).sum()
        mismatches += not np.isclose(got, best, rtol=1e-10)
    ok = worst_drop <= 1e-12 and mismatches == 0 and worst_amp <= 1 + 1e-9
    verdict(3, ok, f"max trace drop {worst_drop:.1e}, exhaustive mismatches {mismatches}/50, "
                   f"max |phi| {worst_amp:.12f}")


def test_constraint_satisfaction():
    lines, ok = [], True
    for scheme in SCHEMES:
        s = no_outage_run(scheme)
        good = 0.9 * 0.1 <= s.avg_delay <= 1.05 * 0.1 and s.y_over_t <= 1e-3 * 0.1
        ok &= good
        lines.append(f"{scheme.value} d={s.avg_delay * 1e3:.2f}ms Y/T={s.y_over_t:.1e}")
    verdict(4, ok, "; ".join(lines))


def _inversions(values, increasing):
    d = np.diff(values)
    return int(np.sum(d < 0) if increasing else np.sum(d > 0))


def test_tradeoff_shape():
    lines, ok = [], True
    for scheme in (Scheme.OPTIMIZED, Scheme.DIRECT):
        spec = ScenarioSpec(CFG, _ctrl(), scheme, horizon=20_000, seed=0)
        runs = sweep_v(spec, V_SWEEP)
        p_inv = _inversions([r.avg_power for r in runs], increasing=False)
        d_inv = _inversions([r.avg_delay for r in runs], increasing=True)
        ok &= p_inv <= 1 and d_inv <= 1
        lines.append(f"{scheme.value}: P " + ",".join(f"{r.avg_power * 1e3:.2f}" for r in runs)
                     + " mW / D " + ",".join(f"{r.avg_delay * 1e3:.1f}" for r in runs)
                     + f" ms, inversions {p_inv}/{d_inv}")
    verdict(5, ok, " | ".join(lines))


def _batch_se(x, batches=50):
    m = np.asarray(x)[: len(x) // batches * batches].reshape(batches, -1).mean(axis=1)
    return m.std(ddof=1) / np.sqrt(batches)


def test_scheme_ordering():
    lines, ok = [], True
    for seed in (0, 1, 2):
        runs = {s: no_outage_run(s, 20_000, seed) for s in SCHEMES}
        p = {s: r.avg_power for s, r in runs.items()}
        lowest = all(p[Scheme.OPTIMIZED] < p[s] for s in SCHEMES if s is not Scheme.OPTIMIZED)
        worst_other = max((s for s in SCHEMES if s is not Scheme.DIRECT), key=p.get)
        # paired slots share channels and arrivals: batch means of the difference
        diff = runs[Scheme.DIRECT].powers - runs[worst_other].powers
        tied = diff.mean() >= -2 * _batch_se(diff)
        ok &= lowest and tied
        lines.append(f"seed {seed}: " + ",".join(f"{s.value}={p[s] * 1e3:.2f}" for s in SCHEMES)
                     + f" mW, direct worst/tied={tied}")
    verdict(6, ok, "; ".join(lines))


def test_outage_control():
    s = outage_run()
    ok = s.outage_prob <= 1.5e-2 and s.z_over_t <= 1e-3
    verdict(7, ok, f"Pr(d>d_max)={s.outage_prob:.4f}, Z/T={s.z_over_t:.1e}, "
                   f"avg power {s.avg_power * 1e3:.2f} mW")


def test_delay_tail():
    opt, direct = no_outage_run(Scheme.OPTIMIZED), no_outage_run(Scheme.DIRECT)
    verdict(8, opt.q99 < direct.q99,
            f"q99 optimized {opt.q99 * 1e3:.1f} ms vs direct {direct.q99 * 1e3:.1f} ms")


def test_performance_envelope(tmp_path):
    text = (
        "experiment.horizon = 10000\n"
        "experiment.record_slots = true\n"
        "system.ris_elements = 100\nsystem.subcarriers = 16\n"
    )
    outs, took = [], []
    for name in ("first", "second"):
        m = parse_manifest_text(text, overrides={"experiment.out": str(tmp_path / name)},
                                preset="tradeoff")
        t0 = time.perf_counter()
        status = run_experiment(m)
        took.append(time.perf_counter() - t0)
        assert status == 0
        outs.append((tmp_path / name / "aggregate_tradeoff.csv").read_bytes())
    identical = outs[0] == outs[1]
    verdict(9, took[0] < 300 and identical,
            f"4 schemes x 5 V at T=1e4 in {took[0]:.0f} s, rerun byte-identical={identical}")
