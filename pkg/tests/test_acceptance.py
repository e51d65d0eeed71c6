"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest -s tests/test_acceptance.py`` to see them).

Absolute wall-clock and joule figures from real edge hardware depend on
device lookup tables and full training runs that cannot be reproduced at
desk scale; the criteria here validate the structural and relative claims
(exact-optimality against brute force, baseline dominance, cap
monotonicity, measurement round trips, schedule completeness, proxy
sensitivity) on synthetic devices, plus a demonstration run on a
Jetson-like synthetic profile.
"""

import functools
import time

import numpy as np
import pytest

import powerplan as pp
from powerplan.cli import main
from synth_corpus import (
    distorted_relation,
    random_cap,
    random_counts,
    random_device_params,
    random_grid,
    random_profile,
    random_relation,
)


def criterion(label):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {label}: FAIL")
                raise
            print(f"ACCEPTANCE {label}: PASS")

        return wrapper

    return decorate


@criterion("1 oracle-equivalence (1000 profiles, exact argmin, fast path agrees)")
def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(1001)
    started = time.monotonic()
    infeasible = 0
    for _ in range(1000):
        profile, _ = random_profile(rng, max_batches=8, max_freqs=32)
        r = random_relation(rng, profile.batch_sizes)
        cap = random_cap(rng, profile)

        best = None
        n_b, n_f = profile.shape
        for i in range(n_b):
            mult = r.entries[profile.batch_sizes[i]]
            for j in range(n_f):
                if profile.power_table[i, j] < cap.p_max:
                    tt = float(profile.time_table[i, j] * mult)
                    if best is None or tt < best:
                        best = tt

        if best is None:
            infeasible += 1
            with pytest.raises(pp.InfeasibleError):
                pp.select_configuration(profile, r, cap)
            with pytest.raises(pp.InfeasibleError):
                pp.select_configuration_fast(profile, r, cap)
            continue
        slow = pp.select_configuration(profile, r, cap)
        fast = pp.select_configuration_fast(profile, r, cap)
        assert slow.estimated_tt_acc == best, "selection must attain the exact brute-force minimum"
        assert (fast.batch_size, fast.frequency_mhz) == (slow.batch_size, slow.frequency_mhz)
        assert fast.estimated_tt_acc == slow.estimated_tt_acc
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"corpus took {elapsed:.2f}s, budget is 10s"
    assert infeasible < 500  # the corpus must mostly exercise real selections


@criterion("2 committed joint-gain fixture (64 @ 460 MHz, 31.9% +/- 0.1pp)")
def test_criterion_2_joint_gain_fixture(data_dir, capsys):
    rc = main([
        "select",
        "--profile", str(data_dir / "profile_b64_b128.csv"),
        "--relation", str(data_dir / "relation_uniform_b64_b128.csv"),
        "--p-max", "5.0",
    ])
    assert rc == 0
    out = dict(line.split("=", 1) for line in capsys.readouterr().out.strip().splitlines())
    assert int(out["batch_size"]) == 64
    assert float(out["frequency_mhz"]) == 460.0

    profile = pp.load_profile((data_dir / "profile_b64_b128.csv").read_text())
    max_batch_time = profile.time_table[profile.batch_index(128), profile.frequency_index(307.0)]
    reduction_pct = (max_batch_time - float(out["estimated_tt_acc_s"])) / max_batch_time * 100.0
    assert abs(reduction_pct - 31.9) <= 0.1


@criterion("3 committed flip fixture (b=8 under 4.5/5 W, b=32 under 7 W)")
def test_criterion_3_flip_fixture(data_dir):
    profile = pp.load_profile((data_dir / "profile_b8_b32.csv").read_text())
    counts, _ = pp.parse_counts_file((data_dir / "counts_b8_b32.csv").read_text())
    assert counts == {8: 10, 32: 15}
    r = pp.relation_vector(counts)
    for cap_w, expected_b in ((4.5, 8), (5.0, 8), (7.0, 32)):
        sel = pp.select_configuration(profile, r, pp.PowerCap(cap_w))
        assert sel.batch_size == expected_b, f"cap {cap_w}: expected b={expected_b}"
        fastest = pp.fastest_configuration(profile, counts, pp.PowerCap(cap_w))
        assert fastest.batch_size == expected_b


@criterion("4 dominance (ours <= baselines, fastest <= ours realized, 100%)")
def test_criterion_4_dominance():
    rng = np.random.default_rng(1004)
    baseline_checks = 0
    fastest_checks = 0
    for _ in range(400):
        profile, _ = random_profile(rng)
        counts = random_counts(rng, profile.batch_sizes)
        r = distorted_relation(rng, counts)
        lo, hi = float(profile.power_table.min()), float(profile.power_table.max())
        cap = pp.PowerCap(float(rng.uniform(lo, hi * 1.2)))

        try:
            ours = pp.select_configuration(profile, r, cap)
        except pp.InfeasibleError:
            continue

        try:
            safe = pp.compute_safe_table([profile], [cap])
        except pp.DataError:
            safe = None
        if safe is not None:
            b1 = pp.baseline1_select(profile, cap, safe, r=r)
            b2 = pp.baseline2_select(profile, r, cap, safe)
            for baseline in (b1, b2):
                i = profile.batch_index(baseline.batch_size)
                j = profile.frequency_index(baseline.frequency_mhz)
                if profile.power_table[i, j] < cap.p_max:
                    assert ours.estimated_tt_acc <= baseline.estimated_tt_acc
                    baseline_checks += 1

        fastest = pp.fastest_configuration(profile, counts, cap)
        i = profile.batch_index(ours.batch_size)
        j = profile.frequency_index(ours.frequency_mhz)
        ours_realized = float(profile.time_table[i, j] * counts[ours.batch_size])
        assert fastest.estimated_tt_acc <= ours_realized
        fastest_checks += 1
    assert baseline_checks > 200
    assert fastest_checks > 200


@criterion("5 cap monotonicity (0 violations over synthetic corpus)")
def test_criterion_5_cap_monotonicity():
    rng = np.random.default_rng(1005)
    pairs_checked = 0
    for _ in range(200):
        profile, _ = random_profile(rng)
        r = random_relation(rng, profile.batch_sizes)
        lo, hi = float(profile.power_table.min()), float(profile.power_table.max())
        ladder = [pp.PowerCap(w) for w in np.linspace(lo * 0.9, hi * 1.1, 8)]
        ladder.append(pp.PowerCap.unlimited())
        previous = None
        for cap in ladder:
            try:
                sel = pp.select_configuration(profile, r, cap)
            except pp.InfeasibleError:
                assert previous is None, "a feasible cap must stay feasible when raised"
                continue
            if previous is not None:
                assert sel.estimated_tt_acc <= previous
                pairs_checked += 1
            previous = sel.estimated_tt_acc
    assert pairs_checked > 500


@criterion("6 ingestion round trip (bit-exact save/load, 1e-9 aggregation)")
def test_criterion_6_ingestion_round_trip():
    rng = np.random.default_rng(1006)
    for _ in range(100):
        profile, _ = random_profile(rng, max_batches=6, max_freqs=10)
        reloaded = pp.load_profile(pp.save_profile(profile))
        assert reloaded == profile
        assert pp.save_profile(reloaded) == pp.save_profile(profile)

    for _ in range(100):
        params = random_device_params(rng)
        b = int(rng.integers(1, 256))
        f = float(rng.uniform(100.0, 1500.0))
        s = int(rng.integers(256, 8192))
        t_true = pp.synth_time(b, f, params, s)
        peak_true = pp.synth_power(b, f, params)
        duration = t_true * b / s
        m = int(rng.integers(2, 9))
        timing = pp.TimingTrace(b, f, (duration * 2.5,) + (duration,) * m, warmup_discarded=1)
        power = pp.PowerTrace(
            ((0.0, peak_true * 700.0), (1.0, peak_true * 1000.0), (2.0, peak_true * 850.0))
        )
        got = pp.aggregate_point(power, timing, s)
        assert got.t_s_seconds == pytest.approx(t_true, rel=1e-9)
        assert got.peak_w == pytest.approx(peak_true, rel=1e-9)


@criterion("7 pruned-schedule completeness (200 oracles match full grid)")
def test_criterion_7_schedule_completeness():
    rng = np.random.default_rng(1007)
    for _ in range(200):
        params = random_device_params(rng)
        batches, freqs = random_grid(rng, max_batches=8, max_freqs=16)
        profile = pp.generate_profile(batches, freqs, params, 1024)
        cap = random_cap(rng, profile)
        oracle = lambda b, f: pp.synth_power(b, f, params)
        schedule = pp.profiling_schedule(batches, freqs, cap, oracle)
        discovered = pp.discovered_feasible(schedule, oracle, cap)
        expected = dict(pp.feasible_combinations(profile, cap).to_values(profile))
        assert discovered == expected


@criterion("8 sensitivity matrix (exact-zero diagonal, >=0, recomputed cells)")
def test_criterion_8_sensitivity_matrix():
    rng = np.random.default_rng(1008)
    scenarios = 0
    while scenarios < 50:
        profile, _ = random_profile(rng, max_batches=6, max_freqs=12)
        targets = {f"target-{k}": random_counts(rng, profile.batch_sizes) for k in range(3)}
        proxies = {
            f"self-{k}": pp.relation_vector(targets[f"target-{k}"]) for k in range(3)
        }
        proxies["warped"] = distorted_relation(rng, targets["target-0"])
        lo, hi = float(profile.power_table.min()), float(profile.power_table.max())
        cap = pp.PowerCap(float(rng.uniform(lo * 1.01, hi * 1.2)))
        try:
            matrix = pp.build_sensitivity(profile, proxies, targets, cap)
        except pp.InfeasibleError:
            continue
        scenarios += 1

        assert np.all(matrix.values >= 0.0)
        for k in range(3):
            p = matrix.proxy_ids.index(f"self-{k}")
            t = matrix.target_ids.index(f"target-{k}")
            assert matrix.values[p, t] == 0.0, "self proxy must reproduce the fastest choice"

        for p_idx, pid in enumerate(matrix.proxy_ids):
            sel = pp.select_configuration(profile, proxies[pid], cap)
            i = profile.batch_index(sel.batch_size)
            j = profile.frequency_index(sel.frequency_mhz)
            for t_idx, tid in enumerate(matrix.target_ids):
                counts = targets[tid]
                realized = float(profile.time_table[i, j] * counts[sel.batch_size])
                best = None
                for bi, b in enumerate(profile.batch_sizes):
                    for fj in range(len(profile.frequencies)):
                        if profile.power_table[bi, fj] < cap.p_max:
                            tt = float(profile.time_table[bi, fj] * counts[b])
                            if best is None or tt < best:
                                best = tt
                expected = (realized - best) / best * 100.0
                assert matrix.values[p_idx, t_idx] == expected


JETSON_LIKE_PARAMS = pp.SynthDeviceParams(
    p_static=1.2,
    power_coeff=6.3e-3,
    voltage_curve=((76.8, 0.8), (921.6, 1.1)),
    parallel_cap=64,
    per_sample_cost=1.5,
    freq_efficiency=120.0,
    rng_seed=7,
    noise_level=0.1,
)
JETSON_LIKE_BATCHES = (4, 8, 16, 32, 64, 128)
JETSON_LIKE_FREQS = (
    76.8, 153.6, 230.4, 307.2, 384.0, 460.8, 537.6, 614.4, 691.2, 768.0, 844.8, 921.6,
)


@criterion("9 desk-scale demonstration (speedup >= 1; time-optimal != energy-optimal witness)")
def test_criterion_9_demonstration():
    # Absolute published hardware numbers are out of reach without the
    # device's real lookup tables; demonstrate the two relative claims on a
    # Jetson-like synthetic device instead.
    profile = pp.generate_profile(
        JETSON_LIKE_BATCHES, JETSON_LIKE_FREQS, JETSON_LIKE_PARAMS, 4096, model_id="jetson-like"
    )
    counts = pp.synth_counts(JETSON_LIKE_BATCHES, pp.SynthConvergenceParams(n_min=8, b_noise=24))
    r = pp.relation_vector(counts, source_id="self")
    caps = [pp.PowerCap(4.5), pp.PowerCap(7.0), pp.PowerCap.unlimited()]
    safe = pp.compute_safe_table([profile], caps)
    report = pp.build_comparison(profile, r, caps, safe, true_counts=counts)
    ours_rows = report.rows_for("ours")
    assert len(ours_rows) == 3
    for row in ours_rows:
        assert row.status == "ok"
        assert row.speedup_vs_baseline1 >= 1.0
    assert any(row.speedup_vs_baseline1 > 1.0 for row in ours_rows)

    # pinned witness (seed 129): the joint choice is faster than baseline2
    # but costs more energy, so time-optimal does not imply energy-optimal
    rng = np.random.default_rng(129)
    wit_profile, _ = random_profile(rng, max_batches=6, max_freqs=12)
    wit_counts = random_counts(rng, wit_profile.batch_sizes)
    wit_r = pp.relation_vector(wit_counts, source_id="self")
    lo, hi = float(wit_profile.power_table.min()), float(wit_profile.power_table.max())
    wit_cap = pp.PowerCap(float(rng.uniform(lo, hi)))
    wit_safe = pp.compute_safe_table([wit_profile], [wit_cap])
    ours = pp.select_configuration(wit_profile, wit_r, wit_cap)
    slower = pp.baseline2_select(wit_profile, wit_r, wit_cap, wit_safe)

    def realized(sel):
        i = wit_profile.batch_index(sel.batch_size)
        j = wit_profile.frequency_index(sel.frequency_mhz)
        return float(wit_profile.time_table[i, j] * wit_counts[sel.batch_size])

    assert realized(slower) > realized(ours)
    ours_energy = pp.energy_estimate(ours, wit_profile, wit_counts[ours.batch_size])
    slower_energy = pp.energy_estimate(slower, wit_profile, wit_counts[slower.batch_size])
    assert ours_energy > slower_energy
