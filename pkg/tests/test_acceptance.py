"""Acceptance suite: one test per criterion, each reporting PASS/FAIL.

Run ``pytest tests/test_acceptance.py -v``; the verdicts are printed in
the "acceptance criteria" section of the terminal summary.
"""

import itertools
import math
import random
import time
from pathlib import Path

import numpy as np

from falsar.bandit import (
    BanditHistory,
    select_epsilon_greedy,
    select_ucb1,
)
from falsar.cli import main as cli_main
from falsar.falsify import classify_spec, falsify, falsify_hc, falsify_mab_conj
from falsar.signals import Signal
from falsar.stl import (
    Always,
    Interval,
    Or,
    eval_boolean,
    eval_robust,
    eval_robust_restricted,
    falsified_time_set,
    parse,
    robustness_trace,
)
from falsar.systems import ScaledModel, load_model, scale_formula

from mocks import Lattice, scaled
from oracles import brute_robust, brute_robust_at, random_formula, random_instance, random_signal

DATA = Path(__file__).parent / "data"
KS = (-2, 0, 1, 3)

_corpus = None


def corpus():
    global _corpus
    if _corpus is None:
        rnd = random.Random(20240101)
        _corpus = [random_instance(rnd, max_depth=4, max_len=50) for _ in range(10_000)]
    return _corpus


# ------------------------------------------------------------------ 1
def test_c1_monitor_matches_oracle(criterion):
    cases = corpus()
    t0 = time.perf_counter()
    mismatches = sum(robustness_trace(phi, w).tolist() != brute_robust_at(phi, w) for phi, w in cases)
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 30
    criterion(1, ok, f"{len(cases)} instances, {mismatches} mismatches, {elapsed:.1f}s (limit 30s)")
    assert ok


# ------------------------------------------------------------------ 2
def test_c2_sign_soundness(criterion):
    violations = 0
    for phi, w in corpus():
        rb, sat = eval_robust(phi, w), eval_boolean(phi, w)
        violations += (rb > 0 and not sat) or (rb < 0 and sat)
    criterion(2, violations == 0, f"{violations} sign violations on {len(corpus())} instances")
    assert violations == 0


# ------------------------------------------------------------------ 3
def test_c3_restricted_robustness_lemma(criterion):
    rnd = random.Random(7)
    t0 = time.perf_counter()
    cases = negatives = violations = 0
    while cases < 1000:
        w = random_signal(rnd, 40)
        phi1 = random_formula(rnd, 2, w.horizon, w.step)
        phi2 = random_formula(rnd, 2, w.horizon, w.step)
        a, b = sorted(rnd.sample(range(w.n_samples + 1), 2)) if w.n_samples > 1 else (0, 1)
        itv = Interval(w.step * a, w.step * b)
        S = falsified_time_set(phi1, w, itv)
        if not S.any():
            continue
        cases += 1
        if eval_robust_restricted(phi2, w, S) < 0:
            negatives += 1
            violations += not brute_robust(Always(itv, Or(phi1, phi2)), w) < 0
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 10 and negatives > 0
    criterion(3, ok, f"{cases} cases, {negatives} with negative restricted robustness, "
                     f"{violations} violations, {elapsed:.1f}s (limit 10s)")
    assert ok


# ------------------------------------------------------------------ 4
def test_c4_constant_speed_traces(criterion):
    phi = parse("alw_[0,30](speed<120)")
    flat = np.full(31, 90.0)
    dip = flat.copy()
    dip[12] = 110.0
    peak = flat.copy()
    peak[20] = 130.0
    got = [eval_robust(phi, Signal.from_columns(1.0, speed=s)) for s in (flat, dip, peak)]
    ok = got == [30.0, 10.0, -10.0]
    criterion(4, ok, f"robustness {got}, expected [30, 10, -10]")
    assert ok


# ------------------------------------------------------------------ 5
def lattice_streams(seed, n_arms=2, length=60, j=10):
    """Per-arm robustness streams on the grid m * 100 * 2**-j (exact under 10**k)."""
    rng = np.random.default_rng(seed)
    streams = []
    for _ in range(n_arms):
        m = int(rng.integers(2**12, 2**16))
        vals = []
        for _ in range(length):
            m -= int(rng.integers(0, 2**9))       # drifts down, may cross zero
            vals.append(m * 100.0 / 2**j)
        streams.append(vals)
    return streams


def play(streams, factors, strategy, seed, steps=50):
    """Mock harness: arm j's i-th play reports streams[j][i] * factors[j]."""
    h = BanditHistory(len(streams))
    rng = np.random.default_rng(seed)
    pos = [0] * len(streams)
    arms, gains = [], []
    for _ in range(steps):
        arm = select_ucb1(h, 1.0) if strategy == "ucb" else select_epsilon_greedy(h, 0.1, rng)
        rb = streams[arm][pos[arm]] * factors[arm]
        pos[arm] += 1
        arms.append(arm)
        gains.append(h.record_robustness(arm, rb))
    return arms, gains


def test_c5_scale_invariance(criterion):
    failures = checked = 0
    for seed in range(20):
        streams = lattice_streams(seed)
        for strategy in ("ucb", "egreedy"):
            base = play(streams, (1.0, 1.0), strategy, seed)
            for k1, k2 in itertools.product(KS, repeat=2):
                got = play(streams, (10.0**k1, 10.0**k2), strategy, seed)
                checked += 1
                failures += got != base       # list equality on floats is bitwise here
    # end to end through the conjunctive driver on a lattice-valued mock model
    spec = classify_spec(parse("alw_[0,5](a > 0 and b > 0)"))
    for strategy in ("ucb", "egreedy"):
        ref = falsify_mab_conj(Lattice(), spec, 600, strategy, seed=3)
        for k1, k2 in itertools.product(KS, repeat=2):
            other = falsify_mab_conj(scaled(Lattice(), k1, k2), spec, 600, strategy, seed=3)
            checked += 1
            failures += (other.arm_sequence != ref.arm_sequence or len(other.trace) != len(ref.trace)
                         or [np.sign(it.rb) for it in other.trace] != [np.sign(it.rb) for it in ref.trace])
    criterion(5, failures == 0, f"{checked} scaled replays, {failures} differ from the unscaled run")
    assert failures == 0


# ------------------------------------------------------------------ 6
def test_c6_scale_problem_on_synthetic_model(criterion):
    t0 = time.perf_counter()
    m = load_model("synthetic", m1=1.0, m2=1000.0)
    phi = parse("alw_[0,10](y1 > 0 and y2 > 0)")
    spec = classify_spec(phi)
    seeds = range(30)
    hc = sum(falsify_hc(m, phi, 200, seed=s).falsified for s in seeds)
    ucb = sum(falsify_mab_conj(m, spec, 200, "ucb", seed=s).falsified for s in seeds)
    elapsed = time.perf_counter() - t0
    ok = hc <= 10 and ucb >= 24 and elapsed < 300
    criterion(6, ok, f"hc SR {hc}/30 (need <= 10), mab-ucb SR {ucb}/30 (need >= 24), {elapsed:.1f}s")
    assert ok


# ------------------------------------------------------------------ 7
def test_c7_car_competence(criterion):
    t0 = time.perf_counter()
    car = load_model("car")
    specs = {"AT1": "alw_[0,30](gear == 3 -> speed > 20.6)", "AT2": "alw_[0,30](gear == 4 -> speed > 43)"}
    rows, notes = {}, []
    for name, text in specs.items():
        for k in (0, 3):
            model = car if k == 0 else ScaledModel(car, "speed", k)
            phi = parse(text) if k == 0 else scale_formula(parse(text), "speed", k)
            for algo in ("hc", "mab-ucb"):
                res = [falsify(model, phi, algo, 300, seed=s) for s in range(30)]
                rows[name, k, algo] = (sum(r.falsified for r in res), np.mean([r.simulations for r in res]))
                notes.append(f"{name} k={k} {algo}: SR {rows[name, k, algo][0]}/30 "
                             f"sims {rows[name, k, algo][1]:.1f}")
    elapsed = time.perf_counter() - t0
    sr_ok = all(sr >= 25 for sr, _ in rows.values())
    sims_ok = all(rows[n, 3, "mab-ucb"][1] <= rows[n, 3, "hc"][1] for n in specs)
    ok = sr_ok and sims_ok and elapsed < 600
    criterion(7, ok, f"SR>=25 everywhere: {sr_ok}; mab-ucb sims <= hc at k=3: {sims_ok}; "
                     f"{elapsed:.1f}s | " + "; ".join(notes))
    assert ok


# ------------------------------------------------------------------ 8
def test_c8_ucb_regret_sanity(criterion):
    c, horizon = math.sqrt(2), 10_000
    fractions = []
    for seed in range(30):
        rng = np.random.default_rng(seed)
        h = BanditHistory(2)
        for _ in range(horizon):
            arm = select_ucb1(h, c)
            p = 0.9 if arm == 0 else 0.1
            h.record(arm, float(rng.random() < p))
        fractions.append(h.count(0) / horizon)
    ok = min(fractions) >= 0.9
    criterion(8, ok, f"optimal-arm play fraction min {min(fractions):.4f} over 30 seeds (need >= 0.9)")
    assert ok


# ------------------------------------------------------------------ 9
def test_c9_epsilon_greedy_frequencies(criterion):
    h = BanditHistory(2)
    h.record(0, 0.9)
    h.record(1, 0.1)
    rng = np.random.default_rng(2024)
    draws = np.array([select_epsilon_greedy(h, 0.1, rng) for _ in range(100_000)])
    freq = [float(np.mean(draws == 0)), float(np.mean(draws == 1))]
    ok = abs(freq[0] - 0.95) <= 0.01 and abs(freq[1] - 0.05) <= 0.01
    criterion(9, ok, f"frequencies ({freq[0]:.4f}, {freq[1]:.4f}) vs (0.95, 0.05) within 0.01")
    assert ok


# ----------------------------------------------------------------- 10
def test_c10_golden_bench(criterion, tmp_path, capsys):
    out = tmp_path / "raw.csv"
    code = cli_main(["bench", "--config", str(DATA / "golden_config.json"), "--raw", str(out),
                     "--summary", str(tmp_path / "summary.csv")])
    capsys.readouterr()
    strip = lambda text: [ln.rsplit(",", 1)[0] for ln in text.split("\n")]  # noqa: E731
    got = strip(out.read_text(encoding="utf-8"))
    want = strip((DATA / "golden_raw.csv").read_text(encoding="utf-8"))
    ok = code == 0 and got == want
    criterion(10, ok, f"{len(want) - 2} raw rows, byte-identical apart from seconds: {got == want}")
    assert ok
