import io
import math

import numpy as np
import pytest
from scipy import stats

from eprsim.simcore import (
    EventStream,
    SourceConfig,
    derive_seed,
    detect,
    generate_emissions,
    pulse_polarization,
    pulse_uniforms,
    run_experiment,
    write_events_csv,
)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(rate=0.0),
        dict(rate=-1.0),
        dict(pulse_length=0.0),
        dict(duration=-1.0),
        dict(efficiency=0.0),
        dict(efficiency=1.5),
        dict(seed=-1),
        dict(seed=2**64),
        dict(single_variant=2),
    ],
)
def test_source_config_rejects(kwargs):
    with pytest.raises(ValueError):
        SourceConfig(**kwargs)


def test_overlap_density():
    assert SourceConfig(rate=1e4, pulse_length=1e-6).overlap_density == pytest.approx(0.01)


def test_emission_count_is_poisson():
    em = generate_emissions(SourceConfig(rate=1000, duration=10, seed=17))
    assert abs(len(em) - 10_000) <= 3 * 100


def test_emissions_are_deterministic_and_sorted():
    cfg = SourceConfig(rate=1000, duration=10, seed=4)
    a, b = generate_emissions(cfg), generate_emissions(cfg)
    assert np.array_equal(a.t_emit, b.t_emit)
    assert np.array_equal(a.variant, b.variant)
    assert np.all(np.diff(a.t_emit) >= 0)
    assert a.t_emit.min() >= 0 and a.t_emit.max() <= 10
    c = generate_emissions(SourceConfig(rate=1000, duration=10, seed=5))
    assert not np.array_equal(a.t_emit[:100], c.t_emit[:100])


def test_variant_frequency():
    em = generate_emissions(SourceConfig(rate=1000, duration=10, seed=8))
    n = len(em)
    assert abs(em.variant.mean() - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_emission_times_uniform():
    em = generate_emissions(SourceConfig(rate=1000, duration=10, seed=9))
    assert stats.kstest(em.t_emit / 10, "uniform").pvalue > 0.01


def test_pulse_pair_iteration():
    em = generate_emissions(SourceConfig(rate=100, duration=0.1, seed=1))
    pairs = list(em)
    assert [p.id for p in pairs] == list(range(len(em)))
    assert all(p.variant in (0, 1) for p in pairs)


def test_zero_duration_is_empty():
    cfg = SourceConfig(duration=0.0)
    assert len(generate_emissions(cfg)) == 0
    left, right = run_experiment(cfg, 0.0, 0.0)
    assert len(left) == 0 and len(right) == 0


def test_pulse_substreams_are_random_access():
    full = pulse_uniforms(123, np.arange(50))
    picked = pulse_uniforms(123, [41, 7, 13])
    assert np.array_equal(picked, full[[41, 7, 13]])
    assert np.array_equal(pulse_uniforms(123, np.arange(20, 30)), full[20:30])


def test_derive_seed_distinct():
    seeds = {derive_seed(0, k) for k in range(100)}
    assert len(seeds) == 100
    assert derive_seed(5, 1, 2) == derive_seed(5, 1, 2)
    assert derive_seed(5, 1, 2) != derive_seed(5, 2, 1)


def test_pulse_polarization():
    assert pulse_polarization("L", 0) == pytest.approx(math.pi / 2)
    assert pulse_polarization("R", 0) == 0.0
    for n in (0, 1):
        diff = pulse_polarization("L", n) - pulse_polarization("R", n)
        assert abs(abs(diff) - math.pi / 2) < 1e-15
    with pytest.raises(ValueError):
        pulse_polarization("L", 2)
    with pytest.raises(ValueError):
        pulse_polarization("C", 0)


def _channels(delta, trials=10_000, seed=0):
    rng = np.random.default_rng(seed)
    events = [detect(delta, 0.0, 0.0, 1.0, 1.0, rng) for _ in range(trials)]
    return events


def test_detect_aligned_and_crossed():
    assert all(e.channel == 1 for e in _channels(0.0))
    assert all(e.channel == -1 for e in _channels(math.pi / 2))


def test_detect_diagonal_and_delay_distribution():
    events = _channels(math.pi / 4, seed=2)
    plus = sum(e.channel == 1 for e in events)
    n = len(events)
    assert abs(plus / n - 0.5) <= 3 * math.sqrt(0.25 / n)
    delays = np.array([e.time for e in events])
    assert delays.min() >= 0 and delays.max() <= 1
    assert stats.kstest(delays, "uniform").pvalue > 0.01


def test_detect_efficiency_and_metadata():
    rng = np.random.default_rng(3)
    out = [detect(0.3, 0.1, 5.0, 2.0, 0.25, rng, side="R", pulse_id=9) for _ in range(4000)]
    hits = [e for e in out if e is not None]
    assert abs(len(hits) / 4000 - 0.25) <= 3 * math.sqrt(0.25 * 0.75 / 4000)
    assert all(e.side == "R" and e.pulse_id == 9 and 5.0 <= e.time <= 7.0 for e in hits)
    with pytest.raises(ValueError):
        detect(0, 0, 0, 0.0, 1.0, rng)
    with pytest.raises(ValueError):
        detect(0, 0, 0, 1.0, 0.0, rng)


@pytest.fixture(scope="module")
def run_pair():
    cfg = SourceConfig(rate=1e4, pulse_length=1e-5, duration=2.0, efficiency=0.7, seed=21)
    return cfg, run_experiment(cfg, 0.4, 1.3)


def test_run_is_deterministic(run_pair):
    cfg, (left, right) = run_pair
    left2, right2 = run_experiment(cfg, 0.4, 1.3)
    assert left == left2 and right == right2


def test_run_stream_invariants(run_pair):
    cfg, (left, right) = run_pair
    em = generate_emissions(cfg)
    for s in (left, right):
        assert np.all(np.diff(s.time) >= 0)
        assert len(np.unique(s.pulse_id)) == len(s)
        t0 = em.t_emit[s.pulse_id]
        assert np.all(s.time >= t0) and np.all(s.time <= t0 + cfg.pulse_length)
        n = len(em)
        assert abs(len(s) - 0.7 * n) <= 3 * math.sqrt(n * 0.7 * 0.3)
    assert left.side == "L" and right.side == "R"
    with pytest.raises(ValueError):
        left.time[0] = 0.0


def test_left_stream_ignores_remote_analyzer():
    cfg = SourceConfig(rate=1e4, duration=1.0, seed=2)
    a, _ = run_experiment(cfg, 0.2, 0.0)
    b, _ = run_experiment(cfg, 0.2, 1.234)
    assert a == b
    _, c = run_experiment(cfg, 0.0, 0.7)
    _, d = run_experiment(cfg, 2.5, 0.7)
    assert c == d


@pytest.mark.parametrize("zl", [0.0, 0.4, math.pi / 4, 2.0])
def test_single_side_marginals_are_balanced(zl):
    left, _ = run_experiment(SourceConfig(rate=1e4, duration=2.0, seed=31), zl, 0.0)
    n = len(left)
    assert abs(np.mean(left.channel > 0) - 0.5) <= 3 * math.sqrt(0.25 / n)


@pytest.mark.parametrize("delta", [0.0, 0.3, math.pi / 4, 1.2])
def test_channel_statistics_chi_square(delta):
    # single-variant source: left polarization pi/2, analyzer pi/2 - delta
    cfg = SourceConfig(rate=1e4, duration=2.0, seed=41, single_variant=0)
    left, _ = run_experiment(cfg, math.pi / 2 - delta, 0.0)
    n = len(left)
    p = math.cos(delta) ** 2
    plus = int(np.sum(left.channel > 0))
    if p > 1 - 1e-12:
        assert plus == n
        return
    res = stats.chisquare([plus, n - plus], [n * p, n * (1 - p)])
    assert res.pvalue > 0.01


def test_equal_settings_anticorrelated_at_small_overlap():
    from eprsim.coincidence import WindowConfig, counts, pair_events

    cfg = SourceConfig(rate=1e4, pulse_length=1e-7, duration=5.0, seed=3)
    left, right = run_experiment(cfg, 0.0, 0.0)
    pairs = pair_events(left, right, WindowConfig(cfg.pulse_length))
    st = counts(pairs)
    legit = pairs.legitimate
    same = (pairs.left_channel == pairs.right_channel)
    assert not np.any(same & legit)
    assert (st.n_pp + st.n_mm) / st.n_total < cfg.overlap_density


def test_events_csv_roundtrip():
    left = EventStream.from_times("L", [0.1, 0.3], [1, -1], [0, 1])
    right = EventStream.from_times("R", [0.2], [-1], [0])
    buf = io.StringIO()
    write_events_csv(buf, left, right)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "side,channel,time,pulse_id"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["L", "R", "L"]
    assert lines[2].split(",")[1] == "-"
    t = lines[3].split(",")[2]
    assert float(t) == 0.3 and len(t.split("e")[0].replace(".", "")) >= 12


def test_event_iteration():
    left = EventStream.from_times("L", [0.5], [-1], [7])
    (e,) = list(left)
    assert (e.side, e.channel, e.time, e.pulse_id) == ("L", -1, 0.5, 7)
