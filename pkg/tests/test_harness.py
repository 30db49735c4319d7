import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from predseq.errors import ConfigError, ContractError, ExportError
from predseq.geometry import l2_geometry, simplex_geometry
from predseq.harness import COLUMNS, RegretLedger, read_config_file, run_experiment
from predseq.harness.channels import DelayedChannel, DelayedMean, delayed_hint, make_channel
from predseq.harness.doubling import DoublingWrapper, phase_ends
from predseq.harness.experiment import ExperimentConfig, parse_eta
from predseq.harness.export import export
from predseq.harness.sequences import IIDSequence, NoisySequence, parse_sigma
from predseq.full_info import OptimisticMirrorDescent

ball = l2_geometry(3)


# sequences

@pytest.mark.parametrize("geom", [l2_geometry(4), simplex_geometry(4)], ids=["l2", "simplex"])
def test_noisy_sequence_respects_budget(geom):
    seq = NoisySequence(geom, 10_000, "const:0.3", batch=(2,), rng=np.random.default_rng(0))
    worst = 0.0
    for _ in range(10_000):
        x = seq.next()
        assert (np.abs(x) <= 1 + 1e-12).all()
        gap = np.abs(x - seq.generator_hint).max(axis=-1) if geom.name == "simplex" \
            else np.linalg.norm(x - seq.generator_hint, axis=-1)
        worst = max(worst, gap.max())
    assert worst <= 0.3 + 1e-12


def test_zero_budget_follows_generator_hint():
    seq = NoisySequence(ball, 50, 0.0, predictor="ewma:0.5", rng=np.random.default_rng(0))
    for _ in range(50):
        x = seq.next()
        np.testing.assert_array_equal(x, seq.generator_hint)


def test_iid_mean_concentrates():
    T = 4000
    seq = IIDSequence(ball, T, mean=0.3, spread=0.5, rng=np.random.default_rng(1))
    xs = np.array([seq.next() for _ in range(T)])
    assert np.linalg.norm(xs.mean(axis=0) - [0.3, 0, 0]) <= 3 * 0.5 / np.sqrt(T)


def test_parse_sigma_forms(tmp_path):
    np.testing.assert_array_equal(parse_sigma("const:0.5", 3), [0.5] * 3)
    np.testing.assert_array_equal(parse_sigma(0.2, 2), [0.2, 0.2])
    f = tmp_path / "s.txt"
    f.write_text("0.1\n0.2\n0.3\n")
    np.testing.assert_allclose(parse_sigma(f"file:{f}", 3), [0.1, 0.2, 0.3])
    for bad in ("const:-1", "wat", f"file:{f}"):
        with pytest.raises(ConfigError):
            parse_sigma(bad, 4)


# channels

def test_delayed_hint_by_hand():
    history = np.array([[1.0], [3.0], [5.0], [7.0]])
    np.testing.assert_array_equal(delayed_hint(history, 4, 1), [2.0])
    np.testing.assert_array_equal(delayed_hint(history, 4, 0), [3.0])
    np.testing.assert_array_equal(delayed_hint(history, 2, 1), [0.0])


def test_delayed_mean_matches_direct_formula():
    rng = np.random.default_rng(0)
    xs = rng.uniform(-1, 1, size=(40, 2))
    for k in (0, 1, 3, 10):
        src = DelayedMean(k).reset((2,))
        for t in range(1, 41):
            np.testing.assert_allclose(src.hint(), delayed_hint(xs, t, k), atol=1e-14)
            src.absorb(xs[t - 1])


def test_constant_sequence_has_no_delay_gap():
    xs = np.tile([0.4, -0.2], (20, 1))
    for t in range(3, 21):
        np.testing.assert_allclose(delayed_hint(xs, t, 1), [0.4, -0.2])


@settings(deadline=None, max_examples=50)
@given(arrays(float, (100, 2), elements=st.floats(-0.7, 0.7)))
def test_delay_gap_bound(xs):
    t, k = 100, 3
    gap = np.linalg.norm(delayed_hint(xs, t, k) - xs[: t - 1].mean(axis=0))
    assert gap <= 2 * k / (t - 1) + 1e-12  # 6/99


def test_delayed_channel_releases_late_outcomes():
    ch = DelayedChannel(2)
    seen = [ch.deliver(np.array([float(i)]))["late"] for i in range(5)]
    assert seen[:2] == [None, None]
    assert [float(s[0]) for s in seen[2:]] == [0.0, 1.0, 2.0]
    with pytest.raises(ConfigError):
        make_channel("delayed:x")


# doubling

def test_phase_ends_by_hand():
    assert phase_ends([1.0] * 30, 1.0, 4.0) == [1, 2, 4, 9, 26]
    assert phase_ends([0.0] * 30, 1.0, 4.0) == []


def test_wrapper_matches_reference_and_restarts():
    L = OptimisticMirrorDescent(ball, 1.0)
    W = DoublingWrapper(L, 1.0, loss_range=1.0)
    assert W.eta == 4.0
    crossed = [bool(W.close_round(1.0, np.zeros(3))) for _ in range(30)]
    assert [t + 1 for t, c in enumerate(crossed) if c] == [1, 2, 4, 9, 26]
    assert int(W.phase) == 5 and L.eta == pytest.approx(4.0 / 32)


def test_wrapper_rejects_bad_increments():
    W = DoublingWrapper(OptimisticMirrorDescent(ball, 1.0), 1.0)
    with pytest.raises(ContractError):
        W.close_round(-0.1)
    with pytest.raises(ContractError):
        W.close_round(np.nan)


def test_parse_eta():
    assert parse_eta("auto") == ("auto", None)
    assert parse_eta("0.5") == ("fixed", 0.5)
    assert parse_eta("doubling") == ("doubling", None)
    assert parse_eta("doubling:2") == ("doubling", 2.0)
    with pytest.raises(ConfigError):
        parse_eta("-1")


# ledger

def test_ledger_columns_and_contract():
    led = RegretLedger(ball, 1)
    led.record(np.array([1.0, 0, 0]), np.array([0.5, 0, 0]), np.zeros(3))
    led.record(np.array([0.0, 1, 0]), np.array([0.5, 0, 0]), np.array([0.5, 0, 0]))
    np.testing.assert_allclose(led.loss[:, 0], [0.5, 0.0])
    np.testing.assert_allclose(led.best_cum_loss[:, 0], [-0.5, -1.0])
    np.testing.assert_allclose(led.final_regret, [1.5])
    np.testing.assert_allclose(led.column("hint_error_sq")[:, 0], [0.25, 0.0])
    np.testing.assert_allclose(led.recompute(), led.final_regret, atol=1e-12)
    with pytest.raises(ContractError):
        led.record(np.zeros(3), np.ones(3), -np.ones(3))


def test_phase_slices_concatenate_to_the_run():
    res = run_experiment({"algo": "omd", "geometry": "l2", "dim": 3, "horizon": 400, "eta": "doubling",
                          "sigma": "const:0.5", "seed": 2})
    slices = res.ledger.phase_slices(0)
    assert slices[0][0] == 0 and slices[-1][1] == 400
    assert all(a[1] == b[0] for a, b in zip(slices, slices[1:]))
    parts = [res.ledger.loss[a:b, 0].sum() for a, b in slices]
    assert sum(parts) == pytest.approx(res.ledger.loss[:, 0].sum())


# experiments and export

SMALL = {"algo": "omd", "geometry": "simplex", "dim": 4, "horizon": 200, "seed": 5, "replicas": 2}


@pytest.mark.parametrize("algo,extra", [
    ("omd", {}), ("oftrl", {}), ("ew-local", {}), ("scrible", {"geometry": "l2"}),
    ("scrible", {"channel": "delayed:2"}), ("scrible-mab", {}), ("omd-learnM", {}),
    ("omd-learnM-partial", {}), ("scrible-learnM", {}), ("scrible-learnM-partial", {}),
    ("fpl-l1", {"geometry": "l1"}), ("fpl-simplex", {}), ("scrible-hint", {"eta": "doubling"}),
])
def test_every_algorithm_runs_and_recomputes(algo, extra):
    res = run_experiment({**SMALL, "algo": algo, **extra})
    assert res.ledger.horizon == 200
    np.testing.assert_allclose(res.info["recomputed_regret"], res.regret, atol=1e-9)
    for name, chk in res.checks.items():
        assert chk.lhs.shape == chk.rhs.shape, name


def test_same_seed_same_csv(tmp_path):
    a = export(run_experiment(SMALL), tmp_path / "a")[0].read_bytes()
    b = export(run_experiment(SMALL), tmp_path / "b")[0].read_bytes()
    assert a == b


def test_csv_and_json_agree(tmp_path):
    res = run_experiment(SMALL)
    export(res, tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "rounds.csv")))
    assert list(rows[0]) == list(COLUMNS) + ["replica"]
    assert len(rows) == 200 * 2
    summary = json.loads((tmp_path / "summary.json").read_text())
    for r in range(2):
        mine = [row for row in rows if row["replica"] == str(r)]
        assert float(mine[-1]["regret"]) == pytest.approx(summary["final_regret"][r], abs=1e-12)
        errs = sum(float(row["hint_error_sq"]) for row in mine)
        assert errs == pytest.approx(summary["hint_error_total"][r], rel=1e-12)


def test_zero_horizon(tmp_path):
    res = run_experiment({**SMALL, "horizon": 0})
    np.testing.assert_array_equal(res.regret, [0.0, 0.0])
    export(res, tmp_path)
    assert (tmp_path / "rounds.csv").read_text().strip() == ",".join(COLUMNS + ("replica",))


def test_export_to_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ExportError):
        export(run_experiment({**SMALL, "horizon": 5}), blocker)
    with pytest.raises(ExportError):
        export(run_experiment({**SMALL, "horizon": 5}), tmp_path / "x", fmt="xml")


@pytest.mark.parametrize("bad", [
    {"algo": "omd", "channel": "bandit"},
    {"algo": "scrible", "channel": "full"},
    {"algo": "omd", "channel": "delayed:2"},
    {"algo": "fpl-l1"},
    {"algo": "fpl-simplex", "eta": "doubling"},
    {"algo": "scrible", "predictor": "oracle"},
    {"algo": "nope"},
    {"horizon": -1},
    {"bogus_key": 1},
])
def test_incompatible_configs(bad):
    with pytest.raises(ConfigError):
        run_experiment({**SMALL, **bad})


def test_config_file_round_trip(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nalgo = ew-local\ndim=3\nsigma = const:0.2\n")
    cfg = ExperimentConfig.from_mapping(read_config_file(f))
    assert (cfg.algo, cfg.dim, cfg.sigma) == ("ew-local", 3, "const:0.2")


@pytest.mark.parametrize("algo,reads", [("omd-learnM", 4.0), ("omd-learnM-partial", 1.0),
                                        ("scrible-learnM", 4.0), ("scrible-learnM-partial", 1.0)])
def test_model_reads_per_round(algo, reads):
    res = run_experiment({**SMALL, "algo": algo, "models": "last,mean,zero,flip", "replicas": 3})
    assert res.info["model_reads_per_round"] == reads
