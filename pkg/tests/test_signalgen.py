"""Signal oracle: direction rule, one-hot encoding, confidence semantics."""

import math

import numpy as np
import pytest

from fusecast.errors import ConfigError, ContractError
from fusecast.signalgen import (
    Direction,
    SignalConfig,
    confidence_from_logits,
    encode_one_hot,
    generate_signal,
    realized_direction,
    signal_series,
)
from fusecast.synthdata import GenConfig, generate_series


class TestRealizedDirection:
    def test_up(self):
        assert realized_direction(100.0, 103.0, 0.01) is Direction.UP

    def test_flat_zero_return(self):
        assert realized_direction(100.0, 100.0, 0.01) is Direction.FLAT

    def test_flat_small_negative(self):
        assert realized_direction(100.0, 99.95, 0.01) is Direction.FLAT

    def test_down(self):
        assert realized_direction(100.0, 95.0, 0.01) is Direction.DOWN

    def test_nonpositive_price(self):
        with pytest.raises(ContractError):
            realized_direction(0.0, 1.0, 0.01)


class TestOneHot:
    def test_mapping(self):
        assert encode_one_hot(Direction.UP) == (1.0, 0.0, 0.0)
        assert encode_one_hot(Direction.DOWN) == (0.0, 1.0, 0.0)
        assert encode_one_hot(Direction.FLAT) == (0.0, 0.0, 1.0)


class TestConfidence:
    def test_ln2_logits_give_half(self):
        conf = confidence_from_logits(np.array([math.log(2.0), 0.0, 0.0]))
        assert conf == pytest.approx(0.5, abs=1e-12)

    def test_uniform_logits_give_third(self):
        assert confidence_from_logits(np.zeros(3)) == pytest.approx(1 / 3)


class TestGenerateSignal:
    def test_perfect_accuracy(self):
        cfg = SignalConfig(accuracy=1.0, seed=0)
        rng = np.random.default_rng(0)
        for true_dir in Direction:
            for _ in range(200):
                sig = generate_signal(true_dir, cfg, rng)
                assert sig.direction is true_dir

    def test_emitted_is_one_hot_argmax(self):
        cfg = SignalConfig(accuracy=0.5, seed=0)
        rng = np.random.default_rng(1)
        for _ in range(500):
            sig = generate_signal(Direction.UP, cfg, rng)
            assert sum(sig.one_hot) == 1.0
            assert sig.one_hot[sig.direction.value] == 1.0

    def test_confidence_bounds_many_draws(self):
        cfg = SignalConfig(accuracy=0.7)
        rng = np.random.default_rng(2)
        confs = [generate_signal(Direction.DOWN, cfg, rng).confidence for _ in range(100_000)]
        confs = np.array(confs)
        assert confs.min() >= 1 / 3
        assert confs.max() <= 1.0

    def test_accuracy_monte_carlo_third(self):
        cfg = SignalConfig(accuracy=1 / 3)
        rng = np.random.default_rng(3)
        n = 100_000
        hits = sum(
            generate_signal(Direction.UP, cfg, rng).direction is Direction.UP
            for _ in range(n)
        )
        assert abs(hits / n - 1 / 3) < 0.01

    def test_accuracy_converges_within_3_sigma(self):
        acc = 0.7
        cfg = SignalConfig(accuracy=acc)
        rng = np.random.default_rng(4)
        n = 100_000
        hits = sum(
            generate_signal(Direction.FLAT, cfg, rng).direction is Direction.FLAT
            for _ in range(n)
        )
        sigma = math.sqrt(acc * (1 - acc) / n)
        assert abs(hits / n - acc) < 3 * sigma

    def test_correct_more_confident_than_wrong(self):
        cfg = SignalConfig(accuracy=0.5)
        rng = np.random.default_rng(5)
        correct, wrong = [], []
        for _ in range(20_000):
            sig = generate_signal(Direction.UP, cfg, rng)
            (correct if sig.direction is Direction.UP else wrong).append(sig.confidence)
        assert np.mean(correct) > np.mean(wrong)

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            SignalConfig(accuracy=1.5)
        with pytest.raises(ConfigError):
            SignalConfig(flat_band=-0.1)


class TestSignalSeries:
    def test_count_and_final_placeholder(self):
        series = generate_series(GenConfig(n=300, seed=1))
        sigs = signal_series(series, SignalConfig(seed=2))
        assert len(sigs) == 300
        assert all(s.usable for s in sigs[:-1])
        assert not sigs[-1].usable
        assert sigs[-1].direction is Direction.FLAT

    def test_perfect_accuracy_matches_realized(self):
        series = generate_series(GenConfig(n=300, seed=1))
        cfg = SignalConfig(accuracy=1.0, seed=2)
        sigs = signal_series(series, cfg)
        for t in range(299):
            true_dir = realized_direction(
                series.bars[t].price, series.bars[t + 1].price, cfg.flat_band
            )
            assert sigs[t].direction is true_dir

    def test_same_seed_identical(self):
        series = generate_series(GenConfig(n=120, seed=1))
        cfg = SignalConfig(seed=9)
        assert signal_series(series, cfg) == signal_series(series, cfg)

    def test_too_few_bars(self):
        series = generate_series(GenConfig(n=2, seed=1))
        signal_series(series, SignalConfig())  # 2 bars is the minimum
        series.bars = series.bars[:1]
        with pytest.raises(ContractError):
            signal_series(series, SignalConfig())
