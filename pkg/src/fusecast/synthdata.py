"""Synthetic market dataset: generation, CSV persistence, splits, windows.

Prices follow an arithmetic random walk with drift, floored at 0.01.
Defaults were frozen from a one-off calibration sweep so that a 3,000-step
series lands near the reference descriptive statistics (price mean ~390,
std ~251, volume mean ~5018).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, ParseError, SplitError, StandardizeError, WindowError

# high/low wicks scale with step volatility
WICK_STD_FRAC = 0.1

# calibrated defaults, see GenConfig
DEFAULT_START_PRICE = 35.0
DEFAULT_DRIFT = 0.24
DEFAULT_VOLATILITY = 5.0
DEFAULT_VOLUME_MEAN = 5017.69
DEFAULT_VOLUME_STD = 1836.88
DEFAULT_SEED = 204


@dataclass(frozen=True)
class GenConfig:
    """Parameters of the synthetic market generator."""

    n: int = 3000
    start_price: float = DEFAULT_START_PRICE
    drift: float = DEFAULT_DRIFT
    volatility: float = DEFAULT_VOLATILITY
    volume_mean: float = DEFAULT_VOLUME_MEAN
    volume_std: float = DEFAULT_VOLUME_STD
    n_extra_feats: int = 3
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.start_price <= 0:
            raise ConfigError(f"start_price must be > 0, got {self.start_price}")
        if self.volatility < 0:
            raise ConfigError(f"volatility must be >= 0, got {self.volatility}")
        if self.volume_mean <= 0:
            raise ConfigError(f"volume_mean must be > 0, got {self.volume_mean}")
        if self.volume_std < 0:
            raise ConfigError(f"volume_std must be >= 0, got {self.volume_std}")
        if self.n_extra_feats < 0:
            raise ConfigError(f"n_extra_feats must be >= 0, got {self.n_extra_feats}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")


@dataclass(frozen=True)
class Bar:
    """One time step. ``price`` duplicates ``close``; ``next_price`` is the
    following step's price (None on the final bar)."""

    time: int
    price: float
    open: float
    high: float
    low: float
    close: float
    volume: float
    next_price: Optional[float]
    feats: tuple[float, ...]


@dataclass
class MarketSeries:
    bars: list[Bar]
    gen_config: Optional[GenConfig] = None

    def __len__(self):
        return len(self.bars)

    def prices(self) -> np.ndarray:
        return np.array([b.price for b in self.bars])


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.7
    val_frac: float = 0.15
    test_frac: float = 0.15

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(not 0.0 < f < 1.0 for f in fracs):
            raise ConfigError(f"split fractions must each be in (0,1), got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(fracs)}")


def generate_series(config: GenConfig) -> MarketSeries:
    """Deterministic series for a given config; see module docstring for the
    price process."""
    rng = np.random.default_rng(config.seed)
    n = config.n

    steps = config.drift + rng.normal(0.0, config.volatility, n - 1)
    prices = np.empty(n)
    prices[0] = config.start_price
    for i in range(n - 1):
        prices[i + 1] = max(prices[i] + steps[i], 0.01)

    wick_std = WICK_STD_FRAC * config.volatility
    wick_hi = np.abs(rng.normal(0.0, wick_std, n))
    wick_lo = np.abs(rng.normal(0.0, wick_std, n))
    volume = np.maximum(rng.normal(config.volume_mean, config.volume_std, n), 1.0)
    feats = rng.standard_normal((n, config.n_extra_feats))

    opens = np.concatenate([[config.start_price], prices[:-1]])
    highs = np.maximum(opens, prices) + wick_hi
    lows = np.minimum(opens, prices) - wick_lo

    bars = [
        Bar(
            time=t,
            price=float(prices[t]),
            open=float(opens[t]),
            high=float(highs[t]),
            low=float(lows[t]),
            close=float(prices[t]),
            volume=float(volume[t]),
            next_price=float(prices[t + 1]) if t < n - 1 else None,
            feats=tuple(float(v) for v in feats[t]),
        )
        for t in range(n)
    ]
    return MarketSeries(bars=bars, gen_config=config)


# ---------------------------------------------------------------------------
# CSV persistence

_BASE_COLUMNS = ("time", "price", "open", "high", "low", "close", "volume", "next_price")
_SIGNAL_COLUMNS = ("sig_up", "sig_down", "sig_flat", "confidence")


def _header(n_extra_feats: int, with_signals: bool) -> list[str]:
    cols = list(_BASE_COLUMNS) + [f"feat_{i + 1}" for i in range(n_extra_feats)]
    if with_signals:
        cols += list(_SIGNAL_COLUMNS)
    return cols


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(series: MarketSeries, path, signals: Optional[Sequence] = None) -> None:
    """UTF-8, LF endings, floats at 17 significant digits. When ``signals``
    is given, one-hot and confidence columns are appended per row."""
    n_feats = len(series.bars[0].feats) if series.bars else (
        series.gen_config.n_extra_feats if series.gen_config else 3
    )
    if signals is not None and len(signals) != len(series.bars):
        raise ConfigError(
            f"signal count {len(signals)} does not match bar count {len(series.bars)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(_header(n_feats, signals is not None)) + "\n")
        for i, bar in enumerate(series.bars):
            row = [
                str(bar.time),
                _fmt(bar.price),
                _fmt(bar.open),
                _fmt(bar.high),
                _fmt(bar.low),
                _fmt(bar.close),
                _fmt(bar.volume),
                "" if bar.next_price is None else _fmt(bar.next_price),
            ]
            row += [_fmt(v) for v in bar.feats]
            if signals is not None:
                s = signals[i]
                row += [_fmt(v) for v in s.one_hot] + [_fmt(s.confidence)]
            fh.write(",".join(row) + "\n")


def read_csv(path) -> MarketSeries:
    """Parse a series written by :func:`write_csv`; signal columns, if
    present, are ignored. Errors name the offending row and column."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row") from None
        n_feats = sum(1 for c in header if c.startswith("feat_"))
        with_signals = header[-len(_SIGNAL_COLUMNS):] == list(_SIGNAL_COLUMNS)
        expected = _header(n_feats, with_signals)
        if header != expected:
            missing = [c for c in _BASE_COLUMNS if c not in header]
            if missing:
                raise ParseError(f"{path}: missing column(s) {missing}")
            raise ParseError(f"{path}: bad header {header}, expected {expected}")

        bars: list[Bar] = []
        for row_idx, row in enumerate(reader):
            if len(row) != len(expected):
                raise ParseError(
                    f"{path}: row {row_idx}: expected {len(expected)} fields, got {len(row)}"
                )
            vals = {}
            for col, raw in zip(expected, row):
                if col == "next_price" and raw == "":
                    vals[col] = None
                    continue
                try:
                    vals[col] = int(raw) if col == "time" else float(raw)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_idx}, column '{col}': cannot parse {raw!r}"
                    ) from None
            bars.append(
                Bar(
                    time=vals["time"],
                    price=vals["price"],
                    open=vals["open"],
                    high=vals["high"],
                    low=vals["low"],
                    close=vals["close"],
                    volume=vals["volume"],
                    next_price=vals["next_price"],
                    feats=tuple(vals[f"feat_{i + 1}"] for i in range(n_feats)),
                )
            )
    _validate_bars(bars, path)
    return MarketSeries(bars=bars, gen_config=None)


def _validate_bars(bars: list[Bar], path) -> None:
    for i, bar in enumerate(bars):
        if bar.time != i:
            raise ParseError(f"{path}: row {i}, column 'time': expected {i}, got {bar.time}")
        if bar.low > min(bar.open, bar.close) or bar.high < max(bar.open, bar.close):
            raise ParseError(f"{path}: row {i}, column 'high'/'low': OHLC ordering violated")
        if bar.volume <= 0:
            raise ParseError(f"{path}: row {i}, column 'volume': must be > 0")
        if i < len(bars) - 1 and bar.next_price != bars[i + 1].price:
            raise ParseError(
                f"{path}: row {i}, column 'next_price': {bar.next_price} != next row price"
            )


# ---------------------------------------------------------------------------
# splits, standardization, windows

def split_chronological(
    series: MarketSeries, spec: SplitSpec
) -> tuple[list[Bar], list[Bar], list[Bar]]:
    n = len(series.bars)
    n_train = int(spec.train_frac * n)
    n_val = int(spec.val_frac * n)
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise SplitError(
            f"split of {n} bars into {spec} leaves an empty partition "
            f"({n_train}/{n_val}/{n_test})"
        )
    return (
        series.bars[:n_train],
        series.bars[n_train : n_train + n_val],
        series.bars[n_train + n_val :],
    )


def _column_matrix(bars: Sequence[Bar]) -> tuple[list[str], dict[str, np.ndarray]]:
    n_feats = len(bars[0].feats)
    cols = list(_BASE_COLUMNS[1:]) + [f"feat_{i + 1}" for i in range(n_feats)]
    data = {
        "price": np.array([b.price for b in bars]),
        "open": np.array([b.open for b in bars]),
        "high": np.array([b.high for b in bars]),
        "low": np.array([b.low for b in bars]),
        "close": np.array([b.close for b in bars]),
        "volume": np.array([b.volume for b in bars]),
        "next_price": np.array(
            [b.price if b.next_price is None else b.next_price for b in bars]
        ),
    }
    # final bar has no next_price; keep array length but mark for exclusion
    data["_next_missing"] = np.array([b.next_price is None for b in bars])
    for i in range(n_feats):
        data[f"feat_{i + 1}"] = np.array([b.feats[i] for b in bars])
    return cols, data


@dataclass(frozen=True)
class FeatureStats:
    """Per-column mean/std fitted on the training partition (population std).

    ``feature_columns`` lists the model input columns in order; the ``price``
    column is excluded as an exact duplicate of ``close``. The next-price
    target is standardized with the ``price`` column's stats (it is the same
    process shifted by one step).
    """

    mean: dict[str, float]
    std: dict[str, float]
    feature_columns: tuple[str, ...]
    target_column: str = "price"


def fit_stats(train: Sequence[Bar]) -> FeatureStats:
    if not train:
        raise StandardizeError("cannot fit stats on an empty partition")
    cols, data = _column_matrix(train)
    mean, std = {}, {}
    for col in cols:
        if col == "next_price":
            continue
        vals = data[col]
        mean[col] = float(vals.mean())
        std[col] = float(vals.std())
        if std[col] == 0.0:
            raise StandardizeError(f"column '{col}' is constant; cannot standardize")
    n_feats = len(train[0].feats)
    feature_columns = ("open", "high", "low", "close", "volume") + tuple(
        f"feat_{i + 1}" for i in range(n_feats)
    )
    return FeatureStats(mean=mean, std=std, feature_columns=feature_columns)


@dataclass
class StandardizedPartition:
    """Matrix view of a partition: standardized model features plus the
    standardized and raw next-price targets (NaN where missing)."""

    times: np.ndarray
    features: np.ndarray
    target_std: np.ndarray
    target_raw: np.ndarray


def standardize(partition: Sequence[Bar], stats: FeatureStats) -> StandardizedPartition:
    """Apply train-fitted stats to any partition (no re-fitting)."""
    if not partition:
        raise StandardizeError("cannot standardize an empty partition")
    _, data = _column_matrix(partition)
    feats = np.column_stack(
        [(data[c] - stats.mean[c]) / stats.std[c] for c in stats.feature_columns]
    )
    raw = data["next_price"].copy()
    raw[data["_next_missing"]] = np.nan
    tgt = (raw - stats.mean[stats.target_column]) / stats.std[stats.target_column]
    return StandardizedPartition(
        times=np.array([b.time for b in partition]),
        features=feats,
        target_std=tgt,
        target_raw=raw,
    )


@dataclass
class WindowSample:
    """Look-back window: k+1 standardized feature rows, one aligned signal
    per row, and the next step's standardized / raw price."""

    features: np.ndarray
    signals: tuple
    target: float
    target_raw: float


def make_windows(partition: StandardizedPartition, signals: Sequence, k: int):
    """One sample per t in [k, L-2]; window rows are steps t-k..t."""
    L = partition.features.shape[0]
    if k < 1:
        raise ConfigError(f"look-back k must be >= 1, got {k}")
    if L < k + 2:
        raise WindowError(f"partition of length {L} too short for k={k} (need >= {k + 2})")
    if len(signals) != L:
        raise WindowError(f"{len(signals)} signals for {L} rows; must align one-to-one")
    samples = []
    for t in range(k, L - 1):
        samples.append(
            WindowSample(
                features=partition.features[t - k : t + 1].copy(),
                signals=tuple(signals[t - k : t + 1]),
                target=float(partition.target_std[t]),
                target_raw=float(partition.target_raw[t]),
            )
        )
    return samples
