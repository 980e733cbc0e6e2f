"""Seeded synthetic data: a GARCH(1,1)-driven price path and a marker-token headline corpus."""
from __future__ import annotations

import csv
import datetime as dt
from pathlib import Path

import numpy as np

from . import garch
from .marketdata import PriceSeries, write_prices

POSITIVE_MARKERS = ("rally", "surge", "gains", "boom")
NEGATIVE_MARKERS = ("slump", "crash", "losses", "panic")
FILLER = (
    "government", "minister", "election", "talks", "report", "city", "court", "police", "summit",
    "company", "trade", "energy", "oil", "bank", "president", "europe", "china", "india", "russia",
    "brazil", "africa", "vote", "deal", "official", "plan", "weather", "storm", "football", "health",
    "school", "research", "border", "protest", "budget", "tax", "science", "space", "festival",
    "airline", "railway", "harbour", "farmers", "workers", "union", "ministry", "parliament",
)
POSITIVE_TONE = ("hopes", "recovery", "optimism", "record")
NEGATIVE_TONE = ("fears", "turmoil", "warning", "slowdown")
STOP_SPRINKLE = ("the", "of", "in", "a", "on", "to", "and", "is")

FIXTURE_PARAMS = garch.GarchParams(0.05, [0.10], [0.85])
START_DATE = dt.date(2008, 8, 8)


def business_days(start: dt.date, n: int) -> list[dt.date]:
    days = np.busday_offset(np.datetime64(start), np.arange(n), roll="forward")
    return [d.astype(object) for d in days]


def garch_price_path(params: garch.GarchParams = FIXTURE_PARAMS, n_returns: int = 2000, seed: int = 2024,
                     scale: float = 0.01, start_price: float = 1000.0,
                     start: dt.date = START_DATE) -> PriceSeries:
    """Closes whose log returns are ``scale * eps`` with ``eps`` simulated from ``params``."""
    eps = garch.simulate(params, n_returns, seed)
    log_path = np.log(start_price) + np.concatenate([[0.0], np.cumsum(scale * eps)])
    return PriceSeries(business_days(start, n_returns + 1), np.round(np.exp(log_path), 6))


def headline_corpus(prices: PriceSeries, per_day: int = 4, seed: int = 2024) -> list[tuple[dt.date, str]]:
    """Every headline carries a marker word and a tone word whose polarity matches the next-day move."""
    rng = np.random.default_rng(seed)
    rows = []
    closes = prices.closes
    for k, d in enumerate(prices.dates):
        if k + 1 < len(closes):
            up = closes[k + 1] > closes[k]
        else:
            up = bool(rng.integers(0, 2))
        markers, tone = (POSITIVE_MARKERS, POSITIVE_TONE) if up else (NEGATIVE_MARKERS, NEGATIVE_TONE)
        for _ in range(per_day):
            words = list(rng.choice(FILLER, size=int(rng.integers(4, 8))))
            words.insert(int(rng.integers(0, len(words) + 1)), str(rng.choice(markers)))
            words.insert(int(rng.integers(0, len(words) + 1)), str(rng.choice(tone)))
            words.insert(int(rng.integers(0, len(words) + 1)), str(rng.choice(STOP_SPRINKLE)))
            text = " ".join(words)
            rows.append((d, text[0].upper() + text[1:]))
    return rows


CONFIG_TEMPLATE = """\
# Bundled synthetic fixture: GARCH(1,1) prices and marker-token headlines.
seed = 7

[paths]
prices = "prices.csv"
headlines = "headlines.csv"
out = "out"

[split]
train_fraction = 0.7

[svr]
c = 2.0
gamma = 0.001
epsilon = 0.001
lags = 5

[word2vec]
epochs = 3
batch_size = 128

[cnn]
epochs = 5

[lstm]
epochs = 60
"""


def write_headlines(path, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "headline"])
        for d, text in rows:
            w.writerow([d.isoformat(), text])


def write_fixture(directory, n_returns: int = 2000, seed: int = 2024, per_day: int = 4) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    prices = garch_price_path(n_returns=n_returns, seed=seed)
    write_prices(directory / "prices.csv", prices)
    write_headlines(directory / "headlines.csv", headline_corpus(prices, per_day=per_day, seed=seed))
    (directory / "config.toml").write_text(CONFIG_TEMPLATE, encoding="utf-8")
    return directory


def bundled_fixture_dir() -> Path:
    return Path(__file__).parent / "data" / "fixture"
