"""Pipeline stages behind the CLI subcommands.

All artifacts live under ``cfg.paths.out``::

    ingest/      volatility.csv, split.txt, vocab.tsv, headlines_encoded.csv
    sentiment/   embeddings.txt, cnn_weights.txt, logistic_weights.txt,
                 sentiment.csv, classifier_metrics.txt
    models/      fitted parameters per model
    forecasts/   <model>.csv with date,predicted,actual
    report.csv, report.txt
    plots/       <model>.csv and <model>.svg
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import logging
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import cnn_sentiment, evaluation, garch, lstm, svr, textprep, word2vec
from .config import RunConfig
from .errors import ConfigError, EmptyInput, EmptyEvalSet, MissingInput, VolsentError
from .marketdata import (
    SentimentSeries,
    VolatilitySeries,
    align_calendars,
    load_prices,
    log_returns,
    split_index,
)
from .serialize import arrays_to_text

log = logging.getLogger(__name__)

MODEL_STEMS = ("garch", "svr", "lstm", "lstm_sentiment", "lstm_sentiment_shifted")
LSTM_VARIANTS = {
    "lstm": lstm.FeatureSpec(use_sentiment=False),
    "lstm_sentiment": lstm.FeatureSpec(use_sentiment=True),
    "lstm_sentiment_shifted": lstm.FeatureSpec(use_sentiment=True, shift_sentiment=True),
}


def model_name(stem: str, cfg: RunConfig) -> str:
    return {
        "garch": f"GARCH({cfg.garch.p},{cfg.garch.q})",
        "svr": "SVR",
        "lstm": "LSTM",
        "lstm_sentiment": "LSTM with sentiment",
        "lstm_sentiment_shifted": "LSTM with sentiment shifted",
    }[stem]


def enabled_models(cfg: RunConfig) -> list[str]:
    return [s for s in MODEL_STEMS if getattr(cfg.models, s)]


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path: Path) -> list[list[str]]:
    if not path.is_file():
        raise MissingInput(f"missing artifact {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- ingest

def ingest(cfg: RunConfig) -> None:
    out = cfg.paths.out / "ingest"
    out.mkdir(parents=True, exist_ok=True)
    prices = load_prices(cfg.paths.prices)
    dates, r = log_returns(prices)
    k = split_index(dates, cfg.split)
    _write_csv(out / "volatility.csv", ["date", "log_return", "volatility"],
               [[d.isoformat(), _fmt(x), _fmt(x * x)] for d, x in zip(dates, r)])
    (out / "split.txt").write_text(
        f"train_end = {dates[k - 1].isoformat()}\ntrain_size = {k}\ntest_size = {len(dates) - k}\n",
        encoding="utf-8")
    log.info("ingested %d closes (%d train / %d test returns)", len(prices), k, len(dates) - k)

    if cfg.paths.headlines is None:
        return
    stoplist = textprep.load_stopwords(cfg.paths.stopwords)
    raw = textprep.load_headlines(cfg.paths.headlines)
    tokens = [textprep.preprocess(text, stoplist) for _, text in raw]
    train_end = dates[k - 1]
    vocab = textprep.build_vocabulary([t for (d, _), t in zip(raw, tokens) if d <= train_end],
                                      min_count=cfg.text.min_count)
    # label: next trading day's close above this day's close
    labels = {d: int(prices.closes[i + 1] > prices.closes[i]) for i, d in enumerate(prices.dates[:-1])}
    docs = [textprep.EncodedDoc(d, textprep.encode(t, vocab, cfg.text.max_len), labels.get(d))
            for (d, _), t in zip(raw, tokens)]
    (out / "vocab.tsv").write_text(vocab.to_text(), encoding="utf-8")
    textprep.write_encoded(out / "headlines_encoded.csv", docs)
    log.info("encoded %d headlines over a vocabulary of %d", len(docs), len(vocab))


def read_volatility(cfg: RunConfig) -> tuple[VolatilitySeries, np.ndarray]:
    rows = _read_csv(cfg.paths.out / "ingest" / "volatility.csv")[1:]
    if not rows:
        raise EmptyInput("volatility artifact has no rows")
    dates = [dt.date.fromisoformat(r[0]) for r in rows]
    r = np.array([float(x[1]) for x in rows])
    return VolatilitySeries(dates, np.array([float(x[2]) for x in rows])), r


# ---------------------------------------------------------------- sentiment

def train_sentiment(cfg: RunConfig) -> cnn_sentiment.ClassifierMetrics:
    if cfg.paths.headlines is None:
        raise ConfigError("train-sentiment needs a [paths] headlines file")
    src = cfg.paths.out / "ingest"
    out = cfg.paths.out / "sentiment"
    out.mkdir(parents=True, exist_ok=True)
    vol, _ = read_volatility(cfg)
    k = split_index(vol.dates, cfg.split)
    train_end = vol.dates[k - 1]
    vocab_path = src / "vocab.tsv"
    if not vocab_path.is_file():
        raise MissingInput(f"missing artifact {vocab_path}; run ingest first")
    vocab = textprep.Vocabulary.from_text(vocab_path.read_text(encoding="utf-8"))
    docs = textprep.read_encoded(src / "headlines_encoded.csv")

    train_docs = [d for d in docs if d.date <= train_end]
    emb = word2vec.train_embeddings([d.token_ids for d in train_docs], len(vocab), cfg.word2vec)
    labeled_train = [d for d in train_docs if d.label is not None]
    labeled_test = [d for d in docs if d.date > train_end and d.label is not None]
    weights = cnn_sentiment.train(labeled_train, emb, cfg.cnn)
    logit = cnn_sentiment.logistic_baseline(labeled_train, emb, lr=cfg.logistic.lr,
                                            epochs=cfg.logistic.epochs, seed=cfg.seed)
    if not labeled_test:
        raise EmptyEvalSet("no labeled headlines after the split boundary")
    cnn_metrics = cnn_sentiment.evaluate(weights, labeled_test, emb)
    lr_metrics = logit.evaluate(labeled_test, emb)

    by_date = defaultdict(list)
    for d in docs:
        by_date[d.date].append(d)
    sent = cnn_sentiment.daily_sentiment(weights, by_date, emb)

    (out / "embeddings.txt").write_text(word2vec.to_text(emb, vocab.id_to_token), encoding="utf-8")
    (out / "cnn_weights.txt").write_text(weights.to_text(), encoding="utf-8")
    (out / "logistic_weights.txt").write_text(
        arrays_to_text({"w": logit.w, "b": np.array(logit.b)}), encoding="utf-8")
    _write_csv(out / "sentiment.csv", ["date", "score"],
               [[d.isoformat(), _fmt(s)] for d, s in zip(sent.dates, sent.scores)])
    (out / "classifier_metrics.txt").write_text(
        cnn_sentiment.metrics_report({"CNN": cnn_metrics, "Logistic Regression": lr_metrics}),
        encoding="utf-8")
    log.info("sentiment classifier: precision %.3f recall %.3f F %.3f",
             cnn_metrics.precision, cnn_metrics.recall, cnn_metrics.f_score)
    return cnn_metrics


def read_sentiment(cfg: RunConfig) -> SentimentSeries:
    path = cfg.paths.out / "sentiment" / "sentiment.csv"
    if not path.is_file():
        raise MissingInput(f"missing artifact {path}; run train-sentiment first")
    rows = _read_csv(path)[1:]
    return SentimentSeries([dt.date.fromisoformat(r[0]) for r in rows], [float(r[1]) for r in rows])


# ---------------------------------------------------------------- forecasting

def forecast_garch(cfg: RunConfig, vol: VolatilitySeries, r: np.ndarray, k: int):
    eps = r - r[:k].mean()
    fit = garch.fit_mle(eps[:k], garch.GarchOrder(cfg.garch.p, cfg.garch.q),
                        maxiter=cfg.garch.maxiter, lr_level=cfg.garch.lr_level or None)
    path = garch.conditional_variances(eps, fit.params, init=float(np.var(eps[:k])))
    return vol.dates[k:], path[k:], garch.to_text(fit)


def forecast_svr(cfg: RunConfig, vol: VolatilitySeries, k: int):
    s = cfg.svr
    scaler = lstm.MinMaxScaler.fit(vol.values[:k])
    xs, ys = svr.lag_features(scaler.transform(vol.values), s.lags)
    n_train = k - s.lags
    if cfg.svr.grid_search:
        grid = svr.GridSpec(tuple(s.c_grid), tuple(s.gamma_grid), tuple(s.epsilon_grid), s.folds)
        hyper, score = svr.grid_search_cv(xs[:n_train], ys[:n_train], grid, seed=cfg.seed)
        log.info("SVR grid search picked %s (CV RMSE %.4g)", hyper, score)
    else:
        hyper = svr.SvrHyperParams(c=s.c, epsilon=s.epsilon, gamma=s.gamma)
    model = svr.fit(xs[:n_train], ys[:n_train], hyper)
    pred = scaler.inverse(svr.predict_many(model, xs[n_train:]))
    return vol.dates[k:], pred, svr.to_text(model)


def forecast_lstm(cfg: RunConfig, stem: str, vol: VolatilitySeries, sent: SentimentSeries | None, train_end: dt.date):
    spec = LSTM_VARIANTS[stem]
    if spec.use_sentiment:
        vol, sent = align_calendars(vol, sent)
    k = sum(1 for d in vol.dates if d <= train_end)
    scaler = lstm.MinMaxScaler.fit(vol.values[:k])
    data = lstm.build_features(vol, sent, spec, cfg.lstm.lookback, scaler)
    is_train = np.array([d <= train_end for d in data.dates])
    lcfg = dataclasses.replace(cfg.lstm, input_dim=spec.input_dim)
    weights = lstm.train(data.subset(np.flatnonzero(is_train)), lcfg)
    test = data.subset(np.flatnonzero(~is_train))
    return test.dates, lstm.forecast(weights, test), weights.to_text()


def forecast(cfg: RunConfig) -> dict:
    """Fit every enabled model on the training split and forecast the test split.

    Returns ``{stem: error message}`` for models that failed; the others are
    written regardless.
    """
    vol, r = read_volatility(cfg)
    k = split_index(vol.dates, cfg.split)
    train_end = vol.dates[k - 1]
    actual = dict(zip(vol.dates, vol.values))
    stems = enabled_models(cfg)
    sent = read_sentiment(cfg) if any(LSTM_VARIANTS.get(s, lstm.FeatureSpec()).use_sentiment for s in stems) else None
    fdir, mdir = cfg.paths.out / "forecasts", cfg.paths.out / "models"
    fdir.mkdir(parents=True, exist_ok=True)
    mdir.mkdir(parents=True, exist_ok=True)
    failures = {}
    for stem in stems:
        try:
            if stem == "garch":
                dates, pred, dump = forecast_garch(cfg, vol, r, k)
            elif stem == "svr":
                dates, pred, dump = forecast_svr(cfg, vol, k)
            else:
                dates, pred, dump = forecast_lstm(cfg, stem, vol, sent, train_end)
        except (VolsentError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            failures[stem] = f"{type(exc).__name__}: {exc}"
            log.error("model %s failed: %s", stem, failures[stem])
            (fdir / f"{stem}.csv").unlink(missing_ok=True)
            continue
        (mdir / f"{stem}.txt").write_text(dump, encoding="utf-8")
        _write_csv(fdir / f"{stem}.csv", ["date", "predicted", "actual"],
                   [[d.isoformat(), _fmt(p), _fmt(actual[d])] for d, p in zip(dates, pred)])
        log.info("%s: %d test forecasts", model_name(stem, cfg), len(dates))
    return failures


def read_forecast(path: Path):
    rows = _read_csv(path)
    if len(rows) <= 1:
        raise EmptyInput(f"forecast file {path} has no rows")
    dates = [dt.date.fromisoformat(r[0]) for r in rows[1:]]
    return dates, np.array([float(r[1]) for r in rows[1:]]), np.array([float(r[2]) for r in rows[1:]])


# ---------------------------------------------------------------- evaluation and plots

def evaluate(cfg: RunConfig) -> list:
    reports = []
    for stem in enabled_models(cfg):
        name = model_name(stem, cfg)
        path = cfg.paths.out / "forecasts" / f"{stem}.csv"
        if not path.is_file():
            log.warning("no forecast file for %s; row skipped", name)
            reports.append(name)
            continue
        _, pred, act = read_forecast(path)
        reports.append(evaluation.evaluate_forecast(name, act, pred))
    evaluation.write_report_csv(cfg.paths.out / "report.csv", reports)
    table = evaluation.format_table(reports, title="Test RMSE")
    (cfg.paths.out / "report.txt").write_text(table, encoding="utf-8")
    return reports


def plot(cfg: RunConfig) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pdir = cfg.paths.out / "plots"
    pdir.mkdir(parents=True, exist_ok=True)
    written = []
    for stem in enabled_models(cfg):
        path = cfg.paths.out / "forecasts" / f"{stem}.csv"
        if not path.is_file():
            continue
        dates, pred, act = read_forecast(path)
        _write_csv(pdir / f"{stem}.csv", ["date", "actual", "predicted"],
                   [[d.isoformat(), _fmt(a), _fmt(p)] for d, a, p in zip(dates, act, pred)])
        with matplotlib.rc_context({"svg.hashsalt": "volsent", "svg.fonttype": "path"}):
            fig, ax = plt.subplots(figsize=(8, 3.5))
            x = np.arange(len(dates))
            ax.plot(x, act, lw=0.8, color="0.5", label="actual")
            ax.plot(x, pred, lw=1.0, color="tab:red", label="predicted")
            ax.set_xlim(0, max(len(dates) - 1, 1))
            ticks = np.linspace(0, len(dates) - 1, num=min(5, len(dates))).astype(int)
            ax.set_xticks(ticks)
            ax.set_xticklabels([dates[i].isoformat() for i in ticks], fontsize=7)
            ax.set_ylabel("squared log return")
            ax.set_title(model_name(stem, cfg))
            ax.legend(loc="upper right", fontsize=8)
            fig.tight_layout()
            fig.savefig(pdir / f"{stem}.svg", format="svg", metadata={"Date": None})
            plt.close(fig)
        written.append(pdir / f"{stem}.svg")
    if not written:
        raise EmptyInput("no forecast files to plot")
    return written


def run_all(cfg: RunConfig) -> list:
    ingest(cfg)
    if cfg.paths.headlines is not None and cfg.models.needs_sentiment:
        train_sentiment(cfg)
    forecast(cfg)
    reports = evaluate(cfg)
    plot(cfg)
    return reports
