"""Experiment runner: CSV ingestion, thresholds, certification and accuracy curves."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .costs import ensemble_families
from .ensemble import train_overlapping, train_partitioned
from .ibl import fit_neighbor_model, neighborhood
from .median import (Certificate, Side, ThreatModel, VoteSet, WeightedVoteSet, cert_insert_delete,
                     cert_swap, cert_weighted_swap, combine_two_sided)
from .overlap import DEFAULT_TIME_LIMIT, certify_overlap
from .partition import substream
from .submodels import Ridge

METHODS = ("knn-cr", "rnn-cr", "pcr", "wpcr", "ocr", "wocr")
THREADS_ENV = "CERTREG_THREADS"


# ---------------------------------------------------------------- data

@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple = ()
    test_features: Optional[np.ndarray] = None
    test_targets: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.targets.size)

    @property
    def d(self) -> int:
        return int(self.features.shape[1])


class CsvFormatError(ValueError):
    pass


def _parse_float(cell: str):
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, target_column: str, one_hot: bool = True) -> Dataset:
    """Read a headed CSV into a numeric dataset.

    Non-numeric feature columns are one-hot encoded with categories in order
    of first appearance.  Empty cells and unparseable numbers are errors that
    name the offending row (1-based, header excluded) and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if target_column not in header:
        raise CsvFormatError(f"{path}: no target column {target_column!r} (have {header})")
    for i, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise CsvFormatError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        for name, cell in zip(header, row):
            if not cell.strip():
                raise CsvFormatError(f"{path}: missing value at row {i}, column {name!r}")

    columns, names = [], []
    targets = None
    for c, name in enumerate(header):
        cells = [row[c].strip() for row in rows]
        parsed = [_parse_float(v) for v in cells]
        numeric = all(v is not None for v in parsed)
        if name == target_column:
            if not numeric:
                i = next(k for k, v in enumerate(parsed) if v is None)
                raise CsvFormatError(f"{path}: unparseable target {cells[i]!r} at row {i + 1}")
            targets = np.array(parsed, dtype=float)
        elif numeric:
            columns.append(np.array(parsed, dtype=float))
            names.append(name)
        elif one_hot:
            categories = list(dict.fromkeys(cells))
            for cat in categories:
                columns.append(np.array([v == cat for v in cells], dtype=float))
                names.append(f"{name}={cat}")
        else:
            i = next(k for k, v in enumerate(parsed) if v is None)
            raise CsvFormatError(f"{path}: unparseable number {cells[i]!r} at row {i + 1}, "
                                 f"column {name!r}")
    features = np.column_stack(columns) if columns else np.zeros((len(rows), 0))
    return Dataset(features, targets, tuple(names))


# ---------------------------------------------------------------- thresholds

@dataclass(frozen=True)
class ThresholdSpec:
    """How per-instance bounds around the true target are derived.

    ``absolute``: ``y +- value``.  ``fraction``: ``y +- value * |y|``.
    ``binary``: targets are signs and a prediction is correct when it has
    the same sign (0/1 targets are mapped to -1/+1).
    """

    mode: str = "absolute"
    value: float = 0.0

    def __post_init__(self):
        if self.mode not in ("absolute", "fraction", "binary"):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        if self.value < 0:
            raise ValueError("threshold value must be nonnegative")

    def prepare_targets(self, y: np.ndarray) -> np.ndarray:
        if self.mode == "binary" and set(np.unique(y).tolist()) <= {0.0, 1.0}:
            return 2.0 * y - 1.0
        return y

    def bounds(self, y) -> tuple:
        y = np.asarray(y, dtype=float)
        if self.mode == "absolute":
            return y - self.value, y + self.value
        if self.mode == "fraction":
            return y - self.value * np.abs(y), y + self.value * np.abs(y)
        pos = y > 0
        return np.where(pos, 0.0, -np.inf), np.where(pos, np.inf, 0.0)


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    target: str
    method: str
    q: int = 1
    d: Optional[int] = None
    seed: int = 0
    trials: int = 10
    test_samples: int = 100
    threshold: ThresholdSpec = field(default_factory=ThresholdSpec)
    time_limit: float = DEFAULT_TIME_LIMIT
    r_cap: int = 2
    lam: float = 1.0
    k: Optional[int] = None
    radius: Optional[float] = None
    p: float = 2.0
    test_dataset: Optional[str] = None
    one_hot: bool = True
    strict: bool = True
    log_target: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.method in ("ocr", "wocr") and self.d is None:
            raise ValueError(f"{self.method} needs a spread degree d")
        if self.method in ("knn-cr", "rnn-cr") and self.q != 1:
            raise ValueError(f"{self.method} trains one model on all data; q must be 1")
        if self.method == "rnn-cr" and self.radius is None:
            raise ValueError("rnn-cr needs a radius")
        if self.log_target and self.threshold.mode == "binary":
            raise ValueError("log_target cannot be combined with binary thresholds")
        if self.q < 1 or self.trials < 1 or self.test_samples < 1:
            raise ValueError("q, trials and test_samples must be positive")

    @property
    def T(self) -> int:
        if self.method in ("ocr", "wocr"):
            return self.q * self.d
        if self.method in ("knn-cr", "rnn-cr"):
            return 1
        return self.q if self.q % 2 else self.q + 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        """Build from flat keys; the threshold is ``threshold_mode``/``threshold_value``."""
        raw = dict(raw)
        mode = raw.pop("threshold_mode", "absolute")
        value = raw.pop("threshold_value", 0.0)
        unknown = set(raw) - set(cls.__dataclass_fields__) - {"threshold"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "threshold" in raw:
            raise ValueError("use threshold_mode and threshold_value")
        return cls(threshold=ThresholdSpec(mode, float(value)), **raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = asdict(self)
        thr = out.pop("threshold")
        out["threshold_mode"], out["threshold_value"] = thr["mode"], thr["value"]
        return out


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class CertCurve:
    """Certified accuracy (mean and stdev over trials) at each ``R >= psi``."""

    psi: tuple = ()
    mean: tuple = ()
    stdev: tuple = ()
    threat_model: ThreatModel = ThreatModel.INSERT_DELETE

    def __len__(self):
        return len(self.psi)

    def at(self, psi: int) -> float:
        return self.mean[psi] if psi < len(self.mean) else 0.0

    @classmethod
    def from_accuracies(cls, acc: np.ndarray, threat_model=ThreatModel.INSERT_DELETE) -> "CertCurve":
        """``acc[trial, psi]`` certified accuracies."""
        acc = np.atleast_2d(np.asarray(acc, dtype=float))
        ddof = 1 if acc.shape[0] > 1 else 0
        return cls(tuple(range(acc.shape[1])), tuple(acc.mean(axis=0).tolist()),
                   tuple(acc.std(axis=0, ddof=ddof).tolist()), threat_model)


def certified_accuracy(certs, max_psi: int) -> np.ndarray:
    """Fraction of certificates with ``R >= psi`` for ``psi = 0..max_psi``."""
    R = np.array([c.R if c.certified else -1 for c in certs])
    return np.array([(R >= psi).mean() if R.size else 0.0 for psi in range(max_psi + 1)])


def emit_results(curve: CertCurve, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["R", "mean", "stdev"])
            for row in zip(curve.psi, curve.mean, curve.stdev):
                writer.writerow([row[0], repr(float(row[1])), repr(float(row[2]))])
    elif fmt == "json":
        doc = {"threat_model": curve.threat_model.value,
               "rows": [{"R": r, "mean": m, "stdev": s}
                        for r, m, s in zip(curve.psi, curve.mean, curve.stdev)]}
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown format {fmt!r}; use csv or json")


def load_results(path) -> CertCurve:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = doc["rows"]
        return CertCurve(tuple(int(r["R"]) for r in rows), tuple(float(r["mean"]) for r in rows),
                         tuple(float(r["stdev"]) for r in rows), ThreatModel(doc["threat_model"]))
    rows = list(csv.DictReader(text.splitlines()))
    return CertCurve(tuple(int(r["R"]) for r in rows), tuple(float(r["mean"]) for r in rows),
                     tuple(float(r["stdev"]) for r in rows))


# ---------------------------------------------------------------- certification

def _one_side(method, values, xi, costs, mapping, config) -> Certificate:
    """Upper-side certificate ``median(values) <= xi`` (negate for the lower side)."""
    if method in ("knn-cr", "pcr"):
        return cert_swap(VoteSet(values, xi))
    if method == "rnn-cr":
        return cert_insert_delete(VoteSet(values, xi))
    if method == "wpcr":
        low = values <= xi
        c = np.where(low, costs, 1)
        if np.any(c < 1):  # cannot happen: low submodels have cost >= 1 by construction
            raise AssertionError("zero cost on a submodel below the threshold")
        cert = cert_weighted_swap(WeightedVoteSet(VoteSet(values, xi), c))
        return replace(cert, threat_model=ThreatModel.DELETION_ONLY)
    threat = ThreatModel.DELETION_ONLY if method == "wocr" else ThreatModel.INSERT_DELETE
    return certify_overlap(values, xi, mapping, costs, config.time_limit, config.strict, threat)


def certify_point(method, values, xi_low, xi_up, config, mapping=None,
                  costs_low=None, costs_up=None) -> Certificate:
    """Two-sided certificate; an infinite bound leaves that side unconstrained."""
    values = np.asarray(values, dtype=float)
    sides = []
    if math.isfinite(xi_low):
        lower = _one_side(method, -values, -xi_low, costs_low, mapping, config)
        sides.append(replace(lower, side=Side.LOWER))
    if math.isfinite(xi_up):
        sides.append(_one_side(method, values, xi_up, costs_up, mapping, config))
    if not sides:
        raise ValueError("at least one bound must be finite")
    if len(sides) == 1:
        return sides[0]
    return combine_two_sided(*sides)


def _family_costs(families, x, xi_low, xi_up):
    x = np.atleast_2d(x)
    low = np.array([f.costs_lower(x, xi_low)[0] if math.isfinite(xi_low) else 1 for f in families])
    up = np.array([f.costs(x, xi_up)[0] if math.isfinite(xi_up) else 1 for f in families])
    return low, up


def split_indices(n: int, seed: int, test_fraction: float = 0.1) -> tuple:
    perm = substream(seed, "split").permutation(n)
    n_test = max(1, int(round(test_fraction * n)))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def run_trial(config: ExperimentConfig, train: Dataset, trial: int, test: Optional[Dataset] = None):
    """Certificates for the sampled test points of one trial."""
    seed = substream(config.seed, f"trial-{trial}").next_u64() >> 1
    y_all = config.threshold.prepare_targets(train.targets)
    if test is None:
        tr, te = split_indices(train.n, seed)
        X_tr, y_tr = train.features[tr], y_all[tr]
        X_te, y_te = train.features[te], y_all[te]
    else:
        X_tr, y_tr = train.features, y_all
        X_te, y_te = test.features, config.threshold.prepare_targets(test.targets)
    pick = np.sort(substream(seed, "sampling").sample(len(y_te), min(config.test_samples, len(y_te))))
    X_te, y_te = X_te[pick], y_te[pick]
    lo, up = config.threshold.bounds(y_te)
    if config.log_target:
        # train on log targets; exp is monotone, so bounds map through log exactly
        if np.any(y_tr <= 0) or np.any(y_te <= 0):
            raise ValueError("log_target needs strictly positive targets")
        y_tr = np.log(y_tr)
        with np.errstate(divide="ignore"):
            lo = np.where(lo > 0, np.log(np.maximum(lo, 1e-300)), -np.inf)
        up = np.log(up)

    method = config.method
    if method in ("knn-cr", "rnn-cr"):
        model = fit_neighbor_model(X_tr, y_tr, k=config.k if method == "knn-cr" else None,
                                   radius=config.radius if method == "rnn-cr" else None, p=config.p)
        return [certify_point(method, neighborhood(model, x), lo[i], up[i], config)
                for i, x in enumerate(X_te)]

    spec = Ridge(config.lam)
    if method in ("pcr", "wpcr"):
        ens = train_partitioned(X_tr, y_tr, config.T, seed, spec)
    else:
        ens = train_overlapping(X_tr, y_tr, config.q, config.d, seed, spec)
    preds = ens.predictions(X_te)
    families = ensemble_families(ens, X_tr, y_tr, config.r_cap) if method in ("wpcr", "wocr") else None
    certs = []
    for i, x in enumerate(X_te):
        c_low = c_up = None
        if families is not None:
            c_low, c_up = _family_costs(families, x, lo[i], up[i])
        certs.append(certify_point(method, preds[i], lo[i], up[i], config, ens.mapping, c_low, c_up))
    return certs


def _trial_job(args):
    config, train, trial, test = args
    return run_trial(config, train, trial, test)


def _workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def run_experiment(config: ExperimentConfig, data: Optional[Dataset] = None,
                   test: Optional[Dataset] = None) -> CertCurve:
    """Certified accuracy curve over ``config.trials`` seeded trials.

    Without a separate test set each trial draws a fresh 90/10 split.  Set
    ``CERTREG_THREADS`` to run trials in parallel processes.
    """
    if data is None:
        data = load_csv(config.dataset, config.target, config.one_hot)
    if test is None and config.test_dataset:
        test = load_csv(config.test_dataset, config.target, config.one_hot)
    jobs = [(config, data, t, test) for t in range(config.trials)]
    workers = min(_workers(), config.trials)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            per_trial = list(pool.map(_trial_job, jobs))
    else:
        per_trial = [_trial_job(j) for j in jobs]
    max_R = max((c.R for certs in per_trial for c in certs if c.certified), default=0)
    acc = np.array([certified_accuracy(certs, max_R) for certs in per_trial])
    threat = (ThreatModel.DELETION_ONLY if config.method in ("wpcr", "wocr")
              else ThreatModel.INSERT_DELETE)
    return CertCurve.from_accuracies(acc, threat)
