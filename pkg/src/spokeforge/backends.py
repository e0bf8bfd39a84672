"""Map genotypes to performance records through the proxy or trained surrogates."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import DatasetError, DomainError, InfeasibleDesignError, NonConvergenceError
from .evaluator import OUTPUTS, PerformanceRecord, ProxyCalibration, default_calibration, proxy_evaluate
from .geometry import DesignGenotype, FeatureVector, SpokeProfile, base_profile, extract_features, generate_profile
from .optimizer.objectives import ObjectiveSpec, minimization_vector, scalarize
from .surrogate import SurrogateModel, load_model


@dataclass(frozen=True, eq=False)
class Evaluation:
    genotype: DesignGenotype
    profile: SpokeProfile
    features: FeatureVector
    record: PerformanceRecord


class ProxyBackend:
    name = "proxy"

    def __init__(self, calibration: ProxyCalibration | None = None):
        self.calibration = calibration or default_calibration()

    def records(self, profiles, features) -> list[PerformanceRecord | None]:
        return [proxy_evaluate(p, self.calibration) for p in profiles]


class SurrogateBackend:
    """One trained model per output; predictions that break record invariants yield ``None``."""

    name = "surrogate"

    def __init__(self, models: Mapping[str, SurrogateModel]):
        missing = [o for o in OUTPUTS if o not in models]
        if missing:
            raise DatasetError(f"missing surrogate models for: {', '.join(missing)}")
        self.models = dict(models)

    @classmethod
    def from_dir(cls, directory) -> "SurrogateBackend":
        directory = Path(directory)
        models = {}
        for out in OUTPUTS:
            path = directory / f"{out}.json"
            if not path.exists():
                raise DatasetError(f"model file {path} not found; run `train` first")
            models[out] = load_model(path)
        return cls(models)

    def predict_matrix(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([self.models[o].predict(X) for o in OUTPUTS])

    def records(self, profiles, features) -> list[PerformanceRecord | None]:
        if not features:
            return []
        Y = self.predict_matrix(np.array([f.as_array() for f in features]))
        out = []
        for row in Y:
            try:
                out.append(PerformanceRecord(*(float(v) for v in row)))
            except DomainError:
                out.append(None)
        return out


def evaluate_genotypes(X, backend, base: SpokeProfile | None = None) -> list[Evaluation | None]:
    """Generate, featurize and score each genotype row; infeasible rows give ``None``."""
    base = base or base_profile()
    slots: list[tuple[int, DesignGenotype, SpokeProfile, FeatureVector]] = []
    for i, v in enumerate(np.atleast_2d(X)):
        g = DesignGenotype.from_vector(v)
        try:
            p = generate_profile(base, g)
        except (InfeasibleDesignError, NonConvergenceError):
            continue
        slots.append((i, g, p, extract_features(p, g)))
    out: list[Evaluation | None] = [None] * len(np.atleast_2d(X))
    recs = backend.records([s[2] for s in slots], [s[3] for s in slots])
    for (i, g, p, f), r in zip(slots, recs):
        if r is not None:
            out[i] = Evaluation(g, p, f, r)
    return out


class DesignObjective:
    """Vectorized loss over genotype rows that also logs every evaluation."""

    def __init__(self, spec: ObjectiveSpec, backend, base_record, base: SpokeProfile | None = None,
                 reduce: Callable | None = None):
        self.spec = spec
        self.backend = backend
        self.base_record = base_record
        self.base = base or base_profile()
        self.reduce = reduce
        self.log: list[tuple[np.ndarray, Evaluation | None]] = []

    def vector(self, ev: Evaluation) -> list[float]:
        return minimization_vector(ev.record, self.spec, self.base_record)

    def __call__(self, X) -> np.ndarray:
        evs = evaluate_genotypes(X, self.backend, self.base)
        vals = np.full(len(evs), np.inf)
        for i, (x, ev) in enumerate(zip(np.atleast_2d(X), evs)):
            self.log.append((np.array(x, dtype=float), ev))
            if ev is not None:
                vals[i] = self.reduce(self.vector(ev)) if self.reduce else scalarize(ev.record, self.spec, self.base_record)
        return vals
