"""Campaign commands: generate, evaluate, train, optimize, pareto, export."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .archive import DesignArchive, archive_lock
from .backends import DesignObjective, ProxyBackend, SurrogateBackend, evaluate_genotypes
from .errors import ConfigError, DatasetError, InfeasibleDesignError, NonConvergenceError
from .evaluator import OUTPUTS, PerformanceRecord, default_calibration, ingest_dataset, proxy_evaluate
from .geometry import (
    FEATURE_NAMES,
    DesignGenotype,
    base_profile,
    extract_features,
    generate_profile,
    genotype_bounds,
    write_genotypes_csv,
    write_profile_csv,
)
from .optimizer import bo_run, bo_run_multi, hypervolume, parse_objective, pareto_filter, pso_run, simplex_weights
from .optimizer.bo import reference_point
from .optimizer.objectives import ObjectiveSpec
from .optimizer.pso import RNG_ALGORITHM
from .surrogate import DEFAULT_MODEL_SPECS, fit_surrogate, grid_search_cv, r2_score, save_model

logger = logging.getLogger(__name__)

TUNING_GRIDS = {
    "krr": {"alpha": [1e-3, 1e-2, 1e-1, 1.0], "gamma": [1e-3, 1e-2, 1e-1], "degree": [1, 2, 3]},
    "gbt": {"learning_rate": [0.05, 0.1, 0.2], "n_estimators": [100, 150], "max_depth": [2, 3]},
}


@dataclass
class CampaignConfig:
    out: Path = Path("campaign")
    seed: int = 42
    count: int = 250
    n_train: int | None = None
    n_test: int | None = None
    objective: str | None = None
    algo: str = "pso"
    backend: str = "proxy"
    tune: bool = False
    cv_folds: int = 5
    pso: dict = field(default_factory=lambda: {"omega": 0.7, "c1": 1.5, "c2": 1.5, "n_particles": 30, "n_iters": 200})
    bo: dict = field(default_factory=lambda: {"n_init": 5, "n_iters": 30})
    pareto_pso: dict = field(default_factory=lambda: {"n_particles": 20, "n_iters": 30})
    mobo: dict = field(default_factory=lambda: {"n_init": 10, "n_iters": 30, "n_draws": 256, "n_candidates": 512})

    def __post_init__(self):
        self.out = Path(self.out)
        if self.count < 0:
            raise ConfigError("count must be non-negative")
        if self.algo not in ("pso", "bo"):
            raise ConfigError(f"algo must be pso or bo, got {self.algo!r}")
        if (self.n_train is None) != (self.n_test is None):
            raise ConfigError("give both n_train and n_test or neither")
        if self.n_train is not None and self.n_train + self.n_test != self.count:
            raise ConfigError(f"split {self.n_train}/{self.n_test} does not sum to count {self.count}")

    def split(self, n: int) -> tuple[int, int]:
        if self.n_train is not None and n == self.count:
            return self.n_train, self.n_test
        n_test = n // 5
        return n - n_test, n_test

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        base = cls.__dataclass_fields__
        merged = {}
        for k, v in d.items():
            if k in ("pso", "bo", "pareto_pso", "mobo"):
                default = base[k].default_factory()
                bad = set(v) - set(default) - {"per_dimension", "n_candidates", "n_draws"}
                if bad:
                    raise ConfigError(f"unknown {k} options: {', '.join(sorted(bad))}")
                merged[k] = {**default, **v}
            else:
                merged[k] = v
        return cls(**merged)


def load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _fmt(v) -> str:
    return repr(float(v))


def improvement(y: float, y_base: float) -> float:
    return 100.0 * (y - y_base) / y_base


# ----------------------------------------------------------------------- generate


def cmd_generate(cfg: CampaignConfig) -> DesignArchive:
    """Sample seeded genotypes, rejecting infeasible profiles, and archive the survivors."""
    with archive_lock(cfg.out):
        base = base_profile()
        zero = DesignGenotype.zero()
        base_rec = proxy_evaluate(base, default_calibration())
        arc = DesignArchive.create(cfg.out, {
            "seed": cfg.seed,
            "count": cfg.count,
            "rng_algorithm": RNG_ALGORITHM,
            "base": {"record": base_rec.as_dict(), "features": extract_features(base, zero).as_array().tolist()},
        })
        write_profile_csv(base, cfg.out / "base_profile.csv")
        lo, hi = genotype_bounds()
        rng = np.random.default_rng(cfg.seed)
        budget = 10 * cfg.count
        accepted = rejected = 0
        reasons = {"infeasible": 0, "nonconvergent": 0}
        while accepted < cfg.count:
            if accepted + rejected >= budget:
                raise InfeasibleDesignError(
                    f"resample budget of {budget} draws exhausted: {accepted} accepted, "
                    f"{rejected} rejected ({reasons})"
                )
            g = DesignGenotype.from_vector(rng.uniform(lo, hi))
            try:
                did = f"d{accepted + 1:04d}"
                p = generate_profile(base, g, did)
            except InfeasibleDesignError:
                rejected += 1
                reasons["infeasible"] += 1
                continue
            except NonConvergenceError:
                rejected += 1
                reasons["nonconvergent"] += 1
                continue
            arc.add_design(did, g, p, extract_features(p, g), "proxy")
            accepted += 1
        arc.manifest["generate"] = {"accepted": accepted, "rejected": rejected, **reasons}
        write_genotypes_csv([(d, e.genotype) for d, e in arc.designs.items()], cfg.out / "genotypes.csv")
        arc.save()
    logger.info("generated %d designs (%d rejected)", accepted, rejected)
    return arc


# ----------------------------------------------------------------------- evaluate


def cmd_evaluate(cfg: CampaignConfig) -> dict:
    """Attach performance records from the proxy, trained surrogates, or an external dataset."""
    with archive_lock(cfg.out):
        arc = DesignArchive.open(cfg.out)
        summary = {"backend": cfg.backend, "evaluated": 0, "skipped": 0, "errors": []}
        if cfg.backend.startswith("dataset:"):
            src = Path(cfg.backend.split(":", 1)[1])
            if not src.is_file():
                raise ConfigError(f"dataset file {src} not found")
            rows = ingest_dataset(src)
            for r in rows:
                if r.design_id not in arc.designs:
                    arc.add_design(r.design_id, None, None, r.features, "ingested")
                if arc.add_record(r.design_id, r.record, "ingested"):
                    summary["evaluated"] += 1
                else:
                    summary["skipped"] += 1
            summary["ingested_rows"] = len(rows)
        elif cfg.backend in ("proxy", "surrogate"):
            backend = ProxyBackend() if cfg.backend == "proxy" else SurrogateBackend.from_dir(cfg.out / "models")
            for did, entry in arc.designs.items():
                if (did, cfg.backend) in arc.records:
                    summary["skipped"] += 1
                    continue
                try:
                    prof = arc.profile(did)
                except DatasetError as exc:
                    summary["errors"].append({"design_id": did, "error": str(exc)})
                    continue
                rec = backend.records([prof], [arc.features[did]])[0]
                if rec is None:
                    summary["errors"].append({"design_id": did, "error": "prediction violates record invariants"})
                    continue
                arc.add_record(did, rec, cfg.backend)
                summary["evaluated"] += 1
        else:
            raise ConfigError(f"unknown backend {cfg.backend!r}")
        arc.save()
    if summary["errors"]:
        logger.warning("%d designs could not be evaluated", len(summary["errors"]))
    return summary


# -------------------------------------------------------------------------- train


def _provenance(backend: str) -> str:
    if backend.startswith("dataset") or backend == "ingested":
        return "ingested"
    if backend == "proxy":
        return "proxy"
    raise ConfigError(f"cannot train on backend {backend!r}; use proxy or dataset:<csv>")


def cmd_train(cfg: CampaignConfig) -> dict:
    """Fit one surrogate per output on the seeded train split and score the held-out split."""
    with archive_lock(cfg.out):
        arc = DesignArchive.open(cfg.out)
        ids, feats, recs = arc.dataset(_provenance(cfg.backend))
        n = len(ids)
        n_train, n_test = cfg.split(n)
        if n_train < 5 or n_test < 2:
            raise DatasetError(f"insufficient data to train: {n} evaluated designs")
        perm = np.random.default_rng(cfg.seed).permutation(n)
        tr, te = perm[:n_train], perm[n_train:n_train + n_test]
        X = np.array([f.as_array() for f in feats])
        Y = np.array([r.as_tuple() for r in recs])
        mdir = cfg.out / "models"
        pdir = cfg.out / "parity"
        mdir.mkdir(exist_ok=True)
        pdir.mkdir(exist_ok=True)
        report = {"n_train": int(n_train), "n_test": int(n_test), "seed": cfg.seed, "outputs": {}}
        cv_reports = {}
        for j, out in enumerate(OUTPUTS):
            family, params = DEFAULT_MODEL_SPECS[out]
            if cfg.tune:
                cv = grid_search_cv(X[tr], Y[tr, j], family, TUNING_GRIDS[family], cfg.cv_folds, cfg.seed)
                params = cv.best_params
                cv_reports[out] = cv.to_dict()
            model = fit_surrogate(family, X[tr], Y[tr, j], params, out, FEATURE_NAMES)
            save_model(model, mdir / f"{out}.json")
            pred = model.predict(X[te])
            with open(pdir / f"{out}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(("design_id", "y_true", "y_pred"))
                for i, p in zip(te, pred):
                    w.writerow((ids[i], _fmt(Y[i, j]), _fmt(p)))
            report["outputs"][out] = {
                "family": family,
                "params": params,
                "r2_train": r2_score(Y[tr, j], model.predict(X[tr])),
                "r2_test": r2_score(Y[te, j], pred),
            }
        with open(cfg.out / "split.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("design_id", "split"))
            for i in sorted(tr):
                w.writerow((ids[i], "train"))
            for i in sorted(te):
                w.writerow((ids[i], "test"))
        (cfg.out / "train_report.json").write_text(json.dumps(report, indent=1) + "\n")
        (cfg.out / "train_report.txt").write_text(format_train_report(report))
        if cv_reports:
            (cfg.out / "cv_report.json").write_text(json.dumps(cv_reports, indent=1) + "\n")
    return report


def format_train_report(report: dict) -> str:
    lines = ["R2 Score (test)  " + "  ".join(f"{o:>8}" for o in OUTPUTS)]
    for fam, name in (("krr", "KRR"), ("gbt", "Boosted")):
        cells = []
        for o in OUTPUTS:
            r = report["outputs"][o]
            cells.append(f"{r['r2_test']:8.4f}" if r["family"] == fam else f"{'-':>8}")
        lines.append(f"{name:<16} " + "  ".join(cells))
    lines.append("")
    for o in OUTPUTS:
        r = report["outputs"][o]
        params = ", ".join(f"{k}={v}" for k, v in r["params"].items())
        lines.append(f"{o:<8} {r['family'].upper()} ({params})")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------- optimize


def _backend(cfg: CampaignConfig, spec: ObjectiveSpec):
    if spec.backend == "proxy":
        return ProxyBackend()
    return SurrogateBackend.from_dir(cfg.out / "models")


def _spec(cfg: CampaignConfig) -> ObjectiveSpec:
    if not cfg.objective:
        raise ConfigError("an --objective is required")
    if cfg.backend not in ("proxy", "surrogate"):
        raise ConfigError(f"optimization backend must be proxy or surrogate, got {cfg.backend!r}")
    return parse_objective(cfg.objective, cfg.backend)


def _write_evaluated(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("iteration",) + tuple(f"g{i}" for i in range(1, 11)) + OUTPUTS + ("loss",))
        for it, x, ev, loss in rows:
            rec = [_fmt(v) for v in ev.record.as_tuple()] if ev is not None else [""] * len(OUTPUTS)
            w.writerow([it] + [_fmt(v) for v in x] + rec + [_fmt(loss)])


def cmd_optimize(cfg: CampaignConfig) -> dict:
    """Single-objective (scalarized) search; writes trace, evaluations and the best design."""
    spec = _spec(cfg)
    with archive_lock(cfg.out):
        arc = DesignArchive.open(cfg.out)
        base_rec = arc.base_record
        backend = _backend(cfg, spec)
        obj = DesignObjective(spec, backend, base_rec)
        bounds = genotype_bounds()
        if cfg.algo == "pso":
            res = pso_run(obj, bounds, seed=cfg.seed, vectorized=True, **cfg.pso)
            n_p = cfg.pso["n_particles"]
            iters = [k // n_p for k in range(len(obj.log))]
        else:
            res = bo_run(lambda x: float(obj(np.asarray(x)[None, :])[0]), bounds, seed=cfg.seed, **cfg.bo)
            iters = [max(0, k - cfg.bo["n_init"] + 1) for k in range(len(obj.log))]
        losses = np.concatenate([res.history_f.ravel()]) if cfg.algo == "pso" else res.y
        rdir = cfg.out / "results" / f"{cfg.algo}_{spec.tag}"
        rdir.mkdir(parents=True, exist_ok=True)
        with open(rdir / "trace.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("iteration", "best_value") + tuple(f"g{i}" for i in range(1, 11)))
            for it, val, pos in res.trace:
                w.writerow([it, _fmt(val)] + [_fmt(v) for v in pos])
        _write_evaluated(rdir / "evaluated.csv", [(it, x, ev, l) for it, (x, ev), l in zip(iters, obj.log, losses)])

        best_x, fallback = np.asarray(res.best_x), None
        if not np.isfinite(res.best_value):
            feasible = [x for x, ev in obj.log if ev is not None]
            if feasible:
                best_x = min(feasible, key=lambda x: float(np.linalg.norm(x - res.best_x)))
            else:
                best_x = np.zeros(10)
            fallback = "nearest feasible evaluated design" if feasible else "base design"
            logger.warning("optimizer found no feasible design; falling back to %s", fallback)
        ev = evaluate_genotypes(best_x[None, :], backend)[0]
        if ev is None:
            raise InfeasibleDesignError("best design is infeasible and no fallback exists")
        verified = proxy_evaluate(ev.profile)
        result = {
            "algo": cfg.algo,
            "objective": str(spec),
            "backend": spec.backend,
            "seed": cfg.seed,
            "rng_algorithm": RNG_ALGORITHM,
            "best_value": float(res.best_value),
            "best_genotype": [float(v) for v in best_x],
            "fallback": fallback,
            "base_record": base_rec.as_dict(),
            "best_record": ev.record.as_dict(),
            "proxy_record": verified.as_dict(),
            "improvement_pct": {o: improvement(ev.record[o], base_rec[o]) for o in OUTPUTS},
            "proxy_improvement_pct": {o: improvement(verified[o], base_rec[o]) for o in OUTPUTS},
            "evaluations": len(obj.log),
        }
        write_profile_csv(ev.profile.with_id("best"), rdir / "best_profile.csv")
        (rdir / "best.json").write_text(json.dumps(result, indent=1) + "\n")
    result["dir"] = str(rdir)
    result["trace"] = [v for _, v, _ in res.trace]
    return result


# ------------------------------------------------------------------------- pareto


def cmd_pareto(cfg: CampaignConfig) -> dict:
    """Multi-objective search: PSO weighted-sum sweeps or EHVI Bayesian optimization."""
    spec = _spec(cfg)
    m = len(spec.active)
    if m < 2:
        raise ConfigError("pareto needs at least two active objectives")
    with archive_lock(cfg.out):
        arc = DesignArchive.open(cfg.out)
        base_rec = arc.base_record
        backend = _backend(cfg, spec)
        bounds = genotype_bounds()
        evaluated: list[tuple[int, np.ndarray, object]] = []
        if cfg.algo == "pso":
            weights = simplex_weights(m, 20 if m == 2 else 10)
            n_p, n_it = cfg.pareto_pso["n_particles"], cfg.pareto_pso["n_iters"]
            for k, wvec in enumerate(weights):
                obj = DesignObjective(spec, backend, base_rec, reduce=lambda v, wvec=wvec: float(np.dot(wvec, v)))
                pso_run(obj, bounds, seed=cfg.seed + k, vectorized=True, **cfg.pareto_pso)
                offset = k * (n_it + 1)
                evaluated += [(offset + i // n_p, x, ev) for i, (x, ev) in enumerate(obj.log)]
        else:
            obj = DesignObjective(spec, backend, base_rec)

            def vec(x):
                ev = evaluate_genotypes(np.asarray(x)[None, :], backend)[0]
                obj.log.append((np.array(x, dtype=float), ev))
                return obj.vector(ev) if ev is not None else [np.inf] * m

            mres = bo_run_multi(vec, bounds, seed=cfg.seed, **cfg.mobo)
            evaluated = [(int(it), x, ev) for it, (x, ev) in zip(mres.iteration, obj.log)]
        feasible = [(it, x, ev) for it, x, ev in evaluated if ev is not None]
        F = np.array([obj.vector(ev) for _, _, ev in feasible]).reshape(len(feasible), m)
        archive = pareto_filter(F, payloads=list(range(len(feasible))))
        ref = reference_point(F) if len(F) else None
        hv = hypervolume(archive.as_array(), ref) if len(F) else 0.0
        rdir = cfg.out / "results" / f"pareto_{cfg.algo}_{spec.tag}"
        rdir.mkdir(parents=True, exist_ok=True)
        with open(rdir / "pareto.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("design_id",) + tuple(f"g{i}" for i in range(1, 11)) + OUTPUTS + ("iteration_found",))
            for n, idx in enumerate(archive.payloads, start=1):
                it, x, ev = feasible[idx]
                w.writerow([f"p{n:04d}"] + [_fmt(v) for v in x] + [_fmt(v) for v in ev.record.as_tuple()] + [it])
        _write_evaluated(rdir / "evaluated.csv", [(it, x, ev, np.nan) for it, x, ev in evaluated])
        summary = {
            "algo": cfg.algo,
            "objective": str(spec),
            "backend": spec.backend,
            "seed": cfg.seed,
            "rng_algorithm": RNG_ALGORITHM,
            "evaluations": len(evaluated),
            "feasible": len(feasible),
            "front_size": len(archive),
            "reference": None if ref is None else ref.tolist(),
            "hypervolume": hv,
        }
        (rdir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    summary["dir"] = str(rdir)
    return summary


def cmd_export(cfg: CampaignConfig) -> list[Path]:
    from .plots import export_plots

    return export_plots(cfg.out)
