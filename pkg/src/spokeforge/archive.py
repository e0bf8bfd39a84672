"""Append-only on-disk design archive: a directory of CSVs plus a JSON manifest.

Layout::

    manifest.json        schema tag, seed, base-design record, generation stats
    designs.csv          design_id, seq, provenance, t1..t5, b1..b5, profile
    features.csv         design_id, b1..b5, t1..t12, dmin, pdmin
    records.csv          design_id, seq, provenance, rfc, rft, sedc, sedt, vib_rms
    profiles/<id>.csv    sampled profile curves

``seq`` is a logical timestamp (event counter), so identical runs write
identical bytes.
"""

from __future__ import annotations

import contextlib
import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DatasetError
from .evaluator import OUTPUTS, PerformanceRecord
from .geometry import (
    FEATURE_NAMES,
    DesignGenotype,
    FeatureVector,
    SpokeProfile,
    read_profile_csv,
    write_profile_csv,
)

SCHEMA = "spokeforge.archive/1"
PROVENANCES = ("proxy", "ingested", "surrogate")
LOCK_NAME = ".spokeforge.lock"

_GENO_COLS = tuple(f"t{i}" for i in range(1, 6)) + tuple(f"b{i}" for i in range(1, 6))


@dataclass(frozen=True)
class DesignEntry:
    design_id: str
    seq: int
    provenance: str
    genotype: DesignGenotype | None
    profile_path: str  # relative to the archive root, "" if none


@contextlib.contextmanager
def archive_lock(root):
    """Advisory lock: one command at a time per archive."""
    path = Path(root) / LOCK_NAME
    Path(root).mkdir(parents=True, exist_ok=True)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(f"archive {root} is locked by another command (remove {path} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            path.unlink()


def _fmt(v: float) -> str:
    return repr(float(v))


class DesignArchive:
    def __init__(self, root, manifest: dict):
        self.root = Path(root)
        self.manifest = manifest
        self.designs: dict[str, DesignEntry] = {}
        self.features: dict[str, FeatureVector] = {}
        self.records: dict[tuple[str, str], tuple[int, PerformanceRecord]] = {}

    # ---- construction

    @classmethod
    def create(cls, root, manifest: dict) -> "DesignArchive":
        root = Path(root)
        if (root / "manifest.json").exists():
            raise ConfigError(f"{root} already holds an archive")
        manifest = {"schema": SCHEMA, "seq": 0, **manifest}
        arc = cls(root, manifest)
        (root / "profiles").mkdir(parents=True, exist_ok=True)
        return arc

    @classmethod
    def open(cls, root) -> "DesignArchive":
        root = Path(root)
        mpath = root / "manifest.json"
        if not mpath.exists():
            raise ConfigError(f"no archive at {root}; run `generate` first")
        manifest = json.loads(mpath.read_text())
        if manifest.get("schema") != SCHEMA:
            raise DatasetError(f"{mpath}: unsupported schema {manifest.get('schema')!r}")
        arc = cls(root, manifest)
        arc._load()
        return arc

    def _next_seq(self) -> int:
        self.manifest["seq"] += 1
        return self.manifest["seq"]

    # ---- mutation (append only)

    def add_design(self, design_id: str, genotype: DesignGenotype | None, profile: SpokeProfile | None,
                   features: FeatureVector, provenance: str) -> DesignEntry:
        if design_id in self.designs:
            raise DatasetError(f"design_id {design_id!r} already archived")
        if provenance not in PROVENANCES:
            raise DatasetError(f"unknown provenance {provenance!r}")
        rel = ""
        if profile is not None:
            rel = f"profiles/{design_id}.csv"
            (self.root / "profiles").mkdir(parents=True, exist_ok=True)
            write_profile_csv(profile, self.root / rel)
        entry = DesignEntry(design_id, self._next_seq(), provenance, genotype, rel)
        self.designs[design_id] = entry
        self.features[design_id] = features
        return entry

    def add_record(self, design_id: str, record: PerformanceRecord, provenance: str) -> bool:
        """Attach a record; returns False if one with that provenance already exists."""
        if design_id not in self.designs:
            raise DatasetError(f"unknown design_id {design_id!r}")
        if provenance not in PROVENANCES:
            raise DatasetError(f"unknown provenance {provenance!r}")
        key = (design_id, provenance)
        if key in self.records:
            return False
        self.records[key] = (self._next_seq(), record)
        return True

    # ---- queries

    def profile(self, design_id: str) -> SpokeProfile:
        entry = self.designs[design_id]
        if not entry.profile_path:
            raise DatasetError(f"design {design_id!r} has no stored profile")
        path = self.root / entry.profile_path
        if not path.exists():
            raise DatasetError(f"profile file {path} is missing")
        return read_profile_csv(path, design_id)

    def dataset(self, provenance: str) -> tuple[list[str], list[FeatureVector], list[PerformanceRecord]]:
        """Designs carrying a record of ``provenance``, in archive order."""
        ids, feats, recs = [], [], []
        for did in self.designs:
            hit = self.records.get((did, provenance))
            if hit is not None:
                ids.append(did)
                feats.append(self.features[did])
                recs.append(hit[1])
        return ids, feats, recs

    @property
    def base_record(self) -> PerformanceRecord:
        return PerformanceRecord(**self.manifest["base"]["record"])

    # ---- persistence

    def save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / "designs.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("design_id", "seq", "provenance") + _GENO_COLS + ("profile",))
            for e in self.designs.values():
                geno = [_fmt(v) for v in e.genotype.as_vector()] if e.genotype else [""] * 10
                w.writerow([e.design_id, e.seq, e.provenance] + geno + [e.profile_path])
        with open(self.root / "features.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("design_id",) + FEATURE_NAMES)
            for did, f in self.features.items():
                w.writerow([did] + [_fmt(v) for v in f.as_array()])
        with open(self.root / "records.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("design_id", "seq", "provenance") + OUTPUTS)
            for (did, prov), (seq, rec) in sorted(self.records.items(), key=lambda kv: kv[1][0]):
                w.writerow([did, seq, prov] + [_fmt(v) for v in rec.as_tuple()])
        (self.root / "manifest.json").write_text(json.dumps(self.manifest, indent=1, sort_keys=True) + "\n")

    def _load(self) -> None:
        try:
            with open(self.root / "designs.csv", newline="") as fh:
                for row in csv.DictReader(fh):
                    geno = None
                    if row["t1"] != "":
                        geno = DesignGenotype.from_vector([float(row[c]) for c in _GENO_COLS])
                    self.designs[row["design_id"]] = DesignEntry(
                        row["design_id"], int(row["seq"]), row["provenance"], geno, row["profile"]
                    )
            with open(self.root / "features.csv", newline="") as fh:
                for row in csv.DictReader(fh):
                    self.features[row["design_id"]] = FeatureVector.from_array([float(row[c]) for c in FEATURE_NAMES])
            with open(self.root / "records.csv", newline="") as fh:
                for row in csv.DictReader(fh):
                    rec = PerformanceRecord(*(float(row[c]) for c in OUTPUTS))
                    self.records[(row["design_id"], row["provenance"])] = (int(row["seq"]), rec)
        except (OSError, KeyError, ValueError) as exc:
            raise DatasetError(f"archive {self.root} is corrupt: {exc}") from None
