"""Source-language selection features, a linear ranker and ranking evaluation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Mapping, Sequence

from .correlation import spearman
from .errors import (
    DisjointTrees,
    InputError,
    LengthMismatch,
    MissingScore,
    NoSharedFeatures,
    NoUsableFeatures,
    ZeroVariance,
    ZeroVector,
)

EARTH_RADIUS_KM = 6371.0088

DISTANCE_FEATURES = ("d_geo", "d_gen", "d_inv", "d_syn", "d_pho", "d_fea")
SIMILARITY_FEATURES = ("s_tf", "s_tg", "sr", "eo")
FEATURES = DISTANCE_FEATURES + SIMILARITY_FEATURES
DEFAULT_WEIGHTS = {"d_geo": 1.0, "eo": 1.0}


@dataclass(frozen=True)
class LanguageProfile:
    code: str
    lat: float
    lon: float
    lineage: tuple
    inventory: dict = field(default_factory=dict)
    syntax: dict = field(default_factory=dict)
    phonology: dict = field(default_factory=dict)
    dataset_size: int = 0
    entity_surfaces: frozenset = frozenset()

    def __post_init__(self):
        if not -90 <= self.lat <= 90 or not -180 <= self.lon <= 180:
            raise InputError(f"{self.code}: coordinates ({self.lat}, {self.lon}) out of range")
        if not self.lineage:
            raise InputError(f"{self.code}: empty lineage")
        if self.dataset_size < 0:
            raise InputError(f"{self.code}: negative dataset size")
        object.__setattr__(self, "lineage", tuple(self.lineage))
        object.__setattr__(self, "entity_surfaces", frozenset(self.entity_surfaces))
        for name in ("inventory", "syntax", "phonology"):
            object.__setattr__(self, name, _as_sparse(getattr(self, name)))

    @classmethod
    def from_dict(cls, d: Mapping, base_dir: Path | None = None) -> "LanguageProfile":
        surfaces = set(d.get("entities", ()))
        if d.get("entities_file"):
            path = Path(d["entities_file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            with open(path, encoding="utf-8") as f:
                surfaces.update(line.strip() for line in f if line.strip())
        return cls(
            code=d["code"],
            lat=float(d["lat"]),
            lon=float(d["lon"]),
            lineage=tuple(d["lineage"]),
            inventory=d.get("inventory") or {},
            syntax=d.get("syntax") or {},
            phonology=d.get("phonology") or {},
            dataset_size=int(d.get("dataset_size", 0)),
            entity_surfaces=frozenset(surfaces),
        )

    @classmethod
    def load(cls, path) -> "LanguageProfile":
        path = Path(path)
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f), path.parent)


def _as_sparse(vec) -> dict:
    """``{index: value}`` with missing coordinates dropped; lists may use None."""
    if isinstance(vec, Mapping):
        items = vec.items()
    else:
        items = enumerate(vec)
    return {int(k): float(v) for k, v in items if v is not None}


@dataclass
class TransferFeatures:
    d_geo: float | None = None
    d_gen: float | None = None
    d_inv: float | None = None
    d_syn: float | None = None
    d_pho: float | None = None
    d_fea: float | None = None
    s_tf: int | None = None
    s_tg: int | None = None
    sr: float | None = None
    eo: float | None = None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def haversine_km(lat1, lon1, lat2, lon2, radius=EARTH_RADIUS_KM) -> float:
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * radius * math.asin(math.sqrt(min(1.0, h)))


def geo_distance(a: LanguageProfile, b: LanguageProfile) -> float:
    return haversine_km(a.lat, a.lon, b.lat, b.lon)


def genetic_distance(a: LanguageProfile, b: LanguageProfile) -> float:
    """One minus the shared ancestry prefix length over the deeper lineage."""
    shared = 0
    for x, y in zip(a.lineage, b.lineage):
        if x != y:
            break
        shared += 1
    if shared == 0:
        raise DisjointTrees(f"{a.code} and {b.code} share no root")
    return 1.0 - shared / max(len(a.lineage), len(b.lineage))


def vector_distance(u: Mapping, v: Mapping) -> float:
    """Cosine distance over the coordinates present in both sparse vectors."""
    shared = sorted(set(u) & set(v))
    if not shared:
        raise NoSharedFeatures("vectors have no coordinate in common")
    dot = sum(u[k] * v[k] for k in shared)
    nu = math.sqrt(sum(u[k] ** 2 for k in shared))
    nv = math.sqrt(sum(v[k] ** 2 for k in shared))
    if nu == 0 or nv == 0:
        raise ZeroVector("zero vector on the shared coordinates")
    return 1.0 - dot / (nu * nv)


def entity_overlap(a, b) -> float:
    """|A ∩ B| / (|A| + |B|); 0 when either set is empty."""
    a = a.entity_surfaces if isinstance(a, LanguageProfile) else set(a)
    b = b.entity_surfaces if isinstance(b, LanguageProfile) else set(b)
    if not a or not b:
        return 0.0
    return len(a & b) / (len(a) + len(b))


def _typology(p: LanguageProfile) -> dict:
    out = {}
    for name in ("inventory", "syntax", "phonology"):
        out.update({(name, k): v for k, v in getattr(p, name).items()})
    return out


def _optional_distance(u, v):
    if not u or not v:
        return None
    try:
        return vector_distance(u, v)
    except NoSharedFeatures:
        return None


def compute_features(source: LanguageProfile, target: LanguageProfile,
                     strict: bool = True) -> TransferFeatures:
    """All transfer features of ``source`` for ``target``.

    Missing or non-overlapping typology vectors leave the matching distance
    absent (None). Lineages with no common root raise unless ``strict`` is
    false, in which case ``d_gen`` is absent too.
    """
    f = TransferFeatures()
    f.d_geo = geo_distance(source, target)
    try:
        f.d_gen = genetic_distance(source, target)
    except DisjointTrees:
        if strict:
            raise
    f.d_inv = _optional_distance(source.inventory, target.inventory)
    f.d_syn = _optional_distance(source.syntax, target.syntax)
    f.d_pho = _optional_distance(source.phonology, target.phonology)
    f.d_fea = _optional_distance(_typology(source), _typology(target))
    f.s_tf = source.dataset_size
    f.s_tg = target.dataset_size
    f.sr = source.dataset_size / target.dataset_size if target.dataset_size > 0 else None
    f.eo = entity_overlap(source, target)
    return f


@dataclass
class RankedSource:
    code: str
    score: float
    features: TransferFeatures


def score_features(feats: Sequence[TransferFeatures], weights: Mapping[str, float]) -> list[float]:
    """Weighted sum of min-max normalized features, one score per candidate.

    Distances count negatively, similarities positively. A feature absent
    for a candidate contributes nothing to its score.
    """
    unknown = set(weights) - set(FEATURES)
    if unknown:
        raise InputError(f"unknown features in weights: {sorted(unknown)}")
    active = [f for f in FEATURES if weights.get(f, 0.0) != 0.0]
    scores = [0.0] * len(feats)
    usable = [False] * len(feats)
    for name in active:
        values = [getattr(f, name) for f in feats]
        present = [v for v in values if v is not None]
        if not present:
            continue
        lo, hi = min(present), max(present)
        sign = -1.0 if name in DISTANCE_FEATURES else 1.0
        for i, v in enumerate(values):
            if v is None:
                continue
            usable[i] = True
            norm = (v - lo) / (hi - lo) if hi > lo else 0.0
            scores[i] += sign * weights[name] * norm
    if active and not all(usable):
        raise NoUsableFeatures(f"candidate {usable.index(False)}: every weighted feature is absent")
    return scores


def rank_sources(target: LanguageProfile, candidates: Sequence[LanguageProfile],
                 weights: Mapping[str, float] | None = None) -> list[RankedSource]:
    """Order candidate sources by :func:`score_features`, best first.

    Ties go to the alphabetically first ISO code. Candidates from another
    language family simply lack ``d_gen``.
    """
    if not candidates:
        raise InputError("no candidate source languages")
    weights = dict(DEFAULT_WEIGHTS if weights is None else weights)
    feats = [compute_features(c, target, strict=False) for c in candidates]
    try:
        scores = score_features(feats, weights)
    except NoUsableFeatures:
        bad = [c.code for c, f in zip(candidates, feats)
               if all(getattr(f, n) is None for n in weights if weights[n])]
        raise NoUsableFeatures(f"{bad}: every weighted feature is absent") from None
    ranked = [RankedSource(c.code, s, f) for c, s, f in zip(candidates, scores, feats)]
    ranked.sort(key=lambda r: (-r.score, r.code))
    return ranked


def eval_ranking(ranking: Sequence[str], transfer_scores: Mapping[str, float], k: int = 2) -> dict:
    """Compare a predicted source ranking with observed transfer scores.

    ``top1_hit``: the first prediction is a best-scoring source.
    ``topk_contains``: a best-scoring source is among the first ``k``.
    ``spearman``: correlation of predicted order with score order (None for
    fewer than two candidates or constant scores).
    """
    if not ranking:
        raise InputError("empty ranking")
    missing = [c for c in ranking if c not in transfer_scores]
    if missing:
        raise MissingScore(f"no transfer score for {missing}")
    scores = [transfer_scores[c] for c in ranking]
    best = max(scores)
    winners = {c for c, s in zip(ranking, scores) if s == best}
    try:
        rho = spearman([-i for i in range(len(ranking))], scores)
    except (LengthMismatch, ZeroVariance):
        rho = None
    return {
        "top1_hit": ranking[0] in winners,
        "topk_contains": any(c in winners for c in ranking[:k]),
        "spearman": rho,
    }


def read_transfer_scores(path) -> dict:
    """Read ``source<TAB>target<TAB>f1`` rows into ``{target: {source: f1}}``."""
    out = {}
    with open(path, encoding="utf-8", newline="") as f:
        for lineno, row in enumerate(csv.reader(f, delimiter="\t"), 1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 3:
                raise InputError(f"line {lineno}: expected source<TAB>target<TAB>f1, got {row}")
            src, tgt, score = row
            try:
                value = float(score)
            except ValueError:
                if lineno == 1:  # header
                    continue
                raise InputError(f"line {lineno}: bad score {score!r}") from None
            out.setdefault(tgt, {})[src] = value
    return out
