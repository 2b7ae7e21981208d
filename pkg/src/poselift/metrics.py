"""Evaluation metrics over sets of generated bodies.

Physical plausibility (non-collision, contact) is evaluated against the scene
SDF; diversity clusters pose/shape parameters with a small fixed-seed K-means
and reports the cluster histogram entropy (bits) and mean distance to the
assigned centers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .scene.sdf import SdfGrid, sample_sdf

N_CLUSTERS = 20
KMEANS_ITERS = 100

REPORT_HEADER = "# poselift eval report v1"


class MetricsError(ValueError):
    pass


def non_collision(bodies: list, sdf: SdfGrid) -> float:
    """Mean over bodies of the fraction of vertices with positive distance."""
    if not bodies:
        raise MetricsError("no bodies to evaluate")
    ratios = []
    for verts in bodies:
        psi = sample_sdf(sdf, np.asarray(verts, dtype=np.float64))
        ratios.append(float((psi > 0.0).mean()))
    return float(np.mean(ratios))


def contact(bodies: list, sdf: SdfGrid) -> float:
    """Fraction of bodies with at least one vertex at or below the surface."""
    if not bodies:
        raise MetricsError("no bodies to evaluate")
    touching = [float((sample_sdf(sdf, np.asarray(v, dtype=np.float64)) <= 0.0).any())
                for v in bodies]
    return float(np.mean(touching))


def _kmeans(features: np.ndarray, k: int, iters: int, seed: int):
    """Greedy farthest-first init, then Lloyd iterations; deterministic."""
    n = len(features)
    rng = np.random.default_rng(seed)
    centers = np.empty((k, features.shape[1]))
    first = int(rng.integers(n))
    centers[0] = features[first]
    d2 = ((features - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        nxt = int(np.argmax(d2))  # ties resolve to the lowest index
        centers[i] = features[nxt]
        d2 = np.minimum(d2, ((features - centers[i]) ** 2).sum(axis=1))
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        dist = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = dist.argmin(axis=1)
        for c in range(k):
            sel = new_assign == c
            if sel.any():
                centers[c] = features[sel].mean(axis=0)
            else:
                # revive an empty cluster at the point farthest from its center
                worst = int(np.argmax(dist[np.arange(n), new_assign]))
                centers[c] = features[worst]
                new_assign[worst] = c
        if (new_assign == assign).all():
            assign = new_assign
            break
        assign = new_assign
    return assign, centers


def diversity(params_list: list, n_clusters: int = N_CLUSTERS, seed: int = 0) -> tuple:
    """(entropy_bits, cluster_size) over the standardized [theta; phi]
    features of the given parameter sets."""
    if len(params_list) < n_clusters:
        raise MetricsError(f"need at least {n_clusters} samples, got {len(params_list)}")
    feats = np.stack([np.concatenate([p.theta, p.phi]) for p in params_list])
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    sd = np.where(sd > 1e-12, sd, 1.0)
    feats = (feats - mu) / sd

    assign, centers = _kmeans(feats, n_clusters, KMEANS_ITERS, seed)
    counts = np.bincount(assign, minlength=n_clusters).astype(np.float64)
    p = counts / counts.sum()
    nz = p > 0
    entropy = float(-(p[nz] * np.log2(p[nz])).sum())
    cluster_size = float(np.linalg.norm(feats - centers[assign], axis=1).mean())
    return entropy, cluster_size


@dataclass
class EvalReport:
    non_collision: float
    contact: float
    entropy: float = float("nan")
    cluster_size: float = float("nan")
    clip_score: float | None = None    # reserved; filled by external tooling
    rows: list = field(default_factory=list)  # per-body detail dicts

    def to_text(self) -> str:
        lines = [REPORT_HEADER,
                 f"non_collision {self.non_collision!r}",
                 f"contact {self.contact!r}",
                 f"entropy {self.entropy!r}",
                 f"cluster_size {self.cluster_size!r}"]
        if self.clip_score is not None:
            lines.append(f"clip_score {self.clip_score!r}")
        for row in self.rows:
            lines.append("body {} non_collision {!r} contact {}".format(
                row["body"], row["non_collision"], int(row["contact"])))
        return "\n".join(lines) + "\n"

    def save_text(self, path) -> None:
        Path(path).write_text(self.to_text())

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["body", "non_collision", "contact"])
            for row in self.rows:
                w.writerow([row["body"], repr(row["non_collision"]), int(row["contact"])])
            w.writerow(["all", repr(self.non_collision), repr(self.contact)])


def evaluate(bodies: list, sdf: SdfGrid, params_list: list | None = None,
             n_clusters: int = N_CLUSTERS, seed: int = 0) -> EvalReport:
    """Full report over posed vertex sets (and optionally their parameters,
    enabling the diversity numbers)."""
    if not bodies:
        raise MetricsError("no bodies to evaluate")
    rows = []
    for i, verts in enumerate(bodies):
        psi = sample_sdf(sdf, np.asarray(verts, dtype=np.float64))
        rows.append({
            "body": i,
            "non_collision": float((psi > 0.0).mean()),
            "contact": bool((psi <= 0.0).any()),
        })
    report = EvalReport(
        non_collision=float(np.mean([r["non_collision"] for r in rows])),
        contact=float(np.mean([r["contact"] for r in rows])),
        rows=rows,
    )
    if params_list is not None and len(params_list) >= n_clusters:
        report.entropy, report.cluster_size = diversity(params_list, n_clusters, seed)
    return report


def mean_joint_error(joints_a: np.ndarray, joints_b: np.ndarray) -> float:
    """Mean Euclidean distance between two joint sets (meters)."""
    a = np.asarray(joints_a, dtype=np.float64)
    b = np.asarray(joints_b, dtype=np.float64)
    return float(np.linalg.norm(a - b, axis=-1).mean())
