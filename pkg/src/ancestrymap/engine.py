"""Recursive divide-and-conquer clustering drivers.

``dac_gem`` splits the whole sample once, then keeps splitting every
cluster of ``max_cluster`` or more subjects.  ``cluster_gem`` keeps
splitting until each cluster has no significant dimension.  A split
builds an eigenmap on a random base sample, Ward-clusters the base on its
significant coordinates, projects everyone else onto the map and gives
them the label of their nearest base subject.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterLabels, assign_nearest, choose_k, ward_cluster
from .errors import ArgumentError, DataValidationError, DegeneratePanelError
from .genotype_io import GenotypeMatrix
from .spectral import (
    EIGENVALUE_FLOOR,
    MAX_D,
    MIN_TW_N,
    Eigenmap,
    build_eigenmap,
    eigenmap_sidecar,
    nystrom_project,
)

log = logging.getLogger(__name__)


class Mode(str, enum.Enum):
    DAC_GEM = "dac_gem"
    CLUSTER_GEM = "cluster_gem"


class StopReason(str, enum.Enum):
    SIZE = "SIZE"  # fewer than max_cluster subjects (dac_gem)
    D0 = "D0"  # no significant dimension
    MIN_SPLIT = "MIN_SPLIT"
    DEPTH = "DEPTH"
    DEGENERATE = "DEGENERATE"  # no polymorphic SNPs / empty spectrum


@dataclass
class EngineConfig:
    base_size: int = 100
    max_cluster: int = 50
    alpha: float = 0.01
    seed: int = 0
    full_base_factor: float = 2.0
    min_split_size: int = 10
    mode: Mode = Mode.DAC_GEM
    max_depth: int = 32
    threads: int = 1
    keep_coords: bool = False
    min_tw_n: int = MIN_TW_N
    max_D: int = MAX_D
    eigenvalue_floor: float = EIGENVALUE_FLOOR

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.base_size < 2:
            raise ArgumentError("base size N must be at least 2")
        if self.max_cluster < 1:
            raise ArgumentError("max cluster size B must be at least 1")
        if not 0.0 < self.alpha < 0.5:
            raise ArgumentError(f"alpha must lie in (0, 0.5), got {self.alpha}")
        if self.full_base_factor < 1.0:
            raise ArgumentError("full_base_factor must be >= 1")
        if self.min_split_size < 2:
            raise ArgumentError("min_split_size must be at least 2")
        if not 0 <= self.seed < 2**64:
            raise ArgumentError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ArgumentError("threads must be positive")

    @property
    def matrix_order_bound(self) -> int:
        """Largest eigenproblem a dac_gem run may solve."""
        return max(math.ceil(self.full_base_factor * self.base_size), self.max_cluster - 1)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["mode"] = self.mode.value
        return out


@dataclass
class ClusterNode:
    node_id: int
    parent_id: int | None
    subjects: np.ndarray
    depth: int
    path: str
    base: np.ndarray | None = None
    D: int | None = None
    eigenvalues: np.ndarray | None = None
    k: int = 0
    children: list[int] = field(default_factory=list)
    stop_reason: StopReason | None = None
    map_info: dict | None = None
    coords: np.ndarray | None = None
    seconds: float = 0.0

    @property
    def size(self) -> int:
        return int(self.subjects.size)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ClusterTree:
    nodes: list[ClusterNode]
    subject_ids: tuple[str, ...]
    config: EngineConfig | None = None
    peak_matrix_order: int = 0

    def __getitem__(self, node_id) -> ClusterNode:
        return self.nodes[node_id]

    @property
    def root(self) -> ClusterNode:
        return self.nodes[0]

    def leaves(self) -> list[ClusterNode]:
        return [nd for nd in self.nodes if nd.is_leaf]

    def leaf_labels(self) -> np.ndarray:
        """Leaf node id for every subject, in subject order."""
        out = np.full(len(self.subject_ids), -1, dtype=np.int64)
        for nd in self.leaves():
            out[nd.subjects] = nd.node_id
        return out

    def assignments(self) -> list[tuple[str, str, int]]:
        out = [None] * len(self.subject_ids)
        for nd in self.leaves():
            for i in nd.subjects:
                out[i] = (self.subject_ids[i], nd.path, nd.node_id)
        return out

    def to_records(self) -> list[dict]:
        recs = []
        for nd in self.nodes:
            ev = [] if nd.eigenvalues is None else [float(v) for v in nd.eigenvalues[:MAX_D]]
            rec = {
                "id": nd.node_id,
                "parent": nd.parent_id,
                "depth": nd.depth,
                "path": nd.path,
                "size": nd.size,
                "n_base": None if nd.base is None else int(nd.base.size),
                "D": nd.D,
                "eigenvalues": ev,
                "k": nd.k,
                "children": list(nd.children),
                "stop_reason": None if nd.stop_reason is None else nd.stop_reason.value,
            }
            if nd.is_leaf:
                rec["subjects"] = [self.subject_ids[i] for i in nd.subjects]
            recs.append(rec)
        return recs

    @classmethod
    def from_records(cls, records: list[dict], subject_ids) -> "ClusterTree":
        """Rebuild a tree (without maps) from its JSON records."""
        subject_ids = tuple(subject_ids)
        index = {s: i for i, s in enumerate(subject_ids)}
        by_id = {r["id"]: r for r in records}
        if sorted(by_id) != list(range(len(records))):
            raise DataValidationError("tree node ids must be 0..n-1")
        members: dict[int, np.ndarray] = {}

        def collect(nid):
            if nid in members:
                return members[nid]
            r = by_id[nid]
            if r["children"]:
                arr = np.sort(np.concatenate([collect(c) for c in r["children"]]))
            else:
                missing = [s for s in r.get("subjects", []) if s not in index]
                if missing:
                    raise DataValidationError(
                        f"tree leaf {nid} references subjects absent from genotypes: "
                        + ", ".join(missing[:10])
                    )
                arr = np.sort(np.array([index[s] for s in r.get("subjects", [])], dtype=np.int64))
            members[nid] = arr
            return arr

        nodes = []
        for nid in range(len(records)):
            r = by_id[nid]
            ev = r.get("eigenvalues") or []
            nodes.append(
                ClusterNode(
                    node_id=nid,
                    parent_id=r["parent"],
                    subjects=collect(nid),
                    depth=r["depth"],
                    path=r.get("path", ""),
                    D=r.get("D"),
                    eigenvalues=np.array(ev, dtype=np.float64) if ev else None,
                    k=r.get("k", 0),
                    children=list(r["children"]),
                    stop_reason=StopReason(r["stop_reason"]) if r.get("stop_reason") else None,
                )
            )
        return cls(nodes, subject_ids)

    def to_dot(self) -> str:
        lines = ["digraph cluster_tree {", "  node [shape=circle];"]
        for nd in self.nodes:
            d = "-" if nd.D is None else str(nd.D)
            lines.append(f'  n{nd.node_id} [label="{nd.node_id} / {nd.size} / {d}"];')
        for nd in self.nodes:
            for c in nd.children:
                lines.append(f"  n{nd.node_id} -> n{c};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# one split
# --------------------------------------------------------------------------

def node_rng(seed: int, node_id: int) -> np.random.Generator:
    """Generator owned by one node, independent of evaluation order."""
    return np.random.default_rng([int(seed), int(node_id)])


def select_base(subjects, n_base: int, rng: np.random.Generator, full_base_factor: float = 2.0) -> np.ndarray:
    """Base sample of ``n_base`` subjects, sorted ascending.

    Small sets (at most ``full_base_factor * n_base``) are returned whole.
    Otherwise a partial Fisher-Yates shuffle of the sorted subject list
    picks the sample.
    """
    pool = np.sort(np.asarray(subjects, dtype=np.int64))
    if pool.size <= full_base_factor * n_base:
        return pool
    if n_base > pool.size:
        raise ArgumentError(f"cannot sample {n_base} of {pool.size} subjects")
    for i in range(n_base):
        j = int(rng.integers(i, pool.size))
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:n_base])


@dataclass
class Split:
    emap: Eigenmap
    D: int
    labels: ClusterLabels | None
    coords: np.ndarray | None  # node subjects x output dims, node order


def split_node(g: GenotypeMatrix, subjects, cfg: EngineConfig, rng: np.random.Generator) -> Split:
    """Eigenmap, Ward split and nearest-base assignment for one node.

    Returns labels for every node subject (in ``subjects`` order), or
    ``labels=None`` when the map has no significant dimension.
    Raises :class:`DegeneratePanelError` if the node has no polymorphic SNPs.
    """
    subjects = np.asarray(subjects, dtype=np.int64)
    base = select_base(subjects, cfg.base_size, rng, cfg.full_base_factor)
    emap = build_eigenmap(
        g, base, cfg.alpha, floor=cfg.eigenvalue_floor, min_tw_n=cfg.min_tw_n, max_D=cfg.max_D
    )
    D = emap.D
    out_dims = min(emap.n_dims, max(D, 2)) if cfg.keep_coords else D
    in_base = np.isin(subjects, base)
    rest = subjects[~in_base]
    coords = None
    if out_dims > 0:
        coords = np.empty((subjects.size, out_dims))
        # base rows keep their stored coordinates
        coords[in_base] = emap.coords[np.searchsorted(base, subjects[in_base]), :out_dims]
        if rest.size:
            coords[~in_base] = nystrom_project(emap, g, rest, dims=out_dims)
    if D == 0:
        return Split(emap, 0, None, coords)
    base_labels = ward_cluster(emap.coords[:, :D], choose_k(D))
    labels = np.empty(subjects.size, dtype=np.int64)
    pos_base = np.searchsorted(base, subjects[in_base])
    labels[in_base] = base_labels.labels[pos_base]
    if rest.size:
        labels[~in_base] = assign_nearest(coords[~in_base, :D], emap.coords[:, :D], base_labels)
    return Split(emap, D, ClusterLabels(labels, base_labels.k), coords)


# --------------------------------------------------------------------------
# drivers
# --------------------------------------------------------------------------

def _stop_before_split(nd: ClusterNode, cfg: EngineConfig) -> StopReason | None:
    if cfg.mode is Mode.DAC_GEM and nd.node_id != 0 and nd.size < cfg.max_cluster:
        return StopReason.SIZE
    if nd.size < cfg.min_split_size:
        return StopReason.MIN_SPLIT
    if nd.depth >= cfg.max_depth:
        return StopReason.DEPTH
    return None


def _attempt(g, nd: ClusterNode, cfg: EngineConfig):
    t0 = time.perf_counter()
    try:
        res = split_node(g, nd.subjects, cfg, node_rng(cfg.seed, nd.node_id))
    except DegeneratePanelError as exc:
        res = exc
    return res, time.perf_counter() - t0


def grow_tree(g: GenotypeMatrix, cfg: EngineConfig) -> ClusterTree:
    """Breadth-first recursion shared by :func:`dac_gem` and :func:`cluster_gem`."""
    if g.n < 2:
        raise ArgumentError("need at least two subjects")
    root = ClusterNode(0, None, np.arange(g.n, dtype=np.int64), 0, "")
    tree = ClusterTree([root], g.subject_ids, cfg)
    frontier = [root]
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        while frontier:
            todo = []
            for nd in frontier:
                reason = _stop_before_split(nd, cfg)
                if reason is None:
                    todo.append(nd)
                else:
                    nd.stop_reason = reason
                    if nd.size < cfg.min_tw_n:
                        nd.D = 0
            if pool is None:
                results = [_attempt(g, nd, cfg) for nd in todo]
            else:
                results = list(pool.map(lambda nd: _attempt(g, nd, cfg), todo))
            frontier = []
            for nd, (res, secs) in zip(todo, results):
                nd.seconds = secs
                if isinstance(res, DegeneratePanelError):
                    log.warning("node %d: %s", nd.node_id, res)
                    nd.stop_reason = StopReason.DEGENERATE
                    nd.D = 0
                    continue
                emap = res.emap
                tree.peak_matrix_order = max(tree.peak_matrix_order, emap.order)
                nd.base = emap.base_index
                nd.D = res.D
                nd.eigenvalues = emap.eigenvalues[: cfg.max_D].copy()
                nd.map_info = eigenmap_sidecar(emap)
                nd.map_info["base_subjects"] = [g.subject_ids[i] for i in emap.base_index]
                if cfg.keep_coords:
                    nd.coords = res.coords
                if res.labels is None:
                    nd.stop_reason = StopReason.DEGENERATE if emap.degenerate else StopReason.D0
                    continue
                groups = [nd.subjects[res.labels.members(c)] for c in range(res.labels.k)]
                groups.sort(key=lambda s: int(s[0]))
                nd.k = len(groups)
                for ci, members in enumerate(groups):
                    child = ClusterNode(
                        node_id=len(tree.nodes),
                        parent_id=nd.node_id,
                        subjects=members,
                        depth=nd.depth + 1,
                        path=f"{nd.path}/{ci}" if nd.path else str(ci),
                    )
                    tree.nodes.append(child)
                    nd.children.append(child.node_id)
                    frontier.append(child)
    finally:
        if pool is not None:
            pool.shutdown()
    return tree


def dac_gem(g: GenotypeMatrix, cfg: EngineConfig) -> ClusterTree:
    """Split the sample, then recurse into every cluster of ``max_cluster``
    or more subjects until all clusters are smaller or homogeneous."""
    if cfg.mode is not Mode.DAC_GEM:
        cfg = EngineConfig(**{**cfg.__dict__, "mode": Mode.DAC_GEM})
    return grow_tree(g, cfg)


def cluster_gem(g: GenotypeMatrix, cfg: EngineConfig) -> ClusterTree:
    """Recurse until every cluster has no significant dimension (or a stop
    guard fires); leaf ids then serve as a stratification factor."""
    if cfg.mode is not Mode.CLUSTER_GEM:
        cfg = EngineConfig(**{**cfg.__dict__, "mode": Mode.CLUSTER_GEM})
    return grow_tree(g, cfg)
