"""Case-control matching inside homogeneous clusters.

Cases and controls are grouped by optimal full matching: every subject
lands in a set with at least one case and one control, and the summed
case-control distance over the sets is minimal.  The problem is solved as
a minimum-cost flow with unit lower bounds:

    source -> case       lower 1, capacity max_controls_per_case
    case -> control      capacity 1, cost round(cost_scale * distance)
    control -> sink      lower 1, capacity max_cases_per_control

Connected components of the used case-control arcs are the matched sets.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .errors import AncestryMapError, ArgumentError, ConstraintError, DegeneratePanelError
from .genotype_io import GenotypeMatrix, PhenotypeTable, Status
from .spectral import build_eigenmap

log = logging.getLogger(__name__)

SINGLE_ARM = "SINGLE_ARM"
NO_PHENOTYPE = "NO_PHENOTYPE"


@dataclass
class MatchConfig:
    min_dim: int = 2
    max_controls_per_case: int | None = None
    max_cases_per_control: int | None = None
    cost_scale: int = 10**6

    def __post_init__(self):
        if self.min_dim < 0:
            raise ArgumentError("min_dim must be non-negative")
        for name in ("max_controls_per_case", "max_cases_per_control"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ArgumentError(f"{name} must be >= 1 when given")
        if self.cost_scale < 1:
            raise ArgumentError("cost_scale must be a positive integer")


@dataclass
class MatchedSet:
    set_id: int
    cases: list[str]
    controls: list[str]


@dataclass
class MatchResult:
    sets: list[MatchedSet] = field(default_factory=list)
    total_cost: float = 0.0
    scaled_cost: int = 0
    unmatched: list[tuple[str, str, str]] = field(default_factory=list)  # (id, role, reason)
    n_arcs: int = 0
    D: int | None = None
    d: int | None = None
    error: str | None = None

    @property
    def mean_distance(self) -> float:
        """Mean distance over the case-control arcs used by the sets."""
        return self.total_cost / self.n_arcs if self.n_arcs else float("nan")


def match_dimension(d_significant: int, cfg: MatchConfig, n_dims: int | None = None) -> int:
    """Matching dimension ``max(D, D*)``, clamped to the map's width."""
    if d_significant < 0:
        raise ArgumentError("significant dimension count must be non-negative")
    d = max(d_significant, cfg.min_dim)
    if n_dims is not None:
        d = min(d, n_dims)
    return d


def scaled_costs(dist: np.ndarray, cost_scale: int) -> np.ndarray:
    # np.rint rounds half to even
    return np.rint(np.asarray(dist, dtype=np.float64) * cost_scale).astype(np.int64)


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    s = np.zeros((a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        t = a[:, None, k] - b[None, :, k]
        s += t * t
    return np.sqrt(s)


def full_matching_flow(dist: np.ndarray, cfg: MatchConfig):
    """Solve the flow problem for a cases x controls distance matrix.

    Returns ``(used, scaled_cost)`` where ``used`` is a boolean
    cases x controls matrix of arcs carrying flow.
    """
    nc, nk = dist.shape
    cap_case = nk if cfg.max_controls_per_case is None else min(cfg.max_controls_per_case, nk)
    cap_ctrl = nc if cfg.max_cases_per_control is None else min(cfg.max_cases_per_control, nc)
    if cap_case * nc < nk:
        raise ConstraintError(
            f"max_controls_per_case={cfg.max_controls_per_case} cannot cover {nk} controls "
            f"with {nc} cases",
            bound="max_controls_per_case",
        )
    if cap_ctrl * nk < nc:
        raise ConstraintError(
            f"max_cases_per_control={cfg.max_cases_per_control} cannot cover {nc} cases "
            f"with {nk} controls",
            bound="max_cases_per_control",
        )
    S, T, s, t = 0, 1, 2, 3
    case0 = 4
    ctrl0 = 4 + nc
    V = ctrl0 + nk
    cap = np.zeros((V, V), dtype=np.int64)
    cost = np.zeros((V, V), dtype=np.int64)
    cases = np.arange(case0, ctrl0)
    ctrls = np.arange(ctrl0, V)
    # lower bounds moved into node excesses
    cap[s, cases] = cap_case - 1
    cap[ctrls, t] = cap_ctrl - 1
    cap[np.ix_(cases, ctrls)] = 1
    cost[np.ix_(cases, ctrls)] = scaled_costs(dist, cfg.cost_scale)
    cap[t, s] = nc * nk
    cap[S, cases] = 1  # +1 excess at each case
    cap[S, t] = nk  # +1 excess at t per control
    cap[s, T] = nc  # -1 excess at s per case
    cap[ctrls, T] = 1  # -1 excess at each control
    need = nc + nk
    flow, pushed, total = kernels.min_cost_flow(cap, cost, S, T, need)
    if pushed < need:
        raise ConstraintError("ratio bounds leave the matching infeasible")
    used = flow[np.ix_(cases, ctrls)] > 0
    return used, int(total)


def _components(used: np.ndarray) -> list[tuple[list[int], list[int]]]:
    nc, nk = used.shape
    parent = list(range(nc + nk))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in zip(*np.nonzero(used)):
        a, b = find(int(i)), find(nc + int(j))
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for v in range(nc + nk):
        r = find(v)
        grp = groups.setdefault(r, ([], []))
        if v < nc:
            grp[0].append(v)
        else:
            grp[1].append(v - nc)
    return list(groups.values())


def cc_match(
    coords,
    subject_ids: Sequence[str],
    phenotypes: PhenotypeTable | Mapping[str, Status],
    cfg: MatchConfig | None = None,
) -> MatchResult:
    """Optimal full matching of one cluster's cases and controls.

    Parameters
    ----------
    coords
        ``len(subject_ids) x d`` map coordinates; ``d = 0`` means every
        pair is at distance zero.
    subject_ids
        Cluster members, in cluster order.
    phenotypes
        Case/control status; members without one are reported unmatched.
    """
    cfg = cfg or MatchConfig()
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.shape[0] != len(subject_ids):
        raise ArgumentError("coords and subject_ids disagree in length")
    res = MatchResult()
    case_pos, ctrl_pos = [], []
    for i, sid in enumerate(subject_ids):
        st = phenotypes.get(sid)
        if st is None:
            res.unmatched.append((sid, "unknown", NO_PHENOTYPE))
        elif st == Status.CASE:
            case_pos.append(i)
        else:
            ctrl_pos.append(i)
    if not case_pos or not ctrl_pos:
        for i in case_pos:
            res.unmatched.append((subject_ids[i], "case", SINGLE_ARM))
        for i in ctrl_pos:
            res.unmatched.append((subject_ids[i], "control", SINGLE_ARM))
        return res

    if coords.shape[1] == 0:
        _match_without_distance(res, subject_ids, case_pos, ctrl_pos)
        return res

    dist = pairwise_distances(coords[case_pos], coords[ctrl_pos])
    used, scaled = full_matching_flow(dist, cfg)
    groups = _components(used)
    groups.sort(key=lambda gr: min([case_pos[i] for i in gr[0]] + [ctrl_pos[j] for j in gr[1]]))
    for set_id, (ci, kj) in enumerate(groups):
        res.sets.append(
            MatchedSet(
                set_id,
                [subject_ids[case_pos[i]] for i in ci],
                [subject_ids[ctrl_pos[j]] for j in kj],
            )
        )
    res.total_cost = float(dist[used].sum())
    res.scaled_cost = scaled
    res.n_arcs = int(used.sum())
    return res


def _match_without_distance(res: MatchResult, subject_ids, case_pos, ctrl_pos) -> None:
    # one set per member of the smaller arm, the other arm dealt round-robin
    if len(case_pos) <= len(ctrl_pos):
        hubs, spokes, hub_is_case = case_pos, ctrl_pos, True
    else:
        hubs, spokes, hub_is_case = ctrl_pos, case_pos, False
    members = [[] for _ in hubs]
    for r, j in enumerate(spokes):
        members[r % len(hubs)].append(j)
    for set_id, (h, sp) in enumerate(zip(hubs, members)):
        hub_ids = [subject_ids[h]]
        spoke_ids = [subject_ids[j] for j in sp]
        if hub_is_case:
            res.sets.append(MatchedSet(set_id, hub_ids, spoke_ids))
        else:
            res.sets.append(MatchedSet(set_id, spoke_ids, hub_ids))
    res.n_arcs = len(spokes)


def match_all_leaves(
    tree,
    g: GenotypeMatrix,
    phenotypes: PhenotypeTable,
    cfg: MatchConfig | None = None,
    alpha: float = 0.01,
) -> list[tuple[int, MatchResult]]:
    """Match cases to controls inside every leaf of ``tree``.

    Each leaf gets its own eigenmap over all of its members.  A failing
    leaf is reported through ``MatchResult.error``; other leaves go on.
    """
    cfg = cfg or MatchConfig()
    out = []
    for leaf in tree.leaves():
        ids = [g.subject_ids[i] for i in leaf.subjects]
        roles = [phenotypes.get(s) for s in ids]
        two_arm = Status.CASE in roles and Status.CONTROL in roles
        if not two_arm:
            res = cc_match(np.zeros((len(ids), 0)), ids, phenotypes, cfg)
            out.append((leaf.node_id, res))
            continue
        try:
            try:
                emap = build_eigenmap(g, leaf.subjects, alpha)
                D, n_dims = emap.D, emap.n_dims
                coords = emap.coords
            except DegeneratePanelError:
                D, n_dims = 0, 0
                coords = np.zeros((len(ids), 0))
            d = match_dimension(D, cfg, n_dims)
            res = cc_match(coords[:, :d], ids, phenotypes, cfg)
            res.D, res.d = D, d
        except AncestryMapError as exc:
            log.warning("leaf %d: %s", leaf.node_id, exc)
            res = MatchResult(error=str(exc))
            reason = "CONSTRAINT" if isinstance(exc, ConstraintError) else "ERROR"
            for sid, st in zip(ids, roles):
                role = "unknown" if st is None else ("case" if st == Status.CASE else "control")
                res.unmatched.append((sid, role, reason))
        out.append((leaf.node_id, res))
    return out
