"""Synthetic genotype panels with known structure (Balding-Nichols model)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError
from .genotype_io import MISSING, GenotypeMatrix


@dataclass
class SimConfig:
    n_pops: int
    subjects_per_pop: Sequence[int]
    m: int
    fst: float | Sequence[float] = 0.1
    ancestral_maf_range: tuple[float, float] = (0.05, 0.5)
    missing_rate: float = 0.0
    seed: int = 0
    subject_prefix: str = "ind"
    snp_prefix: str = "snp"

    def __post_init__(self):
        if self.n_pops < 1:
            raise ArgumentError("n_pops must be positive")
        self.subjects_per_pop = [int(k) for k in self.subjects_per_pop]
        if len(self.subjects_per_pop) != self.n_pops:
            raise ArgumentError(
                f"subjects_per_pop has {len(self.subjects_per_pop)} entries, expected {self.n_pops}"
            )
        if any(k < 1 for k in self.subjects_per_pop):
            raise ArgumentError("every population needs at least one subject")
        if self.m < 1:
            raise ArgumentError("m must be positive")
        lo, hi = self.ancestral_maf_range
        if not 0.0 < lo <= hi <= 0.5:
            raise ArgumentError(f"ancestral_maf_range must lie in (0, 0.5], got {(lo, hi)}")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ArgumentError("missing_rate must lie in [0, 1)")
        for f in self.fst_per_pop:
            if not 0.0 <= f < 1.0:
                raise ArgumentError(f"fst must lie in [0, 1), got {f}")

    @property
    def fst_per_pop(self) -> list[float]:
        if np.ndim(self.fst) == 0:
            return [float(self.fst)] * self.n_pops
        f = [float(v) for v in self.fst]
        if len(f) != self.n_pops:
            raise ArgumentError(f"fst has {len(f)} entries, expected {self.n_pops}")
        return f

    @property
    def n(self) -> int:
        return sum(self.subjects_per_pop)


def diverge(rng: np.random.Generator, p: np.ndarray, fst: float) -> np.ndarray:
    """Population allele frequencies drawn around ancestral ``p``."""
    if fst == 0:
        return p.copy()
    if not 0 < fst < 1:
        raise ArgumentError(f"fst must lie in [0, 1), got {fst}")
    c = (1.0 - fst) / fst
    return rng.beta(p * c, (1.0 - p) * c)


def _assemble(rng, freqs, sizes, missing_rate, subject_prefix, snp_prefix):
    blocks = [rng.binomial(2, f, size=(k, f.size)) for f, k in zip(freqs, sizes)]
    values = np.vstack(blocks).astype(np.int8)
    if missing_rate > 0:
        values[rng.random(values.shape) < missing_rate] = MISSING
    n, m = values.shape
    w = len(str(n))
    ids = tuple(f"{subject_prefix}{i:0{w}d}" for i in range(n))
    snps = tuple(f"{snp_prefix}{j}" for j in range(m))
    return GenotypeMatrix(ids, snps, values)


def balding_nichols(cfg: SimConfig, return_frequencies: bool = False):
    """Panel and per-subject population labels for ``cfg``.

    Draw order is fixed (ancestral frequencies, population frequencies,
    genotypes, missing mask), so a seed fully determines the output.
    With ``return_frequencies`` the ``n_pops x m`` population allele
    frequencies are returned as a third element.
    """
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.ancestral_maf_range
    p = rng.uniform(lo, hi, size=cfg.m)
    freqs = [diverge(rng, p, f) for f in cfg.fst_per_pop]
    g = _assemble(rng, freqs, cfg.subjects_per_pop, cfg.missing_rate,
                  cfg.subject_prefix, cfg.snp_prefix)
    labels = np.repeat(np.arange(cfg.n_pops), cfg.subjects_per_pop)
    if return_frequencies:
        return g, labels, np.vstack(freqs)
    return g, labels


@dataclass
class HierarchicalConfig:
    """Two-level model: groups diverge from the ancestor, subpopulations
    diverge from their group."""

    group_sizes: Sequence[Sequence[int]]
    m: int
    fst_group: float = 0.15
    fst_sub: float = 0.03
    ancestral_maf_range: tuple[float, float] = (0.05, 0.5)
    missing_rate: float = 0.0
    seed: int = 0
    subject_prefix: str = "ind"
    snp_prefix: str = "snp"


def hierarchical_balding_nichols(cfg: HierarchicalConfig):
    """Returns ``(panel, group_labels, subpopulation_labels)``."""
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.ancestral_maf_range
    p = rng.uniform(lo, hi, size=cfg.m)
    freqs, sizes, top, sub = [], [], [], []
    k = 0
    for gi, subs in enumerate(cfg.group_sizes):
        pg = diverge(rng, p, cfg.fst_group)
        for size in subs:
            freqs.append(diverge(rng, pg, cfg.fst_sub))
            sizes.append(int(size))
            top += [gi] * int(size)
            sub += [k] * int(size)
            k += 1
    g = _assemble(rng, freqs, sizes, cfg.missing_rate, cfg.subject_prefix, cfg.snp_prefix)
    return g, np.array(top), np.array(sub)
