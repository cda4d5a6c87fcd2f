"""Standardised genotype kernel, its eigenmap, the TW dimension test and
Nystrom extension of the map to held-out subjects."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DegeneratePanelError
from .genotype_io import MISSING, GenotypeMatrix
from .tracy_widom import critical_value

EIGENVALUE_FLOOR = 1e-10
MIN_TW_N = 10
MAX_D = 20
KERNEL_BLOCK = 256


@dataclass(frozen=True)
class NormalizationStats:
    snp_mean: np.ndarray
    snp_scale: np.ndarray
    kept_snps: np.ndarray

    @property
    def m_kept(self) -> int:
        return int(self.kept_snps.size)


@dataclass
class TWTest:
    eigenvalue: float
    statistic: float
    n_eff: float
    significant: bool


@dataclass
class TWReport:
    alpha: float
    critical_value: float
    tests: list[TWTest] = field(default_factory=list)
    degenerate: bool = False
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "degenerate": self.degenerate,
            "reason": self.reason,
            "tests": [
                {
                    "eigenvalue": t.eigenvalue,
                    "statistic": t.statistic,
                    "n_eff": t.n_eff,
                    "significant": t.significant,
                }
                for t in self.tests
            ],
        }


@dataclass
class Eigenmap:
    """Eigen-decomposition of one node's base sample.

    ``coords`` holds every retained eigenvector (unit-norm columns, one row
    per base subject); the first ``D`` columns are the significant ones.
    """

    base_index: np.ndarray
    coords: np.ndarray
    eigenvalues: np.ndarray
    D: int
    norm_stats: NormalizationStats
    tw_report: TWReport
    degenerate: bool = False
    base_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return int(self.base_index.size)

    @property
    def n_dims(self) -> int:
        return int(self.eigenvalues.size)


# --------------------------------------------------------------------------
# normalisation
# --------------------------------------------------------------------------

def compute_norm_stats(g: GenotypeMatrix, rows) -> NormalizationStats:
    """Per-SNP mean count and binomial scale over the selected rows.

    Means ignore missing calls.  SNPs that are monomorphic (or uncalled)
    in these rows are left out of ``kept_snps``.
    """
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        raise ArgumentError("compute_norm_stats needs at least one row")
    v = g.values[rows]
    present = v != MISSING
    counts = present.sum(axis=0)
    sums = np.where(present, v, 0).sum(axis=0, dtype=np.int64)
    called = counts > 0
    mean = np.where(called, sums / np.maximum(counts, 1), 0.0)
    p = mean / 2.0
    scale = np.sqrt(p * (1.0 - p))
    kept = np.flatnonzero(called & (scale > 0))
    if kept.size == 0:
        raise DegeneratePanelError(
            f"no polymorphic SNPs among {rows.size} subjects"
        )
    return NormalizationStats(mean, scale, kept)


def normalize(g: GenotypeMatrix, rows, stats: NormalizationStats) -> np.ndarray:
    """Standardised genotypes ``(count - mean) / scale`` on the kept SNPs.

    Missing calls are imputed with the mean, i.e. they become 0.
    """
    rows = np.asarray(rows, dtype=np.intp)
    kept = stats.kept_snps
    v = g.values[np.ix_(rows, kept)]
    x = (v - stats.snp_mean[kept]) / stats.snp_scale[kept]
    x[v == MISSING] = 0.0
    return x


# --------------------------------------------------------------------------
# kernel and eigen-decomposition
# --------------------------------------------------------------------------

def kernel_block(xa: np.ndarray, xb: np.ndarray, block: int = KERNEL_BLOCK) -> np.ndarray:
    """``(1/m) xa xb^T`` assembled block by block.

    When ``xb is xa`` only the upper blocks are computed and mirrored, so
    the result is exactly symmetric.
    """
    xa = np.asarray(xa, dtype=np.float64)
    same = xb is xa
    xb = np.asarray(xb, dtype=np.float64)
    if xa.ndim != 2 or xb.ndim != 2 or xa.shape[1] != xb.shape[1]:
        raise ArgumentError(f"kernel inputs disagree: {xa.shape} vs {xb.shape}")
    m = xa.shape[1]
    if m == 0:
        raise DegeneratePanelError("kernel needs at least one kept SNP")
    out = np.empty((xa.shape[0], xb.shape[0]))
    for i0 in range(0, xa.shape[0], block):
        a = xa[i0:i0 + block]
        j_start = i0 if same else 0
        for j0 in range(j_start, xb.shape[0], block):
            blk = (a @ xb[j0:j0 + block].T) / m
            out[i0:i0 + block, j0:j0 + block] = blk
            if same and j0 != i0:
                out[j0:j0 + block, i0:i0 + block] = blk.T
    if same:
        # diagonal blocks come out of BLAS only nearly symmetric
        iu = np.triu_indices(out.shape[0], 1)
        out[(iu[1], iu[0])] = out[iu]
    return out


def eigendecompose(k: np.ndarray, floor: float = EIGENVALUE_FLOOR):
    """Eigenpairs of a symmetric kernel, largest first.

    Eigenvalues not above ``floor * max_eigenvalue`` are dropped with their
    vectors.  Each eigenvector is signed so that its largest-magnitude entry
    (lowest index on ties) is non-negative.

    Returns
    -------
    (eigenvalues, eigenvectors)
        ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.
    """
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ArgumentError(f"kernel must be square, got shape {k.shape}")
    if k.size and np.max(np.abs(k - k.T)) > 1e-8:
        raise ArgumentError("kernel is not symmetric within 1e-8")
    vals, vecs = np.linalg.eigh((k + k.T) / 2.0)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    top = vals[0] if vals.size else 0.0
    keep = vals > floor * max(top, 0.0)
    if top <= 0.0:
        keep[:] = False
    vals = np.ascontiguousarray(vals[keep])
    vecs = np.ascontiguousarray(vecs[:, keep])
    if vecs.size:
        lead = np.argmax(np.abs(vecs), axis=0)
        signs = np.where(vecs[lead, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
        vecs *= signs
    return vals, vecs


# --------------------------------------------------------------------------
# significant dimensions
# --------------------------------------------------------------------------

def tw_statistic(eigenvalues) -> tuple[float, float]:
    """TW-normalised statistic for the leading value of ``eigenvalues``.

    ``eigenvalues`` are the L non-zero values of a centred kernel, so the
    sample count behind them is L + 1.  The effective marker count is the
    moment estimate ``(L+2) S1^2 / (L S2 - S1^2)``.

    Returns ``(statistic, n_eff)``; ``statistic`` is ``nan`` when the
    spectrum is too flat to test, i.e. ``(L-1) S2 <= S1^2``.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    L = lam.size
    s1 = float(lam.sum())
    s2 = float((lam * lam).sum())
    if L < 2 or (L - 1) * s2 <= s1 * s1:
        return math.nan, math.nan
    n_eff = (L + 2) * s1 * s1 / (L * s2 - s1 * s1)
    if n_eff <= 1:
        return math.nan, n_eff
    ell = L * lam[0] / s1
    root = math.sqrt(n_eff - 1) + math.sqrt(L)
    mu = root * root / n_eff
    sigma = (root / n_eff) * (1 / math.sqrt(n_eff - 1) + 1 / math.sqrt(L)) ** (1 / 3)
    return (ell - mu) / sigma, n_eff


def significant_dimensions(
    eigenvalues,
    alpha: float = 0.01,
    n_subjects: int | None = None,
    min_tw_n: int = MIN_TW_N,
    max_D: int = MAX_D,
) -> tuple[int, TWReport]:
    """Count leading eigenvalues that are significant under TW1.

    The leading value is tested against the remaining spectrum; on
    rejection it is removed and the next one is tested.  Testing stops at
    the first non-significant value or at ``max_D``.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    crit = critical_value(alpha)
    report = TWReport(alpha=alpha, critical_value=crit)
    if lam.size == 0:
        report.degenerate = True
        report.reason = "no retained eigenvalues"
        return 0, report
    if np.any(np.diff(lam) > 0):
        raise ArgumentError("eigenvalues must be sorted in descending order")
    if n_subjects is not None and n_subjects < min_tw_n:
        report.reason = f"fewer than {min_tw_n} subjects"
        return 0, report
    D = 0
    while D < min(max_D, lam.size):
        stat, n_eff = tw_statistic(lam[D:])
        if math.isnan(stat):
            report.degenerate = True
            report.reason = "spectrum too flat to test"
            break
        sig = stat > crit
        report.tests.append(TWTest(float(lam[D]), float(stat), float(n_eff), bool(sig)))
        if not sig:
            break
        D += 1
    else:
        if D >= max_D:
            report.reason = f"capped at max_D={max_D}"
    return D, report


# --------------------------------------------------------------------------
# eigenmap and Nystrom extension
# --------------------------------------------------------------------------

def build_eigenmap(
    g: GenotypeMatrix,
    rows,
    alpha: float = 0.01,
    *,
    floor: float = EIGENVALUE_FLOOR,
    min_tw_n: int = MIN_TW_N,
    max_D: int = MAX_D,
) -> Eigenmap:
    """Eigenmap of the subjects in ``rows`` with its significant dimension count."""
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size < 2:
        raise ArgumentError("an eigenmap needs at least two subjects")
    stats = compute_norm_stats(g, rows)
    x = normalize(g, rows, stats)
    vals, vecs = eigendecompose(kernel_block(x, x), floor)
    D, report = significant_dimensions(vals, alpha, rows.size, min_tw_n, max_D)
    return Eigenmap(
        base_index=rows,
        coords=vecs,
        eigenvalues=vals,
        D=D,
        norm_stats=stats,
        tw_report=report,
        degenerate=vals.size == 0,
        base_x=x,
    )


def nystrom_project(
    emap: Eigenmap,
    g: GenotypeMatrix,
    rows,
    *,
    check_disjoint: bool = True,
    dims: int | None = None,
    block: int = 1024,
) -> np.ndarray:
    """Coordinates of ``rows`` on ``emap`` via ``C U diag(1/lambda)``.

    ``C`` is the cross kernel between the rows and the base sample, built
    with the base sample's normalisation.  ``dims`` limits the output to
    the leading coordinates.
    """
    rows = np.asarray(rows, dtype=np.intp)
    if check_disjoint and np.intersect1d(rows, emap.base_index).size:
        raise ArgumentError("projected rows overlap the base sample")
    k = emap.n_dims if dims is None else min(dims, emap.n_dims)
    out = np.empty((rows.size, k))
    if rows.size == 0 or k == 0:
        return out
    base_x = emap.base_x
    if base_x is None:
        base_x = normalize(g, emap.base_index, emap.norm_stats)
    proj = emap.coords[:, :k] / emap.eigenvalues[:k]
    for start in range(0, rows.size, block):
        xr = normalize(g, rows[start:start + block], emap.norm_stats)
        out[start:start + block] = kernel_block(xr, base_x) @ proj
    return out


def save_coords(path, subject_ids, coords) -> None:
    """Coordinates TSV: ``subject_id<TAB>c1<TAB>...<TAB>cK`` with a header."""
    coords = np.asarray(coords, dtype=np.float64)
    k = coords.shape[1] if coords.ndim == 2 else 0
    with open(path, "w") as fh:
        fh.write("\t".join(["subject_id"] + [f"c{i + 1}" for i in range(k)]) + "\n")
        for sid, row in zip(subject_ids, coords):
            fh.write(sid + "".join(f"\t{v:.12g}" for v in row) + "\n")


def load_coords(path) -> tuple[list[str], np.ndarray]:
    ids, rows = [], []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for line in fh:
            fields = line.rstrip("\n").split("\t")
            ids.append(fields[0])
            rows.append([float(v) for v in fields[1:]])
    return ids, np.array(rows, dtype=np.float64).reshape(len(ids), len(header) - 1)


def eigenmap_sidecar(emap: Eigenmap, base_ids=None, max_values: int = MAX_D) -> dict:
    out = {
        "D": emap.D,
        "alpha": emap.tw_report.alpha,
        "order": emap.order,
        "n_kept_snps": emap.norm_stats.m_kept,
        "eigenvalues": [float(v) for v in emap.eigenvalues[:max_values]],
        "degenerate": emap.degenerate,
        "tw_report": emap.tw_report.to_dict(),
    }
    if base_ids is not None:
        out["base_subjects"] = list(base_ids)
    return out


def save_eigenmap_sidecar(path, emap: Eigenmap, base_ids=None) -> None:
    with open(path, "w") as fh:
        json.dump(eigenmap_sidecar(emap, base_ids), fh, indent=1)
        fh.write("\n")
