"""Genotype and phenotype tables: parsing, validation, filtering, writers.

Genotypes are stored as an ``int8`` matrix of minor-allele counts with
``MISSING`` (-1) marking absent calls.  Subject order everywhere follows
the input file order.
"""

from __future__ import annotations

import enum
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, DataValidationError, ParseError

log = logging.getLogger(__name__)

MISSING = -1
MISSING_TOKEN = "NA"

PLINK_RAW_LEADING = ("FID", "IID", "PAT", "MAT", "SEX", "PHENOTYPE")


class GenotypeFormat(str, enum.Enum):
    TSV = "tsv"
    PLINK_RAW = "plink-raw"


class Status(enum.IntEnum):
    CONTROL = 0
    CASE = 1


def _check_unique(ids: Sequence[str], what: str) -> None:
    if len(set(ids)) != len(ids):
        seen = set()
        dups = []
        for s in ids:
            if s in seen and s not in dups:
                dups.append(s)
            seen.add(s)
        raise DataValidationError(f"duplicate {what}: {', '.join(dups[:10])}")


@dataclass(frozen=True)
class GenotypeMatrix:
    """Subjects x SNPs minor-allele counts.

    ``values`` holds 0, 1, 2 or ``MISSING``.
    """

    subject_ids: tuple[str, ...]
    snp_ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "subject_ids", tuple(self.subject_ids))
        object.__setattr__(self, "snp_ids", tuple(self.snp_ids))
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise DataValidationError("genotype values must be a 2-D array")
        if values.shape != (len(self.subject_ids), len(self.snp_ids)):
            raise DataValidationError(
                f"genotype shape {values.shape} does not match "
                f"{len(self.subject_ids)} subjects x {len(self.snp_ids)} SNPs"
            )
        bad = ~np.isin(values, (0, 1, 2, MISSING))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DataValidationError(
                f"invalid genotype {values[i, j]!r} for subject "
                f"{self.subject_ids[i]} at SNP {self.snp_ids[j]}"
            )
        _check_unique(self.subject_ids, "subject ids")
        _check_unique(self.snp_ids, "SNP ids")
        values = values.astype(np.int8, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.subject_ids)

    @property
    def m(self) -> int:
        return len(self.snp_ids)

    @property
    def missing(self) -> np.ndarray:
        return self.values == MISSING

    def subset_snps(self, columns) -> "GenotypeMatrix":
        columns = np.asarray(columns, dtype=np.intp)
        return GenotypeMatrix(
            self.subject_ids,
            tuple(self.snp_ids[j] for j in columns),
            self.values[:, columns],
        )

    def subset_subjects(self, rows) -> "GenotypeMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return GenotypeMatrix(
            tuple(self.subject_ids[i] for i in rows),
            self.snp_ids,
            self.values[rows],
        )

    def index_of(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.subject_ids)}


@dataclass
class PhenotypeTable:
    """Case/control status keyed by subject id, in file order.

    ``unknown_subjects`` lists ids that were checked against a genotype
    panel and not found there; they are kept in ``status``.
    """

    status: dict[str, Status] = field(default_factory=dict)
    unknown_subjects: tuple[str, ...] = ()

    def __len__(self):
        return len(self.status)

    def __contains__(self, subject_id):
        return subject_id in self.status

    def __getitem__(self, subject_id) -> Status:
        return self.status[subject_id]

    def get(self, subject_id, default=None):
        return self.status.get(subject_id, default)

    @property
    def cases(self) -> list[str]:
        return [s for s, v in self.status.items() if v is Status.CASE]

    @property
    def controls(self) -> list[str]:
        return [s for s, v in self.status.items() if v is Status.CONTROL]

    def flag_unknown(self, known_subjects: Iterable[str]) -> "PhenotypeTable":
        known = set(known_subjects)
        unknown = tuple(s for s in self.status if s not in known)
        if unknown:
            log.warning("%d phenotype subjects absent from genotypes", len(unknown))
        return PhenotypeTable(dict(self.status), unknown)


# --------------------------------------------------------------------------
# genotype readers / writers
# --------------------------------------------------------------------------

_TOKEN_VALUES = {"0": 0, "1": 1, "2": 2, MISSING_TOKEN: MISSING}


def _tokens_to_values(rows: list[list[str]], linenos: list[int], path) -> np.ndarray:
    if not rows or not rows[0]:
        return np.zeros((len(rows), 0), dtype=np.int8)
    tokens = np.array(rows, dtype=object)
    out = np.full(tokens.shape, 99, dtype=np.int8)
    for tok, val in _TOKEN_VALUES.items():
        out[tokens == tok] = val
    bad = out == 99
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ParseError(
            f"invalid genotype token {tokens[i, j]!r} (expected 0, 1, 2 or NA)",
            path,
            linenos[int(i)],
        )
    return out


def _read_table(path, split, leading: int, id_col: int, header_check=None):
    path = Path(path)
    subjects: list[str] = []
    rows: list[list[str]] = []
    linenos: list[int] = []
    with open(path) as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise ParseError("missing header line", path, 1)
        header = split(header_line.rstrip("\r\n"))
        if header_check is not None:
            header_check(header, path)
        width = len(header)
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = split(line)
            if len(fields) != width:
                raise ParseError(
                    f"expected {width} fields, found {len(fields)}", path, lineno
                )
            subjects.append(fields[id_col])
            rows.append(fields[leading:])
            linenos.append(lineno)
    return header[leading:], subjects, rows, linenos


def _tsv_split(line: str) -> list[str]:
    return line.split("\t")


def _ws_split(line: str) -> list[str]:
    return line.split()


def _plink_header_check(header, path):
    if tuple(header[:6]) != PLINK_RAW_LEADING:
        raise ParseError(
            "PLINK raw header must start with " + " ".join(PLINK_RAW_LEADING), path, 1
        )


def load_genotypes(path, format: GenotypeFormat | str = GenotypeFormat.TSV) -> GenotypeMatrix:
    """Read a genotype file into a validated :class:`GenotypeMatrix`.

    Parameters
    ----------
    path
        Genotype TSV (``subject_id<TAB>snp...`` header) or PLINK ``.raw``.
    format
        ``"tsv"`` or ``"plink-raw"``.

    Raises
    ------
    ParseError
        On a malformed row (line number reported) or an unknown token.
    DataValidationError
        On duplicate subject or SNP ids.
    """
    format = GenotypeFormat(format)
    if format is GenotypeFormat.TSV:
        snps, subjects, rows, linenos = _read_table(path, _tsv_split, 1, 0)
    else:
        snps, subjects, rows, linenos = _read_table(path, _ws_split, 6, 1, _plink_header_check)
    values = _tokens_to_values(rows, linenos, path)
    return GenotypeMatrix(tuple(subjects), tuple(snps), values.reshape(len(subjects), len(snps)))


def save_genotypes(g: GenotypeMatrix, path, format: GenotypeFormat | str = GenotypeFormat.TSV) -> None:
    format = GenotypeFormat(format)
    tokens = np.array(["0", "1", "2"], dtype=object)
    with open(path, "w") as fh:
        if format is GenotypeFormat.TSV:
            sep = "\t"
            fh.write(sep.join(("subject_id",) + g.snp_ids) + "\n")
        else:
            sep = " "
            fh.write(sep.join(PLINK_RAW_LEADING + g.snp_ids) + "\n")
        for sid, row in zip(g.subject_ids, g.values):
            cells = np.where(row == MISSING, MISSING_TOKEN, tokens[np.clip(row, 0, 2)])
            lead = (sid,) if format is GenotypeFormat.TSV else (sid, sid, "0", "0", "0", "-9")
            fh.write(sep.join(lead + tuple(cells)) + "\n")


# --------------------------------------------------------------------------
# filtering and imputation
# --------------------------------------------------------------------------

def allele_frequencies(g: GenotypeMatrix, rows=None) -> np.ndarray:
    """Per-SNP frequency of the counted allele over non-missing calls.

    Columns with no calls get ``nan``.
    """
    v = g.values if rows is None else g.values[np.asarray(rows, dtype=np.intp)]
    present = v != MISSING
    counts = present.sum(axis=0)
    sums = np.where(present, v, 0).sum(axis=0, dtype=np.int64)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / (2.0 * np.maximum(counts, 1)), np.nan)


def minor_allele_frequency(g: GenotypeMatrix) -> np.ndarray:
    p = allele_frequencies(g)
    return np.minimum(p, 1.0 - p)


def maf_filter(g: GenotypeMatrix, threshold: float) -> GenotypeMatrix:
    """Keep SNPs whose MAF is strictly greater than ``threshold``.

    SNPs without any non-missing call are dropped with a warning.
    """
    if not 0.0 <= threshold <= 0.5:
        raise ArgumentError(f"MAF threshold must lie in [0, 0.5], got {threshold}")
    maf = minor_allele_frequency(g)
    empty = np.isnan(maf)
    if empty.any():
        warnings.warn(f"dropping {int(empty.sum())} SNPs with no genotype calls")
    keep = np.flatnonzero(~empty & (np.nan_to_num(maf, nan=-1.0) > threshold))
    return g.subset_snps(keep)


def impute_missing(g: GenotypeMatrix, means, rows=None) -> np.ndarray:
    """Dense float copy of ``g`` (optionally a row subset) with MISSING -> ``means``."""
    means = np.asarray(means, dtype=np.float64)
    if means.shape != (g.m,):
        raise ArgumentError(f"means has length {means.size}, expected {g.m}")
    v = g.values if rows is None else g.values[np.asarray(rows, dtype=np.intp)]
    out = v.astype(np.float64)
    miss = v == MISSING
    if miss.any():
        out[miss] = np.broadcast_to(means, v.shape)[miss]
    return out


# --------------------------------------------------------------------------
# phenotypes
# --------------------------------------------------------------------------

def load_phenotypes(path, known_subjects: Iterable[str] | None = None) -> PhenotypeTable:
    """Read ``subject_id<TAB>status`` lines (1 = case, 0 = control, no header)."""
    status: dict[str, Status] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 2 fields, found {len(fields)}", path, lineno)
            sid, tok = fields
            if tok not in ("0", "1"):
                raise ParseError(f"unknown status token {tok!r} (expected 1 or 0)", path, lineno)
            if sid in status:
                raise DataValidationError(f"duplicate phenotype subject {sid} at line {lineno}")
            status[sid] = Status(int(tok))
    table = PhenotypeTable(status)
    if known_subjects is not None:
        table = table.flag_unknown(known_subjects)
    return table


def save_phenotypes(table: PhenotypeTable, path) -> None:
    with open(path, "w") as fh:
        for sid, st in table.status.items():
            fh.write(f"{sid}\t{int(st)}\n")


# --------------------------------------------------------------------------
# result writers
# --------------------------------------------------------------------------

ASSIGNMENT_HEADER = ("subject_id", "node_path", "leaf_id")


def save_assignments(rows: Iterable[tuple[str, str, int]], path) -> None:
    """Write ``subject_id<TAB>node_path<TAB>leaf_id`` rows under a header."""
    with open(path, "w") as fh:
        fh.write("\t".join(ASSIGNMENT_HEADER) + "\n")
        for sid, node_path, leaf in rows:
            fh.write(f"{sid}\t{node_path}\t{leaf}\n")


def load_assignments(path) -> list[tuple[str, str, int]]:
    out = []
    with open(path) as fh:
        header = fh.readline().rstrip("\r\n").split("\t")
        if tuple(header) != ASSIGNMENT_HEADER:
            raise ParseError("bad assignments header", path, 1)
        for lineno, line in enumerate(fh, start=2):
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != 3:
                raise ParseError(f"expected 3 fields, found {len(fields)}", path, lineno)
            out.append((fields[0], fields[1], int(fields[2])))
    return out


def save_tree(tree, path) -> None:
    """Write a cluster tree's node records as a JSON array."""
    with open(path, "w") as fh:
        json.dump(tree.to_records(), fh, indent=1)
        fh.write("\n")


def load_tree_records(path) -> list[dict]:
    with open(path) as fh:
        records = json.load(fh)
    if not isinstance(records, list):
        raise DataValidationError(f"{path}: tree JSON must be an array of node records")
    return records


MATCH_HEADER = ("leaf_id", "set_id", "subject_id", "role", "reason")


def save_matches(results, path) -> None:
    """Write ``(leaf_id, MatchResult)`` pairs as the matches TSV.

    Matched subjects carry reason ``-``; unmatched ones carry set id ``-``.
    """
    with open(path, "w") as fh:
        fh.write("\t".join(MATCH_HEADER) + "\n")
        for leaf_id, res in results:
            for ms in res.sets:
                for sid in ms.cases:
                    fh.write(f"{leaf_id}\t{ms.set_id}\t{sid}\tcase\t-\n")
                for sid in ms.controls:
                    fh.write(f"{leaf_id}\t{ms.set_id}\t{sid}\tcontrol\t-\n")
            for sid, role, reason in res.unmatched:
                fh.write(f"{leaf_id}\t-\t{sid}\t{role}\t{reason}\n")


def load_matches(path) -> list[tuple[int, str, str, str, str]]:
    out = []
    with open(path) as fh:
        header = fh.readline().rstrip("\r\n").split("\t")
        if tuple(header) != MATCH_HEADER:
            raise ParseError("bad matches header", path, 1)
        for lineno, line in enumerate(fh, start=2):
            fields = line.rstrip("\r\n").split("\t")
            if len(fields) != 5:
                raise ParseError(f"expected 5 fields, found {len(fields)}", path, lineno)
            out.append((int(fields[0]), fields[1], fields[2], fields[3], fields[4]))
    return out


def save_labels(subject_ids: Sequence[str], labels, path) -> None:
    """Truth labels as ``subject_id<TAB>pop_index`` (no header)."""
    with open(path, "w") as fh:
        for sid, lab in zip(subject_ids, labels):
            fh.write(f"{sid}\t{int(lab)}\n")


def load_labels(path) -> dict[str, int]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            sid, lab = line.rstrip("\r\n").split("\t")
            out[sid] = int(lab)
    return out
