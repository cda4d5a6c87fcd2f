"""Command-line entry point.

    ancestrymap dacgem   --genotypes G --base-size N --max-cluster B --seed S --out DIR
    ancestrymap cluster  --genotypes G --base-size N --seed S --out DIR
    ancestrymap match    --genotypes G --phenotypes P --tree DIR/tree.json --out DIR
    ancestrymap simulate --pops 2 --per-pop 50 --snps 500 --fst 0.1 --seed 7 --out DIR

Exit codes: 0 success, 2 bad arguments, 3 invalid input data,
4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .engine import ClusterTree, EngineConfig, Mode, grow_tree
from .errors import (
    ArgumentError,
    ConstraintError,
    DataValidationError,
    DegeneratePanelError,
)
from .genotype_io import (
    GenotypeFormat,
    PhenotypeTable,
    Status,
    load_genotypes,
    load_phenotypes,
    load_tree_records,
    maf_filter,
    save_assignments,
    save_genotypes,
    save_labels,
    save_matches,
    save_phenotypes,
    save_tree,
)
from .matching import MatchConfig, match_all_leaves
from .simulate import SimConfig, balding_nichols
from .spectral import save_coords

log = logging.getLogger("ancestrymap")

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, config: dict, inputs: dict, t0: float, extra: dict) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items() if v},
        "version": __version__,
        "backend": kernels.BACKEND,
        "python": platform.python_version(),
        "wall_seconds": time.perf_counter() - t0,
    }
    manifest.update(extra)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")


def _fraction(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ancestrymap",
        description="Recursive spectral clustering of genotypes and case-control matching.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def genotype_flags(p):
        p.add_argument("--genotypes", required=True, metavar="PATH")
        p.add_argument("--format", choices=[f.value for f in GenotypeFormat], default="tsv")
        p.add_argument("--maf", type=_fraction, default=0.05,
                       help="keep SNPs with MAF strictly above this (default 0.05)")
        p.add_argument("--alpha", type=_fraction, default=0.01)
        p.add_argument("--out", required=True, metavar="DIR")
        p.add_argument("--threads", type=int, default=1)

    for name, mode in (("dacgem", Mode.DAC_GEM), ("cluster", Mode.CLUSTER_GEM)):
        p = sub.add_parser(name, help=f"run {mode.value}")
        genotype_flags(p)
        p.add_argument("--base-size", type=int, required=True, metavar="N")
        p.add_argument("--max-cluster", type=int, required=(mode is Mode.DAC_GEM),
                       default=None, metavar="B")
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--full-base-factor", type=float, default=2.0)
        p.add_argument("--min-split-size", type=int, default=10)
        p.add_argument("--max-depth", type=int, default=32)
        p.set_defaults(mode=mode)

    p = sub.add_parser("match", help="match cases to controls within tree leaves")
    genotype_flags(p)
    p.add_argument("--phenotypes", required=True, metavar="PATH")
    p.add_argument("--tree", required=True, metavar="PATH")
    p.add_argument("--min-dim", type=int, default=2, metavar="D*")
    p.add_argument("--max-controls-per-case", type=int, default=None)
    p.add_argument("--max-cases-per-control", type=int, default=None)

    p = sub.add_parser("simulate", help="write a Balding-Nichols panel with truth labels")
    p.add_argument("--pops", type=int, required=True)
    p.add_argument("--per-pop", type=_int_list, required=True,
                   help="subjects per population (one value or one per population)")
    p.add_argument("--snps", type=int, required=True)
    p.add_argument("--fst", type=_float_list, default=[0.1])
    p.add_argument("--maf-range", type=_float_list, default=[0.05, 0.5])
    p.add_argument("--missing-rate", type=_fraction, default=0.0)
    p.add_argument("--case-rate", type=_float_list, default=None,
                   help="also write phenotypes.tsv with this case probability (per population)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=[f.value for f in GenotypeFormat], default="tsv")
    p.add_argument("--out", required=True, metavar="DIR")
    return parser


def _load_filtered(args):
    g = load_genotypes(args.genotypes, args.format)
    before = g.m
    g = maf_filter(g, args.maf)
    log.info("%d subjects, %d of %d SNPs pass MAF > %g", g.n, g.m, before, args.maf)
    if g.m == 0:
        raise DegeneratePanelError(f"{args.genotypes}: no SNPs pass MAF > {args.maf}")
    return g


def cmd_tree(args) -> int:
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = _load_filtered(args)
    max_cluster = args.max_cluster if args.max_cluster is not None else g.n + 1
    cfg = EngineConfig(
        base_size=args.base_size,
        max_cluster=max_cluster,
        alpha=args.alpha,
        seed=args.seed,
        full_base_factor=args.full_base_factor,
        min_split_size=args.min_split_size,
        mode=args.mode,
        max_depth=args.max_depth,
        threads=args.threads,
        keep_coords=True,
    )
    tree = grow_tree(g, cfg)
    save_assignments(tree.assignments(), out / "assignments.tsv")
    save_tree(tree, out / "tree.json")
    (out / "tree.dot").write_text(tree.to_dot())
    for nd in tree.nodes:
        if nd.map_info is None:
            continue
        if nd.coords is not None:
            save_coords(out / f"node_{nd.node_id}_coords.tsv",
                        [g.subject_ids[i] for i in nd.subjects], nd.coords)
        with open(out / f"node_{nd.node_id}_coords.json", "w") as fh:
            json.dump(nd.map_info, fh, indent=1)
            fh.write("\n")
    bound = cfg.matrix_order_bound
    order_ok = tree.peak_matrix_order <= bound or cfg.mode is not Mode.DAC_GEM
    _write_manifest(
        out,
        args.command,
        {**cfg.to_dict(), "maf": args.maf, "format": args.format},
        {"genotypes": args.genotypes},
        t0,
        {
            "n_subjects": g.n,
            "n_snps": g.m,
            "n_nodes": len(tree.nodes),
            "n_leaves": len(tree.leaves()),
            "peak_matrix_order": tree.peak_matrix_order,
            "matrix_order_bound": bound,
            "node_seconds": {str(nd.node_id): nd.seconds for nd in tree.nodes},
        },
    )
    if not order_ok:
        print(f"error: peak matrix order {tree.peak_matrix_order} exceeds {bound}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{len(tree.leaves())} leaves from {g.n} subjects; outputs in {out}")
    return EXIT_OK


def cmd_match(args) -> int:
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g = _load_filtered(args)
    pheno = load_phenotypes(args.phenotypes, known_subjects=g.subject_ids)
    if pheno.unknown_subjects:
        shown = ", ".join(pheno.unknown_subjects[:10])
        raise DataValidationError(
            f"{args.phenotypes}: {len(pheno.unknown_subjects)} phenotype subjects absent from "
            f"{args.genotypes}: {shown}"
        )
    tree = ClusterTree.from_records(load_tree_records(args.tree), g.subject_ids)
    cfg = MatchConfig(
        min_dim=args.min_dim,
        max_controls_per_case=args.max_controls_per_case,
        max_cases_per_control=args.max_cases_per_control,
    )
    results = match_all_leaves(tree, g, pheno, cfg, args.alpha)
    save_matches(results, out / "matches.tsv")
    single = 0
    with open(out / "match_summary.tsv", "w") as fh:
        fh.write("leaf_id\tn_cases\tn_controls\tD\td\tn_sets\tn_unmatched\t"
                 "mean_within_set_distance\ttotal_cost\tstatus\n")
        for leaf_id, res in results:
            n_cases = sum(len(s.cases) for s in res.sets) + sum(1 for u in res.unmatched if u[1] == "case")
            n_ctrl = sum(len(s.controls) for s in res.sets) + sum(1 for u in res.unmatched if u[1] == "control")
            if res.error:
                status = "ERROR"
            elif any(u[2] == "SINGLE_ARM" for u in res.unmatched):
                status = "SINGLE_ARM"
                single += 1
            else:
                status = "OK"
            D = "-" if res.D is None else res.D
            d = "-" if res.d is None else res.d
            mean = "-" if not res.n_arcs else f"{res.mean_distance:.10g}"
            fh.write(f"{leaf_id}\t{n_cases}\t{n_ctrl}\t{D}\t{d}\t{len(res.sets)}\t"
                     f"{len(res.unmatched)}\t{mean}\t{res.total_cost:.10g}\t{status}\n")
    errors = sum(1 for _, r in results if r.error)
    _write_manifest(
        out,
        "match",
        {"min_dim": args.min_dim, "max_controls_per_case": args.max_controls_per_case,
         "max_cases_per_control": args.max_cases_per_control, "alpha": args.alpha,
         "maf": args.maf, "cost_scale": cfg.cost_scale},
        {"genotypes": args.genotypes, "phenotypes": args.phenotypes, "tree": args.tree},
        t0,
        {"n_leaves": len(results), "single_arm_leaves": single, "failed_leaves": errors},
    )
    if single or errors:
        print(f"warning: {single} single-arm leaves, {errors} failed leaves", file=sys.stderr)
    print(f"matched {len(results)} leaves; outputs in {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    per_pop = args.per_pop * args.pops if len(args.per_pop) == 1 else args.per_pop
    fst = args.fst[0] if len(args.fst) == 1 else args.fst
    if len(args.maf_range) != 2:
        raise ArgumentError("--maf-range takes two values: low,high")
    cfg = SimConfig(
        n_pops=args.pops,
        subjects_per_pop=per_pop,
        m=args.snps,
        fst=fst,
        ancestral_maf_range=tuple(args.maf_range),
        missing_rate=args.missing_rate,
        seed=args.seed,
    )
    g, labels = balding_nichols(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "tsv" if args.format == "tsv" else "raw"
    save_genotypes(g, out / f"genotypes.{ext}", args.format)
    save_labels(g.subject_ids, labels, out / "labels.tsv")
    if args.case_rate is not None:
        rates = args.case_rate * args.pops if len(args.case_rate) == 1 else args.case_rate
        if len(rates) != args.pops or not all(0 <= r <= 1 for r in rates):
            raise ArgumentError("--case-rate needs one probability in [0, 1] per population")
        rng = np.random.default_rng([args.seed, 0xCA5E])
        is_case = rng.random(g.n) < np.asarray(rates)[labels]
        table = PhenotypeTable({s: Status(int(c)) for s, c in zip(g.subject_ids, is_case)})
        save_phenotypes(table, out / "phenotypes.tsv")
    _write_manifest(out, "simulate", {**cfg.__dict__, "case_rate": args.case_rate}, {}, t0,
                    {"n_subjects": g.n, "n_snps": g.m})
    print(f"wrote {g.n} x {g.m} panel to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"dacgem": cmd_tree, "cluster": cmd_tree, "match": cmd_match, "simulate": cmd_simulate}
    try:
        return handlers[args.command](args)
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (DataValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegeneratePanelError, ConstraintError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
