"""Command-line harness: generate, solve, verify, summarize, metrics, pipeline.

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
from pathlib import Path
from typing import Sequence

import networkx as nx

from . import analytics
from .cnf import Cnf, DimacsError, emit_dimacs, parse_dimacs
from .cuts import Cut, cut_from_json, certificate_system, cut_to_clause, library_cut
from .generators import Instance, gen_cycle_sat, gen_feistel_toy, gen_grid_sat, gen_random_3sat
from .lp import FarkasCertificate, verify_farkas
from .solver import SolverConfig, Verdict, solve

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
SCHEMA = "# schema=1"
COLUMNS = ["kind", "seed", "depth", "branching_events", "surviving_children", "nodes", "conflicts",
           "propagations", "lp_checks", "verdict", "lp_time_fraction"]
TIMING_COLUMN = "lp_time_fraction"
BRUTE_FORCE_VARS = 16


class UsageError(Exception):
    pass


# --- digests ------------------------------------------------------------------

def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_bytes(path: Path) -> bytes:
    """File content with the timing column or key removed."""
    data = path.read_bytes()
    if path.suffix == ".csv":
        lines = data.decode().splitlines()
        body = [lines[0]] if lines and lines[0].startswith("#") else []
        rows = list(csv.reader(lines[len(body):]))
        if rows and TIMING_COLUMN in rows[0]:
            drop = rows[0].index(TIMING_COLUMN)
            rows = [r[:drop] + r[drop + 1:] for r in rows]
        out = io.StringIO()
        csv.writer(out, lineterminator="\n").writerows(rows)
        return ("\n".join(body) + ("\n" if body else "") + out.getvalue()).encode()
    if path.suffix == ".json":
        obj = json.loads(data)
        if isinstance(obj, dict):
            obj.pop(TIMING_COLUMN, None)
        return json.dumps(obj, sort_keys=True).encode()
    return data


def canonical_digest(path: Path) -> str:
    return sha256_bytes(canonical_bytes(path))


def update_checksums(root: Path, files: Sequence[Path]) -> Path:
    sums = root / "checksums" / "sha256sums.txt"
    sums.parent.mkdir(parents=True, exist_ok=True)
    entries: dict[str, str] = {}
    if sums.exists():
        for line in sums.read_text().splitlines():
            digest, name = line.split("  ", 1)
            entries[name] = digest
    for f in files:
        entries[f.relative_to(root).as_posix()] = sha256_bytes(f.read_bytes())
    sums.write_text("".join(f"{d}  {n}\n" for n, d in sorted(entries.items())))
    return sums


# --- instances ------------------------------------------------------------------

def parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise UsageError("empty seed list")
    return seeds


def build_instance(family: str, *, n: int = 5, m: int = 4, io_pairs: int = 2, ratio: float = 4.26,
                   seed: int = 0, unsat: bool | None = None) -> Instance:
    if family == "cycle":
        return gen_cycle_sat(n)
    if family == "grid":
        return gen_grid_sat(m, seed, unsat)
    if family == "feistel":
        return gen_feistel_toy(io_pairs, seed)
    if family == "random":
        cnf = gen_random_3sat(n, ratio, seed)
        return Instance(f"random3_n{n}_s{seed}", cnf, meta={"family": "random", "n": n, "seed": seed})
    raise UsageError(f"unknown family {family!r}")


def write_instance(inst: Instance, out: Path, name: str | None = None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    stem = name or inst.name
    cnf_path = out / f"{stem}.cnf"
    cnf_path.write_bytes(emit_dimacs(inst.cnf))
    side_path = out / f"{stem}.json"
    side_path.write_text(json.dumps(inst.sidecar(), indent=2, sort_keys=True) + "\n")
    written = [cnf_path, side_path]
    for group in inst.indicators:
        cut_path = out / "inequalities" / f"{group.cut}.json"
        cut_path.parent.mkdir(parents=True, exist_ok=True)
        cut_path.write_text(json.dumps(library_cut(group.cut).to_json(), indent=2, sort_keys=True) + "\n")
        written.append(cut_path)
    return written


def load_instance(path: Path) -> tuple[Cnf, dict]:
    try:
        cnf = parse_dimacs(path.read_bytes())
    except (OSError, DimacsError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    side_path = path.with_suffix(".json")
    sidecar = json.loads(side_path.read_text()) if side_path.exists() else {"indicators": []}
    return cnf, sidecar


def resolve_cuts(sidecar: dict, cut_files: Sequence[Path]) -> list[Cut]:
    """Bind each requested cut to every indicator group of the same name."""
    groups = sidecar.get("indicators", [])
    if cut_files:
        try:
            bases = [cut_from_json(json.loads(p.read_text())) for p in cut_files]
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot load cut file: {exc}") from exc
    else:
        bases = [library_cut(name) for name in dict.fromkeys(g["cut"] for g in groups)]
    cuts = []
    for base in bases:
        matching = [g for g in groups if g["cut"] == base.name]
        if not matching:
            raise UsageError(f"unresolved indicator bindings for cut {base.name}")
        for g in matching:
            cuts.append(base.with_bindings({int(k): int(v) for k, v in g["bindings"].items()}))
    return cuts


# --- solve --------------------------------------------------------------------------

def run_solves(cnf: Cnf, cuts: Sequence[Cut], mode: str, seeds: Sequence[int], max_lp: int,
               conflict_limit: int | None = None):
    rows, certs, results = [], [], []
    for seed in seeds:
        config = SolverConfig(seed=seed, max_lp_checks_per_node=max_lp, enable_ngcc=mode == "ngcc",
                              conflict_limit=conflict_limit)
        result = solve(cnf, cuts, config)
        results.append(result)
        log = result.stats
        for depth, events, survivors in log.depth_rows():
            rows.append({"kind": "depth", "seed": seed, "depth": depth, "branching_events": events,
                         "surviving_children": survivors})
        events = sum(e for _, e, _ in log.depth_rows())
        survivors = sum(s for _, _, s in log.depth_rows())
        rows.append({"kind": "run", "seed": seed, "depth": "", "branching_events": events,
                     "surviving_children": survivors, "nodes": log.nodes_explored, "conflicts": log.conflicts,
                     "propagations": log.propagations, "lp_checks": log.lp_checks,
                     "verdict": result.verdict.value, "lp_time_fraction": f"{log.lp_time_fraction:.6f}"})
        for cc in result.learned_certified:
            cut = next(c for c in cuts if c.name == cc.cut_name
                       and cut_to_clause(c, cc.slots) == cc.clause)
            certs.append({"index": len(certs), "seed": seed, "cut": cut.to_json(),
                          "bindings": {str(k): v for k, v in sorted(cut.bindings.items())},
                          **cc.to_json()})
    return rows, certs, results


def write_run_csv(rows: Sequence[dict], path: Path | None) -> str:
    out = io.StringIO()
    out.write(SCHEMA + "\n")
    writer = csv.DictWriter(out, COLUMNS, lineterminator="\n", restval="")
    writer.writeheader()
    writer.writerows(rows)
    text = out.getvalue()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return text


def read_run_csv(path: Path) -> list[dict]:
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != SCHEMA:
        raise UsageError(f"{path}: missing or unsupported schema line")
    reader = csv.DictReader(lines[1:])
    if reader.fieldnames != COLUMNS:
        raise UsageError(f"{path}: column mismatch")
    return list(reader)


# --- verify -------------------------------------------------------------------------

def implied_by(cnf: Cnf, clause_ints: Sequence[int]) -> bool:
    """Every model of the formula satisfies the clause (brute force)."""
    n = cnf.num_vars
    clauses = [[(lit.var - 1, lit.positive) for lit in c] for c in cnf.clauses]
    for bits in range(1 << n):
        if any((bits >> (abs(l) - 1) & 1) == (l > 0) for l in clause_ints):
            continue
        if all(any((bits >> v & 1) == pos for v, pos in c) for c in clauses):
            return False
    return True


def verify_entries(entries: Sequence[dict], cnf: Cnf | None) -> list[tuple[int, str]]:
    failures = []
    for i, entry in enumerate(entries):
        idx = entry.get("index", i)
        try:
            cut = cut_from_json(entry["cut"]).with_bindings({int(k): v for k, v in entry["bindings"].items()})
            slots = tuple(entry["slots"])
            cert = FarkasCertificate.from_json(entry["certificate"])
            system = certificate_system(cut, slots)
            if not verify_farkas(system, cert):
                failures.append((idx, "certificate does not verify"))
                continue
            clause = cut_to_clause(cut, slots)
            if clause.to_ints() != list(entry["clause"]):
                failures.append((idx, "clause does not match the cut and slots"))
                continue
            if cnf is not None and cnf.num_vars <= BRUTE_FORCE_VARS and not implied_by(cnf, entry["clause"]):
                failures.append((idx, "clause is not implied by the instance"))
        except (KeyError, ValueError, TypeError) as exc:
            failures.append((idx, f"malformed entry: {exc}"))
    return failures


# --- summarize ------------------------------------------------------------------------

def summarize_rows(rows: Sequence[dict], confidence: float, n_eff: float | None) -> dict:
    counts: dict[int, list[int]] = {}
    per_seed: dict[int, dict[int, tuple[int, int]]] = {}
    runs = [r for r in rows if r["kind"] == "run"]
    for r in rows:
        if r["kind"] != "depth":
            continue
        d, e, s = int(r["depth"]), int(r["branching_events"]), int(r["surviving_children"])
        c = counts.setdefault(d, [0, 0])
        c[0] += e
        c[1] += s
        per_seed.setdefault(int(r["seed"]), {})[d] = (e, s)
    summary: dict = {
        "runs": len(runs),
        "verdicts": {v: sum(r["verdict"] == v for r in runs) for v in sorted({r["verdict"] for r in runs})},
        "mean_nodes": sum(int(r["nodes"]) for r in runs) / len(runs) if runs else None,
        "total_nodes": sum(int(r["nodes"]) for r in runs),
        "lp_time_fraction": (sum(float(r["lp_time_fraction"]) for r in runs) / len(runs)) if runs else None,
    }
    if not counts:
        summary.update(rho_tilde=None, ci=None, effective_base=None, delta_bits=None, per_depth=[])
        return summary
    ds = analytics.depth_stats_from_counts({d: tuple(v) for d, v in counts.items()}, confidence)
    summary["rho_tilde"] = round(ds.rho_tilde, 12)
    summary["effective_base"] = round(ds.effective_base, 12)
    summary["per_depth"] = [{"depth": r.depth, "branching_events": r.events, "surviving_children": r.survivors,
                             "rho": round(r.rho, 12), "ci": [round(r.ci_low, 12), round(r.ci_high, 12)]}
                            for r in ds.per_depth]
    seed_rhos = [analytics.depth_stats_from_counts(c, confidence).rho_tilde for _, c in sorted(per_seed.items())]
    if len(seed_rhos) >= 2:
        mean, lo, hi = analytics.t_interval(seed_rhos, confidence)
        _, blo, bhi = analytics.bootstrap_interval(seed_rhos, confidence)
        summary["ci"] = {"per_seed_mean": round(mean, 12), "t": [round(lo, 12), round(hi, 12)],
                         "bootstrap": [round(blo, 12), round(bhi, 12)]}
    else:
        summary["ci"] = None
    rho = ds.rho_tilde
    if n_eff is not None and 0 < rho < 1:
        summary["delta_bits"] = {"n_eff": n_eff, "bits": round(analytics.delta_bits(rho, n_eff), 9)}
    else:
        summary["delta_bits"] = None
    summary["required_samples"] = {str(r): analytics.required_samples(r) for r in (0.1, 0.15, 0.25, 0.5)}
    if 0 < rho < 1:
        summary["required_samples"]["rho_tilde"] = analytics.required_samples(rho)
    return summary


def plot_csv(summary: dict) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["depth", "rho", "ci_lo", "ci_hi"])
    for r in summary.get("per_depth", []):
        w.writerow([r["depth"], r["rho"], r["ci"][0], r["ci"][1]])
    return out.getvalue()


# --- subcommands ----------------------------------------------------------------------------

def cmd_generate(args) -> int:
    inst = build_instance(args.family, n=args.n, m=args.m, io_pairs=args.io_pairs, ratio=args.ratio,
                          seed=args.seed, unsat=args.unsat)
    out = Path(args.out)
    written = write_instance(inst, out, args.name)
    update_checksums(out, written)
    for p in written:
        print(p.relative_to(out).as_posix())
    return EXIT_OK


def cmd_solve(args) -> int:
    path = Path(args.instance)
    cnf, sidecar = load_instance(path)
    cuts = resolve_cuts(sidecar, [Path(p) for p in args.cuts or ()]) if args.mode == "ngcc" else []
    seeds = parse_seeds(args.seeds) if args.seeds else [args.seed]
    rows, certs, results = run_solves(cnf, cuts, args.mode, seeds, args.max_lp_per_node, args.conflict_limit)
    text = write_run_csv(rows, Path(args.out) if args.out else None)
    if not args.out:
        sys.stdout.write(text)
    if args.mode == "ngcc":
        cert_path = Path(args.cert_log) if args.cert_log else (
            Path(args.out).with_suffix(".certs.jsonl") if args.out else None)
        if cert_path is not None:
            cert_path.write_text("".join(json.dumps(c, sort_keys=True) + "\n" for c in certs))
    if any(r.verdict is Verdict.UNKNOWN for r in results):
        return EXIT_CAP
    return EXIT_OK


def cmd_verify(args) -> int:
    cnf, _ = load_instance(Path(args.instance))
    try:
        entries = [json.loads(line) for line in Path(args.certificate_log).read_text().splitlines() if line.strip()]
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read certificate log: {exc}") from exc
    failures = verify_entries(entries, cnf)
    implication = "checked" if cnf.num_vars <= BRUTE_FORCE_VARS else "skipped (too many variables)"
    print(f"{len(entries)} certificates, {len(failures)} failed, implication {implication}")
    for idx, why in failures:
        print(f"FAIL {idx}: {why}")
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_summarize(args) -> int:
    rows = list(itertools.chain.from_iterable(read_run_csv(Path(p)) for p in args.logs))
    summary = summarize_rows(rows, args.confidence, args.n_eff)
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.plot_csv:
        Path(args.plot_csv).write_text(plot_csv(summary))
    return EXIT_OK


def cmd_metrics(args) -> int:
    what = args.metric
    if what == "delta-bits":
        result = {"delta_bits": analytics.delta_bits(args.rho, args.n_eff),
                  "effective_base": analytics.effective_base(args.rho)}
    elif what == "samples":
        result = {"required_samples": analytics.required_samples(args.rho, args.constant)}
    elif what == "theta":
        result = {"theta": analytics.theta_odd_cycle(args.k)}
    elif what == "alpha":
        result = {"alpha": analytics.graph_alpha(nx.cycle_graph(args.cycle))}
    elif what == "density":
        gm = analytics.odd_cycle_metrics(args.k)
        result = {"alpha": gm.alpha, "theta": gm.theta, "density": gm.density}
    elif what == "cifp":
        result = {"bound": analytics.cyclic_exclusivity_bound(args.n, args.eps)}
    elif what == "ring":
        result = {"margin": analytics.ring_violation_margin(args.eta, args.n, args.c, args.eps)}
    elif what == "budget":
        result = {"verdict": analytics.budget_check(args.values, args.topology).value}
    elif what == "tritter":
        result = {"witness": analytics.tritter_witness(*(complex(a) for a in args.amplitudes))}
    elif what == "visibility":
        est, se = analytics.epsilon_from_visibility(args.v0, args.v_dec, args.sigma_v0, args.sigma_vdec)
        result = {"epsilon": est, "std_error": se}
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(what)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    """generate -> solve -> verify -> summarize from a JSON manifest, with digests."""
    manifest = json.loads(Path(args.manifest).read_text())
    out = Path(args.out)
    inst_dir = out / "cnf"
    written: list[Path] = []
    instance_paths = []
    for item in manifest["instances"]:
        item = dict(item)
        family = item.pop("family")
        name = item.pop("name", None)
        inst = build_instance(family, **item)
        files = write_instance(inst, inst_dir, name)
        written += files
        instance_paths.append(files[0])
    update_checksums(out, written)
    inputs = {p.relative_to(out).as_posix(): sha256_bytes(p.read_bytes()) for p in written}
    seeds = manifest.get("seeds", [0])
    max_lp = manifest.get("max_lp_per_node", 4)
    logs: dict[str, str] = {}
    status = EXIT_OK
    for path in instance_paths:
        cnf, sidecar = load_instance(path)
        for mode in manifest.get("modes", ["baseline", "ngcc"]):
            cuts = resolve_cuts(sidecar, []) if mode == "ngcc" else []
            rows, certs, results = run_solves(cnf, cuts, mode, seeds, max_lp, manifest.get("conflict_limit"))
            stem = out / "results" / f"{path.stem}_{mode}"
            write_run_csv(rows, stem.with_suffix(".csv"))
            produced = [stem.with_suffix(".csv")]
            if mode == "ngcc":
                cert_path = stem.with_suffix(".certs.jsonl")
                cert_path.write_text("".join(json.dumps(c, sort_keys=True) + "\n" for c in certs))
                produced.append(cert_path)
                if verify_entries(certs, cnf):
                    status = EXIT_VERIFY
            summary = summarize_rows(rows, manifest.get("confidence", 0.95), manifest.get("n_eff"))
            summary_path = stem.with_suffix(".summary.json")
            summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
            produced.append(summary_path)
            for p in produced:
                logs[p.relative_to(out).as_posix()] = canonical_digest(p)
            if any(r.verdict is Verdict.UNKNOWN for r in results) and status == EXIT_OK:
                status = EXIT_CAP
    for name, digest in inputs.items():
        if sha256_bytes((out / name).read_bytes()) != digest:
            print(f"input {name} changed during the run")
            status = EXIT_VERIFY
    record = {"manifest": manifest, "inputs": inputs, "logs": logs,
              "combined": sha256_bytes(json.dumps([inputs, logs], sort_keys=True).encode())}
    (out / "checksums" / "run_manifest.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    print(record["combined"])
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngccsat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded instance, its sidecar and cut files")
    g.add_argument("--family", required=True, choices=["cycle", "grid", "feistel", "random"])
    g.add_argument("--n", type=int, default=5)
    g.add_argument("--m", type=int, default=4)
    g.add_argument("--io-pairs", type=int, default=2)
    g.add_argument("--ratio", type=float, default=4.26)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--unsat", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--name")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="run baseline or NGCC search over seeds")
    s.add_argument("instance")
    s.add_argument("--cuts", action="append")
    s.add_argument("--mode", choices=["baseline", "ngcc"], default="ngcc")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--seeds")
    s.add_argument("--max-lp-per-node", type=int, default=4)
    s.add_argument("--conflict-limit", type=int)
    s.add_argument("--out")
    s.add_argument("--cert-log")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="re-check a certificate log against an instance")
    v.add_argument("certificate_log")
    v.add_argument("instance")
    v.set_defaults(func=cmd_verify)

    z = sub.add_parser("summarize", help="pruning statistics from run CSVs")
    z.add_argument("logs", nargs="+")
    z.add_argument("--confidence", type=float, default=0.95)
    z.add_argument("--n-eff", type=float)
    z.add_argument("--out")
    z.add_argument("--plot-csv")
    z.set_defaults(func=cmd_summarize)

    mt = sub.add_parser("metrics", help="closed-form calculators")
    msub = mt.add_subparsers(dest="metric", required=True)
    p = msub.add_parser("delta-bits")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--n-eff", type=float, required=True)
    p = msub.add_parser("samples")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--constant", type=float, default=10)
    p = msub.add_parser("theta")
    p.add_argument("--k", type=int, required=True)
    p = msub.add_parser("alpha")
    p.add_argument("--cycle", type=int, required=True)
    p = msub.add_parser("density")
    p.add_argument("--k", type=int, required=True)
    p = msub.add_parser("cifp")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.0)
    p = msub.add_parser("ring")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.0)
    p = msub.add_parser("budget")
    p.add_argument("--topology", choices=["fo8", "clover"], required=True)
    p.add_argument("values", type=float, nargs="+")
    p = msub.add_parser("tritter")
    p.add_argument("amplitudes", nargs=3)
    p = msub.add_parser("visibility")
    p.add_argument("--v0", type=float, required=True)
    p.add_argument("--v-dec", type=float, required=True)
    p.add_argument("--sigma-v0", type=float, default=0.0)
    p.add_argument("--sigma-vdec", type=float, default=0.0)
    mt.set_defaults(func=cmd_metrics)

    pl = sub.add_parser("pipeline", help="generate, solve, verify and summarize from a manifest")
    pl.add_argument("manifest")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
