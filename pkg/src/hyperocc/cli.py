"""``hyperocc`` command line: generate, scramble, eval, search, baseline.

Exit codes: 0 success, 1 usage error, 2 data error, 3 resource cap exceeded.
"""
import argparse
import csv
import hashlib
import json
import logging
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .dataset import PlantSpec, generate_planted, load_csv, write_csv
from .errors import CapExceededError, DataError
from .metrics import (
    UNDEF,
    pairwise_matrices,
    score_network,
    top_reports,
    write_reports_json,
    write_reports_tsv,
)
from .network import FeatureNetwork
from .scramble import DEFAULT_EXACT_CAP, DEFAULT_SAMPLE_SIZE, ScrambleSource, enumerate_exact, sample_mc, write_sds_csv

log = logging.getLogger("hyperocc")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CAP = 0, 1, 2, 3

_PLANT = re.compile(r"^\s*([\d,\-\s]+):\s*Q(\d+)\s*->\s*(\d+)\s*(?:@\s*([0-9.eE+-]+))?\s*$")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_index_list(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            if hi < lo:
                raise UsageError(f"bad range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def parse_plant(text, noise=0.0) -> PlantSpec:
    """``"0-5:Q6->6"`` = target 6 is TRUE iff at least 6 of columns 0..5 are; ``@0.05`` sets the noise."""
    m = _PLANT.match(text)
    if not m:
        raise UsageError(f"cannot parse plant {text!r}; expected e.g. '0-5:Q6->6' or '0-4:Q3->19@0.05'")
    rel = parse_index_list(m.group(1))
    noise_rate = float(m.group(4)) if m.group(4) else noise
    spec = PlantSpec(tuple(rel), int(m.group(2)), int(m.group(3)), noise_rate)
    try:
        spec.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return spec


@dataclass
class RunManifest:
    command: str
    config: dict
    dataset_sha256: str
    seed: object
    tool_version: str = __version__
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def run_id(self) -> str:
        """Content id over everything except timings, so identical runs share it."""
        key = {k: v for k, v in asdict(self).items() if k not in ("timings", "artifacts")}
        return hashlib.sha256(json.dumps(key, sort_keys=True, default=str).encode()).hexdigest()[:16]

    def write(self, path) -> None:
        doc = asdict(self)
        doc["run_id"] = self.run_id
        Path(path).write_text(json.dumps(doc, indent=2, default=str) + "\n")


def _manifest_ref(manifest: RunManifest, manifest_path) -> dict:
    return {"run_id": manifest.run_id, "manifest": Path(manifest_path).name}


def _sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")


def _add_sds_flags(p, default_mode):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", dest="mode", action="store_const", const="exact", help="exact weighted enumeration")
    g.add_argument("--mc", dest="mode", action="store_const", const="mc", help="Monte-Carlo sample")
    p.set_defaults(mode=default_mode)
    p.add_argument("--size", type=int, default=DEFAULT_SAMPLE_SIZE, help="Monte-Carlo sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=DEFAULT_EXACT_CAP, help="row cap for exact enumeration")


def _build_sds(ds, mode, size, seed, cap):
    src = ScrambleSource.from_dataset(ds)
    if mode == "auto":
        mode = "exact" if src.combination_count() <= cap else "mc"
    if mode == "exact":
        try:
            return enumerate_exact(src, cap=cap)
        except CapExceededError as exc:
            raise CapExceededError(str(exc).replace("use Monte-Carlo sampling instead", "pass --mc to sample instead")) from None
    return sample_mc(src, size, seed)


def cmd_generate(args) -> int:
    if not args.plant:
        raise UsageError("at least one --plant is required")
    plants = [parse_plant(p, args.noise) for p in args.plant]
    t0 = time.perf_counter()
    try:
        ds = generate_planted(args.rows, args.background, plants, args.seed, exhaustive=args.exhaustive)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    write_csv(ds, out)
    manifest = RunManifest(
        "generate",
        {
            "rows": args.rows,
            "background": args.background,
            "exhaustive": args.exhaustive,
            "plants": [p.to_dict() for p in plants],
        },
        ds.fingerprint(),
        args.seed,
        artifacts=[out.name],
        timings={"total_s": time.perf_counter() - t0},
    )
    manifest.write(_sidecar(out))
    log.info("wrote %s (%d x %d)", out, ds.n_rows, ds.n_cols)
    return EXIT_OK


def cmd_scramble(args) -> int:
    t0 = time.perf_counter()
    ds = load_csv(args.input, binarize=args.binarize)
    sds = _build_sds(ds, args.mode, args.size, args.seed, args.cap)
    write_sds_csv(sds, args.out)
    RunManifest(
        "scramble",
        {"mode": sds.mode, "size": sds.n_rows, "cap": args.cap, "binarize": args.binarize},
        ds.fingerprint(),
        args.seed if sds.mode == "monte_carlo" else None,
        artifacts=[Path(args.out).name],
        timings={"total_s": time.perf_counter() - t0},
    ).write(_sidecar(args.out))
    log.info("wrote %s (%s, %d rows)", args.out, sds.mode, sds.n_rows)
    return EXIT_OK


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    ds = load_csv(args.input)
    try:
        net = FeatureNetwork.load(args.network)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"{args.network}: invalid network: {exc}") from None
    if net.input_names != ds.columns:
        raise DataError(f"network inputs {list(net.input_names)} do not match dataset columns {list(ds.columns)}")
    sds = _build_sds(ds, args.mode, args.size, args.seed, args.cap)
    reports = top_reports(score_network(net, ds, sds), args.top)
    manifest = RunManifest(
        "eval",
        {"network": net.to_dict(), "sds_mode": sds.mode, "size": sds.n_rows, "top": args.top},
        ds.fingerprint(),
        args.seed if sds.mode == "monte_carlo" else None,
    )
    if args.out:
        write_reports_tsv(reports, args.out)
        manifest.artifacts.append(Path(args.out).name)
    else:
        write_reports_tsv(reports, "/dev/stdout")
    manifest_path = _sidecar(args.out or args.json or "eval")
    if args.json:
        write_reports_json(reports, args.json, **_manifest_ref(manifest, manifest_path))
        manifest.artifacts.append(Path(args.json).name)
    manifest.timings = {"total_s": time.perf_counter() - t0}
    if args.out or args.json:
        manifest.write(manifest_path)
    return EXIT_OK


def _search_config(args, base=None):
    """Layered config: checkpoint (when resuming), then the config file, then flags."""
    from .search import SearchConfig

    doc = dict(base or {})
    if args.config:
        try:
            doc.update(SearchConfig.read_flat(args.config))
        except (OSError, ValueError) as exc:
            raise UsageError(f"bad config {args.config}: {exc}") from None
    overrides = {
        "algo": args.algo,
        "generations": args.generations,
        "population": args.population,
        "seed": args.seed,
        "workers": args.workers,
        "sds_sample_size": args.sds_size,
        "sds_mode": args.sds_mode,
        "checkpoint_every": args.checkpoint_every,
        "training": args.training,
        "top_h": args.top_h,
    }
    if args.layers:
        try:
            overrides["layer_sizes"] = [int(x) for x in args.layers.split(",")]
        except ValueError:
            raise UsageError(f"bad --layers {args.layers!r}") from None
    doc.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SearchConfig.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def cmd_search(args) -> int:
    from .search import evolve, load_checkpoint, write_history_csv

    resume = None
    if args.resume:
        try:
            resume = load_checkpoint(args.resume)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot resume from {args.resume}: {exc}") from None
    cfg = _search_config(args, resume["config"] if resume else None)
    ds = load_csv(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = out / "checkpoint.json"
    try:
        result = evolve(ds, cfg, resume=resume, checkpoint_path=checkpoint)
    except ValueError as exc:
        if resume is not None:
            raise UsageError(str(exc)) from None
        raise
    manifest = RunManifest("search", cfg.to_dict(), ds.fingerprint(), cfg.seed)
    mpath = out / "manifest.json"
    ref = _manifest_ref(manifest, mpath)
    result.network.save(out / "network.json", **ref)
    reports = top_reports(result.reports)
    write_reports_tsv(reports, out / "rules.tsv")
    write_reports_json(reports, out / "rules.json", report_sds=result.report_sds_mode, **ref)
    write_history_csv(result.history, out / "history.csv")
    result.coverage.save(out / "coverage.json", **ref)
    manifest.artifacts = ["network.json", "rules.tsv", "rules.json", "history.csv", "checkpoint.json", "coverage.json"]
    manifest.timings = dict(result.timings)
    manifest.write(mpath)
    log.info(
        "best fitness %.5f (generation %d); cov %.5f; per-layer %s",
        result.best_fitness,
        result.best_generation,
        result.coverage.cov,
        result.coverage.per_layer_cov,
    )
    return EXIT_OK


def _write_matrix(path, names, matrix):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(names))
        for name, row in zip(names, matrix):
            w.writerow([name] + [UNDEF if v is None else repr(float(v)) for v in row])


def read_matrix(path):
    """Inverse of the baseline matrix writer: (names, rows with None for undefined)."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][1:]
    return names, [[None if v == UNDEF else float(v) for v in r[1:]] for r in rows[1:]]


def cmd_baseline(args) -> int:
    t0 = time.perf_counter()
    ds = load_csv(args.input)
    pearson, mi = pairwise_matrices(ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_matrix(out / "pearson.csv", ds.columns, pearson)
    _write_matrix(out / "mi.csv", ds.columns, mi)
    RunManifest(
        "baseline",
        {"measures": ["pearson_binary", "mutual_information_bits"]},
        ds.fingerprint(),
        None,
        artifacts=["pearson.csv", "mi.csv"],
        timings={"total_s": time.perf_counter() - t0},
    ).write(out / "manifest.json")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hyperocc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"hyperocc {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="synthesize a dataset with planted quorum rules")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--background", type=int, required=True, help="number of iid background columns")
    g.add_argument("--plant", action="append", default=[], help="e.g. '0-5:Q6->6' (repeatable)")
    g.add_argument("--noise", type=float, default=0.0, help="default target flip probability")
    g.add_argument("--exhaustive", action="store_true", help="enumerate every background pattern")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("scramble", help="write the scrambled dataset")
    s.add_argument("input")
    _add_sds_flags(s, "exact")
    s.add_argument("--binarize", action="store_true", help="binarize values at 0.5 first")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_scramble)

    e = sub.add_parser("eval", help="score a network's rules (qr, qs, hoc)")
    e.add_argument("input")
    e.add_argument("--network", required=True)
    _add_sds_flags(e, "auto")
    e.add_argument("--top", type=int, default=None, help="keep the N best rules per layer")
    e.add_argument("--out", help="rule table TSV (stdout if omitted)")
    e.add_argument("--json", help="also write the rule table as JSON")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("search", help="evolve a feature network")
    r.add_argument("input")
    r.add_argument("--config", help="JSON or YAML search config")
    r.add_argument("--algo", choices=("poet", "ga"))
    r.add_argument("--generations", type=int)
    r.add_argument("--population", type=int)
    r.add_argument("--layers", help="comma-separated layer sizes, e.g. 32,32")
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--sds-size", type=int)
    r.add_argument("--sds-mode", choices=("mc", "exact"))
    r.add_argument("--training", choices=("joint", "greedy"))
    r.add_argument("--top-h", type=int)
    r.add_argument("--checkpoint-every", type=int)
    r.add_argument("--resume", help="checkpoint to continue from")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_search)

    b = sub.add_parser("baseline", help="pairwise Pearson and mutual-information matrices")
    b.add_argument("input")
    b.add_argument("--out", required=True, help="output directory")
    b.set_defaults(func=cmd_baseline)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hyperocc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceededError as exc:
        print(f"hyperocc: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DataError as exc:
        print(f"hyperocc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
