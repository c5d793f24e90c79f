"""
osf-forge command line.

Exit codes: 0 ok, 1 unreadable input or bad usage, 2 semantically invalid
input or a failed check, 3 resource cap exceeded. Logs go to stderr; stdout
carries only results.
"""
import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.constants import (
    EXIT_OK,
    EXIT_SEMANTIC,
    FORMAT_JSON,
    FORMAT_TSV,
    OUTPUT_FORMATS,
    TIE_POLICIES,
    TIE_SEEDED,
)
from app.core.exceptions import OsfForgeError, UsageError
from app.engines.parsimony_engine import ParsimonyEngine
from app.infrastructure.config import Settings, get_settings
from app.infrastructure.logging import configure_logging
from app.models.network import Network
from app.models.osf import OsfMap
from app.models.triple import ForestTriple
from app.orchestrator.orchestrator import Orchestrator, make_tie_breaker
from app.schemas.config_schema import RANDOMIZED, RunConfig
from app.schemas.experiment_schema import RandomTripleParams
from app.services import experiment_service
from app.services.network_io import network_to_dot, parse_network_json, serialize_network_json
from app.services.newick_io import load_triple, serialize_forest, serialize_leaf_map, serialize_tree
from app.services.osf_io import parse_osf_map, serialize_introgression_set, serialize_osf_map

logger = logging.getLogger(__name__)

Command = Callable[[RunConfig, argparse.Namespace, Settings], int]


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; here bad usage is an input error."""

    def error(self, message: str) -> None:
        raise UsageError(message)


# ── I/O helpers ─────────────────────────────────────────────────


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except UnicodeDecodeError as e:
        raise UsageError(f"{path} is not UTF-8 text (byte {e.start})") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(text, encoding="utf-8")


def _write_dir(out: str, files: Dict[str, str]) -> None:
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (root / name).write_text(text, encoding="utf-8")
    logger.info(f"[CLI] wrote {', '.join(sorted(files))} to {root}")


def _render_network(network: Network, fmt: Optional[str]) -> Tuple[str, str]:
    """(file name, text) in the requested format (DOT by default); networks have no TSV form."""
    if fmt == FORMAT_TSV:
        raise UsageError("networks are written as dot or json, not tsv")
    if fmt == FORMAT_JSON:
        return "network.json", serialize_network_json(network)
    return "network.dot", network_to_dot(network)


def _triple(config: RunConfig) -> ForestTriple:
    return load_triple(_read(config.gene), _read(config.forest), _read(config.map))


def _psi(config: RunConfig, triple: ForestTriple) -> OsfMap:
    """The given OSF map, or the builder's when --osf is absent."""
    if config.osf is not None:
        return parse_osf_map(_read(config.osf), triple)
    return ParsimonyEngine.build_osf(triple, make_tie_breaker(config.tie, config.seed))


def _parse_arcs(text: Optional[str]) -> Optional[List[Tuple[str, str]]]:
    """`u->v,u->v,...`; an empty string is the empty arc set."""
    if text is None:
        return None
    arcs = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        tail, sep, head = item.partition("->")
        if not sep or not tail or not head:
            raise UsageError(f"arc {item!r} is not of the form u->v")
        arcs.append((tail.strip(), head.strip()))
    return arcs


def _json(model_or_obj) -> str:
    if hasattr(model_or_obj, "model_dump_json"):
        return model_or_obj.model_dump_json(indent=2) + "\n"
    return json.dumps(model_or_obj, indent=2, sort_keys=True) + "\n"


def _resolve_seed(config: RunConfig, settings: Settings) -> RunConfig:
    randomized = config.subcommand in RANDOMIZED or config.tie == TIE_SEEDED
    if not randomized or config.seed is not None:
        return config
    if settings.ci_mode:
        raise UsageError(f"{config.subcommand} is randomized; OSF_FORGE_CI requires an explicit --seed")
    seed = random.SystemRandom().randrange(2**32)
    logger.info(f"[CLI] no --seed given, using {seed}")
    return config.model_copy(update={"seed": seed})


# ── Subcommands ─────────────────────────────────────────────────


def cmd_build(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    triple = _triple(config)
    outcome = Orchestrator.build(triple, make_tie_breaker(config.tie, config.seed))
    if config.out is not None:
        name, network_text = _render_network(outcome.network, config.format)
        _write_dir(config.out, {
            "osf.tsv": serialize_osf_map(triple, outcome.psi),
            "introgression.tsv": serialize_introgression_set(triple, list(outcome.introgression.arcs)),
            name: network_text,
        })
    print(outcome.to_result().summary)
    return EXIT_OK


def cmd_verify(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    triple = _triple(config)
    psi = parse_osf_map(_read(config.osf), triple)
    report = Orchestrator.verify(triple, psi, config.strict)
    _emit(_json(report), config.out)
    return EXIT_OK if report.passed else EXIT_SEMANTIC


def cmd_oracle(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    t = Orchestrator.oracle(_triple(config), config.cap_oracle)
    print(f"t={t}")
    return EXIT_OK


def cmd_validate(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    network = parse_network_json(_read(config.network))
    report = Orchestrator.validate(
        network, rho=config.rho, arcs=config.arcs, search=config.search,
        cap_search=config.cap_search, cap_unfold=config.cap_unfold,
    )
    if report.valid:
        _emit(_json(report.witness), config.out)
        return EXIT_OK
    _emit("invalid\n", config.out)
    for v in report.verdicts:
        if not v.passed:
            logger.info(f"[CLI] {v.axiom} fails: {v.detail} ({', '.join(v.witnesses)})")
    return EXIT_SEMANTIC


def cmd_unfold(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    network = parse_network_json(_read(config.network))
    triple, psi = Orchestrator.unfold(network, config.rho, config.arcs, config.cap_search, config.cap_unfold)
    files = {
        "gene.nwk": serialize_tree(triple.gene) + "\n",
        "forest.nwk": serialize_forest(triple.forest),
        "map.tsv": serialize_leaf_map(triple),
        "osf.tsv": serialize_osf_map(triple, psi),
    }
    if config.out is not None:
        _write_dir(config.out, files)
    else:
        sys.stdout.write(files["gene.nwk"])
    return EXIT_OK


def cmd_resolve(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    triple = _triple(config)
    resolution, records = Orchestrator.resolve(triple, _psi(config, triple), config.cap_cycles)
    _, text = _render_network(resolution.network, config.format)
    incidental = sum(r.incidental for r in records)
    logger.info(f"[CLI] N_psi has {len(records)} cycles, {incidental} incidental")
    if config.out is None:
        sys.stdout.write(text)
        return EXIT_OK
    cycles = _json([r.model_dump() for r in records])
    _emit(text, config.out)
    _emit(cycles, str(Path(config.out).with_suffix(".cycles.json")))
    sys.stdout.write(cycles)
    return EXIT_OK


def cmd_cycles(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    triple = _triple(config)
    records = Orchestrator.cycles(triple, _psi(config, triple), config.cap_cycles)
    _emit(_json([r.model_dump() for r in records]), config.out)
    return EXIT_OK


def cmd_normalize(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    triple = _triple(config)
    normalized, psi, steps = Orchestrator.normalize(triple, _psi(config, triple))
    if config.out is not None:
        _write_dir(config.out, {
            "gene.nwk": serialize_tree(normalized.gene) + "\n",
            "map.tsv": serialize_leaf_map(normalized),
            "osf.tsv": serialize_osf_map(normalized, psi),
            "steps.json": _json([s.model_dump() for s in steps]),
        })
    print(f"steps={len(steps)} gene_vertices={len(normalized.gene)}")
    return EXIT_OK


def cmd_perturb(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    triple = _triple(config)
    if config.kind == "forest":
        report = experiment_service.perturb_forest_experiment(triple, config.seed, config.trials, config.workers)
    else:
        report = experiment_service.perturb_gene_experiment(
            triple, config.k, config.seed, config.trials, config.workers, config.cap_rspr,
        )
    summary = _json(report.summary())
    if config.out is None:
        sys.stdout.write(report.to_csv())
        return EXIT_OK
    _emit(report.to_csv(), config.out)
    _emit(summary, str(Path(config.out).with_suffix(".summary.json")))
    sys.stdout.write(summary)
    return EXIT_OK


def cmd_gen(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    try:
        params = RandomTripleParams(
            n_gene_leaves=args.n_gene, n_trees=args.n_trees,
            leaves_per_tree=args.leaves_per_tree, binary=not args.nonbinary,
        )
    except ValidationError as e:
        raise UsageError(f"infeasible generator parameters: {e.errors()[0]['msg']}") from None
    triple = experiment_service.random_triple(params, config.seed)
    files = {
        "gene.nwk": serialize_tree(triple.gene) + "\n",
        "forest.nwk": serialize_forest(triple.forest),
        "map.tsv": serialize_leaf_map(triple),
    }
    if config.out is not None:
        _write_dir(config.out, files)
    else:
        sys.stdout.write("\n".join(files[name] for name in ("gene.nwk", "forest.nwk", "map.tsv")))
    return EXIT_OK


def cmd_serve(config: RunConfig, args: argparse.Namespace, settings: Settings) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, log_level=settings.log_level.lower())
    return EXIT_OK


# ── Parser ──────────────────────────────────────────────────────


def _common(settings: Settings) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="Output file or directory (stdout when absent)")
    common.add_argument("--format", choices=OUTPUT_FORMATS, help="Output format; networks take dot (default) or json")
    common.add_argument("--seed", type=int, help="Seed for randomized steps")
    common.add_argument("--cap-oracle", type=int, default=settings.cap_oracle)
    common.add_argument("--cap-unfold", type=int, default=settings.cap_unfold)
    common.add_argument("--cap-cycles", type=int, default=settings.cap_cycles)
    common.add_argument("--cap-search", type=int, default=settings.cap_search)
    common.add_argument("--log-level", default=settings.log_level)
    return common


def _triple_inputs() -> argparse.ArgumentParser:
    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--gene", help="Gene tree (Newick)")
    inputs.add_argument("--forest", help="Species forest (one Newick tree per line)")
    inputs.add_argument("--map", help="Leaf map (gene_label<TAB>species_label)")
    inputs.add_argument("--osf", help="OSF map TSV; the builder's when absent")
    inputs.add_argument("--tie", choices=TIE_POLICIES, default="first", help="Builder tie-break policy")
    return inputs


def _network_inputs() -> argparse.ArgumentParser:
    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--network", help="Network JSON document")
    inputs.add_argument("--rho", help="Start vertex")
    inputs.add_argument("--arcs", help="Arc set A as u->v,u->v (default: the contact arcs of a partitioned network)")
    return inputs


COMMANDS: Dict[str, Tuple[Command, str]] = {
    "build": (cmd_build, "Build a minimum strict OSF, its introgression set and N(psi)"),
    "verify": (cmd_verify, "Check an OSF map against P1-P3 (and S3 with --strict)"),
    "validate": (cmd_validate, "Decide whether a network is valid"),
    "resolve": (cmd_resolve, "Binary resolution N_psi of a strict OSF"),
    "unfold": (cmd_unfold, "Unfold a valid network into a forest triple and OSF"),
    "perturb": (cmd_perturb, "SPR stability experiment"),
    "gen": (cmd_gen, "Generate a random forest triple"),
    "oracle": (cmd_oracle, "Exhaustive t(F) for cross-checking build"),
    "cycles": (cmd_cycles, "Classify the directed cycles of N(psi)"),
    "normalize": (cmd_normalize, "Trail normalization of an OSF"),
    "serve": (cmd_serve, "Run the HTTP API"),
}


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = _Parser(prog="osf-forge", description="Overlaid species forests and introgression networks")
    subparsers = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    common = _common(settings)
    triple_inputs = _triple_inputs()
    network_inputs = _network_inputs()

    for name, (func, help_text) in COMMANDS.items():
        parents = [common]
        if name in ("build", "verify", "oracle", "resolve", "cycles", "normalize", "perturb"):
            parents.append(triple_inputs)
        if name in ("validate", "unfold"):
            parents.append(network_inputs)
        sub = subparsers.add_parser(name, parents=parents, help=help_text)
        sub.set_defaults(func=func)
        if name == "verify":
            sub.add_argument("--strict", action="store_true", help="Also check S3")
        if name == "validate":
            sub.add_argument("--search", action="store_true", help="Search every (rho, A)")
        if name == "perturb":
            sub.add_argument("--kind", choices=("gene", "forest"), default="gene")
            sub.add_argument("--k", type=int, default=1, help="SPR moves per gene trial")
            sub.add_argument("--trials", type=int, default=1)
            sub.add_argument("--workers", type=int, default=1, help="Worker processes")
            sub.add_argument("--cap-rspr", type=int, default=settings.cap_rspr)
        if name == "gen":
            sub.add_argument("--n-gene", type=int, default=8, help="Gene tree leaves")
            sub.add_argument("--n-trees", type=int, default=3)
            sub.add_argument("--leaves-per-tree", type=int, default=4)
            sub.add_argument("--nonbinary", action="store_true", help="Contract random interior arcs")
        if name == "serve":
            sub.add_argument("--host", default="127.0.0.1")
            sub.add_argument("--port", type=int, default=8000)
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    fields = set(RunConfig.model_fields)
    values = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    values["arcs"] = _parse_arcs(getattr(args, "arcs", None))
    try:
        return RunConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        msg = first["msg"].removeprefix("Value error, ")
        raise UsageError(msg) from None


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    try:
        args = build_parser(settings).parse_args(list(argv) if argv is not None else None)
        configure_logging(args.log_level)
        config = _resolve_seed(_run_config(args), settings)
        logger.debug(f"[CLI] {config.subcommand}: {config.model_dump(exclude_none=True)}")
        return args.func(config, args, settings)
    except OsfForgeError as e:
        logger.error(f"[CLI] {type(e).__name__}: {e.message}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
