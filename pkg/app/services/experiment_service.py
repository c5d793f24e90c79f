"""
Random forest triples and SPR stability experiments.

Every experiment takes one master seed; per-trial seeds are drawn from it in
trial order, so results do not depend on the number of workers.
"""
import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations, product
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from app.core.constants import DEFAULT_CAP_RSPR, RSPR_MAX_LEAVES
from app.core.exceptions import BoundViolationError, PreconditionError
from app.engines.parsimony_engine import Character, ParsimonyEngine
from app.engines.spr_engine import SprEngine, shape_to_tree
from app.models.tree import Forest, PhyloTree
from app.models.triple import ForestTriple
from app.schemas.experiment_schema import RandomTripleParams, StabilityReport, TrialRecord
from app.services.newick_io import load_triple, serialize_forest, serialize_leaf_map, serialize_tree

logger = logging.getLogger(__name__)

KIND_GENE = "gene"
KIND_FOREST = "forest"

# (gene newick, forest text, leaf map text)
TripleText = Tuple[str, str, str]


def _species_prefix(i: int, n_trees: int) -> str:
    return chr(ord("A") + i) if n_trees <= 26 else f"S{i + 1}_"


def _random_shape(labels: Sequence[str], rng: random.Random, binary: bool):
    """Merge uniformly chosen pairs until one lineage is left; optionally contract interior arcs."""
    pool: List = list(labels)
    while len(pool) > 1:
        i, j = sorted(rng.sample(range(len(pool)), 2))
        right = pool.pop(j)
        left = pool.pop(i)
        pool.append((left, right))
    shape = pool[0]
    if binary:
        return shape

    def contract(t):
        if isinstance(t, str):
            return t
        out = []
        for c in (contract(c) for c in t):
            if isinstance(c, tuple) and rng.random() < 0.5:
                out.extend(c)
            else:
                out.append(c)
        return tuple(out)

    return contract(shape)


def random_triple(params: RandomTripleParams, seed: int) -> ForestTriple:
    """A forest triple drawn from seed; equal seeds give equal triples."""
    rng = random.Random(seed)
    trees = []
    species: List[str] = []
    for i in range(params.n_trees):
        prefix = _species_prefix(i, params.n_trees)
        labels = [f"{prefix}{j + 1}" for j in range(params.leaves_per_tree)]
        species.extend(labels)
        trees.append(shape_to_tree(_random_shape(labels, rng, params.binary)))
    gene_labels = [f"g{j + 1}" for j in range(params.n_gene_leaves)]
    gene = shape_to_tree(_random_shape(gene_labels, rng, params.binary))
    phi = {g: rng.choice(species) for g in gene_labels}
    triple = ForestTriple.from_labels(gene, Forest(trees), phi)
    logger.debug(f"[Experiment] random triple seed={seed}: {triple!r}")
    return triple


def _as_text(triple: ForestTriple) -> TripleText:
    return serialize_tree(triple.gene), serialize_forest(triple.forest), serialize_leaf_map(triple)


def _score(triple: ForestTriple) -> int:
    return ParsimonyEngine.build_osf(triple).contact_count


def _trees_hit(triple: ForestTriple) -> int:
    return len({triple.image(x).tree for x in triple.gene.leaves})


def random_spr_walk(tree: PhyloTree, k: int, rng: random.Random) -> PhyloTree:
    """k moves, each drawn uniformly from the non-identity moves of the current tree."""
    for _ in range(k):
        moves = list(SprEngine.moves(tree))
        if not moves:
            break
        tree = SprEngine.apply_spr(tree, rng.choice(moves))
    return tree


# ── Trial workers (module level so a process pool can pickle them) ──


def _gene_trial(job: Tuple[int, TripleText, int, int, int]) -> TrialRecord:
    index, text, k, seed, cap_rspr = job
    triple = load_triple(*text)
    rng = random.Random(seed)
    gene = triple.gene
    moved = random_spr_walk(gene, k, rng)
    n = len(gene.leaves)

    d_rspr: Optional[int] = None
    if n <= RSPR_MAX_LEAVES:
        d_rspr = SprEngine.rspr_distance(gene, moved, cap_rspr)
    r = _trees_hit(triple)
    return TrialRecord(
        trial=index,
        k=k,
        d_rspr=d_rspr,
        t_before=_score(triple),
        t_after=_score(triple.with_gene(moved)),
        bound_spr=d_rspr if d_rspr is not None else k,
        bound_fk_r=((r - 1) * (n - r)) // r,
        bound_fk_n=n - 2 * math.sqrt(n) + 1,
    )


def _legal_cuts(forest: Forest) -> List[Tuple[int, int]]:
    cuts = []
    for i, tree in enumerate(forest):
        for v in tree.nodes:
            if v != tree.root and len(tree.leaves) - len(tree.cluster(v)) >= 2:
                cuts.append((i, v))
    return cuts


def _forest_trial(job: Tuple[int, TripleText, int]) -> TrialRecord:
    index, text, seed = job
    triple = load_triple(*text)
    rng = random.Random(seed)
    forest = triple.forest
    source, cut = rng.choice(_legal_cuts(forest))
    target = rng.choice([i for i in range(len(forest)) if i != source])
    graft = rng.choice(forest[target].nodes)
    moved_labels = forest[source].cluster_labels(cut)
    bound = sum(1 for x in triple.gene.leaves if triple.phi_label(x) in moved_labels)

    new_forest = SprEngine.forest_spr(forest, source, cut, target, graft)
    return TrialRecord(
        trial=index,
        k=1,
        t_before=_score(triple),
        t_after=_score(triple.with_forest(new_forest)),
        bound_spr=bound,
    )


def _run(fn: Callable, jobs: List, workers: int) -> List[TrialRecord]:
    if workers <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _trial_seeds(seed: int, trials: int) -> List[int]:
    master = random.Random(seed)
    return [master.randrange(2**32) for _ in range(trials)]


def _finish(report: StabilityReport) -> StabilityReport:
    bad = report.violations
    for r in bad:
        logger.error(f"[Experiment] bound violated in {report.kind} trial {r.trial}: {r.model_dump()}")
    if bad:
        raise BoundViolationError(f"{len(bad)} of {len(report.records)} {report.kind} trials violate a bound")
    summary = report.summary()
    logger.info(f"[Experiment] {report.kind}: {summary.n_trials} trials, max |dt|={summary.max_delta}, seed={summary.seed}")
    return report


def perturb_gene_experiment(
    triple: ForestTriple, k: int, seed: int, trials: int = 1, workers: int = 1, cap_rspr: int = DEFAULT_CAP_RSPR,
) -> StabilityReport:
    """
    Apply k random SPR moves to G per trial and compare t before and after
    against the rSPR bound and both parsimony-change bounds.

    Raises:
        PreconditionError: if G is not binary
        BoundViolationError: if any trial breaks a bound
    """
    if not triple.gene.is_binary:
        raise PreconditionError("gene tree perturbation needs a binary gene tree")
    if k < 0:
        raise PreconditionError("k must be non-negative")
    text = _as_text(triple)
    jobs = [(i, text, k, s, cap_rspr) for i, s in enumerate(_trial_seeds(seed, trials))]
    records = _run(_gene_trial, jobs, workers)
    return _finish(StabilityReport(kind=KIND_GENE, seed=seed, records=records))


def perturb_forest_experiment(triple: ForestTriple, seed: int, trials: int = 1, workers: int = 1) -> StabilityReport:
    """
    Move a random subtree T0 between species trees per trial; the bound is
    the number of gene leaves mapped into T0.

    Raises:
        PreconditionError: if F has one tree or no move keeps every tree at two or more leaves
        BoundViolationError: if any trial breaks the bound
    """
    if len(triple.forest) < 2:
        raise PreconditionError("forest perturbation needs at least two species trees")
    if not _legal_cuts(triple.forest):
        raise PreconditionError("every species tree has two leaves; no subtree can move")
    text = _as_text(triple)
    jobs = [(i, text, s) for i, s in enumerate(_trial_seeds(seed, trials))]
    records = _run(_forest_trial, jobs, workers)
    return _finish(StabilityReport(kind=KIND_FOREST, seed=seed, records=records))


# ── Character edits ─────────────────────────────────────────────


def _within_bound(tree: PhyloTree, f: Character, edited: Character, k: int) -> bool:
    before = ParsimonyEngine.parsimony_score(tree, f)
    after = ParsimonyEngine.parsimony_score(tree, edited)
    return abs(after - before) <= k


def character_change_check(tree: PhyloTree, f: Character, k: int, seed: int) -> bool:
    """
    Change f on exactly k random leaves and test |l_f'(T) - l_f(T)| <= k.

    Raises:
        PreconditionError: if k exceeds the number of leaves
    """
    leaves = tree.leaves
    if not 0 <= k <= len(leaves):
        raise PreconditionError(f"cannot change {k} of {len(leaves)} leaves")
    rng = random.Random(seed)
    states = sorted(set(f.values()) | {0, 1})
    edited = dict(f)
    for x in rng.sample(list(leaves), k):
        edited[x] = rng.choice([s for s in states if s != f[x]])
    ok = _within_bound(tree, f, edited, k)
    if not ok:
        logger.error(f"[Experiment] character edit on {k} leaves broke the bound on {tree.canonical()}")
    return ok


def _edits(leaves: Sequence[int], k_max: int) -> Iterable[Tuple[int, ...]]:
    for k in range(1, k_max + 1):
        yield from combinations(leaves, k)


def exhaustive_character_check(max_leaves: int = 6, k_max: int = 2) -> int:
    """
    Every rooted tree shape up to max_leaves leaves, every two-state
    character and every edit of 1..k_max leaves. Returns the number of
    (tree, character, edit) cases checked.

    Raises:
        BoundViolationError: on the first case that breaks the bound
    """
    checked = 0
    for n in range(2, max_leaves + 1):
        for shape in SprEngine.all_tree_shapes(n):
            tree = shape_to_tree(shape)
            leaves = tree.leaves
            for states in product((0, 1), repeat=n):
                f = dict(zip(leaves, states))
                for flip in _edits(leaves, k_max):
                    edited = dict(f)
                    for x in flip:
                        edited[x] = 1 - edited[x]
                    if not _within_bound(tree, f, edited, len(flip)):
                        logger.error(f"[Experiment] edit {flip} of {f} breaks the bound on {tree.canonical()}")
                        raise BoundViolationError(f"character edit of {len(flip)} leaves changed the score by more")
                    checked += 1
    logger.info(f"[Experiment] character edits: {checked} cases within bound")
    return checked
