"""Cooperative multi-population GP over partitioned embedding views.

One population per view; an individual carries one program per class and the
class logit is the sum of the per-view programs. Fitness is mini-batch
cross-entropy plus a small parsimony term; champion-team constants are tuned
by gradient descent with backtracking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_X_y

from . import exprcore
from .dataio import SPLIT_TRAIN, SPLIT_VAL, DatasetMeta, EmbeddingDataset, make_splits
from .exprcore import BinOp, Const, Dim, Node, Program, evaluate_matrix, serialize, stats
from .modelselect import fnv1a64, macro_f1
from .spfp import SpfpConfig, ViewPartition, partition as spfp_partition

__all__ = [
    "GpConfig",
    "Individual",
    "MegpClassifier",
    "RunRecord",
    "SurrogateModel",
    "crossover",
    "fitness",
    "init_populations",
    "point_mutate",
    "random_tree",
    "run",
    "softmax_ce",
    "team_logits",
    "tune_constants",
]

CLIP = 1e-6


@dataclass(frozen=True)
class GpConfig:
    pop_size: int = 30
    max_generations: int = 150
    stall_generations: int = 30
    max_depth: int = 10
    p_crossover: float = 0.84
    p_mutation: float = 0.14
    p_reproduction: float = 0.02
    const_range: tuple[float, float] = (-10.0, 10.0)
    elite_frac_isolated: float = 0.033
    elite_frac_ensemble: float = 0.10
    p_ensemble: float = 0.75
    batch_divisor: int = 50
    epochs: int = 1000  # total constant-tuning step budget per run
    learning_rate: float = 0.001
    parsimony: float = 1e-4
    tune_steps_per_gen: int = 5
    tournament_size: int = 3
    init_depths: tuple[int, int] = (2, 6)
    p_terminal_const: float = 0.2
    improvement_tol: float = 1e-6
    epsilon: float = exprcore.DEFAULT_EPSILON
    debug_checks: bool = False  # assert offspring depth/view invariants in-loop

    def __post_init__(self):
        if self.pop_size < 2 or self.max_generations < 1:
            raise ValueError("need pop_size >= 2 and max_generations >= 1")
        total = self.p_crossover + self.p_mutation + self.p_reproduction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"variation probabilities sum to {total}, expected 1")
        for name in ("p_crossover", "p_mutation", "p_reproduction", "p_ensemble",
                     "elite_frac_isolated", "elite_frac_ensemble"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if self.const_range[0] >= self.const_range[1]:
            raise ValueError("constant range is empty")

    def to_dict(self) -> dict:
        d = dict(vars(self))
        d["const_range"] = list(self.const_range)
        d["init_depths"] = list(self.init_depths)
        return d


# ---------------------------------------------------------------------------
# tree construction and variation


def _depth(node: Node) -> int:
    if type(node) is not BinOp:
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _count(node: Node) -> int:
    if type(node) is not BinOp:
        return 1
    return 1 + _count(node.left) + _count(node.right)


def _get_subtree(node: Node, index: int) -> Node:
    found: list[Node] = []

    def rec(n: Node, i: int) -> int:
        if found:
            return i
        if i == index:
            found.append(n)
            return i + 1
        i += 1
        if type(n) is BinOp:
            i = rec(n.left, i)
            i = rec(n.right, i)
        return i

    rec(node, 0)
    return found[0]


def _replace_subtree(node: Node, index: int, repl: Node) -> Node:
    counter = [0]

    def rec(n: Node) -> Node:
        i = counter[0]
        counter[0] += 1
        if i == index:
            # advance the counter past the skipped subtree
            counter[0] += _count(n) - 1
            return repl
        if type(n) is not BinOp or counter[0] > index:
            if type(n) is BinOp:
                counter[0] += _count(n) - 1
            return n
        left = rec(n.left)
        right = rec(n.right)
        if left is n.left and right is n.right:
            return n
        return BinOp(n.op, left, right)

    return rec(node)


def random_tree(
    rng: np.random.Generator,
    view_dims: np.ndarray,
    depth_limit: int,
    full: bool,
    p_const: float = 0.2,
    const_range: tuple[float, float] = (-10.0, 10.0),
) -> Program:
    """One tree of the ramped half-and-half initializer."""
    view_dims = np.asarray(view_dims)

    def terminal() -> Node:
        if rng.random() < p_const:
            return Const(float(rng.uniform(*const_range)))
        return Dim(int(view_dims[rng.integers(len(view_dims))]))

    def build(depth_left: int) -> Node:
        if depth_left == 0 or (not full and rng.random() < 0.5):
            return terminal()
        op = exprcore.OPS[rng.integers(4)]
        return BinOp(op, build(depth_left - 1), build(depth_left - 1))

    return Program(build(depth_limit))


def crossover(
    a: Program, b: Program, rng: np.random.Generator, max_depth: int = 10
) -> tuple[Program, Program]:
    """Swap uniformly chosen subtrees. An offspring exceeding the depth cap
    is discarded and its parent passed through."""
    ia = int(rng.integers(_count(a.root)))
    ib = int(rng.integers(_count(b.root)))
    sub_a = _get_subtree(a.root, ia)
    sub_b = _get_subtree(b.root, ib)
    child_a = Program(_replace_subtree(a.root, ia, sub_b))
    child_b = Program(_replace_subtree(b.root, ib, sub_a))
    if _depth(child_a.root) > max_depth:
        child_a = a
    if _depth(child_b.root) > max_depth:
        child_b = b
    return child_a, child_b


def point_mutate(
    p: Program,
    rng: np.random.Generator,
    view_dims: np.ndarray,
    const_range: tuple[float, float] = (-10.0, 10.0),
    p_const: float = 0.2,
) -> Program:
    """Replace one uniformly chosen node in kind: an operator by another
    operator, a terminal by a terminal of the same view's terminal set
    (its coordinates plus ephemeral constants); a constant replacement is
    always drawn fresh from the constant range."""
    view_dims = np.asarray(view_dims)
    idx = int(rng.integers(_count(p.root)))
    node = _get_subtree(p.root, idx)
    if type(node) is BinOp:
        others = [op for op in exprcore.OPS if op != node.op]
        repl: Node = BinOp(others[rng.integers(3)], node.left, node.right)
    elif rng.random() < p_const:
        repl = Const(float(rng.uniform(*const_range)))
    else:
        repl = Dim(int(view_dims[rng.integers(len(view_dims))]))
    return Program(_replace_subtree(p.root, idx, repl))


# ---------------------------------------------------------------------------
# individuals, teams, fitness


@dataclass
class Individual:
    genes: tuple[Program, ...]  # one program per class
    view_id: int
    fitness: float = math.inf

    def node_count(self) -> int:
        return sum(_count(g.root) for g in self.genes)


def init_populations(
    partition: ViewPartition,
    n_classes: int,
    config: GpConfig,
    rng_streams: Sequence[np.random.Generator],
) -> list[list[Individual]]:
    """Ramped half-and-half: depth limits cycle over init_depths, full and
    grow alternate; terminals come from the view plus ephemeral constants."""
    lo, hi = config.init_depths
    depths = list(range(lo, hi + 1))
    pops: list[list[Individual]] = []
    for v, view in enumerate(partition.views):
        if len(view) == 0:
            raise ValueError(f"view {v} is empty")
        rng = rng_streams[v]
        pop = []
        for i in range(config.pop_size):
            depth = depths[i % len(depths)]
            full = (i % 2) == 0
            genes = tuple(
                random_tree(rng, view, depth, full, config.p_terminal_const, config.const_range)
                for _ in range(n_classes)
            )
            pop.append(Individual(genes, v))
        pops.append(pop)
    return pops


def _gene_matrix(genes: Sequence[Program], X: np.ndarray, epsilon: float) -> np.ndarray:
    return np.column_stack([evaluate_matrix(g, X, epsilon) for g in genes])


def team_logits(team: Sequence[Individual], X, epsilon: float = exprcore.DEFAULT_EPSILON) -> np.ndarray:
    """Additive team logits, summed in ascending view order."""
    X = np.asarray(X)
    sizes = {len(ind.genes) for ind in team}
    if len(sizes) != 1:
        raise ValueError(f"team members disagree on class count: {sorted(sizes)}")
    ordered = sorted(team, key=lambda ind: ind.view_id)
    z = np.zeros((X.shape[0], sizes.pop()))
    for ind in ordered:
        z += _gene_matrix(ind.genes, X, epsilon)
    return z


def fitness(
    individual: Individual,
    X,
    y,
    parsimony: float = 1e-4,
    partner_logits: np.ndarray | None = None,
    epsilon: float = exprcore.DEFAULT_EPSILON,
) -> float:
    """Mini-batch cross-entropy of the individual's genes, optionally
    assembled with partner logits from the other views, plus a small
    node-count parsimony term."""
    own = _gene_matrix(individual.genes, np.asarray(X), epsilon)
    z = own if partner_logits is None else own + partner_logits
    return softmax_ce(z, y) + parsimony * individual.node_count() / 1000.0


def softmax_ce(z, y, clip: float = CLIP) -> float:
    """Numerically stabilized mean cross-entropy with probability clipping."""
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y)
    K = z.shape[1]
    if K < 2:
        raise ValueError("need at least 2 classes")
    if y.size and (y.min() < 0 or y.max() >= K):
        raise ValueError(f"label outside [0, {K})")
    zs = z - z.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    p_true = np.exp(logp[np.arange(len(y)), y])
    return float(-np.log(np.clip(p_true, clip, 1.0 - clip)).mean())


# ---------------------------------------------------------------------------
# constant tuning: reverse-mode gradients through the trees


def const_values(p: Program) -> list[float]:
    """Constant leaves in preorder."""
    out: list[float] = []

    def rec(n: Node):
        if type(n) is Const:
            out.append(n.value)
        elif type(n) is BinOp:
            rec(n.left)
            rec(n.right)

    rec(p.root)
    return out


def with_const_values(p: Program, values: Sequence[float]) -> Program:
    """Rebuild the program with constants replaced in preorder."""
    it = iter(values)

    def rec(n: Node) -> Node:
        if type(n) is Const:
            return Const(float(next(it)))
        if type(n) is BinOp:
            return BinOp(n.op, rec(n.left), rec(n.right))
        return n

    root = rec(p.root)
    try:
        next(it)
    except StopIteration:
        return Program(root)
    raise ValueError("more values than constant leaves")


def _forward(node: Node, X: np.ndarray, eps: float):
    if type(node) is Dim:
        return (X[:, node.index].astype(np.float64, copy=False), None, None)
    if type(node) is Const:
        return (np.float64(node.value), None, None)
    lc = _forward(node.left, X, eps)
    rc = _forward(node.right, X, eps)
    a, b = lc[0], rc[0]
    op = node.op
    if op == "plus":
        val = a + b
    elif op == "minus":
        val = a - b
    elif op == "times":
        val = a * b
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = np.where(np.abs(b) >= eps, a / b, a / np.where(b >= 0.0, eps, -eps))
    return (val, lc, rc)


def _backward(node: Node, cache, upstream, eps: float, grads: list[float]):
    if type(node) is Const:
        grads.append(float(np.sum(upstream)))
        return
    if type(node) is Dim:
        return
    _, lc, rc = cache
    a, b = lc[0], rc[0]
    op = node.op
    if op == "plus":
        up_l, up_r = upstream, upstream
    elif op == "minus":
        up_l, up_r = upstream, -upstream
    elif op == "times":
        up_l, up_r = upstream * b, upstream * a
    else:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            protected = np.abs(b) < eps
            denom = np.where(protected, np.where(b >= 0.0, eps, -eps), b)
            up_l = upstream / denom
            # the protection switch is treated as a constant denominator
            up_r = np.where(protected, 0.0, -upstream * a / (b * b))
    _backward(node.left, lc, up_l, eps, grads)
    _backward(node.right, rc, up_r, eps, grads)


GeneGrid = tuple[tuple[Program, ...], ...]  # [view][class]


def _grid_logits(grid: GeneGrid, X: np.ndarray, eps: float) -> np.ndarray:
    z = np.zeros((X.shape[0], len(grid[0])))
    for row in grid:
        z += _gene_matrix(row, X, eps)
    return z


def grid_ce_and_const_grads(grid: GeneGrid, X, y, eps: float = exprcore.DEFAULT_EPSILON):
    """Batch CE of an assembled gene grid and its gradient with respect to
    every constant leaf, per gene in preorder. Rows whose true-class
    probability is clipped contribute zero gradient."""
    X = np.asarray(X)
    y = np.asarray(y)
    n = X.shape[0]
    K = len(grid[0])
    caches = [[_forward(g.root, X, eps) for g in row] for row in grid]
    z = np.zeros((n, K))
    for row_caches in caches:
        for c, cache in enumerate(row_caches):
            z[:, c] += cache[0]
    p = _softmax(z)
    p_true = p[np.arange(n), y]
    ce = float(-np.log(np.clip(p_true, CLIP, 1.0 - CLIP)).mean())
    onehot = np.zeros_like(p)
    onehot[np.arange(n), y] = 1.0
    dz = (p - onehot) / n
    dz[(p_true <= CLIP) | (p_true >= 1.0 - CLIP)] = 0.0
    grads: list[list[list[float]]] = []
    for v, row in enumerate(grid):
        row_grads = []
        for c, gene in enumerate(row):
            g: list[float] = []
            _backward(gene.root, caches[v][c], dz[:, c], eps, g)
            row_grads.append(g)
        grads.append(row_grads)
    return ce, grads


def _softmax(z: np.ndarray) -> np.ndarray:
    zs = z - z.max(axis=1, keepdims=True)
    e = np.exp(zs)
    return e / e.sum(axis=1, keepdims=True)


def tune_constants(
    grid: GeneGrid,
    X,
    y,
    lr: float = 0.001,
    steps: int = 5,
    epsilon: float = exprcore.DEFAULT_EPSILON,
    max_halvings: int = 3,
) -> GeneGrid:
    """Gradient descent on every constant leaf of the assembled team against
    batch cross-entropy. A step that would increase the batch CE retries
    with a halved rate (up to max_halvings) and is skipped if still worse,
    so CE never increases. Constant-free teams are a no-op."""
    X = np.asarray(X)
    y = np.asarray(y)
    if not any(const_values(g) for row in grid for g in row):
        return grid
    for _ in range(steps):
        ce0, grads = grid_ce_and_const_grads(grid, X, y, epsilon)
        step_lr = lr
        accepted = None
        for _ in range(max_halvings + 1):
            candidate = tuple(
                tuple(
                    with_const_values(
                        gene,
                        [c - step_lr * g for c, g in zip(const_values(gene), grads[v][ci])],
                    )
                    for ci, gene in enumerate(row)
                )
                for v, row in enumerate(grid)
            )
            ce1 = softmax_ce(_grid_logits(candidate, X, epsilon), y)
            if ce1 <= ce0:
                accepted = candidate
                break
            step_lr /= 2.0
        if accepted is None:
            break
        grid = accepted
    return grid


# ---------------------------------------------------------------------------
# assembled model and run records


@dataclass
class SurrogateModel:
    """Additive assembly of per-view, per-class programs."""

    genes: GeneGrid
    partition: ViewPartition
    n_classes: int
    seed: int | None = None
    config_digest: str = ""
    epsilon: float = exprcore.DEFAULT_EPSILON

    def __post_init__(self):
        if len(self.genes) != self.partition.n_views:
            raise ValueError("one gene row per view required")
        for v, row in enumerate(self.genes):
            if len(row) != self.n_classes:
                raise ValueError(f"view {v} has {len(row)} genes, expected {self.n_classes}")
            allowed = set(int(i) for i in self.partition.views[v])
            for c, gene in enumerate(row):
                outside = stats(gene).used_dims - allowed
                if outside:
                    raise ValueError(
                        f"gene (view {v}, class {c}) uses coordinates outside its view: {sorted(outside)}"
                    )

    def logits(self, X) -> np.ndarray:
        X = np.asarray(X)
        return _grid_logits(self.genes, X, self.epsilon)

    def predict_proba(self, X, temperature: float = 1.0) -> np.ndarray:
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        return _softmax(self.logits(X) / temperature)

    def predict(self, X) -> np.ndarray:
        return self.logits(X).argmax(axis=1)

    def combined_logit(self, c: int) -> Program:
        """The class-c logit as a single program: the plus-fold of that
        class's per-view genes (ascending view order)."""
        root: Node = self.genes[0][c].root
        for row in self.genes[1:]:
            root = BinOp("plus", root, row[c].root)
        return Program(root)

    @property
    def complexity(self) -> int:
        return sum(_count(g.root) for row in self.genes for g in row)

    @property
    def depth(self) -> int:
        return max(_depth(g.root) for row in self.genes for g in row)

    @property
    def unique_dims(self) -> int:
        used: set[int] = set()
        for row in self.genes:
            for g in row:
                used |= stats(g).used_dims
        return len(used)

    def gene_texts(self) -> list[list[str]]:
        return [[serialize(g) for g in row] for row in self.genes]

    def canonical_digest(self) -> int:
        """FNV-1a 64 over the serialized genes in (class, view) order."""
        blob = "|".join(
            serialize(self.genes[v][c])
            for c in range(self.n_classes)
            for v in range(len(self.genes))
        )
        return fnv1a64(blob.encode())


@dataclass
class RunRecord:
    """One seeded run: champion model plus selection-relevant summaries."""

    seed: int
    model: SurrogateModel
    val_macro_f1: float
    generations: int
    config_digest: str = ""
    partition_digest: str = ""
    tuning_steps: int = 0

    @property
    def complexity(self) -> int:
        return self.model.complexity

    @property
    def depth(self) -> int:
        return self.model.depth

    @property
    def unique_dims(self) -> int:
        return self.model.unique_dims

    def canonical_digest(self) -> int:
        return self.model.canonical_digest()

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "val_macro_f1": self.val_macro_f1,
            "complexity": self.complexity,
            "depth": self.depth,
            "unique_dims": self.unique_dims,
            "generations": self.generations,
            "tuning_steps": self.tuning_steps,
            "config_digest": self.config_digest,
            "partition_digest": self.partition_digest,
            "n_classes": self.model.n_classes,
            "genes": self.model.gene_texts(),
            "partition": self.model.partition.to_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, doc: dict) -> "RunRecord":
        part = ViewPartition(
            [np.asarray(v) for v in doc["partition"]["views"]],
            doc["partition"]["d"],
            SpfpConfig(**doc["partition"].get("config", {})),
        )
        genes = tuple(
            tuple(exprcore.parse(text) for text in row) for row in doc["genes"]
        )
        model = SurrogateModel(genes, part, doc["n_classes"], doc["seed"], doc["config_digest"])
        return cls(
            seed=doc["seed"],
            model=model,
            val_macro_f1=doc["val_macro_f1"],
            generations=doc["generations"],
            config_digest=doc["config_digest"],
            partition_digest=doc["partition_digest"],
            tuning_steps=doc.get("tuning_steps", 0),
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunRecord":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# the evolutionary loop


def _tournament(pop: list[Individual], rng: np.random.Generator, size: int) -> Individual:
    picks = rng.integers(len(pop), size=size)
    best = min(picks, key=lambda i: (pop[i].fitness, i))
    return pop[best]


def run(
    dataset: EmbeddingDataset,
    partition: ViewPartition,
    config: GpConfig | None = None,
    seed: int = 0,
    config_digest: str = "",
) -> RunRecord:
    """One seeded MEGP run on a standardized dataset with a fixed partition.

    Per generation: draw one train mini-batch, evaluate every population
    (ensemble mode with probability p_ensemble, isolated otherwise, with
    partners frozen to the previous generation's per-view bests), tune the
    champion team's constants, then select, vary, and carry elites. Stops at
    max_generations or when the champion's full-train CE has not improved by
    more than improvement_tol for stall_generations."""
    config = config or GpConfig()
    K = dataset.n_classes
    if K < 2:
        raise ValueError("need at least 2 classes")
    X_train, y_train = dataset.rows(SPLIT_TRAIN)
    X_val, y_val = dataset.rows(SPLIT_VAL)
    if len(X_train) == 0 or len(X_val) == 0:
        raise ValueError("train and validation splits must be non-empty")
    eps = config.epsilon

    ss = np.random.SeedSequence(seed)
    children = ss.spawn(1 + partition.n_views)
    master = np.random.default_rng(children[0])
    view_rngs = [np.random.default_rng(c) for c in children[1:]]

    populations = init_populations(partition, K, config, view_rngs)
    V = partition.n_views
    n_train = len(X_train)
    batch_size = max(1, min(n_train, math.ceil(n_train / config.batch_divisor)))

    best_by_view: list[Individual] = [pop[0] for pop in populations]
    incumbent: GeneGrid | None = None
    incumbent_ce = math.inf
    stall = 0
    tune_budget = config.epochs
    tuning_steps = 0
    generations = 0

    for gen in range(config.max_generations):
        batch_idx = master.choice(n_train, size=batch_size, replace=False)
        Xb, yb = X_train[batch_idx], y_train[batch_idx]
        # ensemble-mode draw per population; the first generation has no
        # partners yet and evaluates isolated
        modes = [gen > 0 and master.random() < config.p_ensemble for _ in range(V)]

        if gen > 0:
            best_vals = [_gene_matrix(best_by_view[v].genes, Xb, eps) for v in range(V)]
            total = np.sum(best_vals, axis=0)
        for v, pop in enumerate(populations):
            partner = total - best_vals[v] if modes[v] else None
            for ind in pop:
                ind.fitness = fitness(ind, Xb, yb, config.parsimony, partner, eps)
            best_by_view[v] = min(pop, key=lambda ind: ind.fitness)

        # champion-team constant tuning on the current batch
        steps = min(config.tune_steps_per_gen, tune_budget)
        if steps > 0:
            grid = tuple(tuple(best_by_view[v].genes) for v in range(V))
            tuned = tune_constants(grid, Xb, yb, config.learning_rate, steps, eps)
            if tuned is not grid:
                tune_budget -= steps
                tuning_steps += steps
                for v in range(V):
                    ind = best_by_view[v]
                    ind.genes = tuned[v]
                    partner = total - best_vals[v] if modes[v] else None
                    ind.fitness = fitness(ind, Xb, yb, config.parsimony, partner, eps)

        team_grid = tuple(tuple(best_by_view[v].genes) for v in range(V))
        ce_full = softmax_ce(_grid_logits(team_grid, X_train, eps), y_train)
        if ce_full < incumbent_ce - config.improvement_tol:
            stall = 0
        else:
            stall += 1
        if ce_full < incumbent_ce:
            incumbent = team_grid
            incumbent_ce = ce_full
        generations = gen + 1
        if stall >= config.stall_generations:
            break
        if gen == config.max_generations - 1:
            break

        # selection and variation
        for v, pop in enumerate(populations):
            rng = view_rngs[v]
            frac = config.elite_frac_ensemble if modes[v] else config.elite_frac_isolated
            n_elite = min(len(pop), math.ceil(frac * config.pop_size))
            ranked = sorted(range(len(pop)), key=lambda i: (pop[i].fitness, i))
            next_pop = [Individual(pop[i].genes, v) for i in ranked[:n_elite]]
            view = partition.views[v]
            while len(next_pop) < config.pop_size:
                r = rng.random()
                if r < config.p_crossover:
                    p1 = _tournament(pop, rng, config.tournament_size)
                    p2 = _tournament(pop, rng, config.tournament_size)
                    pairs = [
                        crossover(g1, g2, rng, config.max_depth)
                        for g1, g2 in zip(p1.genes, p2.genes)
                    ]
                    next_pop.append(Individual(tuple(c1 for c1, _ in pairs), v))
                    if len(next_pop) < config.pop_size:
                        next_pop.append(Individual(tuple(c2 for _, c2 in pairs), v))
                elif r < config.p_crossover + config.p_mutation:
                    p1 = _tournament(pop, rng, config.tournament_size)
                    g_idx = int(rng.integers(K))
                    mut = point_mutate(
                        p1.genes[g_idx], rng, view, config.const_range, config.p_terminal_const
                    )
                    genes = tuple(mut if i == g_idx else g for i, g in enumerate(p1.genes))
                    next_pop.append(Individual(genes, v))
                else:
                    p1 = _tournament(pop, rng, config.tournament_size)
                    next_pop.append(Individual(p1.genes, v))
            if config.debug_checks:
                allowed = set(int(i) for i in view)
                for ind in next_pop:
                    for gene in ind.genes:
                        s = stats(gene)
                        assert s.depth <= config.max_depth, "offspring exceeds depth cap"
                        assert s.used_dims <= allowed, "offspring escapes its view"
            populations[v] = next_pop

    model = SurrogateModel(
        incumbent, partition, K, seed=seed, config_digest=config_digest, epsilon=eps
    )
    val_pred = model.predict(X_val)
    val_f1 = macro_f1(val_pred, y_val, K)
    return RunRecord(
        seed=seed,
        model=model,
        val_macro_f1=val_f1,
        generations=generations,
        config_digest=config_digest,
        partition_digest=partition.digest(),
        tuning_steps=tuning_steps,
    )


# ---------------------------------------------------------------------------
# estimator-style wrapper


class MegpClassifier(BaseEstimator, ClassifierMixin):
    """Single-seed MEGP classifier with an sklearn-style surface.

    fit() learns a view partition on the training rows (unless one is
    given), holds out a stratified validation fraction, and evolves one
    surrogate. For the full multi-seed study with canonical selection use
    the command-line pipeline.
    """

    def __init__(
        self,
        config: GpConfig | None = None,
        budget: int | None = None,
        theta: float = 0.9,
        removal_fraction: float = 0.2,
        val_fraction: float = 0.1,
        view_partition: ViewPartition | None = None,
        random_state: int = 0,
    ):
        self.config = config
        self.budget = budget
        self.theta = theta
        self.removal_fraction = removal_fraction
        self.val_fraction = val_fraction
        self.view_partition = view_partition
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, y_enc = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("need at least 2 classes")
        ds = EmbeddingDataset(
            X.astype(np.float32),
            y_enc.astype(np.int64),
            np.zeros(len(y_enc), dtype=np.int8),
            DatasetMeta("fit", X.shape[1], len(self.classes_)),
        )
        ds = make_splits(ds, self.val_fraction, self.random_state)
        part = self.view_partition
        if part is None:
            Xt, yt = ds.rows(SPLIT_TRAIN)
            part = spfp_partition(
                Xt, yt, SpfpConfig(self.budget, self.removal_fraction, self.theta)
            )
        record = run(ds, part, self.config, seed=self.random_state)
        self.partition_ = part
        self.model_ = record.model
        self.run_record_ = record
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("MegpClassifier is not fitted")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.logits(check_array(X))

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.predict_proba(check_array(X))

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return self.classes_[self.model_.predict(check_array(X))]
