"""NSGA-II search over constraint weights with Pareto-front extraction.

The genome is a handful of real genes (constraint weights, bounded) plus
optional booleans (the scale flag). Selection is the classic elitist
scheme: fast non-dominated sorting, crowding distance for diversity,
binary tournaments, simulated-binary crossover and polynomial mutation
on the reals, bit flips on the booleans. The evaluator is invoked
exactly population * generations times; failed evaluations stay in the
archive but never enter a front.
"""

from __future__ import annotations

import csv
import multiprocessing
from dataclasses import dataclass
from functools import partial

import numpy as np

OBJECTIVE_NAMES = ("mae", "mstns", "underpred")

SBX_ETA = 15.0
MUTATION_ETA = 20.0
CROSSOVER_PROB = 0.9

ARCHIVE_CSV_HEADER = [
    "trial", "lambda", "beta", "scale",
    "mae", "mstns", "underpred", "msqns", "mlns", "underpred80", "seed",
]


@dataclass(frozen=True)
class RealGene:
    name: str
    low: float
    high: float

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"gene {self.name}: low > high")


@dataclass(frozen=True)
class SearchSpace:
    reals: tuple[RealGene, ...]
    bools: tuple[str, ...] = ()

    @property
    def n_genes(self) -> int:
        return len(self.reals) + len(self.bools)

    def sample(self, rng: np.random.Generator) -> dict:
        params = {g.name: float(rng.uniform(g.low, g.high)) for g in self.reals}
        for name in self.bools:
            params[name] = bool(rng.random() < 0.5)
        return params


@dataclass
class Trial:
    index: int
    params: dict
    seed: int
    objectives: tuple | None = None
    report: dict | None = None
    error: str | None = None
    rank: int | None = None
    crowding: float | None = None

    @property
    def ok(self) -> bool:
        return self.objectives is not None


def dominates(a, b) -> bool:
    """a dominates b: no worse on every objective, better on at least one."""
    a, b = tuple(a), tuple(b)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def non_dominated_sort(trials: list[Trial]) -> list[list[Trial]]:
    """Fast non-dominated sorting into fronts of increasing rank."""
    ok = [t for t in trials if t.ok]
    if not ok:
        return []
    n = len(ok)
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(ok[i].objectives, ok[j].objectives):
                dominated_by[i].append(j)
                domination_count[j] += 1
            elif dominates(ok[j].objectives, ok[i].objectives):
                dominated_by[j].append(i)
                domination_count[i] += 1
    fronts = []
    current = [i for i in range(n) if domination_count[i] == 0]
    rank = 0
    while current:
        for i in current:
            ok[i].rank = rank
        fronts.append([ok[i] for i in current])
        nxt = []
        for i in current:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    nxt.append(j)
        current = sorted(nxt)
        rank += 1
    return fronts


def crowding_distance(front: list[Trial]) -> list[float]:
    """Diversity measure: boundary trials get +inf, interior trials the
    sum of normalized neighbour gaps per objective."""
    n = len(front)
    if n == 0:
        return []
    distances = [0.0] * n
    n_obj = len(front[0].objectives)
    for m in range(n_obj):
        order = sorted(range(n), key=lambda i: front[i].objectives[m])
        distances[order[0]] = float("inf")
        distances[order[-1]] = float("inf")
        f_min = front[order[0]].objectives[m]
        f_max = front[order[-1]].objectives[m]
        if f_max == f_min:
            continue
        for pos in range(1, n - 1):
            gap = front[order[pos + 1]].objectives[m] - front[order[pos - 1]].objectives[m]
            distances[order[pos]] += gap / (f_max - f_min)
    for trial, d in zip(front, distances):
        trial.crowding = d
    return distances


def trial_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1, np.uint64)[0])


def _safe_evaluate(evaluate, job):
    index, params, seed = job
    try:
        objectives, report = evaluate(index, params, seed)
        return tuple(float(v) for v in objectives), report, None
    except Exception as exc:  # noqa: BLE001 - a failed trial must not kill the run
        return None, None, f"{type(exc).__name__}: {exc}"


def nsga2_optimize(
    space: SearchSpace,
    evaluate,
    population: int = 20,
    generations: int = 10,
    seed: int = 0,
    workers: int = 1,
) -> tuple[list[Trial], list[Trial]]:
    """Run the search; returns (archive of all trials, rank-0 front).

    `evaluate(index, params, trial_seed)` must return (objectives,
    report) and be deterministic given the trial seed; exceptions mark
    the trial failed. The front is extracted from the complete archive.
    With `workers > 1` trials of a generation evaluate in a process
    pool; results are identical to the serial run.
    """
    if population < 4 or population % 2 != 0:
        raise ValueError("population must be even and >= 4")
    if generations < 1:
        raise ValueError("generations must be >= 1")
    rng = np.random.default_rng(seed)
    archive: list[Trial] = []

    def run_generation(param_sets):
        start = len(archive)
        jobs = [(start + i, p, trial_seed(seed, start + i)) for i, p in enumerate(param_sets)]
        if workers > 1:
            with multiprocessing.Pool(workers) as pool:
                results = pool.map(partial(_safe_evaluate, evaluate), jobs)
        else:
            results = [_safe_evaluate(evaluate, job) for job in jobs]
        trials = []
        for (index, params, tseed), (objectives, report, error) in zip(jobs, results):
            trials.append(
                Trial(index=index, params=params, seed=tseed,
                      objectives=objectives, report=report, error=error)
            )
        archive.extend(trials)
        return trials

    current = run_generation([space.sample(rng) for _ in range(population)])
    for _ in range(1, generations):
        _assign_rank_and_crowding(current)
        offspring = _make_offspring(current, space, rng, population)
        children = run_generation(offspring)
        current = _environmental_selection(current + children, population)

    front = _archive_front(archive)
    return archive, front


def _archive_front(archive: list[Trial]) -> list[Trial]:
    fronts = non_dominated_sort(archive)
    if not fronts:
        return []
    front = fronts[0]
    crowding_distance(front)
    return front


def _assign_rank_and_crowding(trials: list[Trial]) -> None:
    for t in trials:
        t.rank = None
        t.crowding = None
    for front in non_dominated_sort(trials):
        crowding_distance(front)
    for t in trials:
        if t.rank is None:  # failed trials lose every tournament
            t.rank = len(trials) + 1
            t.crowding = -float("inf")


def _tournament(trials: list[Trial], rng: np.random.Generator) -> Trial:
    i, j = rng.integers(0, len(trials), size=2)
    a, b = trials[int(i)], trials[int(j)]
    if (a.rank, -a.crowding) <= (b.rank, -b.crowding):
        return a
    return b


def _make_offspring(current, space, rng, count) -> list[dict]:
    offspring = []
    while len(offspring) < count:
        p1 = _tournament(current, rng)
        p2 = _tournament(current, rng)
        c1, c2 = _crossover(p1.params, p2.params, space, rng)
        offspring.append(_mutate(c1, space, rng))
        if len(offspring) < count:
            offspring.append(_mutate(c2, space, rng))
    return offspring


def _crossover(params1: dict, params2: dict, space: SearchSpace, rng) -> tuple[dict, dict]:
    c1, c2 = dict(params1), dict(params2)
    if rng.random() > CROSSOVER_PROB:
        return c1, c2
    for gene in space.reals:
        if rng.random() > 0.5:
            continue
        u = rng.random()
        if u <= 0.5:
            spread = (2.0 * u) ** (1.0 / (SBX_ETA + 1.0))
        else:
            spread = (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (SBX_ETA + 1.0))
        v1, v2 = params1[gene.name], params2[gene.name]
        child1 = 0.5 * ((1.0 + spread) * v1 + (1.0 - spread) * v2)
        child2 = 0.5 * ((1.0 - spread) * v1 + (1.0 + spread) * v2)
        c1[gene.name] = float(np.clip(child1, gene.low, gene.high))
        c2[gene.name] = float(np.clip(child2, gene.low, gene.high))
    for name in space.bools:
        if rng.random() < 0.5:
            c1[name], c2[name] = c2[name], c1[name]
    return c1, c2


def _mutate(params: dict, space: SearchSpace, rng) -> dict:
    mutated = dict(params)
    rate = 1.0 / space.n_genes
    for gene in space.reals:
        if rng.random() >= rate:
            continue
        u = rng.random()
        if u < 0.5:
            delta = (2.0 * u) ** (1.0 / (MUTATION_ETA + 1.0)) - 1.0
        else:
            delta = 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (MUTATION_ETA + 1.0))
        value = mutated[gene.name] + delta * (gene.high - gene.low)
        mutated[gene.name] = float(np.clip(value, gene.low, gene.high))
    for name in space.bools:
        if rng.random() < rate:
            mutated[name] = not mutated[name]
    return mutated


def _environmental_selection(pool: list[Trial], population: int) -> list[Trial]:
    selected: list[Trial] = []
    for front in non_dominated_sort(pool):
        if len(selected) + len(front) <= population:
            crowding_distance(front)
            selected.extend(sorted(front, key=lambda t: t.index))
            continue
        distances = crowding_distance(front)
        order = sorted(
            range(len(front)), key=lambda i: (-distances[i], front[i].index)
        )
        selected.extend(front[i] for i in order[: population - len(selected)])
        break
    if len(selected) < population:
        # not enough successful trials; pad with failed ones deterministically
        failed = sorted((t for t in pool if not t.ok), key=lambda t: t.index)
        selected.extend(failed[: population - len(selected)])
    return selected


def correlation_matrix(trials: list[Trial], gene_names=("lambda", "beta")) -> dict:
    """Pearson correlations of the real genes against the objectives.

    Zero-variance variables are reported as None. Requires at least 3
    successful trials.
    """
    ok = [t for t in trials if t.ok]
    if len(ok) < 3:
        raise ValueError("correlation matrix needs at least 3 successful trials")
    matrix: dict[str, dict] = {}
    for gene in gene_names:
        x = np.array([float(t.params[gene]) for t in ok])
        row: dict[str, float | None] = {}
        for m, objective in enumerate(OBJECTIVE_NAMES):
            y = np.array([t.objectives[m] for t in ok])
            row[objective] = _pearson(x, y)
        matrix[gene] = row
    return matrix


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt((xc * xc).sum())
    sy = np.sqrt((yc * yc).sum())
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.clip((xc * yc).sum() / (sx * sy), -1.0, 1.0))


# -- file outputs ------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    return repr(float(value))


def _trial_row(trial: Trial) -> list[str]:
    report = trial.report or {}
    objectives = trial.objectives or (None, None, None)
    return [
        str(trial.index),
        _fmt(trial.params.get("lambda")),
        _fmt(trial.params.get("beta")),
        _fmt(bool(trial.params.get("scale", False))),
        _fmt(objectives[0]),
        _fmt(objectives[1]),
        _fmt(objectives[2]),
        _fmt(report.get("msqns")),
        _fmt(report.get("mlns")),
        _fmt(report.get("underpred80")),
        str(trial.seed),
    ]


def write_archive_csv(path, archive: list[Trial]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ARCHIVE_CSV_HEADER)
        for trial in archive:
            writer.writerow(_trial_row(trial))


def write_pareto_csv(path, front: list[Trial]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ARCHIVE_CSV_HEADER + ["rank", "crowding"])
        for trial in front:
            crowding = "inf" if trial.crowding == float("inf") else _fmt(trial.crowding)
            writer.writerow(_trial_row(trial) + [str(trial.rank), crowding])
