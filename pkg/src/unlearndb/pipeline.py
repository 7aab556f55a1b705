"""Wall-clock simulator for incremental-learning / unlearning pipelines.

Three ways of serving a stream of class-addition (cil) and class-removal
(mu) tasks are modelled on two resource lanes, ``trainer`` and
``embedder``:

    retrain         cil tasks train incrementally; every mu task triggers
                    a full retraining over the classes still retained.
                    Everything is serial on the trainer lane.
    restore-resume  checkpoints are kept for the empty model, for each
                    class of the initial history, and after every cil
                    task. A mu task restores the most recent checkpoint
                    free of any unlearned class, then re-trains whatever
                    retained classes came after it. Serial on the trainer
                    lane.
    vector-migrate  removal never touches the trainer: a mu task embeds
                    the class's data and migrates its vectors between
                    stores, both on the embedder lane, and the next task
                    may start as soon as the embedding is done. A cil
                    task embeds its data first, then trains; cil
                    trainings are serial among themselves.

Costs scale linearly in class counts. The defaults are fitted so the
published aggregate times of the reference four-task workload are
reproduced within 15 percent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import ArgumentError, DegenerateModel, InvalidWorkload


class TaskType(enum.Enum):
    CIL = "cil"
    MU = "mu"


class Method(enum.Enum):
    RETRAIN = "retrain"
    RESTORE_RESUME = "restore-resume"
    VECTOR_MIGRATE = "vector-migrate"


@dataclass(frozen=True)
class Task:
    """One pipeline step: add ``n_classes`` new classes (cil) or remove
    ``n_classes`` learned ones (mu). Removal targets default to the most
    recently introduced retained classes; explicit ids override that."""

    kind: TaskType
    n_classes: int
    targets: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.n_classes < 1:
            raise InvalidWorkload(f"task needs a positive class count")
        if self.targets is not None:
            if self.kind is not TaskType.MU:
                raise InvalidWorkload("only mu tasks take explicit targets")
            if len(self.targets) != self.n_classes:
                raise InvalidWorkload(
                    f"{self.n_classes} removals but {len(self.targets)} targets"
                )


def cil(n: int) -> Task:
    return Task(TaskType.CIL, n)


def mu(n: int, targets: tuple[int, ...] | None = None) -> Task:
    return Task(TaskType.MU, n, targets)


@dataclass(frozen=True)
class CostModel:
    """Per-unit second costs. Defaults are fitted to the reference
    four-task aggregates (train 639 s/class puts full retraining around
    an order of magnitude above embedding plus migration)."""

    train_per_class: float = 639.0
    embed_per_class: float = 25.0
    migrate_per_class: float = 15.0
    checkpoint_save: float = 5.0
    restore: float = 11.0

    def __post_init__(self):
        for name in ("train_per_class", "embed_per_class", "migrate_per_class",
                     "checkpoint_save", "restore"):
            if getattr(self, name) < 0:
                raise ArgumentError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Interval:
    task_index: int
    kind: str
    lane: str
    start: float
    end: float


@dataclass(frozen=True)
class SimState:
    """Classes learned (in introduction order), classes unlearned, and
    the checkpoint history (each checkpoint is the class set saved)."""

    intro_order: tuple[int, ...]
    unlearned: frozenset
    checkpoints: tuple[frozenset, ...]
    next_class: int

    @property
    def retained(self) -> tuple[int, ...]:
        return tuple(c for c in self.intro_order if c not in self.unlearned)


def initial_state(history: int) -> SimState:
    """Pre-existing model state: ``history`` classes already learned, a
    checkpoint after each (the initial training itself is not simulated)."""
    if history < 0:
        raise InvalidWorkload(f"history must be non-negative, got {history}")
    intro = tuple(range(history))
    cps = [frozenset()]
    for i in range(history):
        cps.append(frozenset(range(i + 1)))
    return SimState(
        intro_order=intro,
        unlearned=frozenset(),
        checkpoints=tuple(cps),
        next_class=history,
    )


@dataclass(frozen=True)
class Timeline:
    method: Method
    intervals: tuple[Interval, ...]
    makespan: float
    final_state: SimState

    def to_csv_text(self) -> str:
        lines = ["task_index,kind,lane,start_s,end_s"]
        rows = sorted(self.intervals, key=lambda iv: (iv.start, iv.lane, iv.task_index))
        for iv in rows:
            lines.append(f"{iv.task_index},{iv.kind},{iv.lane},{iv.start!r},{iv.end!r}")
        return "\n".join(lines) + "\n"


def _resolve_mu(state: SimState, task: Task) -> tuple[int, ...]:
    retained = state.retained
    if task.n_classes > len(retained):
        raise InvalidWorkload(
            f"cannot remove {task.n_classes} classes, only {len(retained)} retained"
        )
    if task.targets is None:
        return tuple(reversed(retained[-task.n_classes:]))
    for t in task.targets:
        if t in state.unlearned:
            raise InvalidWorkload(f"class {t} already unlearned")
        if t not in state.intro_order:
            raise InvalidWorkload(f"class {t} was never learned")
    if len(set(task.targets)) != len(task.targets):
        raise InvalidWorkload("duplicate removal targets")
    return task.targets


def _apply_cil(state: SimState, n: int, checkpoint: bool) -> SimState:
    new = tuple(range(state.next_class, state.next_class + n))
    intro = state.intro_order + new
    cps = state.checkpoints
    if checkpoint:
        cps = cps + (frozenset(intro) - state.unlearned,)
    return SimState(intro, state.unlearned, cps, state.next_class + n)


def simulate(workload, model: CostModel, method: Method,
             history: int | SimState = 0) -> Timeline:
    """Simulate a workload and return its timeline.

    ``history`` seeds the pre-existing model state; passing the final
    state of an earlier run chains workloads.
    """
    if not isinstance(method, Method):
        method = Method(method)
    state = history if isinstance(history, SimState) else initial_state(history)
    tasks = list(workload)
    if not tasks:
        raise InvalidWorkload("empty workload")
    intervals: list[Interval] = []
    t = model.train_per_class
    e = model.embed_per_class
    m = model.migrate_per_class

    if method is Method.RETRAIN:
        cursor = 0.0
        for i, task in enumerate(tasks):
            if task.kind is TaskType.CIL:
                dur = task.n_classes * t
                state = _apply_cil(state, task.n_classes, checkpoint=False)
            else:
                removed = _resolve_mu(state, task)
                state = replace(state, unlearned=state.unlearned | set(removed))
                dur = len(state.retained) * t
            intervals.append(Interval(i, task.kind.value, "trainer", cursor, cursor + dur))
            cursor += dur
        return Timeline(method, tuple(intervals), cursor, state)

    if method is Method.RESTORE_RESUME:
        cursor = 0.0
        for i, task in enumerate(tasks):
            if task.kind is TaskType.CIL:
                dur = task.n_classes * t + model.checkpoint_save
                state = _apply_cil(state, task.n_classes, checkpoint=True)
                intervals.append(
                    Interval(i, "cil", "trainer", cursor, cursor + dur)
                )
                cursor += dur
            else:
                removed = _resolve_mu(state, task)
                unlearned = state.unlearned | set(removed)
                usable = [cp for cp in state.checkpoints if not (cp & unlearned)]
                base = usable[-1]  # empty checkpoint always qualifies
                redo = [
                    c for c in state.intro_order
                    if c not in unlearned and c not in base
                ]
                intervals.append(
                    Interval(i, "mu", "trainer", cursor, cursor + model.restore)
                )
                cursor += model.restore
                cps = list(state.checkpoints)
                have = set(base)
                for c in redo:
                    dur = t + model.checkpoint_save
                    intervals.append(
                        Interval(i, "mu", "trainer", cursor, cursor + dur)
                    )
                    cursor += dur
                    have.add(c)
                    cps.append(frozenset(have))
                state = SimState(
                    state.intro_order, unlearned, tuple(cps), state.next_class
                )
        return Timeline(method, tuple(intervals), cursor, state)

    # vector-migrate: removal lives on the embedder lane and overlaps
    # training; a task may start once the previous mu task's embedding is
    # done or the previous cil task's training concluded.
    trainer_free = 0.0
    embedder_free = 0.0
    ready = 0.0
    makespan = 0.0
    for i, task in enumerate(tasks):
        n = task.n_classes
        if task.kind is TaskType.CIL:
            emb_start = max(ready, embedder_free)
            emb_end = emb_start + n * e
            intervals.append(Interval(i, "cil", "embedder", emb_start, emb_end))
            embedder_free = emb_end
            train_start = max(emb_end, trainer_free)
            train_end = train_start + n * t
            intervals.append(Interval(i, "cil", "trainer", train_start, train_end))
            trainer_free = train_end
            ready = train_end
            state = _apply_cil(state, n, checkpoint=False)
            makespan = max(makespan, train_end, emb_end)
        else:
            removed = _resolve_mu(state, task)
            state = replace(state, unlearned=state.unlearned | set(removed))
            emb_start = max(ready, embedder_free)
            emb_end = emb_start + n * e
            mig_end = emb_end + n * m
            intervals.append(Interval(i, "mu", "embedder", emb_start, emb_end))
            intervals.append(Interval(i, "mu", "embedder", emb_end, mig_end))
            embedder_free = mig_end
            ready = emb_end
            makespan = max(makespan, mig_end)
    return Timeline(method, tuple(intervals), makespan, state)


def speedup(workload, model: CostModel, baseline: Method, candidate: Method,
            history: int | SimState = 0) -> float:
    """makespan(baseline) / makespan(candidate)."""
    base = simulate(workload, model, baseline, history).makespan
    cand = simulate(workload, model, candidate, history).makespan
    if cand == 0.0:
        raise DegenerateModel("candidate makespan is zero")
    return base / cand


BUILTIN_WORKLOADS: dict[str, tuple[int, tuple[Task, ...]]] = {
    # Reference four-task sequence: five initial classes, two removals
    # aimed at mid-history classes, two one-class additions.
    "cifar10-t4": (5, (mu(1, (2,)), cil(1), mu(1, (3,)), cil(1))),
    # The same sequence with the removals dropped.
    "cifar10-cil": (5, (cil(1), cil(1))),
    # Fifty initial classes, eight removals aimed mid-history.
    "mu8": (50, tuple(mu(1, (30 + i,)) for i in range(8))),
    # Eight pure additions on the same base.
    "cil8": (50, tuple(cil(1) for _ in range(8))),
    # Alternating removal/addition, default (newest-first) targets.
    "mix8": (50, tuple(mu(1) if i % 2 == 0 else cil(1) for i in range(8))),
}


def builtin_workload(name: str) -> tuple[int, tuple[Task, ...]]:
    if name not in BUILTIN_WORKLOADS:
        raise ArgumentError(
            f"unknown workload {name!r}; have {sorted(BUILTIN_WORKLOADS)}"
        )
    return BUILTIN_WORKLOADS[name]


def parse_workload_text(text: str) -> tuple[int, tuple[Task, ...]]:
    """Parse a line-oriented workload description.

    ``history = N`` sets the initial class count; each ``task = cil N``
    or ``task = mu N [targets=a|b|c]`` line appends a task in order.
    """
    history = 0
    tasks: list[Task] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidWorkload(f"line {ln}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "history":
            history = int(value)
        elif key == "task":
            parts = value.split()
            if len(parts) < 2 or parts[0] not in ("cil", "mu"):
                raise InvalidWorkload(f"line {ln}: bad task spec {value!r}")
            kind = TaskType(parts[0])
            n = int(parts[1])
            targets = None
            for extra in parts[2:]:
                if extra.startswith("targets="):
                    targets = tuple(int(x) for x in extra[8:].split("|"))
                else:
                    raise InvalidWorkload(f"line {ln}: unknown field {extra!r}")
            tasks.append(Task(kind, n, targets))
        else:
            raise InvalidWorkload(f"line {ln}: unknown key {key!r}")
    if not tasks:
        raise InvalidWorkload("workload has no tasks")
    return history, tuple(tasks)
