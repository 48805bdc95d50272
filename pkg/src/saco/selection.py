"""Exemplar selection by greedy maximization of a set objective.

The objective over a selected set A combines five terms:

* feature coverage: sum_j max_{i in A} S_ij  (facility location on the
  feature affinity graph),
* spatial coverage: the same on the location affinity graph, weighted
  by ``lambda_s``,
* cluster purity: (1/M) sum_{i in A} max_c N_c^i - |A|, where N_c^i
  counts class-c patches whose most similar exemplar is i,
* class balance: sum_c log(|A_c| + 1) over per-class selection counts,
* assignment entropy: -sum_{i in A} p_i log p_i - |A| with p_i the
  fraction of patches assigned to exemplar i.

The empty set scores 0.  Every patch is assigned to the exemplar with
the highest feature affinity; ties (including the all-zero case on a
sparse graph) go to the lowest exemplar id, so evaluation from scratch
and incremental bookkeeping agree exactly.

``naive_greedy`` re-scores every candidate each round and stops early
when the best marginal gain is negative.  ``lazy_greedy`` keeps stale
upper bounds in a max-heap and only re-scores candidates that surface,
which is equivalent because gains shrink as the selection grows; both
produce identical selections, including tie handling.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "ObjectiveWeights",
    "SelectionState",
    "SelectionResult",
    "term_representative",
    "term_spatial",
    "term_discriminative",
    "term_balance",
    "term_compact",
    "evaluate",
    "evaluate_ids",
    "marginal_gain",
    "add_exemplar",
    "naive_greedy",
    "lazy_greedy",
    "brute_force_opt",
]


@dataclass(frozen=True)
class ObjectiveWeights:
    """Non-negative weights for the secondary objective terms."""

    lambda_s: float = 1.0
    lambda_d: float = 1.0
    lambda_b: float = 1.0
    lambda_c: float = 1.0

    def __post_init__(self):
        for name in ("lambda_s", "lambda_d", "lambda_b", "lambda_c"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidInputError(f"{name} must be finite and >= 0, got {v}")


def _xlogx(p: float) -> float:
    return p * math.log(p) if p > 0.0 else 0.0


class SelectionState:
    """Incremental bookkeeping for one greedy run.

    Tracks, per patch, the best feature/spatial affinity to the current
    selection and the owning exemplar; per exemplar, the class counts of
    its assigned patches; and per class, how many exemplars were picked.
    Patches with zero affinity to every exemplar sit in the cluster of
    the lowest selected id (the tie rule), and their per-class counts
    are kept separately so gains stay cheap to evaluate.
    """

    def __init__(self, labels, n_classes=None):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1 or len(labels) == 0:
            raise InvalidInputError("labels must be a non-empty 1-D sequence")
        if labels.min() < 0:
            raise InvalidInputError("negative class label")
        if n_classes is None:
            n_classes = int(labels.max()) + 1
        elif labels.max() >= n_classes:
            raise InvalidInputError(f"label {labels.max()} out of range for {n_classes} classes")
        self.labels = labels
        self.n_classes = int(n_classes)
        self.m = len(labels)
        self.selected: list[int] = []
        self.is_selected = np.zeros(self.m, dtype=bool)
        self.best_feature_sim = np.zeros(self.m)
        self.best_spatial_sim = np.zeros(self.m)
        self.cluster_of = np.full(self.m, -1, dtype=np.int64)
        self.cluster_counts: dict[int, np.ndarray] = {}
        self.per_class_selected = np.zeros(self.n_classes, dtype=np.int64)
        # class counts of patches with best_feature_sim == 0
        self.uncovered_counts = np.bincount(labels, minlength=self.n_classes)
        self.min_selected: int | None = None

    @classmethod
    def for_patches(cls, patches, n_classes=None) -> "SelectionState":
        return cls([p.label for p in patches], n_classes)

    # -- incremental engine -------------------------------------------------

    def _delta(self, e: int, S, L, weights: ObjectiveWeights, commit: bool) -> float:
        labels = self.labels
        m = self.m
        idx_f, val_f = S.row(e)
        idx_s, val_s = L.row(e)

        if not self.selected:
            gain_r = float(val_f.sum())
            gain_s = float(val_s.sum())
            class_tot = self.uncovered_counts  # full label histogram here
            gain_d = class_tot.max() / m - 1.0
            gain_b = math.log(2.0)
            gain_c = -1.0  # single cluster: zero entropy minus the size penalty
            if commit:
                self.best_feature_sim[idx_f] = val_f
                self.best_spatial_sim[idx_s] = val_s
                self.cluster_of[:] = e
                self.cluster_counts[e] = class_tot.copy()
                covered = idx_f[val_f > 0]
                self.uncovered_counts = class_tot - np.bincount(
                    labels[covered], minlength=self.n_classes
                )
                self.per_class_selected[labels[e]] += 1
                self.selected.append(e)
                self.is_selected[e] = True
                self.min_selected = e
        else:
            old_f = self.best_feature_sim[idx_f]
            improve = val_f > old_f
            gain_r = float((val_f[improve] - old_f[improve]).sum())

            old_s = self.best_spatial_sim[idx_s]
            imp_s = val_s > old_s
            gain_s = float((val_s[imp_s] - old_s[imp_s]).sum())

            tie = (~improve) & (val_f == old_f) & (e < self.cluster_of[idx_f])
            moved = idx_f[improve | tie]

            # Per-cluster class counts leaving their current owner.
            move_from: dict[int, np.ndarray] = {}
            if moved.size:
                for c_old, lab in zip(self.cluster_of[moved].tolist(), labels[moved].tolist()):
                    vec = move_from.get(c_old)
                    if vec is None:
                        vec = np.zeros(self.n_classes, dtype=np.int64)
                        move_from[c_old] = vec
                    vec[lab] += 1

            newly_covered = idx_f[improve & (old_f == 0.0)]
            covered_hist = np.bincount(labels[newly_covered], minlength=self.n_classes)

            zero_move = None
            if e < self.min_selected:
                # Remaining zero-affinity mass re-ties to the new lowest id.
                zero_move = self.uncovered_counts - covered_hist
                if zero_move.sum() > 0:
                    vec = move_from.get(self.min_selected)
                    if vec is None:
                        vec = np.zeros(self.n_classes, dtype=np.int64)
                        move_from[self.min_selected] = vec
                    vec += zero_move
                else:
                    zero_move = None

            new_counts_e = np.zeros(self.n_classes, dtype=np.int64)
            for vec in move_from.values():
                new_counts_e += vec

            delta_max = 0
            ent_delta = -_xlogx(new_counts_e.sum() / m)
            for c_old, leave in move_from.items():
                old_vec = self.cluster_counts[c_old]
                new_vec = old_vec - leave
                delta_max += int(new_vec.max()) - int(old_vec.max())
                n_old = old_vec.sum() / m
                n_new = new_vec.sum() / m
                ent_delta += _xlogx(n_old) - _xlogx(n_new)
            gain_d = (int(new_counts_e.max()) + delta_max) / m - 1.0
            gain_c = ent_delta - 1.0

            n_sel = self.per_class_selected[labels[e]]
            gain_b = math.log(n_sel + 2.0) - math.log(n_sel + 1.0)

            if commit:
                self.best_feature_sim[idx_f] = np.maximum(old_f, val_f)
                self.best_spatial_sim[idx_s] = np.maximum(old_s, val_s)
                self.cluster_of[moved] = e
                for c_old, leave in move_from.items():
                    self.cluster_counts[c_old] = self.cluster_counts[c_old] - leave
                if zero_move is not None:
                    still_uncovered = self.best_feature_sim == 0.0
                    self.cluster_of[still_uncovered] = e
                self.uncovered_counts = self.uncovered_counts - covered_hist
                self.cluster_counts[e] = new_counts_e
                self.per_class_selected[labels[e]] += 1
                self.selected.append(e)
                self.is_selected[e] = True
                self.min_selected = min(self.min_selected, e)

        return (
            gain_r
            + weights.lambda_s * gain_s
            + weights.lambda_d * gain_d
            + weights.lambda_b * gain_b
            + weights.lambda_c * gain_c
        )


def marginal_gain(state: SelectionState, candidate: int, S, L, weights) -> float:
    """Gain of adding ``candidate``; must equal the evaluation difference."""
    if candidate < 0 or candidate >= state.m:
        raise InvalidInputError(f"candidate {candidate} out of range")
    if state.is_selected[candidate]:
        raise InvalidInputError(f"candidate {candidate} already selected")
    return state._delta(candidate, S, L, weights, commit=False)


def add_exemplar(state: SelectionState, candidate: int, S, L, weights) -> float:
    """Commit ``candidate`` into the selection; returns its gain."""
    if candidate < 0 or candidate >= state.m:
        raise InvalidInputError(f"candidate {candidate} out of range")
    if state.is_selected[candidate]:
        raise InvalidInputError(f"candidate {candidate} already selected")
    return state._delta(candidate, S, L, weights, commit=True)


# -- from-scratch evaluation ------------------------------------------------


def _dense_assignment(ids, S, labels, n_classes):
    """Best affinity, owner index and per-cluster class counts for ``ids``.

    Owners follow the lowest-id tie rule: rows are scanned in ascending
    id order and argmax keeps the first maximum.
    """
    ids = sorted(ids)
    rows = S.rows_dense(ids)
    best = rows.max(axis=0)
    owner_pos = rows.argmax(axis=0)
    counts = np.zeros((len(ids), n_classes), dtype=np.int64)
    np.add.at(counts, (owner_pos, labels), 1)
    return best, np.asarray(ids, dtype=np.int64)[owner_pos], counts


def term_representative(state: SelectionState, S) -> float:
    """Feature facility location, recomputed from the selected ids."""
    if not state.selected:
        return 0.0
    return float(S.rows_dense(sorted(state.selected)).max(axis=0).sum())


def term_spatial(state: SelectionState, L) -> float:
    """Spatial facility location, recomputed from the selected ids."""
    if not state.selected:
        return 0.0
    return float(L.rows_dense(sorted(state.selected)).max(axis=0).sum())


def term_discriminative(state: SelectionState, S) -> float:
    """Purity of the induced clusters minus the selection size."""
    if not state.selected:
        return 0.0
    _, _, counts = _dense_assignment(state.selected, S, state.labels, state.n_classes)
    return float(counts.max(axis=1).sum()) / state.m - len(state.selected)


def term_balance(state: SelectionState) -> float:
    """sum_c log(1 + #selected exemplars of class c)."""
    if not state.selected:
        return 0.0
    hist = np.bincount(state.labels[state.selected], minlength=state.n_classes)
    return float(np.log(hist + 1.0).sum())


def term_compact(state: SelectionState, S) -> float:
    """Entropy of the cluster-size distribution minus the selection size."""
    if not state.selected:
        return 0.0
    _, _, counts = _dense_assignment(state.selected, S, state.labels, state.n_classes)
    p = counts.sum(axis=1) / state.m
    ent = -sum(_xlogx(v) for v in p.tolist())
    return ent - len(state.selected)


def evaluate(state: SelectionState, S, L, weights: ObjectiveWeights) -> float:
    """Full objective recomputed from scratch (0 for the empty set)."""
    if not state.selected:
        return 0.0
    return (
        term_representative(state, S)
        + weights.lambda_s * term_spatial(state, L)
        + weights.lambda_d * term_discriminative(state, S)
        + weights.lambda_b * term_balance(state)
        + weights.lambda_c * term_compact(state, S)
    )


def evaluate_ids(ids, S, L, labels, weights: ObjectiveWeights, n_classes=None) -> float:
    """Objective value of an explicit id set, via a throwaway state."""
    state = SelectionState(labels, n_classes)
    for i in ids:
        state.selected.append(int(i))
        state.is_selected[int(i)] = True
    # evaluation only reads `selected`/labels, never the incremental caches
    return evaluate(state, S, L, weights)


# -- greedy drivers ---------------------------------------------------------


@dataclass
class SelectionResult:
    """Ordered selection with per-step gains and evaluation counters."""

    ids: list[int]
    gains: list[float]
    n_evaluations: int
    cumulative_evals: list[int] = field(default_factory=list)

    def objective(self) -> float:
        return float(sum(self.gains))

    def write_csv(self, path, header_comments=()) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in header_comments:
                fh.write(f"# {line}\n")
            fh.write("step,patch_id,gain,evaluations\n")
            for s, (pid, g) in enumerate(zip(self.ids, self.gains)):
                evals = self.cumulative_evals[s] if s < len(self.cumulative_evals) else self.n_evaluations
                fh.write(f"{s},{pid},{float(g)!r},{evals}\n")


def _check_greedy_args(state, k):
    if k < 1:
        raise InvalidInputError(f"K must be >= 1, got {k}")


def naive_greedy(patches, S, L, weights, k, n_classes=None, verify=False) -> SelectionResult:
    """Re-score every unselected candidate each round; pick the best.

    Stops when ``k`` exemplars are chosen, the pool is exhausted, or the
    best gain is negative.  Ties go to the lowest patch id.  With
    ``verify`` each committed gain is re-checked against the difference
    of from-scratch evaluations.
    """
    state = SelectionState.for_patches(patches, n_classes)
    _check_greedy_args(state, k)
    gains: list[float] = []
    cumulative_evals: list[int] = []
    n_evals = 0
    while len(state.selected) < k:
        best_gain = None
        best_id = None
        for cand in range(state.m):
            if state.is_selected[cand]:
                continue
            g = state._delta(cand, S, L, weights, commit=False)
            n_evals += 1
            if best_gain is None or g > best_gain:
                best_gain, best_id = g, cand
        if best_id is None:
            break
        if best_gain < 0:
            break
        if verify:
            before = evaluate(state, S, L, weights)
        committed = state._delta(best_id, S, L, weights, commit=True)
        if verify:
            after = evaluate(state, S, L, weights)
            if abs(committed - (after - before)) > 1e-9:
                raise AssertionError(
                    f"incremental gain {committed} != evaluation difference {after - before}"
                )
        gains.append(float(committed))
        cumulative_evals.append(n_evals)
    return SelectionResult(list(state.selected), gains, n_evals, cumulative_evals)


def lazy_greedy(patches, S, L, weights, k, n_classes=None) -> SelectionResult:
    """Greedy with stale upper bounds on a max-heap.

    Heap entries are (-gain, id, step_computed); an entry whose gain was
    computed at the current step is exact and can be accepted as soon as
    it surfaces.  The (gain, lowest-id) pop order reproduces the naive
    tie-breaking exactly.
    """
    state = SelectionState.for_patches(patches, n_classes)
    _check_greedy_args(state, k)
    heap = []
    n_evals = 0
    for i in range(state.m):
        g = state._delta(i, S, L, weights, commit=False)
        n_evals += 1
        heap.append((-g, i, 0))
    heapq.heapify(heap)

    gains: list[float] = []
    cumulative_evals: list[int] = []
    while heap and len(state.selected) < k:
        step = len(state.selected)
        neg_g, cand, stamp = heapq.heappop(heap)
        if stamp == step:
            if -neg_g < 0:
                break
            state._delta(cand, S, L, weights, commit=True)
            gains.append(float(-neg_g))
            cumulative_evals.append(n_evals)
        else:
            g = state._delta(cand, S, L, weights, commit=False)
            n_evals += 1
            heapq.heappush(heap, (-g, cand, step))
    return SelectionResult(list(state.selected), gains, n_evals, cumulative_evals)


def brute_force_opt(patches, S, L, weights, k, n_classes=None):
    """Exhaustive maximum of the objective over subsets of size <= k.

    Guarded to small instances; returns (ids, value) with the first
    maximizer in (size, lexicographic) enumeration order.
    """
    m = len(patches)
    if math.comb(m, min(k, m)) > 1_000_000:
        raise InvalidInputError(f"C({m},{k}) too large for exhaustive search")
    labels = np.asarray([p.label for p in patches], dtype=np.int64)
    best_ids: tuple[int, ...] = ()
    best_val = 0.0
    for size in range(1, min(k, m) + 1):
        for combo in itertools.combinations(range(m), size):
            v = evaluate_ids(combo, S, L, labels, weights, n_classes)
            if v > best_val:
                best_val, best_ids = v, combo
    return list(best_ids), best_val
