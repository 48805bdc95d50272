"""Image-level classification on pooled sparse codes.

Per image, patch codes are average-pooled to one fixed-length feature,
classified by a one-vs-rest linear SVM trained with deterministic
full-batch subgradient descent.  A reconstruction-residual baseline
classifies single patches from per-class partial reconstructions.
``run_pipeline`` chains candidate sampling, affinity graphs, greedy
exemplar selection, spatially weighted coding, pooling, and the SVM.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coding import (
    Coder,
    SpatialWeightConfig,
    saco1,
    saco2,
    solve_weighted_l2_l1,
    spatial_weights,
)
from .config import PipelineConfig
from .data import Dictionary, sample_candidates
from .errors import InvalidInputError, PipelineStageError
from .graphs import build_feature_affinity, build_spatial_affinity
from .selection import ObjectiveWeights, SelectionResult, lazy_greedy


def pool_codes(codes) -> np.ndarray:
    """Average-pool a non-empty list of equal-length code vectors."""
    if len(codes) == 0:
        raise InvalidInputError("cannot pool an empty code list")
    stack = np.stack([np.asarray(c, dtype=np.float64) for c in codes])
    return stack.mean(axis=0)


@dataclass
class LinearSvmModel:
    """One-vs-rest linear classifier: scores = W f + b."""

    weights: np.ndarray  # (C, dim)
    biases: np.ndarray   # (C,)
    reg: float
    epochs: int
    seed: int

    @property
    def n_classes(self) -> int:
        return len(self.weights)


def _svm_objective(X, y_signs, w, b, reg) -> float:
    margins = y_signs * (X @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * reg * float(w @ w) + float(hinge.mean())


def svm_train(features, labels, n_classes=None, reg=1.0, epochs=300, seed=0,
              track_objective=False):
    """Train one-vs-rest hinge classifiers by full-batch subgradient descent.

    The per-class objective is 0.5*reg*||w||^2 plus the mean hinge loss;
    epoch t takes one subgradient step of size 1/(reg*t) from a zero
    start.  Full-batch steps make training deterministic and invariant
    to duplicating the training set.  ``seed`` is recorded for
    provenance in artifacts; the optimization itself draws nothing.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise InvalidInputError(f"features {X.shape} / labels {y.shape} mismatch")
    if reg <= 0 or epochs < 1:
        raise InvalidInputError(f"bad SVM settings reg={reg}, epochs={epochs}")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if np.unique(y).size < 2:
        raise InvalidInputError("SVM training needs at least two classes present")
    n, dim = X.shape
    W = np.zeros((n_classes, dim))
    B = np.zeros(n_classes)
    history = [] if track_objective else None
    for t in range(1, epochs + 1):
        step = 1.0 / (reg * t)
        if track_objective:
            history.append(
                float(np.mean([_svm_objective(X, np.where(y == c, 1.0, -1.0), W[c], B[c], reg)
                               for c in range(n_classes)]))
            )
        for c in range(n_classes):
            y_c = np.where(y == c, 1.0, -1.0)
            margins = y_c * (X @ W[c] + B[c])
            viol = margins < 1.0
            grad_w = reg * W[c] - (y_c[viol, None] * X[viol]).sum(axis=0) / n
            grad_b = -y_c[viol].sum() / n
            W[c] -= step * grad_w
            B[c] -= step * grad_b
    model = LinearSvmModel(W, B, float(reg), int(epochs), int(seed))
    return (model, history) if track_objective else model


def svm_scores(model: LinearSvmModel, feature) -> np.ndarray:
    f = np.asarray(feature, dtype=np.float64)
    if f.shape != (model.weights.shape[1],):
        raise InvalidInputError(
            f"feature dim {f.shape} does not match model dim {model.weights.shape[1]}"
        )
    return model.weights @ f + model.biases


def svm_predict(model: LinearSvmModel, feature):
    """Return (class, scores); argmax ties go to the lowest class index."""
    scores = svm_scores(model, feature)
    return int(scores.argmax()), scores


def src_classify(x, dictionary: Dictionary, class_groups=None, lambda1=0.01,
                 tol=1e-6, max_iter=1000):
    """Classify one patch by smallest per-class reconstruction residual.

    Codes ``x`` over the whole dictionary with uniform weights, then for
    each class keeps only that class's coefficients and measures
    ||x - D_c a_c||.  Returns (class, residuals); ties go to the lowest
    class index.
    """
    x = np.asarray(x, dtype=np.float64)
    if class_groups is None:
        labels = dictionary.atom_labels
        class_groups = [np.flatnonzero(labels == c) for c in range(int(labels.max()) + 1)]
    if any(len(g) == 0 for g in class_groups):
        raise InvalidInputError("every class needs at least one atom")
    w = np.ones(dictionary.n_atoms)
    a = solve_weighted_l2_l1(x, dictionary, w, lambda1, 0.0, tol, max_iter).coeffs
    residuals = np.empty(len(class_groups))
    for c, idx in enumerate(class_groups):
        idx = np.asarray(idx, dtype=np.int64)
        residuals[c] = np.linalg.norm(x - dictionary.matrix[:, idx] @ a[idx])
    return int(residuals.argmin()), residuals


# -- end-to-end pipeline ------------------------------------------------------


@dataclass
class PredictionRow:
    image_id: int
    true_label: int
    predicted: int
    scores: np.ndarray


@dataclass
class PipelineResult:
    config: PipelineConfig
    selection: SelectionResult | None
    dictionary: Dictionary
    predictions: list[PredictionRow]
    accuracy: float
    confusion: np.ndarray
    train_features: np.ndarray = field(repr=False, default=None)
    model: LinearSvmModel = field(repr=False, default=None)

    def predictions_csv_lines(self) -> list[str]:
        n_scores = len(self.predictions[0].scores) if self.predictions else 0
        header = "image_id,true_label,pred_label," + ",".join(
            f"score_{c}" for c in range(n_scores)
        )
        lines = [header]
        for row in self.predictions:
            scores = ",".join(repr(float(s)) for s in row.scores)
            lines.append(f"{row.image_id},{row.true_label},{row.predicted},{scores}")
        return lines

    def report_lines(self) -> list[str]:
        lines = ["# configuration"]
        lines += self.config.echo_lines()
        lines.append("")
        lines.append(f"accuracy = {self.accuracy:.6f}")
        lines.append("confusion_rows_true_cols_pred =")
        for row in self.confusion:
            lines.append("  " + " ".join(str(int(v)) for v in row))
        return lines


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(name, exc) from exc


def _code_one(patch, coder, dictionary, cfg, weight_cfg):
    if cfg.spatial_weighting:
        w = spatial_weights(patch.coord, dictionary, weight_cfg)
    else:
        w = np.ones(dictionary.n_atoms)
    if cfg.coder == "saco1":
        return saco1(patch.features, coder, w)
    if cfg.coder == "saco2":
        return saco2(patch.features, dictionary, w, cfg.lambda1, cfg.lambda2)
    return solve_weighted_l2_l1(patch.features, dictionary, w, cfg.lambda1, cfg.lambda2).coeffs


def encode_images(images, dictionary, coder, cfg: PipelineConfig, seed_key: int) -> np.ndarray:
    """Sample, code and pool each image into one pooled feature row."""
    weight_cfg = SpatialWeightConfig(cfg.weight_kernel, cfg.weight_epsilon, cfg.weight_scale)
    pooled = np.empty((len(images), dictionary.n_atoms))
    for i, img in enumerate(images):
        patches = sample_candidates([img], cfg.patches_per_image, [cfg.seed, seed_key])
        codes = [_code_one(p, coder, dictionary, cfg, weight_cfg) for p in patches]
        pooled[i] = pool_codes(codes)
    return pooled


def run_pipeline(train_images, test_images, cfg: PipelineConfig) -> PipelineResult:
    """Select a dictionary on train data, code both splits, train, predict.

    Deterministic given ``cfg.seed``: sampling, selection and training
    derive every random draw from it.  Stage failures re-raise as
    ``PipelineStageError`` naming the stage.
    """
    if not train_images or not test_images:
        raise InvalidInputError("need non-empty train and test image lists")

    candidates = _stage(
        "candidates", sample_candidates, train_images, cfg.candidates_per_image, [cfg.seed, 0]
    )

    def _graphs():
        S = build_feature_affinity(candidates, k_nn=cfg.k_nn)
        L = build_spatial_affinity(candidates, k_nn=cfg.k_nn, sigma=cfg.spatial_sigma)
        return S, L

    selection = None
    if cfg.selection == "greedy":
        S, L = _stage("graphs", _graphs)
        weights = ObjectiveWeights(cfg.lambda_s, cfg.lambda_d, cfg.lambda_b, cfg.lambda_c)
        selection = _stage("select", lazy_greedy, candidates, S, L, weights, cfg.dict_size)
        chosen = selection.ids
    else:
        rng = np.random.default_rng([cfg.seed, 1])
        chosen = sorted(
            int(i) for i in rng.choice(len(candidates), size=min(cfg.dict_size, len(candidates)),
                                       replace=False)
        )
    dictionary = _stage("dictionary", Dictionary, [candidates[i] for i in chosen])

    coder = None
    if cfg.coder in ("saco1",):
        coder = _stage("coder", Coder.build, dictionary, cfg.lambda1, cfg.lambda2)
    elif cfg.coder == "saco2":
        # saco2 solves per-patch ridge systems; Omega itself is not needed
        coder = None
    train_feats = _stage("encode-train", encode_images, train_images, dictionary, coder, cfg, 2)
    test_feats = _stage("encode-test", encode_images, test_images, dictionary, coder, cfg, 3)

    train_labels = np.array([img.label for img in train_images], dtype=np.int64)
    test_labels = np.array([img.label for img in test_images], dtype=np.int64)
    n_classes = int(max(train_labels.max(), test_labels.max())) + 1
    model = _stage(
        "svm", svm_train, train_feats, train_labels, n_classes, cfg.svm_reg, cfg.svm_epochs,
        cfg.seed,
    )

    predictions = []
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    hits = 0
    for img, feat in zip(test_images, test_feats):
        pred, scores = svm_predict(model, feat)
        predictions.append(PredictionRow(img.image_id, img.label, pred, scores))
        confusion[img.label, pred] += 1
        hits += int(pred == img.label)
    accuracy = hits / len(test_images)
    return PipelineResult(
        config=cfg,
        selection=selection,
        dictionary=dictionary,
        predictions=predictions,
        accuracy=accuracy,
        confusion=confusion,
        train_features=train_feats,
        model=model,
    )


def src_image_accuracy(test_images, dictionary: Dictionary, cfg: PipelineConfig,
                       lambda1=0.01) -> float:
    """Residual-baseline accuracy: per image, average per-class residuals
    over its sampled patches and pick the smallest."""
    labels = dictionary.atom_labels
    n_classes = int(labels.max()) + 1
    groups = [np.flatnonzero(labels == c) for c in range(n_classes)]
    hits = 0
    for img in test_images:
        patches = sample_candidates([img], cfg.patches_per_image, [cfg.seed, 3])
        totals = np.zeros(n_classes)
        for p in patches:
            _, residuals = src_classify(p.features, dictionary, groups, lambda1)
            totals += residuals
        hits += int(int(totals.argmin()) == img.label)
    return hits / len(test_images)
