"""Rotation-search alignment and viewpoint clustering.

Images are compared at a canonical 40x40 working size: one image is
rotated through a grid of angles (bilinear, about the image center,
zero padding), resized, and matched against the other by Euclidean
pixel distance.  Distances feed a reciprocal similarity with an epsilon
floor, a k-medoids clustering of viewpoints, and per-image alignment to
the nearest medoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledImage
from .errors import InvalidInputError

WORK_SIZE = 40
DEFAULT_EPSILON = 1e-6


def default_theta_grid(step=10.0) -> np.ndarray:
    if step <= 0 or step > 360:
        raise InvalidInputError(f"theta step must be in (0, 360], got {step}")
    return np.arange(0.0, 360.0, step)


def _as_image(image) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"image must be a non-empty 2-D array, got shape {arr.shape}")
    return arr


def _bilinear_sample(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample img at float (x, y) positions; zero outside the frame."""
    h, w = img.shape
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    out = np.zeros(xs.shape)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            if np.any(valid):
                vals = np.zeros(xs.shape)
                vals[valid] = img[yi[valid], xi[valid]]
                out += wgt * vals
    return out


def rotate_image(image, theta_deg: float) -> np.ndarray:
    """Rotate by theta degrees about the center; bilinear, zero padding."""
    img = _as_image(image)
    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    t = math.radians(theta_deg)
    ct, st = math.cos(t), math.sin(t)
    yy, xx = np.mgrid[0:h, 0:w]
    dx = xx - cx
    dy = yy - cy
    # inverse map: rotate destination offsets by -theta
    src_x = ct * dx + st * dy + cx
    src_y = -st * dx + ct * dy + cy
    return _bilinear_sample(img, src_x, src_y)


def resize_image(image, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with corner-aligned sampling (identity if same size)."""
    img = _as_image(image)
    h, w = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = np.linspace(0.0, h - 1.0, out_h) if out_h > 1 else np.zeros(1)
    xs = np.linspace(0.0, w - 1.0, out_w) if out_w > 1 else np.zeros(1)
    gx, gy = np.meshgrid(xs, ys)
    return _bilinear_sample(img, gx, gy)


def rotate_resize(image, theta_deg: float, size: int = WORK_SIZE) -> np.ndarray:
    """Rotate about the center, then resize to the working square."""
    return resize_image(rotate_image(image, theta_deg), size, size)


def _min_rotation_distance(a40: np.ndarray, other, theta_grid) -> tuple[float, float]:
    """min over theta of ||a40 - R_theta(other)||_2 and its argmin angle.

    Ties go to the earliest grid angle.
    """
    best_d = None
    best_t = None
    for t in np.asarray(theta_grid, dtype=np.float64):
        d = float(np.linalg.norm(a40 - rotate_resize(other, t)))
        if best_d is None or d < best_d:
            best_d, best_t = d, float(t)
    return best_d, best_t


def pairwise_similarity(a, b, theta_grid, epsilon=DEFAULT_EPSILON) -> float:
    """Reciprocal of the best rotation-search distance, both directions.

    Returns the average of 1/(epsilon + min_theta ||A - R_theta(B)||)
    and the same with the roles swapped.  Identical images score
    exactly 1/epsilon when the grid contains 0.
    """
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    grid = np.asarray(theta_grid, dtype=np.float64)
    if grid.size == 0:
        raise InvalidInputError("theta grid is empty")
    a40 = rotate_resize(a, 0.0)
    b40 = rotate_resize(b, 0.0)
    d_ab, _ = _min_rotation_distance(a40, b, grid)
    d_ba, _ = _min_rotation_distance(b40, a, grid)
    return 0.5 * (1.0 / (epsilon + d_ab) + 1.0 / (epsilon + d_ba))


def dissimilarity_matrix(images, theta_grid, epsilon=DEFAULT_EPSILON) -> np.ndarray:
    """Symmetric rotation-search dissimilarities with a zero diagonal.

    Off-diagonal entries are epsilon plus the average of the two
    directional minima; the diagonal is zero by convention so that
    trivial clusterings have zero cost.
    """
    if epsilon <= 0:
        raise InvalidInputError(f"epsilon must be > 0, got {epsilon}")
    grid = np.asarray(theta_grid, dtype=np.float64)
    if grid.size == 0:
        raise InvalidInputError("theta grid is empty")
    n = len(images)
    pixels = [img.pixels if isinstance(img, LabeledImage) else img for img in images]
    base = np.stack([rotate_resize(px, 0.0).ravel() for px in pixels])
    rots = np.stack(
        [np.stack([rotate_resize(px, t).ravel() for t in grid]) for px in pixels]
    )  # (n, T, s)
    base_sq = np.einsum("is,is->i", base, base)
    rot_sq = np.einsum("its,its->it", rots, rots)
    dm = np.zeros((n, n))
    for i in range(n):
        # directional distance from i's canonical frame to every rotation of j
        d2 = base_sq[i] + rot_sq - 2.0 * (rots @ base[i])
        np.maximum(d2, 0.0, out=d2)
        dm[i] = np.sqrt(d2.min(axis=1))
    sym = 0.5 * (dm + dm.T) + epsilon
    np.fill_diagonal(sym, 0.0)
    return sym


@dataclass
class ViewpointModel:
    """Medoid exemplars for canonical viewpoints plus the search grid."""

    medoid_ids: list[int]
    thumbnails: list[np.ndarray]  # 40x40 canonical frames
    theta_grid: np.ndarray

    def __post_init__(self):
        if len(self.medoid_ids) < 1:
            raise InvalidInputError("viewpoint model needs at least one medoid")
        self.theta_grid = np.asarray(self.theta_grid, dtype=np.float64)
        if self.theta_grid.size == 0 or np.any((self.theta_grid < 0) | (self.theta_grid >= 360)):
            raise InvalidInputError("theta grid angles must lie in [0, 360)")


def k_medoids(images, k, theta_grid, seed, max_iter=100, epsilon=DEFAULT_EPSILON):
    """Voronoi-iteration k-medoids on rotation-search dissimilarities.

    Returns (model, assignments, cost_history).  Initial medoids are a
    seeded draw; assignment ties go to the lowest cluster index and
    medoid-update ties to the lowest member index, so runs are fully
    reproducible.  The cost history never increases.
    """
    n = len(images)
    if not 1 <= k <= n:
        raise InvalidInputError(f"k must be in [1, {n}], got {k}")
    dm = dissimilarity_matrix(images, theta_grid, epsilon)
    rng = np.random.default_rng(seed)
    medoids = sorted(int(i) for i in rng.choice(n, size=k, replace=False))
    cost_history = []
    assign = None
    for _ in range(max_iter):
        dist_to_medoids = dm[:, medoids]  # (n, k)
        assign = dist_to_medoids.argmin(axis=1)
        cost_history.append(float(dist_to_medoids[np.arange(n), assign].sum()))
        new_medoids = []
        for ci in range(k):
            members = np.flatnonzero(assign == ci)
            if members.size == 0:
                new_medoids.append(medoids[ci])
                continue
            within = dm[np.ix_(members, members)].sum(axis=1)
            new_medoids.append(int(members[int(within.argmin())]))
        if new_medoids == medoids:
            break
        medoids = new_medoids
    pixels = [img.pixels if isinstance(img, LabeledImage) else img for img in images]
    model = ViewpointModel(
        medoid_ids=list(medoids),
        thumbnails=[rotate_resize(pixels[i], 0.0) for i in medoids],
        theta_grid=np.asarray(theta_grid, dtype=np.float64),
    )
    return model, np.asarray(assign, dtype=np.int64), cost_history


def align_to_medoid(image, model: ViewpointModel):
    """Best (cluster, rotation) for one image, plus the rotated image.

    Scans every medoid and grid angle for the smallest distance between
    the rotated image and the medoid thumbnail; ties prefer the lowest
    cluster index, then the earliest grid angle.  Returns
    (aligned_image, cluster_index, theta_star) where the aligned image
    is the original raster rotated by theta_star.
    """
    px = image.pixels if isinstance(image, LabeledImage) else image
    px = _as_image(px)
    rotated40 = [rotate_resize(px, t) for t in model.theta_grid]
    best = None  # (distance, cluster, theta)
    for ci, thumb in enumerate(model.thumbnails):
        for ti, r40 in enumerate(rotated40):
            d = float(np.linalg.norm(r40 - thumb))
            if best is None or d < best[0]:
                best = (d, ci, float(model.theta_grid[ti]))
    _, cluster, theta = best
    return rotate_image(px, theta), cluster, theta


# -- PGM files ----------------------------------------------------------------


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM into floats in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise InvalidInputError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if w < 1 or h < 1 or not 0 < maxval <= 255:
        raise InvalidInputError(f"{path}: unsupported PGM geometry {w}x{h} maxval {maxval}")
    i += 1  # single whitespace after maxval
    raster = data[i : i + w * h]
    if len(raster) != w * h:
        raise InvalidInputError(f"{path}: truncated raster, expected {w * h} bytes")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w).astype(np.float64) / maxval


def write_pgm(path, image) -> None:
    """Write floats in [0, 1] as a binary (P5) PGM with maxval 255."""
    img = _as_image(image)
    quant = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = quant.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quant.tobytes())
