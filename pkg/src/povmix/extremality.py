"""Extremality of finite measurements via injectivity of a sandwich map.

A measurement {P_i} is extreme in the convex set of measurements exactly when
the linear map

    T: (A_1, ..., A_k) -> sum_i S_i A_i S_i^dag,   S_i = sqrt(P_i) restricted
                                                    to the range of P_i,

is injective, where A_i acts on the r_i-dimensional range of P_i. The map is
assembled as a d^2 x (sum_i r_i^2) matrix whose column (i; j, k) is the
row-major vectorization of S_i E_jk S_i^dag, and injectivity is decided by
its smallest singular value against a relative threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import PSD_TOL, RANK_TOL, check_hermitian, kernel_basis
from .model import FinitePOVM, PovmError, prune_and_merge

# Verdict threshold: non-extreme when the smallest singular value is at or
# below MARGIN_FACTOR * sigma_max * max(d^2, sum r_i^2).
MARGIN_FACTOR = 1e-10

# When picking the Hermitian part of a kernel vector, fall back to the
# anti-Hermitian part once the Hermitian part's norm drops below this.
_HERM_PREFERENCE = 1e-6


class KernelEmptyError(RuntimeError):
    """Raised when a kernel element is requested from an injective map."""


@dataclass(frozen=True)
class TpMap:
    """The assembled sandwich map of a measurement.

    frames[i] is S_i (d x r_i); matrix is d^2 x sum r_i^2 with block columns
    in outcome order and (j, k) running row-major within each block.
    """

    dim: int
    labels: tuple
    frames: tuple
    ranks: tuple
    matrix: np.ndarray

    @property
    def domain_dim(self) -> int:
        return int(sum(r * r for r in self.ranks))


@dataclass(frozen=True)
class ExtremalityVerdict:
    """Outcome of the injectivity test.

    margin is the smallest singular value over the domain (0 when the domain
    dimension already exceeds d^2 and the test short-circuits); threshold is
    the cutoff the margin was compared against. is_extreme iff kernel_dim
    is zero.
    """

    is_extreme: bool
    margin: float
    kernel_dim: int
    domain_dim: int
    threshold: float


@dataclass(frozen=True)
class BlockHermitian:
    """A Hermitian element of the map's block-diagonal domain."""

    blocks: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "blocks",
            tuple(np.asarray(b, dtype=np.complex128) for b in self.blocks),
        )

    @property
    def ranks(self) -> tuple:
        return tuple(b.shape[0] for b in self.blocks)

    def to_vector(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, dtype=np.complex128)
        return np.concatenate([b.reshape(-1) for b in self.blocks])

    def eigenvalues(self) -> np.ndarray:
        """All block eigenvalues, ascending."""
        vals = [np.linalg.eigvalsh(check_hermitian(b)) for b in self.blocks if b.size]
        if not vals:
            return np.zeros(0)
        return np.sort(np.concatenate(vals))

    def scaled(self, factor: float) -> "BlockHermitian":
        return BlockHermitian(tuple(factor * b for b in self.blocks))


def blocks_from_vector(vector: np.ndarray, ranks) -> tuple:
    """Cut a stacked coefficient vector into row-major r_i x r_i blocks."""
    blocks = []
    offset = 0
    for r in ranks:
        blocks.append(vector[offset : offset + r * r].reshape(r, r))
        offset += r * r
    if offset != vector.size:
        raise ValueError(f"vector length {vector.size} does not match ranks {tuple(ranks)}")
    return tuple(blocks)


def frame_columns(frame: np.ndarray) -> np.ndarray:
    """Columns vec(S E_jk S^dag) for one frame S, as a d^2 x r^2 matrix."""
    d, r = frame.shape
    if r == 0:
        return np.zeros((d * d, 0), dtype=np.complex128)
    return np.einsum("aj,bk->abjk", frame, frame.conj()).reshape(d * d, r * r)


def build_tp_map(povm: FinitePOVM, rank_tol: float = RANK_TOL) -> TpMap:
    """Assemble the sandwich map of a measurement.

    Each frame S_i is sqrt(P_i) restricted to the numerical range of P_i,
    computed directly from the eigendecomposition (eigenvectors above the
    relative rank cutoff, scaled by sqrt of their eigenvalues). Zero effects
    yield empty frames and contribute no columns.
    """
    w, v = np.linalg.eigh(
        (povm.effects + povm.effects.conj().transpose(0, 2, 1)) / 2.0
    )
    scale = 1.0 + float(np.max(np.abs(w)))
    if float(w.min()) < -PSD_TOL * scale:
        raise PovmError(
            f"effect is not PSD: min eigenvalue {w.min():.3e}"
        )
    frames = []
    for i in range(povm.n_outcomes):
        cutoff = rank_tol * max(float(w[i, -1]), 1.0)
        keep = w[i] > cutoff
        frames.append(np.ascontiguousarray(v[i][:, keep] * np.sqrt(w[i, keep])))
    ranks = tuple(f.shape[1] for f in frames)
    d = povm.dim
    if any(ranks):
        matrix = np.hstack([frame_columns(f) for f in frames])
    else:
        matrix = np.zeros((d * d, 0), dtype=np.complex128)
    return TpMap(d, povm.labels, tuple(frames), ranks, matrix)


def apply_tp(tp: TpMap, element: BlockHermitian) -> np.ndarray:
    """Evaluate the map on a block element, returning a d x d matrix."""
    if element.ranks != tp.ranks:
        raise ValueError(f"block ranks {element.ranks} do not match map ranks {tp.ranks}")
    return (tp.matrix @ element.to_vector()).reshape(tp.dim, tp.dim)


def verdict_from_tp(tp: TpMap, margin_factor: float = MARGIN_FACTOR) -> ExtremalityVerdict:
    """Injectivity verdict for an assembled map.

    When the domain dimension exceeds d^2 the map cannot be injective and the
    SVD is skipped; the reported kernel dimension is then the guaranteed
    lower bound domain_dim - d^2.
    """
    n = tp.domain_dim
    d2 = tp.dim * tp.dim
    if n == 0:
        raise PovmError("map has an empty domain (all effects are zero)")
    if n > d2:
        return ExtremalityVerdict(False, 0.0, n - d2, n, 0.0)
    s = np.linalg.svd(tp.matrix, compute_uv=False)
    sigma_max = float(s[0])
    threshold = margin_factor * sigma_max * max(d2, n)
    margin = float(s[-1])
    kernel_dim = int(np.count_nonzero(s <= threshold))
    return ExtremalityVerdict(kernel_dim == 0, margin, kernel_dim, n, threshold)


def is_extreme(
    povm: FinitePOVM,
    margin_factor: float = MARGIN_FACTOR,
    rank_tol: float = RANK_TOL,
) -> ExtremalityVerdict:
    """Decide extremality of a measurement.

    Zero effects and coincident labels are cleaned up first, so the verdict
    refers to the measurement's nonzero outcomes.
    """
    pruned = prune_and_merge(povm)
    return verdict_from_tp(build_tp_map(pruned, rank_tol), margin_factor)


def split_hermitian(blocks) -> tuple:
    """Hermitian and anti-Hermitian parts of a block tuple."""
    herm = tuple((b + b.conj().T) / 2.0 for b in blocks)
    anti = tuple((b - b.conj().T) / 2.0j for b in blocks)
    return herm, anti


def _blocks_norm(blocks) -> float:
    return float(np.sqrt(sum(float(np.linalg.norm(b) ** 2) for b in blocks)))


def hermitian_kernel_element(
    tp: TpMap,
    rank_tol: float = RANK_TOL,
) -> BlockHermitian:
    """A Hermitian, spectrally normalized element of the map's kernel.

    Takes the first kernel vector of the assembled matrix, splits it into
    blocks, and keeps the Hermitian part unless it is negligible, in which
    case the anti-Hermitian part (times -i) is used; the kernel is closed
    under the adjoint, so both parts are kernel elements. The result is
    scaled so the largest block eigenvalue magnitude is 1.

    Raises KernelEmptyError when the map is injective.
    """
    basis = kernel_basis(tp.matrix, rank_tol)
    if basis.shape[1] == 0:
        raise KernelEmptyError(
            "the map is injective (measurement is extreme); no kernel element exists"
        )
    raw = blocks_from_vector(basis[:, 0], tp.ranks)
    herm, anti = split_hermitian(raw)
    chosen = herm if _blocks_norm(herm) > _HERM_PREFERENCE else anti
    if _blocks_norm(chosen) <= 1e-12:
        raise KernelEmptyError("kernel vector vanished after Hermitian projection")
    element = BlockHermitian(chosen)
    radius = float(np.max(np.abs(element.eigenvalues())))
    if radius <= 0.0:
        raise KernelEmptyError("kernel element has empty spectrum")
    return element.scaled(1.0 / radius)
