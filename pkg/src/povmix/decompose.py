"""Decomposition of measurements into finite mixtures of extreme ones.

A non-extreme measurement P is split along a Hermitian kernel element D of
its sandwich map: the children P(+-)_i = S_i (1 +- tau_(+-) D_i) S_i^dag with
tau_+ = 1/|lambda_min(D)| and tau_- = 1/lambda_max(D) are valid measurements,
each with strictly smaller rank profile, and

    P = w_+ P_+ + w_- P_-,   w_+ = tau_- / (tau_+ + tau_-),
                             w_- = tau_+ / (tau_+ + tau_-).

Recursing on both children terminates because the integer sum of squared
effect ranks strictly decreases along every branch. The kernel element fed
to each split is derived from a deterministic walk to an extreme point of
the current face, which keeps the recursion tree linear in the rank profile
instead of exponential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .extremality import (
    MARGIN_FACTOR,
    BlockHermitian,
    ExtremalityVerdict,
    TpMap,
    apply_tp,
    blocks_from_vector,
    build_tp_map,
    frame_columns,
    split_hermitian,
    verdict_from_tp,
)
from .linalg import RANK_TOL, kernel_basis
from .model import (
    LABEL_TOL,
    PRUNE_TOL,
    FinitePOVM,
    PovmError,
    align_label_universe,
    born_probabilities,
    convex_combine,
    effects_distance,
    prune_and_merge,
)
from .outcomes import gen_random_state

# A split is rejected when max(tau) * ||T_P(D)|| exceeds this; the children
# would then miss exact normalization.
RESIDUAL_TOL = 1e-9

# Eigenvalues of the saturated block factors with |x| at or below this are
# written as exact zeros, forcing the rank drop the step is designed for.
_CLAMP = 1e-12

DEFAULT_MAX_LEAVES = 4096


class SplitError(RuntimeError):
    """A proposed split direction is unusable (not a kernel element, or
    one-sided spectrum)."""


@dataclass(frozen=True)
class SplitResult:
    """One convex split of a measurement along a kernel element."""

    weight_plus: float
    weight_minus: float
    tau_plus: float
    tau_minus: float
    child_plus: FinitePOVM
    child_minus: FinitePOVM


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    povm: FinitePOVM
    verdict: ExtremalityVerdict | None = None


@dataclass(frozen=True)
class ExtremalMixture:
    """A convex mixture over measurements, with a completeness flag.

    When complete, every component passed the extremality test; when the
    leaf budget was exhausted, unfinished branches are carried as components
    with their (non-extreme) verdicts so the mixture still reconstructs the
    input exactly.
    """

    dim: int
    components: tuple
    complete: bool

    def __post_init__(self):
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise PovmError(f"component weights sum to {total!r}, not 1 within 1e-12")
        if any(c.povm.dim != self.dim for c in self.components):
            raise PovmError("component dimension mismatch")

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])


def _saturated_blocks(eigs, vecs, tau: float, sign: float):
    """Block factors U diag(1 + sign*tau*lambda) U^dag with exact-zero clamping."""
    out = []
    for lam, u in zip(eigs, vecs):
        if lam.size == 0:
            out.append(np.zeros((0, 0), dtype=np.complex128))
            continue
        vals = 1.0 + sign * tau * lam
        vals[np.abs(vals) <= _CLAMP] = 0.0
        if np.any(vals < 0.0):
            raise SplitError(
                f"saturated factor has negative eigenvalue {vals.min():.3e}"
            )
        m = (u * vals) @ u.conj().T
        out.append((m + m.conj().T) / 2.0)
    return out


def split_once(
    povm: FinitePOVM,
    element: BlockHermitian,
    tp: TpMap | None = None,
    rank_tol: float = RANK_TOL,
    residual_tol: float = RESIDUAL_TOL,
) -> SplitResult:
    """Split a measurement along a Hermitian kernel element of its map.

    The element must have both positive and negative eigenvalues and must
    actually annihilate under the map (up to residual_tol after scaling by
    the saturation parameters); either failure raises SplitError.
    """
    if tp is None:
        tp = build_tp_map(povm, rank_tol)
    if element.ranks != tp.ranks:
        raise SplitError(
            f"element ranks {element.ranks} do not match map ranks {tp.ranks}"
        )
    eigs, vecs = [], []
    for b in element.blocks:
        if b.size == 0:
            eigs.append(np.zeros(0))
            vecs.append(np.zeros((0, 0), dtype=np.complex128))
        else:
            w, v = np.linalg.eigh((b + b.conj().T) / 2.0)
            eigs.append(w)
            vecs.append(v)
    all_eigs = np.concatenate([e for e in eigs if e.size]) if any(e.size for e in eigs) else np.zeros(0)
    if all_eigs.size == 0:
        raise SplitError("element is empty")
    lam_min = float(all_eigs.min())
    lam_max = float(all_eigs.max())
    radius = max(abs(lam_min), abs(lam_max))
    if radius <= 0.0:
        raise SplitError("element is zero")
    side_tol = 1e-12 * radius
    if lam_max <= side_tol or lam_min >= -side_tol:
        raise SplitError(
            f"element spectrum is one-sided (min {lam_min:.3e}, max {lam_max:.3e}); "
            "kernel elements of a normalized measurement have both signs"
        )
    tau_plus = 1.0 / abs(lam_min)
    tau_minus = 1.0 / lam_max
    residual = float(np.linalg.norm(apply_tp(tp, element)))
    if max(tau_plus, tau_minus) * residual > residual_tol:
        raise SplitError(
            f"element is not in the kernel: ||T(D)|| = {residual:.3e} "
            f"with tau = {max(tau_plus, tau_minus):.3e}"
        )
    d = tp.dim
    children = []
    for tau, sign in ((tau_plus, 1.0), (tau_minus, -1.0)):
        factors = _saturated_blocks(eigs, vecs, tau, sign)
        effects = np.empty((len(tp.frames), d, d), dtype=np.complex128)
        for i, (frame, factor) in enumerate(zip(tp.frames, factors)):
            if frame.shape[1] == 0:
                effects[i] = 0.0
            else:
                e = frame @ factor @ frame.conj().T
                effects[i] = (e + e.conj().T) / 2.0
        children.append(FinitePOVM(d, tp.labels, effects))
    total = tau_plus + tau_minus
    return SplitResult(
        weight_plus=tau_minus / total,
        weight_minus=tau_plus / total,
        tau_plus=tau_plus,
        tau_minus=tau_minus,
        child_plus=children[0],
        child_minus=children[1],
    )


def _first_kernel_direction(matrix: np.ndarray, ranks, rank_tol: float):
    """First kernel vector of one walk step, Hermitian part preferred.

    Returns (blocks, eigs, vecs, lam_min) of the chosen Hermitian direction,
    already flipped so the dominant eigenvalue is the negative one, or None
    when the matrix is injective.
    """
    basis = kernel_basis(matrix, rank_tol)
    if basis.shape[1] == 0:
        return None
    raw = blocks_from_vector(basis[:, 0], ranks)
    herm, anti = split_hermitian(raw)
    norm_herm = np.sqrt(sum(float(np.linalg.norm(b) ** 2) for b in herm))
    blocks = herm if norm_herm > 1e-6 else anti
    eigs, vecs = [], []
    for b in blocks:
        if b.size == 0:
            eigs.append(np.zeros(0))
            vecs.append(np.zeros((0, 0), dtype=np.complex128))
        else:
            w, v = np.linalg.eigh(b)
            eigs.append(w)
            vecs.append(v)
    flat = np.concatenate([e for e in eigs if e.size])
    lam_min, lam_max = float(flat.min()), float(flat.max())
    radius = max(abs(lam_min), abs(lam_max))
    if radius <= 0.0:
        raise SplitError("kernel direction is zero")
    if lam_max > -lam_min:
        # Flip so the dominant eigenvalue sits on the negative side. The
        # saturating step is then tau = 1/radius, the smallest possible,
        # which keeps each step's kernel-residual amplification at machine
        # level even when the direction is nearly one-sided.
        blocks = tuple(-b for b in blocks)
        eigs = [-w[::-1] for w in eigs]
        vecs = [v[:, ::-1] for v in vecs]
        lam_min = -lam_max
    return blocks, eigs, vecs, lam_min


def _extremal_direction(
    tp: TpMap,
    margin_factor: float = MARGIN_FACTOR,
    rank_tol: float = RANK_TOL,
) -> BlockHermitian:
    """Kernel element pointing at an extreme point of the measurement's face.

    Starting from the measurement itself (block coordinates B_i = identity),
    repeatedly apply the first-kernel-vector rule one-sidedly: saturate
    toward the negative eigenvalue side, which zeroes at least one block
    eigenvalue per step, until the current point is extreme. The returned
    direction D = (B_final - identity), spectrally normalized, is a kernel
    element of the original map whose + saturation lands exactly on that
    extreme point, so the caller's split peels one extreme component off.
    """
    d = tp.dim
    d2 = d * d
    ranks = tp.ranks
    rank_one = all(r <= 1 for r in ranks)

    if rank_one:
        # Blocks are scalars; the map's columns just get rescaled each step.
        base = tp.matrix  # d^2 x n, column i = vec(S_i S_i^dag)
        idx = [i for i, r in enumerate(ranks) if r == 1]
        beta = np.ones(len(idx))
        first = True
        while True:
            active = beta > 0.0
            cols = base[:, active] * beta[active] if not first else base
            m = cols.shape[1]
            if m == 0:
                raise SplitError("walk emptied the measurement")
            s, vh = _svd_vals_vh(cols)
            sigma_max = float(s[0])
            cutoff = margin_factor * sigma_max * max(d2, m)
            sigmas = np.zeros(m)
            sigmas[: s.size] = s
            kernel = np.flatnonzero(sigmas <= cutoff)
            if kernel.size == 0:
                break
            c = vh[kernel[0]].conj()
            h = c.real if np.linalg.norm(c.real) > 1e-6 else c.imag
            radius = float(np.max(np.abs(h)))
            if radius <= 0.0:
                raise SplitError("kernel direction is zero")
            if h.max() > -h.min():
                # Saturate the dominant entry, not the (possibly tiny)
                # negative tail: tau stays at 1/radius, so the vector's
                # kernel residual is never amplified past machine level.
                h = -h
            tau = 1.0 / radius
            step = 1.0 + tau * h
            step[np.abs(step) <= _CLAMP] = 0.0
            if np.any(step < 0.0):
                raise SplitError(f"negative block factor {step.min():.3e} in walk")
            scale = np.ones(len(idx))
            scale[active] = step
            beta = beta * scale
            first = False
        delta = beta - 1.0
        blocks = []
        j = 0
        for r in ranks:
            if r == 0:
                blocks.append(np.zeros((0, 0), dtype=np.complex128))
            else:
                blocks.append(np.array([[delta[j]]], dtype=np.complex128))
                j += 1
        element = BlockHermitian(tuple(blocks))
    else:
        blocks_b = [np.eye(r, dtype=np.complex128) for r in ranks]
        first = True
        guard = tp.domain_dim + 16
        for _ in range(guard):
            if first:
                factors = [np.eye(r, dtype=np.complex128) for r in ranks]
                matrix = tp.matrix
                sub_ranks = list(ranks)
            else:
                # Factor each block as B = g g^dag; the walk frame is S g.
                factors = []
                sub_ranks = []
                cols = []
                for S, B in zip(tp.frames, blocks_b):
                    if B.shape[0] == 0:
                        factors.append(np.zeros((0, 0), dtype=np.complex128))
                        sub_ranks.append(0)
                        continue
                    w, v = np.linalg.eigh(B)
                    keep = w > 1e-12 * max(float(w[-1]), 1.0)
                    g = v[:, keep] * np.sqrt(w[keep])
                    factors.append(g)
                    sub_ranks.append(int(np.count_nonzero(keep)))
                    cols.append(frame_columns(S @ g))
                matrix = (
                    np.hstack(cols)
                    if cols
                    else np.zeros((d2, 0), dtype=np.complex128)
                )
            m = matrix.shape[1]
            if m == 0:
                raise SplitError("walk emptied the measurement")
            s = np.linalg.svd(matrix, compute_uv=False)
            cutoff = margin_factor * float(s[0]) * max(d2, m)
            n_kernel = m - min(m, d2) + int(np.count_nonzero(s <= cutoff))
            if n_kernel == 0:
                break
            picked = _first_kernel_direction(matrix, tuple(sub_ranks), rank_tol)
            if picked is None:
                break
            _, eigs, vecs, lam_min = picked
            tau = 1.0 / abs(lam_min)
            for i in range(len(ranks)):
                if sub_ranks[i] == 0:
                    continue
                vals = 1.0 + tau * eigs[i]
                vals[np.abs(vals) <= _CLAMP] = 0.0
                if np.any(vals < 0.0):
                    raise SplitError(f"negative block factor {vals.min():.3e} in walk")
                mfac = (vecs[i] * vals) @ vecs[i].conj().T
                nb = factors[i] @ mfac @ factors[i].conj().T
                blocks_b[i] = (nb + nb.conj().T) / 2.0
            first = False
        else:
            raise SplitError("walk failed to reach an extreme point")
        element = BlockHermitian(
            tuple(
                b - np.eye(r, dtype=np.complex128) if r else b
                for b, r in zip(blocks_b, ranks)
            )
        )
    radius = float(np.max(np.abs(element.eigenvalues())))
    if radius <= 0.0:
        raise SplitError("walk produced a zero direction (node was extreme?)")
    return element.scaled(1.0 / radius)


def _svd_vals_vh(a: np.ndarray):
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    return s, vh


def decompose_extremal(
    povm: FinitePOVM,
    max_leaves: int = DEFAULT_MAX_LEAVES,
    merge_leaves: bool = False,
    margin_factor: float = MARGIN_FACTOR,
    rank_tol: float = RANK_TOL,
    prune_tol: float = PRUNE_TOL,
    label_tol: float = LABEL_TOL,
    residual_tol: float = RESIDUAL_TOL,
) -> ExtremalMixture:
    """Decompose a measurement into a finite mixture of extreme ones.

    Depth-first: prune and merge, test extremality, emit a leaf or split
    along the walk-derived kernel element and recurse on both children with
    multiplied weights. When emitting another pair of children would exceed
    max_leaves, the remaining branches are emitted unsplit with their
    non-extreme verdicts and the mixture is flagged incomplete; the convex
    reconstruction identity holds either way.
    """
    stack = [(1.0, povm, "")]
    leaves = []
    complete = True
    while stack:
        weight, node, path = stack.pop()
        node = prune_and_merge(node, prune_tol, label_tol)
        tp = build_tp_map(node, rank_tol)
        verdict = verdict_from_tp(tp, margin_factor)
        if verdict.is_extreme:
            leaves.append(MixtureComponent(weight, node, verdict))
            continue
        if len(leaves) + len(stack) + 2 > max_leaves:
            complete = False
            leaves.append(MixtureComponent(weight, node, verdict))
            continue
        try:
            direction = _extremal_direction(tp, margin_factor, rank_tol)
            split = split_once(node, direction, tp, rank_tol, residual_tol)
        except SplitError as exc:
            raise SplitError(f"split failed at branch '{path or 'root'}': {exc}") from exc
        stack.append((weight * split.weight_minus, split.child_minus, path + "-"))
        stack.append((weight * split.weight_plus, split.child_plus, path + "+"))
    if merge_leaves:
        leaves = _merge_identical_leaves(leaves, label_tol)
    return ExtremalMixture(povm.dim, tuple(leaves), complete)


def _merge_identical_leaves(leaves, label_tol: float, atol: float = 1e-8):
    merged = []
    for leaf in leaves:
        for i, kept in enumerate(merged):
            if (
                kept.povm.n_outcomes == leaf.povm.n_outcomes
                and effects_distance(kept.povm, leaf.povm, label_tol) <= atol
            ):
                merged[i] = MixtureComponent(
                    kept.weight + leaf.weight, kept.povm, kept.verdict
                )
                break
        else:
            merged.append(leaf)
    return merged


@dataclass(frozen=True)
class BarycenterReport:
    """Agreement between a measurement and a mixture claiming to realize it."""

    trials: int
    max_functional_residual: float
    effect_residual: float
    weight_sum: float

    def within(self, tol: float = 1e-8) -> bool:
        return (
            self.max_functional_residual < tol and self.effect_residual < tol
        )


def verify_barycenter(
    povm: FinitePOVM,
    mixture: ExtremalMixture,
    trials: int = 64,
    seed: int = 0,
    label_tol: float = LABEL_TOL,
) -> BarycenterReport:
    """Check that the mixture reproduces the measurement's statistics.

    Draws random (state, outcome function) pairs, alternating pure and mixed
    states, and compares the expectation functional of the measurement with
    the weighted sum over components; also reports the effect-wise max-norm
    residual of the convex recombination.
    """
    if mixture.dim != povm.dim:
        raise PovmError(f"mixture dim {mixture.dim} != measurement dim {povm.dim}")
    pairs = [(c.weight, c.povm) for c in mixture.components]
    recombined = convex_combine(pairs, label_tol)
    effect_residual = effects_distance(povm, recombined, label_tol)
    label_lists = [povm.labels] + [p.labels for _, p in pairs]
    universe, raw_maps = align_label_universe(label_lists, label_tol)
    maps = [np.asarray(m, dtype=np.intp) for m in raw_maps]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in range(trials):
        state = gen_random_state(povm.dim, rng=rng, pure=(t % 2 == 0))
        values = rng.standard_normal(len(universe))
        lhs = float(values[maps[0]] @ born_probabilities(povm, state))
        rhs = 0.0
        for (w, leaf), idx in zip(pairs, maps[1:]):
            rhs += w * float(values[idx] @ born_probabilities(leaf, state))
        worst = max(worst, abs(lhs - rhs))
    return BarycenterReport(
        trials=trials,
        max_functional_residual=worst,
        effect_residual=effect_residual,
        weight_sum=float(sum(w for w, _ in pairs)),
    )
