"""Finite-outcome measurements and the algebraic operations on them.

A measurement is a finite list of labeled effects: PSD matrices that sum to
the identity. Labels are either integer indices or points in R^n; point
labels compare equal within a Euclidean tolerance, integer labels compare
exactly, and the two kinds never mix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .linalg import PSD_TOL, as_square_matrix, eig_hermitian, herm_defect

Label = Union[int, tuple]

LABEL_TOL = 1e-9

# Effects with trace at or below this are treated as absent outcomes.
PRUNE_TOL = 1e-12

# Tiny negative probabilities from rounding are clamped; anything lower
# signals an invalid state or measurement upstream.
PROB_CLAMP = 1e-12

NORMALIZATION_TOL = 1e-9


def as_label(value) -> Label:
    """Normalize a label to an int or a tuple of floats."""
    if isinstance(value, bool):
        raise ValueError("labels must be integers or real points, not bool")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (tuple, list, np.ndarray)):
        point = tuple(float(x) for x in np.asarray(value, dtype=np.float64).reshape(-1))
        if not point or not all(np.isfinite(point)):
            raise ValueError(f"point label must be a nonempty finite vector, got {value!r}")
        return point
    raise ValueError(f"unsupported label {value!r}")


def labels_equal(a: Label, b: Label, tol: float = LABEL_TOL) -> bool:
    """Equality of labels: exact for ints, Euclidean within tol for points."""
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, tuple) and isinstance(b, tuple):
        if len(a) != len(b):
            return False
        return float(np.linalg.norm(np.subtract(a, b))) <= tol
    return False


def label_to_jsonable(label: Label):
    return label if isinstance(label, int) else list(label)


class PovmError(ValueError):
    """Invalid measurement data or an operation applied outside its domain."""


@dataclass(frozen=True)
class FinitePOVM:
    """A finite collection of labeled effects on a d-dimensional system.

    The container checks shapes and label well-formedness only; semantic
    validity (PSD effects, normalization, distinct labels) is a separate,
    report-based check so that broken inputs can still be represented and
    diagnosed. Effects are stored as a read-only (k, d, d) complex array.
    """

    dim: int
    labels: tuple
    effects: np.ndarray

    def __post_init__(self):
        d = int(self.dim)
        if d < 1:
            raise PovmError(f"dimension must be >= 1, got {self.dim}")
        labels = tuple(as_label(x) for x in self.labels)
        effects = np.array(self.effects, dtype=np.complex128, copy=True)
        if effects.ndim != 3 or effects.shape[1:] != (d, d):
            raise PovmError(
                f"effects must have shape (k, {d}, {d}), got {effects.shape}"
            )
        if effects.shape[0] != len(labels):
            raise PovmError(
                f"{len(labels)} labels for {effects.shape[0]} effects"
            )
        if effects.shape[0] == 0:
            raise PovmError("a measurement needs at least one outcome")
        if not np.all(np.isfinite(effects)):
            raise PovmError("effects contain non-finite entries")
        effects.setflags(write=False)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "effects", effects)

    @property
    def n_outcomes(self) -> int:
        return len(self.labels)

    def outcome(self, i: int) -> tuple:
        return self.labels[i], self.effects[i]

    def __iter__(self):
        return iter(zip(self.labels, self.effects))


@dataclass(frozen=True)
class DensityState:
    """A density matrix: PSD with unit trace. Validated on construction."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        a = as_square_matrix(self.matrix)
        if a.shape[0] != self.dim:
            raise PovmError(f"state shape {a.shape} does not match dim {self.dim}")
        trace = a.trace()
        if abs(trace - 1.0) > 1e-12:
            raise PovmError(f"state trace {trace} is not 1 within 1e-12")
        w = eig_hermitian(a).eigenvalues
        scale = 1.0 + float(np.max(np.abs(w)))
        if w[0] < -PSD_TOL * scale:
            raise PovmError(f"state is not PSD: min eigenvalue {w[0]:.3e}")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)


@dataclass(frozen=True)
class TraceDensity:
    """Trace weights and unit-trace density parts of a measurement's effects.

    weights[i] is tr(P_i), recorded as 0 when at or below the prune cutoff,
    in which case densities[i] is None. For a valid measurement the weights
    sum to the dimension.
    """

    dim: int
    labels: tuple
    weights: np.ndarray
    densities: tuple


@dataclass
class ValidationReport:
    """Outcome of semantic validation; empty findings mean a valid POVM."""

    dim: int
    n_outcomes: int
    non_hermitian: list = field(default_factory=list)   # (index, defect)
    non_psd: list = field(default_factory=list)         # (index, min eigenvalue)
    duplicate_labels: list = field(default_factory=list)  # (index, index)
    normalization_residual: float = 0.0
    normalization_ok: bool = True

    @property
    def is_valid(self) -> bool:
        return (
            not self.non_hermitian
            and not self.non_psd
            and not self.duplicate_labels
            and self.normalization_ok
        )

    def messages(self) -> list:
        out = []
        for i, defect in self.non_hermitian:
            out.append(f"effect {i} is not Hermitian (defect {defect:.3e})")
        for i, lo in self.non_psd:
            out.append(f"effect {i} is not PSD (min eigenvalue {lo:.3e})")
        for i, j in self.duplicate_labels:
            out.append(f"labels {i} and {j} coincide")
        if not self.normalization_ok:
            out.append(
                f"effects do not sum to the identity "
                f"(max-norm residual {self.normalization_residual:.3e})"
            )
        return out


def validate_povm(
    povm: FinitePOVM,
    psd_tol: float = PSD_TOL,
    norm_tol: float = NORMALIZATION_TOL,
    label_tol: float = LABEL_TOL,
) -> ValidationReport:
    """Check PSD-ness, normalization, and label distinctness, reporting all
    violations rather than stopping at the first."""
    report = ValidationReport(dim=povm.dim, n_outcomes=povm.n_outcomes)
    herm_scale = 1.0 + float(np.max(np.abs(povm.effects)))
    for i in range(povm.n_outcomes):
        effect = povm.effects[i]
        defect = herm_defect(effect)
        if defect > 1e-12 * herm_scale:
            report.non_hermitian.append((i, defect))
            continue
        w = np.linalg.eigvalsh((effect + effect.conj().T) / 2.0)
        scale = 1.0 + float(np.max(np.abs(w)))
        if w[0] < -psd_tol * scale:
            report.non_psd.append((i, float(w[0])))
    for i in range(povm.n_outcomes):
        for j in range(i + 1, povm.n_outcomes):
            if labels_equal(povm.labels[i], povm.labels[j], label_tol):
                report.duplicate_labels.append((i, j))
    residual = float(
        np.max(np.abs(povm.effects.sum(axis=0) - np.eye(povm.dim)))
    )
    report.normalization_residual = residual
    report.normalization_ok = residual <= norm_tol
    return report


def born_probabilities(povm: FinitePOVM, state: DensityState) -> np.ndarray:
    """Outcome probabilities p_i = Re tr(rho P_i).

    Entries in [-1e-12, 0) are clamped to zero; anything below that raises,
    since it cannot come from rounding valid inputs. The result is not
    renormalized.
    """
    if state.dim != povm.dim:
        raise PovmError(f"state dim {state.dim} != measurement dim {povm.dim}")
    p = np.einsum("ab,kba->k", state.matrix, povm.effects).real.copy()
    if np.any(p < -PROB_CLAMP):
        raise PovmError(
            f"probability {p.min():.3e} below -{PROB_CLAMP}; invalid state or effects"
        )
    p[p < 0.0] = 0.0
    return p


def _as_outcome_function(f) -> Callable[[Label], float]:
    if isinstance(f, Mapping):
        table = f

        def lookup(label: Label) -> float:
            return table[label]

        return lookup
    if callable(f):
        return f
    raise PovmError(f"expected a mapping or callable, got {type(f).__name__}")


def expectation_operator(povm: FinitePOVM, f) -> np.ndarray:
    """The operator sum_i f(y_i) P_i for a real function f of the labels."""
    fn = _as_outcome_function(f)
    total = np.zeros((povm.dim, povm.dim), dtype=np.complex128)
    for label, effect in povm:
        try:
            value = complex(fn(label))
        except Exception as exc:
            raise PovmError(f"function undefined on label {label!r}") from exc
        if abs(value.imag) > 1e-12 * (1.0 + abs(value)):
            raise PovmError(f"function value {value} on label {label!r} is not real")
        total += value.real * effect
    return total


def trace_density(povm: FinitePOVM, prune_tol: float = PRUNE_TOL) -> TraceDensity:
    """Split each effect into its trace weight and a unit-trace density.

    Weights at or below prune_tol are recorded as zero with no density part.
    """
    weights = np.empty(povm.n_outcomes)
    densities = []
    for i in range(povm.n_outcomes):
        mu = float(povm.effects[i].trace().real)
        if mu > prune_tol:
            weights[i] = mu
            densities.append(povm.effects[i] / mu)
        else:
            weights[i] = 0.0
            densities.append(None)
    return TraceDensity(povm.dim, povm.labels, weights, tuple(densities))


def align_label_universe(label_lists: Sequence[Sequence[Label]], tol: float = LABEL_TOL):
    """Merge several label lists into one universe, tolerant to point jitter.

    Returns (universe, maps) where maps[k][i] is the universe index of the
    i-th label of list k. Universe order is first occurrence.
    """
    universe: list = []
    maps = []
    for labels in label_lists:
        idx = []
        for label in labels:
            for u, known in enumerate(universe):
                if labels_equal(label, known, tol):
                    idx.append(u)
                    break
            else:
                universe.append(label)
                idx.append(len(universe) - 1)
        maps.append(idx)
    return tuple(universe), maps


def effects_distance(a: FinitePOVM, b: FinitePOVM, label_tol: float = LABEL_TOL) -> float:
    """Max-norm distance between two measurements after label alignment.

    Labels present in only one of the two compare against the zero effect.
    """
    if a.dim != b.dim:
        raise PovmError(f"dimension mismatch: {a.dim} vs {b.dim}")
    universe, (map_a, map_b) = align_label_universe([a.labels, b.labels], label_tol)
    acc_a = np.zeros((len(universe), a.dim, a.dim), dtype=np.complex128)
    acc_b = np.zeros_like(acc_a)
    np.add.at(acc_a, map_a, a.effects)
    np.add.at(acc_b, map_b, b.effects)
    return float(np.max(np.abs(acc_a - acc_b)))


def convex_combine(components, label_tol: float = LABEL_TOL) -> FinitePOVM:
    """Mix weighted measurements into one over the union of their labels.

    components is a sequence of (weight, povm) pairs; weights must be
    nonnegative and sum to 1 within 1e-12.
    """
    components = list(components)
    if not components:
        raise PovmError("nothing to combine")
    weights = np.array([float(w) for w, _ in components])
    if np.any(weights < 0.0):
        raise PovmError(f"negative weight {weights.min()}")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise PovmError(f"weights sum to {weights.sum()!r}, not 1 within 1e-12")
    dims = {p.dim for _, p in components}
    if len(dims) != 1:
        raise PovmError(f"mixed dimensions {sorted(dims)}")
    d = dims.pop()
    universe, maps = align_label_universe([p.labels for _, p in components], label_tol)
    effects = np.zeros((len(universe), d, d), dtype=np.complex128)
    for (w, povm), idx in zip(components, maps):
        np.add.at(effects, idx, w * povm.effects)
    return FinitePOVM(d, universe, effects)


def prune_and_merge(
    povm: FinitePOVM,
    prune_tol: float = PRUNE_TOL,
    label_tol: float = LABEL_TOL,
) -> FinitePOVM:
    """Sum outcomes whose labels coincide, then drop effects with trace at or
    below prune_tol. Idempotent; raises if nothing survives."""
    universe, (idx,) = align_label_universe([povm.labels], label_tol)
    effects = np.zeros((len(universe), povm.dim, povm.dim), dtype=np.complex128)
    np.add.at(effects, idx, povm.effects)
    traces = np.einsum("kaa->k", effects).real
    keep = traces > prune_tol
    if not np.any(keep):
        raise PovmError("pruning removed every outcome")
    labels = tuple(u for u, k in zip(universe, keep) if k)
    return FinitePOVM(povm.dim, labels, effects[keep])
