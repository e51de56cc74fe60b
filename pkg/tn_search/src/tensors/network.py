"""
Fully-connected tensor network (FCTN) structures and contraction.

A structure is the pair (G, r) stored as the upper triangle of a symmetric rank
matrix over the complete graph. Rank 1 on a bond means "no edge".

Core layout: core i has shape (I_i, r_i1, ..., r_iN) with the physical mode first
and the bond modes in ascending partner order (the diagonal is skipped).
"""
import logging
import math
from dataclasses import dataclass
from numbers import Integral
from typing import Optional, Sequence

import numpy as np

from errors import InvalidStructureError, StructureMismatchError

logger = logging.getLogger(__name__)

DenseTensor = np.ndarray
CoreSet = list[np.ndarray]


def num_edges(order: int) -> int:
    return order * (order - 1) // 2


@dataclass(frozen=True)
class TNStructure:
    """Upper-triangular rank vector r_12, r_13, ..., r_(N-1)N of an order-N FCTN."""

    order: int
    ranks: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.order, Integral) or self.order < 2:
            raise InvalidStructureError(f"Structure order must be an integer >= 2, got {self.order!r}")
        ranks = tuple(self.ranks)
        if len(ranks) != num_edges(self.order):
            raise InvalidStructureError(
                f"Order {self.order} needs {num_edges(self.order)} ranks, got {len(ranks)}"
            )
        for r in ranks:
            if isinstance(r, bool) or not isinstance(r, Integral) or r < 1:
                raise InvalidStructureError(f"Ranks must be integers >= 1, got {list(ranks)}")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "ranks", tuple(int(r) for r in ranks))

    @classmethod
    def all_ones(cls, order: int) -> "TNStructure":
        """The fully-disconnected graph."""
        return cls(order, (1,) * num_edges(order))

    @classmethod
    def from_matrix(cls, matrix) -> "TNStructure":
        m = np.asarray(matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStructureError(f"Rank matrix must be square, got shape {m.shape}")
        if not np.array_equal(m, m.T):
            raise InvalidStructureError("Rank matrix must be symmetric")
        n = m.shape[0]
        return cls(n, tuple(int(m[i, j]) for i, j in edge_list(n)))

    @property
    def key(self) -> tuple[int, ...]:
        return self.ranks

    @property
    def num_edges(self) -> int:
        return len(self.ranks)

    def edges(self) -> list[tuple[int, int]]:
        return edge_list(self.order)

    def rank(self, i: int, j: int) -> int:
        if i == j:
            raise InvalidStructureError("Structures have no self-loops")
        return self.ranks[edge_index(self.order, min(i, j), max(i, j))]

    def partners(self, i: int) -> list[int]:
        return [j for j in range(self.order) if j != i]

    def bond_dims(self, i: int) -> tuple[int, ...]:
        return tuple(self.rank(i, j) for j in self.partners(i))

    def core_shape(self, i: int, size: int) -> tuple[int, ...]:
        return (int(size),) + self.bond_dims(i)

    def with_rank(self, var: int, value: int) -> "TNStructure":
        ranks = list(self.ranks)
        ranks[var] = value
        return TNStructure(self.order, tuple(ranks))

    def as_matrix(self) -> np.ndarray:
        m = np.zeros((self.order, self.order), dtype=int)
        for (i, j), r in zip(self.edges(), self.ranks):
            m[i, j] = m[j, i] = r
        return m

    def within(self, rank_max: int, rank_min: int = 1) -> bool:
        return all(rank_min <= r <= rank_max for r in self.ranks)

    def __str__(self) -> str:
        return "[" + ", ".join(str(r) for r in self.ranks) + "]"


def edge_list(order: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(order) for j in range(i + 1, order)]


def edge_index(order: int, i: int, j: int) -> int:
    return i * (2 * order - i - 1) // 2 + (j - i - 1)


def as_dense(values, shape: Optional[Sequence[int]] = None) -> DenseTensor:
    """Validate and convert to a finite float64 array."""
    x = np.asarray(values, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if x.size != math.prod(shape):
            raise StructureMismatchError(f"Got {x.size} values for shape {shape}")
        x = x.reshape(shape)
    if x.ndim == 0 or any(s < 1 for s in x.shape):
        raise StructureMismatchError(f"Tensor shape entries must be >= 1, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("Tensor contains NaN or Inf entries")
    return x


def check_cores(cores: Sequence[np.ndarray], structure: TNStructure,
                shape: Optional[Sequence[int]] = None) -> CoreSet:
    """
    Check the shared-edge invariant and return the cores in canonical layout.

    Cores whose size-1 bond modes were squeezed away are reshaped back.
    """
    if len(cores) != structure.order:
        raise StructureMismatchError(
            f"Structure has order {structure.order} but {len(cores)} cores were given"
        )
    out = []
    for i, core in enumerate(cores):
        core = np.asarray(core, dtype=np.float64)
        size = core.shape[0] if core.ndim else 0
        if shape is not None:
            size = int(shape[i])
        expected = structure.core_shape(i, size)
        if core.shape != expected:
            squeezed = tuple(s for s in expected if s != 1)
            if core.size == math.prod(expected) and tuple(s for s in core.shape if s != 1) == squeezed:
                core = core.reshape(expected)
            else:
                raise StructureMismatchError(
                    f"Core {i} has shape {core.shape}, structure {structure} expects {expected}"
                )
        out.append(core)
    return out


def gaussian_cores(structure: TNStructure, shape: Sequence[int],
                   rng: np.random.Generator) -> CoreSet:
    """Zero-mean Gaussian cores with std (1 / prod of the core's bond dims) ** 0.5."""
    if len(shape) != structure.order:
        raise StructureMismatchError(f"Shape {tuple(shape)} does not match order {structure.order}")
    cores = []
    for i, size in enumerate(shape):
        core_shape = structure.core_shape(i, size)
        sigma = (1.0 / math.prod(core_shape[1:])) ** 0.5
        cores.append(rng.normal(0.0, sigma, size=core_shape))
    return cores


def _contract_network(cores: CoreSet, structure: TNStructure, skip: Optional[int] = None):
    """
    Fold cores pairwise in vertex order, summing each bond once both ends are in.

    Returns the partial tensor and its axis labels, ("p", i) for physical modes and
    ("b", i, j) for bonds still open (only bonds touching `skip`).
    """
    result, labels = None, []
    for k in range(structure.order):
        if k == skip:
            continue
        core_labels = [("p", k)] + [("b", min(k, j), max(k, j)) for j in structure.partners(k)]
        if result is None:
            result, labels = cores[k], core_labels
            continue
        shared = [lab for lab in core_labels if lab in labels]
        result = np.tensordot(
            result,
            cores[k],
            axes=([labels.index(lab) for lab in shared], [core_labels.index(lab) for lab in shared]),
        )
        labels = [lab for lab in labels if lab not in shared] + [lab for lab in core_labels if lab not in shared]
    return result, labels


def tnc_contract(cores: Sequence[np.ndarray], structure: TNStructure) -> DenseTensor:
    """Contract every bond of the network and return the tensor of shape (I_1, ..., I_N)."""
    cores = check_cores(cores, structure)
    result, labels = _contract_network(cores, structure)
    return np.transpose(result, [labels.index(("p", i)) for i in range(structure.order)])


def contract_environment(cores: CoreSet, structure: TNStructure, skip: int):
    """
    Contract every core except `skip`.

    Returned axes are the physical modes j != skip in ascending order followed by the
    open bonds of `skip` in ascending partner order.
    """
    result, labels = _contract_network(cores, structure, skip=skip)
    order = [("p", j) for j in structure.partners(skip)]
    order += [("b", min(skip, j), max(skip, j)) for j in structure.partners(skip)]
    return np.transpose(result, [labels.index(lab) for lab in order])


def _check_shape(structure: TNStructure, shape: Sequence[int]) -> tuple[int, ...]:
    shape = tuple(int(s) for s in shape)
    if len(shape) != structure.order:
        raise StructureMismatchError(f"Shape {shape} has {len(shape)} modes, structure order is {structure.order}")
    return shape


def param_count(structure: TNStructure, shape: Sequence[int]) -> int:
    shape = _check_shape(structure, shape)
    return sum(size * math.prod(structure.bond_dims(i)) for i, size in enumerate(shape))


def compression_ratio(structure: TNStructure, shape: Sequence[int]) -> float:
    """phi: TN parameter count over the number of entries of the original tensor."""
    shape = _check_shape(structure, shape)
    return param_count(structure, shape) / math.prod(shape)


def relative_error(x: DenseTensor, xhat: DenseTensor) -> float:
    """||x - xhat||_F / ||x||_F."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise StructureMismatchError(f"Shapes differ: {x.shape} vs {xhat.shape}")
    norm = np.linalg.norm(x.ravel())
    if norm == 0.0:
        raise ValueError("Relative error is undefined for an all-zero tensor")
    return float(np.linalg.norm((x - xhat).ravel()) / norm)


def _check_permutation(perm: Sequence[int], n: int) -> list[int]:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise InvalidStructureError(f"{perm} is not a permutation of 0..{n - 1}")
    return perm


def permute_modes(x: DenseTensor, perm: Sequence[int]) -> DenseTensor:
    """New mode k is old mode perm[k]."""
    x = np.asarray(x)
    return np.transpose(x, _check_permutation(perm, x.ndim))


def permute_structure(structure: TNStructure, perm: Sequence[int]) -> TNStructure:
    perm = _check_permutation(perm, structure.order)
    return TNStructure(structure.order, tuple(structure.rank(perm[a], perm[b]) for a, b in structure.edges()))


def permute_cores(cores: Sequence[np.ndarray], structure: TNStructure, perm: Sequence[int]) -> CoreSet:
    """Relabel vertices so new vertex a is old vertex perm[a], keeping the canonical bond order."""
    perm = _check_permutation(perm, structure.order)
    cores = check_cores(cores, structure)
    out = []
    for a in range(structure.order):
        old = perm[a]
        bond_axes = []
        for b in range(structure.order):
            if b == a:
                continue
            partner = perm[b]
            bond_axes.append(1 + (partner if partner < old else partner - 1))
        out.append(np.transpose(cores[old], [0] + bond_axes))
    return out
