"""Proto-language matrices and the comprehension metrics derived from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import numpy.typing as npt

FloatMatrix = npt.NDArray[np.float64]

# An M x S count matrix a[mu, x]; encoding is M x S, decoding is S x M.
AssociationMatrix = FloatMatrix
EncodingMatrix = FloatMatrix
DecodingMatrix = FloatMatrix


def _as_matrix(values: npt.ArrayLike, name: str) -> FloatMatrix:
    matrix = np.array(values, dtype=np.float64)
    if matrix.ndim != 2 or 0 in matrix.shape:
        raise ValueError(f"{name} must be a non-empty 2D matrix, got shape {matrix.shape}")
    return matrix


def _frozen(matrix: FloatMatrix) -> FloatMatrix:
    matrix.setflags(write=False)
    return matrix


def validate_association(assoc: npt.ArrayLike) -> AssociationMatrix:
    """Return ``assoc`` as a float matrix after checking it is non-negative."""

    matrix = _as_matrix(assoc, "Association matrix")
    if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise ValueError("Association matrix entries must be finite and non-negative")
    return matrix


def derive_encoding(assoc: npt.ArrayLike) -> EncodingMatrix:
    """Row-normalise ``assoc`` into the probability of signal x for meaning mu."""

    matrix = validate_association(assoc)
    row_sums = matrix.sum(axis=1, keepdims=True)
    empty = np.flatnonzero(row_sums[:, 0] <= 0)
    if empty.size:
        raise ValueError(f"Association matrix has meaning rows with zero sum: {empty.tolist()}")
    return matrix / row_sums


def derive_decoding(assoc: npt.ArrayLike) -> DecodingMatrix:
    """Column-normalise ``assoc`` into an S x M decoding matrix.

    A signal whose column sums to zero decodes to an all-zero row.
    """

    matrix = validate_association(assoc)
    column_sums = matrix.sum(axis=0)
    decoding = np.zeros((matrix.shape[1], matrix.shape[0]), dtype=np.float64)
    used = column_sums > 0
    decoding[used] = (matrix[:, used] / column_sums[used]).T
    return decoding


def comprehension(enc_i: EncodingMatrix, dec_j: DecodingMatrix) -> float:
    """Probability that a meaning sent by the encoder is recovered by the decoder."""

    enc = np.asarray(enc_i, dtype=np.float64)
    dec = np.asarray(dec_j, dtype=np.float64)
    if enc.ndim != 2 or dec.shape != enc.shape[::-1]:
        raise ValueError(
            f"Encoding shape {enc.shape} is incompatible with decoding shape {dec.shape}"
        )
    return float(np.sum(enc * dec.T) / enc.shape[0])


@dataclass(frozen=True)
class Agent:
    """An immutable language user placed on a ring lattice."""

    id: int
    assoc: AssociationMatrix
    enc: EncodingMatrix
    dec: DecodingMatrix
    position: int

    @classmethod
    def from_association(
        cls, agent_id: int, assoc: npt.ArrayLike, position: Optional[int] = None
    ) -> "Agent":
        matrix = validate_association(assoc)
        return cls(
            id=agent_id,
            assoc=_frozen(matrix),
            enc=_frozen(derive_encoding(matrix)),
            dec=_frozen(derive_decoding(matrix)),
            position=agent_id if position is None else position,
        )

    @property
    def meanings(self) -> int:
        return int(self.assoc.shape[0])

    @property
    def signals(self) -> int:
        return int(self.assoc.shape[1])


def mutual_comprehension(i: Agent, j: Agent) -> float:
    return (comprehension(i.enc, j.dec) + comprehension(j.enc, i.dec)) / 2


@dataclass(frozen=True)
class ComprehensionCache:
    """Pairwise comprehension of one generation.

    ``c[i, j]`` is the directed comprehension from i to j and ``f`` its
    symmetrisation; the diagonal is kept so consumers decide whether to use it.
    """

    f: FloatMatrix
    c: Optional[FloatMatrix] = None

    @property
    def n(self) -> int:
        return int(self.f.shape[0])

    @classmethod
    def from_mutual(cls, f: npt.ArrayLike) -> "ComprehensionCache":
        """Wrap a symmetric mutual comprehension matrix read from elsewhere."""

        matrix = _as_matrix(f, "Comprehension matrix")
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Comprehension matrix must be square, got {matrix.shape}")
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-9):
            raise ValueError("Comprehension matrix must be symmetric")
        if np.any(matrix < 0) or np.any(matrix > 1):
            raise ValueError("Comprehension values must lie in [0, 1]")
        return cls(f=_frozen((matrix + matrix.T) / 2))


def build_cache(agents: Sequence[Agent]) -> ComprehensionCache:
    """Compute every directed and mutual comprehension of a population at once."""

    if not agents:
        raise ValueError("Cannot build a comprehension cache for an empty population")
    shape = agents[0].assoc.shape
    for agent in agents:
        if agent.assoc.shape != shape:
            raise ValueError(
                f"Agent {agent.id} has association shape {agent.assoc.shape}, expected {shape}"
            )
    encodings = np.stack([agent.enc for agent in agents])
    decodings_t = np.stack([agent.dec.T for agent in agents])
    directed = np.einsum("imx,jmx->ij", encodings, decodings_t) / shape[0]
    mutual = (directed + directed.T) / 2
    return ComprehensionCache(f=_frozen(mutual), c=_frozen(directed))


def _member_index(members: Iterable[int], n: int) -> npt.NDArray[np.intp]:
    index = np.array(sorted(set(int(member) for member in members)), dtype=np.intp)
    if index.size == 0:
        raise ValueError("A community must have at least one member")
    if index[0] < 0 or index[-1] >= n:
        raise ValueError(f"Community members must be agent indices in [0, {n})")
    return index


def within_community_comprehension(members: Iterable[int], cache: ComprehensionCache) -> float:
    """Mean mutual comprehension over distinct member pairs; 0 for a singleton."""

    index = _member_index(members, cache.n)
    size = index.size
    if size == 1:
        return 0.0
    block = cache.f[np.ix_(index, index)]
    return float((block.sum() - np.trace(block)) / (size * (size - 1)))


def overall_comprehension(cache: ComprehensionCache) -> float:
    return within_community_comprehension(range(cache.n), cache)


def random_baseline(m: int) -> float:
    """Comprehension of a population whose codes are fully uniform."""

    if m < 1:
        raise ValueError(f"Meaning count must be at least 1, got {m}")
    return 1.0 / m


__all__ = [
    "Agent",
    "AssociationMatrix",
    "ComprehensionCache",
    "DecodingMatrix",
    "EncodingMatrix",
    "build_cache",
    "comprehension",
    "derive_decoding",
    "derive_encoding",
    "mutual_comprehension",
    "overall_comprehension",
    "random_baseline",
    "validate_association",
    "within_community_comprehension",
]
