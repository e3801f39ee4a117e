"""Truncated Fock space: basis enumeration, sparse state vectors, ladder operators.

Basis states are plain tuples of occupation numbers, one entry per mode.
A :class:`StateVector` stores only non-zero amplitudes, keyed by occupation
tuple, and carries a cutoff on the *total* photon number. Operations that
would push amplitude above the cutoff drop it and add the dropped weight to
``truncation_loss``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from types import MappingProxyType

import numpy as np

from .permanent import permanent

Occupation = tuple[int, ...]

PRUNE_TOL = 1e-14
UNITARY_TOL = 1e-10
# Largest photon number the permanent lift accepts. Ryser is O(2^n n) per
# amplitude, so this is a guard against accidental blow-up, not a hard limit.
ORACLE_MAX_PHOTONS = 10


# ---------------------------------------------------------------------------
# Basis enumeration
# ---------------------------------------------------------------------------

def _compositions(total: int, parts: int) -> int:
    if parts == 0:
        return 1 if total == 0 else 0
    return math.comb(total + parts - 1, parts - 1)


def enumerate_basis(mode_count: int, total_photons: int) -> list[Occupation]:
    """All occupation tuples of ``mode_count`` modes with ``total_photons`` photons.

    Order is lexicographic descending, e.g. ``(2, 0), (1, 1), (0, 2)``.
    """
    if mode_count < 1:
        raise ValueError("mode_count must be >= 1")
    if total_photons < 0:
        raise ValueError("total_photons must be >= 0")

    def rec(remaining: int, modes_left: int) -> Iterable[Occupation]:
        if modes_left == 1:
            yield (remaining,)
            return
        for first in range(remaining, -1, -1):
            for rest in rec(remaining - first, modes_left - 1):
                yield (first,) + rest

    return list(rec(total_photons, mode_count))


def basis_size(mode_count: int, total_photons: int) -> int:
    return _compositions(total_photons, mode_count)


def index_of(occupation: Occupation) -> int:
    """Position of ``occupation`` in :func:`enumerate_basis` for its sector."""
    remaining = sum(occupation)
    m = len(occupation)
    index = 0
    for k, n_k in enumerate(occupation[:-1]):
        tail_modes = m - k - 1
        # states sharing the prefix but with a larger entry at position k come first
        for v in range(n_k + 1, remaining + 1):
            index += _compositions(remaining - v, tail_modes)
        remaining -= n_k
    return index


def state_at(mode_count: int, total_photons: int, index: int) -> Occupation:
    """Inverse of :func:`index_of`."""
    if not 0 <= index < basis_size(mode_count, total_photons):
        raise IndexError(f"index {index} out of range for ({mode_count}, {total_photons})")
    occ = []
    remaining = total_photons
    for k in range(mode_count - 1):
        tail_modes = mode_count - k - 1
        for v in range(remaining, -1, -1):
            block = _compositions(remaining - v, tail_modes)
            if index < block:
                occ.append(v)
                remaining -= v
                break
            index -= block
    occ.append(remaining)
    return tuple(occ)


def canonical_key(occupation: Occupation) -> tuple:
    """Sort key: total photon number ascending, then lexicographic descending."""
    return (sum(occupation), tuple(-n for n in occupation))


# ---------------------------------------------------------------------------
# State vectors
# ---------------------------------------------------------------------------

class StateVector:
    """Sparse pure state over a photon-number-truncated Fock basis.

    Treated as an immutable value: every operation returns a new instance.
    """

    __slots__ = ("_mode_count", "_cutoff", "_amps", "_truncation_loss")

    def __init__(
        self,
        mode_count: int,
        cutoff: int,
        amplitudes: Mapping[Occupation, complex] | None = None,
        truncation_loss: float = 0.0,
    ):
        if mode_count < 0:
            raise ValueError("mode_count must be >= 0")
        if cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        amps: dict[Occupation, complex] = {}
        for occ, a in (amplitudes or {}).items():
            occ = tuple(int(n) for n in occ)
            if len(occ) != mode_count:
                raise ValueError(f"occupation {occ} does not have {mode_count} modes")
            if any(n < 0 for n in occ):
                raise ValueError(f"negative occupation in {occ}")
            if sum(occ) > cutoff:
                raise ValueError(f"occupation {occ} exceeds cutoff {cutoff}")
            a = complex(a)
            if abs(a) > PRUNE_TOL:
                amps[occ] = amps.get(occ, 0j) + a
        self._mode_count = mode_count
        self._cutoff = cutoff
        self._amps = {k: v for k, v in amps.items() if abs(v) > PRUNE_TOL}
        self._truncation_loss = float(truncation_loss)

    # construction helpers -------------------------------------------------

    @classmethod
    def basis(cls, occupation: Iterable[int], cutoff: int | None = None) -> "StateVector":
        occ = tuple(int(n) for n in occupation)
        return cls(len(occ), sum(occ) if cutoff is None else cutoff, {occ: 1.0})

    @classmethod
    def vacuum(cls, mode_count: int, cutoff: int = 0) -> "StateVector":
        return cls(mode_count, cutoff, {(0,) * mode_count: 1.0})

    @classmethod
    def superposition(
        cls, terms: Mapping[Occupation, complex], cutoff: int | None = None, normalize: bool = True
    ) -> "StateVector":
        if not terms:
            raise ValueError("superposition needs at least one term")
        m = len(next(iter(terms)))
        top = max(sum(k) for k in terms)
        state = cls(m, top if cutoff is None else cutoff, terms)
        return state.normalized() if normalize else state

    # accessors ------------------------------------------------------------

    @property
    def mode_count(self) -> int:
        return self._mode_count

    @property
    def cutoff(self) -> int:
        return self._cutoff

    @property
    def amplitudes(self) -> Mapping[Occupation, complex]:
        return MappingProxyType(self._amps)

    @property
    def truncation_loss(self) -> float:
        """Probability weight dropped so far because it exceeded the cutoff."""
        return self._truncation_loss

    def amplitude(self, occupation: Iterable[int]) -> complex:
        return self._amps.get(tuple(occupation), 0j)

    def probability(self, occupation: Iterable[int]) -> float:
        return abs(self.amplitude(occupation)) ** 2

    def items(self) -> list[tuple[Occupation, complex]]:
        """Non-zero terms in canonical order."""
        return sorted(self._amps.items(), key=lambda kv: canonical_key(kv[0]))

    def __iter__(self):
        return iter(self.items())

    def __len__(self) -> int:
        return len(self._amps)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self._amps.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm_squared())

    def photon_numbers(self) -> set[int]:
        return {sum(k) for k in self._amps}

    def is_zero(self) -> bool:
        return not self._amps

    # algebra --------------------------------------------------------------

    def _like(self, amps: Mapping[Occupation, complex], loss: float | None = None) -> "StateVector":
        return StateVector(
            self._mode_count,
            self._cutoff,
            amps,
            self._truncation_loss if loss is None else loss,
        )

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return self._like({k: v / n for k, v in self._amps.items()})

    def scaled(self, factor: complex) -> "StateVector":
        return self._like({k: v * factor for k, v in self._amps.items()})

    def __mul__(self, factor: complex) -> "StateVector":
        return self.scaled(factor)

    __rmul__ = __mul__

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_compatible(self, other)
        amps = dict(self._amps)
        for k, v in other._amps.items():
            amps[k] = amps.get(k, 0j) + v
        return StateVector(
            self._mode_count,
            max(self._cutoff, other._cutoff),
            amps,
            self._truncation_loss + other._truncation_loss,
        )

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + other.scaled(-1)

    def __neg__(self) -> "StateVector":
        return self.scaled(-1)

    def with_cutoff(self, cutoff: int) -> "StateVector":
        """Same state under a different cutoff; terms above it are dropped and counted."""
        kept = {k: v for k, v in self._amps.items() if sum(k) <= cutoff}
        dropped = sum(abs(v) ** 2 for k, v in self._amps.items() if sum(k) > cutoff)
        return StateVector(self._mode_count, cutoff, kept, self._truncation_loss + dropped)

    def map_basis(self, fn) -> "StateVector":
        """Relabel basis states with ``fn(occ) -> occ``; amplitudes of collisions add."""
        amps: dict[Occupation, complex] = {}
        for k, v in self._amps.items():
            new = tuple(fn(k))
            amps[new] = amps.get(new, 0j) + v
        return self._like(amps)

    def permute_modes(self, order: Iterable[int]) -> "StateVector":
        """New state whose mode ``i`` is old mode ``order[i]``."""
        order = list(order)
        if sorted(order) != list(range(self._mode_count)):
            raise ValueError(f"{order} is not a permutation of {self._mode_count} modes")
        return self.map_basis(lambda occ: tuple(occ[i] for i in order))

    def is_close(self, other: "StateVector", atol: float = 1e-10, up_to_phase: bool = False) -> bool:
        _check_compatible(self, other)
        if up_to_phase:
            ov = inner_product(self, other)
            if abs(ov) > 0:
                other = other.scaled(np.conj(ov) / abs(ov))
        keys = set(self._amps) | set(other._amps)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= atol for k in keys)

    def to_dense(self, total_photons: int | None = None) -> np.ndarray:
        """Dense amplitude vector over one photon-number sector in canonical order."""
        if total_photons is None:
            sectors = self.photon_numbers()
            if len(sectors) != 1:
                raise ValueError("state spans several photon-number sectors; pass total_photons")
            total_photons = sectors.pop()
        vec = np.zeros(basis_size(self._mode_count, total_photons), dtype=complex)
        for k, v in self._amps.items():
            if sum(k) == total_photons:
                vec[index_of(k)] = v
        return vec

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "mode_count": self._mode_count,
            "cutoff": self._cutoff,
            "amplitudes": [
                {"occ": list(k), "re": float(v.real), "im": float(v.imag)} for k, v in self.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StateVector":
        amps = {tuple(t["occ"]): complex(t["re"], t["im"]) for t in data["amplitudes"]}
        return cls(int(data["mode_count"]), int(data["cutoff"]), amps)

    def __repr__(self) -> str:
        terms = " + ".join(f"({v:.4g})|{','.join(map(str, k))}>" for k, v in self.items()[:6])
        more = " + ..." if len(self._amps) > 6 else ""
        return f"StateVector(m={self._mode_count}, cutoff={self._cutoff}: {terms or '0'}{more})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, StateVector):
            return NotImplemented
        return (
            self._mode_count == other._mode_count
            and self._cutoff == other._cutoff
            and self._amps == other._amps
        )

    __hash__ = None  # type: ignore[assignment]


def _check_compatible(a: StateVector, b: StateVector) -> None:
    if a.mode_count != b.mode_count:
        raise ValueError(f"mode count mismatch: {a.mode_count} vs {b.mode_count}")


# ---------------------------------------------------------------------------
# Ladder operators and products
# ---------------------------------------------------------------------------

def apply_creation(state: StateVector, mode: int) -> StateVector:
    """a†_mode |..n..> = sqrt(n+1) |..n+1..>; components above the cutoff are dropped."""
    if not 0 <= mode < state.mode_count:
        raise IndexError(f"mode {mode} out of range")
    amps: dict[Occupation, complex] = {}
    dropped = 0.0
    for occ, a in state.amplitudes.items():
        n = occ[mode]
        new_amp = math.sqrt(n + 1) * a
        if sum(occ) + 1 > state.cutoff:
            dropped += abs(new_amp) ** 2
            continue
        new = occ[:mode] + (n + 1,) + occ[mode + 1:]
        amps[new] = new_amp
    return StateVector(state.mode_count, state.cutoff, amps, state.truncation_loss + dropped)


def apply_annihilation(state: StateVector, mode: int) -> StateVector:
    """a_mode |..n..> = sqrt(n) |..n-1..>."""
    if not 0 <= mode < state.mode_count:
        raise IndexError(f"mode {mode} out of range")
    amps: dict[Occupation, complex] = {}
    for occ, a in state.amplitudes.items():
        n = occ[mode]
        if n == 0:
            continue
        amps[occ[:mode] + (n - 1,) + occ[mode + 1:]] = math.sqrt(n) * a
    return StateVector(state.mode_count, state.cutoff, amps, state.truncation_loss)


def apply_number(state: StateVector, mode: int) -> StateVector:
    return StateVector(
        state.mode_count,
        state.cutoff,
        {k: k[mode] * v for k, v in state.amplitudes.items()},
        state.truncation_loss,
    )


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _check_compatible(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for k in small.amplitudes:
        total += np.conj(a.amplitude(k)) * b.amplitude(k)
    return complex(total)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 of the normalized states."""
    return abs(inner_product(a, b)) ** 2 / (a.norm_squared() * b.norm_squared())


def expectation_number(state: StateVector, mode: int) -> float:
    return float(sum(k[mode] * abs(v) ** 2 for k, v in state.amplitudes.items()) / state.norm_squared())


def tensor(*states: StateVector) -> StateVector:
    """Product state; modes are concatenated in argument order."""
    if not states:
        raise ValueError("tensor needs at least one state")
    amps: dict[Occupation, complex] = {(): 1.0 + 0j}
    for s in states:
        amps = {k1 + k2: v1 * v2 for k1, v1 in amps.items() for k2, v2 in s.amplitudes.items()}
    return StateVector(
        sum(s.mode_count for s in states),
        sum(s.cutoff for s in states),
        amps,
        sum(s.truncation_loss for s in states),
    )


def remove_modes(state: StateVector, modes: Iterable[int]) -> StateVector:
    """Drop modes that are known to be empty in every term (e.g. after projection)."""
    modes = sorted(set(modes))
    keep = [i for i in range(state.mode_count) if i not in modes]
    amps = {}
    for k, v in state.amplitudes.items():
        amps[tuple(k[i] for i in keep)] = amps.get(tuple(k[i] for i in keep), 0j) + v
    return StateVector(len(keep), state.cutoff, amps, state.truncation_loss)


def coherent_state(alpha: complex, cutoff: int) -> StateVector:
    """Single-mode coherent state truncated at ``cutoff`` photons, renormalized.

    The probability weight beyond the cutoff is reported as ``truncation_loss``.
    """
    alpha = complex(alpha)
    log_abs = math.log(abs(alpha)) if alpha != 0 else -math.inf
    phase = alpha / abs(alpha) if alpha != 0 else 1.0
    amps = {}
    for n in range(cutoff + 1):
        if n == 0:
            mag = math.exp(-abs(alpha) ** 2 / 2)
        elif alpha == 0:
            break
        else:
            mag = math.exp(-abs(alpha) ** 2 / 2 + n * log_abs - 0.5 * math.lgamma(n + 1))
        amps[(n,)] = mag * phase**n
    kept = sum(abs(v) ** 2 for v in amps.values())
    raw = StateVector(1, cutoff, amps)
    return StateVector(1, cutoff, raw.normalized().amplitudes, max(0.0, 1.0 - kept))


# ---------------------------------------------------------------------------
# Mode unitaries and the permanent lift
# ---------------------------------------------------------------------------

class ModeUnitary:
    """An m x m unitary acting on creation operators: a†_j -> sum_i U[i, j] a†_i.

    Column ``j`` is the single-photon output of input mode ``j``.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix, atol: float = UNITARY_TOL):
        u = np.array(matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"mode unitary must be square, got shape {u.shape}")
        err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) if u.size else 0.0
        if err > atol:
            raise ValueError(f"matrix is not unitary (max |UU^+ - 1| = {err:.3g})")
        u.setflags(write=False)
        self._matrix = u

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dimension(self) -> int:
        return self._matrix.shape[0]

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        return ModeUnitary(self._matrix @ other._matrix)

    def dagger(self) -> "ModeUnitary":
        return ModeUnitary(self._matrix.conj().T)

    @classmethod
    def identity(cls, m: int) -> "ModeUnitary":
        return cls(np.eye(m))

    @classmethod
    def embed(cls, m: int, modes: tuple[int, ...], block) -> "ModeUnitary":
        """Identity on ``m`` modes with ``block`` acting on ``modes``."""
        u = np.eye(m, dtype=complex)
        idx = np.array(modes)
        u[np.ix_(idx, idx)] = np.asarray(block, dtype=complex)
        return cls(u)

    def __repr__(self) -> str:
        return f"ModeUnitary({self._matrix!r})"


def lift_unitary_permanent(u: ModeUnitary | np.ndarray, inp: Occupation, out: Occupation) -> complex:
    """<out| U_lifted |in> via the permanent of the repeated-index submatrix."""
    matrix = u.matrix if isinstance(u, ModeUnitary) else np.asarray(u)
    inp, out = tuple(inp), tuple(out)
    if len(inp) != matrix.shape[0] or len(out) != matrix.shape[0]:
        raise ValueError("occupation length does not match unitary dimension")
    n = sum(inp)
    if sum(out) != n:
        raise ValueError(f"photon number mismatch: {n} in, {sum(out)} out")
    if n > ORACLE_MAX_PHOTONS:
        raise ValueError(f"{n} photons exceeds the oracle limit of {ORACLE_MAX_PHOTONS}")
    rows = [i for i, k in enumerate(out) for _ in range(k)]
    cols = [j for j, k in enumerate(inp) for _ in range(k)]
    norm = math.prod(math.factorial(k) for k in inp) * math.prod(math.factorial(k) for k in out)
    return permanent(matrix[np.ix_(rows, cols)]) / math.sqrt(norm)


def apply_unitary(state: StateVector, u: ModeUnitary) -> StateVector:
    """Apply the Fock-space lift of ``u`` to every term of ``state``."""
    if u.dimension != state.mode_count:
        raise ValueError(f"unitary acts on {u.dimension} modes, state has {state.mode_count}")
    amps: dict[Occupation, complex] = {}
    sectors: dict[int, list[Occupation]] = {}
    for occ, a in state.amplitudes.items():
        n = sum(occ)
        if n not in sectors:
            sectors[n] = enumerate_basis(state.mode_count, n)
        for out in sectors[n]:
            amp = lift_unitary_permanent(u, occ, out)
            if amp != 0:
                amps[out] = amps.get(out, 0j) + a * amp
    return StateVector(state.mode_count, state.cutoff, amps, state.truncation_loss)

