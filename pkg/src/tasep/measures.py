"""Markov measures on binary sequences: the stochastic invariant family, the
maximal-entropy (Parry) family of subshifts, cylinder weights, exact cyclic
sampling and periodic-point enumeration.

Cylinders are plain strings over {0, 1}; the weight of a word a_1...a_n is
stationary(a_1) * prod transition(a_i, a_{i+1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .configuration import Configuration, decode_word, radius_conjugate, scale_shift

__all__ = [
    "MarkovMatrix",
    "TransitionStructure",
    "build_invariant_matrix",
    "cylinder_measure",
    "empirical_cylinder_frequency",
    "parry_matrix",
    "periodic_point_count",
    "periodic_points",
    "sample_ring_configuration",
    "sample_ring_word",
    "solve_parameter",
    "stationary_vector",
    "validate_word",
]

_TOL = 1e-12


def validate_word(word: str) -> str:
    if not word or set(word) - {"0", "1"}:
        raise ValueError(f"cylinder word must be a nonempty 0/1 string, got {word!r}")
    return word


@dataclass(frozen=True)
class MarkovMatrix:
    """2x2 stochastic matrix; rows are transition distributions out of 0 and 1.

    ``movement_p`` tags matrices built to be stationary for the lattice process
    with that movement probability, which enforces the invariance identity
    p00*p11 = (1-p)*p10*p01 at construction.
    """

    p00: float
    p01: float
    p10: float
    p11: float
    movement_p: float | None = None

    def __post_init__(self) -> None:
        for name in ("p00", "p01", "p10", "p11"):
            e = getattr(self, name)
            if not -_TOL <= e <= 1 + _TOL:
                raise ValueError(f"entry {name}={e} outside [0, 1]")
        if abs(self.p00 + self.p01 - 1) > _TOL or abs(self.p10 + self.p11 - 1) > _TOL:
            raise ValueError("rows must sum to 1")
        if self.movement_p is not None:
            if not 0 < self.movement_p <= 1:
                raise ValueError("movement_p must lie in (0, 1]")
            resid = self.p00 * self.p11 - (1 - self.movement_p) * self.p10 * self.p01
            if abs(resid) > _TOL:
                raise ValueError(
                    f"matrix violates the invariance identity (residual {resid:.3e})"
                )

    @classmethod
    def from_rows(cls, rows, movement_p: float | None = None) -> "MarkovMatrix":
        (a, b), (c, d) = rows
        return cls(float(a), float(b), float(c), float(d), movement_p)

    @classmethod
    def bernoulli(cls, theta: float) -> "MarkovMatrix":
        """Product measure with P(1) = theta, seen as a Markov matrix."""
        return cls(1 - theta, theta, 1 - theta, theta)

    def matrix(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])

    @property
    def stationary(self) -> tuple[float, float]:
        s = self.p01 + self.p10
        if s == 0:
            raise ValueError("stationary vector undefined for the identity-like matrix")
        return (self.p10 / s, self.p01 / s)


def stationary_vector(m: MarkovMatrix) -> tuple[float, float]:
    """(p_0, p_1), the normalized left fixed point of the matrix."""
    return m.stationary


def solve_parameter(rho: float, p: float) -> float:
    """The transition parameter a = p01 placing stationary mass rho on 1.

    Root of rho = a*(1-p*a)/(1-p*a^2), taken on the branch with a in (0, 1].
    At p = 1 every rho >= 1/2 collapses to a = 1 (degenerate matrix); callers
    wanting a measure there should use build_invariant_matrix, which switches
    to the deterministic dense branch.
    """
    if not 0 < rho < 1:
        raise ValueError(f"density rho={rho} outside (0, 1)")
    if not 0 < p <= 1:
        raise ValueError(f"movement probability p={p} outside (0, 1]")
    disc = max(1 - 4 * p * rho * (1 - rho), 0.0)
    return 2 * rho / (1 + math.sqrt(disc))


def build_invariant_matrix(rho: float, p: float) -> MarkovMatrix:
    """Markov matrix whose measure has density rho and is stationary at movement p.

    For p < 1 a single positive-entry family covers all rho in (0, 1); at
    p = 1 the family splits at rho = 1/2 into the sparse branch (no two
    adjacent 1s) and the dense branch (no two adjacent 0s).
    """
    if not 0 < rho < 1:
        raise ValueError(f"density rho={rho} outside (0, 1)")
    if not 0 < p <= 1:
        raise ValueError(f"movement probability p={p} outside (0, 1]")
    if p == 1:
        if rho < 0.5:
            a = rho / (1 - rho)
            return MarkovMatrix(1 - a, a, 1.0, 0.0, movement_p=1.0)
        b = (1 - rho) / rho
        return MarkovMatrix(0.0, 1.0, b, 1 - b, movement_p=1.0)
    a = solve_parameter(rho, p)
    p10 = (1 - a) / (1 - p * a)
    return MarkovMatrix(1 - a, a, p10, 1 - p10, movement_p=p)


def cylinder_measure(m: MarkovMatrix, word: str) -> float:
    """Weight of the cylinder fixing the letters of ``word`` at consecutive sites."""
    validate_word(word)
    p = m.matrix()
    pi = m.stationary
    prev = int(word[0])
    out = pi[prev]
    for ch in word[1:]:
        cur = int(ch)
        out *= p[prev, cur]
        prev = cur
    return float(out)


def sample_ring_word(m: MarkovMatrix, n_sites: int, seed) -> str:
    """Exact draw from the cyclically wrapped Markov weight on n_sites letters.

    P(w) is proportional to prod_i p(w_i, w_{i+1 mod n}).  The first letter is
    drawn from the diagonal of P^n over its trace, then each next letter from
    the conditional given the remaining closure weight, so no rejection or
    burn-in is involved.
    """
    if n_sites < 2:
        raise ValueError("cyclic sampling needs at least 2 sites")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    p = m.matrix()
    powers = np.empty((n_sites + 1, 2, 2))
    powers[0] = np.eye(2)
    for j in range(1, n_sites + 1):
        powers[j] = powers[j - 1] @ p
    tr = powers[n_sites, 0, 0] + powers[n_sites, 1, 1]
    if tr <= 0:
        raise ValueError("degenerate matrix: no cyclic word has positive weight")
    letters = np.empty(n_sites, dtype=np.uint8)
    first = int(rng.random() >= powers[n_sites, 0, 0] / tr)
    letters[0] = first
    cur = first
    for k in range(1, n_sites):
        edges_left = n_sites - k + 1  # from letter k-1 around the seam to letter 0
        denom = powers[edges_left, cur, first]
        prob0 = p[cur, 0] * powers[edges_left - 1, 0, first] / denom
        cur = int(rng.random() >= prob0)
        letters[k] = cur
    return "".join("1" if b else "0" for b in letters)


def sample_ring_configuration(
    rho: float,
    p: float,
    v: float = 1.0,
    r: float = 0.0,
    n_sites: int = 1000,
    seed=0,
    randomize_offset: bool = False,
) -> Configuration:
    """Ring configuration drawn from the transported invariant measure.

    Samples an occupancy word for the unit-jump hard-core lattice process at
    the transported density, then moves it to jump v and radius r by the
    gap-preserving and scaling conjugacies.  ``randomize_offset`` additionally
    shifts the sub-lattice by a uniform offset in [0, v), which realizes the
    offset-mixture measure operationally.
    """
    if rho <= 0 or (r > 0 and 2 * r * rho >= 1):
        raise ValueError("density incompatible with the ball radius")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho_free = rho / (1 - 2 * r * rho)
    rho_lattice = v * rho_free / (1 + v * rho_free)
    word = sample_ring_word(build_invariant_matrix(rho_lattice, p), n_sites, rng)
    cfg = decode_word(word)
    cfg = radius_conjugate(cfg, 0.0)
    offset = float(rng.random() * v) if randomize_offset else 0.0
    cfg = scale_shift(cfg, v, offset)
    if r > 0:
        cfg = radius_conjugate(cfg, r)
    return cfg


@dataclass(frozen=True)
class TransitionStructure:
    """Irreducible 0/1 transition matrix with its leading eigendata."""

    matrix: np.ndarray
    eigenvalue: float
    eigenvector: np.ndarray

    @classmethod
    def from_matrix(cls, m) -> "TransitionStructure":
        arr = np.asarray(m, dtype=np.int64)
        if arr.shape != (2, 2) or not np.all((arr == 0) | (arr == 1)):
            raise ValueError("transition structure must be a 2x2 matrix over {0, 1}")
        if arr[0, 1] == 0 or arr[1, 0] == 0:
            raise ValueError("transition structure must be irreducible")
        lam = (arr[0, 0] + arr[1, 1] + math.sqrt((arr[0, 0] - arr[1, 1]) ** 2 + 4)) / 2
        vec = np.array([float(arr[0, 1]), lam - arr[0, 0]])
        vec = vec / vec.sum()
        arr = arr.copy()
        arr.setflags(write=False)
        vec.setflags(write=False)
        return cls(arr, lam, vec)

    @classmethod
    def no_adjacent_ones(cls) -> "TransitionStructure":
        """The golden-mean shift: words never contain 11."""
        return cls.from_matrix([[1, 1], [1, 0]])

    @classmethod
    def no_adjacent_zeros(cls) -> "TransitionStructure":
        """Letter-flipped golden-mean shift: words never contain 00."""
        return cls.from_matrix([[0, 1], [1, 1]])

    @classmethod
    def full_shift(cls) -> "TransitionStructure":
        return cls.from_matrix([[1, 1], [1, 1]])

    @property
    def entropy(self) -> float:
        return math.log(self.eigenvalue)


def parry_matrix(ts: TransitionStructure) -> MarkovMatrix:
    """Maximal-entropy Markov matrix of the subshift: p_ij = m_ij m_j / (lam m_i)."""
    m = ts.eigenvector
    lam = ts.eigenvalue
    rows = [
        [ts.matrix[i, j] * m[j] / (lam * m[i]) for j in (0, 1)]
        for i in (0, 1)
    ]
    return MarkovMatrix.from_rows(rows)


def periodic_point_count(ts: TransitionStructure, n: int) -> int:
    """Number of cyclically admissible words of length n, trace(M^n)."""
    if not 1 <= n <= 24:
        raise ValueError("period must lie in 1..24")
    return int(np.trace(np.linalg.matrix_power(ts.matrix, n)))


def periodic_points(ts: TransitionStructure, n: int) -> list[str]:
    """All cyclically admissible words of length n, lexicographically sorted."""
    if not 1 <= n <= 24:
        raise ValueError("period must lie in 1..24 (exhaustive enumeration)")
    m = ts.matrix
    out: list[str] = []
    buf = [0] * n

    def extend(k: int, first: int) -> None:
        if k == n:
            if m[buf[-1], first]:
                out.append("".join(map(str, buf)))
            return
        for letter in (0, 1):
            if m[buf[k - 1], letter]:
                buf[k] = letter
                extend(k + 1, first)

    for first in (0, 1):
        if n == 1:
            if m[first, first]:
                out.append(str(first))
            continue
        buf[0] = first
        extend(1, first)
    return out


def empirical_cylinder_frequency(points: list[str], word: str) -> float:
    """Average over points and cyclic offsets of the indicator that word occurs."""
    validate_word(word)
    if not points:
        raise ValueError("need a nonempty list of periodic points")
    n = len(points[0])
    if any(len(w) != n for w in points):
        raise ValueError("periodic points must share one period")
    if len(word) > n:
        raise ValueError("cylinder longer than the period")
    hits = 0
    for w in points:
        doubled = w + w
        for offset in range(n):
            if doubled[offset : offset + len(word)] == word:
                hits += 1
    return hits / (len(points) * n)
