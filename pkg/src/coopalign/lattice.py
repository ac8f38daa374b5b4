"""Monomial-lattice physical layer for the 3-user interference channel.

Each transmitter modulates one integer symbol per lattice label s (nine
channel-gain exponents, each in {1..N}) onto the monomial carrier
prod_ij h_ij^(s_ij).  A receiver's noiseless signal then decomposes over the
enlarged label cube {1..N+1}^9 into integer combinations of at most three
symbols, one per user, which is what the cooperation protocols exchange.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GenericityError,
    ParameterError,
    PowerTooLowError,
    SymbolRangeError,
)
from .indices import AXIS, IndexVector, embed_shifted, gather_block

# ============================================================
# channel
# ============================================================


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """3x3 complex gains h[i, j] from transmitter j to receiver i."""

    h: np.ndarray
    tag: str = "generic"
    gamma: complex | None = None

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.shape != (3, 3):
            raise ParameterError(f"channel matrix must be 3x3, got {h.shape}")
        object.__setattr__(self, "h", h)

    @classmethod
    def random(cls, rng, scale=1.0):
        h = scale * complex_awgn(rng, (3, 3))
        return cls(h=h, tag="generic")

    @classmethod
    def illustrating(cls, gamma, rng):
        """Structured instance: receiver 3 sees a gamma-scaled copy of the
        direct/cross pair of receiver 2 (h31 = gamma*h21, h33 = gamma*h23)."""
        g = complex(gamma)
        h = complex_awgn(rng, (3, 3))
        h[2, 0] = g * h[1, 0]
        h[2, 2] = g * h[1, 2]
        return cls(h=h, tag="illustrating", gamma=g)


def complex_awgn(rng, shape=()):
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def _as_gain_array(channel):
    if isinstance(channel, ChannelMatrix):
        return channel.h
    return np.asarray(channel, dtype=np.complex128)


# ============================================================
# scheme parameters
# ============================================================


@dataclass(frozen=True)
class SchemeParams:
    """Power, lattice depth and the derived constellation/scale constants.

    q is the real-valued constellation half-width; the integer constellation
    uses floor(q) and a run that needs symbols is rejected when floor(q) < 1.
    gamma is the common transmit scale factor.
    """

    P: float
    N: int
    eps: float = 0.05
    c1: float = 1.0
    c2: float = 1.0
    q: float = 1.0
    gamma: float = 1.0

    @property
    def dims(self) -> int:
        # number of occupied receive-side lattice labels
        return (self.N + 1) ** 9

    @property
    def q_int(self) -> int:
        qf = math.floor(self.q)
        if qf < 1:
            raise PowerTooLowError(
                f"power too low for N: derived half-width {self.q:.6g} < 1"
            )
        return qf


def derive_params(P, N, eps=0.05, c1=1.0, c2=1.0) -> SchemeParams:
    """Constellation half-width and transmit scale for power P, depth N.

    q scales as P^((1-eps)/(dims+2*eps))/3 and gamma as
    c1 * P^((dims-2+4*eps)/(2*(dims+2*eps))), with dims = (N+1)^9.
    """
    if not P > 1:
        raise ParameterError(f"P must exceed 1, got {P}")
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise ParameterError(f"N must be a positive integer, got {N}")
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    if c1 <= 0 or c2 <= 0:
        raise ParameterError("c1 and c2 must be positive")
    dims = (N + 1) ** 9
    q = P ** ((1.0 - eps) / (dims + 2.0 * eps)) / 3.0
    gamma = c1 * P ** ((dims - 2.0 + 4.0 * eps) / (2.0 * (dims + 2.0 * eps)))
    return SchemeParams(P=float(P), N=int(N), eps=float(eps), c1=float(c1),
                        c2=float(c2), q=q, gamma=gamma)


# ============================================================
# symbol tables
# ============================================================


@dataclass(eq=False)
class SubstreamTable:
    """One user's integer symbols, indexed by lattice labels in {1..n}^9.

    Values lie in {-q..q}; lookups outside the cube return 0.
    """

    owner: int
    n: int
    q: int
    values: np.ndarray

    def __post_init__(self):
        if self.owner not in (1, 2, 3):
            raise ParameterError(f"owner must be 1, 2 or 3, got {self.owner}")
        v = np.asarray(self.values, dtype=np.int64)
        if v.shape != (self.n,) * 9:
            raise ParameterError(
                f"values must have shape {(self.n,)*9}, got {v.shape}")
        if self.q < 1:
            raise ParameterError("symbol half-width q must be >= 1")
        if v.size and np.abs(v).max() > self.q:
            raise SymbolRangeError(
                f"symbol outside Z_{self.q} in substream table for user {self.owner}")
        self.values = v

    @classmethod
    def zeros(cls, owner, n, q):
        return cls(owner=owner, n=n, q=q, values=np.zeros((n,) * 9, dtype=np.int64))

    @classmethod
    def random(cls, owner, n, q, rng):
        v = rng.integers(-q, q + 1, size=(n,) * 9, dtype=np.int64)
        return cls(owner=owner, n=n, q=q, values=v)

    def lookup(self, s: IndexVector) -> int:
        if not s.within(self.n):
            return 0
        return int(self.values[s.as_array_index()])


@dataclass(eq=False)
class ObservationTable:
    """Integer receive-side combinations on the cube {1..n+1}^9.

    Entry r[s] is the sum of the three user symbols whose labels are s with
    the receiver's own gain exponent decremented once, so values lie in
    {-3q..3q} when the streams use half-width q.
    """

    receiver: int
    n: int
    values: np.ndarray
    q: int | None = None

    def __post_init__(self):
        if self.receiver not in (1, 2, 3):
            raise ParameterError(f"receiver must be 1, 2 or 3, got {self.receiver}")
        v = np.asarray(self.values, dtype=np.int64)
        if v.shape != (self.n + 1,) * 9:
            raise ParameterError(
                f"values must have shape {(self.n + 1,)*9}, got {v.shape}")
        if self.q is not None and v.size and np.abs(v).max() > 3 * self.q:
            raise SymbolRangeError(
                f"observation outside Z_{3*self.q} at receiver {self.receiver}")
        self.values = v

    def lookup(self, s: IndexVector) -> int:
        if not s.within(self.n + 1):
            return 0
        return int(self.values[s.as_array_index()])

    def slab(self, coord, value):
        """The 8-d sub-array with one named coordinate pinned."""
        return gather_block(self.values, self.n + 1, fixed={AXIS[tuple(coord)]: value})


# ============================================================
# monomial carriers
# ============================================================


def monomial_value(channel, s: IndexVector) -> complex:
    """Direct product of gain powers for one label: prod h_ij^(s_ij)."""
    h = _as_gain_array(channel)
    if any(c < 0 for c in s.coords):
        raise ParameterError("monomial exponents must be nonnegative")
    out = 1.0 + 0.0j
    for k, (i, j) in enumerate(
            ((1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3))):
        out *= h[i - 1, j - 1] ** s.coords[k]
    return complex(out)


def monomial_value_log(channel, s: IndexVector) -> complex:
    """Log-domain evaluation of the same product; cross-check path for
    large exponents where cancellation or overflow could bite."""
    h = _as_gain_array(channel).ravel()
    acc = 0.0 + 0.0j
    for k in range(9):
        e = s.coords[k]
        if e:
            acc += e * np.log(np.complex128(h[k]))
    return complex(np.exp(acc))


def monomial_table(channel, upper) -> np.ndarray:
    """All carrier values on the cube {1..upper}^9 as a dense array."""
    h = _as_gain_array(channel).ravel()
    exps = np.arange(1, upper + 1)
    out = h[0] ** exps
    for k in range(1, 9):
        out = np.multiply.outer(out, h[k] ** exps)
    return out


def channel_is_generic(channel, n, tol=1e-9):
    """Generic-position test: nonzero gains and pairwise-distinct carrier
    values over {1..n+1}^9, with a relative collision tolerance.

    An absolute tolerance would flag almost every random draw once high
    powers of sub-unit gains shrink below it, so closeness is measured
    relative to the magnitudes involved.
    """
    h = _as_gain_array(channel)
    if np.abs(h).min() <= tol:
        return False
    vals = monomial_table(h, n + 1).ravel()
    order = np.argsort(vals.real, kind="stable")
    sv = vals[order]
    # collisions must be adjacent in real part up to the window below
    mags = np.abs(sv)
    for i in range(len(sv) - 1):
        j = i + 1
        scale = 0.5 * (mags[i] + mags[j])
        while j < len(sv) and (sv[j].real - sv[i].real) <= tol * max(scale, 1e-300):
            if abs(sv[j] - sv[i]) <= tol * max(0.5 * (mags[i] + mags[j]), 1e-300):
                return False
            j += 1
    return True


def require_generic(channel, n, tol=1e-9):
    if not channel_is_generic(channel, n, tol):
        raise GenericityError("channel gains failed the generic-position check")


# ============================================================
# synthesis / transmission / exact receive-side combinations
# ============================================================


def synthesize_transmit(stream: SubstreamTable, channel, params: SchemeParams) -> complex:
    """One transmit sample: gamma times the carrier-weighted symbol sum."""
    table = monomial_table(channel, stream.n)
    return complex(params.gamma * np.sum(table * stream.values))


def apply_channel(x, channel, noise=(0.0, 0.0, 0.0)):
    """Receive samples y_i = sum_j h_ij x_j + z_i for one channel use."""
    h = _as_gain_array(channel)
    x = np.asarray(x, dtype=np.complex128)
    z = np.asarray(noise, dtype=np.complex128)
    if x.shape != (3,) or z.shape != (3,):
        raise ParameterError("apply_channel expects three transmit and noise samples")
    return tuple(h @ x + z)


def exact_observations(streams) -> tuple:
    """Noiseless integer receive combinations for all three receivers.

    For receiver i the label s picks up user 1's symbol at s with coordinate
    (i,1) decremented, user 2's at (i,2) decremented and user 3's at (i,3)
    decremented; out-of-range labels contribute zero.  Realised as three
    offset embeddings of the stream cubes into the larger cube.
    """
    a, b, c = streams
    if not (a.owner, b.owner, c.owner) == (1, 2, 3):
        raise ParameterError("streams must be given in user order (1, 2, 3)")
    if not a.n == b.n == c.n:
        raise ParameterError("streams must share the same lattice depth")
    if not a.q == b.q == c.q:
        raise ParameterError("streams must share the same symbol half-width")
    n, q = a.n, a.q
    out = []
    for i in (1, 2, 3):
        acc = embed_shifted(a.values, AXIS[(i, 1)], n + 1)
        acc += embed_shifted(b.values, AXIS[(i, 2)], n + 1)
        acc += embed_shifted(c.values, AXIS[(i, 3)], n + 1)
        out.append(ObservationTable(receiver=i, n=n, values=acc, q=q))
    return tuple(out)


def reconstructed_receive(obs: ObservationTable, channel, params: SchemeParams) -> complex:
    """Carrier-weighted sum of a receiver's integer combinations; equals the
    noiseless receive sample produced by apply_channel on the same streams."""
    table = monomial_table(channel, obs.n + 1)
    return complex(params.gamma * np.sum(table * obs.values))
