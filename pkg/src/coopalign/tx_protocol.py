"""Transmitter-side cooperation: backhaul exchange that hands every
transmitter the receive combinations of its own receiver, then channel
inversion so each receiver sees only its own symbols.

The combination cube {1..N+1}^9 is built slab by slab along coordinate
(2,1), bottom up, one round per slab value r = 1..N+1.  Within a round:

  3 -> 2  transmitter 3 re-labels its finished slab r-1, swaps its own
          symbol term from the old label to the new one, and sends;
          transmitter 2 swaps the user-2 term the same way and owns slab r,
  2 -> 1  same pattern off the slab transmitter 2 just finished,
  1 -> 3  same pattern off transmitter 1's fresh slab, closing the round.

Every term in each swap shares the shifted coordinate that can leave the
cube, so the zero-fill convention keeps all three construction steps exact
at the boundary.  Round 1 starts from the empty slab 0, which makes the
first payload a plain re-label of the senders' own symbols.

After the exchange, transmitter i modulates carriers built from the entries
of the inverse channel matrix.  Pushing those through the channel telescopes
every cross-user term away, leaving receiver i a clean carrier-weighted sum
of user i's symbols; verify_diagonalization measures the float residual of
that cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backhaul import BackhaulLedger, BackhaulMessage
from .errors import ProtocolError, SingularChannelError
from .indices import AXIS, gather_block
from .lattice import (ObservationTable, _as_gain_array, complex_awgn,
                      monomial_table)

_AX21 = AXIS[(2, 1)]


@dataclass(eq=False)
class InverseChannel:
    """Channel inverse with an explicit invertibility certificate."""

    h: np.ndarray
    hinv: np.ndarray
    product_residual: float

    @classmethod
    def of(cls, channel, tol=1e-9, det_floor=1e-12):
        h = _as_gain_array(channel)
        if h.shape != (3, 3):
            raise SingularChannelError(f"need a 3x3 gain matrix, got {h.shape}")
        det = np.linalg.det(h)
        if abs(det) <= det_floor:
            raise SingularChannelError(
                f"gain matrix determinant {abs(det):.3g} below threshold")
        try:
            hinv = np.linalg.inv(h)
        except np.linalg.LinAlgError as exc:
            raise SingularChannelError(f"gain matrix not invertible: {exc}") from exc
        resid = float(np.abs(h @ hinv - np.eye(3)).max())
        if not np.isfinite(resid) or resid > tol:
            raise SingularChannelError(
                f"gain matrix too close to singular: inverse residual {resid:.3g}")
        return cls(h=h, hinv=hinv, product_residual=resid)


@dataclass(eq=False)
class TransmitterState:
    """One transmitter's working memory: its own symbols and the slabs of
    its receiver's combination cube built so far."""

    node: int
    n: int
    q: int
    own: np.ndarray
    built: np.ndarray = None
    built_slabs: set = field(default_factory=set)

    def __post_init__(self):
        if self.built is None:
            self.built = np.zeros((self.n + 1,) * 9, dtype=np.int64)

    def store_slab(self, slab, block, round_index):
        if np.abs(block).max() > 3 * self.q:
            raise ProtocolError(
                "inconsistent swap: combination outside half-width "
                f"{3 * self.q}", round_index=round_index, node=self.node)
        idx = [slice(None)] * 9
        idx[_AX21] = slab - 1
        self.built[tuple(idx)] = block
        self.built_slabs.add(slab)


def tx_round(states, r):
    """Run one round of the exchange, mutating states; returns the three
    messages in send order 3->2, 2->1, 1->3."""
    n = states[3].n
    u = n + 1
    if r > 1 and (r - 1) not in states[3].built_slabs:
        raise ProtocolError("prerequisite slab unbuilt", round_index=r, node=3)
    q3 = 3 * states[3].q

    def own(node, shifts, slab):
        return gather_block(states[node].own, u, shifts=shifts,
                            fixed={_AX21: slab})

    def built(node, shifts, slab):
        return gather_block(states[node].built, u, shifts=shifts,
                            fixed={_AX21: slab})

    # coordinate axes: 0..8 = (1,1),(1,2),(1,3),(2,1),(2,2),(2,3),(3,1),(3,2),(3,3)
    e32 = (built(3, {6: 1}, r - 1)
           - own(3, {6: 1, 8: -1}, r - 1)
           + own(3, {5: -1}, r))
    m32 = BackhaulMessage(source=3, destination=2, round_index=r,
                          payload=e32.ravel(), alphabet_halfwidth=q3)
    states[2].store_slab(r, e32 - own(2, {6: 1, 7: -1}, r - 1)
                         + own(2, {4: -1}, r), r)

    e21 = (built(2, {2: -1, 5: 1}, r)
           - own(2, {2: -1, 4: -1, 5: 1}, r)
           + own(2, {1: -1}, r))
    m21 = BackhaulMessage(source=2, destination=1, round_index=r,
                          payload=e21.ravel(), alphabet_halfwidth=q3)
    states[1].store_slab(r, e21 - own(1, {2: -1, 5: 1}, r - 1)
                         + own(1, {0: -1}, r), r)

    e13 = (built(1, {1: 1, 7: -1}, r)
           - own(1, {0: -1, 1: 1, 7: -1}, r)
           + own(1, {6: -1}, r))
    m13 = BackhaulMessage(source=1, destination=3, round_index=r,
                          payload=e13.ravel(), alphabet_halfwidth=q3)
    states[3].store_slab(r, e13 - own(3, {1: 1, 2: -1, 7: -1}, r)
                         + own(3, {8: -1}, r), r)
    return [m32, m21, m13]


@dataclass
class TxProtocolResult:
    built: tuple                  # three ObservationTables, receiver order
    ledger: BackhaulLedger
    rounds: int


def run_tx_backhaul(all_streams, params=None) -> TxProtocolResult:
    """Run the full (N+1)-round transmitter exchange on one time slot.

    The exchange is exact integer arithmetic; params is accepted for
    interface symmetry with the receiver protocol and not consulted.
    """
    a, b, c = all_streams
    if (a.owner, b.owner, c.owner) != (1, 2, 3):
        raise ProtocolError("streams must be given in user order (1, 2, 3)")
    if not (a.n == b.n == c.n and a.q == b.q == c.q):
        raise ProtocolError("streams must share lattice depth and half-width")
    n, q = a.n, a.q
    states = {m: TransmitterState(node=m, n=n, q=q, own=all_streams[m - 1].values)
              for m in (1, 2, 3)}
    ledger = BackhaulLedger()
    for r in range(1, n + 2):
        for msg in tx_round(states, r):
            ledger.add(msg)
    built = tuple(ObservationTable(receiver=m, n=n, values=states[m].built, q=q)
                  for m in (1, 2, 3))
    return TxProtocolResult(built=built, ledger=ledger, rounds=n + 1)


def expected_message_count(n: int) -> int:
    """Three payloads of (n+1)^8 entries per round, n+1 rounds."""
    return 3 * (n + 1) ** 9


# ============================================================
# channel inversion transmit
# ============================================================


def diagonalized_transmit(state_r, inv: InverseChannel, scale=1.0) -> complex:
    """One transmit sample: scale times the inverse-gain-carrier-weighted sum
    of a transmitter's built combination cube."""
    table = state_r.values if isinstance(state_r, ObservationTable) \
        else np.asarray(state_r)
    n = table.shape[0] - 1
    carriers = monomial_table(inv.hinv, n + 1)
    return complex(scale * np.sum(carriers * table))


def transmit_scale(built, inv: InverseChannel, P) -> float:
    """Scale factor putting the average transmit power of the three samples
    at P (measured on the realization, then scaled)."""
    raw = np.array([diagonalized_transmit(t, inv) for t in built])
    mean_pow = float(np.mean(np.abs(raw) ** 2))
    return float(np.sqrt(P / mean_pow)) if mean_pow > 0 else 1.0


@dataclass
class DiagonalizationCheck:
    x: np.ndarray                 # transmit samples
    y: np.ndarray                 # receive samples
    noise: np.ndarray             # the samples' additive noise
    predicted: np.ndarray         # interference-free prediction
    scale: float
    residuals: np.ndarray         # per-receiver relative mismatch
    residual: float               # max over receivers

    @property
    def ok(self):
        return self.residual <= 1e-9


def verify_diagonalization(all_streams, channel, params, noise_mode="zero",
                           rng=None, built=None, inv=None) -> DiagonalizationCheck:
    """Check that inversion-precoded transmission hands each receiver only
    its own symbols.

    Each receive sample, minus its (known) noise, is compared against the
    interference-free prediction; the mismatch is reported relative to the
    peak predicted signal magnitude, so it measures how exactly the
    cross-user carriers telescope away.
    """
    if inv is None:
        inv = InverseChannel.of(channel)
    if built is None:
        built = run_tx_backhaul(all_streams).built
    scale = transmit_scale(built, inv, params.P)
    x = np.array([diagonalized_transmit(t, inv, scale) for t in built])
    if noise_mode == "zero":
        z = np.zeros(3, dtype=np.complex128)
    elif noise_mode == "awgn":
        z = complex_awgn(rng if rng is not None else np.random.default_rng(0), (3,))
    else:
        raise ProtocolError(f"unknown noise mode: {noise_mode!r}")
    h = _as_gain_array(channel)
    y = h @ x + z
    n = all_streams[0].n
    carriers = monomial_table(inv.hinv, n)
    predicted = scale * np.array(
        [np.sum(carriers * s.values) for s in all_streams], dtype=np.complex128)
    # fall back to pre-cancellation mass when the predicted signal is zero
    denom = float(np.abs(predicted).max())
    if denom == 0.0:
        denom = max(float((np.abs(h) @ np.abs(x)).max()), 1e-300)
    residuals = np.abs(y - z - predicted) / denom
    return DiagonalizationCheck(x=x, y=y, noise=z, predicted=predicted,
                                scale=scale, residuals=residuals,
                                residual=float(residuals.max()))
