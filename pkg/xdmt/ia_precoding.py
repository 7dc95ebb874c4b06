"""Two-stage interference alignment over three symbol extensions.

First-stage matrices U^[1], U^[2] are constant. Transmitter j turns them into
V^[ij] U^[i] with V^[ij] = c^[ij] (H̄^[kj])^-1, k != i, so the signal meant for
receiver i reaches the other receiver k as c^[ij] U^[i]. Both interferers at
a receiver then share one 2-dimensional subspace, which two row subtractions
remove.
"""
import logging

import numpy as np

from xdmt.channel import extend_channel, log_det_capacity
from xdmt.errors import DomainError, NearSingularChannel

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12


def _selector(rows, cols, entries):
    m = np.zeros((rows, cols))
    for r, c, value in entries:
        m[r, c] = value
    m.flags.writeable = False
    return m


_U1 = _selector(6, 2, [(0, 0, 1), (1, 0, 1), (3, 1, 1), (4, 1, 1)])
_U2 = _selector(6, 2, [(0, 0, 1), (2, 0, 1), (3, 1, 1), (5, 1, 1)])

# Row combinations that annihilate the other receiver's first-stage span.
_COMBINERS = {
    1: _selector(4, 6, [(0, 0, 1), (0, 2, -1), (1, 1, 1),
                        (2, 3, 1), (2, 5, -1), (3, 4, 1)]),
    2: _selector(4, 6, [(0, 0, 1), (0, 1, -1), (1, 2, 1),
                        (2, 3, 1), (2, 4, -1), (3, 5, 1)]),
}


def _other(i):
    return 2 if i == 1 else 1


def _check_receiver(receiver):
    if receiver not in (1, 2):
        raise DomainError('receiver must be 1 or 2, got {}'.format(receiver))


def first_stage_precoders():
    return _U1.copy(), _U2.copy()


def second_stage_precoder(Hbar):
    Hbar = np.asarray(Hbar)
    if Hbar.shape != (6, 6):
        raise DomainError('extended channel must be 6x6, got shape {}'.format(Hbar.shape))
    cond = np.linalg.cond(Hbar)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NearSingularChannel(
            'condition number {:.3e} exceeds {:.0e}'.format(cond, COND_LIMIT))
    inv = np.linalg.inv(Hbar)
    c = 1. / np.linalg.norm(inv)
    return c * inv, c


def transmitter_precoders(H1j, H2j):
    """Second-stage precoders of one transmitter from its own outgoing channels.

    Returns ``{i: (V^[ij], c^[ij])}`` keyed by the intended receiver i.
    """
    return {
        1: second_stage_precoder(extend_channel(H2j)),
        2: second_stage_precoder(extend_channel(H1j)),
    }


class PrecoderSet(object):
    def __init__(self, U1, U2, V, c):
        self.U1 = U1
        self.U2 = U2
        self.V = dict(V)
        self.c = dict(c)

    def first_stage(self, receiver):
        return self.U1 if receiver == 1 else self.U2

    def with_precoder(self, i, j, V):
        """Copy with V^[ij] replaced, used to test broken alignment."""
        replaced = dict(self.V)
        replaced[(i, j)] = np.asarray(V)
        return PrecoderSet(self.U1, self.U2, replaced, self.c)

    def __repr__(self):
        return 'PrecoderSet(c={})'.format(
            {'{}{}'.format(*k): round(v, 6) for k, v in sorted(self.c.items())})


def build_precoders(ch):
    U1, U2 = first_stage_precoders()
    V, c = {}, {}
    for j in (1, 2):
        for i, (Vij, cij) in transmitter_precoders(ch.matrix(1, j), ch.matrix(2, j)).items():
            V[(i, j)] = Vij
            c[(i, j)] = cij
    return PrecoderSet(U1, U2, V, c)


def _images(ch, p, receiver, intended):
    """Per-transmitter images at ``receiver`` of the streams meant for ``intended``."""
    U = p.first_stage(intended)
    return [extend_channel(ch.matrix(receiver, j)) @ p.V[(intended, j)] @ U
            for j in (1, 2)]


def alignment_residual(ch, p):
    """Largest relative leakage of an interferer outside the aligned subspace.

    Each interference image is projected onto the orthogonal complement of
    the interfering receiver's first-stage span; the c^[ij] scalars only
    rescale the image, so the measure is scale invariant.
    """
    worst = 0.
    for receiver in (1, 2):
        U = p.first_stage(_other(receiver))
        # Columns of U are orthogonal with squared norm 2.
        complement = np.eye(6) - U @ U.T / 2.
        for X in _images(ch, p, receiver, _other(receiver)):
            norm = np.linalg.norm(X)
            if norm == 0.:
                continue
            worst = max(worst, np.linalg.norm(complement @ X) / norm)
    return worst


class EffectiveChannel(object):
    """Post-cancellation 4x4 channel of one receiver.

    ``htilde`` maps (s^[i1], s^[i2]) to the four combined observations;
    ``leakage`` is what remains of the interferers after combining.
    """

    def __init__(self, htilde, receiver=1, leakage=None):
        _check_receiver(receiver)
        htilde = np.asarray(htilde, dtype=complex)
        if htilde.shape != (4, 4):
            raise DomainError('effective channel must be 4x4, got shape {}'.format(htilde.shape))
        self.htilde = htilde
        self.receiver = receiver
        self.leakage = np.zeros((4, 4), dtype=complex) if leakage is None else leakage
        self.combiner = _COMBINERS[receiver]

    @property
    def noise_covariance(self):
        return self.combiner @ self.combiner.T

    def whitened(self):
        scale = 1. / np.sqrt(np.diag(self.noise_covariance))
        return scale[:, None] * self.htilde

    def smallest_singular_value(self):
        return np.linalg.svd(self.htilde, compute_uv=False)[-1]

    def __repr__(self):
        return 'EffectiveChannel(receiver={}, smin={:.3e})'.format(
            self.receiver, self.smallest_singular_value())


def effective_channel(ch, receiver, precoders=None):
    _check_receiver(receiver)
    p = build_precoders(ch) if precoders is None else precoders
    combiner = _COMBINERS[receiver]
    desired = np.hstack(_images(ch, p, receiver, receiver))
    interference = np.hstack(_images(ch, p, receiver, _other(receiver)))
    return EffectiveChannel(combiner @ desired, receiver,
                            leakage=combiner @ interference)


def ia_rate(eff, snr, whiten=True):
    """Zero-forcing IA rate in bits per channel use; three symbols per block."""
    H = eff.whitened() if whiten else eff.htilde
    return float(log_det_capacity(H, snr)) / 3.
