"""Quasi-static Rayleigh channels for the 2-user 2-antenna X-channel.

Trial ``i`` of a run with seed ``s`` always sees the same ChannelSet, however
the trials are split between workers: draws come from a counter-based Philox
stream in fixed blocks of ``BLOCK_SIZE`` realizations, and block ``b`` starts
at counter word ``b`` so blocks never overlap.
"""
import functools
import math

import numpy as np

from xdmt.errors import DomainError

BLOCK_SIZE = 4096
# Complex entries per realization: four 2x2 matrices.
ENTRIES = 16
SEED_LIMIT = 2 ** 64


class Snr(object):
    def __init__(self, rho):
        rho = float(rho)
        if not (math.isfinite(rho) and rho > 0.):
            raise DomainError('snr must be finite and positive, got {}'.format(rho))
        self.rho = rho

    @classmethod
    def from_db(cls, snr_db):
        return cls(10. ** (float(snr_db) / 10.))

    @property
    def db(self):
        return 10. * math.log10(self.rho)

    @property
    def log2_rho(self):
        return math.log2(self.rho)

    def __repr__(self):
        return 'Snr(rho={}, db={:.3f})'.format(self.rho, self.db)


def as_rho(snr):
    if isinstance(snr, Snr):
        return snr.rho
    return Snr(snr).rho


class ChannelSet(object):
    """The four 2x2 matrices H^[ij], transmitter j to receiver i."""

    def __init__(self, H11, H12, H21, H22):
        gains = np.empty((2, 2, 2, 2), dtype=complex)
        for (i, j), H in zip(((0, 0), (0, 1), (1, 0), (1, 1)),
                             (H11, H12, H21, H22)):
            H = np.asarray(H, dtype=complex)
            if H.shape != (2, 2):
                raise DomainError(
                    'H^[{}{}] must be 2x2, got shape {}'.format(
                        i + 1, j + 1, H.shape))
            if not np.all(np.isfinite(H)):
                raise DomainError('H^[{}{}] has non-finite entries'.format(
                    i + 1, j + 1))
            gains[i, j] = H
        gains.flags.writeable = False
        self.gains = gains

    @classmethod
    def from_gains(cls, gains):
        gains = np.asarray(gains)
        return cls(gains[0, 0], gains[0, 1], gains[1, 0], gains[1, 1])

    def matrix(self, i, j):
        return self.gains[i - 1, j - 1]

    @property
    def H11(self):
        return self.gains[0, 0]

    @property
    def H12(self):
        return self.gains[0, 1]

    @property
    def H21(self):
        return self.gains[1, 0]

    @property
    def H22(self):
        return self.gains[1, 1]

    def scaled(self, factor):
        return ChannelSet.from_gains(self.gains * factor)

    def __eq__(self, other):
        return isinstance(other, ChannelSet) and np.array_equal(
            self.gains, other.gains)

    def __repr__(self):
        return 'ChannelSet(H11={}, H12={}, H21={}, H22={})'.format(
            self.H11.tolist(), self.H12.tolist(), self.H21.tolist(),
            self.H22.tolist())


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise DomainError('seed must be a 64-bit unsigned integer, got {}'.format(seed))
    return seed


@functools.lru_cache(maxsize=16)
def _cached_block(seed, block):
    bit_generator = np.random.Philox(key=seed, counter=[0, 0, block, 0])
    gen = np.random.Generator(bit_generator)
    re = gen.standard_normal((BLOCK_SIZE, ENTRIES))
    im = gen.standard_normal((BLOCK_SIZE, ENTRIES))
    # CN(0,1): variance 1/2 per real component.
    gains = ((re + 1j * im) * math.sqrt(0.5)).reshape(BLOCK_SIZE, 2, 2, 2, 2)
    gains.flags.writeable = False
    return gains


def sample_channel_block(seed, block):
    """All ``BLOCK_SIZE`` realizations of one block, shape (B, 2, 2, 2, 2).

    Axis 1 is the receiver, axis 2 the transmitter. The array is read-only.
    """
    seed = _check_seed(seed)
    block = int(block)
    if block < 0:
        raise DomainError('block index must be nonnegative, got {}'.format(block))
    return _cached_block(seed, block)


def sample_channel_gains(seed, start, stop):
    """Gains of trials ``start`` (inclusive) to ``stop`` (exclusive)."""
    if not 0 <= start <= stop:
        raise DomainError('invalid trial range [{}, {})'.format(start, stop))
    parts = []
    index = start
    while index < stop:
        block, offset = divmod(index, BLOCK_SIZE)
        take = min(BLOCK_SIZE - offset, stop - index)
        parts.append(sample_channel_block(seed, block)[offset:offset + take])
        index += take
    if not parts:
        return np.empty((0, 2, 2, 2, 2), dtype=complex)
    return np.concatenate(parts)


def sample_channel_set(seed, index):
    if index < 0:
        raise DomainError('trial index must be nonnegative, got {}'.format(index))
    block, offset = divmod(int(index), BLOCK_SIZE)
    return ChannelSet.from_gains(sample_channel_block(seed, block)[offset])


def extend_channel(H):
    """Three-symbol extension: the 6x6 block diagonal kron(I3, H)."""
    H = np.asarray(H)
    if H.shape != (2, 2):
        raise DomainError('extend_channel expects a 2x2 matrix, got shape {}'.format(H.shape))
    return np.kron(np.eye(3), H)


def log_det_capacity(H, snr):
    """log2 det(I + rho H H^H) in bits, batched over leading axes of ``H``."""
    rho = as_rho(snr)
    H = np.asarray(H, dtype=complex)
    if H.ndim < 2:
        raise DomainError('log_det_capacity expects a matrix, got shape {}'.format(H.shape))
    m = H.shape[-2]
    gram = H @ np.conj(np.swapaxes(H, -1, -2))
    sign, logdet = np.linalg.slogdet(np.eye(m) + rho * gram)
    assert np.all(sign.real > 0)
    rate = logdet / math.log(2.)
    return np.maximum(rate, 0.)
