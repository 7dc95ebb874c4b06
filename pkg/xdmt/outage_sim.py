"""Monte Carlo outage probability of the dominant outage events.

Trial t of SNR point k uses the channel draw with global index
``k * trials + t``. Work is cut into units that never straddle a random
block, units are dealt round-robin to worker threads (and optionally to MPI
ranks), and per-point integer counts are summed. Counts therefore do not
depend on how many workers ran.
"""
import logging
import math
from threading import Thread

import numpy as np
from scipy import stats

from xdmt import dmt
from xdmt.channel import (
    BLOCK_SIZE,
    Snr,
    as_rho,
    log_det_capacity,
    sample_channel_gains,
    sample_channel_set,
)
from xdmt.errors import DomainError, InsufficientData, NearSingularChannel
from xdmt.ia_precoding import effective_channel, ia_rate

logger = logging.getLogger(__name__)

Z95 = 1.96
MIN_SLOPE_COUNT = 20
SMALL_COUNT = 5


def _log2_1p(rho, gain):
    return np.log2(1. + rho * gain)


def outage_indicators(family, gains, a, r, snr):
    """Outage indicator per realization for gains of shape (N, 2, 2, 2, 2).

    Receiver, transmitter and antenna indices are fixed to 1 throughout;
    by symmetry the exponent does not depend on them.
    """
    rho = as_rho(snr)
    gains = np.asarray(gains)
    target = r * math.log2(rho)
    H11, H12 = gains[:, 0, 0], gains[:, 0, 1]
    direct = log_det_capacity(H11, rho)
    if family == 'p2p':
        return direct < target
    h = np.abs(gains[:, :, :, 0, 0]) ** 2
    if family == 'ia':
        first, second = h[:, 0, 0], h[:, 1, 1]
    elif family == 'iaa':
        # Alamouti collects both transmit antennas' energy.
        first = h[:, 0, 0] + h[:, 0, 1]
        second = h[:, 1, 0] + h[:, 1, 1]
    else:
        raise DomainError('unknown scheme family "{}"'.format(family))
    ia_first = 4. / 3. * a * _log2_1p(rho, first)
    ia_second = 4. / 3. * a * _log2_1p(rho, second)
    joint = log_det_capacity(np.concatenate([H11, H12], axis=-1), rho)
    e1 = ia_first + (1. - a) * direct < target
    e2 = ia_first + ia_second + (1. - a) * joint < 2. * target
    return e1 | e2


def _single(family, ch, a, r, snr):
    return bool(outage_indicators(family, ch.gains[None], a, r, snr)[0])


def outage_event_onoff_ia(ch, a, r, snr):
    return _single('ia', ch, a, r, snr)


def outage_event_onoff_iaa(ch, a, r, snr):
    return _single('iaa', ch, a, r, snr)


def outage_event_p2p22(ch, r, snr):
    return _single('p2p', ch, 0., r, snr)


class OutageConfig(object):
    def __init__(self, scheme, a, r, snr_db_list, trials, seed):
        self.scheme = dmt.get_scheme(scheme)
        r = float(r)
        if not 0. <= r <= self.scheme.r_max + 1e-12:
            raise DomainError('r={} outside [0, {:.6g}] for scheme "{}"'.format(
                r, self.scheme.r_max, self.scheme.name))
        self.r = r
        if self.scheme.family == 'p2p':
            a = None
        elif a is None or a == 'auto':
            a = dmt.optimal_a(self.scheme, r)
        else:
            a = float(a)
            if not 0. <= a <= 1.:
                raise DomainError('a={} outside [0, 1]'.format(a))
            if self.scheme.fixed_a is not None and a != self.scheme.fixed_a:
                raise DomainError('scheme "{}" fixes a={}, got a={}'.format(
                    self.scheme.name, self.scheme.fixed_a, a))
        self.a = a
        self.snr_db_list = [float(s) for s in snr_db_list]
        if not self.snr_db_list:
            raise DomainError('at least one SNR point is required')
        if any(hi <= lo for lo, hi in zip(self.snr_db_list, self.snr_db_list[1:])):
            raise DomainError('SNR points must be strictly increasing')
        self.trials = int(trials)
        if self.trials < 1:
            raise DomainError('trials must be at least 1, got {}'.format(trials))
        self.seed = int(seed)

    def indicators(self, gains, snr_db):
        return outage_indicators(self.scheme.family, gains, self.a or 0., self.r,
                                 Snr.from_db(snr_db))

    def as_dict(self):
        return {'scheme': self.scheme.name, 'a': self.a, 'r': self.r,
                'snr_db': self.snr_db_list, 'trials': self.trials, 'seed': self.seed}

    def __repr__(self):
        return 'OutageConfig({})'.format(
            ', '.join('{}={}'.format(k, v) for k, v in sorted(self.as_dict().items())))


class OutageEstimate(object):
    def __init__(self, snr_db, outage_count, trials):
        assert 0 <= outage_count <= trials
        self.snr_db = snr_db
        self.outage_count = int(outage_count)
        self.trials = int(trials)
        self.p_hat = self.outage_count / self.trials
        if self.outage_count < SMALL_COUNT:
            self.ci95 = SMALL_COUNT / self.trials
        else:
            self.ci95 = Z95 * math.sqrt(self.p_hat * (1. - self.p_hat) / self.trials)

    def interval(self):
        if self.outage_count < SMALL_COUNT:
            return 0., SMALL_COUNT / self.trials
        return max(0., self.p_hat - self.ci95), min(1., self.p_hat + self.ci95)

    def as_record(self):
        return {'snr_db': self.snr_db, 'p_hat': self.p_hat, 'ci95': self.ci95,
                'outage_count': self.outage_count, 'trials': self.trials}

    def __repr__(self):
        return 'OutageEstimate(snr_db={}, p_hat={:.4g}, count={}/{})'.format(
            self.snr_db, self.p_hat, self.outage_count, self.trials)


def ci_interval(estimate):
    """95% interval of an estimate, ``(0, 5/N)`` when fewer than 5 outages were seen."""
    return estimate.interval()


class SlopeEstimate(object):
    def __init__(self, slope, stderr, points_used, intercept=0.):
        self.slope = slope
        self.stderr = stderr
        self.points_used = points_used
        self.intercept = intercept

    def as_record(self):
        return {'slope': self.slope, 'stderr': self.stderr, 'intercept': self.intercept,
                'points_used': self.points_used}

    def __repr__(self):
        return 'SlopeEstimate(slope={:.4f}, stderr={:.4f}, points_used={})'.format(
            self.slope, self.stderr, self.points_used)


def work_units(cfg):
    """(point, start, stop) trial ranges, none crossing a random block."""
    units = []
    for point in range(len(cfg.snr_db_list)):
        start, stop = point * cfg.trials, (point + 1) * cfg.trials
        while start < stop:
            end = min(stop, (start // BLOCK_SIZE + 1) * BLOCK_SIZE)
            units.append((point, start, end))
            start = end
    return units


class TrialWorker(object):
    def __init__(self, cfg, units):
        self.cfg = cfg
        self.units = units
        self.counts = np.zeros(len(cfg.snr_db_list), dtype=np.int64)
        self.error = None

    def run(self):
        try:
            for point, start, stop in self.units:
                gains = sample_channel_gains(self.cfg.seed, start, stop)
                hits = self.cfg.indicators(gains, self.cfg.snr_db_list[point])
                self.counts[point] += int(np.count_nonzero(hits))
        except Exception as e:
            # re-raised by estimate_outage once every thread has joined
            self.error = e


def estimate_outage(cfg, threads=1, comm=None):
    """Outage estimates for every SNR point of ``cfg``.

    ``comm`` is an optional MPI communicator; ranks take disjoint units and
    the counts are summed with ``allreduce``.
    """
    threads = int(threads)
    if threads < 1:
        raise DomainError('threads must be at least 1, got {}'.format(threads))
    units = work_units(cfg)
    if comm is not None:
        units = units[comm.Get_rank()::comm.Get_size()]
    workers = [TrialWorker(cfg, units[w::threads]) for w in range(threads)]
    if threads == 1:
        workers[0].run()
    else:
        pool = [Thread(target=w.run, daemon=True) for w in workers]
        for thread in pool:
            thread.start()
        for thread in pool:
            thread.join()
    for w in workers:
        if w.error is not None:
            raise w.error
    counts = sum(w.counts for w in workers)
    if comm is not None:
        counts = comm.allreduce(counts)
    estimates = []
    for snr_db, count in zip(cfg.snr_db_list, counts):
        est = OutageEstimate(snr_db, int(count), cfg.trials)
        logger.info('scheme=%s a=%s r=%s snr_db=%s p_hat=%.6g ci95=%.3g outage_count=%d trials=%d',
                    cfg.scheme.name, cfg.a, cfg.r, snr_db, est.p_hat, est.ci95,
                    est.outage_count, est.trials)
        estimates.append(est)
    return estimates


def estimate_diversity_slope(estimates, min_count=MIN_SLOPE_COUNT):
    """Least-squares slope of -log10(p_hat) against log10(rho)."""
    usable = [e for e in estimates if e.outage_count >= min_count and e.p_hat > 0.]
    if len(usable) < 3:
        raise InsufficientData('{} usable points (need 3 with at least {} outages)'.format(
            len(usable), min_count))
    x = np.array([e.snr_db / 10. for e in usable])
    y = -np.log10([e.p_hat for e in usable])
    fit = stats.linregress(x, y)
    return SlopeEstimate(float(fit.slope), float(fit.stderr), len(usable), float(fit.intercept))


def dof_slope(eff, snr_low_db, snr_high_db):
    """Rate growth per doubling of rho between two SNR points."""
    low, high = Snr.from_db(snr_low_db), Snr.from_db(snr_high_db)
    return (ia_rate(eff, high) - ia_rate(eff, low)) / (high.log2_rho - low.log2_rho)


def dof_check(trials, snr_low_db, snr_high_db, seed):
    """Mean high-SNR rate slope of receiver 1 over random channels."""
    if trials < 1:
        raise DomainError('trials must be at least 1, got {}'.format(trials))
    if snr_high_db - snr_low_db < 20. - 1e-9:
        raise DomainError('SNR span must be at least 20 dB, got {} to {}'.format(
            snr_low_db, snr_high_db))
    slopes, skipped = [], 0
    for index in range(trials):
        ch = sample_channel_set(seed, index)
        try:
            eff = effective_channel(ch, 1)
        except NearSingularChannel:
            skipped += 1
            continue
        slopes.append(dof_slope(eff, snr_low_db, snr_high_db))
    if skipped:
        logger.warning('dof check skipped %d ill-conditioned draws', skipped)
    if not slopes:
        raise InsufficientData('every draw was ill-conditioned')
    estimate = float(np.mean(slopes))
    logger.info('dof_check trials=%d used=%d estimate=%.4f', trials, len(slopes), estimate)
    return estimate
