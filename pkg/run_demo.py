import argparse

from xdmt import dmt, outage_sim
"""
Small example code to show how the closed-form tradeoff and the
outage simulator fit together.
"""
parser = argparse.ArgumentParser()
parser.add_argument('--trials', help='trials per SNR point', type=int, default=20000)
parser.add_argument('--seed', help='seed', type=int, default=1)
args = vars(parser.parse_args())

#  Optimal diversity of every scheme on a coarse r grid.
names = ['onoff-ia', 'onoff-iaa', 'conv-ia', 'no-ia', 'iaa-fixed', 'p2p22']
print('{:>6}'.format('r') + ''.join('{:>11}'.format(n) for n in names))
for k in range(9):
    r = k / 6.
    row = [dmt.optimal_d(n, r) for n in names]
    print('{:>6.3f}'.format(r) + ''.join('{:>11.4f}'.format(d) for d in row))

#  Conventional IA at r=1: the simulated slope should sit near 1/4.
cfg = outage_sim.OutageConfig('conv-ia', 'auto', 1., [20., 30., 40., 50., 60.],
                              args['trials'], args['seed'])
estimates = outage_sim.estimate_outage(cfg)
for est in estimates:
    print(est)
print(outage_sim.estimate_diversity_slope(estimates))
