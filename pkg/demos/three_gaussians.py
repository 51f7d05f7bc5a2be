"""Separating three Gaussian clusters with one coordinate.

Both methods map the 300 points onto a line. The score is the share of
points that fall into the right block when the line is cut into three
intervals in the best order.
"""

import numpy as np

from _common import OUT
from ltsa import dataset as ds
from ltsa.align import ltsa_embed
from ltsa.analysis import cluster_separation, lle_embed
from ltsa.plotting import strip_svg, write_svg

a, b = [], []
for seed in range(10):
    ls = ds.gen_three_gaussians(100, seed=seed)
    t_ltsa = ltsa_embed(ls.data, 10, 1)[0].T
    t_lle = lle_embed(ls.data, 10, 1).T
    a.append(cluster_separation(t_ltsa, ls.labels))
    b.append(cluster_separation(t_lle, ls.labels))
    if seed == 0:
        write_svg(OUT / "gaussians_ltsa.svg", strip_svg(t_ltsa[0], labels=ls.labels, title="LTSA", xlabel="tau"))
        write_svg(OUT / "gaussians_lle.svg", strip_svg(t_lle[0], labels=ls.labels, title="LLE", xlabel="tau"))
print("LTSA", np.round(a, 3), "median", np.median(a))
print("LLE ", np.round(b, 3), "median", np.median(b))
