"""What happens where a curve stops being smooth.

The astroid has cusps at multiples of pi/2, where its tangent collapses.
Neighborhoods there look two-dimensional, the alignment loses rank and
the local reconstruction records become ill-conditioned.
"""

import numpy as np

from _common import OUT
from ltsa import dataset as ds
from ltsa.align import ltsa_embed
from ltsa.analysis import affine_align, theorem_bounds
from ltsa.plotting import scatter_svg, write_svg
from ltsa.reconstruct import fit_reconstruction

X, gt = ds.gen_curve("astroid", 400, 0.01, seed=0)
emb, frames, nb = ltsa_embed(X, 8, 1)
t = gt.params[0]
near = np.abs(t - np.pi / 2) < 0.1
ratio = np.array([fr.gap_ratio for fr in frames])
rmap = fit_reconstruction(X, emb, frames, nb)
clean, clean_gt = ds.gen_curve("astroid", 400)
c_emb, c_frames, c_nb = ltsa_embed(clean, 8, 1)
bounds = theorem_bounds(clean, clean_gt, c_frames, c_nb, c_emb)

print(f"median sigma2/sigma1 near pi/2: {np.median(ratio[near]):.3f}, elsewhere {np.median(ratio[~near]):.3f}")
print(f"ill-conditioned records near pi/2: {rmap.ill_conditioned[near].sum()} of {near.sum()}")
print(f"records marked ill-conditioned overall: {rmap.ill_conditioned.sum()}")
print(f"noise-free run, neighborhoods where the bounds do not apply: {(~bounds.applicable).sum()}")
res = affine_align(emb.T, gt.params).per_point
print(f"mean affine residual near pi/2 / median elsewhere: {res[near].mean() / np.median(res[~near]):.2f}")

write_svg(OUT / "astroid_data.svg", scatter_svg(X[0], X[1], values=t, title="astroid, eta=0.01",
                                                xlabel="x1", ylabel="x2", color_title="tau*"))
write_svg(OUT / "astroid_ratio.svg", scatter_svg(t, ratio, title="local sigma2/sigma1",
                                                 xlabel="tau*", ylabel="ratio"))
