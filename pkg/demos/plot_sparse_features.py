"""
What a strong sparsity weight does to the features
==================================================

Adding an l1 penalty on the source estimates makes them sparser, but at
large weights the rows stop being independent and become correlated.
"""

import numpy as np

from icadetect import synthetic
from icadetect.ica import IcaConfig, ica_ebm, sparse_ica_ebm
from icadetect.whitening import fit_pca

X, _, _ = synthetic.sparse_text_like(40, 6, 1000, np.random.default_rng(0))
X = X - X.mean(axis=1, keepdims=True)
Xh = fit_pca(X, 6).f @ X


def offdiag(Y):
    C = np.abs(np.corrcoef(Y))
    return (C.sum() - len(C)) / (len(C) * (len(C) - 1))


for lam in (0.0, 1.0, 1000.0):
    cfg = IcaConfig(seed=0, restarts=2, lam=lam)
    res = sparse_ica_ebm(Xh, cfg) if lam > 0 else ica_ebm(Xh, cfg)
    l1 = np.mean(np.abs(res.y))
    print(f"lam={lam:>7}: mean |corr| {offdiag(res.y):.3f}  mean |y| {l1:.3f}  converged {res.converged}")
