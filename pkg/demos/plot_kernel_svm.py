"""
Kernel SVM on XOR
=================

The from-scratch SMO solver with a Gaussian kernel separates the XOR
pattern, which no linear boundary can.
"""

import numpy as np

from icadetect import svm

X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
y = np.array([-1, -1, 1, 1])

model = svm.fit(X, y, svm.KernelSpec.gaussian(1.0), c=10.0, record_trace=True)
pred, dec = svm.predict(model, X)
print("labels     ", y)
print("predicted  ", pred)
print("decisions  ", np.round(dec, 3))
print(f"dual objective {model.dual_objective:.4f} in {model.iterations} SMO steps")

# a coarse decision map
g = np.linspace(-0.5, 1.5, 9)
grid = np.array([[a, b] for b in g[::-1] for a in g])
signs = svm.predict(model, grid)[0].reshape(9, 9)
for row in signs:
    print("".join("+" if s > 0 else "." for s in row))
