"""gradflow: minimizing-movement gradient flows in metric spaces.

The library simulates p-gradient flows by implicit (proximal) time stepping and
checks the convergence machinery around them: energy dissipation, Kurdyka-
Lojasiewicz certificates, decay and extinction predictions, and the entropy /
transport / Fisher-information inequalities of one-dimensional Wasserstein
flows. Two concrete state spaces ship with it: grid functions in L2 under total
variation, and quantile functions of probability measures on the line.
"""

__version__ = "1.0.0"
