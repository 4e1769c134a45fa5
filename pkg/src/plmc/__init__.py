"""Langevin Monte Carlo for log-concave targets with nonsmooth energies.

The library samples from ``p(x) ∝ exp(-energy(x))`` where the energy is a
convex term with merely Hölder-continuous subgradients plus a smooth, strongly
convex regularizer.  Perturbing the gradient query point by a Gaussian turns
the plain chain into one driven by unbiased gradients of a smoothed energy,
which restores polynomial mixing even when the energy has kinks.

Submodules: `potentials` (targets and certificates), `smoothing` (stochastic
gradient oracle), `samplers` (the chains), `bounds` (closed-form constants and
parameter planners), `metrics` (empirical distances and the quadrature truth
oracle), `harness` (JSON-config experiments and the ``sample`` CLI).
"""

from . import bounds, harness, metrics, potentials, samplers, smoothing

__version__ = "0.1.0"

__all__ = ["bounds", "harness", "metrics", "potentials", "samplers",
           "smoothing", "__version__"]
