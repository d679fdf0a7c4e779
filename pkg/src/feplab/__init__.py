"""Numerical laboratory for facilitated exclusion with closed boundaries.

The package has three layers:

* microscopic: lattice configurations, exact event-driven dynamics for the
  facilitated and simple exclusion processes, and the recoding bijection
  between them (``lattice``, ``dynamics``, ``mapping``);
* macroscopic: the induced transformation of density profiles and
  finite-volume solvers for the six limit equations (``mapping``, ``pde``,
  ``entropy``);
* experiments: initial-state sampling, replica orchestration and the
  convergence studies tying the two layers together (``harness``, ``cli``).
"""

__version__ = "0.1.0"
