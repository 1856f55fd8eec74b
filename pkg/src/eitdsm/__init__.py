"""Reconstruction of conductivity inclusions from boundary Cauchy data.

Subpackage map:

- grid: domain geometry, random inclusion samples, ground-truth index fields
- solver: finite volume discretization and Neumann solves (forward map,
  Cauchy-difference fields, dipole probes)
- boundary: closed-loop boundary traces and spectral calculus on the loop
- dsm: the direct sampling index field built from a single Cauchy pair
- pipeline: current patterns, noise, record/dataset generation
- nn: minimal reverse-mode autodiff engine plus the two network models
- metrics, render, cli: evaluation, heatmaps, command line entry points
"""

__version__ = "0.1.0"
