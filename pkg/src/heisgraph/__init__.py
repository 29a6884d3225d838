"""Intrinsic Lipschitz graphs over horizontal subgroups of the Heisenberg group.

Submodules:

- ``heisenberg``: group arithmetic, projections, graph maps, Lipschitz constants
- ``tame``: tame maps, constant estimation, ODE/gradient characterizations
- ``whitney``: first-order jets and their C^{1,1} extensions, McShane extension
- ``extension``: the tame / intrinsic Lipschitz extension pipeline
- ``corona``: dyadic trees, coronizations, tree approximants, rescaling
- ``generators``: seeded synthetic inputs
- ``cli``: command-line entry point and file formats
"""

__version__ = "0.1.0"
