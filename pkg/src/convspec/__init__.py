"""convspec: numerical spectral laboratory for nonlocal convolution-type
operators with potential, L u = a * u + V u on L2(R^d)."""

__version__ = "0.1.0"
