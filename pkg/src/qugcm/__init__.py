"""Generator-coordinate-method toolkit built on a symplectic Pauli algebra."""

__version__ = "0.1.0"
