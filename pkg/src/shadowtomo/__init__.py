"""Shadow tomography of Pauli and Majorana observables at desk scale."""

__version__ = "0.1.0"
