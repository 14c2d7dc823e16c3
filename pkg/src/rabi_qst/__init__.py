"""Rabi QST - amplitude and phase Rabi tomography of NV spin qubits."""

__version__ = "0.1.0"
