"""Dark spin-cat qubits: dark states of driven Fg -> Fg-1 atoms, their autonomous
stabilization, colored-noise error rates, adiabatic gates and a Rydberg CX."""

__version__ = "0.1.0"
