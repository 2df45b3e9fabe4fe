"""Force-noise budget of a hybrid optomechanical sensor with coherent
quantum noise cancellation and variational homodyne readout."""

__version__ = "0.1.0"
