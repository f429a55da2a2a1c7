"""Exact verification and desk-scale simulation of integrable evolutionary
Hirota-type Monge-Ampere equations in 2+1 dimensions."""

__version__ = "0.1.0"
