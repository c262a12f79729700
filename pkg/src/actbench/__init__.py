"""Benchmarking activation functions across MLP, CNN and RNN/LSTM models.

A small float64 autograd engine, the 21 activations, a seeded random-search
harness and the best/mean aggregation protocol.
"""
from . import activations
from .activations import ActivationSpec, catalog, derivative, eval_maxout, evaluate, properties

__version__ = "0.1.0"

__all__ = ["activations", "ActivationSpec", "catalog", "derivative", "eval_maxout", "evaluate", "properties"]
