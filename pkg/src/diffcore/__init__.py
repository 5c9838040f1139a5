from .tensor import Tape, Tensor, active_tape, as_tensor, parameter
from .autodiff import backward, grad_check
from .module import Linear, Module
from . import ops

__all__ = ['Tape', 'Tensor', 'active_tape', 'as_tensor', 'parameter',
           'backward', 'grad_check', 'Linear', 'Module', 'ops']
