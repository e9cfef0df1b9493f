from .layers import (BackwardError, BatchNorm, Conv2D, Dense, Embedding, Flatten, Layer,
                     LayerSpec, LeakyReLU, MaxPool2D, ReLU, Sequential, Sigmoid, Softmax, Tanh,
                     Tensor)
from .optim import SGD, Adam, Optimizer
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Adam", "BackwardError", "BatchNorm", "Conv2D", "Dense", "Embedding", "Flatten", "Layer",
    "LayerSpec", "LeakyReLU", "MaxPool2D", "Optimizer", "ReLU", "SGD", "Sequential", "Sigmoid",
    "Softmax", "Tanh", "Tensor", "load_checkpoint", "save_checkpoint",
]
