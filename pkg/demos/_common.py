import json
import os

from sigstruct import StateSpace

MODELS = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'models')


def load(name):
    """Plant stored as A, B, C in demos/models."""
    with open(os.path.join(MODELS, name)) as fh:
        d = json.load(fh)
    return StateSpace(d['A'], d['B'], d['C'])
