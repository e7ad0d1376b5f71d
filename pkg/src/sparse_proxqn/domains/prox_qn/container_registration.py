import punq

from .prox_gd import ProxGdSolver
from .services import ProxQnSolver


def register(container: punq.Container):
    container.register(ProxQnSolver)
    container.register(ProxGdSolver)
