import punq

from .services import HierTask, LogisticTask, SeqTask, TaskCatalog, TrainingService


def register(container: punq.Container):
    container.register(LogisticTask)
    container.register(SeqTask)
    container.register(HierTask)
    container.register(TaskCatalog)
    container.register(TrainingService)
