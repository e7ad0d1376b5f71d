from .models import LbfgsState

__all__ = ["LbfgsState"]
