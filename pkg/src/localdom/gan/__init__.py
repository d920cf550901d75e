from . import losses, networks, training

__all__ = ["losses", "networks", "training"]
