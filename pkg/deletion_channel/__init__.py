__all__ = [
    "config",
    "linalg",
    "states",
    "criteria",
    "teleport",
    "render",
    "cli",
]
