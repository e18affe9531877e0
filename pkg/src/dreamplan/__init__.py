"""Model-based planning for web agents: simulate candidate actions with a world model, score, act."""

__version__ = "0.1.0"
