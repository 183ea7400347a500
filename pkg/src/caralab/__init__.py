"""caralab: invariant metrics, indicatrix volumes and Carathéodory-Eisenman
bounds on explicit domains in C^n."""

__version__ = "0.1.0"
