"""Transport metric, entropic Ricci curvature and functional inequalities for finite reversible Markov chains"""

__version__ = "0.1.0"
