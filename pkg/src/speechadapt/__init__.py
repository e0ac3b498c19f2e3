"""Human-in-the-loop ASR personalization workbench.

Cold-start phonetic profiling, a Bayesian phoneme-confusion recognizer with
uncertainty-guided top-k correction, curriculum planning, and an HTTP session
server, plus a headless campaign simulator.
"""

__version__ = "0.1.0"
