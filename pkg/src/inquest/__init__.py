"""inquest: information-gain-driven question selection.

Belief states over discrete specification spaces, entropy-reduction
rewards, simulated oracle dialogues, preference-group data generation and
offline policy optimization (GRPO / DPO / SFT), with evaluation metrics
and a CLI.
"""

__version__ = "0.1.0"

from inquest.kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
