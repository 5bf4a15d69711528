"""Simulated vision-based Mach-Zehnder interferometer alignment: Gaussian-beam
interference physics, an episodic control environment with domain
randomization, a TD3 trainer with exponential action rescaling, and an
evaluation/serving harness."""

__version__ = "0.1.0"
