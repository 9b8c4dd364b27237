"""Multimodal conversational-entrainment toolkit.

Turn and pause statistics, prosodic proximity entrainment, facial
action-unit synchrony and perceived conversational success, with a
synthetic-conversation oracle for validating every metric.
"""

__version__ = "0.1.0"
