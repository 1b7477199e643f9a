"""Deterministic simulator and control stack for a two-quadrotor cable-slung
box manipulation system: hanging-cable geometry, rigid-body dynamics with
ground friction and edge rolling, a contact-mode automaton, tracking
controllers, action planning, and scenario tooling."""

from __future__ import annotations

__version__ = "0.1.0"
