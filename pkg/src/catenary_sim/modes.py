"""Hybrid contact automaton: modes, guard events, and transitions.

The interaction between the cable and the box runs through three states:
free flight with a slack hanging cable, initial contact where the cable
touches the box but carries no load, and the action state where the taut
cable drags or rolls the box.  Guard events move the automaton along a
fixed transition table; slip and lift-off abort an action back to free
flight so the approach can be retried.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import InvalidTransition

__all__ = [
    "ActionKind",
    "Mode",
    "GuardEvent",
    "GuardFlags",
    "step_mode",
    "emit_guards",
]


class ActionKind(Enum):
    """Which manipulation the action state performs."""

    DRAG = "DRAG"
    ROLL = "ROLL"


class Mode(Enum):
    """Automaton state.  Values are the tokens written to the log."""

    FREE_CATENARY = "FREE"
    INITIAL_CONTACT = "CONTACT"
    ACTION_DRAG = "DRAG"
    ACTION_ROLL = "ROLL"

    @property
    def is_action(self) -> bool:
        return self in (Mode.ACTION_DRAG, Mode.ACTION_ROLL)

    @property
    def token(self) -> str:
        return self.value

    @staticmethod
    def action(kind: ActionKind) -> "Mode":
        return Mode.ACTION_DRAG if kind is ActionKind.DRAG else Mode.ACTION_ROLL


class GuardEvent(Enum):
    """Edge-triggered conditions that drive mode transitions."""

    CONTACT_MADE = "ContactMade"
    CABLE_TAUT = "CableTaut"
    SLIP_DETECTED = "SlipDetected"
    ACTION_COMPLETE = "ActionComplete"
    LIFT_OFF_DETECTED = "LiftOffDetected"


def step_mode(current: Mode, event: GuardEvent,
              action: ActionKind | None = None) -> Mode:
    """Apply one guard event to the automaton.

    Transition table:
      - FREE_CATENARY  + CONTACT_MADE     -> INITIAL_CONTACT
      - INITIAL_CONTACT + CABLE_TAUT      -> ACTION_DRAG or ACTION_ROLL
        (``action`` selects the sub-mode)
      - ACTION_*       + SLIP_DETECTED    -> FREE_CATENARY
      - ACTION_*       + ACTION_COMPLETE  -> FREE_CATENARY
      - any mode       + LIFT_OFF_DETECTED -> FREE_CATENARY

    Any other pair raises InvalidTransition.
    """
    if event is GuardEvent.LIFT_OFF_DETECTED:
        return Mode.FREE_CATENARY
    if current is Mode.FREE_CATENARY and event is GuardEvent.CONTACT_MADE:
        return Mode.INITIAL_CONTACT
    if current is Mode.INITIAL_CONTACT and event is GuardEvent.CABLE_TAUT:
        if action is None:
            raise ValueError("CABLE_TAUT transition needs the planned action kind")
        return Mode.action(action)
    if current.is_action and event in (GuardEvent.SLIP_DETECTED,
                                       GuardEvent.ACTION_COMPLETE):
        return Mode.FREE_CATENARY
    raise InvalidTransition(f"no transition from {current.name} on {event.name}")


@dataclass
class GuardFlags:
    """Boolean guard conditions evaluated on one simulation step."""

    contact: bool = False
    taut: bool = False
    slip: bool = False
    complete: bool = False
    liftoff: bool = False

    def copy(self) -> "GuardFlags":
        return GuardFlags(self.contact, self.taut, self.slip,
                          self.complete, self.liftoff)


_ACTION_PRIORITY = (GuardEvent.SLIP_DETECTED, GuardEvent.LIFT_OFF_DETECTED,
                    GuardEvent.ACTION_COMPLETE)


def emit_guards(mode: Mode, now: GuardFlags, prev: GuardFlags) -> list[GuardEvent]:
    """Turn guard-condition onsets into at most one event for this step.

    Conditions are edge-triggered: an event is a candidate only when its
    flag switched from False to True since the previous step, and only
    when the event is meaningful in the current mode (contact in free
    flight, taut in initial contact, slip/completion during an action,
    lift-off anywhere).  Candidates are collected in the fixed order
    contact, taut, slip, completion, lift-off and the first one wins,
    except inside an action where slip outranks lift-off outranks
    completion.  Callers must reset ``prev`` when the mode changes so a
    condition that persists across a transition can re-trigger.
    """
    candidates: list[GuardEvent] = []
    if mode is Mode.FREE_CATENARY and now.contact and not prev.contact:
        candidates.append(GuardEvent.CONTACT_MADE)
    if mode is Mode.INITIAL_CONTACT and now.taut and not prev.taut:
        candidates.append(GuardEvent.CABLE_TAUT)
    if mode.is_action and now.slip and not prev.slip:
        candidates.append(GuardEvent.SLIP_DETECTED)
    if mode.is_action and now.complete and not prev.complete:
        candidates.append(GuardEvent.ACTION_COMPLETE)
    if now.liftoff and not prev.liftoff:
        candidates.append(GuardEvent.LIFT_OFF_DETECTED)
    if not candidates:
        return []
    if mode.is_action:
        for event in _ACTION_PRIORITY:
            if event in candidates:
                return [event]
    return [candidates[0]]
