"""Label vocabularies for the meeting-scheduling domain."""

from __future__ import annotations

INTENTS: tuple[str, ...] = (
    "schedule_meeting",
    "cancel_meeting",
    "reschedule_meeting",
    "add_attendee",
    "remove_attendee",
    "change_duration",
    "change_location",
    "change_meeting_mode",
    "provide_availability",
    "confirm_time",
    "decline_time",
    "ask_status",
    "no_action",
)
N_INTENTS = len(INTENTS)
INTENT_INDEX = {name: i for i, name in enumerate(INTENTS)}

# Last entry is the reserved fallback for text that matches no pattern.
ACTIONS: tuple[str, ...] = (
    "ask_day",
    "ask_time",
    "ask_duration",
    "ask_attendees",
    "ask_location",
    "ask_meeting_mode",
    "ask_timezone",
    "ask_availability",
    "propose_slots",
    "propose_alternative_slots",
    "confirm_scheduled",
    "send_invite",
    "report_conflict",
    "report_no_slots",
    "confirm_cancel_request",
    "confirm_cancelled",
    "confirm_reschedule_request",
    "confirm_rescheduled",
    "confirm_add_attendee_request",
    "confirm_attendee_added",
    "confirm_remove_attendee_request",
    "confirm_attendee_removed",
    "confirm_duration_changed",
    "confirm_location_changed",
    "offer_online_meeting",
    "confirm_mode_changed",
    "confirm_timezone",
    "report_status",
    "acknowledge_availability",
    "acknowledge_decline",
    "request_clarification",
    "forward_to_organizer",
    "send_reminder",
    "acknowledge_thanks",
    "other_action",
)
N_ACTIONS = len(ACTIONS)
FALLBACK_ACTION = "other_action"

# Agent questions whose answer is a bare "yes"/"no": the reply's intent is
# only recoverable from which question was asked.
AFFIRMATIVE_INTENT = {
    "propose_slots": "confirm_time",
    "propose_alternative_slots": "confirm_time",
    "ask_availability": "provide_availability",
    "confirm_cancel_request": "cancel_meeting",
    "confirm_reschedule_request": "reschedule_meeting",
    "confirm_add_attendee_request": "add_attendee",
    "confirm_remove_attendee_request": "remove_attendee",
    "offer_online_meeting": "change_meeting_mode",
}
NEGATIVE_INTENT = {
    "propose_slots": "decline_time",
    "propose_alternative_slots": "decline_time",
    "confirm_cancel_request": "no_action",
    "confirm_reschedule_request": "no_action",
    "confirm_add_attendee_request": "no_action",
    "confirm_remove_attendee_request": "no_action",
    "offer_online_meeting": "no_action",
}
QUESTION_ACTIONS: tuple[str, ...] = tuple(AFFIRMATIVE_INTENT)

# Agent reply to a user turn whose (first) intent is the key.
RESPONSE_ACTIONS: dict[str, tuple[str, ...]] = {
    "schedule_meeting": ("ask_day", "ask_time", "ask_duration", "ask_attendees", "confirm_scheduled", "send_invite", "report_conflict", "ask_timezone"),
    "cancel_meeting": ("confirm_cancelled",),
    "reschedule_meeting": ("confirm_rescheduled", "report_no_slots", "report_conflict"),
    "add_attendee": ("confirm_attendee_added",),
    "remove_attendee": ("confirm_attendee_removed",),
    "change_duration": ("confirm_duration_changed",),
    "change_location": ("confirm_location_changed", "ask_location"),
    "change_meeting_mode": ("confirm_mode_changed", "ask_meeting_mode"),
    "provide_availability": ("acknowledge_availability", "confirm_timezone"),
    "confirm_time": ("confirm_scheduled", "send_invite"),
    "decline_time": ("acknowledge_decline", "report_no_slots"),
    "ask_status": ("report_status", "send_reminder"),
    "no_action": ("acknowledge_thanks", "forward_to_organizer", "request_clarification"),
}


def intents_to_multihot(names) -> list[int]:
    vec = [0] * N_INTENTS
    for name in names:
        vec[INTENT_INDEX[name]] = 1
    return vec


def multihot_to_intents(vec) -> list[str]:
    return [INTENTS[i] for i, v in enumerate(vec) if v]
