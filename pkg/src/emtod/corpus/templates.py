"""Surface templates for the synthetic scheduling-assistant corpus.

Placeholders in braces are filled from :data:`SLOT_VALUES`. Agent core
templates are keyed by action tag; every variant of an action contains the
anchor phrase that the matching pattern in the default action table looks
for, and no other action's anchor.
"""

from __future__ import annotations

ASSISTANT = "Sherlock"

PEOPLE = (
    "Priya", "Marcus", "Elena", "Tom", "Aisha", "Kenji", "Sofia", "Daniel",
    "Fatima", "Lucas", "Mei", "Omar", "Hannah", "Ravi", "Chloe", "Jonas",
)

SLOT_VALUES: dict[str, tuple[str, ...]] = {
    "day": ("monday", "tuesday", "wednesday", "thursday", "friday", "next week", "tomorrow"),
    "time": ("9 am", "10 am", "11 am", "noon", "1 pm", "2 pm", "3 pm", "4 pm", "5 pm"),
    "topic": ("the roadmap review", "the budget sync", "our weekly one on one", "the design review",
              "the hiring debrief", "the customer call", "the launch planning session"),
    # augmentation axes
    "duration": ("15 minutes", "30 minutes", "45 minutes", "an hour", "90 minutes", "two hours"),
    "mode": ("an online meeting", "a conference call", "an in person meeting"),
    "platform": ("teams", "zoom", "skype", "webex", "google meet"),
    "location": ("the main conference room", "building 4", "the seattle office", "room 2101",
                 "the london office", "the cafe downstairs"),
    "timezone": ("pst", "est", "cet", "ist", "gmt", "jst"),
}
AUGMENTATION_AXES = ("meeting_mode", "platform", "location", "duration", "timezone")
AXIS_SLOT = {"meeting_mode": "mode", "platform": "platform", "location": "location",
             "duration": "duration", "timezone": "timezone"}

# ---------------------------------------------------------------------------
# user sentences
# ---------------------------------------------------------------------------

USER_INTENT_TEMPLATES: dict[str, tuple[str, ...]] = {
    "schedule_meeting": (
        "{assistant}, please set up a meeting with {person} on {day} to discuss {topic}.",
        "{assistant}, can you schedule {duration} with {person} and me for {topic}?",
        "Please find a time for {topic} with {person} sometime {day}.",
        "{assistant}, could you book {mode} on {platform} with {person} {day}?",
        "I would like to schedule {topic} with the team, {assistant} please arrange it.",
    ),
    "cancel_meeting": (
        "{assistant}, please cancel {topic}.",
        "We no longer need {topic}, please cancel it {assistant}.",
        "Please call off the meeting on {day}, {assistant}.",
        "{assistant}, cancel my meeting with {person} please.",
    ),
    "reschedule_meeting": (
        "{assistant}, please move {topic} to {day} at {time}.",
        "Can you push the meeting with {person} to {day}, {assistant}?",
        "{assistant}, please find an alternate time for {topic}.",
        "Something came up, {assistant} please reschedule our meeting to {day}.",
    ),
    "add_attendee": (
        "{assistant}, please add {person} to the invite.",
        "Could you also include {person} in {topic}, {assistant}?",
        "Please loop {person} into the meeting as well.",
    ),
    "remove_attendee": (
        "{assistant}, please remove {person} from the invite.",
        "{person} does not need to attend, please take them off the meeting.",
        "Please drop {person} from {topic}, {assistant}.",
    ),
    "change_duration": (
        "{assistant}, please make the meeting {duration} instead.",
        "Can we shorten {topic} to {duration}?",
        "Please extend the meeting to {duration}, {assistant}.",
    ),
    "change_location": (
        "{assistant}, please move the meeting to {location}.",
        "Can we hold {topic} in {location} instead?",
        "Please change the venue to {location}.",
    ),
    "change_meeting_mode": (
        "{assistant}, please make it {mode} instead.",
        "Can we switch {topic} to {platform}?",
        "Please change the meeting to {mode} on {platform}.",
    ),
    "provide_availability": (
        "I am free on {day} after {time} {timezone}.",
        "My calendar is open {day} between {time} and 5 pm {timezone}.",
        "I can do any time on {day} before {time}.",
    ),
    "confirm_time": (
        "{time} on {day} works, please book that slot {assistant}.",
        "Please lock in {day} at {time}, {assistant}.",
        "Let us go with the {time} slot on {day}.",
    ),
    "decline_time": (
        "I cannot make {time} on {day}.",
        "The {day} slot at {time} does not work for me.",
        "{time} is too early for me, I will be commuting.",
    ),
    "ask_status": (
        "{assistant}, has the meeting with {person} been confirmed yet?",
        "Any update on scheduling {topic}, {assistant}?",
        "{assistant}, did everyone accept the invite for {day}?",
    ),
    "no_action": (
        "{person}, could you suggest some alternate times?",
        "{person}, can you send me your notes before we meet?",
        "{person}, please share the agenda with the group.",
        "Thanks {person}, see you at the meeting.",
    ),
}

# Bare replies whose intent depends on the agent question they answer.
AMBIGUOUS_AFFIRMATIVE = (
    "Yes, all times work.",
    "Yes, please go ahead.",
    "Sounds good to me.",
    "That works for me.",
    "Sure, that is fine.",
    "Perfect, go ahead.",
)
AMBIGUOUS_NEGATIVE = (
    "No, that does not work.",
    "No thanks, please do not.",
    "Unfortunately not.",
)

# Off-task sentences (gold relevant = false).
DISTRACTORS = (
    "Hope you had a relaxing weekend.",
    "The quarterly report is attached for your review.",
    "Congrats on the product launch!",
    "Let me know what you think of the draft proposal.",
    "I will be out of office for the offsite.",
    "Please review the budget numbers before {day}.",
    "The slides from the last workshop are in the shared folder.",
    "Our team lunch was great, thanks for organizing it.",
    "Have you seen the latest sales dashboard?",
    "Happy birthday to {person}!",
    "The vendor contract still needs legal sign off.",
    "Traffic this morning was terrible.",
    "I finished the code review for the payments service.",
    "Remember to submit your expense reports.",
    "The new coffee machine on the third floor is finally working.",
    "Sorry for the delayed reply, it has been a hectic week.",
)
USER_GREETINGS = ("Hi all,", "Hello {person},", "Hi {assistant},", "Good morning everyone,")
USER_SIGNOFFS = ("Thanks,", "Best regards.", "Cheers!", "Thank you all.")

# ---------------------------------------------------------------------------
# agent sentences
# ---------------------------------------------------------------------------

AGENT_PREAMBLES = (
    "Hi {person},",
    "Hello everyone, thank you for your email.",
    "Hi {person}, thanks for reaching out to me.",
    "Hi {person}, thanks for reaching out. I am {assistant}, the scheduling assistant working on behalf of {organizer} for this meeting.",
    "Thanks for the update, {person}. I have gone through the latest messages on this thread and checked the calendars of all of the attendees.",
    "Hello {person} and team, I hope your week is going well and thank you for keeping me posted on this thread.",
)
AGENT_CLOSINGS = (
    "Best regards, {assistant}.",
    "Let me know if there is anything else I can do.",
    "Thanks, {assistant}, scheduling assistant.",
)

# Each action: (anchor regex, core sentence variants).
AGENT_ACTIONS: dict[str, tuple[str, tuple[str, ...]]] = {
    "ask_day": (r"which day (would|works)", (
        "Which day would you like to meet?", "Which day works best for everyone?")),
    "ask_time": (r"what time (would|works)", (
        "What time would you prefer on {day}?", "What time works for you?")),
    "ask_duration": (r"how long should", (
        "How long should the meeting be?", "How long should I block for {topic}?")),
    "ask_attendees": (r"who (else )?should i invite", (
        "Who should I invite to {topic}?", "Who else should I invite?")),
    "ask_location": (r"where would you like", (
        "Where would you like to hold the meeting?", "Where would you like to meet on {day}?")),
    "ask_meeting_mode": (r"in person or online", (
        "Should this be in person or online?", "Would you like the meeting in person or online?")),
    "ask_timezone": (r"which time ?zone", (
        "Which time zone should I use for the invite?", "Which timezone are you in?")),
    "ask_availability": (r"share your availability", (
        "{person}, could you share your availability for {day}?", "Could everyone share your availability for {topic}?")),
    "propose_slots": (r"the following slots are open", (
        "The following slots are open: {day} at {time} or {day} at 4 pm. Do any of these work?",
        "The following slots are open on {day}: {time} and 3 pm.")),
    "propose_alternative_slots": (r"as an alternative, i can offer", (
        "As an alternative, I can offer {day} at {time}. Would that work?",
        "As an alternative, I can offer a slot {day} afternoon.")),
    "confirm_scheduled": (r"is now scheduled for", (
        "{topic} is now scheduled for {day} at {time}.", "The meeting is now scheduled for {day}.")),
    "send_invite": (r"i have sent (the|a calendar) invit", (
        "I have sent the invitation to all attendees.", "I have sent a calendar invite for {day} at {time}.")),
    "report_conflict": (r"there is a conflict", (
        "There is a conflict with {person}'s calendar at {time}.", "There is a conflict on {day} for several attendees.")),
    "report_no_slots": (r"could not find any (open|free) (slot|time)", (
        "I could not find any open slot on {day}.", "Unfortunately I could not find any free time that week.")),
    "confirm_cancel_request": (r"do you want me to cancel", (
        "Do you want me to cancel {topic}?", "Just to confirm, do you want me to cancel the meeting on {day}?")),
    "confirm_cancelled": (r"has been cancell?ed", (
        "{topic} has been cancelled.", "The meeting on {day} has been canceled and attendees notified.")),
    "confirm_reschedule_request": (r"shall i reschedule", (
        "Shall I reschedule {topic} to {day}?", "Shall I reschedule the meeting with {person}?")),
    "confirm_rescheduled": (r"has been moved to", (
        "{topic} has been moved to {day} at {time}.", "The meeting has been moved to {day}.")),
    "confirm_add_attendee_request": (r"should i add", (
        "Should I add {person} to the invite?", "Should I add {person} to {topic} as well?")),
    "confirm_attendee_added": (r"has been added to", (
        "{person} has been added to the invite.", "{person} has been added to {topic}.")),
    "confirm_remove_attendee_request": (r"do you want me to remove", (
        "Do you want me to remove {person} from the invite?", "Do you want me to remove {person} from {topic}?")),
    "confirm_attendee_removed": (r"has been removed from", (
        "{person} has been removed from the invite.", "{person} has been removed from {topic}.")),
    "confirm_duration_changed": (r"duration (is|has been) (now |updated )?(set|changed) to", (
        "The duration is now set to {duration}.", "The meeting duration has been changed to {duration}.")),
    "confirm_location_changed": (r"the (location|venue) is now", (
        "The location is now {location}.", "The venue is now {location} for {topic}.")),
    "offer_online_meeting": (r"would you like me to make it", (
        "Would you like me to make it a {platform} meeting?", "Would you like me to make it {mode}?")),
    "confirm_mode_changed": (r"i have switched the meeting to", (
        "I have switched the meeting to {platform}.", "I have switched the meeting to {mode}.")),
    "confirm_timezone": (r"i will use .* for the invite", (
        "I will use {timezone} for the invite.", "Noted, I will use {timezone} times for the invite.")),
    "report_status": (r"here is the current status", (
        "Here is the current status: {person} has accepted and others are pending.",
        "Here is the current status of {topic}: confirmed for {day}.")),
    "acknowledge_availability": (r"thanks for sharing your availability", (
        "Thanks for sharing your availability, I will find a slot.", "Thanks for sharing your availability for {day}.")),
    "acknowledge_decline": (r"i understand (that )?the (slot|time) does not work", (
        "I understand the slot does not work, I will look for other options.",
        "I understand that the time does not work for you.")),
    "request_clarification": (r"could you clarify", (
        "Could you clarify which meeting you are referring to?", "Could you clarify what you would like me to do?")),
    "forward_to_organizer": (r"i have forwarded", (
        "I have forwarded your note to {organizer}.", "I have forwarded this to the organizer.")),
    "send_reminder": (r"i have sent a reminder", (
        "I have sent a reminder to the pending attendees.", "I have sent a reminder to {person}.")),
    "acknowledge_thanks": (r"noted, no action", (
        "Noted, no action needed from my side.", "Noted, no action required for now.")),
}
