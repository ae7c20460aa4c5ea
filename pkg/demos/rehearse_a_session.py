"""Drive a whole training session through the state machine, no sockets.

A trainee joins, walks every step, asks for support once near the end,
and leaves.  The same event log then rebuilds the same final state from
scratch, which is the property the server's replay subcommand rests on.
"""

from pathlib import Path

from maintrain import (
    encode,
    handle,
    new_session,
    parse_lesson,
    parse_model,
    replay_events,
    session_report,
)
from maintrain.protocol import Bye, Hello, Next, Support

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main():
    model = parse_model((CORPUS / "xppu.plant").read_text())
    lesson = parse_lesson((CORPUS / "replace_pickalpha.lesson").read_text(), model)

    session = new_session(lesson, session_id="rehearsal", started_at=0.0)
    clock = 0.0

    def send(message):
        nonlocal session, clock
        clock += 7.5  # a steady, unhurried trainee
        result = handle(session, "trainee", message, lesson, model, clock)
        session = result.session
        for _, reply in result.replies:
            print(f"  trainee <- {encode(reply).rstrip()}")
        for broadcast in result.broadcast:
            print(f"  everyone <- {encode(broadcast).rstrip()}")

    print("joining:")
    send(Hello("remote"))
    for _ in lesson.steps:
        send(Next())
    print("one support consultation:")
    send(Support())
    send(Bye())

    report = session_report(session)
    print(
        f"\nreport: {report.duration:g}s, {report.penalties} penalty,"
        f" visited {len(report.steps_visited)} of {len(lesson.steps) + 1} steps"
    )

    fresh = new_session(lesson, session_id="rehearsal", started_at=0.0)
    rebuilt = replay_events(fresh, session.event_log, lesson, model)
    print(f"replayed log reproduces the final state: {rebuilt == session}")


if __name__ == "__main__":
    main()
