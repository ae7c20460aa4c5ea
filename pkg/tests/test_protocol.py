"""Wire codec: exact line forms, fault handling, and round-trip identity."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from maintrain import ProtocolFault, decode, encode
from maintrain.protocol import (
    Bye,
    Err,
    Goto,
    Hello,
    Hilite,
    Mirror,
    Next,
    Obs,
    Ok,
    Prev,
    StepBroadcast,
    Support,
    Target,
    View,
    Welcome,
)

WIRE_FORMS = [
    (Hello("remote"), "HELLO remote\n"),
    (Next(), "NEXT\n"),
    (Prev(), "PREV\n"),
    (Goto(7), "GOTO 7\n"),
    (View("zoom", (1.5,)), "VIEW zoom 1.5\n"),
    (View("pan", (-3.0, 4.0)), "VIEW pan -3.0 4.0\n"),
    (Mirror(True), "MIRROR on\n"),
    (Mirror(False), "MIRROR off\n"),
    (Support(), "SUPPORT\n"),
    (Bye(), "BYE\n"),
    (Welcome("replace_pickalpha", 13), "WELCOME replace_pickalpha 13\n"),
    (StepBroadcast(0, ""), "STEP 0 :\n"),
    (StepBroadcast(3, "Close the valve."), "STEP 3 :Close the valve.\n"),
    (Target("Valve"), "TARGET Valve\n"),
    (Hilite("c_air", "remove"), "HILITE c_air remove\n"),
    (Obs("pressure_pickalpha", 0.0), "OBS pressure_pickalpha 0.0\n"),
    (Err(404, "unknown step"), "ERR 404 :unknown step\n"),
    (Ok(), "OK\n"),
]


@pytest.mark.parametrize("message,line", WIRE_FORMS, ids=lambda v: repr(v)[:40])
def test_wire_forms_are_stable(message, line):
    assert encode(message) == line
    assert decode(line) == message


def test_decode_tolerates_missing_or_crlf_terminators():
    assert decode("NEXT") == Next()
    assert decode("GOTO 2\r\n") == Goto(2)


def test_trailing_field_is_verbatim():
    text = "watch out: the :colon: stays,  spaces too "
    assert decode(encode(StepBroadcast(5, text))) == StepBroadcast(5, text)
    assert decode("ERR 500 :a : b").text == "a : b"


@pytest.mark.parametrize(
    "line,hint",
    [
        ("", "empty message"),
        ("FROB", "unknown verb 'FROB'"),
        ("HELLO operator", "unknown role 'operator'"),
        ("HELLO", "HELLO takes 1 argument(s)"),
        ("NEXT please", "NEXT takes 0 argument(s)"),
        ("GOTO seven", "step must be an integer, got 'seven'"),
        ("GOTO 1 2", "GOTO takes 1 argument(s)"),
        ("VIEW zoom", "VIEW takes a verb and one or two decimals"),
        ("VIEW warp 1", "unknown view verb 'warp'"),
        ("VIEW zoom fast", "view argument must be a decimal, got 'fast'"),
        ("MIRROR maybe", "MIRROR takes on or off"),
        ("STEP 3", "STEP takes an index and a :instruction"),
        ("HILITE c_air glow", "unknown highlight kind 'glow'"),
        ("OBS pressure", "OBS takes 2 argument(s)"),
        ("ERR oops :x", "code must be an integer, got 'oops'"),
        ("WELCOME s", "WELCOME takes 2 argument(s)"),
    ],
)
def test_malformed_lines_fault_with_code_400(line, hint):
    with pytest.raises(ProtocolFault) as exc:
        decode(line)
    assert exc.value.code == 400
    assert exc.value.text == hint


# --- generative round-trip ----------------------------------------------------

token = st.from_regex(r"[A-Za-z_][A-Za-z0-9_.-]{0,11}", fullmatch=True)
free_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\n\r"),
    max_size=40,
)
number = st.floats(allow_nan=False, allow_infinity=False)

messages = st.one_of(
    st.builds(Hello, st.sampled_from(["display", "remote", "support"])),
    st.just(Next()),
    st.just(Prev()),
    st.builds(Goto, st.integers(-999, 999)),
    st.builds(
        View,
        st.sampled_from(["pan", "zoom", "rotate"]),
        st.lists(number, min_size=1, max_size=2).map(tuple),
    ),
    st.builds(Mirror, st.booleans()),
    st.just(Support()),
    st.just(Bye()),
    st.builds(Welcome, token, st.integers(0, 99)),
    st.builds(StepBroadcast, st.integers(0, 99), free_text),
    st.builds(Target, token),
    st.builds(Hilite, token, st.sampled_from(["remove", "establish"])),
    st.builds(Obs, token, number),
    st.builds(Err, st.integers(100, 599), free_text),
    st.just(Ok()),
)


@given(messages)
def test_decode_inverts_encode(message):
    line = encode(message)
    assert line.endswith("\n") and "\n" not in line[:-1]
    assert decode(line) == message
